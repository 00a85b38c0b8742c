//! Checks and demos for `cad-core`, shared by the `cad` binary and the Python
//! bindings. Every command returns a [`Report`].

pub mod commands;
pub mod report;
pub mod table;

pub use commands::{demo_gd, demo_urnn, gradcheck, DemoGdOptions, DemoUrnnOptions};
pub use report::{Case, Report, Summary};
pub use table::{verify_table, verify_table_with};
