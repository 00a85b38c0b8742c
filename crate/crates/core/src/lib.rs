//! Reverse-mode automatic differentiation in which real and complex variables
//! share one adjoint interface.
//!
//! Every op implements the conjugate-cotangent rule
//! `ḡ(ν̄) = ν·∂g/∂z̄ + ν̄·∂ḡ/∂z̄`. Seeding a real scalar loss with `1` and
//! sweeping the [`Tape`] backwards delivers `2∂F/∂z̄` at complex inputs (the
//! steepest-descent direction) and `∂F/∂x` at real inputs.
//!
//! ```
//! use cad_core::{c64, ComplexTensor, Tape};
//!
//! let mut tape = Tape::new();
//! let z = tape.leaf(ComplexTensor::scalar(c64(1.0, 2.0))).unwrap();
//! let f = tape.abs2_sum(z).unwrap();
//! let grads = tape.backward(f).unwrap();
//! assert_eq!(grads.get(z).unwrap().data()[0], c64(2.0, 4.0));
//! ```

pub mod corpus;
pub mod error;
pub mod graph;
pub mod ops;
pub mod optim;
pub mod oracles;
pub mod rng;
pub mod tape;
pub mod tensor;
pub mod urnn;

pub use error::{Error, Result};
pub use graph::{evaluate, record_objective, value_and_grad, Graph, Objective};
pub use ops::{Op, OpDescriptor, WirtingerClass};
pub use optim::{cayley_update, gd_step, loss_decrease_check, GdConfig, LossDecrease};
pub use tape::{gradient_of, Gradients, NodeId, Tape};
pub use tensor::{c64, dft_matrix, idft_matrix, solve_linear, unitarity_defect, ComplexTensor, Domain, C64};
pub use urnn::{build_w, reflection, RnnParams, UnitaryParams, WSource};
