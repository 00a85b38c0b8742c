//! Independent gradient oracles used to validate the engine.
//!
//! * [`fd`]: central finite differences on real coordinates.
//! * [`pair`]: the conjugate-pair backward pass over dense Wirtinger Jacobians.
//! * [`split`]: a real-only AD tape with complex numbers split into tuples.
//!
//! [`cross_check`] runs all of them against the engine for one objective.

pub mod fd;
pub mod pair;
pub mod split;

pub use fd::{fd_gradient, fd_gradients, fd_objective, FD_STEP};
pub use pair::{pair_backward, PairResult, WirtingerPair};
pub use split::{split_real_backward, SplitGraph, SplitRealValue};

use crate::error::{Error, Result};
use crate::graph::{record_objective, Objective};
use crate::tape::gradient_of;
use crate::tensor::ComplexTensor;

/// Engine gradient compared against every oracle at one point.
#[derive(Debug, Clone)]
pub struct CrossCheck {
    pub loss: f64,
    pub engine: Vec<ComplexTensor>,
    /// Worst relative error of the engine against finite differences.
    pub fd_err: f64,
    /// Worst relative error against the second slot of the pair-mode result.
    pub pair_err: f64,
    /// `max |second − conj(first)|` over every node of the pair-mode sweep.
    pub pair_conjugate_defect: f64,
    /// `None` when the split backend does not support an op of the loss.
    pub split_err: Option<f64>,
}

impl CrossCheck {
    /// Largest of the pairwise errors.
    pub fn worst(&self) -> f64 {
        self.fd_err.max(self.pair_err).max(self.split_err.unwrap_or(0.0))
    }
}

fn worst_rel_err(a: &[ComplexTensor], b: &[ComplexTensor]) -> Result<f64> {
    a.iter().zip(b).try_fold(0.0f64, |acc, (x, y)| Ok(acc.max(x.rel_err(y)?)))
}

/// Runs the engine, finite differences (step `fd_step`), the pair-mode sweep
/// and, where supported, the split-real backend on `obj` at its point.
pub fn cross_check<O: Objective>(obj: &O, fd_step: f64) -> Result<CrossCheck> {
    let point = obj.point();
    let (tape, inputs, out) = record_objective(obj, point)?;
    let loss = crate::tape::loss_value(tape.value(out)?)?;
    let grads = tape.backward(out)?;
    let engine = inputs.iter().map(|id| gradient_of(&grads, *id)).collect::<Result<Vec<_>>>()?;

    let fd = fd_objective(obj, point, fd_step)?;
    let fd_err = worst_rel_err(&engine, &fd)?;

    let pairs = pair_backward(&tape, out)?;
    let second = inputs.iter().map(|id| pairs.leaf(*id).map(|p| p.second.clone())).collect::<Result<Vec<_>>>()?;
    let pair_err = worst_rel_err(&engine, &second)?;

    let split_err = match split_real_backward(obj, point) {
        Ok(split) => {
            let split = split
                .iter()
                .zip(point)
                .map(|(s, p)| s.to_complex(p.domain()))
                .collect::<Result<Vec<_>>>()?;
            Some(worst_rel_err(&engine, &split)?)
        }
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };

    Ok(CrossCheck {
        loss,
        engine,
        fd_err,
        pair_err,
        pair_conjugate_defect: pairs.max_conjugate_defect(),
        split_err,
    })
}
