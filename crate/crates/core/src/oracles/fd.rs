//! Central finite differences over real coordinates.
//!
//! For a real loss `F` of complex `z = x + iy` the estimate per entry is
//! `∂F/∂x + i·∂F/∂y`, which equals `2∂F/∂z̄`. Real-domain entries are only
//! perturbed along the real axis.

use crate::error::{Error, Result};
use crate::graph::{evaluate, Objective};
use crate::tape::is_real_loss;
use crate::tensor::{c64, C64, ComplexTensor};

/// Default step `h`.
pub const FD_STEP: f64 = 1e-6;

fn real_value(v: C64) -> Result<f64> {
    if is_real_loss(v) {
        Ok(v.re)
    } else {
        Err(Error::InvalidLoss(format!("loss value {v} is not real")))
    }
}

fn perturbed(t: &ComplexTensor, idx: usize, delta: C64) -> Result<ComplexTensor> {
    let mut data = t.data().to_vec();
    data[idx] += delta;
    ComplexTensor::with_domain(t.shape().to_vec(), data, t.domain())
}

/// Gradient estimate for a loss of a single tensor.
pub fn fd_gradient<F>(mut loss: F, point: &ComplexTensor, step: f64) -> Result<ComplexTensor>
where
    F: FnMut(&ComplexTensor) -> Result<C64>,
{
    let mut out = fd_gradients(|pts: &[ComplexTensor]| loss(&pts[0]), std::slice::from_ref(point), step)?;
    Ok(out.remove(0))
}

/// Gradient estimates for a loss of several tensors, one per input.
pub fn fd_gradients<F>(mut loss: F, point: &[ComplexTensor], step: f64) -> Result<Vec<ComplexTensor>>
where
    F: FnMut(&[ComplexTensor]) -> Result<C64>,
{
    if step.is_nan() || step <= 0.0 {
        return Err(Error::InvalidInput(format!("finite-difference step must be positive, got {step}")));
    }
    real_value(loss(point)?)?;
    let mut work = point.to_vec();
    let mut grads = Vec::with_capacity(point.len());
    for which in 0..point.len() {
        let base = point[which].clone();
        let real_only = base.is_real();
        let mut entries = Vec::with_capacity(base.len());
        for idx in 0..base.len() {
            let mut central = |delta: C64, work: &mut Vec<ComplexTensor>| -> Result<f64> {
                work[which] = perturbed(&base, idx, delta)?;
                let plus = real_value(loss(work)?)?;
                work[which] = perturbed(&base, idx, -delta)?;
                let minus = real_value(loss(work)?)?;
                Ok((plus - minus) / (2.0 * step))
            };
            let dx = central(c64(step, 0.0), &mut work)?;
            let dy = if real_only { 0.0 } else { central(c64(0.0, step), &mut work)? };
            entries.push(c64(dx, dy));
        }
        work[which] = base.clone();
        grads.push(ComplexTensor::with_domain(base.shape().to_vec(), entries, base.domain())?);
    }
    Ok(grads)
}

/// Finite-difference gradient of an [`Objective`] at `point`.
pub fn fd_objective<O: Objective>(obj: &O, point: &[ComplexTensor], step: f64) -> Result<Vec<ComplexTensor>> {
    fd_gradients(|pts: &[ComplexTensor]| evaluate(obj, pts), point, step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn re_and_im_projections() {
        let z = ComplexTensor::scalar(c64(0.7, -1.3));
        let g = fd_gradient(|t| Ok(c64(t.data()[0].re, 0.0)), &z, FD_STEP).unwrap();
        assert!((g.data()[0] - c64(1.0, 0.0)).norm() < 1e-9);
        let g = fd_gradient(|t| Ok(c64(t.data()[0].im, 0.0)), &z, FD_STEP).unwrap();
        assert!((g.data()[0] - c64(0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn squared_modulus() {
        let z = ComplexTensor::scalar(c64(1.0, 2.0));
        let g = fd_gradient(|t| Ok(c64(t.data()[0].norm_sqr(), 0.0)), &z, FD_STEP).unwrap();
        assert!((g.data()[0] - c64(2.0, 4.0)).norm() < 1e-8);
    }

    #[test]
    fn rejects_complex_loss_and_bad_step() {
        let z = ComplexTensor::scalar(c64(1.0, 2.0));
        assert!(matches!(fd_gradient(|t| Ok(t.data()[0]), &z, FD_STEP), Err(Error::InvalidLoss(_))));
        assert!(fd_gradient(|t| Ok(c64(t.data()[0].re, 0.0)), &z, 0.0).is_err());
    }

    #[test]
    fn real_inputs_only_move_along_real_axis() {
        let x = ComplexTensor::real_vector(vec![1.0, -2.0]);
        let g = fd_gradient(|t| Ok(c64(t.data().iter().map(|v| v.re * v.re).sum(), 0.0)), &x, FD_STEP).unwrap();
        assert!(g.is_real());
        assert!((g.data()[1] - c64(-4.0, 0.0)).norm() < 1e-8);
    }
}
