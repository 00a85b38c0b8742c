//! Gradient-based updates for complex parameters.
//!
//! The engine already returns `2∂F/∂z̄` at complex inputs, so a steepest
//! descent step is `z ← z − λ·grad` with no extra factor of two.

use crate::error::{Error, Result};
use crate::graph::{evaluate, value_and_grad, Objective};
use crate::tape::is_real_loss;
use crate::tensor::{c64, solve_linear, unitarity_defect, ComplexTensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdConfig {
    pub learning_rate: f64,
    pub steps: usize,
}

impl GdConfig {
    pub fn new(learning_rate: f64, steps: usize) -> Result<Self> {
        if learning_rate.is_nan() || learning_rate <= 0.0 || !learning_rate.is_finite() {
            return Err(Error::InvalidInput(format!("learning rate must be positive, got {learning_rate}")));
        }
        if steps == 0 {
            return Err(Error::InvalidInput("step count must be positive".into()));
        }
        Ok(Self { learning_rate, steps })
    }
}

/// `params − λ·grad`. Real-domain parameters only move along the real axis.
pub fn gd_step(params: &ComplexTensor, grad: &ComplexTensor, lr: f64) -> Result<ComplexTensor> {
    params.expect_same_shape(grad, "gd_step")?;
    let step = grad.scale(c64(lr, 0.0));
    if params.is_real() {
        params.sub(&step.re())
    } else {
        Ok(params.sub(&step)?.into_complex())
    }
}

/// Applies [`gd_step`] to every tensor of a parameter list.
pub fn gd_step_all(params: &[ComplexTensor], grads: &[ComplexTensor], lr: f64) -> Result<Vec<ComplexTensor>> {
    if params.len() != grads.len() {
        return Err(Error::Shape(format!("{} parameters but {} gradients", params.len(), grads.len())));
    }
    params.iter().zip(grads).map(|(p, g)| gd_step(p, g, lr)).collect()
}

/// Runs `config.steps` plain gradient-descent steps from the objective's
/// point; returns the loss before each step plus the final loss, and the
/// final parameters.
pub fn gradient_descent<O: Objective>(obj: &O, config: GdConfig) -> Result<(Vec<f64>, Vec<ComplexTensor>)> {
    let mut params = obj.point().to_vec();
    let mut trace = Vec::with_capacity(config.steps + 1);
    for _ in 0..config.steps {
        let (loss, grads) = value_and_grad(obj, &params)?;
        trace.push(loss);
        params = gd_step_all(&params, &grads, config.learning_rate)?;
    }
    let (loss, _) = value_and_grad(obj, &params)?;
    trace.push(loss);
    Ok((trace, params))
}

/// Measured versus first-order predicted change of the loss for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossDecrease {
    /// `F(z − λg) − F(z)`.
    pub measured: f64,
    /// `−λ·Σ|g_i|²`.
    pub predicted: f64,
}

impl LossDecrease {
    /// `measured / predicted`; `1` at a stationary point.
    pub fn ratio(&self) -> f64 {
        if self.predicted == 0.0 {
            1.0
        } else {
            self.measured / self.predicted
        }
    }
}

/// Takes one step of size `lr` along the engine gradient at `point` and
/// compares the loss change with `−λ‖g‖²`.
pub fn loss_decrease_check<O: Objective>(obj: &O, point: &[ComplexTensor], lr: f64) -> Result<LossDecrease> {
    let (before, grads) = value_and_grad(obj, point)?;
    let norm2: f64 = grads.iter().flat_map(|g| g.data().iter()).map(|z| z.norm_sqr()).sum();
    if norm2 == 0.0 {
        return Ok(LossDecrease { measured: 0.0, predicted: 0.0 });
    }
    let moved = gd_step_all(point, &grads, lr)?;
    let after = evaluate(obj, &moved)?;
    if !is_real_loss(after) {
        return Err(Error::InvalidLoss(format!("loss value {after} is not real")));
    }
    Ok(LossDecrease { measured: after.re - before, predicted: -lr * norm2 })
}

/// `A = G·W† − W·G†` with `G = grad_w / 2 = ∂F/∂W̄`.
pub fn cayley_generator(w: &ComplexTensor, grad_w: &ComplexTensor) -> Result<ComplexTensor> {
    w.expect_same_shape(grad_w, "cayley_generator")?;
    let g = grad_w.scale(c64(0.5, 0.0));
    g.matmul(&w.dagger())?.sub(&w.matmul(&g.dagger())?)
}

/// Unitary-preserving update `W ← (I + λ/2·A)⁻¹(I − λ/2·A)·W`.
pub fn cayley_update(w: &ComplexTensor, grad_w: &ComplexTensor, lr: f64) -> Result<ComplexTensor> {
    let defect = unitarity_defect(w)?;
    if defect > 1e-8 {
        return Err(Error::InvalidInput(format!("cayley_update needs a unitary matrix, defect is {defect:e}")));
    }
    let n = w.shape()[0];
    let a = cayley_generator(w, grad_w)?.scale(c64(lr / 2.0, 0.0));
    let eye = ComplexTensor::identity(n);
    let lhs = eye.add(&a)?;
    let rhs = eye.sub(&a)?.matmul(w)?;
    solve_linear(&lhs, &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::tensor::C64;

    struct Abs2(Vec<ComplexTensor>);

    impl Objective for Abs2 {
        fn point(&self) -> &[ComplexTensor] {
            &self.0
        }

        fn build<G: Graph>(&self, g: &mut G, inputs: &[G::Var]) -> Result<G::Var> {
            g.abs2_sum(inputs[0])
        }
    }

    fn z(re: f64, im: f64) -> ComplexTensor {
        ComplexTensor::scalar(C64::new(re, im))
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let p = ComplexTensor::vector(vec![c64(1.0, 2.0), c64(-0.5, 0.0)]);
        let zero = ComplexTensor::vector(vec![c64(0.0, 0.0); 2]);
        assert_eq!(gd_step(&p, &zero, 0.3).unwrap(), p);
    }

    #[test]
    fn single_step_on_squared_modulus() {
        let obj = Abs2(vec![z(1.0, 0.0)]);
        let (_, g) = value_and_grad(&obj, obj.point()).unwrap();
        assert_eq!(g[0].data()[0], c64(2.0, 0.0));
        let next = gd_step(&obj.point()[0], &g[0], 0.1).unwrap();
        assert!((next.data()[0] - c64(0.8, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn geometric_convergence() {
        let z0 = c64(0.6, -1.4);
        let obj = Abs2(vec![ComplexTensor::scalar(z0)]);
        let lr = 0.15;
        let (trace, params) = gradient_descent(&obj, GdConfig::new(lr, 12).unwrap()).unwrap();
        let expected = z0 * (1.0 - 2.0 * lr).powi(12);
        assert!((params[0].data()[0] - expected).norm() < 1e-14);
        for (t, loss) in trace.iter().enumerate() {
            let closed = (1.0 - 2.0 * lr).powi(2 * t as i32) * z0.norm_sqr();
            assert!((loss - closed).abs() < 1e-14, "step {t}");
        }
    }

    #[test]
    fn real_parameters_stay_real() {
        let x = ComplexTensor::real_vector(vec![1.0, 2.0]);
        let g = ComplexTensor::vector(vec![c64(1.0, 5.0), c64(0.5, -3.0)]);
        let next = gd_step(&x, &g, 0.1).unwrap();
        assert!(next.is_real());
        assert_eq!(next.data()[1], c64(1.95, 0.0));
    }

    #[test]
    fn loss_decrease_examples() {
        let obj = Abs2(vec![z(0.0, 0.0)]);
        let d = loss_decrease_check(&obj, obj.point(), 1e-3).unwrap();
        assert_eq!((d.measured, d.predicted), (0.0, 0.0));

        let obj = Abs2(vec![z(1.0, 1.0)]);
        let d = loss_decrease_check(&obj, obj.point(), 1e-4).unwrap();
        assert!((d.predicted - (-8e-4)).abs() < 1e-18);
        // F(z − 2λz) − F(z) = ((1 − 2λ)² − 1)|z|²
        let exact = ((1.0 - 2e-4f64).powi(2) - 1.0) * 2.0;
        assert!((d.measured - exact).abs() < 1e-15);
    }

    #[test]
    fn second_order_remainder_is_bounded() {
        let obj = Abs2(vec![ComplexTensor::vector(vec![c64(0.3, -0.2), c64(1.1, 0.4)])]);
        let mut lr = 1e-2;
        let mut ratios = Vec::new();
        for _ in 0..5 {
            let d = loss_decrease_check(&obj, obj.point(), lr).unwrap();
            ratios.push((d.measured - d.predicted).abs() / (lr * lr));
            lr /= 2.0;
        }
        let first = ratios[0];
        assert!(ratios.iter().all(|r| (r - first).abs() <= 1e-6 * first), "{ratios:?}");
    }

    #[test]
    fn cayley_zero_gradient_is_identity_map() {
        let w = ComplexTensor::diagonal(&[C64::from_polar(1.0, 0.4), C64::from_polar(1.0, -2.0)]);
        let zero = ComplexTensor::zeros(&[2, 2], crate::tensor::Domain::Complex);
        let next = cayley_update(&w, &zero, 0.1).unwrap();
        assert!(next.rel_err(&w).unwrap() <= 1e-15);
    }

    #[test]
    fn cayley_rejects_non_unitary() {
        let w = ComplexTensor::identity(2).scale(c64(2.0, 0.0));
        let zero = ComplexTensor::zeros(&[2, 2], crate::tensor::Domain::Complex);
        assert!(cayley_update(&w, &zero, 0.1).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(GdConfig::new(0.0, 3).is_err());
        assert!(GdConfig::new(-1.0, 3).is_err());
        assert!(GdConfig::new(0.1, 0).is_err());
        assert!(GdConfig::new(0.1, 3).is_ok());
    }
}
