//! Reference losses used by the gradient checks and optimizer demos.
//!
//! | id              | loss                                              |
//! |-----------------|---------------------------------------------------|
//! | `abs2`          | `Σ |z_i|²`                                        |
//! | `rayleigh`      | `Re⟨z, A z⟩ / ⟨z, z⟩`, `A` Hermitian              |
//! | `dft_energy`    | `Σ_k w_k |DFT(z)_k|² + Re⟨q, IDFT(z)⟩`            |
//! | `inner_real`    | `Re⟨z, w⟩ + |⟨z, w⟩|²`                            |
//! | `urnn_unrolled` | mean squared output error of a 5-step unitary RNN |
//!
//! Each loss has a complex instance and, except `dft_energy`, a real-restricted
//! instance whose inputs, constants and intermediate values are all real.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{Graph, Objective};
use crate::rng::{self, Rng};
use crate::tensor::{ComplexTensor, Domain};
use crate::urnn::{RnnParams, SequenceObjective, WSource};

/// Sequence length of the unrolled RNN loss.
pub const URNN_STEPS: usize = 5;
/// Input and output width of the unrolled RNN loss.
pub const URNN_IO: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LossId {
    Abs2,
    Rayleigh,
    DftEnergy,
    InnerReal,
    UrnnUnrolled,
}

impl LossId {
    pub const ALL: [LossId; 5] = [LossId::Abs2, LossId::Rayleigh, LossId::DftEnergy, LossId::InnerReal, LossId::UrnnUnrolled];

    pub fn as_str(self) -> &'static str {
        match self {
            LossId::Abs2 => "abs2",
            LossId::Rayleigh => "rayleigh",
            LossId::DftEnergy => "dft_energy",
            LossId::InnerReal => "inner_real",
            LossId::UrnnUnrolled => "urnn_unrolled",
        }
    }
}

impl fmt::Display for LossId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown loss `{s}` (expected one of abs2, rayleigh, dft_energy, inner_real, urnn_unrolled)")))
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Abs2,
    Rayleigh { a: ComplexTensor },
    DftEnergy { weights: ComplexTensor, probe: ComplexTensor },
    InnerReal,
    Urnn(Box<SequenceObjective>),
}

/// A corpus loss bound to a reference point.
#[derive(Debug, Clone)]
pub struct CorpusLoss {
    id: LossId,
    kind: Kind,
    point: Vec<ComplexTensor>,
}

impl CorpusLoss {
    /// Complex instance of size `dims` (vector length or hidden width).
    pub fn random(id: LossId, dims: usize, rng: &mut Rng) -> Result<Self> {
        check_dims(dims)?;
        let (kind, point) = match id {
            LossId::Abs2 => (Kind::Abs2, vec![rng::complex_vector(rng, dims)]),
            LossId::Rayleigh => {
                let a = rng::hermitian(rng, dims);
                (Kind::Rayleigh { a }, vec![rng::complex_vector(rng, dims)])
            }
            LossId::DftEnergy => {
                let weights = ComplexTensor::real_vector(rng::real_vec(rng, dims).into_iter().map(|x| 1.0 + 0.5 * x).collect());
                let probe = rng::complex_vector(rng, dims);
                (Kind::DftEnergy { weights, probe }, vec![rng::complex_vector(rng, dims)])
            }
            LossId::InnerReal => (Kind::InnerReal, vec![rng::complex_vector(rng, dims), rng::complex_vector(rng, dims)]),
            LossId::UrnnUnrolled => return Self::urnn(dims, URNN_STEPS, true, rng),
        };
        Ok(Self { id, kind, point })
    }

    /// `urnn_unrolled` with a chosen sequence length. With `structured` the
    /// recurrent matrix is parametrized by phases and reflections; otherwise
    /// `W` itself is the variable.
    pub fn urnn(dims: usize, steps: usize, structured: bool, rng: &mut Rng) -> Result<Self> {
        check_dims(dims)?;
        let params = RnnParams::random(dims, URNN_IO, URNN_IO, structured, rng)?;
        let inputs = (0..steps).map(|_| rng::complex_vector(rng, URNN_IO)).collect();
        let targets = (0..steps).map(|_| rng::complex_vector(rng, URNN_IO)).collect();
        let obj = SequenceObjective::new(params, inputs, targets)?;
        let point = obj.point().to_vec();
        Ok(Self { id: LossId::UrnnUnrolled, kind: Kind::Urnn(Box::new(obj)), point })
    }

    /// The sequence task behind `urnn_unrolled`, if this is one.
    pub fn sequence(&self) -> Option<&SequenceObjective> {
        match &self.kind {
            Kind::Urnn(obj) => Some(obj),
            _ => None,
        }
    }

    /// Instance with real inputs and real constants, so that every op sees
    /// and produces real values. `None` for `dft_energy`, whose transform
    /// leaves the real line.
    pub fn real_restricted(id: LossId, dims: usize, rng: &mut Rng) -> Result<Option<Self>> {
        check_dims(dims)?;
        let (kind, point) = match id {
            LossId::Abs2 => (Kind::Abs2, vec![rng::real_vector(rng, dims)]),
            LossId::Rayleigh => {
                let a = rng::real_symmetric(rng, dims);
                (Kind::Rayleigh { a }, vec![rng::real_vector(rng, dims)])
            }
            LossId::DftEnergy => return Ok(None),
            LossId::InnerReal => (Kind::InnerReal, vec![rng::real_vector(rng, dims), rng::real_vector(rng, dims)]),
            LossId::UrnnUnrolled => {
                let w = rng::real_matrix(rng, dims, dims).map(|z| z * 0.5);
                let v = rng::real_matrix(rng, dims, URNN_IO);
                let u = rng::real_matrix(rng, URNN_IO, dims);
                let c = rng::real_vector(rng, URNN_IO);
                let b = ComplexTensor::real_vector(rng::real_vec(rng, dims).into_iter().map(|x| 0.1 * x).collect());
                let params = RnnParams::new(WSource::Full(w), v, u, c, b)?;
                let inputs = (0..URNN_STEPS).map(|_| rng::real_vector(rng, URNN_IO)).collect();
                let targets = (0..URNN_STEPS).map(|_| rng::real_vector(rng, URNN_IO)).collect();
                let obj = SequenceObjective::new(params, inputs, targets)?;
                let point = obj.point().to_vec();
                (Kind::Urnn(Box::new(obj)), point)
            }
        };
        Ok(Some(Self { id, kind, point }))
    }

    /// `abs2` at an explicit point.
    pub fn abs2_at(z: ComplexTensor) -> Self {
        Self { id: LossId::Abs2, kind: Kind::Abs2, point: vec![z] }
    }

    pub fn id(&self) -> LossId {
        self.id
    }

    /// The same loss at another point with matching shapes.
    pub fn at(&self, point: Vec<ComplexTensor>) -> Result<Self> {
        if point.len() != self.point.len() || point.iter().zip(&self.point).any(|(a, b)| a.shape() != b.shape()) {
            return Err(Error::Shape(format!("point does not match the layout of `{}`", self.id)));
        }
        Ok(Self { point, ..self.clone() })
    }

    /// Whether every input is real-domain.
    pub fn is_real(&self) -> bool {
        self.point.iter().all(|p| p.domain() == Domain::Real)
    }
}

fn check_dims(dims: usize) -> Result<()> {
    if dims == 0 {
        return Err(Error::InvalidDimension("dims must be at least 1".into()));
    }
    Ok(())
}

impl Objective for CorpusLoss {
    fn point(&self) -> &[ComplexTensor] {
        &self.point
    }

    fn build<G: Graph>(&self, g: &mut G, x: &[G::Var]) -> Result<G::Var> {
        if x.len() != self.point.len() {
            return Err(Error::InvalidInput(format!("`{}` takes {} inputs, got {}", self.id, self.point.len(), x.len())));
        }
        match &self.kind {
            Kind::Abs2 => g.abs2_sum(x[0]),
            Kind::Rayleigh { a } => {
                let a = g.constant(a.clone())?;
                let az = g.matmul(a, x[0])?;
                let num = g.re_inner(x[0], az)?;
                let den = g.re_inner(x[0], x[0])?;
                g.div(num, den)
            }
            Kind::DftEnergy { weights, probe } => {
                let spectrum = g.dft(x[0])?;
                let sc = g.conj(spectrum)?;
                let power = g.mul(sc, spectrum)?;
                let power = g.re(power)?;
                let w = g.constant(weights.clone())?;
                let weighted = g.mul(w, power)?;
                let energy = g.sum(weighted)?;
                let back = g.idft(x[0])?;
                let q = g.constant(probe.clone())?;
                let overlap = g.re_inner(q, back)?;
                g.add(energy, overlap)
            }
            Kind::InnerReal => {
                let p = g.inner(x[0], x[1])?;
                let lin = g.re(p)?;
                let pc = g.conj(p)?;
                let sq = g.mul(pc, p)?;
                let sq = g.re(sq)?;
                g.add(lin, sq)
            }
            Kind::Urnn(obj) => obj.build(g, x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{evaluate, value_and_grad};
    use crate::rng::seeded;
    use crate::tensor::c64;

    #[test]
    fn ids_round_trip() {
        for id in LossId::ALL {
            assert_eq!(id.as_str().parse::<LossId>().unwrap(), id);
        }
        assert!("nope".parse::<LossId>().is_err());
    }

    #[test]
    fn abs2_gradient_is_twice_z() {
        let z = ComplexTensor::scalar(c64(0.7, -0.2));
        let loss = CorpusLoss::abs2_at(ComplexTensor::vector(vec![z.data()[0]]));
        let (_, g) = value_and_grad(&loss, loss.point()).unwrap();
        assert_eq!(g[0].data()[0], c64(1.4, -0.4));
    }

    #[test]
    fn rayleigh_is_scale_invariant() {
        let loss = CorpusLoss::random(LossId::Rayleigh, 4, &mut seeded(1)).unwrap();
        let f0 = evaluate(&loss, loss.point()).unwrap();
        let scaled = vec![loss.point()[0].scale(c64(0.0, 3.0))];
        let f1 = evaluate(&loss, &scaled).unwrap();
        assert!((f0 - f1).norm() <= 1e-14);
        assert!(f0.im.abs() == 0.0);
    }

    #[test]
    fn every_loss_is_real() {
        let mut rng = seeded(2);
        for id in LossId::ALL {
            let loss = CorpusLoss::random(id, 4, &mut rng).unwrap();
            let (v, grads) = value_and_grad(&loss, loss.point()).unwrap();
            assert!(v.is_finite());
            assert_eq!(grads.len(), loss.point().len());
            if let Some(real) = CorpusLoss::real_restricted(id, 4, &mut rng).unwrap() {
                assert!(real.is_real());
                let (_, grads) = value_and_grad(&real, real.point()).unwrap();
                assert!(grads.iter().all(|g| g.is_real()), "{id}");
            }
        }
    }

    #[test]
    fn zero_dims_rejected() {
        assert!(CorpusLoss::random(LossId::Abs2, 0, &mut seeded(0)).is_err());
    }
}
