//! Unitary recurrent network machinery.
//!
//! The recurrent matrix is the structured product
//! `W = D₃·R₂·F⁻¹·D₂·Π·R₁·F·D₁` with phase diagonals `D = diag(e^{iω})`,
//! reflections `R = I − 2vv†/‖v‖²`, a fixed row permutation `Π` and the
//! unitary DFT pair `F/√N`, `√N·F⁻¹`. Every builder is written against
//! [`Graph`], so the same code evaluates values and records gradients.
//!
//! The cell is `h_t = modReLU(W·h_{t−1} + V·x_t; b)`, `y_t = U·h_t + c`, with
//! `modReLU(z; b) = z·relu(|z| + b)/|z|` and output `0` where `z = 0`.

use crate::error::{Error, Result};
use crate::graph::{evaluate, value_and_grad, Graph, Objective};
use crate::ops::validate_permutation;
use crate::optim::{cayley_update, gd_step};
use crate::rng::{self, Rng};
use crate::tape::Tape;
use crate::tensor::{c64, dft_matrix, idft_matrix, unitarity_defect, ComplexTensor, Domain, C64};

const MIN_REFLECTOR_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryParams {
    pub omega1: Vec<f64>,
    pub omega2: Vec<f64>,
    pub omega3: Vec<f64>,
    pub v1: Vec<C64>,
    pub v2: Vec<C64>,
    pub perm: Vec<usize>,
}

impl UnitaryParams {
    pub fn new(
        omega1: Vec<f64>,
        omega2: Vec<f64>,
        omega3: Vec<f64>,
        v1: Vec<C64>,
        v2: Vec<C64>,
        perm: Vec<usize>,
    ) -> Result<Self> {
        let n = omega1.len();
        if n == 0 {
            return Err(Error::InvalidDimension("unitary parameters need n ≥ 1".into()));
        }
        let lens = [omega2.len(), omega3.len(), v1.len(), v2.len(), perm.len()];
        if lens.iter().any(|&l| l != n) {
            return Err(Error::Shape(format!("all parameter vectors must have length {n}, got {lens:?}")));
        }
        if omega1.iter().chain(&omega2).chain(&omega3).any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("phases must be finite".into()));
        }
        for v in [&v1, &v2] {
            check_reflector(v)?;
        }
        validate_permutation(&perm)?;
        Ok(Self { omega1, omega2, omega3, v1, v2, perm })
    }

    /// Phases uniform on `[−π, π)`, reflection entries uniform on the unit square,
    /// and a shuffled permutation.
    pub fn random(n: usize, rng: &mut Rng) -> Result<Self> {
        use std::f64::consts::PI;
        let mut phases = || (0..n).map(|_| rng::uniform(rng, -PI, PI)).collect::<Vec<_>>();
        let (o1, o2, o3) = (phases(), phases(), phases());
        let v1 = rng::complex_vec(rng, n);
        let v2 = rng::complex_vec(rng, n);
        let perm = rng::permutation(rng, n);
        Self::new(o1, o2, o3, v1, v2, perm)
    }

    pub fn n(&self) -> usize {
        self.omega1.len()
    }

    /// `[ω₁, ω₂, ω₃, v₁, v₂]`; the phases are real-domain.
    pub fn tensors(&self) -> Vec<ComplexTensor> {
        vec![
            ComplexTensor::real_vector(self.omega1.clone()),
            ComplexTensor::real_vector(self.omega2.clone()),
            ComplexTensor::real_vector(self.omega3.clone()),
            ComplexTensor::vector(self.v1.clone()),
            ComplexTensor::vector(self.v2.clone()),
        ]
    }

    /// Inverse of [`UnitaryParams::tensors`], keeping `self.perm`.
    pub fn with_tensors(&self, t: &[ComplexTensor]) -> Result<Self> {
        if t.len() != 5 {
            return Err(Error::InvalidInput(format!("expected 5 tensors, got {}", t.len())));
        }
        let real = |x: &ComplexTensor| x.data().iter().map(|z| z.re).collect::<Vec<_>>();
        Self::new(
            real(&t[0]),
            real(&t[1]),
            real(&t[2]),
            t[3].data().to_vec(),
            t[4].data().to_vec(),
            self.perm.clone(),
        )
    }
}

fn check_reflector(v: &[C64]) -> Result<()> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm.is_nan() || norm <= MIN_REFLECTOR_NORM {
        return Err(Error::DegenerateReflector(norm));
    }
    Ok(())
}

/// Graph variables holding `[ω₁, ω₂, ω₃, v₁, v₂]`.
#[derive(Debug, Clone, Copy)]
pub struct UnitaryVars<V> {
    pub omega1: V,
    pub omega2: V,
    pub omega3: V,
    pub v1: V,
    pub v2: V,
}

impl<V: Copy> UnitaryVars<V> {
    pub fn from_slice(vars: &[V]) -> Result<Self> {
        match vars {
            [omega1, omega2, omega3, v1, v2] => {
                Ok(Self { omega1: *omega1, omega2: *omega2, omega3: *omega3, v1: *v1, v2: *v2 })
            }
            _ => Err(Error::InvalidInput(format!("expected 5 unitary parameter variables, got {}", vars.len()))),
        }
    }
}

/// `I − 2·v·v†/‖v‖²`.
pub fn reflection_graph<G: Graph>(g: &mut G, v: G::Var) -> Result<G::Var> {
    let value = g.value_of(v)?;
    if value.rank() != 1 {
        return Err(Error::Shape(format!("reflection needs a vector, got shape {:?}", value.shape())));
    }
    check_reflector(value.data())?;
    let vc = g.conj(v)?;
    let vv = g.outer(v, vc)?;
    let norm2 = g.re_inner(v, v)?;
    let minus_two = g.real_constant(-2.0)?;
    let coef = g.div(minus_two, norm2)?;
    let scaled = g.scale(coef, vv)?;
    let eye = g.constant(ComplexTensor::identity(value.len()))?;
    g.add(eye, scaled)
}

/// `diag(e^{iω})` for a real phase vector.
pub fn phase_diag_graph<G: Graph>(g: &mut G, omega: G::Var) -> Result<G::Var> {
    let iw = g.scale_const(omega, c64(0.0, 1.0))?;
    let e = g.exp(iw)?;
    g.diag(e)
}

/// The structured product, applied right to left starting from `D₁`.
pub fn build_w_graph<G: Graph>(g: &mut G, p: &UnitaryVars<G::Var>, perm: &[usize]) -> Result<G::Var> {
    let n = perm.len();
    if n == 0 {
        return Err(Error::InvalidDimension("unitary matrix needs n ≥ 1".into()));
    }
    let root = (n as f64).sqrt();
    let f = g.constant(dft_matrix(n)?.scale(c64(1.0 / root, 0.0)))?;
    let f_inv = g.constant(idft_matrix(n)?.scale(c64(root, 0.0)))?;

    let mut w = phase_diag_graph(g, p.omega1)?;
    w = g.matmul(f, w)?;
    let r1 = reflection_graph(g, p.v1)?;
    w = g.matmul(r1, w)?;
    w = g.permute_rows(w, perm)?;
    let d2 = phase_diag_graph(g, p.omega2)?;
    w = g.matmul(d2, w)?;
    w = g.matmul(f_inv, w)?;
    let r2 = reflection_graph(g, p.v2)?;
    w = g.matmul(r2, w)?;
    let d3 = phase_diag_graph(g, p.omega3)?;
    g.matmul(d3, w)
}

/// Evaluates a graph-built value with every argument held constant.
fn eval_with<F>(args: &[ComplexTensor], f: F) -> Result<ComplexTensor>
where
    F: FnOnce(&mut Tape, &[crate::tape::NodeId]) -> Result<crate::tape::NodeId>,
{
    let mut tape = Tape::new();
    let ids = args.iter().map(|a| tape.constant(a.clone())).collect::<Result<Vec<_>>>()?;
    let out = f(&mut tape, &ids)?;
    tape.value(out).cloned()
}

pub fn reflection(v: &ComplexTensor) -> Result<ComplexTensor> {
    eval_with(std::slice::from_ref(v), |t, ids| reflection_graph(t, ids[0]))
}

pub fn build_w(p: &UnitaryParams) -> Result<ComplexTensor> {
    eval_with(&p.tensors(), |t, ids| build_w_graph(t, &UnitaryVars::from_slice(ids)?, &p.perm))
}

/// The factors of `W` in written order `[D₃, R₂, F⁻¹, D₂, Π, R₁, F, D₁]`, as
/// dense matrices.
pub fn factors(p: &UnitaryParams) -> Result<Vec<ComplexTensor>> {
    let n = p.n();
    let root = (n as f64).sqrt();
    let phase = |w: &[f64]| ComplexTensor::diagonal(&w.iter().map(|x| C64::from_polar(1.0, *x)).collect::<Vec<_>>());
    let mut pi = vec![c64(0.0, 0.0); n * n];
    for (i, &src) in p.perm.iter().enumerate() {
        pi[i * n + src] = c64(1.0, 0.0);
    }
    Ok(vec![
        phase(&p.omega3),
        reflection(&ComplexTensor::vector(p.v2.clone()))?,
        idft_matrix(n)?.scale(c64(root, 0.0)),
        phase(&p.omega2),
        ComplexTensor::matrix(n, n, pi)?,
        reflection(&ComplexTensor::vector(p.v1.clone()))?,
        dft_matrix(n)?.scale(c64(1.0 / root, 0.0)),
        phase(&p.omega1),
    ])
}

/// `z·relu(|z| + b)/|z|` elementwise, `0` (with zero gradient) where `z = 0`.
pub fn modrelu_graph<G: Graph>(g: &mut G, z: G::Var, b: G::Var) -> Result<G::Var> {
    let zv = g.value_of(z)?;
    let zeros: Vec<bool> = zv.data().iter().map(|x| x.norm() == 0.0).collect();
    let a = g.abs(z)?;
    let shifted = g.add(a, b)?;
    let r = g.relu(shifted)?;
    if !zeros.contains(&true) {
        let ratio = g.div(r, a)?;
        return g.mul(z, ratio);
    }
    let mask = |on_zero: f64, off: f64| {
        let d = zeros.iter().map(|&is_zero| if is_zero { on_zero } else { off }).collect();
        ComplexTensor::real(zv.shape().to_vec(), d)
    };
    let pad = g.constant(mask(1.0, 0.0)?)?;
    let keep = g.constant(mask(0.0, 1.0)?)?;
    let denom = g.add(a, pad)?;
    let ratio = g.div(r, denom)?;
    let ratio = g.mul(ratio, keep)?;
    g.mul(z, ratio)
}

pub fn modrelu(z: &ComplexTensor, b: &ComplexTensor) -> Result<ComplexTensor> {
    eval_with(&[z.clone(), b.clone()], |t, ids| modrelu_graph(t, ids[0], ids[1]))
}

/// Where the recurrent matrix comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum WSource {
    Structured(UnitaryParams),
    /// A free matrix, kept unitary by the Cayley update during training.
    Full(ComplexTensor),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnnParams {
    pub w: WSource,
    /// `n × d_in`.
    pub v: ComplexTensor,
    /// `d_out × n`.
    pub u: ComplexTensor,
    /// Length `d_out`.
    pub c: ComplexTensor,
    /// Real length-`n` modReLU bias.
    pub b: ComplexTensor,
}

impl RnnParams {
    pub fn new(w: WSource, v: ComplexTensor, u: ComplexTensor, c: ComplexTensor, b: ComplexTensor) -> Result<Self> {
        let n = match &w {
            WSource::Structured(p) => p.n(),
            WSource::Full(m) => {
                if m.rank() != 2 || m.rows() != m.cols() {
                    return Err(Error::Shape(format!("W must be square, got {:?}", m.shape())));
                }
                m.rows()
            }
        };
        if v.rank() != 2 || v.rows() != n {
            return Err(Error::Shape(format!("V must be {n}×d_in, got {:?}", v.shape())));
        }
        if u.rank() != 2 || u.cols() != n {
            return Err(Error::Shape(format!("U must be d_out×{n}, got {:?}", u.shape())));
        }
        if c.shape() != [u.rows()] {
            return Err(Error::Shape(format!("c must have length {}, got {:?}", u.rows(), c.shape())));
        }
        if b.shape() != [n] || !b.is_real() {
            return Err(Error::Shape(format!("b must be a real vector of length {n}, got {:?} ({:?})", b.shape(), b.domain())));
        }
        Ok(Self { w, v, u, c, b })
    }

    /// Random parameters of the given sizes. `structured` picks the
    /// parametrized `W`; otherwise `W` is a dense copy of a random structured one.
    pub fn random(n: usize, d_in: usize, d_out: usize, structured: bool, rng: &mut Rng) -> Result<Self> {
        let unitary = UnitaryParams::random(n, rng)?;
        let w = if structured { WSource::Structured(unitary) } else { WSource::Full(build_w(&unitary)?) };
        let v = rng::complex_matrix(rng, n, d_in);
        let u = rng::complex_matrix(rng, d_out, n);
        let c = rng::complex_vector(rng, d_out);
        let b = ComplexTensor::real_vector(rng::real_vec(rng, n).into_iter().map(|x| 0.1 * x).collect());
        Self::new(w, v, u, c, b)
    }

    pub fn hidden(&self) -> usize {
        self.b.len()
    }

    pub fn input_dim(&self) -> usize {
        self.v.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.u.rows()
    }

    pub fn w_matrix(&self) -> Result<ComplexTensor> {
        match &self.w {
            WSource::Structured(p) => build_w(p),
            WSource::Full(m) => Ok(m.clone()),
        }
    }

    /// Trainable tensors: `[ω₁, ω₂, ω₃, v₁, v₂, V, U, c, b]` or `[W, V, U, c, b]`.
    pub fn to_point(&self) -> Vec<ComplexTensor> {
        let mut out = match &self.w {
            WSource::Structured(p) => p.tensors(),
            WSource::Full(m) => vec![m.clone()],
        };
        out.extend([self.v.clone(), self.u.clone(), self.c.clone(), self.b.clone()]);
        out
    }

    /// Same layout as `self` with values taken from `point`.
    pub fn with_point(&self, point: &[ComplexTensor]) -> Result<Self> {
        let k = self.w_arity();
        if point.len() != k + 4 {
            return Err(Error::InvalidInput(format!("expected {} tensors, got {}", k + 4, point.len())));
        }
        let w = match &self.w {
            WSource::Structured(p) => WSource::Structured(p.with_tensors(&point[..k])?),
            WSource::Full(_) => WSource::Full(point[0].clone()),
        };
        Self::new(w, point[k].clone(), point[k + 1].clone(), point[k + 2].clone(), point[k + 3].clone())
    }

    fn w_arity(&self) -> usize {
        match self.w {
            WSource::Structured(_) => 5,
            WSource::Full(_) => 1,
        }
    }
}

/// One step: `h = modReLU(W·h_prev + V·x; b)`, `y = U·h + c`.
#[allow(clippy::too_many_arguments)]
pub fn rnn_cell_graph<G: Graph>(
    g: &mut G,
    w: G::Var,
    v: G::Var,
    u: G::Var,
    c: G::Var,
    b: G::Var,
    h_prev: G::Var,
    x: G::Var,
) -> Result<(G::Var, G::Var)> {
    let wh = g.matmul(w, h_prev)?;
    let vx = g.matmul(v, x)?;
    let pre = g.add(wh, vx)?;
    let h = modrelu_graph(g, pre, b)?;
    let uh = g.matmul(u, h)?;
    let y = g.add(uh, c)?;
    Ok((h, y))
}

pub fn rnn_cell(p: &RnnParams, h_prev: &ComplexTensor, x: &ComplexTensor) -> Result<(ComplexTensor, ComplexTensor)> {
    let w = p.w_matrix()?;
    let mut tape = Tape::new();
    let ids = [&w, &p.v, &p.u, &p.c, &p.b, h_prev, x]
        .into_iter()
        .map(|t| tape.constant(t.clone()))
        .collect::<Result<Vec<_>>>()?;
    let (h, y) = rnn_cell_graph(&mut tape, ids[0], ids[1], ids[2], ids[3], ids[4], ids[5], ids[6])?;
    Ok((tape.value(h)?.clone(), tape.value(y)?.clone()))
}

/// Outputs `y_1 … y_T` from a zero initial state.
pub fn run_sequence(p: &RnnParams, inputs: &[ComplexTensor]) -> Result<Vec<ComplexTensor>> {
    let mut h = ComplexTensor::zeros(&[p.hidden()], Domain::Real);
    let mut ys = Vec::with_capacity(inputs.len());
    for x in inputs {
        let (h_next, y) = rnn_cell(p, &h, x)?;
        h = h_next;
        ys.push(y);
    }
    Ok(ys)
}

/// `(1/T)·Σ_t Σ_k |y_t − target_t|²_k` as a differentiable function of the
/// network parameters.
#[derive(Debug, Clone)]
pub struct SequenceObjective {
    template: RnnParams,
    inputs: Vec<ComplexTensor>,
    targets: Vec<ComplexTensor>,
    point: Vec<ComplexTensor>,
}

impl SequenceObjective {
    pub fn new(params: RnnParams, inputs: Vec<ComplexTensor>, targets: Vec<ComplexTensor>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::InvalidInput("sequence must not be empty".into()));
        }
        if inputs.len() != targets.len() {
            return Err(Error::InvalidInput(format!("{} inputs but {} targets", inputs.len(), targets.len())));
        }
        for (x, t) in inputs.iter().zip(&targets) {
            if x.shape() != [params.input_dim()] || t.shape() != [params.output_dim()] {
                return Err(Error::Shape(format!(
                    "inputs must have shape [{}] and targets [{}], got {:?} and {:?}",
                    params.input_dim(),
                    params.output_dim(),
                    x.shape(),
                    t.shape()
                )));
            }
        }
        let point = params.to_point();
        Ok(Self { template: params, inputs, targets, point })
    }

    pub fn params(&self) -> &RnnParams {
        &self.template
    }

    pub fn inputs(&self) -> &[ComplexTensor] {
        &self.inputs
    }

    pub fn targets(&self) -> &[ComplexTensor] {
        &self.targets
    }

    /// The same task at other parameter values.
    pub fn with_params(&self, params: RnnParams) -> Result<Self> {
        Self::new(params, self.inputs.clone(), self.targets.clone())
    }
}

impl Objective for SequenceObjective {
    fn point(&self) -> &[ComplexTensor] {
        &self.point
    }

    fn build<G: Graph>(&self, g: &mut G, vars: &[G::Var]) -> Result<G::Var> {
        let (w, rest) = match &self.template.w {
            WSource::Structured(p) => {
                let uv = UnitaryVars::from_slice(vars.get(..5).unwrap_or(&[]))?;
                (build_w_graph(g, &uv, &p.perm)?, &vars[5..])
            }
            WSource::Full(_) => match vars.split_first() {
                Some((w, rest)) => (*w, rest),
                None => return Err(Error::InvalidInput("missing W variable".into())),
            },
        };
        let [v, u, c, b] = rest else {
            return Err(Error::InvalidInput(format!("expected 4 cell variables, got {}", rest.len())));
        };
        let mut h = g.constant(ComplexTensor::zeros(&[self.template.hidden()], Domain::Real))?;
        let mut total = None;
        for (x, target) in self.inputs.iter().zip(&self.targets) {
            let x = g.constant(x.clone())?;
            let (h_next, y) = rnn_cell_graph(g, w, *v, *u, *c, *b, h, x)?;
            h = h_next;
            let t = g.constant(target.clone())?;
            let d = g.sub(y, t)?;
            let e = g.abs2_sum(d)?;
            total = Some(match total {
                None => e,
                Some(acc) => g.add(acc, e)?,
            });
        }
        let total = total.expect("sequence is non-empty");
        g.scale_const(total, c64(1.0 / self.inputs.len() as f64, 0.0))
    }
}

pub fn sequence_loss(p: &RnnParams, inputs: &[ComplexTensor], targets: &[ComplexTensor]) -> Result<f64> {
    let obj = SequenceObjective::new(p.clone(), inputs.to_vec(), targets.to_vec())?;
    crate::tape::loss_value(&ComplexTensor::scalar(evaluate(&obj, obj.point())?))
}

/// Loss history of a training run.
#[derive(Debug, Clone)]
pub struct TrainTrace {
    /// Loss before every step, followed by the final loss.
    pub losses: Vec<f64>,
    pub params: RnnParams,
    /// Largest unitarity defect of `W` seen during the run.
    pub max_defect: f64,
}

/// Gradient descent on a sequence task. A full `W` moves by the Cayley
/// update with rate `lr_w`; every other tensor takes a plain step with `lr`.
pub fn train(obj: &SequenceObjective, lr: f64, lr_w: f64, steps: usize) -> Result<TrainTrace> {
    let mut params = obj.params().clone();
    let mut losses = Vec::with_capacity(steps + 1);
    let mut max_defect = unitarity_defect(&params.w_matrix()?)?;
    for _ in 0..=steps {
        let current = obj.with_params(params.clone())?;
        let (loss, grads) = value_and_grad(&current, current.point())?;
        losses.push(loss);
        if losses.len() > steps {
            break;
        }
        let point = current.point();
        let mut next = Vec::with_capacity(point.len());
        for (i, (p, g)) in point.iter().zip(&grads).enumerate() {
            let full_w = i == 0 && matches!(params.w, WSource::Full(_));
            next.push(if full_w { cayley_update(p, g, lr_w)? } else { gd_step(p, g, lr)? });
        }
        params = params.with_point(&next)?;
        max_defect = max_defect.max(unitarity_defect(&params.w_matrix()?)?);
    }
    Ok(TrainTrace { losses, params, max_defect })
}
