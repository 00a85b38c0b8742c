use cad_core::corpus::{CorpusLoss, LossId};
use cad_core::optim::{gd_step_all, loss_decrease_check};
use cad_core::oracles::{cross_check, FD_STEP};
use cad_core::rng;
use cad_core::urnn::{run_sequence, train, RnnParams, SequenceObjective};
use cad_core::{cayley_update, unitarity_defect, value_and_grad, ComplexTensor, Objective, Result};

use crate::report::{Case, Report};

/// Engine against pair mode and split-real must agree to this relative error.
pub const EXACT_TOL: f64 = 1e-12;
/// A loss above this counts as divergence.
pub const DIVERGENCE: f64 = 1e12;
/// Relative loss increase per step still counted as descent.
pub const MONOTONE_SLACK: f64 = 1e-12;
/// Unitarity defect allowed for a trained recurrent matrix.
pub const UNITARY_TOL: f64 = 1e-8;

/// Engine gradient against finite differences (tolerance `tol`), pair mode and
/// split-real (tolerance [`EXACT_TOL`]) for `trials` random instances.
pub fn gradcheck(loss: LossId, dims: usize, trials: usize, seed: u64, tol: f64) -> Result<Report> {
    let mut cases = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut r = rng::derived(seed, t as u64);
        let obj = CorpusLoss::random(loss, dims, &mut r)?;
        cases.push(gradcheck_case(format!("{loss}/trial_{t:03}"), &obj, tol));
    }
    Ok(Report::new("gradcheck", seed, cases))
}

/// One gradcheck case for an arbitrary objective.
pub fn gradcheck_case<O: Objective>(name: String, obj: &O, tol: f64) -> Case {
    let c = match cross_check(obj, FD_STEP) {
        Ok(c) => c,
        Err(e) => return Case::error(name, tol, e),
    };
    let exact = c.pair_err.max(c.pair_conjugate_defect).max(c.split_err.unwrap_or(0.0));
    let split = c.split_err.map_or("unsupported".to_string(), |e| format!("{e:.3e}"));
    Case {
        name,
        max_rel_err: c.worst(),
        tolerance: tol,
        pass: c.fd_err <= tol && exact <= EXACT_TOL,
        detail: format!(
            "loss={:.6e} fd_err={:.3e} pair_err={:.3e} conjugate_defect={:.3e} split_err={split}",
            c.loss, c.fd_err, c.pair_err, c.pair_conjugate_defect
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoGdOptions {
    pub loss: LossId,
    pub lr: f64,
    pub steps: usize,
    pub seed: u64,
    pub dims: usize,
    /// Start from the all-zero point instead of a random one.
    pub zero_start: bool,
    /// For `urnn_unrolled`: make `W` the variable and move it by the Cayley update.
    pub full_w: bool,
}

impl DemoGdOptions {
    pub fn new(loss: LossId) -> Self {
        Self { loss, lr: 0.01, steps: 20, seed: 0, dims: 4, zero_start: false, full_w: false }
    }
}

fn format_trace(losses: &[f64]) -> String {
    losses.iter().map(|l| format!("{l:.6e}")).collect::<Vec<_>>().join(",")
}

/// Plain gradient descent on a corpus loss, reporting divergence, monotone
/// decrease and the first-order prediction at step 0.
pub fn demo_gd(opts: DemoGdOptions) -> Result<Report> {
    if opts.lr.is_nan() || opts.lr <= 0.0 {
        return Err(cad_core::Error::InvalidInput(format!("learning rate must be positive, got {}", opts.lr)));
    }
    let mut r = rng::seeded(opts.seed);
    let mut obj = match opts.loss {
        LossId::UrnnUnrolled => CorpusLoss::urnn(opts.dims, cad_core::corpus::URNN_STEPS, !opts.full_w, &mut r)?,
        id => CorpusLoss::random(id, opts.dims, &mut r)?,
    };
    if opts.zero_start {
        let zeros = obj.point().iter().map(|p| ComplexTensor::zeros(p.shape(), p.domain())).collect();
        obj = obj.at(zeros)?;
    }
    let z0 = obj.point().to_vec();
    let cayley = opts.full_w && opts.loss == LossId::UrnnUnrolled;

    let mut cases = Vec::new();
    match loss_decrease_check(&obj, &z0, opts.lr) {
        Ok(d) => cases.push(Case::check(
            "first_order_ratio",
            (d.ratio() - 1.0).abs(),
            100.0 * opts.lr,
            format!("measured={:.6e} predicted={:.6e} ratio={:.9}", d.measured, d.predicted, d.ratio()),
        )),
        Err(e) => cases.push(Case::error("first_order_ratio", 100.0 * opts.lr, e)),
    }

    let mut point = z0.clone();
    let mut losses = Vec::with_capacity(opts.steps + 1);
    let mut max_defect: f64 = 0.0;
    let mut failure = None;
    for step in 0..=opts.steps {
        let (loss, grads) = match value_and_grad(&obj, &point) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        losses.push(loss);
        if step == opts.steps || !loss.is_finite() || loss.abs() > DIVERGENCE {
            break;
        }
        point = if cayley {
            let w = cayley_update(&point[0], &grads[0], opts.lr)?;
            max_defect = max_defect.max(unitarity_defect(&w)?);
            let mut rest = gd_step_all(&point[1..], &grads[1..], opts.lr)?;
            rest.insert(0, w);
            rest
        } else {
            gd_step_all(&point, &grads, opts.lr)?
        };
    }

    let trace = format_trace(&losses);
    let peak = losses.iter().fold(0.0f64, |m, l| if l.is_finite() { m.max(l.abs()) } else { f64::INFINITY });
    match &failure {
        Some(e) => cases.push(Case::error("bounded", DIVERGENCE, e)),
        None => cases.push(Case::check("bounded", peak, DIVERGENCE, format!("steps={} trace=[{trace}]", losses.len() - 1))),
    }
    let rises: Vec<f64> = losses.windows(2).map(|w| (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE)).collect();
    let violations = rises.iter().filter(|r| **r > MONOTONE_SLACK).count();
    let worst_rise = rises.iter().copied().fold(0.0f64, f64::max);
    cases.push(Case::check("descent", worst_rise, MONOTONE_SLACK, format!("violations={violations} of {}", rises.len())));

    if opts.loss == LossId::Abs2 {
        let norm2: f64 = z0[0].data().iter().map(|z| z.norm_sqr()).sum();
        let q = 1.0 - 2.0 * opts.lr;
        let err = losses
            .iter()
            .enumerate()
            .map(|(t, l)| (l - q.powi(2 * t as i32) * norm2).abs() / norm2.max(1.0))
            .fold(0.0f64, f64::max);
        cases.push(Case::check("closed_form_trace", err, 1e-10, "loss_t = (1 − 2λ)^(2t)·|z0|²"));
    }
    if cayley {
        cases.push(Case::check("unitarity", max_defect, UNITARY_TOL, "max ‖W†W − I‖_F over the run"));
    }
    Ok(Report::new("demo-gd", opts.seed, cases))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoUrnnOptions {
    pub dim: usize,
    pub seq_len: usize,
    pub steps: usize,
    pub seed: u64,
    pub lr: f64,
    pub io: usize,
}

impl Default for DemoUrnnOptions {
    fn default() -> Self {
        Self { dim: 8, seq_len: 10, steps: 50, seed: 0, lr: 1e-3, io: 2 }
    }
}

/// Teacher–student regression with a full unitary `W`: targets come from a
/// random teacher network, the student starts from independent random
/// weights, `W` moves by the Cayley update and the rest by gradient steps.
pub fn demo_urnn(opts: DemoUrnnOptions) -> Result<Report> {
    if opts.lr.is_nan() || opts.lr <= 0.0 {
        return Err(cad_core::Error::InvalidInput(format!("learning rate must be positive, got {}", opts.lr)));
    }
    let mut r = rng::seeded(opts.seed);
    let teacher = RnnParams::random(opts.dim, opts.io, opts.io, false, &mut r)?;
    let student = RnnParams::random(opts.dim, opts.io, opts.io, false, &mut r)?;
    let inputs: Vec<_> = (0..opts.seq_len).map(|_| rng::complex_vector(&mut r, opts.io)).collect();
    let targets = run_sequence(&teacher, &inputs)?;
    let obj = SequenceObjective::new(student, inputs, targets)?;
    let run = train(&obj, opts.lr, opts.lr, opts.steps)?;

    let first = run.losses[0];
    let last = *run.losses.last().expect("at least one loss");
    let increases = run.losses.windows(2).filter(|w| w[1] > w[0]).count();
    let cases = vec![
        Case::check(
            "loss_halved",
            last / first,
            0.5,
            format!("initial={first:.6e} final={last:.6e} increases={increases} trace=[{}]", format_trace(&run.losses)),
        ),
        Case::check("unitarity", run.max_defect, UNITARY_TOL, "max ‖W†W − I‖_F over the run"),
    ];
    Ok(Report::new("demo-urnn", opts.seed, cases))
}
