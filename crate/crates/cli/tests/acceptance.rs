//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cad_cli::table::{conjugated_inner_adjoint, verify_table, verify_table_with, CLOSED_FORM_TOL};
use cad_cli::{demo_urnn, DemoUrnnOptions};
use cad_core::corpus::{CorpusLoss, LossId, URNN_STEPS};
use cad_core::optim::cayley_generator;
use cad_core::oracles::{cross_check, split_real_backward, FD_STEP};
use cad_core::rng;
use cad_core::urnn::UnitaryParams;
use cad_core::{
    build_w, cayley_update, evaluate, loss_decrease_check, unitarity_defect, value_and_grad, ComplexTensor, Graph,
    Objective, Result,
};

const SEED: u64 = 20240601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn table_conformance() -> Result<Outcome> {
    let start = Instant::now();
    let report = verify_table(20, SEED, 1e-5);
    let elapsed = start.elapsed();
    let failed: Vec<_> = report.cases.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let worst = report.cases.iter().map(|c| c.max_rel_err).fold(0.0, f64::max);
    outcome(
        report.summary.total == 14 && failed.is_empty() && elapsed <= Duration::from_secs(5),
        format!("{}/14 rows, worst err {worst:.2e}, closed-form tol {CLOSED_FORM_TOL:.0e}, {elapsed:.2?}, failed {failed:?}", report.summary.passed),
    )
}

/// Instances for the oracle comparison: every corpus loss at several sizes,
/// plus full-matrix RNN runs that the split backend can also check.
fn triangle_corpus() -> Result<Vec<(String, CorpusLoss)>> {
    let mut out = Vec::new();
    for (i, id) in LossId::ALL.into_iter().enumerate() {
        for dims in [1, 3, 8] {
            for s in 0..2u64 {
                let mut r = rng::derived(SEED, (i * 100 + dims * 10) as u64 + s);
                out.push((format!("{id}/n{dims}/s{s}"), CorpusLoss::random(id, dims, &mut r)?));
            }
        }
    }
    for (dims, steps) in [(4, URNN_STEPS), (8, 10)] {
        let mut r = rng::derived(SEED, 9000 + dims as u64);
        out.push((format!("urnn_full_w/n{dims}/T{steps}"), CorpusLoss::urnn(dims, steps, false, &mut r)?));
    }
    Ok(out)
}

struct TriangleStats {
    fd: f64,
    pair: f64,
    split: f64,
    split_runs: usize,
    defect: f64,
    runs: usize,
    elapsed: Duration,
}

fn triangle() -> Result<TriangleStats> {
    let start = Instant::now();
    let mut s = TriangleStats { fd: 0.0, pair: 0.0, split: 0.0, split_runs: 0, defect: 0.0, runs: 0, elapsed: Duration::ZERO };
    for (_, loss) in triangle_corpus()? {
        let c = cross_check(&loss, FD_STEP)?;
        s.fd = s.fd.max(c.fd_err);
        s.pair = s.pair.max(c.pair_err);
        s.defect = s.defect.max(c.pair_conjugate_defect);
        if let Some(e) = c.split_err {
            s.split = s.split.max(e);
            s.split_runs += 1;
        }
        s.runs += 1;
    }
    s.elapsed = start.elapsed();
    Ok(s)
}

fn oracle_triangle(s: &TriangleStats) -> Result<Outcome> {
    outcome(
        s.fd <= 1e-5 && s.pair <= 1e-12 && s.split <= 1e-12 && s.elapsed <= Duration::from_secs(30),
        format!(
            "{} runs: fd {:.2e}, pair {:.2e}, split {:.2e} ({} runs), {:.2?}",
            s.runs, s.fd, s.pair, s.split, s.split_runs, s.elapsed
        ),
    )
}

fn conjugate_pair(s: &TriangleStats) -> Result<Outcome> {
    outcome(s.defect <= 1e-12, format!("max |second - conj(first)| over every node of {} runs: {:.2e}", s.runs, s.defect))
}

fn real_reduction() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut runs = 0;
    let mut all_real = true;
    let mut skipped = Vec::new();
    for (i, id) in LossId::ALL.into_iter().enumerate() {
        for dims in [1, 4, 8, 16] {
            for s in 0..10u64 {
                let mut r = rng::derived(SEED, (5000 + i * 100 + dims * 10) as u64 + s);
                let Some(loss) = CorpusLoss::real_restricted(id, dims, &mut r)? else {
                    if !skipped.contains(&id) {
                        skipped.push(id);
                    }
                    continue;
                };
                let (_, engine) = value_and_grad(&loss, loss.point())?;
                let split = split_real_backward(&loss, loss.point())?;
                for ((e, sp), p) in engine.iter().zip(&split).zip(loss.point()) {
                    all_real &= e.is_real();
                    worst = worst.max(e.rel_err(&sp.to_complex(p.domain())?)?);
                }
                runs += 1;
            }
        }
    }
    outcome(
        worst <= 1e-15 && all_real,
        format!("{runs} runs, max err {worst:.2e}, real-domain gradients {all_real}, no real restriction: {skipped:?}"),
    )
}

fn loss_decrease() -> Result<Outcome> {
    let lambdas = [1e-2, 1e-3, 1e-4];
    let mut failures = Vec::new();
    let mut runs = 0;
    let mut worst_c = 0.0f64;
    for (i, id) in LossId::ALL.into_iter().enumerate() {
        for s in 0..5u64 {
            let mut r = rng::derived(SEED, (7000 + i * 10) as u64 + s);
            let loss = CorpusLoss::random(id, 4, &mut r)?;
            let f0 = evaluate(&loss, loss.point())?.re;
            let mut devs = Vec::new();
            let mut descent = true;
            let mut noise = Vec::new();
            for &lr in &lambdas {
                let d = loss_decrease_check(&loss, loss.point(), lr)?;
                devs.push((d.ratio() - 1.0).abs());
                // round-off in the measured difference, relative to the prediction
                noise.push(if d.predicted == 0.0 { 0.0 } else { 1e3 * f64::EPSILON * f0.abs().max(1.0) / d.predicted.abs() });
                if lr <= 1e-4 && d.predicted < -1e-16 && d.measured >= 0.0 {
                    descent = false;
                }
            }
            let lmin = lambdas[lambdas.len() - 1];
            let c = (devs[devs.len() - 1] / lmin).max(noise[noise.len() - 1] / lmin);
            worst_c = worst_c.max(c);
            let in_band = lambdas.iter().zip(&devs).all(|(l, d)| *d <= 10.0 * l * c);
            let shrinking = (1..lambdas.len()).all(|k| {
                devs[k] <= 2.0 * (lambdas[k] / lambdas[k - 1]) * devs[k - 1] || devs[k] <= noise[k]
            });
            if !(in_band && shrinking && descent) {
                let devs: Vec<String> = devs.iter().map(|d| format!("{d:.2e}")).collect();
                failures.push(format!("{id}/s{s} devs={devs:?}"));
            }
            runs += 1;
        }
    }
    outcome(failures.is_empty(), format!("{runs} points, largest C {worst_c:.2e}, failures {failures:?}"))
}

/// `‖W·X − Y‖²`, a loss of a square matrix `W`.
struct Regression {
    x: ComplexTensor,
    y: ComplexTensor,
    point: Vec<ComplexTensor>,
}

impl Objective for Regression {
    fn point(&self) -> &[ComplexTensor] {
        &self.point
    }

    fn build<G: Graph>(&self, g: &mut G, v: &[G::Var]) -> Result<G::Var> {
        let x = g.constant(self.x.clone())?;
        let y = g.constant(self.y.clone())?;
        let wx = g.matmul(v[0], x)?;
        let d = g.sub(wx, y)?;
        g.abs2_sum(d)
    }
}

fn unitarity() -> Result<Outcome> {
    let mut r = rng::seeded(SEED ^ 6);
    let mut build_defect = 0.0f64;
    for n in [2, 4, 8, 16] {
        for _ in 0..50 {
            build_defect = build_defect.max(unitarity_defect(&build_w(&UnitaryParams::random(n, &mut r)?)?)?);
        }
    }

    let n = 8;
    let mut obj = Regression {
        x: rng::complex_matrix(&mut r, n, 3),
        y: rng::complex_matrix(&mut r, n, 3),
        point: vec![build_w(&UnitaryParams::random(n, &mut r)?)?],
    };
    let mut step_defect = 0.0f64;
    let mut skew = 0.0f64;
    let mut growth_ok = true;
    let first = value_and_grad(&obj, &obj.point)?.0;
    let mut last = first;
    for _ in 0..100 {
        let (loss, grads) = value_and_grad(&obj, &obj.point)?;
        last = loss;
        let w = &obj.point[0];
        let a = cayley_generator(w, &grads[0])?;
        skew = skew.max(a.add(&a.dagger())?.frobenius_norm());
        let before = unitarity_defect(w)?;
        let next = cayley_update(w, &grads[0], 0.01)?;
        let after = unitarity_defect(&next)?;
        growth_ok &= after <= before + 1e-12 * n as f64;
        step_defect = step_defect.max(after);
        obj.point = vec![next];
    }
    for _ in 0..20 {
        let g = rng::complex_matrix(&mut r, n, n);
        let w = build_w(&UnitaryParams::random(n, &mut r)?)?;
        let a = cayley_generator(&w, &g)?;
        skew = skew.max(a.add(&a.dagger())?.frobenius_norm());
    }
    outcome(
        build_defect <= 1e-10 && step_defect <= 1e-8 && skew <= 1e-12 && growth_ok,
        format!(
            "build_w defect {build_defect:.2e} (200 draws), cayley defect {step_defect:.2e} after 100 steps (loss {first:.3} -> {last:.3}), ||A + A^H|| {skew:.2e}"
        ),
    )
}

fn urnn_descent() -> Result<Outcome> {
    let opts = DemoUrnnOptions::default();
    let report = demo_urnn(opts)?;
    let case = report.case("loss_halved").expect("demo-urnn reports loss_halved");
    let defect = report.case("unitarity").expect("demo-urnn reports unitarity");
    outcome(
        case.max_rel_err < 0.5 && defect.pass,
        format!(
            "dim {} length {} steps {}: final/initial = {:.3}, max defect {:.2e}",
            opts.dim, opts.seq_len, opts.steps, case.max_rel_err, defect.max_rel_err
        ),
    )
}

fn known_bug_detector() -> Result<Outcome> {
    let mutated = verify_table_with(20, SEED, 1e-5, &conjugated_inner_adjoint);
    let inner = mutated.case("inner").expect("inner row");
    let others_pass = mutated.cases.iter().filter(|c| c.name != "inner").all(|c| c.pass);
    outcome(
        !inner.pass && others_pass,
        format!("mutated inner row: pass={} ({}); other rows pass={others_pass}", inner.pass, inner.detail),
    )
}

fn main() -> ExitCode {
    let stats = triangle();
    let results: Vec<(&str, Result<Outcome>)> = vec![
        ("1 table conformance", table_conformance()),
        ("2 oracle triangle", stats.as_ref().map_err(Clone::clone).and_then(oracle_triangle)),
        ("3 real-compatibility reduction", real_reduction()),
        ("4 first-order loss decrease", loss_decrease()),
        ("5 conjugate-pair invariant", stats.as_ref().map_err(Clone::clone).and_then(conjugate_pair)),
        ("6 unitarity", unitarity()),
        ("7 end-to-end uRNN descent", urnn_descent()),
        ("8 known-bug detector", known_bug_detector()),
    ];
    let mut all = true;
    for (name, res) in results {
        let (pass, detail) = match res {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= pass;
        println!("criterion {name}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
