//! Table conformance: every elementary adjoint against its closed form and
//! against finite differences.
//!
//! For an op `g` and a random complex cotangent `c`, the real wrapper
//! `F(z) = Re Σ_k conj(c_k)·g(z)_k` has engine cotangent `c` at the output of
//! `g`, so `adjoint(c)` must equal the finite-difference gradient of `F`.

use cad_core::oracles::{fd_gradients, FD_STEP};
use cad_core::rng::{self, Rng};
use cad_core::tensor::{c64, C64};
use cad_core::{ComplexTensor, Error, Op, Result};

use crate::report::{Case, Report};

/// Closed form and implementation must agree to this relative error.
pub const CLOSED_FORM_TOL: f64 = 1e-12;

/// The fourteen table rows, in table order.
pub const ROWS: [&str; 14] =
    ["sin", "exp", "log", "add", "mul", "div", "re", "im", "abs", "inner", "outer", "matmul", "dft", "idft"];

/// Maps `(op, inputs, cotangent)` to one cotangent per input.
pub type AdjointFn<'a> = dyn Fn(&Op, &[&ComplexTensor], &ComplexTensor) -> Result<Vec<ComplexTensor>> + 'a;

/// The engine's own adjoints.
pub fn engine_adjoint(op: &Op, inputs: &[&ComplexTensor], cot: &ComplexTensor) -> Result<Vec<ComplexTensor>> {
    op.adjoint_at(inputs, cot)
}

/// Test fixture: the inner-product adjoint with `ν̄` instead of `ν` in the
/// first slot. Every other op uses the engine.
pub fn conjugated_inner_adjoint(op: &Op, inputs: &[&ComplexTensor], cot: &ComplexTensor) -> Result<Vec<ComplexTensor>> {
    if matches!(op, Op::Inner) {
        let v = cot.as_scalar()?;
        return Ok(vec![inputs[1].scale(v).into_complex(), inputs[0].scale(v).into_complex()]);
    }
    op.adjoint_at(inputs, cot)
}

fn op_for(row: &str) -> Op {
    match row {
        "sin" => Op::Sin,
        "exp" => Op::Exp,
        "log" => Op::Log,
        "add" => Op::Add,
        "mul" => Op::Mul,
        "div" => Op::Div,
        "re" => Op::Re,
        "im" => Op::Im,
        "abs" => Op::Abs,
        "inner" => Op::Inner,
        "outer" => Op::Outer,
        "matmul" => Op::Matmul,
        "dft" => Op::Dft,
        "idft" => Op::Idft,
        other => unreachable!("unknown row {other}"),
    }
}

/// Entries `r·e^{iθ}` with `r ∈ [0.5, 1.5)` and `θ ∈ [−π, π)`, keeping log,
/// division and modulus away from their singular point.
fn polar(rng: &mut Rng, shape: &[usize]) -> ComplexTensor {
    let len = shape.iter().product();
    let data = (0..len)
        .map(|_| {
            let r = rng::uniform(rng, 0.5, 1.5);
            let t = rng::uniform(rng, -std::f64::consts::PI, std::f64::consts::PI);
            C64::from_polar(r, t)
        })
        .collect();
    ComplexTensor::new(shape.to_vec(), data).expect("shape matches data")
}

fn input_shapes(row: &str) -> Vec<Vec<usize>> {
    match row {
        "sin" | "exp" | "log" | "re" | "im" | "abs" => vec![vec![3]],
        "add" | "mul" | "div" => vec![vec![3], vec![3]],
        "inner" => vec![vec![4], vec![4]],
        "outer" => vec![vec![3], vec![2]],
        "matmul" => vec![vec![3, 2], vec![2, 4]],
        "dft" | "idft" => vec![vec![5]],
        other => unreachable!("unknown row {other}"),
    }
}

fn ew(a: &ComplexTensor, f: impl Fn(C64) -> C64) -> ComplexTensor {
    ComplexTensor::vector(a.data().iter().map(|z| f(*z)).collect())
}

fn ew2(a: &ComplexTensor, b: &ComplexTensor, f: impl Fn(C64, C64) -> C64) -> ComplexTensor {
    ComplexTensor::vector(a.data().iter().zip(b.data()).map(|(x, y)| f(*x, *y)).collect())
}

fn phase(sign: f64, k: usize, n: usize, len: usize) -> C64 {
    C64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI * (k * n) as f64 / len as f64)
}

/// The table's backward column, written out entry by entry.
pub fn closed_form(row: &str, x: &[ComplexTensor], nu_bar: &ComplexTensor) -> Vec<ComplexTensor> {
    let v = nu_bar;
    match row {
        "sin" => vec![ew2(v, &x[0], |v, z| v * z.conj().cos())],
        "exp" => vec![ew2(v, &x[0], |v, z| v * z.conj().exp())],
        "log" => vec![ew2(v, &x[0], |v, z| v / z.conj())],
        "add" => vec![v.clone(), v.clone()],
        "mul" => vec![ew2(v, &x[1], |v, w| v * w.conj()), ew2(v, &x[0], |v, z| v * z.conj())],
        "div" => {
            let dz = ew2(v, &x[1], |v, w| v / w.conj());
            let ratio = ew2(&x[0], &x[1], |z, w| z.conj() / (w.conj() * w.conj()));
            vec![dz, ew2(v, &ratio, |v, r| -v * r)]
        }
        "re" => vec![ew(v, |v| c64(v.re, 0.0))],
        "im" => vec![ew(v, |v| c64(0.0, v.re))],
        "abs" => vec![ew2(v, &x[0], |v, z| v.conj().re * z / z.norm())],
        "inner" => {
            let s = v.data()[0];
            let first = ew(&x[1], |w| s.conj() * w);
            let second = ew(&x[0], |z| s * z);
            vec![first, second]
        }
        "outer" => {
            let (z, w) = (x[0].data(), x[1].data());
            let (n, m) = (z.len(), w.len());
            let first = (0..n).map(|i| (0..m).map(|j| v.data()[i * m + j] * w[j].conj()).sum()).collect();
            let second = (0..m).map(|j| (0..n).map(|i| z[i].conj() * v.data()[i * m + j]).sum()).collect();
            vec![ComplexTensor::vector(first), ComplexTensor::vector(second)]
        }
        "matmul" => {
            // ν̄_ik → (Σ_k ν̄_ik·w̄_jk, Σ_i z̄_ij·ν̄_ik)
            let (z, w) = (&x[0], &x[1]);
            let (n, kk, m) = (z.rows(), z.cols(), w.cols());
            let mut first = Vec::with_capacity(n * kk);
            for i in 0..n {
                for j in 0..kk {
                    first.push((0..m).map(|k| v.at(i, k) * w.at(j, k).conj()).sum());
                }
            }
            let mut second = Vec::with_capacity(kk * m);
            for j in 0..kk {
                for k in 0..m {
                    second.push((0..n).map(|i| z.at(i, j).conj() * v.at(i, k)).sum());
                }
            }
            vec![
                ComplexTensor::matrix(n, kk, first).expect("shape"),
                ComplexTensor::matrix(kk, m, second).expect("shape"),
            ]
        }
        "dft" => {
            let len = v.len();
            vec![ComplexTensor::vector(
                (0..len).map(|n| (0..len).map(|k| v.data()[k] * phase(1.0, k, n, len)).sum()).collect(),
            )]
        }
        "idft" => {
            let len = v.len();
            let scale = 1.0 / len as f64;
            vec![ComplexTensor::vector(
                (0..len).map(|k| (0..len).map(|n| scale * v.data()[n] * phase(-1.0, k, n, len)).sum()).collect(),
            )]
        }
        other => unreachable!("unknown row {other}"),
    }
}

/// Worst errors of one row over `trials` random draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowErrors {
    pub closed_form: f64,
    pub finite_difference: f64,
}

pub fn check_row(row: &str, trials: usize, rng: &mut Rng, adjoint: &AdjointFn<'_>) -> Result<RowErrors> {
    let op = op_for(row);
    let shapes = input_shapes(row);
    let mut worst = RowErrors { closed_form: 0.0, finite_difference: 0.0 };
    for _ in 0..trials {
        let x: Vec<ComplexTensor> = shapes.iter().map(|s| polar(rng, s)).collect();
        let refs: Vec<&ComplexTensor> = x.iter().collect();
        let out_shape = op.output_shape(&shapes.iter().map(|s| s.as_slice()).collect::<Vec<_>>())?;
        let len = out_shape.iter().product();
        let c = ComplexTensor::new(out_shape, rng::complex_vec(rng, len))?;

        let got = adjoint(&op, &refs, &c)?;
        if got.len() != x.len() {
            return Err(Error::Shape(format!("{row}: adjoint returned {} cotangents for {} inputs", got.len(), x.len())));
        }
        let expected = closed_form(row, &x, &c);
        let fd = fd_gradients(
            |p| {
                let y = op.forward(&p.iter().collect::<Vec<_>>())?;
                Ok(y.data().iter().zip(c.data()).map(|(g, c)| c64((c.conj() * g).re, 0.0)).sum())
            },
            &x,
            FD_STEP,
        )?;
        for ((g, e), f) in got.iter().zip(&expected).zip(&fd) {
            worst.closed_form = worst.closed_form.max(g.rel_err(e)?);
            worst.finite_difference = worst.finite_difference.max(g.rel_err(f)?);
        }
    }
    Ok(worst)
}

/// One case per row: passes when the closed-form error is at most
/// [`CLOSED_FORM_TOL`] and the finite-difference error at most `tol`.
pub fn verify_table_with(trials: usize, seed: u64, tol: f64, adjoint: &AdjointFn<'_>) -> Report {
    let cases = ROWS
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut rng = rng::derived(seed, i as u64);
            match check_row(row, trials, &mut rng, adjoint) {
                Ok(e) => {
                    let pass = e.closed_form <= CLOSED_FORM_TOL && e.finite_difference <= tol;
                    Case {
                        name: row.to_string(),
                        max_rel_err: e.closed_form.max(e.finite_difference),
                        tolerance: tol,
                        pass,
                        detail: format!(
                            "trials={trials} closed_form_err={:.3e} (tol {CLOSED_FORM_TOL:.0e}) fd_err={:.3e} (tol {tol:.0e})",
                            e.closed_form, e.finite_difference
                        ),
                    }
                }
                Err(err) => Case::error(*row, tol, err),
            }
        })
        .collect();
    Report::new("verify-table", seed, cases)
}

pub fn verify_table(trials: usize, seed: u64, tol: f64) -> Report {
    verify_table_with(trials, seed, tol, &engine_adjoint)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_match_table_examples() {
        let s = |z: C64| ComplexTensor::vector(vec![z]);
        let mul = closed_form("mul", &[s(c64(1.0, 1.0)), s(c64(2.0, 0.0))], &s(c64(1.0, 0.0)));
        assert_eq!((mul[0].data()[0], mul[1].data()[0]), (c64(2.0, 0.0), c64(1.0, -1.0)));
        let abs = closed_form("abs", &[s(c64(3.0, 4.0))], &s(c64(1.0, 0.0)));
        assert!((abs[0].data()[0] - c64(0.6, 0.8)).norm() < 1e-15);
        let inner = closed_form("inner", &[s(c64(1.0, 0.0)), s(c64(0.0, 1.0))], &ComplexTensor::scalar(c64(1.0, 0.0)));
        assert_eq!((inner[0].data()[0], inner[1].data()[0]), (c64(0.0, 1.0), c64(1.0, 0.0)));
    }

    #[test]
    fn every_row_passes() {
        let r = verify_table(3, 1, 1e-5);
        assert_eq!(r.summary.total, 14);
        assert!(r.all_passed(), "{}", r.summary_text());
    }
}
