//! Elementary functions and their adjoints.
//!
//! Each [`Op`] knows how to evaluate itself and how to map an output
//! cotangent `ν̄` to input cotangents with the rule
//!
//! ```text
//! ḡ_j(ν̄) = Σ_i ( ν_i ∂g_i/∂z̄_j + ν̄_i ∂ḡ_i/∂z̄_j )
//! ```
//!
//! where `ν = conj(ν̄)`. For holomorphic `g` this collapses to
//! `ν̄·conj(∂g/∂z)`, for anti-holomorphic `g` to `ν·∂g/∂z̄`, and for
//! real-valued `g` to `2·Re(ν)·∂g/∂z̄`. With a real seed of 1 at a real loss,
//! chaining these adjoints delivers `2∂F/∂z̄` at every complex input, which is
//! the steepest-descent direction.
//!
//! Elementwise ops (sin, exp, log, add, sub, mul, div, neg, conj, re, im,
//! abs, relu) accept tensors of any rank and require equal shapes for binary
//! forms.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tensor::{c64, dft_matrix, idft_matrix, C64, ComplexTensor, Domain};

/// Which shortcut of the general adjoint an op's rule corresponds to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WirtingerClass {
    /// `∂g/∂z̄ = 0`; adjoint is `ν̄·conj(∂g/∂z)`.
    Holomorphic,
    /// `∂g/∂z = 0`; adjoint is `ν·∂g/∂z̄`.
    AntiHolomorphic,
    /// `g` is real-valued; adjoint is `2·Re(ν)·∂g/∂z̄`.
    RealOutput,
    /// `g` only accepts real input; adjoint is `2·Re(ν·∂g/∂z̄)`.
    RealInput,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpDescriptor {
    pub name: &'static str,
    pub arity: usize,
    pub wirtinger_class: WirtingerClass,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Sin,
    Exp,
    /// Principal branch.
    Log,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Conj,
    Re,
    Im,
    Abs,
    /// `Σ conj(z_i)·w_i`, conjugate-linear in the first slot.
    Inner,
    /// `z_i·w_j`.
    Outer,
    /// `(n×k)·(k×m)` or `(n×k)·(k)`.
    Matmul,
    /// Unnormalized forward transform `Σ_n exp(−2πi·kn/N)·z_n`.
    Dft,
    /// `(1/N)·Σ_k exp(2πi·kn/N)·z_k`.
    Idft,
    /// Sum of all entries to a scalar.
    Sum,
    /// Multiplication by a fixed complex constant.
    ScaleConst(C64),
    /// Real-domain rectifier; subgradient 0 at the kink.
    Relu,
    /// Vector to diagonal matrix.
    Diag,
    /// Row gather: output row `i` is input row `perm[i]`.
    PermuteRows(Arc<[usize]>),
    /// Scalar node times tensor node.
    Scale,
}

fn zero() -> C64 {
    c64(0.0, 0.0)
}

impl Op {
    pub fn descriptor(&self) -> OpDescriptor {
        use WirtingerClass::*;
        let (name, arity, class) = match self {
            Op::Sin => ("sin", 1, Holomorphic),
            Op::Exp => ("exp", 1, Holomorphic),
            Op::Log => ("log", 1, Holomorphic),
            Op::Add => ("add", 2, Holomorphic),
            Op::Sub => ("sub", 2, Holomorphic),
            Op::Mul => ("mul", 2, Holomorphic),
            Op::Div => ("div", 2, Holomorphic),
            Op::Neg => ("neg", 1, Holomorphic),
            Op::Conj => ("conj", 1, AntiHolomorphic),
            Op::Re => ("re", 1, RealOutput),
            Op::Im => ("im", 1, RealOutput),
            Op::Abs => ("abs", 1, RealOutput),
            Op::Inner => ("inner", 2, General),
            Op::Outer => ("outer", 2, Holomorphic),
            Op::Matmul => ("matmul", 2, Holomorphic),
            Op::Dft => ("dft", 1, Holomorphic),
            Op::Idft => ("idft", 1, Holomorphic),
            Op::Sum => ("sum", 1, Holomorphic),
            Op::ScaleConst(_) => ("scale_const", 1, Holomorphic),
            Op::Relu => ("relu", 1, RealInput),
            Op::Diag => ("diag", 1, Holomorphic),
            Op::PermuteRows(_) => ("permute_rows", 1, Holomorphic),
            Op::Scale => ("scale", 2, Holomorphic),
        };
        OpDescriptor { name, arity, wirtinger_class: class }
    }

    pub fn name(&self) -> &'static str {
        self.descriptor().name
    }

    /// Output shape for the given input shapes, or a shape error.
    pub fn output_shape(&self, shapes: &[&[usize]]) -> Result<Vec<usize>> {
        let d = self.descriptor();
        if shapes.len() != d.arity {
            return Err(Error::Shape(format!("{} takes {} inputs, got {}", d.name, d.arity, shapes.len())));
        }
        let bad = |why: String| Err(Error::Shape(format!("{}: {why}", d.name)));
        match self {
            Op::Add | Op::Sub | Op::Mul | Op::Div => {
                if shapes[0] != shapes[1] {
                    return bad(format!("shapes {:?} and {:?} differ", shapes[0], shapes[1]));
                }
                Ok(shapes[0].to_vec())
            }
            Op::Inner => {
                if shapes[0].len() != 1 || shapes[0] != shapes[1] {
                    return bad(format!("needs equal-length vectors, got {:?} and {:?}", shapes[0], shapes[1]));
                }
                Ok(vec![])
            }
            Op::Outer => {
                if shapes[0].len() != 1 || shapes[1].len() != 1 {
                    return bad(format!("needs two vectors, got {:?} and {:?}", shapes[0], shapes[1]));
                }
                Ok(vec![shapes[0][0], shapes[1][0]])
            }
            Op::Matmul => {
                let (a, b) = (shapes[0], shapes[1]);
                if a.len() != 2 || !(b.len() == 1 || b.len() == 2) || a[1] != b[0] {
                    return bad(format!("incompatible shapes {a:?} and {b:?}"));
                }
                Ok(if b.len() == 1 { vec![a[0]] } else { vec![a[0], b[1]] })
            }
            Op::Dft | Op::Idft => {
                if shapes[0].len() != 1 || shapes[0][0] == 0 {
                    return bad(format!("needs a non-empty vector, got {:?}", shapes[0]));
                }
                Ok(shapes[0].to_vec())
            }
            Op::Sum => Ok(vec![]),
            Op::Diag => {
                if shapes[0].len() != 1 {
                    return bad(format!("needs a vector, got {:?}", shapes[0]));
                }
                Ok(vec![shapes[0][0], shapes[0][0]])
            }
            Op::PermuteRows(perm) => {
                if shapes[0].is_empty() || shapes[0][0] != perm.len() {
                    return bad(format!("permutation of length {} cannot gather shape {:?}", perm.len(), shapes[0]));
                }
                Ok(shapes[0].to_vec())
            }
            Op::Scale => {
                if !shapes[0].is_empty() {
                    return bad(format!("first operand must be a scalar, got {:?}", shapes[0]));
                }
                Ok(shapes[1].to_vec())
            }
            _ => Ok(shapes[0].to_vec()),
        }
    }

    /// Evaluates the op. Shapes are checked; domains are propagated (ops with
    /// real output yield `Real` tensors, all-real inputs with real results stay
    /// `Real`).
    pub fn forward(&self, inputs: &[&ComplexTensor]) -> Result<ComplexTensor> {
        let shapes: Vec<&[usize]> = inputs.iter().map(|t| t.shape()).collect();
        let out_shape = self.output_shape(&shapes)?;
        let all_real = inputs.iter().all(|t| t.is_real());
        let data: Vec<C64> = match self {
            Op::Sin => inputs[0].data().iter().map(|z| z.sin()).collect(),
            Op::Exp => inputs[0].data().iter().map(|z| z.exp()).collect(),
            Op::Log => {
                if inputs[0].data().iter().any(|z| *z == zero()) {
                    return Err(Error::Domain { op: "log", reason: "logarithm of zero".into() });
                }
                inputs[0].data().iter().map(|z| z.ln()).collect()
            }
            Op::Add => zip(inputs, |a, b| a + b),
            Op::Sub => zip(inputs, |a, b| a - b),
            Op::Mul => zip(inputs, |a, b| a * b),
            Op::Div => {
                if inputs[1].data().iter().any(|w| *w == zero()) {
                    return Err(Error::Domain { op: "div", reason: "division by zero".into() });
                }
                zip(inputs, div)
            }
            Op::Neg => inputs[0].data().iter().map(|z| -z).collect(),
            Op::Conj => inputs[0].data().iter().map(|z| z.conj()).collect(),
            Op::Re => inputs[0].data().iter().map(|z| c64(z.re, 0.0)).collect(),
            Op::Im => inputs[0].data().iter().map(|z| c64(z.im, 0.0)).collect(),
            Op::Abs => inputs[0].data().iter().map(|z| c64(z.norm(), 0.0)).collect(),
            Op::Inner => {
                vec![inputs[0].data().iter().zip(inputs[1].data()).map(|(z, w)| z.conj() * w).sum()]
            }
            Op::Outer => {
                let (z, w) = (inputs[0].data(), inputs[1].data());
                z.iter().flat_map(|zi| w.iter().map(move |wj| zi * wj)).collect()
            }
            Op::Matmul => inputs[0].matmul(inputs[1])?.into_data(),
            Op::Dft => dft_matrix(out_shape[0])?.matmul(inputs[0])?.into_data(),
            Op::Idft => idft_matrix(out_shape[0])?.matmul(inputs[0])?.into_data(),
            Op::Sum => vec![inputs[0].data().iter().sum()],
            Op::ScaleConst(c) => inputs[0].data().iter().map(|z| z * c).collect(),
            Op::Relu => {
                if !inputs[0].is_real() {
                    return Err(Error::Domain { op: "relu", reason: "input must be real-domain".into() });
                }
                inputs[0].data().iter().map(|x| c64(x.re.max(0.0), 0.0)).collect()
            }
            Op::Diag => ComplexTensor::diagonal(inputs[0].data()).into_data(),
            Op::PermuteRows(perm) => gather_rows(inputs[0], perm).into_data(),
            Op::Scale => {
                let s = inputs[0].data()[0];
                inputs[1].data().iter().map(|t| s * t).collect()
            }
        };
        let out = match self.descriptor().wirtinger_class {
            WirtingerClass::RealOutput | WirtingerClass::RealInput => {
                ComplexTensor::from_parts(out_shape, data, Domain::Real)
            }
            _ if all_real => ComplexTensor::from_parts_inferred(out_shape, data),
            _ => ComplexTensor::from_parts(out_shape, data, Domain::Complex),
        };
        if !out.is_finite() {
            return Err(Error::NonFinite(self.name()));
        }
        Ok(out)
    }

    /// Operands cached at record time for use by [`Op::adjoint`]. Conjugated
    /// where the adjoint consumes the conjugate.
    pub fn save(&self, inputs: &[&ComplexTensor]) -> Vec<ComplexTensor> {
        match self {
            Op::Sin | Op::Exp | Op::Log => vec![inputs[0].conj()],
            Op::Mul | Op::Div | Op::Outer | Op::Matmul | Op::Scale => {
                vec![inputs[0].conj(), inputs[1].conj()]
            }
            Op::Abs | Op::Relu => vec![inputs[0].clone()],
            Op::Inner => vec![inputs[0].clone(), inputs[1].clone()],
            _ => vec![],
        }
    }

    /// Maps the output cotangent to one cotangent per input.
    ///
    /// `saved` comes from [`Op::save`]; `in_shapes` are the input shapes.
    pub fn adjoint(&self, saved: &[ComplexTensor], in_shapes: &[&[usize]], cot: &ComplexTensor) -> Result<Vec<ComplexTensor>> {
        let g = cot;
        let out = match self {
            Op::Sin => vec![g.zip_map(&saved[0], |v, zb| v * zb.cos())?],
            Op::Exp => vec![g.zip_map(&saved[0], |v, zb| v * zb.exp())?],
            Op::Log => vec![g.zip_map(&saved[0], |v, zb| v / zb)?],
            Op::Add => vec![g.clone(), g.clone()],
            Op::Sub => vec![g.clone(), g.map(|v| -v)],
            Op::Neg => vec![g.map(|v| -v)],
            Op::Mul => vec![g.zip_map(&saved[1], |v, wb| v * wb)?, g.zip_map(&saved[0], |v, zb| v * zb)?],
            Op::Div => {
                let (zb, wb) = (&saved[0], &saved[1]);
                let dz = g.zip_map(wb, div)?;
                zb.expect_same_shape(g, "div adjoint")?;
                let data = g.data().iter().zip(zb.data()).zip(wb.data()).map(|((v, zb), wb)| -div(v * zb, wb * wb));
                vec![dz, ComplexTensor::from_parts(g.shape().to_vec(), data.collect(), Domain::Complex)]
            }
            Op::Conj => vec![g.conj()],
            Op::Re => vec![g.map_complex(|v| c64(v.re, 0.0))],
            Op::Im => vec![g.map_complex(|v| c64(0.0, v.re))],
            Op::Abs => {
                let z = &saved[0];
                z.expect_same_shape(g, "abs adjoint")?;
                let mut data = Vec::with_capacity(z.len());
                for (zi, v) in z.data().iter().zip(g.data()) {
                    if *zi == zero() {
                        // z/|z| has no limit at the origin; only a vanishing
                        // incoming cotangent makes the product well defined.
                        if v.re != 0.0 {
                            return Err(Error::Domain {
                                op: "abs",
                                reason: "adjoint of |z| is undefined at z = 0".into(),
                            });
                        }
                        data.push(zero());
                    } else {
                        data.push(zi * (v.re / zi.norm()));
                    }
                }
                vec![ComplexTensor::from_parts(z.shape().to_vec(), data, Domain::Complex)]
            }
            Op::Inner => {
                let v = g.as_scalar()?;
                let (z, w) = (&saved[0], &saved[1]);
                // first slot takes the unconjugated ν
                vec![w.scale(v.conj()).into_complex(), z.scale(v).into_complex()]
            }
            Op::Outer => {
                let (zb, wb) = (&saved[0], &saved[1]);
                let (n, m) = (zb.len(), wb.len());
                let mut dz = vec![zero(); n];
                let mut dw = vec![zero(); m];
                for i in 0..n {
                    for j in 0..m {
                        let v = g.data()[i * m + j];
                        dz[i] += v * wb.data()[j];
                        dw[j] += zb.data()[i] * v;
                    }
                }
                vec![ComplexTensor::vector(dz), ComplexTensor::vector(dw)]
            }
            Op::Matmul => {
                let (zb, wb) = (&saved[0], &saved[1]);
                let mut dz = vec![zero(); zb.len()];
                let mut dw = vec![zero(); wb.len()];
                matmul_adjoint_into(zb, wb, g, &mut dz, &mut dw);
                vec![
                    ComplexTensor::from_parts(zb.shape().to_vec(), dz, Domain::Complex),
                    ComplexTensor::from_parts(wb.shape().to_vec(), dw, Domain::Complex),
                ]
            }
            Op::Dft => {
                let n = g.len();
                vec![dft_matrix(n)?.dagger().matmul(g)?.into_complex()]
            }
            Op::Idft => {
                let n = g.len();
                vec![dft_matrix(n)?.matmul(g)?.scale(c64(1.0 / n as f64, 0.0)).into_complex()]
            }
            Op::Sum => {
                let v = g.as_scalar()?;
                let len = in_shapes[0].iter().product();
                vec![ComplexTensor::from_parts(in_shapes[0].to_vec(), vec![v; len], Domain::Complex)]
            }
            Op::ScaleConst(c) => vec![g.scale(c.conj()).into_complex()],
            Op::Relu => vec![g.zip_map(&saved[0], |v, x| if x.re > 0.0 { v } else { zero() })?],
            Op::Diag => {
                let n = in_shapes[0][0];
                vec![ComplexTensor::vector((0..n).map(|i| g.data()[i * n + i]).collect())]
            }
            Op::PermuteRows(perm) => vec![scatter_rows(g, perm)],
            Op::Scale => {
                let (sb, tb) = (&saved[0], &saved[1]);
                let ds: C64 = g.data().iter().zip(tb.data()).map(|(v, t)| v * t).sum();
                vec![ComplexTensor::scalar(ds), g.scale(sb.data()[0]).into_complex()]
            }
        };
        debug_assert_eq!(out.len(), self.descriptor().arity);
        Ok(out)
    }

    /// Convenience: save the operands and run the adjoint in one call.
    pub fn adjoint_at(&self, inputs: &[&ComplexTensor], cot: &ComplexTensor) -> Result<Vec<ComplexTensor>> {
        let shapes: Vec<&[usize]> = inputs.iter().map(|t| t.shape()).collect();
        let out_shape = self.output_shape(&shapes)?;
        if cot.shape() != out_shape.as_slice() {
            return Err(Error::Shape(format!(
                "{}: cotangent shape {:?} does not match output shape {:?}",
                self.name(),
                cot.shape(),
                out_shape
            )));
        }
        self.adjoint(&self.save(inputs), &shapes, cot)
    }
}

/// Adds the matmul adjoints `dZ += ν̄·W̄ᵀ` and `dW += Z̄ᵀ·ν̄` term by term,
/// walking output entries in reverse order as scalar reverse mode would.
/// `zb` and `wb` are the saved conjugated operands.
pub(crate) fn matmul_adjoint_into(zb: &ComplexTensor, wb: &ComplexTensor, g: &ComplexTensor, dz: &mut [C64], dw: &mut [C64]) {
    let (n, k) = (zb.shape()[0], zb.shape()[1]);
    let m = wb.len() / k;
    for i in (0..n).rev() {
        for col in (0..m).rev() {
            let v = g.data()[i * m + col];
            for j in (0..k).rev() {
                dz[i * k + j] += v * wb.data()[j * m + col];
                dw[j * m + col] += zb.data()[i * k + j] * v;
            }
        }
    }
}

/// Complex quotient; a divisor on the real line divides each part directly.
fn div(a: C64, b: C64) -> C64 {
    if b.im == 0.0 {
        a / b.re
    } else {
        a / b
    }
}

fn zip(inputs: &[&ComplexTensor], f: impl Fn(C64, C64) -> C64) -> Vec<C64> {
    inputs[0].data().iter().zip(inputs[1].data()).map(|(a, b)| f(*a, *b)).collect()
}

fn row_len(t: &ComplexTensor) -> usize {
    if t.rank() == 2 {
        t.shape()[1]
    } else {
        1
    }
}

fn gather_rows(t: &ComplexTensor, perm: &[usize]) -> ComplexTensor {
    let w = row_len(t);
    let mut data = Vec::with_capacity(t.len());
    for &src in perm {
        data.extend_from_slice(&t.data()[src * w..(src + 1) * w]);
    }
    ComplexTensor::from_parts(t.shape().to_vec(), data, t.domain())
}

fn scatter_rows(g: &ComplexTensor, perm: &[usize]) -> ComplexTensor {
    let w = row_len(g);
    let mut data = vec![zero(); g.len()];
    for (dst, &src) in perm.iter().enumerate() {
        for k in 0..w {
            data[src * w + k] += g.data()[dst * w + k];
        }
    }
    ComplexTensor::from_parts(g.shape().to_vec(), data, Domain::Complex)
}

/// Checks that `perm` is a bijection on `0..perm.len()`.
pub fn validate_permutation(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidInput(format!("{perm:?} is not a permutation")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn s(re: f64, im: f64) -> ComplexTensor {
        ComplexTensor::scalar(c64(re, im))
    }

    fn adj(op: Op, inputs: &[&ComplexTensor], cot: C64) -> Vec<C64> {
        let shapes: Vec<&[usize]> = inputs.iter().map(|t| t.shape()).collect();
        let out_shape = op.output_shape(&shapes).unwrap();
        let len: usize = out_shape.iter().product();
        let cot = ComplexTensor::new(out_shape, vec![cot; len]).unwrap();
        op.adjoint_at(inputs, &cot).unwrap().into_iter().map(|t| t.data()[0]).collect()
    }

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() <= 1e-14 * b.norm().max(1.0)
    }

    #[test]
    fn sin_examples() {
        assert_eq!(Op::Sin.forward(&[&s(0.0, 0.0)]).unwrap().data()[0], c64(0.0, 0.0));
        assert!(close(adj(Op::Sin, &[&s(0.0, 0.0)], c64(1.0, 0.0))[0], c64(1.0, 0.0)));
        let at_i = adj(Op::Sin, &[&s(0.0, 1.0)], c64(1.0, 0.0))[0];
        assert!(close(at_i, c64(1f64.cosh(), 0.0)));
        assert!((at_i.re - 1.5430806348152437).abs() < 1e-15);
    }

    #[test]
    fn exp_log_examples() {
        let e = Op::Exp.forward(&[&s(0.0, std::f64::consts::PI)]).unwrap().data()[0];
        assert!((e - c64(-1.0, 0.0)).norm() <= 1e-15);
        assert!(close(adj(Op::Log, &[&s(2.0, 0.0)], c64(1.0, 0.0))[0], c64(0.5, 0.0)));
        assert!(close(adj(Op::Exp, &[&s(0.0, 0.0)], c64(1.0, 1.0))[0], c64(1.0, 1.0)));
        assert!(matches!(Op::Log.forward(&[&s(0.0, 0.0)]), Err(Error::Domain { op: "log", .. })));
    }

    #[test]
    fn arithmetic_examples() {
        let m = adj(Op::Mul, &[&s(1.0, 1.0), &s(2.0, 0.0)], c64(1.0, 0.0));
        assert_eq!(m, vec![c64(2.0, 0.0), c64(1.0, -1.0)]);
        let a = adj(Op::Add, &[&s(0.3, 0.1), &s(-2.0, 4.0)], c64(3.0, -1.0));
        assert_eq!(a, vec![c64(3.0, -1.0), c64(3.0, -1.0)]);
        let d = adj(Op::Div, &[&s(1.0, 0.0), &s(2.0, 0.0)], c64(1.0, 0.0));
        assert_eq!(d, vec![c64(0.5, 0.0), c64(-0.25, 0.0)]);
        assert!(matches!(Op::Div.forward(&[&s(1.0, 0.0), &s(0.0, 0.0)]), Err(Error::Domain { op: "div", .. })));
        let fw = Op::Mul.forward(&[&s(1.0, 1.0), &s(2.0, 0.0)]).unwrap();
        assert_eq!(fw.data()[0], c64(2.0, 2.0));
    }

    #[test]
    fn conj_and_real_output_examples() {
        assert_eq!(adj(Op::Conj, &[&s(0.4, 0.2)], c64(0.0, 1.0))[0], c64(0.0, -1.0));
        assert_eq!(adj(Op::Conj, &[&s(0.4, 0.2)], c64(5.0, 0.0))[0], c64(5.0, 0.0));
        assert_eq!(adj(Op::Im, &[&s(1.0, 1.0)], c64(2.0, 3.0))[0], c64(0.0, 2.0));
        assert!(close(adj(Op::Abs, &[&s(3.0, 4.0)], c64(1.0, 0.0))[0], c64(0.6, 0.8)));
        assert_eq!(adj(Op::Re, &[&s(1.0, 1.0)], c64(0.0, 1.0))[0], c64(0.0, 0.0));
        let out = Op::Abs.forward(&[&s(3.0, 4.0)]).unwrap();
        assert!(out.is_real());
    }

    #[test]
    fn abs_adjoint_strict_at_origin() {
        let cot = ComplexTensor::scalar(c64(1.0, 0.0));
        assert!(matches!(Op::Abs.adjoint_at(&[&s(0.0, 0.0)], &cot), Err(Error::Domain { op: "abs", .. })));
        let silent = ComplexTensor::scalar(c64(0.0, 0.0));
        assert_eq!(Op::Abs.adjoint_at(&[&s(0.0, 0.0)], &silent).unwrap()[0].data()[0], c64(0.0, 0.0));
    }

    #[test]
    fn inner_slot_asymmetry() {
        let z = ComplexTensor::vector(vec![c64(1.0, 0.0)]);
        let w = ComplexTensor::vector(vec![c64(0.0, 1.0)]);
        let g = adj(Op::Inner, &[&z, &w], c64(1.0, 0.0));
        assert_eq!(g, vec![c64(0.0, 1.0), c64(1.0, 0.0)]);
        // with a complex cotangent the first slot sees conj(ν̄)
        let g = adj(Op::Inner, &[&z, &w], c64(0.0, 1.0));
        assert_eq!(g, vec![c64(1.0, 0.0), c64(0.0, 1.0)]);

        let e1 = ComplexTensor::vector(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
        assert_eq!(Op::Inner.forward(&[&e1, &e1]).unwrap().data()[0], c64(1.0, 0.0));
        let short = ComplexTensor::vector(vec![c64(1.0, 0.0)]);
        assert!(matches!(Op::Inner.forward(&[&e1, &short]), Err(Error::Shape(_))));
    }

    #[test]
    fn outer_examples() {
        let z = ComplexTensor::vector(vec![c64(2.0, 0.0)]);
        let w = ComplexTensor::vector(vec![c64(0.0, 3.0)]);
        assert_eq!(adj(Op::Outer, &[&z, &w], c64(1.0, 0.0)), vec![c64(0.0, -3.0), c64(2.0, 0.0)]);
        let zero3 = ComplexTensor::vector(vec![c64(0.0, 0.0); 3]);
        let w2 = ComplexTensor::vector(vec![c64(1.0, 2.0), c64(3.0, -1.0)]);
        let out = Op::Outer.forward(&[&zero3, &w2]).unwrap();
        assert_eq!(out.shape(), &[3, 2]);
        assert!(out.data().iter().all(|x| *x == c64(0.0, 0.0)));
    }

    #[test]
    fn matmul_identity_and_scalar_consistency() {
        let z = ComplexTensor::from_rows(vec![vec![c64(1.0, 2.0), c64(0.5, -1.0)], vec![c64(0.0, 1.0), c64(3.0, 0.0)]])
            .unwrap();
        let eye = ComplexTensor::identity(2);
        let g = ComplexTensor::from_rows(vec![vec![c64(0.1, 0.2), c64(-1.0, 0.0)], vec![c64(2.0, -2.0), c64(0.0, 0.3)]])
            .unwrap();
        let out = Op::Matmul.adjoint_at(&[&z, &eye], &g).unwrap();
        assert_eq!(out[0].data(), g.data());

        let a = ComplexTensor::matrix(1, 1, vec![c64(1.0, 1.0)]).unwrap();
        let b = ComplexTensor::matrix(1, 1, vec![c64(2.0, -0.5)]).unwrap();
        let cot = ComplexTensor::matrix(1, 1, vec![c64(0.7, 0.3)]).unwrap();
        let mm = Op::Matmul.adjoint_at(&[&a, &b], &cot).unwrap();
        let sm = adj(Op::Mul, &[&s(1.0, 1.0), &s(2.0, -0.5)], c64(0.7, 0.3));
        assert_eq!(mm[0].data()[0], sm[0]);
        assert_eq!(mm[1].data()[0], sm[1]);

        let wide = ComplexTensor::zeros(&[2, 3], Domain::Complex);
        let tall = ComplexTensor::zeros(&[4, 2], Domain::Complex);
        assert_eq!(Op::Matmul.output_shape(&[&[2, 3], &[3, 4]]).unwrap(), vec![2, 4]);
        assert!(Op::Matmul.forward(&[&wide, &tall]).is_err());
    }

    #[test]
    fn dft_examples() {
        let mut delta = vec![c64(0.0, 0.0); 5];
        delta[0] = c64(1.0, 0.0);
        let out = Op::Dft.forward(&[&ComplexTensor::vector(delta)]).unwrap();
        assert!(out.data().iter().all(|x| (*x - c64(1.0, 0.0)).norm() <= 1e-15));

        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        let z = ComplexTensor::vector((0..8).map(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect());
        let back = Op::Idft.forward(&[&Op::Dft.forward(&[&z]).unwrap()]).unwrap();
        assert!(back.rel_err(&z).unwrap() <= 1e-12);
    }

    #[test]
    fn plumbing_examples() {
        let v = ComplexTensor::vector(vec![c64(1.0, 0.0), c64(2.0, 1.0), c64(0.0, -1.0)]);
        let g = Op::Sum.adjoint_at(&[&v], &s(0.5, -2.0)).unwrap();
        assert!(g[0].data().iter().all(|x| *x == c64(0.5, -2.0)));

        let neg = ComplexTensor::real_scalar(-1.0);
        assert_eq!(Op::Relu.forward(&[&neg]).unwrap().data()[0], c64(0.0, 0.0));
        assert_eq!(Op::Relu.adjoint_at(&[&neg], &s(1.0, 0.0)).unwrap()[0].data()[0], c64(0.0, 0.0));
        assert!(matches!(Op::Relu.forward(&[&s(1.0, 1.0)]), Err(Error::Domain { op: "relu", .. })));

        let sc = adj(Op::ScaleConst(c64(0.0, 2.0)), &[&s(0.3, 0.3)], c64(1.0, 0.0));
        assert_eq!(sc[0], c64(0.0, -2.0));
    }

    #[test]
    fn permute_rows_round_trip() {
        let perm: Arc<[usize]> = Arc::from(vec![2, 0, 1]);
        let v = ComplexTensor::vector(vec![c64(1.0, 0.0), c64(2.0, 0.0), c64(3.0, 0.0)]);
        let out = Op::PermuteRows(perm.clone()).forward(&[&v]).unwrap();
        assert_eq!(out.data(), &[c64(3.0, 0.0), c64(1.0, 0.0), c64(2.0, 0.0)]);
        let back = Op::PermuteRows(perm).adjoint_at(&[&v], &out).unwrap();
        assert_eq!(back[0].data(), v.data());
        assert!(validate_permutation(&[0, 0, 1]).is_err());
        assert!(validate_permutation(&[1, 2, 0]).is_ok());
    }

    #[test]
    fn domain_propagation() {
        let x = ComplexTensor::real_scalar(-2.0);
        assert!(Op::Sin.forward(&[&x]).unwrap().is_real());
        // principal log of a negative real leaves the real line
        assert!(!Op::Log.forward(&[&x]).unwrap().is_real());
        assert!(!Op::Mul.forward(&[&x, &s(1.0, 0.0)]).unwrap().is_real());
    }
}
