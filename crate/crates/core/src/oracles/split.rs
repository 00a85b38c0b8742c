//! Split-real backend: complex numbers as `(re, im)` tuples of real scalars
//! on a plain real reverse-mode tape.
//!
//! Complex arithmetic is expanded into real elementary functions, e.g.
//! `z·w = (a_z a_w − b_z b_w, a_z b_w + b_z a_w)`, and `Re`/`Im` become tuple
//! projections with adjoints `ν ↦ (ν, 0)` and `ν ↦ (0, ν)`. The real chain rule
//! then yields `(∂F/∂x, ∂F/∂y)` per input entry.
//!
//! Only the ops the loss corpus needs are expanded. `abs` becomes
//! `hypot(a, b)` and `relu` acts on the real part; transcendental functions
//! report [`Error::Unsupported`].

use crate::error::{Error, Result};
use crate::graph::{Graph, Objective};
use crate::ops::Op;
use crate::tensor::{c64, dft_matrix, idft_matrix, C64, ComplexTensor, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RealId(usize);

#[derive(Debug, Clone, Copy)]
enum RealOp {
    Input,
    Const,
    Add(RealId, RealId),
    Sub(RealId, RealId),
    Mul(RealId, RealId),
    Div(RealId, RealId),
    Neg(RealId),
    Hypot(RealId, RealId),
    Relu(RealId),
}

#[derive(Debug, Default)]
struct RealTape {
    ops: Vec<RealOp>,
    vals: Vec<f64>,
}

impl RealTape {
    fn push(&mut self, op: RealOp, val: f64) -> RealId {
        self.ops.push(op);
        self.vals.push(val);
        RealId(self.ops.len() - 1)
    }

    fn val(&self, id: RealId) -> f64 {
        self.vals[id.0]
    }

    fn input(&mut self, v: f64) -> RealId {
        self.push(RealOp::Input, v)
    }

    fn constant(&mut self, v: f64) -> RealId {
        self.push(RealOp::Const, v)
    }

    fn add(&mut self, a: RealId, b: RealId) -> RealId {
        self.push(RealOp::Add(a, b), self.val(a) + self.val(b))
    }

    fn sub(&mut self, a: RealId, b: RealId) -> RealId {
        self.push(RealOp::Sub(a, b), self.val(a) - self.val(b))
    }

    fn mul(&mut self, a: RealId, b: RealId) -> RealId {
        self.push(RealOp::Mul(a, b), self.val(a) * self.val(b))
    }

    fn div(&mut self, a: RealId, b: RealId) -> Result<RealId> {
        if self.val(b) == 0.0 {
            return Err(Error::Domain { op: "div", reason: "division by zero".into() });
        }
        Ok(self.push(RealOp::Div(a, b), self.val(a) / self.val(b)))
    }

    fn neg(&mut self, a: RealId) -> RealId {
        self.push(RealOp::Neg(a), -self.val(a))
    }

    fn hypot(&mut self, a: RealId, b: RealId) -> RealId {
        self.push(RealOp::Hypot(a, b), self.val(a).hypot(self.val(b)))
    }

    fn relu(&mut self, a: RealId) -> RealId {
        self.push(RealOp::Relu(a), self.val(a).max(0.0))
    }

    /// Classical adjoint sweep seeded with 1 at `out`.
    fn backward(&self, out: RealId) -> Result<Vec<f64>> {
        let mut adj = vec![0.0; out.0 + 1];
        adj[out.0] = 1.0;
        for idx in (0..=out.0).rev() {
            let g = adj[idx];
            if g == 0.0 {
                continue;
            }
            match self.ops[idx] {
                RealOp::Input | RealOp::Const => {}
                RealOp::Add(a, b) => {
                    adj[a.0] += g;
                    adj[b.0] += g;
                }
                RealOp::Sub(a, b) => {
                    adj[a.0] += g;
                    adj[b.0] -= g;
                }
                RealOp::Mul(a, b) => {
                    adj[a.0] += g * self.vals[b.0];
                    adj[b.0] += g * self.vals[a.0];
                }
                RealOp::Div(a, b) => {
                    let d = self.vals[b.0];
                    adj[a.0] += g / d;
                    adj[b.0] -= g * self.vals[a.0] / (d * d);
                }
                RealOp::Neg(a) => adj[a.0] -= g,
                RealOp::Hypot(a, b) => {
                    let r = self.vals[idx];
                    if r == 0.0 {
                        return Err(Error::Domain { op: "abs", reason: "derivative of the modulus at zero".into() });
                    }
                    let q = g / r;
                    adj[a.0] += self.vals[a.0] * q;
                    adj[b.0] += self.vals[b.0] * q;
                }
                RealOp::Relu(a) => {
                    if self.vals[a.0] > 0.0 {
                        adj[a.0] += g;
                    }
                }
            }
        }
        Ok(adj)
    }
}

/// A complex tensor as two parallel tensors of real tape nodes.
#[derive(Debug, Clone)]
struct SplitNode {
    shape: Vec<usize>,
    re: Vec<RealId>,
    im: Vec<RealId>,
    real: bool,
}

/// Per-input gradient from the split backend.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRealValue {
    pub shape: Vec<usize>,
    /// `∂F/∂x` per entry.
    pub re_part: Vec<f64>,
    /// `∂F/∂y` per entry (zero for real inputs).
    pub im_part: Vec<f64>,
}

impl SplitRealValue {
    /// `∂F/∂x + i·∂F/∂y`, tagged real when the input was real.
    pub fn to_complex(&self, domain: Domain) -> Result<ComplexTensor> {
        let data = self.re_part.iter().zip(&self.im_part).map(|(x, y)| c64(*x, *y)).collect();
        ComplexTensor::with_domain(self.shape.clone(), data, domain)
    }
}

#[derive(Debug, Default)]
pub struct SplitGraph {
    tape: RealTape,
    nodes: Vec<SplitNode>,
    inputs: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitVar(usize);

type Pair = (RealId, RealId);

impl SplitGraph {
    pub fn new() -> Self {
        Self::default()
    }

    fn node(&self, v: SplitVar) -> &SplitNode {
        &self.nodes[v.0]
    }

    fn push(&mut self, shape: Vec<usize>, parts: Vec<Pair>, real: bool) -> SplitVar {
        let (re, im) = parts.into_iter().unzip();
        self.nodes.push(SplitNode { shape, re, im, real });
        SplitVar(self.nodes.len() - 1)
    }

    fn entries(&self, v: SplitVar) -> Vec<Pair> {
        let n = self.node(v);
        n.re.iter().copied().zip(n.im.iter().copied()).collect()
    }

    fn cadd(&mut self, a: Pair, b: Pair) -> Pair {
        (self.tape.add(a.0, b.0), self.tape.add(a.1, b.1))
    }

    fn csub(&mut self, a: Pair, b: Pair) -> Pair {
        (self.tape.sub(a.0, b.0), self.tape.sub(a.1, b.1))
    }

    fn cmul(&mut self, a: Pair, b: Pair) -> Pair {
        let ac = self.tape.mul(a.0, b.0);
        let bd = self.tape.mul(a.1, b.1);
        let ad = self.tape.mul(a.0, b.1);
        let bc = self.tape.mul(a.1, b.0);
        (self.tape.sub(ac, bd), self.tape.add(ad, bc))
    }

    /// `conj(a)·b = (a_x b_x + a_y b_y, a_x b_y − a_y b_x)`.
    fn cmul_conj(&mut self, a: Pair, b: Pair) -> Pair {
        let xx = self.tape.mul(a.0, b.0);
        let yy = self.tape.mul(a.1, b.1);
        let xy = self.tape.mul(a.0, b.1);
        let yx = self.tape.mul(a.1, b.0);
        (self.tape.add(xx, yy), self.tape.sub(xy, yx))
    }

    fn cdiv(&mut self, a: Pair, b: Pair) -> Result<Pair> {
        let num = self.cmul_conj(b, a);
        let cc = self.tape.mul(b.0, b.0);
        let dd = self.tape.mul(b.1, b.1);
        let den = self.tape.add(cc, dd);
        Ok((self.tape.div(num.0, den)?, self.tape.div(num.1, den)?))
    }

    fn cconst(&mut self, z: C64) -> Pair {
        (self.tape.constant(z.re), self.tape.constant(z.im))
    }

    fn sum_pairs(&mut self, items: Vec<Pair>) -> Pair {
        let mut iter = items.into_iter();
        match iter.next() {
            Some(first) => iter.fold(first, |acc, p| self.cadd(acc, p)),
            None => self.cconst(c64(0.0, 0.0)),
        }
    }

    /// `M·x` for a constant matrix applied to a vector of pairs.
    fn const_matvec(&mut self, m: &ComplexTensor, x: &[Pair]) -> Vec<Pair> {
        let n = m.shape()[0];
        (0..n)
            .map(|i| {
                let terms: Vec<Pair> = x
                    .iter()
                    .enumerate()
                    .map(|(j, xj)| {
                        let c = self.cconst(m.at(i, j));
                        self.cmul(c, *xj)
                    })
                    .collect();
                self.sum_pairs(terms)
            })
            .collect()
    }

    /// Runs the real sweep from a real scalar `out` and returns
    /// `(∂F/∂x, ∂F/∂y)` for every registered input, in registration order.
    pub fn backward(&self, out: SplitVar) -> Result<Vec<SplitRealValue>> {
        let node = self.node(out);
        if !node.shape.is_empty() {
            return Err(Error::InvalidLoss(format!("loss must be a scalar, got shape {:?}", node.shape)));
        }
        let im = self.tape.val(node.im[0]);
        let re = self.tape.val(node.re[0]);
        if im.abs() > 1e-12 * re.abs().max(1.0) {
            return Err(Error::InvalidLoss(format!("loss value {re}+{im}i is not real")));
        }
        let adj = self.tape.backward(node.re[0])?;
        let read = |id: &RealId| adj.get(id.0).copied().unwrap_or(0.0);
        Ok(self
            .inputs
            .iter()
            .map(|&i| {
                let n = &self.nodes[i];
                SplitRealValue {
                    shape: n.shape.clone(),
                    re_part: n.re.iter().map(read).collect(),
                    im_part: if n.real { vec![0.0; n.re.len()] } else { n.im.iter().map(read).collect() },
                }
            })
            .collect())
    }
}

impl Graph for SplitGraph {
    type Var = SplitVar;

    fn input(&mut self, value: &ComplexTensor) -> Result<SplitVar> {
        let real = value.is_real();
        let parts = value
            .data()
            .iter()
            .map(|z| {
                let re = self.tape.input(z.re);
                let im = if real { self.tape.constant(0.0) } else { self.tape.input(z.im) };
                (re, im)
            })
            .collect();
        let v = self.push(value.shape().to_vec(), parts, real);
        self.inputs.push(v.0);
        Ok(v)
    }

    fn constant(&mut self, value: ComplexTensor) -> Result<SplitVar> {
        let parts = value.data().iter().map(|z| self.cconst(*z)).collect();
        Ok(self.push(value.shape().to_vec(), parts, value.is_real()))
    }

    fn value_of(&self, v: SplitVar) -> Result<ComplexTensor> {
        let n = self.node(v);
        let data = n.re.iter().zip(&n.im).map(|(a, b)| c64(self.tape.val(*a), self.tape.val(*b))).collect();
        ComplexTensor::new(n.shape.clone(), data)
    }

    fn apply(&mut self, op: Op, args: &[SplitVar]) -> Result<SplitVar> {
        let shapes: Vec<&[usize]> = args.iter().map(|a| self.node(*a).shape.as_slice()).collect();
        let out_shape = op.output_shape(&shapes)?;
        let all_real = args.iter().all(|a| self.node(*a).real);
        let a = self.entries(args[0]);
        let b = args.get(1).map(|v| self.entries(*v));
        let (parts, real): (Vec<Pair>, bool) = match &op {
            Op::Add => (a.iter().zip(b.unwrap()).map(|(x, y)| self.cadd(*x, y)).collect(), all_real),
            Op::Sub => (a.iter().zip(b.unwrap()).map(|(x, y)| self.csub(*x, y)).collect(), all_real),
            Op::Mul => (a.iter().zip(b.unwrap()).map(|(x, y)| self.cmul(*x, y)).collect(), all_real),
            Op::Div => {
                let real_divisor = self.node(args[1]).real;
                let mut out = Vec::with_capacity(a.len());
                for (x, y) in a.iter().zip(b.unwrap()) {
                    out.push(if real_divisor {
                        (self.tape.div(x.0, y.0)?, self.tape.div(x.1, y.0)?)
                    } else {
                        self.cdiv(*x, y)?
                    });
                }
                (out, all_real)
            }
            Op::Neg => (a.iter().map(|x| (self.tape.neg(x.0), self.tape.neg(x.1))).collect(), all_real),
            Op::Conj => (a.iter().map(|x| (x.0, self.tape.neg(x.1))).collect(), all_real),
            Op::Re => (a.iter().map(|x| (x.0, self.tape.constant(0.0))).collect(), true),
            Op::Im => (a.iter().map(|x| (x.1, self.tape.constant(0.0))).collect(), true),
            Op::Inner => {
                let terms: Vec<Pair> = a.iter().zip(b.unwrap()).map(|(x, y)| self.cmul_conj(*x, y)).collect();
                (vec![self.sum_pairs(terms)], all_real)
            }
            Op::Outer => {
                let b = b.unwrap();
                let mut out = Vec::with_capacity(a.len() * b.len());
                for x in &a {
                    for y in &b {
                        out.push(self.cmul(*x, *y));
                    }
                }
                (out, all_real)
            }
            Op::Matmul => {
                let b = b.unwrap();
                let (rows, inner) = (shapes[0][0], shapes[0][1]);
                let cols = b.len() / inner;
                let mut out = Vec::with_capacity(rows * cols);
                for i in 0..rows {
                    for k in 0..cols {
                        let terms: Vec<Pair> = (0..inner).map(|j| self.cmul(a[i * inner + j], b[j * cols + k])).collect();
                        out.push(self.sum_pairs(terms));
                    }
                }
                (out, all_real)
            }
            Op::Dft => {
                let m = dft_matrix(a.len())?;
                (self.const_matvec(&m, &a), false)
            }
            Op::Idft => {
                let m = idft_matrix(a.len())?;
                (self.const_matvec(&m, &a), false)
            }
            Op::Sum => (vec![self.sum_pairs(a)], all_real),
            Op::ScaleConst(c) => {
                let mut out = Vec::with_capacity(a.len());
                for x in &a {
                    let k = self.cconst(*c);
                    out.push(self.cmul(k, *x));
                }
                (out, all_real && c.im == 0.0)
            }
            Op::Diag => {
                let n = a.len();
                let mut out = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        out.push(if i == j { a[i] } else { self.cconst(c64(0.0, 0.0)) });
                    }
                }
                (out, all_real)
            }
            Op::PermuteRows(perm) => {
                let width = a.len() / perm.len();
                let out = perm.iter().flat_map(|&src| a[src * width..(src + 1) * width].to_vec()).collect();
                (out, all_real)
            }
            Op::Scale => {
                let s = a[0];
                (b.unwrap().into_iter().map(|y| self.cmul(s, y)).collect(), all_real)
            }
            Op::Abs => {
                let mut out = Vec::with_capacity(a.len());
                for x in &a {
                    out.push((self.tape.hypot(x.0, x.1), self.tape.constant(0.0)));
                }
                (out, true)
            }
            Op::Relu => {
                if !all_real {
                    return Err(Error::Domain { op: "relu", reason: "input must be real-domain".into() });
                }
                (a.iter().map(|x| (self.tape.relu(x.0), self.tape.constant(0.0))).collect(), true)
            }
            Op::Sin | Op::Exp | Op::Log => return Err(Error::Unsupported(op.name())),
        };
        Ok(self.push(out_shape, parts, real))
    }
}

/// `(∂F/∂x, ∂F/∂y)` for every input of `obj` at `point`.
pub fn split_real_backward<O: Objective>(obj: &O, point: &[ComplexTensor]) -> Result<Vec<SplitRealValue>> {
    let mut g = SplitGraph::new();
    let inputs = point.iter().map(|p| g.input(p)).collect::<Result<Vec<_>>>()?;
    let out = obj.build(&mut g, &inputs)?;
    g.backward(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape::Tape;

    #[test]
    fn re_of_product_matches_engine() {
        let z = ComplexTensor::scalar(c64(0.4, -1.1));
        let w = ComplexTensor::scalar(c64(2.0, 0.3));

        let mut sg = SplitGraph::new();
        let (zs, ws) = (sg.input(&z).unwrap(), sg.input(&w).unwrap());
        let p = sg.mul(zs, ws).unwrap();
        let f = sg.re(p).unwrap();
        let split = sg.backward(f).unwrap();

        let mut t = Tape::new();
        let (zt, wt) = (t.leaf(z).unwrap(), t.leaf(w).unwrap());
        let p = t.mul(zt, wt).unwrap();
        let f = t.re(p).unwrap();
        let g = t.backward(f).unwrap();

        let sz = split[0].to_complex(Domain::Complex).unwrap();
        let sw = split[1].to_complex(Domain::Complex).unwrap();
        assert!(sz.rel_err(g.get(zt).unwrap()).unwrap() < 1e-15);
        assert!(sw.rel_err(g.get(wt).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn projections() {
        let mut sg = SplitGraph::new();
        let z = sg.input(&ComplexTensor::scalar(c64(1.0, 2.0))).unwrap();
        let f = sg.re(z).unwrap();
        let out = sg.backward(f).unwrap();
        assert_eq!((out[0].re_part[0], out[0].im_part[0]), (1.0, 0.0));

        let mut sg = SplitGraph::new();
        let z = sg.input(&ComplexTensor::scalar(c64(1.0, 2.0))).unwrap();
        let f = sg.abs2_sum(z).unwrap();
        let out = sg.backward(f).unwrap();
        assert_eq!((out[0].re_part[0], out[0].im_part[0]), (2.0, 4.0));
    }

    #[test]
    fn unsupported_ops_are_reported() {
        let mut sg = SplitGraph::new();
        let z = sg.input(&ComplexTensor::scalar(c64(1.0, 2.0))).unwrap();
        assert_eq!(sg.exp(z), Err(Error::Unsupported("exp")));
    }

    #[test]
    fn complex_loss_rejected() {
        let mut sg = SplitGraph::new();
        let z = sg.input(&ComplexTensor::scalar(c64(1.0, 2.0))).unwrap();
        assert!(matches!(sg.backward(z), Err(Error::InvalidLoss(_))));
    }
}
