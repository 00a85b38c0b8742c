//! Backward pass that carries both halves of the Wirtinger cotangent.
//!
//! Every node holds a pair `(first, second)` and every op is differentiated
//! through its dense Wirtinger Jacobians `∂g_i/∂z_j` and `∂g_i/∂z̄_j`, built
//! here from first principles rather than from [`Op::adjoint`]:
//!
//! ```text
//! first_j  = Σ_i first_i·∂g_i/∂z_j  + second_i·conj(∂g_i/∂z̄_j)
//! second_j = Σ_i first_i·∂g_i/∂z̄_j + second_i·conj(∂g_i/∂z_j)
//! ```
//!
//! Seeded with `(1, 1)` at a real loss, the pair at each input is
//! `(2∂F/∂z, 2∂F/∂z̄)`. Nothing here assumes `first = conj(second)`; that
//! relation is measured by [`PairResult::max_conjugate_defect`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ops::Op;
use crate::tape::{loss_value, NodeId, NodeKind, Tape};
use crate::tensor::{c64, dft_matrix, idft_matrix, C64, ComplexTensor, Domain};

#[derive(Debug, Clone, PartialEq)]
pub struct WirtingerPair {
    /// Carries the `ν` position.
    pub first: ComplexTensor,
    /// Carries the `ν̄` position.
    pub second: ComplexTensor,
}

impl WirtingerPair {
    /// `max_i |second_i − conj(first_i)|`.
    pub fn conjugate_defect(&self) -> f64 {
        self.first
            .data()
            .iter()
            .zip(self.second.data())
            .map(|(a, b)| (b - a.conj()).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct PairResult {
    /// Accumulated pair at every node reached by the sweep, before any
    /// real-domain projection.
    pub nodes: BTreeMap<NodeId, WirtingerPair>,
    /// Pairs delivered to leaves (real leaves projected onto the real line).
    pub leaves: BTreeMap<NodeId, WirtingerPair>,
}

impl PairResult {
    pub fn max_conjugate_defect(&self) -> f64 {
        self.nodes.values().map(WirtingerPair::conjugate_defect).fold(0.0, f64::max)
    }

    pub fn leaf(&self, id: NodeId) -> Result<&WirtingerPair> {
        self.leaves.get(&id).ok_or(Error::NotALeaf(id.index()))
    }
}

/// Dense `out_len × in_len` matrix, row-major.
#[derive(Debug, Clone)]
struct Dense {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Dense {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![c64(0.0, 0.0); rows * cols] }
    }

    fn diagonal(values: impl Iterator<Item = C64>, n: usize) -> Self {
        let mut d = Self::zeros(n, n);
        for (i, v) in values.enumerate() {
            d.set(i, i, v);
        }
        d
    }

    fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    fn from_tensor(t: &ComplexTensor) -> Self {
        Self { rows: t.shape()[0], cols: t.shape()[1], data: t.data().to_vec() }
    }
}

/// `(∂g/∂z, ∂g/∂z̄)` with respect to one input.
struct InputJacobian {
    dz: Dense,
    dzbar: Dense,
}

fn holo(dz: Dense) -> InputJacobian {
    let (r, c) = (dz.rows, dz.cols);
    InputJacobian { dz, dzbar: Dense::zeros(r, c) }
}

fn jacobians(op: &Op, inputs: &[&ComplexTensor]) -> Result<Vec<InputJacobian>> {
    let half = c64(0.5, 0.0);
    let one = c64(1.0, 0.0);
    let elementwise = |f: &dyn Fn(C64) -> C64, t: &ComplexTensor| Dense::diagonal(t.data().iter().map(|z| f(*z)), t.len());
    let x = inputs[0];
    let n = x.len();
    Ok(match op {
        Op::Sin => vec![holo(elementwise(&|z| z.cos(), x))],
        Op::Exp => vec![holo(elementwise(&|z| z.exp(), x))],
        Op::Log => vec![holo(elementwise(&|z| one / z, x))],
        Op::Add => vec![holo(elementwise(&|_| one, x)), holo(elementwise(&|_| one, x))],
        Op::Sub => vec![holo(elementwise(&|_| one, x)), holo(elementwise(&|_| -one, x))],
        Op::Neg => vec![holo(elementwise(&|_| -one, x))],
        Op::Mul => vec![holo(Dense::diagonal(inputs[1].data().iter().copied(), n)), holo(Dense::diagonal(x.data().iter().copied(), n))],
        Op::Div => {
            let w = inputs[1];
            vec![
                holo(Dense::diagonal(w.data().iter().map(|w| one / w), n)),
                holo(Dense::diagonal(x.data().iter().zip(w.data()).map(|(z, w)| -z / (w * w)), n)),
            ]
        }
        Op::Conj => vec![InputJacobian { dz: Dense::zeros(n, n), dzbar: elementwise(&|_| one, x) }],
        // Re z = (z + z̄)/2
        Op::Re => vec![InputJacobian { dz: elementwise(&|_| half, x), dzbar: elementwise(&|_| half, x) }],
        // Im z = (z − z̄)/2i
        Op::Im => vec![InputJacobian { dz: elementwise(&|_| c64(0.0, -0.5), x), dzbar: elementwise(&|_| c64(0.0, 0.5), x) }],
        // |z| = (z z̄)^{1/2}
        Op::Abs => {
            if x.data().iter().any(|z| z.norm() == 0.0) {
                return Err(Error::Domain { op: "abs", reason: "Wirtinger derivative undefined at z = 0".into() });
            }
            vec![InputJacobian {
                dz: elementwise(&|z| z.conj() / (2.0 * z.norm()), x),
                dzbar: elementwise(&|z| z / (2.0 * z.norm()), x),
            }]
        }
        Op::Inner => {
            // g = Σ z̄_i w_i
            let w = inputs[1];
            let mut dzbar = Dense::zeros(1, n);
            let mut dw = Dense::zeros(1, n);
            for j in 0..n {
                dzbar.set(0, j, w.data()[j]);
                dw.set(0, j, x.data()[j].conj());
            }
            vec![InputJacobian { dz: Dense::zeros(1, n), dzbar }, holo(dw)]
        }
        Op::Outer => {
            let w = inputs[1];
            let m = w.len();
            let mut dz = Dense::zeros(n * m, n);
            let mut dw = Dense::zeros(n * m, m);
            for i in 0..n {
                for j in 0..m {
                    dz.set(i * m + j, i, w.data()[j]);
                    dw.set(i * m + j, j, x.data()[i]);
                }
            }
            vec![holo(dz), holo(dw)]
        }
        Op::Matmul => {
            let w = inputs[1];
            let (rows, inner) = (x.shape()[0], x.shape()[1]);
            let cols = if w.rank() == 1 { 1 } else { w.shape()[1] };
            let mut dz = Dense::zeros(rows * cols, rows * inner);
            let mut dw = Dense::zeros(rows * cols, inner * cols);
            for i in 0..rows {
                for k in 0..cols {
                    for j in 0..inner {
                        dz.set(i * cols + k, i * inner + j, w.data()[j * cols + k]);
                        dw.set(i * cols + k, j * cols + k, x.data()[i * inner + j]);
                    }
                }
            }
            vec![holo(dz), holo(dw)]
        }
        Op::Dft => vec![holo(Dense::from_tensor(&dft_matrix(n)?))],
        Op::Idft => vec![holo(Dense::from_tensor(&idft_matrix(n)?))],
        Op::Sum => {
            let mut d = Dense::zeros(1, n);
            d.data.fill(one);
            vec![holo(d)]
        }
        Op::ScaleConst(c) => vec![holo(elementwise(&|_| *c, x))],
        // real function of x = (z + z̄)/2: both partials are g'(x)/2
        Op::Relu => {
            let d = elementwise(&|z| if z.re > 0.0 { half } else { c64(0.0, 0.0) }, x);
            vec![InputJacobian { dz: d.clone(), dzbar: d }]
        }
        Op::Diag => {
            let mut d = Dense::zeros(n * n, n);
            for i in 0..n {
                d.set(i * n + i, i, one);
            }
            vec![holo(d)]
        }
        Op::PermuteRows(perm) => {
            let width = n / perm.len().max(1);
            let mut d = Dense::zeros(n, n);
            for (dst, &src) in perm.iter().enumerate() {
                for k in 0..width {
                    d.set(dst * width + k, src * width + k, one);
                }
            }
            vec![holo(d)]
        }
        Op::Scale => {
            let t = inputs[1];
            let s = x.data()[0];
            let mut ds = Dense::zeros(t.len(), 1);
            for i in 0..t.len() {
                ds.set(i, 0, t.data()[i]);
            }
            vec![holo(ds), holo(Dense::diagonal(std::iter::repeat_n(s, t.len()), t.len()))]
        }
    })
}

fn pull_back(jac: &InputJacobian, pair: &WirtingerPair, in_shape: &[usize]) -> Result<WirtingerPair> {
    let (rows, cols) = (jac.dz.rows, jac.dz.cols);
    let (a, b) = (pair.first.data(), pair.second.data());
    let mut first = vec![c64(0.0, 0.0); cols];
    let mut second = vec![c64(0.0, 0.0); cols];
    for i in 0..rows {
        for j in 0..cols {
            let (gz, gzb) = (jac.dz.get(i, j), jac.dzbar.get(i, j));
            first[j] += a[i] * gz + b[i] * gzb.conj();
            second[j] += a[i] * gzb + b[i] * gz.conj();
        }
    }
    Ok(WirtingerPair {
        first: ComplexTensor::new(in_shape.to_vec(), first)?,
        second: ComplexTensor::new(in_shape.to_vec(), second)?,
    })
}

fn add_pair(slot: &mut Option<WirtingerPair>, delta: WirtingerPair) -> Result<()> {
    match slot {
        None => *slot = Some(delta),
        Some(acc) => {
            acc.first = acc.first.add(&delta.first)?;
            acc.second = acc.second.add(&delta.second)?;
        }
    }
    Ok(())
}

/// A real variable `x` sees `dF/dx = ∂F/∂z + ∂F/∂z̄ = (first + second)/2`
/// in both slots.
fn project_real(pair: &WirtingerPair) -> Result<WirtingerPair> {
    let mean = pair.first.add(&pair.second)?.scale(c64(0.5, 0.0));
    let real = ComplexTensor::with_domain(mean.shape().to_vec(), mean.data().iter().map(|z| c64(z.re, 0.0)).collect(), Domain::Real)?;
    Ok(WirtingerPair { first: real.clone(), second: real })
}

/// Runs the conjugate-pair sweep from `output` seeded with `(1, 1)`.
pub fn pair_backward(tape: &Tape, output: NodeId) -> Result<PairResult> {
    loss_value(tape.value(output)?)?;
    let nodes = tape.nodes();
    let mut slots: Vec<Option<WirtingerPair>> = vec![None; output.index() + 1];
    let one = ComplexTensor::scalar(c64(1.0, 0.0));
    slots[output.index()] = Some(WirtingerPair { first: one.clone(), second: one });

    let mut result = PairResult { nodes: BTreeMap::new(), leaves: BTreeMap::new() };
    for idx in (0..=output.index()).rev() {
        let Some(raw) = slots[idx].take() else {
            continue;
        };
        let node = &nodes[idx];
        let id = NodeId::from_index(idx);
        result.nodes.insert(id, raw.clone());
        let pair = if node.value.is_real() { project_real(&raw)? } else { raw };
        match &node.kind {
            NodeKind::Constant => {}
            NodeKind::Leaf => {
                result.leaves.insert(id, pair);
            }
            NodeKind::Op(op) => {
                let inputs: Vec<&ComplexTensor> = node.parents.iter().map(|p| &nodes[p.index()].value).collect();
                let jacs = jacobians(op, &inputs)?;
                for ((parent, jac), input) in node.parents.iter().zip(&jacs).zip(&inputs) {
                    let delta = pull_back(jac, &pair, input.shape())?;
                    add_pair(&mut slots[parent.index()], delta)?;
                }
            }
        }
    }
    for (idx, node) in nodes.iter().enumerate() {
        if node.kind == NodeKind::Leaf {
            let id = NodeId::from_index(idx);
            result.leaves.entry(id).or_insert_with(|| {
                let z = ComplexTensor::zeros(node.value.shape(), node.value.domain());
                WirtingerPair { first: z.clone(), second: z }
            });
        }
    }
    Ok(result)
}
