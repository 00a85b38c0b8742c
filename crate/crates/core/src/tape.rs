//! Define-by-run tape and the reverse sweep.
//!
//! Recording an op evaluates it immediately and appends a [`TapeNode`], so
//! node indices are a topological order of the graph. [`Tape::backward`]
//! seeds the (real, scalar) output with cotangent `1`, visits nodes from the
//! output down to index 0 and adds each op's adjoint into its parents'
//! cotangents.
//!
//! Nodes whose value is real-domain have their accumulated cotangent
//! projected onto its real part before it is propagated further. For a real
//! variable `x` the component of `2∂F/∂x̄` along the imaginary axis has no
//! meaning, and dropping it makes an all-real graph reproduce the classical
//! real chain rule exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ops::{matmul_adjoint_into, Op};
use crate::tensor::{c64, C64, ComplexTensor, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }

    pub(crate) fn from_index(idx: usize) -> Self {
        Self(idx)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// Input variable; receives a gradient.
    Leaf,
    /// Fixed data; never receives a gradient.
    Constant,
    Op(Op),
}

#[derive(Debug, Clone)]
pub struct TapeNode {
    pub kind: NodeKind,
    pub parents: Vec<NodeId>,
    pub value: ComplexTensor,
    /// Operands cached by [`Op::save`] for the adjoint.
    pub saved: Vec<ComplexTensor>,
}

/// Accumulated adjoint of a node, same shape as the node's value.
pub type Cotangent = ComplexTensor;

#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<TapeNode>,
}

/// Leaf cotangents produced by [`Tape::backward`].
///
/// Complex leaves hold `2∂F/∂z̄`; real leaves hold `∂F/∂x`.
#[derive(Debug, Clone)]
pub struct Gradients {
    by_leaf: BTreeMap<NodeId, Cotangent>,
    tape_len: usize,
}

impl Gradients {
    pub fn get(&self, leaf: NodeId) -> Result<&Cotangent> {
        match self.by_leaf.get(&leaf) {
            Some(g) => Ok(g),
            None if leaf.0 < self.tape_len => Err(Error::NotALeaf(leaf.0)),
            None => Err(Error::UnknownNode(leaf.0)),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &Cotangent)> {
        self.by_leaf.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.by_leaf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_leaf.is_empty()
    }
}

/// The cotangent of `leaf`; a zero tensor when the leaf does not reach the output.
pub fn gradient_of(result: &Gradients, leaf: NodeId) -> Result<ComplexTensor> {
    result.get(leaf).cloned()
}

/// `|Im| ≤ 1e−12·max(1, |Re|)`.
pub fn is_real_loss(value: C64) -> bool {
    value.im.abs() <= 1e-12 * value.re.abs().max(1.0)
}

/// Checks that a node value can serve as a loss and returns its real part.
pub fn loss_value(value: &ComplexTensor) -> Result<f64> {
    if value.rank() != 0 {
        return Err(Error::InvalidLoss(format!("loss must be a scalar, got shape {:?}", value.shape())));
    }
    let v = value.data()[0];
    if !is_real_loss(v) {
        return Err(Error::InvalidLoss(format!("loss value {v} is not real")));
    }
    Ok(v.re)
}

/// Adds `delta` into the lazily created slot.
pub(crate) fn accumulate(slot: &mut Option<ComplexTensor>, delta: ComplexTensor) -> Result<()> {
    match slot {
        None => *slot = Some(delta),
        Some(acc) => *acc = acc.add(&delta)?,
    }
    Ok(())
}

fn take_or_zeros(slot: &mut Option<ComplexTensor>, shape: &[usize]) -> Vec<C64> {
    match slot.take() {
        Some(t) => t.into_data(),
        None => vec![c64(0.0, 0.0); shape.iter().product()],
    }
}

/// Real part when `domain` is real, unchanged otherwise.
pub(crate) fn project(cot: ComplexTensor, domain: Domain) -> ComplexTensor {
    match domain {
        Domain::Real if !cot.is_real() => cot.re(),
        _ => cot,
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[TapeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&TapeNode> {
        self.nodes.get(id.0).ok_or(Error::UnknownNode(id.0))
    }

    pub fn value(&self, id: NodeId) -> Result<&ComplexTensor> {
        Ok(&self.node(id)?.value)
    }

    fn push(&mut self, node: TapeNode) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    /// Registers an input variable.
    pub fn leaf(&mut self, value: ComplexTensor) -> Result<NodeId> {
        if !value.is_finite() {
            return Err(Error::NonFinite("leaf"));
        }
        Ok(self.push(TapeNode { kind: NodeKind::Leaf, parents: vec![], value, saved: vec![] }))
    }

    pub fn constant(&mut self, value: ComplexTensor) -> Result<NodeId> {
        if !value.is_finite() {
            return Err(Error::NonFinite("constant"));
        }
        Ok(self.push(TapeNode { kind: NodeKind::Constant, parents: vec![], value, saved: vec![] }))
    }

    /// Evaluates `op` on the parents' values and appends the result.
    pub fn record(&mut self, op: Op, parents: &[NodeId]) -> Result<NodeId> {
        let inputs = parents.iter().map(|p| self.value(*p)).collect::<Result<Vec<_>>>()?;
        let value = op.forward(&inputs)?;
        let saved = op.save(&inputs);
        Ok(self.push(TapeNode { kind: NodeKind::Op(op), parents: parents.to_vec(), value, saved }))
    }

    /// Runs the reverse sweep from `output` with seed `1`.
    pub fn backward(&self, output: NodeId) -> Result<Gradients> {
        let out = self.node(output)?;
        loss_value(&out.value)?;

        let mut cots: Vec<Option<ComplexTensor>> = vec![None; output.0 + 1];
        cots[output.0] = Some(ComplexTensor::real_scalar(1.0));
        let mut by_leaf = BTreeMap::new();

        for idx in (0..=output.0).rev() {
            let node = &self.nodes[idx];
            let Some(cot) = cots[idx].take() else {
                continue;
            };
            let cot = project(cot, node.value.domain());
            match &node.kind {
                NodeKind::Constant => {}
                NodeKind::Leaf => {
                    by_leaf.insert(NodeId(idx), cot);
                }
                NodeKind::Op(Op::Matmul) if node.parents[0] != node.parents[1] => {
                    let (zp, wp) = (node.parents[0].0, node.parents[1].0);
                    let mut dz = take_or_zeros(&mut cots[zp], self.nodes[zp].value.shape());
                    let mut dw = take_or_zeros(&mut cots[wp], self.nodes[wp].value.shape());
                    matmul_adjoint_into(&node.saved[0], &node.saved[1], &cot, &mut dz, &mut dw);
                    cots[zp] = Some(ComplexTensor::from_parts(self.nodes[zp].value.shape().to_vec(), dz, Domain::Complex));
                    cots[wp] = Some(ComplexTensor::from_parts(self.nodes[wp].value.shape().to_vec(), dw, Domain::Complex));
                }
                NodeKind::Op(op) => {
                    let shapes: Vec<&[usize]> =
                        node.parents.iter().map(|p| self.nodes[p.0].value.shape()).collect();
                    let grads = op.adjoint(&node.saved, &shapes, &cot)?;
                    for (parent, g) in node.parents.iter().zip(grads) {
                        accumulate(&mut cots[parent.0], g)?;
                    }
                }
            }
        }

        for (idx, node) in self.nodes.iter().enumerate() {
            if node.kind == NodeKind::Leaf {
                by_leaf
                    .entry(NodeId(idx))
                    .or_insert_with(|| ComplexTensor::zeros(node.value.shape(), node.value.domain()));
            }
        }
        Ok(Gradients { by_leaf, tape_len: self.nodes.len() })
    }
}

macro_rules! unary {
    ($($name:ident => $op:expr),* $(,)?) => {
        impl Tape {
            $(pub fn $name(&mut self, x: NodeId) -> Result<NodeId> {
                self.record($op, &[x])
            })*
        }
    };
}

macro_rules! binary {
    ($($name:ident => $op:expr),* $(,)?) => {
        impl Tape {
            $(pub fn $name(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
                self.record($op, &[a, b])
            })*
        }
    };
}

unary! {
    sin => Op::Sin,
    exp => Op::Exp,
    log => Op::Log,
    neg => Op::Neg,
    conj => Op::Conj,
    re => Op::Re,
    im => Op::Im,
    abs => Op::Abs,
    dft => Op::Dft,
    idft => Op::Idft,
    sum => Op::Sum,
    relu => Op::Relu,
    diag => Op::Diag,
}

binary! {
    add => Op::Add,
    sub => Op::Sub,
    mul => Op::Mul,
    div => Op::Div,
    inner => Op::Inner,
    outer => Op::Outer,
    matmul => Op::Matmul,
    scale => Op::Scale,
}

impl Tape {
    pub fn scale_const(&mut self, x: NodeId, c: C64) -> Result<NodeId> {
        self.record(Op::ScaleConst(c), &[x])
    }

    pub fn permute_rows(&mut self, x: NodeId, perm: &[usize]) -> Result<NodeId> {
        crate::ops::validate_permutation(perm)?;
        self.record(Op::PermuteRows(Arc::from(perm)), &[x])
    }

    /// `Σ |x_i|²` as a real scalar.
    pub fn abs2_sum(&mut self, x: NodeId) -> Result<NodeId> {
        let xc = self.conj(x)?;
        let p = self.mul(xc, x)?;
        let r = self.re(p)?;
        self.sum(r)
    }

    pub fn real_scalar_constant(&mut self, x: f64) -> Result<NodeId> {
        self.constant(ComplexTensor::scalar(c64(x, 0.0)).re())
    }
}
