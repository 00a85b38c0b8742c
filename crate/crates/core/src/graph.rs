//! Backend-agnostic graph building.
//!
//! Losses are written once against [`Graph`] and can then be evaluated and
//! differentiated by the main [`Tape`] or by the split-real oracle backend.

use crate::error::Result;
use crate::ops::Op;
use crate::tape::{NodeId, Tape};
use crate::tensor::{c64, C64, ComplexTensor};

pub trait Graph {
    type Var: Copy;

    /// Registers an input variable (a gradient is wanted for it).
    fn input(&mut self, value: &ComplexTensor) -> Result<Self::Var>;

    fn constant(&mut self, value: ComplexTensor) -> Result<Self::Var>;

    fn apply(&mut self, op: Op, args: &[Self::Var]) -> Result<Self::Var>;

    /// Current forward value of a variable.
    fn value_of(&self, v: Self::Var) -> Result<ComplexTensor>;

    fn add(&mut self, a: Self::Var, b: Self::Var) -> Result<Self::Var> {
        self.apply(Op::Add, &[a, b])
    }

    fn sub(&mut self, a: Self::Var, b: Self::Var) -> Result<Self::Var> {
        self.apply(Op::Sub, &[a, b])
    }

    fn mul(&mut self, a: Self::Var, b: Self::Var) -> Result<Self::Var> {
        self.apply(Op::Mul, &[a, b])
    }

    fn div(&mut self, a: Self::Var, b: Self::Var) -> Result<Self::Var> {
        self.apply(Op::Div, &[a, b])
    }

    fn conj(&mut self, a: Self::Var) -> Result<Self::Var> {
        self.apply(Op::Conj, &[a])
    }

    fn re(&mut self, a: Self::Var) -> Result<Self::Var> {
        self.apply(Op::Re, &[a])
    }

    fn abs(&mut self, a: Self::Var) -> Result<Self::Var> {
        self.apply(Op::Abs, &[a])
    }

    fn exp(&mut self, a: Self::Var) -> Result<Self::Var> {
        self.apply(Op::Exp, &[a])
    }

    fn relu(&mut self, a: Self::Var) -> Result<Self::Var> {
        self.apply(Op::Relu, &[a])
    }

    fn sum(&mut self, a: Self::Var) -> Result<Self::Var> {
        self.apply(Op::Sum, &[a])
    }

    fn inner(&mut self, a: Self::Var, b: Self::Var) -> Result<Self::Var> {
        self.apply(Op::Inner, &[a, b])
    }

    fn outer(&mut self, a: Self::Var, b: Self::Var) -> Result<Self::Var> {
        self.apply(Op::Outer, &[a, b])
    }

    fn matmul(&mut self, a: Self::Var, b: Self::Var) -> Result<Self::Var> {
        self.apply(Op::Matmul, &[a, b])
    }

    fn dft(&mut self, a: Self::Var) -> Result<Self::Var> {
        self.apply(Op::Dft, &[a])
    }

    fn idft(&mut self, a: Self::Var) -> Result<Self::Var> {
        self.apply(Op::Idft, &[a])
    }

    fn diag(&mut self, a: Self::Var) -> Result<Self::Var> {
        self.apply(Op::Diag, &[a])
    }

    fn scale(&mut self, s: Self::Var, t: Self::Var) -> Result<Self::Var> {
        self.apply(Op::Scale, &[s, t])
    }

    fn scale_const(&mut self, a: Self::Var, c: C64) -> Result<Self::Var> {
        self.apply(Op::ScaleConst(c), &[a])
    }

    fn permute_rows(&mut self, a: Self::Var, perm: &[usize]) -> Result<Self::Var> {
        crate::ops::validate_permutation(perm)?;
        self.apply(Op::PermuteRows(perm.into()), &[a])
    }

    /// `Σ |a_i|²`, built from conj, mul, re and sum.
    fn abs2_sum(&mut self, a: Self::Var) -> Result<Self::Var> {
        let ac = self.conj(a)?;
        let p = self.mul(ac, a)?;
        let r = self.re(p)?;
        self.sum(r)
    }

    /// `Re⟨a, b⟩`.
    fn re_inner(&mut self, a: Self::Var, b: Self::Var) -> Result<Self::Var> {
        let p = self.inner(a, b)?;
        self.re(p)
    }

    fn real_constant(&mut self, x: f64) -> Result<Self::Var> {
        self.constant(ComplexTensor::real_scalar(x))
    }

    fn complex_constant(&mut self, z: C64) -> Result<Self::Var> {
        if z.im == 0.0 {
            self.real_constant(z.re)
        } else {
            self.constant(ComplexTensor::scalar(c64(z.re, z.im)))
        }
    }
}

impl Graph for Tape {
    type Var = NodeId;

    fn input(&mut self, value: &ComplexTensor) -> Result<NodeId> {
        self.leaf(value.clone())
    }

    fn constant(&mut self, value: ComplexTensor) -> Result<NodeId> {
        Tape::constant(self, value)
    }

    fn apply(&mut self, op: Op, args: &[NodeId]) -> Result<NodeId> {
        self.record(op, args)
    }

    fn value_of(&self, v: NodeId) -> Result<ComplexTensor> {
        self.value(v).cloned()
    }
}

/// A real-valued function of a list of tensors, expressed as a graph.
pub trait Objective {
    /// The variables the function is differentiated with respect to, in a
    /// fixed order, at the objective's reference point.
    fn point(&self) -> &[ComplexTensor];

    /// Builds the scalar loss from input variables that hold the values of
    /// some point with the same shapes as [`Objective::point`].
    fn build<G: Graph>(&self, g: &mut G, inputs: &[G::Var]) -> Result<G::Var>;
}

/// Records `obj` at `point` on a fresh tape; returns the tape, the input ids and the loss id.
pub fn record_objective<O: Objective + ?Sized>(obj: &O, point: &[ComplexTensor]) -> Result<(Tape, Vec<NodeId>, NodeId)> {
    let mut tape = Tape::new();
    let inputs = point.iter().map(|p| tape.leaf(p.clone())).collect::<Result<Vec<_>>>()?;
    let out = obj.build(&mut tape, &inputs)?;
    Ok((tape, inputs, out))
}

/// Loss value (possibly with an imaginary residue) at `point`.
pub fn evaluate<O: Objective + ?Sized>(obj: &O, point: &[ComplexTensor]) -> Result<C64> {
    let (tape, _, out) = record_objective(obj, point)?;
    tape.value(out)?.as_scalar()
}

/// Loss and engine gradient (one cotangent per input) at `point`.
pub fn value_and_grad<O: Objective + ?Sized>(obj: &O, point: &[ComplexTensor]) -> Result<(f64, Vec<ComplexTensor>)> {
    let (tape, inputs, out) = record_objective(obj, point)?;
    let value = crate::tape::loss_value(tape.value(out)?)?;
    let grads = tape.backward(out)?;
    let per_input = inputs.iter().map(|id| crate::tape::gradient_of(&grads, *id)).collect::<Result<Vec<_>>>()?;
    Ok((value, per_input))
}
