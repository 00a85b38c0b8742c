//! Python bindings: tensors, the tape, the unitary parametrization, the
//! optimizers and the check commands.
//!
//! Tape nodes are exposed as integers. Reports from the check commands are
//! returned as JSON strings.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use cad_cli::{commands, table, DemoGdOptions, DemoUrnnOptions};
use cad_core::corpus::LossId;
use cad_core::tensor::C64;
use cad_core::{ComplexTensor, Domain, NodeId, Op, Tape, UnitaryParams};

fn err(e: cad_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A dense complex tensor of rank 0, 1 or 2.
#[pyclass(name = "Tensor", module = "complex_ad", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTensor(ComplexTensor);

#[pymethods]
impl PyTensor {
    /// Complex-domain tensor; `shape` defaults to a vector.
    #[new]
    #[pyo3(signature = (data, shape=None))]
    fn new(data: Vec<C64>, shape: Option<Vec<usize>>) -> PyResult<Self> {
        let shape = shape.unwrap_or_else(|| vec![data.len()]);
        ComplexTensor::new(shape, data).map(Self).map_err(err)
    }

    /// Real-domain tensor.
    #[staticmethod]
    #[pyo3(signature = (data, shape=None))]
    fn real(data: Vec<f64>, shape: Option<Vec<usize>>) -> PyResult<Self> {
        let shape = shape.unwrap_or_else(|| vec![data.len()]);
        ComplexTensor::real(shape, data).map(Self).map_err(err)
    }

    #[staticmethod]
    fn scalar(z: C64) -> Self {
        Self(ComplexTensor::scalar(z))
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        Self(ComplexTensor::identity(n))
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.0.shape().to_vec()
    }

    #[getter]
    fn data(&self) -> Vec<C64> {
        self.0.data().to_vec()
    }

    #[getter]
    fn is_real(&self) -> bool {
        self.0.domain() == Domain::Real
    }

    fn dagger(&self) -> Self {
        Self(self.0.dagger())
    }

    fn matmul(&self, other: &PyTensor) -> PyResult<Self> {
        self.0.matmul(&other.0).map(Self).map_err(err)
    }

    /// `max|a − b| / max(1, max|b|)` against `reference`.
    fn rel_err(&self, reference: &PyTensor) -> PyResult<f64> {
        self.0.rel_err(&reference.0).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        let domain = if self.is_real() { "real" } else { "complex" };
        format!("Tensor(shape={:?}, domain={domain}, data={:?})", self.0.shape(), self.0.data())
    }
}

/// Define-by-run tape. Every method that adds a node returns its index.
#[pyclass(name = "Tape", module = "complex_ad")]
#[derive(Default)]
struct PyTape {
    tape: Tape,
    nodes: Vec<NodeId>,
}

impl PyTape {
    fn node(&self, idx: usize) -> PyResult<NodeId> {
        self.nodes.get(idx).copied().ok_or_else(|| PyValueError::new_err(format!("unknown node {idx}")))
    }

    fn push(&mut self, id: cad_core::Result<NodeId>) -> PyResult<usize> {
        let id = id.map_err(err)?;
        self.nodes.push(id);
        Ok(id.index())
    }

    fn record(&mut self, op: Op, args: &[usize]) -> PyResult<usize> {
        let ids = args.iter().map(|a| self.node(*a)).collect::<PyResult<Vec<_>>>()?;
        let id = self.tape.record(op, &ids);
        self.push(id)
    }
}

fn op_by_name(name: &str) -> PyResult<Op> {
    Ok(match name {
        "sin" => Op::Sin,
        "exp" => Op::Exp,
        "log" => Op::Log,
        "add" => Op::Add,
        "sub" => Op::Sub,
        "mul" => Op::Mul,
        "div" => Op::Div,
        "neg" => Op::Neg,
        "conj" => Op::Conj,
        "re" => Op::Re,
        "im" => Op::Im,
        "abs" => Op::Abs,
        "inner" => Op::Inner,
        "outer" => Op::Outer,
        "matmul" => Op::Matmul,
        "dft" => Op::Dft,
        "idft" => Op::Idft,
        "sum" => Op::Sum,
        "relu" => Op::Relu,
        "diag" => Op::Diag,
        "scale" => Op::Scale,
        other => return Err(PyValueError::new_err(format!("unknown op `{other}`"))),
    })
}

#[pymethods]
impl PyTape {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    /// A differentiable input.
    fn leaf(&mut self, value: &PyTensor) -> PyResult<usize> {
        let id = self.tape.leaf(value.0.clone());
        self.push(id)
    }

    fn constant(&mut self, value: &PyTensor) -> PyResult<usize> {
        let id = self.tape.constant(value.0.clone());
        self.push(id)
    }

    /// Records op `name` (e.g. `"mul"`, `"inner"`, `"dft"`) on the given nodes.
    #[pyo3(signature = (name, *args))]
    fn apply(&mut self, name: &str, args: Vec<usize>) -> PyResult<usize> {
        self.record(op_by_name(name)?, &args)
    }

    /// Multiplication by a fixed complex constant.
    fn scale_const(&mut self, x: usize, c: C64) -> PyResult<usize> {
        self.record(Op::ScaleConst(c), &[x])
    }

    fn permute_rows(&mut self, x: usize, perm: Vec<usize>) -> PyResult<usize> {
        cad_core::ops::validate_permutation(&perm).map_err(err)?;
        self.record(Op::PermuteRows(perm.into()), &[x])
    }

    fn value(&self, node: usize) -> PyResult<PyTensor> {
        self.tape.value(self.node(node)?).cloned().map(PyTensor).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.tape.len()
    }

    /// Gradients `2∂F/∂z̄` (complex leaves) or `∂F/∂x` (real leaves) of the
    /// real scalar at `output`, keyed by leaf index.
    fn backward(&self, output: usize) -> PyResult<BTreeMap<usize, PyTensor>> {
        let grads = self.tape.backward(self.node(output)?).map_err(err)?;
        grads
            .iter()
            .map(|(id, _)| Ok((id.index(), PyTensor(cad_core::gradient_of(&grads, id).map_err(err)?))))
            .collect()
    }
}

/// Unitary matrix `D3 R2 F⁻¹ D2 Π R1 F D1` from phases, reflection vectors
/// and a permutation.
#[pyfunction]
fn build_w(
    omega1: Vec<f64>,
    omega2: Vec<f64>,
    omega3: Vec<f64>,
    v1: Vec<C64>,
    v2: Vec<C64>,
    perm: Vec<usize>,
) -> PyResult<PyTensor> {
    let p = UnitaryParams::new(omega1, omega2, omega3, v1, v2, perm).map_err(err)?;
    cad_core::build_w(&p).map(PyTensor).map_err(err)
}

/// `‖W†W − I‖_F`.
#[pyfunction]
fn unitarity_defect(w: &PyTensor) -> PyResult<f64> {
    cad_core::unitarity_defect(&w.0).map_err(err)
}

/// One Cayley step for a unitary `w` with engine gradient `grad`.
#[pyfunction]
fn cayley_update(w: &PyTensor, grad: &PyTensor, lr: f64) -> PyResult<PyTensor> {
    cad_core::cayley_update(&w.0, &grad.0, lr).map(PyTensor).map_err(err)
}

/// `params − lr·grad`; real-domain parameters stay real.
#[pyfunction]
fn gd_step(params: &PyTensor, grad: &PyTensor, lr: f64) -> PyResult<PyTensor> {
    cad_core::gd_step(&params.0, &grad.0, lr).map(PyTensor).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (trials=20, seed=0, tol=1e-5))]
fn verify_table(trials: usize, seed: u64, tol: f64) -> String {
    table::verify_table(trials, seed, tol).to_json()
}

#[pyfunction]
#[pyo3(signature = (loss, dims=4, trials=5, seed=0, tol=1e-5))]
fn gradcheck(loss: &str, dims: usize, trials: usize, seed: u64, tol: f64) -> PyResult<String> {
    let loss: LossId = loss.parse().map_err(err)?;
    commands::gradcheck(loss, dims, trials, seed, tol).map(|r| r.to_json()).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (loss, lr=0.01, steps=20, seed=0, dims=4))]
fn demo_gd(loss: &str, lr: f64, steps: usize, seed: u64, dims: usize) -> PyResult<String> {
    let loss: LossId = loss.parse().map_err(err)?;
    let opts = DemoGdOptions { lr, steps, seed, dims, ..DemoGdOptions::new(loss) };
    commands::demo_gd(opts).map(|r| r.to_json()).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (dim=8, seq_len=10, steps=50, seed=0, lr=1e-3))]
fn demo_urnn(dim: usize, seq_len: usize, steps: usize, seed: u64, lr: f64) -> PyResult<String> {
    let opts = DemoUrnnOptions { dim, seq_len, steps, seed, lr, ..DemoUrnnOptions::default() };
    commands::demo_urnn(opts).map(|r| r.to_json()).map_err(err)
}

#[pymodule]
fn complex_ad(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTensor>()?;
    m.add_class::<PyTape>()?;
    m.add_function(wrap_pyfunction!(build_w, m)?)?;
    m.add_function(wrap_pyfunction!(unitarity_defect, m)?)?;
    m.add_function(wrap_pyfunction!(cayley_update, m)?)?;
    m.add_function(wrap_pyfunction!(gd_step, m)?)?;
    m.add_function(wrap_pyfunction!(verify_table, m)?)?;
    m.add_function(wrap_pyfunction!(gradcheck, m)?)?;
    m.add_function(wrap_pyfunction!(demo_gd, m)?)?;
    m.add_function(wrap_pyfunction!(demo_urnn, m)?)?;
    Ok(())
}
