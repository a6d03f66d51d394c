//! Wengert-list recording for reverse-mode gradients.
//!
//! Every primitive evaluated on a [`Var`] appends one node holding its
//! operation kind, operand indices and local partial derivatives. Nodes are
//! appended in evaluation order, so operands always precede their consumer and
//! a single reverse sweep accumulates exact gradients.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::dual::sign;
use super::Scalar;
use crate::error::{Error, Result};

/// Operation kind of a recorded node. The `*C` variants carry a constant
/// operand in the node's auxiliary slot (`x ∘ c`, or `c ∘ x` for `RSubC` and
/// `RDivC`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Leaf,
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Abs,
    Sin,
    Cos,
    Ln,
    Powi(i32),
    Dot,
    AddC,
    SubC,
    RSubC,
    MulC,
    DivC,
    RDivC,
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Const => "const",
            Op::Add | Op::AddC => "add",
            Op::Sub | Op::SubC | Op::RSubC => "sub",
            Op::Mul | Op::MulC => "mul",
            Op::Div | Op::DivC | Op::RDivC => "div",
            Op::Neg => "neg",
            Op::Abs => "abs",
            Op::Sin => "sin",
            Op::Cos => "cos",
            Op::Ln => "ln",
            Op::Powi(_) => "powi",
            Op::Dot => "dot",
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    op: Op,
    start: u32,
    len: u32,
    aux: f64,
}

#[derive(Debug, Default, Clone)]
struct TapeData {
    nodes: Vec<Node>,
    values: Vec<f64>,
    operands: Vec<u32>,
    partials: Vec<f64>,
    leaves: Vec<u32>,
    outputs: Vec<u32>,
    domain_error: Option<(usize, &'static str)>,
}

/// A recorded computation trace.
#[derive(Debug, Default)]
pub struct Tape {
    data: RefCell<TapeData>,
}

/// A scalar that is either a node on a [`Tape`] or a free constant.
#[derive(Debug, Clone, Copy)]
pub struct Var<'t> {
    tape: Option<&'t Tape>,
    idx: u32,
    value: f64,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(nodes: usize) -> Self {
        let data = TapeData {
            nodes: Vec::with_capacity(nodes),
            values: Vec::with_capacity(nodes),
            operands: Vec::with_capacity(2 * nodes),
            partials: Vec::with_capacity(2 * nodes),
            ..TapeData::default()
        };
        Self { data: RefCell::new(data) }
    }

    /// Drop all recorded nodes, keeping the allocations.
    pub fn clear(&mut self) {
        let data = self.data.get_mut();
        data.nodes.clear();
        data.values.clear();
        data.operands.clear();
        data.partials.clear();
        data.leaves.clear();
        data.outputs.clear();
        data.domain_error = None;
    }

    pub fn len(&self) -> usize {
        self.data.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_leaves(&self) -> usize {
        self.data.borrow().leaves.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.data.borrow().outputs.len()
    }

    /// Operation kinds in recording order.
    pub fn ops(&self) -> Vec<Op> {
        self.data.borrow().nodes.iter().map(|n| n.op).collect()
    }

    /// Register independent variables.
    pub fn leaves(&self, values: &[f64]) -> Vec<Var<'_>> {
        values
            .iter()
            .map(|&v| {
                let idx = self.push(Op::Leaf, &[], &[], v, 0.0);
                self.data.borrow_mut().leaves.push(idx);
                Var { tape: Some(self), idx, value: v }
            })
            .collect()
    }

    /// A constant recorded as a node, so that it can be replayed.
    pub fn constant(&self, value: f64) -> Var<'_> {
        let idx = self.push(Op::Const, &[], &[], value, value);
        Var { tape: Some(self), idx, value }
    }

    /// Mark the recorded function's outputs and return their values.
    pub fn set_outputs(&self, outputs: &[Var<'_>]) -> Vec<f64> {
        let idx: Vec<u32> = outputs
            .iter()
            .map(|v| match v.tape {
                Some(t) => {
                    debug_assert!(std::ptr::eq(t, self));
                    v.idx
                }
                None => self.constant(v.value).idx,
            })
            .collect();
        self.data.borrow_mut().outputs = idx;
        outputs.iter().map(|v| v.value).collect()
    }

    /// First domain violation seen while recording, if any.
    pub fn domain_error(&self) -> Option<Error> {
        self.data
            .borrow()
            .domain_error
            .map(|(node, op)| Error::Domain { node, op })
    }

    /// Reverse sweep: gradient of `cotangent · outputs` with respect to the leaves.
    pub fn backward(&self, cotangent: &[f64]) -> Result<Vec<f64>> {
        let data = self.data.borrow();
        if cotangent.len() != data.outputs.len() {
            return Err(Error::Dimension {
                expected: data.outputs.len(),
                got: cotangent.len(),
            });
        }
        let mut adjoint = vec![0.0; data.nodes.len()];
        for (&out, &c) in data.outputs.iter().zip(cotangent) {
            adjoint[out as usize] += c;
        }
        for i in (0..data.nodes.len()).rev() {
            let a = adjoint[i];
            if a == 0.0 {
                continue;
            }
            let node = data.nodes[i];
            let range = node.start as usize..(node.start + node.len) as usize;
            for (&o, &p) in data.operands[range.clone()].iter().zip(&data.partials[range]) {
                adjoint[o as usize] += a * p;
            }
        }
        Ok(data.leaves.iter().map(|&l| adjoint[l as usize]).collect())
    }

    /// Re-evaluate the recorded operations from new leaf values.
    pub fn replay(&self, leaves: &[f64]) -> Result<Vec<f64>> {
        let data = self.data.borrow();
        if leaves.len() != data.leaves.len() {
            return Err(Error::Dimension {
                expected: data.leaves.len(),
                got: leaves.len(),
            });
        }
        let mut values: Vec<f64> = Vec::with_capacity(data.nodes.len());
        let mut next_leaf = 0;
        for node in &data.nodes {
            let ops = &data.operands[node.start as usize..(node.start + node.len) as usize];
            let x = |k: usize| values[ops[k] as usize];
            let v = match node.op {
                Op::Leaf => {
                    next_leaf += 1;
                    leaves[next_leaf - 1]
                }
                Op::Const => node.aux,
                Op::Add => x(0) + x(1),
                Op::Sub => x(0) - x(1),
                Op::Mul => x(0) * x(1),
                Op::Div => x(0) / x(1),
                Op::Neg => -x(0),
                Op::Abs => x(0).abs(),
                Op::Sin => x(0).sin(),
                Op::Cos => x(0).cos(),
                Op::Ln => x(0).ln(),
                Op::Powi(n) => x(0).powi(n),
                Op::Dot => (0..ops.len() / 2).fold(0.0, |acc, k| acc + x(2 * k) * x(2 * k + 1)),
                Op::AddC => x(0) + node.aux,
                Op::SubC => x(0) - node.aux,
                Op::RSubC => node.aux - x(0),
                Op::MulC => x(0) * node.aux,
                Op::DivC => x(0) / node.aux,
                Op::RDivC => node.aux / x(0),
            };
            values.push(v);
        }
        Ok(data.outputs.iter().map(|&o| values[o as usize]).collect())
    }

    fn push(&self, op: Op, operands: &[u32], partials: &[f64], value: f64, aux: f64) -> u32 {
        let mut data = self.data.borrow_mut();
        let idx = data.nodes.len();
        let start = data.operands.len() as u32;
        data.operands.extend_from_slice(operands);
        data.partials.extend_from_slice(partials);
        data.nodes.push(Node {
            op,
            start,
            len: operands.len() as u32,
            aux,
        });
        data.values.push(value);
        idx as u32
    }

    fn flag_domain(&self, idx: u32, op: Op) {
        let mut data = self.data.borrow_mut();
        if data.domain_error.is_none() {
            data.domain_error = Some((idx as usize, op.name()));
        }
    }
}

/// Record `f` evaluated at `leaves`, returning its output values and the tape.
pub fn record<F>(leaves: &[f64], f: F) -> Result<(Vec<f64>, Tape)>
where
    F: for<'t> FnOnce(&[Var<'t>]) -> Result<Vec<Var<'t>>>,
{
    let tape = Tape::new();
    let output = {
        let vars = tape.leaves(leaves);
        let out = f(&vars)?;
        tape.set_outputs(&out)
    };
    if let Some(err) = tape.domain_error() {
        return Err(err);
    }
    Ok((output, tape))
}

/// Gradient over the leaves of `cotangent · output` for a recorded tape.
pub fn backward(tape: &Tape, cotangent: &[f64]) -> Result<Vec<f64>> {
    tape.backward(cotangent)
}

impl<'t> Var<'t> {
    pub fn constant(value: f64) -> Self {
        Var { tape: None, idx: u32::MAX, value }
    }

    pub fn is_recorded(&self) -> bool {
        self.tape.is_some()
    }

    fn unary(self, op: Op, partial: f64, value: f64) -> Self {
        match self.tape {
            None => Var::constant(value),
            Some(t) => {
                let idx = t.push(op, &[self.idx], &[partial], value, 0.0);
                Var { tape: Some(t), idx, value }
            }
        }
    }

    fn with_const(self, op: Op, partial: f64, c: f64, value: f64) -> Self {
        match self.tape {
            None => Var::constant(value),
            Some(t) => {
                let idx = t.push(op, &[self.idx], &[partial], value, c);
                Var { tape: Some(t), idx, value }
            }
        }
    }

    fn binary(self, rhs: Self, op: Op, da: f64, db: f64, value: f64) -> Self {
        let t = self.tape.or(rhs.tape).expect("binary op on two constants");
        let idx = t.push(op, &[self.idx, rhs.idx], &[da, db], value, 0.0);
        Var { tape: Some(t), idx, value }
    }

    fn flag(self, op: Op) -> Self {
        if let Some(t) = self.tape {
            t.flag_domain(self.idx, op);
        }
        self
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        let value = self.value + rhs.value;
        match (self.tape.is_some(), rhs.tape.is_some()) {
            (false, false) => Var::constant(value),
            (true, false) => self.with_const(Op::AddC, 1.0, rhs.value, value),
            (false, true) => rhs.with_const(Op::AddC, 1.0, self.value, value),
            (true, true) => self.binary(rhs, Op::Add, 1.0, 1.0, value),
        }
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        let value = self.value - rhs.value;
        match (self.tape.is_some(), rhs.tape.is_some()) {
            (false, false) => Var::constant(value),
            (true, false) => self.with_const(Op::SubC, 1.0, rhs.value, value),
            (false, true) => rhs.with_const(Op::RSubC, -1.0, self.value, value),
            (true, true) => self.binary(rhs, Op::Sub, 1.0, -1.0, value),
        }
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        let value = self.value * rhs.value;
        match (self.tape.is_some(), rhs.tape.is_some()) {
            (false, false) => Var::constant(value),
            (true, false) => self.with_const(Op::MulC, rhs.value, rhs.value, value),
            (false, true) => rhs.with_const(Op::MulC, self.value, self.value, value),
            (true, true) => self.binary(rhs, Op::Mul, rhs.value, self.value, value),
        }
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Var<'t>) -> Var<'t> {
        let value = self.value / rhs.value;
        let out = match (self.tape.is_some(), rhs.tape.is_some()) {
            (false, false) => Var::constant(value),
            (true, false) => self.with_const(Op::DivC, 1.0 / rhs.value, rhs.value, value),
            (false, true) => rhs.with_const(Op::RDivC, -value / rhs.value, self.value, value),
            (true, true) => self.binary(rhs, Op::Div, 1.0 / rhs.value, -value / rhs.value, value),
        };
        if rhs.value == 0.0 {
            out.flag(Op::Div)
        } else {
            out
        }
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.unary(Op::Neg, -1.0, -self.value)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: f64) -> Var<'t> {
        self.with_const(Op::AddC, 1.0, rhs, self.value + rhs)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: f64) -> Var<'t> {
        self.with_const(Op::SubC, 1.0, rhs, self.value - rhs)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: f64) -> Var<'t> {
        self.with_const(Op::MulC, rhs, rhs, self.value * rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: f64) -> Var<'t> {
        let out = self.with_const(Op::DivC, 1.0 / rhs, rhs, self.value / rhs);
        if rhs == 0.0 {
            out.flag(Op::Div)
        } else {
            out
        }
    }
}

impl<'t> Scalar for Var<'t> {
    fn cst(c: f64) -> Self {
        Var::constant(c)
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Var::constant(1.0);
        }
        let partial = f64::from(n) * self.value.powi(n - 1);
        self.unary(Op::Powi(n), partial, self.value.powi(n))
    }

    fn abs(self) -> Self {
        self.unary(Op::Abs, sign(self.value), self.value.abs())
    }

    fn sin(self) -> Self {
        self.unary(Op::Sin, self.value.cos(), self.value.sin())
    }

    fn cos(self) -> Self {
        self.unary(Op::Cos, -self.value.sin(), self.value.cos())
    }

    fn ln(self) -> Self {
        let out = self.unary(Op::Ln, 1.0 / self.value, self.value.ln());
        if self.value <= 0.0 {
            out.flag(Op::Ln)
        } else {
            out
        }
    }

    fn dot(a: &[Self], b: &[Self]) -> Self {
        assert_eq!(a.len(), b.len(), "dot product of unequal lengths");
        let value = a
            .iter()
            .zip(b)
            .fold(0.0, |acc, (x, y)| acc + x.value * y.value);
        let Some(t) = a.iter().chain(b).find_map(|v| v.tape) else {
            return Var::constant(value);
        };
        let mut operands = Vec::with_capacity(2 * a.len());
        let mut partials = Vec::with_capacity(2 * a.len());
        for (x, y) in a.iter().zip(b) {
            let xi = if x.tape.is_some() { x.idx } else { t.constant(x.value).idx };
            let yi = if y.tape.is_some() { y.idx } else { t.constant(y.value).idx };
            operands.push(xi);
            operands.push(yi);
            partials.push(y.value);
            partials.push(x.value);
        }
        let idx = t.push(Op::Dot, &operands, &partials, value, 0.0);
        Var { tape: Some(t), idx, value }
    }
}
