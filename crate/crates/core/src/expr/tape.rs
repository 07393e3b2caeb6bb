//! Flattened evaluation of many expressions at many points.

use std::collections::HashMap;

use thiserror::Error;

use super::{near_multiple_of_pi, Expr, Func, Kind};
use crate::params::ParameterSet;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    LogOfNonPositive,
    SqrtOfNegative,
    DivisionByZero,
    CotPole,
    TanPole,
    PowNotReal,
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DomainKind::LogOfNonPositive => "logarithm of a non-positive value",
            DomainKind::SqrtOfNegative => "square root of a negative value",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::CotPole => "cot at a multiple of pi",
            DomainKind::TanPole => "tan at an odd multiple of pi/2",
            DomainKind::PowNotReal => "power without a real value",
        })
    }
}

/// Evaluation failure at a specific point.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} in `{subexpr}` at point {point:?}")]
pub struct EvalError {
    pub kind: DomainKind,
    pub subexpr: String,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("symbol `{0}` is neither a coordinate nor a bound parameter")]
pub struct UnboundSymbol(pub String);

/// Error from one-shot evaluation: either a binding or a domain problem.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluateError {
    #[error(transparent)]
    Unbound(#[from] UnboundSymbol),
    #[error(transparent)]
    Domain(#[from] EvalError),
}

impl EvaluateError {
    pub fn domain(&self) -> Option<&EvalError> {
        match self {
            EvaluateError::Domain(e) => Some(e),
            EvaluateError::Unbound(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Const(u64),
    Input(u32),
    Neg(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Powi(u32, i32),
    Pow(u32, u32),
    Call(Func, u32),
}

/// A set of expressions compiled into a single straight-line program.
///
/// Shared and structurally equal subtrees are evaluated once per point.
#[derive(Debug, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    origin: Vec<Option<Expr>>,
    roots: Vec<u32>,
    n_inputs: usize,
}

struct Compiler<'a> {
    coords: &'a [&'a str],
    params: &'a ParameterSet,
    ops: Vec<Op>,
    origin: Vec<Option<Expr>>,
    by_node: HashMap<*const (), u32>,
    by_op: HashMap<Op, u32>,
}

impl Compiler<'_> {
    fn push(&mut self, op: Op, from: &Expr) -> u32 {
        if let Some(&slot) = self.by_op.get(&op) {
            return slot;
        }
        let slot = self.ops.len() as u32;
        self.ops.push(op);
        let fallible = matches!(op, Op::Div(..) | Op::Pow(..) | Op::Powi(..) | Op::Call(..));
        self.origin.push(fallible.then(|| from.clone()));
        self.by_op.insert(op, slot);
        slot
    }

    fn constant(&mut self, v: f64, from: &Expr) -> u32 {
        self.push(Op::Const(v.to_bits()), from)
    }

    fn visit(&mut self, e: &Expr) -> Result<u32, UnboundSymbol> {
        if let Some(&slot) = self.by_node.get(&e.node_id()) {
            return Ok(slot);
        }
        let op = match e.kind() {
            Kind::Num(v) => Op::Const(v.to_bits()),
            Kind::Sym(name) => {
                if let Some(i) = self.coords.iter().position(|c| *c == &**name) {
                    Op::Input(i as u32)
                } else if let Some(v) = self.params.get(name) {
                    Op::Const(v.to_bits())
                } else {
                    return Err(UnboundSymbol(name.to_string()));
                }
            }
            Kind::Neg(a) => Op::Neg(self.visit(a)?),
            Kind::Add(a, b) => Op::Add(self.visit(a)?, self.visit(b)?),
            Kind::Sub(a, b) => Op::Sub(self.visit(a)?, self.visit(b)?),
            Kind::Mul(a, b) => Op::Mul(self.visit(a)?, self.visit(b)?),
            Kind::Div(a, b) => Op::Div(self.visit(a)?, self.visit(b)?),
            Kind::Pow(a, b) => {
                let base = self.visit(a)?;
                match b.as_num() {
                    Some(k) if k.fract() == 0.0 && k.abs() <= 64.0 => Op::Powi(base, k as i32),
                    _ => Op::Pow(base, self.visit(b)?),
                }
            }
            Kind::Call(f, a) => Op::Call(*f, self.visit(a)?),
        };
        let slot = match op {
            Op::Const(bits) => self.constant(f64::from_bits(bits), e),
            _ => self.push(op, e),
        };
        self.by_node.insert(e.node_id(), slot);
        Ok(slot)
    }
}

fn describe(e: &Option<Expr>) -> String {
    const LIMIT: usize = 240;
    let text = e.as_ref().map(|e| e.to_string()).unwrap_or_default();
    if text.len() > LIMIT {
        let mut cut = LIMIT;
        while !text.is_char_boundary(cut) {
            cut -= 1;
        }
        format!("{}...", &text[..cut])
    } else {
        text
    }
}

impl Tape {
    /// Compiles `roots`, binding `coords` as inputs (in order) and every other
    /// symbol from `params`.
    pub fn compile(
        roots: &[Expr],
        coords: &[&str],
        params: &ParameterSet,
    ) -> Result<Tape, UnboundSymbol> {
        let mut c = Compiler {
            coords,
            params,
            ops: Vec::new(),
            origin: Vec::new(),
            by_node: HashMap::new(),
            by_op: HashMap::new(),
        };
        let roots = roots
            .iter()
            .map(|r| c.visit(r))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Tape {
            ops: c.ops,
            origin: c.origin,
            roots,
            n_inputs: coords.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn outputs(&self) -> usize {
        self.roots.len()
    }

    /// Evaluates every root at `inputs`, writing intermediate slots to `work`.
    pub fn eval_into<T: Scalar>(
        &self,
        inputs: &[T],
        work: &mut Vec<T>,
        out: &mut Vec<T>,
    ) -> Result<(), EvalError> {
        assert_eq!(inputs.len(), self.n_inputs, "input arity mismatch");
        work.clear();
        work.reserve(self.ops.len());
        let fail = |kind: DomainKind, slot: usize| EvalError {
            kind,
            subexpr: describe(&self.origin[slot]),
            point: inputs.iter().map(|v| v.to_f64_lossy()).collect(),
        };
        for (slot, op) in self.ops.iter().enumerate() {
            let v = match *op {
                Op::Const(bits) => T::lit(f64::from_bits(bits)),
                Op::Input(i) => inputs[i as usize],
                Op::Neg(a) => -work[a as usize],
                Op::Add(a, b) => work[a as usize] + work[b as usize],
                Op::Sub(a, b) => work[a as usize] - work[b as usize],
                Op::Mul(a, b) => work[a as usize] * work[b as usize],
                Op::Div(a, b) => {
                    let d = work[b as usize];
                    if d == T::zero() {
                        return Err(fail(DomainKind::DivisionByZero, slot));
                    }
                    work[a as usize] / d
                }
                Op::Powi(a, k) => {
                    let x = work[a as usize];
                    if k < 0 && x == T::zero() {
                        return Err(fail(DomainKind::DivisionByZero, slot));
                    }
                    x.powi(k)
                }
                Op::Pow(a, b) => {
                    let (x, y) = (work[a as usize], work[b as usize]);
                    if x == T::zero() && y < T::zero() {
                        return Err(fail(DomainKind::DivisionByZero, slot));
                    }
                    let r = x.powf(y);
                    if r.is_nan() {
                        return Err(fail(DomainKind::PowNotReal, slot));
                    }
                    r
                }
                Op::Call(f, a) => {
                    let x = work[a as usize];
                    match f {
                        Func::Ln if x <= T::zero() => {
                            return Err(fail(DomainKind::LogOfNonPositive, slot))
                        }
                        Func::Sqrt if x < T::zero() => {
                            return Err(fail(DomainKind::SqrtOfNegative, slot))
                        }
                        Func::Cot
                            if x.sin() == T::zero()
                                || near_multiple_of_pi(x.to_f64_lossy(), 0.0) =>
                        {
                            return Err(fail(DomainKind::CotPole, slot))
                        }
                        Func::Tan if near_multiple_of_pi(x.to_f64_lossy(), 0.5) => {
                            return Err(fail(DomainKind::TanPole, slot))
                        }
                        _ => f.apply(x),
                    }
                }
            };
            work.push(v);
        }
        out.clear();
        out.extend(self.roots.iter().map(|&r| work[r as usize]));
        Ok(())
    }

    pub fn eval<T: Scalar>(&self, inputs: &[T]) -> Result<Vec<T>, EvalError> {
        let mut work = Vec::new();
        let mut out = Vec::new();
        self.eval_into(inputs, &mut work, &mut out)?;
        Ok(out)
    }
}
