//! Scalar expressions over chart coordinates and named parameters.
//!
//! An [`Expr`] is an immutable, reference-counted tree. Subtrees are shared
//! freely, so the structures built by differentiation are DAGs in memory; the
//! [`Tape`] compiler walks each shared node once and also merges structurally
//! identical subtrees, which keeps evaluation of large derived tensors cheap.
//!
//! Two construction paths exist. The arithmetic operators and the `add`, `mul`,
//! ... constructors fold constants and apply the identity rules eagerly. The
//! parser builds raw trees with [`Expr::raw`] so that [`Expr::simplify`] has
//! something to do.

mod diff;
mod parse;
mod tape;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops;
use std::sync::Arc;

pub use parse::{parse, ParseError};
pub use tape::{DomainKind, EvalError, EvaluateError, Tape, UnboundSymbol};

use crate::params::ParameterSet;
use crate::scalar::Scalar;

/// Elementary functions understood by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Cot,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Exp,
        Func::Ln,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Cot,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Cot => "cot",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Applies the function without domain checks.
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Cot => x.cos() / x.sin(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

/// Node kinds of an expression tree.
#[derive(Debug, Clone)]
pub enum Kind {
    Num(f64),
    Sym(Arc<str>),
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, Expr),
    Call(Func, Expr),
}

#[derive(Debug)]
struct Node {
    kind: Kind,
    free: Arc<[Arc<str>]>,
}

/// Immutable scalar expression.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

fn merge_free(a: &Arc<[Arc<str>]>, b: &Arc<[Arc<str>]>) -> Arc<[Arc<str>]> {
    if b.is_empty() || Arc::ptr_eq(a, b) {
        return a.clone();
    }
    if a.is_empty() {
        return b.clone();
    }
    let mut out: Vec<Arc<str>> = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i].clone());
                i += 1;
                j += 1;
            }
        }
    }
    out.extend(a[i..].iter().cloned());
    out.extend(b[j..].iter().cloned());
    if out.len() == a.len() {
        return a.clone();
    }
    if out.len() == b.len() {
        return b.clone();
    }
    out.into()
}

#[allow(clippy::should_implement_trait, clippy::redundant_guards)]
impl Expr {
    /// Builds a node exactly as given, without any folding.
    pub fn raw(kind: Kind) -> Expr {
        let free: Arc<[Arc<str>]> = match &kind {
            Kind::Num(_) => Arc::from(Vec::new()),
            Kind::Sym(s) => Arc::from(vec![s.clone()]),
            Kind::Neg(a) | Kind::Call(_, a) => a.0.free.clone(),
            Kind::Add(a, b)
            | Kind::Sub(a, b)
            | Kind::Mul(a, b)
            | Kind::Div(a, b)
            | Kind::Pow(a, b) => merge_free(&a.0.free, &b.0.free),
        };
        Expr(Arc::new(Node { kind, free }))
    }

    pub fn num(value: f64) -> Expr {
        Expr::raw(Kind::Num(value))
    }

    pub fn zero() -> Expr {
        Expr::num(0.0)
    }

    pub fn one() -> Expr {
        Expr::num(1.0)
    }

    pub fn sym(name: &str) -> Expr {
        Expr::raw(Kind::Sym(Arc::from(name)))
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    /// Sorted free symbols (coordinates and parameters).
    pub fn free_symbols(&self) -> &[Arc<str>] {
        &self.0.free
    }

    pub fn depends_on(&self, name: &str) -> bool {
        self.0.free.binary_search_by(|s| (**s).cmp(name)).is_ok()
    }

    pub fn as_num(&self) -> Option<f64> {
        match self.0.kind {
            Kind::Num(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_num() == Some(1.0)
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub(crate) fn node_id(&self) -> *const () {
        Arc::as_ptr(&self.0) as *const ()
    }

    // Folding constructors.

    pub fn neg(a: Expr) -> Expr {
        match a.kind() {
            Kind::Num(v) => Expr::num(-v),
            Kind::Neg(inner) => inner.clone(),
            _ => Expr::raw(Kind::Neg(a)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => return Expr::num(x + y),
            (Some(x), _) if x == 0.0 => return b,
            (_, Some(y)) if y == 0.0 => return a,
            _ => {}
        }
        if let Kind::Neg(inner) = b.kind() {
            return Expr::sub(a, inner.clone());
        }
        if let Kind::Neg(inner) = a.kind() {
            return Expr::sub(b, inner.clone());
        }
        Expr::raw(Kind::Add(a, b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => return Expr::num(x - y),
            (Some(x), _) if x == 0.0 => return Expr::neg(b),
            (_, Some(y)) if y == 0.0 => return a,
            _ => {}
        }
        if a.ptr_eq(&b) {
            return Expr::zero();
        }
        if let Kind::Neg(inner) = b.kind() {
            return Expr::add(a, inner.clone());
        }
        Expr::raw(Kind::Sub(a, b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => return Expr::num(x * y),
            (Some(x), _) if x == 0.0 => return Expr::zero(),
            (_, Some(y)) if y == 0.0 => return Expr::zero(),
            (Some(x), _) if x == 1.0 => return b,
            (_, Some(y)) if y == 1.0 => return a,
            (Some(x), _) if x == -1.0 => return Expr::neg(b),
            (_, Some(y)) if y == -1.0 => return Expr::neg(a),
            _ => {}
        }
        match (a.kind(), b.kind()) {
            (Kind::Neg(x), Kind::Neg(y)) => return Expr::mul(x.clone(), y.clone()),
            (Kind::Neg(x), _) => return Expr::neg(Expr::mul(x.clone(), b)),
            (_, Kind::Neg(y)) => return Expr::neg(Expr::mul(a, y.clone())),
            _ => {}
        }
        // keep numeric factors on the left and merged
        if b.as_num().is_some() {
            return Expr::mul(b, a);
        }
        if let (Some(x), Kind::Mul(l, r)) = (a.as_num(), b.kind()) {
            if let Some(y) = l.as_num() {
                return Expr::mul(Expr::num(x * y), r.clone());
            }
        }
        Expr::raw(Kind::Mul(a, b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) if y != 0.0 => return Expr::num(x / y),
            (Some(x), _) if x == 0.0 => return Expr::zero(),
            (_, Some(y)) if y == 1.0 => return a,
            (_, Some(y)) if y == -1.0 => return Expr::neg(a),
            _ => {}
        }
        match (a.kind(), b.kind()) {
            (Kind::Neg(x), Kind::Neg(y)) => return Expr::div(x.clone(), y.clone()),
            (Kind::Neg(x), _) => return Expr::neg(Expr::div(x.clone(), b)),
            (_, Kind::Neg(y)) => return Expr::neg(Expr::div(a, y.clone())),
            _ => {}
        }
        Expr::raw(Kind::Div(a, b))
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), Some(y)) => {
                let v = x.powf(y);
                if v.is_finite() {
                    return Expr::num(v);
                }
            }
            (_, Some(y)) if y == 1.0 => return a,
            (_, Some(y)) if y == 0.0 => return Expr::one(),
            (Some(x), _) if x == 1.0 => return Expr::one(),
            _ => {}
        }
        Expr::raw(Kind::Pow(a, b))
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        if let Some(x) = a.as_num() {
            if let Some(v) = fold_call(f, x) {
                return Expr::num(v);
            }
        }
        Expr::raw(Kind::Call(f, a))
    }

    pub fn powi(self, k: i32) -> Expr {
        Expr::pow(self, Expr::num(k as f64))
    }

    pub fn exp(self) -> Expr {
        Expr::call(Func::Exp, self)
    }

    pub fn ln(self) -> Expr {
        Expr::call(Func::Ln, self)
    }

    pub fn sin(self) -> Expr {
        Expr::call(Func::Sin, self)
    }

    pub fn cos(self) -> Expr {
        Expr::call(Func::Cos, self)
    }

    pub fn sqrt(self) -> Expr {
        Expr::call(Func::Sqrt, self)
    }

    /// Exact symbolic derivative with respect to `var`.
    pub fn differentiate(&self, var: &str) -> Expr {
        diff::differentiate(self, var)
    }

    /// Rebuilds the tree through the folding constructors: constant folding
    /// plus the identity rules `x+0`, `x*1`, `x*0`, `0/x`, `x^1`, `x^0`.
    pub fn simplify(&self) -> Expr {
        fn go(e: &Expr, memo: &mut HashMap<*const (), Expr>) -> Expr {
            if let Some(done) = memo.get(&e.node_id()) {
                return done.clone();
            }
            let out = match e.kind() {
                Kind::Num(_) | Kind::Sym(_) => e.clone(),
                Kind::Neg(a) => Expr::neg(go(a, memo)),
                Kind::Add(a, b) => Expr::add(go(a, memo), go(b, memo)),
                Kind::Sub(a, b) => Expr::sub(go(a, memo), go(b, memo)),
                Kind::Mul(a, b) => Expr::mul(go(a, memo), go(b, memo)),
                Kind::Div(a, b) => Expr::div(go(a, memo), go(b, memo)),
                Kind::Pow(a, b) => Expr::pow(go(a, memo), go(b, memo)),
                Kind::Call(f, a) => Expr::call(*f, go(a, memo)),
            };
            memo.insert(e.node_id(), out.clone());
            out
        }
        go(self, &mut HashMap::new())
    }

    /// Replaces symbols by expressions.
    pub fn substitute(&self, map: &HashMap<String, Expr>) -> Expr {
        fn go(e: &Expr, map: &HashMap<String, Expr>, memo: &mut HashMap<*const (), Expr>) -> Expr {
            if e.free_symbols().iter().all(|s| !map.contains_key(&**s)) {
                return e.clone();
            }
            if let Some(done) = memo.get(&e.node_id()) {
                return done.clone();
            }
            let out = match e.kind() {
                Kind::Num(_) => e.clone(),
                Kind::Sym(s) => map.get(&**s).cloned().unwrap_or_else(|| e.clone()),
                Kind::Neg(a) => Expr::neg(go(a, map, memo)),
                Kind::Add(a, b) => Expr::add(go(a, map, memo), go(b, map, memo)),
                Kind::Sub(a, b) => Expr::sub(go(a, map, memo), go(b, map, memo)),
                Kind::Mul(a, b) => Expr::mul(go(a, map, memo), go(b, map, memo)),
                Kind::Div(a, b) => Expr::div(go(a, map, memo), go(b, map, memo)),
                Kind::Pow(a, b) => Expr::pow(go(a, map, memo), go(b, map, memo)),
                Kind::Call(f, a) => Expr::call(*f, go(a, map, memo)),
            };
            memo.insert(e.node_id(), out.clone());
            out
        }
        go(self, map, &mut HashMap::new())
    }

    /// Evaluates at a point given as `(coordinate name, value)` pairs.
    pub fn evaluate<T: Scalar>(
        &self,
        coords: &[&str],
        point: &[T],
        params: &ParameterSet,
    ) -> Result<T, EvaluateError> {
        let tape = Tape::compile(std::slice::from_ref(self), coords, params)?;
        Ok(tape.eval(point)?[0])
    }

    /// Number of distinct nodes reachable from this expression.
    pub fn node_count(&self) -> usize {
        fn go(e: &Expr, seen: &mut std::collections::HashSet<*const ()>) {
            if !seen.insert(e.node_id()) {
                return;
            }
            match e.kind() {
                Kind::Num(_) | Kind::Sym(_) => {}
                Kind::Neg(a) | Kind::Call(_, a) => go(a, seen),
                Kind::Add(a, b)
                | Kind::Sub(a, b)
                | Kind::Mul(a, b)
                | Kind::Div(a, b)
                | Kind::Pow(a, b) => {
                    go(a, seen);
                    go(b, seen);
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        go(self, &mut seen);
        seen.len()
    }
}

fn fold_call(f: Func, x: f64) -> Option<f64> {
    let ok = match f {
        Func::Ln => x > 0.0,
        Func::Sqrt => x >= 0.0,
        Func::Cot => x.sin() != 0.0 && !near_multiple_of_pi(x, 0.0),
        Func::Tan => !near_multiple_of_pi(x, 0.5),
        _ => true,
    };
    let v = f.apply(x);
    (ok && v.is_finite()).then_some(v)
}

/// True when `x` lies within a few ulps of `(k + offset)·π` for some integer `k`.
pub(crate) fn near_multiple_of_pi(x: f64, offset: f64) -> bool {
    let k = (x / PI - offset).round();
    let nearest = (k + offset) * PI;
    (x - nearest).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0)
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::num(v)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $ctor:ident) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(self, rhs)
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$ctor(self, rhs.clone())
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(self.clone(), rhs)
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$ctor(self.clone(), rhs.clone())
            }
        }
        impl ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$ctor(self, Expr::num(rhs))
            }
        }
        impl ops::$trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$ctor(self.clone(), Expr::num(rhs))
            }
        }
        impl ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(Expr::num(self), rhs)
            }
        }
        impl ops::$trait<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$ctor(Expr::num(self), rhs.clone())
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self.clone())
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), Expr::add)
    }
}

// Rendering. Precedence levels: 1 = +/-, 2 = * /, 3 = unary minus, 4 = ^, 5 = atoms.
fn precedence(e: &Expr) -> u8 {
    match e.kind() {
        Kind::Add(..) | Kind::Sub(..) => 1,
        Kind::Mul(..) | Kind::Div(..) => 2,
        Kind::Neg(_) => 3,
        Kind::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => 3,
        Kind::Pow(..) => 4,
        _ => 5,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v.is_nan() {
        write!(f, "(0/0)")
    } else if v.is_infinite() {
        write!(f, "{}(1/0)", if v < 0.0 { "-" } else { "" })
    } else {
        // Debug formatting round-trips exactly.
        write!(f, "{v:?}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            Kind::Num(v) => write_num(f, *v),
            Kind::Sym(s) => write!(f, "{s}"),
            Kind::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, precedence(a) < 4)
            }
            Kind::Add(a, b) => {
                write_child(f, a, precedence(a) < 1)?;
                write!(f, " + ")?;
                write_child(f, b, precedence(b) <= 1 || precedence(b) == 3)
            }
            Kind::Sub(a, b) => {
                write_child(f, a, precedence(a) < 1)?;
                write!(f, " - ")?;
                write_child(f, b, precedence(b) <= 1 || precedence(b) == 3)
            }
            Kind::Mul(a, b) => {
                write_child(f, a, precedence(a) < 2)?;
                write!(f, "*")?;
                write_child(f, b, precedence(b) <= 3)
            }
            Kind::Div(a, b) => {
                write_child(f, a, precedence(a) < 2)?;
                write!(f, "/")?;
                write_child(f, b, precedence(b) <= 3)
            }
            Kind::Pow(a, b) => {
                write_child(f, a, precedence(a) <= 4)?;
                write!(f, "^")?;
                write_child(f, b, precedence(b) < 4)
            }
            Kind::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval1(e: &Expr, var: &str, v: f64) -> f64 {
        e.evaluate(&[var], &[v], &ParameterSet::new()).unwrap()
    }

    #[test]
    fn folding_constructors() {
        let x = Expr::sym("x");
        assert!((&x * 0.0).is_zero());
        assert!((0.0 / x.clone()).is_zero());
        assert!((&x + 0.0).ptr_eq(&x));
        assert!((&x * 1.0).ptr_eq(&x));
        assert!(x.clone().powi(1).ptr_eq(&x));
        assert!(x.clone().powi(0).is_one());
        assert_eq!((Expr::num(2.0) + Expr::num(3.0) * 4.0).as_num(), Some(14.0));
        assert!((&x - &x).is_zero());
    }

    #[test]
    fn free_symbols_are_sorted_and_unique() {
        let e = parse("y*x + sin(x)*c1 + y").unwrap();
        let names: Vec<&str> = e.free_symbols().iter().map(|s| &**s).collect();
        assert_eq!(names, vec!["c1", "x", "y"]);
        assert!(e.depends_on("c1"));
        assert!(!e.depends_on("z"));
    }

    #[test]
    fn rendering_respects_grammar() {
        for (text, at) in [
            ("-x^2", 3.0),
            ("(-x)^2", 3.0),
            ("2^-x", 0.5),
            ("x^2^0.5", 1.7),
            ("1 - (x - 2)", 0.3),
            ("1/(x*2)", 0.3),
            ("-(x + 1)*3", 0.25),
            ("x - -x", 0.7),
        ] {
            let e = parse(text).unwrap();
            let back = parse(&e.to_string()).unwrap();
            assert_eq!(eval1(&e, "x", at), eval1(&back, "x", at), "{text} -> {e}");
        }
    }

    #[test]
    fn cot_folding_skips_poles() {
        assert!(Expr::call(Func::Cot, Expr::num(0.0)).as_num().is_none());
        assert!(Expr::call(Func::Cot, Expr::num(PI)).as_num().is_none());
        assert_eq!(Expr::call(Func::Ln, Expr::num(1.0)).as_num(), Some(0.0));
        assert!(Expr::call(Func::Ln, Expr::num(-1.0)).as_num().is_none());
    }
}
