use std::collections::HashMap;

use super::{Expr, Func, Kind};

pub(super) fn differentiate(e: &Expr, var: &str) -> Expr {
    let mut memo = HashMap::new();
    go(e, var, &mut memo)
}

fn go(e: &Expr, var: &str, memo: &mut HashMap<*const (), Expr>) -> Expr {
    if !e.depends_on(var) {
        return Expr::zero();
    }
    if let Some(done) = memo.get(&e.node_id()) {
        return done.clone();
    }
    let out = match e.kind() {
        Kind::Num(_) => Expr::zero(),
        Kind::Sym(_) => Expr::one(),
        Kind::Neg(a) => -go(a, var, memo),
        Kind::Add(a, b) => go(a, var, memo) + go(b, var, memo),
        Kind::Sub(a, b) => go(a, var, memo) - go(b, var, memo),
        Kind::Mul(a, b) => go(a, var, memo) * b + a * go(b, var, memo),
        Kind::Div(a, b) => {
            let da = go(a, var, memo);
            if !b.depends_on(var) {
                da / b
            } else {
                let db = go(b, var, memo);
                (da * b - a * db) / b.clone().powi(2)
            }
        }
        Kind::Pow(base, exponent) => {
            let db = go(base, var, memo);
            if !exponent.depends_on(var) {
                let reduced = match exponent.as_num() {
                    Some(k) => Expr::num(k - 1.0),
                    None => exponent - 1.0,
                };
                exponent * Expr::pow(base.clone(), reduced) * db
            } else {
                // d(u^v) = u^v (v' ln u + v u'/u)
                let dv = go(exponent, var, memo);
                e * (dv * base.clone().ln() + exponent * db / base)
            }
        }
        Kind::Call(f, a) => {
            let da = go(a, var, memo);
            let outer = match f {
                Func::Exp => e.clone(),
                Func::Ln => return finish(memo, e, da / a),
                Func::Sin => a.clone().cos(),
                Func::Cos => -a.clone().sin(),
                Func::Tan => 1.0 / a.clone().cos().powi(2),
                Func::Cot => -(1.0 / a.clone().sin().powi(2)),
                Func::Sqrt => return finish(memo, e, da / (2.0 * e)),
            };
            outer * da
        }
    };
    finish(memo, e, out)
}

fn finish(memo: &mut HashMap<*const (), Expr>, e: &Expr, out: Expr) -> Expr {
    memo.insert(e.node_id(), out.clone());
    out
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;
    use crate::params::ParameterSet;

    fn at(text: &str, var: &str, v: f64) -> f64 {
        let e = parse(text).unwrap();
        e.differentiate(var)
            .evaluate(&[var], &[v], &ParameterSet::new())
            .unwrap()
    }

    fn central(text: &str, var: &str, v: f64, h: f64) -> f64 {
        let e = parse(text).unwrap();
        let p = ParameterSet::new();
        let f = |t: f64| e.evaluate(&[var], &[t], &p).unwrap();
        (f(v + h) - f(v - h)) / (2.0 * h)
    }

    #[test]
    fn log_sin_gives_cot() {
        let d = parse("ln(sin(z))").unwrap().differentiate("z");
        assert_eq!(d.to_string(), "cos(z)/sin(z)");
    }

    #[test]
    fn constant_derivative_is_zero() {
        assert!(parse("7").unwrap().differentiate("x").is_zero());
        assert!(parse("sin(y)*exp(y)").unwrap().differentiate("x").is_zero());
    }

    #[test]
    fn q_derivative_at_origin() {
        // Oracle: central difference with h = 1e-6; frozen value -32/289.
        let text = "-exp(2*y)/(16+exp(2*y))";
        let fd = central(text, "y", 0.0, 1e-6);
        assert!((fd - (-32.0 / 289.0)).abs() < 1e-8);
        assert!((at(text, "y", 0.0) - (-0.110_726_643_598_615_9)).abs() < 1e-12);
    }

    #[test]
    fn rules_against_finite_differences() {
        for (text, v) in [
            ("x^3 - 2*x", 0.7),
            ("x^x", 1.3),
            ("2^x", 0.4),
            ("sqrt(1 + x^2)", 0.9),
            ("tan(x)", 0.3),
            ("cot(x)", 0.8),
            ("exp(-x^2)/x", 1.1),
            ("ln(x)/sin(x)", 0.6),
            ("cos(x)^-2", 0.2),
        ] {
            let exact = at(text, "x", v);
            let fd = central(text, "x", v, 1e-5);
            assert!(
                (exact - fd).abs() <= 1e-6 * exact.abs().max(1.0),
                "{text}: {exact} vs {fd}"
            );
        }
    }
}
