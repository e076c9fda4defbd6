//! Symbolic partial differentiation on expression trees.

use super::{add, div, mul, neg, powe, sqrt, sub, unary};
use super::{Exponent, ScalarExpr, UnaryOp, Var};

/// Exact symbolic partial derivative of `e` with respect to `v`, with
/// constant folding applied as the result is built. Parameters are treated
/// as constants. Repeated application yields higher mixed partials.
pub fn differentiate(e: &ScalarExpr, v: Var) -> ScalarExpr {
    match e {
        ScalarExpr::Const(_) => ScalarExpr::Const(0.0),
        ScalarExpr::Var(w) => {
            if *w == v {
                ScalarExpr::Const(1.0)
            } else {
                ScalarExpr::Const(0.0)
            }
        }
        ScalarExpr::Unary(op, a) => {
            let da = differentiate(a, v);
            if da.is_zero_const() {
                return ScalarExpr::Const(0.0);
            }
            let a = a.as_ref().clone();
            match op {
                UnaryOp::Neg => neg(da),
                // d sqrt(u) = u' / (2 sqrt(u))
                UnaryOp::Sqrt => div(da, mul(ScalarExpr::Const(2.0), sqrt(a))),
                UnaryOp::Sin => mul(unary(UnaryOp::Cos, a), da),
                UnaryOp::Cos => neg(mul(unary(UnaryOp::Sin, a), da)),
                UnaryOp::Exp => mul(unary(UnaryOp::Exp, a), da),
                UnaryOp::Log => div(da, a),
            }
        }
        ScalarExpr::Binary(op, a, b) => {
            let da = differentiate(a, v);
            let db = differentiate(b, v);
            let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
            match op {
                super::BinaryOp::Add => add(da, db),
                super::BinaryOp::Sub => sub(da, db),
                super::BinaryOp::Mul => add(mul(da, b), mul(a, db)),
                super::BinaryOp::Div => {
                    // (u/w)' = u'/w − u w'/w²
                    if db.is_zero_const() {
                        div(da, b)
                    } else if da.is_zero_const() {
                        neg(div(mul(a, db), powe(b, Exponent::int(2))))
                    } else {
                        sub(div(da, b.clone()), div(mul(a, db), powe(b, Exponent::int(2))))
                    }
                }
            }
        }
        ScalarExpr::Pow(a, p) => {
            let da = differentiate(a, v);
            if da.is_zero_const() {
                return ScalarExpr::Const(0.0);
            }
            // d u^p = p u^{p−1} u'
            let coeff = ScalarExpr::Const(p.as_f64());
            mul(
                mul(coeff, powe(a.as_ref().clone(), p.minus_one())),
                da,
            )
        }
    }
}

/// Convenience: derivative along a sorted multi-index of variables.
pub fn differentiate_multi(e: &ScalarExpr, vars: &[Var]) -> ScalarExpr {
    let mut cur = e.clone();
    for v in vars {
        cur = differentiate(&cur, *v);
        if cur.is_zero_const() {
            break;
        }
    }
    cur
}
