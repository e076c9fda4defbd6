//! Numeric evaluation of expression trees against bound variables.

use super::{BinaryOp, BoolExpr, CmpOp, Exponent, ScalarExpr, UnaryOp, VarClass};
use crate::error::{Error, Result};

/// Variable bindings for evaluation. Slices are indexed by zero-based
/// variable index; `params` follows the owning spec's parameter table.
#[derive(Debug, Clone, Copy)]
pub struct EvalVars<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub params: &'a [f64],
}

fn snippet(e: &ScalarExpr) -> String {
    let mut s = e.to_string();
    if s.len() > 80 {
        s.truncate(77);
        s.push_str("...");
    }
    s
}

fn domain_err(what: &str, e: &ScalarExpr) -> Error {
    Error::DomainViolation {
        what: what.to_string(),
        expr: snippet(e),
    }
}

/// Evaluate `e` at the bound point. Domain violations (negative sqrt
/// argument, log of a non-positive value, division by zero, fractional
/// power of a non-positive base) are reported with the offending
/// subexpression; a non-finite result from finite inputs is reported
/// distinctly.
pub fn evaluate(e: &ScalarExpr, vars: EvalVars<'_>) -> Result<f64> {
    let v = eval_rec(e, vars)?;
    if !v.is_finite() {
        return Err(Error::NonFinite { expr: snippet(e) });
    }
    Ok(v)
}

fn eval_rec(e: &ScalarExpr, vars: EvalVars<'_>) -> Result<f64> {
    match e {
        ScalarExpr::Const(c) => Ok(*c),
        ScalarExpr::Var(v) => {
            let slice = match v.class {
                VarClass::X => vars.x,
                VarClass::Y => vars.y,
                VarClass::Param => vars.params,
            };
            slice.get(v.index).copied().ok_or_else(|| {
                Error::Spec(format!(
                    "unbound variable index {} (class {:?})",
                    v.index + 1,
                    v.class
                ))
            })
        }
        ScalarExpr::Unary(op, a) => {
            let x = eval_rec(a, vars)?;
            match op {
                UnaryOp::Neg => Ok(-x),
                UnaryOp::Sqrt => {
                    if x < 0.0 {
                        Err(domain_err("sqrt of negative value", e))
                    } else {
                        Ok(x.sqrt())
                    }
                }
                UnaryOp::Sin => Ok(x.sin()),
                UnaryOp::Cos => Ok(x.cos()),
                UnaryOp::Exp => Ok(x.exp()),
                UnaryOp::Log => {
                    if x <= 0.0 {
                        Err(domain_err("log of non-positive value", e))
                    } else {
                        Ok(x.ln())
                    }
                }
            }
        }
        ScalarExpr::Binary(op, a, b) => {
            let xa = eval_rec(a, vars)?;
            let xb = eval_rec(b, vars)?;
            match op {
                BinaryOp::Add => Ok(xa + xb),
                BinaryOp::Sub => Ok(xa - xb),
                BinaryOp::Mul => Ok(xa * xb),
                BinaryOp::Div => {
                    if xb == 0.0 {
                        Err(domain_err("division by zero", e))
                    } else {
                        Ok(xa / xb)
                    }
                }
            }
        }
        ScalarExpr::Pow(a, p) => {
            let base = eval_rec(a, vars)?;
            pow_value(base, *p, e)
        }
    }
}

/// x^p with conic-domain semantics: fractional exponents require a strictly
/// positive base (x = 0 allowed for positive exponents), integer exponents
/// work for any base except 0^negative.
fn pow_value(x: f64, p: Exponent, node: &ScalarExpr) -> Result<f64> {
    match p {
        Exponent::Rational(n, 1) => {
            if x == 0.0 && n < 0 {
                return Err(domain_err("zero base with negative exponent", node));
            }
            if n.unsigned_abs() <= i32::MAX as u64 {
                Ok(x.powi(n as i32))
            } else {
                Ok(x.powf(n as f64))
            }
        }
        Exponent::Rational(n, d) => {
            if x < 0.0 {
                return Err(domain_err(
                    "fractional power of negative base",
                    node,
                ));
            }
            if x == 0.0 {
                return if n > 0 {
                    Ok(0.0)
                } else {
                    Err(domain_err("zero base with negative exponent", node))
                };
            }
            // exact roots where the hardware provides them
            let root = match d {
                2 => x.sqrt(),
                3 => x.cbrt(),
                _ => return Ok(x.powf(n as f64 / d as f64)),
            };
            if n.unsigned_abs() <= i32::MAX as u64 {
                Ok(root.powi(n as i32))
            } else {
                Ok(root.powf(n as f64))
            }
        }
        Exponent::Real(r) => {
            if x < 0.0 {
                return Err(domain_err("real power of negative base", node));
            }
            if x == 0.0 && r < 0.0 {
                return Err(domain_err("zero base with negative exponent", node));
            }
            Ok(x.powf(r))
        }
    }
}

/// Evaluate a domain predicate. Comparison of non-finite values and
/// evaluation errors both make the predicate fail closed (treated by
/// callers as "outside the domain").
pub fn eval_bool(b: &BoolExpr, vars: EvalVars<'_>) -> Result<bool> {
    match b {
        BoolExpr::Cmp(op, a, c) => {
            let xa = evaluate(a, vars)?;
            let xc = evaluate(c, vars)?;
            Ok(match op {
                CmpOp::Gt => xa > xc,
                CmpOp::Ge => xa >= xc,
                CmpOp::Lt => xa < xc,
                CmpOp::Le => xa <= xc,
                CmpOp::Ne => xa != xc,
            })
        }
        BoolExpr::And(l, r) => Ok(eval_bool(l, vars)? && eval_bool(r, vars)?),
        BoolExpr::Or(l, r) => Ok(eval_bool(l, vars)? || eval_bool(r, vars)?),
    }
}
