//! Closed-form scalar expressions over coordinates x1..xn, tangent variables
//! y1..yn and named parameters.
//!
//! Trees are immutable and share subtrees through `Arc`, so cloning during
//! symbolic differentiation is cheap and the results are safe to evaluate
//! from several threads at once. Simplification is deliberately limited to
//! constant folding, 0/1 identities and exponent collapse; numeric agreement
//! is what downstream code needs, not canonical forms.

mod deriv;
mod eval;
mod parse;

pub use deriv::{differentiate, differentiate_multi};
pub use eval::{eval_bool, evaluate, EvalVars};
pub use parse::{parse_bool_expr, parse_expr_str, parse_metric_source, ParseContext};

use std::fmt;
use std::sync::Arc;

/// Variable class: base coordinate, tangent (fiber) coordinate, or named parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarClass {
    X,
    Y,
    Param,
}

/// A variable reference. `index` is zero-based; `x1` is `Var { class: X, index: 0 }`.
/// For parameters the index points into the owning spec's parameter table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var {
    pub class: VarClass,
    pub index: usize,
}

impl Var {
    pub fn x(index: usize) -> Self {
        Var {
            class: VarClass::X,
            index,
        }
    }
    pub fn y(index: usize) -> Self {
        Var {
            class: VarClass::Y,
            index,
        }
    }
    pub fn param(index: usize) -> Self {
        Var {
            class: VarClass::Param,
            index,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sqrt,
    Sin,
    Cos,
    Exp,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Power exponent. Rationals are kept as exact numerator/denominator pairs
/// so that repeated power-rule steps like 2/3 → −1/3 → −4/3 stay exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Rational(i64, i64),
    Real(f64),
}

impl Exponent {
    pub fn int(k: i64) -> Self {
        Exponent::Rational(k, 1)
    }

    /// Normalized rational: positive denominator, reduced by gcd.
    pub fn rational(num: i64, den: i64) -> Self {
        assert!(den != 0, "rational exponent with zero denominator");
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        let (mut n, mut d) = (num / g, den / g);
        if d < 0 {
            n = -n;
            d = -d;
        }
        Exponent::Rational(n, d)
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Exponent::Rational(n, d) => n as f64 / d as f64,
            Exponent::Real(r) => r,
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Exponent::Rational(_, 1))
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Exponent::Rational(n, _) => n == 0,
            Exponent::Real(r) => r == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match *self {
            Exponent::Rational(n, d) => n == d,
            Exponent::Real(r) => r == 1.0,
        }
    }

    /// Exact p − 1 (used by the power rule).
    pub fn minus_one(&self) -> Exponent {
        match *self {
            Exponent::Rational(n, d) => Exponent::Rational(n - d, d),
            Exponent::Real(r) => Exponent::Real(r - 1.0),
        }
    }

    /// Exact product when both factors are rational and it does not overflow.
    pub fn checked_mul(&self, other: &Exponent) -> Option<Exponent> {
        match (*self, *other) {
            (Exponent::Rational(a, b), Exponent::Rational(c, d)) => {
                let num = a.checked_mul(c)?;
                let den = b.checked_mul(d)?;
                Some(Exponent::rational(num, den))
            }
            _ => None,
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        if a == 0 {
            1
        } else {
            a
        }
    } else {
        gcd(b, a % b)
    }
}

/// Expression tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, Arc<ScalarExpr>),
    Binary(BinaryOp, Arc<ScalarExpr>, Arc<ScalarExpr>),
    Pow(Arc<ScalarExpr>, Exponent),
}

/// Comparison operator inside a domain predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Gt,
    Ge,
    Lt,
    Le,
    Ne,
}

/// Boolean predicate over (x, y): comparisons combined with and/or.
#[derive(Debug, Clone, PartialEq)]
pub enum BoolExpr {
    Cmp(CmpOp, ScalarExpr, ScalarExpr),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
}

impl ScalarExpr {
    pub fn constant(v: f64) -> Self {
        ScalarExpr::Const(v)
    }

    pub fn var(v: Var) -> Self {
        ScalarExpr::Var(v)
    }

    pub fn is_zero_const(&self) -> bool {
        matches!(self, ScalarExpr::Const(c) if *c == 0.0)
    }

    pub fn is_one_const(&self) -> bool {
        matches!(self, ScalarExpr::Const(c) if *c == 1.0)
    }

    /// Does any node reference a variable of the given class?
    pub fn references_class(&self, class: VarClass) -> bool {
        match self {
            ScalarExpr::Const(_) => false,
            ScalarExpr::Var(v) => v.class == class,
            ScalarExpr::Unary(_, a) => a.references_class(class),
            ScalarExpr::Binary(_, a, b) => {
                a.references_class(class) || b.references_class(class)
            }
            ScalarExpr::Pow(a, _) => a.references_class(class),
        }
    }

    /// Largest 1-based index used per class, as (max_x, max_y).
    pub fn max_indices(&self) -> (usize, usize) {
        match self {
            ScalarExpr::Const(_) => (0, 0),
            ScalarExpr::Var(v) => match v.class {
                VarClass::X => (v.index + 1, 0),
                VarClass::Y => (0, v.index + 1),
                VarClass::Param => (0, 0),
            },
            ScalarExpr::Unary(_, a) => a.max_indices(),
            ScalarExpr::Binary(_, a, b) => {
                let (ax, ay) = a.max_indices();
                let (bx, by) = b.max_indices();
                (ax.max(bx), ay.max(by))
            }
            ScalarExpr::Pow(a, _) => a.max_indices(),
        }
    }

    /// Replace every occurrence of a parameter variable by an expression.
    pub fn substitute_param(&self, param_index: usize, replacement: &ScalarExpr) -> ScalarExpr {
        match self {
            ScalarExpr::Const(_) => self.clone(),
            ScalarExpr::Var(v) => {
                if v.class == VarClass::Param && v.index == param_index {
                    replacement.clone()
                } else {
                    self.clone()
                }
            }
            ScalarExpr::Unary(op, a) => {
                unary(*op, a.substitute_param(param_index, replacement))
            }
            ScalarExpr::Binary(op, a, b) => binary(
                *op,
                a.substitute_param(param_index, replacement),
                b.substitute_param(param_index, replacement),
            ),
            ScalarExpr::Pow(a, e) => powe(a.substitute_param(param_index, replacement), *e),
        }
    }

    /// Node count, mostly for diagnostics.
    pub fn size(&self) -> usize {
        match self {
            ScalarExpr::Const(_) | ScalarExpr::Var(_) => 1,
            ScalarExpr::Unary(_, a) | ScalarExpr::Pow(a, _) => 1 + a.size(),
            ScalarExpr::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }
}

// ---------------------------------------------------------------------------
// Smart constructors with constant folding and 0/1 identities.
// ---------------------------------------------------------------------------

pub fn add(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
    if a.is_zero_const() {
        return b;
    }
    if b.is_zero_const() {
        return a;
    }
    if let (ScalarExpr::Const(x), ScalarExpr::Const(y)) = (&a, &b) {
        return ScalarExpr::Const(x + y);
    }
    ScalarExpr::Binary(BinaryOp::Add, Arc::new(a), Arc::new(b))
}

pub fn sub(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
    if b.is_zero_const() {
        return a;
    }
    if a.is_zero_const() {
        return neg(b);
    }
    if let (ScalarExpr::Const(x), ScalarExpr::Const(y)) = (&a, &b) {
        return ScalarExpr::Const(x - y);
    }
    ScalarExpr::Binary(BinaryOp::Sub, Arc::new(a), Arc::new(b))
}

pub fn mul(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
    if a.is_zero_const() || b.is_zero_const() {
        return ScalarExpr::Const(0.0);
    }
    if a.is_one_const() {
        return b;
    }
    if b.is_one_const() {
        return a;
    }
    if let (ScalarExpr::Const(x), ScalarExpr::Const(y)) = (&a, &b) {
        return ScalarExpr::Const(x * y);
    }
    ScalarExpr::Binary(BinaryOp::Mul, Arc::new(a), Arc::new(b))
}

pub fn div(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
    if a.is_zero_const() {
        return ScalarExpr::Const(0.0);
    }
    if b.is_one_const() {
        return a;
    }
    if let (ScalarExpr::Const(x), ScalarExpr::Const(y)) = (&a, &b) {
        if *y != 0.0 {
            return ScalarExpr::Const(x / y);
        }
        // leave a literal division by zero in the tree so evaluation reports it
    }
    ScalarExpr::Binary(BinaryOp::Div, Arc::new(a), Arc::new(b))
}

pub fn neg(a: ScalarExpr) -> ScalarExpr {
    match a {
        ScalarExpr::Const(c) => ScalarExpr::Const(-c),
        ScalarExpr::Unary(UnaryOp::Neg, inner) => inner.as_ref().clone(),
        other => ScalarExpr::Unary(UnaryOp::Neg, Arc::new(other)),
    }
}

pub fn unary(op: UnaryOp, a: ScalarExpr) -> ScalarExpr {
    if op == UnaryOp::Neg {
        return neg(a);
    }
    if let ScalarExpr::Const(c) = a {
        let folded = match op {
            UnaryOp::Sqrt if c >= 0.0 => Some(c.sqrt()),
            UnaryOp::Sin => Some(c.sin()),
            UnaryOp::Cos => Some(c.cos()),
            UnaryOp::Exp => Some(c.exp()),
            UnaryOp::Log if c > 0.0 => Some(c.ln()),
            _ => None,
        };
        if let Some(v) = folded {
            return ScalarExpr::Const(v);
        }
        return ScalarExpr::Unary(op, Arc::new(ScalarExpr::Const(c)));
    }
    ScalarExpr::Unary(op, Arc::new(a))
}

pub fn binary(op: BinaryOp, a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
    match op {
        BinaryOp::Add => add(a, b),
        BinaryOp::Sub => sub(a, b),
        BinaryOp::Mul => mul(a, b),
        BinaryOp::Div => div(a, b),
    }
}

pub fn sqrt(a: ScalarExpr) -> ScalarExpr {
    unary(UnaryOp::Sqrt, a)
}

/// Power with a constant exponent. Folds e^0 → 1, e^1 → e, constant bases,
/// and collapses (u^p)^q → u^{pq} when the inner exponent is not an even
/// integer raised to a fractional power (where the collapse would drop a
/// sign restriction).
pub fn powe(base: ScalarExpr, exp: Exponent) -> ScalarExpr {
    if exp.is_zero() {
        return ScalarExpr::Const(1.0);
    }
    if exp.is_one() {
        return base;
    }
    if let ScalarExpr::Const(c) = base {
        match exp {
            Exponent::Rational(n, 1) if n.unsigned_abs() < 64 => {
                if c != 0.0 || n > 0 {
                    return ScalarExpr::Const(c.powi(n as i32));
                }
            }
            _ => {
                if c > 0.0 {
                    return ScalarExpr::Const(c.powf(exp.as_f64()));
                }
            }
        }
        return ScalarExpr::Pow(Arc::new(ScalarExpr::Const(c)), exp);
    }
    if let ScalarExpr::Pow(inner, p) = &base {
        let collapse_safe = match p {
            Exponent::Rational(n, 1) => n % 2 != 0 || exp.is_integer(),
            _ => true, // fractional inner exponent already forces a positive base
        };
        if collapse_safe {
            if let Some(prod) = p.checked_mul(&exp) {
                return powe(inner.as_ref().clone(), prod);
            }
        }
    }
    ScalarExpr::Pow(Arc::new(base), exp)
}

// ---------------------------------------------------------------------------
// Display: emits text the parser accepts back.
// ---------------------------------------------------------------------------

/// Rendering context mapping parameter indices back to names.
pub struct DisplayCtx<'a> {
    pub param_names: &'a [String],
}

impl ScalarExpr {
    pub fn to_source(&self, params: &[String]) -> String {
        let ctx = DisplayCtx {
            param_names: params,
        };
        let mut s = String::new();
        write_expr(&mut s, self, &ctx, 0);
        s
    }
}

fn fmt_const(c: f64) -> String {
    if c == c.trunc() && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{:?}", c)
    }
}

// precedence levels: 1 add/sub, 2 mul/div, 3 unary minus, 4 pow
fn write_expr(out: &mut String, e: &ScalarExpr, ctx: &DisplayCtx, parent_prec: u8) {
    let prec = match e {
        ScalarExpr::Const(c) if *c < 0.0 => 3,
        ScalarExpr::Const(_) | ScalarExpr::Var(_) => 5,
        ScalarExpr::Unary(UnaryOp::Neg, _) => 3,
        ScalarExpr::Unary(_, _) => 5,
        ScalarExpr::Binary(BinaryOp::Add | BinaryOp::Sub, _, _) => 1,
        ScalarExpr::Binary(_, _, _) => 2,
        ScalarExpr::Pow(_, _) => 4,
    };
    let need_paren = prec < parent_prec;
    if need_paren {
        out.push('(');
    }
    match e {
        ScalarExpr::Const(c) => out.push_str(&fmt_const(*c)),
        ScalarExpr::Var(v) => match v.class {
            VarClass::X => out.push_str(&format!("x{}", v.index + 1)),
            VarClass::Y => out.push_str(&format!("y{}", v.index + 1)),
            VarClass::Param => out.push_str(
                ctx.param_names
                    .get(v.index)
                    .map(|s| s.as_str())
                    .unwrap_or("?param"),
            ),
        },
        ScalarExpr::Unary(op, a) => match op {
            UnaryOp::Neg => {
                out.push('-');
                write_expr(out, a, ctx, 4);
            }
            other => {
                let name = match other {
                    UnaryOp::Sqrt => "sqrt",
                    UnaryOp::Sin => "sin",
                    UnaryOp::Cos => "cos",
                    UnaryOp::Exp => "exp",
                    UnaryOp::Log => "log",
                    UnaryOp::Neg => unreachable!(),
                };
                out.push_str(name);
                out.push('(');
                write_expr(out, a, ctx, 0);
                out.push(')');
            }
        },
        ScalarExpr::Binary(op, a, b) => {
            // right operands at equal precedence get parentheses so the
            // left-associative reparse rebuilds the same tree
            let (sym, lp, rp) = match op {
                BinaryOp::Add => ("+", 1, 2),
                BinaryOp::Sub => ("-", 1, 2),
                BinaryOp::Mul => ("*", 2, 3),
                BinaryOp::Div => ("/", 2, 3),
            };
            write_expr(out, a, ctx, lp);
            out.push_str(sym);
            write_expr(out, b, ctx, rp);
        }
        ScalarExpr::Pow(a, exp) => {
            write_expr(out, a, ctx, 5);
            out.push('^');
            match exp {
                Exponent::Rational(n, 1) => {
                    if *n < 0 {
                        out.push_str(&format!("({})", n));
                    } else {
                        out.push_str(&format!("{}", n));
                    }
                }
                Exponent::Rational(n, d) => out.push_str(&format!("({}/{})", n, d)),
                Exponent::Real(r) => out.push_str(&format!("({:?})", r)),
            }
        }
    }
    if need_paren {
        out.push(')');
    }
}

impl BoolExpr {
    pub fn to_source(&self, params: &[String]) -> String {
        match self {
            BoolExpr::Cmp(op, a, b) => {
                let sym = match op {
                    CmpOp::Gt => ">",
                    CmpOp::Ge => ">=",
                    CmpOp::Lt => "<",
                    CmpOp::Le => "<=",
                    CmpOp::Ne => "!=",
                };
                format!("{} {} {}", a.to_source(params), sym, b.to_source(params))
            }
            BoolExpr::And(a, b) => {
                format!("{} and {}", a.to_source(params), b.to_source(params))
            }
            BoolExpr::Or(a, b) => format!("{} or {}", a.to_source(params), b.to_source(params)),
        }
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // parameters rendered positionally when no name table is on hand
        let names: Vec<String> = (0..64).map(|i| format!("p{}", i)).collect();
        write!(f, "{}", self.to_source(&names))
    }
}
