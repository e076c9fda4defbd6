//! Lexer and recursive-descent Pratt parser for the metric-definition
//! language and its expression sublanguage.
//!
//! ```text
//! file      := stmt*                      (one statement per line, '#' comments)
//! stmt      := "dim" "=" INT
//!            | "energy" "=" expr
//!            | "param" IDENT "=" NUMBER
//!            | "domain" "=" boolexpr
//!            | "label" "=" STRING
//! expr      := precedence  ^ (right)  >  unary -  >  * /  >  + -
//! boolexpr  := cmp ("and" cmp)* combined with "or" (or binds loosest)
//! cmp       := expr (">"|">="|"<"|"<="|"!=") expr
//! ```
//!
//! Power exponents must be constant (integer, rational like `7/3`, or real);
//! rationals are folded exactly from the token stream before any f64
//! rounding can happen.

use super::{
    binary, neg, powe, unary, BinaryOp, BoolExpr, CmpOp, Exponent, ScalarExpr, UnaryOp, Var,
    VarClass,
};
use crate::error::{Error, Result};
use crate::metric::MetricSpec;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, int: Option<i64> },
    Ident(String),
    Str(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eq,
    Gt,
    Ge,
    Lt,
    Le,
    Ne,
    Newline,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syn(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        match c {
            '\n' => {
                chars.next();
                out.push(Token {
                    tok: Tok::Newline,
                    line: tline,
                    col: tcol,
                });
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                chars.next();
                col += 1;
            }
            '#' => {
                while let Some(&c2) = chars.peek() {
                    if c2 == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '"' => {
                chars.next();
                col += 1;
                let mut s = String::new();
                let mut closed = false;
                while let Some(c2) = chars.next() {
                    col += 1;
                    if c2 == '"' {
                        closed = true;
                        break;
                    }
                    if c2 == '\n' {
                        return Err(syn(tline, tcol, "unterminated string"));
                    }
                    s.push(c2);
                }
                if !closed {
                    return Err(syn(tline, tcol, "unterminated string"));
                }
                out.push(Token {
                    tok: Tok::Str(s),
                    line: tline,
                    col: tcol,
                });
            }
            '0'..='9' => {
                let mut s = String::new();
                let mut is_int = true;
                while let Some(&c2) = chars.peek() {
                    if c2.is_ascii_digit() {
                        s.push(c2);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                if chars.peek() == Some(&'.') {
                    // avoid consuming a free-standing dot that is not a fraction
                    let mut ahead = chars.clone();
                    ahead.next();
                    if ahead.peek().is_some_and(|c2| c2.is_ascii_digit()) {
                        is_int = false;
                        s.push('.');
                        chars.next();
                        col += 1;
                        while let Some(&c2) = chars.peek() {
                            if c2.is_ascii_digit() {
                                s.push(c2);
                                chars.next();
                                col += 1;
                            } else {
                                break;
                            }
                        }
                    }
                }
                if matches!(chars.peek(), Some('e') | Some('E')) {
                    let mut ahead = chars.clone();
                    ahead.next();
                    let mut exp = String::new();
                    if matches!(ahead.peek(), Some('+') | Some('-')) {
                        exp.push(*ahead.peek().unwrap());
                        ahead.next();
                    }
                    if ahead.peek().is_some_and(|c2| c2.is_ascii_digit()) {
                        is_int = false;
                        s.push('e');
                        chars.next();
                        col += 1;
                        if !exp.is_empty() {
                            s.push_str(&exp);
                            chars.next();
                            col += 1;
                        }
                        while let Some(&c2) = chars.peek() {
                            if c2.is_ascii_digit() {
                                s.push(c2);
                                chars.next();
                                col += 1;
                            } else {
                                break;
                            }
                        }
                    }
                }
                let value: f64 = s
                    .parse()
                    .map_err(|_| syn(tline, tcol, format!("bad number literal `{}`", s)))?;
                let int = if is_int { s.parse::<i64>().ok() } else { None };
                out.push(Token {
                    tok: Tok::Num { value, int },
                    line: tline,
                    col: tcol,
                });
            }
            c2 if c2.is_ascii_alphabetic() || c2 == '_' => {
                let mut s = String::new();
                while let Some(&c3) = chars.peek() {
                    if c3.is_ascii_alphanumeric() || c3 == '_' {
                        s.push(c3);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                out.push(Token {
                    tok: Tok::Ident(s),
                    line: tline,
                    col: tcol,
                });
            }
            _ => {
                chars.next();
                col += 1;
                let tok = match c {
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '^' => Tok::Caret,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '=' => Tok::Eq,
                    '>' => {
                        if chars.peek() == Some(&'=') {
                            chars.next();
                            col += 1;
                            Tok::Ge
                        } else {
                            Tok::Gt
                        }
                    }
                    '<' => {
                        if chars.peek() == Some(&'=') {
                            chars.next();
                            col += 1;
                            Tok::Le
                        } else {
                            Tok::Lt
                        }
                    }
                    '!' => {
                        if chars.peek() == Some(&'=') {
                            chars.next();
                            col += 1;
                            Tok::Ne
                        } else {
                            return Err(syn(tline, tcol, "expected `!=`"));
                        }
                    }
                    other => {
                        return Err(syn(tline, tcol, format!("unexpected character `{}`", other)))
                    }
                };
                out.push(Token {
                    tok,
                    line: tline,
                    col: tcol,
                });
            }
        }
    }
    Ok(out)
}

/// Resolution context for identifiers inside expressions.
#[derive(Debug, Clone)]
pub struct ParseContext {
    pub dim: usize,
    pub params: Vec<String>,
}

impl ParseContext {
    pub fn new(dim: usize, params: &[String]) -> Self {
        ParseContext {
            dim,
            params: params.to_vec(),
        }
    }
}

const FUNCTIONS: [(&str, UnaryOp); 5] = [
    ("sqrt", UnaryOp::Sqrt),
    ("sin", UnaryOp::Sin),
    ("cos", UnaryOp::Cos),
    ("exp", UnaryOp::Exp),
    ("log", UnaryOp::Log),
];

const KEYWORDS: [&str; 7] = ["dim", "energy", "param", "domain", "label", "and", "or"];

fn classify_ident(name: &str) -> Option<(VarClass, usize)> {
    let mut it = name.chars();
    let first = it.next()?;
    let class = match first {
        'x' => VarClass::X,
        'y' => VarClass::Y,
        _ => return None,
    };
    let rest: String = it.collect();
    if rest.is_empty() || !rest.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let idx: usize = rest.parse().ok()?;
    if idx == 0 {
        return None;
    }
    Some((class, idx - 1))
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    ctx: &'a ParseContext,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1))
    }

    fn bump(&mut self) -> Option<&Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        let (line, col) = self.here();
        match self.bump() {
            Some(t) if t.tok == tok => Ok(()),
            _ => Err(syn(line, col, format!("expected {}", what))),
        }
    }

    fn resolve_ident(&self, name: &str, line: usize, col: usize) -> Result<ScalarExpr> {
        if let Some((class, index)) = classify_ident(name) {
            if index >= self.ctx.dim {
                return Err(Error::DimensionMismatch {
                    name: name.to_string(),
                    dim: self.ctx.dim,
                    line,
                    col,
                });
            }
            return Ok(ScalarExpr::Var(Var { class, index }));
        }
        if let Some(idx) = self.ctx.params.iter().position(|p| p == name) {
            return Ok(ScalarExpr::Var(Var::param(idx)));
        }
        Err(Error::UnknownIdentifier {
            name: name.to_string(),
            line,
            col,
        })
    }

    // binding powers: + - (10, 11); * / (20, 21); prefix - r_bp 26; ^ (31, 30)
    fn parse_expr_bp(&mut self, min_bp: u8) -> Result<ScalarExpr> {
        let (line, col) = self.here();
        let mut lhs = match self.bump().map(|t| (t.tok.clone(), t.line, t.col)) {
            Some((Tok::Num { value, .. }, _, _)) => ScalarExpr::Const(value),
            Some((Tok::Ident(name), tl, tc)) => {
                if let Some((_, op)) = FUNCTIONS.iter().find(|(f, _)| *f == name) {
                    self.expect(Tok::LParen, "`(` after function name")?;
                    let arg = self.parse_expr_bp(0)?;
                    self.expect(Tok::RParen, "closing `)`")?;
                    unary(*op, arg)
                } else if KEYWORDS.contains(&name.as_str()) {
                    return Err(syn(tl, tc, format!("unexpected keyword `{}`", name)));
                } else {
                    self.resolve_ident(&name, tl, tc)?
                }
            }
            Some((Tok::LParen, _, _)) => {
                let e = self.parse_expr_bp(0)?;
                self.expect(Tok::RParen, "closing `)`")?;
                e
            }
            Some((Tok::Minus, _, _)) => {
                let operand = self.parse_expr_bp(26)?;
                neg(operand)
            }
            _ => return Err(syn(line, col, "expected expression")),
        };
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinaryOp::Add,
                Some(Tok::Minus) => BinaryOp::Sub,
                Some(Tok::Star) => BinaryOp::Mul,
                Some(Tok::Slash) => BinaryOp::Div,
                Some(Tok::Caret) => {
                    if 31 < min_bp {
                        break;
                    }
                    self.bump();
                    let exp = self.parse_exponent()?;
                    lhs = powe(lhs, exp);
                    continue;
                }
                _ => break,
            };
            let (l_bp, r_bp) = match op {
                BinaryOp::Add | BinaryOp::Sub => (10, 11),
                BinaryOp::Mul | BinaryOp::Div => (20, 21),
            };
            if l_bp < min_bp {
                break;
            }
            self.bump();
            let rhs = self.parse_expr_bp(r_bp)?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    /// Constant-expression parser for the exponent position. Integer and
    /// rational arithmetic stays exact; anything referencing a variable is
    /// rejected.
    fn parse_exponent(&mut self) -> Result<Exponent> {
        self.parse_exponent_bp(30)
    }

    fn parse_exponent_bp(&mut self, min_bp: u8) -> Result<Exponent> {
        let (line, col) = self.here();
        let mut lhs = match self.bump().map(|t| (t.tok.clone(), t.line, t.col)) {
            Some((Tok::Num { value, int }, _, _)) => match int {
                Some(k) => Exponent::int(k),
                None => Exponent::Real(value),
            },
            Some((Tok::LParen, _, _)) => {
                let e = self.parse_exponent_bp(0)?;
                self.expect(Tok::RParen, "closing `)` in exponent")?;
                e
            }
            Some((Tok::Minus, _, _)) => {
                let e = self.parse_exponent_bp(26)?;
                exp_neg(e)
            }
            Some((Tok::Ident(_), tl, tc)) => {
                return Err(syn(tl, tc, "pow exponent must be a constant"));
            }
            _ => return Err(syn(line, col, "expected constant exponent")),
        };
        loop {
            let (op, l_bp, r_bp): (fn(Exponent, Exponent) -> Result<Exponent>, u8, u8) =
                match self.peek() {
                    Some(Tok::Plus) => (exp_add, 10, 11),
                    Some(Tok::Minus) => (exp_sub, 10, 11),
                    Some(Tok::Star) => (exp_mul, 20, 21),
                    Some(Tok::Slash) => (exp_div, 20, 21),
                    Some(Tok::Caret) => (exp_pow, 31, 30),
                    _ => break,
                };
            if l_bp < min_bp {
                break;
            }
            let (tl, tc) = self.here();
            self.bump();
            let rhs = self.parse_exponent_bp(r_bp)?;
            lhs = op(lhs, rhs).map_err(|e| match e {
                Error::Spec(msg) => syn(tl, tc, msg),
                other => other,
            })?;
        }
        Ok(lhs)
    }

    fn parse_bool(&mut self) -> Result<BoolExpr> {
        let mut lhs = self.parse_bool_and()?;
        while let Some(Tok::Ident(name)) = self.peek() {
            if name != "or" {
                break;
            }
            self.bump();
            let rhs = self.parse_bool_and()?;
            lhs = BoolExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_bool_and(&mut self) -> Result<BoolExpr> {
        let mut lhs = self.parse_cmp()?;
        while let Some(Tok::Ident(name)) = self.peek() {
            if name != "and" {
                break;
            }
            self.bump();
            let rhs = self.parse_cmp()?;
            lhs = BoolExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_cmp(&mut self) -> Result<BoolExpr> {
        let lhs = self.parse_expr_bp(0)?;
        let (line, col) = self.here();
        let op = match self.bump().map(|t| t.tok.clone()) {
            Some(Tok::Gt) => CmpOp::Gt,
            Some(Tok::Ge) => CmpOp::Ge,
            Some(Tok::Lt) => CmpOp::Lt,
            Some(Tok::Le) => CmpOp::Le,
            Some(Tok::Ne) => CmpOp::Ne,
            _ => return Err(syn(line, col, "expected comparison operator")),
        };
        let rhs = self.parse_expr_bp(0)?;
        Ok(BoolExpr::Cmp(op, lhs, rhs))
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

fn exp_rat_pair(e: Exponent) -> Option<(i64, i64)> {
    match e {
        Exponent::Rational(n, d) => Some((n, d)),
        Exponent::Real(_) => None,
    }
}

fn exp_combine(
    a: Exponent,
    b: Exponent,
    rat: impl Fn(i64, i64, i64, i64) -> Option<(i64, i64)>,
    real: impl Fn(f64, f64) -> f64,
) -> Result<Exponent> {
    if let (Some((an, ad)), Some((bn, bd))) = (exp_rat_pair(a), exp_rat_pair(b)) {
        if let Some((n, d)) = rat(an, ad, bn, bd) {
            if d == 0 {
                return Err(Error::Spec("division by zero in exponent".into()));
            }
            return Ok(Exponent::rational(n, d));
        }
    }
    Ok(Exponent::Real(real(a.as_f64(), b.as_f64())))
}

fn exp_add(a: Exponent, b: Exponent) -> Result<Exponent> {
    exp_combine(
        a,
        b,
        |an, ad, bn, bd| {
            Some((
                an.checked_mul(bd)?.checked_add(bn.checked_mul(ad)?)?,
                ad.checked_mul(bd)?,
            ))
        },
        |x, y| x + y,
    )
}

fn exp_sub(a: Exponent, b: Exponent) -> Result<Exponent> {
    exp_combine(
        a,
        b,
        |an, ad, bn, bd| {
            Some((
                an.checked_mul(bd)?.checked_sub(bn.checked_mul(ad)?)?,
                ad.checked_mul(bd)?,
            ))
        },
        |x, y| x - y,
    )
}

fn exp_mul(a: Exponent, b: Exponent) -> Result<Exponent> {
    exp_combine(
        a,
        b,
        |an, ad, bn, bd| Some((an.checked_mul(bn)?, ad.checked_mul(bd)?)),
        |x, y| x * y,
    )
}

fn exp_div(a: Exponent, b: Exponent) -> Result<Exponent> {
    if b.is_zero() {
        return Err(Error::Spec("division by zero in exponent".into()));
    }
    exp_combine(
        a,
        b,
        |an, ad, bn, bd| Some((an.checked_mul(bd)?, ad.checked_mul(bn)?)),
        |x, y| x / y,
    )
}

fn exp_pow(a: Exponent, b: Exponent) -> Result<Exponent> {
    if let (Some((an, ad)), Some((k, 1))) = (exp_rat_pair(a), exp_rat_pair(b)) {
        if (0..16).contains(&k) {
            let mut n: i64 = 1;
            let mut d: i64 = 1;
            for _ in 0..k {
                n = n.checked_mul(an).ok_or_else(overflow)?;
                d = d.checked_mul(ad).ok_or_else(overflow)?;
            }
            return Ok(Exponent::rational(n, d));
        }
    }
    let v = a.as_f64().powf(b.as_f64());
    if !v.is_finite() {
        return Err(Error::Spec("non-finite constant exponent".into()));
    }
    Ok(Exponent::Real(v))
}

fn overflow() -> Error {
    Error::Spec("exponent arithmetic overflow".into())
}

fn exp_neg(e: Exponent) -> Exponent {
    match e {
        Exponent::Rational(n, d) => Exponent::Rational(-n, d),
        Exponent::Real(r) => Exponent::Real(-r),
    }
}

/// Parse a standalone arithmetic expression (field components, potentials,
/// expected-component formulas).
pub fn parse_expr_str(src: &str, ctx: &ParseContext) -> Result<ScalarExpr> {
    let toks_all = lex(src)?;
    let toks: Vec<Token> = toks_all
        .into_iter()
        .filter(|t| t.tok != Tok::Newline)
        .collect();
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        ctx,
    };
    let e = p.parse_expr_bp(0)?;
    if !p.at_end() {
        let (line, col) = p.here();
        return Err(syn(line, col, "trailing input after expression"));
    }
    Ok(e)
}

/// Parse a standalone boolean predicate.
pub fn parse_bool_expr(src: &str, ctx: &ParseContext) -> Result<BoolExpr> {
    let toks_all = lex(src)?;
    let toks: Vec<Token> = toks_all
        .into_iter()
        .filter(|t| t.tok != Tok::Newline)
        .collect();
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        ctx,
    };
    let e = p.parse_bool()?;
    if !p.at_end() {
        let (line, col) = p.here();
        return Err(syn(line, col, "trailing input after predicate"));
    }
    Ok(e)
}

enum RawStmt<'a> {
    Dim(usize),
    Energy(&'a [Token]),
    Param(String, f64),
    Domain(&'a [Token]),
    Label(String),
}

fn split_statement(toks: &[Token]) -> Result<RawStmt<'_>> {
    let first = &toks[0];
    let kw = match &first.tok {
        Tok::Ident(s) => s.as_str(),
        _ => {
            return Err(syn(
                first.line,
                first.col,
                "expected statement keyword (dim, energy, param, domain, label)",
            ))
        }
    };
    let need = |idx: usize, what: &str| -> Result<&Token> {
        toks.get(idx)
            .ok_or_else(|| syn(first.line, first.col, format!("expected {}", what)))
    };
    match kw {
        "dim" => {
            let eq = need(1, "`=` after dim")?;
            if eq.tok != Tok::Eq {
                return Err(syn(eq.line, eq.col, "expected `=` after dim"));
            }
            let n = need(2, "integer dimension")?;
            let value = match n.tok {
                Tok::Num { int: Some(k), .. } if k >= 1 => k as usize,
                _ => return Err(syn(n.line, n.col, "dimension must be a positive integer")),
            };
            if toks.len() > 3 {
                let t = &toks[3];
                return Err(syn(t.line, t.col, "trailing input after dim statement"));
            }
            Ok(RawStmt::Dim(value))
        }
        "energy" => {
            let eq = need(1, "`=` after energy")?;
            if eq.tok != Tok::Eq {
                return Err(syn(eq.line, eq.col, "expected `=` after energy"));
            }
            if toks.len() < 3 {
                return Err(syn(first.line, first.col, "empty energy expression"));
            }
            Ok(RawStmt::Energy(&toks[2..]))
        }
        "domain" => {
            let eq = need(1, "`=` after domain")?;
            if eq.tok != Tok::Eq {
                return Err(syn(eq.line, eq.col, "expected `=` after domain"));
            }
            if toks.len() < 3 {
                return Err(syn(first.line, first.col, "empty domain predicate"));
            }
            Ok(RawStmt::Domain(&toks[2..]))
        }
        "param" => {
            let name_tok = need(1, "parameter name")?;
            let name = match &name_tok.tok {
                Tok::Ident(s) => s.clone(),
                _ => return Err(syn(name_tok.line, name_tok.col, "expected parameter name")),
            };
            if classify_ident(&name).is_some()
                || KEYWORDS.contains(&name.as_str())
                || FUNCTIONS.iter().any(|(f, _)| *f == name)
            {
                return Err(Error::Spec(format!(
                    "parameter name `{}` collides with a variable, keyword or function",
                    name
                )));
            }
            let eq = need(2, "`=` after parameter name")?;
            if eq.tok != Tok::Eq {
                return Err(syn(eq.line, eq.col, "expected `=` after parameter name"));
            }
            let mut idx = 3;
            let mut sign = 1.0;
            if matches!(toks.get(idx).map(|t| &t.tok), Some(Tok::Minus)) {
                sign = -1.0;
                idx += 1;
            }
            let val_tok = need(idx, "numeric parameter value")?;
            let value = match val_tok.tok {
                Tok::Num { value, .. } => sign * value,
                _ => {
                    return Err(syn(
                        val_tok.line,
                        val_tok.col,
                        "expected numeric parameter value",
                    ))
                }
            };
            if toks.len() > idx + 1 {
                let t = &toks[idx + 1];
                return Err(syn(t.line, t.col, "trailing input after param statement"));
            }
            Ok(RawStmt::Param(name, value))
        }
        "label" => {
            let eq = need(1, "`=` after label")?;
            if eq.tok != Tok::Eq {
                return Err(syn(eq.line, eq.col, "expected `=` after label"));
            }
            let s = need(2, "quoted label string")?;
            let text = match &s.tok {
                Tok::Str(t) => t.clone(),
                _ => return Err(syn(s.line, s.col, "expected quoted label string")),
            };
            if toks.len() > 3 {
                let t = &toks[3];
                return Err(syn(t.line, t.col, "trailing input after label statement"));
            }
            Ok(RawStmt::Label(text))
        }
        other => Err(syn(
            first.line,
            first.col,
            format!("unknown statement `{}`", other),
        )),
    }
}

/// Parse a complete metric definition. Statements may appear in any order;
/// identifier resolution happens once `dim` and all `param` declarations are
/// known, so `energy` may precede them in the file.
pub fn parse_metric_source(src: &str) -> Result<MetricSpec> {
    let toks = lex(src)?;
    let mut stmts: Vec<&[Token]> = Vec::new();
    let mut start = 0usize;
    for (i, t) in toks.iter().enumerate() {
        if t.tok == Tok::Newline {
            if i > start {
                stmts.push(&toks[start..i]);
            }
            start = i + 1;
        }
    }
    if toks.len() > start {
        stmts.push(&toks[start..]);
    }

    let mut dim: Option<usize> = None;
    let mut energy_toks: Option<&[Token]> = None;
    let mut domain_toks: Option<&[Token]> = None;
    let mut params: Vec<(String, f64)> = Vec::new();
    let mut label = String::new();

    for stmt in stmts {
        match split_statement(stmt)? {
            RawStmt::Dim(n) => {
                if dim.replace(n).is_some() {
                    return Err(Error::Spec("duplicate dim statement".into()));
                }
            }
            RawStmt::Energy(t) => {
                if energy_toks.replace(t).is_some() {
                    return Err(Error::Spec("duplicate energy statement".into()));
                }
            }
            RawStmt::Domain(t) => {
                if domain_toks.replace(t).is_some() {
                    return Err(Error::Spec("duplicate domain statement".into()));
                }
            }
            RawStmt::Param(name, value) => {
                if params.iter().any(|(n, _)| *n == name) {
                    return Err(Error::Spec(format!("duplicate parameter `{}`", name)));
                }
                params.push((name, value));
            }
            RawStmt::Label(text) => {
                if !label.is_empty() {
                    return Err(Error::Spec("duplicate label statement".into()));
                }
                label = text;
            }
        }
    }

    let dim = dim.ok_or_else(|| Error::Spec("missing dim statement".into()))?;
    let energy_toks =
        energy_toks.ok_or_else(|| Error::Spec("missing energy statement".into()))?;
    let ctx = ParseContext {
        dim,
        params: params.iter().map(|(n, _)| n.clone()).collect(),
    };

    let energy = {
        let mut p = Parser {
            toks: energy_toks,
            pos: 0,
            ctx: &ctx,
        };
        let e = p.parse_expr_bp(0)?;
        if !p.at_end() {
            let (line, col) = p.here();
            return Err(syn(line, col, "trailing input after energy expression"));
        }
        e
    };

    let domain = match domain_toks {
        Some(toks) => {
            let mut p = Parser {
                toks,
                pos: 0,
                ctx: &ctx,
            };
            let b = p.parse_bool()?;
            if !p.at_end() {
                let (line, col) = p.here();
                return Err(syn(line, col, "trailing input after domain predicate"));
            }
            Some(b)
        }
        None => None,
    };

    MetricSpec::new(dim, energy, params, domain, label)
}
