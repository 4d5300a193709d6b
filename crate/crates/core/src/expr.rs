//! Closed-form expression DSL over coordinates `x1..xn`.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' integer)?
//! base   := number | 'x' digits | func '(' expr ')' | '(' expr ')' | '-' base
//! func   := sin | cos | exp | log | sqrt
//! ```
//!
//! Exponents are literal integers; general powers can be spelled
//! `exp(k*log(x))`. Evaluation produces a [`Jet2`], i.e. exact value,
//! gradient and Hessian at the point.

use crate::error::{Error, Result};
use crate::jet::Jet2;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// 0-based coordinate index (`x1` parses to `Var(0)`).
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Func(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }
}

impl Expr {
    /// Parse `text` against `n` coordinates.
    pub fn parse(text: &str, n: usize) -> Result<Expr> {
        Parser {
            bytes: text.as_bytes(),
            pos: 0,
            n,
        }
        .parse_all()
    }

    /// Exact value, gradient and Hessian at `p` (length-`n` point).
    pub fn eval_jet2(&self, p: &[f64]) -> Result<Jet2> {
        let n = p.len();
        match self {
            Expr::Const(c) => Ok(Jet2::constant(n, *c)),
            Expr::Var(i) => Ok(Jet2::variable(n, *i, p[*i])),
            Expr::Neg(a) => Ok(a.eval_jet2(p)?.neg()),
            Expr::Add(a, b) => Ok(a.eval_jet2(p)?.add(&b.eval_jet2(p)?)),
            Expr::Sub(a, b) => Ok(a.eval_jet2(p)?.sub(&b.eval_jet2(p)?)),
            Expr::Mul(a, b) => Ok(a.eval_jet2(p)?.mul(&b.eval_jet2(p)?)),
            Expr::Div(a, b) => a
                .eval_jet2(p)?
                .div(&b.eval_jet2(p)?)
                .map_err(|kind| self.domain_err(kind)),
            Expr::Pow(a, k) => a
                .eval_jet2(p)?
                .powi(*k)
                .map_err(|kind| self.domain_err(kind)),
            Expr::Func(f, a) => {
                let ja = a.eval_jet2(p)?;
                let r = match f {
                    Func::Sin => Ok(ja.sin()),
                    Func::Cos => Ok(ja.cos()),
                    Func::Exp => Ok(ja.exp()),
                    Func::Log => ja.ln(),
                    Func::Sqrt => ja.sqrt(),
                };
                r.map_err(|kind| self.domain_err(kind))
            }
        }
    }

    /// Value only; used by the finite-difference oracles in tests and by the
    /// validators, where gradients are not needed.
    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(i) => Ok(p[*i]),
            Expr::Neg(a) => Ok(-a.eval(p)?),
            Expr::Add(a, b) => Ok(a.eval(p)? + b.eval(p)?),
            Expr::Sub(a, b) => Ok(a.eval(p)? - b.eval(p)?),
            Expr::Mul(a, b) => Ok(a.eval(p)? * b.eval(p)?),
            Expr::Div(a, b) => {
                let d = b.eval(p)?;
                if d == 0.0 {
                    return Err(self.domain_err(crate::error::DomainErrorKind::DivisionByZero));
                }
                Ok(a.eval(p)? / d)
            }
            Expr::Pow(a, k) => {
                let base = a.eval(p)?;
                if base == 0.0 && *k < 0 {
                    return Err(self.domain_err(crate::error::DomainErrorKind::NegativePowerOfZero));
                }
                Ok(base.powi(*k))
            }
            Expr::Func(f, a) => {
                let v = a.eval(p)?;
                match f {
                    Func::Sin => Ok(v.sin()),
                    Func::Cos => Ok(v.cos()),
                    Func::Exp => Ok(v.exp()),
                    Func::Log if v > 0.0 => Ok(v.ln()),
                    Func::Log => {
                        Err(self.domain_err(crate::error::DomainErrorKind::LogNonPositive))
                    }
                    Func::Sqrt if v > 0.0 => Ok(v.sqrt()),
                    Func::Sqrt => {
                        Err(self.domain_err(crate::error::DomainErrorKind::SqrtNonPositive))
                    }
                }
            }
        }
    }

    /// Symbolic partial derivative with respect to coordinate `var`
    /// (0-based). No simplification beyond dropping obvious zero branches;
    /// used to build exact differentials `d_h f` of scalar expressions.
    pub fn derivative(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(i) => Expr::Const(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::Neg(Box::new(a.derivative(var))),
            Expr::Add(a, b) => Expr::Add(Box::new(a.derivative(var)), Box::new(b.derivative(var))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.derivative(var)), Box::new(b.derivative(var))),
            Expr::Mul(a, b) => Expr::Add(
                Box::new(Expr::Mul(Box::new(a.derivative(var)), b.clone())),
                Box::new(Expr::Mul(a.clone(), Box::new(b.derivative(var)))),
            ),
            Expr::Div(a, b) => {
                // (a/b)' = a'/b - a b'/b^2
                Expr::Sub(
                    Box::new(Expr::Div(Box::new(a.derivative(var)), b.clone())),
                    Box::new(Expr::Div(
                        Box::new(Expr::Mul(a.clone(), Box::new(b.derivative(var)))),
                        Box::new(Expr::Pow(b.clone(), 2)),
                    )),
                )
            }
            Expr::Pow(a, k) => {
                // (a^k)' = k a^(k-1) a'
                Expr::Mul(
                    Box::new(Expr::Mul(
                        Box::new(Expr::Const(f64::from(*k))),
                        Box::new(Expr::Pow(a.clone(), k - 1)),
                    )),
                    Box::new(a.derivative(var)),
                )
            }
            Expr::Func(f, a) => {
                let inner = Box::new(a.derivative(var));
                let outer = match f {
                    Func::Sin => Expr::Func(Func::Cos, a.clone()),
                    Func::Cos => Expr::Neg(Box::new(Expr::Func(Func::Sin, a.clone()))),
                    Func::Exp => Expr::Func(Func::Exp, a.clone()),
                    Func::Log => Expr::Div(Box::new(Expr::Const(1.0)), a.clone()),
                    Func::Sqrt => Expr::Div(
                        Box::new(Expr::Const(0.5)),
                        Box::new(Expr::Func(Func::Sqrt, a.clone())),
                    ),
                };
                Expr::Mul(Box::new(outer), inner)
            }
        }
    }

    /// Largest 0-based variable index mentioned, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    fn domain_err(&self, kind: crate::error::DomainErrorKind) -> Error {
        Error::Domain {
            kind,
            subexpr: self.to_string(),
        }
    }
}

/// Fully parenthesized output; re-parsing yields an expression with
/// identical evaluation.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, k) if *k < 0 => write!(f, "({a}^({k}))"),
            Expr::Pow(a, k) => write!(f, "({a}^{k})"),
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    n: usize,
}

impl<'a> Parser<'a> {
    fn parse_all(mut self) -> Result<Expr> {
        self.skip_ws();
        if self.pos >= self.bytes.len() {
            return Err(self.err("empty expression"));
        }
        let e = self.expr()?;
        self.skip_ws();
        if self.pos < self.bytes.len() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(e)
    }

    fn err(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let k = self.integer()?;
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.err("expected expression")),
            Some(b'-') => {
                self.pos += 1;
                // fold a directly negated number literal into the constant
                // so printing and re-parsing is structure-preserving
                match self.base()? {
                    Expr::Const(c) => Ok(Expr::Const(-c)),
                    other => Ok(Expr::Neg(Box::new(other))),
                }
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(self.err(&format!("unexpected character '{}'", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit() || *c == b'.')
        {
            self.pos += 1;
        }
        // optional exponent part, e.g. 1e-3
        if self
            .bytes
            .get(self.pos)
            .is_some_and(|c| *c == b'e' || *c == b'E')
        {
            let mut la = self.pos + 1;
            if self.bytes.get(la).is_some_and(|c| *c == b'+' || *c == b'-') {
                la += 1;
            }
            if self.bytes.get(la).is_some_and(|c| c.is_ascii_digit()) {
                self.pos = la;
                while self.bytes.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| Error::Syntax {
            offset: start,
            message: format!("invalid number literal '{text}'"),
        })?;
        Ok(Expr::Const(value))
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric())
        {
            self.pos += 1;
        }
        let word = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        if let Some(digits) = word.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|c| c.is_ascii_digit()) {
                let index: usize = digits.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("invalid variable '{word}'"),
                })?;
                if index == 0 || index > self.n {
                    return Err(Error::VarOutOfRange {
                        index,
                        max: self.n,
                        offset: start,
                    });
                }
                return Ok(Expr::Var(index - 1));
            }
        }
        let func = match word {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => {
                return Err(Error::UnknownFunction {
                    name: word.to_string(),
                    offset: start,
                });
            }
        };
        if self.peek() != Some(b'(') {
            return Err(self.err(&format!("expected '(' after '{word}'")));
        }
        self.pos += 1;
        let arg = self.expr()?;
        if self.peek() != Some(b')') {
            return Err(self.err("expected ')'"));
        }
        self.pos += 1;
        Ok(Expr::Func(func, Box::new(arg)))
    }

    fn integer(&mut self) -> Result<i32> {
        self.skip_ws();
        let start = self.pos;
        if self.bytes.get(self.pos).is_some_and(|c| *c == b'-') {
            self.pos += 1;
        }
        while self.bytes.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        text.parse().map_err(|_| Error::Syntax {
            offset: start,
            message: "expected integer exponent".to_string(),
        })
    }
}
