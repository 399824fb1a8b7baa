//! Expression language for Hamiltonians, core maps and remainders.
//!
//! Grammar:
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' integer)?
//! base   := number | ident | '(' expr ')' | func '(' expr ')'
//! func   := sin | cos | exp | log | sqrt
//! ```
//! Whitespace is insignificant; identifiers match `[a-zA-Z][a-zA-Z0-9]*`.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
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

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Free identifiers in source order, deduplicated.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Pow(e, _) => e.collect_vars(out),
            Expr::Call(_, e) => e.collect_vars(out),
        }
    }

    /// Numeric evaluation with the given variable bindings.
    pub fn eval(&self, env: &HashMap<String, f64>) -> Result<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(name) => *env
                .get(name)
                .ok_or_else(|| Error::UnknownIdentifier(name.clone()))?,
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(env)?, b.eval(env)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            Expr::Pow(e, n) => e.eval(env)?.powi(*n as i32),
            Expr::Call(f, e) => {
                let v = e.eval(env)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Log => v.ln(),
                    Func::Sqrt => v.sqrt(),
                }
            }
        })
    }

    /// Lowers the expression into jet arithmetic. Variable `vars[i]` is
    /// seeded with the coordinate jet centered at `base[i]`.
    pub fn lower_to_jet(&self, vars: &[String], base: &[f64], order: usize) -> Result<Jet> {
        if vars.len() != base.len() {
            return Err(Error::DimensionMismatch {
                context: "lower_to_jet base",
                expected: vars.len(),
                got: base.len(),
            });
        }
        let n = vars.len();
        match self {
            Expr::Num(v) => Ok(Jet::constant(n, order, *v)),
            Expr::Var(name) => {
                let i = vars
                    .iter()
                    .position(|v| v == name)
                    .ok_or_else(|| Error::UnknownIdentifier(name.clone()))?;
                Ok(Jet::coordinate(n, order, i)?.add_scalar(base[i]))
            }
            Expr::Neg(e) => Ok(e.lower_to_jet(vars, base, order)?.neg()),
            Expr::Bin(op, a, b) => {
                let a = a.lower_to_jet(vars, base, order)?;
                let b = b.lower_to_jet(vars, base, order)?;
                match op {
                    BinOp::Add => a.checked_add(&b),
                    BinOp::Sub => a.checked_sub(&b),
                    BinOp::Mul => a.checked_mul(&b),
                    BinOp::Div => a.checked_div(&b),
                }
            }
            Expr::Pow(e, k) => e.lower_to_jet(vars, base, order)?.powi(*k as i32),
            Expr::Call(f, e) => {
                let arg = e.lower_to_jet(vars, base, order)?;
                match f {
                    Func::Sin => arg.sin(),
                    Func::Cos => arg.cos(),
                    Func::Exp => arg.exp(),
                    Func::Log => arg.log(),
                    Func::Sqrt => arg.sqrt(),
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        let prec = self.precedence();
        let parens = prec < parent;
        if parens {
            write!(f, "(")?;
        }
        match self {
            Expr::Num(v) => write!(f, "{v}")?,
            Expr::Var(name) => write!(f, "{name}")?,
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_prec(f, 4)?;
            }
            Expr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                a.fmt_prec(f, prec)?;
                write!(f, "{sym}")?;
                // right operand needs strictly higher precedence under - and /
                let rp = match op {
                    BinOp::Add | BinOp::Mul => prec,
                    BinOp::Sub | BinOp::Div => prec + 1,
                };
                b.fmt_prec(f, rp)?;
            }
            Expr::Pow(e, n) => {
                e.fmt_prec(f, 5)?;
                write!(f, "^{n}")?;
            }
            Expr::Call(func, e) => {
                write!(f, "{}(", func.name())?;
                e.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Parses source text into an [`Expr`], reporting byte offsets on error.
pub fn parse(src: &str) -> Result<Expr> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, detail: &str) -> Error {
        Error::Parse {
            offset: self.pos,
            detail: detail.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = Expr::Bin(BinOp::Add, Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = Expr::Bin(BinOp::Sub, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.factor()?;
                lhs = Expr::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'/') {
                let rhs = self.factor()?;
                lhs = Expr::Bin(BinOp::Div, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if self.eat(b'^') {
            let n = self.integer()?;
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected integer exponent"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let n = text
            .parse::<u32>()
            .map_err(|e| self.error(&format!("bad exponent: {e}")))?;
        self.skip_ws();
        Ok(n)
    }

    fn base(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let name = self.ident();
                if self.peek() == Some(b'(') {
                    let func = Func::from_name(&name)
                        .ok_or_else(|| Error::UnknownFunction(name.clone()))?;
                    self.pos += 1;
                    self.skip_ws();
                    let arg = self.expr()?;
                    if !self.eat(b')') {
                        return Err(self.error("expected `)`"));
                    }
                    Ok(Expr::Call(func, Box::new(arg)))
                } else {
                    self.skip_ws();
                    Ok(Expr::Var(name))
                }
            }
            _ => Err(self.error("expected number, identifier or `(`")),
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if self.peek() == Some(b'e') || self.peek() == Some(b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.peek() == Some(b'+') || self.peek() == Some(b'-') {
                self.pos += 1;
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // `2e` is not an exponent; rewind so `e` is left in the stream
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let v = text
            .parse::<f64>()
            .map_err(|e| self.error(&format!("bad number `{text}`: {e}")))?;
        self.skip_ws();
        Ok(Expr::Num(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pendulum() {
        let e = parse("p^2/2 + cos(q)").unwrap();
        assert_eq!(e.free_vars(), vec!["p".to_string(), "q".to_string()]);
        let mut env = HashMap::new();
        env.insert("p".to_string(), 0.4);
        env.insert("q".to_string(), 0.3);
        let v = e.eval(&env).unwrap();
        assert!((v - (0.08 + 0.3_f64.cos())).abs() < 1e-15);
    }

    #[test]
    fn parses_harmonic() {
        let e = parse("(p^2+q^2)/2").unwrap();
        let mut env = HashMap::new();
        env.insert("p".to_string(), 3.0);
        env.insert("q".to_string(), 4.0);
        assert_eq!(e.eval(&env).unwrap(), 12.5);
    }

    #[test]
    fn parses_remainder_example() {
        let e = parse("p^2*x").unwrap();
        let j = e
            .lower_to_jet(&["p".into(), "x".into()], &[0.0, 0.0], 3)
            .unwrap();
        assert_eq!(j.coeff(&[2, 1]), 1.0);
        assert_eq!(j.terms().count(), 1);
    }

    #[test]
    fn unary_minus_and_precedence() {
        let e = parse("-p^2 + 2*-p").unwrap();
        let mut env = HashMap::new();
        env.insert("p".to_string(), 3.0);
        assert_eq!(e.eval(&env).unwrap(), -15.0);
    }

    #[test]
    fn syntax_error_offsets() {
        match parse("p + * q") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            parse("foo(x)"),
            Err(Error::UnknownFunction(name)) if name == "foo"
        ));
    }

    #[test]
    fn unknown_identifier_at_lowering() {
        let e = parse("p + z").unwrap();
        assert!(matches!(
            e.lower_to_jet(&["p".into()], &[0.0], 2),
            Err(Error::UnknownIdentifier(name)) if name == "z"
        ));
    }

    #[test]
    fn print_parse_roundtrip() {
        for src in [
            "p^2/2 + cos(q)",
            "(p^2+q^2)/2",
            "p^2*x",
            "-x^3 + 4.5*x - 1e-3",
            "sin(x)*cos(y) - exp(x/(1 + y^2))",
            "sqrt(2 + x^2) / (3 - y)",
            "a - b - c",
            "a/(b/c)",
            "a - (b - c)",
        ] {
            let e1 = parse(src).unwrap();
            let printed = e1.to_string();
            let e2 = parse(&printed).unwrap();
            assert_eq!(e1, e2, "round-trip failed for `{src}` -> `{printed}`");
        }
    }

    #[test]
    fn lowering_matches_pointwise_eval() {
        let e = parse("p^2/2 + cos(q)").unwrap();
        let vars = vec!["p".to_string(), "q".to_string()];
        let j = e.lower_to_jet(&vars, &[0.0, 0.0], 4).unwrap();
        let jv = j.eval(&[0.1, 0.2]).unwrap();
        let mut env = HashMap::new();
        env.insert("p".to_string(), 0.1);
        env.insert("q".to_string(), 0.2);
        let direct = e.eval(&env).unwrap();
        // order-4 cos truncation error at 0.2 is ~ 0.2^6/720
        assert!((jv - direct).abs() < 1e-7);
        // the order-0 coefficient matches exactly when lowered at the point
        let j0 = e.lower_to_jet(&vars, &[0.1, 0.2], 0).unwrap();
        assert!((j0.constant_term() - direct).abs() < 1e-12);
    }

    #[test]
    fn cos_lowering_taylor() {
        let e = parse("cos(q)").unwrap();
        let j = e.lower_to_jet(&["q".into()], &[0.0], 4).unwrap();
        assert_eq!(j.coeff(&[0]), 1.0);
        assert_eq!(j.coeff(&[2]), -0.5);
        assert!((j.coeff(&[4]) - 1.0 / 24.0).abs() < 1e-16);
    }
}
