//! A small expression language for authoring payoffs, couplings, and
//! integrands: constants, variables `x1..xN`, `+ - * /`, integer powers,
//! `abs`, `max`, `min`, and unary minus. `abs`/`max`/`min` generate all the
//! nonsmoothness the instances need while keeping closed-form Clarke
//! derivatives available for tests.

use std::fmt;

use crate::error::{Error, Result};
use crate::nonsmooth::ScalarFn;

/// Division (and negative powers) are guarded below this magnitude.
const DIV_GUARD: f64 = 1e-300;
/// Maximum operand-stack depth of a compiled expression.
const MAX_STACK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// 0-based variable index; rendered as `x{i+1}`.
    Var(usize),
    Neg(Box<Node>),
    Abs(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Max(Box<Node>, Box<Node>),
    Min(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
}

/// A parsed expression together with its declared arity.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    arity: usize,
}

/// Parse `text` against standard precedence
/// (power > unary minus > `*`,`/` > `+`,`-`), with variables `x1..x{arity}`.
pub fn parse_expr(text: &str, arity: usize) -> Result<Expr> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        arity,
    };
    p.skip_ws();
    let root = p.parse_add()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(Error::Parse {
            offset: p.pos,
            message: format!("unexpected trailing input `{}`", &text[p.pos..]),
        });
    }
    Ok(Expr { root, arity })
}

impl Expr {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Exact recursive evaluation with guarded division.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.arity {
            return Err(Error::dim("Expr::eval", self.arity, point.len()));
        }
        let v = eval_node(&self.root, point)?;
        if !v.is_finite() {
            return Err(Error::NumericDomain(format!(
                "expression evaluated to {v} at {point:?}"
            )));
        }
        Ok(v)
    }

    /// Compile to a flat program for repeated evaluation.
    pub fn compile(&self) -> CompiledExpr {
        let mut code = Vec::new();
        emit(&self.root, &mut code);
        let depth = stack_depth(&code);
        assert!(depth <= MAX_STACK, "expression too deep to compile");
        CompiledExpr {
            code,
            arity: self.arity,
        }
    }

    /// Wrap as a [`ScalarFn`] over the given block structure. Domain errors
    /// surface as NaN from the evaluator, which callers report as
    /// numeric-domain errors.
    pub fn to_scalar_fn(&self, input_dims: Vec<usize>) -> Result<ScalarFn> {
        let total: usize = input_dims.iter().sum();
        if total != self.arity {
            return Err(Error::dim("Expr::to_scalar_fn", self.arity, total));
        }
        let prog = self.compile();
        Ok(ScalarFn::new(input_dims, move |x| prog.eval_raw(x)))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

fn write_node(n: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match n {
        // Negative literals are wrapped so they survive re-parsing in power
        // positions: `(-3) ^ 2` instead of `-3 ^ 2` (which binds as -(3^2)).
        Node::Const(c) if c.is_sign_negative() => write!(f, "({c})"),
        Node::Const(c) => write!(f, "{c}"),
        Node::Var(i) => write!(f, "x{}", i + 1),
        Node::Neg(a) => {
            write!(f, "(-")?;
            write_node(a, f)?;
            write!(f, ")")
        }
        Node::Abs(a) => {
            write!(f, "abs(")?;
            write_node(a, f)?;
            write!(f, ")")
        }
        Node::Max(a, b) | Node::Min(a, b) => {
            write!(f, "{}(", if matches!(n, Node::Max(..)) { "max" } else { "min" })?;
            write_node(a, f)?;
            write!(f, ", ")?;
            write_node(b, f)?;
            write!(f, ")")
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            let op = match n {
                Node::Add(..) => "+",
                Node::Sub(..) => "-",
                Node::Mul(..) => "*",
                _ => "/",
            };
            write!(f, "(")?;
            write_node(a, f)?;
            write!(f, " {op} ")?;
            write_node(b, f)?;
            write!(f, ")")
        }
        Node::Pow(a, k) => {
            write!(f, "(")?;
            write_node(a, f)?;
            write!(f, " ^ {k})")
        }
    }
}

fn eval_node(n: &Node, x: &[f64]) -> Result<f64> {
    Ok(match n {
        Node::Const(c) => *c,
        Node::Var(i) => x[*i],
        Node::Neg(a) => -eval_node(a, x)?,
        Node::Abs(a) => eval_node(a, x)?.abs(),
        Node::Add(a, b) => eval_node(a, x)? + eval_node(b, x)?,
        Node::Sub(a, b) => eval_node(a, x)? - eval_node(b, x)?,
        Node::Mul(a, b) => eval_node(a, x)? * eval_node(b, x)?,
        Node::Div(a, b) => {
            let den = eval_node(b, x)?;
            if den.abs() < DIV_GUARD {
                return Err(Error::NumericDomain(format!(
                    "division by near-zero denominator {den}"
                )));
            }
            eval_node(a, x)? / den
        }
        Node::Max(a, b) => eval_node(a, x)?.max(eval_node(b, x)?),
        Node::Min(a, b) => eval_node(a, x)?.min(eval_node(b, x)?),
        Node::Pow(a, k) => {
            let base = eval_node(a, x)?;
            if *k < 0 && base.abs() < DIV_GUARD {
                return Err(Error::NumericDomain(format!(
                    "negative power of near-zero base {base}"
                )));
            }
            base.powi(*k)
        }
    })
}

#[derive(Debug, Clone, Copy)]
enum Instr {
    Const(f64),
    Var(usize),
    Neg,
    Abs,
    Add,
    Sub,
    Mul,
    Div,
    Max,
    Min,
    Pow(i32),
}

/// Postfix program evaluated on a fixed-size stack; the hot path of every
/// expression-backed function.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    code: Vec<Instr>,
    arity: usize,
}

impl CompiledExpr {
    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Evaluate, signaling domain errors as NaN.
    pub fn eval_raw(&self, x: &[f64]) -> f64 {
        let mut stack = [0.0f64; MAX_STACK];
        let mut top = 0usize;
        for instr in &self.code {
            match *instr {
                Instr::Const(c) => {
                    stack[top] = c;
                    top += 1;
                }
                Instr::Var(i) => {
                    stack[top] = x[i];
                    top += 1;
                }
                Instr::Neg => stack[top - 1] = -stack[top - 1],
                Instr::Abs => stack[top - 1] = stack[top - 1].abs(),
                Instr::Pow(k) => {
                    let b = stack[top - 1];
                    stack[top - 1] = if k < 0 && b.abs() < DIV_GUARD {
                        f64::NAN
                    } else {
                        b.powi(k)
                    };
                }
                Instr::Add => {
                    top -= 1;
                    stack[top - 1] += stack[top];
                }
                Instr::Sub => {
                    top -= 1;
                    stack[top - 1] -= stack[top];
                }
                Instr::Mul => {
                    top -= 1;
                    stack[top - 1] *= stack[top];
                }
                Instr::Div => {
                    top -= 1;
                    let den = stack[top];
                    stack[top - 1] = if den.abs() < DIV_GUARD {
                        f64::NAN
                    } else {
                        stack[top - 1] / den
                    };
                }
                Instr::Max => {
                    top -= 1;
                    stack[top - 1] = stack[top - 1].max(stack[top]);
                }
                Instr::Min => {
                    top -= 1;
                    stack[top - 1] = stack[top - 1].min(stack[top]);
                }
            }
        }
        stack[0]
    }
}

fn emit(n: &Node, code: &mut Vec<Instr>) {
    match n {
        Node::Const(c) => code.push(Instr::Const(*c)),
        Node::Var(i) => code.push(Instr::Var(*i)),
        Node::Neg(a) => {
            emit(a, code);
            code.push(Instr::Neg);
        }
        Node::Abs(a) => {
            emit(a, code);
            code.push(Instr::Abs);
        }
        Node::Pow(a, k) => {
            emit(a, code);
            code.push(Instr::Pow(*k));
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b)
        | Node::Max(a, b) | Node::Min(a, b) => {
            emit(a, code);
            emit(b, code);
            code.push(match n {
                Node::Add(..) => Instr::Add,
                Node::Sub(..) => Instr::Sub,
                Node::Mul(..) => Instr::Mul,
                Node::Div(..) => Instr::Div,
                Node::Max(..) => Instr::Max,
                _ => Instr::Min,
            });
        }
    }
}

fn stack_depth(code: &[Instr]) -> usize {
    let mut depth = 0usize;
    let mut max = 0usize;
    for instr in code {
        match instr {
            Instr::Const(_) | Instr::Var(_) => depth += 1,
            Instr::Add | Instr::Sub | Instr::Mul | Instr::Div | Instr::Max | Instr::Min => {
                depth -= 1
            }
            _ => {}
        }
        max = max.max(depth);
    }
    max
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    arity: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn parse_add(&mut self) -> Result<Node> {
        let mut lhs = self.parse_mul()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    self.skip_ws();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.parse_mul()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    self.skip_ws();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.parse_mul()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_mul(&mut self) -> Result<Node> {
        let mut lhs = self.parse_unary()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    self.skip_ws();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.parse_unary()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    self.skip_ws();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.parse_unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Node> {
        self.skip_ws();
        if self.peek() == Some(b'-') {
            self.pos += 1;
            self.skip_ws();
            return Ok(Node::Neg(Box::new(self.parse_unary()?)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Node> {
        let mut base = self.parse_atom()?;
        loop {
            self.skip_ws();
            if self.peek() == Some(b'^') {
                self.pos += 1;
                self.skip_ws();
                let k = self.parse_int_exponent()?;
                base = Node::Pow(Box::new(base), k);
            } else {
                return Ok(base);
            }
        }
    }

    fn parse_int_exponent(&mut self) -> Result<i32> {
        let start = self.pos;
        let mut s = String::new();
        if self.peek() == Some(b'-') {
            s.push('-');
            self.pos += 1;
        }
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                s.push(c as char);
                self.pos += 1;
            } else {
                break;
            }
        }
        if s.is_empty() || s == "-" {
            return Err(self.err(start, "expected integer exponent after `^`"));
        }
        s.parse::<i32>()
            .map_err(|_| self.err(start, format!("exponent `{s}` out of range")))
    }

    fn parse_atom(&mut self) -> Result<Node> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.err(start, "unexpected end of input; expected an operand")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_add()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.err(self.pos, "expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() => self.parse_ident(),
            Some(c) => Err(self.err(start, format!("unexpected character `{}`", c as char))),
        }
    }

    fn parse_number(&mut self) -> Result<Node> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E')
                && self.pos > start
                && self
                    .bytes
                    .get(self.pos + 1)
                    .is_some_and(|&n| n.is_ascii_digit() || n == b'+' || n == b'-')
            {
                self.pos += 2;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Node::Const)
            .map_err(|_| self.err(start, format!("invalid number literal `{text}`")))
    }

    fn parse_ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() {
                self.pos += 1;
            } else {
                break;
            }
        }
        let ident = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        if let Some(digits) = ident.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let idx: usize = digits
                    .parse()
                    .map_err(|_| self.err(start, format!("variable index `{digits}` too large")))?;
                if idx == 0 {
                    return Err(self.err(start, "variables are 1-based: x1..xN"));
                }
                if idx > self.arity {
                    return Err(self.err(
                        start,
                        format!("variable x{idx} exceeds declared arity {}", self.arity),
                    ));
                }
                return Ok(Node::Var(idx - 1));
            }
        }
        match ident {
            "abs" => {
                let (a, b) = self.parse_args(start, ident, 1)?;
                debug_assert!(b.is_none());
                Ok(Node::Abs(Box::new(a)))
            }
            "max" => {
                let (a, b) = self.parse_args(start, ident, 2)?;
                Ok(Node::Max(Box::new(a), Box::new(b.unwrap())))
            }
            "min" => {
                let (a, b) = self.parse_args(start, ident, 2)?;
                Ok(Node::Min(Box::new(a), Box::new(b.unwrap())))
            }
            _ => Err(self.err(start, format!("unknown identifier `{ident}`"))),
        }
    }

    fn parse_args(
        &mut self,
        start: usize,
        ident: &str,
        count: usize,
    ) -> Result<(Node, Option<Node>)> {
        self.skip_ws();
        if self.peek() != Some(b'(') {
            return Err(self.err(self.pos, format!("expected `(` after `{ident}`")));
        }
        self.pos += 1;
        let first = self.parse_add()?;
        let second = if count == 2 {
            self.skip_ws();
            if self.peek() != Some(b',') {
                return Err(self.err(self.pos, format!("`{ident}` takes two arguments")));
            }
            self.pos += 1;
            Some(self.parse_add()?)
        } else {
            None
        };
        self.skip_ws();
        if self.peek() != Some(b')') {
            return Err(self.err(self.pos, format!("expected `)` closing `{ident}(`, at `{start}`")));
        }
        self.pos += 1;
        Ok((first, second))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_eval_examples() {
        let e = parse_expr("abs(x1 - x2)", 2).unwrap();
        assert_eq!(e.eval(&[3.0, 1.0]).unwrap(), 2.0);

        let e = parse_expr("x1*x2", 2).unwrap();
        assert_eq!(e.eval(&[2.0, -3.0]).unwrap(), -6.0);

        let e = parse_expr("max(x1, 0) + x2^2", 2).unwrap();
        assert_eq!(e.eval(&[-1.0, 2.0]).unwrap(), 4.0);
    }

    #[test]
    fn constant_and_guards() {
        let e = parse_expr("5", 0).unwrap();
        assert_eq!(e.eval(&[]).unwrap(), 5.0);

        let e = parse_expr("x1/x2", 2).unwrap();
        assert!(matches!(e.eval(&[1.0, 0.0]), Err(Error::NumericDomain(_))));
        assert!(e.compile().eval_raw(&[1.0, 0.0]).is_nan());

        let e = parse_expr("abs(x1)", 1).unwrap();
        assert_eq!(e.eval(&[-2.0]).unwrap(), 2.0);
    }

    #[test]
    fn precedence() {
        // power > unary minus > mul > add
        let e = parse_expr("-x1^2", 1).unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap(), -9.0);
        let e = parse_expr("2 + 3 * 4", 0).unwrap();
        assert_eq!(e.eval(&[]).unwrap(), 14.0);
        let e = parse_expr("-2 * 3", 0).unwrap();
        assert_eq!(e.eval(&[]).unwrap(), -6.0);
        let e = parse_expr("x1 ^ -1", 1).unwrap();
        assert_eq!(e.eval(&[4.0]).unwrap(), 0.25);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let err = parse_expr("x1 +", 2).unwrap_err();
        match err {
            Error::Parse { offset, .. } => assert_eq!(offset, 4),
            other => panic!("expected parse error, got {other}"),
        }
        assert!(matches!(parse_expr("x3", 2), Err(Error::Parse { .. })));
        assert!(matches!(parse_expr("foo(x1)", 1), Err(Error::Parse { .. })));
        assert!(matches!(parse_expr("x1 ^ x2", 2), Err(Error::Parse { .. })));
        assert!(matches!(parse_expr("max(x1)", 1), Err(Error::Parse { .. })));
    }

    #[test]
    fn compiled_matches_recursive() {
        let e = parse_expr("max(x1, 0) * abs(x2 - 1) + x1^3 / (x2 + 2)", 2).unwrap();
        let c = e.compile();
        for (a, b) in [(0.5, 0.25), (-1.5, 3.0), (2.0, -1.0)] {
            let x = [a, b];
            assert_eq!(e.eval(&x).unwrap(), c.eval_raw(&x));
        }
    }

    fn arb_node(arity: usize) -> impl Strategy<Value = Node> {
        let leaf = prop_oneof![
            (-4.0..4.0f64).prop_map(Node::Const),
            (0..arity).prop_map(Node::Var),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Node::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Node::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Node::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Node::Max(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Node::Min(Box::new(a), Box::new(b))),
                inner.clone().prop_map(|a| Node::Neg(Box::new(a))),
                inner.clone().prop_map(|a| Node::Abs(Box::new(a))),
                (inner, 0..4i32).prop_map(|(a, k)| Node::Pow(Box::new(a), k)),
            ]
        })
    }

    proptest! {
        /// Printing and re-parsing preserves evaluation.
        #[test]
        fn display_round_trips(root in arb_node(3), x0 in -2.0..2.0f64, x1 in -2.0..2.0f64, x2 in -2.0..2.0f64) {
            let e = Expr { root, arity: 3 };
            let printed = e.to_string();
            let reparsed = parse_expr(&printed, 3).unwrap();
            let x = [x0, x1, x2];
            match (e.eval(&x), reparsed.eval(&x)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs())),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "mismatch: {a:?} vs {b:?} for `{printed}`"),
            }
        }
    }
}
