//! Tiny scalar expression language for problem definitions.
//!
//! Grammar: `+ - * /` with usual precedence, right-associative `^`, unary
//! minus, parentheses, calls `abs`, `sqrt`, `exp`, `ln`, `sin`, `cos`,
//! `min(..)`, `max(..)`, float literals, and the variables `p`, `x` (aliases
//! for `p1`, `x1`) up to `p4`, `x4`.
//!
//! Evaluation is strict about floats: any non-finite intermediate or final
//! value is an error, so callers can treat `Ok` values as safe numerics.

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarKind {
    P,
    X,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Func {
    Abs,
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn arity_ok(&self, n: usize) -> bool {
        match self {
            Func::Min | Func::Max => n >= 2,
            _ => n == 1,
        }
    }
}

#[derive(Clone, Debug)]
enum Node {
    Const(f64),
    Var(VarKind, usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// Parsed scalar expression in the variables `p1..p4`, `x1..x4`.
#[derive(Clone, Debug)]
pub struct ScalarExpr {
    root: Node,
    source: String,
    /// Highest variable index referenced, per block (0 when unused).
    max_p: usize,
    max_x: usize,
}

impl ScalarExpr {
    pub fn parse(src: &str) -> Result<Self> {
        let tokens = tokenize(src)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            end: src.len(),
        };
        let root = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            let (_, at) = parser.tokens[parser.pos];
            return Err(Error::Parse {
                pos: at,
                msg: "unexpected trailing input".into(),
            });
        }
        let mut max_p = 0;
        let mut max_x = 0;
        scan_vars(&root, &mut max_p, &mut max_x);
        Ok(ScalarExpr {
            root,
            source: src.to_string(),
            max_p,
            max_x,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Number of `p` components referenced (0 when the expression is
    /// parameter free).
    pub fn p_arity(&self) -> usize {
        self.max_p
    }

    pub fn x_arity(&self) -> usize {
        self.max_x
    }

    pub fn eval(&self, p: &[f64], x: &[f64]) -> Result<f64> {
        if p.len() < self.max_p {
            return Err(Error::DimensionMismatch {
                expected: self.max_p,
                got: p.len(),
            });
        }
        if x.len() < self.max_x {
            return Err(Error::DimensionMismatch {
                expected: self.max_x,
                got: x.len(),
            });
        }
        let v = eval_node(&self.root, p, x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Eval(format!(
                "expression '{}' evaluated to a non-finite value",
                self.source
            )))
        }
    }
}

fn scan_vars(node: &Node, max_p: &mut usize, max_x: &mut usize) {
    match node {
        Node::Const(_) => {}
        Node::Var(VarKind::P, i) => *max_p = (*max_p).max(i + 1),
        Node::Var(VarKind::X, i) => *max_x = (*max_x).max(i + 1),
        Node::Neg(a) => scan_vars(a, max_p, max_x),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b)
        | Node::Pow(a, b) => {
            scan_vars(a, max_p, max_x);
            scan_vars(b, max_p, max_x);
        }
        Node::Call(_, args) => {
            for a in args {
                scan_vars(a, max_p, max_x);
            }
        }
    }
}

fn eval_node(node: &Node, p: &[f64], x: &[f64]) -> Result<f64> {
    Ok(match node {
        Node::Const(c) => *c,
        Node::Var(VarKind::P, i) => p[*i],
        Node::Var(VarKind::X, i) => x[*i],
        Node::Neg(a) => -eval_node(a, p, x)?,
        Node::Add(a, b) => eval_node(a, p, x)? + eval_node(b, p, x)?,
        Node::Sub(a, b) => eval_node(a, p, x)? - eval_node(b, p, x)?,
        Node::Mul(a, b) => eval_node(a, p, x)? * eval_node(b, p, x)?,
        Node::Div(a, b) => eval_node(a, p, x)? / eval_node(b, p, x)?,
        Node::Pow(a, b) => eval_node(a, p, x)?.powf(eval_node(b, p, x)?),
        Node::Call(f, args) => {
            let vals: Result<Vec<f64>> = args.iter().map(|a| eval_node(a, p, x)).collect();
            let vals = vals?;
            match f {
                Func::Abs => vals[0].abs(),
                Func::Sqrt => vals[0].sqrt(),
                Func::Exp => vals[0].exp(),
                Func::Ln => vals[0].ln(),
                Func::Sin => vals[0].sin(),
                Func::Cos => vals[0].cos(),
                Func::Min => vals.iter().copied().fold(f64::INFINITY, f64::min),
                Func::Max => vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => {
                i += 1;
                Tok::Plus
            }
            '-' => {
                i += 1;
                Tok::Minus
            }
            '*' => {
                i += 1;
                Tok::Star
            }
            '/' => {
                i += 1;
                Tok::Slash
            }
            '^' => {
                i += 1;
                Tok::Caret
            }
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            '0'..='9' | '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let num: f64 = text.parse().map_err(|_| Error::Parse {
                    pos: start,
                    msg: format!("invalid number '{text}'"),
                })?;
                Tok::Num(num)
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                Tok::Ident(src[start..i].to_string())
            }
            other => {
                return Err(Error::Parse {
                    pos: start,
                    msg: format!("unexpected character '{other}'"),
                })
            }
        };
        out.push((tok, start));
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn at(&self) -> usize {
        self.tokens.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse {
                pos: self.at(),
                msg: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            // Right-associative; the exponent may itself carry a unary minus.
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        let at = self.at();
        match self.bump() {
            Some(Tok::Num(n)) => Ok(Node::Const(n)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    let func = Func::lookup(&name).ok_or_else(|| Error::Parse {
                        pos: at,
                        msg: format!("unknown function '{name}'"),
                    })?;
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "')'")?;
                    if !func.arity_ok(args.len()) {
                        return Err(Error::Parse {
                            pos: at,
                            msg: format!("wrong number of arguments for '{name}'"),
                        });
                    }
                    Ok(Node::Call(func, args))
                } else {
                    parse_var(&name).ok_or_else(|| Error::Parse {
                        pos: at,
                        msg: format!("unknown variable '{name}'"),
                    })
                }
            }
            _ => Err(Error::Parse {
                pos: at,
                msg: "expected a number, variable or '('".into(),
            }),
        }
    }
}

fn parse_var(name: &str) -> Option<Node> {
    let (kind, rest) = match name.as_bytes().first()? {
        b'p' => (VarKind::P, &name[1..]),
        b'x' => (VarKind::X, &name[1..]),
        _ => return None,
    };
    if rest.is_empty() {
        return Some(Node::Var(kind, 0));
    }
    let idx: usize = rest.parse().ok()?;
    if (1..=4).contains(&idx) {
        Some(Node::Var(kind, idx - 1))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, p: &[f64], x: &[f64]) -> f64 {
        ScalarExpr::parse(src).unwrap().eval(p, x).unwrap()
    }

    #[test]
    fn basic_arithmetic_and_precedence() {
        assert_eq!(ev("2 + 3 * 4 ^ 2", &[], &[]), 50.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &[], &[]), 512.0);
        assert_eq!(ev("-x^2", &[], &[3.0]), -9.0);
        assert_eq!(ev("(2 + 3) * 4", &[], &[]), 20.0);
        assert_eq!(ev("7 - 2 - 1", &[], &[]), 4.0);
    }

    #[test]
    fn variables_and_aliases() {
        assert_eq!(ev("p^3 + x^3", &[1.0], &[2.0]), 9.0);
        assert_eq!(ev("x - p", &[0.5], &[2.0]), 1.5);
        assert_eq!(ev("p1 * x2", &[3.0], &[0.0, 4.0]), 12.0);
        let e = ScalarExpr::parse("p2 + x").unwrap();
        assert_eq!(e.p_arity(), 2);
        assert_eq!(e.x_arity(), 1);
    }

    #[test]
    fn functions() {
        assert_eq!(ev("sqrt(abs(x))", &[], &[-9.0]), 3.0);
        assert_eq!(ev("min(3, 1, 2)", &[], &[]), 1.0);
        assert_eq!(ev("max(x, 0)", &[], &[-5.0]), 0.0);
        assert!((ev("sin(0) + cos(0)", &[], &[]) - 1.0).abs() < 1e-15);
        assert!((ev("ln(exp(2))", &[], &[]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn negative_base_integer_power() {
        assert_eq!(ev("x^3", &[], &[-2.0]), -8.0);
    }

    #[test]
    fn scientific_literals() {
        assert_eq!(ev("1e-3 + 2.5E2", &[], &[]), 250.001);
    }

    #[test]
    fn non_finite_results_error() {
        let e = ScalarExpr::parse("1 / x").unwrap();
        assert!(e.eval(&[], &[0.0]).is_err());
        let e = ScalarExpr::parse("sqrt(x)").unwrap();
        assert!(e.eval(&[], &[-1.0]).is_err());
    }

    #[test]
    fn parse_errors_carry_positions() {
        match ScalarExpr::parse("p + ") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        match ScalarExpr::parse("foo(x)") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 0),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(ScalarExpr::parse("q + 1").is_err());
        assert!(ScalarExpr::parse("p5").is_err());
        assert!(ScalarExpr::parse("min(1)").is_err());
        assert!(ScalarExpr::parse("2 3").is_err());
    }

    #[test]
    fn dimension_checks() {
        let e = ScalarExpr::parse("p2 + x1").unwrap();
        assert!(e.eval(&[1.0], &[1.0]).is_err());
        assert!(e.eval(&[1.0, 2.0], &[1.0]).is_ok());
    }
}
