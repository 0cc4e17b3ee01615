//! Expression language for user-supplied component maps.
//!
//! ```text
//! spec   := expr (";" expr)*
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := atom ("^" INT)?
//! atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")" | "-" atom
//! ```
//!
//! `−` (U+2212) is accepted wherever `-` is. Variables are `x1..xn`, plus `t`
//! for time-dependent specs. Error offsets are byte offsets into the input.

use std::fmt;

use thiserror::Error;

use crate::error::Result;
use crate::jet::Jet;
use crate::kernel::SmoothMap;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}", expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable x{used} exceeds declared arity {declared}")]
    Arity { declared: usize, used: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Tanh,
}

impl Func {
    pub const ALL: [Func; 6] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn apply(self, x: &Jet) -> Result<Jet> {
        Ok(match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Ln => x.ln()?,
            Func::Sqrt => x.sqrt()?,
            Func::Tanh => x.tanh(),
        })
    }
}

/// Expression tree. Number literals are finite and non-negative; negation
/// is always an explicit `Neg` node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// One-based coordinate `x_k`.
    Var(usize),
    Time,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    /// Evaluates on jets. `t` must be present when the tree mentions time.
    pub fn eval(&self, x: &[Jet], t: Option<&Jet>) -> Result<Jet> {
        Ok(match self {
            Expr::Num(v) => Jet::constant(*v),
            Expr::Var(k) => x[k - 1].clone(),
            Expr::Time => t.expect("time variable in an autonomous spec").clone(),
            Expr::Neg(e) => -e.eval(x, t)?,
            Expr::Bin(op, a, b) => {
                let a = a.eval(x, t)?;
                let b = b.eval(x, t)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a.try_div(&b)?,
                }
            }
            Expr::Pow(e, k) => e.eval(x, t)?.powi(*k)?,
            Expr::Call(f, e) => f.apply(&e.eval(x, t)?)?,
        })
    }

    /// Largest variable index used, 0 if none.
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Var(k) => *k,
            Expr::Num(_) | Expr::Time => 0,
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.max_var(),
            Expr::Bin(_, a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn uses_time(&self) -> bool {
        match self {
            Expr::Time => true,
            Expr::Num(_) | Expr::Var(_) => false,
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.uses_time(),
            Expr::Bin(_, a, b) => a.uses_time() || b.uses_time(),
        }
    }

    fn is_atomic(&self) -> bool {
        matches!(
            self,
            Expr::Num(_) | Expr::Var(_) | Expr::Time | Expr::Call(..)
        )
    }

    fn write(&self, out: &mut String, top: bool) {
        match self {
            Expr::Num(v) => out.push_str(&format_number(*v)),
            Expr::Var(k) => {
                out.push('x');
                out.push_str(&k.to_string());
            }
            Expr::Time => out.push('t'),
            Expr::Neg(e) => {
                out.push_str("-(");
                e.write(out, true);
                out.push(')');
            }
            Expr::Bin(op, a, b) => {
                if !top {
                    out.push('(');
                }
                a.write(out, false);
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                b.write(out, false);
                if !top {
                    out.push(')');
                }
            }
            Expr::Pow(e, k) => {
                if e.is_atomic() {
                    e.write(out, false);
                } else {
                    out.push('(');
                    e.write(out, true);
                    out.push(')');
                }
                out.push('^');
                out.push_str(&k.to_string());
            }
            Expr::Call(f, e) => {
                out.push_str(f.name());
                out.push('(');
                e.write(out, true);
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write(&mut s, true);
        f.write_str(&s)
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// A parsed component list over `arity` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub arity: usize,
    pub components: Vec<Expr>,
    pub time_dependent: bool,
}

impl FieldSpec {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

pub fn parse(
    text: &str,
    arity: usize,
    time_dependent: bool,
) -> std::result::Result<FieldSpec, ParseError> {
    Parser::new(text, arity, time_dependent, None).spec()
}

/// Parses over `x1..xn` and the aliases `u1..un` for `x(n+1)..x(2n)`, the
/// convention used for Christoffel maps on `TM`.
pub fn parse_with_velocity(text: &str, n: usize) -> std::result::Result<FieldSpec, ParseError> {
    Parser::new(text, 2 * n, false, Some(n)).spec()
}

pub fn format(spec: &FieldSpec) -> String {
    spec.components
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Compiles to a map over `(x1, …, xn)`, or `(x1, …, xn, t)` when the spec
/// is time-dependent.
pub fn compile(spec: &FieldSpec) -> SmoothMap {
    let comps = spec.components.clone();
    let n = spec.arity;
    let td = spec.time_dependent;
    let dom = n + usize::from(td);
    SmoothMap::new(dom, comps.len(), move |z| {
        let t = if td { Some(&z[n]) } else { None };
        comps.iter().map(|e| e.eval(&z[..n], t)).collect()
    })
}

/// Parses and compiles in one step.
pub fn map(text: &str, arity: usize) -> Result<SmoothMap> {
    Ok(compile(&parse(text, arity, false)?))
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    arity: usize,
    time_dependent: bool,
    velocity_base: Option<usize>,
}

fn syntax(offset: usize, expected: &[&'static str]) -> ParseError {
    ParseError::Syntax {
        offset,
        expected: expected.to_vec(),
    }
}

const ATOM: &[&str] = &["number", "identifier", "(", "-"];

impl<'a> Parser<'a> {
    fn new(src: &'a str, arity: usize, time_dependent: bool, velocity_base: Option<usize>) -> Self {
        Parser {
            src,
            pos: 0,
            arity,
            time_dependent,
            velocity_base,
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self, c: char) {
        self.pos += c.len_utf8();
    }

    fn eat(&mut self, want: char) -> bool {
        if self.peek() == Some(want) {
            self.bump(want);
            true
        } else {
            false
        }
    }

    fn eat_minus(&mut self) -> bool {
        match self.peek() {
            Some(c @ ('-' | '\u{2212}')) => {
                self.bump(c);
                true
            }
            _ => false,
        }
    }

    fn spec(mut self) -> std::result::Result<FieldSpec, ParseError> {
        let mut components = vec![self.expr()?];
        while self.eat(';') {
            components.push(self.expr()?);
        }
        if self.peek().is_some() {
            return Err(syntax(
                self.pos,
                &["+", "-", "*", "/", "^", ";", "end of input"],
            ));
        }
        Ok(FieldSpec {
            arity: self.arity,
            components,
            time_dependent: self.time_dependent,
        })
    }

    fn expr(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat_minus() {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::bin(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::bin(op, lhs, self.factor()?);
        }
    }

    fn factor(&mut self) -> std::result::Result<Expr, ParseError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let negative = self.eat_minus();
        self.skip_ws();
        let start = self.pos;
        let digits = self.src[start..]
            .bytes()
            .take_while(u8::is_ascii_digit)
            .count();
        if digits == 0 {
            return Err(syntax(start, &["integer"]));
        }
        self.pos += digits;
        let text = &self.src[start..self.pos];
        let k: i32 = text.parse().map_err(|_| syntax(start, &["integer"]))?;
        Ok(Expr::Pow(Box::new(base), if negative { -k } else { k }))
    }

    fn atom(&mut self) -> std::result::Result<Expr, ParseError> {
        let Some(c) = self.peek() else {
            return Err(syntax(self.pos, ATOM));
        };
        if c == '-' || c == '\u{2212}' {
            self.bump(c);
            return Ok(Expr::Neg(Box::new(self.atom()?)));
        }
        if c == '(' {
            self.bump(c);
            let e = self.expr()?;
            if !self.eat(')') {
                return Err(syntax(self.pos, &[")"]));
            }
            return Ok(e);
        }
        if c.is_ascii_digit() || c == '.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() || c == '_' {
            return self.ident();
        }
        Err(syntax(self.pos, ATOM))
    }

    fn number(&mut self) -> std::result::Result<Expr, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = start;
        let digits = |i: &mut usize| {
            let s = *i;
            while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                *i += 1;
            }
            *i - s
        };
        let mut count = digits(&mut i);
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            count += digits(&mut i);
        }
        if count == 0 {
            return Err(syntax(start, &["number"]));
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if digits(&mut j) == 0 {
                return Err(syntax(j, &["exponent digits"]));
            }
            i = j;
        }
        self.pos = i;
        let v: f64 = self.src[start..i]
            .parse()
            .map_err(|_| syntax(start, &["number"]))?;
        if !v.is_finite() {
            return Err(syntax(start, &["finite number"]));
        }
        Ok(Expr::Num(v))
    }

    fn ident(&mut self) -> std::result::Result<Expr, ParseError> {
        let start = self.pos;
        let len = self.src[start..]
            .bytes()
            .take_while(|b| b.is_ascii_alphanumeric() || *b == b'_')
            .count();
        self.pos += len;
        let name = &self.src[start..self.pos];
        if let Some(f) = Func::from_name(name) {
            if !self.eat('(') {
                return Err(syntax(self.pos, &["("]));
            }
            let arg = self.expr()?;
            if !self.eat(')') {
                return Err(syntax(self.pos, &[")"]));
            }
            return Ok(Expr::Call(f, Box::new(arg)));
        }
        let unknown = || ParseError::UnknownIdentifier {
            name: name.to_string(),
            offset: start,
        };
        if name == "t" {
            return if self.time_dependent {
                Ok(Expr::Time)
            } else {
                Err(unknown())
            };
        }
        let index = |prefix: char| -> Option<usize> {
            let digits = name.strip_prefix(prefix)?;
            if digits.is_empty()
                || digits.starts_with('0')
                || !digits.bytes().all(|b| b.is_ascii_digit())
            {
                return None;
            }
            digits.parse().ok()
        };
        let k = match (index('x'), index('u'), self.velocity_base) {
            (Some(k), _, _) => k,
            (None, Some(k), Some(n)) if k <= n => n + k,
            (None, Some(k), Some(n)) => {
                return Err(ParseError::Arity {
                    declared: n,
                    used: k,
                })
            }
            _ => return Err(unknown()),
        };
        if k > self.arity {
            return Err(ParseError::Arity {
                declared: self.arity,
                used: k,
            });
        }
        Ok(Expr::Var(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_field_parses_and_formats() {
        let spec = parse("x2; −x1", 2, false).unwrap();
        assert_eq!(spec.len(), 2);
        assert_eq!(format(&spec), "x2; -(x1)");
        assert_eq!(parse(&format(&spec), 2, false).unwrap(), spec);
    }

    #[test]
    fn incomplete_input_reports_offset() {
        match parse("x1 + ", 1, false) {
            Err(ParseError::Syntax { offset, expected }) => {
                assert_eq!(offset, 5);
                assert!(expected.contains(&"number"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn identifier_and_arity_errors() {
        assert!(matches!(
            parse("x1 + t", 1, false),
            Err(ParseError::UnknownIdentifier { name, .. }) if name == "t"
        ));
        assert!(matches!(
            parse("foo(x1)", 1, false),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert_eq!(
            parse("x3", 2, false),
            Err(ParseError::Arity {
                declared: 2,
                used: 3
            })
        );
        assert!(parse("x1 + cos(t)", 1, true).is_ok());
    }

    #[test]
    fn compiled_maps_evaluate() {
        let f = map("x1*x2; x1+x2", 2).unwrap();
        assert_eq!(f.eval_f64(&[2.0, 5.0]).unwrap(), vec![10.0, 7.0]);
        assert!(map("1/x1", 1).unwrap().eval_f64(&[0.0]).is_err());
    }

    #[test]
    fn numbers_format_shortest() {
        assert_eq!(format_number(2.5), "2.5");
        assert_eq!(format_number(0.1), "0.1");
        assert_eq!(format_number(1e300), "1e300");
        assert_eq!(
            parse("1.5e-3", 0, false).unwrap().components[0],
            Expr::Num(1.5e-3)
        );
    }

    #[test]
    fn power_binds_to_atom() {
        let spec = parse("-x1^2", 1, false).unwrap();
        assert_eq!(
            spec.components[0],
            Expr::Pow(Box::new(Expr::Neg(Box::new(Expr::Var(1)))), 2)
        );
        assert_eq!(
            parse("x1^-2", 1, false).unwrap().components[0],
            Expr::Pow(Box::new(Expr::Var(1)), -2)
        );
    }

    #[test]
    fn velocity_aliases() {
        let spec = parse_with_velocity("u1*u2/x2", 2).unwrap();
        assert_eq!(spec.components[0].max_var(), 4);
        assert_eq!(format(&spec), "(x3 * x4) / x2");
    }
}
