//! Arithmetic expressions over `t`, `x1`, `x2`.
//!
//! Grammar: numbers, the variables `t x1 x2`, the constant `pi`, binary `+ - * / ^`
//! (`^` binds tightest and associates to the right), unary minus, parentheses and the
//! functions `sin cos exp sqrt atan2`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message} at column {column} of `{source_text}`")]
pub struct ParseError {
    pub column: usize,
    pub message: String,
    source_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    X1,
    X2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
    Atan2(Box<Node>, Box<Node>),
}

impl Node {
    fn eval(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Var(Var::T) => t,
            Node::Var(Var::X1) => x.first().copied().unwrap_or(f64::NAN),
            Node::Var(Var::X2) => x.get(1).copied().unwrap_or(f64::NAN),
            Node::Neg(a) => -a.eval(t, x),
            Node::Add(a, b) => a.eval(t, x) + b.eval(t, x),
            Node::Sub(a, b) => a.eval(t, x) - b.eval(t, x),
            Node::Mul(a, b) => a.eval(t, x) * b.eval(t, x),
            Node::Div(a, b) => a.eval(t, x) / b.eval(t, x),
            Node::Pow(a, b) => {
                let base = a.eval(t, x);
                match **b {
                    Node::Const(e) if e == e.trunc() && e.abs() <= 64.0 => base.powi(e as i32),
                    _ => base.powf(b.eval(t, x)),
                }
            }
            Node::Call(func, a) => {
                let a = a.eval(t, x);
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Sqrt => a.sqrt(),
                }
            }
            Node::Atan2(a, b) => a.eval(t, x).atan2(b.eval(t, x)),
        }
    }

    fn depends_on(&self, var: Var) -> bool {
        match self {
            Node::Const(_) => false,
            Node::Var(v) => *v == var,
            Node::Neg(a) | Node::Call(_, a) => a.depends_on(var),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Pow(a, b)
            | Node::Atan2(a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    /// Symbolic partial derivative; `None` for powers with a variable exponent.
    fn derivative(&self, var: Var) -> Option<Node> {
        if !self.depends_on(var) {
            return Some(Node::Const(0.0));
        }
        let d = match self {
            Node::Const(_) => Node::Const(0.0),
            Node::Var(v) => Node::Const(if *v == var { 1.0 } else { 0.0 }),
            Node::Neg(a) => neg(a.derivative(var)?),
            Node::Add(a, b) => add(a.derivative(var)?, b.derivative(var)?),
            Node::Sub(a, b) => sub(a.derivative(var)?, b.derivative(var)?),
            Node::Mul(a, b) => add(
                mul(a.derivative(var)?, (**b).clone()),
                mul((**a).clone(), b.derivative(var)?),
            ),
            Node::Div(a, b) => div(
                sub(
                    mul(a.derivative(var)?, (**b).clone()),
                    mul((**a).clone(), b.derivative(var)?),
                ),
                pow((**b).clone(), Node::Const(2.0)),
            ),
            Node::Pow(a, b) => {
                if b.depends_on(var) {
                    return None;
                }
                mul(
                    mul(
                        (**b).clone(),
                        pow((**a).clone(), sub((**b).clone(), Node::Const(1.0))),
                    ),
                    a.derivative(var)?,
                )
            }
            Node::Call(func, a) => {
                let inner = (**a).clone();
                let outer = match func {
                    Func::Sin => Node::Call(Func::Cos, Box::new(inner)),
                    Func::Cos => neg(Node::Call(Func::Sin, Box::new(inner))),
                    Func::Exp => Node::Call(Func::Exp, Box::new(inner)),
                    Func::Sqrt => div(Node::Const(0.5), Node::Call(Func::Sqrt, Box::new(inner))),
                };
                mul(outer, a.derivative(var)?)
            }
            Node::Atan2(y, x) => {
                // d atan2(y, x) = (x dy - y dx) / (x^2 + y^2)
                let (y, x, dy, dx) = (
                    (**y).clone(),
                    (**x).clone(),
                    y.derivative(var)?,
                    x.derivative(var)?,
                );
                div(
                    sub(mul(x.clone(), dy), mul(y.clone(), dx)),
                    add(pow(x, Node::Const(2.0)), pow(y, Node::Const(2.0))),
                )
            }
        };
        Some(d)
    }
}

fn constant(n: &Node) -> Option<f64> {
    match n {
        Node::Const(c) => Some(*c),
        _ => None,
    }
}

fn neg(a: Node) -> Node {
    match constant(&a) {
        Some(c) => Node::Const(-c),
        None => Node::Neg(Box::new(a)),
    }
}

fn add(a: Node, b: Node) -> Node {
    match (constant(&a), constant(&b)) {
        (Some(x), Some(y)) => Node::Const(x + y),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => Node::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (constant(&a), constant(&b)) {
        (Some(x), Some(y)) => Node::Const(x - y),
        (Some(0.0), _) => neg(b),
        (_, Some(0.0)) => a,
        _ => Node::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (constant(&a), constant(&b)) {
        (Some(x), Some(y)) => Node::Const(x * y),
        (Some(0.0), _) | (_, Some(0.0)) => Node::Const(0.0),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        _ => Node::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (constant(&a), constant(&b)) {
        (Some(0.0), _) => Node::Const(0.0),
        (_, Some(1.0)) => a,
        _ => Node::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Node, b: Node) -> Node {
    match constant(&b) {
        Some(1.0) => a,
        Some(0.0) => Node::Const(1.0),
        _ => Node::Pow(Box::new(a), Box::new(b)),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>, (usize, String)> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse()
                .map_err(|_| (start, format!("malformed number `{text}`")))?;
            out.push((start, Token::Num(value)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start, Token::Ident(chars[start..i].iter().collect())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Token::Op(c)));
            i += 1;
        } else {
            return Err((i, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

type Parsed = Result<Node, (usize, String)>;

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn column(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(c, _)| *c)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<(), (usize, String)> {
        if self.eat(op) {
            Ok(())
        } else {
            Err((self.column(), format!("expected `{op}`")))
        }
    }

    fn expr(&mut self) -> Parsed {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Parsed {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Parsed {
        if self.eat('-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Parsed {
        let base = self.atom()?;
        if self.eat('^') {
            Ok(Node::Pow(Box::new(base), Box::new(self.unary()?)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Parsed {
        let column = self.column();
        let token = self.peek().cloned();
        self.pos += 1;
        match token {
            Some(Token::Num(v)) => Ok(Node::Const(v)),
            Some(Token::Op('(')) => {
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "t" => Ok(Node::Var(Var::T)),
                "x1" => Ok(Node::Var(Var::X1)),
                "x2" => Ok(Node::Var(Var::X2)),
                "pi" => Ok(Node::Const(std::f64::consts::PI)),
                "sin" | "cos" | "exp" | "sqrt" => {
                    let func = match name.as_str() {
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "exp" => Func::Exp,
                        _ => Func::Sqrt,
                    };
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    Ok(Node::Call(func, Box::new(arg)))
                }
                "atan2" => {
                    self.expect('(')?;
                    let y = self.expr()?;
                    self.expect(',')?;
                    let x = self.expr()?;
                    self.expect(')')?;
                    Ok(Node::Atan2(Box::new(y), Box::new(x)))
                }
                _ => Err((
                    column,
                    format!(
                        "unknown identifier `{name}` (variables: t, x1, x2, pi; functions: sin, cos, exp, sqrt, atan2)"
                    ),
                )),
            },
            Some(Token::Op(c)) => Err((column, format!("unexpected `{c}`"))),
            None => Err((column, "unexpected end of expression".into())),
        }
    }
}

/// Parsed expression that remembers its source text.
#[derive(Clone)]
pub struct Expression {
    source: String,
    root: Arc<Node>,
}

impl Expression {
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        let fail = |(column, message): (usize, String)| ParseError {
            column: column + 1,
            message,
            source_text: source.to_string(),
        };
        let tokens = tokenize(source).map_err(fail)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            end: source.chars().count(),
        };
        let root = parser.expr().map_err(fail)?;
        if parser.pos < parser.tokens.len() {
            return Err(fail((parser.column(), "trailing input".into())));
        }
        Ok(Self {
            source: source.to_string(),
            root: Arc::new(root),
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            source: format!("{value:?}"),
            root: Arc::new(Node::Const(value)),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        self.root.eval(t, x)
    }

    pub fn depends_on(&self, var: Var) -> bool {
        self.root.depends_on(var)
    }

    /// Value if the expression mentions no variable.
    pub fn as_constant(&self) -> Option<f64> {
        let vars = [Var::T, Var::X1, Var::X2];
        (!vars.iter().any(|&v| self.depends_on(v))).then(|| self.root.eval(0.0, &[]))
    }

    pub fn derivative(&self, var: Var) -> Option<Expression> {
        let d = self.root.derivative(var)?;
        Some(Self {
            source: format!("d/d{var:?}({})", self.source),
            root: Arc::new(d),
        })
    }
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expression({:?})", self.source)
    }
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl Serialize for Expression {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Expression {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => Expression::parse(&s).map_err(serde::de::Error::custom),
            Raw::Number(v) => Ok(Expression::constant(v)),
        }
    }
}
