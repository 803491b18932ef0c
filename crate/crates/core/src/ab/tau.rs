use serde::Serialize;

use super::AbError;
use crate::ext::BoundaryParameter;

/// Computable representative of a boundary-parameter map p -> tau(p) on a
/// singular channel. Values must land in [0, pi); out-of-range results are
/// errors, never wrapped.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TauSpec {
    Constant(f64),
    /// Linear interpolation on a strictly increasing p grid; evaluation
    /// outside the table is an error.
    Table { ps: Vec<f64>, values: Vec<f64> },
    /// Restricted arithmetic over p: constants, p, pi, + - * /, atan.
    Expression(TauExpr),
}

impl TauSpec {
    pub fn constant(value: f64) -> Result<Self, AbError> {
        check_range(value)?;
        Ok(TauSpec::Constant(value))
    }

    pub fn table(ps: Vec<f64>, values: Vec<f64>) -> Result<Self, AbError> {
        if ps.len() != values.len() || ps.len() < 2 {
            return Err(AbError::Validation(
                "tau table needs >= 2 matched samples".into(),
            ));
        }
        if ps.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(AbError::Validation(
                "tau table grid must be strictly increasing".into(),
            ));
        }
        for &v in &values {
            check_range(v)?;
        }
        Ok(TauSpec::Table { ps, values })
    }

    pub fn expression(src: &str) -> Result<Self, AbError> {
        Ok(TauSpec::Expression(TauExpr::parse(src)?))
    }

    pub fn evaluate(&self, p: f64) -> Result<BoundaryParameter, AbError> {
        let value = match self {
            TauSpec::Constant(v) => *v,
            TauSpec::Table { ps, values } => {
                if p < ps[0] || p > *ps.last().unwrap() {
                    return Err(AbError::Validation(format!(
                        "p = {p} outside the tau table range [{}, {}]",
                        ps[0],
                        ps.last().unwrap()
                    )));
                }
                match ps.binary_search_by(|v| v.partial_cmp(&p).unwrap()) {
                    Ok(i) => values[i],
                    Err(i) => {
                        let i = i.clamp(1, ps.len() - 1);
                        let t = (p - ps[i - 1]) / (ps[i] - ps[i - 1]);
                        values[i - 1] + t * (values[i] - values[i - 1])
                    }
                }
            }
            TauSpec::Expression(expr) => expr.evaluate(p)?,
        };
        check_range(value)?;
        BoundaryParameter::new(value)
            .map_err(|_| AbError::Validation(format!("tau value {value} outside [0, pi)")))
    }
}

fn check_range(value: f64) -> Result<(), AbError> {
    if !value.is_finite() || !(0.0..std::f64::consts::PI).contains(&value) {
        return Err(AbError::Validation(format!(
            "tau value {value} outside [0, pi)"
        )));
    }
    Ok(())
}

/// Parsed restricted expression over the variable p.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauExpr {
    src: String,
    #[serde(skip)]
    ast: Node,
}

impl TauExpr {
    pub fn parse(src: &str) -> Result<Self, AbError> {
        let mut p = Parser {
            tokens: lex(src)?,
            pos: 0,
        };
        let ast = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(AbError::Validation(format!(
                "trailing input in tau expression '{src}'"
            )));
        }
        Ok(Self {
            src: src.to_string(),
            ast,
        })
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    pub fn evaluate(&self, p: f64) -> Result<f64, AbError> {
        let v = eval_node(&self.ast, p);
        if !v.is_finite() {
            return Err(AbError::Validation(format!(
                "tau expression '{}' is not finite at p = {p}",
                self.src
            )));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Number(f64),
    Var,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Atan(Box<Node>),
}

// default ast only exists so serde can skip the field
impl Default for Node {
    fn default() -> Self {
        Node::Number(0.0)
    }
}

fn eval_node(n: &Node, p: f64) -> f64 {
    match n {
        Node::Number(v) => *v,
        Node::Var => p,
        Node::Neg(a) => -eval_node(a, p),
        Node::Add(a, b) => eval_node(a, p) + eval_node(b, p),
        Node::Sub(a, b) => eval_node(a, p) - eval_node(b, p),
        Node::Mul(a, b) => eval_node(a, p) * eval_node(b, p),
        Node::Div(a, b) => eval_node(a, p) / eval_node(b, p),
        Node::Atan(a) => eval_node(a, p).atan(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Var,
    Pi,
    Atan,
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<Token>, AbError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && matches!(bytes[i] as char, '0'..='9' | '.' | 'e' | 'E')
                {
                    // allow exponent signs
                    if matches!(bytes[i] as char, 'e' | 'E')
                        && i + 1 < bytes.len()
                        && matches!(bytes[i + 1] as char, '+' | '-')
                    {
                        i += 1;
                    }
                    i += 1;
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| {
                    AbError::Validation(format!("bad number '{text}' in tau expression"))
                })?;
                out.push(Token::Number(v));
            }
            _ if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_alphanumeric() {
                    i += 1;
                }
                match &src[start..i] {
                    "p" => out.push(Token::Var),
                    "pi" => out.push(Token::Pi),
                    "atan" => out.push(Token::Atan),
                    other => {
                        return Err(AbError::Validation(format!(
                            "unknown symbol '{other}' in tau expression"
                        )))
                    }
                }
            }
            _ => {
                return Err(AbError::Validation(format!(
                    "unexpected character '{c}' in tau expression"
                )))
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Node, AbError> {
        let mut lhs = self.term()?;
        while let Some(tok) = self.peek() {
            match tok {
                Token::Plus => {
                    self.next();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Token::Minus => {
                    self.next();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, AbError> {
        let mut lhs = self.factor()?;
        while let Some(tok) = self.peek() {
            match tok {
                Token::Star => {
                    self.next();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Token::Slash => {
                    self.next();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Node, AbError> {
        match self.next() {
            Some(Token::Minus) => Ok(Node::Neg(Box::new(self.factor()?))),
            Some(Token::Number(v)) => Ok(Node::Number(v)),
            Some(Token::Var) => Ok(Node::Var),
            Some(Token::Pi) => Ok(Node::Number(std::f64::consts::PI)),
            Some(Token::Atan) => {
                match self.next() {
                    Some(Token::LParen) => {}
                    _ => {
                        return Err(AbError::Validation(
                            "atan must be followed by a parenthesized argument".into(),
                        ))
                    }
                }
                let arg = self.expr()?;
                match self.next() {
                    Some(Token::RParen) => Ok(Node::Atan(Box::new(arg))),
                    _ => Err(AbError::Validation("unclosed atan argument".into())),
                }
            }
            Some(Token::LParen) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(AbError::Validation("unbalanced parentheses".into())),
                }
            }
            other => Err(AbError::Validation(format!(
                "unexpected token {other:?} in tau expression"
            ))),
        }
    }
}
