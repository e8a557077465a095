//! A small arithmetic language for time-varying coefficients.
//!
//! Expressions are built from real literals, the variable `t`, the binary
//! operators `+ - * / ^`, unary minus and the functions `sin`, `cos`, `exp`
//! and `abs`. Precedence from tightest to loosest is `^`, unary `-`,
//! `* /`, `+ -`. All binary operators associate to the left except `^`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at column {column}: {message}")]
pub struct ParseError {
    /// 1-based character column of the offending token.
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at t = {t}")]
    DivisionByZero { t: f64 },
    #[error("non-finite result at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "abs" => Some(Func::Abs),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Abs => x.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

const UNARY_PRECEDENCE: u8 = 3;

/// Abstract syntax tree of a coefficient expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Time,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        parse_expression(text)
    }

    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Time => t,
            Expr::Neg(e) => -e.eval(t)?,
            Expr::Call(f, e) => f.apply(e.eval(t)?),
            Expr::Binary(op, l, r) => {
                let a = l.eval(t)?;
                let b = r.eval(t)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero { t });
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { t })
        }
    }

    /// `Some(value)` when the expression does not depend on `t`.
    pub fn constant_value(&self) -> Option<f64> {
        if self.mentions_time() {
            None
        } else {
            self.eval(0.0).ok()
        }
    }

    pub fn mentions_time(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Time => true,
            Expr::Neg(e) | Expr::Call(_, e) => e.mentions_time(),
            Expr::Binary(_, l, r) => l.mentions_time() || r.mentions_time(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(_) | Expr::Time | Expr::Call(..) => 5,
            Expr::Neg(_) => UNARY_PRECEDENCE,
            Expr::Binary(op, ..) => op.precedence(),
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Time => f.write_str("t"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                // `-(2^2)` prints as `-2^2`, `-(a*b)` needs parentheses.
                write_operand(f, e, e.precedence() < UNARY_PRECEDENCE)
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                let (lp, rp) = if *op == BinOp::Pow {
                    // Right associative; a unary minus base must be wrapped.
                    (l.precedence() <= p, r.precedence() < UNARY_PRECEDENCE)
                } else {
                    (l.precedence() < p, r.precedence() <= p)
                };
                write_operand(f, l, lp)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, r, rp)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

impl Lexer {
    fn tokenize(text: &str) -> Result<Self, ParseError> {
        let chars: Vec<char> = text.chars().collect();
        let mut toks = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
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
                let s: String = chars[start..i].iter().collect();
                let v = s.parse::<f64>().map_err(|_| ParseError {
                    column: col,
                    message: format!("malformed number '{s}'"),
                })?;
                toks.push((Tok::Num(v), col));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), col));
            } else {
                let tok = match c {
                    '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    _ => {
                        return Err(ParseError {
                            column: col,
                            message: format!("unexpected character '{c}'"),
                        })
                    }
                };
                toks.push((tok, col));
                i += 1;
            }
        }
        toks.push((Tok::End, chars.len() + 1));
        Ok(Lexer { toks })
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn column(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let tok = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            column: self.column(),
            message: message.into(),
        })
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let (tok, col) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Ident(name) if name == "t" => Ok(Expr::Time),
            Tok::Ident(name) => {
                let Some(func) = Func::from_name(&name) else {
                    return Err(ParseError {
                        column: col,
                        message: format!("unknown identifier '{name}'"),
                    });
                };
                if *self.peek() != Tok::LParen {
                    return self.error(format!("expected '(' after '{name}'"));
                }
                self.bump();
                if *self.peek() == Tok::RParen {
                    return self.error(format!("empty argument to '{name}'"));
                }
                let arg = self.sum()?;
                self.expect_close(col)?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Tok::LParen => {
                if *self.peek() == Tok::RParen {
                    return self.error("empty parentheses");
                }
                let inner = self.sum()?;
                self.expect_close(col)?;
                Ok(inner)
            }
            Tok::RParen => Err(ParseError {
                column: col,
                message: "unbalanced ')'".into(),
            }),
            Tok::End => Err(ParseError {
                column: col,
                message: "unexpected end of expression".into(),
            }),
            Tok::Op(c) => Err(ParseError {
                column: col,
                message: format!("unexpected operator '{c}'"),
            }),
        }
    }

    fn expect_close(&mut self, open_col: usize) -> Result<(), ParseError> {
        match self.peek() {
            Tok::RParen => {
                self.bump();
                Ok(())
            }
            Tok::End => Err(ParseError {
                column: open_col,
                message: "unbalanced '('".into(),
            }),
            _ => self.error("expected ')'"),
        }
    }
}

/// Parses `text` into an [`Expr`].
pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError {
            column: 1,
            message: "empty expression".into(),
        });
    }
    let lexer = Lexer::tokenize(text)?;
    let mut parser = Parser {
        toks: lexer.toks,
        pos: 0,
    };
    let expr = parser.sum()?;
    match parser.peek() {
        Tok::End => Ok(expr),
        Tok::RParen => parser.error("unbalanced ')'"),
        _ => parser.error("unexpected trailing input"),
    }
}
