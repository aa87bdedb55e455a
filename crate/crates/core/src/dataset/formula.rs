//! Closed-form ground-truth formulas.
//!
//! These are richer than [`crate::expr::Expr`]: they admit real constants,
//! `pi`, integer powers, `sqrt` and `cos`, which is what the benchmark
//! equations are written in. They are used to generate targets and to
//! check that a unit table is dimensionally consistent.

use thiserror::Error;

use crate::expr::BinaryOp;
use crate::scalar::Scalar;
use crate::units::{UnitError, UnitSignature};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulaError {
    #[error("cannot parse formula `{text}`: {reason}")]
    Parse { text: String, reason: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error(transparent)]
    Units(#[from] UnitError),
    #[error("square root of {0} has fractional exponents")]
    FractionalRoot(UnitSignature),
    #[error("cosine argument must be dimensionless, got {0}")]
    DimensionedCosine(UnitSignature),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Num(f64),
    Var(usize),
    Neg(Box<Formula>),
    Binary(BinaryOp, Box<Formula>, Box<Formula>),
    Pow(Box<Formula>, i32),
    Sqrt(Box<Formula>),
    Cos(Box<Formula>),
}

impl Formula {
    /// Parses infix text such as `q1*q2/(4*pi*epsilon*r^2)`; identifiers
    /// resolve against `names` by position.
    pub fn parse(text: &str, names: &[&str]) -> Result<Formula, FormulaError> {
        let tokens = tokenize(text).map_err(|reason| FormulaError::Parse {
            text: text.to_string(),
            reason,
        })?;
        let mut p = Parser {
            tokens,
            pos: 0,
            names,
            text,
        };
        let f = p.sum()?;
        if p.pos != p.tokens.len() {
            return Err(p.error("trailing input"));
        }
        Ok(f)
    }

    pub fn evaluate<T: Scalar>(&self, point: &[T]) -> T {
        match self {
            Formula::Num(x) => T::lit(*x),
            Formula::Var(i) => point[*i],
            Formula::Neg(a) => -a.evaluate(point),
            Formula::Binary(op, a, b) => {
                let (a, b) = (a.evaluate(point), b.evaluate(point));
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => a / b,
                }
            }
            Formula::Pow(a, k) => a.evaluate(point).powi(*k),
            Formula::Sqrt(a) => a.evaluate(point).sqrt(),
            Formula::Cos(a) => a.evaluate(point).cos(),
        }
    }

    /// Folds the unit signature through the formula.
    pub fn signature(&self, units: &[UnitSignature]) -> Result<UnitSignature, FormulaError> {
        Ok(match self {
            Formula::Num(_) => UnitSignature::DIMENSIONLESS,
            Formula::Var(i) => units[*i],
            Formula::Neg(a) => a.signature(units)?,
            Formula::Binary(op, a, b) => op.signature(a.signature(units)?, b.signature(units)?)?,
            Formula::Pow(a, k) => a.signature(units)?.pow(*k),
            Formula::Sqrt(a) => {
                let s = a.signature(units)?;
                s.sqrt().ok_or(FormulaError::FractionalRoot(s))?
            }
            Formula::Cos(a) => {
                let s = a.signature(units)?;
                if !s.is_dimensionless() {
                    return Err(FormulaError::DimensionedCosine(s));
                }
                s
            }
        })
    }

    /// Variables that occur anywhere inside a divisor or under a negative power.
    pub fn denominator_variables(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_denominators(false, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_denominators(&self, inside: bool, out: &mut Vec<usize>) {
        match self {
            Formula::Num(_) => {}
            Formula::Var(i) => {
                if inside {
                    out.push(*i)
                }
            }
            Formula::Neg(a) | Formula::Sqrt(a) | Formula::Cos(a) => a.collect_denominators(inside, out),
            Formula::Pow(a, k) => a.collect_denominators(inside || *k < 0, out),
            Formula::Binary(op, a, b) => {
                a.collect_denominators(inside, out);
                b.collect_denominators(inside || *op == BinaryOp::Div, out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(text: &str) -> Result<Vec<Token>, String> {
    let chars: Vec<char> = text.chars().collect();
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
            let s: String = chars[start..i].iter().collect();
            out.push(Token::Num(s.parse().map_err(|_| format!("bad number `{s}`"))?));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Sym(c));
            i += 1;
        } else {
            return Err(format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    names: &'a [&'a str],
    text: &'a str,
}

impl Parser<'_> {
    fn error(&self, reason: &str) -> FormulaError {
        FormulaError::Parse {
            text: self.text.to_string(),
            reason: format!("{reason} at token {}", self.pos),
        }
    }

    fn peek_sym(&self, c: char) -> bool {
        self.tokens.get(self.pos) == Some(&Token::Sym(c))
    }

    fn expect_sym(&mut self, c: char) -> Result<(), FormulaError> {
        if self.peek_sym(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn sum(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.peek_sym('+') {
                BinaryOp::Add
            } else if self.peek_sym('-') {
                BinaryOp::Sub
            } else {
                return Ok(lhs);
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Formula::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.peek_sym('*') {
                BinaryOp::Mul
            } else if self.peek_sym('/') {
                BinaryOp::Div
            } else {
                return Ok(lhs);
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Formula::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        if self.peek_sym('-') {
            self.pos += 1;
            return Ok(Formula::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.peek_sym('^') {
            self.pos += 1;
            let negative = self.peek_sym('-');
            if negative {
                self.pos += 1;
            }
            let k = match self.tokens.get(self.pos) {
                Some(Token::Num(x)) if x.fract() == 0.0 => *x as i32,
                _ => return Err(self.error("expected an integer exponent")),
            };
            self.pos += 1;
            return Ok(Formula::Pow(Box::new(base), if negative { -k } else { k }));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Formula, FormulaError> {
        let tok = self.tokens.get(self.pos).cloned().ok_or_else(|| self.error("unexpected end"))?;
        self.pos += 1;
        match tok {
            Token::Num(x) => Ok(Formula::Num(x)),
            Token::Sym('(') => {
                let inner = self.sum()?;
                self.expect_sym(')')?;
                Ok(inner)
            }
            Token::Ident(name) => match name.as_str() {
                "pi" => Ok(Formula::Num(std::f64::consts::PI)),
                "sqrt" | "cos" => {
                    self.expect_sym('(')?;
                    let inner = Box::new(self.sum()?);
                    self.expect_sym(')')?;
                    Ok(if name == "sqrt" {
                        Formula::Sqrt(inner)
                    } else {
                        Formula::Cos(inner)
                    })
                }
                _ => self
                    .names
                    .iter()
                    .position(|n| *n == name)
                    .map(Formula::Var)
                    .ok_or(FormulaError::UnknownVariable(name)),
            },
            Token::Sym(c) => Err(self.error(&format!("unexpected `{c}`"))),
        }
    }
}
