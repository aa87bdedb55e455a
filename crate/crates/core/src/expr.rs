//! Arithmetic expression trees over variables and integer constants.
//!
//! Trees are immutable and reference counted, so substitution only rebuilds
//! the path from the root to the replaced node. Every node caches its unit
//! signature, node count and canonical key.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::units::{UnitError, UnitSignature};

/// Default cap on the number of nodes in a tree.
pub const DEFAULT_MAX_SIZE: usize = 42;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("evaluation produced a non-finite value")]
    NonFinite,
    #[error(transparent)]
    Units(#[from] UnitError),
    #[error("replacement signature {found} does not match {expected}")]
    SignatureMismatch {
        expected: UnitSignature,
        found: UnitSignature,
    },
    #[error("tree of {size} nodes exceeds the limit of {max}")]
    SizeLimit { size: usize, max: usize },
    #[error("position {position} is outside a tree of {size} nodes")]
    InvalidPosition { position: usize, size: usize },
    #[error("variable x{0} is not bound")]
    UnknownVariable(usize),
    #[error("point has {found} coordinates, expected at least {needed}")]
    Arity { needed: usize, found: usize },
    #[error("cannot parse expression: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(self, BinaryOp::Add | BinaryOp::Mul)
    }

    fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "+" => Some(BinaryOp::Add),
            "-" => Some(BinaryOp::Sub),
            "*" => Some(BinaryOp::Mul),
            "/" => Some(BinaryOp::Div),
            _ => None,
        }
    }

    pub fn signature(self, a: UnitSignature, b: UnitSignature) -> Result<UnitSignature, UnitError> {
        match self {
            BinaryOp::Add | BinaryOp::Sub => a.addsub(b),
            BinaryOp::Mul => Ok(a * b),
            BinaryOp::Div => Ok(a / b),
        }
    }

    fn apply<T: Scalar>(self, a: T, b: T) -> T {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / b,
        }
    }
}

/// Identity of an expression up to the operand order of `+` and `*`.
///
/// Associativity is not normalized: `a+(b+c)` and `(a+b)+c` have different keys.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(Arc<str>);

impl CanonicalKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug)]
pub enum ExprKind {
    Var(usize),
    Const(i64),
    Binary(BinaryOp, Expr, Expr),
}

#[derive(Debug)]
struct Node {
    kind: ExprKind,
    signature: UnitSignature,
    size: usize,
    key: CanonicalKey,
}

#[derive(Debug, Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.0.size != other.0.size {
            return false;
        }
        match (&self.0.kind, &other.0.kind) {
            (ExprKind::Var(a), ExprKind::Var(b)) => a == b,
            (ExprKind::Const(a), ExprKind::Const(b)) => a == b,
            (ExprKind::Binary(o1, l1, r1), ExprKind::Binary(o2, l2, r2)) => o1 == o2 && l1 == l2 && r1 == r2,
            _ => false,
        }
    }
}

impl Eq for Expr {}

impl Expr {
    pub fn var(index: usize, signature: UnitSignature) -> Self {
        Expr(Arc::new(Node {
            kind: ExprKind::Var(index),
            signature,
            size: 1,
            key: CanonicalKey(format!("x{index}").into()),
        }))
    }

    pub fn constant(value: i64) -> Self {
        Expr(Arc::new(Node {
            kind: ExprKind::Const(value),
            signature: UnitSignature::DIMENSIONLESS,
            size: 1,
            key: CanonicalKey(format!("#{value}").into()),
        }))
    }

    pub fn binary(op: BinaryOp, left: Expr, right: Expr) -> Result<Self, UnitError> {
        let signature = op.signature(left.signature(), right.signature())?;
        let (a, b) = (left.key().as_str(), right.key().as_str());
        let (a, b) = if op.is_commutative() && b < a { (b, a) } else { (a, b) };
        let key = CanonicalKey(format!("{}({a},{b})", op.symbol()).into());
        Ok(Expr(Arc::new(Node {
            size: 1 + left.size() + right.size(),
            kind: ExprKind::Binary(op, left, right),
            signature,
            key,
        })))
    }

    pub fn add(left: Expr, right: Expr) -> Result<Self, UnitError> {
        Self::binary(BinaryOp::Add, left, right)
    }

    pub fn sub(left: Expr, right: Expr) -> Result<Self, UnitError> {
        Self::binary(BinaryOp::Sub, left, right)
    }

    pub fn mul(left: Expr, right: Expr) -> Self {
        Self::binary(BinaryOp::Mul, left, right).expect("products are always well-dimensioned")
    }

    pub fn div(left: Expr, right: Expr) -> Self {
        Self::binary(BinaryOp::Div, left, right).expect("quotients are always well-dimensioned")
    }

    pub fn kind(&self) -> &ExprKind {
        &self.0.kind
    }

    pub fn signature(&self) -> UnitSignature {
        self.0.signature
    }

    pub fn size(&self) -> usize {
        self.0.size
    }

    pub fn key(&self) -> &CanonicalKey {
        &self.0.key
    }

    pub fn canonicalize(&self) -> CanonicalKey {
        self.0.key.clone()
    }

    pub fn children(&self) -> Option<(&Expr, &Expr)> {
        match &self.0.kind {
            ExprKind::Binary(_, l, r) => Some((l, r)),
            _ => None,
        }
    }

    /// Largest variable index plus one, or 0 for variable-free trees.
    pub fn arity(&self) -> usize {
        match &self.0.kind {
            ExprKind::Var(i) => i + 1,
            ExprKind::Const(_) => 0,
            ExprKind::Binary(_, l, r) => l.arity().max(r.arity()),
        }
    }

    /// All subtrees in pre-order; index `i` is node position `i`.
    pub fn preorder(&self) -> Vec<&Expr> {
        let mut out = Vec::with_capacity(self.size());
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            out.push(e);
            if let Some((l, r)) = e.children() {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    pub fn subtree(&self, position: usize) -> Option<&Expr> {
        let mut node = self;
        let mut pos = position;
        loop {
            if pos == 0 {
                return Some(node);
            }
            let (l, r) = node.children()?;
            if pos <= l.size() {
                pos -= 1;
                node = l;
            } else if pos < node.size() {
                pos -= 1 + l.size();
                node = r;
            } else {
                return None;
            }
        }
    }

    /// Replaces the subtree at pre-order `position` by `replacement`, which
    /// must carry the same signature. The result may hold at most `max_size` nodes.
    pub fn substitute_subtree(&self, position: usize, replacement: &Expr, max_size: usize) -> Result<Expr, ExprError> {
        let target = self.subtree(position).ok_or(ExprError::InvalidPosition {
            position,
            size: self.size(),
        })?;
        if target.signature() != replacement.signature() {
            return Err(ExprError::SignatureMismatch {
                expected: target.signature(),
                found: replacement.signature(),
            });
        }
        let size = self.size() - target.size() + replacement.size();
        if size > max_size {
            return Err(ExprError::SizeLimit { size, max: max_size });
        }
        Ok(self.replace_unchecked(position, replacement))
    }

    /// Same as [`Expr::substitute_subtree`] without the signature and size
    /// checks; `position` must be valid and signatures must agree.
    pub(crate) fn replace_unchecked(&self, position: usize, replacement: &Expr) -> Expr {
        if position == 0 {
            return replacement.clone();
        }
        match &self.0.kind {
            ExprKind::Binary(op, l, r) => {
                let (l, r) = if position <= l.size() {
                    (l.replace_unchecked(position - 1, replacement), r.clone())
                } else {
                    (l.clone(), r.replace_unchecked(position - 1 - l.size(), replacement))
                };
                Expr::binary(*op, l, r).expect("signature preserved by substitution")
            }
            _ => unreachable!("leaf has no position {position}"),
        }
    }

    /// Evaluates at one point. Any non-finite intermediate value is an error.
    pub fn evaluate<T: Scalar>(&self, point: &[T]) -> Result<T, ExprError> {
        let v = match &self.0.kind {
            ExprKind::Var(i) => *point.get(*i).ok_or(ExprError::Arity {
                needed: i + 1,
                found: point.len(),
            })?,
            ExprKind::Const(k) => T::from_int(*k),
            ExprKind::Binary(op, l, r) => op.apply(l.evaluate(point)?, r.evaluate(point)?),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite)
        }
    }

    /// Evaluates over column-major data (`columns[i]` holds variable `i`
    /// for every row). Returns `None` when any intermediate is non-finite.
    pub fn evaluate_columns<T: Scalar>(&self, columns: &[Vec<T>], rows: usize) -> Option<Vec<T>> {
        match &self.0.kind {
            ExprKind::Var(i) => {
                let col = columns.get(*i)?;
                Some(col.clone())
            }
            ExprKind::Const(k) => Some(vec![T::from_int(*k); rows]),
            ExprKind::Binary(op, l, r) => {
                let mut a = l.evaluate_columns(columns, rows)?;
                // constant right operands are common (integer multiplication/division)
                if let ExprKind::Const(k) = r.kind() {
                    let k = T::from_int(*k);
                    for x in a.iter_mut() {
                        *x = op.apply(*x, k);
                    }
                } else {
                    let b = r.evaluate_columns(columns, rows)?;
                    for (x, y) in a.iter_mut().zip(b) {
                        *x = op.apply(*x, y);
                    }
                }
                a.iter().all(|x| x.is_finite()).then_some(a)
            }
        }
    }

    /// Prefix text form, e.g. `(* x0 (/ x1 3))`. Round-trips through [`Expr::parse_prefix`].
    pub fn to_prefix(&self) -> String {
        let mut out = String::new();
        self.write_prefix(&mut out);
        out
    }

    fn write_prefix(&self, out: &mut String) {
        use std::fmt::Write;
        match &self.0.kind {
            ExprKind::Var(i) => write!(out, "x{i}").unwrap(),
            ExprKind::Const(k) => write!(out, "{k}").unwrap(),
            ExprKind::Binary(op, l, r) => {
                out.push('(');
                out.push(op.symbol());
                out.push(' ');
                l.write_prefix(out);
                out.push(' ');
                r.write_prefix(out);
                out.push(')');
            }
        }
    }

    /// Parses the prefix form, binding `x<i>` to `units[i]`.
    pub fn parse_prefix(text: &str, units: &[UnitSignature]) -> Result<Expr, ExprError> {
        let spaced = text.replace('(', " ( ").replace(')', " ) ");
        let tokens: Vec<&str> = spaced.split_whitespace().collect();
        let mut pos = 0;
        let e = parse_tokens(&tokens, &mut pos, units)?;
        if pos != tokens.len() {
            return Err(ExprError::Parse(format!("trailing input after token {pos}")));
        }
        Ok(e)
    }

    /// Parenthesized infix form using the given variable names.
    pub fn to_infix(&self, names: &[String]) -> String {
        match &self.0.kind {
            ExprKind::Var(i) => names.get(*i).cloned().unwrap_or_else(|| format!("x{i}")),
            ExprKind::Const(k) => k.to_string(),
            ExprKind::Binary(op, l, r) => {
                format!("({} {} {})", l.to_infix(names), op.symbol(), r.to_infix(names))
            }
        }
    }
}

fn parse_tokens(tokens: &[&str], pos: &mut usize, units: &[UnitSignature]) -> Result<Expr, ExprError> {
    let tok = *tokens.get(*pos).ok_or_else(|| ExprError::Parse("unexpected end of input".into()))?;
    *pos += 1;
    if tok == "(" {
        let op_tok = *tokens.get(*pos).ok_or_else(|| ExprError::Parse("missing operator".into()))?;
        let op = BinaryOp::from_symbol(op_tok).ok_or_else(|| ExprError::Parse(format!("unknown operator `{op_tok}`")))?;
        *pos += 1;
        let l = parse_tokens(tokens, pos, units)?;
        let r = parse_tokens(tokens, pos, units)?;
        if tokens.get(*pos) != Some(&")") {
            return Err(ExprError::Parse("expected `)`".into()));
        }
        *pos += 1;
        return Ok(Expr::binary(op, l, r)?);
    }
    if let Some(idx) = tok.strip_prefix('x') {
        let i: usize = idx.parse().map_err(|_| ExprError::Parse(format!("bad variable `{tok}`")))?;
        let sig = units.get(i).ok_or(ExprError::UnknownVariable(i))?;
        return Ok(Expr::var(i, *sig));
    }
    tok.parse::<i64>()
        .map(Expr::constant)
        .map_err(|_| ExprError::Parse(format!("unexpected token `{tok}`")))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_infix(&[]))
    }
}

/// Recomputes the signature of `e` from scratch against a unit table,
/// ignoring the cached annotations.
pub fn signature_of(e: &Expr, units: &[UnitSignature]) -> Result<UnitSignature, ExprError> {
    match e.kind() {
        ExprKind::Var(i) => units.get(*i).copied().ok_or(ExprError::UnknownVariable(*i)),
        ExprKind::Const(_) => Ok(UnitSignature::DIMENSIONLESS),
        ExprKind::Binary(op, l, r) => Ok(op.signature(signature_of(l, units)?, signature_of(r, units)?)?),
    }
}

/// Node count recomputed from scratch.
pub fn size(e: &Expr) -> usize {
    match e.children() {
        Some((l, r)) => 1 + size(l) + size(r),
        None => 1,
    }
}
