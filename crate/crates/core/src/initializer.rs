//! Enumeration of monomial expressions `x0^e0 * x1^e1 * ...` that carry a
//! required unit signature.
//!
//! Exponent vectors are scanned in lexicographic order (first variable most
//! significant, ascending exponents). A kept vector becomes a fixed-shape
//! tree: positive powers multiplied left to right, divided by the product of
//! the negative powers. Powers are spelled out as repeated multiplication.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::EquationSpec;
use crate::expr::Expr;
use crate::units::UnitSignature;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InitError {
    #[error("no monomial reaches signature {target} with exponents in {range}")]
    NoValidInitialization { target: UnitSignature, range: ExponentRange },
}

/// Inclusive integer interval of exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExponentRange {
    pub lo: i32,
    pub hi: i32,
}

impl ExponentRange {
    pub const DEFAULT: ExponentRange = ExponentRange { lo: -3, hi: 3 };

    pub fn symmetric(k: i32) -> Self {
        ExponentRange { lo: -k, hi: k }
    }

    /// Number of exponents in the range (`r`).
    pub fn cardinality(&self) -> usize {
        if self.hi < self.lo {
            0
        } else {
            (self.hi - self.lo + 1) as usize
        }
    }

    pub fn widened(&self) -> Self {
        ExponentRange {
            lo: self.lo - 1,
            hi: self.hi + 1,
        }
    }
}

impl Default for ExponentRange {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl fmt::Display for ExponentRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// Lexicographic walk over all `r^p` exponent vectors.
pub struct ExponentVectors {
    range: ExponentRange,
    next: Option<Vec<i32>>,
}

impl ExponentVectors {
    pub fn new(arity: usize, range: ExponentRange) -> Self {
        let next = (range.cardinality() > 0).then(|| vec![range.lo; arity]);
        ExponentVectors { range, next }
    }
}

impl Iterator for ExponentVectors {
    type Item = Vec<i32>;

    fn next(&mut self) -> Option<Vec<i32>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for slot in succ.iter_mut().rev() {
            if *slot < self.range.hi {
                *slot += 1;
                self.next = Some(succ);
                return Some(current);
            }
            *slot = self.range.lo;
        }
        Some(current)
    }
}

pub fn monomial_signature(exponents: &[i32], units: &[UnitSignature]) -> UnitSignature {
    exponents
        .iter()
        .zip(units)
        .fold(UnitSignature::DIMENSIONLESS, |acc, (e, s)| acc * s.pow(*e))
}

/// Materializes an exponent vector as a tree.
pub fn monomial(exponents: &[i32], units: &[UnitSignature]) -> Expr {
    let mut numerator: Option<Expr> = None;
    let mut denominator: Option<Expr> = None;
    for (i, (&e, &sig)) in exponents.iter().zip(units).enumerate() {
        let slot = if e > 0 { &mut numerator } else { &mut denominator };
        for _ in 0..e.unsigned_abs() {
            let v = Expr::var(i, sig);
            *slot = Some(match slot.take() {
                Some(acc) => Expr::mul(acc, v),
                None => v,
            });
        }
    }
    match (numerator, denominator) {
        (Some(n), None) => n,
        (Some(n), Some(d)) => Expr::div(n, d),
        (None, Some(d)) => Expr::div(Expr::constant(1), d),
        (None, None) => Expr::constant(1),
    }
}

/// Outcome of one scan over the exponent grid.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub exponents: Vec<Vec<i32>>,
    pub candidates: Vec<Expr>,
    pub scanned: usize,
}

pub fn enumerate_monomials(units: &[UnitSignature], target: UnitSignature, range: ExponentRange) -> Enumeration {
    let mut exponents = Vec::new();
    let mut scanned = 0;
    for v in ExponentVectors::new(units.len(), range) {
        scanned += 1;
        if monomial_signature(&v, units) == target {
            exponents.push(v);
        }
    }
    let candidates = exponents.iter().map(|v| monomial(v, units)).collect();
    Enumeration {
        exponents,
        candidates,
        scanned,
    }
}

/// All monomials over the equation's variables with the target signature, in scan order.
pub fn enumerate_initial(spec: &EquationSpec, range: ExponentRange) -> Vec<Expr> {
    enumerate_monomials(&spec.units(), spec.target, range).candidates
}

/// Like [`enumerate_initial`], widening the range by one on both ends after
/// each empty scan, at most `max_widenings` times. Returns the range that succeeded.
pub fn enumerate_with_restart(
    spec: &EquationSpec,
    base_range: ExponentRange,
    max_widenings: usize,
) -> Result<(Vec<Expr>, ExponentRange), InitError> {
    let mut range = base_range;
    for attempt in 0..=max_widenings {
        let found = enumerate_initial(spec, range);
        if !found.is_empty() {
            return Ok((found, range));
        }
        if attempt < max_widenings {
            range = range.widened();
        }
    }
    Err(InitError::NoValidInitialization {
        target: spec.target,
        range,
    })
}

/// Every monomial of the exponent grid, bucketed by signature. Each bucket
/// keeps scan order.
#[derive(Debug, Clone)]
pub struct MonomialCatalog {
    range: ExponentRange,
    buckets: HashMap<UnitSignature, Vec<Expr>>,
}

impl MonomialCatalog {
    pub fn new(units: &[UnitSignature], range: ExponentRange) -> Self {
        let mut buckets: HashMap<UnitSignature, Vec<Expr>> = HashMap::new();
        for v in ExponentVectors::new(units.len(), range) {
            let sig = monomial_signature(&v, units);
            buckets.entry(sig).or_default().push(monomial(&v, units));
        }
        MonomialCatalog { range, buckets }
    }

    pub fn range(&self) -> ExponentRange {
        self.range
    }

    /// Monomials with signature `sig`; empty when none is reachable.
    pub fn get(&self, sig: UnitSignature) -> &[Expr] {
        self.buckets.get(&sig).map(Vec::as_slice).unwrap_or(&[])
    }
}
