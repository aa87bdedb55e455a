//! Physical-unit signatures over (m, s, kg, K, V) and the arithmetic rules
//! that govern them.
//!
//! Multiplication and division add and subtract exponents; addition and
//! subtraction require identical signatures and leave them unchanged.

use std::fmt;
use std::ops::{Div, Mul};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of base dimensions.
pub const BASE_DIMENSIONS: usize = 5;

/// Names of the base dimensions in storage order.
pub const BASE_NAMES: [&str; BASE_DIMENSIONS] = ["m", "s", "kg", "K", "V"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnitError {
    #[error("incommensurable operands {0} and {1}")]
    Incommensurable(UnitSignature, UnitSignature),
    #[error("malformed unit signature `{0}`")]
    Malformed(String),
}

/// Integer exponents of length, time, mass, temperature and potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct UnitSignature(pub [i32; BASE_DIMENSIONS]);

impl UnitSignature {
    pub const DIMENSIONLESS: UnitSignature = UnitSignature([0; BASE_DIMENSIONS]);

    pub const fn new(m: i32, s: i32, kg: i32, k: i32, v: i32) -> Self {
        UnitSignature([m, s, kg, k, v])
    }

    pub fn exponents(&self) -> [i32; BASE_DIMENSIONS] {
        self.0
    }

    pub fn is_dimensionless(&self) -> bool {
        *self == Self::DIMENSIONLESS
    }

    pub fn mul(self, other: Self) -> Self {
        let mut out = self.0;
        for (o, e) in out.iter_mut().zip(other.0) {
            *o += e;
        }
        UnitSignature(out)
    }

    pub fn div(self, other: Self) -> Self {
        let mut out = self.0;
        for (o, e) in out.iter_mut().zip(other.0) {
            *o -= e;
        }
        UnitSignature(out)
    }

    /// Signature of a sum or difference: operands must be commensurate.
    pub fn addsub(self, other: Self) -> Result<Self, UnitError> {
        if self == other {
            Ok(self)
        } else {
            Err(UnitError::Incommensurable(self, other))
        }
    }

    pub fn pow(self, k: i32) -> Self {
        UnitSignature(self.0.map(|e| e * k))
    }

    /// Exact halving for square roots; `None` when any exponent is odd.
    pub fn sqrt(self) -> Option<Self> {
        if self.0.iter().all(|e| e % 2 == 0) {
            Some(UnitSignature(self.0.map(|e| e / 2)))
        } else {
            None
        }
    }

    /// Number of base dimensions with a nonzero exponent.
    pub fn dimension_count(&self) -> usize {
        self.0.iter().filter(|e| **e != 0).count()
    }
}

impl Mul for UnitSignature {
    type Output = UnitSignature;

    fn mul(self, rhs: Self) -> Self {
        UnitSignature::mul(self, rhs)
    }
}

impl Div for UnitSignature {
    type Output = UnitSignature;

    fn div(self, rhs: Self) -> Self {
        UnitSignature::div(self, rhs)
    }
}

impl fmt::Display for UnitSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d, e] = self.0;
        write!(f, "[{a},{b},{c},{d},{e}]")
    }
}

impl FromStr for UnitSignature {
    type Err = UnitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || UnitError::Malformed(s.to_string());
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(malformed)?;
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != BASE_DIMENSIONS {
            return Err(malformed());
        }
        let mut out = [0; BASE_DIMENSIONS];
        for (slot, part) in out.iter_mut().zip(parts) {
            *slot = part.trim().parse().map_err(|_| malformed())?;
        }
        Ok(UnitSignature(out))
    }
}

/// Free-function forms of the signature rules.
pub fn sig_mul(a: UnitSignature, b: UnitSignature) -> UnitSignature {
    a * b
}

pub fn sig_div(a: UnitSignature, b: UnitSignature) -> UnitSignature {
    a / b
}

pub fn sig_addsub_check(a: UnitSignature, b: UnitSignature) -> Result<UnitSignature, UnitError> {
    a.addsub(b)
}

pub fn sig_pow(a: UnitSignature, k: i32) -> UnitSignature {
    a.pow(k)
}
