//! The five signature-preserving move operators and the full neighbourhood
//! they induce.
//!
//! Candidates are produced operator by operator (in configured order), then
//! position by position in pre-order, then constant or monomial in ascending
//! order. This order decides ties in the local search.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::EquationSpec;
use crate::expr::{Expr, DEFAULT_MAX_SIZE};
use crate::initializer::{ExponentRange, MonomialCatalog};
use crate::units::UnitSignature;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("integer constant set must not contain 0")]
    ZeroConstant,
    #[error("integer constant set is empty but mul-int or div-int is enabled")]
    NoConstants,
    #[error("size cap must be at least 1")]
    SizeCap,
    #[error("operator order must list distinct operators, got {0:?}")]
    OperatorOrder(Vec<Operator>),
    #[error("empty exponent range {0}")]
    ExponentRange(ExponentRange),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operator {
    /// Swap a subtree for a commensurate monomial.
    Replace,
    /// `t -> t * k`.
    MulInt,
    /// `t -> t / k`.
    DivInt,
    /// `t -> t + q` with `q` a commensurate monomial.
    AddComm,
    /// `t -> t - q` with `q` a commensurate monomial.
    SubComm,
}

impl Operator {
    /// Default order: replacement, addition, subtraction, integer
    /// multiplication, integer division.
    pub const DEFAULT_ORDER: [Operator; 5] = [
        Operator::Replace,
        Operator::AddComm,
        Operator::SubComm,
        Operator::MulInt,
        Operator::DivInt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operator::Replace => "replace",
            Operator::MulInt => "mul-int",
            Operator::DivInt => "div-int",
            Operator::AddComm => "add-comm",
            Operator::SubComm => "sub-comm",
        }
    }

    /// The cyclic rotations of [`Operator::DEFAULT_ORDER`].
    pub fn rotations() -> Vec<Vec<Operator>> {
        (0..5)
            .map(|k| {
                let mut order = Self::DEFAULT_ORDER.to_vec();
                order.rotate_left(k);
                order
            })
            .collect()
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Operator {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s.trim() {
            "replace" => Ok(Operator::Replace),
            "mul-int" => Ok(Operator::MulInt),
            "div-int" => Ok(Operator::DivInt),
            "add-comm" => Ok(Operator::AddComm),
            "sub-comm" => Ok(Operator::SubComm),
            other => Err(ConfigError::UnknownOperator(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeighbourhoodConfig {
    /// Integer constants for `mul-int` and `div-int`; never 0.
    pub constants: Vec<i64>,
    /// Also offer `t * 0` (multiplication only).
    pub zero_multiplier: bool,
    /// Exponent range of generated monomials.
    pub exponent_range: ExponentRange,
    pub max_size: usize,
    pub operators: Vec<Operator>,
    /// Let `replace` swap out the whole expression. With this off, whole
    /// initial monomials stop being neighbours of every solution.
    pub replace_root: bool,
}

impl Default for NeighbourhoodConfig {
    fn default() -> Self {
        NeighbourhoodConfig {
            constants: vec![-3, -2, -1, 1, 2, 3],
            zero_multiplier: false,
            exponent_range: ExponentRange::DEFAULT,
            max_size: DEFAULT_MAX_SIZE,
            operators: Operator::DEFAULT_ORDER.to_vec(),
            replace_root: true,
        }
    }
}

impl NeighbourhoodConfig {
    /// Constants `[-k, k] \ {0}`.
    pub fn with_constant_range(mut self, k: i64) -> Self {
        self.constants = (-k..=k).filter(|c| *c != 0).collect();
        self
    }

    pub fn with_operators(mut self, operators: &[Operator]) -> Self {
        self.operators = operators.to_vec();
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.constants.contains(&0) {
            return Err(ConfigError::ZeroConstant);
        }
        let integer_ops = self.operators.iter().any(|o| matches!(o, Operator::MulInt | Operator::DivInt));
        if self.constants.is_empty() && integer_ops {
            return Err(ConfigError::NoConstants);
        }
        if self.max_size == 0 {
            return Err(ConfigError::SizeCap);
        }
        if self.exponent_range.cardinality() == 0 {
            return Err(ConfigError::ExponentRange(self.exponent_range));
        }
        let mut seen = self.operators.clone();
        seen.sort_by_key(|o| *o as u8);
        seen.dedup();
        if self.operators.is_empty() || seen.len() != self.operators.len() {
            return Err(ConfigError::OperatorOrder(self.operators.clone()));
        }
        Ok(())
    }

    fn sorted_constants(&self, include_zero: bool) -> Vec<i64> {
        let mut ks = self.constants.clone();
        if include_zero {
            ks.push(0);
        }
        ks.sort_unstable();
        ks.dedup();
        ks
    }
}

/// Neighbourhood generator bound to one equation's unit table.
#[derive(Debug, Clone)]
pub struct Neighbourhood {
    config: NeighbourhoodConfig,
    catalog: MonomialCatalog,
    mul_constants: Vec<Expr>,
    div_constants: Vec<Expr>,
}

impl Neighbourhood {
    pub fn new(units: &[UnitSignature], config: NeighbourhoodConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let catalog = MonomialCatalog::new(units, config.exponent_range);
        let mul_constants = config
            .sorted_constants(config.zero_multiplier)
            .into_iter()
            .map(Expr::constant)
            .collect();
        let div_constants = config.sorted_constants(false).into_iter().map(Expr::constant).collect();
        Ok(Neighbourhood {
            config,
            catalog,
            mul_constants,
            div_constants,
        })
    }

    pub fn for_spec(spec: &EquationSpec, config: NeighbourhoodConfig) -> Result<Self, ConfigError> {
        Self::new(&spec.units(), config)
    }

    pub fn config(&self) -> &NeighbourhoodConfig {
        &self.config
    }

    pub fn catalog(&self) -> &MonomialCatalog {
        &self.catalog
    }

    /// All neighbours of `e` in deterministic order.
    pub fn neighbours(&self, e: &Expr) -> Vec<Expr> {
        let mut out = Vec::new();
        for op in &self.config.operators {
            for position in 0..e.size() {
                self.apply_into(*op, e, position, &mut out);
            }
        }
        out
    }

    /// Candidates from one operator at one pre-order position.
    pub fn apply(&self, op: Operator, e: &Expr, position: usize) -> Vec<Expr> {
        let mut out = Vec::new();
        self.apply_into(op, e, position, &mut out);
        out
    }

    fn apply_into(&self, op: Operator, e: &Expr, position: usize, out: &mut Vec<Expr>) {
        let Some(t) = e.subtree(position) else {
            return;
        };
        let base = e.size() - t.size();
        let cap = self.config.max_size;
        match op {
            Operator::Replace => {
                if position == 0 && !self.config.replace_root {
                    return;
                }
                for m in self.catalog.get(t.signature()) {
                    if m != t && base + m.size() <= cap {
                        out.push(e.replace_unchecked(position, m));
                    }
                }
            }
            Operator::MulInt | Operator::DivInt => {
                if base + t.size() + 2 > cap {
                    return;
                }
                let (ks, wrap): (&[Expr], fn(Expr, Expr) -> Expr) = if op == Operator::MulInt {
                    (&self.mul_constants, Expr::mul)
                } else {
                    (&self.div_constants, Expr::div)
                };
                for k in ks {
                    out.push(e.replace_unchecked(position, &wrap(t.clone(), k.clone())));
                }
            }
            Operator::AddComm | Operator::SubComm => {
                let wrap = if op == Operator::AddComm { Expr::add } else { Expr::sub };
                for q in self.catalog.get(t.signature()) {
                    if base + t.size() + 1 + q.size() <= cap {
                        let sum = wrap(t.clone(), q.clone()).expect("commensurate by construction");
                        out.push(e.replace_unchecked(position, &sum));
                    }
                }
            }
        }
    }
}

/// Convenience wrapper that builds a fresh [`Neighbourhood`] for one call.
pub fn neighbours(e: &Expr, spec: &EquationSpec, cfg: &NeighbourhoodConfig) -> Result<Vec<Expr>, ConfigError> {
    Ok(Neighbourhood::for_spec(spec, cfg.clone())?.neighbours(e))
}
