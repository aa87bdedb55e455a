//! Sampled data sets, the equation registry and synthetic data generation.

pub mod formula;
pub mod registry;

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use formula::{Formula, FormulaError};
pub use registry::{lookup, registry, EquationSpec, SamplingRange, UnitTable, Variable, TRIVIAL_IDS};

use crate::scalar::Scalar;

/// Consecutive singular draws tolerated before a range is declared unusable.
const MAX_SINGULAR_DRAWS: usize = 1000;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    Arity { line: usize, expected: usize, found: usize },
    #[error("requested {requested} rows from a table of {available}")]
    InsufficientRows { requested: usize, available: usize },
    #[error("data set must contain at least one row")]
    Empty,
    #[error("variable `{variable}` range [{lo}, {hi}] cannot avoid singular values")]
    RangeMisconfiguration { variable: String, lo: f64, hi: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Rows of inputs and targets, stored column-major for fast evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    columns: Vec<Vec<T>>,
    targets: Vec<T>,
    equation: Option<String>,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a data set from row-major points.
    pub fn from_rows(rows: &[Vec<T>], targets: Vec<T>) -> Result<Self, DatasetError> {
        if rows.is_empty() || rows.len() != targets.len() {
            return Err(DatasetError::Empty);
        }
        let arity = rows[0].len();
        let mut columns = vec![Vec::with_capacity(rows.len()); arity];
        for (line, row) in rows.iter().enumerate() {
            if row.len() != arity {
                return Err(DatasetError::Arity {
                    line: line + 1,
                    expected: arity,
                    found: row.len(),
                });
            }
            for (c, x) in columns.iter_mut().zip(row) {
                c.push(*x);
            }
        }
        Ok(Dataset {
            columns,
            targets,
            equation: None,
        })
    }

    pub fn bound_to(mut self, equation: &str) -> Self {
        self.equation = Some(equation.to_string());
        self
    }

    pub fn equation(&self) -> Option<&str> {
        self.equation.as_deref()
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<T>] {
        &self.columns
    }

    pub fn targets(&self) -> &[T] {
        &self.targets
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.len()).map(|i| self.row(i)).collect()
    }

    fn select(&self, indices: &[usize]) -> Self {
        Dataset {
            columns: self.columns.iter().map(|c| indices.iter().map(|&i| c[i]).collect()).collect(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            equation: self.equation.clone(),
        }
    }

    /// Whitespace-separated text, one row per line, target last. Values use the
    /// shortest representation that parses back to the same number.
    pub fn to_table_string(&self) -> String {
        let mut out = String::new();
        for i in 0..self.len() {
            for c in &self.columns {
                write!(out, "{} ", c[i]).unwrap();
            }
            writeln!(out, "{}", self.targets[i]).unwrap();
        }
        out
    }

    pub fn write_table(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        std::fs::write(path, self.to_table_string())?;
        Ok(())
    }

    /// Parses whitespace-separated rows with `arity` inputs followed by the target.
    pub fn parse_table(text: &str, arity: usize) -> Result<Self, DatasetError> {
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != arity + 1 {
                return Err(DatasetError::Arity {
                    line: n + 1,
                    expected: arity + 1,
                    found: fields.len(),
                });
            }
            let mut values = Vec::with_capacity(fields.len());
            for f in fields {
                let x: f64 = f.parse().map_err(|_| DatasetError::MalformedRow {
                    line: n + 1,
                    reason: format!("`{f}` is not a number"),
                })?;
                if !x.is_finite() {
                    return Err(DatasetError::MalformedRow {
                        line: n + 1,
                        reason: format!("`{f}` is not finite"),
                    });
                }
                values.push(T::lit(x));
            }
            targets.push(values.pop().expect("arity + 1 fields"));
            rows.push(values);
        }
        if rows.is_empty() {
            return Err(DatasetError::Empty);
        }
        Self::from_rows(&rows, targets)
    }
}

/// Reads a data file laid out for `spec` (its variables in order, then the target).
pub fn load_table<T: Scalar>(path: impl AsRef<Path>, spec: &EquationSpec) -> Result<Dataset<T>, DatasetError> {
    let text = std::fs::read_to_string(path)?;
    Ok(Dataset::parse_table(&text, spec.arity())?.bound_to(&spec.id))
}

/// Picks `n` distinct rows uniformly at random; the chosen rows keep their
/// original relative order.
pub fn sample_uniform<T: Scalar>(d: &Dataset<T>, n: usize, seed: u64) -> Result<Dataset<T>, DatasetError> {
    if n > d.len() {
        return Err(DatasetError::InsufficientRows {
            requested: n,
            available: d.len(),
        });
    }
    if n == 0 {
        return Err(DatasetError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, d.len(), n).into_vec();
    picked.sort_unstable();
    Ok(d.select(&picked))
}

/// Draws `n` points uniformly from the equation's sampling ranges and labels them with the
/// ground-truth formula. Draws with a non-finite target are redrawn.
pub fn generate_synthetic<T: Scalar>(spec: &EquationSpec, n: usize, seed: u64) -> Result<Dataset<T>, DatasetError> {
    if n == 0 {
        return Err(DatasetError::Empty);
    }
    let denominators = spec.formula.denominator_variables();
    for (i, v) in spec.variables.iter().enumerate() {
        let r = v.range;
        let bad = !(r.lo.is_finite() && r.hi.is_finite() && r.lo < r.hi)
            || (denominators.contains(&i) && r.contains_zero());
        if bad {
            return Err(DatasetError::RangeMisconfiguration {
                variable: v.name.clone(),
                lo: r.lo,
                hi: r.hi,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    let mut singular = 0;
    while rows.len() < n {
        let point: Vec<T> = spec
            .variables
            .iter()
            .map(|v| T::lit(rng.gen_range(v.range.lo..=v.range.hi)))
            .collect();
        let y: T = spec.ground_truth(&point);
        if y.is_finite() {
            singular = 0;
            rows.push(point);
            targets.push(y);
        } else {
            singular += 1;
            if singular >= MAX_SINGULAR_DRAWS {
                let v = &spec.variables[0];
                return Err(DatasetError::RangeMisconfiguration {
                    variable: v.name.clone(),
                    lo: v.range.lo,
                    hi: v.range.hi,
                });
            }
        }
    }
    Ok(Dataset::from_rows(&rows, targets)?.bound_to(&spec.id))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rows() {
        let d: Dataset<f64> = Dataset::parse_table("1.0 2.0 3.0 6.0\n\n4 5 6 120\n", 3).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.row(0), vec![1.0, 2.0, 3.0]);
        assert_eq!(d.targets(), &[6.0, 120.0]);
    }

    #[test]
    fn rejects_bad_rows() {
        let err = Dataset::<f64>::parse_table("1 2 3 6\n1 2 3\n", 3).unwrap_err();
        assert!(matches!(err, DatasetError::Arity { line: 2, expected: 4, found: 3 }));
        let err = Dataset::<f64>::parse_table("1 2 x 6\n", 3).unwrap_err();
        assert!(matches!(err, DatasetError::MalformedRow { line: 1, .. }));
        let err = Dataset::<f64>::parse_table("1 2 inf 6\n", 3).unwrap_err();
        assert!(matches!(err, DatasetError::MalformedRow { line: 1, .. }));
        assert!(matches!(Dataset::<f64>::parse_table("\n", 3), Err(DatasetError::Empty)));
    }

    #[test]
    fn file_round_trip_is_lossless() {
        let spec = lookup("I.12.2").unwrap();
        let d: Dataset<f64> = generate_synthetic(&spec, 50, 7).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("I.12.2.txt");
        d.write_table(&path).unwrap();
        let back: Dataset<f64> = load_table(&path, &spec).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn sampling() {
        let spec = lookup("I.14.3").unwrap();
        let d: Dataset<f64> = generate_synthetic(&spec, 300, 1).unwrap();
        assert_eq!(sample_uniform(&d, d.len(), 5).unwrap(), d);
        let a = sample_uniform(&d, 100, 11).unwrap();
        let b = sample_uniform(&d, 100, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        let source = d.rows();
        for r in a.rows() {
            assert!(source.contains(&r));
        }
        let mut distinct = a.rows();
        distinct.dedup();
        assert_eq!(distinct.len(), 100);
        assert!(matches!(
            sample_uniform(&d, 301, 0),
            Err(DatasetError::InsufficientRows { requested: 301, available: 300 })
        ));
    }

    #[test]
    fn sample_from_large_table() {
        let spec = lookup("I.12.5").unwrap();
        let d: Dataset<f64> = generate_synthetic(&spec, 100_000, 3).unwrap();
        let s = sample_uniform(&d, 100, 4).unwrap();
        assert_eq!(s.len(), 100);
    }

    #[test]
    fn synthetic_products_are_exact() {
        let spec = lookup("I.14.3").unwrap();
        let d: Dataset<f64> = generate_synthetic(&spec, 5, 99).unwrap();
        assert_eq!(d.len(), 5);
        for (row, y) in d.rows().iter().zip(d.targets()) {
            assert_eq!(*y, row[0] * row[1] * row[2]);
        }
        let again: Dataset<f64> = generate_synthetic(&spec, 5, 99).unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn synthetic_points_stay_in_range() {
        for spec in registry() {
            let d: Dataset<f64> = generate_synthetic(spec, 200, 2).unwrap();
            for row in d.rows() {
                for (x, v) in row.iter().zip(&spec.variables) {
                    assert!(v.range.contains(*x), "{} {}", spec.id, v.name);
                }
            }
            assert!(d.targets().iter().all(|y| y.is_finite()));
        }
    }

    #[test]
    fn ground_truth_has_zero_error_on_its_own_data() {
        for spec in registry() {
            let d: Dataset<f64> = generate_synthetic(spec, 100, 5).unwrap();
            let mse: f64 = d
                .rows()
                .iter()
                .zip(d.targets())
                .map(|(r, y)| (spec.ground_truth(r) - y).powi(2))
                .sum::<f64>()
                / d.len() as f64;
            assert!(mse < 1e-20, "{}", spec.id);
        }
    }

    #[test]
    fn denominators_never_vanish_on_positive_ranges() {
        let spec = lookup("I.27.6").unwrap();
        let d: Dataset<f64> = generate_synthetic(&spec, 10_000, 13).unwrap();
        for row in d.rows() {
            let (d1, n, d2) = (row[0], row[1], row[2]);
            assert!(d1 != 0.0 && d2 != 0.0);
            assert!(1.0 / d1 + n / d2 != 0.0);
        }
    }

    #[test]
    fn misconfigured_ranges_are_rejected() {
        let spec = lookup("I.27.6").unwrap();
        let zero_span = SamplingRange { lo: -1.0, hi: 1.0 };
        let bad = (*spec).clone().with_ranges(&[zero_span, SamplingRange::DEFAULT, SamplingRange::DEFAULT]);
        assert!(matches!(
            generate_synthetic::<f64>(&bad, 10, 0),
            Err(DatasetError::RangeMisconfiguration { .. })
        ));
        let inverted = (*spec).clone().with_ranges(&[SamplingRange { lo: 5.0, hi: 1.0 }]);
        assert!(generate_synthetic::<f64>(&inverted, 10, 0).is_err());
        assert!(matches!(generate_synthetic::<f64>(&spec, 0, 0), Err(DatasetError::Empty)));
    }

    #[test]
    fn single_precision_generation() {
        let spec = lookup("I.12.5").unwrap();
        let d: Dataset<f32> = generate_synthetic(&spec, 10, 1).unwrap();
        assert_eq!(d.len(), 10);
    }
}
