//! The 27 benchmark equations with their unit tables and sampling ranges.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use super::formula::{Formula, FormulaError};
use super::DatasetError;
use crate::scalar::Scalar;
use crate::units::UnitSignature;

/// Closed sampling interval for one input variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplingRange {
    pub lo: f64,
    pub hi: f64,
}

impl SamplingRange {
    pub const DEFAULT: SamplingRange = SamplingRange { lo: 1.0, hi: 5.0 };

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub signature: UnitSignature,
    pub range: SamplingRange,
}

/// Per-equation unit table: one signature per variable plus the target.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitTable {
    pub variables: Vec<(String, UnitSignature)>,
    pub target: UnitSignature,
}

impl UnitTable {
    /// Parses lines of the form `name [v,w,x,y,z]` and one `target [..]` line.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<UnitTable, DatasetError> {
        let mut variables = Vec::new();
        let mut target = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |reason: String| DatasetError::MalformedRow { line: n + 1, reason };
            let (name, sig) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| malformed("expected `name [v,w,x,y,z]`".into()))?;
            let sig: UnitSignature = sig.trim().parse().map_err(|e| malformed(format!("{e}")))?;
            if name == "target" {
                if target.replace(sig).is_some() {
                    return Err(malformed("duplicate target line".into()));
                }
            } else {
                variables.push((name.to_string(), sig));
            }
        }
        let target = target.ok_or(DatasetError::MalformedRow {
            line: text.lines().count(),
            reason: "missing target line".into(),
        })?;
        Ok(UnitTable { variables, target })
    }
}

impl fmt::Display for UnitTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, sig) in &self.variables {
            writeln!(f, "{name} {sig}")?;
        }
        writeln!(f, "target {}", self.target)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquationSpec {
    pub id: String,
    pub output: String,
    pub formula_text: String,
    pub formula: Formula,
    pub variables: Vec<Variable>,
    pub target: UnitSignature,
}

impl EquationSpec {
    pub fn new(
        id: &str,
        output: &str,
        formula_text: &str,
        table: UnitTable,
        ranges: &[(&str, SamplingRange)],
    ) -> Result<EquationSpec, FormulaError> {
        let names: Vec<&str> = table.variables.iter().map(|(n, _)| n.as_str()).collect();
        let formula = Formula::parse(formula_text, &names)?;
        let variables = table
            .variables
            .iter()
            .map(|(name, signature)| Variable {
                name: name.clone(),
                signature: *signature,
                range: ranges
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, r)| *r)
                    .unwrap_or(SamplingRange::DEFAULT),
            })
            .collect();
        Ok(EquationSpec {
            id: id.to_string(),
            output: output.to_string(),
            formula_text: formula_text.to_string(),
            formula,
            variables,
            target: table.target,
        })
    }

    pub fn arity(&self) -> usize {
        self.variables.len()
    }

    pub fn units(&self) -> Vec<UnitSignature> {
        self.variables.iter().map(|v| v.signature).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn unit_table(&self) -> UnitTable {
        UnitTable {
            variables: self.variables.iter().map(|v| (v.name.clone(), v.signature)).collect(),
            target: self.target,
        }
    }

    pub fn ground_truth<T: Scalar>(&self, point: &[T]) -> T {
        self.formula.evaluate(point)
    }

    /// Signature of the ground-truth formula under this unit table.
    pub fn formula_signature(&self) -> Result<UnitSignature, FormulaError> {
        self.formula.signature(&self.units())
    }

    /// Number of distinct base dimensions used by the input variables.
    pub fn unit_count(&self) -> usize {
        (0..crate::units::BASE_DIMENSIONS)
            .filter(|d| self.variables.iter().any(|v| v.signature.0[*d] != 0))
            .count()
    }

    pub fn with_ranges(mut self, ranges: &[SamplingRange]) -> EquationSpec {
        for (v, r) in self.variables.iter_mut().zip(ranges) {
            v.range = *r;
        }
        self
    }
}

struct Entry {
    id: &'static str,
    output: &'static str,
    formula: &'static str,
    units: &'static str,
    ranges: &'static [(&'static str, SamplingRange)],
}

macro_rules! units_file {
    ($id:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/units/", $id, ".txt"))
    };
}

const OMEGA_0: SamplingRange = SamplingRange { lo: 3.0, hi: 5.0 };
const OMEGA: SamplingRange = SamplingRange { lo: 1.0, hi: 2.0 };

const ENTRIES: [Entry; 27] = [
    Entry { id: "I.8.14", output: "d", formula: "sqrt((x2-x1)^2+(y2-y1)^2)", units: units_file!("I.8.14"), ranges: &[] },
    Entry { id: "I.12.1", output: "F", formula: "mu*Nn", units: units_file!("I.12.1"), ranges: &[] },
    Entry { id: "I.12.2", output: "F", formula: "q1*q2/(4*pi*epsilon*r^2)", units: units_file!("I.12.2"), ranges: &[] },
    Entry { id: "I.12.5", output: "F", formula: "q2*Ef", units: units_file!("I.12.5"), ranges: &[] },
    Entry { id: "I.13.4", output: "K", formula: "1/2*m*(v^2+u^2+w^2)", units: units_file!("I.13.4"), ranges: &[] },
    Entry { id: "I.14.3", output: "U", formula: "m*g*z", units: units_file!("I.14.3"), ranges: &[] },
    Entry { id: "I.14.4", output: "U", formula: "k_spring*x^2/2", units: units_file!("I.14.4"), ranges: &[] },
    Entry { id: "I.18.4", output: "r", formula: "(m1*r1+m2*r2)/(m1+m2)", units: units_file!("I.18.4"), ranges: &[] },
    Entry { id: "I.24.6", output: "E", formula: "1/4*m*(omega^2+omega_0^2)*x^2", units: units_file!("I.24.6"), ranges: &[] },
    Entry { id: "I.25.13", output: "Ve", formula: "q/C", units: units_file!("I.25.13"), ranges: &[] },
    Entry { id: "I.27.6", output: "f", formula: "1/(1/d1+n/d2)", units: units_file!("I.27.6"), ranges: &[] },
    Entry { id: "I.29.4", output: "k", formula: "omega/c", units: units_file!("I.29.4"), ranges: &[] },
    Entry { id: "I.32.5", output: "P", formula: "q^2*a^2/(6*pi*epsilon*c^3)", units: units_file!("I.32.5"), ranges: &[] },
    Entry { id: "I.34.8", output: "omega", formula: "q*v*B/p", units: units_file!("I.34.8"), ranges: &[] },
    Entry { id: "I.39.1", output: "E_n", formula: "3/2*pr*V", units: units_file!("I.39.1"), ranges: &[] },
    Entry { id: "I.39.22", output: "P_F", formula: "n*kb*T/V", units: units_file!("I.39.22"), ranges: &[] },
    Entry { id: "I.43.16", output: "v", formula: "mu_drift*q*Ve/d", units: units_file!("I.43.16"), ranges: &[] },
    Entry { id: "I.43.31", output: "D", formula: "mob*kb*T", units: units_file!("I.43.31"), ranges: &[] },
    Entry { id: "II.2.42", output: "P", formula: "kappa*(T2-T1)*A/d", units: units_file!("II.2.42"), ranges: &[] },
    Entry { id: "II.8.31", output: "E_den", formula: "epsilon*Ef^2/2", units: units_file!("II.8.31"), ranges: &[] },
    Entry {
        id: "II.11.3",
        output: "x",
        formula: "q*Ef/(m*(omega_0^2-omega^2))",
        units: units_file!("II.11.3"),
        ranges: &[("omega_0", OMEGA_0), ("omega", OMEGA)],
    },
    Entry { id: "II.15.4", output: "E", formula: "-mom*B*cos(theta)", units: units_file!("II.15.4"), ranges: &[] },
    Entry { id: "II.34.2", output: "mom", formula: "q*v*r/2", units: units_file!("II.34.2"), ranges: &[] },
    Entry { id: "II.34.29b", output: "E", formula: "g_*mom*B*Jz/h", units: units_file!("II.34.29b"), ranges: &[] },
    Entry { id: "II.38.3", output: "F", formula: "Y*A*x/d", units: units_file!("II.38.3"), ranges: &[] },
    Entry { id: "III.13.18", output: "v", formula: "2*E_n*d^2*k/h", units: units_file!("III.13.18"), ranges: &[] },
    Entry { id: "III.15.14", output: "m", formula: "h^2/(2*E_n*d^2)", units: units_file!("III.15.14"), ranges: &[] },
];

/// The bundled equations in table order.
pub fn registry() -> &'static [Arc<EquationSpec>] {
    static REGISTRY: OnceLock<Vec<Arc<EquationSpec>>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        ENTRIES
            .iter()
            .map(|e| {
                let table = UnitTable::parse(e.units).expect("bundled unit table parses");
                let spec = EquationSpec::new(e.id, e.output, e.formula, table, e.ranges).expect("bundled formula parses");
                Arc::new(spec)
            })
            .collect()
    })
}

pub fn lookup(id: &str) -> Option<Arc<EquationSpec>> {
    registry().iter().find(|s| s.id == id).cloned()
}

/// Ids whose unit constraints admit exactly one initial monomial.
pub const TRIVIAL_IDS: [&str; 13] = [
    "I.12.5", "I.14.3", "I.14.4", "I.29.4", "I.32.5", "I.34.8", "I.39.1", "I.25.13", "I.43.16", "I.43.31", "II.8.31",
    "II.34.2", "III.15.14",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_seven_equations_with_table_variable_counts() {
        let expected = [
            ("I.8.14", 4, 1),
            ("I.12.1", 2, 3),
            ("I.12.2", 4, 4),
            ("I.12.5", 2, 4),
            ("I.13.4", 4, 3),
            ("I.14.3", 3, 3),
            ("I.14.4", 2, 3),
            ("I.18.4", 4, 2),
            ("I.24.6", 4, 3),
            ("I.25.13", 2, 4),
            ("I.27.6", 3, 1),
            ("I.29.4", 2, 2),
            ("I.32.5", 4, 4),
            ("I.34.8", 4, 4),
            ("I.39.1", 2, 3),
            ("I.39.22", 4, 4),
            ("I.43.16", 4, 4),
            ("I.43.31", 3, 4),
            ("II.2.42", 5, 4),
            ("II.8.31", 2, 4),
            ("II.11.3", 5, 4),
            ("II.15.4", 3, 4),
            ("II.34.2", 3, 4),
            ("II.34.29b", 5, 4),
            ("II.38.3", 4, 3),
            ("III.13.18", 4, 3),
            ("III.15.14", 3, 3),
        ];
        let reg = registry();
        assert_eq!(reg.len(), 27);
        for ((id, vars, units), spec) in expected.iter().zip(reg) {
            assert_eq!(spec.id, *id);
            assert_eq!(spec.arity(), *vars, "{id}");
            assert_eq!(spec.unit_count(), *units, "{id}");
        }
    }

    #[test]
    fn every_formula_folds_to_its_target() {
        for spec in registry() {
            assert_eq!(spec.formula_signature(), Ok(spec.target), "{}", spec.id);
        }
    }

    #[test]
    fn unit_table_text_round_trip() {
        for spec in registry() {
            let table = spec.unit_table();
            assert_eq!(UnitTable::parse(&table.to_string()).unwrap(), table);
        }
        assert!(UnitTable::parse("a [1,0,0,0,0]\n").is_err());
        assert!(UnitTable::parse("a [1,0,0,0]\ntarget [0,0,0,0,0]\n").is_err());
    }

    #[test]
    fn lookup_by_id() {
        assert_eq!(lookup("I.12.5").unwrap().arity(), 2);
        assert_eq!(lookup("II.34.29b").unwrap().arity(), 5);
        assert!(lookup("I.1.1").is_none());
    }
}
