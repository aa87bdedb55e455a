//! Declarative run configuration, flag overrides and the config digest.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use dagp_core::dataset::{generate_synthetic, load_table, lookup, registry, sample_uniform};
use dagp_core::initializer::ExponentRange;
use dagp_core::{DagpConfig, Dataset64, EquationSpec, GpConfig, NeighbourhoodConfig, Operator};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::manifest::Manifest;

/// Bad selection or flag values; the binary exits with status 2 on these.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    NoScaling,
    LinearScaling,
    Both,
}

impl Mode {
    /// The scaling flags to run, no-scaling first.
    pub fn scalings(self) -> Vec<bool> {
        match self {
            Mode::NoScaling => vec![false],
            Mode::LinearScaling => vec![true],
            Mode::Both => vec![false, true],
        }
    }
}

pub fn mode_name(scaled: bool) -> &'static str {
    if scaled {
        "linear-scaling"
    } else {
        "no-scaling"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LonSettings {
    /// Any of `dot`, `graphml`, `csv`.
    pub formats: Vec<String>,
    pub explore_unrecorded: bool,
    pub cr_samples: usize,
    pub cr_seed: u64,
}

impl Default for LonSettings {
    fn default() -> Self {
        LonSettings {
            formats: vec!["dot".into(), "graphml".into(), "csv".into()],
            explore_unrecorded: false,
            cr_samples: dagp_core::metrics::DEFAULT_CR_SAMPLES,
            cr_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Equation ids; `all` selects the whole registry.
    pub equations: Vec<String>,
    pub mode: Mode,
    pub exp_range: ExponentRange,
    /// Integer constants of `mul-int` / `div-int`.
    pub constants: Vec<i64>,
    pub operators: Vec<Operator>,
    pub replace_root: bool,
    pub max_widenings: usize,
    /// Data file, or a directory of `<id>.txt` files. Synthetic data when absent.
    pub data: Option<PathBuf>,
    pub seed: u64,
    pub n: usize,
    /// Write per-start trajectory logs during `search`.
    pub trajectories: bool,
    pub lon: LonSettings,
    pub gp: GpConfig,
    // placement only, kept out of the digest
    #[serde(skip_serializing)]
    pub out: PathBuf,
    #[serde(skip_serializing)]
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let hood = NeighbourhoodConfig::default();
        RunConfig {
            equations: Vec::new(),
            mode: Mode::Both,
            exp_range: ExponentRange::DEFAULT,
            constants: hood.constants,
            operators: hood.operators,
            replace_root: hood.replace_root,
            max_widenings: DagpConfig::default().max_widenings,
            data: None,
            seed: 42,
            n: 100,
            trajectories: false,
            lon: LonSettings::default(),
            gp: GpConfig::default(),
            out: PathBuf::from("out"),
            jobs: None,
        }
    }
}

impl RunConfig {
    /// Reads a TOML config, a JSON config, or the config recorded in a manifest.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if path.extension().is_some_and(|e| e == "json") {
            if let Ok(m) = serde_json::from_str::<Manifest>(&text) {
                return Ok(m.config);
            }
            return serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()));
        }
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn dagp(&self, scaled: bool) -> DagpConfig {
        DagpConfig {
            neighbourhood: NeighbourhoodConfig {
                constants: self.constants.clone(),
                exponent_range: self.exp_range,
                operators: self.operators.clone(),
                replace_root: self.replace_root,
                ..NeighbourhoodConfig::default()
            },
            init_range: self.exp_range,
            max_widenings: self.max_widenings,
            scaled,
        }
    }

    /// Hex sha256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(usage("n must be at least 1"));
        }
        self.dagp(false).neighbourhood.validate().map_err(|e| usage(e.to_string()))?;
        Ok(())
    }

    /// Selected equations in registry order, deduplicated.
    pub fn equations(&self) -> Result<Vec<Arc<EquationSpec>>> {
        if self.equations.is_empty() {
            return Err(usage("no equations selected (use --eq ID[,ID...] or --eq all)"));
        }
        if self.equations.iter().any(|e| e == "all") {
            return Ok(registry().to_vec());
        }
        for id in &self.equations {
            if lookup(id).is_none() {
                return Err(usage(format!("unknown equation id `{id}`")));
            }
        }
        Ok(registry()
            .iter()
            .filter(|s| self.equations.contains(&s.id))
            .cloned()
            .collect())
    }

    pub fn dataset(&self, spec: &EquationSpec) -> Result<Dataset64> {
        let Some(path) = &self.data else {
            return Ok(generate_synthetic(spec, self.n, self.seed)?);
        };
        let file = if path.is_dir() {
            path.join(format!("{}.txt", spec.id))
        } else {
            path.clone()
        };
        let table: Dataset64 = load_table(&file, spec).with_context(|| format!("reading data {}", file.display()))?;
        Ok(sample_uniform(&table, self.n, self.seed)?.bound_to(&spec.id))
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty())
}

/// `k` for `[-k, k]`, or `lo,hi`.
pub fn parse_exp_range(s: &str) -> Result<ExponentRange> {
    let parts: Vec<&str> = split_list(s).collect();
    let int = |p: &str| p.parse::<i32>().map_err(|_| usage(format!("bad exponent range `{s}`")));
    match parts.as_slice() {
        [k] => Ok(ExponentRange::symmetric(int(k)?)),
        [lo, hi] => Ok(ExponentRange { lo: int(lo)?, hi: int(hi)? }),
        _ => Err(usage(format!("bad exponent range `{s}`"))),
    }
}

/// A bare `k` means `[-k, k] \ {0}`; anything with a comma is an explicit list.
pub fn parse_const_set(s: &str) -> Result<Vec<i64>> {
    let bad = || usage(format!("bad constant set `{s}`"));
    if !s.contains(',') {
        let k: i64 = s.trim().parse().map_err(|_| bad())?;
        return Ok(NeighbourhoodConfig::default().with_constant_range(k).constants);
    }
    split_list(s).map(|p| p.parse().map_err(|_| bad())).collect()
}

pub fn parse_op_order(s: &str) -> Result<Vec<Operator>> {
    split_list(s)
        .map(|p| p.parse::<Operator>().map_err(|e| usage(e.to_string())))
        .collect()
}

pub fn parse_eq_list(s: &[String]) -> Vec<String> {
    s.iter().flat_map(|x| split_list(x).map(String::from).collect::<Vec<_>>()).collect()
}
