//! Command-line front end: a config file plus flag overrides.

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::commands::{execute, Command};
use crate::config::{parse_const_set, parse_eq_list, parse_exp_range, parse_op_order, Mode, RunConfig, UsageError};

#[derive(Debug, Parser)]
#[command(name = "dagp", version, about = "Dimensionally-aware local search for symbolic regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// List the initial monomials of each equation with their signatures.
    Enum(Common),
    /// Multi-start local search; evaluations to the first hit per equation.
    Search {
        #[command(flatten)]
        common: Common,
        /// Also log every trajectory as JSON lines.
        #[arg(long)]
        trajectories: bool,
    },
    /// Local optima networks, their exports and graph metrics.
    Lon {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of dot, graphml, csv.
        #[arg(long)]
        formats: Option<String>,
        /// Climb from unrecorded neighbours too when looking for edges.
        #[arg(long)]
        explore: bool,
        #[arg(long)]
        cr_samples: Option<usize>,
        #[arg(long)]
        cr_seed: Option<u64>,
    },
    /// Steady-state GP baseline runs.
    Gp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Merge search and GP tables from DIR into one report.
    Report {
        dir: PathBuf,
        /// Defaults to DIR.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML config, JSON config, or a manifest from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Equation ids, comma-separated or repeated; `all` for every equation.
    #[arg(long = "eq")]
    pub eq: Vec<String>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// `k` for [-k, k], or `lo,hi`.
    #[arg(long, allow_hyphen_values = true)]
    pub exp_range: Option<String>,
    /// `k` for [-k, k] without 0, or an explicit comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub const_set: Option<String>,
    /// Comma-separated operators: replace, add-comm, sub-comm, mul-int, div-int.
    #[arg(long)]
    pub op_order: Option<String>,
    /// Keep `replace` away from the root.
    #[arg(long)]
    pub no_root_replace: bool,
    /// Data file, or a directory of `<id>.txt` files.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Rows per data set.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl Common {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if !self.eq.is_empty() {
            c.equations = parse_eq_list(&self.eq);
        }
        if let Some(m) = self.mode {
            c.mode = m;
        }
        if let Some(s) = &self.exp_range {
            c.exp_range = parse_exp_range(s)?;
        }
        if let Some(s) = &self.const_set {
            c.constants = parse_const_set(s)?;
        }
        if let Some(s) = &self.op_order {
            c.operators = parse_op_order(s)?;
        }
        if self.no_root_replace {
            c.replace_root = false;
        }
        if let Some(p) = &self.data {
            c.data = Some(p.clone());
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(n) = self.n {
            c.n = n;
        }
        if let Some(o) = &self.out {
            c.out = o.clone();
        }
        if self.jobs.is_some() {
            c.jobs = self.jobs;
        }
        Ok(c)
    }
}

impl Sub {
    pub fn plan(&self) -> Result<(Command, RunConfig, Option<PathBuf>)> {
        Ok(match self {
            Sub::Enum(common) => (Command::Enum, common.resolve()?, None),
            Sub::Search { common, trajectories } => {
                let mut c = common.resolve()?;
                c.trajectories |= trajectories;
                (Command::Search, c, None)
            }
            Sub::Lon {
                common,
                formats,
                explore,
                cr_samples,
                cr_seed,
            } => {
                let mut c = common.resolve()?;
                if let Some(f) = formats {
                    c.lon.formats = f.split(',').map(|s| s.trim().to_string()).collect();
                }
                c.lon.explore_unrecorded |= explore;
                if let Some(s) = cr_samples {
                    c.lon.cr_samples = *s;
                }
                if let Some(s) = cr_seed {
                    c.lon.cr_seed = *s;
                }
                (Command::Lon, c, None)
            }
            Sub::Gp { common, runs, budget } => {
                let mut c = common.resolve()?;
                if let Some(r) = runs {
                    c.gp.runs = *r;
                }
                if let Some(b) = budget {
                    c.gp.budget = *b;
                }
                (Command::Gp, c, None)
            }
            Sub::Report { dir, out } => {
                let c = RunConfig {
                    out: out.clone().unwrap_or_else(|| dir.clone()),
                    ..RunConfig::default()
                };
                (Command::Report, c, Some(dir.clone()))
            }
        })
    }
}

/// Parses `args` and runs the command. Exit status 2 for usage errors, 1 for
/// any other failure.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = cli
        .command
        .plan()
        .and_then(|(cmd, cfg, input)| execute(cmd, &cfg, input.as_deref()).map(|m| (cfg, m)));
    match result {
        Ok((cfg, m)) => {
            println!(
                "{}: {} files in {} (config {})",
                m.command,
                m.outputs.len() + 1,
                cfg.out.display(),
                &m.config_digest[..12]
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
