//! The five subcommands. Each writes its files under the output directory and
//! returns their relative paths; [`execute`] adds the manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use dagp_core::dataset::registry;
use dagp_core::gp::{estimate_evaluations, run_gp};
use dagp_core::initializer::enumerate_with_restart;
use dagp_core::localsearch::search_all;
use dagp_core::lon::{build_lon, ExportFormat};
use dagp_core::{EquationSpec, LonOptions, MetricsRow};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{mode_name, RunConfig, UsageError};
use crate::manifest::{gp_seeds, Manifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Enum,
    Search,
    Lon,
    Gp,
    /// Merge tables found in the given directory.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Enum => "enum",
            Command::Search => "search",
            Command::Lon => "lon",
            Command::Gp => "gp",
            Command::Report => "report",
        }
    }
}

fn write_file(root: &Path, rel: &str, contents: &str) -> Result<String> {
    let path = root.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(rel.to_string())
}

/// Runs `cmd` and writes its manifest. `input` is only read by `report`.
pub fn execute(cmd: Command, cfg: &RunConfig, input: Option<&Path>) -> Result<Manifest> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let run = || match cmd {
        Command::Enum => cmd_enum(cfg),
        Command::Search => cmd_search(cfg),
        Command::Lon => cmd_lon(cfg),
        Command::Gp => cmd_gp(cfg),
        Command::Report => cmd_report(input.unwrap_or(&cfg.out), &cfg.out),
    };
    let outputs = match cfg.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(run)?,
        None => run()?,
    };
    let manifest = Manifest::new(cmd.name(), cfg, outputs);
    manifest.write(&cfg.out)?;
    Ok(manifest)
}

/// Applies `f` to every selected equation in parallel, keeping registry order.
fn per_equation<R: Send>(
    cfg: &RunConfig,
    f: impl Fn(&Arc<EquationSpec>) -> Result<R> + Sync,
) -> Result<Vec<(Arc<EquationSpec>, R)>> {
    let specs = cfg.equations()?;
    specs
        .par_iter()
        .map(|s| f(s).with_context(|| format!("equation {}", s.id)).map(|r| (s.clone(), r)))
        .collect()
}

pub fn cmd_enum(cfg: &RunConfig) -> Result<Vec<String>> {
    let out = &cfg.out;
    let rows = per_equation(cfg, |spec| {
        let (starts, range) = enumerate_with_restart(spec, cfg.exp_range, cfg.max_widenings)?;
        let mut text = String::new();
        for e in &starts {
            let _ = writeln!(text, "{}\t{}", e.to_prefix(), e.signature());
        }
        let file = write_file(out, &format!("enum/{}.txt", spec.id), &text)?;
        Ok((file, format!("{},{},{},{}", spec.id, range.lo, range.hi, starts.len())))
    })?;
    let mut files: Vec<String> = rows.iter().map(|(_, (f, _))| f.clone()).collect();
    let mut table = String::from("equation,exp_lo,exp_hi,candidates\n");
    for (_, (_, line)) in &rows {
        table.push_str(line);
        table.push('\n');
    }
    files.push(write_file(out, "enum.csv", &table)?);
    Ok(files)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRow {
    pub equation: String,
    pub mode: String,
    pub starts: usize,
    pub exp_lo: i32,
    pub exp_hi: i32,
    /// Global evaluation counter at the first hit, starts taken in enumeration order.
    pub evaluations_to_hit: Option<u64>,
    pub total_evaluations: u64,
    pub hit: bool,
    pub distinct_optima: usize,
    pub best_mse: f64,
    pub best_expr: String,
}

fn dash_or<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

/// `equation` plus one column per mode, in the given row order.
fn mode_table(header_prefix: &str, modes: &[bool], rows: &[(String, Vec<String>)]) -> String {
    let mut out = String::from("equation");
    for &m in modes {
        let _ = write!(out, ",{header_prefix}{}", mode_name(m));
    }
    out.push('\n');
    for (eq, cells) in rows {
        let _ = writeln!(out, "{eq},{}", cells.join(","));
    }
    out
}

pub fn cmd_search(cfg: &RunConfig) -> Result<Vec<String>> {
    let out = &cfg.out;
    let modes = cfg.mode.scalings();
    let per = per_equation(cfg, |spec| {
        let d = cfg.dataset(spec)?;
        let mut rows = Vec::new();
        let mut files = Vec::new();
        for &scaled in &modes {
            let run = search_all(spec, &d, &cfg.dagp(scaled))?;
            if cfg.trajectories {
                let mut log = String::new();
                for (i, r) in run.results.iter().enumerate() {
                    for rec in r.records(i) {
                        log.push_str(&serde_json::to_string(&rec)?);
                        log.push('\n');
                    }
                }
                files.push(write_file(out, &format!("trajectories/{}/{}.jsonl", mode_name(scaled), spec.id), &log)?);
            }
            let best = run
                .results
                .iter()
                .reduce(|a, b| if b.fitness.mse < a.fitness.mse { b } else { a })
                .expect("at least one start");
            let optima: BTreeSet<_> = run.results.iter().map(|r| r.optimum.key().clone()).collect();
            rows.push(SearchRow {
                equation: spec.id.clone(),
                mode: mode_name(scaled).to_string(),
                starts: run.starts.len(),
                exp_lo: run.init_range.lo,
                exp_hi: run.init_range.hi,
                evaluations_to_hit: run.evaluations_to_hit(),
                total_evaluations: run.total_evaluations(),
                hit: run.any_hit(),
                distinct_optima: optima.len(),
                best_mse: best.fitness.mse,
                best_expr: best.optimum.to_prefix(),
            });
        }
        Ok((rows, files))
    })?;
    let mut files: Vec<String> = per.iter().flat_map(|(_, (_, f))| f.clone()).collect();
    let table_rows: Vec<(String, Vec<String>)> = per
        .iter()
        .map(|(s, (rows, _))| (s.id.clone(), rows.iter().map(|r| dash_or(r.evaluations_to_hit)).collect()))
        .collect();
    files.push(write_file(out, "search.csv", &mode_table("", &modes, &table_rows))?);
    let all: Vec<&SearchRow> = per.iter().flat_map(|(_, (rows, _))| rows).collect();
    files.push(write_file(out, "search.json", &(serde_json::to_string_pretty(&all)? + "\n"))?);
    Ok(files)
}

pub fn cmd_lon(cfg: &RunConfig) -> Result<Vec<String>> {
    let out = &cfg.out;
    let modes = cfg.mode.scalings();
    let formats: Vec<ExportFormat> = cfg
        .lon
        .formats
        .iter()
        .map(|f| f.parse().map_err(|e: dagp_core::lon::LonError| UsageError(e.to_string())))
        .collect::<Result<_, _>>()?;
    let opts = LonOptions {
        explore_unrecorded: cfg.lon.explore_unrecorded,
    };
    let digest = cfg.digest();
    let per = per_equation(cfg, |spec| {
        let d = cfg.dataset(spec)?;
        let mut rows = Vec::new();
        let mut files = Vec::new();
        for &scaled in &modes {
            let mut lon = build_lon(spec, &d, &cfg.dagp(scaled), &opts)?;
            lon.config_digest = digest.clone();
            for &fmt in &formats {
                for (name, text) in lon.export(fmt, &spec.id) {
                    files.push(write_file(out, &format!("lon/{}/{name}", mode_name(scaled)), &text)?);
                }
            }
            rows.push(lon.metrics(cfg.lon.cr_samples, cfg.lon.cr_seed));
        }
        Ok((rows, files))
    })?;
    let mut files: Vec<String> = per.iter().flat_map(|(_, (_, f))| f.clone()).collect();
    for (k, &scaled) in modes.iter().enumerate() {
        let rows: Vec<&MetricsRow> = per.iter().map(|(_, (rows, _))| &rows[k]).collect();
        let mut table = MetricsRow::HEADER.join(",") + "\n";
        for r in &rows {
            table += &(r.csv_fields().join(",") + "\n");
        }
        files.push(write_file(out, &format!("lon_{}.csv", mode_name(scaled)), &table)?);
        files.push(write_file(
            out,
            &format!("lon_{}.json", mode_name(scaled)),
            &(serde_json::to_string_pretty(&rows)? + "\n"),
        )?);
    }
    Ok(files)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpRow {
    pub equation: String,
    pub mode: String,
    pub runs: usize,
    pub successes: usize,
    /// Total evaluations over all runs divided by successful runs.
    pub estimate: Option<f64>,
}

impl GpRow {
    /// `"580 (50)"`, or `"-"` without successes.
    pub fn cell(&self) -> String {
        match self.estimate {
            Some(e) => format!("{e:.0} ({})", self.successes),
            None => "-".to_string(),
        }
    }
}

pub fn cmd_gp(cfg: &RunConfig) -> Result<Vec<String>> {
    let out = &cfg.out;
    let modes = cfg.mode.scalings();
    cfg.gp.validate().map_err(|e| UsageError(e.to_string()))?;
    let seeds = gp_seeds(cfg);
    let per = per_equation(cfg, |spec| {
        let d = cfg.dataset(spec)?;
        let mut rows = Vec::new();
        let mut files = Vec::new();
        for &scaled in &modes {
            let gp = dagp_core::GpConfig {
                scaled,
                ..cfg.gp.clone()
            };
            let outcomes = seeds
                .par_iter()
                .map(|&s| run_gp(&d, &gp, s))
                .collect::<Result<Vec<_>, _>>()?;
            let mut log = String::new();
            for o in &outcomes {
                log.push_str(&serde_json::to_string(o)?);
                log.push('\n');
            }
            files.push(write_file(out, &format!("gp/{}/{}.jsonl", mode_name(scaled), spec.id), &log)?);
            rows.push(GpRow {
                equation: spec.id.clone(),
                mode: mode_name(scaled).to_string(),
                runs: outcomes.len(),
                successes: outcomes.iter().filter(|o| o.success).count(),
                estimate: estimate_evaluations(&outcomes),
            });
        }
        Ok((rows, files))
    })?;
    let mut files: Vec<String> = per.iter().flat_map(|(_, (_, f))| f.clone()).collect();
    let table_rows: Vec<(String, Vec<String>)> = per
        .iter()
        .map(|(s, (rows, _))| (s.id.clone(), rows.iter().map(GpRow::cell).collect()))
        .collect();
    files.push(write_file(out, "gp.csv", &mode_table("", &modes, &table_rows))?);
    let all: Vec<&GpRow> = per.iter().flat_map(|(_, (rows, _))| rows).collect();
    files.push(write_file(out, "gp.json", &(serde_json::to_string_pretty(&all)? + "\n"))?);
    Ok(files)
}

/// Header and rows of one of our comma-separated tables.
type Table = (Vec<String>, Vec<Vec<String>>);

fn read_table(path: &Path) -> Result<Option<Table>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let split = |l: &str| l.split(',').map(String::from).collect::<Vec<_>>();
    let header = split(lines.next().unwrap_or_default());
    Ok(Some((header, lines.map(split).collect())))
}

fn markdown(header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = format!("| {} |\n", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
    out
}

/// Merges `search.csv` and `gp.csv` from `input` into `report.csv`, and
/// renders every table found there into `report.md`.
pub fn cmd_report(input: &Path, out: &Path) -> Result<Vec<String>> {
    let sources = [("dagp_", "search.csv"), ("gp_", "gp.csv")];
    let mut header = vec!["equation".to_string()];
    let mut cells: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    for (prefix, file) in sources {
        let Some((h, rows)) = read_table(&input.join(file))? else {
            continue;
        };
        let cols: Vec<String> = h.iter().skip(1).map(|c| format!("{prefix}{c}")).collect();
        header.extend(cols.iter().cloned());
        for r in rows {
            let entry = cells.entry(r[0].clone()).or_default();
            for (c, v) in cols.iter().zip(r.iter().skip(1)) {
                entry.insert(c.clone(), v.clone());
            }
        }
    }
    if header.len() == 1 {
        bail!("no search.csv or gp.csv in {}", input.display());
    }
    let order: Vec<&str> = registry().iter().map(|s| s.id.as_str()).collect();
    let mut ids: Vec<&String> = cells.keys().collect();
    ids.sort_by_key(|id| order.iter().position(|o| o == id).unwrap_or(usize::MAX));
    let rows: Vec<Vec<String>> = ids
        .iter()
        .map(|id| {
            let m = &cells[*id];
            std::iter::once((*id).clone())
                .chain(header[1..].iter().map(|c| m.get(c).cloned().unwrap_or_default()))
                .collect()
        })
        .collect();
    let mut csv = header.join(",") + "\n";
    for r in &rows {
        csv += &(r.join(",") + "\n");
    }
    let mut md = String::from("## Evaluations to the optimum\n\n") + &markdown(&header, &rows);
    for mode in [false, true] {
        let name = format!("lon_{}.csv", mode_name(mode));
        if let Some((h, r)) = read_table(&input.join(&name))? {
            let _ = write!(md, "\n## Graph metrics, {}\n\n{}", mode_name(mode), markdown(&h, &r));
        }
    }
    Ok(vec![write_file(out, "report.csv", &csv)?, write_file(out, "report.md", &md)?])
}

