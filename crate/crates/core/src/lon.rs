//! Local optima network of the multi-start search.
//!
//! Nodes are distinct optima (by canonical key), each basin is the set of
//! distinct solutions seen on trajectories ending there, and two nodes are
//! joined when a recorded solution of one basin has a neighbour recorded in
//! the other.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{Dataset, EquationSpec};
use crate::expr::{CanonicalKey, Expr};
use crate::fitness::FitnessValue;
use crate::localsearch::{greedy_search, search_all_with, DagpConfig, MultiStart, SearchError};
use crate::metrics::{Graph, MetricsRow};
use crate::neighbourhood::Neighbourhood;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum LonError {
    #[error("unknown export format `{0}` (expected dot, graphml or csv)")]
    UnknownFormat(String),
    #[error("malformed {file}: {reason}")]
    Malformed { file: &'static str, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LonOptions {
    /// Also climb from every unrecorded neighbour of a recorded solution to
    /// find which basin it belongs to. Very expensive.
    pub explore_unrecorded: bool,
}

#[derive(Debug, Clone)]
pub struct LonNode<T> {
    pub key: CanonicalKey,
    pub expr: Expr,
    pub fitness: FitnessValue<T>,
    pub basin_size: usize,
    pub hit: bool,
}

/// Nodes sorted by key; edges `(i, j)` with `i < j`.
#[derive(Debug, Clone)]
pub struct Lon<T> {
    pub equation: String,
    pub config_digest: String,
    pub nodes: Vec<LonNode<T>>,
    pub edges: BTreeSet<(usize, usize)>,
}

pub fn build_lon<T: Scalar>(
    spec: &EquationSpec,
    d: &Dataset<T>,
    cfg: &DagpConfig,
    opts: &LonOptions,
) -> Result<Lon<T>, SearchError> {
    let hood = Neighbourhood::for_spec(spec, cfg.neighbourhood.clone())?;
    let run = search_all_with(spec, d, cfg, &hood)?;
    Ok(lon_from_search(&spec.id, &run, &hood, d, cfg.scaled, opts))
}

struct Assembly<T> {
    optima: BTreeMap<CanonicalKey, (Expr, FitnessValue<T>)>,
    // solution key -> (solution, optimum key); first trajectory wins
    basin_of: HashMap<CanonicalKey, (Expr, CanonicalKey)>,
}

impl<T: Scalar> Assembly<T> {
    fn absorb(&mut self, trajectory: &[(Expr, FitnessValue<T>)]) {
        let (opt, fit) = trajectory.last().expect("trajectory holds its start");
        let okey = opt.key().clone();
        self.optima.entry(okey.clone()).or_insert_with(|| (opt.clone(), *fit));
        for (s, _) in trajectory {
            self.basin_of
                .entry(s.key().clone())
                .or_insert_with(|| (s.clone(), okey.clone()));
        }
    }
}

/// Assembles the network from an existing multi-start run.
pub fn lon_from_search<T: Scalar>(
    equation: &str,
    run: &MultiStart<T>,
    hood: &Neighbourhood,
    d: &Dataset<T>,
    scaled: bool,
    opts: &LonOptions,
) -> Lon<T> {
    let mut asm = Assembly {
        optima: BTreeMap::new(),
        basin_of: HashMap::new(),
    };
    for r in &run.results {
        asm.absorb(&r.trajectory);
    }

    let mut recorded: Vec<(&CanonicalKey, &Expr, &CanonicalKey)> =
        asm.basin_of.iter().map(|(k, (s, o))| (k, s, o)).collect();
    recorded.sort_by(|a, b| a.0.cmp(b.0));

    let per_solution: Vec<(Vec<CanonicalKey>, Vec<Expr>)> = recorded
        .par_iter()
        .map(|(_, s, own)| {
            let mut hits = Vec::new();
            let mut unknown = Vec::new();
            for n in hood.neighbours(s) {
                match asm.basin_of.get(n.key()) {
                    Some((_, other)) if other != *own => hits.push(other.clone()),
                    Some(_) => {}
                    None => unknown.push(n),
                }
            }
            (hits, unknown)
        })
        .collect();

    let mut key_edges: BTreeSet<(CanonicalKey, CanonicalKey)> = BTreeSet::new();
    let mut link = |a: &CanonicalKey, b: &CanonicalKey| {
        if a != b {
            let pair = if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
            key_edges.insert(pair);
        }
    };
    for ((_, _, own), (hits, _)) in recorded.iter().zip(&per_solution) {
        for other in hits {
            link(own, other);
        }
    }

    if opts.explore_unrecorded {
        let mut seen = HashSet::new();
        let mut jobs: Vec<(CanonicalKey, Expr)> = Vec::new();
        for ((_, _, own), (_, unknown)) in recorded.iter().zip(&per_solution) {
            for n in unknown {
                if seen.insert((n.key().clone(), (*own).clone())) {
                    jobs.push(((*own).clone(), n.clone()));
                }
            }
        }
        let climbs: Vec<_> = jobs
            .par_iter()
            .map(|(_, n)| greedy_search(n, d, hood, scaled).trajectory)
            .collect();
        for ((own, _), trajectory) in jobs.iter().zip(&climbs) {
            let reached = trajectory.last().expect("trajectory holds its start").0.key().clone();
            link(own, &reached);
        }
        for trajectory in &climbs {
            asm.absorb(trajectory);
        }
    }

    let index: HashMap<&CanonicalKey, usize> = asm.optima.keys().enumerate().map(|(i, k)| (k, i)).collect();
    let mut basin_size = vec![0usize; asm.optima.len()];
    for (_, okey) in asm.basin_of.values() {
        basin_size[index[okey]] += 1;
    }
    let edges = key_edges.iter().map(|(a, b)| (index[a], index[b])).collect();
    let nodes = asm
        .optima
        .iter()
        .zip(basin_size)
        .map(|((key, (expr, fitness)), basin_size)| LonNode {
            key: key.clone(),
            expr: expr.clone(),
            fitness: *fitness,
            basin_size,
            hit: fitness.is_hit(),
        })
        .collect();
    Lon {
        equation: equation.to_string(),
        config_digest: String::new(),
        nodes,
        edges,
    }
}

pub fn count_hits<T>(l: &Lon<T>) -> usize {
    l.nodes.iter().filter(|n| n.hit).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    GraphMl,
    /// `nodes.csv` plus `edges.csv`.
    Csv,
}

impl FromStr for ExportFormat {
    type Err = LonError;

    fn from_str(s: &str) -> Result<Self, LonError> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(ExportFormat::Dot),
            "graphml" => Ok(ExportFormat::GraphMl),
            "csv" => Ok(ExportFormat::Csv),
            other => Err(LonError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportFormat::Dot => "dot",
            ExportFormat::GraphMl => "graphml",
            ExportFormat::Csv => "csv",
        })
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl<T: Scalar> Lon<T> {
    pub fn graph(&self) -> Graph {
        Graph::from_edges(self.nodes.len(), self.edges.iter().copied())
    }

    pub fn count_hits(&self) -> usize {
        count_hits(self)
    }

    pub fn basin_total(&self) -> usize {
        self.nodes.iter().map(|n| n.basin_size).sum()
    }

    pub fn metrics(&self, cr_samples: usize, seed: u64) -> MetricsRow {
        MetricsRow::compute(&self.equation, &self.graph(), self.count_hits(), cr_samples, seed)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "graph \"{}\" {{", self.equation);
        if !self.config_digest.is_empty() {
            let _ = writeln!(out, "  config_digest=\"{}\";", self.config_digest);
        }
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(
                out,
                "  n{i} [label=\"{}\", mse=\"{:e}\", basin={}, hit={}];",
                n.expr.to_prefix(),
                n.fitness.mse,
                n.basin_size,
                n.hit
            );
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "  n{a} -- n{b};");
        }
        out.push_str("}\n");
        out
    }

    pub fn to_graphml(&self) -> String {
        let mut out = String::from(concat!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
            "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n",
            "  <key id=\"expr\" for=\"node\" attr.name=\"expr\" attr.type=\"string\"/>\n",
            "  <key id=\"mse\" for=\"node\" attr.name=\"mse\" attr.type=\"double\"/>\n",
            "  <key id=\"basin\" for=\"node\" attr.name=\"basin\" attr.type=\"int\"/>\n",
            "  <key id=\"hit\" for=\"node\" attr.name=\"hit\" attr.type=\"boolean\"/>\n",
        ));
        let _ = writeln!(out, "  <graph id=\"{}\" edgedefault=\"undirected\">", xml_escape(&self.equation));
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "    <node id=\"n{i}\">");
            let _ = writeln!(out, "      <data key=\"expr\">{}</data>", xml_escape(&n.expr.to_prefix()));
            let _ = writeln!(out, "      <data key=\"mse\">{:e}</data>", n.fitness.mse);
            let _ = writeln!(out, "      <data key=\"basin\">{}</data>", n.basin_size);
            let _ = writeln!(out, "      <data key=\"hit\">{}</data>", n.hit);
            out.push_str("    </node>\n");
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "    <edge source=\"n{a}\" target=\"n{b}\"/>");
        }
        out.push_str("  </graph>\n</graphml>\n");
        out
    }

    pub fn to_nodes_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record(["id", "key", "expr", "mse", "basin", "hit"]);
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = w.write_record([
                i.to_string(),
                n.key.to_string(),
                n.expr.to_prefix(),
                format!("{:e}", n.fitness.mse),
                n.basin_size.to_string(),
                n.hit.to_string(),
            ]);
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
    }

    pub fn to_edges_csv(&self) -> String {
        let mut out = String::from("source,target\n");
        for (a, b) in &self.edges {
            let _ = writeln!(out, "{a},{b}");
        }
        out
    }

    /// Rendered files as `(file name, contents)` pairs; names start with `stem`.
    pub fn export(&self, format: ExportFormat, stem: &str) -> Vec<(String, String)> {
        match format {
            ExportFormat::Dot => vec![(format!("{stem}.dot"), self.to_dot())],
            ExportFormat::GraphMl => vec![(format!("{stem}.graphml"), self.to_graphml())],
            ExportFormat::Csv => vec![
                (format!("{stem}.nodes.csv"), self.to_nodes_csv()),
                (format!("{stem}.edges.csv"), self.to_edges_csv()),
            ],
        }
    }
}

/// Rebuilds the graph and hit count from the two CSV exports.
pub fn read_csv_graph(nodes_csv: &str, edges_csv: &str) -> Result<(Graph, usize), LonError> {
    let malformed = |file, reason: String| LonError::Malformed { file, reason };
    let mut n = 0;
    let mut hits = 0;
    for rec in csv::Reader::from_reader(nodes_csv.as_bytes()).records() {
        let rec = rec?;
        let id: usize = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| malformed("nodes", format!("bad id in {rec:?}")))?;
        if id != n {
            return Err(malformed("nodes", format!("expected id {n}, got {id}")));
        }
        match rec.get(5) {
            Some("true") => hits += 1,
            Some("false") => {}
            _ => return Err(malformed("nodes", format!("bad hit flag in {rec:?}"))),
        }
        n += 1;
    }
    let mut g = Graph::new(n);
    for rec in csv::Reader::from_reader(edges_csv.as_bytes()).records() {
        let rec = rec?;
        let end = |i| rec.get(i).and_then(|s| s.parse::<usize>().ok()).filter(|&v| v < n);
        match (end(0), end(1)) {
            (Some(a), Some(b)) => g.add_edge(a, b),
            _ => return Err(malformed("edges", format!("bad edge {rec:?}"))),
        }
    }
    Ok((g, hits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, lookup};
    use crate::metrics::DEFAULT_CR_SAMPLES;
    use crate::neighbourhood::Operator;

    fn lon_for(id: &str, scaled: bool) -> Lon<f64> {
        let spec = lookup(id).unwrap();
        let d: Dataset<f64> = generate_synthetic(&spec, 100, 42).unwrap();
        build_lon(&spec, &d, &DagpConfig::default().scaled(scaled), &LonOptions::default()).unwrap()
    }

    #[test]
    fn trivial_equation_is_a_single_node() {
        let l = lon_for("I.12.5", true);
        assert_eq!(l.nodes.len(), 1);
        assert!(l.edges.is_empty());
        assert_eq!(l.count_hits(), 1);
        let dot = l.to_dot();
        assert_eq!(dot.matches("--").count(), 0);
        assert_eq!(dot.matches("[label=").count(), 1);
    }

    #[test]
    fn structure_invariants() {
        let spec = lookup("I.12.1").unwrap();
        let d: Dataset<f64> = generate_synthetic(&spec, 100, 42).unwrap();
        let cfg = DagpConfig::default();
        let hood = Neighbourhood::for_spec(&spec, cfg.neighbourhood.clone()).unwrap();
        let run = search_all_with(&spec, &d, &cfg, &hood).unwrap();
        let l = lon_from_search(&spec.id, &run, &hood, &d, false, &LonOptions::default());

        let keys: HashSet<_> = l.nodes.iter().map(|n| n.key.clone()).collect();
        assert_eq!(keys.len(), l.nodes.len());
        assert!(l.nodes.iter().all(|n| n.basin_size >= 1));
        assert!(l.basin_total() >= run.starts.len());
        assert!(l.edges.iter().all(|(a, b)| a < b));

        // start order does not matter
        let mut reversed = run.clone();
        reversed.results.reverse();
        let r = lon_from_search(&spec.id, &reversed, &hood, &d, false, &LonOptions::default());
        assert_eq!(r.to_dot(), l.to_dot());
    }

    #[test]
    fn edges_join_mutual_neighbours_across_basins() {
        let spec = lookup("I.24.6").unwrap();
        let d: Dataset<f64> = generate_synthetic(&spec, 100, 42).unwrap();
        let cfg = DagpConfig::default().scaled(true);
        let hood = Neighbourhood::for_spec(&spec, cfg.neighbourhood.clone()).unwrap();
        let run = search_all_with(&spec, &d, &cfg, &hood).unwrap();
        let l = lon_from_search(&spec.id, &run, &hood, &d, true, &LonOptions::default());
        // replay: collect trajectory members per optimum key
        let mut members: HashMap<CanonicalKey, Vec<Expr>> = HashMap::new();
        for r in &run.results {
            let o = r.optimum.key().clone();
            members.entry(o).or_default().extend(r.trajectory.iter().map(|(e, _)| e.clone()));
        }
        for &(a, b) in &l.edges {
            let (ka, kb) = (&l.nodes[a].key, &l.nodes[b].key);
            let bkeys: HashSet<_> = members[kb].iter().map(|e| e.key().clone()).collect();
            let akeys: HashSet<_> = members[ka].iter().map(|e| e.key().clone()).collect();
            let forward = members[ka].iter().any(|s| hood.neighbours(s).iter().any(|n| bkeys.contains(n.key())));
            let backward = members[kb].iter().any(|s| hood.neighbours(s).iter().any(|n| akeys.contains(n.key())));
            assert!(forward || backward);
        }
    }

    #[test]
    fn csv_round_trip_preserves_metrics() {
        let l = lon_for("I.24.6", true);
        let row = l.metrics(DEFAULT_CR_SAMPLES, 5);
        let (g, hits) = read_csv_graph(&l.to_nodes_csv(), &l.to_edges_csv()).unwrap();
        assert_eq!(MetricsRow::compute(&l.equation, &g, hits, DEFAULT_CR_SAMPLES, 5), row);
        assert_eq!(g.edge_count(), l.edges.len());
    }

    #[test]
    fn exports() {
        let l = lon_for("I.24.6", true);
        assert_eq!(l.to_dot().matches(" -- ").count(), l.edges.len());
        assert_eq!(l.to_graphml().matches("<edge ").count(), l.edges.len());
        assert_eq!(l.to_edges_csv().lines().count(), l.edges.len() + 1);
        assert_eq!(l.export(ExportFormat::Csv, "x").len(), 2);
        assert_eq!("GraphML".parse::<ExportFormat>().unwrap(), ExportFormat::GraphMl);
        assert!(matches!("png".parse::<ExportFormat>(), Err(LonError::UnknownFormat(_))));
        assert!(read_csv_graph("id,key,expr,mse,basin,hit\n0,k,e,1,1,maybe\n", "source,target\n").is_err());
        assert!(read_csv_graph("id,key,expr,mse,basin,hit\n0,k,e,1,1,true\n", "source,target\n0,3\n").is_err());
    }

    #[test]
    fn exploring_unrecorded_neighbours_only_adds() {
        // a small neighbourhood keeps the extra climbs cheap
        let spec = lookup("I.12.2").unwrap();
        let d: Dataset<f64> = generate_synthetic(&spec, 100, 42).unwrap();
        let mut cfg = DagpConfig::default().scaled(true);
        cfg.neighbourhood.operators = vec![Operator::Replace, Operator::MulInt];
        cfg.neighbourhood.exponent_range = crate::initializer::ExponentRange::symmetric(1);
        let plain = build_lon(&spec, &d, &cfg, &LonOptions::default()).unwrap();
        let wide = build_lon(&spec, &d, &cfg, &LonOptions { explore_unrecorded: true }).unwrap();
        assert!(wide.nodes.len() >= plain.nodes.len());
        let wide_keys: HashMap<_, _> = wide.nodes.iter().enumerate().map(|(i, n)| (n.key.clone(), i)).collect();
        for &(a, b) in &plain.edges {
            let (x, y) = (wide_keys[&plain.nodes[a].key], wide_keys[&plain.nodes[b].key]);
            assert!(wide.edges.contains(&(x.min(y), x.max(y))));
        }
    }
}
