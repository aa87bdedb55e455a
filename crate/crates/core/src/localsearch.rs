//! Deterministic best-improvement hill climbing over the dimensionally-aware
//! neighbourhood, run from every initial monomial.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, EquationSpec};
use crate::expr::Expr;
use crate::fitness::{evaluate_fitness, FitnessValue};
use crate::initializer::{enumerate_with_restart, ExponentRange, InitError};
use crate::neighbourhood::{ConfigError, Neighbourhood, NeighbourhoodConfig};
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error(transparent)]
    Init(#[from] InitError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Everything that defines one local-search landscape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DagpConfig {
    pub neighbourhood: NeighbourhoodConfig,
    pub init_range: ExponentRange,
    pub max_widenings: usize,
    pub scaled: bool,
}

impl Default for DagpConfig {
    fn default() -> Self {
        DagpConfig {
            neighbourhood: NeighbourhoodConfig::default(),
            init_range: ExponentRange::DEFAULT,
            max_widenings: 3,
            scaled: false,
        }
    }
}

impl DagpConfig {
    pub fn scaled(mut self, scaled: bool) -> Self {
        self.scaled = scaled;
        self
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult<T> {
    pub optimum: Expr,
    pub fitness: FitnessValue<T>,
    /// Accepted solutions from the start to the optimum, inclusive.
    pub trajectory: Vec<(Expr, FitnessValue<T>)>,
    /// Fitness evaluations consumed, the start's own included.
    pub evaluations: u64,
    pub hit: bool,
    /// Value of the evaluation counter when a hit was first computed.
    pub hit_evaluation: Option<u64>,
}

/// One line of the per-start trajectory log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord<T> {
    pub start: usize,
    pub step: usize,
    pub expr: String,
    pub mse: T,
    pub a: T,
    pub b: T,
}

impl<T: Scalar> SearchResult<T> {
    pub fn records(&self, start: usize) -> Vec<TrajectoryRecord<T>> {
        self.trajectory
            .iter()
            .enumerate()
            .map(|(step, (e, f))| TrajectoryRecord {
                start,
                step,
                expr: e.to_prefix(),
                mse: f.mse,
                a: f.a,
                b: f.b,
            })
            .collect()
    }
}

fn evaluate_all<T: Scalar>(candidates: &[Expr], d: &Dataset<T>, scaled: bool) -> Vec<FitnessValue<T>> {
    candidates.par_iter().map(|n| evaluate_fitness(n, d, scaled)).collect()
}

/// Index of the first candidate with the lowest error, if it strictly beats `incumbent`.
fn first_best<T: Scalar>(fits: &[FitnessValue<T>], incumbent: &FitnessValue<T>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, f) in fits.iter().enumerate() {
        let bar = best.map(|b| &fits[b]).unwrap_or(incumbent);
        if f.improves_on(bar) {
            best = Some(i);
        }
    }
    best
}

/// Climbs from `start` until no neighbour is strictly better.
pub fn greedy_search<T: Scalar>(start: &Expr, d: &Dataset<T>, hood: &Neighbourhood, scaled: bool) -> SearchResult<T> {
    let mut current = start.clone();
    let mut fitness = evaluate_fitness(&current, d, scaled);
    let mut evaluations: u64 = 1;
    let mut hit_evaluation = fitness.is_hit().then_some(1);
    let mut trajectory = vec![(current.clone(), fitness)];
    loop {
        let candidates = hood.neighbours(&current);
        let fits = evaluate_all(&candidates, d, scaled);
        if hit_evaluation.is_none() {
            hit_evaluation = fits.iter().position(|f| f.is_hit()).map(|i| evaluations + i as u64 + 1);
        }
        evaluations += fits.len() as u64;
        match first_best(&fits, &fitness) {
            Some(i) => {
                current = candidates[i].clone();
                fitness = fits[i];
                trajectory.push((current.clone(), fitness));
            }
            None => break,
        }
    }
    SearchResult {
        hit: fitness.is_hit(),
        optimum: current,
        fitness,
        trajectory,
        evaluations,
        hit_evaluation,
    }
}

/// True when no neighbour of `e` has strictly lower error than `fitness`.
pub fn is_local_optimum<T: Scalar>(e: &Expr, fitness: &FitnessValue<T>, d: &Dataset<T>, hood: &Neighbourhood, scaled: bool) -> bool {
    let fits = evaluate_all(&hood.neighbours(e), d, scaled);
    first_best(&fits, fitness).is_none()
}

/// Results of a full multi-start run.
#[derive(Debug, Clone)]
pub struct MultiStart<T> {
    pub starts: Vec<Expr>,
    pub init_range: ExponentRange,
    pub results: Vec<SearchResult<T>>,
}

impl<T: Scalar> MultiStart<T> {
    /// Evaluations over all starts in enumeration order.
    pub fn total_evaluations(&self) -> u64 {
        self.results.iter().map(|r| r.evaluations).sum()
    }

    /// Global counter value at the first hit, counting starts in enumeration order.
    pub fn evaluations_to_hit(&self) -> Option<u64> {
        let mut offset = 0;
        for r in &self.results {
            if let Some(h) = r.hit_evaluation {
                return Some(offset + h);
            }
            offset += r.evaluations;
        }
        None
    }

    pub fn any_hit(&self) -> bool {
        self.results.iter().any(|r| r.hit)
    }
}

/// One greedy search per initial monomial, in enumeration order.
pub fn search_all<T: Scalar>(spec: &EquationSpec, d: &Dataset<T>, cfg: &DagpConfig) -> Result<MultiStart<T>, SearchError> {
    let hood = Neighbourhood::for_spec(spec, cfg.neighbourhood.clone())?;
    search_all_with(spec, d, cfg, &hood)
}

pub fn search_all_with<T: Scalar>(
    spec: &EquationSpec,
    d: &Dataset<T>,
    cfg: &DagpConfig,
    hood: &Neighbourhood,
) -> Result<MultiStart<T>, SearchError> {
    let (starts, init_range) = enumerate_with_restart(spec, cfg.init_range, cfg.max_widenings)?;
    let results = starts
        .par_iter()
        .map(|s| greedy_search(s, d, hood, cfg.scaled))
        .collect();
    Ok(MultiStart {
        starts,
        init_range,
        results,
    })
}
