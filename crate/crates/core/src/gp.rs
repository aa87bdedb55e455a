//! Standard, dimension-blind symbolic regression GP used as a baseline.
//!
//! Steady state: each step draws three distinct individuals, drops the worst,
//! crosses the other two into one offspring, mutates it with some probability
//! and puts it in the freed slot. Trees are stored in prefix order.
//! Depth counts levels, so a lone terminal has depth 1.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::fitness::{score_outputs, FitnessValue};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GpError {
    #[error("malformed GP tree `{0}`")]
    Parse(String),
    #[error("invalid GP configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GpNode {
    Add,
    Sub,
    Mul,
    Div,
    Sin,
    Cos,
    Var(u16),
}

impl GpNode {
    pub const FUNCTIONS: [GpNode; 6] = [GpNode::Add, GpNode::Sub, GpNode::Mul, GpNode::Div, GpNode::Sin, GpNode::Cos];

    pub fn arity(self) -> usize {
        match self {
            GpNode::Add | GpNode::Sub | GpNode::Mul | GpNode::Div => 2,
            GpNode::Sin | GpNode::Cos => 1,
            GpNode::Var(_) => 0,
        }
    }

    fn symbol(self) -> String {
        match self {
            GpNode::Add => "+".into(),
            GpNode::Sub => "-".into(),
            GpNode::Mul => "*".into(),
            GpNode::Div => "/".into(),
            GpNode::Sin => "sin".into(),
            GpNode::Cos => "cos".into(),
            GpNode::Var(i) => format!("x{i}"),
        }
    }
}

/// Expression tree in prefix order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GpTree {
    nodes: Vec<GpNode>,
}

impl GpTree {
    pub fn from_nodes(nodes: Vec<GpNode>) -> Result<Self, GpError> {
        let mut need = 1usize;
        for (i, n) in nodes.iter().enumerate() {
            if need == 0 {
                return Err(GpError::Parse(format!("trailing nodes from index {i}")));
            }
            need = need - 1 + n.arity();
        }
        if need != 0 || nodes.is_empty() {
            return Err(GpError::Parse(format!("{need} missing operands")));
        }
        Ok(GpTree { nodes })
    }

    /// Parses `(+ x0 (sin x1))`-style text.
    pub fn parse(text: &str) -> Result<Self, GpError> {
        let spaced = text.replace(['(', ')'], " ");
        let nodes = spaced
            .split_whitespace()
            .map(|tok| match tok {
                "+" => Ok(GpNode::Add),
                "-" => Ok(GpNode::Sub),
                "*" => Ok(GpNode::Mul),
                "/" => Ok(GpNode::Div),
                "sin" => Ok(GpNode::Sin),
                "cos" => Ok(GpNode::Cos),
                v => v
                    .strip_prefix('x')
                    .and_then(|i| i.parse().ok())
                    .map(GpNode::Var)
                    .ok_or_else(|| GpError::Parse(text.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        GpTree::from_nodes(nodes)
    }

    pub fn nodes(&self) -> &[GpNode] {
        &self.nodes
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// One past the last node of the subtree rooted at `i`.
    pub fn subtree_end(&self, i: usize) -> usize {
        let mut need = 1usize;
        let mut j = i;
        while need > 0 {
            need = need - 1 + self.nodes[j].arity();
            j += 1;
        }
        j
    }

    pub fn subtree(&self, i: usize) -> GpTree {
        GpTree {
            nodes: self.nodes[i..self.subtree_end(i)].to_vec(),
        }
    }

    fn children(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2);
        let mut c = i + 1;
        for _ in 0..self.nodes[i].arity() {
            out.push(c);
            c = self.subtree_end(c);
        }
        out
    }

    /// Level of every node, the root being level 1.
    pub fn levels(&self) -> Vec<usize> {
        let mut levels = vec![0; self.nodes.len()];
        let mut stack: Vec<(usize, usize)> = Vec::new(); // (level, open slots)
        for (i, n) in self.nodes.iter().enumerate() {
            let level = stack.last().map_or(1, |&(l, _)| l + 1);
            levels[i] = level;
            if let Some(top) = stack.last_mut() {
                top.1 -= 1;
            }
            while stack.last().is_some_and(|&(_, open)| open == 0) {
                stack.pop();
            }
            if n.arity() > 0 {
                stack.push((level, n.arity()));
            }
        }
        levels
    }

    pub fn depth(&self) -> usize {
        self.levels().into_iter().max().unwrap_or(0)
    }

    /// Tree with the subtree at `i` swapped for `replacement`.
    pub fn replace(&self, i: usize, replacement: &GpTree) -> GpTree {
        let end = self.subtree_end(i);
        let mut nodes = Vec::with_capacity(self.nodes.len() - (end - i) + replacement.size());
        nodes.extend_from_slice(&self.nodes[..i]);
        nodes.extend_from_slice(&replacement.nodes);
        nodes.extend_from_slice(&self.nodes[end..]);
        GpTree { nodes }
    }

    /// Column-wise evaluation; `None` as soon as any intermediate is non-finite.
    pub fn evaluate_columns<T: Scalar>(&self, columns: &[Vec<T>], rows: usize) -> Option<Vec<T>> {
        let (out, end) = self.eval_at(0, columns, rows)?;
        debug_assert_eq!(end, self.nodes.len());
        Some(out)
    }

    fn eval_at<T: Scalar>(&self, i: usize, columns: &[Vec<T>], rows: usize) -> Option<(Vec<T>, usize)> {
        let node = self.nodes[i];
        let (out, end) = match node {
            GpNode::Var(v) => (columns.get(v as usize)?[..rows].to_vec(), i + 1),
            GpNode::Sin | GpNode::Cos => {
                let (mut a, end) = self.eval_at(i + 1, columns, rows)?;
                let f = if node == GpNode::Sin { T::sin } else { T::cos };
                a.iter_mut().for_each(|x| *x = f(*x));
                (a, end)
            }
            _ => {
                let (mut a, mid) = self.eval_at(i + 1, columns, rows)?;
                let (b, end) = self.eval_at(mid, columns, rows)?;
                let f: fn(T, T) -> T = match node {
                    GpNode::Add => |x, y| x + y,
                    GpNode::Sub => |x, y| x - y,
                    GpNode::Mul => |x, y| x * y,
                    _ => |x, y| x / y,
                };
                a.iter_mut().zip(&b).for_each(|(x, y)| *x = f(*x, *y));
                (a, end)
            }
        };
        out.iter().all(|x| x.is_finite()).then_some((out, end))
    }

    pub fn fitness<T: Scalar>(&self, d: &Dataset<T>, scaled: bool) -> FitnessValue<T> {
        let out = self.evaluate_columns(d.columns(), d.len());
        score_outputs(out.as_deref(), d.targets(), scaled)
    }
}

impl fmt::Display for GpTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &GpTree, i: usize, f: &mut fmt::Formatter<'_>) -> Result<usize, fmt::Error> {
            let n = t.nodes[i];
            if n.arity() == 0 {
                write!(f, "{}", n.symbol())?;
                return Ok(i + 1);
            }
            write!(f, "({}", n.symbol())?;
            let mut c = i + 1;
            for _ in 0..n.arity() {
                f.write_str(" ")?;
                c = go(t, c, f)?;
            }
            f.write_str(")")?;
            Ok(c)
        }
        go(self, 0, f).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Crossover {
    Subtree,
    OnePoint,
    SizeFair,
    Uniform,
    ContextPreserving,
}

impl Crossover {
    pub const ALL: [Crossover; 5] = [
        Crossover::Subtree,
        Crossover::OnePoint,
        Crossover::SizeFair,
        Crossover::Uniform,
        Crossover::ContextPreserving,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    Subtree,
    Hoist,
    NodeReplace,
    Permutation,
    Shrink,
}

impl Mutation {
    pub const ALL: [Mutation; 5] = [
        Mutation::Subtree,
        Mutation::Hoist,
        Mutation::NodeReplace,
        Mutation::Permutation,
        Mutation::Shrink,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpConfig {
    pub population: usize,
    pub functions: Vec<GpNode>,
    pub mutation_rate: f64,
    pub max_depth: usize,
    /// Smallest depth used by ramped half-and-half.
    pub init_min_depth: usize,
    pub crossovers: Vec<Crossover>,
    pub mutations: Vec<Mutation>,
    /// Fitness evaluations, initial population included.
    pub budget: u64,
    pub runs: usize,
    pub tournament: usize,
    pub scaled: bool,
    /// Evaluations between checks of the stop condition; 0 means once per
    /// population size, i.e. per generation. A hit is reported at the first
    /// check at or after it.
    pub termination_check: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            population: 500,
            functions: GpNode::FUNCTIONS.to_vec(),
            mutation_rate: 0.5,
            max_depth: 6,
            init_min_depth: 2,
            crossovers: Crossover::ALL.to_vec(),
            mutations: Mutation::ALL.to_vec(),
            budget: 100_000,
            runs: 50,
            tournament: 3,
            scaled: false,
            termination_check: 0,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<(), GpError> {
        let fail = |m: &str| Err(GpError::Config(m.to_string()));
        if self.population < self.tournament || self.tournament < 2 {
            return fail("need 2 <= tournament <= population");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return fail("mutation rate outside [0, 1]");
        }
        if self.max_depth < 1 || self.init_min_depth < 1 || self.init_min_depth > self.max_depth {
            return fail("need 1 <= init_min_depth <= max_depth");
        }
        if self.crossovers.is_empty() || self.mutations.is_empty() {
            return fail("empty operator set");
        }
        if self.functions.iter().any(|f| f.arity() == 0) {
            return fail("function set lists a terminal");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GpRunOutcome<T> {
    pub seed: u64,
    pub success: bool,
    /// Evaluation index of the first hit, or everything spent when unsuccessful.
    pub evaluations: u64,
    pub best_mse: T,
    pub best_expr: String,
}

/// Random primitives and trees over a fixed variable count.
struct Primitives<'a> {
    functions: &'a [GpNode],
    vars: u16,
}

impl Primitives<'_> {
    fn terminal(&self, rng: &mut impl Rng) -> GpNode {
        GpNode::Var(rng.gen_range(0..self.vars))
    }

    /// `full` fills every branch to `depth`; otherwise leaves may appear early.
    fn tree(&self, depth: usize, full: bool, rng: &mut impl Rng) -> GpTree {
        let mut nodes = Vec::new();
        self.grow_into(depth, full, rng, &mut nodes);
        GpTree { nodes }
    }

    fn grow_into(&self, depth: usize, full: bool, rng: &mut impl Rng, out: &mut Vec<GpNode>) {
        let nf = self.functions.len();
        let pick_function = depth > 1 && nf > 0 && (full || rng.gen_range(0..nf + self.vars as usize) < nf);
        if !pick_function {
            out.push(self.terminal(rng));
            return;
        }
        let f = self.functions[rng.gen_range(0..nf)];
        out.push(f);
        for _ in 0..f.arity() {
            self.grow_into(depth - 1, full, rng, out);
        }
    }
}

/// Pairs of positions visited together from both roots. With `same_shape`,
/// descent stops where arities differ (the one-point common region);
/// otherwise it continues into every child index both nodes have.
fn aligned_positions(a: &GpTree, b: &GpTree, same_shape: bool) -> Vec<(usize, usize)> {
    fn visit(a: &GpTree, b: &GpTree, i: usize, j: usize, same_shape: bool, out: &mut Vec<(usize, usize)>) {
        out.push((i, j));
        if same_shape && a.nodes[i].arity() != b.nodes[j].arity() {
            return;
        }
        for (ci, cj) in a.children(i).into_iter().zip(b.children(j)) {
            visit(a, b, ci, cj, same_shape, out);
        }
    }
    let mut out = Vec::new();
    visit(a, b, 0, 0, same_shape, &mut out);
    out
}

/// Subtree crossover: the subtree at `i` in `a` is replaced by the subtree at `j` in `b`.
pub fn subtree_crossover_at(a: &GpTree, b: &GpTree, i: usize, j: usize) -> GpTree {
    a.replace(i, &b.subtree(j))
}

/// One-point crossover: both parents are walked from the root while node
/// arities agree; a point of this common region is picked and the subtree
/// found there in `b` replaces the one in `a`.
pub fn one_point_crossover_at(a: &GpTree, b: &GpTree, k: usize) -> GpTree {
    let (i, j) = aligned_positions(a, b, true)[k];
    subtree_crossover_at(a, b, i, j)
}

/// Size-fair crossover: after choosing the point `i` in `a`, only subtrees of
/// `b` no larger than `2 * size + 1` of the removed one may be inserted.
pub fn size_fair_candidates(a: &GpTree, b: &GpTree, i: usize) -> Vec<usize> {
    let limit = 2 * (a.subtree_end(i) - i) + 1;
    (0..b.size()).filter(|&j| b.subtree_end(j) - j <= limit).collect()
}

/// Uniform crossover: over the common region, each node of `a` whose arity
/// matches takes `b`'s label when `take` says so; at the region boundary the
/// whole subtree is taken instead. `take` is consulted once per aligned pair.
pub fn uniform_crossover_with(a: &GpTree, b: &GpTree, take: &mut dyn FnMut() -> bool) -> GpTree {
    fn go(a: &GpTree, b: &GpTree, i: usize, j: usize, take: &mut dyn FnMut() -> bool, out: &mut Vec<GpNode>) {
        let (na, nb) = (a.nodes[i], b.nodes[j]);
        let swap = take();
        if na.arity() != nb.arity() {
            let src = if swap { &b.nodes[j..b.subtree_end(j)] } else { &a.nodes[i..a.subtree_end(i)] };
            out.extend_from_slice(src);
            return;
        }
        out.push(if swap { nb } else { na });
        for (ci, cj) in a.children(i).into_iter().zip(b.children(j)) {
            go(a, b, ci, cj, take, out);
        }
    }
    let mut nodes = Vec::with_capacity(a.size());
    go(a, b, 0, 0, take, &mut nodes);
    GpTree { nodes }
}

/// Context-preserving crossover: the two points must sit at the same
/// coordinates (same path of child indices from the root) in both parents.
pub fn context_preserving_crossover_at(a: &GpTree, b: &GpTree, k: usize) -> GpTree {
    let (i, j) = aligned_positions(a, b, false)[k];
    subtree_crossover_at(a, b, i, j)
}

/// Hoist mutation: the whole tree is replaced by one of its subtrees.
pub fn hoist_at(t: &GpTree, i: usize) -> GpTree {
    t.subtree(i)
}

/// Node-replacement mutation: one node becomes another primitive of equal arity.
pub fn node_replace_at(t: &GpTree, i: usize, with: GpNode) -> GpTree {
    assert_eq!(t.nodes[i].arity(), with.arity(), "node replacement keeps arity");
    let mut nodes = t.nodes.clone();
    nodes[i] = with;
    GpTree { nodes }
}

/// Permutation mutation: the operands of a binary node are swapped.
pub fn permutation_at(t: &GpTree, i: usize) -> GpTree {
    let kids = t.children(i);
    if kids.len() != 2 {
        return t.clone();
    }
    let end = t.subtree_end(i);
    let mut nodes = t.nodes[..=i].to_vec();
    nodes.extend_from_slice(&t.nodes[kids[1]..end]);
    nodes.extend_from_slice(&t.nodes[kids[0]..kids[1]]);
    nodes.extend_from_slice(&t.nodes[end..]);
    GpTree { nodes }
}

/// Shrink mutation: a function node and its subtree collapse to a terminal.
pub fn shrink_at(t: &GpTree, i: usize, terminal: GpNode) -> GpTree {
    t.replace(i, &GpTree { nodes: vec![terminal] })
}

/// Subtree mutation: the subtree at `i` is replaced by a freshly grown one.
pub fn subtree_mutation_at(t: &GpTree, i: usize, fresh: &GpTree) -> GpTree {
    t.replace(i, fresh)
}

struct Engine<'a> {
    cfg: &'a GpConfig,
    prims: Primitives<'a>,
}

impl Engine<'_> {
    fn cross(&self, op: Crossover, a: &GpTree, b: &GpTree, rng: &mut impl Rng) -> GpTree {
        match op {
            Crossover::Subtree => {
                let (i, j) = (rng.gen_range(0..a.size()), rng.gen_range(0..b.size()));
                subtree_crossover_at(a, b, i, j)
            }
            Crossover::OnePoint => {
                let n = aligned_positions(a, b, true).len();
                one_point_crossover_at(a, b, rng.gen_range(0..n))
            }
            Crossover::SizeFair => {
                let i = rng.gen_range(0..a.size());
                let js = size_fair_candidates(a, b, i);
                let j = *js.choose(rng).expect("terminals always qualify");
                subtree_crossover_at(a, b, i, j)
            }
            Crossover::Uniform => uniform_crossover_with(a, b, &mut || rng.gen_bool(0.5)),
            Crossover::ContextPreserving => {
                let n = aligned_positions(a, b, false).len();
                context_preserving_crossover_at(a, b, rng.gen_range(0..n))
            }
        }
    }

    fn mutate(&self, op: Mutation, t: &GpTree, rng: &mut impl Rng) -> GpTree {
        let functions: Vec<usize> = (0..t.size()).filter(|&i| t.nodes[i].arity() > 0).collect();
        match op {
            Mutation::Subtree => {
                let i = rng.gen_range(0..t.size());
                let room = self.cfg.max_depth + 1 - t.levels()[i];
                let fresh = self.prims.tree(rng.gen_range(1..=room.max(1)), false, rng);
                subtree_mutation_at(t, i, &fresh)
            }
            Mutation::Hoist => hoist_at(t, rng.gen_range(0..t.size())),
            Mutation::NodeReplace => {
                let i = rng.gen_range(0..t.size());
                let old = t.nodes[i];
                let options: Vec<GpNode> = if old.arity() == 0 {
                    (0..self.prims.vars).map(GpNode::Var).filter(|&v| v != old).collect()
                } else {
                    self.cfg.functions.iter().copied().filter(|f| f.arity() == old.arity() && *f != old).collect()
                };
                match options.choose(rng) {
                    Some(&with) => node_replace_at(t, i, with),
                    None => t.clone(),
                }
            }
            Mutation::Permutation => {
                let binary: Vec<usize> = functions.iter().copied().filter(|&i| t.nodes[i].arity() == 2).collect();
                match binary.choose(rng) {
                    Some(&i) => permutation_at(t, i),
                    None => t.clone(),
                }
            }
            Mutation::Shrink => match functions.choose(rng) {
                Some(&i) => shrink_at(t, i, self.prims.terminal(rng)),
                None => t.clone(),
            },
        }
    }

    /// Applies `op` (a closure drawing fresh randomness each call), retrying
    /// once on an over-depth result and falling back to `fallback`.
    fn within_depth(&self, fallback: &GpTree, mut op: impl FnMut() -> GpTree) -> GpTree {
        for _ in 0..2 {
            let t = op();
            if t.depth() <= self.cfg.max_depth {
                return t;
            }
        }
        fallback.clone()
    }

    fn initial_population(&self, rng: &mut impl Rng) -> Vec<GpTree> {
        let depths: Vec<usize> = (self.cfg.init_min_depth..=self.cfg.max_depth).collect();
        (0..self.cfg.population)
            .map(|k| {
                let depth = depths[k % depths.len()];
                let full = (k / depths.len()).is_multiple_of(2);
                self.prims.tree(depth, full, rng)
            })
            .collect()
    }
}

/// One seeded GP run.
pub fn run_gp<T: Scalar>(d: &Dataset<T>, cfg: &GpConfig, seed: u64) -> Result<GpRunOutcome<T>, GpError> {
    cfg.validate()?;
    if d.arity() == 0 {
        return Err(GpError::Config("data set has no input variables".into()));
    }
    let engine = Engine {
        cfg,
        prims: Primitives {
            functions: &cfg.functions,
            vars: d.arity() as u16,
        },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut population = engine.initial_population(&mut rng);
    let mut fitness: Vec<FitnessValue<T>> = Vec::with_capacity(population.len());
    let mut evaluations: u64 = 0;
    let mut hit_at: Option<u64> = None;
    for t in &population {
        let f = t.fitness(d, cfg.scaled);
        evaluations += 1;
        if hit_at.is_none() && f.is_hit() {
            hit_at = Some(evaluations);
        }
        fitness.push(f);
    }

    let interval = match cfg.termination_check {
        0 => cfg.population as u64,
        k => k,
    };
    let checkpoint = |h: u64| h.div_ceil(interval) * interval;
    while evaluations < cfg.budget && hit_at.is_none_or(|h| evaluations < checkpoint(h)) {
        let picked = rand::seq::index::sample(&mut rng, population.len(), cfg.tournament).into_vec();
        let worst = *picked
            .iter()
            .max_by(|&&x, &&y| fitness[x].mse.partial_cmp(&fitness[y].mse).unwrap_or(std::cmp::Ordering::Equal))
            .expect("tournament is non-empty");
        let parents: Vec<usize> = picked.iter().copied().filter(|&p| p != worst).take(2).collect();
        let (a, b) = (&population[parents[0]], &population[parents[1]]);

        let xo = *cfg.crossovers.choose(&mut rng).expect("validated");
        let mut child = engine.within_depth(a, || engine.cross(xo, a, b, &mut rng));
        if rng.gen_bool(cfg.mutation_rate) {
            let mu = *cfg.mutations.choose(&mut rng).expect("validated");
            let base = child.clone();
            child = engine.within_depth(&base, || engine.mutate(mu, &base, &mut rng));
        }
        let f = child.fitness(d, cfg.scaled);
        evaluations += 1;
        if hit_at.is_none() && f.is_hit() {
            hit_at = Some(evaluations);
        }
        population[worst] = child;
        fitness[worst] = f;
    }

    let best = (0..population.len())
        .min_by(|&x, &y| fitness[x].mse.partial_cmp(&fitness[y].mse).unwrap_or(std::cmp::Ordering::Equal))
        .expect("population is non-empty");
    let success = hit_at.is_some_and(|h| h <= cfg.budget);
    Ok(GpRunOutcome {
        seed,
        success,
        evaluations: match hit_at {
            Some(h) if success => checkpoint(h).min(evaluations).max(h),
            _ => evaluations,
        },
        best_mse: fitness[best].mse,
        best_expr: population[best].to_string(),
    })
}

/// Total evaluations over all runs divided by the number of successful runs.
pub fn estimate_evaluations<T>(outcomes: &[GpRunOutcome<T>]) -> Option<f64> {
    let successes = outcomes.iter().filter(|o| o.success).count();
    (successes > 0).then(|| outcomes.iter().map(|o| o.evaluations as f64).sum::<f64>() / successes as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, lookup};

    fn t(s: &str) -> GpTree {
        GpTree::parse(s).unwrap()
    }

    #[test]
    fn structure() {
        let a = t("(+ (* x0 x1) (sin x2))");
        assert_eq!(a.size(), 6);
        assert_eq!(a.levels(), vec![1, 2, 3, 3, 2, 3]);
        assert_eq!(a.depth(), 3);
        assert_eq!(a.subtree_end(1), 4);
        assert_eq!(a.subtree(4).to_string(), "(sin x2)");
        assert_eq!(t("x0").depth(), 1);
        assert!(GpTree::parse("(+ x0)").is_err());
        assert!(GpTree::parse("x0 x1").is_err());
        assert_eq!(a.to_string(), "(+ (* x0 x1) (sin x2))");
    }

    #[test]
    fn evaluation_and_guards() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 0.0]], vec![0.0, 0.0]).unwrap();
        assert_eq!(t("(- x0 (cos x1))").evaluate_columns(d.columns(), 2).unwrap()[0], 1.0 - 2f64.cos());
        assert!(t("(/ x0 x1)").evaluate_columns(d.columns(), 2).is_none());
        assert!(!t("(/ x0 x1)").fitness(&d, true).is_valid());
    }

    #[test]
    fn subtree_crossover() {
        let a = t("(+ x0 x1)");
        let b = t("(* (sin x2) x3)");
        assert_eq!(subtree_crossover_at(&a, &b, 2, 1).to_string(), "(+ x0 (sin x2))");
    }

    #[test]
    fn one_point_crossover() {
        let a = t("(+ (* x0 x1) x2)");
        let b = t("(- (sin x3) x4)");
        // common region: roots, then (* .., sin ..) whose arities differ, then x2/x4
        assert_eq!(aligned_positions(&a, &b, true), vec![(0, 0), (1, 1), (4, 3)]);
        assert_eq!(one_point_crossover_at(&a, &b, 1).to_string(), "(+ (sin x3) x2)");
        assert_eq!(one_point_crossover_at(&a, &b, 2).to_string(), "(+ (* x0 x1) x4)");
    }

    #[test]
    fn size_fair_crossover() {
        let a = t("(+ x0 x1)");
        let b = t("(* (+ x2 (sin x3)) x4)");
        // removing a leaf (size 1) admits inserted subtrees of size <= 3
        let js = size_fair_candidates(&a, &b, 1);
        assert_eq!(js, vec![2, 3, 4, 5]);
        assert!(js.iter().all(|&j| b.subtree(j).size() <= 3));
        assert_eq!(size_fair_candidates(&a, &b, 0).len(), b.size());
    }

    #[test]
    fn uniform_crossover() {
        let a = t("(+ (* x0 x1) x2)");
        let b = t("(- (sin x3) x4)");
        let mut always = || true;
        assert_eq!(uniform_crossover_with(&a, &b, &mut always).to_string(), "(- (sin x3) x4)");
        let mut never = || false;
        assert_eq!(uniform_crossover_with(&a, &b, &mut never), a);
        let mut flips = [true, false, false].into_iter().cycle();
        let mut alternate = move || flips.next().unwrap();
        assert_eq!(uniform_crossover_with(&a, &b, &mut alternate).to_string(), "(- (* x0 x1) x2)");
    }

    #[test]
    fn context_preserving_crossover() {
        let a = t("(+ (* x0 x1) x2)");
        let b = t("(- (sin x3) x4)");
        // coordinate (0,0) exists in both even though the arities differ
        let aligned = aligned_positions(&a, &b, false);
        assert_eq!(aligned, vec![(0, 0), (1, 1), (2, 2), (4, 3)]);
        assert_eq!(context_preserving_crossover_at(&a, &b, 2).to_string(), "(+ (* x3 x1) x2)");
    }

    #[test]
    fn subtree_mutation() {
        let a = t("(+ x0 x1)");
        assert_eq!(subtree_mutation_at(&a, 1, &t("(cos x1)")).to_string(), "(+ (cos x1) x1)");
    }

    #[test]
    fn hoist_mutation() {
        let a = t("(+ (* x0 x1) x2)");
        assert_eq!(hoist_at(&a, 1).to_string(), "(* x0 x1)");
    }

    #[test]
    fn node_replace_mutation() {
        let a = t("(+ (* x0 x1) x2)");
        assert_eq!(node_replace_at(&a, 1, GpNode::Div).to_string(), "(+ (/ x0 x1) x2)");
        assert_eq!(node_replace_at(&a, 4, GpNode::Var(0)).to_string(), "(+ (* x0 x1) x0)");
    }

    #[test]
    fn permutation_mutation() {
        let a = t("(- (* x0 x1) (sin x2))");
        assert_eq!(permutation_at(&a, 0).to_string(), "(- (sin x2) (* x0 x1))");
        assert_eq!(permutation_at(&a, 1).to_string(), "(- (* x1 x0) (sin x2))");
    }

    #[test]
    fn shrink_mutation() {
        let a = t("(- (* x0 x1) (sin x2))");
        assert_eq!(shrink_at(&a, 1, GpNode::Var(2)).to_string(), "(- x2 (sin x2))");
    }

    #[test]
    fn ramped_half_and_half_respects_depths() {
        let cfg = GpConfig::default();
        let engine = Engine {
            cfg: &cfg,
            prims: Primitives {
                functions: &cfg.functions,
                vars: 3,
            },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pop = engine.initial_population(&mut rng);
        assert_eq!(pop.len(), 500);
        assert!(pop.iter().all(|p| (1..=6).contains(&p.depth())));
        // full trees hit their target depth exactly
        assert_eq!(pop[0].depth(), 2);
        assert_eq!(pop[4].depth(), 6);
    }

    #[test]
    fn operators_keep_depth_limit() {
        let cfg = GpConfig::default();
        let engine = Engine {
            cfg: &cfg,
            prims: Primitives {
                functions: &cfg.functions,
                vars: 3,
            },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pop = engine.initial_population(&mut rng);
        for k in 0..2000 {
            let (a, b) = (&pop[k % 500], &pop[(k * 7 + 3) % 500]);
            let op = Crossover::ALL[k % 5];
            let child = engine.within_depth(a, || engine.cross(op, a, b, &mut rng));
            assert!(child.depth() <= 6);
            let mu = Mutation::ALL[k % 5];
            let m = engine.within_depth(&child, || engine.mutate(mu, &child, &mut rng));
            assert!(m.depth() <= 6);
            GpTree::from_nodes(m.nodes.clone()).unwrap();
        }
    }

    #[test]
    fn degenerate_budget_and_determinism() {
        let spec = lookup("I.12.1").unwrap();
        let d: Dataset<f64> = generate_synthetic(&spec, 100, 1).unwrap();
        let cfg = GpConfig {
            budget: 0,
            population: 50,
            ..Default::default()
        };
        let out = run_gp(&d, &cfg, 3).unwrap();
        assert!(!out.success);
        assert_eq!(out.evaluations, 50);

        let cfg = GpConfig {
            budget: 3000,
            population: 100,
            scaled: true,
            ..Default::default()
        };
        assert_eq!(run_gp(&d, &cfg, 11).unwrap(), run_gp(&d, &cfg, 11).unwrap());
    }

    #[test]
    fn easy_product_is_found() {
        let spec = lookup("I.12.5").unwrap();
        let d: Dataset<f64> = generate_synthetic(&spec, 100, 1).unwrap();
        let cfg = GpConfig {
            scaled: true,
            budget: 20_000,
            ..Default::default()
        };
        let out = run_gp(&d, &cfg, 5).unwrap();
        assert!(out.success, "{out:?}");
        assert!(out.best_mse < 1e-9);
    }

    #[test]
    fn hits_are_reported_at_the_next_check() {
        let spec = lookup("I.12.5").unwrap();
        let d: Dataset<f64> = generate_synthetic(&spec, 100, 1).unwrap();
        let every = GpConfig {
            scaled: true,
            termination_check: 1,
            ..Default::default()
        };
        let per_generation = GpConfig {
            termination_check: 0,
            ..every.clone()
        };
        for seed in 0..5 {
            let exact = run_gp(&d, &every, seed).unwrap();
            let coarse = run_gp(&d, &per_generation, seed).unwrap();
            assert!(exact.success && coarse.success);
            assert_eq!(coarse.evaluations % 500, 0);
            assert_eq!(coarse.evaluations, exact.evaluations.div_ceil(500) * 500);
        }
    }

    #[test]
    fn estimates() {
        let o = |success, evaluations| GpRunOutcome {
            seed: 0,
            success,
            evaluations,
            best_mse: 0.0,
            best_expr: String::new(),
        };
        assert_eq!(estimate_evaluations(&vec![o(true, 580); 50]), Some(580.0));
        let mut mixed = vec![o(false, 100_000); 49];
        mixed.push(o(true, 1000));
        assert_eq!(estimate_evaluations(&mixed), Some(4_901_000.0));
        assert_eq!(estimate_evaluations(&[o(false, 100_000)]), None);
        assert_eq!(estimate_evaluations::<f64>(&[]), None);
    }

    #[test]
    fn config_validation() {
        assert!(GpConfig::default().validate().is_ok());
        assert!(GpConfig { mutation_rate: 1.5, ..Default::default() }.validate().is_err());
        assert!(GpConfig { max_depth: 0, ..Default::default() }.validate().is_err());
        assert!(GpConfig { population: 2, ..Default::default() }.validate().is_err());
        assert!(GpConfig { functions: vec![GpNode::Var(0)], ..Default::default() }.validate().is_err());
    }
}
