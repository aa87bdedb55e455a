//! Graph metrics of a local optima network and the Erdős–Rényi clustering
//! baseline.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Default number of random graphs averaged for the clustering baseline.
pub const DEFAULT_CR_SAMPLES: usize = 100;

/// Simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<BTreeSet<usize>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            adj: vec![BTreeSet::new(); n],
        }
    }

    /// Self-loops and duplicate pairs are ignored.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Graph::new(n);
        for (a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj[a].insert(b);
            self.adj[b].insert(a);
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbours(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    /// Edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (a, ns) in self.adj.iter().enumerate() {
            out.extend(ns.range(a + 1..).map(|&b| (a, b)));
        }
        out
    }

    pub fn mean_degree(&self) -> f64 {
        if self.adj.is_empty() {
            0.0
        } else {
            2.0 * self.edge_count() as f64 / self.node_count() as f64
        }
    }

    /// BFS distances from `source`; `None` for unreachable vertices.
    fn distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.adj.len()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v].unwrap_or(0);
            for &w in &self.adj[v] {
                if dist[w].is_none() {
                    dist[w] = Some(dv + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

/// Local clustering of `v`: closed triangles over `deg (deg - 1) / 2`, 0 below degree 2.
pub fn local_clustering(g: &Graph, v: usize) -> f64 {
    let ns: Vec<usize> = g.neighbours(v).collect();
    let k = ns.len();
    if k < 2 {
        return 0.0;
    }
    let mut links = 0usize;
    for (i, &a) in ns.iter().enumerate() {
        for &b in &ns[i + 1..] {
            if g.has_edge(a, b) {
                links += 1;
            }
        }
    }
    links as f64 / (k * (k - 1) / 2) as f64
}

/// Mean local clustering over all vertices; 0 for the empty graph.
pub fn clustering(g: &Graph) -> f64 {
    let n = g.node_count();
    if n == 0 {
        return 0.0;
    }
    (0..n).map(|v| local_clustering(g, v)).sum::<f64>() / n as f64
}

/// Edge probability of a G(n, p) graph with the given mean degree.
pub fn edge_probability(n: usize, mean_degree: f64) -> f64 {
    if n < 2 {
        0.0
    } else {
        (mean_degree / (n - 1) as f64).clamp(0.0, 1.0)
    }
}

pub fn erdos_renyi(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
    let mut g = Graph::new(n);
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(a, b);
            }
        }
    }
    g
}

/// Mean clustering of each of `samples` G(n, p) draws.
pub fn random_clustering_samples(n: usize, mean_degree: f64, samples: usize, seed: u64) -> Vec<f64> {
    let p = edge_probability(n, mean_degree);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples).map(|_| clustering(&erdos_renyi(n, p, &mut rng))).collect()
}

/// Average clustering of random graphs with `n` vertices and the given mean degree.
pub fn random_clustering(n: usize, mean_degree: f64, samples: usize, seed: u64) -> f64 {
    if n < 2 || samples == 0 {
        return 0.0;
    }
    let s = random_clustering_samples(n, mean_degree, samples, seed);
    s.iter().sum::<f64>() / s.len() as f64
}

/// Mean distance over unordered pairs. `-1` when disconnected, `0` for fewer than two vertices.
pub fn avg_shortest_path(g: &Graph) -> f64 {
    let n = g.node_count();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0usize;
    for s in 0..n {
        for d in &g.distances(s)[s + 1..] {
            match d {
                Some(d) => total += d,
                None => return -1.0,
            }
        }
    }
    total as f64 / (n * (n - 1) / 2) as f64
}

/// Component labels in order of lowest member.
pub fn components(g: &Graph) -> Vec<usize> {
    let mut label = vec![usize::MAX; g.node_count()];
    let mut next = 0;
    for s in 0..g.node_count() {
        if label[s] != usize::MAX {
            continue;
        }
        for (v, d) in g.distances(s).iter().enumerate() {
            if d.is_some() {
                label[v] = next;
            }
        }
        next += 1;
    }
    label
}

/// `(π, S)`: connectivity flag and number of connected components.
pub fn connectivity_and_components(g: &Graph) -> (u8, usize) {
    let s = components(g).into_iter().max().map_or(0, |m| m + 1);
    (u8::from(s == 1), s)
}

/// One row of the graph-metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub equation: String,
    pub n_v: usize,
    pub n_e: usize,
    pub clustering: f64,
    pub random_clustering: f64,
    pub avg_path: f64,
    pub connected: u8,
    pub components: usize,
    pub n_hits: usize,
}

impl MetricsRow {
    pub const HEADER: [&'static str; 9] = ["equation", "n_v", "n_e", "C", "C_r", "l", "pi", "S", "n_hits"];

    pub fn compute(equation: &str, g: &Graph, n_hits: usize, cr_samples: usize, seed: u64) -> Self {
        let (connected, components) = connectivity_and_components(g);
        MetricsRow {
            equation: equation.to_string(),
            n_v: g.node_count(),
            n_e: g.edge_count(),
            clustering: clustering(g),
            random_clustering: random_clustering(g.node_count(), g.mean_degree(), cr_samples, seed),
            avg_path: avg_shortest_path(g),
            connected,
            components,
            n_hits,
        }
    }

    /// Fields in table order, reals to two decimals.
    pub fn csv_fields(&self) -> [String; 9] {
        [
            self.equation.clone(),
            self.n_v.to_string(),
            self.n_e.to_string(),
            format!("{:.2}", self.clustering),
            format!("{:.2}", self.random_clustering),
            format!("{:.2}", self.avg_path),
            self.connected.to_string(),
            self.components.to_string(),
            self.n_hits.to_string(),
        ]
    }

    /// Violated row invariants, if any.
    pub fn check(&self) -> Result<(), String> {
        let mut bad = Vec::new();
        if (self.connected == 1) != (self.components == 1) {
            bad.push("pi = 1 iff S = 1");
        }
        if (self.avg_path == -1.0) != (self.connected == 0 && self.n_v >= 2) {
            bad.push("l = -1 iff disconnected with n_v >= 2");
        }
        if !(0.0..=1.0).contains(&self.clustering) {
            bad.push("0 <= C <= 1");
        }
        if self.n_hits > self.n_v {
            bad.push("n_hits <= n_v");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(bad.join("; "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))))
    }

    #[test]
    fn small_named_graphs() {
        let k3 = complete(3);
        assert_eq!(clustering(&k3), 1.0);
        let path = Graph::from_edges(3, [(0, 1), (1, 2)]);
        assert_eq!(clustering(&path), 0.0);
        assert!((avg_shortest_path(&path) - 4.0 / 3.0).abs() < 1e-15);
        let k5 = complete(5);
        assert_eq!(k5.edge_count(), 10);
        assert_eq!(avg_shortest_path(&k5), 1.0);
        assert_eq!(connectivity_and_components(&k5), (1, 1));
        let isolated = Graph::new(4);
        assert_eq!(connectivity_and_components(&isolated), (0, 4));
        assert_eq!(avg_shortest_path(&Graph::new(2)), -1.0);
        assert_eq!(connectivity_and_components(&Graph::new(1)), (1, 1));
        assert_eq!(avg_shortest_path(&Graph::new(1)), 0.0);
    }

    #[test]
    fn duplicate_and_self_edges_are_dropped() {
        let g = Graph::from_edges(3, [(0, 1), (1, 0), (2, 2)]);
        assert_eq!(g.edges(), vec![(0, 1)]);
    }

    #[test]
    fn random_baseline_edge_cases() {
        assert_eq!(random_clustering(1, 0.0, 100, 1), 0.0);
        assert_eq!(random_clustering(5, 4.0, 3, 1), 1.0);
        assert_eq!(random_clustering(6, 0.0, 10, 1), 0.0);
        assert_eq!(random_clustering(20, 4.0, 50, 9), random_clustering(20, 4.0, 50, 9));
        assert_eq!(edge_probability(5, 100.0), 1.0);
    }

    #[test]
    fn rows() {
        let row = MetricsRow::compute("x", &Graph::new(1), 1, DEFAULT_CR_SAMPLES, 0);
        assert_eq!(
            (row.n_v, row.n_e, row.clustering, row.random_clustering, row.avg_path, row.connected, row.components),
            (1, 0, 0.0, 0.0, 0.0, 1, 1)
        );
        let row = MetricsRow::compute("K5", &complete(5), 5, DEFAULT_CR_SAMPLES, 0);
        assert_eq!(row.csv_fields().join(","), "K5,5,10,1.00,1.00,1.00,1,1,5");
        row.check().unwrap();
        let bad = MetricsRow { n_hits: 9, ..row };
        assert!(bad.check().is_err());
    }
}
