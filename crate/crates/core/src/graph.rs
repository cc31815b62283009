//! Simple undirected graphs and the random-graph families used in the benchmarks.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid, Result};
use crate::rng;

/// Simple undirected graph on vertices `0..n`, stored as sorted adjacency lists.
///
/// Immutable once built; the constructors reject self-loops and collapse
/// duplicate edges, so every neighbor list is strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    /// Graph on `n` vertices with no edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            adjacency: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    /// Complete graph on `n` vertices.
    pub fn complete(n: usize) -> Self {
        let adjacency = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).collect())
            .collect();
        Graph {
            adjacency,
            edge_count: n * n.saturating_sub(1) / 2,
        }
    }

    /// Builds a graph from an edge list. Duplicate edges (in either
    /// orientation) are merged; self-loops and out-of-range ids are errors.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(invalid!("edge ({u}, {v}) references a vertex >= n = {n}"));
            }
            if u == v {
                return Err(invalid!("self-loop at vertex {u}"));
            }
            sets[u].insert(v);
            sets[v].insert(u);
        }
        Ok(Self::from_sets(sets))
    }

    fn from_sets(sets: Vec<BTreeSet<usize>>) -> Self {
        let adjacency: Vec<Vec<usize>> =
            sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let edge_count = adjacency.iter().map(Vec::len).sum::<usize>() / 2;
        Graph {
            adjacency,
            edge_count,
        }
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn mean_degree(&self) -> f64 {
        if self.n() == 0 {
            0.0
        } else {
            2.0 * self.edge_count as f64 / self.n() as f64
        }
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| nb.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }

    /// Verifies the structural invariants: sorted, loop-free, duplicate-free,
    /// symmetric adjacency and a consistent edge count.
    pub fn check_invariants(&self) -> Result<()> {
        let mut degree_sum = 0;
        for (u, nb) in self.adjacency.iter().enumerate() {
            degree_sum += nb.len();
            if nb.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid!("neighbors of {u} not strictly increasing"));
            }
            for &v in nb {
                if v == u {
                    return Err(invalid!("self-loop at {u}"));
                }
                if v >= self.n() || !self.has_edge(v, u) {
                    return Err(invalid!("edge ({u}, {v}) is not symmetric"));
                }
            }
        }
        if degree_sum != 2 * self.edge_count {
            return Err(invalid!(
                "edge count {} disagrees with degree sum {degree_sum}",
                self.edge_count
            ));
        }
        Ok(())
    }
}

/// Erdős–Rényi `G(n, p)`: every unordered pair is an edge independently with probability `p`.
pub fn gen_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(invalid!("n must be at least 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid!("edge probability {p} outside [0, 1]"));
    }
    let mut rng = rng::stream(seed, &[]);
    let mut adjacency = vec![Vec::new(); n];
    let mut edge_count = 0;
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random_bool(p) {
                adjacency[u].push(v);
                adjacency[v].push(u);
                edge_count += 1;
            }
        }
    }
    // rows receive ids in increasing order from both loops, so they are already sorted
    Ok(Graph {
        adjacency,
        edge_count,
    })
}

/// Barabási–Albert preferential attachment.
///
/// Starts from a complete graph on `m + 1` vertices; every later vertex attaches
/// to `m` distinct existing vertices drawn with probability proportional to
/// degree, by sampling uniformly from the list of edge endpoints.
pub fn gen_barabasi_albert(n: usize, m: usize, seed: u64) -> Result<Graph> {
    if m == 0 {
        return Err(invalid!("m must be at least 1"));
    }
    if m >= n {
        return Err(invalid!("m = {m} must be smaller than n = {n}"));
    }
    let mut rng = rng::stream(seed, &[]);
    let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * n * m);
    for u in 0..=m {
        for v in (u + 1)..=m {
            sets[u].insert(v);
            sets[v].insert(u);
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    let mut targets = Vec::with_capacity(m);
    for v in (m + 1)..n {
        targets.clear();
        while targets.len() < m {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            sets[v].insert(t);
            sets[t].insert(v);
            endpoints.push(v);
            endpoints.push(t);
        }
    }
    Ok(Graph::from_sets(sets))
}

/// Watts–Strogatz small world: ring lattice where each vertex links to its
/// `k / 2` nearest neighbors on either side, then every lattice edge `(u, u + j)`
/// is rewired with probability `p` to `(u, w)` for a uniformly chosen `w` that
/// keeps the graph simple. Rewiring never changes the edge count.
pub fn gen_small_world(n: usize, k: usize, p: f64, seed: u64) -> Result<Graph> {
    if k < 2 || k % 2 == 1 {
        return Err(invalid!("base degree k = {k} must be even and at least 2"));
    }
    if k >= n {
        return Err(invalid!("base degree k = {k} must be smaller than n = {n}"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid!("rewiring probability {p} outside [0, 1]"));
    }
    let mut rng = rng::stream(seed, &[]);
    let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            sets[u].insert(v);
            sets[v].insert(u);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if !rng.random_bool(p) || !sets[u].contains(&v) {
                continue;
            }
            if sets[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !sets[u].contains(&w) {
                    break w;
                }
            };
            sets[u].remove(&v);
            sets[v].remove(&u);
            sets[u].insert(w);
            sets[w].insert(u);
        }
    }
    Ok(Graph::from_sets(sets))
}

/// Parameterized description of a random-graph family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphFamily {
    ErdosRenyi { n: usize, p: f64 },
    BarabasiAlbert { n: usize, m: usize },
    SmallWorld { n: usize, k: usize, p: f64 },
}

impl GraphFamily {
    pub fn generate(&self, seed: u64) -> Result<Graph> {
        match *self {
            GraphFamily::ErdosRenyi { n, p } => gen_erdos_renyi(n, p, seed),
            GraphFamily::BarabasiAlbert { n, m } => gen_barabasi_albert(n, m, seed),
            GraphFamily::SmallWorld { n, k, p } => gen_small_world(n, k, p, seed),
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            GraphFamily::ErdosRenyi { n, .. }
            | GraphFamily::BarabasiAlbert { n, .. }
            | GraphFamily::SmallWorld { n, .. } => n,
        }
    }

    /// Short family tag: `ER`, `BA` or `SW`.
    pub fn tag(&self) -> &'static str {
        match self {
            GraphFamily::ErdosRenyi { .. } => "ER",
            GraphFamily::BarabasiAlbert { .. } => "BA",
            GraphFamily::SmallWorld { .. } => "SW",
        }
    }
}

impl core::fmt::Display for GraphFamily {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match *self {
            GraphFamily::ErdosRenyi { n, p } => write!(f, "n={n};p={p}"),
            GraphFamily::BarabasiAlbert { n, m } => write!(f, "n={n};m={m}"),
            GraphFamily::SmallWorld { n, k, p } => write!(f, "n={n};k={k};p={p}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_extremes() {
        let g = gen_erdos_renyi(5, 0.0, 3).unwrap();
        assert_eq!(g.edge_count(), 0);
        let g = gen_erdos_renyi(5, 1.0, 3).unwrap();
        assert_eq!(g.edge_count(), 10);
        assert_eq!(g, Graph::complete(5));
        assert!(gen_erdos_renyi(5, 1.5, 3).is_err());
        assert!(gen_erdos_renyi(5, -0.1, 3).is_err());
    }

    #[test]
    fn ba_small_cases() {
        let g = gen_barabasi_albert(2, 1, 9).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert!(gen_barabasi_albert(3, 3, 0).is_err());
        assert!(gen_barabasi_albert(3, 0, 0).is_err());
        let g = gen_barabasi_albert(100, 1, 4).unwrap();
        assert_eq!(g.edge_count(), 99);
        assert!(g.is_connected());
        let g = gen_barabasi_albert(50, 3, 4).unwrap();
        // seed clique contributes 6, each of the other 46 vertices adds 3
        assert_eq!(g.edge_count(), 6 + 46 * 3);
        g.check_invariants().unwrap();
    }

    #[test]
    fn small_world_lattice() {
        let g = gen_small_world(8, 2, 0.0, 1).unwrap();
        assert!((0..8).all(|v| g.degree(v) == 2));
        assert!(g.is_connected());
        assert_eq!(g.edge_count(), 8);
        assert_eq!(gen_small_world(50, 4, 0.0, 1).unwrap().edge_count(), 100);
        let g = gen_small_world(100, 4, 0.05, 17).unwrap();
        assert_eq!(g.edge_count(), 200);
        assert_eq!(g.mean_degree(), 4.0);
        g.check_invariants().unwrap();
        assert!(gen_small_world(10, 3, 0.1, 1).is_err());
        assert!(gen_small_world(4, 4, 0.1, 1).is_err());
    }

    #[test]
    fn from_edges_validates() {
        assert!(Graph::from_edges(3, [(0, 0)]).is_err());
        assert!(Graph::from_edges(3, [(0, 3)]).is_err());
        let g = Graph::from_edges(3, [(0, 1), (1, 0), (2, 1)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        g.check_invariants().unwrap();
    }
}
