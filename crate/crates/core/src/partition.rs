//! Independent/auxiliary partition, the interference matrix and exposures.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::rng;

/// Which vertex the greedy extraction picks next.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Selection {
    /// Uniformly random among the remaining vertices.
    #[default]
    Uniform,
    /// A remaining vertex of minimum remaining degree, ties broken uniformly.
    MinDegree,
}

/// Split of the vertex set into an independent set and its auxiliary complement.
///
/// Both lists are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    independent: Vec<usize>,
    auxiliary: Vec<usize>,
}

impl Partition {
    /// Builds a partition from an explicit independent set and checks it against `g`.
    pub fn from_independent(g: &Graph, independent: &[usize]) -> Result<Self> {
        let mut in_set = vec![false; g.n()];
        for &v in independent {
            if v >= g.n() {
                return Err(invalid!("vertex {v} out of range"));
            }
            if in_set[v] {
                return Err(invalid!("vertex {v} listed twice"));
            }
            in_set[v] = true;
        }
        let part = Self::from_membership(&in_set);
        part.check(g)?;
        Ok(part)
    }

    fn from_membership(in_set: &[bool]) -> Self {
        let (independent, auxiliary) = (0..in_set.len()).partition(|&v| in_set[v]);
        Partition {
            independent,
            auxiliary,
        }
    }

    pub fn independent(&self) -> &[usize] {
        &self.independent
    }

    pub fn auxiliary(&self) -> &[usize] {
        &self.auxiliary
    }

    pub fn n_independent(&self) -> usize {
        self.independent.len()
    }

    pub fn n_auxiliary(&self) -> usize {
        self.auxiliary.len()
    }

    /// Checks coverage, disjointness, independence and maximality against `g`.
    pub fn check(&self, g: &Graph) -> Result<()> {
        let n = g.n();
        let mut role = vec![0u8; n];
        for (&v, tag) in self
            .independent
            .iter()
            .map(|v| (v, 1u8))
            .chain(self.auxiliary.iter().map(|v| (v, 2u8)))
        {
            if v >= n || role[v] != 0 {
                return Err(invalid!("vertex {v} out of range or assigned twice"));
            }
            role[v] = tag;
        }
        if let Some(v) = role.iter().position(|&r| r == 0) {
            return Err(invalid!("vertex {v} is in neither set"));
        }
        for (u, v) in g.edges() {
            if role[u] == 1 && role[v] == 1 {
                return Err(invalid!("independent vertices {u} and {v} are adjacent"));
            }
        }
        for &a in &self.auxiliary {
            if !g.neighbors(a).iter().any(|&v| role[v] == 1) {
                return Err(invalid!("auxiliary vertex {a} has no independent neighbor"));
            }
        }
        Ok(())
    }
}

/// Greedy maximal independent set: repeatedly pick a remaining vertex, add it
/// to the independent set and delete it together with its neighbors.
pub fn greedy_independent_set(g: &Graph, seed: u64) -> Partition {
    greedy_independent_set_with(g, seed, Selection::Uniform)
}

pub fn greedy_independent_set_with(g: &Graph, seed: u64, selection: Selection) -> Partition {
    let n = g.n();
    let mut rng = rng::stream(seed, &[]);
    let mut removed = vec![false; n];
    let mut in_set = vec![false; n];
    match selection {
        Selection::Uniform => {
            // Taking vertices in the order of a uniform permutation, skipping deleted
            // ones, is the same as drawing uniformly from the remainder each round.
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            for v in order {
                if removed[v] {
                    continue;
                }
                in_set[v] = true;
                removed[v] = true;
                for &u in g.neighbors(v) {
                    removed[u] = true;
                }
            }
        }
        Selection::MinDegree => {
            let mut degree: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
            let mut remaining = n;
            let mut ties = Vec::new();
            while remaining > 0 {
                let min = (0..n)
                    .filter(|&v| !removed[v])
                    .map(|v| degree[v])
                    .min()
                    .unwrap_or(0);
                ties.clear();
                ties.extend((0..n).filter(|&v| !removed[v] && degree[v] == min));
                let v = ties[rng.random_range(0..ties.len())];
                in_set[v] = true;
                let mut dropped = vec![v];
                dropped.extend(g.neighbors(v).iter().copied().filter(|&u| !removed[u]));
                for &u in &dropped {
                    removed[u] = true;
                    remaining -= 1;
                }
                for &u in &dropped {
                    for &w in g.neighbors(u) {
                        if !removed[w] {
                            degree[w] -= 1;
                        }
                    }
                }
            }
        }
    }
    Partition::from_membership(&in_set)
}

/// Lower bound `(ln s / s) n` on the greedy independent-set size for an
/// Erdős–Rényi graph with expected average degree `s`.
pub fn greedy_size_bound(n: usize, s: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid!("n must be at least 1"));
    }
    if s.is_nan() || s <= 1.0 {
        return Err(invalid!("expected degree s = {s} must exceed 1"));
    }
    Ok(libm::log(s) / s * n as f64)
}

/// Sparse `n_I x n_A` interference matrix with entries `1 / d_i` on every
/// edge between independent row `i` and auxiliary column `j`.
///
/// Rows follow `Partition::independent`, columns `Partition::auxiliary`.
/// Both row and column incidence lists are stored so that a single
/// column flip touches only the affected rows.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceMatrix {
    degrees: Vec<usize>,
    row_cols: Vec<Vec<usize>>,
    col_rows: Vec<Vec<usize>>,
    row_ids: Vec<usize>,
    col_ids: Vec<usize>,
}

pub fn interference_matrix(g: &Graph, part: &Partition) -> InterferenceMatrix {
    let mut col_of = vec![usize::MAX; g.n()];
    for (c, &v) in part.auxiliary().iter().enumerate() {
        col_of[v] = c;
    }
    let mut col_rows = vec![Vec::new(); part.n_auxiliary()];
    let mut row_cols = Vec::with_capacity(part.n_independent());
    let mut degrees = Vec::with_capacity(part.n_independent());
    for (r, &v) in part.independent().iter().enumerate() {
        let cols: Vec<usize> = g.neighbors(v).iter().map(|&u| col_of[u]).collect();
        debug_assert!(cols.iter().all(|&c| c != usize::MAX));
        for &c in &cols {
            col_rows[c].push(r);
        }
        degrees.push(g.degree(v));
        row_cols.push(cols);
    }
    InterferenceMatrix {
        degrees,
        row_cols,
        col_rows,
        row_ids: part.independent().to_vec(),
        col_ids: part.auxiliary().to_vec(),
    }
}

impl InterferenceMatrix {
    /// Builds a matrix directly from row incidence lists, for tests and tools
    /// that do not start from a graph. Row degrees equal the list lengths.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let mut col_rows = vec![Vec::new(); n_cols];
        for (r, cols) in rows.iter().enumerate() {
            let mut sorted = cols.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != cols.len() {
                return Err(invalid!("row {r} repeats a column"));
            }
            for &c in cols {
                if c >= n_cols {
                    return Err(invalid!("row {r} references column {c} >= {n_cols}"));
                }
                col_rows[c].push(r);
            }
        }
        Ok(InterferenceMatrix {
            degrees: rows.iter().map(Vec::len).collect(),
            row_ids: (0..rows.len()).collect(),
            col_ids: (0..n_cols).collect(),
            row_cols: rows,
            col_rows,
        })
    }

    pub fn rows(&self) -> usize {
        self.row_cols.len()
    }

    pub fn cols(&self) -> usize {
        self.col_rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.row_cols.iter().map(Vec::len).sum()
    }

    /// Degree `d_i` of the unit behind row `i`.
    pub fn degree(&self, row: usize) -> usize {
        self.degrees[row]
    }

    /// Rows with `d_i = 0`; their exposure is pinned to 0 and carries no information.
    pub fn is_isolated(&self, row: usize) -> bool {
        self.degrees[row] == 0
    }

    pub fn row_columns(&self, row: usize) -> &[usize] {
        &self.row_cols[row]
    }

    pub fn column_rows(&self, col: usize) -> &[usize] {
        &self.col_rows[col]
    }

    /// Vertex id of row `i`.
    pub fn row_vertex(&self, row: usize) -> usize {
        self.row_ids[row]
    }

    /// Vertex id of column `j`.
    pub fn col_vertex(&self, col: usize) -> usize {
        self.col_ids[col]
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        if self.row_cols[row].contains(&col) {
            1.0 / self.degrees[row] as f64
        } else {
            0.0
        }
    }

    /// Sum of row `i`, accumulated as an integer count and divided once.
    pub fn row_sum(&self, row: usize) -> f64 {
        match self.degrees[row] {
            0 => 0.0,
            d => self.row_cols[row].len() as f64 / d as f64,
        }
    }

    /// Number of treated columns adjacent to each row.
    pub fn treated_counts(&self, z_a: &[bool]) -> Result<Vec<usize>> {
        if z_a.len() != self.cols() {
            return Err(Error::Dimension {
                expected: self.cols(),
                found: z_a.len(),
            });
        }
        Ok(self
            .row_cols
            .iter()
            .map(|cols| cols.iter().filter(|&&c| z_a[c]).count())
            .collect())
    }

    /// Exposure of row `i` given its treated-neighbor count.
    #[inline]
    pub fn exposure_from_count(&self, row: usize, count: usize) -> f64 {
        match self.degrees[row] {
            0 => 0.0,
            d => count as f64 / d as f64,
        }
    }
}

/// `rho_I = Gamma z_A`: the treated share of each independent unit's neighbors.
pub fn exposure(gamma: &InterferenceMatrix, z_a: &[bool]) -> Result<Vec<f64>> {
    let counts = gamma.treated_counts(z_a)?;
    Ok(counts
        .iter()
        .enumerate()
        .map(|(r, &c)| gamma.exposure_from_count(r, c))
        .collect())
}

/// Exposure of every vertex of `g` under a full assignment `z`; isolated vertices get 0.
pub fn full_exposure(g: &Graph, z: &[bool]) -> Result<Vec<f64>> {
    if z.len() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            found: z.len(),
        });
    }
    Ok((0..g.n())
        .map(|v| match g.degree(v) {
            0 => 0.0,
            d => g.neighbors(v).iter().filter(|&&u| z[u]).count() as f64 / d as f64,
        })
        .collect())
}
