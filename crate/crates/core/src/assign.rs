//! Treatment assignments: auxiliary-set optimizers, independent-set rules and
//! the baseline designs used for comparison.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::partition::InterferenceMatrix;
use crate::rng::{self, StreamRng};

/// Largest auxiliary set the exhaustive search will accept.
pub const MAX_EXACT_THRESHOLD: usize = 24;

const IMPROVEMENT_EPS: f64 = 1e-12;

/// Which vertex list an assignment is indexed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Independent,
    Auxiliary,
    All,
}

/// Binary treatment vector over one vertex list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub scope: Scope,
    pub bits: Vec<bool>,
}

impl Assignment {
    pub fn new(scope: Scope, bits: Vec<bool>) -> Self {
        Assignment { scope, bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn treated(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Bits as 0.0 / 1.0.
    pub fn as_f64(&self) -> Vec<f64> {
        self.bits
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimizerOptions {
    pub restarts: usize,
    /// Flip limit per restart; `None` means `10 * n_A`.
    pub max_iters: Option<usize>,
    pub seed: u64,
    /// Auxiliary sets of at most this size are solved by exhaustive enumeration.
    pub exact_threshold: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            restarts: 20,
            max_iters: None,
            seed: 0,
            exact_threshold: 16,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(invalid!("restarts must be at least 1"));
        }
        if self.exact_threshold > MAX_EXACT_THRESHOLD {
            return Err(invalid!(
                "exact_threshold {} exceeds the enumeration limit {MAX_EXACT_THRESHOLD}",
                self.exact_threshold
            ));
        }
        Ok(())
    }

    fn iteration_limit(&self, n_aux: usize) -> usize {
        self.max_iters.unwrap_or(10 * n_aux)
    }
}

/// Result of an auxiliary-set optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimized {
    pub assignment: Assignment,
    /// Objective recomputed from scratch on `assignment`.
    pub objective: f64,
    /// True when the answer came from exhaustive enumeration.
    pub exact: bool,
    pub restarts: usize,
    pub flips: usize,
}

/// One steepest-descent/ascent run from a fixed start.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchRun {
    pub bits: Vec<bool>,
    /// Objective before the first flip and after each accepted flip.
    pub trace: Vec<f64>,
}

impl LocalSearchRun {
    pub fn objective(&self) -> f64 {
        *self
            .trace
            .last()
            .expect("trace holds the starting objective")
    }
}

/// The two auxiliary-set objectives.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Objective {
    /// Minimize `sum_i |rho_i - target|`.
    Direct { target: f64 },
    /// Maximize `sum_i (rho_i - mean rho)^2`.
    Variance,
}

/// `||Gamma z_A - target 1||_1`.
pub fn direct_objective(gamma: &InterferenceMatrix, z_a: &[bool], target: f64) -> Result<f64> {
    let rho = crate::partition::exposure(gamma, z_a)?;
    Ok(rho.iter().map(|&r| libm::fabs(r - target)).sum())
}

/// `z_A^T Gamma^T (I - 11^T / n_I) Gamma z_A`, i.e. `n_I` times the population
/// variance of the exposures.
pub fn variance_objective(gamma: &InterferenceMatrix, z_a: &[bool]) -> Result<f64> {
    let rho = crate::partition::exposure(gamma, z_a)?;
    Ok(crate::stats::centered_sum_of_squares(&rho))
}

/// Running state shared by local search and enumeration: treated-neighbor
/// counts per row plus the sufficient statistics of both objectives.
struct SearchState<'a> {
    gamma: &'a InterferenceMatrix,
    objective: Objective,
    bits: Vec<bool>,
    counts: Vec<usize>,
    sum: f64,
    sum_sq: f64,
    abs_dev: f64,
}

impl<'a> SearchState<'a> {
    fn new(gamma: &'a InterferenceMatrix, objective: Objective, bits: Vec<bool>) -> Self {
        let counts = gamma
            .treated_counts(&bits)
            .expect("length checked by caller");
        let mut state = SearchState {
            gamma,
            objective,
            bits,
            counts,
            sum: 0.0,
            sum_sq: 0.0,
            abs_dev: 0.0,
        };
        state.resync();
        state
    }

    fn rho(&self, row: usize) -> f64 {
        self.gamma.exposure_from_count(row, self.counts[row])
    }

    fn resync(&mut self) {
        let (mut s, mut s2, mut a) = (0.0, 0.0, 0.0);
        let target = match self.objective {
            Objective::Direct { target } => target,
            Objective::Variance => 0.0,
        };
        for r in 0..self.gamma.rows() {
            let x = self.rho(r);
            s += x;
            s2 += x * x;
            a += libm::fabs(x - target);
        }
        self.sum = s;
        self.sum_sq = s2;
        self.abs_dev = a;
    }

    fn value(&self) -> f64 {
        match self.objective {
            Objective::Direct { .. } => self.abs_dev,
            Objective::Variance => {
                let n = self.gamma.rows();
                if n == 0 {
                    0.0
                } else {
                    self.sum_sq - self.sum * self.sum / n as f64
                }
            }
        }
    }

    /// Change in objective if column `col` were flipped.
    fn delta(&self, col: usize) -> f64 {
        let step: isize = if self.bits[col] { -1 } else { 1 };
        match self.objective {
            Objective::Direct { target } => self
                .gamma
                .column_rows(col)
                .iter()
                .map(|&r| {
                    let before = self.rho(r);
                    let after = self
                        .gamma
                        .exposure_from_count(r, (self.counts[r] as isize + step) as usize);
                    libm::fabs(after - target) - libm::fabs(before - target)
                })
                .sum(),
            Objective::Variance => {
                let (mut d1, mut d2) = (0.0, 0.0);
                for &r in self.gamma.column_rows(col) {
                    let before = self.rho(r);
                    let after = self
                        .gamma
                        .exposure_from_count(r, (self.counts[r] as isize + step) as usize);
                    d1 += after - before;
                    d2 += after * after - before * before;
                }
                let n = self.gamma.rows() as f64;
                d2 - (2.0 * self.sum * d1 + d1 * d1) / n
            }
        }
    }

    fn flip(&mut self, col: usize) {
        let on = !self.bits[col];
        self.bits[col] = on;
        let target = match self.objective {
            Objective::Direct { target } => target,
            Objective::Variance => 0.0,
        };
        for &r in self.gamma.column_rows(col) {
            let before = self.rho(r);
            if on {
                self.counts[r] += 1;
            } else {
                self.counts[r] -= 1;
            }
            let after = self.rho(r);
            self.sum += after - before;
            self.sum_sq += after * after - before * before;
            self.abs_dev += libm::fabs(after - target) - libm::fabs(before - target);
        }
    }

    /// Signed so that larger is always better.
    fn gain(&self, col: usize) -> f64 {
        match self.objective {
            Objective::Direct { .. } => -self.delta(col),
            Objective::Variance => self.delta(col),
        }
    }

    fn better(&self, a: f64, b: f64) -> bool {
        match self.objective {
            Objective::Direct { .. } => a < b,
            Objective::Variance => a > b,
        }
    }

    fn recompute(&self) -> f64 {
        match self.objective {
            Objective::Direct { target } => {
                direct_objective(self.gamma, &self.bits, target).expect("aligned")
            }
            Objective::Variance => variance_objective(self.gamma, &self.bits).expect("aligned"),
        }
    }
}

fn check_start(gamma: &InterferenceMatrix, start: &[bool]) -> Result<()> {
    if start.len() != gamma.cols() {
        return Err(Error::Dimension {
            expected: gamma.cols(),
            found: start.len(),
        });
    }
    Ok(())
}

fn local_search(
    gamma: &InterferenceMatrix,
    objective: Objective,
    start: Vec<bool>,
    max_iters: usize,
) -> LocalSearchRun {
    let mut state = SearchState::new(gamma, objective, start);
    let mut trace = vec![state.recompute()];
    for _ in 0..max_iters {
        // steepest move; strict comparison keeps the lowest index on ties
        let mut best: Option<(usize, f64)> = None;
        for col in 0..gamma.cols() {
            let g = state.gain(col);
            if g > IMPROVEMENT_EPS && best.is_none_or(|(_, b)| g > b) {
                best = Some((col, g));
            }
        }
        let Some((col, _)) = best else { break };
        state.flip(col);
        trace.push(state.recompute());
    }
    LocalSearchRun {
        bits: state.bits,
        trace,
    }
}

/// Steepest single-bit-flip descent on `||Gamma z_A - target 1||_1` from `start`.
pub fn local_search_direct(
    gamma: &InterferenceMatrix,
    target: f64,
    start: Vec<bool>,
    max_iters: usize,
) -> Result<LocalSearchRun> {
    check_start(gamma, &start)?;
    Ok(local_search(
        gamma,
        Objective::Direct { target },
        start,
        max_iters,
    ))
}

/// Steepest single-bit-flip ascent on the exposure-variance objective from `start`.
pub fn local_search_variance(
    gamma: &InterferenceMatrix,
    start: Vec<bool>,
    max_iters: usize,
) -> Result<LocalSearchRun> {
    check_start(gamma, &start)?;
    Ok(local_search(gamma, Objective::Variance, start, max_iters))
}

/// Exhaustive search over all `2^n_A` assignments in Gray-code order.
fn enumerate(gamma: &InterferenceMatrix, objective: Objective) -> (Vec<bool>, usize) {
    let n_aux = gamma.cols();
    let mut state = SearchState::new(gamma, objective, vec![false; n_aux]);
    let mut best_bits = state.bits.clone();
    let mut best = state.value();
    let total: u64 = 1 << n_aux;
    for k in 1..total {
        state.flip(k.trailing_zeros() as usize);
        if k % 1024 == 0 {
            state.resync();
        }
        let v = state.value();
        if state.better(v, best) {
            best = v;
            best_bits.copy_from_slice(&state.bits);
        }
    }
    (best_bits, (total - 1) as usize)
}

fn optimize(
    gamma: &InterferenceMatrix,
    objective: Objective,
    opts: &OptimizerOptions,
) -> Result<Optimized> {
    opts.validate()?;
    let n_aux = gamma.cols();
    let finish = |bits: Vec<bool>, exact, restarts, flips| {
        let state = SearchState::new(gamma, objective, bits);
        let objective = state.recompute();
        Optimized {
            assignment: Assignment::new(Scope::Auxiliary, state.bits),
            objective,
            exact,
            restarts,
            flips,
        }
    };
    if n_aux <= opts.exact_threshold {
        let (bits, steps) = enumerate(gamma, objective);
        return Ok(finish(bits, true, 0, steps));
    }

    let mut starts: Vec<Vec<bool>> = vec![vec![false; n_aux], vec![true; n_aux]];
    if let Objective::Direct { target } = objective {
        starts.push(vec![target >= 0.5; n_aux]);
    }
    let limit = opts.iteration_limit(n_aux);
    let mut best: Option<LocalSearchRun> = None;
    let mut flips = 0;
    for restart in 0..opts.restarts {
        let start = match starts.get(restart) {
            Some(s) => s.clone(),
            None => {
                let mut r: StreamRng = rng::stream(opts.seed, &[restart as u64]);
                (0..n_aux).map(|_| r.random_bool(0.5)).collect()
            }
        };
        let run = local_search(gamma, objective, start, limit);
        flips += run.trace.len() - 1;
        let replace = match &best {
            None => true,
            Some(b) => match objective {
                Objective::Direct { .. } => run.objective() < b.objective(),
                Objective::Variance => run.objective() > b.objective(),
            },
        };
        if replace {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    Ok(finish(best.bits, false, opts.restarts, flips))
}

/// Auxiliary assignment making every independent unit's exposure as close to
/// `rho_target` as possible in L1.
pub fn optimize_direct(
    gamma: &InterferenceMatrix,
    rho_target: f64,
    opts: &OptimizerOptions,
) -> Result<Optimized> {
    if !(0.0..=1.0).contains(&rho_target) {
        return Err(invalid!("rho_target {rho_target} outside [0, 1]"));
    }
    optimize(gamma, Objective::Direct { target: rho_target }, opts)
}

/// Auxiliary assignment maximizing the spread of the independent units' exposures.
pub fn optimize_variance(gamma: &InterferenceMatrix, opts: &OptimizerOptions) -> Result<Optimized> {
    optimize(gamma, Objective::Variance, opts)
}

/// Completely randomized assignment with exactly `count / 2` (rounded down) treated units.
pub fn assign_cr(scope: Scope, count: usize, seed: u64) -> Result<Assignment> {
    if count < 2 {
        return Err(invalid!(
            "completely randomized design needs at least 2 units, got {count}"
        ));
    }
    let mut rng = rng::stream(seed, &[]);
    Ok(cr_bits(scope, count, &mut rng))
}

fn cr_bits(scope: Scope, count: usize, rng: &mut StreamRng) -> Assignment {
    let mut bits: Vec<bool> = (0..count).map(|i| i < count / 2).collect();
    bits.shuffle(rng);
    Assignment::new(scope, bits)
}

pub fn assign_constant(scope: Scope, count: usize, z: bool) -> Assignment {
    Assignment::new(scope, vec![z; count])
}

/// Treat exactly the independent units with exposure strictly above one half.
pub fn assign_threshold(rho: &[f64]) -> Assignment {
    Assignment::new(Scope::Independent, rho.iter().map(|&r| r > 0.5).collect())
}

/// Completely randomized design on the whole graph.
pub fn baseline_full_cr(g: &Graph, seed: u64) -> Result<Assignment> {
    assign_cr(Scope::All, g.n(), seed)
}

/// Clusters from seeded ball growing: take a uniformly random uncovered vertex
/// and claim it with its uncovered neighbors, until every vertex is covered.
/// Returns the cluster id of every vertex; ids follow creation order.
pub fn ball_clusters(g: &Graph, rng: &mut StreamRng) -> (Vec<usize>, usize) {
    let n = g.n();
    let mut cluster = vec![usize::MAX; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut next = 0;
    for v in order {
        if cluster[v] != usize::MAX {
            continue;
        }
        cluster[v] = next;
        for &u in g.neighbors(v) {
            if cluster[u] == usize::MAX {
                cluster[u] = next;
            }
        }
        next += 1;
    }
    (cluster, next)
}

/// Graph cluster randomization over ball-grown clusters; one fair coin per cluster.
pub fn baseline_graph_cluster(g: &Graph, seed: u64) -> Assignment {
    let mut rng = rng::stream(seed, &[]);
    let (cluster, count) = ball_clusters(g, &mut rng);
    let coins: Vec<bool> = (0..count).map(|_| rng.random_bool(0.5)).collect();
    Assignment::new(Scope::All, cluster.iter().map(|&c| coins[c]).collect())
}

/// Ego-cluster design: egos are chosen greedily (in seeded random order) so that
/// closed neighborhoods are pairwise disjoint; each ego cluster is treated or
/// controlled as a block and every unclaimed vertex gets its own fair coin.
pub fn baseline_ego_clusters(g: &Graph, seed: u64) -> (Vec<usize>, Assignment) {
    let n = g.n();
    let mut rng = rng::stream(seed, &[]);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut claimed = vec![false; n];
    let mut egos = Vec::new();
    for v in order {
        if claimed[v] || g.neighbors(v).iter().any(|&u| claimed[u]) {
            continue;
        }
        claimed[v] = true;
        for &u in g.neighbors(v) {
            claimed[u] = true;
        }
        egos.push(v);
    }
    let mut bits = vec![false; n];
    let mut set = vec![false; n];
    for &e in &egos {
        let coin = rng.random_bool(0.5);
        bits[e] = coin;
        set[e] = true;
        for &u in g.neighbors(e) {
            bits[u] = coin;
            set[u] = true;
        }
    }
    for v in 0..n {
        if !set[v] {
            bits[v] = rng.random_bool(0.5);
        }
    }
    (egos, Assignment::new(Scope::All, bits))
}
