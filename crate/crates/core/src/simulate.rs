//! Potential-outcome model and the single-replication pipeline for every design.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::assign::{self, Assignment, OptimizerOptions, Scope};
use crate::error::{invalid, Error, Result};
use crate::estimate::{self, Estimand, Observations};
use crate::graph::Graph;
use crate::partition::{self, Partition, Selection};
use crate::rng::{self, StreamRng};
use crate::stats;

/// Additive per-unit shift applied on top of the baseline.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum UnitShift {
    #[default]
    None,
    /// `U_i ~ Unif(0, 1)`, drawn independently for each unit.
    Uniform,
}

/// `Y_i(z, rho) = alpha + U_i + beta z + gamma rho + eps_i`, `eps_i ~ N(0, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeModel {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Noise standard deviation.
    pub sigma: f64,
    pub unit_shift: UnitShift,
}

impl Default for OutcomeModel {
    fn default() -> Self {
        OutcomeModel {
            alpha: 1.0,
            beta: 20.0,
            gamma: 10.0,
            sigma: 0.5,
            unit_shift: UnitShift::None,
        }
    }
}

/// True effects under the linear model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Effects {
    pub direct: f64,
    pub spillover: f64,
    pub total: f64,
}

impl Effects {
    pub fn for_estimand(&self, estimand: Estimand) -> f64 {
        match estimand {
            Estimand::Direct { .. } => self.direct,
            Estimand::Spillover { .. } => self.spillover,
            Estimand::Total => self.total,
        }
    }
}

impl OutcomeModel {
    pub fn validate(&self) -> Result<()> {
        if self.sigma.is_nan() || self.sigma < 0.0 {
            return Err(invalid!("noise sd {} must be non-negative", self.sigma));
        }
        Ok(())
    }

    /// Lipschitz constant of the outcome in the exposure.
    pub fn lipschitz(&self) -> f64 {
        libm::fabs(self.gamma)
    }

    /// Standard deviation of everything that is not explained by `(z, rho)`:
    /// the noise plus the unit shift when present.
    pub fn residual_sd(&self) -> f64 {
        let shift_var = match self.unit_shift {
            UnitShift::None => 0.0,
            UnitShift::Uniform => 1.0 / 12.0,
        };
        libm::sqrt(self.sigma * self.sigma + shift_var)
    }

    /// Draws the treatment-free part `alpha + U_i + eps_i` for `n` units.
    /// Shifts are drawn first, then noise, from the same stream.
    pub fn draw_units(&self, n: usize, rng: &mut StreamRng) -> Result<PotentialOutcomes> {
        self.validate()?;
        let mut base = vec![self.alpha; n];
        if self.unit_shift == UnitShift::Uniform {
            for b in base.iter_mut() {
                *b += rng.random::<f64>();
            }
        }
        if self.sigma > 0.0 {
            let noise = Normal::new(0.0, self.sigma).map_err(|_| invalid!("bad noise sd"))?;
            for b in base.iter_mut() {
                *b += noise.sample(rng);
            }
        }
        Ok(PotentialOutcomes {
            base,
            beta: self.beta,
            gamma: self.gamma,
        })
    }
}

/// Full table of potential outcomes for a fixed draw of unit effects.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialOutcomes {
    pub base: Vec<f64>,
    beta: f64,
    gamma: f64,
}

impl PotentialOutcomes {
    pub fn outcome(&self, unit: usize, z: bool, rho: f64) -> f64 {
        self.base[unit] + if z { self.beta } else { 0.0 } + self.gamma * rho
    }

    pub fn observe(&self, z: &[bool], rho: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.base.len() || rho.len() != self.base.len() {
            return Err(Error::Dimension {
                expected: self.base.len(),
                found: z.len().min(rho.len()),
            });
        }
        Ok((0..z.len())
            .map(|i| self.outcome(i, z[i], rho[i]))
            .collect())
    }
}

/// Observed outcomes for aligned `(z, rho)` vectors, drawn from the stream keyed by `rep_seed`.
pub fn sample_outcomes(
    model: &OutcomeModel,
    z: &[bool],
    rho: &[f64],
    rep_seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = rng::stream(rep_seed, &[]);
    model.draw_units(z.len(), &mut rng)?.observe(z, rho)
}

pub fn true_effects(model: &OutcomeModel) -> Effects {
    Effects {
        direct: model.beta,
        spillover: model.gamma,
        total: model.beta + model.gamma,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DesignName {
    /// Independent-set design with optimized auxiliary assignments.
    IndependentSet,
    /// Independent-set estimation with completely randomized (unoptimized) assignments.
    CompletelyRandomized,
    /// Completely randomized design on the whole graph.
    Full,
    GraphCluster,
    EgoClusters,
}

impl DesignName {
    pub const ALL: [DesignName; 5] = [
        DesignName::CompletelyRandomized,
        DesignName::IndependentSet,
        DesignName::Full,
        DesignName::GraphCluster,
        DesignName::EgoClusters,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            DesignName::IndependentSet => "IS",
            DesignName::CompletelyRandomized => "CR",
            DesignName::Full => "Full",
            DesignName::GraphCluster => "GraphCluster",
            DesignName::EgoClusters => "EgoClusters",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        DesignName::ALL
            .into_iter()
            .find(|d| d.label().eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSpec {
    pub name: DesignName,
    pub estimand: Estimand,
    /// Used by the independent-set design; the seed is replaced per replication.
    pub optimizer: OptimizerOptions,
    pub selection: Selection,
}

impl DesignSpec {
    pub fn new(name: DesignName, estimand: Estimand) -> Self {
        DesignSpec {
            name,
            estimand,
            optimizer: OptimizerOptions::default(),
            selection: Selection::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Estimand::Direct { rho } = self.estimand {
            if !(0.0..=1.0).contains(&rho) {
                return Err(invalid!("rho_target {rho} outside [0, 1]"));
            }
            if self.name == DesignName::EgoClusters {
                return Err(invalid!(
                    "the ego-cluster design has no direct-effect estimator"
                ));
            }
        }
        self.optimizer.validate()
    }
}

/// Seeds for one replication. `partition` and `outcomes` are shared by all
/// designs evaluated on the same replication so that they see the same
/// independent set and the same unit effects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicationSeeds {
    pub partition: u64,
    pub outcomes: u64,
    pub design: u64,
}

impl ReplicationSeeds {
    pub fn from_root(root: u64, design: DesignName) -> Self {
        ReplicationSeeds {
            partition: rng::derive_seed(root, &[1]),
            outcomes: rng::derive_seed(root, &[2]),
            design: rng::derive_seed(root, &[3, design as u64]),
        }
    }
}

/// What one replication produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationResult {
    pub estimate: f64,
    pub predicted_variance: Option<f64>,
    pub norm_delta: Option<f64>,
    pub var_rho: f64,
    pub n_used: usize,
    pub n_independent: Option<usize>,
}

impl Error {
    /// Errors that mark a replication as failed rather than aborting the run.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::SingularDesign { .. }
                | Error::DegenerateDesign(_)
                | Error::Precondition(_)
                | Error::MissingCoefficient(_)
        )
    }
}

const TAG_AUX: u64 = 10;
const TAG_IND: u64 = 11;
const TAG_WITHHOLD: u64 = 12;
const TAG_OPT: u64 = 13;
const TAG_BASELINE: u64 = 14;

/// Complete randomization of `count` units; fewer than two units get fair coins.
fn randomize(scope: Scope, count: usize, seed: u64) -> Assignment {
    assign::assign_cr(scope, count, seed).unwrap_or_else(|_| {
        let mut r = rng::stream(seed, &[]);
        Assignment::new(scope, (0..count).map(|_| r.random_bool(0.5)).collect())
    })
}

/// Picks one unit to withhold when the count is odd so that both arms of a
/// completely randomized design have exactly half the units.
pub fn balanced_subset(count: usize, seed: u64) -> Vec<usize> {
    let mut keep: Vec<usize> = (0..count).collect();
    if count % 2 == 1 {
        let mut r = rng::stream(seed, &[]);
        keep.remove(r.random_range(0..count));
    }
    keep
}

/// Everything an independent-set style design decides before outcomes are seen.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependentSetDesign {
    pub partition: Partition,
    pub z_aux: Assignment,
    /// Treatment of every independent unit (withheld units are controls).
    pub z_ind: Assignment,
    pub rho: Vec<f64>,
    pub isolated: Vec<bool>,
    /// Row indices of the independent units that enter the estimator.
    pub used: Vec<usize>,
    pub objective: Option<f64>,
}

/// Builds the independent-set design (optimized when `optimize` is set,
/// completely randomized otherwise) for the given estimand.
pub fn plan_independent_set(
    g: &Graph,
    spec: &DesignSpec,
    partition_seed: u64,
    design_seed: u64,
    optimize: bool,
) -> Result<IndependentSetDesign> {
    spec.validate()?;
    let part = partition::greedy_independent_set_with(g, partition_seed, spec.selection);
    let gamma = partition::interference_matrix(g, &part);
    let n_i = part.n_independent();
    let n_a = part.n_auxiliary();
    let mut opts = spec.optimizer;
    opts.seed = rng::derive_seed(design_seed, &[TAG_OPT]);

    // unoptimized spillover/total designs randomize all n units at once
    let all = match (optimize, spec.estimand) {
        (false, Estimand::Spillover { .. } | Estimand::Total) => {
            randomize(Scope::All, g.n(), rng::derive_seed(design_seed, &[TAG_IND])).bits
        }
        _ => Vec::new(),
    };
    let (z_aux, objective) = if optimize {
        let result = match spec.estimand {
            Estimand::Direct { rho } => assign::optimize_direct(&gamma, rho, &opts)?,
            Estimand::Spillover { .. } | Estimand::Total => {
                assign::optimize_variance(&gamma, &opts)?
            }
        };
        (result.assignment, Some(result.objective))
    } else if all.is_empty() {
        (
            randomize(
                Scope::Auxiliary,
                n_a,
                rng::derive_seed(design_seed, &[TAG_AUX]),
            ),
            None,
        )
    } else {
        let bits = part.auxiliary().iter().map(|&v| all[v]).collect();
        (Assignment::new(Scope::Auxiliary, bits), None)
    };
    let rho = partition::exposure(&gamma, &z_aux.bits)?;
    let isolated: Vec<bool> = (0..n_i).map(|r| gamma.is_isolated(r)).collect();

    let mut used: Vec<usize> = (0..n_i).collect();
    let z_ind = match (spec.estimand, optimize) {
        (Estimand::Direct { .. }, _) => {
            used = balanced_subset(n_i, rng::derive_seed(design_seed, &[TAG_WITHHOLD]));
            let arms = randomize(
                Scope::Independent,
                used.len(),
                rng::derive_seed(design_seed, &[TAG_IND]),
            );
            let mut bits = vec![false; n_i];
            for (&row, &b) in used.iter().zip(&arms.bits) {
                bits[row] = b;
            }
            Assignment::new(Scope::Independent, bits)
        }
        (Estimand::Spillover { z }, true) => assign::assign_constant(Scope::Independent, n_i, z),
        (Estimand::Total, true) => assign::assign_threshold(&rho),
        (_, false) => Assignment::new(
            Scope::Independent,
            part.independent().iter().map(|&v| all[v]).collect(),
        ),
    };
    Ok(IndependentSetDesign {
        partition: part,
        z_aux,
        z_ind,
        rho,
        isolated,
        used,
        objective,
    })
}

impl IndependentSetDesign {
    /// Full-graph assignment combining both sets.
    pub fn full_assignment(&self, n: usize) -> Vec<bool> {
        let mut z = vec![false; n];
        for (&v, &b) in self.partition.independent().iter().zip(&self.z_ind.bits) {
            z[v] = b;
        }
        for (&v, &b) in self.partition.auxiliary().iter().zip(&self.z_aux.bits) {
            z[v] = b;
        }
        z
    }
}

/// Runs one design on `g` and returns its estimate of the design's estimand.
pub fn run_design(
    g: &Graph,
    spec: &DesignSpec,
    model: &OutcomeModel,
    seeds: ReplicationSeeds,
) -> Result<ReplicationResult> {
    spec.validate()?;
    let mut outcome_rng = rng::stream(seeds.outcomes, &[]);
    let units = model.draw_units(g.n(), &mut outcome_rng)?;
    let sigma = Some(model.residual_sd());
    let lipschitz = Some(model.lipschitz());

    match spec.name {
        DesignName::IndependentSet | DesignName::CompletelyRandomized => {
            let optimize = spec.name == DesignName::IndependentSet;
            let plan = plan_independent_set(g, spec, seeds.partition, seeds.design, optimize)?;
            let ids = plan.partition.independent();
            let y_all: Vec<f64> = ids
                .iter()
                .enumerate()
                .map(|(r, &v)| units.outcome(v, plan.z_ind.bits[r], plan.rho[r]))
                .collect();
            let pick = |rows: &[usize]| -> (Vec<bool>, Vec<f64>, Vec<f64>, Vec<bool>) {
                (
                    rows.iter().map(|&r| plan.z_ind.bits[r]).collect(),
                    rows.iter().map(|&r| plan.rho[r]).collect(),
                    rows.iter().map(|&r| y_all[r]).collect(),
                    rows.iter().map(|&r| plan.isolated[r]).collect(),
                )
            };
            let (z, rho, y, isolated) = pick(&plan.used);
            let obs = Observations {
                z: &z,
                rho: &rho,
                y: &y,
                isolated: &isolated,
            };
            let summary = estimate::summarize(spec.estimand, obs, sigma, lipschitz)?;
            Ok(ReplicationResult {
                estimate: summary.point,
                predicted_variance: summary.predicted_variance,
                norm_delta: summary.norm_delta,
                var_rho: summary.var_rho,
                n_used: summary.n_used,
                n_independent: Some(ids.len()),
            })
        }
        DesignName::Full | DesignName::GraphCluster | DesignName::EgoClusters => {
            let seed = rng::derive_seed(seeds.design, &[TAG_BASELINE]);
            let z = match spec.name {
                DesignName::Full => randomize(Scope::All, g.n(), seed),
                DesignName::GraphCluster => assign::baseline_graph_cluster(g, seed),
                _ => assign::baseline_ego_clusters(g, seed).1,
            };
            let rho = partition::full_exposure(g, &z.bits)?;
            let y = units.observe(&z.bits, &rho)?;
            baseline_estimate(g, spec.estimand, &z.bits, &rho, &y)
        }
    }
}

/// Estimators for designs randomized over the whole graph: difference in
/// means for the direct effect, least squares on `[1, z, rho]` over all
/// non-isolated units otherwise.
fn baseline_estimate(
    g: &Graph,
    estimand: Estimand,
    z: &[bool],
    rho: &[f64],
    y: &[f64],
) -> Result<ReplicationResult> {
    match estimand {
        Estimand::Direct { rho: target } => {
            let point = estimate::mean_difference(y, z)?;
            let norm_delta = estimate::l1_norm(&estimate::exposure_deviation(rho, target));
            Ok(ReplicationResult {
                estimate: point,
                predicted_variance: None,
                norm_delta: Some(norm_delta),
                var_rho: stats::variance(rho),
                n_used: y.len(),
                n_independent: None,
            })
        }
        Estimand::Spillover { .. } | Estimand::Total => {
            let keep: Vec<usize> = (0..g.n()).filter(|&v| g.degree(v) > 0).collect();
            let zk: Vec<bool> = keep.iter().map(|&v| z[v]).collect();
            let rk: Vec<f64> = keep.iter().map(|&v| rho[v]).collect();
            let yk: Vec<f64> = keep.iter().map(|&v| y[v]).collect();
            let fit = estimate::ols_fit(&zk, &rk, &yk)?;
            let point = match estimand {
                Estimand::Total => estimate::total_estimate(&fit)?,
                _ => estimate::spillover_estimate(&fit),
            };
            Ok(ReplicationResult {
                estimate: point,
                predicted_variance: None,
                norm_delta: None,
                var_rho: stats::variance(&rk),
                n_used: fit.n_used,
                n_independent: None,
            })
        }
    }
}
