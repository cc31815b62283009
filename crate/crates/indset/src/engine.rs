//! Replication engine: runs designs over many seeded replications and
//! aggregates bias and variance.
//!
//! Replication `r` draws everything from streams keyed by `(master_seed, r)`,
//! and results are gathered in replication order, so the output does not
//! depend on the number of worker threads.

use std::fmt::Write as _;

use rayon::prelude::*;

use indset_core::estimate::Estimand;
use indset_core::rng::derive_seed;
use indset_core::simulate::{self, ReplicationResult, ReplicationSeeds};
use indset_core::{DesignName, DesignSpec, Graph, GraphFamily, OutcomeModel};

use crate::error::{Error, Result};

const TAG_GRAPH: u64 = 0x67;
const TAG_REP: u64 = 0x72;

/// Where each replication's graph comes from.
#[derive(Debug, Clone)]
pub enum GraphSource {
    /// One graph for every replication; formulas conditioning on the graph apply.
    Fixed { label: String, graph: Graph },
    /// A fresh draw from `family` every `reps_per_graph` replications.
    Family {
        family: GraphFamily,
        reps_per_graph: usize,
    },
}

impl GraphSource {
    pub fn family(family: GraphFamily) -> Self {
        GraphSource::Family {
            family,
            reps_per_graph: 1,
        }
    }

    pub fn label(&self) -> String {
        match self {
            GraphSource::Fixed { label, .. } => label.clone(),
            GraphSource::Family { family, .. } => family.tag().to_string(),
        }
    }

    pub fn params(&self) -> String {
        match self {
            GraphSource::Fixed { graph, .. } => {
                format!("n={};edges={}", graph.n(), graph.edge_count())
            }
            GraphSource::Family { family, .. } => family.to_string(),
        }
    }
}

/// Bias and variance of one design over a batch of replications.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub graph: String,
    pub params: String,
    pub design: DesignName,
    pub estimand: Estimand,
    pub truth: f64,
    /// Mean absolute error `mean_r |tau_hat_r - truth|`.
    pub bias: f64,
    /// Signed `mean_r tau_hat_r - truth`.
    pub mean_error: f64,
    /// Sample variance (divisor `reps - 1`) of the estimates.
    pub variance: f64,
    pub reps: usize,
    pub failures: usize,
    pub mean_norm_delta: Option<f64>,
    pub mean_var_rho: f64,
    pub mean_predicted_variance: Option<f64>,
    pub mean_n_independent: Option<f64>,
    pub model: OutcomeModel,
    pub master_seed: u64,
    /// Successful estimates in replication order.
    pub estimates: Vec<f64>,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

impl SimulationReport {
    fn aggregate(
        source: &GraphSource,
        spec: &DesignSpec,
        model: &OutcomeModel,
        master_seed: u64,
        results: Vec<std::result::Result<ReplicationResult, indset_core::Error>>,
    ) -> Result<Self> {
        let truth = simulate::true_effects(model).for_estimand(spec.estimand);
        let reps = results.len();
        let mut ok = Vec::with_capacity(reps);
        for r in results {
            match r {
                Ok(v) => ok.push(v),
                Err(e) if e.is_degenerate() => {
                    log::debug!("{} replication failed: {e}", spec.name.label())
                }
                Err(e) => return Err(e.into()),
            }
        }
        let estimates: Vec<f64> = ok.iter().map(|r| r.estimate).collect();
        let mean = mean_of(estimates.iter().copied()).unwrap_or(f64::NAN);
        let variance = indset_core::stats::sample_variance(&estimates);
        let bias = mean_of(estimates.iter().map(|e| (e - truth).abs())).unwrap_or(f64::NAN);
        Ok(SimulationReport {
            graph: source.label(),
            params: source.params(),
            design: spec.name,
            estimand: spec.estimand,
            truth,
            bias,
            mean_error: mean - truth,
            variance,
            reps,
            failures: reps - ok.len(),
            mean_norm_delta: mean_of(ok.iter().filter_map(|r| r.norm_delta)),
            mean_var_rho: mean_of(ok.iter().map(|r| r.var_rho)).unwrap_or(f64::NAN),
            mean_predicted_variance: mean_of(ok.iter().filter_map(|r| r.predicted_variance)),
            mean_n_independent: mean_of(
                ok.iter().filter_map(|r| r.n_independent.map(|n| n as f64)),
            ),
            model: *model,
            master_seed,
            estimates,
        })
    }
}

/// Runs every design in `designs` on the same sequence of replications
/// (shared graphs, partitions and unit effects) and reports each design.
pub fn run_cell(
    source: &GraphSource,
    designs: &[DesignSpec],
    model: &OutcomeModel,
    reps: usize,
    master_seed: u64,
) -> Result<Vec<SimulationReport>> {
    if reps < 2 {
        return Err(Error::Param(format!("reps must be at least 2, got {reps}")));
    }
    model.validate()?;
    for d in designs {
        d.validate()?;
    }
    if let GraphSource::Family {
        reps_per_graph: 0, ..
    } = source
    {
        return Err(Error::Param("reps_per_graph must be at least 1".into()));
    }

    let per_rep: Vec<Vec<std::result::Result<ReplicationResult, indset_core::Error>>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let generated;
            let graph = match source {
                GraphSource::Fixed { graph, .. } => graph,
                GraphSource::Family {
                    family,
                    reps_per_graph,
                } => {
                    let gseed =
                        derive_seed(master_seed, &[TAG_GRAPH, (rep / reps_per_graph) as u64]);
                    generated = family.generate(gseed)?;
                    &generated
                }
            };
            let root = derive_seed(master_seed, &[TAG_REP, rep as u64]);
            Ok(designs
                .iter()
                .map(|spec| {
                    simulate::run_design(
                        graph,
                        spec,
                        model,
                        ReplicationSeeds::from_root(root, spec.name),
                    )
                })
                .collect())
        })
        .collect::<std::result::Result<_, indset_core::Error>>()?;

    designs
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            let results = per_rep.iter().map(|row| row[k].clone()).collect();
            SimulationReport::aggregate(source, spec, model, master_seed, results)
        })
        .collect()
}

/// Single-design convenience wrapper over [`run_cell`].
pub fn run_replications(
    source: &GraphSource,
    design: &DesignSpec,
    model: &OutcomeModel,
    reps: usize,
    master_seed: u64,
) -> Result<SimulationReport> {
    Ok(run_cell(
        source,
        std::slice::from_ref(design),
        model,
        reps,
        master_seed,
    )?
    .remove(0))
}

/// Runs `f` on a pool with `threads` workers (0 = rayon's default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Param(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub const REPORT_COLUMNS: &str =
    "graph,params,design,estimand,bias,variance,reps,failures,mean_norm_delta,mean_var_rho,mean_error,mean_predicted_variance";

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.6}")
}

impl SimulationReport {
    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.graph,
            self.params,
            self.design.label(),
            self.estimand.name(),
            fmt_f64(self.bias),
            fmt_f64(self.variance),
            self.reps,
            self.failures,
            opt(self.mean_norm_delta),
            fmt_f64(self.mean_var_rho),
            fmt_f64(self.mean_error),
            opt(self.mean_predicted_variance),
        )
        .expect("writing to a String");
        s
    }
}
