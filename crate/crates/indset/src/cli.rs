//! Command-line surface: `generate`, `design`, `estimate`, `simulate` and `benchmark`.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use indset_core::estimate::{self, Observations};
use indset_core::simulate::{self, ReplicationSeeds};
use indset_core::{
    DesignName, DesignSpec, Estimand, Graph, GraphFamily, OptimizerOptions, OutcomeModel,
    Selection, UnitShift,
};

use crate::benchmark;
use crate::config::{parse_unit_shift, BenchmarkConfig};
use crate::engine::{self, GraphSource, REPORT_COLUMNS};
use crate::error::{Error, Result};
use crate::io::{self as formats, DesignRow, Header};

#[derive(Debug, Parser)]
#[command(
    name = "indset",
    version,
    about = "Independent-set experimental designs on networks"
)]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a random graph and write it as an edge list.
    Generate(GenerateArgs),
    /// Partition a graph and compute the independent-set assignment.
    Design(DesignArgs),
    /// Estimate the design's effect from observed outcomes.
    Estimate(EstimateArgs),
    /// Run repeated simulations of one or more designs on one graph setting.
    Simulate(SimulateArgs),
    /// Run every cell of a benchmark config and write the result tables.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    #[value(name = "ER", alias = "er")]
    Er,
    #[value(name = "BA", alias = "ba")]
    Ba,
    #[value(name = "SW", alias = "sw")]
    Sw,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EstimandArg {
    Direct,
    Spillover,
    Total,
}

#[derive(Debug, Clone, Args)]
pub struct FamilyOpts {
    /// Random graph family.
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Number of vertices.
    #[arg(long)]
    pub n: Option<usize>,
    /// Edge probability (ER) or rewiring probability (SW).
    #[arg(long)]
    pub p: Option<f64>,
    /// Edges per new vertex (BA).
    #[arg(long)]
    pub m: Option<usize>,
    /// Ring-lattice degree (SW).
    #[arg(long, default_value_t = 4)]
    pub k: usize,
}

impl FamilyOpts {
    fn family(&self) -> Result<Option<GraphFamily>> {
        let Some(f) = self.family else {
            return Ok(None);
        };
        let n = self
            .n
            .ok_or_else(|| Error::Param("--n is required with --family".into()))?;
        let p = || {
            self.p
                .ok_or_else(|| Error::Param("--p is required for this family".into()))
        };
        Ok(Some(match f {
            FamilyArg::Er => GraphFamily::ErdosRenyi { n, p: p()? },
            FamilyArg::Ba => GraphFamily::BarabasiAlbert {
                n,
                m: self
                    .m
                    .ok_or_else(|| Error::Param("--m is required for BA graphs".into()))?,
            },
            FamilyArg::Sw => GraphFamily::SmallWorld {
                n,
                k: self.k,
                p: p()?,
            },
        }))
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub graph: FamilyOpts,
    #[arg(long)]
    pub seed: u64,
    /// Output edge list (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EstimandOpts {
    #[arg(long, value_enum)]
    pub estimand: EstimandArg,
    /// Exposure level of the direct effect (default 0.5).
    #[arg(long)]
    pub rho_target: Option<f64>,
    /// Own treatment held fixed by the spillover effect (default 1).
    #[arg(long)]
    pub z: Option<u8>,
}

impl EstimandOpts {
    fn estimand(&self) -> Result<Estimand> {
        if matches!(self.z, Some(z) if z > 1) {
            return Err(Error::Param("--z must be 0 or 1".into()));
        }
        let name = match self.estimand {
            EstimandArg::Direct => "direct",
            EstimandArg::Spillover => "spillover",
            EstimandArg::Total => "total",
        };
        formats::parse_estimand(name, self.rho_target, self.z.map(|z| z == 1))
    }
}

#[derive(Debug, Clone, Args)]
pub struct OptimizerOpts {
    /// Local-search restarts.
    #[arg(long, default_value_t = OptimizerOptions::default().restarts)]
    pub restarts: usize,
    /// Enumerate all auxiliary assignments up to this many auxiliary units.
    #[arg(long, default_value_t = OptimizerOptions::default().exact_threshold)]
    pub exact_threshold: usize,
    /// Flip budget per restart (default ten per auxiliary unit).
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Greedy selection picks a minimum-degree vertex instead of a uniform one.
    #[arg(long)]
    pub min_degree: bool,
}

impl OptimizerOpts {
    fn options(&self) -> OptimizerOptions {
        OptimizerOptions {
            restarts: self.restarts,
            max_iters: self.max_iters,
            seed: 0,
            exact_threshold: self.exact_threshold,
        }
    }

    fn selection(&self) -> Selection {
        if self.min_degree {
            Selection::MinDegree
        } else {
            Selection::Uniform
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    /// Edge list of the experimental network.
    #[arg(long)]
    pub graph: PathBuf,
    /// Vertex ids in the edge list start at 1.
    #[arg(long)]
    pub one_based: bool,
    #[command(flatten)]
    pub estimand: EstimandOpts,
    #[command(flatten)]
    pub optimizer: OptimizerOpts,
    /// Noise standard deviation used for predicted variances.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Lipschitz constant of the outcome in the exposure, for the bias bound.
    #[arg(long)]
    pub lipschitz: Option<f64>,
    #[arg(long)]
    pub seed: u64,
    /// Output design file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Design file written by `indset design`.
    #[arg(long)]
    pub design: PathBuf,
    /// CSV with columns `vertex_id,y`.
    #[arg(long)]
    pub outcomes: PathBuf,
    /// Overrides the design's noise standard deviation.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Overrides the design's Lipschitz constant.
    #[arg(long)]
    pub lipschitz: Option<f64>,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Fixed graph for every replication.
    #[arg(long, conflicts_with = "family")]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub one_based: bool,
    #[command(flatten)]
    pub family: FamilyOpts,
    /// Replications sharing one generated graph.
    #[arg(long, default_value_t = 1)]
    pub reps_per_graph: usize,
    /// Comma-separated designs (IS, CR, Full, GraphCluster, EgoClusters); all by default.
    #[arg(long, value_delimiter = ',')]
    pub designs: Vec<String>,
    #[command(flatten)]
    pub estimand: EstimandOpts,
    #[command(flatten)]
    pub optimizer: OptimizerOpts,
    #[arg(long, default_value_t = OutcomeModel::default().alpha)]
    pub alpha: f64,
    #[arg(long, default_value_t = OutcomeModel::default().beta)]
    pub beta: f64,
    #[arg(long, default_value_t = OutcomeModel::default().gamma)]
    pub gamma: f64,
    #[arg(long, default_value_t = OutcomeModel::default().sigma)]
    pub sigma: f64,
    /// Per-unit shift: none or uniform.
    #[arg(long, default_value = "none")]
    pub unit_shift: String,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    /// Worker threads (0 = all cores); never changes the output.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (0 = all cores); overrides the config, never changes the output.
    #[arg(long)]
    pub threads: Option<usize>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Design(a) => cmd_design(&a),
        Command::Estimate(a) => cmd_estimate(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Benchmark(a) => cmd_benchmark(&a),
    }
}

/// Writes through a buffer to `path`, or to stdout when no path is given.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let shown = path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| "<stdout>".into());
    let mut w: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).map_err(|e| Error::io(p, e))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    f(&mut w)?;
    w.flush().map_err(|e| Error::io(shown, e))
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

pub fn read_graph(path: &Path, one_based: bool) -> Result<Graph> {
    formats::load_edge_list(open(path)?, one_based).map_err(|e| in_file(path, e))
}

fn write_err(e: std::io::Error) -> Error {
    Error::Data(format!("write failed: {e}"))
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let family = a
        .graph
        .family()?
        .ok_or_else(|| Error::Param("--family is required".into()))?;
    let g = family.generate(a.seed)?;
    let mut h = Header::new();
    h.push("family", family.tag())
        .push("params", family)
        .push("seed", a.seed);
    with_output(a.out.as_deref(), |w| {
        formats::save_edge_list(&g, &h, w).map_err(write_err)
    })?;
    eprintln!(
        "n = {}, edges = {}, mean degree = {:.4}",
        g.n(),
        g.edge_count(),
        g.mean_degree()
    );
    Ok(())
}

fn selection_name(s: Selection) -> &'static str {
    match s {
        Selection::Uniform => "uniform",
        Selection::MinDegree => "min_degree",
    }
}

pub fn cmd_design(a: &DesignArgs) -> Result<()> {
    let estimand = a.estimand.estimand()?;
    let g = read_graph(&a.graph, a.one_based)?;
    let spec = DesignSpec {
        name: DesignName::IndependentSet,
        estimand,
        optimizer: a.optimizer.options(),
        selection: a.optimizer.selection(),
    };
    if matches!(a.sigma, Some(s) if s.is_nan() || s < 0.0)
        || matches!(a.lipschitz, Some(l) if l.is_nan() || l < 0.0)
    {
        return Err(Error::Param(
            "--sigma and --lipschitz must be non-negative".into(),
        ));
    }
    let seeds = ReplicationSeeds::from_root(a.seed, DesignName::IndependentSet);
    let plan = simulate::plan_independent_set(&g, &spec, seeds.partition, seeds.design, true)?;

    let z: Vec<bool> = plan.used.iter().map(|&r| plan.z_ind.bits[r]).collect();
    let rho: Vec<f64> = plan.used.iter().map(|&r| plan.rho[r]).collect();
    let isolated: Vec<bool> = plan.used.iter().map(|&r| plan.isolated[r]).collect();
    let diag = estimate::diagnose(estimand, &z, &rho, &isolated, a.sigma, a.lipschitz)?;

    let base = usize::from(a.one_based);
    let mut rows = Vec::with_capacity(g.n());
    let used: BTreeSet<usize> = plan.used.iter().copied().collect();
    for (r, &v) in plan.partition.independent().iter().enumerate() {
        rows.push(DesignRow {
            vertex_id: v + base,
            set: 'I',
            z: plan.z_ind.bits[r].into(),
            rho: Some(plan.rho[r]),
            degree: g.degree(v),
            used: used.contains(&r).into(),
        });
    }
    for (c, &v) in plan.partition.auxiliary().iter().enumerate() {
        rows.push(DesignRow {
            vertex_id: v + base,
            set: 'A',
            z: plan.z_aux.bits[c].into(),
            rho: None,
            degree: g.degree(v),
            used: 0,
        });
    }
    rows.sort_by_key(|r| r.vertex_id);

    let mut h = Header::new();
    h.push("graph", a.graph.display())
        .push("one_based", a.one_based)
        .push("n", g.n())
        .push("edges", g.edge_count())
        .push("estimand", estimand.name());
    match estimand {
        Estimand::Direct { rho } => h.push("rho_target", rho),
        Estimand::Spillover { z } => h.push("z", u8::from(z)),
        Estimand::Total => &mut h,
    };
    let o = &spec.optimizer;
    h.push("seed", a.seed)
        .push_opt("sigma", a.sigma)
        .push_opt("lipschitz", a.lipschitz)
        .push("restarts", o.restarts)
        .push("exact_threshold", o.exact_threshold)
        .push_opt("max_iters", o.max_iters)
        .push("selection", selection_name(spec.selection))
        .push("n_independent", plan.partition.n_independent())
        .push("n_auxiliary", plan.partition.n_auxiliary())
        .push("n_used", diag.n_used)
        .push_opt("objective", plan.objective)
        .push_opt("norm_delta", diag.norm_delta)
        .push("var_rho", diag.var_rho)
        .push_opt("corr_z_rho", diag.corr_z_rho)
        .push_opt("bias_bound", diag.bias_bound)
        .push_opt("predicted_variance", diag.predicted_variance);
    with_output(a.out.as_deref(), |w| formats::write_design(&h, &rows, w))?;
    log::info!(
        "independent set {} of {}; objective {:?}",
        plan.partition.n_independent(),
        g.n(),
        plan.objective
    );
    Ok(())
}

pub fn cmd_estimate(a: &EstimateArgs) -> Result<()> {
    let (dh, rows) = formats::read_design(open(&a.design)?).map_err(|e| in_file(&a.design, e))?;
    let estimand = formats::estimand_from_header(&dh)?;
    let outcomes =
        formats::read_outcomes(open(&a.outcomes)?).map_err(|e| in_file(&a.outcomes, e))?;
    let sample: Vec<&DesignRow> = rows
        .iter()
        .filter(|r| r.set == 'I' && r.used == 1)
        .collect();
    let missing: Vec<String> = sample
        .iter()
        .filter(|r| !outcomes.contains_key(&r.vertex_id))
        .map(|r| r.vertex_id.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Data(format!(
            "{}: no outcome for independent units {}",
            a.outcomes.display(),
            missing.join(", ")
        )));
    }
    let z: Vec<bool> = sample.iter().map(|r| r.z == 1).collect();
    let rho: Vec<f64> = sample.iter().map(|r| r.rho.unwrap_or(0.0)).collect();
    let isolated: Vec<bool> = sample.iter().map(|r| r.degree == 0).collect();
    let y: Vec<f64> = sample.iter().map(|r| outcomes[&r.vertex_id]).collect();
    let sigma = a.sigma.map(Some).unwrap_or(dh.parse("sigma")?);
    let lipschitz = a.lipschitz.map(Some).unwrap_or(dh.parse("lipschitz")?);
    let obs = Observations {
        z: &z,
        rho: &rho,
        y: &y,
        isolated: &isolated,
    };
    let summary = estimate::summarize(estimand, obs, sigma, lipschitz)?;

    let mut h = Header::new();
    h.push("design", a.design.display())
        .push("outcomes", a.outcomes.display())
        .push("seed", dh.get("seed").unwrap_or_default())
        .push_opt("sigma", sigma)
        .push_opt("lipschitz", lipschitz)
        .push("n_used", summary.n_used);
    with_output(a.out.as_deref(), |w| {
        formats::write_summary(&h, &summary, w)
    })
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let estimand = a.estimand.estimand()?;
    let source = match (&a.graph, a.family.family()?) {
        (Some(path), None) => GraphSource::Fixed {
            label: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "graph".into()),
            graph: read_graph(path, a.one_based)?,
        },
        (None, Some(family)) => GraphSource::Family {
            family,
            reps_per_graph: a.reps_per_graph,
        },
        _ => {
            return Err(Error::Param(
                "give exactly one of --graph or --family".into(),
            ))
        }
    };
    let names: Vec<DesignName> = if a.designs.is_empty() {
        DesignName::ALL.to_vec()
    } else {
        a.designs
            .iter()
            .map(|s| {
                DesignName::from_label(s.trim())
                    .ok_or_else(|| Error::Param(format!("unknown design {s:?}")))
            })
            .collect::<Result<_>>()?
    };
    let mut designs = Vec::new();
    for name in names {
        let spec = DesignSpec {
            name,
            estimand,
            optimizer: a.optimizer.options(),
            selection: a.optimizer.selection(),
        };
        match spec.validate() {
            Ok(()) => designs.push(spec),
            // an explicitly requested design that cannot run is an error
            Err(e) if !a.designs.is_empty() => return Err(e.into()),
            Err(e) => log::warn!("skipping {}: {e}", name.label()),
        }
    }
    let model = OutcomeModel {
        alpha: a.alpha,
        beta: a.beta,
        gamma: a.gamma,
        sigma: a.sigma,
        unit_shift: parse_unit_shift(&a.unit_shift)?,
    };
    let reports = engine::with_threads(a.threads, || {
        engine::run_cell(&source, &designs, &model, a.reps, a.seed)
    })??;

    let mut h = Header::new();
    h.push(
        "graph",
        a.graph
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| source.label()),
    )
    .push("params", source.params())
    .push("reps_per_graph", a.reps_per_graph)
    .push("estimand", estimand)
    .push("alpha", model.alpha)
    .push("beta", model.beta)
    .push("gamma", model.gamma)
    .push("sigma", model.sigma)
    .push(
        "unit_shift",
        match model.unit_shift {
            UnitShift::None => "none",
            UnitShift::Uniform => "uniform",
        },
    )
    .push("restarts", a.optimizer.restarts)
    .push("exact_threshold", a.optimizer.exact_threshold)
    .push_opt("max_iters", a.optimizer.max_iters)
    .push("selection", selection_name(a.optimizer.selection()))
    .push("seed", a.seed);
    with_output(a.out.as_deref(), |w| {
        h.write_to(w).map_err(write_err)?;
        writeln!(w, "{REPORT_COLUMNS}").map_err(write_err)?;
        for r in &reports {
            writeln!(w, "{}", r.csv_row()).map_err(write_err)?;
        }
        Ok(())
    })
}

pub fn cmd_benchmark(a: &BenchmarkArgs) -> Result<()> {
    let text = fs::read_to_string(&a.config).map_err(|e| Error::io(&a.config, e))?;
    let cfg = BenchmarkConfig::from_toml(&text)?;
    let threads = a.threads.or(cfg.threads).unwrap_or(0);
    let cells = engine::with_threads(threads, || benchmark::benchmark_suite(&cfg))??;
    let stem = a
        .config
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "benchmark".into());
    for path in benchmark::write_outputs(&cfg, &cells, &a.out, &stem)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
