//! Benchmark suites: the full cross product of graphs, designs and swept
//! spillover coefficients, written as CSV tables and plot-ready series.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use indset_core::rng::derive_seed;
use indset_core::OutcomeModel;

use crate::config::BenchmarkConfig;
use crate::engine::{fmt_f64, run_cell, GraphSource, SimulationReport, REPORT_COLUMNS};
use crate::error::{Error, Result};

/// Reports for every design on one graph family at one model setting.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub graph_index: usize,
    /// Swept spillover coefficient, if the config has a sweep.
    pub gamma: Option<f64>,
    pub reports: Vec<SimulationReport>,
}

/// Runs every cell of `cfg` on the current thread pool.
///
/// All cells on the same graph row share one seed, so a sweep compares the
/// coefficients on common random numbers.
pub fn benchmark_suite(cfg: &BenchmarkConfig) -> Result<Vec<Cell>> {
    let gammas: Vec<Option<f64>> = if cfg.sweep_gamma.is_empty() {
        vec![None]
    } else {
        cfg.sweep_gamma.iter().copied().map(Some).collect()
    };
    let mut cells = Vec::new();
    for (gi, family) in cfg.graphs.iter().enumerate() {
        let source = GraphSource::Family {
            family: *family,
            reps_per_graph: cfg.reps_per_graph,
        };
        let seed = derive_seed(cfg.seed, &[gi as u64]);
        for &gamma in &gammas {
            let model = OutcomeModel {
                gamma: gamma.unwrap_or(cfg.model.gamma),
                ..cfg.model
            };
            log::info!(
                "{} {}{}: {} designs x {} reps",
                family.tag(),
                family,
                gamma.map(|g| format!(" gamma={g}")).unwrap_or_default(),
                cfg.designs.len(),
                cfg.reps
            );
            let reports = run_cell(&source, &cfg.designs, &model, cfg.reps, seed)?;
            cells.push(Cell {
                graph_index: gi,
                gamma,
                reports,
            });
        }
    }
    Ok(cells)
}

fn gamma_prefix(cell: &Cell) -> String {
    cell.gamma.map(|g| format!("{g},")).unwrap_or_default()
}

/// One row per (graph, design) with the columns of [`REPORT_COLUMNS`].
pub fn write_long_csv(
    cfg: &BenchmarkConfig,
    cells: &[Cell],
    w: &mut impl Write,
) -> std::io::Result<()> {
    cfg.header().write_to(w)?;
    let sweep = if cfg.sweep_gamma.is_empty() {
        ""
    } else {
        "gamma,"
    };
    writeln!(w, "{sweep}{REPORT_COLUMNS}")?;
    for cell in cells {
        for r in &cell.reports {
            writeln!(w, "{}{}", gamma_prefix(cell), r.csv_row())?;
        }
    }
    Ok(())
}

/// Wide grid: one row per graph, a bias and a variance column per design.
pub fn write_grid_csv(
    cfg: &BenchmarkConfig,
    cells: &[Cell],
    w: &mut impl Write,
) -> std::io::Result<()> {
    cfg.header().write_to(w)?;
    let mut cols = Vec::new();
    if !cfg.sweep_gamma.is_empty() {
        cols.push("gamma".to_string());
    }
    cols.extend(["graph".to_string(), "params".to_string()]);
    for d in &cfg.designs {
        cols.push(format!("{}_bias", d.name.label()));
        cols.push(format!("{}_variance", d.name.label()));
    }
    writeln!(w, "{}", cols.join(","))?;
    for cell in cells {
        let first = &cell.reports[0];
        write!(w, "{}{},{}", gamma_prefix(cell), first.graph, first.params)?;
        for r in &cell.reports {
            write!(w, ",{},{}", fmt_f64(r.bias), fmt_f64(r.variance))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes `<stem>.csv`, `<stem>_grid.csv` and, for sweeps, one
/// `<stem>_<metric>_<design>.dat` series per design and metric.
pub fn write_outputs(
    cfg: &BenchmarkConfig,
    cells: &[Cell],
    out_dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    let mut emit =
        |name: String, body: &dyn Fn(&mut std::io::BufWriter<fs::File>) -> std::io::Result<()>| {
            let path = out_dir.join(name);
            let mut f = create(&path)?;
            body(&mut f)
                .and_then(|_| f.flush())
                .map_err(|e| Error::io(&path, e))?;
            written.push(path);
            Ok::<_, Error>(())
        };
    emit(format!("{stem}.csv"), &|f| write_long_csv(cfg, cells, f))?;
    emit(format!("{stem}_grid.csv"), &|f| {
        write_grid_csv(cfg, cells, f)
    })?;
    if !cfg.sweep_gamma.is_empty() {
        let multi = cfg.graphs.len() > 1;
        for (gi, family) in cfg.graphs.iter().enumerate() {
            let row: Vec<&Cell> = cells.iter().filter(|c| c.graph_index == gi).collect();
            for (di, d) in cfg.designs.iter().enumerate() {
                for metric in ["bias", "variance"] {
                    let graph = if multi {
                        format!("_g{gi}")
                    } else {
                        String::new()
                    };
                    let name = format!("{stem}{graph}_{metric}_{}.dat", d.name.label());
                    emit(name, &|f| {
                        cfg.header().write_to(f)?;
                        writeln!(f, "# graph = {} {family}", family.tag())?;
                        writeln!(f, "# design = {}", d.name.label())?;
                        writeln!(f, "# gamma {metric}")?;
                        for c in &row {
                            let r = &c.reports[di];
                            let v = if metric == "bias" { r.bias } else { r.variance };
                            writeln!(f, "{} {}", c.gamma.unwrap_or(r.model.gamma), fmt_f64(v))?;
                        }
                        Ok(())
                    })?;
                }
            }
        }
    }
    Ok(written)
}
