//! Benchmark configuration files (TOML).
//!
//! ```toml
//! seed = 7
//! reps = 2000
//!
//! [[graph]]
//! family = "ER"
//! n = 100
//! p = 0.1
//!
//! [design]
//! name = ["IS", "CR", "Full"]
//! estimand = "spillover"
//!
//! [model]
//! sigma = 0.5
//! ```

use serde::Deserialize;

use indset_core::{
    DesignName, DesignSpec, Estimand, GraphFamily, OptimizerOptions, OutcomeModel, Selection,
    UnitShift,
};

use crate::error::{Error, Result};
use crate::io::{parse_estimand, Header};

/// Accepts either a single value or an array of values under `key`.
fn one_or_many<T: serde::de::DeserializeOwned>(value: toml::Value, key: &str) -> Result<Vec<T>> {
    let items = match value {
        toml::Value::Array(items) => items,
        single => vec![single],
    };
    items
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.try_into()
                .map_err(|e| schema(format!("key `{key}[{i}]`: {}", e.to_string().trim_end())))
        })
        .collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: u64,
    reps: usize,
    #[serde(default)]
    threads: Option<usize>,
    #[serde(default = "one")]
    reps_per_graph: usize,
    graph: toml::Value,
    design: RawDesign,
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    optimizer: RawOptimizer,
    #[serde(default)]
    sweep: Option<RawSweep>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    family: String,
    n: usize,
    p: Option<f64>,
    m: Option<usize>,
    k: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDesign {
    name: toml::Value,
    estimand: String,
    rho_target: Option<f64>,
    z: Option<u8>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    sigma: Option<f64>,
    unit_shift: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimizer {
    restarts: Option<usize>,
    exact_threshold: Option<usize>,
    max_iters: Option<usize>,
    selection: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    gamma: Vec<f64>,
}

/// A validated benchmark configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub seed: u64,
    pub reps: usize,
    /// Worker threads; `None` uses every core. Never affects results.
    pub threads: Option<usize>,
    pub reps_per_graph: usize,
    pub graphs: Vec<GraphFamily>,
    pub designs: Vec<DesignSpec>,
    pub model: OutcomeModel,
    /// Spillover coefficients to sweep over; empty runs the model as given.
    pub sweep_gamma: Vec<f64>,
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn graph_family(i: usize, g: &RawGraph) -> Result<GraphFamily> {
    let key = |k: &str| format!("graph[{i}].{k}");
    let need_p = || {
        g.p.ok_or_else(|| schema(format!("missing key `{}`", key("p"))))
    };
    let reject = |present: bool, k: &str| {
        if present {
            Err(schema(format!(
                "key `{}` does not apply to family {}",
                key(k),
                g.family
            )))
        } else {
            Ok(())
        }
    };
    let family = match g.family.to_ascii_uppercase().as_str() {
        "ER" => {
            reject(g.m.is_some(), "m")?;
            reject(g.k.is_some(), "k")?;
            GraphFamily::ErdosRenyi {
                n: g.n,
                p: need_p()?,
            }
        }
        "BA" => {
            reject(g.p.is_some(), "p")?;
            reject(g.k.is_some(), "k")?;
            let m =
                g.m.ok_or_else(|| schema(format!("missing key `{}`", key("m"))))?;
            GraphFamily::BarabasiAlbert { n: g.n, m }
        }
        "SW" => {
            reject(g.m.is_some(), "m")?;
            GraphFamily::SmallWorld {
                n: g.n,
                k: g.k.unwrap_or(4),
                p: need_p()?,
            }
        }
        other => {
            return Err(schema(format!(
                "key `{}`: unknown family {other:?} (expected ER, BA or SW)",
                key("family")
            )))
        }
    };
    // surface generator parameter errors before any work starts
    family
        .generate(0)
        .map_err(|e| schema(format!("graph[{i}]: {e}")))?;
    Ok(family)
}

pub fn parse_selection(s: &str) -> Result<Selection> {
    match s.to_ascii_lowercase().replace('-', "_").as_str() {
        "uniform" => Ok(Selection::Uniform),
        "min_degree" => Ok(Selection::MinDegree),
        _ => Err(Error::Param(format!(
            "unknown selection {s:?} (expected uniform or min_degree)"
        ))),
    }
}

pub fn parse_unit_shift(s: &str) -> Result<UnitShift> {
    match s.to_ascii_lowercase().as_str() {
        "none" => Ok(UnitShift::None),
        "uniform" => Ok(UnitShift::Uniform),
        _ => Err(Error::Param(format!(
            "unknown unit_shift {s:?} (expected none or uniform)"
        ))),
    }
}

impl BenchmarkConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| schema(e.to_string().trim_end().to_string()))?;
        if raw.reps < 2 {
            return Err(schema(format!(
                "key `reps` must be at least 2, got {}",
                raw.reps
            )));
        }
        if raw.reps_per_graph == 0 {
            return Err(schema("key `reps_per_graph` must be at least 1"));
        }
        let graphs = one_or_many::<RawGraph>(raw.graph, "graph")?
            .iter()
            .enumerate()
            .map(|(i, g)| graph_family(i, g))
            .collect::<Result<Vec<_>>>()?;
        if graphs.is_empty() {
            return Err(schema("key `graph` lists no graphs"));
        }

        let d = &raw.design;
        let estimand = parse_estimand(&d.estimand, d.rho_target, d.z.map(|z| z == 1))
            .map_err(|e| schema(format!("key `design.estimand`: {e}")))?;
        if matches!(d.z, Some(z) if z > 1) {
            return Err(schema("key `design.z` must be 0 or 1"));
        }

        let o = &raw.optimizer;
        let defaults = OptimizerOptions::default();
        let optimizer = OptimizerOptions {
            restarts: o.restarts.unwrap_or(defaults.restarts),
            exact_threshold: o.exact_threshold.unwrap_or(defaults.exact_threshold),
            max_iters: o.max_iters.or(defaults.max_iters),
            seed: 0,
        };
        optimizer
            .validate()
            .map_err(|e| schema(format!("section `optimizer`: {e}")))?;
        let selection = o
            .selection
            .as_deref()
            .map(parse_selection)
            .transpose()
            .map_err(|e| schema(format!("key `optimizer.selection`: {e}")))?
            .unwrap_or_default();

        let names: Vec<String> = one_or_many(d.name.clone(), "design.name")?;
        if names.is_empty() {
            return Err(schema("key `design.name` lists no designs"));
        }
        let mut designs = Vec::new();
        for label in &names {
            let name = DesignName::from_label(label)
                .ok_or_else(|| schema(format!("key `design.name`: unknown design {label:?}")))?;
            if designs.iter().any(|s: &DesignSpec| s.name == name) {
                return Err(schema(format!("key `design.name`: {label} listed twice")));
            }
            let spec = DesignSpec {
                name,
                estimand,
                optimizer,
                selection,
            };
            match spec.validate() {
                Ok(()) => designs.push(spec),
                Err(e) => log::warn!(
                    "skipping design {label} for the {} estimand: {e}",
                    estimand.name()
                ),
            }
        }
        if designs.is_empty() {
            return Err(schema(
                "key `design.name`: no design applies to this estimand",
            ));
        }

        let m = &raw.model;
        let base = OutcomeModel::default();
        let model = OutcomeModel {
            alpha: m.alpha.unwrap_or(base.alpha),
            beta: m.beta.unwrap_or(base.beta),
            gamma: m.gamma.unwrap_or(base.gamma),
            sigma: m.sigma.unwrap_or(base.sigma),
            unit_shift: m
                .unit_shift
                .as_deref()
                .map(parse_unit_shift)
                .transpose()
                .map_err(|e| schema(format!("key `model.unit_shift`: {e}")))?
                .unwrap_or_default(),
        };
        model
            .validate()
            .map_err(|e| schema(format!("key `model.sigma`: {e}")))?;

        let sweep_gamma = match raw.sweep {
            None => Vec::new(),
            Some(s) if s.gamma.is_empty() => return Err(schema("key `sweep.gamma` is empty")),
            Some(s) => {
                if m.gamma.is_some() {
                    return Err(schema(
                        "keys `model.gamma` and `sweep.gamma` are mutually exclusive",
                    ));
                }
                s.gamma
            }
        };

        Ok(BenchmarkConfig {
            seed: raw.seed,
            reps: raw.reps,
            threads: raw.threads,
            reps_per_graph: raw.reps_per_graph,
            graphs,
            designs,
            model,
            sweep_gamma,
        })
    }

    pub fn estimand(&self) -> Estimand {
        self.designs[0].estimand
    }

    /// Header lines recording every setting that affects the results.
    pub fn header(&self) -> Header {
        let mut h = Header::new();
        let d = &self.designs[0];
        h.push("seed", self.seed)
            .push("reps", self.reps)
            .push("reps_per_graph", self.reps_per_graph)
            .push("estimand", self.estimand());
        let names: Vec<&str> = self.designs.iter().map(|s| s.name.label()).collect();
        h.push("designs", names.join(" "));
        h.push("alpha", self.model.alpha)
            .push("beta", self.model.beta);
        if self.sweep_gamma.is_empty() {
            h.push("gamma", self.model.gamma);
        } else {
            let g: Vec<String> = self.sweep_gamma.iter().map(|g| g.to_string()).collect();
            h.push("sweep_gamma", g.join(" "));
        }
        h.push("sigma", self.model.sigma)
            .push(
                "unit_shift",
                match self.model.unit_shift {
                    UnitShift::None => "none",
                    UnitShift::Uniform => "uniform",
                },
            )
            .push("restarts", d.optimizer.restarts)
            .push("exact_threshold", d.optimizer.exact_threshold)
            .push_opt("max_iters", d.optimizer.max_iters)
            .push(
                "selection",
                match d.selection {
                    Selection::Uniform => "uniform",
                    Selection::MinDegree => "min_degree",
                },
            );
        h
    }
}
