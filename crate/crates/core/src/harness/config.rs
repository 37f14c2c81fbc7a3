//! JSON sweep configuration.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "grid": {
//!     "K": [20], "J": [1.0], "q": [0.01], "t": [0.0], "epsilon": [0.0],
//!     "kT": {"start": 0.04, "stop": 0.6, "step": 0.02},
//!     "N": [64, 128, 256, 512]
//!   },
//!   "protocol": {"seed": 1, "samples": 1000, "post_growth_sweeps": 0},
//!   "outputs": {"dir": "out", "artifacts": ["observables", "histogram"]},
//!   "parallelism": 4
//! }
//! ```
//!
//! `J`, `t` and `epsilon` default to `[1.0]`, `[0.0]` and `[0.0]`. Any real
//! grid may be a list or a `{start, stop, step}` range.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::analysis::{GridSpec, PhaseAxis};
use crate::model::ModelParams;
use crate::observables::HISTOGRAM_BINS;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Real-valued grid: explicit list or inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RealGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl RealGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            RealGrid::List(v) => v.clone(),
            RealGrid::Range { start, stop, step } => {
                if !(*step > 0.0 && stop >= start) {
                    return Vec::new();
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=count)
                    .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
                    .collect()
            }
        }
    }
}

impl From<Vec<f64>> for RealGrid {
    fn from(v: Vec<f64>) -> Self {
        RealGrid::List(v)
    }
}

fn default_coupling() -> RealGrid {
    RealGrid::List(vec![1.0])
}

fn default_zero() -> RealGrid {
    RealGrid::List(vec![0.0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterGrid {
    #[serde(rename = "K")]
    pub k: Vec<usize>,
    #[serde(rename = "J", default = "default_coupling")]
    pub coupling: RealGrid,
    pub q: RealGrid,
    #[serde(default = "default_zero")]
    pub t: RealGrid,
    #[serde(default = "default_zero")]
    pub epsilon: RealGrid,
    #[serde(rename = "kT")]
    pub kt: RealGrid,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub seed: u64,
    /// Samples per point; `None` means 1000 for N <= 1024 and 200 above.
    #[serde(default)]
    pub samples: Option<u64>,
    #[serde(default)]
    pub post_growth_sweeps: u32,
    #[serde(default)]
    pub runaway_cap: Option<usize>,
}

impl ProtocolConfig {
    pub fn samples_for(&self, n: usize) -> u64 {
        self.samples.unwrap_or(if n <= 1024 { 1000 } else { 200 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Artifact {
    Observables,
    Histogram,
    Correlation,
    MutualInfo,
    Zipf,
    Fss,
    PhaseDiagram,
    Dumps,
    Runs,
}

impl Artifact {
    /// Artifacts that need a single (K, J, q, t, epsilon) group.
    fn needs_single_group(self) -> bool {
        matches!(self, Artifact::Histogram | Artifact::Zipf | Artifact::Fss)
    }
}

fn default_artifacts() -> Vec<Artifact> {
    vec![Artifact::Observables, Artifact::Runs]
}

fn default_max_dumps() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_artifacts")]
    pub artifacts: Vec<Artifact>,
    /// Lower edge of the magnetization bin `[lo, lo + 0.02)` selected for dumps.
    #[serde(default)]
    pub dump_bin: Option<f64>,
    #[serde(default = "default_max_dumps")]
    pub max_dumps: usize,
    #[serde(default)]
    pub fss_grid: Option<GridSpec>,
    #[serde(default)]
    pub phase_axis: Option<PhaseAxis>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            artifacts: default_artifacts(),
            dump_bin: None,
            max_dumps: default_max_dumps(),
            fss_grid: None,
            phase_axis: None,
        }
    }
}

fn default_parallelism() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub grid: ParameterGrid,
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

fn default_schema() -> u32 {
    CONFIG_SCHEMA_VERSION
}

fn field_error(field: impl Into<String>, message: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        field: field.into(),
        message: message.into(),
    }
}

impl SweepConfig {
    /// Parses and validates; syntax errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let config: SweepConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::ConfigSyntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Every parameter point of the grid, in key order.
    pub fn points(&self) -> Vec<(ModelParams, usize)> {
        let g = &self.grid;
        let mut points = Vec::new();
        for &k in &g.k {
            for coupling in g.coupling.values() {
                for q in g.q.values() {
                    for t in g.t.values() {
                        for epsilon in g.epsilon.values() {
                            for kt in g.kt.values() {
                                for &n in &g.n {
                                    points.push((
                                        ModelParams {
                                            k,
                                            coupling,
                                            q,
                                            t,
                                            epsilon,
                                            kt,
                                        },
                                        n,
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        points
    }

    pub fn wants(&self, artifact: Artifact) -> bool {
        self.outputs.artifacts.contains(&artifact)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(field_error(
                "schema_version",
                format!(
                    "unsupported version {}, expected {CONFIG_SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        let g = &self.grid;
        let real_grids = [
            ("grid.J", &g.coupling),
            ("grid.q", &g.q),
            ("grid.t", &g.t),
            ("grid.epsilon", &g.epsilon),
            ("grid.kT", &g.kt),
        ];
        if g.k.is_empty() {
            return Err(field_error("grid.K", "grid is empty"));
        }
        if g.n.is_empty() {
            return Err(field_error("grid.N", "grid is empty"));
        }
        for (name, grid) in real_grids {
            if grid.values().is_empty() {
                return Err(field_error(
                    name,
                    "grid is empty (or range has stop < start / step <= 0)",
                ));
            }
        }
        for (i, &k) in g.k.iter().enumerate() {
            if k == 0 || k > usize::from(u16::MAX) {
                return Err(field_error(
                    format!("grid.K[{i}]"),
                    format!("must be in 1..=65535, got {k}"),
                ));
            }
        }
        for (i, &n) in g.n.iter().enumerate() {
            if n < 2 {
                return Err(field_error(
                    format!("grid.N[{i}]"),
                    format!("must be >= 2, got {n}"),
                ));
            }
        }
        let probe = ModelParams {
            k: g.k[0],
            coupling: 1.0,
            q: 0.5,
            t: 0.0,
            epsilon: 0.0,
            kt: 1.0,
        };
        for (name, grid) in real_grids {
            for (i, v) in grid.values().into_iter().enumerate() {
                let mut p = probe;
                match name {
                    "grid.J" => p.coupling = v,
                    "grid.q" => p.q = v,
                    "grid.t" => p.t = v,
                    "grid.epsilon" => p.epsilon = v,
                    _ => p.kt = v,
                }
                if let Err(e) = p.validate() {
                    return Err(field_error(format!("{name}[{i}]"), e.to_string()));
                }
            }
        }
        if self.protocol.samples == Some(0) {
            return Err(field_error("protocol.samples", "must be >= 1"));
        }
        if self.parallelism == 0 {
            return Err(field_error("parallelism", "must be >= 1"));
        }
        if let Some(lo) = self.outputs.dump_bin {
            let bins = lo * HISTOGRAM_BINS as f64;
            if !(0.0..1.0).contains(&lo) || (bins - bins.round()).abs() > 1e-9 {
                return Err(field_error(
                    "outputs.dump_bin",
                    format!("must be a multiple of 0.02 in [0, 0.98], got {lo}"),
                ));
            }
        }
        if self.wants(Artifact::Dumps) && self.outputs.dump_bin.is_none() {
            return Err(field_error(
                "outputs.dump_bin",
                "required when the dumps artifact is requested",
            ));
        }
        let single_group = g.k.len() == 1
            && g.coupling.values().len() == 1
            && g.q.values().len() == 1
            && g.t.values().len() == 1
            && g.epsilon.values().len() == 1;
        if let Some(a) = self
            .outputs
            .artifacts
            .iter()
            .find(|a| a.needs_single_group())
        {
            if !single_group {
                return Err(field_error(
                    "outputs.artifacts",
                    format!("{a:?} needs a single value of K, J, q, t and epsilon"),
                ));
            }
        }
        if let Some(grid) = &self.outputs.fss_grid {
            grid.validate()
                .map_err(|e| field_error("outputs.fss_grid", e.to_string()))?;
        }
        Ok(())
    }
}
