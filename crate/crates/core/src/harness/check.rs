//! Built-in comparison of the engine against the exact oracles.

use serde::{Deserialize, Serialize};

use crate::engine::{generate_ensemble, SamplingProtocol};
use crate::error::Result;
use crate::model::ModelParams;
use crate::observables::probe_sites;
use crate::oracle::{
    absorption_distribution, compare_absorption, compare_moments, enumerate_potts_equilibrium,
    sample_equilibrium_chain, ChainPlan, ComparisonReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckScope {
    Equilibrium,
    Absorption,
    All,
}

impl CheckScope {
    fn equilibrium(self) -> bool {
        matches!(self, CheckScope::Equilibrium | CheckScope::All)
    }

    fn absorption(self) -> bool {
        matches!(self, CheckScope::Absorption | CheckScope::All)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSuite {
    pub seed: u64,
    /// Chain length and temperatures of the fixed-length Potts checks.
    pub sites: usize,
    pub temperatures: Vec<f64>,
    pub sweeps: u64,
    pub burn_in_sweeps: u64,
    pub batches: u64,
    pub z_threshold: f64,
    /// Toy growth processes `(params, N_max)`.
    pub absorption_cases: Vec<(ModelParams, usize)>,
    pub runs: u64,
    pub tv_threshold: f64,
    /// Multiplies the temperature handed to the engine; 1 except in negative controls.
    pub engine_kt_scale: f64,
}

impl Default for CheckSuite {
    fn default() -> Self {
        let toy = |k, q, epsilon, kt| ModelParams {
            k,
            coupling: 1.0,
            q,
            t: 0.0,
            epsilon,
            kt,
        };
        Self {
            seed: 20_240_601,
            sites: 12,
            temperatures: vec![0.5, 1.0, 2.0],
            sweeps: 100_000,
            burn_in_sweeps: 1_000,
            batches: 100,
            z_threshold: 3.0,
            absorption_cases: vec![(toy(2, 0.5, 0.5, 1.0), 3), (toy(3, 0.3, 0.2, 0.7), 3)],
            runs: 100_000,
            tv_threshold: 0.02,
            engine_kt_scale: 1.0,
        }
    }
}

impl CheckSuite {
    pub fn run(&self, scope: CheckScope) -> Result<ComparisonReport> {
        let mut report = ComparisonReport::default();
        if scope.equilibrium() {
            let probes = [probe_sites(self.sites)];
            let (i, j) = probes[0];
            let plan = ChainPlan {
                sites: self.sites,
                burn_in_sweeps: self.burn_in_sweeps,
                sweeps: self.sweeps,
                batches: self.batches,
            };
            for (idx, &kt) in self.temperatures.iter().enumerate() {
                let exact = enumerate_potts_equilibrium(2, self.sites, 1.0, kt, &probes)?;
                let engine = ModelParams::new(2, 1.0, 0.5, 0.0, 0.0, kt * self.engine_kt_scale)?;
                let est = sample_equilibrium_chain(
                    &engine,
                    &plan,
                    &probes,
                    self.seed.wrapping_add(idx as u64),
                )?;
                report.extend(compare_moments(
                    &[
                        (
                            format!("equilibrium K=2 n={} kT={kt} <M^2>", self.sites),
                            est.m2,
                            exact.mean_m2,
                        ),
                        (
                            format!(
                                "equilibrium K=2 n={} kT={kt} <delta(s_{i}, s_{j})>",
                                self.sites
                            ),
                            est.same[0],
                            exact.probes[0].same,
                        ),
                    ],
                    self.z_threshold,
                )?);
            }
        }
        if scope.absorption() {
            for (idx, (params, max_len)) in self.absorption_cases.iter().enumerate() {
                let dist = absorption_distribution(params, *max_len)?;
                let mut engine = *params;
                engine.kt *= self.engine_kt_scale;
                let protocol = SamplingProtocol::new(
                    *max_len,
                    self.runs,
                    self.seed.wrapping_add(1000 + idx as u64),
                )?;
                let samples = generate_ensemble(&engine, &protocol)?;
                let name = format!(
                    "absorption K={} N_max={} q={} t={} epsilon={} kT={} (TV)",
                    params.k, max_len, params.q, params.t, params.epsilon, params.kt
                );
                report.extend(compare_absorption(
                    &name,
                    &dist,
                    &samples,
                    self.tv_threshold,
                )?);
            }
        }
        Ok(report)
    }
}

pub fn run_oracle_checks(scope: CheckScope) -> Result<ComparisonReport> {
    CheckSuite::default().run(scope)
}
