//! Exact Boltzmann averages of a short free Potts chain by enumeration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::magnetization_from_counts;

/// Largest number of configurations enumerated.
pub const MAX_STATES: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeExpectation {
    pub i: usize,
    pub j: usize,
    /// `<delta(s_i, s_j)>`.
    pub same: f64,
    /// `<e_{s_i} . e_{s_j}> = (K <delta> - 1) / (K - 1)`.
    pub dot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactEquilibrium {
    pub k: usize,
    pub n: usize,
    pub coupling: f64,
    pub kt: f64,
    pub mean_m: f64,
    pub mean_m2: f64,
    pub mean_m4: f64,
    pub probes: Vec<ProbeExpectation>,
}

impl ExactEquilibrium {
    pub fn probe(&self, i: usize, j: usize) -> Option<&ProbeExpectation> {
        self.probes.iter().find(|p| p.i == i && p.j == j)
    }
}

/// Enumerates all `K^n` configurations of `H = -J sum delta(s_i, s_{i+1})`
/// with free boundaries.
pub fn enumerate_potts_equilibrium(
    k: usize,
    n: usize,
    coupling: f64,
    kt: f64,
    probes: &[(usize, usize)],
) -> Result<ExactEquilibrium> {
    if k < 2 || n < 1 {
        return Err(Error::InvalidParameter {
            field: "K",
            reason: format!("need K >= 2 and n >= 1, got K = {k}, n = {n}"),
        });
    }
    if !(kt > 0.0 && kt.is_finite() && coupling.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "kT",
            reason: format!("need finite J and kT > 0, got J = {coupling}, kT = {kt}"),
        });
    }
    if let Some(&(i, j)) = probes.iter().find(|&&(i, j)| i >= n || j >= n) {
        return Err(Error::InvalidParameter {
            field: "probes",
            reason: format!("probe ({i}, {j}) outside a chain of {n} sites"),
        });
    }
    let states = (k as u64)
        .checked_pow(n as u32)
        .filter(|&s| s <= MAX_STATES)
        .ok_or(Error::TooLarge {
            states: (k as f64).powi(n as i32).min(u64::MAX as f64) as u64,
            cap: MAX_STATES,
        })?;

    // Boltzmann factor per number of aligned bonds, relative to the ground state.
    let beta_j = coupling / kt;
    let max_bonds = n - 1;
    let weight: Vec<f64> = (0..=max_bonds)
        .map(|b| (beta_j * (b as f64 - max_bonds as f64)).exp())
        .collect();

    let mut spins = vec![0usize; n];
    let mut counts = vec![0u64; k];
    counts[0] = n as u64;
    let mut bonds = max_bonds;
    let (mut z, mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0, 0.0);
    let mut same = vec![0.0; probes.len()];
    for state in 0..states {
        let w = weight[bonds];
        let m = magnetization_from_counts(&counts);
        let m2 = m * m;
        z += w;
        s1 += w * m;
        s2 += w * m2;
        s4 += w * m2 * m2;
        for (acc, &(i, j)) in same.iter_mut().zip(probes) {
            if spins[i] == spins[j] {
                *acc += w;
            }
        }
        if state + 1 == states {
            break;
        }
        // Odometer increment with incremental bond and count updates.
        let mut site = 0;
        loop {
            let old = spins[site];
            let new = (old + 1) % k;
            let aligned = |s: &[usize], v: usize| {
                usize::from(site > 0 && s[site - 1] == v)
                    + usize::from(site + 1 < n && s[site + 1] == v)
            };
            bonds = bonds - aligned(&spins, old) + aligned(&spins, new);
            spins[site] = new;
            counts[old] -= 1;
            counts[new] += 1;
            if new != 0 {
                break;
            }
            site += 1;
        }
    }
    let kf = k as f64;
    Ok(ExactEquilibrium {
        k,
        n,
        coupling,
        kt,
        mean_m: s1 / z,
        mean_m2: s2 / z,
        mean_m4: s4 / z,
        probes: probes
            .iter()
            .zip(same)
            .map(|(&(i, j), s)| {
                let same = s / z;
                ProbeExpectation {
                    i,
                    j,
                    same,
                    dot: (kf * same - 1.0) / (kf - 1.0),
                }
            })
            .collect(),
    })
}
