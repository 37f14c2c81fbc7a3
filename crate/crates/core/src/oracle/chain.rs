//! Long Metropolis runs of the context rule alone on a fixed-length sentence,
//! measured with batch means for comparison against exact enumeration.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::Dynamics;
use crate::error::{Error, Result};
use crate::model::{ModelParams, SentenceState};
use crate::observables::magnetization;
use crate::rng::{substream, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainPlan {
    pub sites: usize,
    pub burn_in_sweeps: u64,
    pub sweeps: u64,
    pub batches: u64,
}

impl ChainPlan {
    fn validate(&self) -> Result<()> {
        if self.sites < 2 || self.batches < 2 || self.sweeps < self.batches {
            return Err(Error::InvalidParameter {
                field: "plan",
                reason: format!(
                    "need >= 2 sites, >= 2 batches and sweeps >= batches, got {self:?}"
                ),
            });
        }
        Ok(())
    }
}

/// Mean with its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    fn from_batches(batches: &[f64]) -> Self {
        let b = batches.len() as f64;
        let mean = batches.iter().sum::<f64>() / b;
        let var = batches.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1.0);
        Self {
            mean,
            se: (var / b).sqrt(),
        }
    }

    /// `(self - exact) / se`; infinite if the error vanishes but the values differ.
    pub fn z_score(&self, exact: f64) -> f64 {
        let diff = self.mean - exact;
        if self.se > 0.0 {
            diff / self.se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainEstimates {
    pub m2: Estimate,
    /// `<delta(s_i, s_j)>` per probe pair.
    pub same: Vec<Estimate>,
}

/// Runs `sweep` on a random start and records `M^2` and the probe
/// coincidences after every sweep.
pub fn measure_chain<F>(
    k: usize,
    plan: &ChainPlan,
    probes: &[(usize, usize)],
    rng: &mut SimRng,
    mut sweep: F,
) -> Result<ChainEstimates>
where
    F: FnMut(&mut SentenceState, &mut SimRng),
{
    plan.validate()?;
    let symbols: Vec<u16> = (0..plan.sites)
        .map(|_| rng.random_range(0..k as u16))
        .collect();
    let mut state = SentenceState::from_symbols(&symbols)?;
    for _ in 0..plan.burn_in_sweeps {
        sweep(&mut state, rng);
    }
    let per_batch = plan.sweeps / plan.batches;
    let mut m2_batches = Vec::with_capacity(plan.batches as usize);
    let mut same_batches = vec![Vec::with_capacity(plan.batches as usize); probes.len()];
    for _ in 0..plan.batches {
        let mut m2 = 0.0;
        let mut same = vec![0u64; probes.len()];
        for _ in 0..per_batch {
            sweep(&mut state, rng);
            let m = magnetization(&state, k);
            m2 += m * m;
            for (c, &(i, j)) in same.iter_mut().zip(probes) {
                *c += u64::from(state.symbol(i) == state.symbol(j));
            }
        }
        m2_batches.push(m2 / per_batch as f64);
        for (b, c) in same_batches.iter_mut().zip(same) {
            b.push(c as f64 / per_batch as f64);
        }
    }
    Ok(ChainEstimates {
        m2: Estimate::from_batches(&m2_batches),
        same: same_batches
            .iter()
            .map(|b| Estimate::from_batches(b))
            .collect(),
    })
}

/// The engine's context move with growth disabled.
pub fn sample_equilibrium_chain(
    params: &ModelParams,
    plan: &ChainPlan,
    probes: &[(usize, usize)],
    seed: u64,
) -> Result<ChainEstimates> {
    params.validate()?;
    let dynamics = Dynamics::new(*params);
    let mut rng = substream(seed, 0);
    measure_chain(params.k, plan, probes, &mut rng, |state, rng| {
        dynamics.context_sweep(state, rng);
    })
}
