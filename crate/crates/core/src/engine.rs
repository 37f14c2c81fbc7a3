//! The stochastic generation loop.
//!
//! A step draws a rule, picks a non-terminal uniformly at random and applies
//! the rule there. Fixed-length runs (t = 0) grow a single sentence until it
//! reaches the target length; text streams (t > 0) chain complete sentences,
//! seeding each new sentence with the last symbol of the previous one.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    matching_neighbours, sample_branch_children, sample_context_target, sample_rule, ModelParams,
    RuleKind, SentenceState,
};
use crate::rng::substream;

/// How an ensemble is sampled at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingProtocol {
    /// Length at which t = 0 runs stop, window size of t > 0 streams.
    pub target_len: usize,
    /// Independent measurements per parameter point.
    pub samples: u64,
    /// Extra context-only attempts per site once the target length is reached.
    #[serde(default)]
    pub post_growth_sweeps: u32,
    pub seed: u64,
    /// Largest sentence a stream may grow; defaults to 64 x target_len.
    #[serde(default)]
    pub runaway_cap: Option<usize>,
}

impl SamplingProtocol {
    pub fn new(target_len: usize, samples: u64, seed: u64) -> Result<Self> {
        let protocol = Self {
            target_len,
            samples,
            post_growth_sweeps: 0,
            seed,
            runaway_cap: None,
        };
        protocol.validate()?;
        Ok(protocol)
    }

    pub fn with_post_growth_sweeps(mut self, sweeps: u32) -> Self {
        self.post_growth_sweeps = sweeps;
        self
    }

    pub fn with_runaway_cap(mut self, cap: usize) -> Self {
        self.runaway_cap = Some(cap);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_len < 2 {
            return Err(Error::InvalidParameter {
                field: "N",
                reason: format!("target length must be >= 2, got {}", self.target_len),
            });
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter {
                field: "samples",
                reason: "at least one sample is required".into(),
            });
        }
        Ok(())
    }

    pub fn runaway_cap(&self) -> usize {
        self.runaway_cap
            .unwrap_or_else(|| self.target_len.saturating_mul(64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    Emitted,
    Branched,
    FlipAccepted,
    FlipRejected,
    NoOp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub kind: StepKind,
    pub site: Option<usize>,
}

/// Parameters with the Metropolis acceptance factors cached.
///
/// `accept[d]` equals `exp(-(J * d) / kT)`, the same expression
/// [`crate::model::metropolis_accept`] evaluates, so both paths agree bit for bit.
#[derive(Debug, Clone, Copy)]
pub struct Dynamics {
    params: ModelParams,
    accept: [f64; 3],
}

impl Dynamics {
    pub fn new(params: ModelParams) -> Self {
        let factor = |d: f64| (-(params.coupling * d) / params.kt).exp();
        Self {
            params,
            accept: [1.0, factor(1.0), factor(2.0)],
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    #[inline]
    fn pick_site<R: Rng + ?Sized>(state: &SentenceState, rng: &mut R) -> usize {
        let sites = state.nonterminal_sites();
        sites[rng.random_range(0..sites.len())] as usize
    }

    /// One application of a sampled rule.
    ///
    /// # Panics
    /// If the sentence has no non-terminal cell.
    pub fn step<R: Rng + ?Sized>(&self, state: &mut SentenceState, rng: &mut R) -> StepOutcome {
        assert!(
            !state.is_complete(),
            "step called on a sentence without non-terminal cells"
        );
        match sample_rule(&self.params, rng) {
            RuleKind::Terminal => {
                let site = Self::pick_site(state, rng);
                state.terminate(site);
                StepOutcome {
                    kind: StepKind::Emitted,
                    site: Some(site),
                }
            }
            RuleKind::Branch => {
                let site = Self::pick_site(state, rng);
                let (left, right) = sample_branch_children(state.symbol(site), &self.params, rng);
                state.branch(site, left, right);
                StepOutcome {
                    kind: StepKind::Branched,
                    site: Some(site),
                }
            }
            RuleKind::Context => self.context_attempt(state, rng),
        }
    }

    /// Context rewrite at a uniformly chosen non-terminal.
    #[inline]
    pub fn context_attempt<R: Rng + ?Sized>(
        &self,
        state: &mut SentenceState,
        rng: &mut R,
    ) -> StepOutcome {
        if self.params.k < 2 || state.is_complete() {
            return StepOutcome {
                kind: StepKind::NoOp,
                site: None,
            };
        }
        let site = Self::pick_site(state, rng);
        let current = state.symbol(site);
        let proposed = sample_context_target(current, &self.params, rng);
        let cells = state.cells();
        let gain =
            matching_neighbours(cells, site, current) - matching_neighbours(cells, site, proposed);
        let accepted = gain <= 0 || rng.random::<f64>() < self.accept[gain as usize];
        if accepted {
            state.set_symbol(site, proposed);
        }
        StepOutcome {
            kind: if accepted {
                StepKind::FlipAccepted
            } else {
                StepKind::FlipRejected
            },
            site: Some(site),
        }
    }

    /// `state.len()` context-only attempts; growth stays disabled.
    /// Returns the number of accepted rewrites.
    pub fn context_sweep<R: Rng + ?Sized>(&self, state: &mut SentenceState, rng: &mut R) -> usize {
        (0..state.len())
            .filter(|_| self.context_attempt(state, rng).kind == StepKind::FlipAccepted)
            .count()
    }

    /// Grows a single sentence from one random non-terminal up to
    /// `protocol.target_len` cells, then applies the post-growth sweeps.
    pub fn generate_fixed_length<R: Rng + ?Sized>(
        &self,
        protocol: &SamplingProtocol,
        rng: &mut R,
    ) -> Result<SentenceState> {
        let target = protocol.target_len;
        let mut state = SentenceState::start(rng.random_range(0..self.params.k as u16));
        while state.len() < target {
            if state.is_complete() {
                return Err(Error::EarlyTermination {
                    length: state.len(),
                    target,
                });
            }
            self.step(&mut state, rng);
        }
        for _ in 0..u64::from(protocol.post_growth_sweeps) * target as u64 {
            if state.is_complete() {
                break;
            }
            self.context_attempt(&mut state, rng);
        }
        Ok(state)
    }

    /// Derives one sentence from `start` until every cell is terminal or
    /// the sentence outgrows `room` cells, whichever comes first.
    pub fn derive_sentence<R: Rng + ?Sized>(
        &self,
        start: u16,
        room: usize,
        cap: usize,
        rng: &mut R,
    ) -> Result<SentenceState> {
        let mut state = SentenceState::start(start);
        while !state.is_complete() && state.len() <= room {
            self.step(&mut state, rng);
            if state.len() > cap {
                return Err(Error::RunawayGrowth { cap });
            }
        }
        Ok(state)
    }

    /// Chains sentences into a text of `protocol.target_len` symbols.
    ///
    /// The first sentence starts from a uniformly random symbol, every later
    /// one from the last symbol of its predecessor. A sentence that outgrows
    /// the room left in the window is cut off at that moment.
    pub fn generate_text_stream<R: Rng + ?Sized>(
        &self,
        protocol: &SamplingProtocol,
        rng: &mut R,
    ) -> Result<SentenceState> {
        if self.params.t <= 0.0 {
            return Err(Error::InvalidParameter {
                field: "t",
                reason: "text streams need t > 0; use fixed-length generation".into(),
            });
        }
        let target = protocol.target_len;
        let cap = protocol.runaway_cap();
        let mut start = rng.random_range(0..self.params.k as u16);
        let mut stream: Option<SentenceState> = None;
        loop {
            let filled = stream.as_ref().map_or(0, SentenceState::len);
            let sentence = self.derive_sentence(start, target - filled, cap, rng)?;
            start = sentence.symbol(sentence.len() - 1);
            match stream.as_mut() {
                Some(s) => s.extend_from(&sentence),
                None => stream = Some(sentence),
            }
            let s = stream.as_mut().expect("stream initialised above");
            if s.len() >= target {
                s.truncate(target);
                return Ok(stream.expect("stream initialised above"));
            }
        }
    }

    /// Fixed-length path for t = 0, text stream otherwise.
    pub fn generate<R: Rng + ?Sized>(
        &self,
        protocol: &SamplingProtocol,
        rng: &mut R,
    ) -> Result<SentenceState> {
        if self.params.t > 0.0 {
            self.generate_text_stream(protocol, rng)
        } else {
            self.generate_fixed_length(protocol, rng)
        }
    }
}

/// Single step with freshly cached acceptance factors.
pub fn step<R: Rng + ?Sized>(
    state: &mut SentenceState,
    params: &ModelParams,
    rng: &mut R,
) -> StepOutcome {
    Dynamics::new(*params).step(state, rng)
}

pub fn generate_fixed_length<R: Rng + ?Sized>(
    params: &ModelParams,
    protocol: &SamplingProtocol,
    rng: &mut R,
) -> Result<SentenceState> {
    Dynamics::new(*params).generate_fixed_length(protocol, rng)
}

pub fn generate_text_stream<R: Rng + ?Sized>(
    params: &ModelParams,
    protocol: &SamplingProtocol,
    rng: &mut R,
) -> Result<SentenceState> {
    Dynamics::new(*params).generate_text_stream(protocol, rng)
}

/// Runs every sample of the ensemble on its own substream and maps the
/// final state through `observe`. Results come back in sample order, so any
/// sequential reduction over them is independent of the thread count.
pub fn map_ensemble<T, F>(
    params: &ModelParams,
    protocol: &SamplingProtocol,
    observe: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, SentenceState) -> T + Sync,
{
    params.validate()?;
    protocol.validate()?;
    let dynamics = Dynamics::new(*params);
    (0..protocol.samples)
        .into_par_iter()
        .map(|index| {
            let mut rng = substream(protocol.seed, index);
            dynamics
                .generate(protocol, &mut rng)
                .map(|state| observe(index, state))
        })
        .collect()
}

pub fn generate_ensemble(
    params: &ModelParams,
    protocol: &SamplingProtocol,
) -> Result<Vec<SentenceState>> {
    map_ensemble(params, protocol, |_, state| state)
}
