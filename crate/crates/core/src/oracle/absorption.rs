//! Exact outcome law of the generation process at toy scale.
//!
//! The reachable states are enumerated breadth-first from the `K` one-cell
//! starts and the absorption probabilities follow from one linear solve,
//! `(I - Q)^T v = pi_0`, `p = v^T R`, with `pi_0` uniform over the starts.
//!
//! For t = 0 a run is absorbed when the sentence reaches `max_len` cells,
//! matching fixed-length generation. For t > 0 a run is absorbed when every
//! cell is terminal; runs that would grow past `max_len` are counted as
//! truncation loss.

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, SentenceState, SymbolCell};

/// Largest transient state space solved densely.
pub const MAX_TRANSIENT_STATES: usize = 4096;

/// Truncation loss above which the distribution is rejected.
pub const TRUNCATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionDistribution {
    pub params: ModelParams,
    pub max_len: usize,
    /// Probability of every reachable final sentence.
    pub outcomes: BTreeMap<Vec<SymbolCell>, f64>,
    /// Probability of growing past `max_len` (t > 0 only).
    pub truncation_loss: f64,
    pub transient_states: usize,
}

impl AbsorptionDistribution {
    pub fn probability(&self, cells: &[SymbolCell]) -> f64 {
        self.outcomes.get(cells).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.outcomes.values().sum()
    }
}

enum Target {
    Transient(usize),
    Outcome(Vec<SymbolCell>),
    Lost,
}

/// Same as [`absorption_distribution_with_tolerance`] at [`TRUNCATION_TOLERANCE`].
pub fn absorption_distribution(
    params: &ModelParams,
    max_len: usize,
) -> Result<AbsorptionDistribution> {
    absorption_distribution_with_tolerance(params, max_len, TRUNCATION_TOLERANCE)
}

pub fn absorption_distribution_with_tolerance(
    params: &ModelParams,
    max_len: usize,
    tolerance: f64,
) -> Result<AbsorptionDistribution> {
    params.validate()?;
    if max_len < 2 {
        return Err(Error::InvalidParameter {
            field: "N_max",
            reason: format!("need N_max >= 2, got {max_len}"),
        });
    }
    if params.q <= 0.0 {
        return Err(Error::InvalidParameter {
            field: "q",
            reason: "with q = 0 the process never grows and is never absorbed".into(),
        });
    }
    let fixed_length = params.t == 0.0;
    let k = params.k;
    let [p_term, p_branch, p_context] = params.rule_probabilities();
    let p_same = params.p_same_child();
    let p_other = params.p_each_other_child();
    let child = |parent: u16, c: u16| if c == parent { p_same } else { p_other };

    let mut index: HashMap<Vec<SymbolCell>, usize> = HashMap::new();
    let mut states: Vec<Vec<SymbolCell>> = Vec::new();
    let mut queue = VecDeque::new();
    for s in 0..k as u16 {
        let cells = vec![SymbolCell::nonterminal(s)];
        index.insert(cells.clone(), states.len());
        queue.push_back(states.len());
        states.push(cells);
    }

    let mut transitions: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut absorbed: Vec<Vec<(Vec<SymbolCell>, f64)>> = Vec::new();
    let mut lost: Vec<f64> = Vec::new();

    while let Some(id) = queue.pop_front() {
        let state = SentenceState::from_cells(states[id].clone())?;
        let sites: Vec<usize> = state
            .nonterminal_sites()
            .iter()
            .map(|&s| s as usize)
            .collect();
        let per_site = 1.0 / sites.len() as f64;
        let mut moves: Vec<(SentenceState, f64)> = Vec::new();
        let mut self_loop = 0.0;

        for &site in &sites {
            if p_term > 0.0 {
                let mut next = state.clone();
                next.terminate(site);
                moves.push((next, p_term * per_site));
            }
            if p_branch > 0.0 {
                let parent = state.symbol(site);
                for left in 0..k as u16 {
                    for right in 0..k as u16 {
                        let p = child(parent, left) * child(parent, right);
                        if p > 0.0 {
                            let mut next = state.clone();
                            next.branch(site, left, right);
                            moves.push((next, p_branch * per_site * p));
                        }
                    }
                }
            }
            if p_context > 0.0 {
                if k < 2 {
                    self_loop += p_context * per_site;
                    continue;
                }
                let current = state.symbol(site);
                let cells = state.cells();
                for proposed in (0..k as u16).filter(|&s| s != current) {
                    let count = |sym: u16| {
                        i32::from(site > 0 && cells[site - 1].symbol == sym)
                            + i32::from(site + 1 < cells.len() && cells[site + 1].symbol == sym)
                    };
                    let delta_e = params.coupling * f64::from(count(current) - count(proposed));
                    let accept = if delta_e <= 0.0 {
                        1.0
                    } else {
                        (-delta_e / params.kt).exp()
                    };
                    let p = p_context * per_site / (k - 1) as f64;
                    let mut next = state.clone();
                    next.set_symbol(site, proposed);
                    moves.push((next, p * accept));
                    self_loop += p * (1.0 - accept);
                }
            }
        }

        let mut row = Vec::new();
        let mut out = Vec::new();
        let mut lost_here = 0.0;
        if self_loop > 0.0 {
            row.push((id, self_loop));
        }
        for (next, p) in moves {
            let target = if fixed_length && next.len() == max_len {
                Target::Outcome(next.cells().to_vec())
            } else if !fixed_length && next.len() > max_len {
                Target::Lost
            } else if !fixed_length && next.is_complete() {
                Target::Outcome(next.cells().to_vec())
            } else {
                let cells = next.cells().to_vec();
                let id = match index.get(&cells) {
                    Some(&id) => id,
                    None => {
                        let id = states.len();
                        if id >= MAX_TRANSIENT_STATES {
                            return Err(Error::TooLarge {
                                states: id as u64 + 1,
                                cap: MAX_TRANSIENT_STATES as u64,
                            });
                        }
                        index.insert(cells.clone(), id);
                        states.push(cells);
                        queue.push_back(id);
                        id
                    }
                };
                Target::Transient(id)
            };
            match target {
                Target::Transient(to) => row.push((to, p)),
                Target::Outcome(cells) => out.push((cells, p)),
                Target::Lost => lost_here += p,
            }
        }
        if transitions.len() <= id {
            transitions.resize_with(id + 1, Vec::new);
            absorbed.resize_with(id + 1, Vec::new);
            lost.resize(id + 1, 0.0);
        }
        transitions[id] = row;
        absorbed[id] = out;
        lost[id] = lost_here;
    }

    // Expected visits v solve (I - Q)^T v = pi_0.
    let n = states.len();
    let mut a = DMatrix::<f64>::identity(n, n);
    for (from, row) in transitions.iter().enumerate() {
        for &(to, p) in row {
            a[(to, from)] -= p;
        }
    }
    let mut pi0 = DVector::<f64>::zeros(n);
    for s in 0..k {
        pi0[s] = 1.0 / k as f64;
    }
    let visits = a.lu().solve(&pi0).ok_or_else(|| Error::InvalidParameter {
        field: "params",
        reason: "absorption equations are singular".into(),
    })?;

    let mut outcomes: BTreeMap<Vec<SymbolCell>, f64> = BTreeMap::new();
    let mut truncation_loss = 0.0;
    for (from, out) in absorbed.iter().enumerate() {
        for (cells, p) in out {
            *outcomes.entry(cells.clone()).or_insert(0.0) += visits[from] * p;
        }
        truncation_loss += visits[from] * lost[from];
    }
    if truncation_loss > tolerance {
        return Err(Error::TruncationLoss {
            lost: truncation_loss,
            tolerance,
        });
    }
    Ok(AbsorptionDistribution {
        params: *params,
        max_len,
        outcomes,
        truncation_loss,
        transient_states: n,
    })
}
