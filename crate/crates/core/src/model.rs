//! Parameters, sentence configurations and the three production-rule
//! primitives of the grammar:
//!
//! ```text
//!   X       -> x          probability q t         (terminate)
//!   X       -> Y Z        probability q (1 - t)   (branch)
//!   L X R   -> L Y R      probability 1 - q       (context rewrite, Metropolis)
//! ```
//!
//! Symbols are stored zero-based (`0..K`); the physical Potts value is
//! `symbol + 1`. A terminal `a_k` and a non-terminal `A_k` carry the same
//! symbol, only the `terminal` flag differs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Full parameter set of the grammar and of the Metropolis rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Alphabet size K.
    #[serde(rename = "K")]
    pub k: usize,
    /// Coupling constant J.
    #[serde(rename = "J")]
    pub coupling: f64,
    /// Rule-mix probability q (growth vs context rewrite).
    pub q: f64,
    /// Termination bias t.
    pub t: f64,
    /// Child-diversity parameter of the branch rule.
    pub epsilon: f64,
    /// Temperature k_B T.
    #[serde(rename = "kT")]
    pub kt: f64,
}

impl ModelParams {
    pub fn new(k: usize, coupling: f64, q: f64, t: f64, epsilon: f64, kt: f64) -> Result<Self> {
        let params = Self {
            k,
            coupling,
            q,
            t,
            epsilon,
            kt,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
            Error::InvalidParameter {
                field,
                reason: reason.into(),
            }
        }
        if self.k == 0 || self.k > usize::from(u16::MAX) {
            return Err(invalid(
                "K",
                format!("must be in 1..={}, got {}", u16::MAX, self.k),
            ));
        }
        if !(self.coupling.is_finite() && self.coupling > 0.0) {
            return Err(invalid(
                "J",
                format!("must be finite and > 0, got {}", self.coupling),
            ));
        }
        for (field, value) in [("q", self.q), ("t", self.t), ("epsilon", self.epsilon)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(invalid(field, format!("must lie in [0, 1], got {value}")));
            }
        }
        if !(self.kt.is_finite() && self.kt > 0.0) {
            return Err(invalid(
                "kT",
                format!("must be finite and > 0, got {}", self.kt),
            ));
        }
        Ok(())
    }

    /// Probabilities of (terminate, branch, context). They sum to one.
    pub fn rule_probabilities(&self) -> [f64; 3] {
        let terminal = self.q * self.t;
        let branch = self.q - terminal;
        [terminal, branch, 1.0 - self.q]
    }

    /// Probability that a branch child keeps the parent symbol.
    pub fn p_same_child(&self) -> f64 {
        1.0 - (self.k as f64 - 1.0) * self.epsilon / self.k as f64
    }

    /// Probability that a branch child takes one specific other symbol.
    pub fn p_each_other_child(&self) -> f64 {
        self.epsilon / self.k as f64
    }
}

/// One cell of a sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymbolCell {
    pub symbol: u16,
    pub terminal: bool,
}

impl SymbolCell {
    pub fn nonterminal(symbol: u16) -> Self {
        Self {
            symbol,
            terminal: false,
        }
    }

    pub fn terminal(symbol: u16) -> Self {
        Self {
            symbol,
            terminal: true,
        }
    }
}

/// An ordered sentence together with the sorted positions of its
/// non-terminal cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceState {
    cells: Vec<SymbolCell>,
    nonterminal: Vec<u32>,
}

impl SentenceState {
    /// A sentence made of a single non-terminal.
    pub fn start(symbol: u16) -> Self {
        Self {
            cells: vec![SymbolCell::nonterminal(symbol)],
            nonterminal: vec![0],
        }
    }

    pub fn from_cells(cells: Vec<SymbolCell>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidParameter {
                field: "cells",
                reason: "a sentence has at least one cell".into(),
            });
        }
        let nonterminal = cells
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.terminal)
            .map(|(i, _)| i as u32)
            .collect();
        Ok(Self { cells, nonterminal })
    }

    /// All-non-terminal sentence with the given symbols.
    pub fn from_symbols(symbols: &[u16]) -> Result<Self> {
        Self::from_cells(
            symbols
                .iter()
                .map(|&s| SymbolCell::nonterminal(s))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[SymbolCell] {
        &self.cells
    }

    pub fn symbol(&self, site: usize) -> u16 {
        self.cells[site].symbol
    }

    pub fn symbols(&self) -> impl ExactSizeIterator<Item = u16> + '_ {
        self.cells.iter().map(|c| c.symbol)
    }

    pub fn nonterminal_sites(&self) -> &[u32] {
        &self.nonterminal
    }

    pub fn nonterminal_count(&self) -> usize {
        self.nonterminal.len()
    }

    /// True once every cell is terminal.
    pub fn is_complete(&self) -> bool {
        self.nonterminal.is_empty()
    }

    /// Occurrence count of every symbol `0..k`.
    pub fn symbol_counts(&self, k: usize) -> Vec<u64> {
        let mut counts = vec![0u64; k];
        for c in &self.cells {
            counts[usize::from(c.symbol)] += 1;
        }
        counts
    }

    /// Rewrites a non-terminal cell in place.
    pub(crate) fn set_symbol(&mut self, site: usize, symbol: u16) {
        debug_assert!(!self.cells[site].terminal);
        self.cells[site].symbol = symbol;
    }

    /// Freezes the non-terminal at `site`; its symbol is unchanged.
    pub(crate) fn terminate(&mut self, site: usize) {
        debug_assert!(!self.cells[site].terminal);
        self.cells[site].terminal = true;
        let idx = self
            .nonterminal
            .binary_search(&(site as u32))
            .expect("terminated site must be non-terminal");
        self.nonterminal.remove(idx);
    }

    /// Replaces the non-terminal at `site` with the pair `(left, right)`.
    pub(crate) fn branch(&mut self, site: usize, left: u16, right: u16) {
        debug_assert!(!self.cells[site].terminal);
        self.cells[site].symbol = left;
        self.cells.insert(site + 1, SymbolCell::nonterminal(right));
        let idx = self
            .nonterminal
            .binary_search(&(site as u32))
            .expect("branched site must be non-terminal");
        for pos in &mut self.nonterminal[idx + 1..] {
            *pos += 1;
        }
        self.nonterminal.insert(idx + 1, site as u32 + 1);
    }

    pub(crate) fn truncate(&mut self, len: usize) {
        self.cells.truncate(len);
        let keep = self.nonterminal.partition_point(|&p| (p as usize) < len);
        self.nonterminal.truncate(keep);
    }

    pub(crate) fn extend_from(&mut self, other: &SentenceState) {
        let offset = self.cells.len() as u32;
        self.cells.extend_from_slice(&other.cells);
        self.nonterminal
            .extend(other.nonterminal.iter().map(|p| p + offset));
    }
}

/// Which production rule was drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Terminal,
    Branch,
    Context,
}

/// A proposed context rewrite of the non-terminal at `site`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProposedFlip {
    pub site: usize,
    pub current: u16,
    pub proposed: u16,
}

impl ProposedFlip {
    pub fn new(state: &SentenceState, site: usize, proposed: u16) -> Result<Self> {
        let cell = state.cells.get(site).ok_or(Error::InvalidParameter {
            field: "site",
            reason: format!("site {site} outside sentence of length {}", state.len()),
        })?;
        if cell.terminal {
            return Err(Error::InvalidParameter {
                field: "site",
                reason: format!("cell {site} is terminal and cannot be rewritten"),
            });
        }
        if cell.symbol == proposed {
            return Err(Error::InvalidParameter {
                field: "proposed",
                reason: "proposed symbol equals the current one".into(),
            });
        }
        Ok(Self {
            site,
            current: cell.symbol,
            proposed,
        })
    }
}

pub fn sample_rule<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> RuleKind {
    let u: f64 = rng.random();
    let terminal = params.q * params.t;
    if u < terminal {
        RuleKind::Terminal
    } else if u < params.q {
        RuleKind::Branch
    } else {
        RuleKind::Context
    }
}

/// One child of the branch rule: the parent symbol with probability
/// `1 - (K-1) eps / K`, any specific other symbol with probability `eps / K`.
///
/// Drawn as "with probability eps resample uniformly over all K symbols",
/// which yields exactly those marginals. No randomness is consumed at eps = 0.
pub fn sample_child<R: Rng + ?Sized>(parent: u16, params: &ModelParams, rng: &mut R) -> u16 {
    if params.epsilon > 0.0 && rng.random::<f64>() < params.epsilon {
        rng.random_range(0..params.k as u16)
    } else {
        parent
    }
}

/// Both children of the branch rule, drawn independently.
pub fn sample_branch_children<R: Rng + ?Sized>(
    parent: u16,
    params: &ModelParams,
    rng: &mut R,
) -> (u16, u16) {
    let left = sample_child(parent, params, rng);
    let right = sample_child(parent, params, rng);
    (left, right)
}

/// Uniform draw among the `K - 1` symbols different from `current`.
pub fn sample_context_target<R: Rng + ?Sized>(
    current: u16,
    params: &ModelParams,
    rng: &mut R,
) -> u16 {
    debug_assert!(params.k >= 2);
    let r = rng.random_range(0..(params.k - 1) as u16);
    if r >= current {
        r + 1
    } else {
        r
    }
}

/// Number of neighbours of `site` carrying `symbol` (0, 1 or 2), free boundaries.
#[inline]
pub(crate) fn matching_neighbours(cells: &[SymbolCell], site: usize, symbol: u16) -> i32 {
    let mut n = 0;
    if site > 0 && cells[site - 1].symbol == symbol {
        n += 1;
    }
    if site + 1 < cells.len() && cells[site + 1].symbol == symbol {
        n += 1;
    }
    n
}

/// Energy change of a context rewrite; a missing neighbour contributes nothing.
pub fn delta_energy(state: &SentenceState, flip: &ProposedFlip, params: &ModelParams) -> f64 {
    let cells = &state.cells;
    let old = matching_neighbours(cells, flip.site, flip.current);
    let new = matching_neighbours(cells, flip.site, flip.proposed);
    params.coupling * f64::from(old - new)
}

/// Metropolis acceptance with probability `min(1, exp(-dE / kT))`.
/// Downhill and neutral moves consume no randomness.
pub fn metropolis_accept<R: Rng + ?Sized>(delta_e: f64, params: &ModelParams, rng: &mut R) -> bool {
    if delta_e <= 0.0 {
        return true;
    }
    rng.random::<f64>() < (-delta_e / params.kt).exp()
}

/// Total energy `-J sum_i delta(s_i, s_{i+1})` of a free chain.
pub fn chain_energy(symbols: &[u16], coupling: f64) -> f64 {
    let bonds = symbols.windows(2).filter(|w| w[0] == w[1]).count();
    -coupling * bonds as f64
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn rule_probabilities_sum_to_one(q in 0.0f64..=1.0, t in 0.0f64..=1.0) {
            let p = ModelParams::new(2, 1.0, q, t, 0.0, 1.0).unwrap();
            let probs = p.rule_probabilities();
            prop_assert!(probs.iter().all(|x| (0.0..=1.0).contains(x)));
            prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }

        #[test]
        fn child_distribution_normalised(k in 2usize..512, epsilon in 0.0f64..=1.0) {
            let p = ModelParams::new(k, 1.0, 0.5, 0.0, epsilon, 1.0).unwrap();
            let total = p.p_same_child() + (k as f64 - 1.0) * p.p_each_other_child();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn delta_energy_antisymmetric(
            symbols in proptest::collection::vec(0u16..4, 1..12),
            site_seed in any::<usize>(),
            proposed in 0u16..4,
        ) {
            let p = ModelParams::new(4, 1.3, 0.5, 0.0, 0.0, 1.0).unwrap();
            let site = site_seed % symbols.len();
            prop_assume!(symbols[site] != proposed);
            let s = SentenceState::from_symbols(&symbols).unwrap();
            let forward = ProposedFlip::new(&s, site, proposed).unwrap();
            let de = delta_energy(&s, &forward, &p);

            let mut flipped = symbols.clone();
            flipped[site] = proposed;
            let s2 = SentenceState::from_symbols(&flipped).unwrap();
            let back = ProposedFlip::new(&s2, site, symbols[site]).unwrap();
            prop_assert_eq!(de, -delta_energy(&s2, &back, &p));
            // Incremental value equals the full energy difference.
            let full = chain_energy(&flipped, 1.3) - chain_energy(&symbols, 1.3);
            prop_assert!((de - full).abs() < 1e-12);
        }
    }
}
