//! Ensemble statistics of generated sentences.
//!
//! The order parameter embeds symbol `k` as the simplex vector `e_k` in
//! `K - 1` dimensions: unit length, zero sum, and `e_k . e_l = -1/(K-1)` for
//! `k != l`. Everything below only needs those inner products, so most
//! quantities are evaluated from symbol counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SentenceState;

/// Number of magnetization histogram bins on `[0, 1]` (width 0.02).
pub const HISTOGRAM_BINS: usize = 50;

/// Explicit simplex vectors `e_0 .. e_{K-1}`, built from a Helmert basis of
/// the hyperplane orthogonal to `(1, .., 1)`.
#[derive(Debug, Clone)]
pub struct SimplexBasis {
    k: usize,
    vectors: Vec<Vec<f64>>,
}

impl SimplexBasis {
    pub fn new(k: usize) -> Self {
        assert!(k >= 2, "simplex basis needs K >= 2");
        let scale = (k as f64 / (k as f64 - 1.0)).sqrt();
        let vectors = (0..k)
            .map(|sym| {
                (1..k)
                    .map(|j| {
                        let norm = ((j * (j + 1)) as f64).sqrt();
                        let h = match sym.cmp(&j) {
                            std::cmp::Ordering::Less => 1.0,
                            std::cmp::Ordering::Equal => -(j as f64),
                            std::cmp::Ordering::Greater => 0.0,
                        };
                        scale * h / norm
                    })
                    .collect()
            })
            .collect();
        Self { k, vectors }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vector(&self, symbol: usize) -> &[f64] {
        &self.vectors[symbol]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// `|| (1/N) sum_i e_{s_i} ||` evaluated with explicit vectors.
    pub fn magnetization_explicit(&self, symbols: impl IntoIterator<Item = u16>) -> f64 {
        let mut sum = vec![0.0; self.k - 1];
        let mut n = 0usize;
        for s in symbols {
            for (acc, x) in sum.iter_mut().zip(self.vector(usize::from(s))) {
                *acc += x;
            }
            n += 1;
        }
        sum.iter()
            .map(|x| (x / n as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// `e_a . e_b` = `(K delta(a,b) - 1) / (K - 1)`.
pub fn simplex_dot(a: usize, b: usize, k: usize) -> f64 {
    if a == b {
        1.0
    } else {
        -1.0 / (k as f64 - 1.0)
    }
}

/// Magnetization from symbol counts:
/// `sqrt(max(0, (K sum_k n_k^2 / N^2 - 1) / (K - 1)))`.
pub fn magnetization_from_counts(counts: &[u64]) -> f64 {
    let k = counts.len() as f64;
    let n: u64 = counts.iter().sum();
    if counts.len() < 2 {
        return 1.0;
    }
    let n = n as f64;
    let sum_sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    ((k * sum_sq / (n * n) - 1.0) / (k - 1.0)).max(0.0).sqrt()
}

pub fn magnetization(state: &SentenceState, k: usize) -> f64 {
    magnetization_from_counts(&state.symbol_counts(k))
}

/// Probe sites of the two-point functions, 0-based: `(floor(N/4), floor(3N/4) - 1)`.
pub fn probe_sites(n: usize) -> (usize, usize) {
    (n / 4, (3 * n / 4).saturating_sub(1))
}

/// Histogram bin of `m`; `[0.98, 1.00]` is the last bin.
pub fn histogram_bin(m: f64) -> usize {
    ((m * HISTOGRAM_BINS as f64).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}

/// What a single sample contributes to an accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleObservation {
    pub magnetization: f64,
    pub probe_i: u16,
    pub probe_j: u16,
    pub counts: Vec<u64>,
}

impl SampleObservation {
    pub fn from_state(state: &SentenceState, k: usize) -> Self {
        let counts = state.symbol_counts(k);
        let (i, j) = probe_sites(state.len());
        Self {
            magnetization: magnetization_from_counts(&counts),
            probe_i: state.symbol(i),
            probe_j: state.symbol(j),
            counts,
        }
    }
}

/// Streaming moments of M plus the counts behind the two-point functions,
/// the Zipf table and the magnetization histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentAccumulator {
    k: usize,
    n: u64,
    sum_m: f64,
    sum_m2: f64,
    sum_m4: f64,
    pair_counts: Vec<u64>,
    symbol_counts: Vec<u64>,
    histogram: Vec<u64>,
}

impl MomentAccumulator {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            n: 0,
            sum_m: 0.0,
            sum_m2: 0.0,
            sum_m4: 0.0,
            pair_counts: vec![0; k * k],
            symbol_counts: vec![0; k],
            histogram: vec![0; HISTOGRAM_BINS],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn push(&mut self, obs: &SampleObservation) {
        let m = obs.magnetization;
        let m2 = m * m;
        self.n += 1;
        self.sum_m += m;
        self.sum_m2 += m2;
        self.sum_m4 += m2 * m2;
        self.pair_counts[usize::from(obs.probe_i) * self.k + usize::from(obs.probe_j)] += 1;
        for (total, c) in self.symbol_counts.iter_mut().zip(&obs.counts) {
            *total += c;
        }
        self.histogram[histogram_bin(m)] += 1;
    }

    pub fn push_state(&mut self, state: &SentenceState) {
        self.push(&SampleObservation::from_state(state, self.k));
    }

    /// Adds another shard. Counts merge exactly, moment sums up to rounding.
    pub fn merge(&mut self, other: &MomentAccumulator) -> Result<()> {
        if other.k != self.k {
            return Err(Error::ParameterMismatch(format!(
                "cannot merge accumulators for K = {} and K = {}",
                self.k, other.k
            )));
        }
        self.n += other.n;
        self.sum_m += other.sum_m;
        self.sum_m2 += other.sum_m2;
        self.sum_m4 += other.sum_m4;
        for (a, b) in self.pair_counts.iter_mut().zip(&other.pair_counts) {
            *a += b;
        }
        for (a, b) in self.symbol_counts.iter_mut().zip(&other.symbol_counts) {
            *a += b;
        }
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += b;
        }
        Ok(())
    }

    pub fn mean_m(&self) -> f64 {
        self.sum_m / self.n as f64
    }

    pub fn mean_m2(&self) -> f64 {
        self.sum_m2 / self.n as f64
    }

    pub fn mean_m4(&self) -> f64 {
        self.sum_m4 / self.n as f64
    }

    /// Standard error of the mean of M (unbiased sample variance).
    pub fn se_m(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        let n = self.n as f64;
        let var = ((self.sum_m2 - self.sum_m * self.sum_m / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }

    /// Joint count of `(s_i, s_j) = (a, b)` at the probe sites.
    pub fn pair_count(&self, a: usize, b: usize) -> u64 {
        self.pair_counts[a * self.k + b]
    }

    pub fn pair_counts(&self) -> &[u64] {
        &self.pair_counts
    }

    pub fn symbol_counts(&self) -> &[u64] {
        &self.symbol_counts
    }

    pub fn histogram(&self) -> &[u64] {
        &self.histogram
    }

    fn marginals(&self) -> (Vec<u64>, Vec<u64>) {
        let mut left = vec![0u64; self.k];
        let mut right = vec![0u64; self.k];
        for a in 0..self.k {
            for b in 0..self.k {
                let c = self.pair_count(a, b);
                left[a] += c;
                right[b] += c;
            }
        }
        (left, right)
    }
}

/// `N (<M^2> - <M>^2)`.
pub fn susceptibility(acc: &MomentAccumulator, n: usize) -> Result<f64> {
    if acc.n < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            have: acc.n,
        });
    }
    let mean = acc.mean_m();
    Ok(n as f64 * (acc.mean_m2() - mean * mean).max(0.0))
}

/// `N <M^2>`, the scaling form used in the collapse.
pub fn chi_tilde(acc: &MomentAccumulator, n: usize) -> f64 {
    n as f64 * acc.mean_m2()
}

/// `-((K-1)/2) (<M^4>/<M^2>^2 - (K+1)/(K-1))`: 1 for a delta distribution,
/// 0 for an isotropic Gaussian order parameter.
pub fn binder(acc: &MomentAccumulator, k: usize) -> Result<f64> {
    if acc.n < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            have: acc.n,
        });
    }
    let m2 = acc.mean_m2();
    if m2 <= 0.0 {
        return Err(Error::DegenerateMoments);
    }
    let k = k as f64;
    Ok(-((k - 1.0) / 2.0) * (acc.mean_m4() / (m2 * m2) - (k + 1.0) / (k - 1.0)))
}

/// `<e_{s_i} . e_{s_j}>` at the probe sites.
pub fn correlation(acc: &MomentAccumulator) -> f64 {
    let k = acc.k;
    let diagonal: u64 = (0..k).map(|a| acc.pair_count(a, a)).sum();
    let p_same = diagonal as f64 / acc.n as f64;
    (k as f64 * p_same - 1.0) / (k as f64 - 1.0)
}

/// Standard error of [`correlation`] over the samples.
pub fn correlation_se(acc: &MomentAccumulator) -> f64 {
    if acc.n < 2 {
        return f64::NAN;
    }
    let k = acc.k as f64;
    let g = correlation(acc);
    let off = -1.0 / (k - 1.0);
    let diagonal: u64 = (0..acc.k).map(|a| acc.pair_count(a, a)).sum();
    let p_same = diagonal as f64 / acc.n as f64;
    let second = p_same + (1.0 - p_same) * off * off;
    let n = acc.n as f64;
    ((second - g * g).max(0.0) * n / (n - 1.0) / n).sqrt()
}

/// Connected correlation `<e_i . e_j> - <e_i> . <e_j>` with the single-site
/// means estimated from the probe marginals.
pub fn connected_correlation(acc: &MomentAccumulator) -> f64 {
    let (left, right) = acc.marginals();
    let n = acc.n as f64;
    let k = acc.k as f64;
    let overlap: f64 = left
        .iter()
        .zip(&right)
        .map(|(&a, &b)| (a as f64 / n) * (b as f64 / n))
        .sum();
    correlation(acc) - (k * overlap - 1.0) / (k - 1.0)
}

/// Plug-in mutual information (nats) between the two probe sites.
pub fn mutual_information(acc: &MomentAccumulator) -> f64 {
    if acc.n <= 1 {
        return 0.0;
    }
    let (left, right) = acc.marginals();
    let n = acc.n as f64;
    let mut info = 0.0;
    for a in 0..acc.k {
        for b in 0..acc.k {
            let c = acc.pair_count(a, b);
            if c == 0 {
                continue;
            }
            let joint = c as f64 / n;
            let indep = (left[a] as f64 / n) * (right[b] as f64 / n);
            info += joint * (joint / indep).ln();
        }
    }
    info.max(0.0)
}

/// Rank-frequency table of the symbol totals `counts` (1-based ranks,
/// descending frequency, ties by symbol index). Unused symbols are omitted.
pub fn zipf_from_counts(counts: &[u64]) -> Vec<(usize, f64)> {
    let total: u64 = counts.iter().sum();
    let mut used: Vec<(usize, u64)> = counts
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .collect();
    used.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    used.into_iter()
        .enumerate()
        .map(|(r, (_, c))| (r + 1, c as f64 / total as f64))
        .collect()
}

/// Rank-frequency table of all symbols of all sentences in `corpus`.
pub fn zipf_ranks(corpus: &[SentenceState]) -> Vec<(usize, f64)> {
    let k = corpus
        .iter()
        .flat_map(|s| s.symbols())
        .max()
        .map_or(0, |m| usize::from(m) + 1);
    let mut counts = vec![0u64; k];
    for state in corpus {
        for s in state.symbols() {
            counts[usize::from(s)] += 1;
        }
    }
    zipf_from_counts(&counts)
}
