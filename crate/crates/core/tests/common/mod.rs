//! Property suite over the observable identities, shared by the `properties`
//! and `acceptance` test targets.

#![allow(dead_code)]

use csrlm_core::observables::{
    binder, magnetization_from_counts, simplex_dot, MomentAccumulator, SampleObservation,
    SimplexBasis,
};
use csrlm_core::SentenceState;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Property = fn(&mut TestRunner) -> Result<(), String>;

/// Every property with its name, in a fixed order.
pub const PROPERTIES: [(&str, Property); 7] = [
    (
        "simplex vectors are unit, equiangular and sum to zero",
        simplex_invariants,
    ),
    ("count-based M equals vector-based M", count_matches_vector),
    (
        "M is invariant under symbol relabeling",
        relabeling_invariance,
    ),
    (
        "Binder parameter of a delta distribution is 1",
        binder_delta,
    ),
    (
        "Binder parameter of an isotropic Gaussian is 0",
        binder_gaussian,
    ),
    (
        "accumulator merge is associative and matches sequential pushes",
        merge_associative,
    ),
    (
        "M is 1 for monochrome and 0 for uniform counts",
        magnetization_extremes,
    ),
];

pub fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(
            proptest::test_runner::RngAlgorithm::ChaCha,
        ),
    )
}

fn report<T: std::fmt::Debug>(
    result: Result<(), proptest::test_runner::TestError<T>>,
) -> Result<(), String> {
    result.map_err(|e| e.to_string())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

fn observation(k: usize, m: f64, i: u16, j: u16, counts: Vec<u64>) -> SampleObservation {
    debug_assert_eq!(counts.len(), k);
    SampleObservation {
        magnetization: m,
        probe_i: i,
        probe_j: j,
        counts,
    }
}

pub fn simplex_invariants(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = (2usize..=512).prop_flat_map(|k| (Just(k), 0..k, 0..k));
    report(runner.run(&strategy, |(k, a, b)| {
        let basis = SimplexBasis::new(k);
        let dot: f64 = basis
            .vector(a)
            .iter()
            .zip(basis.vector(b))
            .map(|(x, y)| x * y)
            .sum();
        ensure((dot - simplex_dot(a, b, k)).abs() < 1e-10, || {
            format!(
                "K={k}: e_{a}.e_{b} = {dot}, expected {}",
                simplex_dot(a, b, k)
            )
        })?;
        let mut sum = vec![0.0; k - 1];
        for v in basis.vectors() {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
        }
        let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
        ensure(norm < 1e-9, || format!("K={k}: |sum e_k| = {norm}"))
    }))
}

fn sentence(k: usize) -> impl Strategy<Value = (usize, Vec<u16>)> {
    (Just(k), prop::collection::vec(0..k as u16, 1..300))
}

pub fn count_matches_vector(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = (2usize..=64).prop_flat_map(sentence);
    report(runner.run(&strategy, |(k, symbols)| {
        let state = SentenceState::from_symbols(&symbols).unwrap();
        let from_counts = magnetization_from_counts(&state.symbol_counts(k));
        let explicit = SimplexBasis::new(k).magnetization_explicit(symbols.iter().copied());
        ensure((from_counts - explicit).abs() < 1e-10, || {
            format!("K={k}: counts give {from_counts}, vectors give {explicit}")
        })
    }))
}

pub fn relabeling_invariance(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = (2usize..=32).prop_flat_map(|k| {
        (
            sentence(k),
            Just((0..k as u16).collect::<Vec<_>>()).prop_shuffle(),
        )
    });
    report(runner.run(&strategy, |((k, symbols), perm)| {
        let relabeled: Vec<u16> = symbols.iter().map(|&s| perm[usize::from(s)]).collect();
        let a = magnetization_from_counts(
            &SentenceState::from_symbols(&symbols)
                .unwrap()
                .symbol_counts(k),
        );
        let b = magnetization_from_counts(
            &SentenceState::from_symbols(&relabeled)
                .unwrap()
                .symbol_counts(k),
        );
        ensure((a - b).abs() < 1e-12, || {
            format!("K={k}: {a} vs {b} after relabeling")
        })
    }))
}

pub fn binder_delta(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = (2usize..=64, 0.01f64..=1.0, 2u64..200);
    report(runner.run(&strategy, |(k, m, n)| {
        let mut acc = MomentAccumulator::new(k);
        for _ in 0..n {
            acc.push(&observation(k, m, 0, 0, vec![0; k]));
        }
        let u = binder(&acc, k).unwrap();
        ensure((u - 1.0).abs() < 1e-9, || format!("K={k} M={m}: U = {u}"))
    }))
}

/// Samples `M = |v|` for `v` an isotropic Gaussian in `K - 1` dimensions.
/// Fixed seeds, so this runs once per alphabet size rather than per case.
pub fn binder_gaussian(_: &mut TestRunner) -> Result<(), String> {
    const SAMPLES: u64 = 400_000;
    for (idx, k) in [2usize, 3, 5, 20].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7 + idx as u64);
        let mut acc = MomentAccumulator::new(k);
        let mut normal = || {
            let u1: f64 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        };
        for _ in 0..SAMPLES {
            let r2: f64 = (0..k - 1).map(|_| normal().powi(2)).sum();
            acc.push(&observation(k, 0.1 * r2.sqrt(), 0, 0, vec![0; k]));
        }
        let u = binder(&acc, k).map_err(|e| e.to_string())?;
        if u.abs() > 0.02 {
            return Err(format!("K={k}: Gaussian Binder parameter {u}"));
        }
    }
    Ok(())
}

fn observations(k: usize) -> impl Strategy<Value = Vec<SampleObservation>> {
    let one = (
        0.0f64..=1.0,
        0..k as u16,
        0..k as u16,
        prop::collection::vec(0u64..20, k),
    )
        .prop_map(move |(m, i, j, counts)| observation(k, m, i, j, counts));
    prop::collection::vec(one, 3..60)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn same_accumulator(a: &MomentAccumulator, b: &MomentAccumulator) -> bool {
    a.n() == b.n()
        && a.pair_counts() == b.pair_counts()
        && a.symbol_counts() == b.symbol_counts()
        && a.histogram() == b.histogram()
        && close(a.mean_m(), b.mean_m())
        && close(a.mean_m2(), b.mean_m2())
        && close(a.mean_m4(), b.mean_m4())
}

pub fn merge_associative(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = (2usize..=8)
        .prop_flat_map(|k| (Just(k), observations(k)))
        .prop_flat_map(|(k, obs)| {
            let len = obs.len();
            (Just(k), Just(obs), 0..=len, 0..=len)
        });
    report(runner.run(&strategy, |(k, obs, x, y)| {
        let (lo, hi) = (x.min(y), x.max(y));
        let shard = |range: &[SampleObservation]| {
            let mut acc = MomentAccumulator::new(k);
            range.iter().for_each(|o| acc.push(o));
            acc
        };
        let (a, b, c) = (shard(&obs[..lo]), shard(&obs[lo..hi]), shard(&obs[hi..]));
        let mut left = a.clone();
        left.merge(&b).unwrap();
        left.merge(&c).unwrap();
        let mut bc = b.clone();
        bc.merge(&c).unwrap();
        let mut right = a.clone();
        right.merge(&bc).unwrap();
        let sequential = shard(&obs);
        ensure(same_accumulator(&left, &right), || {
            "(a+b)+c differs from a+(b+c)".into()
        })?;
        ensure(same_accumulator(&left, &sequential), || {
            "merged shards differ from one pass".into()
        })
    }))
}

pub fn magnetization_extremes(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = (2usize..=128, 1u64..50, 1u64..50);
    report(runner.run(&strategy, |(k, per_symbol, total)| {
        let mut mono = vec![0; k];
        mono[0] = total;
        let uniform = vec![per_symbol; k];
        let m1 = magnetization_from_counts(&mono);
        let m0 = magnetization_from_counts(&uniform);
        ensure((m1 - 1.0).abs() < 1e-12 && m0.abs() < 1e-6, || {
            format!("K={k}: monochrome M = {m1}, uniform M = {m0}")
        })
    }))
}
