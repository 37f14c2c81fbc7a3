use csrlm_core::engine::{generate_ensemble, SamplingProtocol};
use csrlm_core::observables::magnetization;
use csrlm_core::ModelParams;
use proptest::prelude::*;

/// Chi-square 0.999 quantile with 4 degrees of freedom.
const CHI2_4_999: f64 = 18.467;

#[test]
fn free_branching_gives_uniform_marginals() {
    let k = 5;
    let params = ModelParams::new(k, 1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
    let corpus = generate_ensemble(&params, &SamplingProtocol::new(64, 2000, 11).unwrap()).unwrap();
    let mut counts = vec![0u64; k];
    for s in &corpus {
        assert_eq!(s.len(), 64);
        for (total, c) in counts.iter_mut().zip(s.symbol_counts(k)) {
            *total += c;
        }
    }
    let n: u64 = counts.iter().sum();
    let expected = n as f64 / k as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    assert!(chi2 < CHI2_4_999, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn copying_without_errors_is_monochrome() {
    let params = ModelParams::new(7, 1.0, 1.0, 0.0, 0.0, 1.0).unwrap();
    let corpus = generate_ensemble(&params, &SamplingProtocol::new(32, 50, 3).unwrap()).unwrap();
    for s in &corpus {
        assert_eq!(magnetization(s, 7), 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ensembles_have_target_length_and_valid_symbols(
        k in 1usize..12,
        q in 0.05f64..=1.0,
        epsilon in 0.0f64..=1.0,
        kt in 0.05f64..3.0,
        n in 2usize..80,
        seed in any::<u64>(),
    ) {
        let params = ModelParams::new(k, 1.0, q, 0.0, epsilon, kt).unwrap();
        let corpus = generate_ensemble(&params, &SamplingProtocol::new(n, 4, seed).unwrap()).unwrap();
        prop_assert_eq!(corpus.len(), 4);
        for s in &corpus {
            prop_assert_eq!(s.len(), n);
            prop_assert!(s.symbols().all(|x| usize::from(x) < k));
        }
    }

    #[test]
    fn ensembles_are_seed_deterministic(seed in any::<u64>(), kt in 0.05f64..2.0) {
        let params = ModelParams::new(4, 1.0, 0.2, 0.0, 0.1, kt).unwrap();
        let protocol = SamplingProtocol::new(40, 3, seed).unwrap();
        prop_assert_eq!(
            generate_ensemble(&params, &protocol).unwrap(),
            generate_ensemble(&params, &protocol).unwrap()
        );
    }
}
