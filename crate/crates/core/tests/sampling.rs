use std::collections::HashSet;

use abmcal::params::{ParameterRanges, REFERENCE_TRUE_VALUES};
use abmcal::sampling::*;
use abmcal::sobol::SobolGenerator;
use abmcal::surrogate::{FnClassifier, Label};
use proptest::prelude::*;

/// Upper 1% point of chi-squared with 19 degrees of freedom.
const CHI2_19_99: f64 = 36.191;

#[test]
fn random_coordinate_is_uniform() {
    let space = SearchSpace::full(ParameterRanges::default_ranges());
    let pool = generate_pool_random(10_000, &space, 17, SamplerKind::Random).unwrap();
    let bins = 20;
    let mut counts = vec![0usize; bins];
    for v in pool.vectors() {
        counts[((v[3] / 41.0) * bins as f64) as usize] += 1;
    }
    let expected = 10_000.0 / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < CHI2_19_99, "chi2 = {chi2}");
}

#[test]
fn epsilon_greedy_fraction() {
    let space = SearchSpace::full(ParameterRanges::default_ranges());
    let model = FnClassifier(|x: &[f64]| if x[0] < 0.5 { Label::Positive } else { Label::Negative });
    let pool = reinitialize_pool_epsilon_greedy(&model, &mut PoolSource::Random, 10_000, 0.9, 2, &space, 8).unwrap();
    let pos = pool.vectors().iter().filter(|v| v[0] < 0.5).count() as f64 / pool.len() as f64;
    assert!((0.89..=0.91).contains(&pos), "{pos}");
}

#[test]
fn sobol_reinitialisation_advances_the_stream() {
    let space = SearchSpace::full(ParameterRanges::default_ranges());
    let model = FnClassifier(|_: &[f64]| Label::Positive);
    let mut src = PoolSource::Sobol(SobolGenerator::new(7).unwrap());
    let a = reinitialize_pool_epsilon_greedy(&model, &mut src, 100, 0.9, 2, &space, 1).unwrap();
    let b = reinitialize_pool_epsilon_greedy(&model, &mut src, 100, 0.9, 2, &space, 1).unwrap();
    let keys: HashSet<_> = a.vectors().iter().chain(b.vectors()).map(|v| v.bit_key()).collect();
    assert_eq!(keys.len(), 200);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pools_stay_in_range(seed in any::<u64>(), n in 1usize..300, free in 1usize..=7, sobol in any::<bool>()) {
        let ranges = ParameterRanges::default_ranges();
        let space = SearchSpace::new(ranges.clone(), (0..free).collect(), REFERENCE_TRUE_VALUES.to_vec()).unwrap();
        let pool = if sobol {
            let mut g = SobolGenerator::new(free).unwrap();
            generate_pool_sobol(n, &space, &mut g, SamplerKind::Sobol).unwrap()
        } else {
            generate_pool_random(n, &space, seed, SamplerKind::Random).unwrap()
        };
        prop_assert_eq!(pool.len(), n);
        for v in pool.vectors() {
            prop_assert!(ranges.contains(v));
        }
        let model = FnClassifier(|x: &[f64]| if x[0] > 0.3 { Label::Positive } else { Label::Negative });
        let re = reinitialize_pool_epsilon_greedy(&model, &mut PoolSource::Random, n, 0.9, 2, &space, seed).unwrap();
        prop_assert!(re.vectors().iter().all(|v| ranges.contains(v)));
    }

    #[test]
    fn draws_return_every_element_once(seed in any::<u64>(), n in 1usize..200, batch in 1usize..20) {
        let space = SearchSpace::full(ParameterRanges::default_ranges());
        let mut pool = generate_pool_random(n, &space, seed, SamplerKind::Random).unwrap();
        let all: HashSet<_> = pool.vectors().iter().map(|v| v.bit_key()).collect();
        let mut drawn = Vec::new();
        let mut i = 0;
        while !pool.is_empty() {
            let b = batch.min(pool.len());
            drawn.extend(draw_minibatch(&mut pool, b, seed.wrapping_add(i)).unwrap());
            i += 1;
        }
        let keys: HashSet<_> = drawn.iter().map(|v| v.bit_key()).collect();
        prop_assert_eq!(drawn.len(), n);
        prop_assert_eq!(keys, all);
    }
}
