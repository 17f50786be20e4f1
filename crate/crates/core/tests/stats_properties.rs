use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rfcurve::noise::NoiseKind;
use rfcurve::stats::{fit_log_power, subgaussian_envelope_check, sup_field_scaling, Summary};

const T_GRID: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 3.0];

#[test]
fn perturbed_power_law_keeps_its_exponent() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rs = [8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0];
    for _ in 0..200 {
        let pts: Vec<(f64, f64)> = rs
            .iter()
            .map(|&r: &f64| {
                let jitter: f64 = rand::Rng::random_range(&mut rng, -0.01..0.01);
                (r, 2.0 * r.ln().powf(0.75) * (1.0 + jitter))
            })
            .collect();
        let fit = fit_log_power(&pts).unwrap();
        assert!((fit.b - 0.75).abs() <= 0.15, "{}", fit.b);
    }
}

#[test]
fn normal_samples_pass_the_envelope() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let check = subgaussian_envelope_check(&xs, 4.0 * std::f64::consts::PI, &T_GRID).unwrap();
    assert!(check.ok);
    assert!(check.max_violation < -0.05);
}

#[test]
fn heavy_tails_fail_the_envelope() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let wide = Normal::new(0.0, 30.0).unwrap();
    let xs: Vec<f64> = (0..2000).map(|_| wide.sample(&mut rng)).collect();
    let check = subgaussian_envelope_check(&xs, 4.0 * std::f64::consts::PI, &[10.0]).unwrap();
    assert!(!check.ok);
}

#[test]
fn sup_field_single_scale() {
    let s = sup_field_scaling(NoiseKind::DiscretizedWN, &[16], 20, 1).unwrap();
    assert_eq!(s.rows.len(), 1);
    assert_eq!(s.max_ratio, s.rows[0].ratio);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn estimators_ignore_sample_order(mut xs in prop::collection::vec(-50.0..50.0f64, 100..300), seed in any::<u64>()) {
        let a = Summary::from_samples(&xs).unwrap();
        let ea = subgaussian_envelope_check(&xs, 2.0, &T_GRID).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(xs.as_mut_slice(), &mut rng);
        prop_assert_eq!(a, Summary::from_samples(&xs).unwrap());
        prop_assert_eq!(ea, subgaussian_envelope_check(&xs, 2.0, &T_GRID).unwrap());
    }

    #[test]
    fn adding_central_samples_keeps_a_pass(half in prop::collection::vec(0.0..4.0f64, 50..200), extra in 1usize..500) {
        let mut xs: Vec<f64> = half.iter().flat_map(|&x| [x, -x]).collect();
        let before = subgaussian_envelope_check(&xs, 4.0 * std::f64::consts::PI, &T_GRID).unwrap();
        xs.extend(std::iter::repeat_n(0.0, extra));
        let after = subgaussian_envelope_check(&xs, 4.0 * std::f64::consts::PI, &T_GRID).unwrap();
        prop_assert!(!before.ok || after.ok);
    }
}
