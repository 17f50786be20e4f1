use rfcurve::lattice::{disc_cells, Cell, Point};
use rfcurve::noise::{sample, sample_discretized_wn, NoiseKind};
use rfcurve::rng::derive_seed;
use rfcurve::stats::Summary;
use rfcurve::weaknorm::{
    dyadic_scales, exceeds, montecarlo_sr, pinned_sup_scales, pinned_sup_space, s_r, scale_weight, set_perimeter,
    space_weight, field_side,
};
use rfcurve::Stencil;

#[test]
fn optimizers_are_feasible_and_lambdas_increase() {
    for seed in 0..30 {
        let noise = sample_discretized_wn(21, 21, seed).unwrap();
        for stencil in [Stencil::lattice4(), Stencil::crofton8(), Stencil::crofton16()] {
            let c = Cell::new(10, 10);
            let r = 3.0 + (seed % 6) as f64;
            let res = s_r(&noise, r, c, stencil).unwrap();
            let ball = disc_cells(c.center(), r);
            assert!(!res.optimizer.is_empty());
            assert!(res.optimizer.iter().all(|x| ball.contains(x)));
            let integral = noise.field_integral(&res.optimizer).unwrap();
            let per = set_perimeter(&res.optimizer, stencil);
            assert!((integral - res.integral).abs() < 1e-9);
            assert!((per - res.perimeter).abs() < 1e-9);
            assert!((integral.abs() / per - res.value).abs() < 1e-9);
            assert_eq!(integral.signum() as i8, res.sign);
            assert!(res.lambdas.windows(2).all(|w| w[0] < w[1]), "{:?}", res.lambdas);
        }
    }
}

#[test]
fn s_r_is_nondecreasing_in_r() {
    for seed in 0..10 {
        let noise = sample(NoiseKind::RegularizedWN, 25, 25, seed).unwrap();
        let mut last = 0.0;
        for r in 1..=12 {
            let v = s_r(&noise, r as f64, Cell::new(12, 12), Stencil::crofton8()).unwrap().value;
            assert!(v >= last - 1e-12, "seed {seed} r {r}");
            last = v;
        }
    }
}

#[test]
fn threshold_test_agrees_with_value() {
    let noise = sample_discretized_wn(17, 17, 4).unwrap();
    let c = Cell::new(8, 8);
    let v = s_r(&noise, 6.0, c, Stencil::lattice4()).unwrap().value;
    assert!(exceeds(&noise, 6.0, c.center(), Stencil::lattice4(), 0.99 * v).unwrap());
    assert!(!exceeds(&noise, 6.0, c.center(), Stencil::lattice4(), 1.01 * v).unwrap());
}

#[test]
fn pinned_scales_examples() {
    let noise = sample_discretized_wn(256, 256, 21).unwrap();
    let c = Cell::new(128, 128);
    let s = Stencil::lattice4();
    let one = pinned_sup_scales(&noise, c, 2.0, s).unwrap();
    assert_eq!(one.value, scale_weight(2.0) * s_r(&noise, 2.0, c, s).unwrap().value);
    let mut last = one.value;
    for r_max in [4.0, 8.0, 16.0, 32.0, 64.0] {
        let p = pinned_sup_scales(&noise, c, r_max, s).unwrap();
        assert!(p.value >= last);
        last = p.value;
    }
    let direct = dyadic_scales(64.0)
        .into_iter()
        .map(|r| scale_weight(r) * s_r(&noise, r, c, s).unwrap().value)
        .fold(0.0, f64::max);
    assert!((last - direct).abs() < 1e-12);
    assert!(pinned_sup_scales(&noise, c, 1.5, s).is_err());
}

#[test]
fn pinned_space_matches_enumeration() {
    let noise = sample_discretized_wn(31, 31, 8).unwrap();
    let c = Cell::new(15, 15);
    let s = Stencil::crofton8();
    let at = |x: Cell| {
        let d = (x.center() - c.center()).norm();
        space_weight(d) * pinned_sup_scales(&noise, x, 4.0, s).unwrap().value
    };
    let w0 = pinned_sup_space(&noise, c, 4.0, 0, s).unwrap();
    assert_eq!(w0.value, (2f64).ln().powf(-0.5) * pinned_sup_scales(&noise, c, 4.0, s).unwrap().value);
    let points = disc_cells(Point::new(0.0, 0.0), 2.0);
    assert_eq!(points.len(), 13);
    let direct = points.iter().map(|p| at(c.offset(p.x, p.y))).fold(0.0, f64::max);
    let w2 = pinned_sup_space(&noise, c, 4.0, 2, s).unwrap();
    assert!((w2.value - direct).abs() < 1e-12, "{} vs {direct}", w2.value);
    let mut last = 0.0;
    for w in 0..=5 {
        let v = pinned_sup_space(&noise, c, 4.0, w, s).unwrap().value;
        assert!(v >= last);
        last = v;
    }
}

#[test]
fn montecarlo_summary_is_recomputable() {
    let mc = montecarlo_sr(4.0, 2, NoiseKind::DiscretizedWN, 99, Stencil::lattice4()).unwrap();
    let side = field_side(4.0);
    let by_hand: Vec<f64> = (0..2)
        .map(|i| {
            let f = sample_discretized_wn(side, side, derive_seed(99, i)).unwrap();
            s_r(&f, 4.0, f.extent().center_cell(), Stencil::lattice4()).unwrap().value
        })
        .collect();
    assert_eq!(mc.samples, by_hand);
    assert_eq!(mc.summary, Summary::from_samples(&by_hand).unwrap());
    let mean = (by_hand[0] + by_hand[1]) / 2.0;
    assert!((mc.summary.mean - mean).abs() < 1e-15);
    assert!((mc.normalized_mean - mean / 4f64.ln().powf(0.75)).abs() < 1e-15);
    assert!(montecarlo_sr(4.0, 1, NoiseKind::DiscretizedWN, 99, Stencil::lattice4()).is_err());
}
