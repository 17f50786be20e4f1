use std::collections::HashSet;
use std::f64::consts::PI;

use proptest::prelude::*;
use rfcurve::geometry::{
    averaged_normal, bubble_detect, campanato_step, eta_audit, extract_jump_set, height_bound_check, jump_edges,
    l1_excess, normal_tilt_check, strong_excess, LineConfig, NormalEstimate, TiltCheck,
};
use rfcurve::groundstate::{ground_state, SpinField};
use rfcurve::lattice::{Cell, Extent, Point};
use rfcurve::maxflow::{Boundary, EnergyMode, Exterior};
use rfcurve::noise::sample_discretized_wn;
use rfcurve::Stencil;

fn spin_from_bits(w: usize, h: usize, bits: &[bool]) -> SpinField {
    SpinField::from_fn(Extent::new(0, 0, w, h), Boundary::Free, |c| if bits[c.y as usize * w + c.x as usize] { 1 } else { -1 })
        .unwrap()
}

/// Shrinks interior vertices towards the chord until the length budget holds.
fn admissible_polyline(a: Point, b: Point, eta: f64, raw: &[(f64, f64)]) -> Vec<Point> {
    let chord = b - a;
    let t = chord.perp();
    let n = raw.len() + 1;
    let base: Vec<Point> = (0..=n)
        .map(|i| {
            let s = i as f64 / n as f64;
            let off = if i == 0 || i == n { (0.0, 0.0) } else { raw[i - 1] };
            a + chord * (s + off.0 / n as f64) + t * off.1
        })
        .collect();
    let with = |lambda: f64| -> Vec<Point> {
        (0..=n).map(|i| a + chord * (i as f64 / n as f64) + (base[i] - (a + chord * (i as f64 / n as f64))) * lambda).collect()
    };
    let len = |p: &[Point]| p.windows(2).map(|w| w[0].dist(w[1])).sum::<f64>();
    let budget = (1.0 + eta) * a.dist(b);
    if len(&base) <= budget {
        return base;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let m = 0.5 * (lo + hi);
        if len(&with(m)) <= budget {
            lo = m;
        } else {
            hi = m;
        }
    }
    with(lo)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn jump_set_partitions_the_disagreement_edges(bits in prop::collection::vec(any::<bool>(), 48)) {
        let s = spin_from_bits(8, 6, &bits);
        let curve = extract_jump_set(&s);
        let edges = jump_edges(&s);
        prop_assert_eq!(curve.lattice_length(), edges.len() as f64);
        let mut seen = HashSet::new();
        for comp in &curve.components {
            prop_assert_eq!(comp.vertices.len(), comp.edges.len() + 1);
            for w in comp.vertices.windows(2) {
                prop_assert_eq!((w[1] - w[0]).norm(), 1.0);
            }
            prop_assert_eq!(comp.closed, comp.vertices[0] == *comp.vertices.last().unwrap());
            for e in &comp.edges {
                prop_assert!(seen.insert((e.lo, e.hi)));
            }
        }
        prop_assert_eq!(seen.len(), edges.len());
    }

    #[test]
    fn excess_is_flip_symmetric(bits in prop::collection::vec(any::<bool>(), 121), theta in 0.0..(2.0 * PI), off in -2.0..2.0f64) {
        let s = spin_from_bits(11, 11, &bits);
        let c = Point::new(5.0, 5.0);
        let line = LineConfig::from_angle(c + Point::from_angle(theta) * off, theta);
        let flipped = s.negated();
        prop_assert_eq!(l1_excess(&s, &line, c, 4.5).unwrap(), l1_excess(&flipped, &line.flipped(), c, 4.5).unwrap());
        let nu = Point::from_angle(theta + 0.3);
        prop_assert!((strong_excess(&s, nu, c, 4.0) - strong_excess(&flipped, -nu, c, 4.0)).abs() < 1e-12);
    }

    #[test]
    fn strong_excess_is_minimized_at_the_averaged_normal(bits in prop::collection::vec(any::<bool>(), 81), r in 1.0..4.0f64) {
        let s = spin_from_bits(9, 9, &bits);
        let c = Point::new(4.0, 4.0);
        let Ok(NormalEstimate::Unique(nu)) = averaged_normal(&s, c, r) else { return Ok(()) };
        let at_normal = strong_excess(&s, nu, c, r);
        let grid = 3600;
        let (mut best, mut best_angle) = (f64::INFINITY, 0.0);
        for i in 0..grid {
            let a = 2.0 * PI * i as f64 / grid as f64;
            let v = strong_excess(&s, Point::from_angle(a), c, r);
            if v < best {
                best = v;
                best_angle = a;
            }
        }
        prop_assert!(at_normal <= best + 1e-9);
        prop_assert!(Point::from_angle(best_angle).dist(nu) <= 2.0 * PI / grid as f64);
    }

    #[test]
    fn height_bound_holds(eta in 0.0..=1.0f64, len in 0.1..20.0f64, angle in 0.0..(2.0 * PI),
                          raw in prop::collection::vec((-0.5..0.5f64, -2.0..2.0f64), 1..8)) {
        let a = Point::new(0.3, -1.2);
        let b = a + Point::from_angle(angle) * len;
        let poly = admissible_polyline(a, b, eta, &raw);
        let h = height_bound_check(a, b, eta, &poly).unwrap();
        prop_assert!(h.ok, "h {} bound {}", h.h, h.bound);
    }

    #[test]
    fn tilt_bound_holds(t1 in 0.0..(2.0 * PI), s1 in -0.25..0.25f64, dt in -0.3..0.3f64, ds in -0.3..0.3f64) {
        let a = LineConfig { anchor: Point::from_angle(t1) * s1, normal: Point::from_angle(t1) };
        let t2 = t1 + dt;
        let b = LineConfig { anchor: Point::from_angle(t2) * (s1 + ds), normal: Point::from_angle(t2) };
        if let TiltCheck::Checked { d, tilt, ok } = normal_tilt_check(&a, &b) {
            prop_assert!(ok, "d {d} tilt {tilt}");
        }
    }
}

#[test]
fn campanato_tilt_is_flip_invariant() {
    let noise = sample_discretized_wn(41, 41, 5).unwrap();
    let line = LineConfig::from_angle(Point::new(20.0, 20.0), 0.4);
    let ext = Extent::new(0, 0, 41, 41);
    let bc = Boundary::Spins(Exterior::from_fn(ext, 2, |c| line.cell_spin(c)).unwrap());
    let s = ground_state(&noise, 0.1, &bc, Stencil::crofton8(), EnergyMode::ContinuumBV).unwrap();
    let c = Point::new(20.0, 20.0);
    let a = campanato_step(&s, c, 16.0, &line).unwrap();
    let b = campanato_step(&s.negated(), c, 16.0, &line.flipped()).unwrap();
    assert_eq!(a.radius, b.radius);
    assert!((a.tilt - b.tilt).abs() < 1e-12);
    assert!(a.new_line.normal.dot(line.normal) > 0.0);
}

#[test]
fn zero_disorder_ground_state_is_perimeter_minimal() {
    for (seed, theta) in [(1u64, 0.3), (2, 1.2), (3, 2.5)] {
        let ext = Extent::new(0, 0, 33, 33);
        let line = LineConfig::from_angle(Point::new(16.0, 16.0), theta);
        let bc = Boundary::Spins(Exterior::from_fn(ext, 2, |c| line.cell_spin(c)).unwrap());
        let noise = sample_discretized_wn(33, 33, seed).unwrap();
        for stencil in [Stencil::lattice4(), Stencil::crofton8(), Stencil::crofton16()] {
            let s = ground_state(&noise, 0.0, &bc, stencil, EnergyMode::ContinuumBV).unwrap();
            let audit = eta_audit(&s, Point::new(16.0, 16.0), 14.0, 40, seed).unwrap();
            assert_eq!(audit.eta_hat, 0.0);
        }
    }
}

#[test]
fn bubbles_of_strong_disorder_obey_the_energy_inequality() {
    let eps = 1e6;
    let noise = sample_discretized_wn(24, 24, 9).unwrap();
    let s = ground_state(&noise, eps, &Boundary::Plus, Stencil::crofton8(), EnergyMode::ContinuumBV).unwrap();
    let bubbles = bubble_detect(&s, Point::new(11.5, 11.5), 30.0);
    assert!(!bubbles.is_empty());
    for b in &bubbles {
        assert!(b.energy_inequality_holds(&noise, eps).unwrap());
    }
}

#[test]
fn corner_normal_is_diagonal() {
    let s = SpinField::from_fn(Extent::new(-4, -4, 9, 9), Boundary::Free, |c: Cell| if c.x >= 0 && c.y >= 0 { 1 } else { -1 })
        .unwrap();
    let n = averaged_normal(&s, Point::new(-0.5, -0.5), 1.0).unwrap().unique().unwrap();
    assert!(n.dist(Point::new(0.5f64.sqrt(), 0.5f64.sqrt())) < 1e-12);
}
