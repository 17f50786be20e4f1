use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rfcurve::groundstate::{energy, ground_state, SpinField};
use rfcurve::lattice::{disc_cells, Cell, Extent, Point};
use rfcurve::maxflow::{
    self, solve_min_cut_with, solve_region, Boundary, CutGraph, EnergyMode, Exterior, FrozenEncoding,
    RegionProblem, SINK, SOURCE,
};
use rfcurve::noise::{sample_discretized_wn, NoiseField, NoiseKind};
use rfcurve::oracle::{enumerate_constrained_perimeter, enumerate_ground_state, enumerate_sr};
use rfcurve::weaknorm::{max_ratio, s_r};
use rfcurve::Stencil;

const STENCILS: [fn() -> Stencil; 3] = [Stencil::lattice4, Stencil::crofton8, Stencil::crofton16];

fn random_grid_graph(rng: &mut ChaCha8Rng) -> (CutGraph, Vec<(usize, usize, f64)>) {
    let mut g = CutGraph::with_nodes(16);
    let mut arcs = Vec::new();
    let mut push = |g: &mut CutGraph, u: usize, v: usize, c: f64| {
        g.add_arc(u, v, c);
        arcs.push((u, v, c));
    };
    for i in 0..16usize {
        let (x, y) = (i % 4, i / 4);
        let u = i + 2;
        if rng.random_bool(0.5) {
            push(&mut g, SOURCE, u, rng.random_range(0.0..5.0));
        }
        if rng.random_bool(0.5) {
            push(&mut g, u, SINK, rng.random_range(0.0..5.0));
        }
        if x + 1 < 4 {
            push(&mut g, u, u + 1, rng.random_range(0.0..3.0));
            push(&mut g, u + 1, u, rng.random_range(0.0..3.0));
        }
        if y + 1 < 4 {
            push(&mut g, u, u + 4, rng.random_range(0.0..3.0));
            push(&mut g, u + 4, u, rng.random_range(0.0..3.0));
        }
    }
    (g, arcs)
}

#[test]
fn min_cut_matches_partition_enumeration_for_every_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let (g, arcs) = random_grid_graph(&mut rng);
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << 16) {
            let side = |u: usize| match u {
                SOURCE => true,
                SINK => false,
                _ => (mask >> (u - 2)) & 1 == 1,
            };
            let c: f64 = arcs.iter().filter(|&&(u, v, _)| side(u) && !side(v)).map(|a| a.2).sum();
            best = best.min(c);
        }
        let mut sides = Vec::new();
        for s in maxflow::solvers() {
            let cut = solve_min_cut_with(*s, &g).unwrap();
            assert!((cut.value - best).abs() < 1e-9, "{}: {} vs {}", s.name(), cut.value, best);
            sides.push(cut.source_side);
        }
        // the source-minimal cut is unique
        assert!(sides.windows(2).all(|w| w[0] == w[1]));
    }
}

#[test]
fn repeated_solves_return_identical_cuts() {
    let noise = sample_discretized_wn(20, 20, 5).unwrap();
    let eg = maxflow::build_energy_graph(&noise, 0.6, &Boundary::Plus, Stencil::crofton8(), EnergyMode::ContinuumBV).unwrap();
    let a = maxflow::solve_min_cut(eg.graph()).unwrap();
    let b = maxflow::solve_min_cut(eg.graph()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn solvers_agree_on_energy_graphs() {
    for seed in 0..10 {
        let noise = sample_discretized_wn(24, 24, seed).unwrap();
        let eg = maxflow::build_energy_graph(&noise, 0.5, &Boundary::Plus, Stencil::crofton16(), EnergyMode::Rfim).unwrap();
        let cuts: Vec<_> = maxflow::solvers().iter().map(|s| solve_min_cut_with(*s, eg.graph()).unwrap()).collect();
        for c in &cuts[1..] {
            assert_eq!(c.source_side, cuts[0].source_side);
            assert_eq!(c.flow, cuts[0].flow);
        }
    }
}

fn line_exterior(extent: Extent) -> Boundary {
    Boundary::Spins(Exterior::from_fn(extent, 2, |c| if c.x + 2 * c.y >= 3 { 1 } else { -1 }).unwrap())
}

#[test]
fn ground_states_match_enumeration() {
    for seed in 0..40u64 {
        let noise = sample_discretized_wn(4, 4, seed).unwrap();
        for (k, stencil) in STENCILS.iter().enumerate() {
            let stencil = stencil();
            for eps in [0.1, 1.0] {
                for bc in [Boundary::Plus, Boundary::Minus, Boundary::Free, line_exterior(noise.extent())] {
                    for mode in [EnergyMode::Rfim, EnergyMode::ContinuumBV] {
                        let gs = ground_state(&noise, eps, &bc, stencil, mode).unwrap();
                        let e = energy(&gs, &noise, eps, stencil, mode).unwrap();
                        let oracle = enumerate_ground_state(&noise, eps, &bc, stencil, mode).unwrap();
                        assert!((e - oracle.min_energy).abs() < 1e-9, "seed {seed} stencil {k} eps {eps} {}", bc.name());
                        assert!(oracle.argmins.contains(gs.values()));
                    }
                }
            }
        }
    }
}

#[test]
fn energy_is_symmetric_under_global_flip() {
    for seed in 0..20u64 {
        let noise = sample_discretized_wn(12, 10, seed).unwrap();
        let bc = line_exterior(noise.extent());
        let stencil = Stencil::crofton8();
        let a = ground_state(&noise, 0.7, &bc, stencil, EnergyMode::ContinuumBV).unwrap();
        let b = ground_state(&noise.negated(), 0.7, &bc.negated(), stencil, EnergyMode::ContinuumBV).unwrap();
        let ea = energy(&a, &noise, 0.7, stencil, EnergyMode::ContinuumBV).unwrap();
        let eb = energy(&b, &noise.negated(), 0.7, stencil, EnergyMode::ContinuumBV).unwrap();
        assert_eq!(ea, eb);
        // the flipped minimizer of one problem is a minimizer of the other
        let ea_flip = energy(&a.negated(), &noise.negated(), 0.7, stencil, EnergyMode::ContinuumBV).unwrap();
        assert_eq!(ea_flip, ea);
    }
}

#[test]
fn weak_norm_matches_subset_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..60u64 {
        let noise = sample_discretized_wn(9, 9, seed).unwrap();
        let stencil = STENCILS[(seed % 3) as usize]();
        let center = Cell::new(rng.random_range(2..7), rng.random_range(2..7));
        let ball = disc_cells(center.center(), 2.0);
        let oracle = enumerate_sr(&noise, &ball, stencil).unwrap();
        let r = s_r(&noise, 2.0, center, stencil).unwrap();
        assert!((r.value - oracle.value).abs() < 1e-9, "seed {seed}: {} vs {}", r.value, oracle.value);
        let mut opt = r.optimizer.clone();
        opt.sort();
        assert!(oracle.argmax.iter().any(|m| {
            let mut m = m.clone();
            m.sort();
            m == opt
        }));
        let block: Vec<Cell> = Extent::new(2, 3, 4, 4).cells().collect();
        let oracle = enumerate_sr(&noise, &block, stencil).unwrap();
        let r = max_ratio(&noise, &block, stencil).unwrap();
        assert!((r.value - oracle.value).abs() < 1e-9);
        assert!((r.integral.abs() / r.perimeter - r.value).abs() < 1e-9);
    }
}

#[test]
fn constrained_perimeter_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let center = Point::new(0.0, 0.0);
        let radius = [1.0, 1.5, 2.0, 2.3][rng.random_range(0..4)];
        let free = disc_cells(center, radius);
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let off: f64 = rng.random_range(-1.5..1.5);
        let noisy = rng.random_bool(0.3);
        let salt: u64 = rng.random();
        let ext = move |c: Cell| {
            let s = c.x as f64 * theta.cos() + c.y as f64 * theta.sin() - off;
            let flip = noisy && (c.x.wrapping_mul(31) ^ c.y.wrapping_mul(17) ^ salt as i64) % 5 == 0;
            Some(if (s >= 0.0) != flip { 1i8 } else { -1 })
        };
        let stencil = STENCILS[rng.random_range(0..3)]();
        let oracle = enumerate_constrained_perimeter(&free, ext, stencil).unwrap();
        let zero = |_: Cell| (0.0, 0.0);
        let p = RegionProblem { free: &free, stencil, pair_weight: 1.0, unary: &zero, frozen: &ext, encoding: FrozenEncoding::HardArcs };
        let sol = solve_region(&p, maxflow::default_solver()).unwrap();
        assert!((sol.energy - oracle.min_perimeter).abs() < 1e-9);
        assert!(oracle.argmins.contains(&sol.spins));
    }
}

#[test]
fn monotone_coupling_on_small_boxes() {
    for seed in 0..50u64 {
        let noise = sample_discretized_wn(16, 16, seed).unwrap();
        for stencil in STENCILS {
            let p = ground_state(&noise, 0.5, &Boundary::Plus, stencil(), EnergyMode::ContinuumBV).unwrap();
            let m = ground_state(&noise, 0.5, &Boundary::Minus, stencil(), EnergyMode::ContinuumBV).unwrap();
            assert!(p.dominates(&m));
        }
    }
}

#[test]
fn enumeration_handles_explicit_fields() {
    let noise = NoiseField::from_values(Array2::from_elem((2, 2), 1.0), NoiseKind::DiscretizedWN, 0).unwrap();
    let gs = enumerate_ground_state(&noise, 0.1, &Boundary::Minus, Stencil::lattice4(), EnergyMode::Rfim).unwrap();
    let s = SpinField::new(gs.argmins[0].clone(), Boundary::Minus).unwrap();
    assert_eq!(energy(&s, &noise, 0.1, Stencil::lattice4(), EnergyMode::Rfim).unwrap(), gs.min_energy);
}
