//! Agreement of every solver with exhaustive enumeration on small instances:
//! boxed ground states, `S_R` on small balls, constrained least perimeter
//! and plain minimum cuts.

use rand::Rng;
use serde::Deserialize;
use serde_json::Value;

use rfcurve::groundstate::{energy, ground_state_with};
use rfcurve::lattice::{disc_cells, Cell, Point};
use rfcurve::maxflow::{
    self, solve_min_cut_with, solve_region, Boundary, CutGraph, EnergyMode, FrozenEncoding, RegionProblem, SINK, SOURCE,
};
use rfcurve::noise::{self, NoiseKind};
use rfcurve::oracle::{enumerate_constrained_perimeter, enumerate_ground_state, enumerate_sr};
use rfcurve::weaknorm::{field_side, s_r};
use rfcurve::Stencil;

use super::common::{nonempty, sampling_rng};
use super::{Experiment, Plan, Unit};
use crate::config::{ensure, parse_params};
use crate::error::{CliError, Result};
use crate::record::{Record, Scalars};
use crate::summary::{cell, Summary};

pub struct OracleSuite;

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Params {
    n_instances: usize,
    size: usize,
    epsilons: Vec<f64>,
    boundaries: Vec<String>,
    modes: Vec<String>,
    stencils: Vec<String>,
    sr_instances: usize,
    sr_radii: Vec<f64>,
    perimeter_instances: usize,
    mincut_instances: usize,
    mincut_nodes: usize,
    tolerance: f64,
    noise: String,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n_instances: 100,
            size: 4,
            epsilons: vec![0.1, 1.0, 10.0],
            boundaries: vec!["plus".into(), "minus".into()],
            modes: vec!["rfim".into(), "continuum-bv".into()],
            stencils: vec!["lattice4".into(), "crofton8".into()],
            sr_instances: 100,
            sr_radii: vec![1.0, 1.5, 2.0],
            perimeter_instances: 200,
            mincut_instances: 50,
            mincut_nodes: 12,
            tolerance: 1e-9,
            noise: "discretized-wn".into(),
        }
    }
}

struct OraclePlan {
    p: Params,
    noise: NoiseKind,
}

fn boundary(name: &str) -> Option<Boundary> {
    match name {
        "plus" => Some(Boundary::Plus),
        "minus" => Some(Boundary::Minus),
        "free" => Some(Boundary::Free),
        _ => None,
    }
}

fn each_parses<T: std::str::FromStr>(path: &str, names: &[String]) -> Result<()>
where
    T::Err: std::fmt::Display,
{
    nonempty(path, names)?;
    for (i, n) in names.iter().enumerate() {
        n.parse::<T>().map_err(|e| CliError::config(format!("{path}[{i}]"), e.to_string()))?;
    }
    Ok(())
}

impl Experiment for OracleSuite {
    fn name(&self) -> &'static str {
        "oracle-suite"
    }

    fn description(&self) -> &'static str {
        "solvers against exhaustive enumeration on small instances"
    }

    fn prepare(&self, params: &toml::Table) -> Result<Box<dyn Plan>> {
        let p: Params = parse_params(params)?;
        ensure(p.size > 0 && p.size * p.size <= rfcurve::oracle::MAX_GROUND_STATE_CELLS, "params.size", "box too large to enumerate")?;
        nonempty("params.epsilons", &p.epsilons)?;
        ensure(p.epsilons.iter().all(|e| e.is_finite() && *e >= 0.0), "params.epsilons", "must be finite and nonnegative")?;
        nonempty("params.boundaries", &p.boundaries)?;
        for (i, b) in p.boundaries.iter().enumerate() {
            ensure(boundary(b).is_some(), &format!("params.boundaries[{i}]"), format!("unknown boundary `{b}`"))?;
        }
        each_parses::<EnergyMode>("params.modes", &p.modes)?;
        each_parses::<Stencil>("params.stencils", &p.stencils)?;
        nonempty("params.sr_radii", &p.sr_radii)?;
        ensure(
            p.sr_radii.iter().all(|&r| r >= 0.0 && disc_cells(Point::default(), r).len() <= rfcurve::oracle::MAX_SR_CELLS),
            "params.sr_radii",
            "balls must hold at most 16 cells",
        )?;
        ensure(p.mincut_nodes <= 20, "params.mincut_nodes", "at most 20 nodes can be enumerated")?;
        ensure(p.tolerance >= 0.0, "params.tolerance", "must be nonnegative")?;
        let noise = p.noise.parse().map_err(|e: rfcurve::Error| CliError::config("params.noise", e.to_string()))?;
        Ok(Box::new(OraclePlan { p, noise }))
    }
}

impl OraclePlan {
    fn ground_state(&self, unit: &Unit, seed: u64) -> Result<Scalars> {
        let eps = unit.f64("epsilon");
        let bc = boundary(unit.str("boundary")).expect("validated boundary");
        let mode: EnergyMode = unit.str("mode").parse()?;
        let stencil: Stencil = unit.str("stencil").parse()?;
        let n = self.p.size;
        let field = noise::sample(self.noise, n, n, seed)?;
        let oracle = enumerate_ground_state(&field, eps, &bc, stencil, mode)?;
        let (mut diff, mut member) = (0.0f64, true);
        for solver in maxflow::solvers() {
            let gs = ground_state_with(*solver, &field, eps, &bc, stencil, mode)?;
            diff = diff.max((energy(&gs, &field, eps, stencil, mode)? - oracle.min_energy).abs());
            member &= oracle.argmins.contains(gs.values());
        }
        let mut s = Scalars::default();
        s.num("oracle", oracle.min_energy).num("max_abs_diff", diff).flag("argmin_member", member);
        Ok(s)
    }

    fn weak_norm(&self, unit: &Unit, seed: u64) -> Result<Scalars> {
        let r = unit.f64("radius");
        let stencil: Stencil = unit.str("stencil").parse()?;
        let side = field_side(r);
        let field = noise::sample(self.noise, side, side, seed)?;
        let c = field.extent().center_cell();
        let oracle = enumerate_sr(&field, &disc_cells(c.center(), r), stencil)?;
        let got = s_r(&field, r, c, stencil)?;
        let mut sorted = got.optimizer.clone();
        sorted.sort();
        let member = oracle.argmax.iter().any(|m| {
            let mut m = m.clone();
            m.sort();
            m == sorted
        });
        let mut s = Scalars::default();
        s.num("oracle", oracle.value).num("max_abs_diff", (got.value - oracle.value).abs()).flag("argmin_member", member);
        Ok(s)
    }

    fn perimeter(&self, unit: &Unit, seed: u64) -> Result<Scalars> {
        let stencil: Stencil = unit.str("stencil").parse()?;
        let mut rng = sampling_rng(seed);
        let radius = [1.0, 1.5, 2.0, 2.3][rng.random_range(0..4)];
        let free = disc_cells(Point::default(), radius);
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let off: f64 = rng.random_range(-1.5..1.5);
        // exterior: a half-plane with a sprinkling of flipped cells
        let flips: Vec<Cell> = (0..rng.random_range(0..6)).map(|_| Cell::new(rng.random_range(-4..=4), rng.random_range(-4..=4))).collect();
        let ext = move |c: Cell| {
            let s = c.x as f64 * theta.cos() + c.y as f64 * theta.sin() - off;
            Some(if (s >= 0.0) != flips.contains(&c) { 1i8 } else { -1 })
        };
        let oracle = enumerate_constrained_perimeter(&free, &ext, stencil)?;
        let zero = |_: Cell| (0.0, 0.0);
        let (mut diff, mut member) = (0.0f64, true);
        for encoding in [FrozenEncoding::HardArcs, FrozenEncoding::Folded] {
            let p = RegionProblem { free: &free, stencil, pair_weight: 1.0, unary: &zero, frozen: &ext, encoding };
            for solver in maxflow::solvers() {
                let sol = solve_region(&p, *solver)?;
                diff = diff.max((sol.energy - oracle.min_perimeter).abs());
                member &= oracle.argmins.contains(&sol.spins);
            }
        }
        let mut s = Scalars::default();
        s.num("oracle", oracle.min_perimeter).num("max_abs_diff", diff).flag("argmin_member", member);
        Ok(s)
    }

    fn min_cut(&self, seed: u64) -> Result<Scalars> {
        let mut rng = sampling_rng(seed);
        let n = self.p.mincut_nodes;
        let mut g = CutGraph::with_nodes(n + 2);
        let mut arcs = Vec::new();
        for u in 2..n + 2 {
            for (from, to) in [(SOURCE, u), (u, SINK)] {
                if rng.random_bool(0.5) {
                    arcs.push((from, to, rng.random_range(0.0..5.0)));
                }
            }
            for v in 2..n + 2 {
                if u != v && rng.random_bool(0.3) {
                    arcs.push((u, v, rng.random_range(0.0..3.0)));
                }
            }
        }
        for &(u, v, c) in &arcs {
            g.add_arc(u, v, c);
        }
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            let side = |u: usize| match u {
                SOURCE => true,
                SINK => false,
                _ => (mask >> (u - 2)) & 1 == 1,
            };
            best = best.min(arcs.iter().filter(|&&(u, v, _)| side(u) && !side(v)).map(|a| a.2).sum());
        }
        let mut diff = 0.0f64;
        let mut sides = Vec::new();
        for solver in maxflow::solvers() {
            let cut = solve_min_cut_with(*solver, &g)?;
            diff = diff.max((cut.value - best).abs());
            sides.push(cut.source_side);
        }
        let mut s = Scalars::default();
        s.num("oracle", best).num("max_abs_diff", diff).flag("argmin_member", sides.windows(2).all(|w| w[0] == w[1]));
        Ok(s)
    }
}

impl Plan for OraclePlan {
    fn units(&self) -> Vec<Unit> {
        let p = &self.p;
        let mut out = Vec::new();
        for i in 0..p.n_instances as u64 {
            for &e in &p.epsilons {
                for b in &p.boundaries {
                    for m in &p.modes {
                        for st in &p.stencils {
                            out.push(
                                Unit::new(i)
                                    .with("kind", "ground-state")
                                    .with("l", p.size)
                                    .with("epsilon", e)
                                    .with("boundary", b.as_str())
                                    .with("mode", m.as_str())
                                    .with("stencil", st.as_str())
                                    .with("noise", self.noise.to_string()),
                            );
                        }
                    }
                }
            }
        }
        for i in 0..p.sr_instances as u64 {
            let r = p.sr_radii[i as usize % p.sr_radii.len()];
            let st = &p.stencils[i as usize % p.stencils.len()];
            out.push(
                Unit::new(i)
                    .with("kind", "sr")
                    .with("radius", r)
                    .with("stencil", st.as_str())
                    .with("noise", self.noise.to_string()),
            );
        }
        for i in 0..p.perimeter_instances as u64 {
            let st = &p.stencils[i as usize % p.stencils.len()];
            out.push(Unit::new(i).with("kind", "perimeter").with("stencil", st.as_str()));
        }
        for i in 0..p.mincut_instances as u64 {
            out.push(Unit::new(i).with("kind", "mincut").with("nodes", p.mincut_nodes));
        }
        out
    }

    fn run(&self, unit: &Unit, seed: u64) -> Result<Scalars> {
        match unit.str("kind") {
            "ground-state" => self.ground_state(unit, seed),
            "sr" => self.weak_norm(unit, seed),
            "perimeter" => self.perimeter(unit, seed),
            "mincut" => self.min_cut(seed),
            other => unreachable!("unplanned kind {other}"),
        }
    }

    fn summarize(&self, records: &[Record]) -> Result<Summary> {
        let mut sum = Summary::new(&["kind", "instances", "max_abs_diff", "argmin_agreement"]);
        let tol = self.p.tolerance;
        for kind in ["ground-state", "sr", "perimeter", "mincut"] {
            let g: Vec<&Record> = records.iter().filter(|r| r.param_str("kind") == Some(kind)).collect();
            if g.is_empty() {
                continue;
            }
            let worst = g.iter().map(|r| r.scalar("max_abs_diff").unwrap_or(f64::NAN)).fold(0.0, f64::max);
            let agree = g.iter().filter(|r| r.flag("argmin_member") == Some(true)).count();
            sum.row(vec![Value::from(kind), Value::from(g.len()), cell(worst), Value::from(agree)]);
            let ok = worst <= tol && agree == g.len();
            sum.check(
                kind,
                ok,
                format!("{} instances, largest deviation {worst:.3e} (tolerance {tol:e}), {agree} argmin agreements", g.len()),
            );
        }
        Ok(sum)
    }

    fn check_record(&self, r: &Record) -> Vec<String> {
        let mut out = Vec::new();
        match r.scalar("max_abs_diff") {
            Some(d) if d <= self.p.tolerance => {}
            Some(d) => out.push(format!("deviation {d:e} from the enumerated optimum")),
            None => out.push("deviation missing".into()),
        }
        if r.flag("argmin_member") != Some(true) {
            out.push("solver optimum is not among the enumerated optima".into());
        }
        out
    }
}
