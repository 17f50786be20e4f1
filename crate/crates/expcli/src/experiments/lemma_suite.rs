//! Deterministic geometric bounds checked on random inputs: the height of
//! almost-straight curves, the tilt of nearby lines, the strong-excess
//! minimality of the averaged normal, and density bounds on ground states.

use std::f64::consts::PI;

use rand::Rng;
use serde::Deserialize;
use serde_json::Value;

use rfcurve::geometry::{
    averaged_normal, density_check, eta_audit_balls, height_bound_check, normal_tilt_check, strong_excess, LineConfig,
    NormalEstimate, TiltCheck, TILT_CONSTANT,
};
use rfcurve::groundstate::{ground_state_with, SpinField};
use rfcurve::lattice::{Extent, Point};
use rfcurve::maxflow::Boundary;
use rfcurve::noise;

use super::common::{dobrushin, jump_points, nonempty, positive, sampling_rng, Model};
use super::{Experiment, Plan, Unit};
use crate::config::{ensure, parse_params};
use crate::error::Result;
use crate::record::{Record, Scalars};
use crate::summary::{cell, Summary};

pub struct LemmaSuite;

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Params {
    etas: Vec<f64>,
    chords: Vec<f64>,
    polylines_per_cell: usize,
    tilt_pairs: usize,
    /// Polylines or line pairs per unit.
    batch: usize,
    argmin_configs: usize,
    /// Angles of the grid searched for the strong-excess minimum.
    argmin_grid: usize,
    density_points: usize,
    density_states: usize,
    density_size: usize,
    density_epsilon: f64,
    density_max_radius: f64,
    angle: f64,
    noise: String,
    stencil: String,
    mode: String,
    solver: String,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            etas: vec![0.0, 0.1, 0.5, 1.0],
            chords: vec![0.5, 2.0, 10.0],
            polylines_per_cell: 10_000,
            tilt_pairs: 10_000,
            batch: 1000,
            argmin_configs: 100,
            argmin_grid: 3600,
            density_points: 1000,
            density_states: 10,
            density_size: 128,
            density_epsilon: 0.05,
            density_max_radius: 16.0,
            angle: 0.3,
            noise: "discretized-wn".into(),
            stencil: "crofton8".into(),
            mode: "continuum-bv".into(),
            solver: "bk".into(),
        }
    }
}

struct LemmaPlan {
    p: Params,
    model: Model,
}

impl Experiment for LemmaSuite {
    fn name(&self) -> &'static str {
        "lemma-suite"
    }

    fn description(&self) -> &'static str {
        "height, tilt, averaged-normal argmin and density bounds on random inputs"
    }

    fn prepare(&self, params: &toml::Table) -> Result<Box<dyn Plan>> {
        let p: Params = parse_params(params)?;
        nonempty("params.etas", &p.etas)?;
        ensure(p.etas.iter().all(|e| (0.0..=1.0).contains(e)), "params.etas", "must lie in [0, 1]")?;
        nonempty("params.chords", &p.chords)?;
        ensure(p.chords.iter().all(|c| *c > 0.0 && c.is_finite()), "params.chords", "must be positive")?;
        positive("params.batch", p.batch)?;
        positive("params.argmin_grid", p.argmin_grid)?;
        ensure(p.density_states > 0 || p.density_points == 0, "params.density_states", "must be positive")?;
        ensure(
            p.density_max_radius >= 2.0 && 2.0 * p.density_max_radius + 4.0 < p.density_size as f64,
            "params.density_max_radius",
            "must be at least 2 and fit twice into the box",
        )?;
        ensure(p.density_epsilon >= 0.0, "params.density_epsilon", "must be nonnegative")?;
        let model = Model::parse(&p.noise, &p.stencil, &p.mode, &p.solver)?;
        Ok(Box::new(LemmaPlan { p, model }))
    }
}

/// Interior vertices displaced from the chord, then pulled towards it until
/// the length budget `(1+η)|A−B|` holds.
fn admissible_polyline(a: Point, b: Point, eta: f64, raw: &[(f64, f64)]) -> Vec<Point> {
    let chord = b - a;
    let t = chord.perp();
    let n = raw.len() + 1;
    let on_chord = |i: usize| a + chord * (i as f64 / n as f64);
    let base: Vec<Point> = (0..=n)
        .map(|i| {
            let off = if i == 0 || i == n { (0.0, 0.0) } else { raw[i - 1] };
            on_chord(i) + chord * (off.0 / n as f64) + t * off.1
        })
        .collect();
    let scaled = |lambda: f64| -> Vec<Point> { (0..=n).map(|i| on_chord(i) + (base[i] - on_chord(i)) * lambda).collect() };
    let len = |p: &[Point]| p.windows(2).map(|w| w[0].dist(w[1])).sum::<f64>();
    let budget = (1.0 + eta) * a.dist(b);
    if len(&base) <= budget {
        return base;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let m = 0.5 * (lo + hi);
        if len(&scaled(m)) <= budget {
            lo = m;
        } else {
            hi = m;
        }
    }
    scaled(lo)
}

/// The tent from `A` over the midpoint to `B` using the whole budget.
fn tent(a: Point, b: Point, eta: f64) -> Vec<Point> {
    let half = a.dist(b) / 2.0;
    let h = half * ((1.0 + eta).powi(2) - 1.0).sqrt();
    let n = (b - a).perp() * (1.0 / (2.0 * half));
    vec![a, (a + b) * 0.5 + n * h, b]
}

fn spin_from_rng(rng: &mut impl Rng, w: usize) -> SpinField {
    let bits: Vec<bool> = (0..w * w).map(|_| rng.random()).collect();
    SpinField::from_fn(Extent::new(0, 0, w, w), Boundary::Free, |c| if bits[c.y as usize * w + c.x as usize] { 1 } else { -1 })
        .expect("square field")
}

impl LemmaPlan {
    fn height(&self, eta: f64, chord: f64, count: usize, rng: &mut impl Rng) -> Result<Scalars> {
        let (mut violations, mut worst) = (0i64, 0.0f64);
        for k in 0..count {
            let a = Point::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let b = a + Point::from_angle(rng.random_range(0.0..2.0 * PI)) * chord;
            let poly = if k == 0 {
                tent(a, b, eta)
            } else {
                let raw: Vec<(f64, f64)> = (0..rng.random_range(1..8))
                    .map(|_| (rng.random_range(-0.5..0.5), rng.random_range(-2.0..2.0)))
                    .collect();
                admissible_polyline(a, b, eta, &raw)
            };
            let h = height_bound_check(a, b, eta, &poly)?;
            violations += i64::from(!h.ok);
            if h.bound > 0.0 {
                worst = worst.max(h.h / h.bound);
            }
        }
        let mut s = Scalars::default();
        s.int("checked", count as i64).int("violations", violations).num("max_ratio", worst);
        Ok(s)
    }

    fn closed_form(&self) -> Result<Scalars> {
        let (a, b) = (Point::new(0.0, 0.0), Point::new(2.0, 0.0));
        let h = height_bound_check(a, b, 0.5, &tent(a, b, 0.5))?;
        let expected = 0.5 * 5f64.sqrt();
        let mut s = Scalars::default();
        s.int("checked", 1)
            .int("violations", i64::from(!h.ok || (h.h - expected).abs() > 1e-12))
            .num("h", h.h)
            .num("expected_h", expected)
            .num("max_ratio", h.h / h.bound);
        Ok(s)
    }

    fn tilt(&self, count: usize, rng: &mut impl Rng) -> Scalars {
        let (mut checked, mut skipped, mut violations, mut worst) = (0usize, 0i64, 0i64, 0.0f64);
        while checked < count {
            let t1 = rng.random_range(0.0..2.0 * PI);
            let s1 = rng.random_range(-0.25..0.25);
            let t2 = t1 + rng.random_range(-0.3..0.3);
            let s2 = s1 + rng.random_range(-0.3..0.3);
            let a = LineConfig { anchor: Point::from_angle(t1) * s1, normal: Point::from_angle(t1) };
            let b = LineConfig { anchor: Point::from_angle(t2) * s2, normal: Point::from_angle(t2) };
            match normal_tilt_check(&a, &b) {
                TiltCheck::Checked { d, tilt, ok } => {
                    checked += 1;
                    violations += i64::from(!ok);
                    if d > 0.0 {
                        worst = worst.max(tilt / (TILT_CONSTANT * d));
                    }
                }
                TiltCheck::Skipped => skipped += 1,
            }
        }
        let mut s = Scalars::default();
        s.int("checked", checked as i64).int("skipped", skipped).int("violations", violations).num("max_ratio", worst);
        s
    }

    fn argmin(&self, rng: &mut impl Rng) -> Result<Scalars> {
        let c = Point::new(4.0, 4.0);
        let (spin, r, nu) = loop {
            let spin = spin_from_rng(rng, 9);
            let r = rng.random_range(1.0..4.0);
            if let Ok(NormalEstimate::Unique(nu)) = averaged_normal(&spin, c, r) {
                break (spin, r, nu);
            }
        };
        let at_normal = strong_excess(&spin, nu, c, r);
        let n = self.p.argmin_grid;
        let best = (0..n)
            .map(|i| strong_excess(&spin, Point::from_angle(2.0 * PI * i as f64 / n as f64), c, r))
            .fold(f64::INFINITY, f64::min);
        let mut s = Scalars::default();
        s.int("checked", 1)
            .int("violations", i64::from(at_normal > best + 1e-9))
            .num("radius", r)
            .num("excess_at_normal", at_normal)
            .num("grid_minimum", best);
        Ok(s)
    }

    fn density(&self, count: usize, seed: u64, rng: &mut impl Rng) -> Result<Scalars> {
        let m = &self.model;
        let l = self.p.density_size;
        let field = noise::sample(m.noise, l, l, seed)?;
        let (_, bc) = dobrushin(field.extent(), self.p.angle)?;
        let gs = ground_state_with(m.solver, &field, self.p.density_epsilon, &bc, m.stencil, m.mode)?;
        let r_max = self.p.density_max_radius;
        let points = jump_points(&gs, r_max + 2.0);
        let (mut failures, mut min_fraction, mut max_eta) = (0i64, 1.0f64, 0.0f64);
        let mut checked = 0;
        for _ in 0..count {
            if points.is_empty() {
                break;
            }
            let x = points[rng.random_range(0..points.len())];
            let r = rng.random_range(2.0..=r_max);
            let eta = eta_audit_balls(&gs, &[(x.cell(), r + 1.0)])?.eta_hat;
            let d = density_check(&gs, x, r, eta)?;
            checked += 1;
            failures += i64::from(!d.all_ok());
            min_fraction = min_fraction.min(d.plus_fraction.min(d.minus_fraction));
            max_eta = max_eta.max(eta);
        }
        let mut s = Scalars::default();
        s.int("checked", checked as i64)
            .int("violations", failures)
            .num("min_phase_fraction", min_fraction)
            .num("max_eta", max_eta);
        Ok(s)
    }
}

fn batches(total: usize, batch: usize) -> Vec<usize> {
    (0..total.div_ceil(batch)).map(|b| batch.min(total - b * batch)).collect()
}

impl Plan for LemmaPlan {
    fn units(&self) -> Vec<Unit> {
        let p = &self.p;
        let mut out = Vec::new();
        for &eta in &p.etas {
            for &chord in &p.chords {
                for (b, n) in batches(p.polylines_per_cell, p.batch).into_iter().enumerate() {
                    out.push(Unit::new(b as u64).with("kind", "height").with("eta", eta).with("chord", chord).with("count", n));
                }
            }
        }
        out.push(Unit::new(0).with("kind", "height-closed-form").with("eta", 0.5).with("chord", 2.0));
        for (b, n) in batches(p.tilt_pairs, p.batch).into_iter().enumerate() {
            out.push(Unit::new(b as u64).with("kind", "tilt").with("count", n));
        }
        for i in 0..p.argmin_configs as u64 {
            out.push(Unit::new(i).with("kind", "argmin"));
        }
        if p.density_points > 0 {
            for (i, n) in batches(p.density_points, p.density_points.div_ceil(p.density_states)).into_iter().enumerate() {
                out.push(
                    self.model.tag(
                        Unit::new(i as u64)
                            .with("kind", "density")
                            .with("l", p.density_size)
                            .with("epsilon", p.density_epsilon)
                            .with("count", n),
                    ),
                );
            }
        }
        out
    }

    fn run(&self, unit: &Unit, seed: u64) -> Result<Scalars> {
        let mut rng = sampling_rng(seed);
        let count = || unit.f64("count") as usize;
        match unit.str("kind") {
            "height" => self.height(unit.f64("eta"), unit.f64("chord"), count(), &mut rng),
            "height-closed-form" => self.closed_form(),
            "tilt" => Ok(self.tilt(count(), &mut rng)),
            "argmin" => self.argmin(&mut rng),
            "density" => self.density(count(), seed, &mut rng),
            other => unreachable!("unplanned kind {other}"),
        }
    }

    fn summarize(&self, records: &[Record]) -> Result<Summary> {
        let mut sum = Summary::new(&["kind", "eta", "chord", "checked", "violations", "max_ratio"]);
        let mut groups: Vec<(String, Option<f64>, Option<f64>)> = Vec::new();
        for r in records {
            let key = (r.param_str("kind").unwrap_or_default().to_string(), r.param("eta"), r.param("chord"));
            if !groups.contains(&key) {
                groups.push(key);
            }
        }
        let opt = |v: Option<f64>| v.map_or(Value::Null, cell);
        for (kind, eta, chord) in &groups {
            let g: Vec<&Record> = records
                .iter()
                .filter(|r| r.param_str("kind") == Some(kind.as_str()) && r.param("eta") == *eta && r.param("chord") == *chord)
                .collect();
            let total = |k: &str| g.iter().filter_map(|r| r.scalar(k)).sum::<f64>();
            let worst = g.iter().filter_map(|r| r.scalar("max_ratio")).fold(f64::NAN, f64::max);
            sum.row(vec![
                Value::from(kind.clone()),
                opt(*eta),
                opt(*chord),
                Value::from(total("checked") as u64),
                Value::from(total("violations") as u64),
                opt(Some(worst)),
            ]);
        }
        for (check, kinds) in [
            ("height", &["height"][..]),
            ("height-closed-form", &["height-closed-form"][..]),
            ("tilt", &["tilt"][..]),
            ("normal-argmin", &["argmin"][..]),
            ("density", &["density"][..]),
        ] {
            let g: Vec<&Record> = records.iter().filter(|r| kinds.contains(&r.param_str("kind").unwrap_or_default())).collect();
            if g.is_empty() {
                continue;
            }
            let checked: f64 = g.iter().filter_map(|r| r.scalar("checked")).sum();
            let bad: f64 = g.iter().filter_map(|r| r.scalar("violations")).sum();
            sum.check(check, bad == 0.0, format!("{bad} violations in {checked} cases"));
        }
        if let Some(r) = records.iter().find(|r| r.param_str("kind") == Some("height-closed-form")) {
            sum.note("closed_form_h", r.scalar("h").unwrap_or(f64::NAN));
        }
        Ok(sum)
    }

    fn check_record(&self, r: &Record) -> Vec<String> {
        match r.scalar("violations") {
            Some(v) if v == 0.0 => Vec::new(),
            Some(v) => vec![format!("{v} violations of the {} bound", r.param_str("kind").unwrap_or("?"))],
            None => vec!["violation count missing".into()],
        }
    }
}
