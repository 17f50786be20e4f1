//! Interface geometry of Dobrushin ground states: η-audit, best line fit,
//! few-jumps radius, one Campanato step, the scale-one modulus table and
//! bubbles, plus the averaged-normal spread on an exact rasterized line.

use serde::Deserialize;
use serde_json::Value;

use rfcurve::geometry::{
    averaged_normal, best_line_fit, bubble_detect, campanato_step, eta_audit, few_jumps_radius, modulus_table,
    LineConfig,
};
use rfcurve::groundstate::ground_state_with;
use rfcurve::noise;

use super::common::{dobrushin, jump_pairs, jump_points, nonempty, positive, sampling_rng, stat, Model};
use super::{le_within_2se, Experiment, Plan, Unit};
use crate::config::{ensure, parse_params};
use crate::error::Result;
use crate::record::{Record, Scalars};
use crate::summary::{cell, Summary};

pub struct GeometrySuite;

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Params {
    size: usize,
    epsilons: Vec<f64>,
    n_samples: usize,
    /// Normal angle of the boundary half-plane.
    angle: f64,
    /// Radius of the central ball for audit, fit and Campanato step;
    /// defaults to `size/2 − 2`.
    audit_radius: Option<f64>,
    audit_balls: usize,
    fit_angles: usize,
    fit_offsets: usize,
    n_pairs: usize,
    max_separation: f64,
    /// Normal angle of the exact-line fixture.
    line_angle: f64,
    /// Averaging radius on the exact-line fixture.
    line_radius: f64,
    line_pairs: usize,
    noise: String,
    stencil: String,
    mode: String,
    solver: String,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            size: 128,
            epsilons: vec![0.0, 0.05, 0.2],
            n_samples: 20,
            angle: 0.0,
            audit_radius: None,
            audit_balls: 20,
            fit_angles: 64,
            fit_offsets: 16,
            n_pairs: 200,
            max_separation: 16.0,
            line_angle: 0.3,
            line_radius: 16.0,
            line_pairs: 50,
            noise: "discretized-wn".into(),
            stencil: "crofton8".into(),
            mode: "continuum-bv".into(),
            solver: "bk".into(),
        }
    }
}

struct GeometryPlan {
    p: Params,
    model: Model,
    radius: f64,
}

impl Experiment for GeometrySuite {
    fn name(&self) -> &'static str {
        "geometry-suite"
    }

    fn description(&self) -> &'static str {
        "eta-audit, excess, Campanato step, modulus table and bubbles of interface ground states"
    }

    fn prepare(&self, params: &toml::Table) -> Result<Box<dyn Plan>> {
        let p: Params = parse_params(params)?;
        ensure(p.size >= 16, "params.size", "must be at least 16")?;
        nonempty("params.epsilons", &p.epsilons)?;
        ensure(p.epsilons.iter().all(|e| e.is_finite() && *e >= 0.0), "params.epsilons", "must be finite and nonnegative")?;
        positive("params.n_samples", p.n_samples)?;
        let radius = p.audit_radius.unwrap_or(p.size as f64 / 2.0 - 2.0);
        ensure(radius >= 4.0 && radius <= p.size as f64 / 2.0 - 1.0, "params.audit_radius", "must lie in [4, size/2 - 1]")?;
        positive("params.fit_angles", p.fit_angles)?;
        positive("params.fit_offsets", p.fit_offsets)?;
        ensure(p.max_separation > 0.0, "params.max_separation", "must be positive")?;
        ensure(
            p.line_radius >= 2.0 && 2.0 * p.line_radius + 4.0 < p.size as f64,
            "params.line_radius",
            "must be at least 2 and fit twice into the box",
        )?;
        let model = Model::parse(&p.noise, &p.stencil, &p.mode, &p.solver)?;
        Ok(Box::new(GeometryPlan { p, model, radius }))
    }
}

impl GeometryPlan {
    /// Largest averaged-normal difference at scale `line_radius` between
    /// random jump points of the rasterized line.
    fn line_fixture(&self, rng: &mut impl rand::Rng) -> Result<f64> {
        let l = self.p.size;
        let ext = rfcurve::lattice::Extent::new(0, 0, l, l);
        let line = LineConfig::from_angle(ext.center_cell().center(), self.p.line_angle);
        let spin = line.rasterize(ext)?;
        let r = self.p.line_radius;
        let points = jump_points(&spin, r + 1.0);
        let pairs = jump_pairs(&points, self.p.line_pairs, f64::INFINITY, rng);
        let mut worst = 0.0f64;
        for (x, y) in pairs {
            let (Some(a), Some(b)) = (averaged_normal(&spin, x, r)?.unique(), averaged_normal(&spin, y, r)?.unique()) else {
                continue;
            };
            worst = worst.max(a.dist(b));
        }
        Ok(worst)
    }
}

impl Plan for GeometryPlan {
    fn units(&self) -> Vec<Unit> {
        let mut out = Vec::new();
        for i in 0..self.p.n_samples as u64 {
            for &e in &self.p.epsilons {
                out.push(self.model.tag(Unit::new(i).with("l", self.p.size).with("epsilon", e)));
            }
        }
        out
    }

    fn run(&self, unit: &Unit, seed: u64) -> Result<Scalars> {
        let eps = unit.f64("epsilon");
        let m = &self.model;
        let l = self.p.size;
        let field = noise::sample(m.noise, l, l, seed)?;
        let (_, bc) = dobrushin(field.extent(), self.p.angle)?;
        let gs = ground_state_with(m.solver, &field, eps, &bc, m.stencil, m.mode)?;
        let c = field.extent().center_cell().center();
        let r = self.radius;
        let mut s = Scalars::default();

        let audit = eta_audit(&gs, c, r, self.p.audit_balls, seed)?;
        s.num("eta_hat", audit.eta_hat).int("eta_balls", audit.balls.len() as i64);

        let fit = best_line_fit(&gs, c, r, self.p.fit_angles, self.p.fit_offsets)?;
        s.num("fit_excess", fit.excess.l1_excess)
            .num("fit_strong_excess", fit.excess.strong_excess)
            .num("fit_normal_angle", fit.line.normal.y.atan2(fit.line.normal.x));

        match few_jumps_radius(&gs, &fit.line, c, r)? {
            Some(f) => s
                .flag("few_found", true)
                .num("few_radius", f.radius)
                .int("few_crossings", f.crossings as i64)
                .num("few_boundary_l1", f.boundary_l1)
                .num("few_bound", f.bound),
            None => s.flag("few_found", false),
        };
        match campanato_step(&gs, c, r, &fit.line) {
            Ok(step) => s
                .flag("campanato_found", true)
                .num("campanato_radius", step.radius)
                .num("campanato_tilt", step.tilt)
                .num("campanato_excess_out", step.excess_out),
            Err(rfcurve::Error::Precondition(_)) => s.flag("campanato_found", false),
            Err(e) => return Err(e.into()),
        };

        let mut rng = sampling_rng(seed);
        let points = jump_points(&gs, 2.0);
        let pairs = jump_pairs(&points, self.p.n_pairs, self.p.max_separation, &mut rng);
        let table = modulus_table(&gs, &pairs, eps)?;
        let ratios: Vec<f64> = table.rows.iter().map(|r| r.ratio).filter(|v| v.is_finite()).collect();
        s.int("modulus_rows", table.rows.len() as i64)
            .int("modulus_excluded", table.excluded_nonunique as i64)
            .num("modulus_max_difference", table.max_difference())
            .num("modulus_mean_ratio", stat(&ratios).mean)
            .num("modulus_max_ratio", ratios.iter().copied().fold(f64::NAN, f64::max));

        let bubbles = bubble_detect(&gs, c, l as f64);
        let mut ok = true;
        for b in &bubbles {
            ok &= b.energy_inequality_holds(&field, eps)?;
        }
        s.int("bubbles", bubbles.len() as i64).flag("bubble_inequality_ok", ok);

        s.num("line_max_difference", self.line_fixture(&mut rng)?).num("line_bound", 4.0 / self.p.line_radius);
        Ok(s)
    }

    fn summarize(&self, records: &[Record]) -> Result<Summary> {
        let mut sum = Summary::new(&[
            "epsilon",
            "n",
            "eta_mean",
            "eta_std_err",
            "fit_excess_mean",
            "few_found_rate",
            "campanato_found_rate",
            "campanato_tilt_mean",
            "modulus_max_mean",
            "modulus_max_std_err",
            "modulus_mean_ratio",
            "bubbles",
        ]);
        let mut eps = self.p.epsilons.clone();
        eps.sort_by(f64::total_cmp);
        let mut eta_rows = Vec::new();
        let mut mod_rows = Vec::new();
        let mut eta_zero = true;
        for &e in &eps {
            let g: Vec<&Record> = records.iter().filter(|r| r.param("epsilon") == Some(e)).collect();
            if g.is_empty() {
                continue;
            }
            let col = |k: &str| -> Vec<f64> { g.iter().filter_map(|r| r.scalar(k)).collect() };
            let rate = |k: &str| g.iter().filter(|r| r.flag(k) == Some(true)).count() as f64 / g.len() as f64;
            let eta = stat(&col("eta_hat"));
            let md = stat(&col("modulus_max_difference"));
            let finite_ratios: Vec<f64> = col("modulus_mean_ratio").into_iter().filter(|v| v.is_finite()).collect();
            if e == 0.0 && eta.max != 0.0 {
                eta_zero = false;
            }
            sum.row(vec![
                cell(e),
                Value::from(g.len()),
                cell(eta.mean),
                cell(eta.se),
                cell(stat(&col("fit_excess")).mean),
                cell(rate("few_found")),
                cell(rate("campanato_found")),
                cell(stat(&col("campanato_tilt")).mean),
                cell(md.mean),
                cell(md.se),
                cell(stat(&finite_ratios).mean),
                Value::from(col("bubbles").iter().sum::<f64>()),
            ]);
            eta_rows.push((e, eta));
            mod_rows.push((e, md));
        }
        if eps.contains(&0.0) {
            sum.check("eta-zero-disorder", eta_zero, "eta_hat = 0 on every zero-disorder ground state");
        }
        for (name, rows) in [("eta-monotone", &eta_rows), ("modulus-monotone", &mod_rows)] {
            let bad: Vec<String> = rows
                .windows(2)
                .filter(|w| !le_within_2se(w[0].1.mean, w[0].1.se, w[1].1.mean, w[1].1.se))
                .map(|w| format!("{} at {} exceeds {} at {}", w[0].1.mean, w[0].0, w[1].1.mean, w[1].0))
                .collect();
            let detail = if bad.is_empty() { "nondecreasing in epsilon within 2 SE".into() } else { bad.join("; ") };
            sum.check(name, bad.is_empty(), detail);
        }
        let bubble_bad = records.iter().filter(|r| r.flag("bubble_inequality_ok") != Some(true)).count();
        sum.check("bubble-inequality", bubble_bad == 0, format!("{bubble_bad} ground states with a violating bubble"));
        let line_worst = records.iter().filter_map(|r| r.scalar("line_max_difference")).fold(0.0, f64::max);
        let bound = 4.0 / self.p.line_radius;
        sum.note("line_max_difference", line_worst);
        sum.check("exact-line", line_worst <= bound, format!("largest difference {line_worst:.4}, bound 4/R = {bound:.4}"));
        Ok(sum)
    }

    fn check_record(&self, r: &Record) -> Vec<String> {
        let mut out = Vec::new();
        if r.param("epsilon") == Some(0.0) && r.scalar("eta_hat") != Some(0.0) {
            out.push("eta_hat is not zero at zero disorder".into());
        }
        if r.flag("bubble_inequality_ok") == Some(false) {
            out.push("a bubble violates the energy inequality".into());
        }
        out
    }
}
