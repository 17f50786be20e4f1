//! Monte-Carlo means of `S_R` across radii and their fit to `a (ln R)^b`.

use serde::Deserialize;
use serde_json::Value;

use rfcurve::lattice::{decode_cells_rle, encode_cells_rle};
use rfcurve::noise::{self, NoiseKind};
use rfcurve::stats::fit_log_power;
use rfcurve::weaknorm::{field_side, s_r, set_perimeter};
use rfcurve::Stencil;

use super::common::{increasing, stat};
use super::{Experiment, Plan, Unit};
use crate::config::{ensure, parse_params};
use crate::error::{CliError, Result};
use crate::record::{Record, Scalars};
use crate::summary::{cell, Summary};

pub struct SrScaling;

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Params {
    radii: Vec<f64>,
    n_samples: usize,
    noise: String,
    stencil: String,
    /// Record the optimizing set, run-length encoded.
    store_optimizer: bool,
    /// Largest allowed ratio between normalized means.
    max_spread: f64,
    /// Accepted range of the fitted exponent.
    exponent_range: [f64; 2],
}

impl Default for Params {
    fn default() -> Self {
        Self {
            radii: vec![8.0, 16.0, 32.0, 64.0, 128.0],
            n_samples: 500,
            noise: "discretized-wn".into(),
            stencil: "lattice4".into(),
            store_optimizer: false,
            max_spread: 3.0,
            exponent_range: [0.4, 1.1],
        }
    }
}

pub(super) fn parse_noise_stencil(noise: &str, stencil: &str) -> Result<(NoiseKind, Stencil)> {
    let kind = noise.parse().map_err(|e: rfcurve::Error| CliError::config("params.noise", e.to_string()))?;
    let stencil = stencil.parse().map_err(|e: rfcurve::Error| CliError::config("params.stencil", e.to_string()))?;
    Ok((kind, stencil))
}

/// `S_R` at the centre of a fresh square field.
pub(super) fn sr_scalars(kind: NoiseKind, stencil: Stencil, radius: f64, seed: u64, store: bool) -> Result<Scalars> {
    let side = field_side(radius);
    let f = noise::sample(kind, side, side, seed)?;
    let res = s_r(&f, radius, f.extent().center_cell(), stencil)?;
    let mut s = Scalars::default();
    s.num("value", res.value)
        .num("integral", res.integral)
        .num("perimeter", res.perimeter)
        .int("sign", res.sign.into())
        .int("iterations", res.iterations as i64)
        .int("optimizer_cells", res.optimizer.len() as i64);
    if store {
        s.text("optimizer", encode_cells_rle(&res.optimizer));
    }
    Ok(s)
}

/// Consistency of a recorded `S_R` value with its optimizer.
pub(super) fn sr_record_check(r: &Record, stencil: Stencil) -> Vec<String> {
    let mut out = Vec::new();
    let (Some(v), Some(i), Some(p)) = (r.scalar("value"), r.scalar("integral"), r.scalar("perimeter")) else {
        return vec!["value, integral or perimeter missing".into()];
    };
    if !(v >= 0.0 && v.is_finite()) {
        out.push(format!("value {v} is not a finite nonnegative number"));
    } else if p > 0.0 && (i.abs() / p - v).abs() > 1e-9 * v.max(1.0) {
        out.push(format!("|integral|/perimeter = {} differs from value {v}", i.abs() / p));
    }
    if let Some(text) = r.scalars.0.get("optimizer").and_then(Value::as_str) {
        match decode_cells_rle(text) {
            Ok(cells) => {
                if Some(cells.len() as f64) != r.scalar("optimizer_cells") {
                    out.push("optimizer size differs from optimizer_cells".into());
                }
                let per = set_perimeter(&cells, stencil);
                if (per - p).abs() > 1e-9 * p.max(1.0) {
                    out.push(format!("optimizer perimeter {per} differs from {p}"));
                }
            }
            Err(e) => out.push(format!("optimizer: {e}")),
        }
    }
    out
}

struct SrPlan {
    p: Params,
    kind: NoiseKind,
    stencil: Stencil,
}

impl Experiment for SrScaling {
    fn name(&self) -> &'static str {
        "sr-scaling"
    }

    fn description(&self) -> &'static str {
        "Monte-Carlo mean of S_R across radii with a log-power fit"
    }

    fn prepare(&self, params: &toml::Table) -> Result<Box<dyn Plan>> {
        let p: Params = parse_params(params)?;
        increasing("params.radii", &p.radii)?;
        ensure(p.radii.len() >= 3 && p.radii[0] >= 3.0, "params.radii", "need at least three radii, all >= 3")?;
        ensure(p.n_samples >= 2, "params.n_samples", "must be at least 2")?;
        ensure(p.max_spread >= 1.0, "params.max_spread", "must be at least 1")?;
        ensure(p.exponent_range[0] <= p.exponent_range[1], "params.exponent_range", "must be an interval")?;
        let (kind, stencil) = parse_noise_stencil(&p.noise, &p.stencil)?;
        Ok(Box::new(SrPlan { p, kind, stencil }))
    }
}

impl Plan for SrPlan {
    fn units(&self) -> Vec<Unit> {
        let mut out = Vec::new();
        for i in 0..self.p.n_samples as u64 {
            for &r in &self.p.radii {
                out.push(
                    Unit::new(i)
                        .with("radius", r)
                        .with("noise", self.kind.to_string())
                        .with("stencil", self.stencil.to_string()),
                );
            }
        }
        out
    }

    fn run(&self, unit: &Unit, seed: u64) -> Result<Scalars> {
        sr_scalars(self.kind, self.stencil, unit.f64("radius"), seed, self.p.store_optimizer)
    }

    fn summarize(&self, records: &[Record]) -> Result<Summary> {
        let mut sum = Summary::new(&["radius", "n", "mean", "std_err", "normalized_mean"]);
        let mut points = Vec::new();
        let mut normalized = Vec::new();
        for &r in &self.p.radii {
            let values: Vec<f64> = records.iter().filter(|x| x.param("radius") == Some(r)).filter_map(|x| x.scalar("value")).collect();
            if values.is_empty() {
                continue;
            }
            let st = stat(&values);
            let norm = st.mean / r.ln().powf(0.75);
            sum.row(vec![cell(r), Value::from(st.n), cell(st.mean), cell(st.se), cell(norm)]);
            points.push((r, st.mean));
            normalized.push(norm);
        }
        let hi = normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = normalized.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = hi / lo;
        sum.note("spread", spread);
        sum.check(
            "normalized-spread",
            spread < self.p.max_spread,
            format!("max/min of mean/(ln R)^(3/4) = {spread:.4} (limit {})", self.p.max_spread),
        );
        match fit_log_power(&points) {
            Ok(fit) => {
                sum.note("fit_a", fit.a);
                sum.note("fit_b", fit.b);
                sum.note("fit_residual", fit.residual);
                let [lo, hi] = self.p.exponent_range;
                sum.check("exponent", fit.b >= lo && fit.b <= hi, format!("b = {:.4}, accepted [{lo}, {hi}]", fit.b));
            }
            Err(e) => sum.check("exponent", false, format!("fit failed: {e}")),
        }
        Ok(sum)
    }

    fn check_record(&self, r: &Record) -> Vec<String> {
        sr_record_check(r, self.stencil)
    }
}
