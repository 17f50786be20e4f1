//! Two-sided tails of `S_R` at one radius against a sub-Gaussian envelope.

use serde::Deserialize;
use serde_json::Value;

use rfcurve::noise::NoiseKind;
use rfcurve::stats::{subgaussian_envelope_check, MIN_ENVELOPE_SAMPLES};
use rfcurve::Stencil;

use super::common::{default_t_grid, four_pi, increasing, stat};
use super::sr_scaling::{parse_noise_stencil, sr_record_check, sr_scalars};
use super::{Experiment, Plan, Unit};
use crate::config::{ensure, parse_params};
use crate::error::Result;
use crate::record::{Record, Scalars};
use crate::summary::{cell, Summary};

pub struct SrTails;

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Params {
    radius: f64,
    n_samples: usize,
    sigma2: f64,
    t_grid: Vec<f64>,
    noise: String,
    stencil: String,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            radius: 32.0,
            n_samples: 2000,
            sigma2: four_pi(),
            t_grid: default_t_grid(),
            noise: "discretized-wn".into(),
            stencil: "lattice4".into(),
        }
    }
}

struct TailPlan {
    p: Params,
    kind: NoiseKind,
    stencil: Stencil,
}

impl Experiment for SrTails {
    fn name(&self) -> &'static str {
        "sr-tails"
    }

    fn description(&self) -> &'static str {
        "empirical tails of S_R against a sub-Gaussian envelope"
    }

    fn prepare(&self, params: &toml::Table) -> Result<Box<dyn Plan>> {
        let p: Params = parse_params(params)?;
        ensure(p.radius >= 1.0, "params.radius", "must be at least 1")?;
        ensure(p.n_samples >= MIN_ENVELOPE_SAMPLES, "params.n_samples", format!("must be at least {MIN_ENVELOPE_SAMPLES}"))?;
        ensure(p.sigma2 > 0.0, "params.sigma2", "must be positive")?;
        increasing("params.t_grid", &p.t_grid)?;
        let (kind, stencil) = parse_noise_stencil(&p.noise, &p.stencil)?;
        Ok(Box::new(TailPlan { p, kind, stencil }))
    }
}

/// Envelope rows and check for one sample column.
pub(super) fn envelope(sum: &mut Summary, name: &str, values: &[f64], sigma2: f64, t_grid: &[f64]) -> Result<()> {
    let env = subgaussian_envelope_check(values, sigma2, t_grid)?;
    for row in &env.rows {
        sum.row(vec![
            Value::from(name),
            cell(row.t),
            cell(row.empirical),
            cell(row.bound),
            cell(row.slack),
            cell(row.violation),
        ]);
    }
    sum.note(&format!("{name}_max_violation"), env.max_violation);
    sum.check(
        &format!("{name}-envelope"),
        env.ok,
        format!("largest excess over bound + 3 SE: {:.3e}", env.max_violation),
    );
    Ok(())
}

pub(super) const ENVELOPE_COLUMNS: [&str; 6] = ["statistic", "t", "empirical", "bound", "slack", "violation"];

impl Plan for TailPlan {
    fn units(&self) -> Vec<Unit> {
        (0..self.p.n_samples as u64)
            .map(|i| {
                Unit::new(i)
                    .with("radius", self.p.radius)
                    .with("noise", self.kind.to_string())
                    .with("stencil", self.stencil.to_string())
            })
            .collect()
    }

    fn run(&self, unit: &Unit, seed: u64) -> Result<Scalars> {
        sr_scalars(self.kind, self.stencil, unit.f64("radius"), seed, false)
    }

    fn summarize(&self, records: &[Record]) -> Result<Summary> {
        let mut sum = Summary::new(&ENVELOPE_COLUMNS);
        let values: Vec<f64> = records.iter().filter_map(|r| r.scalar("value")).collect();
        let st = stat(&values);
        sum.note("mean", st.mean);
        sum.note("std_err", st.se);
        if values.len() < MIN_ENVELOPE_SAMPLES {
            sum.check("value-envelope", false, format!("only {} samples", values.len()));
            return Ok(sum);
        }
        envelope(&mut sum, "value", &values, self.p.sigma2, &self.p.t_grid)?;
        Ok(sum)
    }

    fn check_record(&self, r: &Record) -> Vec<String> {
        sr_record_check(r, self.stencil)
    }
}
