//! Moments and horizontal correlations of sampled noise against the exact
//! covariance of its class.

use serde::Deserialize;
use serde_json::Value;

use rfcurve::lattice::Cell;
use rfcurve::noise::{self, cutoff_covariance, NoiseKind, NoiseSampler};

use super::common::{nonempty, positive, stat};
use super::{group_by, Experiment, Plan, Unit};
use crate::config::{ensure, parse_params};
use crate::error::{CliError, Result};
use crate::record::{Record, Scalars};
use crate::summary::{cell, Summary};

pub struct NoiseCheck;

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Params {
    /// Sampler names.
    kinds: Vec<String>,
    width: usize,
    height: usize,
    n_samples: usize,
    /// Horizontal lags, each below `width`.
    lags: Vec<usize>,
    /// Absolute slack added to three standard errors.
    tolerance: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            kinds: vec!["discretized-wn".into(), "regularized-wn".into()],
            width: 32,
            height: 8,
            n_samples: 200,
            lags: vec![1, 2, 4, 20],
            tolerance: 0.01,
        }
    }
}

struct NoisePlan {
    p: Params,
    samplers: Vec<&'static dyn NoiseSampler>,
}

fn covariance(kind: NoiseKind, r: f64) -> f64 {
    match kind {
        NoiseKind::DiscretizedWN => f64::from(u8::from(r == 0.0)),
        NoiseKind::RegularizedWN => cutoff_covariance(r),
    }
}

impl Experiment for NoiseCheck {
    fn name(&self) -> &'static str {
        "noise-check"
    }

    fn description(&self) -> &'static str {
        "sample mean, variance and lagged covariances against the exact covariance"
    }

    fn prepare(&self, params: &toml::Table) -> Result<Box<dyn Plan>> {
        let p: Params = parse_params(params)?;
        nonempty("params.kinds", &p.kinds)?;
        positive("params.width", p.width)?;
        positive("params.height", p.height)?;
        ensure(p.n_samples >= 2, "params.n_samples", "must be at least 2")?;
        ensure(p.lags.iter().all(|&l| l > 0 && l < p.width), "params.lags", "lags must lie in 1..width")?;
        ensure(p.tolerance >= 0.0, "params.tolerance", "must be nonnegative")?;
        let samplers = p
            .kinds
            .iter()
            .enumerate()
            .map(|(i, k)| noise::sampler(k).map_err(|e| CliError::config(format!("params.kinds[{i}]"), e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Box::new(NoisePlan { p, samplers }))
    }
}

fn lag_key(l: usize) -> String {
    format!("cov_lag_{l}")
}

impl Plan for NoisePlan {
    fn units(&self) -> Vec<Unit> {
        let mut out = Vec::new();
        for s in &self.samplers {
            for i in 0..self.p.n_samples as u64 {
                out.push(Unit::new(i).with("noise", s.name()));
            }
        }
        out
    }

    fn run(&self, unit: &Unit, seed: u64) -> Result<Scalars> {
        let sampler = self.samplers.iter().find(|s| s.name() == unit.str("noise")).expect("planned sampler");
        let (w, h) = (self.p.width, self.p.height);
        let f = sampler.sample(w, h, seed)?;
        let n = (w * h) as f64;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for c in f.extent().cells() {
            let v = f.at(c);
            sum += v;
            sq += v * v;
        }
        let mut s = Scalars::default();
        s.num("mean", sum / n).num("second_moment", sq / n);
        for &l in &self.p.lags {
            let mut acc = 0.0;
            let mut count = 0usize;
            for y in 0..h as i64 {
                for x in 0..(w - l) as i64 {
                    acc += f.at(Cell::new(x, y)) * f.at(Cell::new(x + l as i64, y));
                    count += 1;
                }
            }
            s.num(&lag_key(l), acc / count as f64);
        }
        Ok(s)
    }

    fn summarize(&self, records: &[Record]) -> Result<Summary> {
        let mut sum = Summary::new(&["noise", "statistic", "expected", "mean", "std_err", "ok"]);
        let mut failures = Vec::new();
        for (key, group) in group_by(records, &["noise"]) {
            let name = key[0].as_str().unwrap_or_default().to_string();
            let kind: NoiseKind = name.parse()?;
            let mut stats = vec![("mean".to_string(), 0.0), ("second_moment".to_string(), covariance(kind, 0.0))];
            stats.extend(self.p.lags.iter().map(|&l| (lag_key(l), covariance(kind, l as f64))));
            for (stat_name, expected) in stats {
                let values: Vec<f64> = group.iter().filter_map(|r| r.scalar(&stat_name)).collect();
                let st = stat(&values);
                let ok = (st.mean - expected).abs() <= 3.0 * st.se + self.p.tolerance;
                if !ok {
                    failures.push(format!("{name} {stat_name}: {} vs {expected}", st.mean));
                }
                sum.row(vec![
                    Value::from(name.clone()),
                    Value::from(stat_name),
                    cell(expected),
                    cell(st.mean),
                    cell(st.se),
                    Value::Bool(ok),
                ]);
            }
        }
        let detail = if failures.is_empty() { "all statistics within 3 SE + tolerance".into() } else { failures.join("; ") };
        sum.check("moments", failures.is_empty(), detail);
        Ok(sum)
    }

    fn check_record(&self, r: &Record) -> Vec<String> {
        match r.scalar("second_moment") {
            Some(v) if v.is_finite() && v >= 0.0 => Vec::new(),
            _ => vec!["second moment missing or invalid".into()],
        }
    }
}
