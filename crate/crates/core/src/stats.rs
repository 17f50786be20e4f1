//! Estimators, log-power fits and tail-envelope checks.
//!
//! Every estimator sorts its input first, so results are bit-identical under
//! any permutation of the samples.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::lattice::Cell;
use crate::noise::{self, NoiseKind};
use crate::rng::derive_seed;

/// Quantile levels reported by [`Summary`].
pub const QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance (0 for a single sample).
    pub variance: f64,
    pub std_err: f64,
    pub min: f64,
    pub max: f64,
    /// Values at [`QUANTILE_LEVELS`].
    pub quantiles: Vec<(f64, f64)>,
}

impl Summary {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return invalid("summary of an empty sample");
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return invalid("samples must be finite");
        }
        let s = sorted(samples);
        let n = s.len();
        let mean = s.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 {
            s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Ok(Self {
            n,
            mean,
            variance,
            std_err: (variance / n as f64).sqrt(),
            min: s[0],
            max: s[n - 1],
            quantiles: QUANTILE_LEVELS.iter().map(|&p| (p, quantile_sorted(&s, p))).collect(),
        })
    }
}

/// Model `value = a · (ln R)^b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFit {
    pub a: f64,
    pub b: f64,
    /// Largest absolute residual in `ln value`.
    pub residual: f64,
}

impl ScalingFit {
    pub fn predict(&self, r: f64) -> f64 {
        self.a * r.ln().powf(self.b)
    }
}

/// Least squares of `ln value` against `ln ln R`.
pub fn fit_log_power(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return invalid("a log-power fit needs at least three points");
    }
    let mut pts = points.to_vec();
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    for w in pts.windows(2) {
        if w[0].0 == w[1].0 {
            return invalid(format!("duplicate scale {}", w[0].0));
        }
    }
    for &(r, v) in &pts {
        if !(r >= 3.0) {
            return invalid(format!("scale {r} is below 3"));
        }
        if !(v > 0.0 && v.is_finite()) {
            return invalid(format!("value {v} is not positive"));
        }
    }
    let xy: Vec<(f64, f64)> = pts.iter().map(|&(r, v)| (r.ln().ln(), v.ln())).collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    let ln_a = my - b * mx;
    let residual = xy.iter().map(|p| (p.1 - ln_a - b * p.0).abs()).fold(0.0, f64::max);
    Ok(ScalingFit { a: ln_a.exp(), b, residual })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeRow {
    pub t: f64,
    /// Fraction of samples with `|x − mean| ≥ t`.
    pub empirical: f64,
    /// `min(1, 2·exp(−t²/(2σ²)))`.
    pub bound: f64,
    /// Three binomial standard errors at the bound.
    pub slack: f64,
    pub violation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeCheck {
    pub rows: Vec<EnvelopeRow>,
    /// Largest `empirical − bound − slack` over the grid (≤ 0 when passing).
    pub max_violation: f64,
    pub ok: bool,
}

pub const MIN_ENVELOPE_SAMPLES: usize = 100;

/// Compares two-sided empirical tails about the sample mean with the
/// sub-Gaussian bound `2·exp(−t²/(2σ²))` plus three standard errors.
pub fn subgaussian_envelope_check(samples: &[f64], sigma2: f64, t_grid: &[f64]) -> Result<EnvelopeCheck> {
    if samples.len() < MIN_ENVELOPE_SAMPLES {
        return invalid(format!("envelope check needs at least {MIN_ENVELOPE_SAMPLES} samples"));
    }
    if !(sigma2 > 0.0) {
        return invalid("sigma2 must be positive");
    }
    let s = sorted(samples);
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let rows: Vec<EnvelopeRow> = t_grid
        .iter()
        .map(|&t| {
            let hits = s.iter().filter(|&&x| (x - mean).abs() >= t).count();
            let empirical = hits as f64 / n;
            let bound = (2.0 * (-t * t / (2.0 * sigma2)).exp()).min(1.0);
            let slack = 3.0 * (bound * (1.0 - bound) / n).sqrt();
            EnvelopeRow { t, empirical, bound, slack, violation: empirical - bound - slack }
        })
        .collect();
    let max_violation = rows.iter().map(|r| r.violation).fold(f64::NEG_INFINITY, f64::max);
    let ok = rows.iter().all(|r| r.violation <= 0.0);
    Ok(EnvelopeCheck { rows, max_violation, ok })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupFieldRow {
    pub r: usize,
    pub mean: f64,
    pub std_err: f64,
    /// `mean / √(ln R)`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupFieldScaling {
    pub rows: Vec<SupFieldRow>,
    pub max_ratio: f64,
    /// Present when at least three scales are ≥ 3.
    pub fit: Option<ScalingFit>,
}

/// Per-sample `sup_{Q_R} |ξ|` over nested centred `R × R` boxes of one field
/// of side `max(R_list)`. Sample `i` uses `derive_seed(master_seed, i)`.
pub fn sup_field_samples(kind: NoiseKind, r_list: &[usize], n_samples: usize, master_seed: u64) -> Result<Vec<Vec<f64>>> {
    if r_list.is_empty() || r_list.iter().any(|&r| r < 2) {
        return invalid("box sizes must be at least 2");
    }
    let side = *r_list.iter().max().unwrap();
    (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let f = noise::sample(kind, side, side, derive_seed(master_seed, i))?;
            let c = Cell::new((side / 2) as i64, (side / 2) as i64);
            Ok(r_list
                .iter()
                .map(|&r| {
                    let lo = |v: i64| v - (r / 2) as i64;
                    let mut m = 0.0f64;
                    for y in lo(c.y)..lo(c.y) + r as i64 {
                        for x in lo(c.x)..lo(c.x) + r as i64 {
                            m = m.max(f.at(Cell::new(x, y)).abs());
                        }
                    }
                    m
                })
                .collect())
        })
        .collect()
}

pub fn sup_field_scaling(kind: NoiseKind, r_list: &[usize], n_samples: usize, master_seed: u64) -> Result<SupFieldScaling> {
    if n_samples == 0 {
        return invalid("need at least one sample");
    }
    let samples = sup_field_samples(kind, r_list, n_samples, master_seed)?;
    let mut rows = Vec::new();
    for (k, &r) in r_list.iter().enumerate() {
        let col: Vec<f64> = samples.iter().map(|s| s[k]).collect();
        let sum = Summary::from_samples(&col)?;
        rows.push(SupFieldRow { r, mean: sum.mean, std_err: sum.std_err, ratio: sum.mean / (r as f64).ln().sqrt() });
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.r >= 3).map(|r| (r.r as f64, r.mean)).collect();
    let fit = if pts.len() >= 3 { Some(fit_log_power(&pts)?) } else { None };
    Ok(SupFieldScaling { rows, max_ratio, fit })
}
