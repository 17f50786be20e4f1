//! Pinned suprema of the weighted weak norm over dyadic scales and over
//! nearby base points, compared with the single-scale value.

use serde::Deserialize;

use rfcurve::noise::{self, NoiseKind};
use rfcurve::stats::MIN_ENVELOPE_SAMPLES;
use rfcurve::weaknorm::{pinned_sup_scales, pinned_sup_space, s_r, scale_weight};
use rfcurve::Stencil;

use super::common::{default_t_grid, four_pi, increasing, positive, stat};
use super::sr_scaling::parse_noise_stencil;
use super::sr_tails::{envelope, ENVELOPE_COLUMNS};
use super::{Experiment, Plan, Unit};
use crate::config::{ensure, parse_params};
use crate::error::Result;
use crate::record::{Record, Scalars};
use crate::summary::Summary;

pub struct PinnedSup;

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Params {
    r_max: f64,
    half_width: usize,
    n_samples: usize,
    /// Means must lie within this factor of the single-scale mean.
    factor: f64,
    sigma2: f64,
    t_grid: Vec<f64>,
    noise: String,
    stencil: String,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            r_max: 64.0,
            half_width: 16,
            n_samples: 200,
            factor: 3.0,
            sigma2: four_pi(),
            t_grid: default_t_grid(),
            noise: "discretized-wn".into(),
            stencil: "lattice4".into(),
        }
    }
}

struct PinnedPlan {
    p: Params,
    kind: NoiseKind,
    stencil: Stencil,
}

impl Experiment for PinnedSup {
    fn name(&self) -> &'static str {
        "pinned-sup"
    }

    fn description(&self) -> &'static str {
        "pinned suprema over scales and space against the single-scale weak norm"
    }

    fn prepare(&self, params: &toml::Table) -> Result<Box<dyn Plan>> {
        let p: Params = parse_params(params)?;
        ensure(p.r_max >= 2.0, "params.r_max", "must be at least 2")?;
        positive("params.n_samples", p.n_samples)?;
        ensure(p.factor >= 1.0, "params.factor", "must be at least 1")?;
        ensure(p.sigma2 > 0.0, "params.sigma2", "must be positive")?;
        increasing("params.t_grid", &p.t_grid)?;
        let (kind, stencil) = parse_noise_stencil(&p.noise, &p.stencil)?;
        Ok(Box::new(PinnedPlan { p, kind, stencil }))
    }
}

impl Plan for PinnedPlan {
    fn units(&self) -> Vec<Unit> {
        (0..self.p.n_samples as u64)
            .map(|i| {
                Unit::new(i)
                    .with("r_max", self.p.r_max)
                    .with("half_width", self.p.half_width)
                    .with("noise", self.kind.to_string())
                    .with("stencil", self.stencil.to_string())
            })
            .collect()
    }

    fn run(&self, _unit: &Unit, seed: u64) -> Result<Scalars> {
        let (r_max, w) = (self.p.r_max, self.p.half_width);
        let side = 2 * (r_max.ceil() as usize + w) + 1;
        let f = noise::sample(self.kind, side, side, seed)?;
        let c = f.extent().center_cell();
        let scales = pinned_sup_scales(&f, c, r_max, self.stencil)?;
        let single = match scales.per_scale.last() {
            Some(s) if s.radius == r_max => s.s_r,
            _ => s_r(&f, r_max, c, self.stencil)?.value,
        };
        let space = pinned_sup_space(&f, c, r_max, w, self.stencil)?;
        let mut s = Scalars::default();
        s.num("scales", scales.value)
            .num("space", space.value)
            .num("single", single)
            .num("single_weighted", scale_weight(r_max) * single)
            .int("space_argmax_dx", space.argmax.0.x - c.x)
            .int("space_argmax_dy", space.argmax.0.y - c.y)
            .num("space_argmax_radius", space.argmax.1)
            .int("exact_evaluations", space.exact_evaluations as i64);
        Ok(s)
    }

    fn summarize(&self, records: &[Record]) -> Result<Summary> {
        let mut sum = Summary::new(&ENVELOPE_COLUMNS);
        let col = |k: &str| -> Vec<f64> { records.iter().filter_map(|r| r.scalar(k)).collect() };
        let (scales, space, single, weighted) = (col("scales"), col("space"), col("single"), col("single_weighted"));
        let m = |v: &[f64]| stat(v).mean;
        for (k, v) in [("scales", &scales), ("space", &space), ("single", &single), ("single_weighted", &weighted)] {
            let st = stat(v);
            sum.note(&format!("{k}_mean"), st.mean);
            sum.note(&format!("{k}_std_err"), st.se);
        }
        let reference = m(&weighted);
        let f = self.p.factor;
        for (name, v) in [("scales", &scales), ("space", &space)] {
            let ratio = m(v) / reference;
            sum.check(
                &format!("{name}-vs-single"),
                ratio <= f && ratio >= 1.0 / f,
                format!("mean {:.4} / weighted single-scale mean {reference:.4} = {ratio:.4}", m(v)),
            );
        }
        for (name, v) in [("scales", &scales), ("space", &space)] {
            if v.len() < MIN_ENVELOPE_SAMPLES {
                sum.check(&format!("{name}-envelope"), false, format!("only {} samples", v.len()));
            } else {
                envelope(&mut sum, name, v, self.p.sigma2, &self.p.t_grid)?;
            }
        }
        Ok(sum)
    }

    fn check_record(&self, r: &Record) -> Vec<String> {
        let mut out = Vec::new();
        let (Some(scales), Some(space), Some(w)) = (r.scalar("scales"), r.scalar("space"), r.scalar("single_weighted")) else {
            return vec!["pinned values missing".into()];
        };
        let dyadic = rfcurve::weaknorm::dyadic_scales(self.p.r_max).last() == Some(&self.p.r_max);
        if dyadic && scales < w * (1.0 - 1e-12) {
            out.push(format!("scale supremum {scales} below the single-scale value {w}"));
        }
        let centre_weight = rfcurve::weaknorm::space_weight(0.0);
        if space < centre_weight * scales * (1.0 - 1e-12) {
            out.push(format!("space supremum {space} below the centre value {}", centre_weight * scales));
        }
        out
    }
}
