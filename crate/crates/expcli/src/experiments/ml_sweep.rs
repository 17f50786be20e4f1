//! The order parameter `m̂(L)` over a grid of disorder strengths and box
//! sizes, with the monotone coupling checked on every paired solve.

use serde::Deserialize;
use serde_json::Value;

use rfcurve::groundstate::OrderParameter;

use super::common::{nonempty, paired_origin, positive, Model};
use super::{le_within_2se, Experiment, Plan, Unit};
use crate::config::{ensure, parse_params};
use crate::error::Result;
use crate::record::{Record, Scalars};
use crate::summary::{cell, Summary};

pub struct MlSweep;

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
pub(super) struct Params {
    pub epsilons: Vec<f64>,
    pub sizes: Vec<usize>,
    pub n_samples: usize,
    pub noise: String,
    pub stencil: String,
    pub mode: String,
    pub solver: String,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            epsilons: vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0],
            sizes: vec![16, 32],
            n_samples: 500,
            noise: "discretized-wn".into(),
            stencil: "lattice4".into(),
            mode: "rfim".into(),
            solver: "bk".into(),
        }
    }
}

impl Params {
    pub(super) fn validate(&self) -> Result<Model> {
        nonempty("params.epsilons", &self.epsilons)?;
        ensure(self.epsilons.iter().all(|e| e.is_finite() && *e >= 0.0), "params.epsilons", "must be finite and nonnegative")?;
        nonempty("params.sizes", &self.sizes)?;
        ensure(self.sizes.iter().all(|&l| l > 0), "params.sizes", "must be positive")?;
        positive("params.n_samples", self.n_samples)?;
        Model::parse(&self.noise, &self.stencil, &self.mode, &self.solver)
    }

    /// One unit per (sample, L, ε); a sample shares its seed across the grid.
    pub(super) fn units(&self, model: &Model) -> Vec<Unit> {
        let mut out = Vec::new();
        for i in 0..self.n_samples as u64 {
            for &l in &self.sizes {
                for &e in &self.epsilons {
                    out.push(model.tag(Unit::new(i).with("l", l).with("epsilon", e)));
                }
            }
        }
        out
    }
}

struct MlPlan {
    p: Params,
    model: Model,
}

impl Experiment for MlSweep {
    fn name(&self) -> &'static str {
        "ml-sweep"
    }

    fn description(&self) -> &'static str {
        "order parameter m(L) over disorder strengths and box sizes"
    }

    fn prepare(&self, params: &toml::Table) -> Result<Box<dyn Plan>> {
        let p: Params = parse_params(params)?;
        let model = p.validate()?;
        Ok(Box::new(MlPlan { p, model }))
    }
}

/// `m̂` of a group of paired-origin records.
pub(super) fn order_parameter(group: &[&Record]) -> OrderParameter {
    let hits = group.iter().filter(|r| r.scalar("differs") == Some(1.0)).count();
    OrderParameter::from_count(hits, group.len())
}

pub(super) fn coupling_check(sum: &mut Summary, records: &[Record]) {
    let bad = records.iter().filter(|r| r.flag("coupling_ok") != Some(true)).count();
    sum.check("coupling", bad == 0, format!("{bad} violations in {} paired solves", records.len()));
}

pub(super) fn paired_check(r: &Record) -> Vec<String> {
    let mut out = Vec::new();
    if r.flag("coupling_ok") != Some(true) {
        out.push("plus state does not dominate the minus state".into());
    }
    if r.param("epsilon") == Some(0.0) && r.scalar("differs") != Some(1.0) {
        out.push("central spin agrees at zero disorder".into());
    }
    out
}

impl Plan for MlPlan {
    fn units(&self) -> Vec<Unit> {
        self.p.units(&self.model)
    }

    fn run(&self, unit: &Unit, seed: u64) -> Result<Scalars> {
        paired_origin(&self.model, unit.f64("epsilon"), unit.f64("l") as usize, seed)
    }

    fn summarize(&self, records: &[Record]) -> Result<Summary> {
        let mut sum = Summary::new(&["l", "epsilon", "n", "m_hat", "std_err"]);
        coupling_check(&mut sum, records);
        let mut zero_ok = true;
        let mut monotone = Vec::new();
        for &l in &self.p.sizes {
            let mut eps: Vec<f64> = self.p.epsilons.clone();
            eps.sort_by(f64::total_cmp);
            let mut prev: Option<(f64, OrderParameter)> = None;
            for e in eps {
                let group: Vec<&Record> =
                    records.iter().filter(|r| r.param("l") == Some(l as f64) && r.param("epsilon") == Some(e)).collect();
                if group.is_empty() {
                    continue;
                }
                let m = order_parameter(&group);
                if e == 0.0 && m.m_hat != 1.0 {
                    zero_ok = false;
                }
                if let Some((pe, pm)) = prev {
                    if !le_within_2se(m.m_hat, m.std_err, pm.m_hat, pm.std_err) {
                        monotone.push(format!("L={l}: m({e}) = {} > m({pe}) = {}", m.m_hat, pm.m_hat));
                    }
                }
                sum.row(vec![Value::from(l), cell(e), Value::from(m.n_samples), cell(m.m_hat), cell(m.std_err)]);
                prev = Some((e, m));
            }
        }
        if self.p.epsilons.contains(&0.0) {
            sum.check("zero-disorder", zero_ok, "m_hat = 1 at epsilon = 0 for every L");
        }
        let detail = if monotone.is_empty() { "nonincreasing in epsilon within 2 SE".into() } else { monotone.join("; ") };
        sum.check("decreasing-in-epsilon", monotone.is_empty(), detail);
        Ok(sum)
    }

    fn check_record(&self, r: &Record) -> Vec<String> {
        paired_check(r)
    }
}
