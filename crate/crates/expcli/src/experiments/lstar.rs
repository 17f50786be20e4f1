//! Correlation length `L*`: the first box size of the grid at which `m̂(L)`
//! falls below a threshold.

use serde::Deserialize;
use serde_json::Value;

use rfcurve::groundstate::CorrelationLength;

use super::common::{paired_origin, Model};
use super::ml_sweep::{coupling_check, order_parameter, paired_check};
use super::{Experiment, Plan, Unit};
use crate::config::{ensure, parse_params};
use crate::error::Result;
use crate::record::{Record, Scalars};
use crate::summary::{cell, Summary};

pub struct LStar;

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Params {
    epsilons: Vec<f64>,
    /// Strictly increasing box sizes.
    sizes: Vec<usize>,
    n_samples: usize,
    p0: f64,
    /// When set, every `L*` must exist and be at most this.
    max_l_star: Option<usize>,
    noise: String,
    stencil: String,
    mode: String,
    solver: String,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            epsilons: vec![4.0],
            sizes: vec![4, 8, 16, 32],
            n_samples: 200,
            p0: 0.5,
            max_l_star: None,
            noise: "discretized-wn".into(),
            stencil: "lattice4".into(),
            mode: "rfim".into(),
            solver: "bk".into(),
        }
    }
}

struct LStarPlan {
    p: Params,
    model: Model,
    grid: super::ml_sweep::Params,
}

impl Experiment for LStar {
    fn name(&self) -> &'static str {
        "lstar"
    }

    fn description(&self) -> &'static str {
        "correlation length: first box size with m(L) below a threshold"
    }

    fn prepare(&self, params: &toml::Table) -> Result<Box<dyn Plan>> {
        let p: Params = parse_params(params)?;
        ensure(p.sizes.windows(2).all(|w| w[0] < w[1]), "params.sizes", "must be strictly increasing")?;
        ensure(p.p0 > 0.0 && p.p0 < 1.0, "params.p0", "must lie in (0, 1)")?;
        let grid = super::ml_sweep::Params {
            epsilons: p.epsilons.clone(),
            sizes: p.sizes.clone(),
            n_samples: p.n_samples,
            noise: p.noise.clone(),
            stencil: p.stencil.clone(),
            mode: p.mode.clone(),
            solver: p.solver.clone(),
        };
        let model = grid.validate()?;
        Ok(Box::new(LStarPlan { p, model, grid }))
    }
}

impl Plan for LStarPlan {
    fn units(&self) -> Vec<Unit> {
        self.grid.units(&self.model)
    }

    fn run(&self, unit: &Unit, seed: u64) -> Result<Scalars> {
        paired_origin(&self.model, unit.f64("epsilon"), unit.f64("l") as usize, seed)
    }

    fn summarize(&self, records: &[Record]) -> Result<Summary> {
        let mut sum = Summary::new(&["epsilon", "l", "n", "m_hat", "std_err", "l_star"]);
        coupling_check(&mut sum, records);
        let mut problems = Vec::new();
        for &e in &self.p.epsilons {
            let mut table = Vec::new();
            for &l in &self.p.sizes {
                let group: Vec<&Record> =
                    records.iter().filter(|r| r.param("l") == Some(l as f64) && r.param("epsilon") == Some(e)).collect();
                if !group.is_empty() {
                    table.push((l, order_parameter(&group)));
                }
            }
            let cl = CorrelationLength::from_table(table, self.p.p0);
            let l_star = cl.l_star();
            for (l, m) in cl.table() {
                sum.row(vec![
                    cell(e),
                    Value::from(*l),
                    Value::from(m.n_samples),
                    cell(m.m_hat),
                    cell(m.std_err),
                    l_star.map_or(Value::Null, Value::from),
                ]);
            }
            sum.note(&format!("l_star_eps_{e}"), l_star.map_or(f64::INFINITY, |l| l as f64));
            if let Some(max) = self.p.max_l_star {
                match l_star {
                    Some(l) if l <= max => {}
                    Some(l) => problems.push(format!("epsilon {e}: L* = {l} > {max}")),
                    None => problems.push(format!("epsilon {e}: threshold not reached")),
                }
            }
        }
        if let Some(max) = self.p.max_l_star {
            let detail = if problems.is_empty() { format!("L* <= {max} for every epsilon") } else { problems.join("; ") };
            sum.check("l-star", problems.is_empty(), detail);
        }
        Ok(sum)
    }

    fn check_record(&self, r: &Record) -> Vec<String> {
        paired_check(r)
    }
}
