//! The experiment registry.
//!
//! An [`Experiment`] turns its parameter table into a [`Plan`]: a fixed list
//! of units, a function computing one unit from its seed, and a reducer from
//! records to a [`Summary`]. Units are independent, so the runner may
//! compute them in any order and on any number of workers.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::error::{CliError, Result};
use crate::record::{ParamMap, Record, Scalars};
use crate::summary::Summary;

mod common;
mod geometry_suite;
mod lemma_suite;
mod lstar;
mod ml_sweep;
mod noise_check;
mod oracle_suite;
mod pinned_sup;
mod sr_scaling;
mod sr_tails;

/// One independent piece of work.
#[derive(Clone, Debug, PartialEq)]
pub struct Unit {
    pub sample: u64,
    pub params: ParamMap,
}

impl Unit {
    pub fn new(sample: u64) -> Self {
        Self { sample, params: ParamMap::new() }
    }

    pub fn with(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.params.insert(key.into(), v.into());
        self
    }

    pub fn f64(&self, key: &str) -> f64 {
        self.params.get(key).and_then(crate::record::decode_f64).unwrap_or_else(|| panic!("unit lacks `{key}`"))
    }

    pub fn str(&self, key: &str) -> &str {
        self.params.get(key).and_then(Value::as_str).unwrap_or_else(|| panic!("unit lacks `{key}`"))
    }
}

pub trait Plan: Sync {
    fn units(&self) -> Vec<Unit>;
    fn run(&self, unit: &Unit, seed: u64) -> Result<Scalars>;
    /// Reduces the records of all units, given in unit order.
    fn summarize(&self, records: &[Record]) -> Result<Summary>;
    /// Invariants of a single record; each string describes a violation.
    fn check_record(&self, _record: &Record) -> Vec<String> {
        Vec::new()
    }
}

pub trait Experiment: Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn prepare(&self, params: &toml::Table) -> Result<Box<dyn Plan>>;
}

static EXPERIMENTS: [&dyn Experiment; 9] = [
    &noise_check::NoiseCheck,
    &ml_sweep::MlSweep,
    &lstar::LStar,
    &sr_scaling::SrScaling,
    &sr_tails::SrTails,
    &pinned_sup::PinnedSup,
    &geometry_suite::GeometrySuite,
    &lemma_suite::LemmaSuite,
    &oracle_suite::OracleSuite,
];

pub fn experiments() -> &'static [&'static dyn Experiment] {
    &EXPERIMENTS
}

pub fn experiment(name: &str) -> Result<&'static dyn Experiment> {
    EXPERIMENTS.iter().copied().find(|e| e.name() == name).ok_or_else(|| {
        let known: Vec<&str> = EXPERIMENTS.iter().map(|e| e.name()).collect();
        CliError::config("experiment", format!("unknown experiment `{name}` (known: {})", known.join(", ")))
    })
}

/// Records grouped by the values of `keys` in their params, groups in order
/// of first appearance.
pub(crate) fn group_by<'a>(records: &'a [Record], keys: &[&str]) -> Vec<(Vec<Value>, Vec<&'a Record>)> {
    let mut order: Vec<Vec<Value>> = Vec::new();
    let mut groups: BTreeMap<String, Vec<&Record>> = BTreeMap::new();
    for r in records {
        let k: Vec<Value> = keys.iter().map(|key| r.params.get(*key).cloned().unwrap_or(Value::Null)).collect();
        let tag = serde_json::to_string(&k).unwrap();
        let entry = groups.entry(tag).or_default();
        if entry.is_empty() {
            order.push(k);
        }
        entry.push(r);
    }
    order
        .into_iter()
        .map(|k| {
            let tag = serde_json::to_string(&k).unwrap();
            let g = groups.remove(&tag).unwrap();
            (k, g)
        })
        .collect()
}

/// `a ≤ b` up to two combined standard errors.
pub(crate) fn le_within_2se(a: f64, a_se: f64, b: f64, b_se: f64) -> bool {
    a <= b || a - b <= 2.0 * (a_se * a_se + b_se * b_se).sqrt()
}
