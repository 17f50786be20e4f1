//! Executing, resuming, summarizing and verifying runs.
//!
//! An output directory holds `config.toml` (the configuration that produced
//! it), `records.jsonl`, `summary.json` and `summary.csv`. Units are computed
//! in chunks on a worker pool; each chunk is written in plan order once it
//! completes, so the record file is identical for every worker count.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::experiments::{experiment, Plan, Unit};
use crate::record::{read_records, rewrite_records, sample_seed, Record, RecordWriter, UnitKey};
use crate::summary::Summary;

pub const WORKERS_ENV: &str = "RFCURVE_WORKERS";
pub const CONFIG_FILE: &str = "config.toml";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SUMMARY_CSV: &str = "summary.csv";

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `0` reads [`WORKERS_ENV`].
    pub workers: usize,
    /// Replaces the configured output directory.
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summary: Summary,
    /// Units computed by this invocation.
    pub computed: usize,
    /// Units found in an earlier, interrupted run.
    pub resumed: usize,
    pub dir: PathBuf,
}

/// Worker count from [`WORKERS_ENV`], defaulting to the available
/// parallelism.
pub fn workers_from_env() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::config(WORKERS_ENV, format!("expected a positive integer, found `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn unit_record(cfg: &RunConfig, plan: &dyn Plan, unit: &Unit) -> Result<Record> {
    let seed = sample_seed(cfg.master_seed, &cfg.experiment, unit.sample);
    let start = Instant::now();
    let scalars = plan.run(unit, seed)?;
    Ok(Record {
        experiment: cfg.experiment.clone(),
        master_seed: cfg.master_seed,
        sample: unit.sample,
        seed,
        params: unit.params.clone(),
        scalars,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn key_of(unit: &Unit) -> UnitKey {
    crate::record::unit_key(unit.sample, &unit.params)
}

/// Checks that `records` belong to the run and to the plan, without repeats.
fn check_membership(cfg: &RunConfig, units: &[Unit], records: &[Record], path: &Path) -> Result<()> {
    let planned: HashSet<UnitKey> = units.iter().map(key_of).collect();
    let mut seen = HashSet::new();
    for (i, r) in records.iter().enumerate() {
        let bad = |message: String| CliError::Records { path: path.to_path_buf(), line: i + 1, message };
        if r.experiment != cfg.experiment || r.master_seed != cfg.master_seed {
            return Err(bad(format!("record of `{}` with master seed {} in this run", r.experiment, r.master_seed)));
        }
        if !planned.contains(&r.key()) {
            return Err(bad(format!("sample {} with these parameters is not part of the plan", r.sample)));
        }
        if !seen.insert(r.key()) {
            return Err(bad(format!("sample {} is recorded twice", r.sample)));
        }
    }
    Ok(())
}

/// Records in plan order, skipping units without a record.
fn in_plan_order(units: &[Unit], records: Vec<Record>) -> Vec<Record> {
    let mut by_key: HashMap<UnitKey, Record> = records.into_iter().map(|r| (r.key(), r)).collect();
    units.iter().filter_map(|u| by_key.remove(&key_of(u))).collect()
}

fn build_summary(cfg: &RunConfig, plan: &dyn Plan, units: &[Unit], records: &[Record]) -> Result<Summary> {
    let mut summary = plan.summarize(records)?;
    summary.experiment = cfg.experiment.clone();
    summary.master_seed = cfg.master_seed;
    summary.records = records.len();
    let violations: Vec<String> = records
        .iter()
        .flat_map(|r| plan.check_record(r).into_iter().map(move |v| format!("sample {}: {v}", r.sample)))
        .collect();
    let detail = violations.first().cloned().unwrap_or_else(|| "no violations".into());
    summary.check("record-invariants", violations.is_empty(), detail);
    summary.check("complete", records.len() == units.len(), format!("{} of {} units", records.len(), units.len()));
    Ok(summary)
}

fn write_summary(dir: &Path, summary: &Summary) -> Result<()> {
    summary.write_json(&dir.join(SUMMARY_JSON))?;
    let path = dir.join(SUMMARY_CSV);
    let file = std::fs::File::create(&path).map_err(CliError::io(&path))?;
    summary.write_csv(file).map_err(|e| CliError::io(&path)(std::io::Error::other(e)))
}

/// Executes or resumes the run described by `cfg`.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let plan = experiment(&cfg.experiment)?.prepare(&cfg.params)?;
    let workers = if opts.workers == 0 { workers_from_env()? } else { opts.workers };
    let dir = opts.output.clone().unwrap_or_else(|| cfg.output.clone());
    std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;

    let cfg_path = dir.join(CONFIG_FILE);
    if cfg_path.exists() {
        let previous = RunConfig::load(&cfg_path)?;
        if !previous.same_run(cfg) {
            return Err(CliError::config(
                "output",
                format!("{} holds a different run; choose another output directory", dir.display()),
            ));
        }
    } else {
        std::fs::write(&cfg_path, cfg.to_toml_string()).map_err(CliError::io(&cfg_path))?;
    }

    let units = plan.units();
    let rec_path = dir.join(RECORDS_FILE);
    let (existing, truncated) = read_records(&rec_path)?;
    check_membership(cfg, &units, &existing, &rec_path)?;
    if truncated {
        rewrite_records(&rec_path, &existing)?;
    }
    let done: HashSet<UnitKey> = existing.iter().map(Record::key).collect();
    let pending: Vec<&Unit> = units.iter().filter(|u| !done.contains(&key_of(u))).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::config(WORKERS_ENV, e.to_string()))?;
    let mut writer = RecordWriter::append(&rec_path)?;
    let mut all = existing;
    let resumed = all.len();
    for chunk in pending.chunks(4 * workers) {
        let results: Vec<Result<Record>> =
            pool.install(|| chunk.par_iter().map(|u| unit_record(cfg, plan.as_ref(), u)).collect());
        for r in results {
            let r = r?;
            writer.write(&r)?;
            all.push(r);
        }
    }
    let computed = all.len() - resumed;

    let ordered = in_plan_order(&units, all);
    let summary = build_summary(cfg, plan.as_ref(), &units, &ordered)?;
    write_summary(&dir, &summary)?;
    Ok(RunOutcome { summary, computed, resumed, dir })
}

fn load_dir(records: &Path) -> Result<(RunConfig, Box<dyn Plan>)> {
    let dir = records.parent().unwrap_or(Path::new("."));
    let cfg = RunConfig::load(&dir.join(CONFIG_FILE))?;
    let plan = experiment(&cfg.experiment)?.prepare(&cfg.params)?;
    Ok((cfg, plan))
}

/// Recomputes the summary of a record file from the `config.toml` beside it
/// and rewrites the summary files there.
pub fn summarize_dir(records: &Path) -> Result<Summary> {
    let (cfg, plan) = load_dir(records)?;
    let units = plan.units();
    let (recs, _) = read_records(records)?;
    check_membership(&cfg, &units, &recs, records)?;
    let ordered = in_plan_order(&units, recs);
    let summary = build_summary(&cfg, plan.as_ref(), &units, &ordered)?;
    write_summary(records.parent().unwrap_or(Path::new(".")), &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub records: usize,
    pub recomputed: usize,
    pub problems: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Re-checks a record file: membership in the plan, seed derivation,
/// per-record invariants, and for `recompute` records spread over the file,
/// bit-exact agreement of a fresh computation.
pub fn verify(records: &Path, recompute: usize) -> Result<VerifyReport> {
    let (cfg, plan) = load_dir(records)?;
    let units = plan.units();
    let (recs, truncated) = read_records(records)?;
    let mut report = VerifyReport { records: recs.len(), ..Default::default() };
    if truncated {
        report.problems.push("the last line is incomplete".into());
    }
    if let Err(e) = check_membership(&cfg, &units, &recs, records) {
        report.problems.push(e.to_string());
    }
    for r in &recs {
        if r.seed != sample_seed(r.master_seed, &r.experiment, r.sample) {
            report.problems.push(format!("sample {}: seed {} does not match its derivation", r.sample, r.seed));
        }
        for v in plan.check_record(r) {
            report.problems.push(format!("sample {}: {v}", r.sample));
        }
    }
    let n = recompute.min(recs.len());
    let by_key: HashMap<UnitKey, &Unit> = units.iter().map(|u| (key_of(u), u)).collect();
    for i in 0..n {
        let r = &recs[i * recs.len() / n];
        let Some(unit) = by_key.get(&r.key()) else { continue };
        let fresh = unit_record(&cfg, plan.as_ref(), unit)?;
        report.recomputed += 1;
        if fresh.reproducible_line() != r.reproducible_line() {
            report.problems.push(format!("sample {}: recomputation differs", r.sample));
        }
    }
    Ok(report)
}

/// CSV of all records of `experiment`: `sample`, `seed`, every parameter
/// and every scalar, each scalar column named as recorded.
pub fn plotdata(records: &Path, experiment_name: &str, out: impl Write) -> Result<usize> {
    experiment(experiment_name)?;
    let (recs, _) = read_records(records)?;
    let recs: Vec<&Record> = recs.iter().filter(|r| r.experiment == experiment_name).collect();
    let mut params: Vec<&String> = recs.iter().flat_map(|r| r.params.keys()).collect();
    params.sort();
    params.dedup();
    let mut scalars: Vec<&String> = recs.iter().flat_map(|r| r.scalars.0.keys()).collect();
    scalars.sort();
    scalars.dedup();
    let csv_err = |e: csv::Error| CliError::io("<plotdata>")(std::io::Error::other(e));
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["sample".to_string(), "seed".to_string()];
    header.extend(params.iter().map(|p| p.to_string()));
    header.extend(scalars.iter().map(|s| s.to_string()));
    w.write_record(&header).map_err(csv_err)?;
    for r in &recs {
        let mut row = vec![r.sample.to_string(), r.seed.to_string()];
        row.extend(params.iter().map(|p| r.params.get(*p).map(crate::summary::cell_text).unwrap_or_default()));
        row.extend(scalars.iter().map(|s| r.scalars.0.get(*s).map(crate::summary::cell_text).unwrap_or_default()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io("<plotdata>")(e))?;
    Ok(recs.len())
}
