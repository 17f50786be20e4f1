//! End-to-end acceptance campaigns.
//!
//! Prints one `criterion N: PASS|FAIL` line per criterion, then exits
//! nonzero if any criterion failed. Campaigns run at full size, so the whole
//! target takes tens of minutes on one core.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rfcurve_cli::record::read_records;
use rfcurve_cli::runner::{RunOptions, RECORDS_FILE};
use rfcurve_cli::{run, RunConfig, Summary};

struct Outcome {
    passed: bool,
    detail: String,
}

struct Campaign {
    summary: Summary,
    elapsed: Duration,
}

fn campaign(experiment: &str, params: &str, workers: usize, dir: &Path) -> Campaign {
    let text = format!(
        "schema_version = 1\nexperiment = \"{experiment}\"\nmaster_seed = 2024\noutput = \"unused\"\n[params]\n{params}"
    );
    let cfg = RunConfig::from_toml_str(&text).unwrap_or_else(|e| panic!("{experiment}: {e}"));
    let start = Instant::now();
    let out = run(&cfg, &RunOptions { workers, output: Some(dir.to_path_buf()) })
        .unwrap_or_else(|e| panic!("{experiment}: {e}"));
    Campaign { summary: out.summary, elapsed: start.elapsed() }
}

fn full(experiment: &str, params: &str) -> Campaign {
    let dir = tempfile::tempdir().unwrap();
    campaign(experiment, params, 0, dir.path())
}

/// All named checks must pass, plus the runner's own checks.
fn checks(c: &Campaign, names: &[&str]) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for name in names.iter().chain(&["record-invariants", "complete"]) {
        match c.summary.get_check(name) {
            Some(k) => {
                passed &= k.passed;
                if !k.passed || !["record-invariants", "complete"].contains(name) {
                    parts.push(format!("{} {}: {}", if k.passed { "ok" } else { "FAIL" }, k.name, k.detail));
                }
            }
            None => {
                passed = false;
                parts.push(format!("missing check {name}"));
            }
        }
    }
    Outcome { passed, detail: parts.join("; ") }
}

fn within(o: Outcome, elapsed: Duration, limit_s: Option<u64>) -> Outcome {
    let secs = elapsed.as_secs_f64();
    match limit_s {
        Some(l) => Outcome {
            passed: o.passed && secs < l as f64,
            detail: format!("{} [{secs:.1} s, limit {l} s]", o.detail),
        },
        None => Outcome { passed: o.passed, detail: format!("{} [{secs:.1} s]", o.detail) },
    }
}

fn criterion_1() -> Outcome {
    let c = full(
        "oracle-suite",
        "n_instances = 100\nsize = 4\nepsilons = [0.1, 1.0, 10.0]\nboundaries = [\"plus\", \"minus\"]\n\
         modes = [\"rfim\", \"continuum-bv\"]\nstencils = [\"lattice4\", \"crofton8\"]\n\
         sr_instances = 0\nperimeter_instances = 0\nmincut_instances = 0\ntolerance = 1e-9\n",
    );
    within(checks(&c, &["ground-state"]), c.elapsed, Some(60))
}

fn criterion_2() -> Outcome {
    let c = full(
        "oracle-suite",
        "n_instances = 0\nsr_instances = 100\nsr_radii = [1.0, 1.5, 2.0]\n\
         perimeter_instances = 0\nmincut_instances = 0\ntolerance = 1e-9\n",
    );
    within(checks(&c, &["sr"]), c.elapsed, Some(60))
}

fn criterion_3() -> Outcome {
    let c = full("ml-sweep", "epsilons = [0.1, 0.5, 1.0]\nsizes = [16, 32, 64]\nn_samples = 112\n");
    let mut o = checks(&c, &["coupling"]);
    o.passed &= c.summary.records >= 1000;
    o.detail = format!("{} paired solves; {}", c.summary.records, o.detail);
    within(o, c.elapsed, None)
}

fn criterion_4() -> Outcome {
    let m = full("ml-sweep", "epsilons = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0]\nsizes = [32]\nn_samples = 500\n");
    let l = full("lstar", "epsilons = [4.0]\nsizes = [4, 8, 16, 32]\nn_samples = 200\np0 = 0.5\nmax_l_star = 16\n");
    let a = checks(&m, &["zero-disorder", "decreasing-in-epsilon"]);
    let b = checks(&l, &["l-star"]);
    let o = Outcome { passed: a.passed && b.passed, detail: format!("{}; {}", a.detail, b.detail) };
    within(o, m.elapsed + l.elapsed, Some(30 * 60))
}

fn criterion_5() -> Outcome {
    let c = full(
        "sr-scaling",
        "radii = [8, 16, 32, 64, 128]\nn_samples = 500\nnoise = \"discretized-wn\"\nmax_spread = 3.0\n\
         exponent_range = [0.4, 1.1]\n",
    );
    within(checks(&c, &["normalized-spread", "exponent"]), c.elapsed, Some(2 * 3600))
}

fn criterion_6() -> Outcome {
    let c = full("sr-tails", "radius = 32\nn_samples = 2000\nsigma2 = 12.566370614359172\nt_grid = [0.5, 1.0, 1.5, 2.0, 3.0]\n");
    within(checks(&c, &["value-envelope"]), c.elapsed, Some(3600))
}

fn criterion_7() -> Outcome {
    let c = full("pinned-sup", "r_max = 64\nhalf_width = 16\nn_samples = 200\nfactor = 3.0\n");
    within(
        checks(&c, &["scales-vs-single", "space-vs-single", "scales-envelope", "space-envelope"]),
        c.elapsed,
        Some(2 * 3600),
    )
}

fn criterion_8() -> Outcome {
    let c = full(
        "lemma-suite",
        "etas = [0.0, 0.1, 0.5, 1.0]\nchords = [0.5, 2.0, 10.0]\npolylines_per_cell = 10000\ntilt_pairs = 10000\n\
         argmin_configs = 100\ndensity_points = 1000\ndensity_size = 128\ndensity_epsilon = 0.05\n",
    );
    within(
        checks(&c, &["height", "height-closed-form", "tilt", "normal-argmin", "density"]),
        c.elapsed,
        Some(5 * 60),
    )
}

fn criterion_9() -> Outcome {
    let c = full("geometry-suite", "size = 128\nepsilons = [0.0, 0.05, 0.2]\nn_samples = 50\n");
    within(checks(&c, &["eta-zero-disorder", "eta-monotone"]), c.elapsed, Some(30 * 60))
}

fn criterion_10() -> Outcome {
    let c = full("geometry-suite", "size = 256\nepsilons = [0.05, 0.1, 0.2]\nn_samples = 50\n");
    within(checks(&c, &["modulus-monotone", "exact-line"]), c.elapsed, Some(3600))
}

fn criterion_11() -> Outcome {
    let smoke = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke");
    let mut entries: Vec<_> = std::fs::read_dir(&smoke).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    let start = Instant::now();
    let mut differing = Vec::new();
    let mut compared = 0;
    for path in entries.iter().filter(|p| p.extension().is_some_and(|e| e == "toml")) {
        let cfg = RunConfig::load(path).unwrap();
        let mut lines = Vec::new();
        for workers in [1, 3] {
            let dir = tempfile::tempdir().unwrap();
            run(&cfg, &RunOptions { workers, output: Some(dir.path().to_path_buf()) })
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let (recs, _) = read_records(&dir.path().join(RECORDS_FILE)).unwrap();
            compared += recs.len();
            lines.push(recs.iter().map(|r| r.reproducible_line()).collect::<Vec<_>>());
        }
        if lines[0] != lines[1] {
            differing.push(cfg.experiment.clone());
        }
    }
    let o = Outcome {
        passed: differing.is_empty() && compared > 0,
        detail: format!(
            "{} experiments, {compared} records compared at 1 and 3 workers, differing: {}",
            entries.len(),
            if differing.is_empty() { "none".into() } else { differing.join(", ") }
        ),
    };
    within(o, start.elapsed(), None)
}

fn main() -> ExitCode {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [fn() -> Outcome; 11] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
        criterion_11,
    ];
    let mut failed = Vec::new();
    for (i, f) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let o = f();
        println!("criterion {n}: {} {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
