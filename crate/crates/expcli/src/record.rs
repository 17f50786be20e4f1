//! Record streams.
//!
//! Each completed unit of work becomes one JSON object on its own line of
//! `records.jsonl`:
//!
//! ```text
//! {"experiment":"sr-tails","master_seed":7,"sample":12,"seed":…,
//!  "params":{"radius":32.0,…},"scalars":{"value":1.93,…},"wall_time_s":0.02}
//! ```
//!
//! A record is identified by `(experiment, master_seed, sample, params)`.
//! Its noise seed is [`sample_seed`]; records for different parameter points
//! with the same sample index share the seed. Non-finite scalars are written
//! as the strings `"inf"`, `"-inf"` and `"nan"`. Only `wall_time_s` varies
//! between reruns.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// First 8 bytes (little endian) of
/// `SHA-256(master_seed as u64 LE ‖ experiment name UTF-8 ‖ sample as u64 LE)`.
pub fn sample_seed(master_seed: u64, experiment: &str, sample: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(experiment.as_bytes());
    h.update(sample.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

pub type ParamMap = BTreeMap<String, Value>;

/// Measured values of one unit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Scalars(pub BTreeMap<String, Value>);

impl Scalars {
    pub fn num(&mut self, key: &str, v: f64) -> &mut Self {
        self.0.insert(key.into(), encode_f64(v));
        self
    }

    pub fn int(&mut self, key: &str, v: i64) -> &mut Self {
        self.0.insert(key.into(), Value::from(v));
        self
    }

    pub fn flag(&mut self, key: &str, v: bool) -> &mut Self {
        self.0.insert(key.into(), Value::Bool(v));
        self
    }

    pub fn text(&mut self, key: &str, v: impl Into<String>) -> &mut Self {
        self.0.insert(key.into(), Value::String(v.into()));
        self
    }
}

pub fn encode_f64(v: f64) -> Value {
    if v.is_finite() {
        Value::from(v)
    } else if v.is_nan() {
        Value::from("nan")
    } else if v > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

pub fn decode_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::Bool(b) => Some(f64::from(u8::from(*b))),
        Value::String(s) => match s.as_str() {
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        },
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub experiment: String,
    pub master_seed: u64,
    pub sample: u64,
    pub seed: u64,
    pub params: ParamMap,
    pub scalars: Scalars,
    pub wall_time_s: f64,
}

/// Identity of a unit within one run.
pub type UnitKey = (u64, String);

pub fn unit_key(sample: u64, params: &ParamMap) -> UnitKey {
    (sample, serde_json::to_string(params).expect("maps always serialize"))
}

impl Record {
    pub fn key(&self) -> UnitKey {
        unit_key(self.sample, &self.params)
    }

    pub fn scalar(&self, key: &str) -> Option<f64> {
        self.scalars.0.get(key).and_then(decode_f64)
    }

    pub fn flag(&self, key: &str) -> Option<bool> {
        self.scalars.0.get(key).and_then(Value::as_bool)
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).and_then(decode_f64)
    }

    pub fn param_str(&self, key: &str) -> Option<&str> {
        self.params.get(key).and_then(Value::as_str)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }

    /// The line with the wall time zeroed, for reproducibility comparisons.
    pub fn reproducible_line(&self) -> String {
        Record { wall_time_s: 0.0, ..self.clone() }.to_line()
    }
}

/// Reads a record file. A final line without its newline or that fails to
/// parse is treated as an interrupted write and reported through the flag;
/// any other malformed line is an error.
pub fn read_records(path: &Path) -> Result<(Vec<Record>, bool)> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), false)),
        Err(e) => return Err(CliError::io(path)(e)),
    };
    let mut reader = BufReader::new(file);
    let mut out = Vec::new();
    let mut buf = String::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf).map_err(CliError::io(path))?;
        if n == 0 {
            return Ok((out, false));
        }
        line_no += 1;
        let complete = buf.ends_with('\n');
        match serde_json::from_str::<Record>(buf.trim_end()) {
            Ok(r) if complete => out.push(r),
            Ok(_) => return Ok((out, true)),
            Err(e) => {
                let at_end = reader.fill_buf().map_err(CliError::io(path))?.is_empty();
                if at_end {
                    return Ok((out, true));
                }
                return Err(CliError::Records { path: path.to_path_buf(), line: line_no, message: e.to_string() });
            }
        }
    }
}

/// Appends whole lines and flushes after each one.
pub struct RecordWriter {
    path: PathBuf,
    file: File,
}

impl RecordWriter {
    pub fn append(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(CliError::io(path))?;
        Ok(Self { path: path.to_path_buf(), file })
    }

    pub fn write(&mut self, r: &Record) -> Result<()> {
        let mut line = r.to_line();
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(CliError::io(&self.path))?;
        self.file.flush().map_err(CliError::io(&self.path))
    }
}

/// Rewrites `path` to hold exactly `records`.
pub fn rewrite_records(path: &Path, records: &[Record]) -> Result<()> {
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut f = File::create(&tmp).map_err(CliError::io(&tmp))?;
        for r in records {
            writeln!(f, "{}", r.to_line()).map_err(CliError::io(&tmp))?;
        }
        f.sync_all().map_err(CliError::io(&tmp))?;
    }
    std::fs::rename(&tmp, path).map_err(CliError::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(sample: u64) -> Record {
        let mut s = Scalars::default();
        s.num("x", 1.5).num("big", f64::INFINITY).flag("ok", true);
        Record {
            experiment: "e".into(),
            master_seed: 1,
            sample,
            seed: sample_seed(1, "e", sample),
            params: ParamMap::from([("epsilon".into(), Value::from(0.5))]),
            scalars: s,
            wall_time_s: 0.25,
        }
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(sample_seed(1, "e", 0), sample_seed(1, "e", 0));
        assert_ne!(sample_seed(1, "e", 0), sample_seed(1, "e", 1));
        assert_ne!(sample_seed(1, "e", 0), sample_seed(1, "f", 0));
        assert_ne!(sample_seed(1, "e", 0), sample_seed(2, "e", 0));
    }

    #[test]
    fn truncated_tail_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let mut w = RecordWriter::append(&path).unwrap();
        w.write(&record(0)).unwrap();
        w.write(&record(1)).unwrap();
        let (rs, cut) = read_records(&path).unwrap();
        assert_eq!((rs.len(), cut), (2, false));
        assert_eq!(rs[0].scalar("big"), Some(f64::INFINITY));
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str(&record(2).to_line()[..20]);
        std::fs::write(&path, &text).unwrap();
        let (rs, cut) = read_records(&path).unwrap();
        assert_eq!((rs.len(), cut), (2, true));
        std::fs::write(&path, format!("garbage\n{}", text)).unwrap();
        assert!(read_records(&path).is_err());
    }
}
