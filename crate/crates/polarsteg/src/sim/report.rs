//! Report rows, per-trial records and threshold checks.
//!
//! `report.csv` columns, in order: `experiment, profile, scheme, n, rate,
//! preset_theta, attack_model, attack_value, list_size, trials,
//! payload_bits, key_bits, nesting_violation, design_distortion,
//! bound_distortion, mean_distortion, distortion_ci95, mean_ber, ber_ci95,
//! ber_display, wall_seconds`. Empty fields mean "not applicable". Rows of
//! one robustness group share one embedding per trial, so they carry the
//! group's wall time.
//!
//! `trials.ndrec` holds one JSON object per line: a `meta` record first,
//! then one `trial` record per (row, trial).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Check, ExperimentConfig, ExperimentKind, Metric};
use crate::files::{ModelTag, ProfileTag, SchemeTag};
use crate::Error;

/// BERs below this are displayed as `0`.
pub const BER_DISPLAY_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: ExperimentKind,
    pub profile: ProfileTag,
    pub scheme: SchemeTag,
    pub n: usize,
    pub rate: f64,
    pub preset_theta: Option<f64>,
    pub attack_model: Option<ModelTag>,
    pub attack_value: Option<f64>,
    pub list_size: usize,
    pub trials: u64,
    pub payload_bits: usize,
    pub key_bits: usize,
    pub nesting_violation: f64,
    /// `Σ p_i ρ_i / N` of the solution used at this block length.
    pub design_distortion: f64,
    /// The same quantity at the configured bound length.
    pub bound_distortion: Option<f64>,
    pub mean_distortion: f64,
    pub distortion_ci95: f64,
    pub mean_ber: Option<f64>,
    pub ber_ci95: Option<f64>,
    pub ber_display: Option<String>,
    pub wall_seconds: f64,
}

impl ReportRow {
    pub fn metric(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Ber => self.mean_ber,
            Metric::Distortion => Some(self.mean_distortion),
            Metric::RelativeGap => self
                .bound_distortion
                .map(|b| (self.mean_distortion - b) / b),
        }
    }
}

pub fn display_ber(ber: f64) -> String {
    if ber < BER_DISPLAY_FLOOR {
        "0".into()
    } else {
        format!("{ber:.5}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Meta {
        version: String,
        config: ExperimentConfig,
    },
    Trial(TrialRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Index into the report rows.
    pub row: usize,
    pub trial: u64,
    pub seed: u64,
    pub distortion: f64,
    pub bit_errors: Option<u64>,
    pub message_bits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub config: ExperimentConfig,
    pub version: String,
    pub rows: Vec<ReportRow>,
    pub trials: Vec<TrialRecord>,
}

/// Mean and 95% normal half-width.
pub fn mean_ci95(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Recomputes `(mean distortion, mean BER)` per row from trial records.
pub fn reaggregate(rows: usize, trials: &[TrialRecord]) -> Vec<(f64, Option<f64>)> {
    (0..rows)
        .map(|r| {
            let recs: Vec<&TrialRecord> = trials.iter().filter(|t| t.row == r).collect();
            let d: Vec<f64> = recs.iter().map(|t| t.distortion).collect();
            let ber = recs
                .iter()
                .map(|t| t.bit_errors.map(|e| e as f64 / t.message_bits.max(1) as f64))
                .collect::<Option<Vec<f64>>>();
            (mean_ci95(&d).0, ber.map(|b| mean_ci95(&b).0))
        })
        .collect()
}

impl SimulationReport {
    pub fn write_csv(&self, path: &Path) -> Result<(), Error> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_records(&self, path: &Path) -> Result<(), Error> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let meta = Record::Meta {
            version: self.version.clone(),
            config: self.config.clone(),
        };
        let mut put = |r: &Record| -> Result<(), Error> {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))
        };
        put(&meta)?;
        for t in &self.trials {
            put(&Record::Trial(t.clone()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Violations of the configured checks, one message each.
    pub fn check(&self) -> Vec<String> {
        check_rows(&self.rows, &self.config.check)
    }
}

pub fn read_csv(path: &Path) -> Result<Vec<ReportRow>, Error> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn read_records(path: &Path) -> Result<Vec<Record>, Error> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .map(|l| {
            let l = l.map_err(|e| Error::io(path, e))?;
            Ok(serde_json::from_str(&l)?)
        })
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn matches(row: &ReportRow, c: &Check) -> bool {
    c.profile.map_or(true, |p| p == row.profile)
        && c.scheme.map_or(true, |s| s == row.scheme)
        && c.n.map_or(true, |n| n == row.n)
        && c.rate.map_or(true, |r| close(r, row.rate))
        && c.preset_theta
            .map_or(true, |t| row.preset_theta.is_some_and(|x| close(x, t)))
        && c.attack_value
            .map_or(true, |v| row.attack_value.is_some_and(|x| close(x, v)))
}

pub fn check_rows(rows: &[ReportRow], checks: &[Check]) -> Vec<String> {
    let mut out = Vec::new();
    for (k, c) in checks.iter().enumerate() {
        let hits: Vec<&ReportRow> = rows.iter().filter(|r| matches(r, c)).collect();
        if hits.is_empty() {
            out.push(format!("check {k}: no matching rows"));
        }
        for r in hits {
            let desc = format!(
                "check {k}: {:?} {:?} n={} theta={:?} attack={:?}",
                r.profile, r.scheme, r.n, r.preset_theta, r.attack_value
            );
            match r.metric(c.metric) {
                None => out.push(format!("{desc}: {:?} not available", c.metric)),
                Some(v) => {
                    if c.min.is_some_and(|m| v < m) || c.max.is_some_and(|m| v > m) {
                        out.push(format!(
                            "{desc}: {:?} = {v} outside [{:?}, {:?}]",
                            c.metric, c.min, c.max
                        ));
                    }
                }
            }
        }
    }
    out
}
