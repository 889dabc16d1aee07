//! Scaled Aggregate Measure (SAMe) over a cohort of training checkpoints.
//!
//! Each metric is min-max scaled across the cohort to `[0, 1]` and oriented
//! so that 0 is best. The SAMe score of a checkpoint is the unweighted mean
//! of its scaled metrics, and the selected checkpoint is the one with the
//! lowest score.
//!
//! The scaling anchors are the extremes of the cohort passed in. Adding or
//! removing a checkpoint can therefore change every score, including which
//! checkpoint is selected.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value assigned to a metric that is constant across the cohort.
pub const CONSTANT_METRIC_SCORE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Lower,
    Higher,
}

impl Direction {
    /// Built-in registry: error and distance metrics are lower-better,
    /// similarity and PSNR higher-better.
    pub fn for_metric(name: &str) -> Option<Direction> {
        let n = name.to_ascii_lowercase().replace(['-', ' '], "_");
        match n.as_str() {
            "mse" | "mae" | "lpips" => Some(Direction::Lower),
            "ssim" | "ms_ssim" | "msssim" | "psnr" => Some(Direction::Higher),
            _ if n.starts_with("fid") => Some(Direction::Lower),
            _ => None,
        }
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lower" => Ok(Direction::Lower),
            "higher" => Ok(Direction::Higher),
            other => Err(Error::InvalidInput(format!(
                "direction must be \"lower\" or \"higher\", got {other:?}"
            ))),
        }
    }
}

/// Explicit metric directions; metrics not listed fall back to the registry.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Directions(pub BTreeMap<String, Direction>);

impl Directions {
    pub fn resolve(&self, metric: &str) -> Result<Direction> {
        self.0
            .get(metric)
            .copied()
            .or_else(|| Direction::for_metric(metric))
            .ok_or_else(|| Error::InvalidInput(format!("no direction known for metric {metric:?}")))
    }

    /// Parses `{"metric": "lower" | "higher", ...}`.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(Self(serde_json::from_str(text)?))
    }

    /// Parses `metric=lower,metric=higher`.
    pub fn parse_inline(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, dir) = item.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!("expected metric=lower|higher, got {item:?}"))
            })?;
            map.insert(name.trim().to_string(), dir.parse()?);
        }
        Ok(Self(map))
    }
}

/// Raw metric values of one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointRecord {
    pub checkpoint_id: String,
    pub raw: BTreeMap<String, f64>,
}

impl CheckpointRecord {
    pub fn new<S: Into<String>>(checkpoint_id: impl Into<String>, raw: impl IntoIterator<Item = (S, f64)>) -> Self {
        Self {
            checkpoint_id: checkpoint_id.into(),
            raw: raw.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SameRow {
    pub checkpoint_id: String,
    pub scaled: BTreeMap<String, f64>,
    pub score: f64,
}

/// Scaled metrics and SAMe scores, rows in cohort order.
#[derive(Debug, Clone, PartialEq)]
pub struct SameTable {
    pub metrics: Vec<String>,
    pub rows: Vec<SameRow>,
    pub selected: String,
}

impl SameTable {
    pub fn score(&self, checkpoint_id: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.checkpoint_id == checkpoint_id).map(|r| r.score)
    }

    /// `checkpoint_id,<metric>...,same` with metrics in sorted order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["checkpoint_id".to_string()];
        header.extend(self.metrics.iter().cloned());
        header.push("same".into());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.checkpoint_id.clone()];
            rec.extend(self.metrics.iter().map(|m| row.scaled[m].to_string()));
            rec.push(row.score.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<same csv>", e))?;
        Ok(())
    }

    /// `{selected, scores: {checkpoint: same}}`.
    pub fn summary_json(&self) -> serde_json::Value {
        let scores: serde_json::Map<String, serde_json::Value> = self
            .rows
            .iter()
            .map(|r| (r.checkpoint_id.clone(), serde_json::json!(r.score)))
            .collect();
        serde_json::json!({ "selected": self.selected, "scores": scores })
    }
}

/// Min-max scales every metric across the cohort, orients it so lower is
/// better, averages, and selects the minimum.
///
/// A higher-better metric is scaled as `(max - x) / (max - min)`, which is
/// exactly the min-max scaling of its negation. A metric that is constant
/// over the cohort scores [`CONSTANT_METRIC_SCORE`] everywhere.
pub fn scale_cohort(records: &[CheckpointRecord], directions: &Directions) -> Result<SameTable> {
    if records.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "a SAMe cohort needs at least 2 checkpoints, got {}",
            records.len()
        )));
    }
    let metrics: Vec<String> = records[0].raw.keys().cloned().collect();
    if metrics.is_empty() {
        return Err(Error::InvalidInput("checkpoints carry no metrics".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for r in records {
        if !seen.insert(r.checkpoint_id.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate checkpoint {:?}", r.checkpoint_id)));
        }
        for m in &metrics {
            match r.raw.get(m) {
                None => {
                    return Err(Error::InvalidInput(format!(
                        "checkpoint {} is missing metric {m}",
                        r.checkpoint_id
                    )))
                }
                Some(v) if !v.is_finite() => {
                    return Err(Error::NonFinite(format!("{m} of checkpoint {}", r.checkpoint_id)))
                }
                _ => {}
            }
        }
        if let Some(extra) = r.raw.keys().find(|k| !records[0].raw.contains_key(*k)) {
            return Err(Error::InvalidInput(format!(
                "checkpoint {} is missing metric {extra}",
                records[0].checkpoint_id
            )));
        }
    }

    let mut scaled: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); records.len()];
    for m in &metrics {
        let dir = directions.resolve(m)?;
        let values: Vec<f64> = records.iter().map(|r| r.raw[m]).collect();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = max - min;
        for (row, &v) in scaled.iter_mut().zip(&values) {
            let s = if max == min {
                CONSTANT_METRIC_SCORE
            } else {
                match dir {
                    Direction::Lower => (v - min) / range,
                    Direction::Higher => (max - v) / range,
                }
            };
            row.insert(m.clone(), s);
        }
    }

    let rows: Vec<SameRow> = records
        .iter()
        .zip(scaled)
        .map(|(r, scaled)| {
            let score = scaled.values().sum::<f64>() / scaled.len() as f64;
            SameRow {
                checkpoint_id: r.checkpoint_id.clone(),
                scaled,
                score,
            }
        })
        .collect();
    let selected = argmin(&rows).to_string();
    Ok(SameTable {
        metrics,
        rows,
        selected,
    })
}

fn argmin(rows: &[SameRow]) -> &str {
    let mut best = &rows[0];
    for r in &rows[1..] {
        // strict: the earliest checkpoint wins ties
        if r.score < best.score {
            best = r;
        }
    }
    &best.checkpoint_id
}

/// Checkpoint with the lowest SAMe score; ties go to the earliest in cohort order.
pub fn select_checkpoint(table: &SameTable) -> &str {
    argmin(&table.rows)
}

/// Reads `checkpoint_id,<metric>,...` rows.
pub fn read_cohort_csv<R: Read>(reader: R) -> Result<Vec<CheckpointRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("checkpoint_id") || header.len() < 2 {
        return Err(Error::InvalidInput(
            "cohort CSV must start with checkpoint_id followed by metric columns".into(),
        ));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut raw = BTreeMap::new();
        for (name, field) in header[1..].iter().zip(rec.iter().skip(1)) {
            let v: f64 = field.parse().map_err(|_| {
                Error::InvalidInput(format!("row {}: {name} value {field:?} is not a number", line + 2))
            })?;
            raw.insert(name.clone(), v);
        }
        out.push(CheckpointRecord {
            checkpoint_id: rec[0].to_string(),
            raw,
        });
    }
    Ok(out)
}
