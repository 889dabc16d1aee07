use std::io::Write;
use std::str::FromStr;

use serde_json::{json, Value};

use super::{mae, mse, psnr_from_mse, ssim, ssim_and_ms_ssim};
use crate::error::{Error, Result};
use crate::image::Image2D;

pub const PAIRS_CSV_HEADER: [&str; 6] = ["pair_id", "mse", "mae", "psnr", "ssim", "ms_ssim"];

/// Which pair metrics to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricSelection {
    pub mse: bool,
    pub mae: bool,
    pub psnr: bool,
    pub ssim: bool,
    pub ms_ssim: bool,
}

impl MetricSelection {
    pub const ALL: MetricSelection = MetricSelection {
        mse: true,
        mae: true,
        psnr: true,
        ssim: true,
        ms_ssim: true,
    };

    pub fn names(&self) -> Vec<&'static str> {
        [
            (self.mse, "mse"),
            (self.mae, "mae"),
            (self.psnr, "psnr"),
            (self.ssim, "ssim"),
            (self.ms_ssim, "msssim"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect()
    }
}

impl Default for MetricSelection {
    fn default() -> Self {
        Self::ALL
    }
}

impl FromStr for MetricSelection {
    type Err = Error;

    /// Parses a comma-separated list such as `mse,mae,psnr,ssim,msssim`.
    fn from_str(s: &str) -> Result<Self> {
        let mut sel = MetricSelection {
            mse: false,
            mae: false,
            psnr: false,
            ssim: false,
            ms_ssim: false,
        };
        for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            match name.to_ascii_lowercase().as_str() {
                "mse" => sel.mse = true,
                "mae" => sel.mae = true,
                "psnr" => sel.psnr = true,
                "ssim" => sel.ssim = true,
                "msssim" | "ms_ssim" | "ms-ssim" => sel.ms_ssim = true,
                other => return Err(Error::InvalidInput(format!("unknown metric {other:?}"))),
            }
        }
        if sel.names().is_empty() {
            return Err(Error::InvalidInput("no metrics selected".into()));
        }
        Ok(sel)
    }
}

/// Metrics of one image pair. Unselected metrics are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMetricsRecord {
    pub pair_id: String,
    pub mse: Option<f64>,
    pub mae: Option<f64>,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub ms_ssim: Option<f64>,
}

impl PairMetricsRecord {
    pub fn compute(pair_id: impl Into<String>, a: &Image2D, b: &Image2D, sel: MetricSelection) -> Result<Self> {
        a.check_same_dims(b)?;
        let mse_value = if sel.mse || sel.psnr { Some(mse(a, b)?) } else { None };
        let (ssim_value, ms_value) = match (sel.ssim, sel.ms_ssim) {
            (_, true) => {
                let (s, ms) = ssim_and_ms_ssim(a, b)?;
                (sel.ssim.then_some(s), Some(ms))
            }
            (true, false) => (Some(ssim(a, b)?), None),
            (false, false) => (None, None),
        };
        Ok(Self {
            pair_id: pair_id.into(),
            mse: mse_value.filter(|_| sel.mse),
            mae: if sel.mae { Some(mae(a, b)?) } else { None },
            psnr: mse_value.filter(|_| sel.psnr).map(psnr_from_mse),
            ssim: ssim_value,
            ms_ssim: ms_value,
        })
    }
}

/// Mean and population standard deviation of one metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

impl MetricStats {
    /// `None` for an empty sample.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Self {
            n: values.len(),
            mean,
            std: var.sqrt(),
        })
    }

    fn to_json(stats: Option<&Self>) -> Value {
        match stats {
            Some(s) => json!({ "mean": s.mean, "std": s.std, "n": s.n }),
            None => json!({ "mean": null, "std": null, "n": 0 }),
        }
    }
}

/// Dataset-level mean ± std per metric.
///
/// Pairs with infinite PSNR are left out of the PSNR statistics and counted
/// in `psnr_excluded_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMetricsSummary {
    pub n_pairs: usize,
    pub mse: Option<MetricStats>,
    pub mae: Option<MetricStats>,
    pub psnr: Option<MetricStats>,
    pub ssim: Option<MetricStats>,
    pub ms_ssim: Option<MetricStats>,
    pub psnr_excluded_count: usize,
    selection: MetricSelection,
}

impl DatasetMetricsSummary {
    /// JSON object with `{mean, std, n}` per computed metric.
    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::Map::new();
        obj.insert("n_pairs".into(), json!(self.n_pairs));
        obj.insert("psnr_excluded_count".into(), json!(self.psnr_excluded_count));
        let metrics = [
            (self.selection.mse, "mse", &self.mse),
            (self.selection.mae, "mae", &self.mae),
            (self.selection.psnr, "psnr", &self.psnr),
            (self.selection.ssim, "ssim", &self.ssim),
            (self.selection.ms_ssim, "ms_ssim", &self.ms_ssim),
        ];
        for (on, name, stats) in metrics {
            if on {
                obj.insert(name.into(), MetricStats::to_json(stats.as_ref()));
            }
        }
        Value::Object(obj)
    }
}

/// Aggregates pair records. Records are sorted by `pair_id` first, so the
/// result does not depend on the order in which they were produced.
pub fn summarize_pairs(records: &[PairMetricsRecord]) -> Result<DatasetMetricsSummary> {
    if records.is_empty() {
        return Err(Error::InvalidInput("cannot summarize an empty record list".into()));
    }
    let mut sorted: Vec<&PairMetricsRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));

    let column = |f: fn(&PairMetricsRecord) -> Option<f64>| -> Vec<f64> {
        sorted.iter().filter_map(|r| f(r)).collect()
    };
    let psnr_all = column(|r| r.psnr);
    let psnr_finite: Vec<f64> = psnr_all.iter().copied().filter(|v| v.is_finite()).collect();
    let first = sorted[0];
    let selection = MetricSelection {
        mse: first.mse.is_some(),
        mae: first.mae.is_some(),
        psnr: first.psnr.is_some(),
        ssim: first.ssim.is_some(),
        ms_ssim: first.ms_ssim.is_some(),
    };

    Ok(DatasetMetricsSummary {
        n_pairs: sorted.len(),
        mse: MetricStats::from_values(&column(|r| r.mse)),
        mae: MetricStats::from_values(&column(|r| r.mae)),
        psnr: MetricStats::from_values(&psnr_finite),
        ssim: MetricStats::from_values(&column(|r| r.ssim)),
        ms_ssim: MetricStats::from_values(&column(|r| r.ms_ssim)),
        psnr_excluded_count: psnr_all.len() - psnr_finite.len(),
        selection,
    })
}

fn format_value(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x == f64::INFINITY => "inf".into(),
        Some(x) => x.to_string(),
    }
}

/// Writes `pair_id,mse,mae,psnr,ssim,ms_ssim` rows sorted by pair id.
pub fn write_pairs_csv<W: Write>(writer: W, records: &[PairMetricsRecord]) -> Result<()> {
    let mut sorted: Vec<&PairMetricsRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PAIRS_CSV_HEADER)?;
    for r in sorted {
        w.write_record([
            r.pair_id.clone(),
            format_value(r.mse),
            format_value(r.mae),
            format_value(r.psnr),
            format_value(r.ssim),
            format_value(r.ms_ssim),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<pairs csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, mse: f64) -> PairMetricsRecord {
        PairMetricsRecord {
            pair_id: id.into(),
            mse: Some(mse),
            mae: Some(mse.sqrt() / 2.0),
            psnr: Some(psnr_from_mse(mse)),
            ssim: None,
            ms_ssim: None,
        }
    }

    #[test]
    fn single_record() {
        let r = rec("a", 9.0);
        let s = summarize_pairs(std::slice::from_ref(&r)).unwrap();
        let mse = s.mse.unwrap();
        assert_eq!((mse.mean, mse.std, mse.n), (9.0, 0.0, 1));
        assert_eq!(s.psnr.unwrap().mean, r.psnr.unwrap());
        assert!(s.ssim.is_none());
    }

    #[test]
    fn two_point_stats() {
        let s = summarize_pairs(&[rec("a", 2.0), rec("b", 4.0)]).unwrap();
        let mse = s.mse.unwrap();
        assert_eq!((mse.mean, mse.std), (3.0, 1.0));
    }

    #[test]
    fn infinite_psnr_excluded() {
        let s = summarize_pairs(&[rec("a", 0.0), rec("b", 650.25)]).unwrap();
        assert_eq!(s.psnr_excluded_count, 1);
        let psnr = s.psnr.unwrap();
        assert_eq!(psnr.n, 1);
        assert!((psnr.mean - 20.0).abs() < 1e-12);

        let all_inf = summarize_pairs(&[rec("a", 0.0)]).unwrap();
        assert!(all_inf.psnr.is_none());
        assert_eq!(all_inf.to_json()["psnr"], json!({"mean": null, "std": null, "n": 0}));
    }

    #[test]
    fn empty_rejected() {
        assert!(summarize_pairs(&[]).is_err());
    }

    #[test]
    fn order_independent() {
        let a = summarize_pairs(&[rec("a", 1.0), rec("b", 7.3), rec("c", 0.1)]).unwrap();
        let b = summarize_pairs(&[rec("c", 0.1), rec("a", 1.0), rec("b", 7.3)]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn table_two_means_follow_jensen() {
        // mean PSNR 32.91 vs PSNR of mean MSE 34.882
        let from_mean_mse = psnr_from_mse(34.882);
        assert!((from_mean_mse - 32.705).abs() < 1e-3);
        assert!(32.91 >= from_mean_mse);
    }

    #[test]
    fn csv_layout() {
        let mut out = Vec::new();
        write_pairs_csv(&mut out, &[rec("b", 650.25), rec("a", 0.0)]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "pair_id,mse,mae,psnr,ssim,ms_ssim");
        assert_eq!(lines[1], "a,0,0,inf,,");
        assert!(lines[2].starts_with("b,650.25,"));
    }

    #[test]
    fn selection_parsing() {
        let s: MetricSelection = "mse, psnr,MSSSIM".parse().unwrap();
        assert_eq!(s.names(), vec!["mse", "psnr", "msssim"]);
        assert!("mse,lpips".parse::<MetricSelection>().is_err());
        assert!("".parse::<MetricSelection>().is_err());
    }

    #[test]
    fn compute_respects_selection() {
        let a = Image2D::filled(12, 12, 10).unwrap();
        let b = Image2D::filled(12, 12, 12).unwrap();
        let r = PairMetricsRecord::compute("p", &a, &b, "psnr,ssim".parse().unwrap()).unwrap();
        assert_eq!(r.mse, None);
        assert_eq!(r.mae, None);
        assert!((r.psnr.unwrap() - psnr_from_mse(4.0)).abs() < 1e-12);
        assert!(r.ssim.is_some());
        assert!(PairMetricsRecord::compute("p", &a, &b, MetricSelection::ALL).is_err());
    }
}
