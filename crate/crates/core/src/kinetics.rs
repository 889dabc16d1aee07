//! Lesion contrast kinetics: per-phase intensity statistics inside the tumor
//! region, per case and aggregated over a cohort.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::image::{BoundingBox, Phase, Volume};
use crate::metrics::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "REAL")]
    Real,
    #[serde(rename = "SYNTHETIC")]
    Synthetic,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Real => "REAL",
            Source::Synthetic => "SYNTHETIC",
        }
    }

    /// Phases a series of this source is expected to cover. Synthetic data
    /// has no pre-contrast phase of its own.
    pub fn expected_phases(self) -> &'static [Phase] {
        match self {
            Source::Real => &Phase::ALL,
            Source::Synthetic => &Phase::POST_CONTRAST,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pooled pixel statistics of one phase (population std).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseStats {
    pub mean: f64,
    pub std: f64,
    pub pixel_count: usize,
}

impl PhaseStats {
    /// Exact integer moments, converted once at the end.
    fn from_moments(count: u64, sum: u64, sum_sq: u64) -> Self {
        let n = u128::from(count);
        let var_num = n * u128::from(sum_sq) - u128::from(sum) * u128::from(sum);
        let nf = count as f64;
        Self {
            mean: sum as f64 / nf,
            std: (var_num as f64 / (nf * nf)).sqrt(),
            pixel_count: count as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KineticsSeries {
    pub case_id: String,
    pub source: Source,
    pub phases: BTreeMap<Phase, PhaseStats>,
    /// Expected phases that had no volume; set instead of failing.
    pub missing_phases: Vec<Phase>,
}

impl KineticsSeries {
    pub fn mean(&self, phase: Phase) -> Option<f64> {
        self.phases.get(&phase).map(|s| s.mean)
    }
}

fn pooled_stats(vol: &Volume, bbox: &BoundingBox, mask: Option<&Mask>) -> Result<PhaseStats> {
    bbox.check_within(vol.width(), vol.height(), vol.depth())?;
    let (mut count, mut sum, mut sum_sq) = (0u64, 0u64, 0u64);
    for z in bbox.slice_lo..bbox.slice_hi {
        let slice = &vol.slices()[z];
        for y in bbox.y0..bbox.y1 {
            for x in bbox.x0..bbox.x1 {
                if mask.is_some_and(|m| !m.get(x, y, z)) {
                    continue;
                }
                let v = u64::from(slice.pixel(x, y));
                count += 1;
                sum += v;
                sum_sq += v * v;
            }
        }
    }
    if count == 0 {
        return Err(Error::InvalidInput(format!(
            "region of case {} contains no pixels",
            bbox.case_id
        )));
    }
    Ok(PhaseStats::from_moments(count, sum, sum_sq))
}

fn series(
    volumes: &BTreeMap<Phase, Volume>,
    bbox: &BoundingBox,
    source: Source,
    mask: Option<&Mask>,
) -> Result<KineticsSeries> {
    let mut phases = BTreeMap::new();
    for (&phase, vol) in volumes {
        if vol.case_id() != bbox.case_id {
            return Err(Error::InvalidInput(format!(
                "volume of case {} paired with bounding box of case {}",
                vol.case_id(),
                bbox.case_id
            )));
        }
        if let Some(m) = mask {
            if (m.width(), m.height(), m.depth()) != (vol.width(), vol.height(), vol.depth()) {
                return Err(Error::DimensionMismatch(format!(
                    "mask {}x{}x{} vs {phase} volume {}x{}x{}",
                    m.width(),
                    m.height(),
                    m.depth(),
                    vol.width(),
                    vol.height(),
                    vol.depth()
                )));
            }
        }
        phases.insert(phase, pooled_stats(vol, bbox, mask)?);
    }
    let missing_phases = source
        .expected_phases()
        .iter()
        .copied()
        .filter(|p| !phases.contains_key(p))
        .collect();
    Ok(KineticsSeries {
        case_id: bbox.case_id.clone(),
        source,
        phases,
        missing_phases,
    })
}

/// Mean and population std of all pixels inside the bounding box rectangle,
/// pooled over slices `[slice_lo, slice_hi)`, for every phase given.
pub fn case_kinetics(volumes: &BTreeMap<Phase, Volume>, bbox: &BoundingBox, source: Source) -> Result<KineticsSeries> {
    series(volumes, bbox, source, None)
}

/// Like [`case_kinetics`], restricted to bounding-box voxels set in `mask`.
pub fn case_kinetics_masked(
    volumes: &BTreeMap<Phase, Volume>,
    bbox: &BoundingBox,
    mask: &Mask,
    source: Source,
) -> Result<KineticsSeries> {
    series(volumes, bbox, source, Some(mask))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseAggregate {
    /// Unweighted mean of the per-case means.
    pub mean_of_means: f64,
    /// Population std of the per-case means.
    pub std_across_cases: f64,
    /// Population std of all pixels pooled over cases.
    pub std_within_pixels: f64,
    pub n_cases: usize,
    pub pixel_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KineticsAggregate {
    pub source: Source,
    pub n_cases: usize,
    pub phases: BTreeMap<Phase, PhaseAggregate>,
}

impl KineticsAggregate {
    pub fn to_json(&self) -> Value {
        let phases: serde_json::Map<String, Value> = self
            .phases
            .iter()
            .map(|(p, a)| {
                (
                    p.to_string(),
                    json!({
                        "mean_of_means": a.mean_of_means,
                        "std_across_cases": a.std_across_cases,
                        "std_within_pixels": a.std_within_pixels,
                        "n_cases": a.n_cases,
                        "pixel_count": a.pixel_count,
                    }),
                )
            })
            .collect();
        json!({ "source": self.source, "n_cases": self.n_cases, "phases": phases })
    }
}

fn sorted_by_case(series: &[KineticsSeries]) -> Vec<&KineticsSeries> {
    let mut s: Vec<_> = series.iter().collect();
    s.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    s
}

pub fn aggregate_kinetics(series: &[KineticsSeries]) -> Result<KineticsAggregate> {
    let first = series
        .first()
        .ok_or_else(|| Error::InvalidInput("no kinetics series to aggregate".into()))?;
    if let Some(other) = series.iter().find(|s| s.source != first.source) {
        return Err(Error::InvalidInput(format!(
            "cannot aggregate {} series of case {} with {} series",
            other.source, other.case_id, first.source
        )));
    }
    let sorted = sorted_by_case(series);
    let mut phases = BTreeMap::new();
    for phase in Phase::ALL {
        let stats: Vec<&PhaseStats> = sorted.iter().filter_map(|s| s.phases.get(&phase)).collect();
        if stats.is_empty() {
            continue;
        }
        let k = stats.len() as f64;
        let mean_of_means = stats.iter().map(|s| s.mean).sum::<f64>() / k;
        let std_across_cases =
            (stats.iter().map(|s| (s.mean - mean_of_means).powi(2)).sum::<f64>() / k).sqrt();
        let pixel_count: usize = stats.iter().map(|s| s.pixel_count).sum();
        let total = pixel_count as f64;
        let pooled_mean = stats.iter().map(|s| s.mean * s.pixel_count as f64).sum::<f64>() / total;
        let pooled_var = stats
            .iter()
            .map(|s| s.pixel_count as f64 * (s.std * s.std + (s.mean - pooled_mean).powi(2)))
            .sum::<f64>()
            / total;
        phases.insert(
            phase,
            PhaseAggregate {
                mean_of_means,
                std_across_cases,
                std_within_pixels: pooled_var.sqrt(),
                n_cases: stats.len(),
                pixel_count,
            },
        );
    }
    Ok(KineticsAggregate {
        source: first.source,
        n_cases: series.len(),
        phases,
    })
}

/// Cases whose post-contrast means strictly increase P1 < P2 < P3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderingReport {
    pub n_cases: usize,
    pub n_increasing: usize,
    pub fraction: f64,
}

pub fn ordering_report(series: &[KineticsSeries]) -> Result<OrderingReport> {
    if series.is_empty() {
        return Err(Error::InvalidInput("no kinetics series to order".into()));
    }
    let mut n_increasing = 0;
    for s in sorted_by_case(series) {
        let means = Phase::POST_CONTRAST
            .iter()
            .map(|&p| {
                s.mean(p).ok_or_else(|| {
                    Error::InvalidInput(format!("case {} ({}) has no {p} phase", s.case_id, s.source))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if means.windows(2).all(|w| w[0] < w[1]) {
            n_increasing += 1;
        }
    }
    Ok(OrderingReport {
        n_cases: series.len(),
        n_increasing,
        fraction: n_increasing as f64 / series.len() as f64,
    })
}

pub fn ordering_fraction(series: &[KineticsSeries]) -> Result<f64> {
    ordering_report(series).map(|r| r.fraction)
}

/// Signed `real - synthetic` difference of mean-of-means for every phase of
/// the synthetic aggregate. Each of those phases must be present in `real`.
pub fn source_offset(real: &KineticsAggregate, syn: &KineticsAggregate) -> Result<BTreeMap<Phase, f64>> {
    syn.phases
        .iter()
        .map(|(&phase, s)| {
            let r = real.phases.get(&phase).ok_or_else(|| {
                Error::InvalidInput(format!("phase {phase} present in synthetic but not real aggregate"))
            })?;
            Ok((phase, r.mean_of_means - s.mean_of_means))
        })
        .collect()
}

pub const CASES_CSV_HEADER: [&str; 6] = ["case_id", "source", "phase", "mean", "std", "pixel_count"];

/// `case_id,source,phase,mean,std,pixel_count` rows, sorted by case, source, phase.
pub fn write_cases_csv<W: Write>(writer: W, series: &[KineticsSeries]) -> Result<()> {
    let mut sorted: Vec<&KineticsSeries> = series.iter().collect();
    sorted.sort_by(|a, b| (&a.case_id, a.source).cmp(&(&b.case_id, b.source)));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CASES_CSV_HEADER)?;
    for s in sorted {
        for (phase, st) in &s.phases {
            w.write_record([
                s.case_id.clone(),
                s.source.to_string(),
                phase.to_string(),
                st.mean.to_string(),
                st.std.to_string(),
                st.pixel_count.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<kinetics csv>", e))?;
    Ok(())
}
