//! Full-reference pair metrics and their dataset-level aggregation.

mod dice;
mod pixel;
mod ssim;
mod summary;

pub use dice::{dice, Mask};
pub use pixel::{mae, mse, psnr, psnr_from_mse, PEAK};
pub use ssim::{ms_ssim, ssim, ssim_and_ms_ssim, MS_SSIM_MIN_SIZE, MS_SSIM_WEIGHTS, SSIM_WINDOW};
pub use summary::{
    summarize_pairs, write_pairs_csv, DatasetMetricsSummary, MetricSelection, MetricStats,
    PairMetricsRecord, PAIRS_CSV_HEADER,
};
