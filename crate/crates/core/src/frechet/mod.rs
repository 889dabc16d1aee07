//! Fréchet distance between Gaussian fits of two feature sets, plus the
//! feature file format and a deterministic baseline extractor.

mod featureset;
mod gaussian;

pub use featureset::{
    baseline_extract, read_featureset, read_featureset_csv, write_featureset, FeatureSet,
    BASELINE_EXTRACTOR_ID, FORMAT_VERSION, MAGIC,
};
pub use gaussian::{
    fit_gaussian, frechet_between_sets, frechet_distance, GaussianFit, FALLBACK_RIDGE,
    NEGATIVE_ROUNDOFF,
};
