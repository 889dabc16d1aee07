use std::path::Path;

use dceeval_core::frechet::{
    baseline_extract, frechet_between_sets, read_featureset, read_featureset_csv, FeatureSet,
};
use dceeval_core::io::scan_slice_dir;
use rayon::prelude::*;
use serde_json::json;

use super::load;
use crate::cli::{ExtractFeatures, Frechet};
use crate::report::{Failure, Outcome, Run};

fn read_features(path: &Path, csv_id: &str) -> Outcome<FeatureSet> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let fs = if is_csv {
        read_featureset_csv(path, csv_id)
    } else {
        read_featureset(path)
    };
    fs.map_err(|e| Failure::from(e).context(path.display()))
}

pub fn frechet(args: Frechet) -> Outcome<()> {
    let mut run = Run::new("frechet", &args.common);
    run.input("features-a", &args.features_a)?;
    run.input("features-b", &args.features_b)?;
    run.config("csv_extractor_id", &args.csv_extractor_id);

    let a = read_features(&args.features_a, &args.csv_extractor_id)?;
    let b = read_features(&args.features_b, &args.csv_extractor_id)?;
    if a.extractor_id() != b.extractor_id() {
        return Err(Failure::invalid(format!(
            "feature sets come from different extractors: {:?} vs {:?}",
            a.extractor_id(),
            b.extractor_id()
        )));
    }
    let fd = frechet_between_sets(&a, &b)?;
    run.write_json(
        "frechet.json",
        &json!({
            "frechet_distance": fd,
            "extractor_id": a.extractor_id(),
            "d": a.d(),
            "n_a": a.n(),
            "n_b": b.n(),
        }),
    )?;
    run.finish()
}

pub fn extract(args: ExtractFeatures) -> Outcome<()> {
    let mut run = Run::new("extract-features", &args.common);
    run.input("input", &args.input)?;
    let (named, other) = scan_slice_dir(&args.input)?;
    let paths: Vec<_> = named.into_values().chain(other).collect();

    let pool = run.pool()?;
    let images: Outcome<Vec<_>> = pool.install(|| paths.par_iter().map(|p| load(p)).collect());
    let fs = baseline_extract(&images?)?;
    run.write("features.fset", &fs.to_bytes())?;
    run.write_json(
        "features.json",
        &json!({ "extractor_id": fs.extractor_id(), "n": fs.n(), "d": fs.d() }),
    )?;
    run.finish()
}
