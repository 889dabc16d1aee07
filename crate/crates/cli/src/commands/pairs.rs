use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use dceeval_core::io::scan_slice_dir;
use dceeval_core::metrics::{summarize_pairs, write_pairs_csv, MetricSelection, PairMetricsRecord};
use rayon::prelude::*;
use serde::Deserialize;

use super::{load, BAD_NAME};
use crate::cli::EvaluatePairs;
use crate::report::{file_label, unpaired_csv, Failure, Outcome, Run, Unpaired, UNPAIRED_FILE};

struct Pair {
    id: String,
    a: PathBuf,
    b: PathBuf,
}

pub fn run(args: EvaluatePairs) -> Outcome<()> {
    let selection: MetricSelection = args.metrics.parse()?;
    let mut run = Run::new("evaluate-pairs", &args.common);
    run.config("metrics", selection.names());

    let (pairs, mut unpaired) = match (&args.pairs_manifest, &args.inputs_a, &args.inputs_b) {
        (Some(manifest), _, _) => {
            run.input("pairs-manifest", manifest)?;
            from_manifest(manifest)?
        }
        (None, Some(a), Some(b)) => {
            run.input("inputs-a", a)?;
            run.input("inputs-b", b)?;
            by_file_name(a, b)?
        }
        _ => return Err(Failure::invalid("need --inputs-a and --inputs-b, or --pairs-manifest")),
    };

    let pool = run.pool()?;
    // Collecting into a Result stops at the first failing pair in pair order,
    // so the reported error does not depend on scheduling.
    let records: Outcome<Vec<PairMetricsRecord>> = pool.install(|| {
        pairs
            .par_iter()
            .map(|p| evaluate(p, selection).map_err(|f| f.context(format!("pair {}", p.id))))
            .collect()
    });
    let records = records?;

    run.write(UNPAIRED_FILE, &unpaired_csv(&mut unpaired)?)?;
    if records.is_empty() {
        return Err(Failure::invalid(format!(
            "no image pairs to evaluate; {} file(s) listed in {UNPAIRED_FILE}",
            unpaired.len()
        )));
    }
    let mut csv = Vec::new();
    write_pairs_csv(&mut csv, &records)?;
    run.write("pairs.csv", &csv)?;
    run.write_json("summary.json", &summarize_pairs(&records)?.to_json())?;
    run.finish()
}

fn evaluate(pair: &Pair, selection: MetricSelection) -> Outcome<PairMetricsRecord> {
    let a = load(&pair.a)?;
    let b = load(&pair.b)?;
    Ok(PairMetricsRecord::compute(pair.id.clone(), &a, &b, selection)?)
}

/// Pairs slices with the same (case_id, phase, slice_index) in both roots.
fn by_file_name(a: &Path, b: &Path) -> Outcome<(Vec<Pair>, Vec<Unpaired>)> {
    let (named_a, other_a) = scan_slice_dir(a)?;
    let (named_b, other_b) = scan_slice_dir(b)?;
    let mut pairs = Vec::new();
    let mut unpaired = Vec::new();
    for (key, path_a) in &named_a {
        match named_b.get(key) {
            Some(path_b) => pairs.push(Pair {
                id: key.stem(),
                a: path_a.clone(),
                b: path_b.clone(),
            }),
            None => unpaired.push(Unpaired {
                side: "a",
                file: file_label(path_a),
                reason: "no counterpart in inputs-b".into(),
            }),
        }
    }
    for (key, path_b) in &named_b {
        if !named_a.contains_key(key) {
            unpaired.push(Unpaired {
                side: "b",
                file: file_label(path_b),
                reason: "no counterpart in inputs-a".into(),
            });
        }
    }
    for (side, others) in [("a", other_a), ("b", other_b)] {
        unpaired.extend(others.iter().map(|p| Unpaired {
            side,
            file: file_label(p),
            reason: BAD_NAME.into(),
        }));
    }
    Ok((pairs, unpaired))
}

#[derive(Deserialize)]
struct ManifestRow {
    pair_id: String,
    path_a: PathBuf,
    path_b: PathBuf,
}

/// Reads `pair_id,path_a,path_b`. A row whose files do not both exist is
/// reported as unpaired rather than failing the run.
fn from_manifest(manifest: &Path) -> Outcome<(Vec<Pair>, Vec<Unpaired>)> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(manifest)
        .map_err(|e| Failure::from(e).context(manifest.display()))?;
    let mut seen = BTreeSet::new();
    let mut pairs = Vec::new();
    let mut unpaired = Vec::new();
    for row in reader.deserialize() {
        let row: ManifestRow = row.map_err(|e| Failure::from(e).context(manifest.display()))?;
        if !seen.insert(row.pair_id.clone()) {
            return Err(Failure::invalid(format!(
                "{}: duplicate pair_id {:?}",
                manifest.display(),
                row.pair_id
            )));
        }
        let (a, b) = (base.join(&row.path_a), base.join(&row.path_b));
        match (a.is_file(), b.is_file()) {
            (true, true) => pairs.push(Pair { id: row.pair_id, a, b }),
            (found_a, found_b) => {
                for (side, path, found, other) in [("a", &a, found_a, &b), ("b", &b, found_b, &a)] {
                    let reason = if found {
                        format!("pair {}: counterpart {} missing", row.pair_id, other.display())
                    } else {
                        format!("pair {}: file not found", row.pair_id)
                    };
                    unpaired.push(Unpaired {
                        side,
                        file: path.display().to_string(),
                        reason,
                    });
                }
            }
        }
    }
    pairs.sort_by(|p, q| p.id.cmp(&q.id));
    Ok((pairs, unpaired))
}
