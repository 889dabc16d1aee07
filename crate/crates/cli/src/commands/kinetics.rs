use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use dceeval_core::io::{read_bboxes, read_volumes};
use dceeval_core::kinetics::{
    aggregate_kinetics, case_kinetics, ordering_report, source_offset, write_cases_csv, KineticsSeries, Source,
};
use dceeval_core::{BoundingBox, Phase, Volume};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::cli::Kinetics;
use crate::report::{Failure, Outcome, Run};

type CaseVolumes = BTreeMap<String, BTreeMap<Phase, Volume>>;

fn load_cases(dir: &Path) -> Outcome<CaseVolumes> {
    let mut cases = CaseVolumes::new();
    for ((case_id, phase), vol) in read_volumes(dir)? {
        cases.entry(case_id).or_default().insert(phase, vol);
    }
    Ok(cases)
}

fn source_series(
    pool: &rayon::ThreadPool,
    cases: &CaseVolumes,
    boxes: &[BoundingBox],
    source: Source,
) -> Outcome<Vec<KineticsSeries>> {
    pool.install(|| {
        boxes
            .par_iter()
            .map(|bbox| {
                let volumes = cases.get(&bbox.case_id).ok_or_else(|| {
                    Failure::invalid(format!("no {source} volumes for case {}", bbox.case_id))
                })?;
                case_kinetics(volumes, bbox, source)
                    .map_err(|e| Failure::from(e).context(format!("case {} ({source})", bbox.case_id)))
            })
            .collect()
    })
}

pub fn run(args: Kinetics) -> Outcome<()> {
    let mut run = Run::new("kinetics", &args.common);
    run.input("inputs-a", &args.inputs_a)?;
    if let Some(b) = &args.inputs_b {
        run.input("inputs-b", b)?;
    }
    run.input("bboxes", &args.bboxes)?;

    let boxes = read_bboxes(&args.bboxes)?;
    let mut seen = BTreeSet::new();
    if let Some(dup) = boxes.iter().find(|b| !seen.insert(b.case_id.as_str())) {
        return Err(Failure::invalid(format!("case {} has more than one bounding box", dup.case_id)));
    }
    let pool = run.pool()?;

    let mut sources = vec![(Source::Real, load_cases(&args.inputs_a)?)];
    if let Some(b) = &args.inputs_b {
        sources.push((Source::Synthetic, load_cases(b)?));
    }

    let mut all_series = Vec::new();
    let mut aggregates = Map::new();
    let mut ordering = Map::new();
    let mut by_source = BTreeMap::new();
    for (source, cases) in &sources {
        let series = source_series(&pool, cases, &boxes, *source)?;
        let aggregate = aggregate_kinetics(&series)?;
        let missing: Map<String, Value> = series
            .iter()
            .filter(|s| !s.missing_phases.is_empty())
            .map(|s| (s.case_id.clone(), json!(s.missing_phases)))
            .collect();
        let mut agg_json = aggregate.to_json();
        agg_json["missing_phases"] = Value::Object(missing);
        aggregates.insert(source.to_string(), agg_json);
        // Cases without all three post-contrast phases make the ordering undefined.
        let report = match ordering_report(&series) {
            Ok(r) => json!(r),
            Err(e) => json!({ "unavailable": e.to_string() }),
        };
        ordering.insert(source.to_string(), report);
        by_source.insert(*source, aggregate);
        all_series.extend(series);
    }

    let mut csv = Vec::new();
    write_cases_csv(&mut csv, &all_series)?;
    run.write("kinetics_cases.csv", &csv)?;
    run.write_json("kinetics_aggregate.json", &Value::Object(aggregates))?;
    run.write_json("ordering_report.json", &Value::Object(ordering))?;
    if let (Some(real), Some(syn)) = (by_source.get(&Source::Real), by_source.get(&Source::Synthetic)) {
        let offset: Map<String, Value> = source_offset(real, syn)?
            .into_iter()
            .map(|(p, v)| (p.to_string(), json!(v)))
            .collect();
        run.write_json("offset.json", &json!({ "real_minus_synthetic": offset }))?;
    }
    run.finish()
}
