use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use dceeval_core::same::{read_cohort_csv, scale_cohort, Directions};
use serde_json::Value;

use crate::cli::SameSelect;
use crate::report::{Failure, Outcome, Run};

pub fn run(args: SameSelect) -> Outcome<()> {
    let mut run = Run::new("same-select", &args.common);
    run.input("input", &args.input)?;

    let directions = match &args.directions {
        None => Directions::default(),
        Some(arg) if Path::new(arg).is_file() => {
            run.input("directions", Path::new(arg))?;
            let text = fs::read_to_string(arg).map_err(|e| Failure::io(Path::new(arg), e))?;
            Directions::from_json(&text).map_err(|e| Failure::from(e).context(arg))?
        }
        Some(arg) => {
            run.config("directions", arg);
            Directions::parse_inline(arg)?
        }
    };

    let file = fs::File::open(&args.input).map_err(|e| Failure::io(&args.input, e))?;
    let records = read_cohort_csv(file).map_err(|e| Failure::from(e).context(args.input.display()))?;
    let table = scale_cohort(&records, &directions)?;

    let resolved = table
        .metrics
        .iter()
        .map(|m| Ok((m.clone(), directions.resolve(m)?)))
        .collect::<Outcome<BTreeMap<_, _>>>()?;
    let mut summary = table.summary_json();
    if let Value::Object(obj) = &mut summary {
        obj.insert("directions".into(), serde_json::to_value(resolved).expect("directions serialize"));
    }

    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    run.write("same.csv", &csv)?;
    run.write_json("selection.json", &summary)?;
    run.finish()
}
