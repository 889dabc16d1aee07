use std::collections::BTreeSet;
use std::fs;

use dceeval_core::io::{encode_png, write_bboxes, write_volume};
use dceeval_core::phantom::{generate_phantom, PhantomSpec};
use serde_json::Value;

use crate::cli::Phantom;
use crate::report::{Failure, Outcome, Run};

/// Writes each phantom's phase volumes, its lesion mask under `masks/`
/// (0 or 255 per voxel, one PNG per slice) and the tight boxes in `bboxes.csv`.
pub fn run(args: Phantom) -> Outcome<()> {
    let mut run = Run::new("phantom", &args.common);
    run.input("spec", &args.spec)?;

    let text = fs::read_to_string(&args.spec).map_err(|e| Failure::io(&args.spec, e))?;
    let parsed = match serde_json::from_str::<Value>(&text) {
        Ok(Value::Array(items)) => items.into_iter().map(serde_json::from_value).collect(),
        Ok(single) => serde_json::from_value(single).map(|s| vec![s]),
        Err(e) => Err(e),
    };
    let specs: Vec<PhantomSpec> =
        parsed.map_err(|e| Failure::from(dceeval_core::Error::from(e)).context(args.spec.display()))?;
    let mut seen = BTreeSet::new();
    if let Some(dup) = specs.iter().find(|s| !seen.insert(s.case_id.as_str())) {
        return Err(Failure::invalid(format!("phantom case_id {:?} used twice", dup.case_id)));
    }

    let out = run.out_dir()?.to_path_buf();
    let mut boxes = Vec::new();
    for spec in &specs {
        let phantom = generate_phantom(spec).map_err(|e| Failure::from(e).context(format!("phantom {}", spec.case_id)))?;
        for vol in phantom.volumes.values() {
            write_volume(&out, vol)?;
        }
        let m = &phantom.mask;
        for z in 0..m.depth() {
            let mut pixels = Vec::with_capacity(m.width() * m.height());
            for y in 0..m.height() {
                pixels.extend((0..m.width()).map(|x| if m.get(x, y, z) { 255 } else { 0 }));
            }
            let png = encode_png(m.width(), m.height(), &pixels)?;
            run.write(&format!("masks/{}_mask_{z:04}.png", spec.case_id), &png)?;
        }
        boxes.push(phantom.bbox);
    }

    let mut csv = Vec::new();
    write_bboxes(&mut csv, &boxes)?;
    run.write("bboxes.csv", &csv)?;
    run.config("phantoms", &specs);
    run.finish()
}
