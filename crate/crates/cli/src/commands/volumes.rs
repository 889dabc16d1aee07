use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use dceeval_core::image::subtraction_image;
use dceeval_core::io::{read_volumes, scan_slice_dir, write_slice, write_volume, SliceKey, VolumeManifest};
use dceeval_core::Phase;
use rayon::prelude::*;
use serde_json::json;

use super::{load, BAD_NAME};
use crate::cli::{Stack, Subtract};
use crate::report::{file_label, unpaired_csv, Failure, Outcome, Run, Unpaired, UNPAIRED_FILE};

/// Writes `max(post - pre, 0)` for every post slice with a pre-contrast slice
/// of the same case and index. Outputs keep the post slice's name.
pub fn subtract(args: Subtract) -> Outcome<()> {
    let mut run = Run::new("subtract", &args.common);
    run.input("inputs-a", &args.inputs_a)?;
    run.input("inputs-b", &args.inputs_b)?;

    let (named_a, other_a) = scan_slice_dir(&args.inputs_a)?;
    let (named_b, other_b) = scan_slice_dir(&args.inputs_b)?;
    let mut unpaired = Vec::new();
    let mut pre: BTreeMap<(String, usize), PathBuf> = BTreeMap::new();
    for (key, path) in named_a {
        if key.phase == Phase::Pre {
            pre.insert((key.case_id, key.slice_index), path);
        } else {
            unpaired.push(Unpaired {
                side: "a",
                file: file_label(&path),
                reason: "not a pre-contrast slice".into(),
            });
        }
    }

    let mut tasks = Vec::new();
    let mut used = BTreeSet::new();
    for (key, path) in named_b {
        let slot = (key.case_id.clone(), key.slice_index);
        match pre.get(&slot) {
            Some(pre_path) => {
                used.insert(slot);
                tasks.push((key, pre_path.clone(), path));
            }
            None => unpaired.push(Unpaired {
                side: "b",
                file: file_label(&path),
                reason: "no pre-contrast slice with this case and index".into(),
            }),
        }
    }
    for (slot, path) in &pre {
        if !used.contains(slot) {
            unpaired.push(Unpaired {
                side: "a",
                file: file_label(path),
                reason: "no post-contrast slice with this case and index".into(),
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

    let out = run.out_dir()?.to_path_buf();
    let pool = run.pool()?;
    let written: Outcome<Vec<String>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(key, pre_path, post_path)| {
                let pre = load(pre_path)?;
                let post = load(post_path)?.with_identity(key.case_id.clone(), key.phase, key.slice_index);
                let diff = subtraction_image(&pre, &post)
                    .map_err(|e| Failure::from(e).context(key.stem()))?;
                write_slice(&out, &diff)?;
                Ok(SliceKey::of(&diff).file_name())
            })
            .collect()
    });
    let written = written?;

    run.write(UNPAIRED_FILE, &unpaired_csv(&mut unpaired)?)?;
    run.write_json(
        "subtraction.json",
        &json!({ "written": written.len(), "unpaired": unpaired.len() }),
    )?;
    run.finish()
}

/// Groups slices into volumes, checks that each stack is contiguous and
/// rewrites them with their sidecar manifests.
pub fn stack(args: Stack) -> Outcome<()> {
    let mut run = Run::new("stack", &args.common);
    run.input("input", &args.input)?;

    let (_, other) = scan_slice_dir(&args.input)?;
    let volumes = read_volumes(&args.input)?;
    let out = run.out_dir()?.to_path_buf();
    let pool = run.pool()?;
    let written: Outcome<Vec<()>> = pool.install(|| {
        volumes
            .par_iter()
            .map(|(_, vol)| Ok(write_volume(&out, vol)?))
            .collect()
    });
    written?;

    let manifests: Vec<VolumeManifest> = volumes.values().map(VolumeManifest::of).collect();
    let skipped: Vec<String> = other.iter().map(|p| file_label(p)).collect();
    run.write_json("volumes.json", &json!({ "volumes": manifests, "skipped": skipped }))?;
    run.finish()
}
