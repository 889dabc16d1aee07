use std::collections::BTreeMap;

use dceeval_core::same::{read_cohort_csv, scale_cohort, select_checkpoint, CheckpointRecord, Direction, Directions};
use proptest::prelude::*;

const TABLE1: &str = include_str!("../../cli/tests/fixtures/table1_cohort.csv");

#[test]
fn published_cohort_scores() {
    let records = read_cohort_csv(TABLE1.as_bytes()).unwrap();
    let table = scale_cohort(&records, &Directions::default()).unwrap();
    // Hand min-max over the four rows: ep10 sits at the minimum of fid_img,
    // ssim (reversed) and mse, leaving fid_rad 0.027/0.138 and mae 5.162/24.411.
    let ep10 = (0.027 / 0.138 + 5.162 / 24.411) / 5.0;
    let expected = [("ep10", ep10), ("ep30", 0.1572), ("ep50", 0.2329), ("ep100", 1.0)];
    for (id, want) in expected {
        let got = table.score(id).unwrap();
        assert!((got - want).abs() < 1e-3, "{id}: {got} vs {want}");
    }
    assert!((table.score("ep10").unwrap() - 0.0814).abs() < 1e-3);
    assert_eq!(select_checkpoint(&table), "ep10");
    assert_eq!(table.selected, "ep10");
}

#[test]
fn explicit_directions_override_registry() {
    let records = read_cohort_csv(TABLE1.as_bytes()).unwrap();
    let flipped = Directions::parse_inline("ssim=lower").unwrap();
    let t = scale_cohort(&records, &flipped).unwrap();
    assert_eq!(t.rows[0].scaled["ssim"], 1.0);
    assert_eq!(t.rows[3].scaled["ssim"], 0.0);
}

#[test]
fn unknown_metric_without_direction_is_rejected() {
    let records = vec![
        CheckpointRecord::new("a", [("novel", 1.0)]),
        CheckpointRecord::new("b", [("novel", 2.0)]),
    ];
    assert!(scale_cohort(&records, &Directions::default()).is_err());
    let dirs = Directions(BTreeMap::from([("novel".to_string(), Direction::Higher)]));
    assert_eq!(scale_cohort(&records, &dirs).unwrap().selected, "b");
}

const METRICS: [&str; 4] = ["fid_img", "ssim", "mae", "mse"];

/// Raw values on a 1/256 grid and transforms `x -> (p / 2^k) x + b` with
/// integer `p`, `b`: every intermediate of min-max scaling stays exact, so
/// the scaled ratios are the same real numbers and round identically.
fn cohort() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (2usize..10).prop_flat_map(|n| proptest::collection::vec(proptest::collection::vec(-5000i64..5000, 4), n))
}

fn records(raw: &[Vec<i64>], transform: &[(i64, u32, i64)]) -> Vec<CheckpointRecord> {
    raw.iter()
        .enumerate()
        .map(|(i, row)| {
            let values = METRICS.iter().zip(row).zip(transform).map(|((m, &v), &(p, k, b))| {
                let x = v as f64 / 256.0;
                (*m, p as f64 / f64::from(1u32 << k) * x + b as f64)
            });
            CheckpointRecord::new(format!("ep{}", (i + 1) * 10), values)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn positive_affine_transforms_change_nothing(
        raw in cohort(),
        transform in proptest::collection::vec((1i64..1000, 0u32..8, -100_000i64..100_000), 4),
    ) {
        let identity = vec![(1, 0, 0); 4];
        let base = scale_cohort(&records(&raw, &identity), &Directions::default()).unwrap();
        let moved = scale_cohort(&records(&raw, &transform), &Directions::default()).unwrap();
        prop_assert_eq!(base, moved);
    }

    #[test]
    fn general_affine_transforms_agree_to_roundoff(
        raw in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 2), 2..8),
        a in 0.01f64..100.0,
        b in -1e3f64..1e3,
    ) {
        let make = |f: &dyn Fn(f64) -> f64| -> Vec<CheckpointRecord> {
            raw.iter().enumerate()
                .map(|(i, r)| CheckpointRecord::new(format!("c{i}"), [("mse", f(r[0])), ("ssim", f(r[1]))]))
                .collect()
        };
        let base = scale_cohort(&make(&|x| x), &Directions::default()).unwrap();
        let moved = scale_cohort(&make(&|x| a * x + b), &Directions::default()).unwrap();
        for (p, q) in base.rows.iter().zip(&moved.rows) {
            prop_assert!((p.score - q.score).abs() <= 1e-9);
        }
    }

    #[test]
    fn scores_are_bounded_and_anchored(raw in cohort()) {
        let t = scale_cohort(&records(&raw, &[(1, 0, 0); 4]), &Directions::default()).unwrap();
        for m in METRICS {
            let col: Vec<f64> = t.rows.iter().map(|r| r.scaled[m]).collect();
            prop_assert!(col.iter().all(|v| (0.0..=1.0).contains(v)));
            let constant = col.iter().all(|&v| v == 0.5);
            prop_assert!(constant || (col.contains(&0.0) && col.contains(&1.0)));
        }
        for r in &t.rows {
            let mean = r.scaled.values().sum::<f64>() / 4.0;
            prop_assert_eq!(r.score, mean);
        }
        let best = t.rows.iter().map(|r| r.score).fold(f64::INFINITY, f64::min);
        let first = t.rows.iter().find(|r| r.score == best).unwrap();
        prop_assert_eq!(&t.selected, &first.checkpoint_id);
    }

    #[test]
    fn permuting_the_cohort_permutes_the_table(raw in cohort(), rot in 0usize..10) {
        let recs = records(&raw, &[(1, 0, 0); 4]);
        let mut rotated = recs.clone();
        rotated.rotate_left(rot % recs.len());
        let t = scale_cohort(&recs, &Directions::default()).unwrap();
        let u = scale_cohort(&rotated, &Directions::default()).unwrap();
        for row in &t.rows {
            let other = u.rows.iter().find(|r| r.checkpoint_id == row.checkpoint_id).unwrap();
            prop_assert_eq!(row, other);
        }
    }

    #[test]
    fn higher_better_equals_negated_lower_better(raw in proptest::collection::vec(-1e6f64..1e6, 2..12)) {
        let higher: Vec<_> = raw.iter().enumerate().map(|(i, &v)| CheckpointRecord::new(format!("c{i}"), [("ssim", v)])).collect();
        let lower: Vec<_> = raw.iter().enumerate().map(|(i, &v)| CheckpointRecord::new(format!("c{i}"), [("ssim", -v)])).collect();
        let flip = Directions::parse_inline("ssim=lower").unwrap();
        let h = scale_cohort(&higher, &Directions::default()).unwrap();
        let l = scale_cohort(&lower, &flip).unwrap();
        prop_assert_eq!(h, l);
    }
}
