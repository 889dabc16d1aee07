//! Acceptance gate: one PASS/FAIL line per criterion, with elapsed time
//! against the criterion's time budget where it has one.
//!
//! The throughput fixture size can be lowered for quick local iterations
//! with `DCEEVAL_ACCEPT_PAIRS`; the gate itself runs the full 5000 pairs.

mod fixtures;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dceeval_core::frechet::{fit_gaussian, frechet_between_sets, frechet_distance, FeatureSet, GaussianFit};
use dceeval_core::image::{extract_slices, stack_volume, subtraction_image};
use dceeval_core::kinetics::{aggregate_kinetics, case_kinetics_masked, ordering_fraction, source_offset, Source};
use dceeval_core::metrics::{
    dice, mae, ms_ssim, mse, psnr, psnr_from_mse, ssim, Mask, MetricSelection, PairMetricsRecord,
};
use dceeval_core::phantom::{generate_phantom, Ellipsoid, PhantomSpec};
use dceeval_core::same::{read_cohort_csv, scale_cohort, CheckpointRecord, Directions};
use dceeval_core::{Image2D, Phase};
use dceeval_oracles::{self as oracle, linalg};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

struct Gate {
    failed: usize,
}

impl Gate {
    fn run(&mut self, name: &str, budget: Option<Duration>, check: impl FnOnce() -> Check) {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let over = budget.is_some_and(|b| elapsed > b);
        let timing = match budget {
            Some(b) => format!("{:.2}s of {:.0}s", elapsed.as_secs_f64(), b.as_secs_f64()),
            None => format!("{:.2}s", elapsed.as_secs_f64()),
        };
        let (status, detail) = match result {
            Ok(d) if !over => ("PASS", d),
            Ok(d) => ("FAIL", format!("over time budget; {d}")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            self.failed += 1;
        }
        println!("{status} {name} [{timing}] {detail}");
    }
}

fn main() {
    // libtest-style flags from `cargo test` (e.g. --quiet, filters) are ignored.
    let mut gate = Gate { failed: 0 };
    gate.run("frechet-analytic", Some(Duration::from_secs(1)), frechet_analytic);
    gate.run("frechet-oracle", Some(Duration::from_secs(10)), frechet_oracle);
    gate.run("same-fixture", None, same_fixture);
    gate.run("same-affine-invariance", Some(Duration::from_secs(5)), same_affine);
    gate.run("pair-metric-oracles", Some(Duration::from_secs(30)), pair_metric_oracles);
    gate.run("jensen-consistency", None, jensen);
    gate.run("kinetics-oracle", None, kinetics);
    gate.run("subtraction-and-stacking", None, subtraction_and_stacking);
    gate.run("determinism-and-throughput", None, determinism_and_throughput);
    if gate.failed > 0 {
        println!("{} criterion/criteria failed", gate.failed);
        std::process::exit(1);
    }
}

fn fit(mu: &[f64], sigma: &[f64]) -> GaussianFit {
    let d = mu.len();
    GaussianFit::new(
        nalgebra::DVector::from_column_slice(mu),
        nalgebra::DMatrix::from_row_slice(d, d, sigma),
    )
    .unwrap()
}

fn random_features(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureSet {
    let mix: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let shift: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let z: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        for j in 0..d {
            let v = shift[j] + (0..d).map(|k| mix[j * d + k] * z[k]).sum::<f64>() + 0.1 * z[j];
            data.push(v as f32);
        }
    }
    FeatureSet::new(n, d, data, "acceptance").unwrap()
}

fn frechet_analytic() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let g = fit_gaussian(&random_features(&mut rng, 200, 5)).map_err(|e| e.to_string())?;
    let self_fd = frechet_distance(&g, &g).map_err(|e| e.to_string())?;
    ensure!(self_fd.abs() <= 1e-9, "FD of identical fits = {self_fd:e}");

    let shift = frechet_distance(&fit(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]), &fit(&[3.0, 4.0], &[1.0, 0.0, 0.0, 1.0]))
        .map_err(|e| e.to_string())?;
    ensure!((shift - 25.0).abs() <= 1e-9, "mean-shift case = {shift}");

    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (m1, m2) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let (s1, s2): (f64, f64) = (rng.random_range(0.0..5.0), rng.random_range(0.0..5.0));
        let fd = frechet_distance(&fit(&[m1], &[s1 * s1]), &fit(&[m2], &[s2 * s2])).map_err(|e| e.to_string())?;
        worst = worst.max((fd - ((m1 - m2).powi(2) + (s1 - s2).powi(2))).abs());
    }
    ensure!(worst <= 1e-9, "1-D closed form off by {worst:e}");
    Ok(format!("self {self_fd:.1e}, shift 25 ± {:.1e}, 1-D max err {worst:.1e}", (shift - 25.0).abs()))
}

fn as_rows(fs: &FeatureSet) -> Vec<Vec<f64>> {
    fs.rows().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect()
}

fn frechet_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst, mut worst_sym): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let d = rng.random_range(1..=5);
        let (na, nb) = (rng.random_range(10..=500), rng.random_range(10..=500));
        let a = random_features(&mut rng, na, d);
        let b = random_features(&mut rng, nb, d);
        let fd = frechet_between_sets(&a, &b).map_err(|e| e.to_string())?;
        let back = frechet_between_sets(&b, &a).map_err(|e| e.to_string())?;
        let want = linalg::frechet_from_rows(&as_rows(&a), &as_rows(&b));
        worst = worst.max((fd - want).abs());
        worst_sym = worst_sym.max((fd - back).abs());
    }
    ensure!(worst <= 1e-8, "max deviation from oracle {worst:e}");
    ensure!(worst_sym <= 1e-6, "max asymmetry {worst_sym:e}");
    Ok(format!("max |impl - oracle| {worst:.1e}, max asymmetry {worst_sym:.1e}"))
}

fn same_fixture() -> Check {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/table1_cohort.csv");
    let records = read_cohort_csv(fs::File::open(path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let table = scale_cohort(&records, &Directions::default()).map_err(|e| e.to_string())?;
    let mut scores = Vec::new();
    for (id, want) in [("ep10", 0.0814), ("ep30", 0.1572), ("ep50", 0.2329), ("ep100", 1.0)] {
        let got = table.score(id).ok_or(format!("{id} missing"))?;
        ensure!((got - want).abs() <= 1e-3, "{id}: {got} vs {want}");
        scores.push(format!("{id} {got:.4}"));
    }
    ensure!(table.selected == "ep10", "selected {}", table.selected);
    Ok(format!("{}; selected ep10", scores.join(", ")))
}

fn same_affine() -> Check {
    // Raw values on a 1/256 grid, transforms x -> (p / 2^k) x + b with integer
    // p and b: scaling arithmetic is exact, so results must be identical.
    let metrics = ["fid_img", "fid_rad", "ssim", "mae", "mse"];
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for cohort in 0..200 {
        let n = rng.random_range(2..=17);
        let raw: Vec<Vec<f64>> = (0..n)
            .map(|_| metrics.iter().map(|_| f64::from(rng.random_range(-5000i32..5000)) / 256.0).collect())
            .collect();
        let transforms: Vec<(f64, f64)> = metrics
            .iter()
            .map(|_| {
                let a = f64::from(rng.random_range(1i32..1000)) / f64::from(1u32 << rng.random_range(0..8));
                (a, f64::from(rng.random_range(-100_000i32..100_000)))
            })
            .collect();
        let build = |t: &dyn Fn(usize, f64) -> f64| -> Vec<CheckpointRecord> {
            raw.iter()
                .enumerate()
                .map(|(i, row)| {
                    CheckpointRecord::new(
                        format!("ep{}", (i + 1) * 10),
                        metrics.iter().zip(row).enumerate().map(|(j, (m, &v))| (*m, t(j, v))),
                    )
                })
                .collect()
        };
        let base = scale_cohort(&build(&|_, v| v), &Directions::default()).map_err(|e| e.to_string())?;
        let moved = scale_cohort(&build(&|j, v| transforms[j].0 * v + transforms[j].1), &Directions::default())
            .map_err(|e| e.to_string())?;
        ensure!(base == moved, "cohort {cohort}: scaled table changed under {transforms:?}");
    }
    Ok("200 cohorts, scaled values, scores and selection identical".into())
}

fn random_pair(rng: &mut ChaCha8Rng, w: usize, h: usize, noise: i32) -> (Image2D, Image2D) {
    let a: Vec<u8> = (0..w * h).map(|_| rng.random()).collect();
    let b = a
        .iter()
        .map(|&v| (i32::from(v) + rng.random_range(-noise..=noise)).clamp(0, 255) as u8)
        .collect();
    (Image2D::from_pixels(w, h, a).unwrap(), Image2D::from_pixels(w, h, b).unwrap())
}

fn pair_metric_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut ssim_err: f64 = 0.0;
    for i in 0..100 {
        let (w, h) = (rng.random_range(1..=16), rng.random_range(1..=16));
        let (a, b) = random_pair(&mut rng, w, h, 60);
        let (pa, pb) = (a.pixels(), b.pixels());
        ensure!(mse(&a, &b).unwrap() == oracle::mse_loop(pa, pb, w, h), "pair {i}: mse differs from loop");
        ensure!(mae(&a, &b).unwrap() == oracle::mae_loop(pa, pb, w, h), "pair {i}: mae differs from loop");
        let ma: Vec<bool> = pa.iter().map(|&v| v > 128).collect();
        let mb: Vec<bool> = pb.iter().map(|&v| v > 128).collect();
        let d = dice(&Mask::new_2d(w, h, ma.clone()).unwrap(), &Mask::new_2d(w, h, mb.clone()).unwrap()).unwrap();
        ensure!(d == oracle::dice_count(&ma, &mb), "pair {i}: dice differs from counting");

        let (a, b) = random_pair(&mut rng, 16, 16, 5 + i);
        let got = ssim(&a, &b).unwrap();
        ssim_err = ssim_err.max((got - oracle::ssim_reference(a.pixels(), b.pixels(), 16, 16)).abs());

        // identity, symmetry, range
        ensure!(ssim(&a, &a).unwrap() == 1.0 && mse(&a, &a).unwrap() == 0.0, "pair {i}: identity");
        ensure!(psnr(&a, &a).unwrap() == f64::INFINITY, "pair {i}: psnr identity");
        ensure!(ssim(&b, &a).unwrap() == got && mse(&b, &a).unwrap() == mse(&a, &b).unwrap(), "pair {i}: symmetry");
        ensure!((-1.0..=1.0).contains(&got), "pair {i}: ssim {got} out of range");
    }
    ensure!(ssim_err <= 1e-9, "ssim deviates from direct evaluation by {ssim_err:e}");

    let mut ms_err: f64 = 0.0;
    for i in 0..4 {
        let (a, b) = random_pair(&mut rng, 256, 256, 20 + 40 * i);
        let got = ms_ssim(&a, &b).unwrap();
        ensure!((0.0..=1.0).contains(&got), "ms_ssim {got} out of range");
        ensure!(ms_ssim(&b, &a).unwrap() == got, "ms_ssim not symmetric");
        ensure!(ms_ssim(&a, &a).unwrap() == 1.0, "ms_ssim identity");
        ms_err = ms_err.max((got - oracle::ms_ssim_reference(a.pixels(), b.pixels(), 256, 256)).abs());
    }
    ensure!(ms_err <= 1e-6, "ms_ssim deviates from reference by {ms_err:e}");
    Ok(format!("mse/mae/dice exact; ssim err {ssim_err:.1e}; ms_ssim err {ms_err:.1e}"))
}

fn jensen() -> Check {
    let anchor = psnr_from_mse(34.882);
    ensure!(32.91 >= anchor, "published means violate the bound: PSNR(34.882) = {anchor}");
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let sel: MetricSelection = "mse,mae,psnr".parse().unwrap();
    let mut pairs = 0;
    for set in 0..50 {
        let records: Vec<PairMetricsRecord> = (0..40)
            .map(|i| {
                let (a, b) = random_pair(&mut rng, 16, 16, 1 + (set + i) % 30);
                PairMetricsRecord::compute(format!("p{i}"), &a, &b, sel).unwrap()
            })
            .collect();
        for r in &records {
            let (m, a) = (r.mse.unwrap(), r.mae.unwrap());
            ensure!(a <= m.sqrt() + 1e-12, "set {set}: mae {a} > sqrt(mse) {}", m.sqrt());
        }
        let finite: Vec<_> = records.iter().filter(|r| r.psnr.unwrap().is_finite()).collect();
        let k = finite.len() as f64;
        let mean_psnr = finite.iter().map(|r| r.psnr.unwrap()).sum::<f64>() / k;
        let mean_mse = finite.iter().map(|r| r.mse.unwrap()).sum::<f64>() / k;
        ensure!(mean_psnr >= psnr_from_mse(mean_mse) - 1e-12, "set {set}: mean PSNR below PSNR(mean MSE)");
        pairs += records.len();
    }
    Ok(format!("{pairs} pairs in 50 sets; anchor 32.91 >= {anchor:.2}"))
}

fn phantom_series(case: usize, means: &[(Phase, u8)], source: Source) -> Result<dceeval_core::kinetics::KineticsSeries, String> {
    let spec = PhantomSpec {
        case_id: format!("case{case:02}"),
        seed: 7 * case as u64 + u64::from(source == Source::Synthetic) * 1000,
        width: 64,
        height: 64,
        depth: 8,
        background_mean: 12,
        background_noise_amplitude: 2,
        lesion: Ellipsoid {
            center: [30.0 + case as f64, 32.0, 3.5],
            semi_axes: [10.0, 8.0 + (case % 4) as f64, 3.0],
        },
        phase_means: means.iter().copied().collect(),
    };
    let p = generate_phantom(&spec).map_err(|e| e.to_string())?;
    case_kinetics_masked(&p.volumes, &p.bbox, &p.mask, source).map_err(|e| e.to_string())
}

fn kinetics() -> Check {
    let programmed = [(Phase::Pre, 30u8), (Phase::DceP1, 80), (Phase::DceP2, 120), (Phase::DceP3, 140)];
    let real = (0..10).map(|c| phantom_series(c, &programmed, Source::Real)).collect::<Result<Vec<_>, _>>()?;
    let agg = aggregate_kinetics(&real).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for s in &real {
        for (phase, m) in programmed {
            worst = worst.max((s.mean(phase).unwrap() - f64::from(m)).abs());
        }
    }
    for (phase, m) in programmed {
        worst = worst.max((agg.phases[&phase].mean_of_means - f64::from(m)).abs());
    }
    ensure!(worst <= 1.0, "per-phase mean off by {worst}");
    let up = ordering_fraction(&real).map_err(|e| e.to_string())?;
    ensure!(up == 1.0, "ordering on increasing phantoms {up}");

    let falling = [(Phase::Pre, 140u8), (Phase::DceP1, 120), (Phase::DceP2, 80), (Phase::DceP3, 30)];
    let down = (0..10).map(|c| phantom_series(c, &falling, Source::Real)).collect::<Result<Vec<_>, _>>()?;
    let down = ordering_fraction(&down).map_err(|e| e.to_string())?;
    ensure!(down == 0.0, "ordering on decreasing phantoms {down}");

    let brighter: Vec<(Phase, u8)> = programmed[1..].iter().map(|&(p, m)| (p, m + 5)).collect();
    let syn = (0..10).map(|c| phantom_series(c, &brighter, Source::Synthetic)).collect::<Result<Vec<_>, _>>()?;
    let offset: BTreeMap<Phase, f64> =
        source_offset(&agg, &aggregate_kinetics(&syn).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure!(offset.len() == 3, "offset covers {} phases", offset.len());
    for (p, v) in &offset {
        ensure!((v + 5.0).abs() <= 1.0, "{p} offset {v}");
    }
    Ok(format!("max mean error {worst:.3}; ordering 1.0 / 0.0; offsets {:?}", offset.values().collect::<Vec<_>>()))
}

fn subtraction_and_stacking() -> Check {
    for pre in 0..=255u8 {
        let p = Image2D::filled(1, 1, pre).unwrap();
        for post in 0..=255u8 {
            let d = subtraction_image(&p, &Image2D::filled(1, 1, post).unwrap()).unwrap().pixels()[0];
            ensure!(d == post.saturating_sub(pre), "pre {pre} post {post} gave {d}");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for v in 0..100 {
        let (w, h, d) = (rng.random_range(1..40), rng.random_range(1..40), rng.random_range(1..12));
        let slices: Vec<Image2D> = (0..d)
            .map(|z| Image2D::new(w, h, (0..w * h).map(|_| rng.random()).collect(), "v", Phase::ALL[v % 4], z).unwrap())
            .collect();
        let vol = stack_volume(slices.clone()).map_err(|e| e.to_string())?;
        ensure!(extract_slices(&vol) == slices, "volume {v} did not round-trip");
    }
    Ok("65536 1x1 combinations; 100 random volumes round-trip".into())
}

fn dceeval(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dceeval"))
        .args(args)
        .env_remove("DCEEVAL_WORKERS")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

const THROUGHPUT_BUDGET: Duration = Duration::from_secs(300);

fn determinism_and_throughput() -> Check {
    let n: usize = std::env::var("DCEEVAL_ACCEPT_PAIRS").ok().and_then(|v| v.parse().ok()).unwrap_or(5000);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("real"), dir.path().join("syn"));
    let start = Instant::now();
    fixtures::write_pairs(&a, &b, n, 512)?;
    let generated = start.elapsed();

    let mut timings = Vec::new();
    for workers in [1, 4, 8] {
        let out = dir.path().join(format!("out{workers}"));
        let t = Instant::now();
        dceeval(&[
            "evaluate-pairs", "--inputs-a", a.to_str().unwrap(), "--inputs-b", b.to_str().unwrap(),
            "--workers", &workers.to_string(), "--out", out.to_str().unwrap(),
        ])?;
        timings.push((workers, t.elapsed()));
    }
    for f in ["pairs.csv", "summary.json", "unpaired.csv"] {
        let first = fs::read(dir.path().join("out1").join(f)).map_err(|e| e.to_string())?;
        for w in [4, 8] {
            let other = fs::read(dir.path().join(format!("out{w}")).join(f)).map_err(|e| e.to_string())?;
            ensure!(first == other, "{f} differs between 1 and {w} workers");
        }
    }
    let rows = fs::read_to_string(dir.path().join("out1/pairs.csv")).map_err(|e| e.to_string())?.lines().count() - 1;
    ensure!(rows == n, "pairs.csv has {rows} rows for {n} pairs");

    let cores = std::thread::available_parallelism().map_or(1, usize::from);
    let runs: Vec<String> = timings.iter().map(|(w, t)| format!("w{w} {:.1}s", t.as_secs_f64())).collect();
    let detail = format!(
        "{n} pairs 512x512, byte-identical at 1/4/8 workers; {} on {cores} core(s); fixture {:.1}s",
        runs.join(", "),
        generated.as_secs_f64()
    );
    let eight = timings[2].1;
    ensure!(eight <= THROUGHPUT_BUDGET, "8-worker run took {:.1}s (budget 300s); {detail}", eight.as_secs_f64());
    Ok(detail)
}
