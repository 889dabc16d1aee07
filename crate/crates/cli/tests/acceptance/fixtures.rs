use std::fs;
use std::path::Path;

use dceeval_core::io::{encode_png, SliceKey};
use dceeval_core::Phase;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// A smooth slice with a bright blob, loosely shaped like an axial breast
/// slice, so the PNGs stay small and the structural metrics non-trivial.
fn slice(size: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let (fx, fy) = (rng.random_range(0.01..0.04), rng.random_range(0.01..0.04));
    let (px, py) = (rng.random_range(0.0..6.3), rng.random_range(0.0..6.3));
    let (cx, cy, r) = (rng.random_range(150.0..350.0), rng.random_range(150.0..350.0), rng.random_range(15.0..50.0));
    let mut out = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let (xf, yf) = (x as f64, y as f64);
            let tissue = 70.0 + 40.0 * (xf * fx + px).sin() * (yf * fy + py).cos();
            let d2 = ((xf - cx).powi(2) + (yf - cy).powi(2)) / (r * r);
            out.push((tissue + 120.0 * (-d2).exp()).clamp(0.0, 255.0) as u8);
        }
    }
    out
}

/// The partner slice: brightness drift plus sparse small perturbations.
fn perturb(src: &[u8], rng: &mut ChaCha8Rng) -> Vec<u8> {
    let gain = rng.random_range(0.9..1.1);
    src.iter()
        .map(|&v| {
            let jitter = if rng.random_ratio(1, 16) { rng.random_range(-6.0..6.0) } else { 0.0 };
            (f64::from(v) * gain + jitter).round().clamp(0.0, 255.0) as u8
        })
        .collect()
}

/// Writes `n` conventionally named slice pairs into `a` and `b`.
pub fn write_pairs(a: &Path, b: &Path, n: usize, size: usize) -> Result<(), String> {
    fs::create_dir_all(a).map_err(|e| e.to_string())?;
    fs::create_dir_all(b).map_err(|e| e.to_string())?;
    (0..n).into_par_iter().try_for_each(|i| {
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        let key = SliceKey {
            case_id: format!("case{:03}", i / 50),
            phase: Phase::POST_CONTRAST[i % 3],
            slice_index: i % 50,
        };
        let real = slice(size, &mut rng);
        let syn = perturb(&real, &mut rng);
        for (dir, px) in [(a, &real), (b, &syn)] {
            let png = encode_png(size, size, px).map_err(|e| e.to_string())?;
            fs::write(dir.join(key.file_name()), png).map_err(|e| e.to_string())?;
        }
        Ok(())
    })
}
