//! Straightforward reference computations for cross-checking the toolkit.
//!
//! Nothing here shares code with `dceeval-core`: images are plain pixel
//! slices, matrices are `Vec<Vec<f64>>`, and every quantity is computed the
//! slow, obvious way (direct window sums, centered moments, Jacobi rotations).

pub mod linalg;

pub const DYNAMIC_RANGE: f64 = 255.0;
const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const MS_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

fn c1() -> f64 {
    (0.01 * DYNAMIC_RANGE).powi(2)
}

fn c2() -> f64 {
    (0.03 * DYNAMIC_RANGE).powi(2)
}

/// Mean squared difference, accumulated over rows then columns.
pub fn mse_loop(a: &[u8], b: &[u8], width: usize, height: usize) -> f64 {
    let mut acc = 0.0;
    for y in 0..height {
        for x in 0..width {
            let d = f64::from(a[y * width + x]) - f64::from(b[y * width + x]);
            acc += d * d;
        }
    }
    acc / (width * height) as f64
}

pub fn mae_loop(a: &[u8], b: &[u8], width: usize, height: usize) -> f64 {
    let mut acc = 0.0;
    for y in 0..height {
        for x in 0..width {
            acc += (f64::from(a[y * width + x]) - f64::from(b[y * width + x])).abs();
        }
    }
    acc / (width * height) as f64
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        20.0 * DYNAMIC_RANGE.log10() - 10.0 * mse.log10()
    }
}

/// Dice by explicit set counting; two empty masks give 1.
pub fn dice_count(a: &[bool], b: &[bool]) -> f64 {
    let size_a = a.iter().filter(|&&v| v).count();
    let size_b = b.iter().filter(|&&v| v).count();
    let both = a.iter().zip(b).filter(|(&p, &q)| p && q).count();
    if size_a + size_b == 0 {
        1.0
    } else {
        2.0 * both as f64 / (size_a + size_b) as f64
    }
}

/// Full 11x11 Gaussian weights (σ = 1.5), normalized over the 2D window.
pub fn gaussian_window_2d() -> Vec<Vec<f64>> {
    let half = (WINDOW / 2) as f64;
    let mut w = vec![vec![0.0; WINDOW]; WINDOW];
    let mut total = 0.0;
    for (i, row) in w.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - half, j as f64 - half);
            *v = (-(di * di + dj * dj) / (2.0 * SIGMA * SIGMA)).exp();
            total += *v;
        }
    }
    for row in &mut w {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    w
}

/// Mean SSIM and mean contrast-structure term over all windows lying fully
/// inside the image, each window evaluated from its own centered moments.
pub fn ssim_direct(a: &[f64], b: &[f64], width: usize, height: usize) -> (f64, f64) {
    let w = gaussian_window_2d();
    let (c1, c2) = (c1(), c2());
    let (mut ssim_sum, mut cs_sum, mut count) = (0.0, 0.0, 0usize);
    for top in 0..=height - WINDOW {
        for left in 0..=width - WINDOW {
            let at = |img: &[f64], i: usize, j: usize| img[(top + i) * width + left + j];
            let (mut mu_a, mut mu_b) = (0.0, 0.0);
            for i in 0..WINDOW {
                for j in 0..WINDOW {
                    mu_a += w[i][j] * at(a, i, j);
                    mu_b += w[i][j] * at(b, i, j);
                }
            }
            let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..WINDOW {
                for j in 0..WINDOW {
                    let da = at(a, i, j) - mu_a;
                    let db = at(b, i, j) - mu_b;
                    var_a += w[i][j] * da * da;
                    var_b += w[i][j] * db * db;
                    cov += w[i][j] * da * db;
                }
            }
            let lum = (2.0 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1);
            let cs = (2.0 * cov + c2) / (var_a + var_b + c2);
            ssim_sum += lum * cs;
            cs_sum += cs;
            count += 1;
        }
    }
    (ssim_sum / count as f64, cs_sum / count as f64)
}

pub fn to_f64(px: &[u8]) -> Vec<f64> {
    px.iter().map(|&p| f64::from(p)).collect()
}

pub fn ssim_reference(a: &[u8], b: &[u8], width: usize, height: usize) -> f64 {
    ssim_direct(&to_f64(a), &to_f64(b), width, height).0
}

/// Averages each 2x2 block; odd trailing rows/columns are dropped.
pub fn halve(img: &[f64], width: usize, height: usize) -> (Vec<f64>, usize, usize) {
    let (w, h) = (width / 2, height / 2);
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for dy in 0..2 {
                for dx in 0..2 {
                    s += img[(2 * y + dy) * width + 2 * x + dx];
                }
            }
            out[y * w + x] = s / 4.0;
        }
    }
    (out, w, h)
}

/// Five-scale MS-SSIM: contrast-structure at the four finest scales, full
/// SSIM at the coarsest, each clamped at 0 and raised to its weight.
pub fn ms_ssim_reference(a: &[u8], b: &[u8], width: usize, height: usize) -> f64 {
    let (mut pa, mut pb) = (to_f64(a), to_f64(b));
    let (mut w, mut h) = (width, height);
    let mut terms = Vec::new();
    for scale in 0..5 {
        let (s, cs) = ssim_direct(&pa, &pb, w, h);
        terms.push(if scale == 4 { s } else { cs });
        let (na, nw, nh) = halve(&pa, w, h);
        let (nb, _, _) = halve(&pb, w, h);
        pa = na;
        pb = nb;
        w = nw;
        h = nh;
    }
    terms
        .iter()
        .zip(MS_WEIGHTS)
        .map(|(t, wt)| t.max(0.0).powf(wt))
        .product::<f64>()
        .min(1.0)
}

/// Mean and population std of `values` by two passes.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
