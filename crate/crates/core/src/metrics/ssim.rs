//! Structural similarity (SSIM) and its multi-scale variant (MS-SSIM).
//!
//! Uses the canonical settings: an 11x11 Gaussian window with σ = 1.5,
//! K1 = 0.01, K2 = 0.03 and a dynamic range of 255. Only window positions
//! that lie fully inside the image contribute ("valid" filtering).
//!
//! The Gaussian is separable, so the local statistics are computed with one
//! horizontal and one vertical 11-tap pass per map. Both passes loop over
//! contiguous output rows in the innermost loop, which the compiler vectorizes.

use crate::error::{Error, Result};
use crate::image::Image2D;

pub const SSIM_WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

/// Per-scale exponents, finest scale first.
pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

/// Smallest side length that still fits the window at the coarsest of five scales.
pub const MS_SSIM_MIN_SIZE: usize = SSIM_WINDOW << (MS_SSIM_WEIGHTS.len() - 1);

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut k = [0.0; SSIM_WINDOW];
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-(d * d) / (2.0 * SIGMA * SIGMA)).exp();
    }
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    fn from_image(img: &Image2D) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            data: img.pixels().iter().map(|&p| f64::from(p)).collect(),
        }
    }

    /// 2x2 average pooling; a trailing odd row or column is dropped.
    fn downsample(&self) -> Self {
        let (w, h) = (self.width / 2, self.height / 2);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            let r0 = &self.data[2 * y * self.width..];
            let r1 = &self.data[(2 * y + 1) * self.width..];
            for x in 0..w {
                data.push((r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]) * 0.25);
            }
        }
        Self {
            width: w,
            height: h,
            data,
        }
    }
}

const HALF: usize = SSIM_WINDOW / 2;

/// `dst[o] = Σ_k kernel[k] · src(o, k)` where `src(o, k)` is the k-th tap of
/// output `o`. The kernel is symmetric, so mirrored taps share one multiply.
fn accumulate<'a>(dst: &mut [f64], kernel: &[f64; SSIM_WINDOW], tap: impl Fn(usize) -> &'a [f64]) {
    let centre = tap(HALF);
    for (o, &s) in dst.iter_mut().zip(centre) {
        *o = kernel[HALF] * s;
    }
    for k in 0..HALF {
        let (lo, hi) = (tap(k), tap(SSIM_WINDOW - 1 - k));
        for ((o, &p), &q) in dst.iter_mut().zip(lo).zip(hi) {
            *o += kernel[k] * (p + q);
        }
    }
}

/// Separable valid-mode filtering of `src` into `out`, using `tmp` as scratch.
fn filter_valid(src: &[f64], w: usize, h: usize, kernel: &[f64; SSIM_WINDOW], tmp: &mut Vec<f64>, out: &mut Vec<f64>) {
    let ow = w + 1 - SSIM_WINDOW;
    let oh = h + 1 - SSIM_WINDOW;

    tmp.clear();
    tmp.resize(ow * h, 0.0);
    for (row, dst) in src.chunks_exact(w).zip(tmp.chunks_exact_mut(ow)) {
        accumulate(dst, kernel, |k| &row[k..k + ow]);
    }

    out.clear();
    out.resize(ow * oh, 0.0);
    for (y, dst) in out.chunks_exact_mut(ow).enumerate() {
        accumulate(dst, kernel, |k| &tmp[(y + k) * ow..(y + k + 1) * ow]);
    }
}

/// Mean SSIM and mean contrast-structure term over all valid windows.
fn scale_stats(a: &Plane, b: &Plane, kernel: &[f64; SSIM_WINDOW]) -> (f64, f64) {
    let (w, h) = (a.width, a.height);
    let mut tmp = Vec::new();
    let mut prod = Vec::with_capacity(w * h);
    let mut filtered = |src: &[f64]| {
        let mut out = Vec::new();
        filter_valid(src, w, h, kernel, &mut tmp, &mut out);
        out
    };

    let mu_a = filtered(&a.data);
    let mu_b = filtered(&b.data);
    prod.extend(a.data.iter().map(|v| v * v));
    let e_aa = filtered(&prod);
    prod.clear();
    prod.extend(b.data.iter().map(|v| v * v));
    let e_bb = filtered(&prod);
    prod.clear();
    prod.extend(a.data.iter().zip(&b.data).map(|(p, q)| p * q));
    let e_ab = filtered(&prod);

    let (mut ssim_sum, mut cs_sum) = (0.0, 0.0);
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = e_aa[i] - ma * ma;
        let var_b = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let cs = (2.0 * cov + C2) / (var_a + var_b + C2);
        let lum = (2.0 * ma * mb + C1) / (ma * ma + mb * mb + C1);
        ssim_sum += lum * cs;
        cs_sum += cs;
    }
    let n = mu_a.len() as f64;
    (ssim_sum / n, cs_sum / n)
}

fn check_pair(a: &Image2D, b: &Image2D, min_side: usize, what: &str) -> Result<()> {
    a.check_same_dims(b)?;
    let side = a.width().min(a.height());
    if side < min_side {
        return Err(Error::TooSmall(format!(
            "{what} needs both sides >= {min_side} pixels, got {}x{}",
            a.width(),
            a.height()
        )));
    }
    Ok(())
}

/// Mean structural similarity over all 11x11 Gaussian windows.
pub fn ssim(a: &Image2D, b: &Image2D) -> Result<f64> {
    check_pair(a, b, SSIM_WINDOW, "SSIM")?;
    let (s, _) = scale_stats(&Plane::from_image(a), &Plane::from_image(b), &gaussian_kernel());
    Ok(s.clamp(-1.0, 1.0))
}

fn ms_ssim_planes(mut a: Plane, mut b: Plane, kernel: &[f64; SSIM_WINDOW]) -> (f64, f64) {
    let last = MS_SSIM_WEIGHTS.len() - 1;
    let mut full_scale_ssim = 0.0;
    let mut value = 1.0;
    for (scale, &weight) in MS_SSIM_WEIGHTS.iter().enumerate() {
        let (s, cs) = scale_stats(&a, &b, kernel);
        if scale == 0 {
            full_scale_ssim = s;
        }
        // Negative terms would make the fractional power undefined.
        let term = if scale == last { s } else { cs };
        value *= term.max(0.0).powf(weight);
        if scale < last {
            a = a.downsample();
            b = b.downsample();
        }
    }
    (full_scale_ssim.clamp(-1.0, 1.0), value.min(1.0))
}

/// Five-scale MS-SSIM with dyadic 2x2 average pooling between scales.
pub fn ms_ssim(a: &Image2D, b: &Image2D) -> Result<f64> {
    ssim_and_ms_ssim(a, b).map(|(_, ms)| ms)
}

/// SSIM and MS-SSIM together; the full-scale statistics are shared.
pub fn ssim_and_ms_ssim(a: &Image2D, b: &Image2D) -> Result<(f64, f64)> {
    check_pair(a, b, MS_SSIM_MIN_SIZE, "MS-SSIM (5 scales, 11-pixel window)")?;
    Ok(ms_ssim_planes(Plane::from_image(a), Plane::from_image(b), &gaussian_kernel()))
}
