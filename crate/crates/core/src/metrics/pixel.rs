use crate::error::Result;
use crate::image::Image2D;

/// Peak intensity of 8-bit images.
pub const PEAK: f64 = 255.0;

// Integer accumulation keeps the sums exact for any realistic image size.
fn sum_abs_sq(a: &Image2D, b: &Image2D) -> Result<(u64, u64)> {
    a.check_same_dims(b)?;
    let (abs, sq) = a.pixels().iter().zip(b.pixels()).fold((0u64, 0u64), |(abs, sq), (&p, &q)| {
        let d = u64::from(p.abs_diff(q));
        (abs + d, sq + d * d)
    });
    Ok((abs, sq))
}

/// Mean squared error on the `[0, 255]` intensity scale.
pub fn mse(a: &Image2D, b: &Image2D) -> Result<f64> {
    let (_, sq) = sum_abs_sq(a, b)?;
    Ok(sq as f64 / a.pixels().len() as f64)
}

/// Mean absolute error on the `[0, 255]` intensity scale.
pub fn mae(a: &Image2D, b: &Image2D) -> Result<f64> {
    let (abs, _) = sum_abs_sq(a, b)?;
    Ok(abs as f64 / a.pixels().len() as f64)
}

/// PSNR in decibels; `+inf` for a zero MSE.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

pub fn psnr(a: &Image2D, b: &Image2D) -> Result<f64> {
    mse(a, b).map(psnr_from_mse)
}
