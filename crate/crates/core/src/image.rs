//! Grayscale slice and volume model.
//!
//! An [`Image2D`] is one axial slice with 8-bit intensities and its identity
//! (case, phase, slice index). A [`Volume`] is the ordered stack of slices of
//! one case/phase acquisition.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Acquisition phase of a DCE-MRI study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "PRE")]
    Pre,
    #[serde(rename = "DCE_P1")]
    DceP1,
    #[serde(rename = "DCE_P2")]
    DceP2,
    #[serde(rename = "DCE_P3")]
    DceP3,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Pre, Phase::DceP1, Phase::DceP2, Phase::DceP3];
    pub const POST_CONTRAST: [Phase; 3] = [Phase::DceP1, Phase::DceP2, Phase::DceP3];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Pre => "PRE",
            Phase::DceP1 => "DCE_P1",
            Phase::DceP2 => "DCE_P2",
            Phase::DceP3 => "DCE_P3",
        }
    }

    pub fn ordinal(self) -> u64 {
        match self {
            Phase::Pre => 0,
            Phase::DceP1 => 1,
            Phase::DceP2 => 2,
            Phase::DceP3 => 3,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Phase::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown phase {s:?}")))
    }
}

/// One axial grayscale slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image2D {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    case_id: String,
    phase: Phase,
    slice_index: usize,
}

impl Image2D {
    pub fn new(
        width: usize,
        height: usize,
        pixels: Vec<u8>,
        case_id: impl Into<String>,
        phase: Phase,
        slice_index: usize,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
            case_id: case_id.into(),
            phase,
            slice_index,
        })
    }

    /// Builds an image without identity metadata, for metric computations.
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        Self::new(width, height, pixels, "", Phase::Pre, 0)
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::from_pixels(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::from_pixels(width, height, pixels)
    }

    pub fn with_identity(mut self, case_id: impl Into<String>, phase: Phase, slice_index: usize) -> Self {
        self.case_id = case_id.into();
        self.phase = phase;
        self.slice_index = slice_index;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn case_id(&self) -> &str {
        &self.case_id
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn slice_index(&self) -> usize {
        self.slice_index
    }

    pub fn same_dims(&self, other: &Image2D) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_dims(&self, other: &Image2D) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }
}

/// Real-valued 3D array in slice-major, row-major order (`z * h * w + y * w + x`).
#[derive(Debug, Clone, PartialEq)]
pub struct RawVolume {
    pub width: usize,
    pub height: usize,
    pub depth: usize,
    pub data: Vec<f64>,
}

impl RawVolume {
    pub fn new(width: usize, height: usize, depth: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || depth == 0 {
            return Err(Error::InvalidInput(format!(
                "raw volume must be non-empty, got {width}x{height}x{depth}"
            )));
        }
        if data.len() != width * height * depth {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height}x{depth} volume needs {} values, got {}",
                width * height * depth,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            depth,
            data,
        })
    }
}

/// Ordered stack of slices of one case/phase acquisition.
///
/// Equality compares slices and the optional raw source array. Slices do not
/// carry the raw array, so `stack_volume(extract_slices(v))` drops it.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    slices: Vec<Image2D>,
    raw: Option<RawVolume>,
}

impl Volume {
    pub fn slices(&self) -> &[Image2D] {
        &self.slices
    }

    pub fn raw(&self) -> Option<&RawVolume> {
        self.raw.as_ref()
    }

    pub fn depth(&self) -> usize {
        self.slices.len()
    }

    pub fn width(&self) -> usize {
        self.slices[0].width
    }

    pub fn height(&self) -> usize {
        self.slices[0].height
    }

    pub fn case_id(&self) -> &str {
        &self.slices[0].case_id
    }

    pub fn phase(&self) -> Phase {
        self.slices[0].phase
    }

    /// Voxel at column `x`, row `y`, slice `z`.
    pub fn voxel(&self, x: usize, y: usize, z: usize) -> u8 {
        self.slices[z].pixel(x, y)
    }
}

/// Axis-aligned lesion box: `[x0, x1) x [y0, y1)` on slices `[slice_lo, slice_hi)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub case_id: String,
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub slice_lo: usize,
    pub slice_hi: usize,
}

impl BoundingBox {
    pub fn new(
        case_id: impl Into<String>,
        (x0, y0, x1, y1): (usize, usize, usize, usize),
        (slice_lo, slice_hi): (usize, usize),
    ) -> Result<Self> {
        let bbox = Self {
            case_id: case_id.into(),
            x0,
            y0,
            x1,
            y1,
            slice_lo,
            slice_hi,
        };
        bbox.validate()?;
        Ok(bbox)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x0 >= self.x1 || self.y0 >= self.y1 || self.slice_lo >= self.slice_hi {
            return Err(Error::InvalidInput(format!(
                "empty bounding box for case {}: x [{}, {}), y [{}, {}), slices [{}, {})",
                self.case_id, self.x0, self.x1, self.y0, self.y1, self.slice_lo, self.slice_hi
            )));
        }
        Ok(())
    }

    /// Checks that the box lies inside a `width x height x depth` volume.
    pub fn check_within(&self, width: usize, height: usize, depth: usize) -> Result<()> {
        self.validate()?;
        if self.x1 > width || self.y1 > height || self.slice_hi > depth {
            return Err(Error::InvalidInput(format!(
                "bounding box for case {} (x1={}, y1={}, slice_hi={}) exceeds volume {width}x{height}x{depth}",
                self.case_id, self.x1, self.y1, self.slice_hi
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

#[inline]
fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

#[inline]
fn to_u8(v: f64) -> u8 {
    round_half_up(v).clamp(0.0, 255.0) as u8
}

/// Min-max normalizes a raw volume to `[0, 255]` with round-half-up.
///
/// A constant volume maps to all zeros.
pub fn normalize_volume(raw: &RawVolume, case_id: &str, phase: Phase) -> Result<Volume> {
    let plane = raw.width * raw.height;
    if let Some(i) = raw.data.iter().position(|v| !v.is_finite()) {
        let (z, rem) = (i / plane, i % plane);
        return Err(Error::NonFinite(format!(
            "voxel {i} (x={}, y={}, z={z}): {}",
            rem % raw.width,
            rem / raw.width,
            raw.data[i]
        )));
    }
    let (min, max) = raw
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = max - min;

    let slices = raw
        .data
        .chunks_exact(plane)
        .enumerate()
        .map(|(z, values)| {
            let pixels = values
                .iter()
                .map(|&v| if range > 0.0 { to_u8((v - min) / range * 255.0) } else { 0 })
                .collect();
            Image2D::new(raw.width, raw.height, pixels, case_id, phase, z)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Volume {
        slices,
        raw: Some(raw.clone()),
    })
}

/// Bilinear resize with half-pixel-centered sampling and edge clamping.
pub fn resize_to_unit_aspect(img: &Image2D, target_w: usize, target_h: usize) -> Result<Image2D> {
    if target_w == 0 || target_h == 0 {
        return Err(Error::InvalidInput(format!(
            "target dimensions must be at least 1x1, got {target_w}x{target_h}"
        )));
    }
    let taps = |out: usize, inp: usize| -> Vec<(usize, usize, f64)> {
        let scale = inp as f64 / out as f64;
        (0..out)
            .map(|o| {
                let src = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (inp - 1) as f64);
                let lo = src.floor() as usize;
                let hi = (lo + 1).min(inp - 1);
                (lo, hi, src - lo as f64)
            })
            .collect()
    };
    let xs = taps(target_w, img.width);
    let ys = taps(target_h, img.height);
    let mut pixels = Vec::with_capacity(target_w * target_h);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let p = |x, y| img.pixel(x, y) as f64;
            let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
            let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
            pixels.push(to_u8(top * (1.0 - fy) + bottom * fy));
        }
    }
    Image2D::new(target_w, target_h, pixels, img.case_id.clone(), img.phase, img.slice_index)
}

/// Stacks ordered slices into a volume, checking shared identity and consecutive indices.
pub fn stack_volume(slices: Vec<Image2D>) -> Result<Volume> {
    let first = slices
        .first()
        .ok_or_else(|| Error::InvalidInput("cannot stack an empty slice list".into()))?;
    for (pos, s) in slices.iter().enumerate() {
        if !s.same_dims(first) {
            return Err(Error::DimensionMismatch(format!(
                "slice {} ({}x{}) differs from slice {} ({}x{})",
                s.slice_index, s.width, s.height, first.slice_index, first.width, first.height
            )));
        }
        if s.case_id != first.case_id || s.phase != first.phase {
            return Err(Error::InvalidInput(format!(
                "slice {} belongs to {}/{}, expected {}/{}",
                s.slice_index, s.case_id, s.phase, first.case_id, first.phase
            )));
        }
        if s.slice_index != pos {
            // Either a gap (index jumped ahead) or a misordered/duplicated slice.
            return if s.slice_index > pos {
                Err(Error::SliceGap(pos))
            } else {
                Err(Error::InvalidInput(format!(
                    "slice index {} at position {pos} is out of order",
                    s.slice_index
                )))
            };
        }
    }
    Ok(Volume { slices, raw: None })
}

pub fn extract_slices(vol: &Volume) -> Vec<Image2D> {
    vol.slices.clone()
}

/// `max(post - pre, 0)` per pixel. The output keeps the identity of `post`.
pub fn subtraction_image(pre: &Image2D, post: &Image2D) -> Result<Image2D> {
    pre.check_same_dims(post)?;
    let pixels = post
        .pixels
        .iter()
        .zip(&pre.pixels)
        .map(|(&b, &a)| b.saturating_sub(a))
        .collect();
    Image2D::new(
        post.width,
        post.height,
        pixels,
        post.case_id.clone(),
        post.phase,
        post.slice_index,
    )
}
