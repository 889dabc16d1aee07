//! Deterministic lesion phantoms with programmed per-phase enhancement.
//!
//! Noise comes from SplitMix64, a counter-based generator whose output is
//! fully specified by its 64-bit state, so phantoms are bit-identical across
//! platforms. Each phase draws from its own stream, one value per voxel in
//! slice-major raster order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{stack_volume, BoundingBox, Image2D, Phase, Volume};
use crate::metrics::Mask;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 (Steele, Lea & Flood): state advances by a fixed odd constant
/// and each output is a bijective mix of the state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `[-amplitude, amplitude]` (multiply-shift range reduction).
    pub fn offset(&mut self, amplitude: u8) -> i32 {
        let span = 2 * u64::from(amplitude) + 1;
        ((u128::from(self.next_u64()) * u128::from(span)) >> 64) as i32 - i32::from(amplitude)
    }
}

/// Axis-aligned ellipsoid in voxel coordinates `[x, y, z]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub center: [f64; 3],
    pub semi_axes: [f64; 3],
}

impl Ellipsoid {
    pub fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        let p = [x as f64, y as f64, z as f64];
        (0..3)
            .map(|i| ((p[i] - self.center[i]) / self.semi_axes[i]).powi(2))
            .sum::<f64>()
            <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    #[serde(default = "default_case_id")]
    pub case_id: String,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub depth: usize,
    pub background_mean: u8,
    pub background_noise_amplitude: u8,
    pub lesion: Ellipsoid,
    pub phase_means: BTreeMap<Phase, u8>,
}

fn default_case_id() -> String {
    "phantom".into()
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.depth == 0 {
            return Err(Error::InvalidInput(format!(
                "phantom dimensions must be positive, got {}x{}x{}",
                self.width, self.height, self.depth
            )));
        }
        if self.phase_means.is_empty() {
            return Err(Error::InvalidInput("phantom needs at least one phase".into()));
        }
        let dims = [self.width, self.height, self.depth];
        for (axis, name) in ["x", "y", "z"].iter().enumerate() {
            let (c, r) = (self.lesion.center[axis], self.lesion.semi_axes[axis]);
            if !(c.is_finite() && r.is_finite()) || r <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "lesion {name} axis needs a finite center and positive semi-axis, got center {c}, semi-axis {r}"
                )));
            }
            if c - r < 0.0 || c + r > (dims[axis] - 1) as f64 {
                return Err(Error::InvalidInput(format!(
                    "lesion ellipsoid leaves the volume along {name}: [{}, {}] not within [0, {}]",
                    c - r,
                    c + r,
                    dims[axis] - 1
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Phantom {
    pub volumes: BTreeMap<Phase, Volume>,
    /// Tight box around the lesion voxels.
    pub bbox: BoundingBox,
    pub mask: Mask,
}

fn phase_stream(seed: u64, phase: Phase) -> SplitMix64 {
    let mut init = SplitMix64::new(seed ^ (phase.ordinal() + 1).wrapping_mul(GOLDEN_GAMMA));
    SplitMix64::new(init.next_u64())
}

pub fn generate_phantom(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let (w, h, d) = (spec.width, spec.height, spec.depth);

    let mut mask = Mask::empty(w, h, d);
    let (mut lo, mut hi) = ([usize::MAX; 3], [0usize; 3]);
    for z in 0..d {
        for y in 0..h {
            for x in 0..w {
                if spec.lesion.contains(x, y, z) {
                    mask.set(x, y, z, true);
                    for (i, v) in [x, y, z].into_iter().enumerate() {
                        lo[i] = lo[i].min(v);
                        hi[i] = hi[i].max(v + 1);
                    }
                }
            }
        }
    }
    if mask.count() == 0 {
        return Err(Error::InvalidInput("lesion ellipsoid covers no voxel centers".into()));
    }
    let bbox = BoundingBox::new(spec.case_id.clone(), (lo[0], lo[1], hi[0], hi[1]), (lo[2], hi[2]))?;

    let amplitude = spec.background_noise_amplitude;
    let mut volumes = BTreeMap::new();
    for (&phase, &lesion_mean) in &spec.phase_means {
        let mut rng = phase_stream(spec.seed, phase);
        let mut slices = Vec::with_capacity(d);
        for z in 0..d {
            let mut pixels = Vec::with_capacity(w * h);
            for y in 0..h {
                for x in 0..w {
                    let base = if mask.get(x, y, z) { lesion_mean } else { spec.background_mean };
                    let v = i32::from(base) + rng.offset(amplitude);
                    pixels.push(v.clamp(0, 255) as u8);
                }
            }
            slices.push(Image2D::new(w, h, pixels, spec.case_id.clone(), phase, z)?);
        }
        volumes.insert(phase, stack_volume(slices)?);
    }
    Ok(Phantom { volumes, bbox, mask })
}
