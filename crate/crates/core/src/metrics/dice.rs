use crate::error::{Error, Result};

/// Binary mask of shape `[depth, height, width]`; 2D masks have depth 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    shape: [usize; 3],
    data: Vec<bool>,
}

impl Mask {
    pub fn new_2d(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        Self::new_3d(width, height, 1, data)
    }

    pub fn new_3d(width: usize, height: usize, depth: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height * depth {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height}x{depth} mask needs {} voxels, got {}",
                width * height * depth,
                data.len()
            )));
        }
        Ok(Self {
            shape: [depth, height, width],
            data,
        })
    }

    pub fn empty(width: usize, height: usize, depth: usize) -> Self {
        Self {
            shape: [depth, height, width],
            data: vec![false; width * height * depth],
        }
    }

    pub fn width(&self) -> usize {
        self.shape[2]
    }

    pub fn height(&self) -> usize {
        self.shape[1]
    }

    pub fn depth(&self) -> usize {
        self.shape[0]
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.data[(z * self.shape[1] + y) * self.shape[2] + x]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, value: bool) {
        let idx = (z * self.shape[1] + y) * self.shape[2] + x;
        self.data[idx] = value;
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }
}

/// Dice overlap `2|A∩B| / (|A| + |B|)`. Two empty masks agree perfectly (1.0).
pub fn dice(a: &Mask, b: &Mask) -> Result<f64> {
    if a.shape != b.shape {
        return Err(Error::DimensionMismatch(format!(
            "mask shapes {:?} vs {:?} (depth, height, width)",
            a.shape, b.shape
        )));
    }
    let (inter, total) = a.data.iter().zip(&b.data).fold((0usize, 0usize), |(i, t), (&p, &q)| {
        (i + usize::from(p && q), t + usize::from(p) + usize::from(q))
    });
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}
