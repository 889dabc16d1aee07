//! Feature matrices and their binary file format.
//!
//! Layout (all integers little-endian):
//!
//! | bytes   | content                                   |
//! |---------|-------------------------------------------|
//! | 4       | magic `FSET`                              |
//! | 4       | format version (u32, currently 1)         |
//! | 8       | n, rows (u64)                             |
//! | 8       | d, columns (u64)                          |
//! | 4 + len | extractor id, u32 length then UTF-8 bytes |
//! | 4·n·d   | row-major f32 values                      |

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image2D;

pub const MAGIC: &[u8; 4] = b"FSET";
pub const FORMAT_VERSION: u32 = 1;
pub const BASELINE_EXTRACTOR_ID: &str = "baseline-avgpool-8x8";
const GRID: usize = 8;

/// `n x d` embedding matrix, one row per image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    n: usize,
    d: usize,
    data: Vec<f32>,
    extractor_id: String,
}

impl FeatureSet {
    pub fn new(n: usize, d: usize, data: Vec<f32>, extractor_id: impl Into<String>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput(format!("feature set must be non-empty, got {n}x{d}")));
        }
        if n.checked_mul(d) != Some(data.len()) {
            return Err(Error::DimensionMismatch(format!(
                "{n}x{d} feature set given {} values",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature row {}, column {}", i / d, i % d)));
        }
        Ok(Self {
            n,
            d,
            data,
            extractor_id: extractor_id.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn extractor_id(&self) -> &str {
        &self.extractor_id
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.d)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let id = self.extractor_id.as_bytes();
        let mut out = Vec::with_capacity(28 + id.len() + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.d as u64).to_le_bytes());
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id);
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4, "magic")? != MAGIC {
            return Err(Error::Format("bad magic at offset 0, expected FSET".into()));
        }
        let version = cur.u32("format version")?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version} at offset 4")));
        }
        let n = cur.u64("n")?;
        let d = cur.u64("d")?;
        let id_len = cur.u32("extractor id length")? as usize;
        let id_offset = cur.pos;
        let id = std::str::from_utf8(cur.take(id_len, "extractor id")?)
            .map_err(|e| Error::Format(format!("extractor id at offset {id_offset} is not UTF-8: {e}")))?
            .to_string();

        let payload_offset = cur.pos;
        let count = usize::try_from(n)
            .ok()
            .zip(usize::try_from(d).ok())
            .and_then(|(n, d)| n.checked_mul(d))
            .filter(|c| c.checked_mul(4).is_some())
            .ok_or_else(|| Error::Format(format!("dimension overflow: n={n}, d={d}")))?;
        let available = bytes.len() - payload_offset;
        if available < count * 4 {
            return Err(Error::Format(format!(
                "truncated payload at offset {payload_offset}: n={n}, d={d} needs {} bytes, {available} present ({} complete rows)",
                count * 4,
                if d == 0 { 0 } else { available as u64 / (4 * d) }
            )));
        }
        if available > count * 4 {
            return Err(Error::Format(format!(
                "{} trailing bytes after payload at offset {}",
                available - count * 4,
                payload_offset + count * 4
            )));
        }
        let data = bytes[payload_offset..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        FeatureSet::new(n as usize, d as usize, data, id)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Format(format!(
                "truncated while reading {what} at offset {} ({len} bytes needed, {} left)",
                self.pos,
                self.bytes.len() - self.pos
            ))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        let b = self.take(8, what)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(u64::from_le_bytes(a))
    }
}

pub fn read_featureset(path: &Path) -> Result<FeatureSet> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    FeatureSet::from_bytes(&bytes).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_featureset(fs_: &FeatureSet, path: &Path) -> Result<()> {
    fs::write(path, fs_.to_bytes()).map_err(|e| Error::io(path, e))
}

/// Headerless CSV, one row per sample, `d` numeric columns.
pub fn read_featureset_csv(path: &Path, extractor_id: &str) -> Result<FeatureSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut data = Vec::new();
    let mut d = None;
    let mut n = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        match d {
            None => d = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(Error::Format(format!(
                    "{}: row {} has {} columns, expected {d}",
                    path.display(),
                    row + 1,
                    record.len()
                )))
            }
            _ => {}
        }
        for (col, field) in record.iter().enumerate() {
            let v: f32 = field.parse().map_err(|_| {
                Error::Format(format!("{}: row {}, column {}: {field:?} is not a number", path.display(), row + 1, col + 1))
            })?;
            data.push(v);
        }
        n += 1;
    }
    FeatureSet::new(n, d.unwrap_or(0), data, extractor_id)
}

/// Deterministic 64-d descriptor: 8x8 grid of block means scaled to `[0, 1]`.
///
/// Sides not divisible by 8 are padded by replicating the last row/column.
pub fn baseline_extract(images: &[Image2D]) -> Result<FeatureSet> {
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidInput("no images to extract features from".into()))?;
    if let Some(bad) = images.iter().find(|im| !im.same_dims(first)) {
        return Err(Error::DimensionMismatch(format!(
            "feature extraction needs equal sizes: {}x{} vs {}x{}",
            first.width(),
            first.height(),
            bad.width(),
            bad.height()
        )));
    }
    let data = images.iter().flat_map(block_means).collect();
    FeatureSet::new(images.len(), GRID * GRID, data, BASELINE_EXTRACTOR_ID)
}

fn block_means(img: &Image2D) -> Vec<f32> {
    let (w, h) = (img.width(), img.height());
    let (bw, bh) = (w.div_ceil(GRID), h.div_ceil(GRID));
    let mut out = Vec::with_capacity(GRID * GRID);
    for gy in 0..GRID {
        for gx in 0..GRID {
            let mut sum = 0u64;
            for y in gy * bh..(gy + 1) * bh {
                for x in gx * bw..(gx + 1) * bw {
                    sum += u64::from(img.pixel(x.min(w - 1), y.min(h - 1)));
                }
            }
            out.push((sum as f64 / (bw * bh) as f64 / 255.0) as f32);
        }
    }
    out
}
