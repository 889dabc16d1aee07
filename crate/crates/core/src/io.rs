//! On-disk layouts: slice PNGs, volume directories, bounding-box CSV.
//!
//! Slices are named `<case_id>_<phase>_<slice_index:04>.png`, so the
//! lexicographic order of one volume's files is its stack order.

use std::collections::BTreeMap;
use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageEncoder, ImageFormat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{stack_volume, BoundingBox, Image2D, Phase, Volume};

/// Identity of a slice as encoded in its file name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SliceKey {
    pub case_id: String,
    pub phase: Phase,
    pub slice_index: usize,
}

impl SliceKey {
    pub fn of(img: &Image2D) -> Self {
        Self {
            case_id: img.case_id().to_string(),
            phase: img.phase(),
            slice_index: img.slice_index(),
        }
    }

    /// File stem without extension, also used as the pair id.
    pub fn stem(&self) -> String {
        format!("{}_{}_{:04}", self.case_id, self.phase, self.slice_index)
    }

    pub fn file_name(&self) -> String {
        format!("{}.png", self.stem())
    }

    /// Parses `<case_id>_<phase>_<index>.png`. The case id may itself contain underscores.
    pub fn parse_file_name(name: &str) -> Option<Self> {
        let stem = name.strip_suffix(".png")?;
        let (rest, index) = stem.rsplit_once('_')?;
        if index.is_empty() || !index.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let slice_index = index.parse().ok()?;
        Phase::ALL.into_iter().find_map(|phase| {
            let case_id = rest.strip_suffix(phase.as_str())?.strip_suffix('_')?;
            (!case_id.is_empty()).then(|| Self {
                case_id: case_id.to_string(),
                phase,
                slice_index,
            })
        })
    }
}

/// Decodes an 8-bit grayscale PNG. RGB input is accepted only when all channels agree.
pub fn decode_png(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let decode_err = |message: String| Error::Decode {
        path: path.to_path_buf(),
        message,
    };
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| decode_err(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(buf) => Ok((w, h, buf.into_raw())),
        DynamicImage::ImageRgb8(buf) => {
            let raw = buf.into_raw();
            let mut out = Vec::with_capacity(w * h);
            for (i, px) in raw.chunks_exact(3).enumerate() {
                if px[0] != px[1] || px[1] != px[2] {
                    return Err(decode_err(format!(
                        "RGB channels differ at pixel ({}, {})",
                        i % w,
                        i / w
                    )));
                }
                out.push(px[0]);
            }
            Ok((w, h, out))
        }
        other => Err(decode_err(format!(
            "unsupported color type {:?}; expected 8-bit grayscale",
            other.color()
        ))),
    }
}

pub fn read_png(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_png(&bytes, path)
}

pub fn encode_png(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new_with_quality(
        Cursor::new(&mut out),
        image::codecs::png::CompressionType::Fast,
        image::codecs::png::FilterType::Adaptive,
    )
    .write_image(pixels, width as u32, height as u32, image::ExtendedColorType::L8)
    .map_err(|e| Error::InvalidInput(format!("png encoding failed: {e}")))?;
    Ok(out)
}

pub fn write_png(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    let bytes = encode_png(width, height, pixels)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a slice, taking its identity from the file name.
pub fn read_slice(path: &Path) -> Result<Image2D> {
    let key = path
        .file_name()
        .and_then(|n| n.to_str())
        .and_then(SliceKey::parse_file_name)
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "{} does not follow <case_id>_<phase>_<index>.png",
                path.display()
            ))
        })?;
    let (w, h, pixels) = read_png(path)?;
    Image2D::new(w, h, pixels, key.case_id, key.phase, key.slice_index)
}

/// Writes a slice under its conventional name inside `dir`.
pub fn write_slice(dir: &Path, img: &Image2D) -> Result<PathBuf> {
    let path = dir.join(SliceKey::of(img).file_name());
    write_png(&path, img.width(), img.height(), img.pixels())?;
    Ok(path)
}

/// PNG files of a directory (non-recursive), split into conventionally named
/// slices and everything else. Both lists are sorted.
pub fn scan_slice_dir(dir: &Path) -> Result<(BTreeMap<SliceKey, PathBuf>, Vec<PathBuf>)> {
    let mut named = BTreeMap::new();
    let mut other = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file() || path.extension().and_then(|e| e.to_str()) != Some("png") {
            continue;
        }
        match path.file_name().and_then(|n| n.to_str()).and_then(SliceKey::parse_file_name) {
            Some(key) => {
                named.insert(key, path);
            }
            None => other.push(path),
        }
    }
    other.sort();
    Ok((named, other))
}

/// Sidecar describing one stored volume.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolumeManifest {
    pub case_id: String,
    pub phase: Phase,
    pub width: usize,
    pub height: usize,
    pub slice_count: usize,
}

impl VolumeManifest {
    pub fn of(vol: &Volume) -> Self {
        Self {
            case_id: vol.case_id().to_string(),
            phase: vol.phase(),
            width: vol.width(),
            height: vol.height(),
            slice_count: vol.depth(),
        }
    }

    pub fn file_name(case_id: &str, phase: Phase) -> String {
        format!("{case_id}_{phase}.json")
    }
}

/// Writes every slice plus the `<case_id>_<phase>.json` sidecar.
pub fn write_volume(dir: &Path, vol: &Volume) -> Result<()> {
    for s in vol.slices() {
        write_slice(dir, s)?;
    }
    let manifest = VolumeManifest::of(vol);
    let path = dir.join(VolumeManifest::file_name(&manifest.case_id, manifest.phase));
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

/// Loads every volume in a directory, grouping slices by (case, phase).
///
/// Sidecar manifests, where present, must agree with the stacked volume.
pub fn read_volumes(dir: &Path) -> Result<BTreeMap<(String, Phase), Volume>> {
    let (named, _) = scan_slice_dir(dir)?;
    let mut groups: BTreeMap<(String, Phase), Vec<Image2D>> = BTreeMap::new();
    for (key, path) in &named {
        let (w, h, pixels) = read_png(path)?;
        let img = Image2D::new(w, h, pixels, key.case_id.clone(), key.phase, key.slice_index)?;
        groups.entry((key.case_id.clone(), key.phase)).or_default().push(img);
    }
    let mut volumes = BTreeMap::new();
    for ((case_id, phase), slices) in groups {
        let vol = stack_volume(slices).map_err(|e| {
            Error::InvalidInput(format!("volume {case_id}/{phase} in {}: {e}", dir.display()))
        })?;
        let sidecar = dir.join(VolumeManifest::file_name(&case_id, phase));
        if sidecar.is_file() {
            let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
            let expected: VolumeManifest = serde_json::from_str(&text)?;
            if expected != VolumeManifest::of(&vol) {
                return Err(Error::InvalidInput(format!(
                    "{} does not match the slices on disk: {expected:?} vs {:?}",
                    sidecar.display(),
                    VolumeManifest::of(&vol)
                )));
            }
        }
        volumes.insert((case_id, phase), vol);
    }
    Ok(volumes)
}

pub const BBOX_HEADER: [&str; 7] = ["case_id", "x0", "y0", "x1", "y1", "slice_lo", "slice_hi"];

pub fn read_bboxes(path: &Path) -> Result<Vec<BoundingBox>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != BBOX_HEADER {
        return Err(Error::InvalidInput(format!(
            "{}: expected header {}, got {}",
            path.display(),
            BBOX_HEADER.join(","),
            header.join(",")
        )));
    }
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let bbox: BoundingBox = row?;
        bbox.validate()?;
        out.push(bbox);
    }
    Ok(out)
}

pub fn write_bboxes<W: std::io::Write>(writer: W, boxes: &[BoundingBox]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for b in boxes {
        w.serialize(b)?;
    }
    w.flush().map_err(|e| Error::io("<bbox csv>", e))?;
    Ok(())
}
