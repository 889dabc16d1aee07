pub mod features;
pub mod kinetics;
pub mod pairs;
pub mod phantom;
pub mod same;
pub mod volumes;

use std::path::Path;

use dceeval_core::io::read_png;
use dceeval_core::Image2D;

use crate::report::Outcome;

/// Reads a slice PNG without attaching an identity.
fn load(path: &Path) -> Outcome<Image2D> {
    let (w, h, pixels) = read_png(path)?;
    Ok(Image2D::from_pixels(w, h, pixels)?)
}

const BAD_NAME: &str = "file name is not <case_id>_<phase>_<index>.png";
