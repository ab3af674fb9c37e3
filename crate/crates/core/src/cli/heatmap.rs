//! Belief heatmap export as binary PGM with a JSON overlay sidecar.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Rect};
use crate::histogram::BeliefImage;

/// Points drawn over the heatmap, in world coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub image: String,
    pub width: usize,
    pub height: usize,
    pub extent: Rect,
    /// The first PGM row is the top of the area (largest y).
    pub top_row_is_max_y: bool,
    pub trajectory: Vec<Point2>,
    pub true_targets: Vec<Point2>,
    pub predicted_targets: Vec<Point2>,
}

/// `dir/name.pgm` gets the sidecar `dir/name.overlay.json`.
pub fn overlay_path(pgm: &Path) -> PathBuf {
    let stem = pgm.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    pgm.with_file_name(format!("{stem}.overlay.json"))
}

fn to_byte(v: f64) -> u8 {
    (255.0 * v.clamp(0.0, 1.0)).round() as u8
}

/// Encodes the image as P5 with maxval 255, `round(255·v)` per pixel. Image row
/// 0 is the lowest y, so rows are written in reverse.
pub fn encode_pgm(img: &BeliefImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.reserve(img.width * img.height);
    for row in (0..img.height).rev() {
        out.extend(img.pixels[row * img.width..(row + 1) * img.width].iter().map(|&v| to_byte(v)));
    }
    out
}

pub fn export_heatmap(
    img: &BeliefImage,
    path: &Path,
    extent: &Rect,
    trajectory: &[Point2],
    true_targets: &[Point2],
    predicted_targets: &[Point2],
) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::File::create(path)?.write_all(&encode_pgm(img))?;
    let overlay = Overlay {
        image: path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        width: img.width,
        height: img.height,
        extent: *extent,
        top_row_is_max_y: true,
        trajectory: trajectory.to_vec(),
        true_targets: true_targets.to_vec(),
        predicted_targets: predicted_targets.to_vec(),
    };
    std::fs::write(overlay_path(path), serde_json::to_string_pretty(&overlay)? + "\n")?;
    Ok(())
}

fn header_token(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(Error::Pgm("truncated header".into())),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Pgm(format!("bad header field at byte {start}")))
}

/// Decodes a P5 image written by [`encode_pgm`], returning pixels in `[0, 1]`
/// with row 0 at the lowest y.
pub fn decode_pgm(bytes: &[u8]) -> Result<BeliefImage> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::Pgm("missing P5 magic".into()));
    }
    let mut pos = 2;
    let width = header_token(bytes, &mut pos)?;
    let height = header_token(bytes, &mut pos)?;
    let maxval = header_token(bytes, &mut pos)?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Pgm(format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let raster = bytes.get(pos..).unwrap_or_default();
    if raster.len() != width * height {
        return Err(Error::Pgm(format!(
            "expected {} raster bytes, found {}",
            width * height,
            raster.len()
        )));
    }
    let mut pixels = Vec::with_capacity(width * height);
    for row in (0..height).rev() {
        pixels.extend(raster[row * width..(row + 1) * width].iter().map(|&b| f64::from(b) / maxval as f64));
    }
    BeliefImage::new(width, height, pixels)
}

pub fn read_pgm(path: &Path) -> Result<BeliefImage> {
    decode_pgm(&std::fs::read(path)?)
}
