//! PNG and JSON output.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::render::ImageRgb;
use crate::{Error, Result};

fn encode(width: usize, height: usize, color: png::ColorType, data: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width as u32, height as u32);
        encoder.set_color(color);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header()?;
        writer.write_image_data(data)?;
        writer.finish()?;
    }
    Ok(out)
}

/// 8-bit RGB PNG without alpha.
pub fn encode_rgb_png(image: &ImageRgb) -> Result<Vec<u8>> {
    encode(image.width(), image.height(), png::ColorType::Rgb, &image.to_rgb8())
}

pub fn write_rgb_png(path: &Path, image: &ImageRgb) -> Result<()> {
    let bytes = encode_rgb_png(image)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Grayscale PNG of `values` scaled so the maximum maps to 255. An all-zero
/// field stays black.
pub fn write_gray_png(path: &Path, values: &[f64], width: usize, height: usize) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::Argument(format!(
            "{} values do not fill a {width}x{height} map",
            values.len()
        )));
    }
    let max = values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let data: Vec<u8> = values
        .iter()
        .map(|&v| {
            if max > 0.0 && v.is_finite() {
                (v.max(0.0) / max * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect();
    let bytes = encode(width, height, png::ColorType::Grayscale, &data)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
