use std::path::Path;

use gaa_core::{BinaryMask, RgbImage};
use image::{ColorType, DynamicImage, GrayImage, ImageReader};

use crate::error::{GaaError, IoContext, Result};

pub const DEFAULT_MASK_THRESHOLD: u8 = 127;

fn open(path: &Path) -> Result<DynamicImage> {
    let reader = ImageReader::open(path).at(path)?.with_guessed_format().at(path)?;
    let img = reader.decode().map_err(|source| GaaError::Image { path: path.to_path_buf(), source })?;
    if img.width() == 0 || img.height() == 0 {
        return Err(GaaError::format(path, "zero-size image"));
    }
    match img.color() {
        ColorType::L8 | ColorType::La8 | ColorType::Rgb8 | ColorType::Rgba8 => Ok(img),
        other => {
            Err(GaaError::format(path, format!("unsupported pixel format {other:?}, expected 8 bits per channel")))
        }
    }
}

/// Binarizes an 8-bit raster: a pixel is set when its gray level exceeds
/// `threshold`. Color inputs are reduced to luma first.
pub fn load_mask(path: impl AsRef<Path>, threshold: u8) -> Result<BinaryMask> {
    let path = path.as_ref();
    let gray = open(path)?.into_luma8();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let bits = gray.as_raw().iter().map(|&v| v > threshold).collect();
    BinaryMask::from_bits(w, h, bits).map_err(|e| GaaError::core(path, e))
}

/// Writes an 8-bit grayscale PNG with 255 for set pixels and 0 elsewhere.
pub fn save_mask(path: impl AsRef<Path>, mask: &BinaryMask) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = mask.dims();
    let raw = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    let img = GrayImage::from_raw(w as u32, h as u32, raw).expect("buffer matches mask dimensions");
    save(path, &DynamicImage::ImageLuma8(img))
}

pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let rgb = open(path)?.into_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let pixels = rgb.pixels().map(|p| p.0).collect();
    RgbImage::new(w, h, pixels).map_err(|e| GaaError::core(path, e))
}

pub fn save_rgb(path: impl AsRef<Path>, image: &RgbImage) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = image.dims();
    let raw = image.pixels().iter().flat_map(|p| p.iter().copied()).collect();
    let img = image::RgbImage::from_raw(w as u32, h as u32, raw).expect("buffer matches image dimensions");
    save(path, &DynamicImage::ImageRgb8(img))
}

/// Width and height from the file header, without decoding pixels.
pub fn image_dims(path: impl AsRef<Path>) -> Result<(usize, usize)> {
    let path = path.as_ref();
    let (w, h) = ImageReader::open(path)
        .at(path)?
        .with_guessed_format()
        .at(path)?
        .into_dimensions()
        .map_err(|source| GaaError::Image { path: path.to_path_buf(), source })?;
    Ok((w as usize, h as usize))
}

fn save(path: &Path, img: &DynamicImage) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).at(dir)?;
    }
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| GaaError::Image { path: path.to_path_buf(), source })
}
