use std::io::Cursor;
use std::path::Path;

use image::codecs::bmp::BmpEncoder;
use image::{DynamicImage, ExtendedColorType, ImageFormat, ImageReader};

use super::GrayImage;
use crate::error::{Error, Result};

/// Reads an 8-bit grayscale BMP, PNG, PGM or TIFF file.
///
/// Color files are accepted only when every pixel has identical channels
/// (grayscale stored as RGB, or a BMP with a gray palette) and no
/// transparency.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::UnsupportedFormat(msg) => {
            Error::UnsupportedFormat(format!("{}: {msg}", path.display()))
        }
        Error::NotGrayscale(msg) => Error::NotGrayscale(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn decode(bytes: &[u8]) -> Result<GrayImage> {
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::UnsupportedFormat(e.to_string()))?;
    match reader.format() {
        Some(ImageFormat::Bmp | ImageFormat::Png | ImageFormat::Pnm | ImageFormat::Tiff) => {}
        Some(other) => return Err(Error::UnsupportedFormat(format!("{other:?}"))),
        None => return Err(Error::UnsupportedFormat("unrecognized file signature".into())),
    }
    let decoded = reader
        .decode()
        .map_err(|e| Error::UnsupportedFormat(e.to_string()))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);

    let data = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        DynamicImage::ImageLumaA8(buf) => collapse_channels(buf.as_raw(), 2, 1)?,
        DynamicImage::ImageRgb8(buf) => collapse_channels(buf.as_raw(), 3, 3)?,
        DynamicImage::ImageRgba8(buf) => collapse_channels(buf.as_raw(), 4, 3)?,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "{:?} is not an 8-bit layout",
                other.color()
            )))
        }
    };
    GrayImage::new(w, h, data)
}

/// Collapses interleaved pixels to one channel. `color` leading channels must
/// agree; a trailing alpha channel (if any) must be opaque.
fn collapse_channels(raw: &[u8], stride: usize, color: usize) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(raw.len() / stride);
    for (i, px) in raw.chunks_exact(stride).enumerate() {
        if px[..color].iter().any(|&c| c != px[0]) {
            return Err(Error::NotGrayscale(format!(
                "pixel {i} has channels {:?}",
                &px[..color]
            )));
        }
        if stride > color && px[color] != u8::MAX {
            return Err(Error::UnsupportedFormat(format!(
                "pixel {i} is not opaque"
            )));
        }
        out.push(px[0]);
    }
    Ok(out)
}

/// Encodes as an 8-bit palettized grayscale BMP.
pub fn encode_bmp(img: &GrayImage) -> Vec<u8> {
    let mut buf = Vec::new();
    BmpEncoder::new(&mut buf)
        .encode(
            img.pixels(),
            img.width() as u32,
            img.height() as u32,
            ExtendedColorType::L8,
        )
        .expect("in-memory BMP encoding of an 8-bit image cannot fail");
    buf
}

pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_bmp(img)).map_err(|e| Error::io(path, e))
}
