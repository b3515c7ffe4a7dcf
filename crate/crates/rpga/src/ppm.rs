//! Binary PPM (P6, maxval 255). Pixels on disk are gamma-encoded with
//! exponent 1/2.2; in memory they are linear.

use std::fs;
use std::path::Path;

use rpga_core::Image;

use crate::error::{Error, Result};

pub const GAMMA: f64 = 2.2;

pub fn encode_channel(linear: f64) -> u8 {
    (linear.clamp(0.0, 1.0).powf(1.0 / GAMMA) * 255.0).round() as u8
}

pub fn decode_channel(v: u8) -> f64 {
    (v as f64 / 255.0).powf(GAMMA)
}

pub fn encode_rgb8(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

pub fn encode_image(img: &Image) -> Vec<u8> {
    let bytes: Vec<u8> = img.data.iter().map(|v| encode_channel(*v)).collect();
    encode_rgb8(img.width, img.height, &bytes)
}

pub fn write_image(path: &Path, img: &Image) -> Result<()> {
    fs::write(path, encode_image(img)).map_err(|e| Error::io(path, e))
}

pub fn write_rgb8(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    fs::write(path, encode_rgb8(width, height, rgb)).map_err(|e| Error::io(path, e))
}

/// Parses a P6 file with maxval 255 (comments allowed in the header).
pub fn decode(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut pos = 0;
    let mut token = |bytes: &[u8]| -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PPM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token(bytes)? != "P6" {
        return Err(Error::Format("not a binary PPM (P6)".into()));
    }
    let num = |s: String| s.parse::<usize>().map_err(|_| Error::Format(format!("bad PPM header field `{s}`")));
    let width = num(token(bytes)?)?;
    let height = num(token(bytes)?)?;
    let maxval = num(token(bytes)?)?;
    if maxval != 255 {
        return Err(Error::Format(format!("unsupported PPM maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let n = width * height * 3;
    if bytes.len() < pos + n {
        return Err(Error::Format("truncated PPM raster".into()));
    }
    Ok((width, height, bytes[pos..pos + n].to_vec()))
}

pub fn read_image(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (w, h, raw) = decode(&bytes).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    Ok(Image::from_data(w, h, raw.into_iter().map(decode_channel).collect())?)
}
