//! 8-bit images and binary PNM (P5/P6) I/O.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major luminance.
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!("empty image {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::Shape(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_pnm(bytes: &[u8]) -> Result<Self> {
        let (magic, w, h, body) = parse_pnm(bytes)?;
        if magic != b'5' {
            return Err(Error::format(0, "expected a P5 (grayscale) image"));
        }
        Self::new(w, h, body.to_vec())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_pnm(&fs::read(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_pgm())?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    /// Row-major, interleaved R, G, B.
    pub pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!("empty image {width}x{height}")));
        }
        if pixels.len() != 3 * width * height {
            return Err(Error::Shape(format!(
                "{width}x{height} RGB image needs {} bytes, got {}",
                3 * width * height,
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn pixel(&self, i: usize) -> [u8; 3] {
        [self.pixels[3 * i], self.pixels[3 * i + 1], self.pixels[3 * i + 2]]
    }

    pub fn from_pixels(width: usize, height: usize, pixels: &[[u8; 3]]) -> Result<Self> {
        Self::new(width, height, pixels.iter().flatten().copied().collect())
    }

    /// One colour plane as a grayscale image.
    pub fn channel(&self, c: usize) -> GrayImage {
        assert!(c < 3, "channel index {c} out of range");
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().skip(c).step_by(3).copied().collect(),
        }
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_pnm(bytes: &[u8]) -> Result<Self> {
        let (magic, w, h, body) = parse_pnm(bytes)?;
        if magic != b'6' {
            return Err(Error::format(0, "expected a P6 (colour) image"));
        }
        Self::new(w, h, body.to_vec())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_pnm(&fs::read(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_ppm())?;
        Ok(())
    }
}

/// Splits a binary PNM into (type digit, width, height, raster).
fn parse_pnm(bytes: &[u8]) -> Result<(u8, usize, usize, &[u8])> {
    if bytes.len() < 2 || bytes[0] != b'P' || !matches!(bytes[1], b'5' | b'6') {
        return Err(Error::format(0, "not a binary PNM (P5/P6)"));
    }
    let magic = bytes[1];
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(pos as u64, "expected a header number"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| Error::format(start as u64, "header number too large"))?;
    }
    if fields[2] != 255 {
        return Err(Error::format(pos as u64, format!("unsupported maxval {}", fields[2])));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::format(pos as u64, "missing whitespace after header"));
    }
    pos += 1;
    let [w, h, _] = fields;
    let channels = if magic == b'5' { 1 } else { 3 };
    let need = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::format(3, "image dimensions overflow"))?;
    let body = &bytes[pos..];
    if body.len() < need {
        return Err(Error::format(bytes.len() as u64, format!("raster truncated: {} of {need} bytes", body.len())));
    }
    if body.len() > need {
        return Err(Error::format((pos + need) as u64, "trailing bytes after raster"));
    }
    Ok((magic, w, h, body))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let img = GrayImage::new(3, 2, vec![0, 1, 2, 253, 254, 255]).unwrap();
        let bytes = img.to_pgm();
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(GrayImage::from_pnm(&bytes).unwrap(), img);
    }

    #[test]
    fn ppm_round_trip_and_channels() {
        let img = RgbImage::from_pixels(2, 1, &[[1, 2, 3], [4, 5, 6]]).unwrap();
        assert_eq!(RgbImage::from_pnm(&img.to_ppm()).unwrap(), img);
        assert_eq!(img.channel(1).pixels, vec![2, 5]);
        assert_eq!(img.pixel(1), [4, 5, 6]);
    }

    #[test]
    fn header_comments_are_skipped() {
        let bytes = b"P5 # hello\n2 # w\n1\n255\n\x07\x08";
        assert_eq!(GrayImage::from_pnm(bytes).unwrap().pixels, vec![7, 8]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(GrayImage::from_pnm(b"P2\n1 1\n255\n0"), Err(Error::Format { offset: 0, .. })));
        assert!(GrayImage::from_pnm(b"P5\n2 2\n255\n\x00").is_err());
        assert!(GrayImage::from_pnm(b"P5\n1 1\n65535\n\x00\x00").is_err());
        assert!(GrayImage::from_pnm(&RgbImage::new(1, 1, vec![0; 3]).unwrap().to_ppm()).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
    }
}
