//! 3×3 Sobel edge magnitude, `|Gx| + |Gy|`, clamped to the pixel range.
//!
//! Pixels enter as `p / 255` in Q16.16. Each interior pixel takes eight
//! multiplications, one per non-zero kernel neighbour (weight 1 on the
//! corners, 2 on the edge midpoints); each product is shared by Gx and Gy
//! with the appropriate sign. Border pixels are zero.

use num_traits::Float;

use super::image::GrayImage;
use crate::error::{Error, Result};
use crate::tuner::SwapMode;
use crate::widearith::{Fx32, FxUnit, WideMulConfig};

/// Multiplications per interior pixel.
pub const MULS_PER_PIXEL: usize = 8;

fn check_shape(img: &GrayImage) -> Result<()> {
    if img.width < 3 || img.height < 3 {
        return Err(Error::Shape(format!(
            "Sobel needs at least 3x3 pixels, got {}x{}",
            img.width, img.height
        )));
    }
    Ok(())
}

pub fn run_sobel(img: &GrayImage, cfg: &WideMulConfig, mode: SwapMode) -> Result<GrayImage> {
    let mut unit = FxUnit::new(cfg, mode)?;
    sobel_with(&mut unit, img)
}

pub fn sobel_with(unit: &mut FxUnit<'_>, img: &GrayImage) -> Result<GrayImage> {
    check_shape(img)?;
    let (w, h) = (img.width, img.height);
    let px: Vec<Fx32> = img.pixels.iter().map(|&p| Fx32::from_unit_u8(p)).collect();
    let one = Fx32::ONE;
    let two = Fx32::from_int(2);
    let mut out = vec![0u8; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let at = |dx: usize, dy: usize| px[(y + dy - 1) * w + (x + dx - 1)];
            let tl = unit.mul(at(0, 0), one);
            let t = unit.mul(at(1, 0), two);
            let tr = unit.mul(at(2, 0), one);
            let l = unit.mul(at(0, 1), two);
            let r = unit.mul(at(2, 1), two);
            let bl = unit.mul(at(0, 2), one);
            let b = unit.mul(at(1, 2), two);
            let br = unit.mul(at(2, 2), one);
            let gx = (tr - tl) + (r - l) + (br - bl);
            let gy = (bl - tl) + (b - t) + (br - tr);
            let mag = gx.abs() + gy.abs();
            out[y * w + x] = mag.clamp(Fx32::ZERO, one).to_unit_u8();
        }
    }
    GrayImage::new(w, h, out)
}

/// Same filter in floating point.
pub fn sobel_reference<T: Float>(img: &GrayImage) -> Result<GrayImage> {
    check_shape(img)?;
    let (w, h) = (img.width, img.height);
    let scale = T::from(255.0).expect("representable");
    let px: Vec<T> = img.pixels.iter().map(|&p| T::from(p).expect("u8 fits") / scale).collect();
    let two = T::one() + T::one();
    let mut out = vec![0u8; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let at = |dx: usize, dy: usize| px[(y + dy - 1) * w + (x + dx - 1)];
            let gx = (at(2, 0) - at(0, 0)) + two * (at(2, 1) - at(0, 1)) + (at(2, 2) - at(0, 2));
            let gy = (at(0, 2) - at(0, 0)) + two * (at(1, 2) - at(1, 0)) + (at(2, 2) - at(2, 0));
            let mag = (gx.abs() + gy.abs()).min(T::one());
            out[y * w + x] = (mag * scale).round().to_u8().expect("clamped to [0, 255]");
        }
    }
    GrayImage::new(w, h, out)
}
