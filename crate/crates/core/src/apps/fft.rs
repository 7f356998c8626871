//! Iterative radix-2 decimation-in-time FFT.
//!
//! The fixed-point version multiplies by precomputed Q16.16 twiddles, four
//! multiplications per butterfly, and does not rescale between stages.
//!
//! Signal files hold Q16.16 samples:
//!
//! ```text
//! 0..4    magic "AXFS"
//! 4..6    format version (u16)
//! 6..8    reserved, zero
//! 8..16   sample count N (u64)
//! 16..    N samples, re then im, each i32 little-endian
//! ```

use std::fs;
use std::path::Path;

use num_complex::Complex;
use num_traits::{Float, FloatConst};

use crate::error::{Error, Result};
use crate::tuner::SwapMode;
use crate::widearith::{Fx32, FxUnit, WideMulConfig};
use crate::FxComplex;

pub const SIGNAL_MAGIC: &[u8; 4] = b"AXFS";
pub const SIGNAL_VERSION: u16 = 1;
pub const SIGNAL_HEADER_LEN: usize = 16;

fn check_len(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyInput("signal"));
    }
    if !n.is_power_of_two() {
        return Err(Error::Shape(format!("FFT length {n} is not a power of two")));
    }
    Ok(())
}

fn bit_reverse_permute<T>(x: &mut [T]) {
    let n = x.len();
    let bits = n.trailing_zeros();
    if bits == 0 {
        return;
    }
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            x.swap(i, j);
        }
    }
}

/// `exp(-2πik/n)` for `k < n/2`.
fn twiddles<T: Float + FloatConst>(n: usize) -> Vec<Complex<T>> {
    let step = -T::TAU() / T::from(n).expect("length fits");
    (0..n / 2)
        .map(|k| {
            let angle = step * T::from(k).expect("index fits");
            Complex::new(angle.cos(), angle.sin())
        })
        .collect()
}

/// Q16.16 twiddle table for length `n`.
pub fn fx_twiddles(n: usize) -> Result<Vec<FxComplex>> {
    check_len(n)?;
    twiddles::<f64>(n)
        .into_iter()
        .map(|w| Ok(Complex::new(Fx32::from_real(w.re)?, Fx32::from_real(w.im)?)))
        .collect()
}

pub fn run_fft(signal: &[FxComplex], cfg: &WideMulConfig, mode: SwapMode) -> Result<Vec<FxComplex>> {
    let mut unit = FxUnit::new(cfg, mode)?;
    fft_with(&mut unit, signal)
}

pub fn fft_with(unit: &mut FxUnit<'_>, signal: &[FxComplex]) -> Result<Vec<FxComplex>> {
    let n = signal.len();
    check_len(n)?;
    let tw = fx_twiddles(n)?;
    let mut x = signal.to_vec();
    bit_reverse_permute(&mut x);
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for j in 0..half {
                let w = tw[j * stride];
                let v = x[start + j + half];
                let t = Complex::new(
                    unit.mul(v.re, w.re) - unit.mul(v.im, w.im),
                    unit.mul(v.re, w.im) + unit.mul(v.im, w.re),
                );
                let u = x[start + j];
                x[start + j] = Complex::new(u.re + t.re, u.im + t.im);
                x[start + j + half] = Complex::new(u.re - t.re, u.im - t.im);
            }
        }
        len *= 2;
    }
    Ok(x)
}

/// Same transform in floating point.
pub fn fft_reference<T: Float + FloatConst>(signal: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let n = signal.len();
    check_len(n)?;
    let tw = twiddles::<T>(n);
    let mut x = signal.to_vec();
    bit_reverse_permute(&mut x);
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for j in 0..half {
                let t = x[start + j + half] * tw[j * stride];
                let u = x[start + j];
                x[start + j] = u + t;
                x[start + j + half] = u - t;
            }
        }
        len *= 2;
    }
    Ok(x)
}

pub fn fx_to_complex<T: Float>(x: &[FxComplex]) -> Vec<Complex<T>> {
    x.iter().map(|c| Complex::new(c.re.to_real(), c.im.to_real())).collect()
}

pub fn signal_to_bytes(signal: &[FxComplex]) -> Vec<u8> {
    let mut out = Vec::with_capacity(SIGNAL_HEADER_LEN + 8 * signal.len());
    out.extend_from_slice(SIGNAL_MAGIC);
    out.extend_from_slice(&SIGNAL_VERSION.to_le_bytes());
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(&(signal.len() as u64).to_le_bytes());
    for c in signal {
        out.extend_from_slice(&c.re.raw().to_le_bytes());
        out.extend_from_slice(&c.im.raw().to_le_bytes());
    }
    out
}

pub fn signal_from_bytes(bytes: &[u8]) -> Result<Vec<FxComplex>> {
    if bytes.len() < SIGNAL_HEADER_LEN {
        return Err(Error::format(bytes.len() as u64, "truncated header"));
    }
    if &bytes[..4] != SIGNAL_MAGIC {
        return Err(Error::format(0, "bad magic, expected AXFS"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != SIGNAL_VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let body = &bytes[SIGNAL_HEADER_LEN..];
    let expected = count
        .checked_mul(8)
        .filter(|&e| e <= usize::MAX as u64)
        .ok_or_else(|| Error::format(8, format!("sample count {count} too large")))? as usize;
    if body.len() != expected {
        let offset = SIGNAL_HEADER_LEN + body.len().min(expected) / 8 * 8;
        return Err(Error::format(
            offset as u64,
            format!("expected {expected} sample bytes, found {}", body.len()),
        ));
    }
    let word = |c: &[u8]| Fx32::from_raw(i32::from_le_bytes(c.try_into().expect("4 bytes")));
    Ok(body.chunks_exact(8).map(|c| Complex::new(word(&c[..4]), word(&c[4..]))).collect())
}

pub fn read_signal(path: impl AsRef<Path>) -> Result<Vec<FxComplex>> {
    signal_from_bytes(&fs::read(path)?)
}

pub fn save_signal(signal: &[FxComplex], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, signal_to_bytes(signal))?;
    Ok(())
}
