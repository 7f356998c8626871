//! Application-level metrics, generic over the floating-point type.

use std::fmt;
use std::str::FromStr;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::apps::GrayImage;
use crate::error::{Error, Result};

/// Dynamic range of 8-bit pixels.
pub const SSIM_L: f64 = 255.0;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
/// Side of the uniform sliding window (stride 1).
pub const SSIM_WINDOW: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppMetricKind {
    Ssim,
    MissRate,
    AppAre,
}

impl AppMetricKind {
    pub fn orientation(self) -> Orientation {
        match self {
            AppMetricKind::Ssim => Orientation::HigherBetter,
            AppMetricKind::MissRate | AppMetricKind::AppAre => Orientation::LowerBetter,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AppMetricKind::Ssim => "ssim",
            AppMetricKind::MissRate => "miss_rate",
            AppMetricKind::AppAre => "app_are",
        }
    }
}

impl fmt::Display for AppMetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AppMetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [AppMetricKind::Ssim, AppMetricKind::MissRate, AppMetricKind::AppAre]
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidObjective(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    LowerBetter,
    HigherBetter,
}

impl Orientation {
    /// True when `a` is strictly better than `b`.
    pub fn better<T: Float>(self, a: T, b: T) -> bool {
        match self {
            Orientation::LowerBetter => a < b,
            Orientation::HigherBetter => a > b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppMetric<T> {
    pub kind: AppMetricKind,
    pub value: T,
}

impl<T: Float> AppMetric<T> {
    pub fn new(kind: AppMetricKind, value: T) -> Self {
        Self { kind, value }
    }

    pub fn is_better_than(&self, other: &Self) -> bool {
        self.kind.orientation().better(self.value, other.value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Correct,
    Wrong,
}

fn real<T: Float>(x: f64) -> T {
    T::from(x).expect("constant representable in the target float type")
}

/// Mean SSIM over all 8×8 windows of two equally sized 8-bit planes.
///
/// Planes smaller than the window use a single window spanning the plane.
pub fn ssim_plane<T: Float>(width: usize, height: usize, a: &[u8], b: &[u8]) -> Result<T> {
    if a.len() != width * height || b.len() != width * height {
        return Err(Error::Shape(format!(
            "planes of {} and {} pixels for a {width}x{height} image",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::EmptyInput("image"));
    }
    let c1: T = real((SSIM_K1 * SSIM_L).powi(2));
    let c2: T = real((SSIM_K2 * SSIM_L).powi(2));
    let two: T = real(2.0);
    let wx = SSIM_WINDOW.min(width);
    let wy = SSIM_WINDOW.min(height);
    let count: T = real((wx * wy) as f64);

    let mut total = T::zero();
    let mut windows = 0usize;
    for y0 in 0..=height - wy {
        for x0 in 0..=width - wx {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
            for y in y0..y0 + wy {
                let row = y * width;
                for x in x0..x0 + wx {
                    let pa: T = real(a[row + x] as f64);
                    let pb: T = real(b[row + x] as f64);
                    sa = sa + pa;
                    sb = sb + pb;
                    saa = saa + pa * pa;
                    sbb = sbb + pb * pb;
                    sab = sab + pa * pb;
                }
            }
            let ma = sa / count;
            let mb = sb / count;
            let va = saa / count - ma * ma;
            let vb = sbb / count - mb * mb;
            let cov = sab / count - ma * mb;
            let num = (two * ma * mb + c1) * (two * cov + c2);
            let den = (ma * ma + mb * mb + c1) * (va + vb + c2);
            total = total + num / den;
            windows += 1;
        }
    }
    Ok(total / real(windows as f64))
}

pub fn ssim<T: Float>(a: &GrayImage, b: &GrayImage) -> Result<T> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::Shape(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    ssim_plane(a.width, a.height, &a.pixels, &b.pixels)
}

/// Fraction of wrong outcomes.
pub fn miss_rate<T: Float>(outcomes: &[Outcome]) -> Result<T> {
    if outcomes.is_empty() {
        return Err(Error::EmptyInput("outcomes"));
    }
    let wrong = outcomes.iter().filter(|o| **o == Outcome::Wrong).count();
    Ok(real::<T>(wrong as f64) / real(outcomes.len() as f64))
}

/// Mean relative error with zero-reference counting: a zero reference
/// contributes 0 when matched exactly and 1 otherwise.
pub fn app_are<T: Float>(approx: &[T], precise: &[T]) -> Result<T> {
    if approx.len() != precise.len() {
        return Err(Error::Shape(format!(
            "{} approximate vs {} precise values",
            approx.len(),
            precise.len()
        )));
    }
    if approx.is_empty() {
        return Err(Error::EmptyInput("values"));
    }
    let sum = approx.iter().zip(precise).fold(T::zero(), |acc, (&x, &p)| {
        let term = if p == T::zero() {
            if x == T::zero() {
                T::zero()
            } else {
                T::one()
            }
        } else {
            (x - p).abs() / p.abs()
        };
        acc + term
    });
    Ok(sum / real(approx.len() as f64))
}

/// Mean relative change with respect to the no-swap baseline, signed so
/// that a positive value is an improvement under `orientation`.
pub fn gain_vs_noswap<T: Float>(values: &[T], noswap: &[T], orientation: Orientation) -> Result<T> {
    if values.len() != noswap.len() {
        return Err(Error::Shape(format!(
            "{} metric values vs {} baseline values",
            values.len(),
            noswap.len()
        )));
    }
    if values.is_empty() {
        return Err(Error::EmptyInput("gain inputs"));
    }
    let mut sum = T::zero();
    for (&m, &base) in values.iter().zip(noswap) {
        if base == T::zero() {
            return Err(Error::Domain("no-swap baseline value is zero".into()));
        }
        let rel = (m - base) / base.abs();
        sum = sum
            + match orientation {
                Orientation::LowerBetter => -rel,
                Orientation::HigherBetter => rel,
            };
    }
    Ok(sum / real(values.len() as f64))
}
