use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FRAC_BITS: u32 = 16;

/// Signed Q16.16 fixed-point value.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fx32(pub i32);

impl Fx32 {
    pub const ZERO: Fx32 = Fx32(0);
    pub const ONE: Fx32 = Fx32(1 << FRAC_BITS);
    pub const MIN: Fx32 = Fx32(i32::MIN);
    pub const MAX: Fx32 = Fx32(i32::MAX);

    pub const fn from_raw(raw: i32) -> Self {
        Fx32(raw)
    }

    pub const fn raw(self) -> i32 {
        self.0
    }

    pub const fn from_int(v: i16) -> Self {
        Fx32((v as i32) << FRAC_BITS)
    }

    /// Nearest grid point to `v`, ties to even.
    pub fn from_real<T: Float>(v: T) -> Result<Self> {
        let scale = T::from(1u32 << FRAC_BITS).unwrap();
        let s = v * scale;
        if !s.is_finite() {
            return Err(Error::Range(format!("{:?} is not finite", v.to_f64())));
        }
        let f = s.floor();
        let half = T::from(0.5).unwrap();
        let diff = s - f;
        let rounded = if diff > half {
            f + T::one()
        } else if diff < half {
            f
        } else {
            let two = T::from(2.0).unwrap();
            if (f / two).floor() * two == f {
                f
            } else {
                f + T::one()
            }
        };
        let lo = T::from(i32::MIN).unwrap();
        let hi = T::from(i32::MAX).unwrap();
        if rounded < lo || rounded > hi {
            return Err(Error::Range(format!(
                "{} outside the Q16.16 range",
                v.to_f64().unwrap_or(f64::NAN)
            )));
        }
        Ok(Fx32(rounded.to_i32().unwrap()))
    }

    /// Exact value (every Q16.16 number is representable in `f64`).
    pub fn to_real<T: Float>(self) -> T {
        T::from(self.0).unwrap() / T::from(1u32 << FRAC_BITS).unwrap()
    }

    /// `p / 255` rounded to the grid: 8-bit intensity on a unit scale.
    pub fn from_unit_u8(p: u8) -> Self {
        Fx32(((p as i64 * (1 << FRAC_BITS) * 2 + 255) / 510) as i32)
    }

    /// Inverse of [`Fx32::from_unit_u8`] with clamping to `[0, 255]`.
    pub fn to_unit_u8(self) -> u8 {
        let v = (self.0 as i64 * 255 + (1 << (FRAC_BITS - 1))) >> FRAC_BITS;
        v.clamp(0, 255) as u8
    }

    pub fn abs(self) -> Self {
        Fx32(self.0.wrapping_abs())
    }
}

impl Add for Fx32 {
    type Output = Fx32;
    fn add(self, rhs: Fx32) -> Fx32 {
        Fx32(self.0.wrapping_add(rhs.0))
    }
}

impl Sub for Fx32 {
    type Output = Fx32;
    fn sub(self, rhs: Fx32) -> Fx32 {
        Fx32(self.0.wrapping_sub(rhs.0))
    }
}

impl Neg for Fx32 {
    type Output = Fx32;
    fn neg(self) -> Fx32 {
        Fx32(self.0.wrapping_neg())
    }
}

impl fmt::Debug for Fx32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fx32({} = {:#010x})", self.to_real::<f64>(), self.0)
    }
}

impl fmt::Display for Fx32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_real::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_points() {
        assert_eq!(Fx32::from_real(0.0f64).unwrap().raw(), 0);
        assert_eq!(Fx32::from_real(1.0f64).unwrap().raw(), 65536);
        assert_eq!(Fx32::from_raw(65536).to_real::<f64>(), 1.0);
        assert_eq!(Fx32::from_real(-32768.0f64).unwrap(), Fx32::MIN);
        assert!(Fx32::from_real(32768.0f64).is_err());
        assert!(Fx32::from_real(-32768.1f64).is_err());
        assert!(Fx32::from_real(f64::NAN).is_err());
    }

    #[test]
    fn ties_to_even() {
        let half_ulp = 1.0 / 131072.0;
        assert_eq!(Fx32::from_real(half_ulp).unwrap().raw(), 0);
        assert_eq!(Fx32::from_real(3.0 * half_ulp).unwrap().raw(), 2);
        assert_eq!(Fx32::from_real(-half_ulp).unwrap().raw(), 0);
        assert_eq!(Fx32::from_real(-3.0 * half_ulp).unwrap().raw(), -2);
    }

    #[test]
    fn unit_u8_round_trip() {
        for p in 0..=255u8 {
            assert_eq!(Fx32::from_unit_u8(p).to_unit_u8(), p);
        }
        assert_eq!(Fx32::from_unit_u8(255), Fx32::ONE);
    }

    proptest! {
        #[test]
        fn quantization_bound(v in -32768.0f64..32767.99998) {
            let q = Fx32::from_real(v).unwrap();
            prop_assert!((q.to_real::<f64>() - v).abs() <= 1.0 / 131072.0);
        }

        #[test]
        fn grid_values_round_trip(raw in any::<i32>()) {
            let x = Fx32::from_raw(raw);
            prop_assert_eq!(Fx32::from_real(x.to_real::<f64>()).unwrap(), x);
        }
    }
}
