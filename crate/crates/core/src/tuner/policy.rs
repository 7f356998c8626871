use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mulmodels::Operand;

/// Single-bit swap rule: exchange the operands iff bit `bit_index` of the
/// raw encoding of `operand` equals `trigger_value`. The decision always
/// reads the original, unswapped pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SwapPolicy {
    pub operand: Operand,
    pub bit_index: u32,
    pub trigger_value: u8,
}

impl SwapPolicy {
    pub fn new(operand: Operand, bit_index: u32, trigger_value: u8) -> Result<Self> {
        if trigger_value > 1 {
            return Err(Error::InvalidPolicy(format!("trigger value {trigger_value} is not a bit")));
        }
        Ok(Self {
            operand,
            bit_index,
            trigger_value,
        })
    }

    pub fn check_width(&self, width: u32) -> Result<()> {
        if self.bit_index >= width {
            return Err(Error::InvalidPolicy(format!(
                "bit {} does not exist in a {width}-bit operand",
                self.bit_index
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn fires(&self, a: u32, b: u32) -> bool {
        let word = match self.operand {
            Operand::A => a,
            Operand::B => b,
        };
        ((word >> self.bit_index) & 1) as u8 == self.trigger_value
    }

    /// Unchecked application on raw encodings.
    #[inline]
    pub fn apply_raw(&self, a: u32, b: u32) -> (u32, u32) {
        if self.fires(a, b) {
            (b, a)
        } else {
            (a, b)
        }
    }

    /// All `4 * width` policies in tie-break order: operand A before B,
    /// ascending bit, trigger 0 before 1.
    pub fn enumerate(width: u32) -> impl Iterator<Item = SwapPolicy> {
        [Operand::A, Operand::B].into_iter().flat_map(move |operand| {
            (0..width).flat_map(move |bit_index| {
                (0..2u8).map(move |trigger_value| SwapPolicy {
                    operand,
                    bit_index,
                    trigger_value,
                })
            })
        })
    }
}

/// Checked policy application for `width`-bit raw operands.
pub fn apply_policy(policy: SwapPolicy, width: u32, a: u32, b: u32) -> Result<(u32, u32)> {
    policy.check_width(width)?;
    let limit = crate::mulmodels::width_mask(width) as u32;
    if a > limit || b > limit {
        return Err(Error::InvalidOperand(format!("({a:#x}, {b:#x}) does not fit {width} bits")));
    }
    Ok(policy.apply_raw(a, b))
}

/// NoSwap followed by every policy, the order used to break ties.
pub fn candidates(width: u32) -> Vec<Option<SwapPolicy>> {
    std::iter::once(None).chain(SwapPolicy::enumerate(width).map(Some)).collect()
}

impl fmt::Display for SwapPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.operand, self.bit_index, self.trigger_value)
    }
}

impl FromStr for SwapPolicy {
    type Err = Error;

    /// `B:6:0` = operand B, bit 6, swap when the bit is 0.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidPolicy(format!("`{s}` is not OPERAND:BIT:TRIGGER"));
        let mut it = s.split(':');
        let operand = match it.next().map(str::trim) {
            Some("A" | "a") => Operand::A,
            Some("B" | "b") => Operand::B,
            _ => return Err(bad()),
        };
        let bit = it.next().and_then(|v| v.trim().parse().ok()).ok_or_else(bad)?;
        let trig = it.next().and_then(|v| v.trim().parse().ok()).ok_or_else(bad)?;
        if it.next().is_some() {
            return Err(bad());
        }
        SwapPolicy::new(operand, bit, trig)
    }
}

/// How operand order is decided at each approximate multiplication.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SwapMode {
    #[default]
    NoSwap,
    Policy(SwapPolicy),
    /// Per-multiplication choice of the orientation with the smaller
    /// absolute error (ties keep the original order).
    Oracle,
}

impl From<Option<SwapPolicy>> for SwapMode {
    fn from(p: Option<SwapPolicy>) -> Self {
        match p {
            Some(p) => SwapMode::Policy(p),
            None => SwapMode::NoSwap,
        }
    }
}
