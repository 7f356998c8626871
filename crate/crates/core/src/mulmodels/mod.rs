//! Behavioral M-bit × M-bit → 2M-bit multiplier models.
//!
//! Operands travel through the hot paths as raw M-bit encodings (`u32`);
//! products come back as numeric values (`i64`). For signed models the raw
//! encoding is two's complement on M bits, and it is the raw encoding that
//! indexes truth tables and supplies swap-decision bits.

mod mask;
mod spec;
mod table;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use mask::PpMask;
pub use table::{load_truth_table, TruthTable, AXTT_HEADER_LEN, AXTT_MAGIC, AXTT_VERSION};

pub const MIN_WIDTH: u32 = 2;
pub const MAX_WIDTH: u32 = 16;
/// Largest width checked exhaustively by default in [`MultiplierModel::is_commutative`].
pub const EXHAUSTIVE_COMMUTATIVITY_MAX_WIDTH: u32 = 12;
/// Sample count and seed for the sampled commutativity check.
pub const COMMUTATIVITY_SAMPLES: u64 = 1 << 24;
pub const COMMUTATIVITY_SEED: u64 = 0x0c0_ffee;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signedness {
    Unsigned,
    Signed,
}

impl Signedness {
    pub fn suffix(self) -> char {
        match self {
            Signedness::Unsigned => 'u',
            Signedness::Signed => 's',
        }
    }

    pub(crate) fn to_byte(self) -> u8 {
        match self {
            Signedness::Unsigned => 0,
            Signedness::Signed => 1,
        }
    }
}

/// Which multiplier input a rule refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Operand {
    A,
    B,
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::A => f.write_str("A"),
            Operand::B => f.write_str("B"),
        }
    }
}

#[inline]
pub fn width_mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Numeric value of a raw `width`-bit encoding.
#[inline]
pub fn decode(raw: u64, width: u32, signedness: Signedness) -> i64 {
    let raw = raw & width_mask(width);
    match signedness {
        Signedness::Unsigned => raw as i64,
        Signedness::Signed => {
            let shift = 64 - width;
            ((raw << shift) as i64) >> shift
        }
    }
}

/// Raw `width`-bit encoding of `value`, or an error if it is not representable.
pub fn encode(value: i64, width: u32, signedness: Signedness) -> Result<u64> {
    let (lo, hi) = operand_range(width, signedness);
    if value < lo || value > hi {
        return Err(Error::InvalidOperand(format!(
            "{value} is not representable as a {width}-bit {signedness:?} operand"
        )));
    }
    Ok((value as u64) & width_mask(width))
}

/// Inclusive numeric range of a `width`-bit operand.
pub fn operand_range(width: u32, signedness: Signedness) -> (i64, i64) {
    match signedness {
        Signedness::Unsigned => (0, width_mask(width) as i64),
        Signedness::Signed => (-(1i64 << (width - 1)), (1i64 << (width - 1)) - 1),
    }
}

/// Anything that behaves like an M-bit multiplier.
///
/// Tuning and metric code is generic over this trait so wrappers (for
/// instance call counters in tests) see every stimulation.
pub trait Multiplier: Sync {
    fn width(&self) -> u32;
    fn signedness(&self) -> Signedness;

    /// Product for raw operand encodings. Bits above `width` are ignored.
    fn eval_raw(&self, a: u32, b: u32) -> i64;

    #[inline]
    fn decode_operand(&self, raw: u32) -> i64 {
        decode(raw as u64, self.width(), self.signedness())
    }

    /// True product of the decoded operands.
    #[inline]
    fn exact_raw(&self, a: u32, b: u32) -> i64 {
        self.decode_operand(a) * self.decode_operand(b)
    }
}

impl<M: Multiplier + ?Sized> Multiplier for &M {
    fn width(&self) -> u32 {
        (**self).width()
    }
    fn signedness(&self) -> Signedness {
        (**self).signedness()
    }
    #[inline]
    fn eval_raw(&self, a: u32, b: u32) -> i64 {
        (**self).eval_raw(a, b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    Exact,
    /// Clears the `k` least significant bits of the raw encoding of one operand.
    TruncateOperand { which: Operand, k: u32 },
    /// Array multiplier with masked partial products.
    DropPartialProducts(PpMask),
    TruthTable(Arc<TruthTable>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierModel {
    width: u32,
    signedness: Signedness,
    kind: ModelKind,
}

/// Outcome of a commutativity check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Commutativity {
    Commutative,
    /// Sampled check found no counterexample.
    ProbablyCommutative,
    /// Raw operand pair with `eval(a, b) != eval(b, a)`.
    NonCommutative { a: u32, b: u32 },
}

impl Commutativity {
    pub fn holds(self) -> bool {
        !matches!(self, Commutativity::NonCommutative { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    /// Exhaustive up to [`EXHAUSTIVE_COMMUTATIVITY_MAX_WIDTH`], sampled above.
    Auto,
    Exhaustive,
    Sampled,
}

impl MultiplierModel {
    pub fn new(width: u32, signedness: Signedness, kind: ModelKind) -> Result<Self> {
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&width) {
            return Err(Error::InvalidConfig(format!(
                "width {width} outside [{MIN_WIDTH}, {MAX_WIDTH}]"
            )));
        }
        match &kind {
            ModelKind::Exact => {}
            ModelKind::TruncateOperand { k, .. } => {
                if *k > width {
                    return Err(Error::InvalidConfig(format!(
                        "cannot truncate {k} bits of a {width}-bit operand"
                    )));
                }
            }
            ModelKind::DropPartialProducts(mask) => {
                if mask.width() != width {
                    return Err(Error::InvalidConfig(format!(
                        "partial-product mask is {}-bit, model is {width}-bit",
                        mask.width()
                    )));
                }
            }
            ModelKind::TruthTable(t) => {
                if t.width() != width || t.signedness() != signedness {
                    return Err(Error::InvalidConfig(format!(
                        "truth table is {}{}, model is {width}{}",
                        t.width(),
                        t.signedness().suffix(),
                        signedness.suffix()
                    )));
                }
            }
        }
        Ok(Self {
            width,
            signedness,
            kind,
        })
    }

    pub fn exact(width: u32, signedness: Signedness) -> Result<Self> {
        Self::new(width, signedness, ModelKind::Exact)
    }

    pub fn truncate(width: u32, signedness: Signedness, which: Operand, k: u32) -> Result<Self> {
        Self::new(width, signedness, ModelKind::TruncateOperand { which, k })
    }

    pub fn drop_partial_products(signedness: Signedness, mask: PpMask) -> Result<Self> {
        Self::new(mask.width(), signedness, ModelKind::DropPartialProducts(mask))
    }

    pub fn from_table(table: TruthTable) -> Self {
        Self {
            width: table.width(),
            signedness: table.signedness(),
            kind: ModelKind::TruthTable(Arc::new(table)),
        }
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.kind, ModelKind::Exact)
            || matches!(self.kind, ModelKind::TruncateOperand { k: 0, .. })
    }

    /// Checked evaluation on numeric operand values.
    pub fn evaluate(&self, a: i64, b: i64) -> Result<i64> {
        let ra = encode(a, self.width, self.signedness)?;
        let rb = encode(b, self.width, self.signedness)?;
        Ok(self.eval_raw(ra as u32, rb as u32))
    }

    pub fn is_commutative(&self) -> bool {
        self.check_commutativity(CheckMode::Auto).holds()
    }

    pub fn check_commutativity(&self, mode: CheckMode) -> Commutativity {
        let exhaustive = match mode {
            CheckMode::Exhaustive => true,
            CheckMode::Sampled => false,
            CheckMode::Auto => self.width <= EXHAUSTIVE_COMMUTATIVITY_MAX_WIDTH,
        };
        if exhaustive {
            let side = 1u32 << self.width;
            let witness = (0..side).into_par_iter().find_map_first(|a| {
                (a + 1..side)
                    .find(|&b| self.eval_raw(a, b) != self.eval_raw(b, a))
                    .map(|b| (a, b))
            });
            match witness {
                Some((a, b)) => Commutativity::NonCommutative { a, b },
                None => Commutativity::Commutative,
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(COMMUTATIVITY_SEED);
            let mask = width_mask(self.width) as u32;
            for _ in 0..COMMUTATIVITY_SAMPLES {
                let a = rng.gen::<u32>() & mask;
                let b = rng.gen::<u32>() & mask;
                if self.eval_raw(a, b) != self.eval_raw(b, a) {
                    return Commutativity::NonCommutative { a, b };
                }
            }
            Commutativity::ProbablyCommutative
        }
    }

    #[inline]
    fn eval_partial_products(&self, mask: &PpMask, a: u32, b: u32) -> i64 {
        let m = self.width;
        let mut acc = 0i64;
        match self.signedness {
            Signedness::Unsigned => {
                for row in 0..m {
                    if (b >> row) & 1 == 1 {
                        acc += ((a & mask.keep(row)) as i64) << row;
                    }
                }
            }
            Signedness::Signed => {
                // Baugh-Wooley sign handling: a partial product carries
                // negative weight iff exactly one of its indices is the sign bit.
                let top = m - 1;
                let low = (1u32 << top) - 1;
                for row in 0..m {
                    if (b >> row) & 1 == 1 {
                        let r = a & mask.keep(row);
                        let lo = ((r & low) as i64) << row;
                        let hi = (((r >> top) & 1) as i64) << (row + top);
                        if row == top {
                            acc += hi - lo;
                        } else {
                            acc += lo - hi;
                        }
                    }
                }
            }
        }
        acc
    }
}

impl Multiplier for MultiplierModel {
    fn width(&self) -> u32 {
        self.width
    }

    fn signedness(&self) -> Signedness {
        self.signedness
    }

    #[inline]
    fn eval_raw(&self, a: u32, b: u32) -> i64 {
        let mask = width_mask(self.width) as u32;
        let (a, b) = (a & mask, b & mask);
        match &self.kind {
            ModelKind::Exact => self.exact_raw(a, b),
            ModelKind::TruncateOperand { which, k } => {
                let cleared = !(width_mask(*k) as u32);
                match which {
                    Operand::A => self.exact_raw(a & cleared, b),
                    Operand::B => self.exact_raw(a, b & cleared),
                }
            }
            ModelKind::DropPartialProducts(pp) => self.eval_partial_products(pp, a, b),
            ModelKind::TruthTable(t) => t.lookup(a, b),
        }
    }
}

impl fmt::Display for MultiplierModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ty = format!("{}{}", self.width, self.signedness.suffix());
        match &self.kind {
            ModelKind::Exact => write!(f, "exact:{ty}"),
            ModelKind::TruncateOperand { which, k } => {
                let op = match which {
                    Operand::A => "trunca",
                    Operand::B => "truncb",
                };
                write!(f, "{op}:{ty}:k={k}")
            }
            ModelKind::DropPartialProducts(mask) => write!(f, "dpp:{ty}:{}", mask.describe()),
            ModelKind::TruthTable(_) => write!(f, "table:{ty}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u8model(kind: ModelKind) -> MultiplierModel {
        MultiplierModel::new(8, Signedness::Unsigned, kind).unwrap()
    }

    #[test]
    fn exact_product() {
        let m = MultiplierModel::exact(8, Signedness::Unsigned).unwrap();
        assert_eq!(m.evaluate(7, 9).unwrap(), 63);
        let s = MultiplierModel::exact(8, Signedness::Signed).unwrap();
        assert_eq!(s.evaluate(-128, -128).unwrap(), 16384);
        assert_eq!(s.evaluate(-7, 9).unwrap(), -63);
    }

    #[test]
    fn truncate_b_is_order_dependent() {
        let m = u8model(ModelKind::TruncateOperand { which: Operand::B, k: 2 });
        assert_eq!(m.evaluate(7, 9).unwrap(), 56);
        assert_eq!(m.evaluate(9, 7).unwrap(), 36);
        assert!(!m.is_commutative());
    }

    #[test]
    fn signed_truncation_floors() {
        let m = MultiplierModel::truncate(8, Signedness::Signed, Operand::B, 2).unwrap();
        // -5 = 0b1111_1011 -> 0b1111_1000 = -8
        assert_eq!(m.evaluate(3, -5).unwrap(), -24);
        assert_eq!(m.evaluate(3, 5).unwrap(), 12);
    }

    #[test]
    fn operand_out_of_range_is_rejected() {
        let m = MultiplierModel::exact(8, Signedness::Unsigned).unwrap();
        assert!(matches!(m.evaluate(256, 1), Err(Error::InvalidOperand(_))));
        assert!(matches!(m.evaluate(-1, 1), Err(Error::InvalidOperand(_))));
        let s = MultiplierModel::exact(8, Signedness::Signed).unwrap();
        assert!(matches!(s.evaluate(128, 1), Err(Error::InvalidOperand(_))));
    }

    #[test]
    fn width_guard() {
        assert!(MultiplierModel::exact(1, Signedness::Unsigned).is_err());
        assert!(MultiplierModel::exact(17, Signedness::Unsigned).is_err());
        assert!(MultiplierModel::truncate(4, Signedness::Unsigned, Operand::A, 5).is_err());
    }

    #[test]
    fn full_mask_array_is_exact() {
        for s in [Signedness::Unsigned, Signedness::Signed] {
            let m = MultiplierModel::drop_partial_products(s, PpMask::empty(6)).unwrap();
            let e = MultiplierModel::exact(6, s).unwrap();
            for a in 0..64 {
                for b in 0..64 {
                    assert_eq!(m.eval_raw(a, b), e.eval_raw(a, b), "{s:?} {a} {b}");
                }
            }
        }
    }

    #[test]
    fn symmetric_mask_is_commutative() {
        let mask = PpMask::diagonal(8, 5);
        assert!(mask.is_symmetric());
        for s in [Signedness::Unsigned, Signedness::Signed] {
            let m = MultiplierModel::drop_partial_products(s, mask.clone()).unwrap();
            assert!(m.is_commutative());
            // brute force, independent of is_commutative
            for a in 0..256u32 {
                for b in 0..256u32 {
                    assert_eq!(m.eval_raw(a, b), m.eval_raw(b, a));
                }
            }
        }
        let rect = PpMask::rect(8, 3, 1);
        let m = MultiplierModel::drop_partial_products(Signedness::Unsigned, rect).unwrap();
        assert!(!m.is_commutative());
    }

    #[test]
    fn signed_dpp_output_fits_double_width() {
        let mask = PpMask::rect(8, 7, 8);
        let m = MultiplierModel::drop_partial_products(Signedness::Signed, mask).unwrap();
        for a in 0..256u32 {
            for b in 0..256u32 {
                let v = m.eval_raw(a, b);
                assert!((-(1 << 15)..(1 << 15)).contains(&v));
            }
        }
    }

    #[test]
    fn sampled_commutativity_finds_witness() {
        let m = MultiplierModel::truncate(14, Signedness::Unsigned, Operand::B, 3).unwrap();
        match m.check_commutativity(CheckMode::Auto) {
            Commutativity::NonCommutative { a, b } => assert_ne!(m.eval_raw(a, b), m.eval_raw(b, a)),
            other => panic!("expected witness, got {other:?}"),
        }
        let e = MultiplierModel::exact(14, Signedness::Signed).unwrap();
        assert_eq!(e.check_commutativity(CheckMode::Auto), Commutativity::ProbablyCommutative);
    }

    #[test]
    fn display_round_trips_through_spec() {
        for s in ["exact:8u", "truncb:8u:k=2", "trunca:12s:k=5", "dpp:8s:diag=4", "dpp:6u:rect=3x2"] {
            let m: MultiplierModel = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
    }
}
