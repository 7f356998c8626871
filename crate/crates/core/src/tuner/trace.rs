//! Operand traces and the `AXTR` file format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! 0..4    magic "AXTR"
//! 4..6    format version (u16)
//! 6       operand width M (u8)
//! 7       signedness (0 = unsigned, 1 = signed)
//! 8..16   pair count N (u64)
//! 16..    N pairs, a then b, each ceil(M/8) bytes
//! ..end   N part-label bytes: 0 = HI, 1 = MD1, 2 = MD2, 3 = LO, 255 = none
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::PairSource;
use crate::mulmodels::{width_mask, Signedness, MAX_WIDTH, MIN_WIDTH};
use crate::widearith::{ApproxSet, Part};

pub const AXTR_MAGIC: &[u8; 4] = b"AXTR";
pub const AXTR_VERSION: u16 = 1;
pub const AXTR_HEADER_LEN: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PartLabel {
    Part(Part),
    None,
}

impl PartLabel {
    pub fn to_byte(self) -> u8 {
        match self {
            PartLabel::Part(Part::Hi) => 0,
            PartLabel::Part(Part::Md1) => 1,
            PartLabel::Part(Part::Md2) => 2,
            PartLabel::Part(Part::Lo) => 3,
            PartLabel::None => 255,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0 => PartLabel::Part(Part::Hi),
            1 => PartLabel::Part(Part::Md1),
            2 => PartLabel::Part(Part::Md2),
            3 => PartLabel::Part(Part::Lo),
            255 => PartLabel::None,
            _ => return None,
        })
    }
}

/// Ordered operand pairs observed during an application run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperandTrace {
    width: u32,
    signedness: Signedness,
    pairs: Vec<(u32, u32)>,
    labels: Vec<PartLabel>,
    /// Free-form origin, e.g. `sobel/train`. Kept in memory only.
    pub source: String,
}

fn operand_size(width: u32) -> usize {
    (width as usize).div_ceil(8)
}

impl OperandTrace {
    pub fn new(width: u32, signedness: Signedness, source: impl Into<String>) -> Self {
        Self {
            width,
            signedness,
            pairs: Vec::new(),
            labels: Vec::new(),
            source: source.into(),
        }
    }

    /// Builds a trace from raw pairs, checking every operand fits.
    pub fn from_pairs(
        width: u32,
        signedness: Signedness,
        pairs: Vec<(u32, u32)>,
        labels: Vec<PartLabel>,
    ) -> Result<Self> {
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&width) {
            return Err(Error::InvalidConfig(format!("trace width {width} unsupported")));
        }
        if labels.len() != pairs.len() {
            return Err(Error::Shape(format!("{} pairs but {} labels", pairs.len(), labels.len())));
        }
        let limit = width_mask(width) as u32;
        if let Some(i) = pairs.iter().position(|&(a, b)| a > limit || b > limit) {
            return Err(Error::InvalidOperand(format!("pair {i} does not fit {width} bits")));
        }
        Ok(Self {
            width,
            signedness,
            pairs,
            labels,
            source: String::new(),
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn signedness(&self) -> Signedness {
        self.signedness
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn labels(&self) -> &[PartLabel] {
        &self.labels
    }

    #[inline]
    pub fn push(&mut self, a: u32, b: u32, label: PartLabel) {
        let m = width_mask(self.width) as u32;
        debug_assert!(a <= m && b <= m);
        self.pairs.push((a & m, b & m));
        self.labels.push(label);
    }

    pub fn extend(&mut self, other: &OperandTrace) -> Result<()> {
        if other.width != self.width || other.signedness != self.signedness {
            return Err(Error::Shape(format!(
                "cannot join {}{} trace onto {}{} trace",
                other.width,
                other.signedness.suffix(),
                self.width,
                self.signedness.suffix()
            )));
        }
        self.pairs.extend_from_slice(&other.pairs);
        self.labels.extend_from_slice(&other.labels);
        Ok(())
    }

    /// Every pair, for replay through component metrics.
    pub fn to_pair_source(&self) -> PairSource {
        PairSource::Pairs(self.pairs.clone())
    }

    /// Pairs whose part label is in `parts`.
    pub fn pairs_for(&self, parts: ApproxSet) -> PairSource {
        PairSource::Pairs(
            self.pairs
                .iter()
                .zip(&self.labels)
                .filter(|(_, l)| matches!(l, PartLabel::Part(p) if parts.contains(*p)))
                .map(|(p, _)| *p)
                .collect(),
        )
    }

    pub fn encoded_len(&self) -> usize {
        AXTR_HEADER_LEN + self.pairs.len() * (2 * operand_size(self.width) + 1)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = [0u8; AXTR_HEADER_LEN];
        header[..4].copy_from_slice(AXTR_MAGIC);
        header[4..6].copy_from_slice(&AXTR_VERSION.to_le_bytes());
        header[6] = self.width as u8;
        header[7] = self.signedness.to_byte();
        header[8..16].copy_from_slice(&(self.pairs.len() as u64).to_le_bytes());
        w.write_all(&header)?;
        let size = operand_size(self.width);
        let mut body = Vec::with_capacity(self.pairs.len() * (2 * size + 1));
        for &(a, b) in &self.pairs {
            body.extend_from_slice(&a.to_le_bytes()[..size]);
            body.extend_from_slice(&b.to_le_bytes()[..size]);
        }
        body.extend(self.labels.iter().map(|l| l.to_byte()));
        w.write_all(&body)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < AXTR_HEADER_LEN {
            return Err(Error::format(bytes.len() as u64, "truncated header"));
        }
        if &bytes[..4] != AXTR_MAGIC {
            return Err(Error::format(0, "bad magic, expected AXTR"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != AXTR_VERSION {
            return Err(Error::format(4, format!("unsupported version {version}")));
        }
        let width = bytes[6] as u32;
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&width) {
            return Err(Error::format(6, format!("unsupported width {width}")));
        }
        let signedness = match bytes[7] {
            0 => Signedness::Unsigned,
            1 => Signedness::Signed,
            other => return Err(Error::format(7, format!("bad signedness byte {other}"))),
        };
        let count = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        let size = operand_size(width);
        let body = &bytes[AXTR_HEADER_LEN..];
        let expected = count
            .checked_mul(2 * size as u64 + 1)
            .filter(|&e| e <= usize::MAX as u64)
            .ok_or_else(|| Error::format(8, format!("pair count {count} too large")))? as usize;
        if body.len() < expected {
            let whole = (body.len() / (2 * size)).min(count as usize);
            return Err(Error::format(
                (AXTR_HEADER_LEN + whole * 2 * size) as u64,
                format!("truncated trace: {} of {count} pairs and labels present", whole),
            ));
        }
        if body.len() > expected {
            return Err(Error::format(
                (AXTR_HEADER_LEN + expected) as u64,
                format!("{} trailing bytes after labels", body.len() - expected),
            ));
        }
        let limit = width_mask(width) as u32;
        let count = count as usize;
        let read = |off: usize| {
            let mut word = [0u8; 4];
            word[..size].copy_from_slice(&body[off..off + size]);
            u32::from_le_bytes(word)
        };
        let mut pairs = Vec::with_capacity(count);
        for i in 0..count {
            let off = i * 2 * size;
            let (a, b) = (read(off), read(off + size));
            if a > limit || b > limit {
                return Err(Error::format(
                    (AXTR_HEADER_LEN + off) as u64,
                    format!("pair {i} does not fit {width} bits"),
                ));
            }
            pairs.push((a, b));
        }
        let label_base = count * 2 * size;
        let mut labels = Vec::with_capacity(count);
        for (i, &byte) in body[label_base..].iter().enumerate() {
            let label = PartLabel::from_byte(byte).ok_or_else(|| {
                Error::format(
                    (AXTR_HEADER_LEN + label_base + i) as u64,
                    format!("bad part label {byte}"),
                )
            })?;
            labels.push(label);
        }
        Ok(Self {
            width,
            signedness,
            pairs,
            labels,
            source: String::new(),
        })
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> OperandTrace {
        let mut t = OperandTrace::new(12, Signedness::Signed, "test");
        t.push(0xfff, 1, PartLabel::Part(Part::Hi));
        t.push(7, 0x800, PartLabel::Part(Part::Lo));
        t.push(3, 3, PartLabel::None);
        t
    }

    #[test]
    fn round_trip() {
        let t = sample();
        let bytes = t.to_bytes();
        assert_eq!(bytes.len(), t.encoded_len());
        assert_eq!(bytes.len(), 16 + 3 * (2 * 2 + 1));
        let back = OperandTrace::from_bytes(&bytes).unwrap();
        assert_eq!(back.pairs(), t.pairs());
        assert_eq!(back.labels(), t.labels());
        assert_eq!(back.signedness(), Signedness::Signed);
    }

    #[test]
    fn corrupt_files_report_offsets() {
        let bytes = sample().to_bytes();
        let err = |b: &[u8]| match OperandTrace::from_bytes(b) {
            Err(Error::Format { offset, .. }) => offset,
            other => panic!("expected format error, got {other:?}"),
        };
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(err(&bad), 0);
        let mut bad = bytes.clone();
        bad[7] = 9;
        assert_eq!(err(&bad), 7);
        assert_eq!(err(&bytes[..bytes.len() - 1]), 16 + 3 * 4);
        let mut long = bytes.clone();
        long.push(0);
        assert_eq!(err(&long), bytes.len() as u64);
        let mut bad = bytes.clone();
        let n = bad.len();
        bad[n - 1] = 7;
        assert_eq!(err(&bad), (n - 1) as u64);
        let mut bad = bytes.clone();
        bad[17] = 0xff; // a of pair 0 becomes 0xffff, too wide for 12 bits
        assert_eq!(err(&bad), 16);
    }

    #[test]
    fn pairs_by_part() {
        let t = sample();
        assert_eq!(t.pairs_for(ApproxSet::MD_LO), PairSource::Pairs(vec![(7, 0x800)]));
        assert_eq!(t.to_pair_source().len(12), 3);
    }

    proptest! {
        #[test]
        fn arbitrary_round_trip(width in 2u32..=16, raw in prop::collection::vec((any::<u32>(), any::<u32>(), 0u8..5), 0..64)) {
            let m = width_mask(width) as u32;
            let mut t = OperandTrace::new(width, Signedness::Unsigned, "");
            for (a, b, l) in raw {
                let label = PartLabel::from_byte(if l == 4 { 255 } else { l }).unwrap();
                t.push(a & m, b & m, label);
            }
            let back = OperandTrace::from_bytes(&t.to_bytes()).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
