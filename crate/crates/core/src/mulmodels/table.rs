//! Dense truth tables and the `AXTT` file format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! 0..4   magic "AXTT"
//! 4..6   format version (u16)
//! 6      operand width M (u8)
//! 7      signedness (0 = unsigned, 1 = signed two's complement)
//! 8..16  reserved, zero
//! 16..   2^(2M) entries of ceil(2M/8) bytes, index (a_raw << M) | b_raw,
//!        each the raw 2M-bit encoding of the product
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::{decode, width_mask, ModelKind, Multiplier, MultiplierModel, Signedness, MAX_WIDTH, MIN_WIDTH};
use crate::error::{Error, Result};

pub const AXTT_MAGIC: &[u8; 4] = b"AXTT";
pub const AXTT_VERSION: u16 = 1;
pub const AXTT_HEADER_LEN: usize = 16;
/// Largest width a table may be generated from a model for.
pub const DUMP_MAX_WIDTH: u32 = 12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthTable {
    width: u32,
    signedness: Signedness,
    entries: Vec<u32>,
}

/// Bytes per stored entry for operand width `width`.
pub fn entry_size(width: u32) -> usize {
    (2 * width as usize).div_ceil(8)
}

impl TruthTable {
    pub fn new(width: u32, signedness: Signedness, entries: Vec<u32>) -> Result<Self> {
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&width) {
            return Err(Error::InvalidConfig(format!("table width {width} unsupported")));
        }
        let expected = 1usize << (2 * width);
        if entries.len() != expected {
            return Err(Error::Shape(format!(
                "truth table needs {expected} entries, got {}",
                entries.len()
            )));
        }
        let limit = width_mask(2 * width);
        if let Some(i) = entries.iter().position(|&e| e as u64 > limit) {
            return Err(Error::Range(format!("entry {i} does not fit in {} bits", 2 * width)));
        }
        Ok(Self {
            width,
            signedness,
            entries,
        })
    }

    /// Tabulates any multiplier. Capped at [`DUMP_MAX_WIDTH`].
    pub fn from_model(model: &impl Multiplier) -> Result<Self> {
        let width = model.width();
        if width > DUMP_MAX_WIDTH {
            return Err(Error::Capacity(format!(
                "refusing to tabulate a {width}-bit model (limit {DUMP_MAX_WIDTH})"
            )));
        }
        let out_mask = width_mask(2 * width);
        let entries = (0..1u64 << (2 * width))
            .into_par_iter()
            .map(|i| {
                let a = (i >> width) as u32;
                let b = (i & width_mask(width)) as u32;
                (model.eval_raw(a, b) as u64 & out_mask) as u32
            })
            .collect();
        Ok(Self {
            width,
            signedness: model.signedness(),
            entries,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn signedness(&self) -> Signedness {
        self.signedness
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    #[inline]
    pub fn lookup(&self, a: u32, b: u32) -> i64 {
        let raw = self.entries[((a as usize) << self.width) | b as usize];
        decode(raw as u64, 2 * self.width, self.signedness)
    }

    pub fn encoded_len(&self) -> usize {
        AXTT_HEADER_LEN + self.entries.len() * entry_size(self.width)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut header = [0u8; AXTT_HEADER_LEN];
        header[..4].copy_from_slice(AXTT_MAGIC);
        header[4..6].copy_from_slice(&AXTT_VERSION.to_le_bytes());
        header[6] = self.width as u8;
        header[7] = self.signedness.to_byte();
        w.write_all(&header)?;
        let size = entry_size(self.width);
        let mut buf = Vec::with_capacity(1 << 16);
        for e in &self.entries {
            buf.extend_from_slice(&e.to_le_bytes()[..size]);
            if buf.len() >= 1 << 16 {
                w.write_all(&buf)?;
                buf.clear();
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Parses an `AXTT` image, trusting the width and signedness in its header.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < AXTT_HEADER_LEN {
            return Err(Error::format(bytes.len() as u64, "truncated header"));
        }
        if &bytes[..4] != AXTT_MAGIC {
            return Err(Error::format(0, "bad magic, expected AXTT"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != AXTT_VERSION {
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
        let size = entry_size(width);
        let count = 1usize << (2 * width);
        let body = &bytes[AXTT_HEADER_LEN..];
        let expected = count * size;
        if body.len() < expected {
            let whole = body.len() / size;
            return Err(Error::format(
                (AXTT_HEADER_LEN + whole * size) as u64,
                format!("truncated table: {whole} of {count} entries present"),
            ));
        }
        if body.len() > expected {
            return Err(Error::format(
                (AXTT_HEADER_LEN + expected) as u64,
                format!("{} trailing bytes after last entry", body.len() - expected),
            ));
        }
        let limit = width_mask(2 * width);
        let mut entries = Vec::with_capacity(count);
        for (i, chunk) in body.chunks_exact(size).enumerate() {
            let mut word = [0u8; 4];
            word[..size].copy_from_slice(chunk);
            let v = u32::from_le_bytes(word);
            if v as u64 > limit {
                return Err(Error::format(
                    (AXTT_HEADER_LEN + i * size) as u64,
                    format!("entry {i} = {v:#x} exceeds {} bits", 2 * width),
                ));
            }
            entries.push(v);
        }
        Ok(Self {
            width,
            signedness,
            entries,
        })
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// Loads a table file and checks it against the declared operand type.
pub fn load_truth_table(
    path: impl AsRef<Path>,
    width: u32,
    signedness: Signedness,
) -> Result<MultiplierModel> {
    let bytes = fs::read(path)?;
    if bytes.len() >= AXTT_HEADER_LEN && &bytes[..4] == AXTT_MAGIC {
        if bytes[6] as u32 != width {
            return Err(Error::format(
                6,
                format!("file declares width {}, expected {width}", bytes[6]),
            ));
        }
        if bytes[7] != signedness.to_byte() {
            return Err(Error::format(7, format!("file signedness does not match {signedness:?}")));
        }
    }
    let table = TruthTable::from_bytes(&bytes)?;
    MultiplierModel::new(width, signedness, ModelKind::TruthTable(table.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mulmodels::Operand;

    #[test]
    fn entry_sizes() {
        assert_eq!(entry_size(2), 1);
        assert_eq!(entry_size(4), 1);
        assert_eq!(entry_size(5), 2);
        assert_eq!(entry_size(8), 2);
        assert_eq!(entry_size(12), 3);
        assert_eq!(entry_size(16), 4);
    }

    #[test]
    fn exact_4u_layout() {
        let m = MultiplierModel::exact(4, Signedness::Unsigned).unwrap();
        let t = TruthTable::from_model(&m).unwrap();
        let bytes = t.to_bytes();
        assert_eq!(bytes.len(), 16 + 256);
        assert_eq!(&bytes[..4], b"AXTT");
        for a in 0..16usize {
            for b in 0..16usize {
                assert_eq!(bytes[16 + (a << 4 | b)] as usize, a * b);
            }
        }
    }

    #[test]
    fn signed_entries_are_raw_encodings() {
        let m = MultiplierModel::exact(4, Signedness::Signed).unwrap();
        let t = TruthTable::from_model(&m).unwrap();
        // -1 * 3 = -3 -> 0xFD in 8 bits
        assert_eq!(t.entries()[(0xF << 4) | 3], 0xFD);
        assert_eq!(t.lookup(0xF, 3), -3);
    }

    #[test]
    fn short_file_reports_offset() {
        let m = MultiplierModel::exact(8, Signedness::Unsigned).unwrap();
        let mut bytes = TruthTable::from_model(&m).unwrap().to_bytes();
        bytes.truncate(bytes.len() - 2);
        match TruthTable::from_bytes(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 16 + 65535 * 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn out_of_range_entry() {
        let m = MultiplierModel::exact(5, Signedness::Unsigned).unwrap();
        let mut bytes = TruthTable::from_model(&m).unwrap().to_bytes();
        // entry 3 lives at 16 + 3*2, high byte -> value >= 2^10
        bytes[16 + 3 * 2 + 1] = 0x04;
        match TruthTable::from_bytes(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 22),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_header_fields() {
        let m = MultiplierModel::exact(2, Signedness::Unsigned).unwrap();
        let good = TruthTable::from_model(&m).unwrap().to_bytes();
        let mut b = good.clone();
        b[0] = b'X';
        assert!(matches!(TruthTable::from_bytes(&b), Err(Error::Format { offset: 0, .. })));
        let mut b = good.clone();
        b[4] = 9;
        assert!(matches!(TruthTable::from_bytes(&b), Err(Error::Format { offset: 4, .. })));
        let mut b = good.clone();
        b[7] = 3;
        assert!(matches!(TruthTable::from_bytes(&b), Err(Error::Format { offset: 7, .. })));
        let mut b = good;
        b.push(0);
        assert!(matches!(TruthTable::from_bytes(&b), Err(Error::Format { offset: 32, .. })));
    }

    #[test]
    fn dump_capacity_guard() {
        let m = MultiplierModel::exact(13, Signedness::Unsigned).unwrap();
        assert!(matches!(TruthTable::from_model(&m), Err(Error::Capacity(_))));
    }

    #[test]
    fn declared_width_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.axtt");
        let m = MultiplierModel::truncate(6, Signedness::Unsigned, Operand::B, 2).unwrap();
        TruthTable::from_model(&m).unwrap().save(&path).unwrap();
        assert!(matches!(
            load_truth_table(&path, 8, Signedness::Unsigned),
            Err(Error::Format { offset: 6, .. })
        ));
        assert!(matches!(
            load_truth_table(&path, 6, Signedness::Signed),
            Err(Error::Format { offset: 7, .. })
        ));
        let loaded = load_truth_table(&path, 6, Signedness::Unsigned).unwrap();
        for a in 0..64 {
            for b in 0..64 {
                assert_eq!(loaded.eval_raw(a, b), m.eval_raw(a, b));
            }
        }
    }
}
