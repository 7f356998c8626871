use rayon::prelude::*;

use super::ErrorAccumulator;
use crate::error::{Error, Result};
use crate::mulmodels::{width_mask, Multiplier};

/// Pairs per work unit. Fixed so that float partial sums do not depend on
/// the thread count.
pub const CHUNK_PAIRS: u64 = 1 << 12;

/// Where operand pairs come from.
///
/// `Exhaustive` and `Range` enumerate the flat index space of all
/// `2^(2M)` raw pairs, index `i` being `(a, b) = (i >> M, i & (2^M - 1))`,
/// the same order truth tables use.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairSource {
    Exhaustive,
    Range { start: u64, len: u64 },
    Pairs(Vec<(u32, u32)>),
}

impl PairSource {
    pub fn len(&self, width: u32) -> u64 {
        match self {
            PairSource::Exhaustive => 1u64 << (2 * width),
            PairSource::Range { len, .. } => *len,
            PairSource::Pairs(p) => p.len() as u64,
        }
    }

    pub fn validate(&self, width: u32) -> Result<()> {
        if self.len(width) == 0 {
            return Err(Error::EmptyInput("operand pair source"));
        }
        match self {
            PairSource::Exhaustive => Ok(()),
            PairSource::Range { start, len } => {
                let total = 1u64 << (2 * width);
                if start.checked_add(*len).is_none_or(|end| end > total) {
                    return Err(Error::Range(format!(
                        "pair range {start}+{len} exceeds the {total}-pair space"
                    )));
                }
                Ok(())
            }
            PairSource::Pairs(pairs) => {
                let limit = width_mask(width) as u32;
                match pairs.iter().position(|&(a, b)| a > limit || b > limit) {
                    Some(i) => Err(Error::InvalidOperand(format!(
                        "pair {i} ({:#x}, {:#x}) does not fit {width} bits",
                        pairs[i].0, pairs[i].1
                    ))),
                    None => Ok(()),
                }
            }
        }
    }

    #[inline]
    pub fn pair(&self, width: u32, idx: u64) -> (u32, u32) {
        let flat = |i: u64| ((i >> width) as u32, (i & width_mask(width)) as u32);
        match self {
            PairSource::Exhaustive => flat(idx),
            PairSource::Range { start, .. } => flat(start + idx),
            PairSource::Pairs(p) => p[idx as usize],
        }
    }
}

pub fn chunk_count(source: &PairSource, width: u32) -> u64 {
    source.len(width).div_ceil(CHUNK_PAIRS)
}

/// Sequential accumulation of one chunk. `approx` maps a raw pair to the
/// produced output; the precise output is the model's exact product.
#[inline]
pub fn accumulate_chunk<M, F>(model: &M, source: &PairSource, chunk: u64, approx: &F) -> ErrorAccumulator
where
    M: Multiplier + ?Sized,
    F: Fn(u32, u32) -> i64,
{
    let width = model.width();
    let start = chunk * CHUNK_PAIRS;
    let end = (start + CHUNK_PAIRS).min(source.len(width));
    let mut acc = ErrorAccumulator::default();
    for idx in start..end {
        let (a, b) = source.pair(width, idx);
        acc.push(approx(a, b), model.exact_raw(a, b));
    }
    acc
}

/// Merges partials with a fixed pairwise tree over their indices.
pub fn tree_reduce(mut parts: Vec<ErrorAccumulator>) -> ErrorAccumulator {
    if parts.is_empty() {
        return ErrorAccumulator::default();
    }
    while parts.len() > 1 {
        parts = parts
            .chunks(2)
            .map(|c| {
                let mut m = c[0];
                if let Some(r) = c.get(1) {
                    m.merge(r);
                }
                m
            })
            .collect();
    }
    parts[0]
}

/// Parallel accumulation over all pairs of `source`.
pub fn accumulate<M, F>(model: &M, source: &PairSource, approx: F) -> ErrorAccumulator
where
    M: Multiplier + ?Sized,
    F: Fn(u32, u32) -> i64 + Sync,
{
    let parts: Vec<_> = (0..chunk_count(source, model.width()))
        .into_par_iter()
        .map(|c| accumulate_chunk(model, source, c, &approx))
        .collect();
    tree_reduce(parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_index_order() {
        let s = PairSource::Exhaustive;
        assert_eq!(s.pair(4, 0), (0, 0));
        assert_eq!(s.pair(4, 1), (0, 1));
        assert_eq!(s.pair(4, 16), (1, 0));
        assert_eq!(s.pair(4, 255), (15, 15));
        let r = PairSource::Range { start: 17, len: 3 };
        assert_eq!(r.pair(4, 0), (1, 1));
    }

    #[test]
    fn range_bounds() {
        assert!(PairSource::Range { start: 250, len: 6 }.validate(4).is_ok());
        assert!(PairSource::Range { start: 250, len: 7 }.validate(4).is_err());
        assert!(PairSource::Pairs(vec![(16, 0)]).validate(4).is_err());
    }

    #[test]
    fn tree_shape_is_stable() {
        let mk = |x: f64| ErrorAccumulator { n: 1, are_sum: x, ..Default::default() };
        let parts: Vec<_> = [1e16, 1.0, -1e16, 1.0, 3.0].into_iter().map(mk).collect();
        let a = tree_reduce(parts.clone());
        let b = tree_reduce(parts);
        assert_eq!(a.are_sum.to_bits(), b.are_sum.to_bits());
        assert_eq!(a.n, 5);
    }
}
