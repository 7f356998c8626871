use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::width_mask;

/// Set of zeroed partial products in an M×M array multiplier.
///
/// Position `(row, col)` is the partial product `a[col] & b[row]` with
/// weight `2^(row + col)`.
#[derive(Clone, Debug)]
pub struct PpMask {
    width: u32,
    dropped: Vec<u32>,
    label: Option<String>,
}

impl PartialEq for PpMask {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width && self.dropped == other.dropped
    }
}

impl PpMask {
    pub fn empty(width: u32) -> Self {
        Self {
            width,
            dropped: vec![0; width as usize],
            label: None,
        }
    }

    pub fn from_positions(width: u32, positions: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut mask = Self::empty(width);
        for (row, col) in positions {
            mask.drop_product(row, col);
        }
        mask
    }

    /// Drops every partial product with `row + col < k`. Symmetric.
    pub fn diagonal(width: u32, k: u32) -> Self {
        let mut mask = Self::from_positions(
            width,
            (0..width).flat_map(|r| (0..width).map(move |c| (r, c))).filter(|&(r, c)| r + c < k),
        );
        mask.label = Some(format!("diag={k}"));
        mask
    }

    /// Drops every partial product with `row < rows && col < cols`.
    /// Non-symmetric whenever `rows != cols`.
    pub fn rect(width: u32, rows: u32, cols: u32) -> Self {
        let mut mask = Self::from_positions(
            width,
            (0..rows.min(width)).flat_map(|r| (0..cols.min(width)).map(move |c| (r, c))),
        );
        mask.label = Some(format!("rect={rows}x{cols}"));
        mask
    }

    /// Drops each of the lower-weight partial products (`row + col < width`)
    /// independently with probability `p`.
    pub fn random(width: u32, seed: u64, p: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mask = Self::empty(width);
        for r in 0..width {
            for c in 0..width {
                if r + c < width && rng.gen_bool(p) {
                    mask.drop_product(r, c);
                }
            }
        }
        mask.label = Some(format!("seed={seed},p={p}"));
        mask
    }

    pub fn drop_product(&mut self, row: u32, col: u32) {
        assert!(row < self.width && col < self.width, "partial product out of range");
        self.dropped[row as usize] |= 1 << col;
        self.label = None;
    }

    pub fn contains(&self, row: u32, col: u32) -> bool {
        (self.dropped[row as usize] >> col) & 1 == 1
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Column bits of `row` that survive.
    #[inline]
    pub fn keep(&self, row: u32) -> u32 {
        !self.dropped[row as usize] & width_mask(self.width) as u32
    }

    pub fn transpose(&self) -> Self {
        Self::from_positions(self.width, self.positions().map(|(r, c)| (c, r)))
    }

    pub fn is_symmetric(&self) -> bool {
        self.positions().all(|(r, c)| self.contains(c, r))
    }

    pub fn positions(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.width).flat_map(move |r| (0..self.width).filter(move |&c| self.contains(r, c)).map(move |c| (r, c)))
    }

    pub fn len(&self) -> usize {
        self.dropped.iter().map(|r| r.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Spec-string suffix: the constructor label when there is one,
    /// otherwise the explicit position list.
    pub fn describe(&self) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => {
                let list: Vec<String> = self.positions().map(|(r, c)| format!("{r}.{c}")).collect();
                format!("pp={}", list.join("+"))
            }
        }
    }
}
