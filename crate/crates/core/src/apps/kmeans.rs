//! K-means colour quantisation (Lloyd iterations).
//!
//! Channels enter as `c / 255` in Q16.16 and squared distances are summed
//! from one multiplication per channel. Initialisation is farthest-point
//! on the 8-bit colours from a seeded first pick, so the fixed-point and
//! floating-point versions start from the same centres.

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::image::RgbImage;
use crate::error::{Error, Result};
use crate::tuner::SwapMode;
use crate::widearith::{Fx32, FxUnit, WideMulConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KmeansParams {
    pub k: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for KmeansParams {
    fn default() -> Self {
        Self {
            k: 5,
            iterations: 10,
            seed: 0x5eed,
        }
    }
}

impl KmeansParams {
    fn check(&self, img: &RgbImage) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!("k-means needs k >= 2, got {}", self.k)));
        }
        if self.k > img.pixel_count() {
            return Err(Error::Shape(format!(
                "{} clusters for {} pixels",
                self.k,
                img.pixel_count()
            )));
        }
        Ok(())
    }
}

fn int_dist(a: [u8; 3], b: [u8; 3]) -> u32 {
    a.iter().zip(&b).map(|(&x, &y)| (x as i32 - y as i32).pow(2) as u32).sum()
}

/// Indices of the initial centres.
fn initial_centres(img: &RgbImage, params: &KmeansParams) -> Vec<usize> {
    let n = img.pixel_count();
    let first = ChaCha8Rng::seed_from_u64(params.seed).gen_range(0..n);
    let mut chosen = vec![first];
    let mut nearest: Vec<u32> = (0..n).map(|i| int_dist(img.pixel(i), img.pixel(first))).collect();
    while chosen.len() < params.k {
        let next = argmax(&nearest);
        chosen.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = (*d).min(int_dist(img.pixel(i), img.pixel(next)));
        }
    }
    chosen
}

/// First index of the largest element.
fn argmax<T: PartialOrd + Copy>(v: &[T]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

pub fn run_kmeans(img: &RgbImage, params: &KmeansParams, cfg: &WideMulConfig, mode: SwapMode) -> Result<RgbImage> {
    let mut unit = FxUnit::new(cfg, mode)?;
    kmeans_with(&mut unit, img, params)
}

pub fn kmeans_with(unit: &mut FxUnit<'_>, img: &RgbImage, params: &KmeansParams) -> Result<RgbImage> {
    params.check(img)?;
    let n = img.pixel_count();
    let px: Vec<[Fx32; 3]> = (0..n).map(|i| img.pixel(i).map(Fx32::from_unit_u8)).collect();
    let mut centres: Vec<[Fx32; 3]> = initial_centres(img, params).into_iter().map(|i| px[i]).collect();
    let mut assign = vec![usize::MAX; n];
    let mut best_dist = vec![Fx32::ZERO; n];
    for _ in 0..params.iterations {
        let mut changed = false;
        for i in 0..n {
            let mut best = (0, Fx32::MAX);
            for (c, centre) in centres.iter().enumerate() {
                let mut d = Fx32::ZERO;
                for ch in 0..3 {
                    let diff = px[i][ch] - centre[ch];
                    d = d + unit.mul(diff, diff);
                }
                if d < best.1 {
                    best = (c, d);
                }
            }
            changed |= assign[i] != best.0;
            assign[i] = best.0;
            best_dist[i] = best.1;
        }
        let mut sums = vec![[0i64; 3]; centres.len()];
        let mut counts = vec![0i64; centres.len()];
        for i in 0..n {
            counts[assign[i]] += 1;
            for ch in 0..3 {
                sums[assign[i]][ch] += px[i][ch].raw() as i64;
            }
        }
        for c in 0..centres.len() {
            if counts[c] == 0 {
                let far = argmax(&best_dist);
                centres[c] = px[far];
                best_dist[far] = Fx32::ZERO;
                changed = true;
            } else {
                let k = counts[c];
                centres[c] = sums[c].map(|s| Fx32::from_raw((s + k / 2).div_euclid(k) as i32));
            }
        }
        if !changed {
            break;
        }
    }
    let out: Vec<[u8; 3]> = assign.iter().map(|&c| centres[c].map(Fx32::to_unit_u8)).collect();
    RgbImage::from_pixels(img.width, img.height, &out)
}

/// Same algorithm in floating point.
pub fn kmeans_reference<T: Float>(img: &RgbImage, params: &KmeansParams) -> Result<RgbImage> {
    params.check(img)?;
    let n = img.pixel_count();
    let scale = T::from(255.0).expect("representable");
    let px: Vec<[T; 3]> = (0..n)
        .map(|i| img.pixel(i).map(|c| T::from(c).expect("u8 fits") / scale))
        .collect();
    let mut centres: Vec<[T; 3]> = initial_centres(img, params).into_iter().map(|i| px[i]).collect();
    let mut assign = vec![usize::MAX; n];
    let mut best_dist = vec![T::zero(); n];
    for _ in 0..params.iterations {
        let mut changed = false;
        for i in 0..n {
            let mut best = (0, T::infinity());
            for (c, centre) in centres.iter().enumerate() {
                let d = (0..3).fold(T::zero(), |acc, ch| {
                    let diff = px[i][ch] - centre[ch];
                    acc + diff * diff
                });
                if d < best.1 {
                    best = (c, d);
                }
            }
            changed |= assign[i] != best.0;
            assign[i] = best.0;
            best_dist[i] = best.1;
        }
        let mut sums = vec![[T::zero(); 3]; centres.len()];
        let mut counts = vec![0usize; centres.len()];
        for i in 0..n {
            counts[assign[i]] += 1;
            for ch in 0..3 {
                sums[assign[i]][ch] = sums[assign[i]][ch] + px[i][ch];
            }
        }
        for c in 0..centres.len() {
            if counts[c] == 0 {
                let far = argmax(&best_dist);
                centres[c] = px[far];
                best_dist[far] = T::zero();
                changed = true;
            } else {
                let k = T::from(counts[c]).expect("count fits");
                centres[c] = sums[c].map(|s| s / k);
            }
        }
        if !changed {
            break;
        }
    }
    let out: Vec<[u8; 3]> = assign
        .iter()
        .map(|&c| {
            centres[c].map(|v| (v * scale).round().max(T::zero()).min(scale).to_u8().expect("clamped"))
        })
        .collect();
    RgbImage::from_pixels(img.width, img.height, &out)
}
