//! Benchmark inputs: a bundled image corpus plus seeded synthetic images
//! and signals, split into disjoint train and test sets.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::fft::signal_to_bytes;
use super::image::{GrayImage, RgbImage};
use crate::error::{Error, Result};
use crate::widearith::Fx32;
use crate::FxComplex;

pub const SYNTH_SIDE: usize = 64;
pub const SIGNAL_LEN: usize = 1024;
pub const SIGNALS_PER_SPLIT: usize = 4;

struct Bundled {
    name: &'static str,
    split: Split,
    gray: &'static [u8],
    rgb: &'static [u8],
}

macro_rules! bundled {
    ($split:expr, $stem:literal) => {
        Bundled {
            name: $stem,
            split: $split,
            gray: include_bytes!(concat!("../../data/", $stem, ".pgm")),
            rgb: include_bytes!(concat!("../../data/", $stem, ".ppm")),
        }
    };
}

const BUNDLED: [Bundled; 4] = [
    bundled!(Split::Train, "train_astronaut"),
    bundled!(Split::Train, "train_coffee"),
    bundled!(Split::Test, "test_chelsea"),
    bundled!(Split::Test, "test_rocket"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn stream(self) -> u64 {
        match self {
            Split::Train => 1,
            Split::Test => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::Lookup {
                kind: "dataset split",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Named<T> {
    pub name: String,
    pub item: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// `None` for the bundled-only corpus.
    pub split: Option<Split>,
    pub seed: u64,
    pub gray: Vec<Named<GrayImage>>,
    pub rgb: Vec<Named<RgbImage>>,
    pub signals: Vec<Named<Vec<FxComplex>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub split: Option<Split>,
    pub seed: u64,
    pub files: Vec<ManifestEntry>,
    /// Hash over the file list, identifying the dataset as a whole.
    pub digest: String,
}

impl Manifest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

type Images = (Vec<Named<GrayImage>>, Vec<Named<RgbImage>>);

fn load_bundled(split: Option<Split>) -> Result<Images> {
    let mut gray = Vec::new();
    let mut rgb = Vec::new();
    for b in BUNDLED.iter().filter(|b| split.is_none_or(|s| s == b.split)) {
        gray.push(Named {
            name: format!("{}.pgm", b.name),
            item: GrayImage::from_pnm(b.gray)?,
        });
        rgb.push(Named {
            name: format!("{}.ppm", b.name),
            item: RgbImage::from_pnm(b.rgb)?,
        });
    }
    Ok((gray, rgb))
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Separable 3×3 box blur used to give noise some spatial structure.
fn blur(v: &[f64], side: usize) -> Vec<f64> {
    let at = |x: isize, y: isize| {
        let cx = x.clamp(0, side as isize - 1) as usize;
        let cy = y.clamp(0, side as isize - 1) as usize;
        v[cy * side + cx]
    };
    (0..side * side)
        .map(|i| {
            let (x, y) = ((i % side) as isize, (i / side) as isize);
            let mut s = 0.0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    s += at(x + dx, y + dy);
                }
            }
            s / 9.0
        })
        .collect()
}

fn gradient(rng: &mut ChaCha8Rng) -> GrayImage {
    let n = SYNTH_SIDE;
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (lo, hi): (f64, f64) = (rng.gen_range(0.0..100.0), rng.gen_range(155.0..255.0));
    let (c, s) = (angle.cos(), angle.sin());
    let span = (n as f64) * (c.abs() + s.abs());
    let px = (0..n * n)
        .map(|i| {
            let (x, y) = ((i % n) as f64, (i / n) as f64);
            let t = ((x - n as f64 / 2.0) * c + (y - n as f64 / 2.0) * s) / span + 0.5;
            clamp_u8(lo + (hi - lo) * t + rng.gen_range(-3.0..3.0))
        })
        .collect();
    GrayImage::new(n, n, px).expect("square image")
}

fn checkerboard(rng: &mut ChaCha8Rng) -> GrayImage {
    let n = SYNTH_SIDE;
    let cell = rng.gen_range(4..13);
    let (ox, oy) = (rng.gen_range(0..cell), rng.gen_range(0..cell));
    let (a, b): (f64, f64) = (rng.gen_range(10.0..110.0), rng.gen_range(145.0..245.0));
    let px = (0..n * n)
        .map(|i| {
            let (x, y) = (i % n + ox, i / n + oy);
            let v = if (x / cell + y / cell) % 2 == 0 { a } else { b };
            clamp_u8(v + rng.gen_range(-4.0..4.0))
        })
        .collect();
    GrayImage::new(n, n, px).expect("square image")
}

fn smooth_noise(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..SYNTH_SIDE * SYNTH_SIDE).map(|_| rng.gen_range(0.0..255.0)).collect();
    blur(&blur(&raw, SYNTH_SIDE), SYNTH_SIDE)
}

fn noise(rng: &mut ChaCha8Rng) -> GrayImage {
    let v = smooth_noise(rng);
    // stretch the blurred field back over most of the range
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let px = v.iter().map(|&p| clamp_u8(128.0 + (p - mean) * 3.0)).collect();
    GrayImage::new(SYNTH_SIDE, SYNTH_SIDE, px).expect("square image")
}

/// Voronoi colour regions with per-pixel noise.
fn colour_regions(rng: &mut ChaCha8Rng) -> RgbImage {
    let n = SYNTH_SIDE;
    let sites: Vec<(f64, f64, [f64; 3])> = (0..rng.gen_range(5..9))
        .map(|_| {
            (
                rng.gen_range(0.0..n as f64),
                rng.gen_range(0.0..n as f64),
                [rng.gen_range(0.0..255.0), rng.gen_range(0.0..255.0), rng.gen_range(0.0..255.0)],
            )
        })
        .collect();
    let mut px = Vec::with_capacity(3 * n * n);
    for i in 0..n * n {
        let (x, y) = ((i % n) as f64, (i / n) as f64);
        let site = sites
            .iter()
            .min_by(|a, b| {
                let da = (a.0 - x).powi(2) + (a.1 - y).powi(2);
                let db = (b.0 - x).powi(2) + (b.1 - y).powi(2);
                da.total_cmp(&db)
            })
            .expect("at least one site");
        for c in site.2 {
            px.push(clamp_u8(c + rng.gen_range(-12.0..12.0)));
        }
    }
    RgbImage::new(n, n, px).expect("square image")
}

/// Sum of complex tones at non-integer bin frequencies plus noise, scaled
/// so every component lies in [-1, 1].
fn multitone(rng: &mut ChaCha8Rng) -> Vec<FxComplex> {
    let n = SIGNAL_LEN;
    let tones: Vec<(f64, f64, f64)> = (0..rng.gen_range(3..6))
        .map(|_| {
            (
                rng.gen_range(1.0..(n / 2) as f64) + rng.gen_range(0.1..0.9),
                rng.gen_range(0.2..1.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let raw: Vec<Complex<f64>> = (0..n)
        .map(|t| {
            let mut v = Complex::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
            for &(f, amp, phase) in &tones {
                let angle = std::f64::consts::TAU * f * t as f64 / n as f64 + phase;
                v += Complex::from_polar(amp, angle);
            }
            v
        })
        .collect();
    let peak = raw.iter().map(|c| c.re.abs().max(c.im.abs())).fold(0.0, f64::max);
    raw.iter()
        .map(|c| {
            let q = |v: f64| Fx32::from_real(v / peak).expect("unit range fits Q16.16");
            Complex::new(q(c.re), q(c.im))
        })
        .collect()
}

impl Dataset {
    /// Bundled images of `split` plus seeded synthetic content. Train and
    /// test draw from different bundled files and different RNG streams.
    pub fn generate(split: Split, seed: u64) -> Result<Self> {
        let (mut gray, mut rgb) = load_bundled(Some(split))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(split.stream());
        let tag = |kind: &str, i: usize, ext: &str| format!("{split}_{kind}_{seed}_{i}.{ext}");
        gray.push(Named { name: tag("gradient", 0, "pgm"), item: gradient(&mut rng) });
        gray.push(Named { name: tag("checker", 0, "pgm"), item: checkerboard(&mut rng) });
        gray.push(Named { name: tag("noise", 0, "pgm"), item: noise(&mut rng) });
        for i in 0..2 {
            rgb.push(Named { name: tag("regions", i, "ppm"), item: colour_regions(&mut rng) });
        }
        let signals = (0..SIGNALS_PER_SPLIT)
            .map(|i| Named { name: tag("tones", i, "sig"), item: multitone(&mut rng) })
            .collect();
        Ok(Self {
            split: Some(split),
            seed,
            gray,
            rgb,
            signals,
        })
    }

    /// The bundled corpus alone (both splits), with test signals from `seed`.
    pub fn bundled(seed: u64) -> Result<Self> {
        let (gray, rgb) = load_bundled(None)?;
        let signals = Self::generate(Split::Test, seed)?.signals;
        Ok(Self {
            split: None,
            seed,
            gray,
            rgb,
            signals,
        })
    }

    /// Every item serialised as it would be written to disk.
    pub fn files(&self) -> Vec<(String, Vec<u8>)> {
        let mut out = Vec::new();
        out.extend(self.gray.iter().map(|g| (g.name.clone(), g.item.to_pgm())));
        out.extend(self.rgb.iter().map(|c| (c.name.clone(), c.item.to_ppm())));
        out.extend(self.signals.iter().map(|s| (s.name.clone(), signal_to_bytes(&s.item))));
        out
    }

    pub fn manifest(&self) -> Manifest {
        let files: Vec<ManifestEntry> = self
            .files()
            .into_iter()
            .map(|(file, bytes)| ManifestEntry {
                sha256: sha256_hex(&bytes),
                file,
            })
            .collect();
        let listing: String = files.iter().map(|e| format!("{} {}\n", e.sha256, e.file)).collect();
        Manifest {
            split: self.split,
            seed: self.seed,
            digest: sha256_hex(listing.as_bytes()),
            files,
        }
    }

    /// Writes every item plus `manifest.json` into `dir`.
    pub fn export(&self, dir: impl AsRef<Path>) -> Result<Manifest> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for (name, bytes) in self.files() {
            fs::write(dir.join(name), bytes)?;
        }
        let manifest = self.manifest();
        fs::write(dir.join("manifest.json"), manifest.to_json()?)?;
        Ok(manifest)
    }
}

/// Checks the files in `dir` against the manifest stored next to them.
pub fn verify_export(dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    let manifest = Manifest::from_json(&fs::read_to_string(dir.join("manifest.json"))?)?;
    for entry in &manifest.files {
        let got = sha256_hex(&fs::read(dir.join(&entry.file))?);
        if got != entry.sha256 {
            return Err(Error::format(0, format!("{} hash mismatch", entry.file)));
        }
    }
    Ok(manifest)
}
