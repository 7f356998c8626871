//! Application benchmarks on the fixed-point substrate.
//!
//! A [`Workload`] binds a benchmark to a dataset and caches the
//! floating-point reference outputs, so repeated runs under different
//! swap modes (as in application tuning) only redo the fixed-point side.

mod dataset;
mod fft;
mod image;
mod kmeans;
mod sobel;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{app_are, ssim, AppMetricKind, ErrorAccumulator, ErrorReport};
use crate::tuner::{OperandTrace, SwapMode};
use crate::widearith::{FxUnit, WideMulConfig, WideStats};
use crate::{Complex64, Score};

pub use dataset::{verify_export, Dataset, Manifest, ManifestEntry, Named, Split, SIGNALS_PER_SPLIT, SIGNAL_LEN, SYNTH_SIDE};
pub use fft::{
    fft_reference, fft_with, fx_to_complex, fx_twiddles, read_signal, run_fft, save_signal, signal_from_bytes,
    signal_to_bytes, SIGNAL_HEADER_LEN, SIGNAL_MAGIC, SIGNAL_VERSION,
};
pub use image::{GrayImage, RgbImage};
pub use kmeans::{kmeans_reference, kmeans_with, run_kmeans, KmeansParams};
pub use sobel::{run_sobel, sobel_reference, sobel_with, MULS_PER_PIXEL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Sobel,
    Kmeans,
    Fft,
}

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [Benchmark::Sobel, Benchmark::Kmeans, Benchmark::Fft];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Sobel => "sobel",
            Benchmark::Kmeans => "kmeans",
            Benchmark::Fft => "fft",
        }
    }

    /// Quality metric the benchmark is scored with.
    pub fn metric(self) -> AppMetricKind {
        match self {
            Benchmark::Sobel | Benchmark::Kmeans => AppMetricKind::Ssim,
            Benchmark::Fft => AppMetricKind::AppAre,
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Lookup {
                kind: "benchmark",
                name: s.to_string(),
            })
    }
}

/// Per-item outputs of one benchmark over a dataset.
#[derive(Clone, Debug, PartialEq)]
pub enum BenchOutput {
    Gray(Vec<GrayImage>),
    Rgb(Vec<RgbImage>),
    Spectra(Vec<Vec<Complex64>>),
}

impl BenchOutput {
    pub fn len(&self) -> usize {
        match self {
            BenchOutput::Gray(v) => v.len(),
            BenchOutput::Rgb(v) => v.len(),
            BenchOutput::Spectra(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Mean SSIM of the three colour planes.
pub fn rgb_ssim(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    let mut total = 0.0;
    for c in 0..3 {
        total += ssim::<f64>(&a.channel(c), &b.channel(c))?;
    }
    Ok(total / 3.0)
}

/// Scores `outputs` against the floating-point `reference`: mean SSIM over
/// images, or ARE over every real and imaginary spectrum component.
pub fn score_run(outputs: &BenchOutput, reference: &BenchOutput) -> Result<Score> {
    if outputs.len() != reference.len() {
        return Err(Error::Shape(format!(
            "{} outputs against {} references",
            outputs.len(),
            reference.len()
        )));
    }
    if outputs.is_empty() {
        return Err(Error::EmptyInput("benchmark outputs"));
    }
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    match (outputs, reference) {
        (BenchOutput::Gray(a), BenchOutput::Gray(b)) => {
            let s = a.iter().zip(b).map(|(x, y)| ssim::<f64>(x, y)).collect::<Result<Vec<_>>>()?;
            Ok(Score::new(AppMetricKind::Ssim, mean(s)))
        }
        (BenchOutput::Rgb(a), BenchOutput::Rgb(b)) => {
            let s = a.iter().zip(b).map(|(x, y)| rgb_ssim(x, y)).collect::<Result<Vec<_>>>()?;
            Ok(Score::new(AppMetricKind::Ssim, mean(s)))
        }
        (BenchOutput::Spectra(a), BenchOutput::Spectra(b)) => {
            let mut approx = Vec::new();
            let mut precise = Vec::new();
            for (x, y) in a.iter().zip(b) {
                if x.len() != y.len() {
                    return Err(Error::Shape(format!("spectrum of {} bins vs {}", x.len(), y.len())));
                }
                approx.extend(x.iter().flat_map(|c| [c.re, c.im]));
                precise.extend(y.iter().flat_map(|c| [c.re, c.im]));
            }
            Ok(Score::new(AppMetricKind::AppAre, app_are(&approx, &precise)?))
        }
        _ => Err(Error::Shape("output and reference are of different kinds".into())),
    }
}

/// One benchmark execution over a dataset.
#[derive(Clone, Debug)]
pub struct BenchmarkRun {
    pub benchmark: Benchmark,
    pub cfg: WideMulConfig,
    pub mode: SwapMode,
    /// Manifest digest of the dataset the run consumed.
    pub dataset: String,
    pub outputs: BenchOutput,
    pub score: Score,
    pub stats: WideStats,
    /// Error of the approximated sub-multiplications, if there were any.
    pub sub_errors: Option<ErrorReport>,
}

/// A benchmark bound to a dataset with cached reference outputs.
#[derive(Clone, Debug)]
pub struct Workload<'d> {
    benchmark: Benchmark,
    dataset: &'d Dataset,
    params: KmeansParams,
    reference: BenchOutput,
    digest: String,
}

struct ItemRun<T> {
    output: T,
    stats: WideStats,
    errors: ErrorAccumulator,
    trace: Option<OperandTrace>,
}

impl<'d> Workload<'d> {
    pub fn new(benchmark: Benchmark, dataset: &'d Dataset) -> Result<Self> {
        Self::with_params(benchmark, dataset, KmeansParams::default())
    }

    pub fn with_params(benchmark: Benchmark, dataset: &'d Dataset, params: KmeansParams) -> Result<Self> {
        let reference = match benchmark {
            Benchmark::Sobel => BenchOutput::Gray(
                dataset.gray.par_iter().map(|g| sobel_reference::<f64>(&g.item)).collect::<Result<_>>()?,
            ),
            Benchmark::Kmeans => BenchOutput::Rgb(
                dataset
                    .rgb
                    .par_iter()
                    .map(|c| kmeans_reference::<f64>(&c.item, &params))
                    .collect::<Result<_>>()?,
            ),
            Benchmark::Fft => BenchOutput::Spectra(
                dataset
                    .signals
                    .par_iter()
                    .map(|s| fft_reference(&fx_to_complex::<f64>(&s.item)))
                    .collect::<Result<_>>()?,
            ),
        };
        if reference.is_empty() {
            return Err(Error::EmptyInput("dataset has no items for this benchmark"));
        }
        Ok(Self {
            benchmark,
            dataset,
            params,
            reference,
            digest: dataset.manifest().digest,
        })
    }

    pub fn benchmark(&self) -> Benchmark {
        self.benchmark
    }

    pub fn reference(&self) -> &BenchOutput {
        &self.reference
    }

    fn run_items<T, I, F>(&self, items: &[I], cfg: &WideMulConfig, mode: SwapMode, trace: bool, f: F) -> Result<Vec<ItemRun<T>>>
    where
        T: Send,
        I: Sync,
        F: Fn(&mut FxUnit<'_>, &I) -> Result<T> + Sync,
    {
        let one = |item: &I| -> Result<ItemRun<T>> {
            let mut unit = FxUnit::new(cfg, mode)?;
            if trace {
                unit = unit.with_trace(self.benchmark.name());
            }
            let output = f(&mut unit, item)?;
            Ok(ItemRun {
                output,
                stats: unit.stats(),
                errors: *unit.sub_errors(),
                trace: unit.take_trace(),
            })
        };
        if trace {
            items.iter().map(one).collect()
        } else {
            items.par_iter().map(one).collect()
        }
    }

    fn execute(&self, cfg: &WideMulConfig, mode: SwapMode, trace: bool) -> Result<(BenchOutput, Vec<ItemRun<()>>)> {
        fn split<T>(runs: Vec<ItemRun<T>>) -> (Vec<T>, Vec<ItemRun<()>>) {
            runs.into_iter()
                .map(|r| {
                    let rest = ItemRun {
                        output: (),
                        stats: r.stats,
                        errors: r.errors,
                        trace: r.trace,
                    };
                    (r.output, rest)
                })
                .unzip()
        }
        let d = self.dataset;
        Ok(match self.benchmark {
            Benchmark::Sobel => {
                let (out, rest) = split(self.run_items(&d.gray, cfg, mode, trace, |u, g| sobel_with(u, &g.item))?);
                (BenchOutput::Gray(out), rest)
            }
            Benchmark::Kmeans => {
                let runs = self.run_items(&d.rgb, cfg, mode, trace, |u, c| kmeans_with(u, &c.item, &self.params))?;
                let (out, rest) = split(runs);
                (BenchOutput::Rgb(out), rest)
            }
            Benchmark::Fft => {
                let runs = self.run_items(&d.signals, cfg, mode, trace, |u, s| {
                    Ok(fx_to_complex::<f64>(&fft_with(u, &s.item)?))
                })?;
                let (out, rest) = split(runs);
                (BenchOutput::Spectra(out), rest)
            }
        })
    }

    pub fn run(&self, cfg: &WideMulConfig, mode: SwapMode) -> Result<BenchmarkRun> {
        let (outputs, items) = self.execute(cfg, mode, false)?;
        let mut stats = WideStats::default();
        let mut errors = ErrorAccumulator::default();
        for item in &items {
            stats.merge(&item.stats);
            errors.merge(&item.errors);
        }
        let score = score_run(&outputs, &self.reference)?;
        Ok(BenchmarkRun {
            benchmark: self.benchmark,
            cfg: cfg.clone(),
            mode,
            dataset: self.digest.clone(),
            outputs,
            score,
            stats,
            sub_errors: (errors.n > 0).then(|| errors.finish()),
        })
    }

    /// Every sub-multiplication of a run, in execution order, items in
    /// dataset order.
    pub fn trace(&self, cfg: &WideMulConfig, mode: SwapMode) -> Result<OperandTrace> {
        let (_, items) = self.execute(cfg, mode, true)?;
        let mut trace = OperandTrace::new(cfg.n(), cfg.trace_signedness(), self.benchmark.name());
        for item in &items {
            trace.extend(item.trace.as_ref().expect("tracing was enabled"))?;
        }
        Ok(trace)
    }
}
