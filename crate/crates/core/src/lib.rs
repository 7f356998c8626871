//! Operand-swapping toolkit for non-commutative approximate multipliers.
//!
//! The crate is organised bottom-up:
//!
//! - [`mulmodels`]: behavioral M-bit multiplier models (exact, parametric
//!   approximate, truth-table backed) and the `AXTT` table format.
//! - [`metrics`]: component error metrics with exact integer accumulation,
//!   plus SSIM, miss rate, application ARE and average gain.
//! - [`tuner`]: single-bit swap policies, exhaustive component tuning,
//!   application tuning, the per-input orientation oracle, heatmaps and
//!   operand traces.
//! - [`widearith`]: 2n-bit multiplication assembled from n-bit parts and
//!   Q16.16 fixed point on top of it.
//! - [`apps`]: Sobel, k-means and radix-2 FFT benchmarks running on the
//!   fixed-point substrate, datasets and scoring.
//!
//! Real-valued code (metrics, float references, fixed-point conversion) is
//! generic over [`num_traits::Float`]; the aliases below pin the common
//! `f64` instantiations.

pub mod apps;
pub mod error;
pub mod metrics;
pub mod mulmodels;
pub mod tuner;
pub mod widearith;

pub use error::{Error, Result};
pub use metrics::{AppMetric, AppMetricKind, ErrorAccumulator, ErrorReport, Objective};
pub use mulmodels::{ModelKind, MultiplierModel, Multiplier, Operand, PpMask, Signedness, TruthTable};
pub use tuner::{OperandTrace, PairSource, SwapMode, SwapPolicy, TuningResult};
pub use widearith::{ApproxSet, Fx32, Part, ShiftMode, WideMulConfig};

/// Exact ratio used for MAE, MSE and EP.
pub type Rational = num_rational::Ratio<u128>;

/// Application score in double precision.
pub type Score = AppMetric<f64>;

/// Complex sample in Q16.16.
pub type FxComplex = num_complex::Complex<Fx32>;

/// Complex sample in double precision.
pub type Complex64 = num_complex::Complex<f64>;
