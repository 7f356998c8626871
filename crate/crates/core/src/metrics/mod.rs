//! Component-level error metrics (MAE, WCE, ARE, MSE, EP) and the
//! application-level metrics built on top of them.
//!
//! MAE, MSE and EP are accumulated as integers and only divided when a value
//! is rendered, so reports are bit-identical regardless of how the input
//! space was chunked or scheduled. ARE is a float sum; chunk partials are
//! merged with a fixed pairwise tree over chunk indices, which makes it
//! independent of the thread count as well.

mod app;
mod pairs;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mulmodels::Multiplier;
use crate::tuner::SwapPolicy;
use crate::Rational;

pub use app::{app_are, gain_vs_noswap, miss_rate, ssim, ssim_plane, AppMetric, AppMetricKind, Orientation, Outcome, SSIM_K1, SSIM_K2, SSIM_L, SSIM_WINDOW};
pub use pairs::{accumulate, accumulate_chunk, chunk_count, tree_reduce, PairSource, CHUNK_PAIRS};

/// One of the five component-level objectives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Mae,
    Wce,
    Are,
    Mse,
    Ep,
}

impl Objective {
    pub const ALL: [Objective; 5] = [Objective::Mae, Objective::Wce, Objective::Are, Objective::Mse, Objective::Ep];

    pub fn name(self) -> &'static str {
        match self {
            Objective::Mae => "mae",
            Objective::Wce => "wce",
            Objective::Are => "are",
            Objective::Mse => "mse",
            Objective::Ep => "ep",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Objective::ALL
            .into_iter()
            .find(|o| o.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidObjective(s.to_string()))
    }
}

/// Running error sums. Merge is associative on every integer field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorAccumulator {
    pub n: u64,
    pub sum_abs_err: u128,
    pub sum_sq_err: u128,
    pub wce: u64,
    pub err_count: u64,
    pub are_sum: f64,
    pub are_excluded: u64,
}

impl ErrorAccumulator {
    #[inline]
    pub fn push(&mut self, approx: i64, precise: i64) {
        let err = approx.abs_diff(precise);
        self.n += 1;
        self.sum_abs_err += err as u128;
        self.sum_sq_err += (err as u128) * (err as u128);
        self.wce = self.wce.max(err);
        self.err_count += (err != 0) as u64;
        if precise == 0 {
            self.are_excluded += 1;
        } else {
            self.are_sum += err as f64 / precise.unsigned_abs() as f64;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.sum_abs_err += other.sum_abs_err;
        self.sum_sq_err += other.sum_sq_err;
        self.wce = self.wce.max(other.wce);
        self.err_count += other.err_count;
        self.are_sum += other.are_sum;
        self.are_excluded += other.are_excluded;
    }

    pub fn finish(&self) -> ErrorReport {
        let contributing = self.n - self.are_excluded;
        ErrorReport {
            n: self.n,
            sum_abs_err: self.sum_abs_err,
            sum_sq_err: self.sum_sq_err,
            wce: self.wce,
            err_count: self.err_count,
            are: if contributing == 0 { 0.0 } else { self.are_sum / contributing as f64 },
            are_excluded: self.are_excluded,
        }
    }
}

/// The five component metrics over `n` operand pairs.
///
/// ARE averages over the `n - are_excluded` pairs whose precise product is
/// nonzero; pairs with a zero precise product are counted in `are_excluded`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "ReportJson", try_from = "ReportJson")]
pub struct ErrorReport {
    pub n: u64,
    pub sum_abs_err: u128,
    pub sum_sq_err: u128,
    pub wce: u64,
    pub err_count: u64,
    pub are: f64,
    pub are_excluded: u64,
}

#[derive(Serialize, Deserialize)]
struct ReportJson {
    mae: f64,
    wce: u64,
    are: f64,
    are_excluded: u64,
    mse: f64,
    ep: f64,
    n: u64,
    sum_abs_err: u128,
    sum_sq_err: u128,
    err_count: u64,
}

impl From<ErrorReport> for ReportJson {
    fn from(r: ErrorReport) -> Self {
        ReportJson {
            mae: r.mae(),
            wce: r.wce,
            are: r.are,
            are_excluded: r.are_excluded,
            mse: r.mse(),
            ep: r.ep(),
            n: r.n,
            sum_abs_err: r.sum_abs_err,
            sum_sq_err: r.sum_sq_err,
            err_count: r.err_count,
        }
    }
}

impl TryFrom<ReportJson> for ErrorReport {
    type Error = String;

    fn try_from(j: ReportJson) -> std::result::Result<Self, String> {
        if j.n == 0 || j.are_excluded > j.n || j.err_count > j.n {
            return Err("inconsistent error report counts".into());
        }
        Ok(ErrorReport {
            n: j.n,
            sum_abs_err: j.sum_abs_err,
            sum_sq_err: j.sum_sq_err,
            wce: j.wce,
            err_count: j.err_count,
            are: j.are,
            are_excluded: j.are_excluded,
        })
    }
}

fn to_f64(r: Rational) -> f64 {
    // u128 -> f64 rounds once per operand; fine for rendering.
    *r.numer() as f64 / *r.denom() as f64
}

impl ErrorReport {
    pub const CSV_HEADER: &'static str = "n,mae,wce,are,are_excluded,mse,ep,sum_abs_err,sum_sq_err,err_count";

    pub fn mae_ratio(&self) -> Rational {
        Ratio::new(self.sum_abs_err, self.n as u128)
    }

    pub fn mse_ratio(&self) -> Rational {
        Ratio::new(self.sum_sq_err, self.n as u128)
    }

    pub fn ep_ratio(&self) -> Rational {
        Ratio::new(self.err_count as u128, self.n as u128)
    }

    pub fn mae(&self) -> f64 {
        to_f64(self.mae_ratio())
    }

    pub fn mse(&self) -> f64 {
        to_f64(self.mse_ratio())
    }

    pub fn ep(&self) -> f64 {
        to_f64(self.ep_ratio())
    }

    pub fn value(&self, objective: Objective) -> f64 {
        match objective {
            Objective::Mae => self.mae(),
            Objective::Wce => self.wce as f64,
            Objective::Are => self.are,
            Objective::Mse => self.mse(),
            Objective::Ep => self.ep(),
        }
    }

    /// Exact ordering of two reports under `objective` (lower is better).
    pub fn cmp_by(&self, other: &Self, objective: Objective) -> Ordering {
        match objective {
            Objective::Mae => self.mae_ratio().cmp(&other.mae_ratio()),
            Objective::Wce => self.wce.cmp(&other.wce),
            Objective::Are => self.are.total_cmp(&other.are),
            Objective::Mse => self.mse_ratio().cmp(&other.mse_ratio()),
            Objective::Ep => self.ep_ratio().cmp(&other.ep_ratio()),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.err_count == 0
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{:.2},{},{:.6},{},{:.2},{:.6},{},{},{}",
            self.n,
            self.mae(),
            self.wce,
            self.are,
            self.are_excluded,
            self.mse(),
            self.ep(),
            self.sum_abs_err,
            self.sum_sq_err,
            self.err_count
        )
    }
}

/// Error metrics of `model` over `inputs`, optionally with a swap policy.
///
/// The precise output is always the product of the original pair; the
/// policy only changes which orientation is fed to the model.
pub fn component_metrics<M: Multiplier>(
    model: &M,
    policy: Option<SwapPolicy>,
    inputs: &PairSource,
) -> Result<ErrorReport> {
    if let Some(p) = policy {
        p.check_width(model.width())?;
    }
    inputs.validate(model.width())?;
    let acc = accumulate(model, inputs, |a, b| match policy {
        Some(p) => {
            let (x, y) = p.apply_raw(a, b);
            model.eval_raw(x, y)
        }
        None => model.eval_raw(a, b),
    });
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mulmodels::{MultiplierModel, Operand, Signedness};

    #[test]
    fn exact_model_has_zero_error() {
        let m = MultiplierModel::exact(8, Signedness::Unsigned).unwrap();
        let r = component_metrics(&m, None, &PairSource::Exhaustive).unwrap();
        assert_eq!(r.n, 65536);
        assert_eq!((r.sum_abs_err, r.wce, r.sum_sq_err, r.err_count), (0, 0, 0, 0));
        assert_eq!(r.are, 0.0);
        // a*b == 0 iff a == 0 or b == 0: 256 + 256 - 1 pairs
        assert_eq!(r.are_excluded, 511);
    }

    #[test]
    fn truncate_b1_two_bit_brute_force() {
        // Hand enumeration: |a*b - a*(b & !1)| = a*(b mod 2), summed over a,b in 0..4.
        let m = MultiplierModel::truncate(2, Signedness::Unsigned, Operand::B, 1).unwrap();
        let r = component_metrics(&m, None, &PairSource::Exhaustive).unwrap();
        assert_eq!(r.n, 16);
        assert_eq!(r.sum_abs_err, 12);
        assert_eq!(r.mae(), 0.75);
        assert_eq!(r.wce, 3);
        assert_eq!(r.ep_ratio(), Ratio::new(6, 16));
        // errors: a*(b mod 2) for b odd -> squares 1,4,9 twice each
        assert_eq!(r.sum_sq_err, 28);
    }

    #[test]
    fn empty_source_is_rejected() {
        let m = MultiplierModel::exact(4, Signedness::Unsigned).unwrap();
        assert!(matches!(
            component_metrics(&m, None, &PairSource::Pairs(vec![])),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            component_metrics(&m, None, &PairSource::Range { start: 0, len: 0 }),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn json_field_names() {
        let m = MultiplierModel::truncate(4, Signedness::Unsigned, Operand::B, 1).unwrap();
        let r = component_metrics(&m, None, &PairSource::Exhaustive).unwrap();
        let v = serde_json::to_value(r).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<_> = obj.keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            ["are", "are_excluded", "ep", "err_count", "mae", "mse", "n", "sum_abs_err", "sum_sq_err", "wce"]
        );
        let back: ErrorReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.to_csv_row().split(',').count(), ErrorReport::CSV_HEADER.split(',').count());
    }

    #[test]
    fn objective_parsing() {
        assert_eq!("MAE".parse::<Objective>().unwrap(), Objective::Mae);
        assert!(matches!("psnr".parse::<Objective>(), Err(Error::InvalidObjective(_))));
    }
}
