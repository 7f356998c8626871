//! 2n-bit signed multiplication assembled from four n-bit products.
//!
//! With `a = A_H·2^n + A_L` and `b = B_H·2^n + B_L` (high halves signed,
//! low halves unsigned):
//!
//! ```text
//! a·b = A_H·B_H·2^2n + (A_H·B_L + A_L·B_H)·2^n + A_L·B_L
//!       `---HI---'      `--MD1--'  `--MD2--'    `--LO--'
//! ```
//!
//! Each part is either exact or routed through its configured n-bit model.
//! A signed n-bit model cannot take an n-bit unsigned low half, so such an
//! operand is shifted right by one before the sub-multiplication and the
//! product shifted back (the dropped LSB is a deliberate error source).
//! In [`ShiftMode::PaperFidelity`] exact MD/LO parts are computed the same
//! way on a signed n-bit exact multiplier; [`ShiftMode::ExactFit`] computes
//! exact parts on full-width integers so the decomposition is an identity.
//!
//! The sum is reduced to 4n bits with two's-complement wraparound.

mod fx;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ErrorAccumulator;
use crate::mulmodels::{width_mask, Multiplier, MultiplierModel, Signedness};
use crate::tuner::{OperandTrace, PartLabel, SwapMode, SwapPolicy};

pub use fx::{Fx32, FRAC_BITS};

/// Half width used for Q16.16 arithmetic.
pub const FX_HALF_WIDTH: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Hi,
    Md1,
    Md2,
    Lo,
}

impl Part {
    pub const ALL: [Part; 4] = [Part::Hi, Part::Md1, Part::Md2, Part::Lo];

    fn index(self) -> usize {
        self as usize
    }

    /// Which operands of this part are unsigned low halves.
    fn low_halves(self) -> (bool, bool) {
        match self {
            Part::Hi => (false, false),
            Part::Md1 => (false, true),
            Part::Md2 => (true, false),
            Part::Lo => (true, true),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Part::Hi => "hi",
            Part::Md1 => "md1",
            Part::Md2 => "md2",
            Part::Lo => "lo",
        }
    }
}

/// Subset of parts that use their approximate model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ApproxSet(u8);

impl ApproxSet {
    pub const NONE: ApproxSet = ApproxSet(0);
    pub const ALL: ApproxSet = ApproxSet(0b1111);
    /// Middle and low products; HI stays exact.
    pub const MD_LO: ApproxSet = ApproxSet(0b1110);

    pub fn from_parts(parts: impl IntoIterator<Item = Part>) -> Self {
        ApproxSet(parts.into_iter().fold(0, |acc, p| acc | 1 << p.index()))
    }

    pub fn contains(self, part: Part) -> bool {
        self.0 >> part.index() & 1 == 1
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn parts(self) -> impl Iterator<Item = Part> {
        Part::ALL.into_iter().filter(move |p| self.contains(*p))
    }
}

impl fmt::Display for ApproxSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ApproxSet::ALL => f.write_str("all"),
            ApproxSet::MD_LO => f.write_str("mdlo"),
            ApproxSet::NONE => f.write_str("none"),
            s => {
                let names: Vec<_> = s.parts().map(Part::name).collect();
                f.write_str(&names.join(","))
            }
        }
    }
}

impl FromStr for ApproxSet {
    type Err = Error;

    /// `all`, `mdlo`, `none`, or a comma list of `hi`, `md` (both middle
    /// products), `md1`, `md2`, `lo`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => return Ok(ApproxSet::ALL),
            "mdlo" | "md_lo" | "md+lo" => return Ok(ApproxSet::MD_LO),
            "none" | "" => return Ok(ApproxSet::NONE),
            _ => {}
        }
        let mut set = ApproxSet::NONE;
        for item in s.split(',') {
            let parts: &[Part] = match item.trim().to_ascii_lowercase().as_str() {
                "hi" => &[Part::Hi],
                "md" => &[Part::Md1, Part::Md2],
                "md1" => &[Part::Md1],
                "md2" => &[Part::Md2],
                "lo" => &[Part::Lo],
                other => return Err(Error::InvalidConfig(format!("unknown part `{other}`"))),
            };
            set = ApproxSet(set.0 | ApproxSet::from_parts(parts.iter().copied()).0);
        }
        Ok(set)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftMode {
    #[default]
    PaperFidelity,
    ExactFit,
}

impl FromStr for ShiftMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper-fidelity" | "fidelity" => Ok(ShiftMode::PaperFidelity),
            "exact-fit" | "exact" => Ok(ShiftMode::ExactFit),
            other => Err(Error::InvalidConfig(format!("unknown shift mode `{other}`"))),
        }
    }
}

impl fmt::Display for ShiftMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShiftMode::PaperFidelity => "paper-fidelity",
            ShiftMode::ExactFit => "exact-fit",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WideMulConfig {
    n: u32,
    part_models: [MultiplierModel; 4],
    approx: ApproxSet,
    shift_mode: ShiftMode,
}

impl WideMulConfig {
    pub fn new(
        n: u32,
        part_models: [MultiplierModel; 4],
        approx: ApproxSet,
        shift_mode: ShiftMode,
    ) -> Result<Self> {
        if !(2..=16).contains(&n) {
            return Err(Error::InvalidConfig(format!("half width {n} outside [2, 16]")));
        }
        for part in Part::ALL {
            let m = &part_models[part.index()];
            if m.width() != n {
                return Err(Error::InvalidConfig(format!(
                    "{} model `{m}` is {}-bit, expected {n}-bit",
                    part.name(),
                    m.width()
                )));
            }
            let (xl, yl) = part.low_halves();
            if approx.contains(part) && m.signedness() == Signedness::Unsigned && !(xl && yl) {
                return Err(Error::InvalidConfig(format!(
                    "unsigned model `{m}` cannot take the signed high half in {}",
                    part.name()
                )));
            }
        }
        Ok(Self {
            n,
            part_models,
            approx,
            shift_mode,
        })
    }

    /// Same model for every part.
    pub fn uniform(model: MultiplierModel, approx: ApproxSet, shift_mode: ShiftMode) -> Result<Self> {
        let n = model.width();
        Self::new(n, std::array::from_fn(|_| model.clone()), approx, shift_mode)
    }

    /// Every part exact.
    pub fn exact(n: u32, shift_mode: ShiftMode) -> Result<Self> {
        Self::uniform(MultiplierModel::exact(n, Signedness::Signed)?, ApproxSet::NONE, shift_mode)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn approx(&self) -> ApproxSet {
        self.approx
    }

    pub fn shift_mode(&self) -> ShiftMode {
        self.shift_mode
    }

    pub fn model(&self, part: Part) -> &MultiplierModel {
        &self.part_models[part.index()]
    }

    /// True when every computed product is exact, whatever the policy.
    pub fn is_exact(&self) -> bool {
        self.approx.parts().all(|p| self.model(p).is_exact())
    }

    /// Signedness recorded in operand traces.
    pub fn trace_signedness(&self) -> Signedness {
        self.approx
            .parts()
            .next()
            .map_or(Signedness::Signed, |p| self.model(p).signedness())
    }

    pub fn check_policy(&self, policy: Option<SwapPolicy>) -> Result<()> {
        match policy {
            Some(p) => p.check_width(self.n),
            None => Ok(()),
        }
    }

    fn check_operand(&self, v: i64) -> Result<()> {
        let half = 1i64 << (2 * self.n - 1);
        if v < -half || v >= half {
            return Err(Error::InvalidConfig(format!(
                "operand {v} does not fit the {}-bit wide multiplier",
                2 * self.n
            )));
        }
        Ok(())
    }
}

impl fmt::Display for WideMulConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let models: Vec<String> = Part::ALL.iter().map(|p| self.model(*p).to_string()).collect();
        let uniform = models.iter().all(|m| *m == models[0]);
        let shown = if uniform { models[0].clone() } else { models.join("|") };
        write!(f, "n={} parts={} approx={} shift={}", self.n, shown, self.approx, self.shift_mode)
    }
}

/// Counters collected while a unit runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WideStats {
    pub wide_mults: u64,
    pub sub_mults: u64,
    /// Wide results that did not fit 4n bits and wrapped.
    pub wraps: u64,
    /// Q16.16 products clamped to the representable range.
    pub saturations: u64,
}

impl WideStats {
    pub fn merge(&mut self, other: &WideStats) {
        self.wide_mults += other.wide_mults;
        self.sub_mults += other.sub_mults;
        self.wraps += other.wraps;
        self.saturations += other.saturations;
    }
}

/// Stateful multiplier used by the benchmarks: applies the swap mode to
/// approximated parts, counts events, accumulates the sub-multiplier error
/// and optionally records every sub-multiplication.
#[derive(Debug)]
pub struct FxUnit<'c> {
    cfg: &'c WideMulConfig,
    mode: SwapMode,
    stats: WideStats,
    errors: ErrorAccumulator,
    trace: Option<OperandTrace>,
}

impl<'c> FxUnit<'c> {
    pub fn new(cfg: &'c WideMulConfig, mode: SwapMode) -> Result<Self> {
        if let SwapMode::Policy(p) = mode {
            p.check_width(cfg.n)?;
        }
        Ok(Self {
            cfg,
            mode,
            stats: WideStats::default(),
            errors: ErrorAccumulator::default(),
            trace: None,
        })
    }

    pub fn with_trace(mut self, source: impl Into<String>) -> Self {
        self.trace = Some(OperandTrace::new(self.cfg.n, self.cfg.trace_signedness(), source));
        self
    }

    pub fn config(&self) -> &WideMulConfig {
        self.cfg
    }

    pub fn stats(&self) -> WideStats {
        self.stats
    }

    /// Error of the approximated sub-multiplications against the exact
    /// product of the operands they were fed.
    pub fn sub_errors(&self) -> &ErrorAccumulator {
        &self.errors
    }

    pub fn take_trace(&mut self) -> Option<OperandTrace> {
        self.trace.take()
    }

    #[inline]
    fn part(&mut self, part: Part, x: i64, y: i64) -> i64 {
        let cfg = self.cfg;
        let n = cfg.n;
        let approximated = cfg.approx.contains(part);
        self.stats.sub_mults += 1;
        if !approximated && cfg.shift_mode == ShiftMode::ExactFit {
            if let Some(t) = self.trace.as_mut() {
                let m = width_mask(n);
                t.push((x as u64 & m) as u32, (y as u64 & m) as u32, PartLabel::Part(part));
            }
            return x * y;
        }
        let model = &cfg.part_models[part.index()];
        let signed = !approximated || model.signedness() == Signedness::Signed;
        let (xl, yl) = part.low_halves();
        let mut shift = 0;
        let fx = if xl && signed {
            shift += 1;
            x >> 1
        } else {
            x
        };
        let fy = if yl && signed {
            shift += 1;
            y >> 1
        } else {
            y
        };
        let m = width_mask(n);
        let (ra, rb) = ((fx as u64 & m) as u32, (fy as u64 & m) as u32);
        if let Some(t) = self.trace.as_mut() {
            t.push(ra, rb, PartLabel::Part(part));
        }
        let precise = fx * fy;
        let out = if approximated {
            let approx = match self.mode {
                SwapMode::NoSwap => model.eval_raw(ra, rb),
                SwapMode::Policy(p) => {
                    let (u, v) = p.apply_raw(ra, rb);
                    model.eval_raw(u, v)
                }
                SwapMode::Oracle => {
                    let direct = model.eval_raw(ra, rb);
                    let swapped = model.eval_raw(rb, ra);
                    if swapped.abs_diff(precise) < direct.abs_diff(precise) {
                        swapped
                    } else {
                        direct
                    }
                }
            };
            self.errors.push(approx, precise);
            approx
        } else {
            precise
        };
        out << shift
    }

    /// Wide product of two 2n-bit signed operands, wrapped to 4n bits.
    #[inline]
    pub fn wide(&mut self, a: i64, b: i64) -> i64 {
        let n = self.cfg.n;
        let low = width_mask(n) as i64;
        let (al, ah) = (a & low, a >> n);
        let (bl, bh) = (b & low, b >> n);
        self.stats.wide_mults += 1;
        let hi = self.part(Part::Hi, ah, bh) as i128;
        let md1 = self.part(Part::Md1, ah, bl) as i128;
        let md2 = self.part(Part::Md2, al, bh) as i128;
        let lo = self.part(Part::Lo, al, bl) as i128;
        let sum = (hi << (2 * n)) + ((md1 + md2) << n) + lo;
        let bits = 4 * n;
        let wrapped = ((sum << (128 - bits)) >> (128 - bits)) as i64;
        if wrapped as i128 != sum {
            self.stats.wraps += 1;
        }
        wrapped
    }

    /// Q16.16 product: wide product shifted right by 16 (toward −∞),
    /// saturated. Requires `n = 16`.
    #[inline]
    pub fn mul(&mut self, x: Fx32, y: Fx32) -> Fx32 {
        debug_assert_eq!(self.cfg.n, FX_HALF_WIDTH);
        let p = self.wide(x.raw() as i64, y.raw() as i64) >> FRAC_BITS;
        if p > i32::MAX as i64 {
            self.stats.saturations += 1;
            Fx32::MAX
        } else if p < i32::MIN as i64 {
            self.stats.saturations += 1;
            Fx32::MIN
        } else {
            Fx32::from_raw(p as i32)
        }
    }
}

/// One wide multiplication.
pub fn wide_multiply(cfg: &WideMulConfig, a: i64, b: i64, policy: Option<SwapPolicy>) -> Result<i64> {
    cfg.check_operand(a)?;
    cfg.check_operand(b)?;
    let mut unit = FxUnit::new(cfg, policy.into())?;
    Ok(unit.wide(a, b))
}

/// One Q16.16 multiplication on a 16-bit-half configuration.
pub fn fx_mul(cfg: &WideMulConfig, x: Fx32, y: Fx32, policy: Option<SwapPolicy>) -> Result<Fx32> {
    if cfg.n != FX_HALF_WIDTH {
        return Err(Error::InvalidConfig(format!(
            "Q16.16 needs 16-bit parts, configuration has n={}",
            cfg.n
        )));
    }
    let mut unit = FxUnit::new(cfg, policy.into())?;
    Ok(unit.mul(x, y))
}
