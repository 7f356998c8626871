//! Independent nested-loop reference for multiplier models and tuning.
//! Shares no code with the library beyond the model description.
#![allow(dead_code)]

use std::sync::atomic::{AtomicU64, Ordering};

use opswap::mulmodels::{Multiplier, Signedness};

/// Description of a model, evaluated here without library code.
#[derive(Clone, Debug)]
pub enum RefKind {
    Exact,
    /// Clear the `k` low bits of A (`on_a`) or B.
    Trunc { on_a: bool, k: u32 },
    /// Dropped partial products, `grid[row][col]` with row = bit of b and
    /// col = bit of a.
    Dpp([[bool; 16]; 16]),
    /// Raw 2M-bit product per `(a << M) | b`.
    Table(Vec<u32>),
}

#[derive(Clone, Debug)]
pub struct RefModel {
    pub m: u32,
    pub signed: bool,
    pub kind: RefKind,
}

pub fn ref_decode(raw: u64, bits: u32, signed: bool) -> i64 {
    let v = raw & ((1u64 << bits) - 1);
    if signed && v >> (bits - 1) == 1 {
        v as i64 - (1i64 << bits)
    } else {
        v as i64
    }
}

impl RefModel {
    pub fn val(&self, raw: u32) -> i64 {
        ref_decode(raw as u64, self.m, self.signed)
    }

    pub fn eval(&self, a: u32, b: u32) -> i64 {
        match &self.kind {
            RefKind::Exact => self.val(a) * self.val(b),
            RefKind::Trunc { on_a, k } => {
                let clear = |x: u32| (x >> k) << k;
                if *on_a {
                    self.val(clear(a)) * self.val(b)
                } else {
                    self.val(a) * self.val(clear(b))
                }
            }
            RefKind::Dpp(grid) => {
                let mut sum = 0i64;
                for row in 0..self.m {
                    for col in 0..self.m {
                        if grid[row as usize][col as usize] {
                            continue;
                        }
                        let bit = ((a >> col) & 1) as i64 * ((b >> row) & 1) as i64;
                        let top = self.m - 1;
                        let negative = self.signed && ((row == top) != (col == top));
                        let term = bit << (row + col);
                        sum += if negative { -term } else { term };
                    }
                }
                sum
            }
            RefKind::Table(entries) => {
                let idx = ((a as usize) << self.m) | b as usize;
                ref_decode(entries[idx] as u64, 2 * self.m, self.signed)
            }
        }
    }

    pub fn signedness(&self) -> Signedness {
        if self.signed {
            Signedness::Signed
        } else {
            Signedness::Unsigned
        }
    }
}

/// Plain sums for one candidate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RefSums {
    pub n: u64,
    pub sum_abs: u128,
    pub sum_sq: u128,
    pub wce: u64,
    pub errs: u64,
    pub are_sum: f64,
    pub are_n: u64,
}

impl RefSums {
    pub fn add(&mut self, approx: i64, precise: i64) {
        let e = (approx - precise).unsigned_abs();
        self.n += 1;
        self.sum_abs += e as u128;
        self.sum_sq += (e as u128).pow(2);
        self.wce = self.wce.max(e);
        if e != 0 {
            self.errs += 1;
        }
        if precise != 0 {
            self.are_sum += e as f64 / precise.unsigned_abs() as f64;
            self.are_n += 1;
        }
    }

    pub fn are(&self) -> f64 {
        if self.are_n == 0 {
            0.0
        } else {
            self.are_sum / self.are_n as f64
        }
    }
}

/// (operand is A, bit, trigger); `None` is NoSwap. Same order as the tuner.
pub type RefPolicy = Option<(bool, u32, u32)>;

pub fn ref_candidates(m: u32) -> Vec<RefPolicy> {
    let mut out = vec![None];
    for on_a in [true, false] {
        for bit in 0..m {
            for trig in 0..2 {
                out.push(Some((on_a, bit, trig)));
            }
        }
    }
    out
}

pub fn ref_apply(p: RefPolicy, a: u32, b: u32) -> (u32, u32) {
    match p {
        None => (a, b),
        Some((on_a, bit, trig)) => {
            let w = if on_a { a } else { b };
            if (w >> bit) & 1 == trig {
                (b, a)
            } else {
                (a, b)
            }
        }
    }
}

/// Every candidate over all `2^(2M)` pairs.
pub fn ref_tune(model: &RefModel) -> Vec<(RefPolicy, RefSums)> {
    let side = 1u32 << model.m;
    ref_candidates(model.m)
        .into_iter()
        .map(|p| {
            let mut s = RefSums::default();
            for a in 0..side {
                for b in 0..side {
                    let (x, y) = ref_apply(p, a, b);
                    s.add(model.eval(x, y), model.val(a) * model.val(b));
                }
            }
            (p, s)
        })
        .collect()
}

pub fn ref_oracle(model: &RefModel) -> RefSums {
    let side = 1u32 << model.m;
    let mut s = RefSums::default();
    for a in 0..side {
        for b in 0..side {
            let precise = model.val(a) * model.val(b);
            let d = model.eval(a, b);
            let w = model.eval(b, a);
            let pick = if (w - precise).abs() < (d - precise).abs() { w } else { d };
            s.add(pick, precise);
        }
    }
    s
}

/// Wraps a multiplier and counts evaluations.
pub struct CountingModel<M> {
    pub inner: M,
    pub calls: AtomicU64,
}

impl<M> CountingModel<M> {
    pub fn new(inner: M) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<M: Multiplier> Multiplier for CountingModel<M> {
    fn width(&self) -> u32 {
        self.inner.width()
    }

    fn signedness(&self) -> Signedness {
        self.inner.signedness()
    }

    fn eval_raw(&self, a: u32, b: u32) -> i64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.eval_raw(a, b)
    }
}

use opswap::mulmodels::{MultiplierModel, Operand, PpMask, TruthTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sign(signed: bool) -> Signedness {
    if signed {
        Signedness::Signed
    } else {
        Signedness::Unsigned
    }
}

/// Library model and its independent description.
pub fn truncation(m: u32, signed: bool, on_a: bool, k: u32) -> (MultiplierModel, RefModel) {
    let which = if on_a { Operand::A } else { Operand::B };
    (
        MultiplierModel::truncate(m, sign(signed), which, k).unwrap(),
        RefModel { m, signed, kind: RefKind::Trunc { on_a, k } },
    )
}

pub fn dpp(m: u32, signed: bool, dropped: Vec<(u32, u32)>) -> (MultiplierModel, RefModel) {
    let mut grid = [[false; 16]; 16];
    for &(r, c) in &dropped {
        grid[r as usize][c as usize] = true;
    }
    (
        MultiplierModel::drop_partial_products(sign(signed), PpMask::from_positions(m, dropped.iter().copied())).unwrap(),
        RefModel { m, signed, kind: RefKind::Dpp(grid) },
    )
}

/// Table built from a random DPP model, checked against the reference's
/// own evaluation of the stored entries.
pub fn table_from(model: &MultiplierModel, m: u32, signed: bool) -> (MultiplierModel, RefModel) {
    let t = TruthTable::from_model(model).unwrap();
    let entries = t.entries().to_vec();
    (MultiplierModel::from_table(t), RefModel { m, signed, kind: RefKind::Table(entries) })
}

/// Random drop set among the low-weight partial products.
pub fn random_drops(rng: &mut ChaCha8Rng, m: u32) -> Vec<(u32, u32)> {
    let mut v = Vec::new();
    for row in 0..m {
        for col in 0..m {
            if row + col < m + 1 && rng.gen_bool(0.35) {
                v.push((row, col));
            }
        }
    }
    v
}

/// `count` models with `eval(a,b) != eval(b,a)` somewhere, mixing the
/// truncation and partial-product families and both signedness modes.
pub fn random_noncommutative(m: u32, count: usize, seed: u64) -> Vec<(MultiplierModel, RefModel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let signed = rng.gen_bool(0.5);
        let pair = if rng.gen_bool(0.3) {
            truncation(m, signed, rng.gen_bool(0.5), rng.gen_range(1..m))
        } else {
            dpp(m, signed, random_drops(&mut rng, m))
        };
        if !pair.0.is_commutative() {
            out.push(pair);
        }
    }
    out
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

use opswap::metrics::{ErrorReport, Objective};
use opswap::tuner::{oracle_report, tune_component, SwapPolicy};
use opswap::PairSource;

fn same_policy(lib: Option<SwapPolicy>, r: RefPolicy) -> bool {
    match (lib, r) {
        (None, None) => true,
        (Some(p), Some((on_a, bit, trig))) => {
            (p.operand == Operand::A) == on_a && p.bit_index == bit && p.trigger_value as u32 == trig
        }
        _ => false,
    }
}

fn same_report(lib: &ErrorReport, r: &RefSums) -> Result<(), String> {
    let ints = (lib.n, lib.sum_abs_err, lib.sum_sq_err, lib.wce, lib.err_count, lib.n - lib.are_excluded);
    let refs = (r.n, r.sum_abs, r.sum_sq, r.wce, r.errs, r.are_n);
    if ints != refs {
        return Err(format!("integer sums {ints:?} != reference {refs:?}"));
    }
    if (lib.are - r.are()).abs() > 1e-12 {
        return Err(format!("ARE {} vs reference {}", lib.are, r.are()));
    }
    Ok(())
}

fn ref_value(s: &RefSums, o: Objective) -> f64 {
    match o {
        Objective::Mae => s.sum_abs as f64 / s.n as f64,
        Objective::Wce => s.wce as f64,
        Objective::Are => s.are(),
        Objective::Mse => s.sum_sq as f64 / s.n as f64,
        Objective::Ep => s.errs as f64 / s.n as f64,
    }
}

/// Runs the library tuner for every objective plus the oracle and checks
/// them against the nested-loop reference.
pub fn compare_tuning(lib: &MultiplierModel, model: &RefModel) -> Result<(), String> {
    let reference = ref_tune(model);
    for objective in Objective::ALL {
        let r = tune_component(lib, objective).map_err(|e| e.to_string())?;
        if r.table.len() != reference.len() {
            return Err(format!("{} rows, expected {}", r.table.len(), reference.len()));
        }
        for (row, (policy, sums)) in r.table.iter().zip(&reference) {
            if !same_policy(row.policy, *policy) {
                return Err(format!("candidate order differs at {:?}", row.policy));
            }
            same_report(row.report.as_ref().ok_or("row without report")?, sums)
                .map_err(|e| format!("{objective} {:?}: {e}", row.policy))?;
        }
        // first strict minimum; sums share n so integers compare directly
        let key = |s: &RefSums| -> (u128, f64) {
            match objective {
                Objective::Mae => (s.sum_abs, 0.0),
                Objective::Wce => (s.wce as u128, 0.0),
                Objective::Mse => (s.sum_sq, 0.0),
                Objective::Ep => (s.errs as u128, 0.0),
                Objective::Are => (0, s.are()),
            }
        };
        let mut best = 0;
        for i in 1..reference.len() {
            if key(&reference[i].1) < key(&reference[best].1) {
                best = i;
            }
        }
        let expect = ref_value(&reference[best].1, objective);
        if objective == Objective::Are {
            if (r.best_metric - expect).abs() > 1e-12 {
                return Err(format!("best ARE {} vs reference {expect}", r.best_metric));
            }
        } else if !same_policy(r.best_policy, reference[best].0) || r.best_metric != expect {
            return Err(format!(
                "{objective}: best {:?} = {} vs reference {:?} = {expect}",
                r.best_policy, r.best_metric, reference[best].0
            ));
        }
    }
    let oracle = oracle_report(lib, &PairSource::Exhaustive).map_err(|e| e.to_string())?;
    same_report(&oracle, &ref_oracle(model)).map_err(|e| format!("oracle: {e}"))
}
