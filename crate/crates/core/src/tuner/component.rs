use rayon::prelude::*;

use super::{candidates, select_best, CandidateRow, ObjectiveId, SwapMode, SwapPolicy, TuningResult};
use crate::apps::GrayImage;
use crate::error::{Error, Result};
use crate::metrics::{accumulate, accumulate_chunk, chunk_count, tree_reduce, ErrorReport, Objective, PairSource};
use crate::mulmodels::Multiplier;

pub const HEATMAP_MAX_WIDTH: u32 = 10;

/// Exhaustive component tuning over all `2^(2M)` input pairs.
///
/// Every policy plus NoSwap is evaluated on every pair, i.e.
/// `(4M + 1) * 2^(2M)` multiplier evaluations.
pub fn tune_component<M: Multiplier>(model: &M, objective: Objective) -> Result<TuningResult> {
    tune_component_over(model, objective, &PairSource::Exhaustive)
}

/// Component tuning restricted to an arbitrary pair source.
pub fn tune_component_over<M: Multiplier>(
    model: &M,
    objective: Objective,
    inputs: &PairSource,
) -> Result<TuningResult> {
    let (cands, reports) = candidate_reports(model, inputs)?;
    Ok(select(model.width(), objective, &cands, &reports))
}

/// One sweep over `inputs`, one result per objective. Candidate reports do
/// not depend on the objective, so this costs the same as a single
/// [`tune_component_over`] call.
pub fn tune_component_objectives<M: Multiplier>(
    model: &M,
    objectives: &[Objective],
    inputs: &PairSource,
) -> Result<Vec<TuningResult>> {
    let (cands, reports) = candidate_reports(model, inputs)?;
    Ok(objectives
        .iter()
        .map(|&o| select(model.width(), o, &cands, &reports))
        .collect())
}

fn candidate_reports<M: Multiplier>(
    model: &M,
    inputs: &PairSource,
) -> Result<(Vec<Option<SwapPolicy>>, Vec<ErrorReport>)> {
    let width = model.width();
    inputs.validate(width)?;
    let cands = candidates(width);
    let chunks = chunk_count(inputs, width) as usize;
    let partials: Vec<_> = (0..cands.len() * chunks)
        .into_par_iter()
        .map(|task| {
            let chunk = (task % chunks) as u64;
            match cands[task / chunks] {
                None => accumulate_chunk(model, inputs, chunk, &|a, b| model.eval_raw(a, b)),
                Some(p) => accumulate_chunk(model, inputs, chunk, &|a, b| {
                    let (x, y) = p.apply_raw(a, b);
                    model.eval_raw(x, y)
                }),
            }
        })
        .collect();
    let reports = partials
        .chunks(chunks)
        .map(|parts| tree_reduce(parts.to_vec()).finish())
        .collect();
    Ok((cands, reports))
}

fn select(width: u32, objective: Objective, cands: &[Option<SwapPolicy>], reports: &[ErrorReport]) -> TuningResult {
    let best = select_best(reports, |a, b| a.cmp_by(b, objective).is_lt());
    let table = cands
        .iter()
        .zip(reports)
        .map(|(&policy, r)| CandidateRow {
            policy,
            metric: r.value(objective),
            report: Some(*r),
        })
        .collect();
    TuningResult {
        objective: ObjectiveId::Component(objective),
        width,
        best_policy: cands[best],
        best_metric: reports[best].value(objective),
        noswap_metric: reports[0].value(objective),
        table,
    }
}

#[inline]
fn oracle_output<M: Multiplier + ?Sized>(model: &M, a: u32, b: u32) -> i64 {
    let precise = model.exact_raw(a, b);
    let direct = model.eval_raw(a, b);
    let swapped = model.eval_raw(b, a);
    if swapped.abs_diff(precise) < direct.abs_diff(precise) {
        swapped
    } else {
        direct
    }
}

#[inline]
fn mode_output<M: Multiplier + ?Sized>(model: &M, mode: SwapMode, a: u32, b: u32) -> i64 {
    match mode {
        SwapMode::NoSwap => model.eval_raw(a, b),
        SwapMode::Policy(p) => {
            let (x, y) = p.apply_raw(a, b);
            model.eval_raw(x, y)
        }
        SwapMode::Oracle => oracle_output(model, a, b),
    }
}

/// Metrics of the per-input orientation oracle: each pair uses whichever
/// order gives the smaller absolute error, and EP/ARE follow that choice.
pub fn oracle_report<M: Multiplier>(model: &M, inputs: &PairSource) -> Result<ErrorReport> {
    inputs.validate(model.width())?;
    Ok(accumulate(model, inputs, |a, b| oracle_output(model, a, b)).finish())
}

/// Square grid of absolute errors, row = operand A, column = operand B.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorGrid {
    pub side: usize,
    pub cells: Vec<u64>,
}

impl ErrorGrid {
    pub fn get(&self, a: usize, b: usize) -> u64 {
        self.cells[a * self.side + b]
    }

    pub fn transpose(&self) -> Self {
        let n = self.side;
        let cells = (0..n * n).map(|i| self.get(i % n, i / n)).collect();
        Self { side: n, cells }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.side).all(|a| (a + 1..self.side).all(|b| self.get(a, b) == self.get(b, a)))
    }

    pub fn max(&self) -> u64 {
        self.cells.iter().copied().max().unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.cells.len() * 4);
        for row in self.cells.chunks(self.side) {
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// 8-bit rendering with `255 * ln(1 + e) / ln(1 + max)`.
    pub fn to_log_image(&self) -> GrayImage {
        let max = self.max();
        let scale = if max == 0 { 0.0 } else { 255.0 / (max as f64).ln_1p() };
        let pixels = self
            .cells
            .iter()
            .map(|&e| ((e as f64).ln_1p() * scale).round().min(255.0) as u8)
            .collect();
        GrayImage::new(self.side, self.side, pixels).expect("grid is square")
    }
}

/// Absolute-error map over all raw pairs, evaluated under `mode`.
pub fn heatmap<M: Multiplier>(model: &M, mode: SwapMode) -> Result<ErrorGrid> {
    let width = model.width();
    if width > HEATMAP_MAX_WIDTH {
        return Err(Error::Capacity(format!(
            "heatmap of a {width}-bit model (limit {HEATMAP_MAX_WIDTH})"
        )));
    }
    if let SwapMode::Policy(p) = mode {
        p.check_width(width)?;
    }
    let side = 1usize << width;
    let cells = (0..side * side)
        .into_par_iter()
        .map(|i| {
            let (a, b) = ((i / side) as u32, (i % side) as u32);
            mode_output(model, mode, a, b).abs_diff(model.exact_raw(a, b))
        })
        .collect();
    Ok(ErrorGrid { side, cells })
}

/// Convenience for callers holding an optional policy.
pub fn heatmap_for_policy<M: Multiplier>(model: &M, policy: Option<SwapPolicy>) -> Result<ErrorGrid> {
    heatmap(model, policy.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mulmodels::{MultiplierModel, Operand, PpMask, Signedness};

    /// Freshly enumerated by hand-written loops for truncb:2u:k=1,
    /// objective MAE: (policy, sum_abs_err) for all nine candidates.
    fn two_bit_golden() -> Vec<(Option<&'static str>, u128)> {
        let model = |a: u32, b: u32| (a * (b & !1)) as i64;
        let mut rows = vec![];
        let mut noswap = 0u128;
        for a in 0..4u32 {
            for b in 0..4u32 {
                noswap += (model(a, b) - (a * b) as i64).unsigned_abs() as u128;
            }
        }
        rows.push((None, noswap));
        for (name, op_a, bit, trig) in [
            ("A:0:0", true, 0, 0),
            ("A:0:1", true, 0, 1),
            ("A:1:0", true, 1, 0),
            ("A:1:1", true, 1, 1),
            ("B:0:0", false, 0, 0),
            ("B:0:1", false, 0, 1),
            ("B:1:0", false, 1, 0),
            ("B:1:1", false, 1, 1),
        ] {
            let mut s = 0u128;
            for a in 0..4u32 {
                for b in 0..4u32 {
                    let w = if op_a { a } else { b };
                    let (x, y) = if (w >> bit) & 1 == trig { (b, a) } else { (a, b) };
                    s += (model(x, y) - (a * b) as i64).unsigned_abs() as u128;
                }
            }
            rows.push((Some(name), s));
        }
        rows
    }

    #[test]
    fn two_bit_table_matches_enumeration() {
        let m = MultiplierModel::truncate(2, Signedness::Unsigned, Operand::B, 1).unwrap();
        let r = tune_component(&m, Objective::Mae).unwrap();
        assert_eq!(r.table.len(), 9);
        let golden = two_bit_golden();
        for (row, (name, sum)) in r.table.iter().zip(&golden) {
            assert_eq!(row.policy.map(|p| p.to_string()).as_deref(), *name);
            assert_eq!(row.report.unwrap().sum_abs_err, *sum);
        }
        // Frozen from the enumeration: NoSwap 12; A:0:0, A:1:1, B:0:1 and
        // B:1:0 tie at 8, and A:0:0 comes first in tie-break order.
        let sums: Vec<u128> = golden.iter().map(|g| g.1).collect();
        assert_eq!(sums, [12, 8, 16, 16, 8, 16, 8, 8, 16]);
        assert_eq!(r.best_policy.unwrap().to_string(), "A:0:0");
        assert_eq!(r.best_metric, 0.5);
        assert!((r.best_reduction_pct() - 100.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_two_bit() {
        let m = MultiplierModel::truncate(2, Signedness::Unsigned, Operand::B, 1).unwrap();
        let r = oracle_report(&m, &PairSource::Exhaustive).unwrap();
        // sum over a,b of min(a*(b mod 2), b*(a mod 2)): only the odd-odd
        // pairs (1,1), (1,3), (3,1), (3,3) contribute 1 + 1 + 1 + 3
        let mut expect = 0u128;
        for a in 0..4u128 {
            for b in 0..4u128 {
                expect += (a * (b % 2)).min(b * (a % 2));
            }
        }
        assert_eq!(expect, 6);
        assert_eq!(r.sum_abs_err, 6);
        assert_eq!(r.mae(), 0.375);

        // signed 2-bit operands: the odd values are -1 and 1, each odd-odd
        // pair costs 1
        let s = MultiplierModel::truncate(2, Signedness::Signed, Operand::B, 1).unwrap();
        let r = oracle_report(&s, &PairSource::Exhaustive).unwrap();
        assert_eq!(r.sum_abs_err, 4);
        assert_eq!(r.mae(), 0.25);
        let noswap = crate::metrics::component_metrics(&s, None, &PairSource::Exhaustive).unwrap();
        assert_eq!(noswap.sum_abs_err, 8);
    }

    #[test]
    fn one_sweep_equals_separate_tuning() {
        let m = MultiplierModel::drop_partial_products(Signedness::Signed, PpMask::rect(6, 2, 4)).unwrap();
        let all = tune_component_objectives(&m, &Objective::ALL, &PairSource::Exhaustive).unwrap();
        for (o, r) in Objective::ALL.into_iter().zip(all) {
            assert_eq!(r, tune_component(&m, o).unwrap());
        }
    }

    #[test]
    fn exact_model_prefers_noswap() {
        let m = MultiplierModel::exact(6, Signedness::Signed).unwrap();
        let r = tune_component(&m, Objective::Mae).unwrap();
        assert_eq!(r.best_policy, None);
        assert_eq!(r.best_metric, 0.0);
        assert_eq!(r.best_reduction_pct(), 0.0);
    }

    #[test]
    fn commutative_oracle_equals_noswap() {
        let m = MultiplierModel::drop_partial_products(Signedness::Unsigned, PpMask::diagonal(8, 6)).unwrap();
        let o = oracle_report(&m, &PairSource::Exhaustive).unwrap();
        let n = crate::metrics::component_metrics(&m, None, &PairSource::Exhaustive).unwrap();
        assert_eq!(o, n);
    }

    #[test]
    fn heatmaps() {
        let e = MultiplierModel::exact(6, Signedness::Unsigned).unwrap();
        assert_eq!(heatmap(&e, SwapMode::NoSwap).unwrap().max(), 0);
        let t = MultiplierModel::truncate(6, Signedness::Unsigned, Operand::B, 2).unwrap();
        assert!(!heatmap(&t, SwapMode::NoSwap).unwrap().is_symmetric());
        let o = heatmap(&t, SwapMode::Oracle).unwrap();
        assert!(o.is_symmetric());
        assert_eq!(o, o.transpose());
        let big = MultiplierModel::exact(11, Signedness::Unsigned).unwrap();
        assert!(matches!(heatmap(&big, SwapMode::NoSwap), Err(Error::Capacity(_))));
    }

    #[test]
    fn heatmap_image_scaling() {
        let t = MultiplierModel::truncate(4, Signedness::Unsigned, Operand::B, 2).unwrap();
        let g = heatmap(&t, SwapMode::NoSwap).unwrap();
        let img = g.to_log_image();
        assert_eq!(img.pixels.iter().copied().max(), Some(255));
        assert_eq!(img.pixels[0], 0);
    }
}
