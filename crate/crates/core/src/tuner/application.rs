use rayon::prelude::*;

use super::{candidates, select_best, CandidateRow, ObjectiveId, OperandTrace, SwapMode, TuningResult};
use crate::apps::{Benchmark, Dataset, Workload};
use crate::error::{Error, Result};
use crate::metrics::AppMetricKind;
use crate::widearith::WideMulConfig;

/// Application-level tuning: one full benchmark run over `train` per
/// candidate (NoSwap plus all `4n` policies), the same policy applied to
/// every approximated sub-multiplication of the run.
pub fn tune_application(
    benchmark: Benchmark,
    cfg: &WideMulConfig,
    objective: AppMetricKind,
    train: &Dataset,
) -> Result<TuningResult> {
    if objective != benchmark.metric() {
        return Err(Error::InvalidObjective(format!(
            "{benchmark} is scored by {}, not {objective}",
            benchmark.metric()
        )));
    }
    let workload = Workload::new(benchmark, train)?;
    let table = candidates(cfg.n())
        .into_par_iter()
        .map(|policy| {
            let run = workload.run(cfg, SwapMode::from(policy))?;
            Ok(CandidateRow {
                policy,
                metric: run.score.value,
                report: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let orientation = objective.orientation();
    let best = select_best(&table, |a, b| orientation.better(a.metric, b.metric));
    Ok(TuningResult {
        objective: ObjectiveId::App(objective),
        width: cfg.n(),
        best_policy: table[best].policy,
        best_metric: table[best].metric,
        noswap_metric: table[0].metric,
        table,
    })
}

/// Operand pairs of every sub-multiplication of one benchmark run.
pub fn record_trace(benchmark: Benchmark, cfg: &WideMulConfig, mode: SwapMode, inputs: &Dataset) -> Result<OperandTrace> {
    Workload::new(benchmark, inputs)?.trace(cfg, mode)
}
