//! Swap-policy search.
//!
//! A policy is one bit of one operand plus a trigger value; with M-bit
//! operands there are `4M` of them. Tuning scores every policy and the
//! NoSwap baseline and keeps the best, either over the whole input space of
//! a multiplier ([`tune_component`]) or over complete benchmark runs
//! ([`tune_application`]).

mod application;
mod component;
mod policy;
mod trace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{AppMetricKind, ErrorReport, Objective, Orientation};

pub use crate::metrics::PairSource;
pub use application::{record_trace, tune_application};
pub use component::{heatmap, heatmap_for_policy, oracle_report, tune_component, tune_component_objectives, tune_component_over, ErrorGrid, HEATMAP_MAX_WIDTH};
pub use policy::{apply_policy, candidates, SwapMode, SwapPolicy};
pub use trace::{OperandTrace, PartLabel, AXTR_HEADER_LEN, AXTR_MAGIC, AXTR_VERSION};

/// What a tuning run optimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ObjectiveId {
    Component(Objective),
    App(AppMetricKind),
}

impl ObjectiveId {
    pub fn orientation(self) -> Orientation {
        match self {
            ObjectiveId::Component(_) => Orientation::LowerBetter,
            ObjectiveId::App(k) => k.orientation(),
        }
    }
}

impl fmt::Display for ObjectiveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveId::Component(o) => write!(f, "{o}"),
            ObjectiveId::App(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for ObjectiveId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse()
            .map(ObjectiveId::Component)
            .or_else(|_| s.parse().map(ObjectiveId::App))
            .map_err(|_| Error::InvalidObjective(s.to_string()))
    }
}

impl From<ObjectiveId> for String {
    fn from(o: ObjectiveId) -> String {
        o.to_string()
    }
}

impl TryFrom<String> for ObjectiveId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    /// `None` is the NoSwap baseline.
    pub policy: Option<SwapPolicy>,
    pub metric: f64,
    /// Full metrics for component-level candidates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ErrorReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub objective: ObjectiveId,
    pub width: u32,
    pub best_policy: Option<SwapPolicy>,
    pub best_metric: f64,
    pub noswap_metric: f64,
    /// NoSwap first, then every policy in tie-break order.
    pub table: Vec<CandidateRow>,
}

impl TuningResult {
    pub const CSV_HEADER: &'static str = "operand,bit,trigger,metric,reduction_pct";

    /// Improvement of `value` over NoSwap in percent; positive is better.
    pub fn reduction_pct(&self, value: f64) -> f64 {
        if self.noswap_metric == 0.0 {
            return 0.0;
        }
        let rel = (value - self.noswap_metric) / self.noswap_metric.abs() * 100.0;
        let signed = match self.objective.orientation() {
            Orientation::LowerBetter => -rel,
            Orientation::HigherBetter => rel,
        };
        // no -0.00 in reports
        signed + 0.0
    }

    pub fn best_reduction_pct(&self) -> f64 {
        self.reduction_pct(self.best_metric)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for row in &self.table {
            let head = match row.policy {
                Some(p) => format!("{},{},{}", p.operand, p.bit_index, p.trigger_value),
                None => "none,,".to_string(),
            };
            out.push_str(&format!(
                "{head},{:.6},{:.2}\n",
                row.metric,
                self.reduction_pct(row.metric)
            ));
        }
        out
    }

    /// Human summary in the style `best B:6:0  mae 4640.11  reduction 11.61%`.
    pub fn summary(&self) -> String {
        let best = self.best_policy.map_or_else(|| "NoSwap".to_string(), |p| p.to_string());
        format!(
            "best {best}  {} {:.4} (noswap {:.4})  reduction {:.2}%",
            self.objective,
            self.best_metric,
            self.noswap_metric,
            self.best_reduction_pct()
        )
    }
}

/// Picks the winner: first candidate that no later one strictly beats.
pub(crate) fn select_best<T>(rows: &[T], better: impl Fn(&T, &T) -> bool) -> usize {
    let mut best = 0;
    for i in 1..rows.len() {
        if better(&rows[i], &rows[best]) {
            best = i;
        }
    }
    best
}
