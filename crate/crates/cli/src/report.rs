//! Benchmark comparison report: one row per multiplier, four swap variants
//! next to the float and exact fixed-point baselines.

use serde::{Deserialize, Serialize};

use opswap::metrics::{gain_vs_noswap, AppMetricKind, Orientation};
use opswap::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchReport {
    pub benchmark: String,
    pub metric: AppMetricKind,
    pub seed: u64,
    pub approx: String,
    pub shift_mode: String,
    pub train_digest: String,
    pub test_digest: String,
    pub baselines: Baselines,
    pub rows: Vec<BenchRow>,
    pub gains: Gains,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Baselines {
    pub float: f64,
    pub fxp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchRow {
    pub model: String,
    pub noswap: f64,
    pub swapper_comp: Option<f64>,
    pub swapper_app: f64,
    pub oracle: f64,
    pub component_policy: Option<String>,
    pub app_policy: String,
}

/// Average gain of each variant over the no-swap column; `None` when the
/// variant was not run or a baseline value is zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gains {
    pub swapper_comp: Option<f64>,
    pub swapper_app: f64,
    pub oracle: f64,
}

impl Gains {
    pub fn compute(rows: &[BenchRow], orientation: Orientation) -> Result<Self> {
        let noswap: Vec<f64> = rows.iter().map(|r| r.noswap).collect();
        let col = |f: fn(&BenchRow) -> f64| -> Result<f64> {
            let values: Vec<f64> = rows.iter().map(f).collect();
            gain_vs_noswap(&values, &noswap, orientation)
        };
        let comp: Option<Vec<f64>> = rows.iter().map(|r| r.swapper_comp).collect();
        Ok(Gains {
            swapper_comp: comp.map(|c| gain_vs_noswap(&c, &noswap, orientation)).transpose()?,
            swapper_app: col(|r| r.swapper_app)?,
            oracle: col(|r| r.oracle)?,
        })
    }
}

impl BenchReport {
    pub const CSV_HEADER: &'static str =
        "model,float,fxp,noswap,swapper_comp,swapper_app,oracle,component_policy,app_policy";

    fn fmt_score(&self, v: f64) -> String {
        match self.metric {
            AppMetricKind::Ssim => format!("{v:.4}"),
            _ => format!("{v:.6}"),
        }
    }

    /// Score rows followed by a `gain_pct` row with percentages to two
    /// decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        let float = self.fmt_score(self.baselines.float);
        let fxp = self.fmt_score(self.baselines.fxp);
        for r in &self.rows {
            let comp = r.swapper_comp.map(|v| self.fmt_score(v)).unwrap_or_default();
            out.push_str(&format!(
                "{},{float},{fxp},{},{comp},{},{},{},{}\n",
                r.model,
                self.fmt_score(r.noswap),
                self.fmt_score(r.swapper_app),
                self.fmt_score(r.oracle),
                r.component_policy.as_deref().unwrap_or_default(),
                r.app_policy,
            ));
        }
        let pct = |g: f64| format!("{:.2}", g * 100.0 + 0.0);
        out.push_str(&format!(
            "gain_pct,,,,{},{},{},,\n",
            self.gains.swapper_comp.map(pct).unwrap_or_default(),
            pct(self.gains.swapper_app),
            pct(self.gains.oracle),
        ));
        out
    }
}
