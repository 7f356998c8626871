//! `opswap`: tune, evaluate and visualise single-bit operand swapping for
//! approximate multipliers.
//!
//! Exit status: 0 success, 1 usage error, 2 data or format error,
//! 3 capacity guard.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use opswap::Error;

#[derive(Debug, Parser)]
#[command(name = "opswap", version, about = "Single-bit operand swapping for non-commutative approximate multipliers")]
pub struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "OPSWAP_THREADS")]
    pub threads: Option<usize>,

    /// TOML file with defaults for any flag; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search every single-bit swap policy for a model or a benchmark.
    Tune(TuneArgs),
    /// Render the absolute-error map of a model over all operand pairs.
    Heatmap(HeatmapArgs),
    /// Compare no-swap, tuned and oracle swapping on a benchmark.
    Bench(BenchArgs),
    /// Write a model's full truth table in AXTT format.
    DumpTable(DumpTableArgs),
    /// Record the operand pairs a benchmark feeds its sub-multipliers.
    Trace(TraceArgs),
    /// Error metrics of a model on exhaustive pairs, a range or a trace.
    Eval(EvalArgs),
    /// Export a dataset split with its manifest.
    Dataset(DatasetArgs),
}

#[derive(Debug, Default, Args)]
pub struct ModelArgs {
    /// Model spec such as `truncb:8u:k=2`, `dpp:8s:diag=4` or `table:FILE`.
    #[arg(long, value_name = "SPEC")]
    pub model: Option<String>,

    /// Truth-table file, shorthand for `--model table:FILE`.
    #[arg(long, value_name = "FILE", conflicts_with = "model")]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct WideArgs {
    /// Approximated parts: `all`, `mdlo`, `none` or a list like `hi,lo`.
    #[arg(long)]
    pub approx: Option<String>,

    /// Operand alignment: `paper-fidelity` or `exact-fit`.
    #[arg(long)]
    pub shift: Option<String>,

    /// Per-part model override, repeatable.
    #[arg(long = "part", value_name = "PART=SPEC")]
    pub parts: Vec<String>,
}

#[derive(Debug, Default, Args)]
pub struct ModeArgs {
    /// Swap policy `OPERAND:BIT:TRIGGER`, e.g. `B:6:0`.
    #[arg(long)]
    pub policy: Option<String>,

    /// Per-multiplication best orientation instead of a policy.
    #[arg(long, conflicts_with = "policy")]
    pub oracle: bool,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// `mae`, `wce`, `are`, `mse`, `ep`, or the benchmark metric.
    #[arg(long)]
    pub objective: Option<String>,

    /// Tune on a benchmark's train split instead of exhaustive pairs.
    #[arg(long)]
    pub bench: Option<String>,

    #[command(flatten)]
    pub wide: WideArgs,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Tune on N seeded random pairs instead of all of them.
    #[arg(long, value_name = "N", conflicts_with = "bench")]
    pub samples: Option<u64>,

    /// Output directory for `tune.json` and `tune.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// `noswap`, `policy` or `oracle`.
    #[arg(long)]
    pub variant: Option<String>,

    #[arg(long)]
    pub policy: Option<String>,

    /// Output directory for `heatmap.csv` and `heatmap.pgm`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Model spec, one report row per occurrence.
    #[arg(long = "model", value_name = "SPEC")]
    pub models: Vec<String>,

    #[arg(long)]
    pub bench: Option<String>,

    #[command(flatten)]
    pub wide: WideArgs,

    #[arg(long)]
    pub seed: Option<u64>,

    /// `tune.json` of a component tuning, one per model or one for all.
    #[arg(long = "component-policy", value_name = "FILE")]
    pub component_policy: Vec<PathBuf>,

    /// Leave the component-tuned column empty.
    #[arg(long, conflicts_with = "component_policy")]
    pub no_component: bool,

    /// Output directory for `bench.json` and `bench.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DumpTableArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Destination file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[arg(long)]
    pub bench: Option<String>,

    #[command(flatten)]
    pub wide: WideArgs,

    #[command(flatten)]
    pub mode: ModeArgs,

    /// `train` or `test`.
    #[arg(long)]
    pub split: Option<String>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Destination AXTR file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    pub mode: ModeArgs,

    /// AXTR trace supplying the operand pairs.
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,

    /// Keep only trace pairs from these parts (`all`, `mdlo`, `hi,lo`, ...).
    #[arg(long, requires = "trace")]
    pub parts: Option<String>,

    /// Slice `START:LEN` of the exhaustive pair space.
    #[arg(long, conflicts_with = "trace")]
    pub range: Option<String>,

    /// N seeded random pairs.
    #[arg(long, value_name = "N", conflicts_with_all = ["trace", "range"])]
    pub samples: Option<u64>,

    #[arg(long, requires = "samples")]
    pub seed: Option<u64>,

    /// Output directory for `eval.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long)]
    pub split: Option<String>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidOperand(_)
        | Error::InvalidPolicy(_)
        | Error::InvalidObjective(_)
        | Error::InvalidConfig(_)
        | Error::Lookup { .. } => 1,
        Error::Capacity(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
