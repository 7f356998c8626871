use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use opswap::apps::{score_run, Benchmark, Dataset, Split, Workload};
use opswap::metrics::component_metrics;
use opswap::mulmodels::TruthTable;
use opswap::tuner::{heatmap, oracle_report, record_trace, tune_application, tune_component_over, ObjectiveId};
use opswap::{
    ApproxSet, Error, ErrorReport, Multiplier, MultiplierModel, OperandTrace, PairSource, Part, Result, ShiftMode,
    SwapMode, SwapPolicy, TuningResult, WideMulConfig,
};

use crate::config::{existing, FileConfig};
use crate::report::{Baselines, BenchReport, BenchRow, Gains};
use crate::{
    BenchArgs, Cli, Command, DatasetArgs, DumpTableArgs, EvalArgs, HeatmapArgs, ModeArgs, ModelArgs, TraceArgs,
    TuneArgs, WideArgs,
};

const DEFAULT_SEED: u64 = 1;

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.threads.or(file.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Tune(a) => cmd_tune(a, &file),
        Command::Heatmap(a) => cmd_heatmap(a, &file),
        Command::Bench(a) => cmd_bench(a, &file),
        Command::DumpTable(a) => cmd_dump_table(a, &file),
        Command::Trace(a) => cmd_trace(a, &file),
        Command::Eval(a) => cmd_eval(a, &file),
        Command::Dataset(a) => cmd_dataset(a, &file),
    }
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::InvalidConfig(format!("--{flag} is required")))
}

fn parse_model(spec: &str) -> Result<MultiplierModel> {
    if let Some(path) = spec.strip_prefix("table:") {
        existing(Path::new(path))?;
    }
    MultiplierModel::from_spec(spec)
}

fn table_spec(path: &Path) -> Result<String> {
    existing(path)?;
    Ok(format!("table:{}", path.display()))
}

/// The single model spec selected by flags, falling back to the file.
fn model_spec(args: &ModelArgs, file: &FileConfig) -> Result<String> {
    if let Some(spec) = &args.model {
        return Ok(spec.clone());
    }
    if let Some(path) = &args.table {
        return table_spec(path);
    }
    match (file.model.as_slice(), &file.table) {
        ([spec], None) => Ok(spec.clone()),
        ([], Some(path)) => table_spec(path),
        ([], None) => Err(Error::InvalidConfig("a model is required (--model or --table)".into())),
        _ => Err(Error::InvalidConfig("this command takes exactly one model".into())),
    }
}

fn resolve_model(args: &ModelArgs, file: &FileConfig) -> Result<(String, MultiplierModel)> {
    let spec = model_spec(args, file)?;
    let model = parse_model(&spec)?;
    Ok((spec, model))
}

fn swap_mode(args: &ModeArgs, file: &FileConfig) -> Result<SwapMode> {
    if args.oracle || (args.policy.is_none() && file.oracle == Some(true)) {
        return Ok(SwapMode::Oracle);
    }
    Ok(match args.policy.as_ref().or(file.policy.as_ref()) {
        Some(p) => SwapMode::Policy(p.parse()?),
        None => SwapMode::NoSwap,
    })
}

fn mode_label(mode: SwapMode) -> String {
    match mode {
        SwapMode::NoSwap => "noswap".into(),
        SwapMode::Policy(p) => p.to_string(),
        SwapMode::Oracle => "oracle".into(),
    }
}

fn policy_label(policy: Option<SwapPolicy>) -> String {
    policy.map_or_else(|| "none".into(), |p| p.to_string())
}

fn benchmark(flag: &Option<String>, file: &FileConfig) -> Result<Option<Benchmark>> {
    flag.as_ref().or(file.bench.as_ref()).map(|b| b.parse()).transpose()
}

struct WideSettings {
    approx: ApproxSet,
    shift: ShiftMode,
    overrides: [Option<MultiplierModel>; 4],
}

impl WideSettings {
    fn resolve(args: &WideArgs, file: &FileConfig) -> Result<Self> {
        let w = &file.wide;
        let approx = match args.approx.as_ref().or(w.approx.as_ref()) {
            Some(s) => s.parse()?,
            None => ApproxSet::MD_LO,
        };
        let shift = match args.shift.as_ref().or(w.shift.as_ref()) {
            Some(s) => s.parse()?,
            None => ShiftMode::default(),
        };
        let mut specs = [w.hi.clone(), w.md1.clone(), w.md2.clone(), w.lo.clone()];
        for item in &args.parts {
            let (name, spec) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("`{item}` is not PART=SPEC")))?;
            let part = Part::ALL
                .into_iter()
                .position(|p| p.name() == name.trim().to_ascii_lowercase())
                .ok_or_else(|| Error::InvalidConfig(format!("unknown part `{name}`")))?;
            specs[part] = Some(spec.to_string());
        }
        let mut overrides: [Option<MultiplierModel>; 4] = Default::default();
        for (slot, spec) in overrides.iter_mut().zip(&specs) {
            *slot = spec.as_deref().map(parse_model).transpose()?;
        }
        Ok(Self { approx, shift, overrides })
    }

    fn config(&self, model: &MultiplierModel) -> Result<WideMulConfig> {
        let parts = std::array::from_fn(|i| self.overrides[i].clone().unwrap_or_else(|| model.clone()));
        WideMulConfig::new(model.width(), parts, self.approx, self.shift)
    }
}

/// Writes all files once every result is ready.
fn write_outputs(dir: &Path, files: &[(&str, &[u8])]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

fn out_dir(flag: Option<PathBuf>, file: &FileConfig) -> PathBuf {
    flag.or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("."))
}

fn seed(flag: Option<u64>, file: &FileConfig) -> u64 {
    flag.or(file.seed).unwrap_or(DEFAULT_SEED)
}

/// `count` uniformly drawn raw pairs.
fn sampled_pairs(width: u32, count: u64, seed: u64) -> Result<PairSource> {
    if count == 0 {
        return Err(Error::InvalidConfig("--samples must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = 1u32 << width;
    Ok(PairSource::Pairs((0..count).map(|_| (rng.gen_range(0..side), rng.gen_range(0..side))).collect()))
}

/// Prints to stdout, treating a closed pipe as success.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn cmd_tune(args: TuneArgs, file: &FileConfig) -> Result<()> {
    let (_, model) = resolve_model(&args.model, file)?;
    let bench = benchmark(&args.bench, file)?;
    let objective: Option<ObjectiveId> = args.objective.as_ref().or(file.objective.as_ref()).map(|o| o.parse()).transpose()?;
    let result = match bench {
        None => match objective.unwrap_or(ObjectiveId::Component(opswap::Objective::Mae)) {
            ObjectiveId::Component(o) => {
                let source = match args.samples.or(file.samples) {
                    Some(n) => sampled_pairs(model.width(), n, seed(args.seed, file))?,
                    None => PairSource::Exhaustive,
                };
                tune_component_over(&model, o, &source)?
            }
            ObjectiveId::App(k) => {
                return Err(Error::InvalidObjective(format!("`{k}` needs --bench")));
            }
        },
        Some(b) => {
            let kind = match objective.unwrap_or(ObjectiveId::App(b.metric())) {
                ObjectiveId::App(k) => k,
                ObjectiveId::Component(o) => {
                    return Err(Error::InvalidObjective(format!("`{o}` is a component metric, {b} is scored by {}", b.metric())));
                }
            };
            let cfg = WideSettings::resolve(&args.wide, file)?.config(&model)?;
            let train = Dataset::generate(Split::Train, seed(args.seed, file))?;
            tune_application(b, &cfg, kind, &train)?
        }
    };
    let json = serde_json::to_string_pretty(&result)?;
    let csv = result.to_csv();
    write_outputs(&out_dir(args.out, file), &[("tune.json", json.as_bytes()), ("tune.csv", csv.as_bytes())])?;
    emit(&format!("{}\n", result.summary()))
}

fn cmd_heatmap(args: HeatmapArgs, file: &FileConfig) -> Result<()> {
    let (_, model) = resolve_model(&args.model, file)?;
    let policy = args.policy.as_ref().or(file.policy.as_ref());
    let variant = args.variant.as_ref().or(file.variant.as_ref()).map(String::as_str);
    let mode = match (variant, policy) {
        (None | Some("noswap"), None) => SwapMode::NoSwap,
        (None | Some("policy"), Some(p)) => SwapMode::Policy(p.parse()?),
        (Some("policy"), None) => return Err(Error::InvalidConfig("the policy variant needs --policy".into())),
        (Some("oracle"), None) => SwapMode::Oracle,
        (Some(v @ ("noswap" | "oracle")), Some(_)) => {
            return Err(Error::InvalidConfig(format!("--policy does not apply to the {v} variant")))
        }
        (Some(v), _) => return Err(Error::InvalidConfig(format!("unknown heatmap variant `{v}`"))),
    };
    let grid = heatmap(&model, mode)?;
    let pgm = grid.to_log_image().to_pgm();
    let csv = grid.to_csv();
    write_outputs(&out_dir(args.out, file), &[("heatmap.csv", csv.as_bytes()), ("heatmap.pgm", &pgm)])?;
    println!("{model} {}: max error {}", mode_label(mode), grid.max());
    Ok(())
}

fn load_component_policy(path: &Path, width: u32) -> Result<Option<SwapPolicy>> {
    if !path.exists() {
        return Err(Error::Dependency(format!(
            "component tuning result {} not found; run `opswap tune` first",
            path.display()
        )));
    }
    let result: TuningResult = serde_json::from_str(&fs::read_to_string(path)?)?;
    if !matches!(result.objective, ObjectiveId::Component(_)) {
        return Err(Error::Dependency(format!("{} holds an application tuning", path.display())));
    }
    if result.width != width {
        return Err(Error::Shape(format!(
            "{} was tuned for {}-bit operands, the configuration uses {width}",
            path.display(),
            result.width
        )));
    }
    Ok(result.best_policy)
}

fn cmd_bench(args: BenchArgs, file: &FileConfig) -> Result<()> {
    let bench = required(benchmark(&args.bench, file)?, "bench")?;
    let specs = if args.models.is_empty() { file.model.clone() } else { args.models };
    if specs.is_empty() {
        return Err(Error::InvalidConfig("at least one --model is required".into()));
    }
    let models = specs.iter().map(|s| parse_model(s)).collect::<Result<Vec<_>>>()?;
    let wide = WideSettings::resolve(&args.wide, file)?;
    let cfgs = models.iter().map(|m| wide.config(m)).collect::<Result<Vec<_>>>()?;

    let no_component = args.no_component || file.no_component == Some(true);
    let policy_files = if args.component_policy.is_empty() { file.component_policy.clone() } else { args.component_policy };
    let component: Vec<Option<Option<SwapPolicy>>> = if no_component {
        vec![None; cfgs.len()]
    } else {
        if policy_files.is_empty() {
            return Err(Error::Dependency(
                "bench needs --component-policy FILE from a prior `opswap tune`, or --no-component".into(),
            ));
        }
        if policy_files.len() != 1 && policy_files.len() != cfgs.len() {
            return Err(Error::InvalidConfig(format!(
                "{} component policies for {} models",
                policy_files.len(),
                cfgs.len()
            )));
        }
        cfgs.iter()
            .enumerate()
            .map(|(i, cfg)| load_component_policy(&policy_files[i.min(policy_files.len() - 1)], cfg.n()).map(Some))
            .collect::<Result<_>>()?
    };

    let seed = seed(args.seed, file);
    let train = Dataset::generate(Split::Train, seed)?;
    let test = Dataset::generate(Split::Test, seed)?;
    let workload = Workload::new(bench, &test)?;
    let reference = workload.reference();
    let baselines = Baselines {
        float: score_run(reference, reference)?.value,
        fxp: workload.run(&WideMulConfig::exact(16, wide.shift)?, SwapMode::NoSwap)?.score.value,
    };

    let mut rows = Vec::with_capacity(cfgs.len());
    for ((spec, cfg), comp) in specs.iter().zip(&cfgs).zip(&component) {
        let score = |mode: SwapMode| workload.run(cfg, mode).map(|r| r.score.value);
        let tuned = tune_application(bench, cfg, bench.metric(), &train)?;
        rows.push(BenchRow {
            model: spec.clone(),
            noswap: score(SwapMode::NoSwap)?,
            swapper_comp: comp.map(|p| score(p.into())).transpose()?,
            swapper_app: score(tuned.best_policy.into())?,
            oracle: score(SwapMode::Oracle)?,
            component_policy: comp.map(policy_label),
            app_policy: policy_label(tuned.best_policy),
        });
        eprintln!("{spec}: done");
    }
    let gains = Gains::compute(&rows, bench.metric().orientation())?;
    let report = BenchReport {
        benchmark: bench.name().into(),
        metric: bench.metric(),
        seed,
        approx: wide.approx.to_string(),
        shift_mode: wide.shift.to_string(),
        train_digest: train.manifest().digest,
        test_digest: test.manifest().digest,
        baselines,
        rows,
        gains,
    };
    let json = serde_json::to_string_pretty(&report)?;
    let csv = report.to_csv();
    write_outputs(&out_dir(args.out, file), &[("bench.json", json.as_bytes()), ("bench.csv", csv.as_bytes())])?;
    emit(&csv)
}

fn cmd_dump_table(args: DumpTableArgs, file: &FileConfig) -> Result<()> {
    let (_, model) = resolve_model(&args.model, file)?;
    let out = required(args.out.or_else(|| file.out.clone()), "out")?;
    let table = TruthTable::from_model(&model)?;
    let bytes = table.to_bytes();
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&out, &bytes)?;
    println!("{model}: {} entries, {} bytes", table.entries().len(), bytes.len());
    Ok(())
}

fn cmd_trace(args: TraceArgs, file: &FileConfig) -> Result<()> {
    let (_, model) = resolve_model(&args.model, file)?;
    let bench = required(benchmark(&args.bench, file)?, "bench")?;
    let cfg = WideSettings::resolve(&args.wide, file)?.config(&model)?;
    let mode = swap_mode(&args.mode, file)?;
    let split: Split = match args.split.as_ref().or(file.split.as_ref()) {
        Some(s) => s.parse()?,
        None => Split::Test,
    };
    let out = required(args.out.or_else(|| file.out.clone()), "out")?;
    let inputs = Dataset::generate(split, seed(args.seed, file))?;
    let trace = record_trace(bench, &cfg, mode, &inputs)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    trace.save(&out)?;
    println!("{bench} {split} {}: {} operand pairs", mode_label(mode), trace.len());
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput {
    model: String,
    mode: String,
    source: String,
    report: ErrorReport,
}

fn parse_range(s: &str) -> Result<PairSource> {
    let bad = || Error::InvalidConfig(format!("`{s}` is not START:LEN"));
    let (start, len) = s.split_once(':').ok_or_else(bad)?;
    Ok(PairSource::Range {
        start: start.trim().parse().map_err(|_| bad())?,
        len: len.trim().parse().map_err(|_| bad())?,
    })
}

fn cmd_eval(args: EvalArgs, file: &FileConfig) -> Result<()> {
    let (spec, model) = resolve_model(&args.model, file)?;
    let mode = swap_mode(&args.mode, file)?;
    let trace_path = args.trace.or_else(|| file.trace.clone());
    let range = args.range.or_else(|| file.range.clone());
    let samples = args.samples.or(file.samples);
    let (source, label) = match (trace_path, range, samples) {
        (Some(path), None, None) => {
            let trace = OperandTrace::read_file(existing(&path)?)?;
            if trace.width() != model.width() || trace.signedness() != model.signedness() {
                return Err(Error::Shape(format!(
                    "trace holds {}-bit {:?} operands, model is {model}",
                    trace.width(),
                    trace.signedness()
                )));
            }
            let source = match args.parts.as_ref().or(file.parts.as_ref()) {
                Some(p) => trace.pairs_for(p.parse()?),
                None => trace.to_pair_source(),
            };
            (source, format!("trace:{}", path.display()))
        }
        (None, Some(r), None) => (parse_range(&r)?, format!("range:{r}")),
        (None, None, Some(n)) => {
            let seed = seed(args.seed, file);
            (sampled_pairs(model.width(), n, seed)?, format!("samples:{n}:seed={seed}"))
        }
        (None, None, None) => (PairSource::Exhaustive, "exhaustive".to_string()),
        _ => return Err(Error::InvalidConfig("--trace, --range and --samples are exclusive".into())),
    };
    let report = match mode {
        SwapMode::Oracle => oracle_report(&model, &source)?,
        SwapMode::Policy(p) => component_metrics(&model, Some(p), &source)?,
        SwapMode::NoSwap => component_metrics(&model, None, &source)?,
    };
    let output = EvalOutput {
        model: spec,
        mode: mode_label(mode),
        source: label,
        report,
    };
    let json = serde_json::to_string_pretty(&output)?;
    if let Some(dir) = args.out.or_else(|| file.out.clone()) {
        write_outputs(&dir, &[("eval.json", json.as_bytes())])?;
    }
    emit(&format!("{json}\n"))
}

fn cmd_dataset(args: DatasetArgs, file: &FileConfig) -> Result<()> {
    let split: Split = required(args.split.as_ref().or(file.split.as_ref()), "split")?.parse()?;
    let out = required(args.out.or_else(|| file.out.clone()), "out")?;
    let manifest = Dataset::generate(split, seed(args.seed, file))?.export(&out)?;
    println!("{split}: {} files, digest {}", manifest.files.len(), manifest.digest);
    Ok(())
}
