use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use trajgnn::classical::{tune_idm, CvmPredictor, IdmParams, IdmPredictor};
use trajgnn::datapipe::{
    generate_synthetic, parse_highd, parse_ngsim, read_scenes, smooth_and_differentiate,
    split_dataset, window_extract, write_scenes, DatasetSplit, RawTrackTable, Source, SynthConfig,
    SynthMode, DEFAULT_SPAN_S, DEFAULT_STRIDE_S,
};
use trajgnn::exp::{
    ablation_suite, emit_report, evaluate_displacement, train, Metrics, Predictor, TrainConfig,
};
use trajgnn::models::{Model, ModelConfig, ModelKind};
use trajgnn::scenegraph::Strategy;

/// Trajectory prediction on vehicle interaction graphs.
#[derive(Debug, Parser)]
#[command(name = "trajgnn", version, args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Smooth and window raw NGSIM or HighD tracks into a scene file.
    Ingest(IngestArgs),
    /// Generate synthetic traffic and window it into a scene file.
    Synth(SynthArgs),
    /// Split a scene file into train.csv, val.csv and test.csv.
    Split(SplitArgs),
    /// Train one model.
    Train(TrainArgs),
    /// Score a trained model or a classical baseline.
    Eval(EvalArgs),
    /// Search IDM parameters on a scene file.
    TuneIdm(TuneArgs),
    /// Run the multi-seed ablation grid.
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// key=value file whose keys mirror the long flags; flags win.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long, value_parser = parse_raw_source)]
    dataset: Source,
    /// NGSIM: one or more CSV files, one recording each (repeat the flag).
    /// HighD: a directory holding NN_tracks.csv and NN_tracksMeta.csv.
    #[arg(long = "in", value_name = "PATH", required = true)]
    input: Vec<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Smoothing span, s.
    #[arg(long, default_value_t = DEFAULT_SPAN_S)]
    span: f64,
    /// Window stride, s.
    #[arg(long, default_value_t = DEFAULT_STRIDE_S)]
    stride: u32,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Generator settings as key=value lines.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Overrides the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_STRIDE_S)]
    stride: u32,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Split policy: ngsim, highd or synthetic.
    #[arg(long, value_parser = parse_source)]
    dataset: Source,
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, value_parser = parse_model)]
    model: ModelKind,
    #[arg(long, value_parser = parse_strategy, default_value = "neighbour")]
    strategy: Strategy,
    #[arg(long)]
    no_residual: bool,
    #[arg(long)]
    no_ff_output: bool,
    #[arg(long)]
    no_edge_features: bool,
    #[arg(long)]
    weighted_edges: bool,
    #[arg(long, default_value_t = 256)]
    hidden: usize,
}

impl ModelArgs {
    fn config(&self) -> ModelConfig {
        let mut c = ModelConfig::new(self.model).with_hidden_dim(self.hidden);
        c.use_residual = !self.no_residual;
        c.use_ff_output = !self.no_ff_output;
        c.use_edge_features = !self.no_edge_features;
        c.use_weighted_edges = self.weighted_edges;
        c
    }
}

#[derive(Debug, Args)]
struct LoopArgs {
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    /// Epochs without validation improvement before stopping; 0 disables.
    #[arg(long, default_value_t = 10)]
    patience: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
}

impl LoopArgs {
    fn apply(&self, cfg: &mut TrainConfig) {
        cfg.max_epochs = self.epochs;
        cfg.patience = (self.patience > 0).then_some(self.patience);
        cfg.batch_size = self.batch_size;
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: LoopArgs,
    #[arg(long, value_name = "PATH")]
    train: PathBuf,
    #[arg(long, value_name = "PATH")]
    val: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
#[group(id = "predictor", required = true, multiple = false, args = ["model_file", "baseline"])]
struct EvalArgs {
    #[arg(long, value_name = "PATH")]
    model_file: Option<PathBuf>,
    #[arg(long, value_parser = ["cvm", "idm"])]
    baseline: Option<String>,
    /// IDM parameter file for `--baseline idm`; the NGSIM values otherwise.
    #[arg(long, value_name = "PATH")]
    idm_params: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    scenes: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[arg(long, value_name = "PATH")]
    scenes: PathBuf,
    #[arg(long, default_value_t = 20_000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Worker threads for candidate scoring; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct AblateArgs {
    /// Directory holding train.csv, val.csv and test.csv.
    #[arg(long, value_name = "DIR")]
    scenes_dir: PathBuf,
    /// Inclusive range `a..b` or a comma list.
    #[arg(long, default_value = "0..9", value_parser = parse_seeds)]
    seeds: Seeds,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Parallel training jobs; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, default_value_t = 256)]
    hidden: usize,
    #[command(flatten)]
    run: LoopArgs,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Clone)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let bad = || format!("expected a..b or a comma list, got {s:?}");
    let seeds = if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<Vec<u64>, _>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(Seeds(seeds))
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: trajgnn::Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: trajgnn::Error| e.to_string())
}

fn parse_source(s: &str) -> Result<Source, String> {
    s.parse().map_err(|e: trajgnn::Error| e.to_string())
}

fn parse_raw_source(s: &str) -> Result<Source, String> {
    match parse_source(s)? {
        Source::Synthetic => Err("synthetic data comes from the synth subcommand".into()),
        src => Ok(src),
    }
}

/// Turns `key=value` lines into flags placed before the command-line flags.
fn config_args(cmd: &clap::Command, path: &Path) -> Result<Vec<OsString>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value", path.display(), i + 1);
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let arg = cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && key != "config")
            .with_context(|| format!("{}:{}: unknown key {key:?}", path.display(), i + 1))?;
        if arg.get_action().takes_values() {
            out.push(format!("--{key}").into());
            out.push(value.into());
        } else {
            match value {
                "true" => out.push(format!("--{key}").into()),
                "false" => {}
                _ => bail!("{}:{}: {key} expects true or false", path.display(), i + 1),
            }
        }
    }
    Ok(out)
}

/// Parses argv, splicing in the `--config` file of every subcommand but
/// `synth` ahead of the command-line flags.
fn parse_cli(argv: Vec<OsString>) -> Result<Cli, clap::Error> {
    let Some(pos) = argv
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|i| i + 1)
    else {
        return Cli::try_parse_from(argv);
    };
    let name = argv[pos].to_string_lossy().into_owned();
    let mut config = None;
    for (i, a) in argv.iter().enumerate().skip(pos + 1) {
        let a = a.to_string_lossy();
        if a == "--config" {
            config = argv.get(i + 1).map(PathBuf::from);
        } else if let Some(v) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(v));
        }
    }
    let mut root = Cli::command();
    let (Some(path), Some(sub)) = (config, root.find_subcommand_mut(&name)) else {
        return Cli::try_parse_from(argv);
    };
    if name == "synth" {
        return Cli::try_parse_from(argv);
    }
    let extra = config_args(sub, &path).map_err(|e| {
        Cli::command().error(clap::error::ErrorKind::InvalidValue, format!("{e:#}"))
    })?;
    let mut merged = argv[..=pos].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&argv[pos + 1..]);
    let matches = Cli::command().try_get_matches_from(merged)?;
    Cli::from_arg_matches(&matches)
}

fn need_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        bail!("{}: no such file", path.display());
    }
    Ok(())
}

fn need_dir(path: &Path) -> Result<()> {
    if !path.is_dir() {
        bail!("{}: no such directory", path.display());
    }
    Ok(())
}

/// The parent of an output file must already exist.
fn need_out_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => need_dir(p),
        _ => Ok(()),
    }
}

fn single_thread<T>(f: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    with_threads(1, f)
}

fn with_threads<T: Send>(jobs: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("starting worker threads")?
        .install(f)
}

fn highd_recordings(dir: &Path) -> Result<Vec<(u32, PathBuf, PathBuf)>> {
    let mut recs = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(prefix) = name.strip_suffix("_tracks.csv") else {
            continue;
        };
        let id: u32 = prefix
            .parse()
            .with_context(|| format!("{}: expected NN_tracks.csv", path.display()))?;
        let meta = dir.join(format!("{prefix}_tracksMeta.csv"));
        need_file(&meta)?;
        recs.push((id, path, meta));
    }
    recs.sort();
    if recs.is_empty() {
        bail!("{}: no NN_tracks.csv files", dir.display());
    }
    Ok(recs)
}

fn ingest(a: &IngestArgs) -> Result<()> {
    need_out_parent(&a.out)?;
    let tables = match a.dataset {
        Source::Highd => {
            let [dir] = a.input.as_slice() else {
                bail!("highd ingestion takes one directory");
            };
            need_dir(dir)?;
            highd_recordings(dir)?
                .into_iter()
                .map(|(id, tracks, meta)| {
                    let t = fs::read(&tracks)
                        .with_context(|| format!("reading {}", tracks.display()))?;
                    let m =
                        fs::read(&meta).with_context(|| format!("reading {}", meta.display()))?;
                    let table =
                        parse_highd(&t, &m).with_context(|| format!("{}", tracks.display()))?;
                    Ok(table.with_recording_id(id))
                })
                .collect::<Result<Vec<_>>>()?
        }
        _ => {
            for p in &a.input {
                need_file(p)?;
            }
            let many = a.input.len() > 1;
            a.input
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
                    let table = parse_ngsim(&bytes).with_context(|| format!("{}", p.display()))?;
                    Ok(if many {
                        table.with_recording_id(i as u32 + 1)
                    } else {
                        table
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let raw = RawTrackTable::concat(tables)?;
    let (smooth, dropped) = smooth_and_differentiate(&raw, a.span)?;
    if dropped > 0 {
        eprintln!("dropped {dropped} tracks shorter than three samples");
    }
    let windows = window_extract(&smooth, a.stride)?;
    if windows.is_empty() {
        bail!("no complete 10 s windows in the input");
    }
    write_scenes(&a.out, &windows)?;
    eprintln!("wrote {} windows to {}", windows.len(), a.out.display());
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<()> {
    need_out_parent(&a.out)?;
    let mut cfg = SynthConfig::default();
    if let Some(path) = &a.config {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg.apply_kv_str(&text)
            .with_context(|| format!("{}", path.display()))?;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let windows = window_extract(&generate_synthetic(&cfg)?, a.stride)?;
    if windows.is_empty() {
        bail!("duration_s too short for a 10 s window");
    }
    write_scenes(&a.out, &windows)?;
    eprintln!(
        "wrote {} {} windows to {}",
        windows.len(),
        match cfg.mode {
            SynthMode::ConstantVelocity => "constant-velocity",
            SynthMode::IdmInteracting => "IDM",
        },
        a.out.display()
    );
    Ok(())
}

fn split(a: &SplitArgs) -> Result<()> {
    need_file(&a.input)?;
    let windows = read_scenes(&a.input)?;
    let DatasetSplit { train, val, test } = split_dataset(&windows, a.dataset)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for (name, part) in [
        ("train.csv", &train),
        ("val.csv", &val),
        ("test.csv", &test),
    ] {
        write_scenes(a.out_dir.join(name), part)?;
    }
    eprintln!(
        "train {} / val {} / test {} windows",
        train.len(),
        val.len(),
        test.len()
    );
    Ok(())
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    need_file(&a.train)?;
    need_file(&a.val)?;
    need_out_parent(&a.out)?;
    let mut cfg = TrainConfig::new(a.model.config(), a.model.strategy, a.seed);
    a.run.apply(&mut cfg);
    cfg.validate()?;
    let train_w = read_scenes(&a.train)?;
    let val_w = read_scenes(&a.val)?;
    let out = train(&train_w, &val_w, &cfg)?;
    out.model.save(&a.out)?;
    let best = &out.history[out.best_epoch - 1];
    eprintln!(
        "best epoch {} of {}: validation mean displacement {:.4} m",
        out.best_epoch,
        out.history.len(),
        best.val_mean_displacement
    );
    Ok(())
}

fn metrics_csv(name: &str, m: &Metrics) -> String {
    let mut s = String::from("predictor,vehicles,mean_displ,final_displ");
    for k in 1..=m.per_step.len() {
        s.push_str(&format!(",displ_{k}s"));
    }
    s.push_str(&format!(
        "\n{name},{},{},{}",
        m.count, m.mean_displacement, m.final_displacement
    ));
    for d in m.per_step {
        s.push_str(&format!(",{d}"));
    }
    s.push('\n');
    s
}

fn eval(a: &EvalArgs) -> Result<()> {
    need_file(&a.scenes)?;
    need_out_parent(&a.out)?;
    if let Some(p) = &a.model_file {
        need_file(p)?;
    }
    if let Some(p) = &a.idm_params {
        need_file(p)?;
        if a.baseline.as_deref() != Some("idm") {
            bail!("--idm-params only applies to --baseline idm");
        }
    }
    let predictor: Box<dyn Predictor> = match (&a.model_file, a.baseline.as_deref()) {
        (Some(p), _) => Box::new(Model::load(p)?),
        (None, Some("cvm")) => Box::new(CvmPredictor),
        (None, Some("idm")) => {
            let params = match &a.idm_params {
                Some(p) => IdmParams::load(p)?,
                None => IdmParams::NGSIM,
            };
            Box::new(IdmPredictor::new(params))
        }
        _ => unreachable!("clap enforces one predictor"),
    };
    let windows = read_scenes(&a.scenes)?;
    let m = evaluate_displacement(predictor.as_ref(), &windows)?;
    fs::write(&a.out, metrics_csv(&predictor.name(), &m))
        .with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!(
        "{}: mean displacement {:.4} m, at 5 s {:.4} m over {} vehicles",
        predictor.name(),
        m.mean_displacement,
        m.final_displacement,
        m.count
    );
    Ok(())
}

fn tune(a: &TuneArgs) -> Result<()> {
    need_file(&a.scenes)?;
    need_out_parent(&a.out)?;
    let windows = read_scenes(&a.scenes)?;
    let r = with_threads(a.jobs, || Ok(tune_idm(&windows, a.budget, a.seed)?))?;
    r.params.save(&a.out)?;
    eprintln!(
        "objective {:.4} m after {} candidates",
        r.objective,
        r.evaluated.len()
    );
    Ok(())
}

fn ablate(a: &AblateArgs) -> Result<()> {
    need_dir(&a.scenes_dir)?;
    let paths = ["train.csv", "val.csv", "test.csv"].map(|n| a.scenes_dir.join(n));
    for p in &paths {
        need_file(p)?;
    }
    let [train_w, val_w, test_w] = paths.map(read_scenes);
    let data = DatasetSplit {
        train: train_w?,
        val: val_w?,
        test: test_w?,
    };
    let mut template = TrainConfig::new(
        ModelConfig::gat().with_hidden_dim(a.hidden),
        Strategy::NeighbourConnection,
        0,
    );
    a.run.apply(&mut template);
    template.validate()?;
    let report = with_threads(a.jobs, || Ok(ablation_suite(&data, &template, &a.seeds.0)?))?;
    emit_report(&report, &a.out_dir)?;
    eprintln!(
        "{} runs written to {}",
        report.rows.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => single_thread(|| ingest(a)),
        Command::Synth(a) => single_thread(|| synth(a)),
        Command::Split(a) => single_thread(|| split(a)),
        Command::Train(a) => single_thread(|| train_cmd(a)),
        Command::Eval(a) => single_thread(|| eval(a)),
        Command::TuneIdm(a) => tune(a),
        Command::Ablate(a) => ablate(a),
    }
}

fn main() -> ExitCode {
    let cli = match parse_cli(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("trajgnn: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
