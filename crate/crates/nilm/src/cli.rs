//! The `nilm` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 over budget with
//! `--strict-budget`. Results go to `--out` files or stdout; the resolved
//! seed and other status lines go to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use nilm_core::cost::{cost_report, CostProfile, CostReport, ExtractionOptions, FeatureGroups, ModelShape, CORTEX_M4_PAPER};
use nilm_core::events::{DeltaSign, DEFAULT_THRESHOLD_W};
use nilm_core::features::{FeatureExtractor, FeatureLayout};
use nilm_core::models::{Kernel, ModelKind, TrainedModel};
use nilm_core::pipeline::{classify_stream, Mode, Outcome, PipelineConfig};
use nilm_core::rng::child_seed;
use nilm_core::scenarios::{scenario_dataset, scenario_script, ScenarioKind};
use nilm_core::signal::synth_scenario;
use nilm_core::train::{
    evaluate, fit, grid_search, mda_rank, split_dataset, sweep_feature_count, Dataset, Evaluation, GridResult, GridSpec,
    MdaReport, MlpParams, ModelSpec, RfParams, SvmParams, SweepConfig,
};
use serde::Serialize;

use crate::dataset_file::{load_dataset, save_dataset};
use crate::model_file::{self, ModelFile, ModelMeta};
use crate::profile_file::{resolve_profile, save_profile};
use crate::reports;
use crate::samples::{load_samples, save_samples, SampleFormat};
use crate::script::{load_script, save_script};

pub const DEFAULT_SEED: u64 = 2021;

#[derive(Debug, Parser)]
#[command(name = "nilm", version, about = "Synthesize, featurize, train, sweep and cost edge NILM pipelines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scenario script into a sample stream plus a per-window label
    /// track, or generate a labelled feature dataset.
    Synth(SynthArgs),
    /// Write the 103-entry feature vector of every window of a sample stream.
    Extract(ExtractArgs),
    /// Train one model, evaluate it on a held-out split and save it.
    Train(TrainArgs),
    /// Rank features by mean decrease accuracy.
    Mda(MdaArgs),
    /// Grow the input one ranked feature at a time and pick the operating point.
    Sweep(SweepArgs),
    /// Run the online pipeline over a sample stream and log every event.
    Classify(ClassifyArgs),
    /// Estimate MACs, cycles, Flash and SRAM against a cost profile.
    Cost(CostArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Master seed; every random stream is derived from it.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Cost profile: a built-in name or a TOML profile file.
    #[arg(long, default_value = CORTEX_M4_PAPER)]
    pub profile: String,
    /// Output file; stdout when omitted and the command allows it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sample file format; inferred from the extension (`.bin`, `.nilm`) when omitted.
    #[arg(long, value_enum)]
    pub format: Option<SampleFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    SingleAppliance,
    MultiAppliance,
    FrequencyOnly,
}

impl From<ScenarioArg> for ScenarioKind {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::SingleAppliance => ScenarioKind::SingleAppliance,
            ScenarioArg::MultiAppliance => ScenarioKind::MultiAppliance,
            ScenarioArg::FrequencyOnly => ScenarioKind::FrequencyOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Knn,
    Svm,
    Mlp,
    Rf,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Knn => ModelKind::Knn,
            KindArg::Svm => ModelKind::Svm,
            KindArg::Mlp => ModelKind::Mlp,
            KindArg::Rf => ModelKind::Rf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Single,
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureSet {
    All,
    /// P, |S| and Q.
    Time,
    /// The harmonic entries.
    Frequency,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    /// TOML scenario script with its appliance registry.
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    pub script: Option<PathBuf>,
    /// Built-in synthetic scenario.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    /// Switching events in a built-in scenario stream.
    #[arg(long, default_value_t = 10)]
    pub events: usize,
    /// Write a labelled feature dataset (CSV plus `.meta.json`) instead of a stream.
    #[arg(long, requires = "scenario")]
    pub dataset: bool,
    /// Dataset size: instances per class, or scenario runs for multi-appliance.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub size: u64,
    /// Label track CSV; defaults to `<out>.labels.csv`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Also save the generating script of a built-in scenario as TOML.
    #[arg(long)]
    pub save_script: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub common: Common,
    /// Sample stream (`t_s,v,i` CSV or binary).
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset CSV with its `.meta.json` sidecar.
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    pub data: Option<PathBuf>,
    /// Generate a synthetic dataset instead.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    /// Synthetic dataset size: instances per class, or scenario runs for multi-appliance.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub size: u64,
    /// Training fraction of the stratified split.
    #[arg(long, default_value_t = 0.8, value_parser = fraction)]
    pub split: f64,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model family.
    #[arg(long, value_enum)]
    pub model: KindArg,
    /// kNN neighbours.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    /// SVM box constraint.
    #[arg(long, default_value_t = 10.0, value_parser = positive)]
    pub c: f64,
    /// RBF kernel width.
    #[arg(long, default_value_t = 0.1, value_parser = positive)]
    pub gamma: f64,
    /// SVM kernel.
    #[arg(long, value_enum, default_value_t = KernelArg::Rbf)]
    pub kernel: KernelArg,
    /// MLP hidden layer sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [800usize, 100])]
    pub hidden: Vec<usize>,
    /// MLP learning rate.
    #[arg(long, default_value_t = 0.01, value_parser = positive)]
    pub lr: f64,
    /// MLP epochs.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub epochs: u64,
    /// MLP mini-batch size.
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch: u64,
    /// RF trees.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub trees: u64,
    /// RF depth limit; unlimited when omitted.
    #[arg(long)]
    pub max_depth: Option<usize>,
}

impl ModelArgs {
    pub fn spec(&self) -> ModelSpec {
        match self.model {
            KindArg::Knn => ModelSpec::Knn { k: self.k as usize },
            KindArg::Svm => {
                let kernel = match self.kernel {
                    KernelArg::Linear => Kernel::Linear,
                    KernelArg::Rbf => Kernel::Rbf { gamma: self.gamma },
                };
                ModelSpec::Svm(SvmParams::new(self.c, kernel))
            }
            KindArg::Mlp => ModelSpec::Mlp(MlpParams {
                hidden: self.hidden.clone(),
                learning_rate: self.lr,
                epochs: self.epochs as usize,
                batch_size: self.batch as usize,
            }),
            KindArg::Rf => ModelSpec::Rf(RfParams {
                n_trees: self.trees as usize,
                max_depth: self.max_depth,
            }),
        }
    }
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Grid file (TOML) overriding the default hyperparameter axes.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(2..))]
    pub folds: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Grid-search the hyperparameters instead of using the flags.
    #[arg(long)]
    pub tune: bool,
    /// Features to use: comma-separated indices or names.
    #[arg(long, value_delimiter = ',', conflicts_with = "feature_set")]
    pub features: Vec<String>,
    /// Feature family to use.
    #[arg(long, value_enum, default_value_t = FeatureSet::All)]
    pub feature_set: FeatureSet,
    /// Keep only the top M features of an MDA ranking of the chosen set.
    #[arg(long, value_name = "M", value_parser = clap::value_parser!(u64).range(1..))]
    pub mda_top: Option<u64>,
    /// Shuffle repetitions for `--mda-top`.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub repetitions: u64,
    /// Metrics JSON; defaults to `<out>.metrics.json`.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Exit with status 3 when the model does not fit the profile.
    #[arg(long)]
    pub strict_budget: bool,
}

#[derive(Debug, Args)]
pub struct MdaArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Shuffle repetitions per feature.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub repetitions: u64,
    /// Ranking CSV (`rank,feature,name,importance`).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Train the flag hyperparameters at every point instead of re-tuning.
    #[arg(long)]
    pub fast: bool,
    /// Feature counts to evaluate, comma separated; every count when omitted.
    #[arg(long, value_delimiter = ',')]
    pub counts: Vec<usize>,
    /// Accuracy drop tolerated against the sweep maximum.
    #[arg(long, default_value_t = 0.05, value_parser = fraction)]
    pub tolerance: f64,
    /// Shuffle repetitions of the MDA ranking.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub repetitions: u64,
    /// Cost the FFT with bit-reversal reordering.
    #[arg(long)]
    pub reorder_fft: bool,
    /// Per-point CSV; defaults to `<out>` with a `.csv` extension.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Also write the MDA ranking as JSON.
    #[arg(long)]
    pub mda_out: Option<PathBuf>,
    /// Exit with status 3 when the chosen point does not fit the profile.
    #[arg(long)]
    pub strict_budget: bool,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Model file (binary, or `.json` export).
    #[arg(long)]
    pub model: PathBuf,
    /// Sample stream (`t_s,v,i` CSV or binary).
    #[arg(long)]
    pub input: PathBuf,
    /// Label single-appliance events from their window, or multi-appliance
    /// events from their differential vector.
    #[arg(long, value_enum, default_value_t = ModeArg::Multi)]
    pub mode: ModeArg,
    /// Real-power step that counts as an event, in watts.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_W, value_parser = positive)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[command(flatten)]
    pub common: Common,
    /// Model file to cost.
    #[arg(long, conflicts_with = "shape")]
    pub model: Option<PathBuf>,
    /// Model shape for what-if costing, e.g. `svm:f=103,sv=1950,classes=10`,
    /// `mlp:100-800-100-5`, `knn:f=5,n=500,k=3,classes=7` or
    /// `rf:trees=100,nodes=1342,depth=513,classes=7`.
    #[arg(long, value_parser = parse_shape)]
    pub shape: Option<ModelShape>,
    /// Extraction groups for `--shape`: `all`, `time`, `frequency` or a
    /// comma list of `p`, `s`, `q`, `h`.
    #[arg(long, value_parser = parse_groups)]
    pub groups: Option<FeatureGroups>,
    /// Cost the FFT with bit-reversal reordering.
    #[arg(long)]
    pub reorder_fft: bool,
    /// Write the resolved profile as TOML to this file and exit.
    #[arg(long)]
    pub export_profile: Option<PathBuf>,
    /// Exit with status 3 when the cost does not fit the profile.
    #[arg(long)]
    pub strict_budget: bool,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() && x > 0.0 => Ok(x),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn fraction(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x < 1.0 => Ok(x),
        _ => Err(format!("`{s}` is not strictly between 0 and 1")),
    }
}

/// `kind:key=value,…`, or `mlp:a-b-…`.
pub fn parse_shape(s: &str) -> Result<ModelShape, String> {
    let (kind, rest) = s.split_once(':').ok_or("expected `kind:parameters`")?;
    if kind == "mlp" {
        let sizes = rest
            .split('-')
            .map(|x| x.parse::<usize>().map_err(|_| format!("bad layer size `{x}`")))
            .collect::<Result<Vec<_>, _>>()?;
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err("an MLP needs at least two positive layer sizes".into());
        }
        return Ok(ModelShape::Mlp { sizes });
    }
    let mut fields = std::collections::BTreeMap::new();
    let mut rbf = false;
    for part in rest.split(',') {
        match part.split_once('=') {
            Some((k, v)) => {
                let v: usize = v.parse().map_err(|_| format!("bad value in `{part}`"))?;
                fields.insert(k, v);
            }
            None if part == "rbf" => rbf = true,
            None => return Err(format!("expected `key=value`, got `{part}`")),
        }
    }
    let mut get = |k: &str| fields.remove(k).ok_or(format!("missing `{k}=`"));
    let shape = match kind {
        "svm" => ModelShape::Svm {
            n_features: get("f")?,
            n_sv: get("sv")?,
            n_classes: get("classes")?,
            rbf,
        },
        "knn" => ModelShape::Knn {
            n_features: get("f")?,
            n_rows: get("n")?,
            k: get("k")?,
            n_classes: get("classes")?,
        },
        "rf" => ModelShape::Rf {
            n_trees: get("trees")?,
            node_count: get("nodes")?,
            depth_sum: get("depth")?,
            n_classes: get("classes")?,
        },
        other => return Err(format!("unknown model kind `{other}`")),
    };
    match fields.keys().next() {
        Some(k) => Err(format!("unknown key `{k}`")),
        None => Ok(shape),
    }
}

pub fn parse_groups(s: &str) -> Result<FeatureGroups, String> {
    match s {
        "all" => return Ok(FeatureGroups::ALL),
        "frequency" => return Ok(FeatureGroups::FREQUENCY_ONLY),
        "time" => return Ok(FeatureGroups { harmonics: false, ..FeatureGroups::ALL }),
        _ => {}
    }
    let mut g = FeatureGroups::default();
    for part in s.split(',') {
        match part {
            "p" => g.p = true,
            "s" => g.s_abs = true,
            "q" => g.q = true,
            "h" => g.harmonics = true,
            other => return Err(format!("unknown feature group `{other}`")),
        }
    }
    Ok(g)
}

/// Failures, split by exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Data(e.into())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Whether a finished command met its budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    OverBudget,
}

type CliResult<T = Status> = Result<T, CliError>;

/// Parse `args` (program name first) and run; returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(Status::Done) => 0,
        Ok(Status::OverBudget) => 3,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Extract(a) => extract(a),
        Command::Train(a) => train(a),
        Command::Mda(a) => mda(a),
        Command::Sweep(a) => sweep(a),
        Command::Classify(a) => classify(a),
        Command::Cost(a) => cost(a),
    }
}

/// Markdown reference of every subcommand's flags.
pub fn reference_markdown() -> String {
    let mut cmd = Cli::command().term_width(100);
    let mut out = String::from("# `nilm` command reference\n\nGenerated from the argument definitions.\n");
    out += &format!("\n## nilm\n\n```text\n{}\n```\n", cmd.render_long_help().to_string().trim_end());
    for sub in cmd.get_subcommands_mut() {
        let name = sub.get_name().to_string();
        if name == "help" {
            continue;
        }
        let help = sub.clone().bin_name(format!("nilm {name}")).render_long_help();
        out += &format!("\n## nilm {name}\n\n```text\n{}\n```\n", help.to_string().trim_end());
    }
    out
}

fn status(line: impl AsRef<str>) {
    eprintln!("{}", line.as_ref());
}

fn echo_seed(seed: u64) {
    status(format!("seed: {seed}"));
}

fn check_input(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Data(anyhow::anyhow!("{}: no such input file", path.display())))
    }
}

fn check_output(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(CliError::Data(anyhow::anyhow!("{}: output directory does not exist", dir.display())))
        }
        _ => Ok(()),
    }
}

fn required_out(common: &Common) -> CliResult<&Path> {
    let out = common.out.as_deref().ok_or_else(|| usage("this command needs --out"))?;
    check_output(out)?;
    Ok(out)
}

/// `path` with `suffix` appended to its file name.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => reports::write_text(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn sample_format(common: &Common, path: &Path) -> SampleFormat {
    common.format.unwrap_or_else(|| SampleFormat::from_path(path))
}

fn load_profile(common: &Common) -> CliResult<CostProfile> {
    Ok(resolve_profile(&common.profile)?)
}

fn synth(a: SynthArgs) -> CliResult {
    let seed = a.common.seed;
    let out = required_out(&a.common)?;
    if let Some(p) = &a.script {
        check_input(p)?;
    }
    for p in [&a.labels, &a.save_script].into_iter().flatten() {
        check_output(p)?;
    }
    echo_seed(seed);
    if a.dataset {
        let kind = ScenarioKind::from(a.scenario.expect("clap requires --scenario"));
        let d = scenario_dataset(kind, a.size as usize, &FeatureLayout::default(), seed)?;
        save_dataset(&d, out)?;
        status(format!("{} instances, {} classes -> {}", d.len(), d.n_classes(), out.display()));
        return Ok(Status::Done);
    }
    let (script, registry) = match (&a.script, a.scenario) {
        (Some(p), _) => load_script(p)?,
        (None, Some(kind)) => scenario_script(kind.into(), a.events, seed),
        (None, None) => unreachable!("clap requires --script or --scenario"),
    };
    if let Some(p) = &a.save_script {
        save_script(&script, &registry, p)?;
    }
    let scenario = synth_scenario(&script, &registry, child_seed(seed, "noise", 0))?;
    save_samples(&scenario.stream, out, sample_format(&a.common, out))?;
    let labels = a.labels.unwrap_or_else(|| sibling(out, ".labels.csv"));
    reports::write_text(&labels, &reports::label_track_csv(&scenario.labels))?;
    status(format!(
        "{} samples, {} windows, {} events -> {}",
        scenario.stream.len(),
        scenario.labels.windows.len(),
        scenario.labels.events.len(),
        out.display()
    ));
    Ok(Status::Done)
}

fn extract(a: ExtractArgs) -> CliResult {
    check_input(&a.input)?;
    if let Some(p) = &a.common.out {
        check_output(p)?;
    }
    echo_seed(a.common.seed);
    let stream = load_samples(&a.input, sample_format(&a.common, &a.input))?;
    let layout = FeatureLayout::default();
    let extractor = FeatureExtractor::new(layout.clone());
    let features: Vec<_> = stream.windows().map(|w| extractor.extract(&w)).collect();
    emit(a.common.out.as_deref(), &reports::features_csv(&features, &layout))?;
    status(format!("{} windows", features.len()));
    Ok(Status::Done)
}

fn load_data(d: &DataArgs, seed: u64) -> CliResult<Dataset> {
    match (&d.data, d.scenario) {
        (Some(p), _) => Ok(load_dataset(p)?),
        (None, Some(kind)) => Ok(scenario_dataset(kind.into(), d.size as usize, &FeatureLayout::default(), seed)?),
        (None, None) => unreachable!("clap requires --data or --scenario"),
    }
}

fn split(d: &DataArgs, seed: u64) -> CliResult<(Dataset, Dataset)> {
    if let Some(p) = &d.data {
        check_input(p)?;
    }
    let data = load_data(d, seed)?;
    Ok(split_dataset(&data, d.split, child_seed(seed, "split", 0))?)
}

fn load_grid(g: &GridArgs) -> CliResult<GridSpec> {
    match &g.grid {
        None => Ok(GridSpec::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))?;
            toml::from_str(&text).map_err(|e| CliError::Data(anyhow::anyhow!("{}: {}", p.display(), e.message())))
        }
    }
}

fn resolve_features(names: &[String], d: &Dataset) -> CliResult<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            n.parse::<usize>()
                .ok()
                .or_else(|| d.feature_names().iter().position(|f| f == n))
                .filter(|&k| k < d.n_features())
                .ok_or_else(|| usage(format!("unknown feature `{n}`")))
        })
        .collect()
}

fn model_cost(model: &TrainedModel, profile: &CostProfile, options: ExtractionOptions) -> CostReport {
    let layout = FeatureLayout::new(model.harmonic_mode);
    let groups = FeatureGroups::from_selection(&model.selected, &layout);
    cost_report(groups, &ModelShape::from(&model.classifier), profile, options)
}

#[derive(Serialize)]
struct TrainReport<'a> {
    seed: u64,
    provenance: &'a str,
    spec: &'a ModelSpec,
    selected: &'a [usize],
    feature_names: Vec<&'a str>,
    train_size: usize,
    test_size: usize,
    evaluation: &'a Evaluation,
    cost: &'a CostReport,
    grid: Option<&'a GridResult>,
    mda: Option<&'a MdaReport>,
}

fn train(a: TrainArgs) -> CliResult {
    let seed = a.common.seed;
    let out = required_out(&a.common)?;
    if let Some(p) = &a.metrics {
        check_output(p)?;
    }
    if let Some(p) = &a.grid.grid {
        check_input(p)?;
    }
    let profile = load_profile(&a.common)?;
    let grid = load_grid(&a.grid)?;
    echo_seed(seed);
    let (train, test) = split(&a.data, seed)?;
    let mut selected = if a.features.is_empty() {
        match a.feature_set {
            FeatureSet::All => (0..train.n_features()).collect(),
            FeatureSet::Time => (0..train.n_features().min(3)).collect(),
            FeatureSet::Frequency => (3.min(train.n_features())..train.n_features()).collect(),
        }
    } else {
        resolve_features(&a.features, &train)?
    };
    let spec = a.model.spec();
    let mut mda = None;
    if let Some(m) = a.mda_top {
        let report = mda_rank(&train, &test, &spec, a.repetitions as usize, child_seed(seed, "mda", 0))?;
        selected = report
            .ranking
            .iter()
            .copied()
            .filter(|k| selected.contains(k))
            .take(m as usize)
            .collect();
        mda = Some(report);
    }
    let tuned = if a.tune {
        let kind = ModelKind::from(a.model.model);
        Some(grid_search(&train, &selected, kind, &grid, a.grid.folds as usize, child_seed(seed, "grid", 0))?)
    } else {
        None
    };
    let spec = tuned.as_ref().map_or(spec, |g| g.best.clone());
    let model = fit(&train, &selected, &spec, child_seed(seed, "fit", 0))?;
    let evaluation = evaluate(&model, &test)?;
    let cost = model_cost(&model, &profile, ExtractionOptions::default());
    let file = ModelFile {
        meta: ModelMeta {
            seed,
            spec: serde_json::to_string(&spec)?,
            provenance: train.provenance().to_string(),
        },
        model,
    };
    if out.extension().is_some_and(|e| e == "json") {
        reports::write_text(out, &model_file::to_json(&file))?;
    } else {
        model_file::save_model(&file, out)?;
    }
    let report = TrainReport {
        seed,
        provenance: train.provenance(),
        spec: &spec,
        selected: &selected,
        feature_names: selected.iter().map(|&k| train.feature_names()[k].as_str()).collect(),
        train_size: train.len(),
        test_size: test.len(),
        evaluation: &evaluation,
        cost: &cost,
        grid: tuned.as_ref(),
        mda: mda.as_ref(),
    };
    let metrics = a.metrics.unwrap_or_else(|| sibling(out, ".metrics.json"));
    reports::write_json(&metrics, &report)?;
    print!("{}", reports::metrics_text(&evaluation, train.classes()));
    print!("{}", reports::cost_table(&cost));
    Ok(budget_status(a.strict_budget, cost.verdict.fits()))
}

fn budget_status(strict: bool, fits: bool) -> Status {
    if strict && !fits {
        Status::OverBudget
    } else {
        Status::Done
    }
}

fn mda(a: MdaArgs) -> CliResult {
    let seed = a.common.seed;
    let out = required_out(&a.common)?;
    if let Some(p) = &a.csv {
        check_output(p)?;
    }
    echo_seed(seed);
    let (train, test) = split(&a.data, seed)?;
    let report = mda_rank(&train, &test, &a.model.spec(), a.repetitions as usize, child_seed(seed, "mda", 0))?;
    reports::write_json(out, &report)?;
    let csv = reports::mda_csv(&report);
    if let Some(p) = &a.csv {
        reports::write_text(p, &csv)?;
    }
    println!("baseline accuracy {:.4}", report.baseline_accuracy);
    for line in csv.lines().skip(1).take(10) {
        println!("{line}");
    }
    Ok(Status::Done)
}

fn sweep(a: SweepArgs) -> CliResult {
    let seed = a.common.seed;
    let out = required_out(&a.common)?;
    let csv = a.csv.clone().unwrap_or_else(|| out.with_extension("csv"));
    check_output(&csv)?;
    if let Some(p) = &a.mda_out {
        check_output(p)?;
    }
    if let Some(p) = &a.grid.grid {
        check_input(p)?;
    }
    let profile = load_profile(&a.common)?;
    let grid = load_grid(&a.grid)?;
    echo_seed(seed);
    let (train, test) = split(&a.data, seed)?;
    let spec = a.model.spec();
    let mda = mda_rank(&train, &test, &spec, a.repetitions as usize, child_seed(seed, "mda", 0))?;
    let config = SweepConfig {
        feature_counts: (!a.counts.is_empty()).then(|| a.counts.clone()),
        drop_tolerance: a.tolerance,
        folds: a.grid.folds as usize,
        fixed: a.fast.then(|| spec.clone()),
        extraction: ExtractionOptions {
            reorder_fft: a.reorder_fft,
        },
    };
    let kind = ModelKind::from(a.model.model);
    let report = sweep_feature_count(&train, &test, kind, &grid, &mda, &profile, &config, child_seed(seed, "sweep", 0))?;
    reports::write_json(out, &report)?;
    reports::write_text(&csv, &reports::sweep_csv(&report))?;
    if let Some(p) = &a.mda_out {
        reports::write_json(p, &mda)?;
    }
    print!("{}", reports::sweep_text(&report));
    Ok(budget_status(a.strict_budget, report.feasible))
}

fn read_model(path: &Path) -> CliResult<ModelFile> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        Ok(model_file::from_json(&text)?)
    } else {
        Ok(model_file::load_model(path)?)
    }
}

fn classify(a: ClassifyArgs) -> CliResult {
    check_input(&a.model)?;
    check_input(&a.input)?;
    if let Some(p) = &a.common.out {
        check_output(p)?;
    }
    echo_seed(a.common.seed);
    let file = read_model(&a.model)?;
    let stream = load_samples(&a.input, sample_format(&a.common, &a.input))?;
    let mode = match a.mode {
        ModeArg::Single => Mode::Single,
        ModeArg::Multi => Mode::Multi,
    };
    let config = PipelineConfig {
        threshold_w: a.threshold,
        sign: DeltaSign::default(),
    };
    let decisions = classify_stream(&file.model, &stream, mode, config)?;
    emit(a.common.out.as_deref(), &reports::event_log_csv(&decisions, &file.model))?;
    let count = |f: fn(&Outcome) -> bool| decisions.iter().filter(|d| f(&d.outcome)).count();
    status(format!(
        "{} events: {} labelled, {} invalid, {} pending",
        decisions.len(),
        count(|o| matches!(o, Outcome::Label(_))),
        count(|o| *o == Outcome::Invalid),
        count(|o| *o == Outcome::Pending)
    ));
    Ok(Status::Done)
}

fn cost(a: CostArgs) -> CliResult {
    if let Some(p) = &a.model {
        check_input(p)?;
    }
    if let Some(p) = &a.common.out {
        check_output(p)?;
    }
    let profile = load_profile(&a.common)?;
    echo_seed(a.common.seed);
    if let Some(p) = &a.export_profile {
        check_output(p)?;
        save_profile(&profile, p)?;
        status(format!("profile {} -> {}", profile.name, p.display()));
        return Ok(Status::Done);
    }
    let options = ExtractionOptions {
        reorder_fft: a.reorder_fft,
    };
    let report = match (&a.model, &a.shape) {
        (Some(p), _) => {
            if a.groups.is_some() {
                return Err(usage("--groups applies to --shape; a model's groups follow its selected features"));
            }
            model_cost(&read_model(p)?.model, &profile, options)
        }
        (None, Some(shape)) => cost_report(a.groups.unwrap_or(FeatureGroups::ALL), shape, &profile, options),
        (None, None) => return Err(usage("cost needs --model, --shape or --export-profile")),
    };
    if let Some(p) = &a.common.out {
        reports::write_json(p, &report)?;
    }
    print!("{}", reports::cost_table(&report));
    Ok(budget_status(a.strict_budget, report.verdict.fits()))
}
