mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use endsel::classifiers::ClassifierKind;
use endsel::evaluation::split::SplitUnit;
use endsel::evaluation::SplitStrategy;
use endsel::features::Extractor;
use endsel::ranking::RankingMethod;
use endsel::ErrorCategory;

use config::{parse_name, ConfigError, RunConfig, CONFIG_KEYS};

#[derive(Parser, Debug)]
#[command(
    name = "endsel",
    version,
    about = "Entropy-difference EEG channel selection and ADHD detection"
)]
#[command(after_long_help = CONFIG_KEYS)]
struct Cli {
    /// JSON run configuration; see --help for the keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labelled synthetic dataset with planted channels
    Synth(SynthArgs),
    /// Rank channels by entropy and by entropy difference
    Rank(DataArgs),
    /// Write the feature matrix of the top-ranked channels
    Extract(RunArgs),
    /// Evaluate one configuration, or the whole grid with --grid
    Run(RunArgs),
    /// Accuracy against channel count for both ranking methods
    Sweep(RunArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    n_per_class: Option<usize>,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    n_channels: Option<usize>,
    /// Comma-separated channel indices
    #[arg(long, value_delimiter = ',')]
    planted: Option<Vec<usize>>,
    #[arg(long)]
    effect_size: Option<f64>,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Dataset manifest; without one the config's synth spec is used
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    window_len: Option<usize>,
    #[arg(long)]
    entropy_bins: Option<usize>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = parse_name::<RankingMethod>)]
    method: Option<RankingMethod>,
    #[arg(long, value_parser = parse_name::<Extractor>)]
    extractor: Option<Extractor>,
    #[arg(long, value_parser = parse_name::<ClassifierKind>)]
    classifier: Option<ClassifierKind>,
    #[arg(long)]
    n_channels: Option<usize>,
    #[arg(long, value_parser = parse_name::<SplitStrategy>)]
    strategy: Option<SplitStrategy>,
    #[arg(long, value_parser = parse_name::<SplitUnit>)]
    unit: Option<SplitUnit>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    knn_k: Option<usize>,
    /// Evaluate every combination of the config's grid axes
    #[arg(long)]
    grid: bool,
}

fn resolve(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    match &cli.command {
        Command::Synth(a) => {
            let spec = cfg.synth.get_or_insert_with(commands::default_synth_spec);
            set(&mut spec.n_per_class, a.n_per_class);
            set(&mut spec.n_samples, a.n_samples);
            set(&mut spec.n_channels, a.n_channels);
            set(&mut spec.planted_channels, a.planted.clone());
            set(&mut spec.effect_size, a.effect_size);
        }
        Command::Rank(d) => apply_data(&mut cfg, d),
        Command::Extract(r) | Command::Run(r) | Command::Sweep(r) => {
            apply_data(&mut cfg, &r.data);
            let p = &mut cfg.pipeline;
            set(&mut p.method, r.method);
            set(&mut p.extractor, r.extractor);
            set(&mut p.classifier, r.classifier);
            set(&mut p.n_channels, r.n_channels);
            set(&mut p.classifier_params.knn_k, r.knn_k);
            set(&mut cfg.split.strategy, r.strategy);
            set(&mut cfg.split.unit, r.unit);
            set(&mut cfg.split.folds, r.folds);
            set(&mut cfg.split.repeats, r.repeats);
        }
    }
    // one master seed drives every stage
    cfg.split.seed = cfg.seed;
    Ok(cfg)
}

fn apply_data(cfg: &mut RunConfig, d: &DataArgs) {
    if d.dataset.is_some() {
        cfg.dataset = d.dataset.clone();
    }
    set(&mut cfg.window_len, d.window_len);
    set(&mut cfg.pipeline.entropy_bins, d.entropy_bins);
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<endsel::Error>().map(endsel::Error::category) {
        Some(ErrorCategory::Config) => 2,
        Some(ErrorCategory::Numerical) => 4,
        _ => 3,
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = resolve(cli)?;
    cfg.validate()?;
    if let Some(n) = cfg.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Synth(_) => commands::synth(&cfg),
        Command::Rank(_) => commands::rank(&cfg),
        Command::Extract(_) => commands::extract(&cfg),
        Command::Run(r) => commands::run(&cfg, r.grid),
        Command::Sweep(_) => commands::sweep(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // core errors already embed their source in the message
            let mut msg = String::new();
            for cause in err.chain().map(ToString::to_string) {
                if !msg.contains(&cause) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&cause);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(&err))
        }
    }
}
