use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use drn::dist::{Bandwidth, Support};
use drn_cli::commands::{
    cmd_check, cmd_eval, cmd_gen_climate_ou, cmd_gen_csv_kde, cmd_gen_shifting_gaussian,
    cmd_train, ModelKind,
};
use drn_cli::config::{load_config_file, resolve_train_config, TrainOverrides};
use drn_cli::sweep::{cmd_sweep, SweepSettings, SweepTask};
use drn_cli::CliError;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "drn",
    about = "Distribution-to-distribution regression: generators, training, evaluation, checks and sweeps",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset file
    Gen {
        #[command(subcommand)]
        generator: Generator,
    },
    /// Train a model and write checkpoint, report CSV and resolved config
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset
    Eval(EvalArgs),
    /// Run the numerical property suites
    Check {
        /// Suite: props, gradcheck, oracle or all
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Run an experiment sweep, resumable long-format CSV
    Sweep(SweepArgs),
}

#[derive(Subcommand)]
enum Generator {
    /// Gaussian whose mean shifts sinusoidally over time
    ShiftingGaussian {
        /// Number of samples
        #[arg(long)]
        n: usize,
        /// Input time steps per sample
        #[arg(long = "T", default_value_t = 3)]
        t_steps: usize,
        #[arg(long, default_value_t = 0.2)]
        dt: f64,
        #[arg(long, default_value_t = 0.1)]
        variance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replace each distribution by a histogram of this many draws
        #[arg(long)]
        degrade_samples: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ornstein-Uhlenbeck heat-flux snapshots (train + test files)
    ClimateOu {
        #[arg(long, default_value_t = 100)]
        n_train: usize,
        #[arg(long, default_value_t = 1000)]
        n_test: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        degrade_samples: Option<usize>,
        #[arg(long)]
        out_train: PathBuf,
        #[arg(long)]
        out_test: PathBuf,
    },
    /// Kernel density estimates of grouped values from a CSV file;
    /// consecutive groups become input→target pairs
    CsvKde {
        #[arg(long)]
        csv: PathBuf,
        /// Support as lower,upper,bins
        #[arg(long)]
        support: String,
        #[arg(long)]
        group_column: String,
        #[arg(long)]
        value_column: String,
        /// "auto" (Silverman) or a fixed bandwidth
        #[arg(long, default_value = "auto")]
        bandwidth: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// drn, rdrn or mlp
    #[arg(long)]
    model: String,
    /// `A - NxB - C` for drn/mlp, `m=<int>` for rdrn
    #[arg(long)]
    arch: String,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    val: PathBuf,
    /// Keep only this many most recent input steps
    #[arg(long)]
    history: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
    /// Flat key = value config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: OverrideFlags,
}

#[derive(Args, Default)]
struct OverrideFlags {
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Mini-batch size; 0 = full batch
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    val_every: Option<usize>,
}

impl OverrideFlags {
    fn to_overrides(&self) -> TrainOverrides {
        TrainOverrides {
            learning_rate: self.lr,
            max_epochs: self.epochs,
            patience: self.patience,
            seed: self.seed,
            batch: self.batch,
            val_every: self.val_every,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated list from jsd, l2, nll
    #[arg(long, default_value = "jsd,l2")]
    metrics: String,
    #[arg(long)]
    history: Option<usize>,
    /// Held-out draws for nll: one row of values per dataset sample
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Metrics CSV output path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// train-size or sample-noise
    experiment: String,
    #[arg(long, default_value = "shifting-gaussian")]
    task: String,
    /// Comma-separated model list from drn, rdrn, mlp
    #[arg(long, default_value = "drn,mlp")]
    models: String,
    /// Training-set sizes, or draws per distribution (0 = full
    /// distributions) for sample-noise
    #[arg(long)]
    sizes: String,
    /// Comma-separated training seeds
    #[arg(long, default_value = "0,1,2,3,4")]
    seeds: String,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    #[arg(long)]
    drn_arch: Option<String>,
    #[arg(long)]
    rdrn_arch: Option<String>,
    #[arg(long)]
    mlp_arch: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: OverrideFlags,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|v| v.trim())
        .filter(|v| !v.is_empty())
        .map(|v| v.parse().map_err(|_| CliError::Usage(format!("bad {what} value {v:?}"))))
        .collect()
}

fn parse_support(s: &str) -> Result<Support, CliError> {
    let parts: Vec<&str> = s.split(',').map(|p| p.trim()).collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "support must be lower,upper,bins, got {s:?}"
        )));
    }
    let lower: f64 =
        parts[0].parse().map_err(|_| CliError::Usage(format!("bad lower bound {:?}", parts[0])))?;
    let upper: f64 =
        parts[1].parse().map_err(|_| CliError::Usage(format!("bad upper bound {:?}", parts[1])))?;
    let q: usize =
        parts[2].parse().map_err(|_| CliError::Usage(format!("bad bin count {:?}", parts[2])))?;
    Support::new(lower, upper, q).map_err(|e| CliError::Usage(e.to_string()))
}

fn file_map(path: &Option<PathBuf>) -> Result<BTreeMap<String, String>, CliError> {
    match path {
        Some(p) => load_config_file(p),
        None => Ok(BTreeMap::new()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen { generator } => match generator {
            Generator::ShiftingGaussian { n, t_steps, dt, variance, seed, degrade_samples, out } => {
                cmd_gen_shifting_gaussian(n, t_steps, dt, variance, seed, degrade_samples, &out)
            }
            Generator::ClimateOu { n_train, n_test, seed, degrade_samples, out_train, out_test } => {
                cmd_gen_climate_ou(n_train, n_test, seed, degrade_samples, &out_train, &out_test)
            }
            Generator::CsvKde { csv, support, group_column, value_column, bandwidth, out } => {
                let support = parse_support(&support)?;
                let bandwidth = match bandwidth.as_str() {
                    "auto" => Bandwidth::Auto,
                    v => Bandwidth::Fixed(v.parse().map_err(|_| {
                        CliError::Usage(format!("bandwidth must be \"auto\" or a number, got {v:?}"))
                    })?),
                };
                cmd_gen_csv_kde(&csv, support, &group_column, &value_column, bandwidth, &out)
            }
        },
        Command::Train(args) => {
            let kind: ModelKind = args.model.parse()?;
            let file = file_map(&args.config)?;
            let config = resolve_train_config(&file, &args.overrides.to_overrides())?;
            cmd_train(kind, &args.arch, &args.train, &args.val, args.history, &config, &args.out_dir)
        }
        Command::Eval(args) => cmd_eval(
            &args.checkpoint,
            &args.data,
            &args.metrics,
            args.history,
            args.samples.as_deref(),
            args.out.as_deref(),
        ),
        Command::Check { suite, seed } => cmd_check(&suite, seed),
        Command::Sweep(args) => {
            let file = file_map(&args.config)?;
            let config = resolve_train_config(&file, &args.overrides.to_overrides())?;
            let models = args
                .models
                .split(',')
                .map(|m| m.trim().parse())
                .collect::<Result<Vec<ModelKind>, _>>()?;
            let settings = SweepSettings {
                task: args.task.parse::<SweepTask>()?,
                models,
                sizes: parse_list(&args.sizes, "size")?,
                seeds: parse_list(&args.seeds, "seed")?,
                data_seed: args.data_seed,
                drn_arch: args.drn_arch,
                rdrn_arch: args.rdrn_arch,
                mlp_arch: args.mlp_arch,
                config,
            };
            cmd_sweep(&args.experiment, &settings, &args.out)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
