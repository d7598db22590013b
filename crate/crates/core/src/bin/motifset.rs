use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use motifset::experiment::{self, ExperimentConfig};
use motifset::metrics;
use motifset::network::load_checkpoint;
use motifset::{Error, Result};

#[derive(Parser)]
#[command(name = "motifset", version, about = "Motif-block sparse MLP experiments")]
struct Cli {
    /// Output directory (defaults to `output.dir` from the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config file (a run manifest also works).
    #[arg(long, short)]
    config: PathBuf,
    /// Override a config key, e.g. `--set training.epochs=5`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Use this seed for every purpose.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    motif_size: Option<usize>,
}

#[derive(Args)]
struct PairArgs {
    /// Baseline manifest or run directory.
    #[arg(long)]
    baseline: PathBuf,
    /// Variant manifest or run directory.
    #[arg(long)]
    variant: PathBuf,
    /// Score multiply-accumulate counts instead of wall-clock time.
    #[arg(long)]
    use_flops: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Load, preprocess and cache a dataset as `dataset.bin`.
    Prepare(ConfigArgs),
    /// Train a network and write metrics, checkpoint and manifest.
    Train(ConfigArgs),
    /// Comprehensive score of a variant run against a baseline run.
    Score {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = metrics::DEFAULT_W_EFF)]
        w_eff: f64,
        /// Defaults to `1 - w_eff`.
        #[arg(long)]
        w_acc: Option<f64>,
    },
    /// Score over a grid of efficiency weights and report the crossover.
    Sweep {
        #[command(flatten)]
        pair: PairArgs,
        /// Grid step on [0, 1].
        #[arg(long, default_value_t = 0.01, conflicts_with = "grid")]
        step: f64,
        /// Explicit comma-separated grid.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Write the block topology of a config or checkpoint as text.
    ExportTopology {
        /// Read the topology from a checkpoint instead of building it from a config.
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        checkpoint: Option<PathBuf>,
        #[arg(long, short)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        overrides: Vec<String>,
    },
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut overrides = self.overrides.clone();
        if let Some(e) = self.epochs {
            overrides.push(format!("training.epochs={e}"));
        }
        if let Some(m) = self.motif_size {
            overrides.push(format!("model.motif_size={m}"));
        }
        let mut cfg = ExperimentConfig::from_file(&self.config, &overrides)?;
        if let Some(s) = self.seed {
            cfg.seeds.reset(s);
            cfg = ExperimentConfig::parse(&cfg.to_toml_string(), Path::new("/"), &[])?;
        }
        Ok(cfg)
    }
}

fn out_dir(cli_out: &Option<PathBuf>, cfg: Option<&ExperimentConfig>) -> Result<PathBuf> {
    cli_out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.dir.clone()))
        .ok_or_else(|| Error::Config("no output directory: pass --out or set output.dir".into()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare(args) => {
            let cfg = args.load()?;
            let (ds, path) = experiment::run_prepare(&cfg, &out_dir(&cli.out, Some(&cfg))?)?;
            println!(
                "{}: {} train / {} test x {} features, {} classes",
                path.display(),
                ds.x_train.nrows(),
                ds.x_test.nrows(),
                ds.n_features,
                ds.n_classes
            );
        }
        Command::Train(args) => {
            let cfg = args.load()?;
            let out = out_dir(&cli.out, Some(&cfg))?;
            let outcome = experiment::run_train(&cfg, &out)?;
            let m = &outcome.measurement;
            println!(
                "final accuracy {:.4}, {:.1}s, {} MACs -> {}",
                m.final_accuracy,
                m.total_time_s,
                m.flop_count,
                out.display()
            );
        }
        Command::Score { pair, w_eff, w_acc } => {
            let r = experiment::run_score(
                &pair.baseline,
                &pair.variant,
                w_eff,
                w_acc.unwrap_or(1.0 - w_eff),
                pair.use_flops,
                cli.out.as_deref(),
            )?;
            print!("{}", metrics::score_csv(&[r]));
        }
        Command::Sweep { pair, step, grid } => {
            let grid = grid.unwrap_or_else(|| metrics::weight_grid(step));
            let s = experiment::run_sweep(&pair.baseline, &pair.variant, &grid, pair.use_flops, cli.out.as_deref())?;
            print!("{}", metrics::score_csv(&s.reports));
            match s.crossover {
                Some(w) => println!("crossover w_eff = {w}"),
                None => println!("crossover: none on grid"),
            }
        }
        Command::ExportTopology {
            checkpoint,
            config,
            overrides,
        } => {
            let (topology, cfg) = match (checkpoint, config) {
                (Some(path), _) => (load_checkpoint(&path)?.topology().clone(), None),
                (None, Some(path)) => {
                    let cfg = ExperimentConfig::from_file(path, &overrides)?;
                    let ds = experiment::load_dataset(&cfg.dataset, cfg.seeds().split)?;
                    let net = experiment::build_network(&cfg, ds.n_features, ds.n_classes)?;
                    (net.topology().clone(), Some(cfg))
                }
                (None, None) => return Err(Error::Config("pass --checkpoint or --config".into())),
            };
            match out_dir(&cli.out, cfg.as_ref()) {
                Ok(dir) => println!("{}", experiment::export_topology(&topology, &dir)?.display()),
                // a closed pipe (e.g. `| head`) is not an error
                Err(_) => drop(std::io::stdout().write_all(topology.to_text().as_bytes())),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
