//! Command-line entry point: `run`, `tune`, and `plot` subcommands.

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

use hvfront_cli::config::ExperimentConfig;
use hvfront_cli::experiment::{run_experiment, tuning_grid, RunOptions};
use hvfront_cli::plot::{emit_front_plot, PlotSpec};
use hvfront_cli::CliError;
use hvfront_core::error::Error as CoreError;
use hvfront_core::trainer::RunRecord;

/// Default root for experiment outputs when `--out` is not given.
const OUT_ROOT_ENV: &str = "HVFRONT_OUT_ROOT";

#[derive(Parser)]
#[command(
    name = "hvfront",
    about = "Train network ensembles whose outputs trace per-sample Pareto fronts",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonRunArgs {
    /// Experiment configuration file.
    config: PathBuf,
    /// Output directory (must be empty or absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent runs.
    #[arg(long, default_value_t = default_threads())]
    threads: usize,
    /// Sequential execution and zeroed wall-clock fields for byte-identical
    /// artifacts.
    #[arg(long)]
    strict_deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train every configured method over the configured seeds and write
    /// records, checkpoints, plots, and a summary CSV.
    Run(CommonRunArgs),
    /// Grid-search learning rate and β₁ for the first configured method.
    Tune {
        #[command(flatten)]
        common: CommonRunArgs,
        /// Comma-separated learning-rate grid, e.g. 1e-1,1e-2,1e-3.
        #[arg(long, value_delimiter = ',', required = true)]
        gamma_grid: Vec<f64>,
        /// Comma-separated β₁ grid, e.g. 0.5,0.9,0.99.
        #[arg(long, value_delimiter = ',', required = true)]
        beta1_grid: Vec<f64>,
    },
    /// Render the final validation losses of one run directory as SVG.
    Plot {
        /// A seed directory produced by `run` (contains run.json).
        run_dir: PathBuf,
        /// Validation sample ids to draw (defaults to six spread over the
        /// validation set).
        #[arg(long, value_delimiter = ',')]
        samples: Option<Vec<usize>>,
        /// Output SVG path (defaults to plot.svg inside the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn out_dir_for(args: &CommonRunArgs, config_path: &Path) -> PathBuf {
    if let Some(out) = &args.out {
        return out.clone();
    }
    let root = std::env::var_os(OUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"));
    let stem = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "experiment".into());
    root.join(stem)
}

fn load_config(args: &CommonRunArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = ExperimentConfig::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn cmd_run(args: &CommonRunArgs) -> Result<(), CliError> {
    let config = load_config(args)?;
    let opts = RunOptions {
        out_dir: out_dir_for(args, &args.config),
        threads: args.threads,
        strict_deterministic: args.strict_deterministic,
    };
    let summaries = run_experiment(&config, &opts)?;
    // Default plots for the first seed of each method.
    let plot_spec = PlotSpec {
        samples: config
            .plot_samples
            .clone()
            .unwrap_or_else(|| default_plot_samples(&config)),
        ..PlotSpec::default()
    };
    let (_, validation) = config.problem.datasets(
        hvfront_core::trainer::SeedPlan::derive(config.master_seed, config.networks).data,
    );
    for settings in &config.methods {
        let dir = opts
            .out_dir
            .join(settings.method.name())
            .join(format!("seed_{}", config.master_seed));
        let record = RunRecord::read_summary(&dir.join("run.json"))?;
        let svg = emit_front_plot(&record, &config.problem, &validation, &plot_spec)?;
        std::fs::write(dir.join("fronts.svg"), svg)?;
    }
    println!("wrote {}", opts.out_dir.display());
    for s in &summaries {
        println!(
            "{}: median final mean HV {:.4} (IQR {:.4} – {:.4}) over {} seed(s)",
            s.method, s.median_hv, s.iqr_low, s.iqr_high, s.seeds
        );
    }
    Ok(())
}

fn default_plot_samples(config: &ExperimentConfig) -> Vec<usize> {
    let count = config.problem.sample_count;
    if count <= 6 {
        (0..count).collect()
    } else {
        (0..6).map(|i| i * (count - 1) / 5).collect()
    }
}

fn cmd_tune(
    common: &CommonRunArgs,
    gamma_grid: &[f64],
    beta1_grid: &[f64],
) -> Result<(), CliError> {
    let config = load_config(common)?;
    let opts = RunOptions {
        out_dir: out_dir_for(common, &common.config),
        threads: common.threads,
        strict_deterministic: common.strict_deterministic,
    };
    let (best, points) = tuning_grid(&config, gamma_grid, beta1_grid, &opts)?;
    for p in &points {
        println!(
            "gamma {:>8.0e}  beta1 {:>5}  final mean HV {:.4}",
            p.gamma, p.beta1, p.final_mean_hv
        );
    }
    println!(
        "selected gamma = {:e}, beta1 = {} (final mean HV {:.4})",
        best.gamma, best.beta1, best.final_mean_hv
    );
    Ok(())
}

fn cmd_plot(
    run_dir: &Path,
    samples: Option<Vec<usize>>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let record = RunRecord::read_summary(&run_dir.join("run.json"))?;
    // The experiment root (two levels up) holds the resolved config.
    let config_path = run_dir
        .ancestors()
        .nth(2)
        .map(|p| p.join("config.resolved"))
        .filter(|p| p.exists())
        .ok_or_else(|| {
            CliError::Config(CoreError::InvalidConfig(format!(
                "no config.resolved found above {}",
                run_dir.display()
            )))
        })?;
    let config = ExperimentConfig::from_file(&config_path)?;
    let (_, validation) = config.problem.datasets(record.seeds.data);
    let spec = PlotSpec {
        samples: samples
            .or_else(|| config.plot_samples.clone())
            .unwrap_or_else(|| default_plot_samples(&config)),
        ..PlotSpec::default()
    };
    let svg = emit_front_plot(&record, &config.problem, &validation, &spec)?;
    let out = out.unwrap_or_else(|| run_dir.join("plot.svg"));
    std::fs::write(&out, svg)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Tune {
            common,
            gamma_grid,
            beta1_grid,
        } => cmd_tune(common, gamma_grid, beta1_grid),
        Command::Plot {
            run_dir,
            samples,
            out,
        } => cmd_plot(run_dir, samples.clone(), out.clone()),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
