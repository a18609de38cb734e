//! Multi-seed experiment execution and grid tuning.
//!
//! An experiment trains `repeats` seeds for every configured method and
//! leaves a self-contained artifact directory:
//!
//! ```text
//! <out>/
//!   config.resolved          # exact configuration the runs used
//!   summary.csv              # per-method median + IQR of final mean HV
//!   <method>/seed_<s>/
//!     records.jsonl          # one JSON document per eval step
//!     run.json               # the full run record
//!     checkpoints/net_<i>.ckpt
//! ```
//!
//! Runs are independent, so seeds execute on a worker pool; each run is
//! internally sequential and seeded, which keeps every artifact byte
//! deterministic no matter the pool size. Strict-deterministic mode also
//! forces one worker and writes wall-clock fields as zero so repeated
//! invocations produce identical bytes.

use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hvfront_core::error::Error as CoreError;
use hvfront_core::neural::save_checkpoint;
use hvfront_core::trainer::{train, Ensemble, RunRecord};

use crate::config::{ExperimentConfig, MethodSettings};
use crate::report::{write_summary_csv, MethodSummary};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub threads: usize,
    pub strict_deterministic: bool,
}

fn ensure_fresh_dir(dir: &Path) -> Result<(), CliError> {
    if dir.exists() && dir.read_dir()?.next().is_some() {
        return Err(CliError::Io(std::io::Error::new(
            std::io::ErrorKind::AlreadyExists,
            format!("output directory {} is not empty", dir.display()),
        )));
    }
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| {
            CliError::Io(std::io::Error::other(format!(
                "worker pool construction failed: {e}"
            )))
        })
}

fn save_run(dir: &Path, ensemble: &Ensemble, record: &RunRecord) -> Result<(), CliError> {
    std::fs::create_dir_all(dir.join("checkpoints"))?;
    record
        .write_records(&dir.join("records.jsonl"))
        .map_err(CliError::from)?;
    record
        .write_summary(&dir.join("run.json"))
        .map_err(CliError::from)?;
    for (i, (net, adam)) in ensemble
        .networks
        .iter()
        .zip(&ensemble.optimizers)
        .enumerate()
    {
        save_checkpoint(
            &dir.join("checkpoints").join(format!("net_{i}.ckpt")),
            net,
            Some(adam),
        )
        .map_err(CliError::from)?;
    }
    Ok(())
}

/// Train every (method, seed) pair and write the artifact directory.
/// Returns the per-method summaries in configuration order.
pub fn run_experiment(
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<Vec<MethodSummary>, CliError> {
    ensure_fresh_dir(&opts.out_dir)?;
    std::fs::write(opts.out_dir.join("config.resolved"), config.to_text())?;

    let threads = if opts.strict_deterministic {
        1
    } else {
        opts.threads.max(1)
    };
    let pool = thread_pool(threads)?;

    // One job per (method, seed); results keyed by (method index, seed).
    struct Job {
        method_idx: usize,
        settings: MethodSettings,
        seed: u64,
    }
    let jobs: Vec<Job> = config
        .methods
        .iter()
        .enumerate()
        .flat_map(|(method_idx, settings)| {
            (0..config.repeats).map(move |r| Job {
                method_idx,
                settings: settings.clone(),
                seed: config.master_seed.wrapping_add(r as u64),
            })
        })
        .collect();

    for settings in &config.methods {
        std::fs::create_dir_all(opts.out_dir.join(settings.method.name()))?;
    }

    let start = Instant::now();
    let results: Vec<(usize, u64, f64, Result<f64, CliError>)> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let t0 = Instant::now();
                let train_config = config.train_config(&job.settings, job.seed);
                let outcome = train(&train_config)
                    .map_err(CliError::from)
                    .and_then(|(ensemble, record)| {
                        let dir = opts
                            .out_dir
                            .join(job.settings.method.name())
                            .join(format!("seed_{}", job.seed));
                        std::fs::create_dir_all(&dir)?;
                        save_run(&dir, &ensemble, &record)?;
                        Ok(record.final_mean_hv())
                    });
                (
                    job.method_idx,
                    job.seed,
                    t0.elapsed().as_secs_f64(),
                    outcome,
                )
            })
            .collect()
    });
    let total_runtime = start.elapsed().as_secs_f64();
    log::info!(
        "{} runs finished in {total_runtime:.1}s",
        results.len()
    );

    let mut summaries = Vec::with_capacity(config.methods.len());
    for (method_idx, settings) in config.methods.iter().enumerate() {
        let mut final_hvs = Vec::new();
        let mut runtime = 0.0;
        for (idx, _seed, secs, outcome) in &results {
            if *idx != method_idx {
                continue;
            }
            match outcome {
                Ok(hv) => {
                    final_hvs.push(*hv);
                    runtime += secs;
                }
                // Training failures leave partial artifacts behind plus an
                // error report, then abort the experiment.
                Err(e) => {
                    let report = format!("run failed: {e}\n");
                    let _ =
                        std::fs::write(opts.out_dir.join("error_report.txt"), &report);
                    return Err(CliError::Training(CoreError::InvalidConfig(report)));
                }
            }
        }
        let runtime = if opts.strict_deterministic { 0.0 } else { runtime };
        summaries.push(MethodSummary::from_final_hvs(
            settings.method.name(),
            &final_hvs,
            runtime,
        ));
    }
    write_summary_csv(&opts.out_dir.join("summary.csv"), &summaries)?;
    Ok(summaries)
}

/// Outcome of one tuning run.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningPoint {
    pub gamma: f64,
    pub beta1: f64,
    pub final_mean_hv: f64,
}

/// Pick the winner: maximal final hypervolume, ties broken by smaller γ,
/// then smaller β₁.
pub fn select_best(points: &[TuningPoint]) -> Option<&TuningPoint> {
    points.iter().min_by(|a, b| {
        b.final_mean_hv
            .total_cmp(&a.final_mean_hv)
            .then(a.gamma.total_cmp(&b.gamma))
            .then(a.beta1.total_cmp(&b.beta1))
    })
}

/// Grid search over learning rate and β₁ for the first configured method,
/// selecting by final mean validation hypervolume (one seed per point).
pub fn tuning_grid(
    config: &ExperimentConfig,
    gamma_grid: &[f64],
    beta1_grid: &[f64],
    opts: &RunOptions,
) -> Result<(TuningPoint, Vec<TuningPoint>), CliError> {
    if gamma_grid.is_empty() || beta1_grid.is_empty() {
        return Err(CliError::Config(CoreError::InvalidConfig(
            "tuning grids must be non-empty".into(),
        )));
    }
    ensure_fresh_dir(&opts.out_dir)?;
    std::fs::write(opts.out_dir.join("config.resolved"), config.to_text())?;
    let settings = &config.methods[0];

    let threads = if opts.strict_deterministic {
        1
    } else {
        opts.threads.max(1)
    };
    let pool = thread_pool(threads)?;

    let mut grid: Vec<(f64, f64)> = Vec::new();
    for &gamma in gamma_grid {
        for &beta1 in beta1_grid {
            grid.push((gamma, beta1));
        }
    }
    let points: Vec<TuningPoint> = pool.install(|| {
        grid.par_iter()
            .map(|&(gamma, beta1)| {
                let mut tuned = settings.clone();
                tuned.optimizer.learning_rate = gamma;
                tuned.optimizer.beta1 = beta1;
                let train_config = config.train_config(&tuned, config.master_seed);
                train(&train_config)
                    .map(|(_, record)| TuningPoint {
                        gamma,
                        beta1,
                        final_mean_hv: record.final_mean_hv(),
                    })
                    .map_err(CliError::from)
            })
            .collect::<Result<_, _>>()
    })?;

    let mut table = String::from("gamma,beta1,final_mean_hv\n");
    for p in &points {
        table.push_str(&format!("{},{},{}\n", p.gamma, p.beta1, p.final_mean_hv));
    }
    std::fs::write(opts.out_dir.join("tuning.csv"), table)?;

    let best = select_best(&points).expect("grid is non-empty").clone();
    Ok((best, points))
}
