//! The ensemble training loop, evaluation, and run records.
//!
//! One iteration is a global barrier: every network's batch losses exist
//! before the weight matrices are computed, then each network backpropagates
//! its weighted loss (weights held constant) and takes an Adam step. Three
//! weighting methods are supported:
//! - `hv_per_sample`: weights from each sample's own domination-ranked
//!   front sensitivities;
//! - `hv_average`: one weight matrix from the batch-mean losses, shared by
//!   all samples;
//! - `linear_scalarization`: fixed per-network weight vectors.
//!
//! A run is sequential and fully determined by its master seed; run several
//! seeds in parallel from the caller if throughput matters.

use ndarray::{Array2, ArrayView2};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::dynamic_loss::{mean_losses, per_sample_weights_with, WeightMatrix, WeightOptions};
use crate::error::{Error, Result};
use crate::hypervolume::{hv, ReferencePoint};
use crate::neural::{AdamConfig, AdamState, Mlp, Tape};
use crate::pareto::{LossVector, StackedLosses};
use crate::problems::{ProblemSpec, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    HvPerSample,
    HvAverage,
    LinearScalarization,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::HvPerSample => "hv_per_sample",
            Method::HvAverage => "hv_average",
            Method::LinearScalarization => "linear_scalarization",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hv_per_sample" => Some(Method::HvPerSample),
            "hv_average" => Some(Method::HvAverage),
            "linear_scalarization" => Some(Method::LinearScalarization),
            _ => None,
        }
    }
}

/// Everything one training run needs.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub problem: ProblemSpec,
    /// Ensemble size p.
    pub networks: usize,
    pub iterations: usize,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub reference: ReferencePoint,
    pub method: Method,
    /// Required for `linear_scalarization`: one nonnegative weight vector
    /// per network. Must be absent for the dynamic methods.
    pub fixed_weights: Option<Vec<Vec<f64>>>,
    pub optimizer: AdamConfig,
    /// Hidden layer widths; input and output widths come from the problem.
    pub hidden: Vec<usize>,
    pub master_seed: u64,
    /// Validation cadence in iterations.
    pub eval_every: usize,
    pub weight_options: WeightOptions,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.networks == 0 {
            return Err(Error::InvalidConfig("networks must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::InvalidConfig("eval_every must be at least 1".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        let n = self.problem.objectives();
        if self.reference.objectives() != n {
            return Err(Error::InvalidConfig(format!(
                "reference point has {} coordinates but the problem has {} objectives",
                self.reference.objectives(),
                n
            )));
        }
        match (self.method, &self.fixed_weights) {
            (Method::LinearScalarization, Some(rows)) => {
                if rows.len() != self.networks {
                    return Err(Error::InvalidConfig(format!(
                        "{} fixed weight vectors for {} networks",
                        rows.len(),
                        self.networks
                    )));
                }
                for row in rows {
                    if row.len() != n || row.iter().any(|w| !w.is_finite() || *w < 0.0) {
                        return Err(Error::InvalidConfig(
                            "fixed weights must be nonnegative vectors of objective length"
                                .into(),
                        ));
                    }
                }
            }
            (Method::LinearScalarization, None) => {
                return Err(Error::InvalidConfig(
                    "linear_scalarization needs fixed_weights".into(),
                ));
            }
            (_, Some(_)) => {
                return Err(Error::InvalidConfig(
                    "fixed_weights only apply to linear_scalarization".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }

    fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(self.problem.input_dim());
        sizes.extend_from_slice(&self.hidden);
        sizes.push(self.problem.output_dim());
        sizes
    }
}

/// The trained networks with their optimizer state.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub networks: Vec<Mlp>,
    pub optimizers: Vec<AdamState>,
}

/// How the master seed fans out; recorded so a run can be reproduced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub master: u64,
    pub data: u64,
    pub shuffle: u64,
    pub init: Vec<u64>,
}

impl SeedPlan {
    pub fn derive(master: u64, networks: usize) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(master);
        let data = rng.next_u64();
        let shuffle = rng.next_u64();
        let init = (0..networks).map(|_| rng.next_u64()).collect();
        Self {
            master,
            data,
            shuffle,
            init,
        }
    }
}

/// One validation snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalEntry {
    pub iteration: usize,
    pub mean_hv: f64,
    pub per_sample_hv: Vec<f64>,
    /// Mean validation loss per network and objective, p×n.
    pub per_network_mean_losses: Vec<Vec<f64>>,
}

/// Everything recorded over one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub problem: String,
    pub seeds: SeedPlan,
    pub entries: Vec<EvalEntry>,
    /// Final validation losses, indexed `[sample][network][objective]`.
    pub final_validation_losses: Vec<Vec<Vec<f64>>>,
    /// Fraction of adjacent validation sample pairs whose networks keep the
    /// same order along the front; two objectives only.
    pub ordering_consistency: Option<f64>,
}

impl RunRecord {
    pub fn final_mean_hv(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.mean_hv)
    }

    /// One JSON document per eval step.
    pub fn write_records(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for entry in &self.entries {
            let line = serde_json::to_string(entry).map_err(|e| Error::ShapeMismatch {
                context: format!("record serialization failed: {e}"),
            })?;
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_records(path: &Path) -> Result<Vec<EvalEntry>> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut entries = Vec::new();
        for (idx, line) in file.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?);
        }
        Ok(entries)
    }

    /// The full record as one JSON summary document.
    pub fn write_summary(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::ShapeMismatch {
            context: format!("summary serialization failed: {e}"),
        })?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn read_summary(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })
    }
}

fn batch_inputs(problem: &ProblemSpec, samples: &[Sample], idx: &[usize]) -> Array2<f64> {
    let mut inputs = Array2::zeros((idx.len(), problem.input_dim()));
    for (row, &k) in idx.iter().enumerate() {
        for (col, v) in samples[k].input.iter().enumerate() {
            inputs[[row, col]] = *v;
        }
    }
    inputs
}

struct EvalSnapshot {
    mean_hv: f64,
    per_sample_hv: Vec<f64>,
    per_network_mean_losses: Vec<Vec<f64>>,
    per_sample_losses: Vec<Vec<Vec<f64>>>,
}

fn eval_snapshot(
    problem: &ProblemSpec,
    networks: &[Mlp],
    samples: &[Sample],
    reference: &ReferencePoint,
) -> Result<EvalSnapshot> {
    if samples.is_empty() {
        return Err(Error::EmptyInput {
            context: "evaluation needs at least one sample",
        });
    }
    let idx: Vec<usize> = (0..samples.len()).collect();
    let inputs = batch_inputs(problem, samples, &idx);
    let outputs: Vec<Array2<f64>> = networks
        .iter()
        .map(|net| net.forward_batch(inputs.view()).map(|(y, _)| y))
        .collect::<Result<_>>()?;

    let n = problem.objectives();
    let p = networks.len();
    let mut per_sample_hv = Vec::with_capacity(samples.len());
    let mut per_sample_losses = Vec::with_capacity(samples.len());
    let mut mean_losses_acc = vec![vec![0.0; n]; p];
    let bound: f64 = reference.coords().iter().product();

    for (k, sample) in samples.iter().enumerate() {
        let mut rows = Vec::with_capacity(p);
        for output in &outputs {
            let values = problem.loss_values(&output.row(k).to_vec(), sample);
            rows.push(values);
        }
        for (acc, row) in mean_losses_acc.iter_mut().zip(&rows) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        let stacked = StackedLosses::new(
            rows.iter()
                .map(|r| LossVector::new(r.clone()))
                .collect::<Result<_>>()?,
        )?;
        let volume = hv(&stacked, reference)?;
        debug_assert!((0.0..=bound * (1.0 + 1e-12)).contains(&volume));
        per_sample_hv.push(volume);
        per_sample_losses.push(rows);
    }
    for acc in &mut mean_losses_acc {
        for v in acc.iter_mut() {
            *v /= samples.len() as f64;
        }
    }
    let mean_hv = per_sample_hv.iter().sum::<f64>() / per_sample_hv.len() as f64;
    Ok(EvalSnapshot {
        mean_hv,
        per_sample_hv,
        per_network_mean_losses: mean_losses_acc,
        per_sample_losses,
    })
}

/// Mean and per-sample hypervolume of the ensemble's stacked validation
/// losses. Never mutates the ensemble.
pub fn evaluate(
    problem: &ProblemSpec,
    ensemble: &Ensemble,
    samples: &[Sample],
    reference: &ReferencePoint,
) -> Result<(f64, Vec<f64>)> {
    let snap = eval_snapshot(problem, &ensemble.networks, samples, reference)?;
    Ok((snap.mean_hv, snap.per_sample_hv))
}

/// Fraction of adjacent sample pairs whose networks appear in the same
/// order along the front when sorted by the first loss (ties by index).
pub fn ordering_consistency(per_sample_losses: &[StackedLosses]) -> f64 {
    if per_sample_losses.len() < 2 {
        return 1.0;
    }
    let order_of = |stacked: &StackedLosses| -> Vec<usize> {
        let mut order: Vec<usize> = (0..stacked.len()).collect();
        order.sort_by(|&a, &b| {
            stacked.row(a).values()[0]
                .total_cmp(&stacked.row(b).values()[0])
                .then(a.cmp(&b))
        });
        order
    };
    let orders: Vec<Vec<usize>> = per_sample_losses.iter().map(order_of).collect();
    let matches = orders
        .windows(2)
        .filter(|pair| pair[0] == pair[1])
        .count();
    matches as f64 / (orders.len() - 1) as f64
}

/// [`ordering_consistency`] computed from fresh forward passes.
pub fn ordering_diagnostic(
    problem: &ProblemSpec,
    ensemble: &Ensemble,
    samples: &[Sample],
) -> Result<f64> {
    if problem.objectives() != 2 {
        return Err(Error::UnsupportedDimension {
            n: problem.objectives(),
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyInput {
            context: "ordering diagnostic needs at least one sample",
        });
    }
    let idx: Vec<usize> = (0..samples.len()).collect();
    let inputs = batch_inputs(problem, samples, &idx);
    let outputs: Vec<Array2<f64>> = ensemble
        .networks
        .iter()
        .map(|net| net.forward_batch(inputs.view()).map(|(y, _)| y))
        .collect::<Result<_>>()?;
    let stacks: Vec<StackedLosses> = samples
        .iter()
        .enumerate()
        .map(|(k, sample)| {
            StackedLosses::new(
                outputs
                    .iter()
                    .map(|y| {
                        LossVector::new(problem.loss_values(&y.row(k).to_vec(), sample))
                    })
                    .collect::<Result<_>>()?,
            )
        })
        .collect::<Result<_>>()?;
    Ok(ordering_consistency(&stacks))
}

/// Train an ensemble. Deterministic for a given config and master seed.
pub fn train(config: &TrainConfig) -> Result<(Ensemble, RunRecord)> {
    config.validate()?;
    let problem = &config.problem;
    let p = config.networks;
    let n = problem.objectives();
    let seeds = SeedPlan::derive(config.master_seed, p);

    let (train_set, validation_set) = problem.datasets(seeds.data);
    let sizes = config.layer_sizes();
    let mut networks: Vec<Mlp> = seeds
        .init
        .iter()
        .map(|&s| Mlp::with_seed(&sizes, s))
        .collect::<Result<_>>()?;
    let mut optimizers: Vec<AdamState> = networks
        .iter()
        .map(|net| AdamState::new(net, config.optimizer))
        .collect();

    let batch = config
        .batch_size
        .unwrap_or(train_set.len())
        .min(train_set.len());
    let full_batch = batch == train_set.len();
    let mut shuffle_rng = ChaCha12Rng::seed_from_u64(seeds.shuffle);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    if !full_batch {
        order.shuffle(&mut shuffle_rng);
    }
    let mut cursor = 0usize;

    let full_inputs = batch_inputs(problem, &train_set, &order);
    let fixed = match config.method {
        Method::LinearScalarization => Some(WeightMatrix::from_rows(
            config.fixed_weights.clone().unwrap(),
        )?),
        _ => None,
    };

    let mut entries: Vec<EvalEntry> = Vec::new();
    let mut scratch_upstream = Array2::zeros((batch, problem.output_dim()));

    for iteration in 1..=config.iterations {
        let batch_idx: Vec<usize> = if full_batch {
            Vec::new() // full_inputs already covers the whole set in order
        } else {
            if cursor + batch > order.len() {
                order.shuffle(&mut shuffle_rng);
                cursor = 0;
            }
            let slice = order[cursor..cursor + batch].to_vec();
            cursor += batch;
            slice
        };
        let inputs_owned;
        let inputs: ArrayView2<f64> = if full_batch {
            full_inputs.view()
        } else {
            inputs_owned = batch_inputs(problem, &train_set, &batch_idx);
            inputs_owned.view()
        };
        let sample_at = |slot: usize| -> &Sample {
            if full_batch {
                &train_set[slot]
            } else {
                &train_set[batch_idx[slot]]
            }
        };

        let mut outputs: Vec<Array2<f64>> = Vec::with_capacity(p);
        let mut tapes: Vec<Tape> = Vec::with_capacity(p);
        for net in &networks {
            let (y, tape) = net.forward_batch(inputs)?;
            outputs.push(y);
            tapes.push(tape);
        }

        // Stack losses per sample, aborting on the first non-finite value.
        let mut stacks: Vec<StackedLosses> = Vec::with_capacity(batch);
        for slot in 0..batch {
            let sample = sample_at(slot);
            let mut rows = Vec::with_capacity(p);
            for (net_idx, output) in outputs.iter().enumerate() {
                let values = problem.loss_values(&output.row(slot).to_vec(), sample);
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::TrainingAborted {
                        iteration,
                        network: net_idx,
                        sample: sample.id,
                        losses: values,
                    });
                }
                rows.push(LossVector::new(values)?);
            }
            stacks.push(StackedLosses::new(rows)?);
        }

        // Weights are recomputed fresh each iteration and treated as
        // constants in the backward pass.
        enum Weights {
            PerSample(Vec<WeightMatrix>),
            Shared(WeightMatrix),
        }
        let weights = match config.method {
            Method::HvPerSample => Weights::PerSample(
                stacks
                    .iter()
                    .map(|s| {
                        per_sample_weights_with(s, &config.reference, config.weight_options)
                    })
                    .collect::<Result<_>>()?,
            ),
            Method::HvAverage => {
                let means = mean_losses(&stacks)?;
                Weights::Shared(per_sample_weights_with(
                    &means,
                    &config.reference,
                    config.weight_options,
                )?)
            }
            Method::LinearScalarization => Weights::Shared(fixed.clone().unwrap()),
        };

        let scale = 1.0 / batch as f64;
        for i in 0..p {
            scratch_upstream.fill(0.0);
            for slot in 0..batch {
                let sample = sample_at(slot);
                let weight_row: &[f64] = match &weights {
                    Weights::PerSample(mats) => mats[slot].row(i),
                    Weights::Shared(mat) => mat.row(i),
                };
                let grads = problem.loss_gradients(&outputs[i].row(slot).to_vec(), sample);
                let mut row = scratch_upstream.row_mut(slot);
                for j in 0..n {
                    let w = weight_row[j] * scale;
                    if w != 0.0 {
                        for (d, g) in grads[j].iter().enumerate() {
                            row[d] += w * g;
                        }
                    }
                }
            }
            let grads = networks[i].backward_batch(&tapes[i], scratch_upstream.view())?;
            optimizers[i].step(&mut networks[i], &grads)?;
        }

        if iteration % config.eval_every == 0 || iteration == config.iterations {
            let snap = eval_snapshot(problem, &networks, &validation_set, &config.reference)?;
            if entries.last().map(|e| e.iteration) != Some(iteration) {
                entries.push(EvalEntry {
                    iteration,
                    mean_hv: snap.mean_hv,
                    per_sample_hv: snap.per_sample_hv,
                    per_network_mean_losses: snap.per_network_mean_losses,
                });
            }
        }
    }

    let final_snap = eval_snapshot(problem, &networks, &validation_set, &config.reference)?;
    let ensemble = Ensemble {
        networks,
        optimizers,
    };
    let ordering = if n == 2 {
        Some(ordering_diagnostic(problem, &ensemble, &validation_set)?)
    } else {
        None
    };
    let record = RunRecord {
        method: config.method.name().to_string(),
        problem: problem.name().to_string(),
        seeds,
        entries,
        final_validation_losses: final_snap.per_sample_losses,
        ordering_consistency: ordering,
    };
    Ok((ensemble, record))
}
