//! Dynamic loss weights: turn stacked per-sample losses into normalized
//! per-network, per-objective weight matrices.
//!
//! The default pipeline partitions the stacked losses into domination-ranked
//! fronts, computes each front's hypervolume sensitivities against the
//! reference point independently, and normalizes every network's row to unit
//! Euclidean norm. Minimizing the resulting weighted loss ascends the
//! per-front hypervolume. Both steps can be switched off individually for
//! ablation via [`WeightOptions`].

use crate::error::{Error, Result};
use crate::hypervolume::{hv_gradient, ReferencePoint};
use crate::pareto::{non_dominated_sort, LossVector, StackedLosses};

/// The p×n nonnegative, per-row-normalized weight matrix driving training.
///
/// Rows whose raw sensitivity is the zero vector stay all-zero; every other
/// row has unit Euclidean norm (under the default options).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    per_network: Vec<Vec<f64>>,
}

impl WeightMatrix {
    /// Fixed weights, e.g. for a linear-scalarization baseline. Entries must
    /// be finite and nonnegative.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows
            .first()
            .ok_or(Error::EmptyInput {
                context: "weight matrix needs at least one row",
            })?
            .len();
        for row in &rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            if row.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::NonFinite {
                    context: "weight entries must be finite and nonnegative",
                });
            }
        }
        Ok(Self { per_network: rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.per_network
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.per_network[i]
    }

    pub fn networks(&self) -> usize {
        self.per_network.len()
    }

    pub fn objectives(&self) -> usize {
        self.per_network[0].len()
    }
}

/// Switches for the two stages of the weight pipeline. Defaults to both on;
/// turning both off reproduces the plain unranked, unnormalized sensitivity
/// weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightOptions {
    /// Partition into domination-ranked fronts and weight each front
    /// separately. When off, only the non-dominated points carry weight and
    /// dominated rows are zero.
    pub rank: bool,
    /// Normalize each network's row to unit Euclidean norm.
    pub normalize: bool,
}

impl Default for WeightOptions {
    fn default() -> Self {
        Self {
            rank: true,
            normalize: true,
        }
    }
}

fn normalize_row(row: &mut [f64]) {
    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in row {
            *v /= norm;
        }
    }
}

fn weights_with(
    stacked: &StackedLosses,
    reference: &ReferencePoint,
    options: WeightOptions,
) -> Result<WeightMatrix> {
    let p = stacked.len();
    let n = stacked.objectives();
    let mut rows = vec![vec![0.0; n]; p];

    let partition = non_dominated_sort(stacked);
    let fronts: &[Vec<usize>] = if options.rank {
        partition.fronts()
    } else {
        // Sensitivities of the full set: dominated points sit in the
        // interior of the dominated region, so only front 0 carries weight.
        &partition.fronts()[..1]
    };

    for front in fronts {
        let sub = StackedLosses::new(
            front.iter().map(|&i| stacked.row(i).clone()).collect(),
        )?;
        let grad = hv_gradient(&sub, reference)?;
        for (slot, &network) in front.iter().enumerate() {
            rows[network].clone_from_slice(grad.row(slot));
            if options.normalize {
                normalize_row(&mut rows[network]);
            }
        }
    }

    WeightMatrix::from_rows(rows)
}

/// Per-sample weight matrix: domination-ranked fronts, per-front hypervolume
/// sensitivities, rows normalized to unit norm.
pub fn per_sample_weights(
    stacked: &StackedLosses,
    reference: &ReferencePoint,
) -> Result<WeightMatrix> {
    weights_with(stacked, reference, WeightOptions::default())
}

/// [`per_sample_weights`] with explicit ablation switches.
pub fn per_sample_weights_with(
    stacked: &StackedLosses,
    reference: &ReferencePoint,
    options: WeightOptions,
) -> Result<WeightMatrix> {
    weights_with(stacked, reference, options)
}

/// Weight matrix of the average-loss formulation: the identical computation
/// applied once to the matrix of batch-mean losses.
pub fn average_loss_weights(
    mean_losses: &StackedLosses,
    reference: &ReferencePoint,
) -> Result<WeightMatrix> {
    weights_with(mean_losses, reference, WeightOptions::default())
}

/// Batch-mean of per-sample loss matrices, row for row.
pub fn mean_losses(per_sample: &[StackedLosses]) -> Result<StackedLosses> {
    let first = per_sample.first().ok_or(Error::EmptyInput {
        context: "mean over zero samples",
    })?;
    let (p, n) = (first.len(), first.objectives());
    let mut acc = vec![vec![0.0; n]; p];
    for stacked in per_sample {
        if stacked.len() != p || stacked.objectives() != n {
            return Err(Error::ShapeMismatch {
                context: "per-sample loss matrices differ in shape".into(),
            });
        }
        for (row, losses) in acc.iter_mut().zip(stacked.rows()) {
            for (a, v) in row.iter_mut().zip(losses.values()) {
                *a += v;
            }
        }
    }
    let scale = 1.0 / per_sample.len() as f64;
    for row in &mut acc {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    StackedLosses::new(
        acc.into_iter()
            .map(LossVector::new)
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Scalar dynamic loss per network: the batch mean of the weighted losses,
/// with the weights treated as constants.
pub fn joint_loss_value(
    stacked_per_sample: &[StackedLosses],
    weights_per_sample: &[WeightMatrix],
) -> Result<Vec<f64>> {
    if stacked_per_sample.len() != weights_per_sample.len() {
        return Err(Error::ShapeMismatch {
            context: format!(
                "{} loss matrices but {} weight matrices",
                stacked_per_sample.len(),
                weights_per_sample.len()
            ),
        });
    }
    let first = stacked_per_sample.first().ok_or(Error::EmptyInput {
        context: "joint loss over zero samples",
    })?;
    let (p, n) = (first.len(), first.objectives());
    let mut totals = vec![0.0; p];
    for (stacked, weights) in stacked_per_sample.iter().zip(weights_per_sample) {
        if stacked.len() != p
            || stacked.objectives() != n
            || weights.networks() != p
            || weights.objectives() != n
        {
            return Err(Error::ShapeMismatch {
                context: "loss/weight matrices disagree in shape".into(),
            });
        }
        for i in 0..p {
            totals[i] += weights
                .row(i)
                .iter()
                .zip(stacked.row(i).values())
                .map(|(w, l)| w * l)
                .sum::<f64>();
        }
    }
    let scale = 1.0 / stacked_per_sample.len() as f64;
    for t in &mut totals {
        *t *= scale;
    }
    Ok(totals)
}
