//! Training ensembles of small networks so that, for every input sample, the
//! ensemble's outputs trace that sample's Pareto front across conflicting
//! losses.
//!
//! The pieces, bottom up:
//! - [`pareto`]: dominance predicates and non-dominated sorting into
//!   domination-ranked fronts;
//! - [`hypervolume`]: exact 2-D/3-D hypervolume and per-point sensitivity
//!   magnitudes with respect to a reference point;
//! - [`dynamic_loss`]: the normalized per-network weight matrices that turn
//!   those sensitivities into a scalar training loss;
//! - [`neural`]: plain MLPs with manual backpropagation and Adam;
//! - [`problems`]: the synthetic suite with analytic front oracles;
//! - [`trainer`]: the training loop tying it together, plus evaluation.

pub mod dynamic_loss;
pub mod error;
pub mod hypervolume;
pub mod neural;
pub mod pareto;
pub mod problems;
pub mod trainer;

pub use error::{Error, Result};
