//! Minimal feed-forward networks with manual backpropagation and Adam.
//!
//! Networks are dense stacks of `(weights, bias, activation)` layers over
//! `f64`, with ReLU hidden layers and identity outputs. The forward pass
//! records a [`Tape`] of layer inputs and ReLU masks; [`Mlp::backward_batch`]
//! replays it to produce the exact gradient of `Σ_samples ⟨upstream, output⟩`
//! in every parameter. Each network owns its parameters and optimizer state
//! outright, so ensemble members share nothing.
//!
//! Checkpoint files are a versioned textual dump (`hvfront-checkpoint v1`)
//! of layer shapes, row-major parameter values, and optionally the Adam
//! state; values round-trip bit-exactly through the shortest-decimal float
//! formatting.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

static NEXT_MLP_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// One dense layer; weights are stored `(in_dim, out_dim)` so a batch of row
/// vectors maps through `x · W + b`.
#[derive(Debug, Clone)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.ncols()
    }
}

/// A multilayer perceptron with explicit parameters.
///
/// The `(identity, version)` pair stamps every tape produced by a forward
/// pass; a tape replayed after the parameters changed is rejected as stale.
#[derive(Debug)]
pub struct Mlp {
    layers: Vec<Layer>,
    identity: u64,
    version: u64,
}

impl Clone for Mlp {
    fn clone(&self) -> Self {
        Self {
            layers: self.layers.clone(),
            identity: NEXT_MLP_ID.fetch_add(1, Ordering::Relaxed),
            version: 0,
        }
    }
}

/// Activation record from one forward pass, sufficient for backward.
#[derive(Debug)]
pub struct Tape {
    identity: u64,
    version: u64,
    batch: usize,
    layer_inputs: Vec<Array2<f64>>,
    relu_masks: Vec<Option<Array2<f64>>>,
}

/// Per-layer parameter gradients, shaped like the parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Gradients {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            layers: mlp
                .layers
                .iter()
                .map(|l| {
                    (
                        Array2::zeros((l.in_dim(), l.out_dim())),
                        Array1::zeros(l.out_dim()),
                    )
                })
                .collect(),
        }
    }
}

impl Mlp {
    /// Build a network with the given layer widths (`sizes[0]` inputs through
    /// `sizes.last()` outputs), ReLU on hidden layers and identity on the
    /// output layer. Parameters are drawn uniformly from ±1/√fan_in.
    pub fn with_seed(sizes: &[usize], seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidConfig(format!(
                "layer sizes must list at least input and output widths, got {sizes:?}"
            )));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for (idx, pair) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let weights =
                Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-bound..bound));
            let biases = Array1::from_shape_fn(fan_out, |_| rng.random_range(-bound..bound));
            let activation = if idx + 2 == sizes.len() {
                Activation::Identity
            } else {
                Activation::Relu
            };
            layers.push(Layer {
                weights,
                biases,
                activation,
            });
        }
        Ok(Self {
            layers,
            identity: NEXT_MLP_ID.fetch_add(1, Ordering::Relaxed),
            version: 0,
        })
    }

    /// Assemble a network from explicit layers, validating that consecutive
    /// shapes chain and all parameters are finite.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::EmptyInput {
                context: "a network needs at least one layer",
            });
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::ShapeMismatch {
                    context: format!(
                        "layer output width {} does not chain into next input width {}",
                        pair[0].out_dim(),
                        pair[1].in_dim()
                    ),
                });
            }
        }
        for layer in &layers {
            if layer.biases.len() != layer.out_dim() {
                return Err(Error::ShapeMismatch {
                    context: "bias length does not match layer output width".into(),
                });
            }
            if layer.weights.iter().chain(layer.biases.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: "network parameter",
                });
            }
        }
        Ok(Self {
            layers,
            identity: NEXT_MLP_ID.fetch_add(1, Ordering::Relaxed),
            version: 0,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.in_dim() * l.out_dim() + l.out_dim())
            .sum()
    }

    /// Forward pass over a batch of row vectors. Returns the outputs and the
    /// tape needed by [`Mlp::backward_batch`].
    pub fn forward_batch(&self, inputs: ArrayView2<f64>) -> Result<(Array2<f64>, Tape)> {
        if inputs.ncols() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim(),
                got: inputs.ncols(),
            });
        }
        let mut layer_inputs = Vec::with_capacity(self.layers.len());
        let mut relu_masks = Vec::with_capacity(self.layers.len());
        let mut activ = inputs.to_owned();
        for layer in &self.layers {
            let mut z = activ.dot(&layer.weights);
            z += &layer.biases;
            layer_inputs.push(activ);
            match layer.activation {
                Activation::Relu => {
                    // Subgradient 0 at exactly zero pre-activation.
                    let mask = z.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                    z *= &mask;
                    relu_masks.push(Some(mask));
                }
                Activation::Identity => relu_masks.push(None),
            }
            activ = z;
        }
        let tape = Tape {
            identity: self.identity,
            version: self.version,
            batch: inputs.nrows(),
            layer_inputs,
            relu_masks,
        };
        Ok((activ, tape))
    }

    /// Single-sample forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, Tape)> {
        let x = ArrayView2::from_shape((1, input.len()), input).map_err(|_| {
            Error::DimensionMismatch {
                expected: self.in_dim(),
                got: input.len(),
            }
        })?;
        let (y, tape) = self.forward_batch(x)?;
        Ok((y.row(0).to_vec(), tape))
    }

    /// Exact gradient of `Σ_k ⟨upstream_k, output_k⟩` in every parameter.
    ///
    /// `upstream` has one row per batch sample. The tape must come from a
    /// forward pass of this network with the current parameters.
    pub fn backward_batch(&self, tape: &Tape, upstream: ArrayView2<f64>) -> Result<Gradients> {
        if tape.identity != self.identity || tape.version != self.version {
            return Err(Error::StaleTape);
        }
        if upstream.nrows() != tape.batch || upstream.ncols() != self.out_dim() {
            return Err(Error::ShapeMismatch {
                context: format!(
                    "upstream is {}×{}, expected {}×{}",
                    upstream.nrows(),
                    upstream.ncols(),
                    tape.batch,
                    self.out_dim()
                ),
            });
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = upstream.to_owned();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            if let Some(mask) = &tape.relu_masks[idx] {
                delta *= mask;
            }
            let input = &tape.layer_inputs[idx];
            let grad_w = input.t().dot(&delta);
            let grad_b = delta.sum_axis(Axis(0));
            if idx > 0 {
                delta = delta.dot(&layer.weights.t());
            }
            grads.push((grad_w, grad_b));
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }

    /// Single-sample backward pass; see [`Mlp::backward_batch`].
    pub fn backward(&self, tape: &Tape, upstream: &[f64]) -> Result<Gradients> {
        let u = ArrayView2::from_shape((1, upstream.len()), upstream).map_err(|_| {
            Error::DimensionMismatch {
                expected: self.out_dim(),
                got: upstream.len(),
            }
        })?;
        self.backward_batch(tape, u)
    }

    fn bump_version(&mut self) {
        self.version = self.version.wrapping_add(1);
    }
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl AdamConfig {
    pub fn new(learning_rate: f64, beta1: f64) -> Self {
        Self {
            learning_rate,
            beta1,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Per-parameter Adam moment accumulators for one network.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    step_count: u64,
    first_moment: Vec<(Array2<f64>, Array1<f64>)>,
    second_moment: Vec<(Array2<f64>, Array1<f64>)>,
}

impl AdamState {
    pub fn new(mlp: &Mlp, config: AdamConfig) -> Self {
        let zeros = |mlp: &Mlp| {
            mlp.layers
                .iter()
                .map(|l| {
                    (
                        Array2::zeros((l.in_dim(), l.out_dim())),
                        Array1::zeros(l.out_dim()),
                    )
                })
                .collect::<Vec<_>>()
        };
        Self {
            config,
            step_count: 0,
            first_moment: zeros(mlp),
            second_moment: zeros(mlp),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// One Adam update with bias correction and decoupled weight decay.
    pub fn step(&mut self, mlp: &mut Mlp, grads: &Gradients) -> Result<()> {
        if grads.layers.len() != mlp.layers.len() {
            return Err(Error::ShapeMismatch {
                context: "gradient layer count does not match network".into(),
            });
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let c = &self.config;
        let m_corr = 1.0 - c.beta1.powi(t);
        let v_corr = 1.0 - c.beta2.powi(t);

        for (idx, layer) in mlp.layers.iter_mut().enumerate() {
            let (gw, gb) = &grads.layers[idx];
            if gw.dim() != layer.weights.dim() || gb.len() != layer.biases.len() {
                return Err(Error::ShapeMismatch {
                    context: format!("gradient shape mismatch in layer {idx}"),
                });
            }
            let (mw, mb) = &mut self.first_moment[idx];
            let (vw, vb) = &mut self.second_moment[idx];

            ndarray::Zip::from(&mut layer.weights)
                .and(mw)
                .and(vw)
                .and(gw)
                .for_each(|w, m, v, &g| {
                    *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                    *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                    let update = (*m / m_corr) / ((*v / v_corr).sqrt() + c.epsilon);
                    *w -= c.learning_rate * (update + c.weight_decay * *w);
                });
            ndarray::Zip::from(&mut layer.biases)
                .and(mb)
                .and(vb)
                .and(gb)
                .for_each(|w, m, v, &g| {
                    *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                    *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                    let update = (*m / m_corr) / ((*v / v_corr).sqrt() + c.epsilon);
                    *w -= c.learning_rate * (update + c.weight_decay * *w);
                });
        }
        mlp.bump_version();
        Ok(())
    }
}

fn write_floats(out: &mut impl Write, values: impl Iterator<Item = f64>) -> std::io::Result<()> {
    let mut first = true;
    for v in values {
        if first {
            first = false;
        } else {
            write!(out, " ")?;
        }
        // Shortest decimal that round-trips f64 exactly.
        write!(out, "{v}")?;
    }
    writeln!(out)
}

/// Write a checkpoint of a network and (optionally) its Adam state.
pub fn save_checkpoint(path: &Path, mlp: &Mlp, adam: Option<&AdamState>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "hvfront-checkpoint v1")?;
    writeln!(out, "layers {}", mlp.layers.len())?;
    for layer in &mlp.layers {
        writeln!(
            out,
            "layer {} {} {}",
            layer.activation.name(),
            layer.in_dim(),
            layer.out_dim()
        )?;
        write_floats(&mut out, layer.weights.iter().copied())?;
        write_floats(&mut out, layer.biases.iter().copied())?;
    }
    match adam {
        Some(state) => {
            let c = &state.config;
            writeln!(
                out,
                "adam {} {} {} {} {} {}",
                state.step_count,
                c.learning_rate,
                c.beta1,
                c.beta2,
                c.epsilon,
                c.weight_decay
            )?;
            for ((mw, mb), (vw, vb)) in state.first_moment.iter().zip(&state.second_moment) {
                write_floats(&mut out, mw.iter().copied())?;
                write_floats(&mut out, mb.iter().copied())?;
                write_floats(&mut out, vw.iter().copied())?;
                write_floats(&mut out, vb.iter().copied())?;
            }
        }
        None => writeln!(out, "adam none")?,
    }
    writeln!(out, "end")?;
    Ok(())
}

struct LineReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> LineReader<R> {
    fn next_line(&mut self) -> Result<String> {
        self.line_no += 1;
        self.lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Parse {
                line: self.line_no,
                message: "unexpected end of checkpoint".into(),
            })
    }

    fn parse_err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line_no,
            message: message.into(),
        }
    }

    fn floats(&mut self, expected: usize) -> Result<Vec<f64>> {
        let line = self.next_line()?;
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|tok| tok.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| self.parse_err(format!("bad float: {e}")))?;
        if values.len() != expected {
            return Err(self.parse_err(format!(
                "expected {expected} values, found {}",
                values.len()
            )));
        }
        Ok(values)
    }
}

/// Read a checkpoint produced by [`save_checkpoint`].
pub fn load_checkpoint(path: &Path) -> Result<(Mlp, Option<AdamState>)> {
    let file = BufReader::new(std::fs::File::open(path)?);
    let mut rd = LineReader {
        lines: file.lines(),
        line_no: 0,
    };

    let header = rd.next_line()?;
    if header.trim() != "hvfront-checkpoint v1" {
        return Err(rd.parse_err(format!("unrecognized checkpoint header: {header:?}")));
    }
    let count_line = rd.next_line()?;
    let layer_count: usize = count_line
        .strip_prefix("layers ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| rd.parse_err("expected `layers <count>`"))?;

    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let decl = rd.next_line()?;
        let parts: Vec<&str> = decl.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "layer" {
            return Err(rd.parse_err("expected `layer <activation> <in> <out>`"));
        }
        let activation = Activation::parse(parts[1])
            .ok_or_else(|| rd.parse_err(format!("unknown activation {:?}", parts[1])))?;
        let in_dim: usize = parts[2]
            .parse()
            .map_err(|_| rd.parse_err("bad input width"))?;
        let out_dim: usize = parts[3]
            .parse()
            .map_err(|_| rd.parse_err("bad output width"))?;
        let w = rd.floats(in_dim * out_dim)?;
        let b = rd.floats(out_dim)?;
        layers.push(Layer {
            weights: Array2::from_shape_vec((in_dim, out_dim), w)
                .map_err(|e| rd.parse_err(e.to_string()))?,
            biases: Array1::from_vec(b),
            activation,
        });
    }
    let mlp = Mlp::from_layers(layers)?;

    let adam_line = rd.next_line()?;
    let adam = if adam_line.trim() == "adam none" {
        None
    } else {
        let parts: Vec<&str> = adam_line.split_whitespace().collect();
        if parts.len() != 7 || parts[0] != "adam" {
            return Err(rd.parse_err("expected `adam <t> <lr> <b1> <b2> <eps> <wd>` or `adam none`"));
        }
        let nums: Vec<f64> = parts[1..]
            .iter()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| rd.parse_err(format!("bad adam field: {e}")))?;
        let mut state = AdamState::new(
            &mlp,
            AdamConfig {
                learning_rate: nums[1],
                beta1: nums[2],
                beta2: nums[3],
                epsilon: nums[4],
                weight_decay: nums[5],
            },
        );
        state.step_count = nums[0] as u64;
        for idx in 0..mlp.layers.len() {
            let (wd, bd) = (
                mlp.layers[idx].in_dim() * mlp.layers[idx].out_dim(),
                mlp.layers[idx].out_dim(),
            );
            let shape = (mlp.layers[idx].in_dim(), mlp.layers[idx].out_dim());
            state.first_moment[idx].0 = Array2::from_shape_vec(shape, rd.floats(wd)?)
                .map_err(|e| rd.parse_err(e.to_string()))?;
            state.first_moment[idx].1 = Array1::from_vec(rd.floats(bd)?);
            state.second_moment[idx].0 = Array2::from_shape_vec(shape, rd.floats(wd)?)
                .map_err(|e| rd.parse_err(e.to_string()))?;
            state.second_moment[idx].1 = Array1::from_vec(rd.floats(bd)?);
        }
        Some(state)
    };
    let trailer = rd.next_line()?;
    if trailer.trim() != "end" {
        return Err(rd.parse_err("expected `end`"));
    }
    Ok((mlp, adam))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn tiny_net(seed: u64, sizes: &[usize]) -> Mlp {
        Mlp::with_seed(sizes, seed).unwrap()
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        let layers = vec![Layer {
            weights: Array2::zeros((3, 2)),
            biases: Array1::zeros(2),
            activation: Activation::Identity,
        }];
        let mlp = Mlp::from_layers(layers).unwrap();
        let (y, _) = mlp.forward(&[0.4, -1.0, 2.5]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let layers = vec![Layer {
            weights: array![[1.0, 0.0], [0.0, 1.0]],
            biases: Array1::zeros(2),
            activation: Activation::Identity,
        }];
        let mlp = Mlp::from_layers(layers).unwrap();
        let (y, _) = mlp.forward(&[0.3, 0.7]).unwrap();
        assert_eq!(y, vec![0.3, 0.7]);
    }

    #[test]
    fn random_net_output_is_finite() {
        let mlp = tiny_net(3, &[4, 16, 16, 1]);
        for i in 0..20 {
            let x = i as f64 * std::f64::consts::TAU / 19.0;
            let (y, _) = mlp.forward(&[x, x / 2.0, x.sin(), 1.0]).unwrap();
            assert!(y[0].is_finite());
        }
    }

    #[test]
    fn scalar_linear_net_gradient_is_input() {
        let layers = vec![Layer {
            weights: array![[1.7]],
            biases: Array1::zeros(1),
            activation: Activation::Identity,
        }];
        let mlp = Mlp::from_layers(layers).unwrap();
        let (_, tape) = mlp.forward(&[0.35]).unwrap();
        let grads = mlp.backward(&tape, &[1.0]).unwrap();
        assert_eq!(grads.layers[0].0[[0, 0]], 0.35);
        assert_eq!(grads.layers[0].1[0], 1.0);
    }

    #[test]
    fn relu_at_zero_preactivation_uses_zero_subgradient() {
        // Pre-activation is exactly 0, so the unit passes no gradient down.
        let layers = vec![
            Layer {
                weights: array![[1.0]],
                biases: array![0.0],
                activation: Activation::Relu,
            },
            Layer {
                weights: array![[1.0]],
                biases: array![0.0],
                activation: Activation::Identity,
            },
        ];
        let mlp = Mlp::from_layers(layers).unwrap();
        let (_, tape) = mlp.forward(&[0.0]).unwrap();
        let grads = mlp.backward(&tape, &[1.0]).unwrap();
        assert_eq!(grads.layers[0].0[[0, 0]], 0.0);
        assert_eq!(grads.layers[0].1[0], 0.0);
    }

    /// Central-difference check of `backward` against perturbing single
    /// parameters of the scalar objective Σ ⟨upstream, output⟩.
    fn gradient_check(mlp: &mut Mlp, inputs: &Array2<f64>, upstream: &Array2<f64>, probes: usize) {
        let (_, tape) = mlp.forward_batch(inputs.view()).unwrap();
        let grads = mlp.backward_batch(&tape, upstream.view()).unwrap();

        let objective = |mlp: &Mlp| -> f64 {
            let (y, _) = mlp.forward_batch(inputs.view()).unwrap();
            (&y * upstream).sum()
        };

        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for _ in 0..probes {
            let layer = rng.random_range(0..mlp.layers.len());
            let is_weight = rng.random_bool(0.5);
            let (analytic, coord) = if is_weight {
                let r = rng.random_range(0..mlp.layers[layer].weights.nrows());
                let c = rng.random_range(0..mlp.layers[layer].weights.ncols());
                (grads.layers[layer].0[[r, c]], (r, c))
            } else {
                let c = rng.random_range(0..mlp.layers[layer].biases.len());
                (grads.layers[layer].1[c], (0, c))
            };
            let read = |mlp: &Mlp| {
                if is_weight {
                    mlp.layers[layer].weights[[coord.0, coord.1]]
                } else {
                    mlp.layers[layer].biases[coord.1]
                }
            };
            let write = |mlp: &mut Mlp, v: f64| {
                if is_weight {
                    mlp.layers[layer].weights[[coord.0, coord.1]] = v;
                } else {
                    mlp.layers[layer].biases[coord.1] = v;
                }
            };
            let orig = read(mlp);
            let h = 1e-6 * orig.abs().max(1.0);
            write(mlp, orig + h);
            let plus = objective(mlp);
            write(mlp, orig - h);
            let minus = objective(mlp);
            write(mlp, orig);
            let fd = (plus - minus) / (2.0 * h);
            let denom = analytic.abs().max(fd.abs()).max(1e-8);
            assert!(
                (analytic - fd).abs() / denom < 1e-6,
                "gradient mismatch: analytic {analytic}, fd {fd}"
            );
        }
    }

    #[test]
    fn backward_matches_finite_differences_small_nets() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for (seed, sizes) in [(1u64, vec![2, 8, 3]), (2, vec![4, 16, 16, 1]), (3, vec![1, 12, 2])] {
            let mut mlp = tiny_net(seed, &sizes);
            let batch = 7;
            let inputs =
                Array2::from_shape_fn((batch, sizes[0]), |_| rng.random_range(-2.0..2.0));
            let upstream = Array2::from_shape_fn((batch, *sizes.last().unwrap()), |_| {
                rng.random_range(-1.0..1.0)
            });
            gradient_check(&mut mlp, &inputs, &upstream, 60);
        }
    }

    #[test]
    fn stale_tape_is_rejected() {
        let mut mlp = tiny_net(7, &[2, 4, 1]);
        let (_, tape) = mlp.forward(&[0.1, 0.2]).unwrap();
        let grads = mlp.backward(&tape, &[1.0]).unwrap();
        let mut adam = AdamState::new(&mlp, AdamConfig::new(1e-3, 0.9));
        adam.step(&mut mlp, &grads).unwrap();
        assert!(matches!(
            mlp.backward(&tape, &[1.0]),
            Err(Error::StaleTape)
        ));
    }

    #[test]
    fn tape_from_other_network_is_rejected() {
        let a = tiny_net(1, &[2, 4, 1]);
        let b = tiny_net(1, &[2, 4, 1]);
        let (_, tape) = a.forward(&[0.1, 0.2]).unwrap();
        assert!(matches!(b.backward(&tape, &[1.0]), Err(Error::StaleTape)));
    }

    #[test]
    fn adam_first_step_is_signed_learning_rate() {
        let mut mlp = Mlp::from_layers(vec![Layer {
            weights: array![[1.0, -2.0]],
            biases: array![0.5, -0.5],
            activation: Activation::Identity,
        }])
        .unwrap();
        let grads = Gradients {
            layers: vec![(array![[0.3, -0.7]], array![0.2, -0.1])],
        };
        let gamma = 1e-3;
        let mut adam = AdamState::new(&mlp, AdamConfig::new(gamma, 0.9));
        let before = mlp.layers[0].weights.clone();
        adam.step(&mut mlp, &grads).unwrap();
        for (idx, &g) in [0.3f64, -0.7].iter().enumerate() {
            let delta = mlp.layers[0].weights[[0, idx]] - before[[0, idx]];
            assert_relative_eq!(delta, -gamma * g.signum(), epsilon = 1e-6);
        }
    }

    #[test]
    fn adam_zero_gradient_leaves_parameters() {
        let mut mlp = tiny_net(11, &[2, 4, 1]);
        let snapshot: Vec<Array2<f64>> =
            mlp.layers.iter().map(|l| l.weights.clone()).collect();
        let grads = Gradients::zeros_like(&mlp);
        let mut adam = AdamState::new(&mlp, AdamConfig::new(1e-2, 0.9));
        adam.step(&mut mlp, &grads).unwrap();
        for (layer, old) in mlp.layers.iter().zip(&snapshot) {
            assert_eq!(&layer.weights, old);
        }
    }

    #[test]
    fn adam_equal_gradients_shrink_updates() {
        // Oracle: evaluate the update recurrence directly for two steps with
        // the same gradient and compare coordinatewise magnitudes.
        let g: f64 = 0.37;
        let (gamma, b1, b2, eps) = (1e-2, 0.5, 0.999, 1e-8);
        let mut m = 0.0;
        let mut v = 0.0;
        let mut deltas = Vec::new();
        for t in 1..=2 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - f64::powi(b1, t));
            let vh = v / (1.0 - f64::powi(b2, t));
            deltas.push(gamma * mh / (vh.sqrt() + eps));
        }
        assert!(deltas[1].abs() <= deltas[0].abs());

        let mut mlp = Mlp::from_layers(vec![Layer {
            weights: array![[1.0]],
            biases: array![0.0],
            activation: Activation::Identity,
        }])
        .unwrap();
        let grads = Gradients {
            layers: vec![(array![[g]], array![0.0])],
        };
        let mut adam = AdamState::new(
            &mlp,
            AdamConfig {
                learning_rate: gamma,
                beta1: b1,
                beta2: b2,
                epsilon: eps,
                weight_decay: 0.0,
            },
        );
        let w0 = mlp.layers[0].weights[[0, 0]];
        adam.step(&mut mlp, &grads).unwrap();
        let w1 = mlp.layers[0].weights[[0, 0]];
        adam.step(&mut mlp, &grads).unwrap();
        let w2 = mlp.layers[0].weights[[0, 0]];
        assert!((w2 - w1).abs() <= (w1 - w0).abs() + 1e-15);
        assert_relative_eq!(w1 - w0, -deltas[0], epsilon = 1e-12);
        assert_relative_eq!(w2 - w1, -deltas[1], epsilon = 1e-12);
    }

    #[test]
    fn same_seed_reproduces_trajectories() {
        let run = || {
            let mut mlp = tiny_net(42, &[2, 8, 1]);
            let mut adam = AdamState::new(&mlp, AdamConfig::new(1e-2, 0.9));
            let inputs = array![[0.1, 0.9], [0.4, -0.3], [-1.0, 0.2]];
            for _ in 0..25 {
                let (y, tape) = mlp.forward_batch(inputs.view()).unwrap();
                let upstream = y.mapv(|v| 2.0 * (v - 0.5));
                let grads = mlp.backward_batch(&tape, upstream.view()).unwrap();
                adam.step(&mut mlp, &grads).unwrap();
            }
            mlp.layers
                .iter()
                .flat_map(|l| l.weights.iter().copied().collect::<Vec<_>>())
                .collect::<Vec<f64>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let mut mlp = tiny_net(13, &[3, 10, 2]);
        let mut adam = AdamState::new(&mlp, AdamConfig::new(1e-3, 0.5));
        let inputs = array![[0.3, -0.4, 0.9]];
        let (_, tape) = mlp.forward_batch(inputs.view()).unwrap();
        let grads = mlp
            .backward_batch(&tape, array![[1.0, -0.5]].view())
            .unwrap();
        adam.step(&mut mlp, &grads).unwrap();

        save_checkpoint(&path, &mlp, Some(&adam)).unwrap();
        let (loaded, loaded_adam) = load_checkpoint(&path).unwrap();
        let loaded_adam = loaded_adam.unwrap();

        for (a, b) in mlp.layers.iter().zip(loaded.layers.iter()) {
            assert_eq!(a.weights, b.weights);
            assert_eq!(a.biases, b.biases);
            assert_eq!(a.activation, b.activation);
        }
        assert_eq!(adam.step_count, loaded_adam.step_count);
        assert_eq!(adam.config, loaded_adam.config);
        for (a, b) in adam.first_moment.iter().zip(&loaded_adam.first_moment) {
            assert_eq!(a.0, b.0);
            assert_eq!(a.1, b.1);
        }
    }

    #[test]
    fn forward_rejects_wrong_input_width() {
        let mlp = tiny_net(1, &[3, 4, 1]);
        assert!(matches!(
            mlp.forward(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
