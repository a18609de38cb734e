//! Experiment configuration: a flat key/value document with one section per
//! training method. Unknown keys are rejected with their line number so
//! typos cannot silently fall back to defaults.
//!
//! ```text
//! problem = regression_mse_mse
//! networks = 5
//! iterations = 20000
//! ref = 20,20
//! repeats = 5
//! master_seed = 1
//! methods = hv_per_sample, linear_scalarization
//!
//! [hv_per_sample]
//! gamma = 1e-3
//! beta1 = 0.5
//!
//! [linear_scalarization]
//! gamma = 1e-4
//! beta1 = 0.99
//! weights = 1 0 | 0.75 0.25 | 0.5 0.5 | 0.25 0.75 | 0 1
//! ```
//!
//! Every omitted hyperparameter falls back to the tuned per-problem default
//! (see [`default_adam`]), and linear scalarization without explicit
//! `weights` gets evenly spaced trade-off vectors.

use hvfront_core::dynamic_loss::WeightOptions;
use hvfront_core::error::Error as CoreError;
use hvfront_core::hypervolume::ReferencePoint;
use hvfront_core::neural::AdamConfig;
use hvfront_core::problems::{LossPair, ProblemSpec, TwoSampleCase};
use hvfront_core::trainer::{Method, TrainConfig};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::CliError;

pub const ALL_PROBLEMS: &[&str] = &[
    "regression_mse_mse",
    "regression_mse_l1",
    "regression_mse_scaled_mse",
    "regression3",
    "strictly_convex",
    "linear",
    "non_convex",
    "counter_example",
];

pub fn problem_by_name(name: &str, samples: usize) -> Option<ProblemSpec> {
    Some(match name {
        "regression_mse_mse" => ProblemSpec::regression(LossPair::MseMse, samples),
        "regression_mse_l1" => ProblemSpec::regression(LossPair::MseL1, samples),
        "regression_mse_scaled_mse" => ProblemSpec::regression(LossPair::MseScaledMse, samples),
        "regression3" => ProblemSpec::regression_three(samples),
        "strictly_convex" => ProblemSpec::two_sample(TwoSampleCase::StrictlyConvex),
        "linear" => ProblemSpec::two_sample(TwoSampleCase::Linear),
        "non_convex" => ProblemSpec::two_sample(TwoSampleCase::NonConvex),
        "counter_example" => ProblemSpec::two_sample(TwoSampleCase::CounterExample),
        _ => return None,
    })
}

/// Tuned learning rate and β₁ per problem and method (grid-search winners;
/// the saturating and counter-example cases reuse their nearest published
/// row). β₂, ε, and weight decay keep their usual defaults.
pub fn default_adam(problem: &str, method: Method) -> AdamConfig {
    let (gamma, beta1) = match (problem, method) {
        ("regression_mse_mse", Method::LinearScalarization) => (1e-4, 0.99),
        ("regression_mse_mse", _) => (1e-3, 0.5),
        ("regression_mse_l1", Method::LinearScalarization) => (1e-4, 0.99),
        ("regression_mse_l1", _) => (1e-3, 0.99),
        ("regression_mse_scaled_mse", Method::LinearScalarization) => (1e-4, 0.9),
        ("regression_mse_scaled_mse", _) => (1e-3, 0.99),
        ("regression3", Method::LinearScalarization) => (1e-4, 0.99),
        ("regression3", _) => (1e-3, 0.5),
        ("strictly_convex" | "counter_example", Method::LinearScalarization) => (1e-2, 0.9),
        ("strictly_convex" | "counter_example", Method::HvPerSample) => (1e-2, 0.9),
        ("strictly_convex" | "counter_example", Method::HvAverage) => (1e-3, 0.9),
        ("linear", Method::LinearScalarization) => (1e-2, 0.9),
        ("linear", _) => (1e-4, 0.9),
        ("non_convex", Method::LinearScalarization) => (1e-5, 0.9),
        ("non_convex", _) => (1e-3, 0.9),
        _ => (1e-3, 0.9),
    };
    AdamConfig::new(gamma, beta1)
}

fn default_iterations(problem: &str) -> usize {
    if problem.starts_with("regression") {
        20_000
    } else {
        10_000
    }
}

/// Evenly spaced two-objective trade-off vectors for `p` networks.
pub fn evenly_spaced_weights(p: usize) -> Vec<Vec<f64>> {
    if p == 1 {
        return vec![vec![0.5, 0.5]];
    }
    (0..p)
        .map(|i| {
            let t = i as f64 / (p - 1) as f64;
            vec![1.0 - t, t]
        })
        .collect()
}

/// One training method with its resolved hyperparameters.
#[derive(Debug, Clone)]
pub struct MethodSettings {
    pub method: Method,
    pub optimizer: AdamConfig,
    pub fixed_weights: Option<Vec<Vec<f64>>>,
}

/// A parsed, fully resolved experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem_name: String,
    pub problem: ProblemSpec,
    pub networks: usize,
    pub iterations: usize,
    pub batch_size: Option<usize>,
    pub reference: ReferencePoint,
    pub eval_every: usize,
    pub repeats: usize,
    pub master_seed: u64,
    pub hidden: Vec<usize>,
    pub weight_options: WeightOptions,
    pub methods: Vec<MethodSettings>,
    pub plot_samples: Option<Vec<usize>>,
}

fn parse_err(line: usize, message: impl Into<String>) -> CliError {
    CliError::Config(CoreError::Parse {
        line,
        message: message.into(),
    })
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, CliError> {
    value
        .parse()
        .map_err(|_| parse_err(line, format!("key `{key}`: expected a number, got `{value}`")))
}

fn parse_usize(line: usize, key: &str, value: &str) -> Result<usize, CliError> {
    value.parse().map_err(|_| {
        parse_err(
            line,
            format!("key `{key}`: expected a nonnegative integer, got `{value}`"),
        )
    })
}

fn parse_list_f64(line: usize, key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    value
        .split(',')
        .map(|tok| parse_f64(line, key, tok.trim()))
        .collect()
}

fn parse_switch(line: usize, key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err(parse_err(
            line,
            format!("key `{key}`: expected `on` or `off`, got `{value}`"),
        )),
    }
}

const GLOBAL_KEYS: &[&str] = &[
    "problem",
    "samples",
    "networks",
    "iterations",
    "batch_size",
    "ref",
    "eval_every",
    "repeats",
    "master_seed",
    "hidden",
    "methods",
    "normalize",
    "rank",
    "plot_samples",
];

const METHOD_KEYS: &[&str] = &["gamma", "beta1", "beta2", "epsilon", "weight_decay", "weights"];

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::Io)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        // (line, key) -> value, per section; BTreeMap keeps reporting stable.
        let mut global: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut sections: BTreeMap<String, (usize, BTreeMap<String, (usize, String)>)> =
            BTreeMap::new();
        let mut current: Option<String> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| parse_err(line_no, "unterminated section header"))?
                    .trim()
                    .to_string();
                if Method::parse(&name).is_none() {
                    return Err(parse_err(
                        line_no,
                        format!("unknown method section `[{name}]`"),
                    ));
                }
                if sections.contains_key(&name) {
                    return Err(parse_err(line_no, format!("duplicate section `[{name}]`")));
                }
                sections.insert(name.clone(), (line_no, BTreeMap::new()));
                current = Some(name);
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                parse_err(line_no, format!("expected `key = value`, got `{line}`"))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            let (allowed, bucket) = match &current {
                None => (GLOBAL_KEYS, &mut global),
                Some(name) => (METHOD_KEYS, &mut sections.get_mut(name).unwrap().1),
            };
            if !allowed.contains(&key.as_str()) {
                return Err(parse_err(line_no, format!("unknown key `{key}`")));
            }
            if bucket.insert(key.clone(), (line_no, value)).is_some() {
                return Err(parse_err(line_no, format!("duplicate key `{key}`")));
            }
        }

        let take = |map: &BTreeMap<String, (usize, String)>, key: &str| {
            map.get(key).map(|(l, v)| (*l, v.clone()))
        };

        let (problem_line, problem_name) = take(&global, "problem")
            .ok_or_else(|| parse_err(1, "missing required key `problem`"))?;
        let is_regression = problem_name.starts_with("regression");
        if !is_regression {
            if let Some((l, _)) = take(&global, "samples") {
                return Err(parse_err(
                    l,
                    "`samples` only applies to the regression problems",
                ));
            }
        }
        let samples = match take(&global, "samples") {
            Some((l, v)) => parse_usize(l, "samples", &v)?,
            None => 200,
        };
        let problem = problem_by_name(&problem_name, samples).ok_or_else(|| {
            parse_err(
                problem_line,
                format!(
                    "unknown problem `{problem_name}`; expected one of {}",
                    ALL_PROBLEMS.join(", ")
                ),
            )
        })?;
        let n = problem.objectives();

        let networks = match take(&global, "networks") {
            Some((l, v)) => parse_usize(l, "networks", &v)?,
            None => 5,
        };
        let iterations = match take(&global, "iterations") {
            Some((l, v)) => parse_usize(l, "iterations", &v)?,
            None => default_iterations(&problem_name),
        };
        let batch_size = match take(&global, "batch_size") {
            Some((_, v)) if v == "full" => None,
            Some((l, v)) => Some(parse_usize(l, "batch_size", &v)?),
            None => None,
        };
        let reference = match take(&global, "ref") {
            Some((l, v)) => ReferencePoint::new(parse_list_f64(l, "ref", &v)?)
                .map_err(|e| parse_err(l, e.to_string()))?,
            None => ReferencePoint::new(vec![20.0; n]).expect("default reference is valid"),
        };
        let eval_every = match take(&global, "eval_every") {
            Some((l, v)) => parse_usize(l, "eval_every", &v)?,
            None => 250,
        };
        let repeats = match take(&global, "repeats") {
            Some((l, v)) => {
                let r = parse_usize(l, "repeats", &v)?;
                if r == 0 {
                    return Err(parse_err(l, "repeats must be at least 1"));
                }
                r
            }
            None => 1,
        };
        let master_seed = match take(&global, "master_seed") {
            Some((l, v)) => v
                .parse::<u64>()
                .map_err(|_| parse_err(l, "master_seed must be an unsigned integer"))?,
            None => 1,
        };
        let hidden = match take(&global, "hidden") {
            Some((l, v)) => v
                .split(',')
                .map(|t| parse_usize(l, "hidden", t.trim()))
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![100, 100],
        };
        let weight_options = WeightOptions {
            rank: match take(&global, "rank") {
                Some((l, v)) => parse_switch(l, "rank", &v)?,
                None => true,
            },
            normalize: match take(&global, "normalize") {
                Some((l, v)) => parse_switch(l, "normalize", &v)?,
                None => true,
            },
        };
        let plot_samples = match take(&global, "plot_samples") {
            Some((l, v)) => Some(
                v.split(',')
                    .map(|t| parse_usize(l, "plot_samples", t.trim()))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            None => None,
        };

        let method_names: Vec<(usize, String)> = match take(&global, "methods") {
            Some((l, v)) => v
                .split(',')
                .map(|t| (l, t.trim().to_string()))
                .collect(),
            None => vec![(problem_line, "hv_per_sample".to_string())],
        };

        for (declared, (line, _)) in &sections {
            if !method_names.iter().any(|(_, m)| m == declared) {
                return Err(parse_err(
                    *line,
                    format!("section `[{declared}]` is not listed in `methods`"),
                ));
            }
        }

        let mut methods = Vec::with_capacity(method_names.len());
        for (line, name) in &method_names {
            let method = Method::parse(name)
                .ok_or_else(|| parse_err(*line, format!("unknown method `{name}`")))?;
            if methods.iter().any(|m: &MethodSettings| m.method == method) {
                return Err(parse_err(*line, format!("method `{name}` listed twice")));
            }
            let empty = BTreeMap::new();
            let body = sections.get(name).map(|(_, b)| b).unwrap_or(&empty);
            let mut optimizer = default_adam(&problem_name, method);
            if let Some((l, v)) = take(body, "gamma") {
                optimizer.learning_rate = parse_f64(l, "gamma", &v)?;
            }
            if let Some((l, v)) = take(body, "beta1") {
                optimizer.beta1 = parse_f64(l, "beta1", &v)?;
            }
            if let Some((l, v)) = take(body, "beta2") {
                optimizer.beta2 = parse_f64(l, "beta2", &v)?;
            }
            if let Some((l, v)) = take(body, "epsilon") {
                optimizer.epsilon = parse_f64(l, "epsilon", &v)?;
            }
            if let Some((l, v)) = take(body, "weight_decay") {
                optimizer.weight_decay = parse_f64(l, "weight_decay", &v)?;
            }
            let fixed_weights = match (method, take(body, "weights")) {
                (Method::LinearScalarization, Some((l, v))) => {
                    let rows = v
                        .split('|')
                        .map(|row| {
                            row.split_whitespace()
                                .map(|t| parse_f64(l, "weights", t))
                                .collect::<Result<Vec<_>, _>>()
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Some(rows)
                }
                (Method::LinearScalarization, None) => {
                    if n != 2 {
                        return Err(parse_err(
                            *line,
                            "linear_scalarization needs explicit `weights` for three objectives",
                        ));
                    }
                    Some(evenly_spaced_weights(networks))
                }
                (_, Some((l, _))) => {
                    return Err(parse_err(
                        l,
                        "`weights` only applies to linear_scalarization",
                    ));
                }
                (_, None) => None,
            };
            methods.push(MethodSettings {
                method,
                optimizer,
                fixed_weights,
            });
        }

        let config = Self {
            problem_name,
            problem,
            networks,
            iterations,
            batch_size,
            reference,
            eval_every,
            repeats,
            master_seed,
            hidden,
            weight_options,
            methods,
            plot_samples,
        };
        // Surface invalid combinations now, before any training starts.
        for settings in &config.methods {
            config
                .train_config(settings, config.master_seed)
                .validate()
                .map_err(CliError::Config)?;
        }
        Ok(config)
    }

    /// The per-run training configuration for one method and master seed.
    pub fn train_config(&self, settings: &MethodSettings, master_seed: u64) -> TrainConfig {
        TrainConfig {
            problem: self.problem.clone(),
            networks: self.networks,
            iterations: self.iterations,
            batch_size: self.batch_size,
            reference: self.reference.clone(),
            method: settings.method,
            fixed_weights: settings.fixed_weights.clone(),
            optimizer: settings.optimizer,
            hidden: self.hidden.clone(),
            master_seed,
            eval_every: self.eval_every,
            weight_options: self.weight_options,
        }
    }

    /// Render the fully resolved configuration; parsing the result yields an
    /// equivalent config, which is what makes artifact directories
    /// re-runnable.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "problem = {}", self.problem_name);
        if self.problem_name.starts_with("regression") {
            let _ = writeln!(s, "samples = {}", self.problem.sample_count);
        }
        let _ = writeln!(s, "networks = {}", self.networks);
        let _ = writeln!(s, "iterations = {}", self.iterations);
        match self.batch_size {
            Some(b) => {
                let _ = writeln!(s, "batch_size = {b}");
            }
            None => {
                let _ = writeln!(s, "batch_size = full");
            }
        }
        let refs: Vec<String> = self
            .reference
            .coords()
            .iter()
            .map(|c| c.to_string())
            .collect();
        let _ = writeln!(s, "ref = {}", refs.join(","));
        let _ = writeln!(s, "eval_every = {}", self.eval_every);
        let _ = writeln!(s, "repeats = {}", self.repeats);
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        let hidden: Vec<String> = self.hidden.iter().map(|h| h.to_string()).collect();
        let _ = writeln!(s, "hidden = {}", hidden.join(","));
        let _ = writeln!(
            s,
            "rank = {}",
            if self.weight_options.rank { "on" } else { "off" }
        );
        let _ = writeln!(
            s,
            "normalize = {}",
            if self.weight_options.normalize {
                "on"
            } else {
                "off"
            }
        );
        if let Some(samples) = &self.plot_samples {
            let ids: Vec<String> = samples.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(s, "plot_samples = {}", ids.join(","));
        }
        let names: Vec<&str> = self.methods.iter().map(|m| m.method.name()).collect();
        let _ = writeln!(s, "methods = {}", names.join(", "));
        for m in &self.methods {
            let _ = writeln!(s);
            let _ = writeln!(s, "[{}]", m.method.name());
            let _ = writeln!(s, "gamma = {}", m.optimizer.learning_rate);
            let _ = writeln!(s, "beta1 = {}", m.optimizer.beta1);
            let _ = writeln!(s, "beta2 = {}", m.optimizer.beta2);
            let _ = writeln!(s, "epsilon = {}", m.optimizer.epsilon);
            let _ = writeln!(s, "weight_decay = {}", m.optimizer.weight_decay);
            if let Some(rows) = &m.fixed_weights {
                let rendered: Vec<String> = rows
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|w| w.to_string())
                            .collect::<Vec<_>>()
                            .join(" ")
                    })
                    .collect();
                let _ = writeln!(s, "weights = {}", rendered.join(" | "));
            }
        }
        s
    }
}
