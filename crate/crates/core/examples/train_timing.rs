//! Quick throughput probe: times a shortened regression training run and
//! extrapolates to the full budget.

use hvfront_core::hypervolume::ReferencePoint;
use hvfront_core::neural::AdamConfig;
use hvfront_core::problems::{LossPair, ProblemSpec};
use hvfront_core::trainer::{train, Method, TrainConfig};
use hvfront_core::dynamic_loss::WeightOptions;

fn main() {
    let iterations: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(500);
    let config = TrainConfig {
        problem: ProblemSpec::regression(LossPair::MseMse, 200),
        networks: 5,
        iterations,
        batch_size: None,
        reference: ReferencePoint::new(vec![20.0, 20.0]).unwrap(),
        method: Method::HvPerSample,
        fixed_weights: None,
        optimizer: AdamConfig::new(1e-3, 0.5),
        hidden: vec![100, 100],
        master_seed: 1,
        eval_every: 250,
        weight_options: WeightOptions::default(),
    };
    let start = std::time::Instant::now();
    let (_, record) = train(&config).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "{iterations} iterations in {elapsed:.2}s ({:.1} it/s); projected 20000 iters: {:.1}s; final mean HV {:.4}",
        iterations as f64 / elapsed,
        elapsed / iterations as f64 * 20000.0,
        record.final_mean_hv()
    );
}
