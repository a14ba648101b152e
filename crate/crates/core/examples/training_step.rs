//! The end-to-end call as a training loop would use it: one batch in, mixed
//! images and soft targets out, reseeded per step.

use std::time::Instant;

use comix::benchlab::synthetic_batch;
use comix::{mix_batch, Hyperparams, OptimizerConfig, SaliencySource};

fn main() -> comix::Result<()> {
    let params = Hyperparams {
        levels: 3,
        ..Hyperparams::default()
    };
    for step in 0..5u64 {
        let batch = synthetic_batch(40, 3, 32, 32, 1000 + step)?;
        let config = OptimizerConfig {
            params: params.clone(),
            seed: step,
            ..OptimizerConfig::default()
        };
        let start = Instant::now();
        let mixed = mix_batch(
            &batch.inputs,
            &SaliencySource::Maps(batch.saliency),
            Some(&batch.labels),
            &config,
        )?;
        let target_mass: f64 = mixed.soft_labels.iter().sum();
        println!(
            "step {step}: {} partitions, {:.1} ms, diversity {:.3}, target mass {target_mass:.1}",
            mixed.report.partitions,
            start.elapsed().as_secs_f64() * 1e3,
            mixed.report.diversity,
        );
    }
    Ok(())
}
