//! Per-term objective values for a few labelings of the same batch.

use comix::benchlab::synthetic_batch;
use comix::energy::{objective_eval, Labeling};
use comix::optimizer::{init_labeling, optimize_from, partition_model, OptimizerConfig};
use comix::saliency::normalize_saliency;

fn main() -> comix::Result<()> {
    let m = 6;
    let batch = synthetic_batch(m, 3, 32, 32, 4)?;
    let saliency = normalize_saliency(&batch.saliency, m, 32, 32)?;
    let config = OptimizerConfig::default();
    let (model, _) = partition_model(&saliency, &config.params)?;
    let n = model.sites();

    let init = init_labeling(m, m, n, config.params.levels, config.seed);
    let (optimized, stats) = optimize_from(&model, &config, init.clone())?;
    let candidates = [
        ("identity", Labeling::identity(m, n, config.params.levels)),
        ("random init", init),
        ("optimized", optimized),
    ];

    println!("tau_abs = {:.3}", model.tau_abs());
    println!(
        "{:<12} {:>9} {:>10} {:>10} {:>10} {:>9} {:>9}",
        "labeling", "unary", "smooth", "compat", "clipped", "prior", "total"
    );
    for (name, z) in &candidates {
        let b = objective_eval(&model, z)?;
        println!(
            "{name:<12} {:>9.3} {:>10.3} {:>10.3} {:>10.3} {:>9.3} {:>9.3}",
            b.unary, b.smoothness, b.compat_raw, b.compat_clipped, b.prior, b.total
        );
    }
    println!("objective per cycle: {:?}", stats.objective_trace);
    Ok(())
}
