//! Batch statistics as the clipping level changes.

use comix::benchlab::synthetic_batch;
use comix::cli::{sweep, SweepArg};
use comix::{OptimizerConfig, SaliencySource};

fn main() -> comix::Result<()> {
    let batch = synthetic_batch(20, 3, 32, 32, 7)?;
    let source = SaliencySource::Maps(batch.saliency);
    let taus = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2];
    let rows = sweep(&batch.inputs, &source, &OptimizerConfig::default(), SweepArg::Tau, &taus)?;

    println!("{:>5} {:>9} {:>9}  inputs per output", "tau", "diversity", "saliency");
    for r in rows {
        let mean_inputs: f64 = r
            .inputs_per_output
            .iter()
            .enumerate()
            .map(|(c, &n)| (c + 1) as f64 * n as f64)
            .sum::<f64>()
            / 20.0;
        let hist: Vec<usize> = r.inputs_per_output.iter().take(6).copied().collect();
        println!(
            "{:>5.2} {:>9.3} {:>9.3}  {hist:?} mean {mean_inputs:.2}",
            r.value, r.diversity, r.batch_saliency
        );
    }
    Ok(())
}
