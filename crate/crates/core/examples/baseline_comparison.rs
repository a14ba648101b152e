//! The optimizer against the permutation-chain baseline and random labelings.

use comix::benchlab::{run_suite, BenchSize, Suite};
use comix::Hyperparams;

fn main() -> comix::Result<()> {
    let sizes: Vec<BenchSize> = [5, 10, 20]
        .iter()
        .map(|&m| BenchSize { inputs: m, outputs: m, sites: 16 })
        .collect();
    let (_, summary) = run_suite(Suite::Bp, &sizes, 50, &Hyperparams::default(), 4)?;
    for s in &summary.sizes {
        print!("m={:<3}", s.m);
        for method in &s.methods {
            print!(
                "  {}: {:9.2} (sd {:6.2}, {:6.2} ms)",
                method.method,
                method.mean,
                method.std,
                method.mean_seconds * 1e3
            );
        }
        println!();
    }
    Ok(())
}
