//! How close the optimizer gets to the exhaustive optimum on tiny instances.

use comix::benchlab::{run_suite, BenchSize, Suite};
use comix::Hyperparams;

fn main() -> comix::Result<()> {
    let seeds = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let sizes = [
        BenchSize { inputs: 2, outputs: 2, sites: 4 },
        BenchSize { inputs: 2, outputs: 2, sites: 9 },
        BenchSize { inputs: 3, outputs: 3, sites: 4 },
    ];
    let (_, summary) = run_suite(Suite::Brute, &sizes, seeds, &Hyperparams::default(), 4)?;
    println!("{:<10} {:>9} {:>9} {:>9} {:>9}", "m,m',n", "ours", "brute", "random", "rel.err");
    for s in &summary.sizes {
        let mean = |name| s.method(name).map_or(f64::NAN, |m| m.mean);
        println!(
            "{:<10} {:>9.3} {:>9.3} {:>9.3} {:>9.4}",
            format!("{},{},{}", s.m, s.m_out, s.n),
            mean("ours"),
            mean("brute"),
            mean("random"),
            s.rel_error.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
