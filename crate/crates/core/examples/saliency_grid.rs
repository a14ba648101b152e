//! Proxy saliency, its 4×4 cell masses, and the compatibility matrix.

use comix::benchlab::synthetic_batch;
use comix::saliency::{compatibility_matrix, downsample_saliency, proxy_saliency};

fn main() -> comix::Result<()> {
    let batch = synthetic_batch(4, 3, 32, 32, 11)?;
    let saliency = proxy_saliency(&batch.inputs)?;
    let grid = downsample_saliency(&saliency, 4)?;

    for i in 0..grid.len() {
        println!("input {i} (peak cell {}):", grid.peak(i));
        for row in grid.map(i).chunks(4) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
            println!("  {}", cells.join(" "));
        }
    }

    let a = compatibility_matrix(&grid, 0.001)?;
    println!("compatibility (omega {}):", a.omega());
    for i in 0..a.size() {
        let row: Vec<String> = (0..a.size()).map(|j| format!("{:.4}", a.get(i, j))).collect();
        println!("  {}", row.join(" "));
    }
    Ok(())
}
