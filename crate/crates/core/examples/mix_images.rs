//! Mix a directory of PNGs (or a synthetic batch) and write the results.
//!
//! ```text
//! cargo run --release --example mix_images -- [input-dir] [out-dir]
//! ```

use std::path::PathBuf;

use comix::benchlab::synthetic_batch;
use comix::tensor_io::load_image_batch;
use comix::{mix_batch, OptimizerConfig, SaliencySource};

fn main() -> comix::Result<()> {
    let mut args = std::env::args().skip(1);
    let input = args.next().map(PathBuf::from);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "mixed".into()));

    let (batch, saliency) = match input {
        Some(dir) => (load_image_batch(&dir)?, SaliencySource::Proxy),
        None => {
            let b = synthetic_batch(8, 3, 64, 64, 1)?;
            (b.inputs, SaliencySource::Maps(b.saliency))
        }
    };

    let mixed = mix_batch(&batch, &saliency, None, &OptimizerConfig::default())?;
    std::fs::create_dir_all(&out).map_err(|e| comix::Error::Io { path: out.clone(), source: e })?;
    for (name, bytes) in mixed.png_artifacts()? {
        let name = name.trim_start_matches("png/");
        let path = out.join(name);
        std::fs::write(&path, bytes).map_err(|e| comix::Error::Io { path, source: e })?;
    }

    println!("{} inputs -> {} outputs in {}", batch.len(), mixed.outputs.len(), out.display());
    for (j, row) in mixed.soft_labels.chunks(mixed.classes).enumerate() {
        let parts: Vec<String> = row
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(c, w)| format!("{c}:{w:.3}"))
            .collect();
        println!("output {j:2}: {}", parts.join(" "));
    }
    println!(
        "diversity {:.3}, batch saliency {:.3}",
        mixed.report.diversity, mixed.report.batch_saliency
    );
    Ok(())
}
