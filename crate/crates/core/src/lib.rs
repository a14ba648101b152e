//! Saliency-guided mixup of a whole batch.
//!
//! Each output image is a per-cell convex combination of the inputs, chosen
//! by minimizing a discrete energy with four parts: saliency kept, spatial
//! smoothness of the mixing masks, a penalty on outputs that share salient
//! inputs, and a prior over the mixing ratios of a cell. The solver
//! alternates over outputs; each step modularizes the penalty and solves the
//! remaining pairwise problem with alpha-beta swap moves on a max-flow core.
//!
//! ```no_run
//! use comix::{mix_batch, OptimizerConfig, SaliencySource};
//! use comix::tensor_io::load_image_batch;
//!
//! let batch = load_image_batch("images/".as_ref())?;
//! let mixed = mix_batch(&batch, &SaliencySource::Proxy, None, &OptimizerConfig::default())?;
//! println!("diversity {:.3}", mixed.report.diversity);
//! # Ok::<(), comix::Error>(())
//! ```

pub mod benchlab;
pub mod cli;
pub mod energy;
pub mod error;
pub mod graphcut;
pub mod mixer;
pub mod modularize;
pub mod optimizer;
pub mod pipeline;
pub mod rng;
pub mod saliency;
pub mod tensor_io;

pub use energy::{objective_eval, EnergyBreakdown, EnergyModel, Hyperparams, Labeling, Neighborhood};
pub use error::{Error, Result};
pub use optimizer::{comix_optimize, OptimizerConfig, StateSet};
pub use pipeline::{mix_batch, MixOutcome, SaliencySource};
