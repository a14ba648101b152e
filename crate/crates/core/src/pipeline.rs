//! End-to-end mixing of a batch: saliency, partitioned optimization,
//! assembly, and the serialized artifacts written by `comix mix`.

use serde::Serialize;

use crate::benchlab::{stats_batch_saliency, stats_diversity, stats_inputs_per_output};
use crate::energy::{Hyperparams, Labeling};
use crate::error::{Error, Result};
use crate::mixer::assemble;
use crate::optimizer::{comix_optimize, OptimizerConfig, PartitionSolution, StateSet};
use crate::saliency::{normalize_saliency, proxy_saliency};
use crate::tensor_io::{encode_png, write_container, InputBatch, LabelMatrix, TensorContainer};

/// Where per-pixel saliency comes from.
#[derive(Clone, Debug)]
pub enum SaliencySource {
    /// Gradient-magnitude proxy computed from the inputs.
    Proxy,
    /// Nonnegative maps `m × H × W`, normalized per input before use.
    Maps(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionReport {
    pub start: usize,
    pub end: usize,
    pub omega: f64,
    pub initial_objective: f64,
    pub objective_trace: Vec<f64>,
    pub columns_changed: Vec<usize>,
    pub batch_saliency: f64,
}

/// Contents of `stats.json`. Deterministic for fixed arguments.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixReport {
    pub inputs: usize,
    pub outputs: usize,
    pub seed: u64,
    pub params: Hyperparams,
    pub state_set: StateSet,
    pub partitions: usize,
    pub diversity: f64,
    pub batch_saliency: f64,
    pub inputs_per_output: Vec<usize>,
    pub partition_reports: Vec<PartitionReport>,
}

#[derive(Clone, Debug)]
pub struct MixOutcome {
    pub outputs: InputBatch,
    /// `m × K`, row-major.
    pub soft_labels: Vec<f64>,
    pub classes: usize,
    /// Block-diagonal `m × n × m` labeling: outputs of a partition only draw
    /// on that partition's inputs.
    pub labeling: Labeling,
    pub partitions: Vec<PartitionSolution>,
    pub report: MixReport,
}

/// Mixes `inputs` (`m' = m`) with the default labels `I_m` when `labels` is
/// `None`.
pub fn mix_batch(
    inputs: &InputBatch,
    saliency: &SaliencySource,
    labels: Option<&LabelMatrix>,
    config: &OptimizerConfig,
) -> Result<MixOutcome> {
    config.validate()?;
    let m = inputs.len();
    let identity;
    let labels = match labels {
        Some(l) => l,
        None => {
            identity = LabelMatrix::identity(m);
            &identity
        }
    };
    if labels.rows() != m {
        return Err(Error::DimensionMismatch(format!(
            "{} label rows for {m} inputs",
            labels.rows()
        )));
    }
    let saliency = match saliency {
        SaliencySource::Proxy => proxy_saliency(inputs)?,
        SaliencySource::Maps(raw) => {
            normalize_saliency(raw, m, inputs.height(), inputs.width())?
        }
    };
    let partitions = comix_optimize(&saliency, config)?;

    let (c, h, w) = (inputs.channels(), inputs.height(), inputs.width());
    let classes = labels.classes();
    let n = config.params.grid_side * config.params.grid_side;
    let levels = config.params.levels;
    let mut data = Vec::with_capacity(inputs.data().len());
    let mut soft_labels = Vec::with_capacity(m * classes);
    let mut counts = vec![0u32; m * n * m];
    let mut reports = Vec::with_capacity(partitions.len());
    let mut saliency_total = 0.0;
    for part in &partitions {
        let r = part.range.clone();
        let mixed = assemble(
            &inputs.slice(r.start, r.len())?,
            &labels.slice(r.start, r.len())?,
            &part.labeling,
        )?;
        data.extend_from_slice(mixed.outputs.data());
        soft_labels.extend_from_slice(&mixed.soft_labels);
        for j in 0..r.len() {
            for k in 0..n {
                let start = ((r.start + j) * n + k) * m + r.start;
                counts[start..start + r.len()].copy_from_slice(part.labeling.column(j, k));
            }
        }
        let batch_saliency = stats_batch_saliency(&part.labeling, &part.downsampled)?;
        saliency_total += batch_saliency * r.len() as f64;
        reports.push(PartitionReport {
            start: r.start,
            end: r.end,
            omega: part.model.compat().omega(),
            initial_objective: part.stats.initial_objective,
            objective_trace: part.stats.objective_trace.clone(),
            columns_changed: part.stats.columns_changed.clone(),
            batch_saliency,
        });
    }
    let labeling = Labeling::from_counts(m, n, m, levels, counts)?;
    let part_labelings: Vec<Labeling> = partitions.iter().map(|p| p.labeling.clone()).collect();
    let mut inputs_per_output = vec![0; m];
    for z in &part_labelings {
        for (slot, v) in inputs_per_output.iter_mut().zip(stats_inputs_per_output(z)) {
            *slot += v;
        }
    }
    let report = MixReport {
        inputs: m,
        outputs: m,
        seed: config.seed,
        params: config.params.clone(),
        state_set: config.state_set,
        partitions: partitions.len(),
        diversity: stats_diversity(&part_labelings),
        batch_saliency: saliency_total / m as f64,
        inputs_per_output,
        partition_reports: reports,
    };
    Ok(MixOutcome {
        outputs: InputBatch::new(m, c, h, w, data)?,
        soft_labels,
        classes,
        labeling,
        partitions,
        report,
    })
}

impl MixOutcome {
    pub fn soft_labels_container(&self) -> TensorContainer {
        TensorContainer::from_f64(vec![self.outputs.len(), self.classes], &self.soft_labels)
            .expect("soft label shape is valid")
    }

    /// `(file name, bytes)` for `outputs.cmtx`, `soft_labels.cmtx`,
    /// `labeling.cmtx` and `stats.json`.
    pub fn artifacts(&self) -> Vec<(String, Vec<u8>)> {
        let mut stats = serde_json::to_vec_pretty(&self.report).expect("report serializes");
        stats.push(b'\n');
        vec![
            (
                "outputs.cmtx".into(),
                write_container(&self.outputs.to_container()),
            ),
            (
                "soft_labels.cmtx".into(),
                write_container(&self.soft_labels_container()),
            ),
            (
                "labeling.cmtx".into(),
                write_container(&self.labeling.to_container()),
            ),
            ("stats.json".into(), stats),
        ]
    }

    /// One PNG per output, `png/output_000.png`, ….
    pub fn png_artifacts(&self) -> Result<Vec<(String, Vec<u8>)>> {
        let (c, h, w) = (
            self.outputs.channels(),
            self.outputs.height(),
            self.outputs.width(),
        );
        (0..self.outputs.len())
            .map(|j| {
                let bytes = encode_png(self.outputs.image(j), c, h, w)?;
                Ok((format!("png/output_{j:03}.png"), bytes))
            })
            .collect()
    }
}
