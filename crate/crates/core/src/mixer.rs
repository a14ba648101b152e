//! Turning a labeling into mixed images and soft labels.

use crate::benchlab::{stats_diversity, stats_inputs_per_output};
use crate::energy::{soft_output_ratio, Labeling};
use crate::error::{Error, Result};
use crate::saliency::block_size;
use crate::tensor_io::{InputBatch, LabelMatrix};

/// Statistics of a mixed batch.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct MixStats {
    pub diversity: f64,
    /// Set when saliency is known; see [`crate::benchlab::stats_batch_saliency`].
    pub batch_saliency: Option<f64>,
    /// `inputs_per_output[c - 1]` outputs draw on exactly `c` inputs.
    pub inputs_per_output: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct MixResult {
    pub outputs: InputBatch,
    /// `m' × K`, row-major.
    pub soft_labels: Vec<f64>,
    pub classes: usize,
    pub labeling: Labeling,
    pub stats: MixStats,
}

/// Maps pixels to grid cells; image extents are padded up to a multiple of
/// the grid side exactly as in downsampling.
struct CellMap {
    side: usize,
    block_h: usize,
    block_w: usize,
}

impl CellMap {
    fn new(side: usize, height: usize, width: usize) -> Self {
        Self {
            side,
            block_h: block_size(height, side),
            block_w: block_size(width, side),
        }
    }

    fn cell(&self, y: usize, x: usize) -> usize {
        (y / self.block_h) * self.side + x / self.block_w
    }
}

fn grid_side(z: &Labeling) -> Result<usize> {
    let side = (z.sites() as f64).sqrt().round() as usize;
    if side * side != z.sites() {
        return Err(Error::DimensionMismatch(format!(
            "labeling has {} sites, not a square grid",
            z.sites()
        )));
    }
    Ok(side)
}

/// Dense per-pixel masks `m' × m × H × W` by block replication of each cell.
pub fn upsample_labeling(z: &Labeling, height: usize, width: usize) -> Result<Vec<f64>> {
    let side = grid_side(z)?;
    if height == 0 || width == 0 {
        return Err(Error::DimensionMismatch("empty target extent".into()));
    }
    let cells = CellMap::new(side, height, width);
    let (outputs, m, plane) = (z.outputs(), z.inputs(), height * width);
    let mut masks = vec![0.0; outputs * m * plane];
    for j in 0..outputs {
        for y in 0..height {
            for x in 0..width {
                let k = cells.cell(y, x);
                for i in 0..m {
                    masks[(j * m + i) * plane + y * width + x] = z.value(j, k, i);
                }
            }
        }
    }
    Ok(masks)
}

/// `output_j = Σ_i mask_{j,i} ⊙ x_i` and soft labels `y_Bᵀ õ_j`.
pub fn assemble(inputs: &InputBatch, labels: &LabelMatrix, z: &Labeling) -> Result<MixResult> {
    if z.inputs() != inputs.len() || labels.rows() != inputs.len() {
        return Err(Error::DimensionMismatch(format!(
            "labeling mixes {} inputs, batch has {}, labels {}",
            z.inputs(),
            inputs.len(),
            labels.rows()
        )));
    }
    let side = grid_side(z)?;
    let (c, h, w) = (inputs.channels(), inputs.height(), inputs.width());
    let cells = CellMap::new(side, h, w);
    let plane = h * w;
    let mut data = vec![0.0; z.outputs() * c * plane];
    for j in 0..z.outputs() {
        let out = &mut data[j * c * plane..(j + 1) * c * plane];
        for y in 0..h {
            for x in 0..w {
                let k = cells.cell(y, x);
                let column = z.column(j, k);
                for (i, &count) in column.iter().enumerate() {
                    if count == 0 {
                        continue;
                    }
                    let weight = z.value(j, k, i);
                    let src = inputs.image(i);
                    for ch in 0..c {
                        let p = ch * plane + y * w + x;
                        out[p] += weight * src[p];
                    }
                }
            }
        }
    }
    let outputs = InputBatch::new(z.outputs(), c, h, w, data)?;

    let classes = labels.classes();
    let mut soft_labels = vec![0.0; z.outputs() * classes];
    for j in 0..z.outputs() {
        for (i, ratio) in soft_output_ratio(z, j).into_iter().enumerate() {
            soft_labels[j * classes + labels.class_of(i)] += ratio;
        }
    }
    let stats = MixStats {
        diversity: stats_diversity(std::slice::from_ref(z)),
        batch_saliency: None,
        inputs_per_output: stats_inputs_per_output(z),
    };
    Ok(MixResult {
        outputs,
        soft_labels,
        classes,
        labeling: z.clone(),
        stats,
    })
}
