//! Saliency maps: normalization, mass-preserving downsampling, a gradient
//! proxy for demos, and the quantities the objective is built from (unary
//! costs and the compatibility matrix).

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tensor_io::InputBatch;

/// Per-input saliency, `m × H × W`, each map summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyBatch {
    len: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl SaliencyBatch {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, i: usize) -> &[f64] {
        let size = self.height * self.width;
        &self.data[i * size..(i + 1) * size]
    }

    pub fn slice(&self, start: usize, len: usize) -> SaliencyBatch {
        let size = self.height * self.width;
        SaliencyBatch {
            len,
            height: self.height,
            width: self.width,
            data: self.data[start * size..(start + len) * size].to_vec(),
        }
    }
}

/// Divides each input's map by its total mass.
pub fn normalize_saliency(
    raw: &[f64],
    len: usize,
    height: usize,
    width: usize,
) -> Result<SaliencyBatch> {
    let size = height * width;
    if len == 0 || size == 0 || raw.len() != len * size {
        return Err(Error::DimensionMismatch(format!(
            "saliency {len}x{height}x{width} needs {} values, got {}",
            len * size,
            raw.len()
        )));
    }
    let mut data = Vec::with_capacity(raw.len());
    for (i, map) in raw.chunks_exact(size).enumerate() {
        if map.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NegativeSaliency { input: i });
        }
        let total: f64 = map.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateSaliency { input: i });
        }
        data.extend(map.iter().map(|v| v / total));
    }
    Ok(SaliencyBatch {
        len,
        height,
        width,
        data,
    })
}

/// Saliency mass per cell of an `s × s` grid, `m × s × s`, row-major cells.
#[derive(Clone, Debug, PartialEq)]
pub struct DownsampledSaliency {
    len: usize,
    side: usize,
    data: Vec<f64>,
}

impl DownsampledSaliency {
    pub fn new(len: usize, side: usize, data: Vec<f64>) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidGridSide(side));
        }
        if data.len() != len * side * side {
            return Err(Error::DimensionMismatch(format!(
                "downsampled saliency {len}x{side}x{side} needs {} values, got {}",
                len * side * side,
                data.len()
            )));
        }
        Ok(Self { len, side, data })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn cells(&self) -> usize {
        self.side * self.side
    }

    /// Mass of input `i` in cell `k`.
    pub fn mass(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.cells() + k]
    }

    pub fn map(&self, i: usize) -> &[f64] {
        let n = self.cells();
        &self.data[i * n..(i + 1) * n]
    }

    /// Row-major index of the heaviest cell; the first one wins ties.
    pub fn peak(&self, i: usize) -> usize {
        let mut best = 0;
        for (k, &v) in self.map(i).iter().enumerate() {
            if v > self.map(i)[best] {
                best = k;
            }
        }
        best
    }
}

/// Block size used to cover `extent` pixels with `side` cells; the image is
/// conceptually zero-padded on the bottom/right up to `block * side`.
pub fn block_size(extent: usize, side: usize) -> usize {
    extent.div_ceil(side)
}

/// Sums saliency over the cells of an `s × s` grid.
pub fn downsample_saliency(saliency: &SaliencyBatch, side: usize) -> Result<DownsampledSaliency> {
    if side == 0 {
        return Err(Error::InvalidGridSide(side));
    }
    let (h, w) = (saliency.height, saliency.width);
    let bh = block_size(h, side);
    let bw = block_size(w, side);
    let n = side * side;
    let mut data = vec![0.0; saliency.len * n];
    for i in 0..saliency.len {
        let map = saliency.map(i);
        let out = &mut data[i * n..(i + 1) * n];
        for y in 0..h {
            let row = y / bh;
            for x in 0..w {
                out[row * side + x / bw] += map[y * w + x];
            }
        }
    }
    DownsampledSaliency::new(saliency.len, side, data)
}

/// Per-pixel ℓ2 norm, across channels, of central-difference image gradients
/// (borders clamp to the edge pixel), normalized per input.
pub fn proxy_saliency(batch: &InputBatch) -> Result<SaliencyBatch> {
    let (c, h, w) = (batch.channels(), batch.height(), batch.width());
    let plane = h * w;
    let mut raw = vec![0.0; batch.len() * plane];
    for i in 0..batch.len() {
        let img = batch.image(i);
        let out = &mut raw[i * plane..(i + 1) * plane];
        for ch in 0..c {
            let p = &img[ch * plane..(ch + 1) * plane];
            for y in 0..h {
                let (up, down) = (y.saturating_sub(1), (y + 1).min(h - 1));
                for x in 0..w {
                    let (left, right) = (x.saturating_sub(1), (x + 1).min(w - 1));
                    let gx = (p[y * w + right] - p[y * w + left]) / 2.0;
                    let gy = (p[down * w + x] - p[up * w + x]) / 2.0;
                    out[y * w + x] += gx * gx + gy * gy;
                }
            }
        }
        out.iter_mut().for_each(|v| *v = v.sqrt());
    }
    normalize_saliency(&raw, batch.len(), h, w)
}

/// Unary costs `c_k[i]`, `n × m`: the negated cell mass.
#[derive(Clone, Debug, PartialEq)]
pub struct UnaryCosts {
    sites: usize,
    inputs: usize,
    data: Vec<f64>,
}

impl UnaryCosts {
    pub fn new(sites: usize, inputs: usize, data: Vec<f64>) -> Result<Self> {
        if sites == 0 || inputs == 0 || data.len() != sites * inputs {
            return Err(Error::DimensionMismatch(format!(
                "unary costs {sites}x{inputs} needs {} values, got {}",
                sites * inputs,
                data.len()
            )));
        }
        Ok(Self {
            sites,
            inputs,
            data,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn get(&self, site: usize, input: usize) -> f64 {
        self.data[site * self.inputs + input]
    }

    /// `c_k`, the cost vector of one site.
    pub fn site(&self, site: usize) -> &[f64] {
        &self.data[site * self.inputs..(site + 1) * self.inputs]
    }
}

pub fn unary_costs(saliency: &DownsampledSaliency) -> UnaryCosts {
    let (m, n) = (saliency.len(), saliency.cells());
    let mut data = vec![0.0; n * m];
    for k in 0..n {
        for i in 0..m {
            data[k * m + i] = -saliency.mass(i, k);
        }
    }
    UnaryCosts::new(n, m, data).expect("shape from a valid saliency batch")
}

/// `A = (1 − ω) I + ω A_c`, where `A_c[i][j]` is the grid ℓ1 distance between
/// the most salient cells of inputs `i` and `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompatibilityMatrix {
    size: usize,
    omega: f64,
    requested_omega: f64,
    distances: Vec<f64>,
    matrix: Vec<f64>,
}

/// Halvings of ω attempted before giving up on positive semi-definiteness.
pub const MAX_OMEGA_HALVINGS: usize = 10;
pub const PSD_TOLERANCE: f64 = 1e-9;

impl CompatibilityMatrix {
    /// `A = I`, i.e. ω = 0.
    pub fn identity(size: usize) -> Self {
        Self::assemble(vec![0.0; size * size], size, 0.0, 0.0)
    }

    /// Builds `A` from a distance matrix, shrinking ω until `A` is PSD.
    pub fn from_distances(distances: Vec<f64>, size: usize, omega: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&omega) {
            return Err(Error::InvalidParams(format!("omega {omega} outside [0, 1]")));
        }
        if distances.len() != size * size {
            return Err(Error::DimensionMismatch(format!(
                "distance matrix for {size} inputs needs {} values",
                size * size
            )));
        }
        let mut current = omega;
        let mut smallest = f64::NAN;
        for _ in 0..=MAX_OMEGA_HALVINGS {
            let candidate = Self::assemble(distances.clone(), size, current, omega);
            if gershgorin_psd(&candidate.matrix, size) {
                return Ok(candidate);
            }
            smallest = min_eigenvalue(&candidate.matrix, size);
            if smallest >= -PSD_TOLERANCE {
                return Ok(candidate);
            }
            current /= 2.0;
        }
        Err(Error::NotPsd {
            min_eigenvalue: smallest,
            omega: current * 2.0,
        })
    }

    fn assemble(distances: Vec<f64>, size: usize, omega: f64, requested_omega: f64) -> Self {
        let mut matrix = vec![0.0; size * size];
        for i in 0..size {
            for j in 0..size {
                let identity = if i == j { 1.0 - omega } else { 0.0 };
                matrix[i * size + j] = identity + omega * distances[i * size + j];
            }
        }
        Self {
            size,
            omega,
            requested_omega,
            distances,
            matrix,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// The ω actually used, after any PSD shrinking.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn requested_omega(&self) -> f64 {
        self.requested_omega
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.size + j]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances[i * self.size + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, slot) in out.iter_mut().enumerate() {
            let row = &self.matrix[i * self.size..(i + 1) * self.size];
            *slot = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// `xᵀ A y`.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.size {
            if x[i] == 0.0 {
                continue;
            }
            let row = &self.matrix[i * self.size..(i + 1) * self.size];
            total += x[i] * row.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        }
        total
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.matrix, self.size)
    }
}

pub fn compatibility_matrix(
    saliency: &DownsampledSaliency,
    omega: f64,
) -> Result<CompatibilityMatrix> {
    let m = saliency.len();
    let side = saliency.side();
    let peaks: Vec<(usize, usize)> = (0..m)
        .map(|i| {
            let k = saliency.peak(i);
            (k / side, k % side)
        })
        .collect();
    let mut distances = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let (a, b) = (peaks[i], peaks[j]);
            distances[i * m + j] = (a.0.abs_diff(b.0) + a.1.abs_diff(b.1)) as f64;
        }
    }
    CompatibilityMatrix::from_distances(distances, m, omega)
}

/// Diagonally dominant with a nonnegative diagonal implies PSD.
fn gershgorin_psd(matrix: &[f64], size: usize) -> bool {
    (0..size).all(|i| {
        let off: f64 = (0..size)
            .filter(|&j| j != i)
            .map(|j| matrix[i * size + j].abs())
            .sum();
        matrix[i * size + i] - off >= 0.0
    })
}

fn min_eigenvalue(matrix: &[f64], size: usize) -> f64 {
    if size == 0 {
        return 0.0;
    }
    let m = DMatrix::from_row_slice(size, size, matrix);
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_map_normalizes_to_quarters() {
        let s = normalize_saliency(&[1.0; 4], 1, 2, 2).unwrap();
        assert_eq!(s.data(), &[0.25; 4]);
    }

    #[test]
    fn zero_and_negative_maps_are_rejected() {
        assert!(matches!(
            normalize_saliency(&[1.0, 1.0, 0.0, 0.0], 2, 1, 2),
            Err(Error::DegenerateSaliency { input: 1 })
        ));
        assert!(matches!(
            normalize_saliency(&[1.0, -1.0], 1, 1, 2),
            Err(Error::NegativeSaliency { input: 0 })
        ));
    }

    #[test]
    fn block_sums() {
        let s = normalize_saliency(&[1.0; 16], 1, 4, 4).unwrap();
        let ds = downsample_saliency(&s, 2).unwrap();
        assert_eq!(ds.map(0), &[0.25; 4]);
        let same = downsample_saliency(&s, 4).unwrap();
        assert_eq!(same.map(0), s.map(0));
        assert!(matches!(
            downsample_saliency(&s, 0),
            Err(Error::InvalidGridSide(0))
        ));
    }

    #[test]
    fn non_divisible_extent_pads_with_zeros() {
        // 5x5 onto a 2x2 grid: blocks are 3 wide, the last row/column short.
        let s = normalize_saliency(&[1.0; 25], 1, 5, 5).unwrap();
        let ds = downsample_saliency(&s, 2).unwrap();
        let expect = [9.0 / 25.0, 6.0 / 25.0, 6.0 / 25.0, 4.0 / 25.0];
        for (a, b) in ds.map(0).iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unary_is_negated_mass() {
        let ds = DownsampledSaliency::new(2, 1, vec![1.0, 1.0]).unwrap();
        let c = unary_costs(&ds);
        assert_eq!(c.site(0), &[-1.0, -1.0]);

        let ds = DownsampledSaliency::new(1, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let c = unary_costs(&ds);
        assert_eq!(c.get(0, 0), -1.0);
        assert_eq!(c.get(3, 0), 0.0);
    }

    #[test]
    fn compatibility_of_opposite_corners() {
        let mut data = vec![0.0; 32];
        data[0] = 1.0;
        data[16 + 15] = 1.0;
        let ds = DownsampledSaliency::new(2, 4, data).unwrap();
        let a = compatibility_matrix(&ds, 0.001).unwrap();
        assert_eq!(a.distance(0, 1), 6.0);
        assert_eq!(a.distance(1, 0), 6.0);
        assert_eq!(a.distance(0, 0), 0.0);
        assert!((a.get(0, 1) - 0.006).abs() < 1e-15);
        assert!((a.get(0, 0) - 0.999).abs() < 1e-15);
    }

    #[test]
    fn identical_maps_and_zero_omega() {
        let ds = DownsampledSaliency::new(3, 2, vec![0.1, 0.2, 0.3, 0.4].repeat(3)).unwrap();
        let a = compatibility_matrix(&ds, 0.5).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a.distance(i, j), 0.0);
                assert_eq!(a.get(i, j), if i == j { 0.5 } else { 0.0 });
            }
        }
        let a = compatibility_matrix(&ds, 0.0).unwrap();
        assert_eq!(a, CompatibilityMatrix::identity(3));
    }

    #[test]
    fn ties_pick_the_first_cell() {
        let ds = DownsampledSaliency::new(1, 2, vec![0.25; 4]).unwrap();
        assert_eq!(ds.peak(0), 0);
        let ds = DownsampledSaliency::new(1, 2, vec![0.1, 0.4, 0.1, 0.4]).unwrap();
        assert_eq!(ds.peak(0), 1);
    }

    #[test]
    fn large_omega_is_shrunk_until_psd() {
        // Two inputs at distance 6: eigenvalues 1 - ω ± 6ω, PSD iff ω ≤ 1/7.
        let dist = vec![0.0, 6.0, 6.0, 0.0];
        let a = CompatibilityMatrix::from_distances(dist, 2, 1.0).unwrap();
        assert!(a.omega() <= 1.0 / 7.0);
        assert!(a.omega() > 1.0 / 14.0);
        assert_eq!(a.requested_omega(), 1.0);
        assert!(a.min_eigenvalue() >= -PSD_TOLERANCE);
    }

    #[test]
    fn proxy_of_single_bright_pixel_hits_its_neighbours() {
        let mut data = vec![0.0; 25];
        data[12] = 1.0;
        let batch = InputBatch::new(1, 1, 5, 5, data).unwrap();
        let s = proxy_saliency(&batch).unwrap();
        for (idx, &v) in s.map(0).iter().enumerate() {
            let expected = if [7, 11, 13, 17].contains(&idx) { 0.25 } else { 0.0 };
            assert!((v - expected).abs() < 1e-12, "pixel {idx}: {v}");
        }
    }

    #[test]
    fn proxy_of_constant_image_is_degenerate() {
        let batch = InputBatch::new(1, 3, 4, 4, vec![0.7; 48]).unwrap();
        assert!(matches!(
            proxy_saliency(&batch),
            Err(Error::DegenerateSaliency { input: 0 })
        ));
    }
}
