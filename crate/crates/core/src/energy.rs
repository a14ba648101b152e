//! The labeling variable and exact evaluation of the mixup objective
//!
//! ```text
//! f(z) = Σ_j Σ_k c_kᵀ z_{j,k}
//!      + β Σ_j Σ_{(k,k')∈N} (1 − z_{j,k}ᵀ z_{j,k'})
//!      + γ max{τ_abs, Σ_j Σ_{j'≠j} o_jᵀ A o_{j'}}
//!      − η Σ_j Σ_k log p(z_{j,k})
//! ```
//!
//! with `o_j = Σ_k z_{j,k}` and `p` the Dirichlet-multinomial marginal of
//! `z_{j,k} ~ Multi(L, λ) / L`, `λ ~ Dirichlet(α, …, α)`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::saliency::{CompatibilityMatrix, UnaryCosts};
use crate::tensor_io::TensorContainer;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Smoothness weight β.
    pub beta: f64,
    /// Compatibility weight γ.
    pub gamma: f64,
    /// Prior weight η.
    pub eta: f64,
    /// Clipping level τ, relative to the compatibility of a uniform labeling.
    pub tau: f64,
    /// Dirichlet concentration α.
    pub alpha: f64,
    /// Compatibility mixing weight ω.
    pub omega: f64,
    /// Quantization L: entries of a column are multiples of 1/L.
    pub levels: u32,
    /// Side of the downsampled grid; a partition has `grid_side²` sites.
    pub grid_side: usize,
    /// Inputs per independently solved partition.
    pub partition_size: usize,
    /// Outer cycles T.
    pub cycles: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            beta: 0.32,
            gamma: 1.0,
            eta: 0.05,
            tau: 0.83,
            alpha: 2.0,
            omega: 0.001,
            levels: 2,
            grid_side: 4,
            partition_size: 20,
            cycles: 4,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        for (name, v) in [
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("tau", self.tau),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return bad(format!("omega must lie in [0, 1], got {}", self.omega));
        }
        if self.levels < 1 {
            return bad("levels must be >= 1".into());
        }
        if self.grid_side < 1 {
            return Err(Error::InvalidGridSide(self.grid_side));
        }
        if self.partition_size < 1 {
            return bad("partition_size must be >= 1".into());
        }
        if self.cycles < 1 {
            return bad("cycles must be >= 1".into());
        }
        Ok(())
    }
}

/// `z`: for each output `j` and site `k`, a column of `m` mixing ratios.
///
/// Stored as integer counts `L · z_{j,k}[i]`, so every column sums to `L`
/// exactly.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Labeling {
    outputs: usize,
    sites: usize,
    inputs: usize,
    levels: u32,
    counts: Vec<u32>,
}

impl Labeling {
    /// Every column a one-hot on the given input.
    pub fn one_hot(
        outputs: usize,
        sites: usize,
        inputs: usize,
        levels: u32,
        choice: impl Fn(usize, usize) -> usize,
    ) -> Self {
        let mut counts = vec![0; outputs * sites * inputs];
        for j in 0..outputs {
            for k in 0..sites {
                let i = choice(j, k);
                assert!(i < inputs, "one-hot index {i} out of range");
                counts[(j * sites + k) * inputs + i] = levels;
            }
        }
        Self {
            outputs,
            sites,
            inputs,
            levels,
            counts,
        }
    }

    /// Output `j` is input `j` everywhere (`outputs == inputs`).
    pub fn identity(inputs: usize, sites: usize, levels: u32) -> Self {
        Self::one_hot(inputs, sites, inputs, levels, |j, _| j)
    }

    pub fn from_counts(
        outputs: usize,
        sites: usize,
        inputs: usize,
        levels: u32,
        counts: Vec<u32>,
    ) -> Result<Self> {
        if outputs == 0 || sites == 0 || inputs == 0 || levels == 0 {
            return Err(Error::DimensionMismatch(format!(
                "labeling dims must be positive, got {outputs}x{sites}x{inputs}, L={levels}"
            )));
        }
        if counts.len() != outputs * sites * inputs {
            return Err(Error::DimensionMismatch(format!(
                "labeling {outputs}x{sites}x{inputs} needs {} entries, got {}",
                outputs * sites * inputs,
                counts.len()
            )));
        }
        for (c, col) in counts.chunks_exact(inputs).enumerate() {
            let total: u64 = col.iter().map(|&v| v as u64).sum();
            if total != levels as u64 {
                return Err(Error::InvalidColumn(format!(
                    "column {c} sums to {total}/{levels}, expected 1"
                )));
            }
        }
        Ok(Self {
            outputs,
            sites,
            inputs,
            levels,
            counts,
        })
    }

    /// Parses real-valued ratios, `outputs × sites × inputs`, each of which must
    /// be a multiple of `1/levels` (to within 1e-4 of a step).
    pub fn from_values(
        outputs: usize,
        sites: usize,
        inputs: usize,
        levels: u32,
        values: &[f64],
    ) -> Result<Self> {
        let mut counts = Vec::with_capacity(values.len());
        for (idx, &v) in values.iter().enumerate() {
            let scaled = v * levels as f64;
            let rounded = scaled.round();
            if !scaled.is_finite() || rounded < 0.0 || (scaled - rounded).abs() > 1e-4 {
                return Err(Error::InvalidColumn(format!(
                    "entry {idx} = {v} is not a multiple of 1/{levels} in [0, 1]"
                )));
            }
            counts.push(rounded as u32);
        }
        Self::from_counts(outputs, sites, inputs, levels, counts)
    }

    pub fn from_container(tensor: &TensorContainer, levels: u32) -> Result<Self> {
        tensor.expect_rank(3, "labeling")?;
        let s = tensor.shape();
        Self::from_values(s[0], s[1], s[2], levels, &tensor.to_f64_vec())
    }

    /// `f32` tensor of shape `[m', n, m]`.
    pub fn to_container(&self) -> TensorContainer {
        let values: Vec<f64> = self.counts.iter().map(|&c| self.ratio(c)).collect();
        TensorContainer::from_f64(vec![self.outputs, self.sites, self.inputs], &values)
            .expect("labeling shape is valid")
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    fn ratio(&self, count: u32) -> f64 {
        count as f64 / self.levels as f64
    }

    /// Column `z_{j,k}` as counts out of `L`.
    pub fn column(&self, j: usize, k: usize) -> &[u32] {
        let start = (j * self.sites + k) * self.inputs;
        &self.counts[start..start + self.inputs]
    }

    pub fn value(&self, j: usize, k: usize, i: usize) -> f64 {
        self.ratio(self.column(j, k)[i])
    }

    /// Overwrites a column; `counts` must sum to `L`.
    pub fn set_column(&mut self, j: usize, k: usize, counts: &[u32]) -> Result<()> {
        if counts.len() != self.inputs {
            return Err(Error::DimensionMismatch(format!(
                "column has {} entries, expected {}",
                counts.len(),
                self.inputs
            )));
        }
        let total: u64 = counts.iter().map(|&v| v as u64).sum();
        if total != self.levels as u64 {
            return Err(Error::InvalidColumn(format!(
                "column sums to {total}/{}, expected 1",
                self.levels
            )));
        }
        let start = (j * self.sites + k) * self.inputs;
        self.counts[start..start + self.inputs].copy_from_slice(counts);
        Ok(())
    }

    pub fn is_one_hot(&self) -> bool {
        self.counts
            .chunks_exact(self.inputs)
            .all(|col| col.iter().filter(|&&c| c > 0).count() == 1)
    }
}

/// `o_j = Σ_k z_{j,k}`; sums to `n`.
pub fn aggregate(z: &Labeling, j: usize) -> Vec<f64> {
    let mut o = vec![0u64; z.inputs];
    for k in 0..z.sites {
        for (slot, &c) in o.iter_mut().zip(z.column(j, k)) {
            *slot += c as u64;
        }
    }
    o.into_iter().map(|c| c as f64 / z.levels as f64).collect()
}

/// `õ_j = o_j / n`, the input-source ratio of output `j`; sums to 1.
pub fn soft_output_ratio(z: &Labeling, j: usize) -> Vec<f64> {
    let n = z.sites as f64;
    aggregate(z, j).into_iter().map(|v| v / n).collect()
}

/// Log-pmf of a quantized column under the Dirichlet-multinomial prior.
///
/// With counts `x = L · z` this is
/// `ln[L!/∏x_i! · Γ(mα)/Γ(L+mα) · ∏ Γ(x_i+α)/Γ(α)]`.
pub fn prior_logpmf(column: &[u32], alpha: f64, levels: u32) -> Result<f64> {
    let total: u64 = column.iter().map(|&c| c as u64).sum();
    if column.is_empty() || total != levels as u64 {
        return Err(Error::InvalidColumn(format!(
            "prior column {column:?} does not sum to {levels}"
        )));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParams(format!("alpha must be > 0, got {alpha}")));
    }
    let m = column.len() as f64;
    let l = levels as f64;
    let mut acc = ln_gamma(l + 1.0) + ln_gamma(m * alpha) - ln_gamma(l + m * alpha);
    for &x in column {
        if x > 0 {
            let x = x as f64;
            acc += ln_gamma(x + alpha) - ln_gamma(alpha) - ln_gamma(x + 1.0);
        }
    }
    Ok(acc)
}

/// Adjacency structure over the `n` sites of one output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Neighborhood {
    /// 4-neighbourhood on a `side × side` grid, row-major sites.
    Grid { side: usize },
    /// Consecutive sites of a 1-D sequence.
    Chain { len: usize },
}

impl Neighborhood {
    /// A square grid when `sites` is a perfect square, otherwise a chain.
    pub fn for_sites(sites: usize) -> Self {
        let side = (sites as f64).sqrt().round() as usize;
        if side * side == sites {
            Neighborhood::Grid { side }
        } else {
            Neighborhood::Chain { len: sites }
        }
    }

    pub fn sites(&self) -> usize {
        match *self {
            Neighborhood::Grid { side } => side * side,
            Neighborhood::Chain { len } => len,
        }
    }

    /// Unordered adjacent pairs `(k, k')` with `k < k'`, each listed once.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        match *self {
            Neighborhood::Grid { side } => {
                let mut pairs = Vec::with_capacity(2 * side * side.saturating_sub(1));
                for r in 0..side {
                    for c in 0..side {
                        let k = r * side + c;
                        if c + 1 < side {
                            pairs.push((k, k + 1));
                        }
                        if r + 1 < side {
                            pairs.push((k, k + side));
                        }
                    }
                }
                pairs
            }
            Neighborhood::Chain { len } => (1..len).map(|k| (k - 1, k)).collect(),
        }
    }
}

/// Everything needed to evaluate the objective for one partition.
#[derive(Clone, Debug)]
pub struct EnergyModel {
    unary: UnaryCosts,
    neighborhood: Neighborhood,
    neighbors: Vec<(usize, usize)>,
    compat: CompatibilityMatrix,
    params: Hyperparams,
    outputs: usize,
}

impl EnergyModel {
    pub fn new(
        unary: UnaryCosts,
        neighborhood: Neighborhood,
        compat: CompatibilityMatrix,
        params: Hyperparams,
        outputs: usize,
    ) -> Result<Self> {
        params.validate()?;
        if neighborhood.sites() != unary.sites() {
            return Err(Error::DimensionMismatch(format!(
                "neighbourhood covers {} sites, unary costs {}",
                neighborhood.sites(),
                unary.sites()
            )));
        }
        if compat.size() != unary.inputs() {
            return Err(Error::DimensionMismatch(format!(
                "compatibility matrix is {0}x{0}, unary costs have {1} inputs",
                compat.size(),
                unary.inputs()
            )));
        }
        if outputs == 0 {
            return Err(Error::DimensionMismatch("model needs at least one output".into()));
        }
        Ok(Self {
            neighbors: neighborhood.pairs(),
            unary,
            neighborhood,
            compat,
            params,
            outputs,
        })
    }

    pub fn unary(&self) -> &UnaryCosts {
        &self.unary
    }

    pub fn neighborhood(&self) -> Neighborhood {
        self.neighborhood
    }

    pub fn neighbors(&self) -> &[(usize, usize)] {
        &self.neighbors
    }

    pub fn compat(&self) -> &CompatibilityMatrix {
        &self.compat
    }

    pub fn params(&self) -> &Hyperparams {
        &self.params
    }

    /// m'
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// m
    pub fn inputs(&self) -> usize {
        self.unary.inputs()
    }

    /// n
    pub fn sites(&self) -> usize {
        self.unary.sites()
    }

    /// Absolute clipping floor: `τ · n² · m'(m'−1) / m`, i.e. τ times the raw
    /// compatibility of the fully uniform labeling under `A = I`.
    pub fn tau_abs(&self) -> f64 {
        let n = self.sites() as f64;
        let mo = self.outputs as f64;
        self.params.tau * n * n * mo * (mo - 1.0) / self.inputs() as f64
    }

    pub fn check_labeling(&self, z: &Labeling) -> Result<()> {
        if z.outputs() != self.outputs || z.sites() != self.sites() || z.inputs() != self.inputs()
        {
            return Err(Error::DimensionMismatch(format!(
                "labeling is {}x{}x{}, model expects {}x{}x{}",
                z.outputs(),
                z.sites(),
                z.inputs(),
                self.outputs,
                self.sites(),
                self.inputs()
            )));
        }
        if z.levels() != self.params.levels {
            return Err(Error::DimensionMismatch(format!(
                "labeling quantized at L={}, model at L={}",
                z.levels(),
                self.params.levels
            )));
        }
        Ok(())
    }
}

/// Per-term values of the objective.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `Σ_j Σ_k c_kᵀ z_{j,k}`
    pub unary: f64,
    /// `Σ_j Σ_N (1 − z_{j,k}ᵀ z_{j,k'})`, unweighted.
    pub smoothness: f64,
    /// `Σ_j Σ_{j'≠j} o_jᵀ A o_{j'}`
    pub compat_raw: f64,
    /// `max{τ_abs, compat_raw}`, unweighted.
    pub compat_clipped: f64,
    /// Negative log prior `−Σ_j Σ_k log p(z_{j,k})`, unweighted.
    pub prior: f64,
    /// `unary + β·smoothness + γ·compat_clipped + η·prior`
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn weighted_total(&self, params: &Hyperparams) -> f64 {
        self.unary
            + params.beta * self.smoothness
            + params.gamma * self.compat_clipped
            + params.eta * self.prior
    }
}

fn column_dot(a: &[u32], b: &[u32]) -> u64 {
    a.iter().zip(b).map(|(&x, &y)| x as u64 * y as u64).sum()
}

/// `Σ_j Σ_{(k,k')∈N} (1 − z_{j,k}ᵀ z_{j,k'})`.
pub fn smoothness(z: &Labeling, neighbors: &[(usize, usize)]) -> f64 {
    let scale = (z.levels() as f64).powi(2);
    let mut total = 0.0;
    for j in 0..z.outputs() {
        for &(a, b) in neighbors {
            total += 1.0 - column_dot(z.column(j, a), z.column(j, b)) as f64 / scale;
        }
    }
    total
}

/// `(raw, max{τ_abs, raw})` with `raw = Σ_j Σ_{j'≠j} o_jᵀ A o_{j'}`.
pub fn compatibility(z: &Labeling, a: &CompatibilityMatrix, tau_abs: f64) -> (f64, f64) {
    let m = z.inputs();
    let aggregates: Vec<Vec<f64>> = (0..z.outputs()).map(|j| aggregate(z, j)).collect();
    let mut total = vec![0.0; m];
    for o in &aggregates {
        total.iter_mut().zip(o).for_each(|(t, v)| *t += v);
    }
    let raw = a.inner(&total, &total) - aggregates.iter().map(|o| a.inner(o, o)).sum::<f64>();
    // The two routes only differ by rounding; raw is nonnegative for A ≥ 0.
    let raw = raw.max(0.0);
    (raw, raw.max(tau_abs))
}

pub fn unary_term(z: &Labeling, unary: &UnaryCosts) -> f64 {
    let l = z.levels() as f64;
    let mut total = 0.0;
    for j in 0..z.outputs() {
        for k in 0..z.sites() {
            let c = unary.site(k);
            total += z
                .column(j, k)
                .iter()
                .zip(c)
                .filter(|(&x, _)| x > 0)
                .map(|(&x, &cost)| x as f64 * cost)
                .sum::<f64>()
                / l;
        }
    }
    total
}

/// `−Σ_j Σ_k log p(z_{j,k})`.
pub fn prior_term(z: &Labeling, alpha: f64) -> Result<f64> {
    let mut total = 0.0;
    for j in 0..z.outputs() {
        for k in 0..z.sites() {
            total -= prior_logpmf(z.column(j, k), alpha, z.levels())?;
        }
    }
    Ok(total)
}

pub fn objective_eval(model: &EnergyModel, z: &Labeling) -> Result<EnergyBreakdown> {
    model.check_labeling(z)?;
    let params = model.params();
    let unary = unary_term(z, model.unary());
    let smooth = smoothness(z, model.neighbors());
    let (compat_raw, compat_clipped) = compatibility(z, model.compat(), model.tau_abs());
    let prior = prior_term(z, params.alpha)?;
    let mut out = EnergyBreakdown {
        unary,
        smoothness: smooth,
        compat_raw,
        compat_clipped,
        prior,
        total: 0.0,
    };
    out.total = out.weighted_total(params);
    Ok(out)
}
