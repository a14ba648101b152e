//! Benchmark instances, exact and baseline solvers, and batch statistics.
//!
//! Instances draw unary costs i.i.d. from `U[0, 1]` and use `A = I`. Three
//! reference points bracket the optimizer: exhaustive search (exact), a
//! uniformly random labeling, and the permutation-based
//! submodular-supermodular procedure, which replaces the supermodular term by
//! the modular bound read off a random chain of ground-set elements.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{
    aggregate, objective_eval, prior_logpmf, EnergyModel, Hyperparams, Labeling, Neighborhood,
};
use crate::error::{Error, Result};
use crate::graphcut::{alpha_beta_swap, PairwiseEnergy};
use crate::optimizer::{allowed_states, init_labeling, optimize_from, OptimizerConfig, StateSet};
use crate::rng::SplitMix64;
use crate::saliency::{CompatibilityMatrix, DownsampledSaliency, UnaryCosts};
use crate::tensor_io::{InputBatch, LabelMatrix};

const UNARY_STREAM: u64 = 0xB0;
const RANDOM_STREAM: u64 = 0xB1;
const CHAIN_STREAM: u64 = 0xB2;

/// Exhaustive search refuses more labelings than this.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

/// Rounds of the permutation baseline before it is cut off.
pub const CHAIN_MAX_ROUNDS: usize = 1000;

/// Column values a benchmark may use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum BenchStates {
    /// The `m` one-hot columns.
    #[default]
    OneHot,
    /// Every column quantized at `1/L`.
    Full,
}

impl BenchStates {
    pub fn columns(self, inputs: usize, levels: u32) -> Vec<Vec<u32>> {
        match self {
            BenchStates::OneHot => allowed_states(1, &vec![1.0; inputs], levels, inputs),
            BenchStates::Full => allowed_states(2, &vec![1.0; inputs], levels, inputs),
        }
    }

    fn optimizer_states(self) -> StateSet {
        match self {
            BenchStates::OneHot => StateSet::OneHot,
            BenchStates::Full => StateSet::BinaryFirst,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchInstance {
    pub inputs: usize,
    pub outputs: usize,
    pub sites: usize,
    pub unary: UnaryCosts,
    pub params: Hyperparams,
    pub states: BenchStates,
    pub seed: u64,
}

impl BenchInstance {
    pub fn generate(
        inputs: usize,
        outputs: usize,
        sites: usize,
        params: Hyperparams,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = SplitMix64::stream(seed, UNARY_STREAM);
        let data = (0..sites * inputs).map(|_| rng.next_f64()).collect();
        Ok(Self {
            inputs,
            outputs,
            sites,
            unary: UnaryCosts::new(sites, inputs, data)?,
            params,
            states: BenchStates::OneHot,
            seed,
        })
    }

    pub fn with_states(mut self, states: BenchStates) -> Self {
        self.states = states;
        self
    }

    pub fn model(&self) -> Result<EnergyModel> {
        EnergyModel::new(
            self.unary.clone(),
            Neighborhood::for_sites(self.sites),
            CompatibilityMatrix::identity(self.inputs),
            self.params.clone(),
            self.outputs,
        )
    }

    pub fn columns(&self) -> Vec<Vec<u32>> {
        self.states.columns(self.inputs, self.params.levels)
    }
}

/// Per-output cost without the compatibility term, and its aggregate `o_j`.
struct OutputOption {
    columns: Vec<usize>,
    cost: f64,
    aggregate: Vec<f64>,
    a_aggregate: Vec<f64>,
}

/// Exhaustive minimum of the objective over all labelings built from the
/// instance's column set.
///
/// Enumerates each output's `|states|^n` labelings once, then combines
/// outputs; the compatibility term is the only coupling between them.
pub fn brute_force(inst: &BenchInstance) -> Result<(f64, Labeling)> {
    let model = inst.model()?;
    let columns = inst.columns();
    let per_output = (columns.len() as u128)
        .checked_pow(inst.sites as u32)
        .filter(|&c| c <= BRUTE_FORCE_LIMIT)
        .ok_or_else(|| too_large(columns.len(), inst))?;
    let total = per_output
        .checked_pow(inst.outputs as u32)
        .filter(|&c| c <= BRUTE_FORCE_LIMIT)
        .ok_or_else(|| too_large(columns.len(), inst))?;
    let _ = total;

    let params = model.params();
    let levels = params.levels as f64;
    let vectors: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| c.iter().map(|&v| v as f64 / levels).collect())
        .collect();
    let neg_log_prior: Vec<f64> = columns
        .iter()
        .map(|c| prior_logpmf(c, params.alpha, params.levels).map(|lp| -lp))
        .collect::<Result<_>>()?;

    let n = inst.sites;
    let s = columns.len();
    let mut options = Vec::with_capacity(per_output as usize);
    let mut digits = vec![0usize; n];
    loop {
        let mut cost = 0.0;
        let mut agg = vec![0.0; inst.inputs];
        for (k, &d) in digits.iter().enumerate() {
            let x = &vectors[d];
            cost += model.unary().site(k).iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            cost += params.eta * neg_log_prior[d];
            agg.iter_mut().zip(x).for_each(|(o, v)| *o += v);
        }
        for &(a, b) in model.neighbors() {
            let dot: f64 = vectors[digits[a]]
                .iter()
                .zip(&vectors[digits[b]])
                .map(|(x, y)| x * y)
                .sum();
            cost += params.beta * (1.0 - dot);
        }
        let mut a_agg = vec![0.0; inst.inputs];
        model.compat().apply(&agg, &mut a_agg);
        options.push(OutputOption {
            columns: digits.clone(),
            cost,
            aggregate: agg,
            a_aggregate: a_agg,
        });
        if !advance(&mut digits, s) {
            break;
        }
    }

    let mut search = Search {
        options: &options,
        tau_abs: model.tau_abs(),
        gamma: params.gamma,
        outputs: inst.outputs,
        chosen: vec![0; inst.outputs],
        best: f64::INFINITY,
        best_choice: vec![0; inst.outputs],
    };
    search.descend(0, 0.0, 0.0);

    let choice = search.best_choice.clone();
    let labeling = Labeling::one_hot(inst.outputs, n, inst.inputs, params.levels, |_, _| 0);
    let mut labeling = labeling;
    for (j, &opt) in choice.iter().enumerate() {
        for (k, &d) in options[opt].columns.iter().enumerate() {
            labeling.set_column(j, k, &columns[d])?;
        }
    }
    let value = objective_eval(&model, &labeling)?.total;
    Ok((value, labeling))
}

fn too_large(states: usize, inst: &BenchInstance) -> Error {
    Error::TooLarge(format!(
        "{states}^({}·{}) labelings exceed the brute-force limit of {BRUTE_FORCE_LIMIT}",
        inst.outputs, inst.sites
    ))
}

/// Odometer increment; false once every digit wrapped.
fn advance(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

struct Search<'a> {
    options: &'a [OutputOption],
    tau_abs: f64,
    gamma: f64,
    outputs: usize,
    chosen: Vec<usize>,
    best: f64,
    best_choice: Vec<usize>,
}

impl Search<'_> {
    fn descend(&mut self, depth: usize, cost: f64, raw: f64) {
        if depth == self.outputs {
            let total = cost + self.gamma * raw.max(self.tau_abs);
            if total < self.best {
                self.best = total;
                self.best_choice.copy_from_slice(&self.chosen);
            }
            return;
        }
        for idx in 0..self.options.len() {
            let opt = &self.options[idx];
            let mut pair = 0.0;
            for &prev in &self.chosen[..depth] {
                let other = &self.options[prev];
                pair += opt
                    .aggregate
                    .iter()
                    .zip(&other.a_aggregate)
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            }
            self.chosen[depth] = idx;
            self.descend(depth + 1, cost + opt.cost, raw + 2.0 * pair);
        }
    }
}

/// Objective of a labeling whose columns are drawn uniformly from the
/// instance's column set.
pub fn random_guess(inst: &BenchInstance, seed: u64) -> Result<f64> {
    let model = inst.model()?;
    let columns = inst.columns();
    let mut rng = SplitMix64::stream(seed, RANDOM_STREAM);
    let mut z = Labeling::one_hot(inst.outputs, inst.sites, inst.inputs, inst.params.levels, |_, _| 0);
    for j in 0..inst.outputs {
        for k in 0..inst.sites {
            z.set_column(j, k, &columns[rng.below(columns.len())])?;
        }
    }
    Ok(objective_eval(&model, &z)?.total)
}

/// The optimizer on a bench instance, from the seeded initialization.
pub fn ours(inst: &BenchInstance, seed: u64) -> Result<(f64, Labeling)> {
    let model = inst.model()?;
    let config = OptimizerConfig {
        params: inst.params.clone(),
        seed,
        state_set: inst.states.optimizer_states(),
        ..OptimizerConfig::default()
    };
    let init = init_labeling(inst.inputs, inst.outputs, inst.sites, inst.params.levels, seed);
    let (z, stats) = optimize_from(&model, &config, init)?;
    Ok((stats.final_objective(), z))
}

/// Submodular-supermodular procedure with permutation-based modularization.
///
/// Ground-set element `(j, k, i)` stands for `z_{j,k} = e_i`; a labeling is a
/// set with one element per column. Each round orders the current set's
/// elements first and the rest after it (both shuffled), reads the marginal
/// gains of the supermodular compatibility term along that chain (a modular
/// upper bound, tight at the current set), and minimizes the resulting
/// submodular surrogate output by output with alpha-beta swaps. Rounds repeat
/// while the true objective strictly decreases.
///
/// Starts from the same seeded initialization as [`ours`] and works on
/// one-hot columns.
pub fn narasimhan_baseline(inst: &BenchInstance, seed: u64) -> Result<(f64, Labeling)> {
    let model = inst.model()?;
    let params = model.params();
    let (m, n, outputs) = (inst.inputs, inst.sites, inst.outputs);
    let levels = params.levels;
    let columns = BenchStates::OneHot.columns(m, levels);
    let vectors: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| c.iter().map(|&v| v as f64 / levels as f64).collect())
        .collect();
    let log_prior: Vec<f64> = columns
        .iter()
        .map(|c| prior_logpmf(c, params.alpha, levels))
        .collect::<Result<_>>()?;

    let mut z = init_labeling(m, outputs, n, levels, seed);
    let mut current = objective_eval(&model, &z)?.total;
    let mut rng = SplitMix64::stream(seed, CHAIN_STREAM);
    let element = |j: usize, k: usize, i: usize| (j * n + k) * m + i;
    let tau_abs = model.tau_abs();
    let a = model.compat();

    for _ in 0..CHAIN_MAX_ROUNDS {
        let mut inside = Vec::with_capacity(outputs * n);
        let mut outside = Vec::with_capacity(outputs * n * (m - 1));
        for j in 0..outputs {
            for k in 0..n {
                let col = z.column(j, k);
                for i in 0..m {
                    if col[i] > 0 {
                        inside.push(element(j, k, i));
                    } else {
                        outside.push(element(j, k, i));
                    }
                }
            }
        }
        rng.shuffle(&mut inside);
        rng.shuffle(&mut outside);

        // Marginal gains of g(S) = γ·max{τ_abs, raw(S)} along the chain.
        let mut gain = vec![0.0; outputs * n * m];
        let mut agg = vec![vec![0.0; m]; outputs];
        let mut total = vec![0.0; m];
        let mut raw = 0.0;
        let mut clipped = params.gamma * tau_abs;
        for &e in inside.iter().chain(&outside) {
            let (j, i) = (e / (n * m), e % m);
            let mut cross = 0.0;
            for (l, (t, o)) in total.iter().zip(&agg[j]).enumerate() {
                cross += a.get(i, l) * (t - o);
            }
            raw += 2.0 * cross;
            let next = params.gamma * raw.max(tau_abs);
            gain[e] = next - clipped;
            clipped = next;
            agg[j][i] += 1.0;
            total[i] += 1.0;
        }

        let mut proposal = z.clone();
        for j in 0..outputs {
            let mut unary = Vec::with_capacity(n * columns.len());
            for k in 0..n {
                let c = model.unary().site(k);
                for (s, x) in vectors.iter().enumerate() {
                    let saliency: f64 = c.iter().zip(x).map(|(p, q)| p * q).sum();
                    let i = columns[s].iter().position(|&v| v > 0).expect("one-hot");
                    unary.push(saliency + (gain[element(j, k, i)] - params.eta * log_prior[s]));
                }
            }
            let energy = PairwiseEnergy::with_state_vectors(
                &vectors,
                unary,
                params.beta,
                model.neighbors().to_vec(),
            )?;
            let start: Vec<usize> = (0..n)
                .map(|k| {
                    let col = z.column(j, k);
                    columns.iter().position(|s| s.as_slice() == col).expect("one-hot column")
                })
                .collect();
            let outcome = alpha_beta_swap(&energy, &start, OptimizerConfig::default().max_sweeps)?;
            for k in 0..n {
                proposal.set_column(j, k, &columns[outcome.assignment[k]])?;
            }
        }
        let value = objective_eval(&model, &proposal)?.total;
        if value < current - 1e-12 {
            z = proposal;
            current = value;
        } else {
            break;
        }
    }
    Ok((current, z))
}

/// `1 − Σ_j Σ_{j'≠j} õ_jᵀ õ_{j'} / m` with `õ_j = o_j/‖o_j‖₁`, averaged over
/// the given partitions.
pub fn stats_diversity(partitions: &[Labeling]) -> f64 {
    if partitions.is_empty() {
        return 0.0;
    }
    let sum: f64 = partitions
        .iter()
        .map(|z| {
            let ratios: Vec<Vec<f64>> = (0..z.outputs())
                .map(|j| {
                    let o = aggregate(z, j);
                    let norm: f64 = o.iter().sum();
                    o.into_iter().map(|v| v / norm).collect()
                })
                .collect();
            let mut overlap = 0.0;
            for (j, a) in ratios.iter().enumerate() {
                for (jj, b) in ratios.iter().enumerate() {
                    if j != jj {
                        overlap += a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                    }
                }
            }
            1.0 - overlap / z.inputs() as f64
        })
        .sum();
    sum / partitions.len() as f64
}

/// Mean saliency mass captured per output: `(1/m') Σ_j Σ_k Σ_i z_{j,k}[i]·s[i,k]`.
pub fn stats_batch_saliency(z: &Labeling, saliency: &DownsampledSaliency) -> Result<f64> {
    if saliency.len() != z.inputs() || saliency.cells() != z.sites() {
        return Err(Error::DimensionMismatch(format!(
            "saliency is {}x{}, labeling mixes {} inputs over {} sites",
            saliency.len(),
            saliency.cells(),
            z.inputs(),
            z.sites()
        )));
    }
    let mut total = 0.0;
    for j in 0..z.outputs() {
        for k in 0..z.sites() {
            for i in 0..z.inputs() {
                total += z.value(j, k, i) * saliency.mass(i, k);
            }
        }
    }
    Ok(total / z.outputs() as f64)
}

/// `hist[c − 1]` = number of outputs drawing on exactly `c` inputs.
pub fn stats_inputs_per_output(z: &Labeling) -> Vec<usize> {
    let mut hist = vec![0; z.inputs()];
    for j in 0..z.outputs() {
        let used = aggregate(z, j).iter().filter(|&&v| v > 0.0).count();
        hist[used - 1] += 1;
    }
    hist
}

/// A seeded toy batch: each image is a smooth background with one bright
/// textured disk, and its saliency is a Gaussian bump over the disk.
pub struct SyntheticBatch {
    pub inputs: InputBatch,
    /// Unnormalized saliency, `m × H × W`.
    pub saliency: Vec<f64>,
    pub labels: LabelMatrix,
}

pub fn synthetic_batch(len: usize, channels: usize, height: usize, width: usize, seed: u64) -> Result<SyntheticBatch> {
    let mut rng = SplitMix64::new(seed);
    let plane = height * width;
    let mut images = vec![0.0; len * channels * plane];
    let mut saliency = vec![0.0; len * plane];
    let mut classes = Vec::with_capacity(len);
    let classes_total = len.clamp(1, 10);
    for i in 0..len {
        let cy = rng.next_f64() * height as f64;
        let cx = rng.next_f64() * width as f64;
        let radius = (0.12 + 0.13 * rng.next_f64()) * height.min(width) as f64;
        let tint: Vec<f64> = (0..channels).map(|_| 0.4 + 0.6 * rng.next_f64()).collect();
        let base: Vec<f64> = (0..channels).map(|_| 0.1 + 0.2 * rng.next_f64()).collect();
        for y in 0..height {
            for x in 0..width {
                let dy = y as f64 + 0.5 - cy;
                let dx = x as f64 + 0.5 - cx;
                let d2 = dy * dy + dx * dx;
                let inside = d2 <= radius * radius;
                let texture = 0.15 * (((x + y) % 2) as f64);
                for ch in 0..channels {
                    let ramp = 0.1 * (y as f64 / height as f64);
                    let v = if inside {
                        tint[ch] - texture
                    } else {
                        base[ch] + ramp
                    };
                    images[(i * channels + ch) * plane + y * width + x] = v;
                }
                saliency[i * plane + y * width + x] =
                    (-d2 / (2.0 * radius * radius)).exp() + 0.01 * rng.next_f64();
            }
        }
        classes.push(i % classes_total);
    }
    Ok(SyntheticBatch {
        inputs: InputBatch::new(len, channels, height, width, images)?,
        saliency,
        labels: LabelMatrix::from_classes(classes, classes_total)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Optimizer vs. exhaustive search vs. random guess.
    Brute,
    /// Optimizer vs. the permutation baseline vs. random guess.
    Bp,
}

impl Suite {
    pub fn methods(self) -> [&'static str; 3] {
        match self {
            Suite::Brute => ["ours", "brute", "random"],
            Suite::Bp => ["ours", "narasimhan", "random"],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchSize {
    pub inputs: usize,
    pub outputs: usize,
    pub sites: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: String,
    pub m: usize,
    #[serde(rename = "m'")]
    pub m_out: usize,
    pub n: usize,
    pub seed: u64,
    pub value: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
    pub std_err: f64,
    pub mean_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub m: usize,
    #[serde(rename = "m'")]
    pub m_out: usize,
    pub n: usize,
    pub methods: Vec<MethodSummary>,
    /// `(mean_ours − mean_brute) / (mean_random − mean_brute)`, brute suite only.
    pub rel_error: Option<f64>,
}

impl SizeSummary {
    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub suite: Suite,
    pub seeds: u64,
    pub sizes: Vec<SizeSummary>,
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

fn run_one(suite: Suite, size: BenchSize, params: &Hyperparams, seed: u64) -> Result<Vec<BenchRecord>> {
    let inst = BenchInstance::generate(size.inputs, size.outputs, size.sites, params.clone(), seed)?;
    let record = |method: &str, (value, seconds): (f64, f64)| BenchRecord {
        method: method.to_string(),
        m: size.inputs,
        m_out: size.outputs,
        n: size.sites,
        seed,
        value,
        seconds,
    };
    let ours_run = timed(|| ours(&inst, seed).map(|(v, _)| v))?;
    let middle = match suite {
        Suite::Brute => timed(|| brute_force(&inst).map(|(v, _)| v))?,
        Suite::Bp => timed(|| narasimhan_baseline(&inst, seed).map(|(v, _)| v))?,
    };
    let random_run = timed(|| random_guess(&inst, seed))?;
    let [a, b, c] = suite.methods();
    Ok(vec![record(a, ours_run), record(b, middle), record(c, random_run)])
}

fn summarize(method: &str, records: &[&BenchRecord]) -> MethodSummary {
    let runs = records.len();
    let values: Vec<f64> = records.iter().map(|r| r.value).collect();
    let mean = values.iter().sum::<f64>() / runs as f64;
    let var = if runs > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs - 1) as f64
    } else {
        0.0
    };
    MethodSummary {
        method: method.to_string(),
        runs,
        mean,
        std: var.sqrt(),
        std_err: (var / runs as f64).sqrt(),
        mean_seconds: records.iter().map(|r| r.seconds).sum::<f64>() / runs as f64,
    }
}

/// Runs `suite` on every size for seeds `0..seeds`. Records come back ordered
/// by size, then seed, then method, regardless of `jobs`.
pub fn run_suite(
    suite: Suite,
    sizes: &[BenchSize],
    seeds: u64,
    params: &Hyperparams,
    jobs: usize,
) -> Result<(Vec<BenchRecord>, BenchSummary)> {
    let tasks: Vec<(BenchSize, u64)> = sizes
        .iter()
        .flat_map(|&size| (0..seeds).map(move |seed| (size, seed)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let nested: Vec<Vec<BenchRecord>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(size, seed)| run_one(suite, size, params, seed))
            .collect::<Result<_>>()
    })?;
    let records: Vec<BenchRecord> = nested.into_iter().flatten().collect();

    let summaries = sizes
        .iter()
        .map(|size| {
            let methods: Vec<MethodSummary> = suite
                .methods()
                .iter()
                .map(|&method| {
                    let rows: Vec<&BenchRecord> = records
                        .iter()
                        .filter(|r| {
                            r.method == method
                                && r.m == size.inputs
                                && r.m_out == size.outputs
                                && r.n == size.sites
                        })
                        .collect();
                    summarize(method, &rows)
                })
                .collect();
            let rel_error = match suite {
                Suite::Brute => {
                    let (o, b, r) = (methods[0].mean, methods[1].mean, methods[2].mean);
                    Some((o - b) / (r - b))
                }
                Suite::Bp => None,
            };
            SizeSummary {
                m: size.inputs,
                m_out: size.outputs,
                n: size.sites,
                methods,
                rel_error,
            }
        })
        .collect();
    Ok((
        records,
        BenchSummary {
            suite,
            seeds,
            sizes: summaries,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_labeling_statistics() {
        let z = Labeling::identity(4, 4, 2);
        assert_eq!(stats_diversity(&[z.clone()]), 1.0);
        assert_eq!(stats_inputs_per_output(&z), vec![4, 0, 0, 0]);
        let ds = DownsampledSaliency::new(4, 2, vec![0.25; 16]).unwrap();
        assert_eq!(stats_batch_saliency(&z, &ds).unwrap(), 1.0);
    }

    #[test]
    fn all_outputs_on_one_input() {
        let m = 5;
        let z = Labeling::one_hot(m, 4, m, 2, |_, _| 0);
        let expected = 1.0 - (m * (m - 1)) as f64 / m as f64;
        assert!((stats_diversity(&[z]) - expected).abs() < 1e-12);
    }

    #[test]
    fn half_half_counts_two_inputs() {
        let z = Labeling::from_counts(2, 4, 3, 2, [1, 1, 0].repeat(8)).unwrap();
        assert_eq!(stats_inputs_per_output(&z), vec![0, 2, 0]);
    }

    #[test]
    fn single_input_instance_has_one_labeling() {
        let inst = BenchInstance::generate(1, 1, 4, Hyperparams::default(), 3).unwrap();
        let (best, _) = brute_force(&inst).unwrap();
        let guess = random_guess(&inst, 9).unwrap();
        assert_eq!(best, guess);
    }

    #[test]
    fn brute_force_guard() {
        let inst = BenchInstance::generate(5, 5, 16, Hyperparams::default(), 0).unwrap();
        assert!(matches!(brute_force(&inst), Err(Error::TooLarge(_))));
    }

    #[test]
    fn random_guess_is_reproducible() {
        let inst = BenchInstance::generate(3, 3, 4, Hyperparams::default(), 1).unwrap();
        assert_eq!(random_guess(&inst, 5).unwrap(), random_guess(&inst, 5).unwrap());
    }
}
