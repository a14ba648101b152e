//! Iterative submodular minimization over outputs.
//!
//! Each outer cycle visits the outputs in order. For output `j` the clipped
//! compatibility term is replaced by its modular surrogate given the current
//! other outputs, the prior becomes a per-state unary cost, and the resulting
//! multi-label submodular problem over the grid is minimized with alpha-beta
//! swaps. The first cycle only considers one-hot columns; later cycles allow
//! every quantized mixture of the inputs an output currently uses.

use std::collections::HashMap;
use std::ops::Range;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{aggregate, objective_eval, prior_logpmf, EnergyModel, Hyperparams, Labeling, Neighborhood};
use crate::error::{Error, Result};
use crate::graphcut::{alpha_beta_swap, PairwiseEnergy};
use crate::modularize::condition_on_aggregates;
use crate::rng::{derive_seed, SplitMix64};
use crate::saliency::{
    compatibility_matrix, downsample_saliency, unary_costs, DownsampledSaliency, SaliencyBatch,
};

const INIT_STREAM: u64 = 0x1417;

/// Which column values the inner solver may choose from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateSet {
    /// One-hot columns in the first cycle, then every quantized mixture of the
    /// inputs currently used by the output.
    #[default]
    BinaryFirst,
    /// One-hot columns in every cycle.
    OneHot,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub params: Hyperparams,
    pub seed: u64,
    pub max_sweeps: usize,
    pub state_set: StateSet,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            params: Hyperparams::default(),
            seed: 0,
            max_sweeps: 8,
            state_set: StateSet::BinaryFirst,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.max_sweeps == 0 {
            return Err(Error::InvalidParams("max_sweeps must be >= 1".into()));
        }
        if self.state_set == StateSet::BinaryFirst && self.params.levels >= 2 && self.params.cycles < 2
        {
            return Err(Error::InvalidParams(
                "cycles must be >= 2 when mixtures are allowed (levels >= 2)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub initial_objective: f64,
    /// Objective after each completed cycle.
    pub objective_trace: Vec<f64>,
    /// Columns changed in each completed cycle.
    pub columns_changed: Vec<usize>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl RunStats {
    pub fn final_objective(&self) -> f64 {
        self.objective_trace
            .last()
            .copied()
            .unwrap_or(self.initial_objective)
    }
}

/// Every column an independent uniform one-hot, drawn from the documented
/// SplitMix64 stream of `seed`.
pub fn init_labeling(inputs: usize, outputs: usize, sites: usize, levels: u32, seed: u64) -> Labeling {
    let mut rng = SplitMix64::stream(seed, INIT_STREAM);
    let mut draws = Vec::with_capacity(outputs * sites);
    for _ in 0..outputs * sites {
        draws.push(rng.below(inputs));
    }
    Labeling::one_hot(outputs, sites, inputs, levels, |j, k| draws[j * sites + k])
}

/// All count vectors summing to `levels` and supported on `support`, in
/// lexicographically decreasing order of the counts along `support`.
fn compositions(support: &[usize], inputs: usize, levels: u32) -> Vec<Vec<u32>> {
    fn recurse(
        support: &[usize],
        remaining: u32,
        current: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        match support {
            [] => {}
            [last] => {
                current[*last] = remaining;
                out.push(current.clone());
                current[*last] = 0;
            }
            [first, rest @ ..] => {
                for take in (0..=remaining).rev() {
                    current[*first] = take;
                    recurse(rest, remaining - take, current, out);
                }
                current[*first] = 0;
            }
        }
    }
    let mut out = Vec::new();
    recurse(support, levels, &mut vec![0; inputs], &mut out);
    out
}

/// Candidate columns for an output in `cycle` (1-based).
///
/// Cycle 1 offers the `m` one-hot columns. Later cycles offer every column
/// quantized at `1/L` whose support lies within the inputs `o_j` currently
/// uses: the one-hots first, then the mixtures.
pub fn allowed_states(cycle: usize, o_j: &[f64], levels: u32, inputs: usize) -> Vec<Vec<u32>> {
    let one_hot = |i: usize| {
        let mut v = vec![0; inputs];
        v[i] = levels;
        v
    };
    if cycle <= 1 {
        return (0..inputs).map(one_hot).collect();
    }
    let support: Vec<usize> = (0..inputs).filter(|&i| o_j[i] > 0.0).collect();
    let mut states: Vec<Vec<u32>> = support.iter().map(|&i| one_hot(i)).collect();
    states.extend(
        compositions(&support, inputs, levels)
            .into_iter()
            .filter(|c| c.iter().filter(|&&x| x > 0).count() > 1),
    );
    states
}

fn states_for(
    state_set: StateSet,
    cycle: usize,
    o_j: &[f64],
    levels: u32,
    inputs: usize,
) -> Vec<Vec<u32>> {
    match state_set {
        StateSet::BinaryFirst => allowed_states(cycle, o_j, levels, inputs),
        StateSet::OneHot => allowed_states(1, o_j, levels, inputs),
    }
}

/// Runs the optimizer from the seeded categorical initialization.
pub fn optimize_partition(model: &EnergyModel, config: &OptimizerConfig) -> Result<(Labeling, RunStats)> {
    let init = init_labeling(
        model.inputs(),
        model.outputs(),
        model.sites(),
        model.params().levels,
        config.seed,
    );
    optimize_from(model, config, init)
}

/// Runs the optimizer from a given labeling.
pub fn optimize_from(
    model: &EnergyModel,
    config: &OptimizerConfig,
    init: Labeling,
) -> Result<(Labeling, RunStats)> {
    config.validate()?;
    model.check_labeling(&init)?;
    let started = Instant::now();
    let params = model.params();
    let (m, n, outputs, levels) = (model.inputs(), model.sites(), model.outputs(), params.levels);

    let mut z = init;
    let mut stats = RunStats {
        initial_objective: objective_eval(model, &z)?.total,
        ..RunStats::default()
    };
    let mut aggregates: Vec<Vec<f64>> = (0..outputs).map(|j| aggregate(&z, j)).collect();
    let mut prior_cache: HashMap<Vec<u32>, f64> = HashMap::new();
    let mut others: Vec<Vec<f64>> = Vec::with_capacity(outputs);

    for cycle in 1..=params.cycles {
        let mut changed = 0;
        for j in 0..outputs {
            others.clear();
            others.extend(
                aggregates
                    .iter()
                    .enumerate()
                    .filter(|&(jj, _)| jj != j)
                    .map(|(_, o)| o.clone()),
            );
            let modular = condition_on_aggregates(model, j, &others);
            let states = states_for(config.state_set, cycle, &aggregates[j], levels, m);
            let vectors: Vec<Vec<f64>> = states
                .iter()
                .map(|s| s.iter().map(|&c| c as f64 / levels as f64).collect())
                .collect();

            let mut state_cost = Vec::with_capacity(states.len());
            for (s, x) in states.iter().zip(&vectors) {
                let logp = match prior_cache.get(s) {
                    Some(&v) => v,
                    None => {
                        let v = prior_logpmf(s, params.alpha, levels)?;
                        prior_cache.insert(s.clone(), v);
                        v
                    }
                };
                let compat: f64 = modular.unary_add.iter().zip(x).map(|(a, b)| a * b).sum();
                state_cost.push(compat - params.eta * logp);
            }
            let mut unary = Vec::with_capacity(n * states.len());
            for k in 0..n {
                let c = model.unary().site(k);
                for (x, base) in vectors.iter().zip(&state_cost) {
                    let saliency: f64 = c.iter().zip(x).map(|(a, b)| a * b).sum();
                    unary.push(saliency + base);
                }
            }

            let current: Vec<usize> = (0..n)
                .map(|k| locate_state(&states, z.column(j, k)))
                .collect();
            let energy = PairwiseEnergy::with_state_vectors(
                &vectors,
                unary,
                params.beta,
                model.neighbors().to_vec(),
            )?;
            let outcome = alpha_beta_swap(&energy, &current, config.max_sweeps)?;
            for k in 0..n {
                let chosen = &states[outcome.assignment[k]];
                if z.column(j, k) != chosen.as_slice() {
                    z.set_column(j, k, chosen)?;
                    changed += 1;
                }
            }
            aggregates[j] = aggregate(&z, j);
        }
        stats.objective_trace.push(objective_eval(model, &z)?.total);
        stats.columns_changed.push(changed);
        let next_cycle_same_states = cycle >= 2 || config.state_set == StateSet::OneHot || levels == 1;
        if changed == 0 && next_cycle_same_states {
            break;
        }
    }
    stats.wall_time = started.elapsed();
    Ok((z, stats))
}

/// Index of `column` in `states`; a column outside the set starts from the
/// one-hot of its largest entry (or the first state).
fn locate_state(states: &[Vec<u32>], column: &[u32]) -> usize {
    if let Some(idx) = states.iter().position(|s| s.as_slice() == column) {
        return idx;
    }
    let top = column
        .iter()
        .enumerate()
        .fold(0, |best, (i, &c)| if c > column[best] { i } else { best });
    states
        .iter()
        .position(|s| s[top] > 0 && s.iter().filter(|&&c| c > 0).count() == 1)
        .unwrap_or(0)
}

/// Contiguous ranges of at most `size` inputs. A trailing single input is
/// merged into the previous range so no partition of a multi-input batch has
/// fewer than two inputs.
pub fn partition_ranges(total: usize, size: usize) -> Vec<Range<usize>> {
    let size = size.max(1);
    let mut ranges: Vec<Range<usize>> = (0..total)
        .step_by(size)
        .map(|start| start..(start + size).min(total))
        .collect();
    if ranges.len() > 1 && ranges.last().is_some_and(|r| r.len() == 1) {
        let last = ranges.pop().expect("non-empty");
        ranges.last_mut().expect("non-empty").end = last.end;
    }
    ranges
}

/// Objective model for one partition's normalized saliency.
pub fn partition_model(
    saliency: &SaliencyBatch,
    params: &Hyperparams,
) -> Result<(EnergyModel, DownsampledSaliency)> {
    let side = params.grid_side;
    let downsampled = downsample_saliency(saliency, side)?;
    let unary = unary_costs(&downsampled);
    let compat = compatibility_matrix(&downsampled, params.omega)?;
    let model = EnergyModel::new(
        unary,
        Neighborhood::Grid { side },
        compat,
        params.clone(),
        saliency.len(),
    )?;
    Ok((model, downsampled))
}

/// The solved labeling of one partition `range` of the batch.
#[derive(Clone, Debug)]
pub struct PartitionSolution {
    pub range: Range<usize>,
    pub model: EnergyModel,
    pub downsampled: DownsampledSaliency,
    pub labeling: Labeling,
    pub stats: RunStats,
}

/// Splits the batch into contiguous partitions and solves each independently
/// (in parallel) with `m' = m`. Partition `p` uses seed stream `p` of
/// `config.seed`.
pub fn comix_optimize(saliency: &SaliencyBatch, config: &OptimizerConfig) -> Result<Vec<PartitionSolution>> {
    config.validate()?;
    if saliency.is_empty() {
        return Err(Error::DimensionMismatch("empty batch".into()));
    }
    let ranges = partition_ranges(saliency.len(), config.params.partition_size);
    ranges
        .into_par_iter()
        .enumerate()
        .map(|(p, range)| {
            let part = saliency.slice(range.start, range.len());
            let (model, downsampled) = partition_model(&part, &config.params)?;
            let part_config = OptimizerConfig {
                seed: derive_seed(config.seed, p as u64),
                ..config.clone()
            };
            let (labeling, stats) = optimize_partition(&model, &part_config)?;
            Ok(PartitionSolution {
                range,
                model,
                downsampled,
                labeling,
                stats,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_input_init_is_constant() {
        let z = init_labeling(1, 3, 4, 2, 9);
        assert_eq!(z, Labeling::one_hot(3, 4, 1, 2, |_, _| 0));
    }

    #[test]
    fn init_is_deterministic() {
        assert_eq!(init_labeling(5, 5, 16, 2, 42), init_labeling(5, 5, 16, 2, 42));
        assert_ne!(init_labeling(5, 5, 16, 2, 42), init_labeling(5, 5, 16, 2, 43));
    }

    #[test]
    fn state_counts() {
        let o = [0.0; 5];
        assert_eq!(allowed_states(1, &o, 2, 5).len(), 5);

        let o = [0.0, 3.0, 0.0, 1.0, 0.0];
        let states = allowed_states(2, &o, 2, 5);
        assert_eq!(
            states,
            vec![
                vec![0, 2, 0, 0, 0],
                vec![0, 0, 0, 2, 0],
                vec![0, 1, 0, 1, 0]
            ]
        );

        let o = [1.0, 1.0, 1.0, 1.0, 0.0];
        assert_eq!(allowed_states(2, &o, 2, 5).len(), 10);
        // L = 3 over two inputs: 2 one-hots plus (2,1) and (1,2).
        let o = [1.0, 1.0];
        assert_eq!(allowed_states(3, &o, 3, 2).len(), 4);
    }

    #[test]
    fn partitions() {
        assert_eq!(partition_ranges(40, 20), vec![0..20, 20..40]);
        assert_eq!(partition_ranges(20, 20), vec![0..20]);
        assert_eq!(partition_ranges(100, 20).len(), 5);
        assert_eq!(partition_ranges(41, 20), vec![0..20, 20..41]);
        assert_eq!(partition_ranges(1, 20), vec![0..1]);
        assert_eq!(partition_ranges(7, 3), vec![0..3, 3..7]);
    }

    #[test]
    fn single_cycle_rejected_when_mixtures_allowed() {
        let config = OptimizerConfig {
            params: Hyperparams {
                cycles: 1,
                ..Hyperparams::default()
            },
            ..OptimizerConfig::default()
        };
        assert!(config.validate().is_err());
    }
}
