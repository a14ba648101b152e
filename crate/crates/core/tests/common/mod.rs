//! Slow, direct re-implementations used as test oracles.

#![allow(dead_code)]

use comix::energy::{EnergyModel, Labeling};
use comix::rng::SplitMix64;

/// `L!/∏x_i! · ∏(α)_{x_i} / (mα)_L` with rising factorials, no gamma functions.
pub fn dm_pmf(counts: &[u32], alpha: f64) -> f64 {
    let levels: u32 = counts.iter().sum();
    let m = counts.len() as f64;
    let fact = |n: u32| (1..=n).map(|v| v as f64).product::<f64>();
    let rising = |x: f64, n: u32| (0..n).map(|i| x + i as f64).product::<f64>();
    let coef = fact(levels) / counts.iter().map(|&c| fact(c)).product::<f64>();
    let num: f64 = counts.iter().map(|&c| rising(alpha, c)).product();
    coef * num / rising(m * alpha, levels)
}

/// The objective written out term by term from the definition.
pub fn naive_objective(model: &EnergyModel, z: &Labeling) -> f64 {
    let p = model.params();
    let (outputs, sites, m) = (z.outputs(), z.sites(), z.inputs());
    let mut unary = 0.0;
    let mut prior = 0.0;
    for j in 0..outputs {
        for k in 0..sites {
            for i in 0..m {
                unary += model.unary().get(k, i) * z.value(j, k, i);
            }
            prior -= dm_pmf(z.column(j, k), p.alpha).ln();
        }
    }
    let mut smooth = 0.0;
    for j in 0..outputs {
        for &(a, b) in model.neighbors() {
            let dot: f64 = (0..m).map(|i| z.value(j, a, i) * z.value(j, b, i)).sum();
            smooth += 1.0 - dot;
        }
    }
    let o: Vec<Vec<f64>> = (0..outputs)
        .map(|j| (0..m).map(|i| (0..sites).map(|k| z.value(j, k, i)).sum()).collect())
        .collect();
    let mut raw = 0.0;
    for j in 0..outputs {
        for jj in 0..outputs {
            if j == jj {
                continue;
            }
            for a in 0..m {
                for b in 0..m {
                    raw += o[j][a] * model.compat().get(a, b) * o[jj][b];
                }
            }
        }
    }
    unary + p.beta * smooth + p.gamma * raw.max(model.tau_abs()) + p.eta * prior
}

/// Each column `levels` draws of a uniformly random input.
pub fn random_labeling(
    rng: &mut SplitMix64,
    outputs: usize,
    sites: usize,
    inputs: usize,
    levels: u32,
) -> Labeling {
    let mut counts = vec![0u32; outputs * sites * inputs];
    for col in counts.chunks_mut(inputs) {
        for _ in 0..levels {
            col[rng.below(inputs)] += 1;
        }
    }
    Labeling::from_counts(outputs, sites, inputs, levels, counts).unwrap()
}

/// Every count vector of length `m` summing to `levels`.
pub fn all_columns(m: usize, levels: u32) -> Vec<Vec<u32>> {
    fn go(col: &mut Vec<u32>, idx: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if idx + 1 == col.len() {
            col[idx] = left;
            out.push(col.clone());
            return;
        }
        for take in 0..=left {
            col[idx] = take;
            go(col, idx + 1, left - take, out);
        }
    }
    let mut out = Vec::new();
    go(&mut vec![0; m], 0, levels, &mut out);
    out
}
