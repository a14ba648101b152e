//! Modular surrogate of the clipped compatibility term for one output.
//!
//! Conditioned on every other output, the raw compatibility is affine in
//! `o_j`: `v_{-j}ᵀ o_j + c_rest`, with `v_{-j} = 2 Σ_{j'≠j} A o_{j'}`. The
//! clipped term `max{τ_abs − c_rest, v_{-j}ᵀ o_j} + c_rest` is replaced by the
//! modular `max{τ′, v_{-j}}ᵀ o_j`, whose flat region `τ′·n` matches the clip
//! floor.

use crate::energy::{aggregate, EnergyModel, Labeling};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionedModular {
    pub output: usize,
    /// `2 Σ_{j'≠j} A o_{j'}`
    pub v_minus_j: Vec<f64>,
    pub tau_prime: f64,
    /// Compatibility among the other outputs; constant in `z_j`.
    pub c_rest: f64,
    /// Per-input cost added at every site: `γ · max{τ′, v_{-j}}`.
    pub unary_add: Vec<f64>,
}

impl ConditionedModular {
    /// Row `k` of the `n × m` unary addition; identical for every site.
    pub fn unary_add_row(&self, _site: usize) -> &[f64] {
        &self.unary_add
    }
}

pub fn condition(model: &EnergyModel, z: &Labeling, j: usize) -> Result<ConditionedModular> {
    model.check_labeling(z)?;
    if j >= z.outputs() {
        return Err(Error::IndexOutOfRange {
            index: j,
            len: z.outputs(),
        });
    }
    let aggregates: Vec<Vec<f64>> = (0..z.outputs())
        .filter(|&jj| jj != j)
        .map(|jj| aggregate(z, jj))
        .collect();
    Ok(condition_on_aggregates(model, j, &aggregates))
}

/// As [`condition`], given the aggregates `o_{j'}` of the other outputs.
pub fn condition_on_aggregates(
    model: &EnergyModel,
    j: usize,
    others: &[Vec<f64>],
) -> ConditionedModular {
    let a = model.compat();
    let m = model.inputs();
    let mut rest = vec![0.0; m];
    for o in others {
        rest.iter_mut().zip(o).for_each(|(r, v)| *r += v);
    }
    let mut v = vec![0.0; m];
    a.apply(&rest, &mut v);
    v.iter_mut().for_each(|x| *x *= 2.0);

    let self_terms: f64 = others.iter().map(|o| a.inner(o, o)).sum();
    let c_rest = (a.inner(&rest, &rest) - self_terms).max(0.0);
    let tau_prime = ((model.tau_abs() - c_rest) / model.sites() as f64).max(0.0);
    let gamma = model.params().gamma;
    let unary_add = v.iter().map(|&x| gamma * x.max(tau_prime)).collect();
    ConditionedModular {
        output: j,
        v_minus_j: v,
        tau_prime,
        c_rest,
        unary_add,
    }
}

/// `max{τ′, v_{-j}}ᵀ o_j`.
pub fn modular_value(cm: &ConditionedModular, o_j: &[f64]) -> f64 {
    cm.v_minus_j
        .iter()
        .zip(o_j)
        .map(|(&v, &o)| v.max(cm.tau_prime) * o)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{compatibility, Hyperparams, Neighborhood};
    use crate::saliency::{CompatibilityMatrix, UnaryCosts};

    fn model(m: usize, outputs: usize, side: usize, params: Hyperparams) -> EnergyModel {
        let n = side * side;
        EnergyModel::new(
            UnaryCosts::new(n, m, vec![0.0; n * m]).unwrap(),
            Neighborhood::Grid { side },
            CompatibilityMatrix::identity(m),
            params,
            outputs,
        )
        .unwrap()
    }

    #[test]
    fn two_outputs_collapse() {
        let mdl = model(3, 2, 2, Hyperparams::default());
        let z = Labeling::one_hot(2, 4, 3, 2, |j, k| (j + k) % 3);
        let cm = condition(&mdl, &z, 0).unwrap();
        let o2 = aggregate(&z, 1);
        let expect: Vec<f64> = o2.iter().map(|v| 2.0 * v).collect();
        assert_eq!(cm.v_minus_j, expect);
        assert_eq!(cm.c_rest, 0.0);
    }

    #[test]
    fn empty_others_give_flat_penalty() {
        let mdl = model(3, 4, 2, Hyperparams::default());
        let cm = condition_on_aggregates(&mdl, 0, &[vec![0.0; 3], vec![0.0; 3]]);
        assert_eq!(cm.v_minus_j, vec![0.0; 3]);
        let n = 4.0;
        let o = [2.0, 1.0, 1.0];
        assert!((modular_value(&cm, &o) - cm.tau_prime * n).abs() < 1e-12);
        assert!(cm.tau_prime > 0.0);
        for &u in &cm.unary_add {
            assert_eq!(u, cm.tau_prime * mdl.params().gamma);
        }
    }

    #[test]
    fn flat_below_threshold() {
        let cm = ConditionedModular {
            output: 0,
            v_minus_j: vec![0.5, 1.0, 4.0],
            tau_prime: 2.0,
            c_rest: 0.0,
            unary_add: vec![],
        };
        assert_eq!(modular_value(&cm, &[3.0, 1.0, 0.0]), 8.0);
        assert_eq!(modular_value(&cm, &[0.0, 4.0, 0.0]), 8.0);
        assert_eq!(modular_value(&cm, &[0.0, 0.0, 4.0]), 16.0);
    }

    #[test]
    fn out_of_range_output() {
        let mdl = model(2, 2, 2, Hyperparams::default());
        let z = Labeling::identity(2, 4, 2);
        assert!(matches!(
            condition(&mdl, &z, 2),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn exact_when_clipping_is_off() {
        let params = Hyperparams {
            tau: 0.0,
            ..Hyperparams::default()
        };
        let mdl = model(3, 3, 2, params);
        let mut z = Labeling::one_hot(3, 4, 3, 2, |j, k| (j * 2 + k) % 3);
        let cm = condition(&mdl, &z, 1).unwrap();
        for choice in 0..3 {
            for k in 0..4 {
                let mut col = [0; 3];
                col[(choice + k) % 3] = 2;
                z.set_column(1, k, &col).unwrap();
            }
            let (raw, _) = compatibility(&z, mdl.compat(), 0.0);
            let modular = modular_value(&cm, &aggregate(&z, 1)) + cm.c_rest;
            assert!((raw - modular).abs() < 1e-9 * raw.max(1.0));
        }
    }
}
