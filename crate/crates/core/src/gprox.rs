//! Proximal operators of group-sparsity penalties on `vec(P)`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::StandardForm;

/// Weights of `γ·‖π(P)‖₀ + (w/2)‖P − ϖ‖²` restricted to at most `budget`
/// nonzero groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupProxParams {
    pub gamma: f64,
    /// `μ` for the linearized PALM step, `β` for ADMM.
    pub step_weight: f64,
    pub budget: usize,
}

impl GroupProxParams {
    pub fn new(gamma: f64, step_weight: f64, budget: usize) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Invalid(format!("gamma must be finite and >= 0, got {gamma}")));
        }
        if !(step_weight > 0.0 && step_weight.is_finite()) {
            return Err(Error::Invalid(format!("step weight must be > 0, got {step_weight}")));
        }
        Ok(GroupProxParams { gamma, step_weight, budget })
    }

    /// Squared group norm a group must strictly exceed to survive.
    pub fn threshold(&self) -> f64 {
        2.0 * self.gamma / self.step_weight
    }
}

/// Hard thresholding on groups. Keeps, among the `budget` groups with the
/// largest squared norm (ties go to the lower group index), exactly those whose
/// squared norm is strictly above `2γ/w`.
pub fn group_l0_prox(varpi: &DVector<f64>, sf: &StandardForm, params: &GroupProxParams) -> DVector<f64> {
    group_l0_prox_on(varpi, &sf.groups, params)
}

pub fn group_l0_prox_on(varpi: &DVector<f64>, groups: &[Vec<usize>], params: &GroupProxParams) -> DVector<f64> {
    let norms: Vec<f64> = groups
        .iter()
        .map(|g| g.iter().map(|&k| varpi[k] * varpi[k]).sum())
        .collect();
    let mut order: Vec<usize> = (0..groups.len()).collect();
    // stable sort: equal norms keep ascending group order
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));

    let threshold = params.threshold();
    let mut out = DVector::zeros(varpi.len());
    for &l in order.iter().take(params.budget) {
        if norms[l] > threshold {
            for &k in &groups[l] {
                out[k] = varpi[k];
            }
        }
    }
    out
}

/// Block soft thresholding: each group is scaled by `max(0, 1 − threshold/‖group‖)`.
pub fn group_l1_prox(varpi: &DVector<f64>, sf: &StandardForm, threshold: f64) -> Result<DVector<f64>> {
    group_l1_prox_on(varpi, &sf.groups, threshold)
}

pub fn group_l1_prox_on(varpi: &DVector<f64>, groups: &[Vec<usize>], threshold: f64) -> Result<DVector<f64>> {
    if !(threshold >= 0.0) {
        return Err(Error::Invalid(format!("group-l1 threshold must be >= 0, got {threshold}")));
    }
    let mut out = DVector::zeros(varpi.len());
    for g in groups {
        let norm = g.iter().map(|&k| varpi[k] * varpi[k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let scale = (1.0 - threshold / norm).max(0.0);
        for &k in g {
            out[k] = scale * varpi[k];
        }
    }
    Ok(out)
}

/// Sum of per-group Euclidean norms.
pub fn group_l1_norm(v: &DVector<f64>, groups: &[Vec<usize>]) -> f64 {
    groups
        .iter()
        .map(|g| g.iter().map(|&k| v[k] * v[k]).sum::<f64>().sqrt())
        .sum()
}

/// Number of groups with a nonzero entry.
pub fn group_l0_norm(v: &DVector<f64>, groups: &[Vec<usize>]) -> usize {
    groups.iter().filter(|g| g.iter().any(|&k| v[k] != 0.0)).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn objective(x: &DVector<f64>, varpi: &DVector<f64>, groups: &[Vec<usize>], p: &GroupProxParams) -> f64 {
        p.gamma / p.step_weight * group_l0_norm(x, groups) as f64 + 0.5 * (x - varpi).norm_squared()
    }

    #[test]
    fn zero_input_gives_zero() {
        let groups = vec![vec![0, 1], vec![2]];
        let p = GroupProxParams::new(1.0, 2.0, 2).unwrap();
        assert_eq!(group_l0_prox_on(&DVector::zeros(3), &groups, &p), DVector::zeros(3));
    }

    #[test]
    fn two_groups_against_all_patterns() {
        // squared norms (4, 0.5), threshold 2·1/2 = 1
        let groups = vec![vec![0, 1], vec![2]];
        let varpi = DVector::from_vec(vec![2.0, 0.0, 0.5f64.sqrt()]);
        let p = GroupProxParams::new(1.0, 2.0, 2).unwrap();
        let out = group_l0_prox_on(&varpi, &groups, &p);
        assert_eq!(out, DVector::from_vec(vec![2.0, 0.0, 0.0]));

        let mut best = f64::INFINITY;
        for mask in 0..4u32 {
            let mut x = DVector::zeros(3);
            for (l, g) in groups.iter().enumerate() {
                if mask & (1 << l) != 0 {
                    for &k in g {
                        x[k] = varpi[k];
                    }
                }
            }
            best = best.min(objective(&x, &varpi, &groups, &p));
        }
        assert_eq!(objective(&out, &varpi, &groups, &p), best);
    }

    #[test]
    fn boundary_norm_is_zeroed() {
        let groups = vec![vec![0]];
        let p = GroupProxParams::new(1.0, 2.0, 1).unwrap();
        let out = group_l0_prox_on(&DVector::from_vec(vec![1.0]), &groups, &p);
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn zero_budget_gives_zero() {
        let groups = vec![vec![0], vec![1]];
        let p = GroupProxParams::new(0.0, 1.0, 0).unwrap();
        let out = group_l0_prox_on(&DVector::from_vec(vec![5.0, -3.0]), &groups, &p);
        assert_eq!(out, DVector::zeros(2));
    }

    #[test]
    fn budget_ties_prefer_lower_index() {
        let groups = vec![vec![0], vec![1], vec![2]];
        let p = GroupProxParams::new(0.1, 1.0, 1).unwrap();
        let out = group_l0_prox_on(&DVector::from_vec(vec![1.0, 2.0, -2.0]), &groups, &p);
        assert_eq!(out, DVector::from_vec(vec![0.0, 2.0, 0.0]));
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(GroupProxParams::new(-1.0, 1.0, 1).is_err());
        assert!(GroupProxParams::new(1.0, 0.0, 1).is_err());
    }

    #[test]
    fn l1_threshold_zero_is_identity() {
        let groups = vec![vec![0, 2], vec![1]];
        let v = DVector::from_vec(vec![1.5, -0.25, 3.0]);
        assert_eq!(group_l1_prox_on(&v, &groups, 0.0).unwrap(), v);
    }

    #[test]
    fn l1_shrinks_norm_three_group_by_two_thirds() {
        let groups = vec![vec![0, 1]];
        let v = DVector::from_vec(vec![3.0 * 0.6, 3.0 * 0.8]);
        let out = group_l1_prox_on(&v, &groups, 1.0).unwrap();
        assert!((out - &v * (2.0 / 3.0)).norm() < 1e-15);
        assert!(group_l1_prox_on(&v, &groups, -1.0).is_err());
    }

    fn groups_strategy() -> impl Strategy<Value = (Vec<Vec<usize>>, Vec<f64>)> {
        prop::collection::vec(1usize..4, 1..7).prop_flat_map(|sizes| {
            let total: usize = sizes.iter().sum();
            let mut groups = Vec::new();
            let mut k = 0;
            for s in sizes {
                groups.push((k..k + s).collect::<Vec<_>>());
                k += s;
            }
            (Just(groups), prop::collection::vec(-3.0f64..3.0, total))
        })
    }

    proptest! {
        #[test]
        fn l0_is_idempotent_and_shrinks_support(
            (groups, v) in groups_strategy(),
            gamma in 0.0f64..3.0,
            weight in 0.1f64..5.0,
            budget in 0usize..7,
        ) {
            let varpi = DVector::from_vec(v);
            let p = GroupProxParams::new(gamma, weight, budget).unwrap();
            let once = group_l0_prox_on(&varpi, &groups, &p);
            let twice = group_l0_prox_on(&once, &groups, &p);
            prop_assert_eq!(&once, &twice);
            prop_assert!(group_l0_norm(&once, &groups) <= budget);
            for k in 0..varpi.len() {
                prop_assert!(once[k] == 0.0 || once[k] == varpi[k]);
            }
        }

        #[test]
        fn l1_satisfies_group_lasso_optimality(
            (groups, v) in groups_strategy(),
            threshold in 0.0f64..3.0,
        ) {
            let varpi = DVector::from_vec(v);
            let x = group_l1_prox_on(&varpi, &groups, threshold).unwrap();
            for g in &groups {
                let xg: Vec<f64> = g.iter().map(|&k| x[k]).collect();
                let rg: Vec<f64> = g.iter().map(|&k| varpi[k] - x[k]).collect();
                let xn = xg.iter().map(|a| a * a).sum::<f64>().sqrt();
                let rn = rg.iter().map(|a| a * a).sum::<f64>().sqrt();
                if xn > 0.0 {
                    // ϖ − x = threshold · x/‖x‖
                    for (a, b) in xg.iter().zip(&rg) {
                        prop_assert!((b - threshold * a / xn).abs() <= 1e-10);
                    }
                } else {
                    prop_assert!(rn <= threshold + 1e-10);
                }
            }
        }
    }
}
