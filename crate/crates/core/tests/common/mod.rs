#![allow(dead_code)]

use multistage::model::{Class, Design, ObservedDataset, ParamLayout, ParamSet};
use proptest::prelude::*;

pub const LAYOUT: ParamLayout = ParamLayout { x: 2, z1: 2, z2: 2 };

pub fn class(b: bool) -> Class {
    if b {
        Class::One
    } else {
        Class::Two
    }
}

pub fn params(range: f64) -> impl Strategy<Value = ParamSet> {
    prop::collection::vec(-range..range, LAYOUT.n_params()).prop_map(|flat| ParamSet::from_flat(LAYOUT, &flat).unwrap())
}

/// Datasets with one covariate per design and `n` rows drawn from `sizes`.
pub fn dataset(sizes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = ObservedDataset> {
    sizes.prop_flat_map(|n| {
        (
            prop::collection::vec(-2.0..2.0f64, n),
            prop::collection::vec(0.0..4.0f64, n),
            prop::collection::vec(0.0..4.0f64, n),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(x, z1, z2, y1, y2)| {
                ObservedDataset::new(
                    Design::with_intercept(n, &[x]).unwrap(),
                    Design::with_intercept(n, &[z1]).unwrap(),
                    Design::with_intercept(n, &[z2]).unwrap(),
                    y1.into_iter().map(class).collect(),
                    y2.into_iter().map(class).collect(),
                )
                .unwrap()
            })
    })
}

pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

pub fn lin(coef: &[f64], row: &[f64]) -> f64 {
    coef.iter().zip(row).map(|(a, b)| a * b).sum()
}

/// `P(Y = j, Y*(1) = k1, Y*(2) = k2)` for subject `i`, enumerated from the logits.
pub fn joint_cell(p: &ParamSet, data: &ObservedDataset, i: usize, j: usize, k1: usize, k2: usize) -> f64 {
    let pick = |t: f64, k: usize| if k == 0 { sigmoid(t) } else { sigmoid(-t) };
    pick(lin(&p.beta, data.x().row(i)), j)
        * pick(lin(&p.gamma1[j], data.z1().row(i)), k1)
        * pick(lin(&p.gamma2[k1][j], data.z2().row(i)), k2)
}

/// Posterior class weights by Bayes rule over the enumerated joint.
pub fn bayes_weights(p: &ParamSet, data: &ObservedDataset, i: usize) -> [f64; 2] {
    let (k1, k2) = (data.ystar1()[i].index(), data.ystar2()[i].index());
    let a = joint_cell(p, data, i, 0, k1, k2);
    let b = joint_cell(p, data, i, 1, k1, k2);
    [a / (a + b), b / (a + b)]
}

pub fn brute_loglik(p: &ParamSet, data: &ObservedDataset) -> f64 {
    (0..data.len())
        .map(|i| {
            let (k1, k2) = (data.ystar1()[i].index(), data.ystar2()[i].index());
            (joint_cell(p, data, i, 0, k1, k2) + joint_cell(p, data, i, 1, k1, k2)).ln()
        })
        .sum()
}
