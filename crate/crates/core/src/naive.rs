//! The comparison fit that treats both proxies as error-free.
//!
//! The first proxy stands in for the true outcome: `β` comes from regressing
//! `Y*(1)` on `X`, and the second stage is fitted separately within each
//! first-stage stratum. This reading of the naive model is inferred from the
//! parameters it reports (`β`, `γ(2)_{111·}`, `γ(2)_{122·}`); nothing else is
//! estimated.

use crate::error::{Error, Result};
use crate::logistic::{fit_unweighted, LogisticFit, NewtonOptions};
use crate::model::{Block, Class, CovariateNames, ObservedDataset, ParamLayout, ParamSet};

#[derive(Clone, Debug, PartialEq)]
pub struct NaiveCoefficients {
    pub coef: Vec<f64>,
    /// `None` when the observed information is not invertible.
    pub se: Vec<Option<f64>>,
    /// Newton hit the coefficient cap or ran out of iterations (typically separation).
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NaiveFit {
    /// `Y*(1) ~ X`
    pub beta: NaiveCoefficients,
    /// `Y*(2) ~ Z2` among subjects with `Y*(1) = 1`
    pub gamma2_111: NaiveCoefficients,
    /// `Y*(2) ~ Z2` among subjects with `Y*(1) = 2`
    pub gamma2_122: NaiveCoefficients,
}

impl NaiveFit {
    /// The reported blocks, matched to the misclassification model's blocks.
    pub fn blocks(&self) -> [(Block, &NaiveCoefficients); 3] {
        [
            (NAIVE_BLOCKS[0], &self.beta),
            (NAIVE_BLOCKS[1], &self.gamma2_111),
            (NAIVE_BLOCKS[2], &self.gamma2_122),
        ]
    }

    pub fn n_params(&self) -> usize {
        self.blocks().iter().map(|(_, c)| c.coef.len()).sum()
    }

    /// Parameter labels in [`NaiveFit::blocks`] order, named as in the full model.
    pub fn labels(layout: ParamLayout, names: &CovariateNames) -> Vec<String> {
        let all = ParamSet::labels(layout, names);
        let ranges = layout.block_ranges();
        NAIVE_BLOCKS
            .iter()
            .flat_map(|b| all[ranges[b.position()].clone()].iter().cloned())
            .collect()
    }

    /// Estimates in [`NaiveFit::blocks`] order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks().iter().flat_map(|(_, c)| c.coef.iter().copied()).collect()
    }
}

/// The full-model blocks that the naive fit reports.
pub const NAIVE_BLOCKS: [Block; 3] = [
    Block::Beta,
    Block::Stage2 { k1: Class::One, j: Class::One },
    Block::Stage2 { k1: Class::Two, j: Class::Two },
];

/// The naive fit's counterpart of `params`: its β, γ(2)_{11·} and γ(2)_{22·} blocks.
pub fn naive_counterpart(params: &ParamSet) -> Vec<f64> {
    NAIVE_BLOCKS.iter().flat_map(|&b| params.block(b).iter().copied()).collect()
}

fn summarize(fit: LogisticFit, info: nalgebra::DMatrix<f64>) -> NaiveCoefficients {
    let p = fit.coef.len();
    let se = match info.cholesky() {
        Some(ch) => {
            let inv = ch.inverse();
            (0..p)
                .map(|d| {
                    let v = inv[(d, d)];
                    (v > 0.0 && v.is_finite()).then(|| v.sqrt())
                })
                .collect()
        }
        None => vec![None; p],
    };
    NaiveCoefficients {
        flagged: fit.is_boundary(),
        coef: fit.coef,
        se,
    }
}

pub fn fit_naive(data: &ObservedDataset) -> Result<NaiveFit> {
    let opts = NewtonOptions::default();
    let all: Vec<usize> = (0..data.len()).collect();
    let stratum = |k: Class| -> Result<Vec<usize>> {
        let rows: Vec<usize> = all.iter().copied().filter(|&i| data.ystar1()[i] == k).collect();
        if rows.is_empty() {
            Err(Error::StratumEmpty { category: k.code() })
        } else {
            Ok(rows)
        }
    };
    let rows1 = stratum(Class::One)?;
    let rows2 = stratum(Class::Two)?;

    let fit = |design, rows: &[usize], y: &[Class]| {
        let (f, prob) = fit_unweighted(design, rows, y, opts);
        let info = prob.information(&f.coef);
        summarize(f, info)
    };
    Ok(NaiveFit {
        beta: fit(data.x(), &all, data.ystar1()),
        gamma2_111: fit(data.z2(), &rows1, data.ystar2()),
        gamma2_122: fit(data.z2(), &rows2, data.ystar2()),
    })
}
