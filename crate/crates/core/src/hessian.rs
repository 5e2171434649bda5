//! Standard errors from a central-difference Hessian of the observed log-likelihood.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::model::{joint_observed_loglik, ObservedDataset, ParamSet};

/// Relative step used for the finite-difference Hessian.
pub const HESSIAN_REL_STEP: f64 = 1e-5;

/// Central-difference Hessian of `f` at `x` with per-coordinate step
/// `rel_step · max(|x_k|, 1)`.
pub fn numerical_hessian<F>(f: F, x: &[f64], rel_step: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|v| rel_step * v.abs().max(1.0)).collect();
    let f0 = f(x);
    let mut hess = DMatrix::zeros(n, n);
    let mut pt = x.to_vec();
    let eval = |pt: &mut Vec<f64>, moves: &[(usize, f64)]| {
        for &(k, d) in moves {
            pt[k] += d;
        }
        let v = f(pt);
        for &(k, d) in moves {
            pt[k] -= d;
        }
        v
    };
    for a in 0..n {
        let fp = eval(&mut pt, &[(a, h[a])]);
        let fm = eval(&mut pt, &[(a, -h[a])]);
        hess[(a, a)] = (fp - 2.0 * f0 + fm) / (h[a] * h[a]);
        for b in 0..a {
            let fpp = eval(&mut pt, &[(a, h[a]), (b, h[b])]);
            let fpm = eval(&mut pt, &[(a, h[a]), (b, -h[b])]);
            let fmp = eval(&mut pt, &[(a, -h[a]), (b, h[b])]);
            let fmm = eval(&mut pt, &[(a, -h[a]), (b, -h[b])]);
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[a] * h[b]);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    hess
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeIssue {
    /// The estimate sits at (or diverges toward) the edge of the parameter space.
    Boundary,
    /// The inverted information has a non-positive diagonal entry.
    NonPositiveVariance,
    /// The negated Hessian could not be inverted.
    SingularHessian,
}

impl fmt::Display for SeIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeIssue::Boundary => "boundary",
            SeIssue::NonPositiveVariance => "non-positive-variance",
            SeIssue::SingularHessian => "singular-hessian",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StdErr {
    Value(f64),
    Undefined(SeIssue),
}

impl StdErr {
    pub fn value(self) -> Option<f64> {
        match self {
            StdErr::Value(v) => Some(v),
            StdErr::Undefined(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StandardErrors {
    /// Flat parameter order.
    pub se: Vec<StdErr>,
    /// Inverse of the negated Hessian over the non-boundary parameters; rows and
    /// columns of boundary parameters are NaN. `None` when inversion failed.
    pub covariance: Option<DMatrix<f64>>,
}

/// Inverts the negated Hessian of the observed log-likelihood at `params`.
///
/// Parameters flagged in `boundary` are held fixed: they get an undefined
/// standard error and are left out of the inversion, so that a diverging
/// coefficient does not make the whole matrix singular.
pub fn standard_errors(params: &ParamSet, data: &ObservedDataset, boundary: &[bool]) -> Result<StandardErrors> {
    params.check_layout(data.layout())?;
    let layout = params.layout();
    let theta = params.to_flat();
    let n = theta.len();
    let free: Vec<usize> = (0..n).filter(|&k| !boundary.get(k).copied().unwrap_or(false)).collect();

    let mut se = vec![StdErr::Undefined(SeIssue::Boundary); n];
    if free.is_empty() {
        return Ok(StandardErrors { se, covariance: None });
    }

    let sub: Vec<f64> = free.iter().map(|&k| theta[k]).collect();
    let loglik = |x: &[f64]| {
        let mut full = theta.clone();
        for (&k, &v) in free.iter().zip(x) {
            full[k] = v;
        }
        ParamSet::from_flat(layout, &full)
            .and_then(|p| joint_observed_loglik(&p, data))
            .unwrap_or(f64::NAN)
    };
    let info = -numerical_hessian(loglik, &sub, HESSIAN_REL_STEP);
    let inverse = if info.iter().all(|v| v.is_finite()) {
        info.clone().cholesky().map(|c| c.inverse()).or_else(|| info.try_inverse())
    } else {
        None
    };
    let Some(inv) = inverse else {
        for &k in &free {
            se[k] = StdErr::Undefined(SeIssue::SingularHessian);
        }
        return Ok(StandardErrors { se, covariance: None });
    };

    let mut cov = DMatrix::from_element(n, n, f64::NAN);
    for (a, &ka) in free.iter().enumerate() {
        for (b, &kb) in free.iter().enumerate() {
            // symmetrize away round-off from the general inverse
            cov[(ka, kb)] = 0.5 * (inv[(a, b)] + inv[(b, a)]);
        }
        let var = cov[(ka, ka)];
        se[ka] = if var > 0.0 && var.is_finite() {
            StdErr::Value(var.sqrt())
        } else {
            StdErr::Undefined(SeIssue::NonPositiveVariance)
        };
    }
    Ok(StandardErrors {
        se,
        covariance: Some(cov),
    })
}
