//! Expectation-maximization for the two-stage misclassification model.
//!
//! The E-step computes each subject's posterior class probabilities given both
//! observed proxies. The expected complete-data log-likelihood then separates
//! into seven independent weighted logistic regressions, one per coefficient
//! block, which the M-step solves by damped Newton-Raphson from the previous
//! iterate. Each block solve never decreases its objective, so the observed
//! log-likelihood is non-decreasing across iterations.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hessian::{standard_errors, StdErr};
use crate::labels::{correct_labels, partner, LabelCheckReport, LabelStages};
use crate::logistic::{fit_unweighted, LogisticFit, NewtonOptions, WeightedBinary};
use crate::model::{joint_observed_loglik, log_sum_exp2, subject_log_joint, Block, Class, ObservedDataset, ParamSet};

/// Coefficients beyond this magnitude are reported as boundary estimates.
pub const BOUNDARY_THRESHOLD: f64 = 10.0;

/// Allowed decrease of the log-likelihood between iterations before the fit is aborted.
pub const MONOTONE_SLACK: f64 = 1e-8;

const MULTISTART_JITTER_SD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop when the log-likelihood changes by less than this.
    pub tol: f64,
    pub inner_max_iter: usize,
    pub inner_tol: f64,
    pub n_starts: usize,
    pub seed: u64,
    pub label_stages: LabelStages,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iter: 1500,
            tol: 1e-7,
            inner_max_iter: 100,
            inner_tol: 1e-8,
            n_starts: 1,
            seed: 0,
            label_stages: LabelStages::Both,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || self.inner_max_iter == 0 || self.n_starts == 0 {
            return Err(Error::Config("EM iteration counts and n_starts must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.inner_tol > 0.0) {
            return Err(Error::Config("EM tolerances must be strictly positive".into()));
        }
        Ok(())
    }

    fn newton(&self) -> NewtonOptions {
        NewtonOptions {
            max_iter: self.inner_max_iter,
            tol: self.inner_tol,
        }
    }
}

/// Posterior class membership probabilities, one row per subject.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorWeights {
    pub w: Vec<[f64; 2]>,
}

impl PosteriorWeights {
    #[inline]
    pub fn get(&self, i: usize, j: Class) -> f64 {
        self.w[i][j.index()]
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

pub fn estep(params: &ParamSet, data: &ObservedDataset) -> Result<PosteriorWeights> {
    params.check_layout(data.layout())?;
    let mut w = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        let l = subject_log_joint(params, data, i);
        let norm = log_sum_exp2(l);
        if !norm.is_finite() {
            return Err(Error::ZeroDenominator { subject: i });
        }
        let w1 = (l[0] - norm).exp();
        let w2 = (l[1] - norm).exp();
        // renormalize so rows sum to one to the last bit that matters
        let s = w1 + w2;
        w.push([w1 / s, w2 / s]);
    }
    Ok(PosteriorWeights { w })
}

/// `Q(params | weights)`: the expected complete-data log-likelihood.
pub fn expected_complete_loglik(params: &ParamSet, data: &ObservedDataset, weights: &PosteriorWeights) -> Result<f64> {
    params.check_layout(data.layout())?;
    if weights.len() != data.len() {
        return Err(Error::Contract("weights and data disagree on N".into()));
    }
    let mut q = 0.0;
    for i in 0..data.len() {
        let l = subject_log_joint(params, data, i);
        for j in Class::BOTH {
            let w = weights.get(i, j);
            if w > 0.0 {
                q += w * l[j.index()];
            }
        }
    }
    Ok(q)
}

/// The weighted logistic problem whose maximizer updates `block`.
pub fn block_problem<'a>(block: Block, weights: &PosteriorWeights, data: &'a ObservedDataset) -> WeightedBinary<'a> {
    let n = data.len();
    match block {
        Block::Beta => {
            let mut p = WeightedBinary::new(data.x());
            for i in 0..n {
                p.push(i, weights.get(i, Class::One), weights.get(i, Class::Two));
            }
            p
        }
        Block::Stage1 { j } => {
            let mut p = WeightedBinary::new(data.z1());
            for i in 0..n {
                p.push_observed(i, data.ystar1()[i], weights.get(i, j));
            }
            p
        }
        Block::Stage2 { k1, j } => {
            let mut p = WeightedBinary::new(data.z2());
            for i in (0..n).filter(|&i| data.ystar1()[i] == k1) {
                p.push_observed(i, data.ystar2()[i], weights.get(i, j));
            }
            p
        }
    }
}

#[derive(Clone, Debug)]
pub struct MStep {
    pub params: ParamSet,
    /// Per block, in [`Block::ALL`] order.
    pub fits: Vec<LogisticFit>,
}

impl MStep {
    pub fn boundary_blocks(&self) -> [bool; 7] {
        std::array::from_fn(|b| self.fits[b].is_boundary())
    }
}

pub fn mstep(weights: &PosteriorWeights, data: &ObservedDataset, warm: &ParamSet, opts: NewtonOptions) -> Result<MStep> {
    warm.check_layout(data.layout())?;
    if weights.len() != data.len() {
        return Err(Error::Contract("weights and data disagree on N".into()));
    }
    let mut params = warm.clone();
    let mut fits = Vec::with_capacity(7);
    for block in Block::ALL {
        let fit = block_problem(block, weights, data).solve(warm.block(block), opts);
        params.block_mut(block).clone_from(&fit.coef);
        fits.push(fit);
    }
    Ok(MStep { params, fits })
}

/// Starting values: β from a logistic fit of the first proxy on `X`; γ intercepts at
/// logit(0.8) for cells that classify correctly and logit(0.2) otherwise, slopes 0.
pub fn default_init(data: &ObservedDataset) -> ParamSet {
    let layout = data.layout();
    let mut p = ParamSet::zeros(layout);
    let rows: Vec<usize> = (0..data.len()).collect();
    let (fit, _) = fit_unweighted(data.x(), &rows, data.ystar1(), NewtonOptions::default());
    p.beta = fit.coef;
    let hi = (0.8f64 / 0.2).ln();
    p.gamma1[0][0] = hi;
    p.gamma1[1][0] = -hi;
    for k1 in 0..2 {
        p.gamma2[k1][0][0] = hi;
        p.gamma2[k1][1][0] = -hi;
    }
    p
}

#[derive(Clone, Debug)]
pub struct FitResult {
    /// Label-corrected estimates.
    pub params: ParamSet,
    /// Standard errors in flat parameter order.
    pub se: Vec<StdErr>,
    pub covariance: Option<DMatrix<f64>>,
    /// Observed log-likelihood at the start and after every EM iteration.
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    pub label_flipped: bool,
    pub label_report: LabelCheckReport,
    /// Per parameter (flat order): in a block with a coefficient beyond
    /// [`BOUNDARY_THRESHOLD`], or whose final Newton solve hit the coefficient cap
    /// or did not converge.
    pub boundary_flags: Vec<bool>,
    pub iterations: usize,
    /// Index of the winning start.
    pub start: usize,
}

impl FitResult {
    pub fn loglik(&self) -> f64 {
        *self.loglik_trace.last().expect("trace holds the initial value")
    }

    pub fn se_params(&self) -> ParamSet {
        let flat: Vec<f64> = self.se.iter().map(|s| s.value().unwrap_or(f64::NAN)).collect();
        ParamSet::from_flat(self.params.layout(), &flat).expect("se has the parameter layout")
    }
}

struct RawFit {
    params: ParamSet,
    trace: Vec<f64>,
    converged: bool,
    boundary_blocks: [bool; 7],
}

fn run_em(data: &ObservedDataset, config: &EmConfig, init: &ParamSet) -> Result<RawFit> {
    let opts = config.newton();
    let mut params = init.clone();
    let mut ll = joint_observed_loglik(&params, data)?;
    let mut trace = vec![ll];
    let mut converged = false;
    let mut boundary_blocks = [false; 7];
    for iteration in 1..=config.max_iter {
        let weights = estep(&params, data)?;
        let step = mstep(&weights, data, &params, opts)?;
        let next = joint_observed_loglik(&step.params, data)?;
        if next < ll - MONOTONE_SLACK {
            return Err(Error::LikelihoodDecrease {
                iteration,
                previous: ll,
                current: next,
            });
        }
        boundary_blocks = step.boundary_blocks();
        params = step.params;
        trace.push(next);
        let change = (next - ll).abs();
        ll = next;
        if change < config.tol {
            converged = true;
            break;
        }
    }
    Ok(RawFit {
        params,
        trace,
        converged,
        boundary_blocks,
    })
}

fn jittered(base: &ParamSet, seed: u64, start: usize) -> ParamSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start as u64);
    let normal = Normal::new(0.0, MULTISTART_JITTER_SD).expect("positive sd");
    let flat: Vec<f64> = base.to_flat().into_iter().map(|v| v + normal.sample(&mut rng)).collect();
    ParamSet::from_flat(base.layout(), &flat).expect("same layout")
}

/// Fits the model by EM, corrects label switching, and computes standard errors.
///
/// With `n_starts > 1` the extra starts jitter the initial values and the fit
/// with the highest log-likelihood wins (ties go to the earliest start).
pub fn fit_em(data: &ObservedDataset, config: &EmConfig, init: Option<&ParamSet>) -> Result<FitResult> {
    config.validate()?;
    let base = match init {
        Some(p) => {
            p.check_layout(data.layout())?;
            p.clone()
        }
        None => default_init(data),
    };
    let starts: Vec<ParamSet> = (0..config.n_starts)
        .map(|s| if s == 0 { base.clone() } else { jittered(&base, config.seed, s) })
        .collect();
    let runs: Vec<Result<RawFit>> = if starts.len() == 1 {
        vec![run_em(data, config, &starts[0])]
    } else {
        starts.par_iter().map(|s| run_em(data, config, s)).collect()
    };

    let mut best: Option<(usize, RawFit)> = None;
    let mut reasons = Vec::new();
    let mut traces = Vec::new();
    for (s, run) in runs.into_iter().enumerate() {
        match run {
            Ok(raw) => {
                let better = best.as_ref().is_none_or(|(_, b)| raw.trace.last() > b.trace.last());
                if better {
                    best = Some((s, raw));
                }
            }
            Err(e) => {
                reasons.push(format!("start {s}: {e}"));
                traces.push(Vec::new());
            }
        }
    }
    let Some((start, raw)) = best else {
        return Err(Error::EstimationFailed { reasons, traces });
    };
    finish(data, config, start, raw)
}

fn finish(data: &ObservedDataset, config: &EmConfig, start: usize, raw: RawFit) -> Result<FitResult> {
    let (params, label_report) = correct_labels(&raw.params, data, config.label_stages)?;
    let layout = params.layout();
    let ranges = layout.block_ranges();
    let mut boundary_flags = vec![false; layout.n_params()];
    for (b, block) in Block::ALL.into_iter().enumerate() {
        let source = if label_report.flipped { partner(block).position() } else { b };
        let block_flag = raw.boundary_blocks[source];
        for k in ranges[b].clone() {
            boundary_flags[k] = block_flag;
        }
    }
    let flat = params.to_flat();
    for range in ranges {
        if flat[range.clone()].iter().any(|v| v.abs() > BOUNDARY_THRESHOLD) {
            boundary_flags[range].fill(true);
        }
    }
    let ses = standard_errors(&params, data, &boundary_flags)?;
    Ok(FitResult {
        params,
        se: ses.se,
        covariance: ses.covariance,
        iterations: raw.trace.len() - 1,
        loglik_trace: raw.trace,
        converged: raw.converged,
        label_flipped: label_report.flipped,
        label_report,
        boundary_flags,
        start,
    })
}
