//! Bayesian fit by blockwise adaptive random-walk Metropolis.
//!
//! Each of the seven coefficient blocks is updated in turn with a Gaussian
//! random-walk proposal. During burn-in the proposal scale is tuned toward a
//! target acceptance rate and the proposal shape toward the empirical block
//! covariance; both are frozen afterwards, so the kept draws come from a
//! time-homogeneous Metropolis kernel. Label switching is corrected chain by
//! chain before the draws are pooled.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::distribution::{Continuous, Laplace, Normal, StudentsT};

use crate::em::default_init;
use crate::error::{Error, Result};
use crate::labels::{correct_labels, flip_flat, LabelStages};
use crate::model::{joint_observed_loglik, log_prob, log_sum_exp2, dot, Block, Class, ObservedDataset, ParamSet};

/// Iterations per adaptation window during burn-in.
pub const ADAPT_WINDOW: usize = 50;

const INITIAL_STEP: f64 = 0.1;

// Once proposals follow the empirical covariance, this share of them is a small
// isotropic step instead, so a badly estimated covariance cannot freeze a block.
const SAFE_MIX: f64 = 0.2;
const SAFE_STEP: f64 = 0.1;
const ADAPT_GAIN: f64 = 1.0;
const INIT_JITTER_SD: f64 = 0.5;

/// Independent prior applied to every coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Prior {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    DoubleExponential { loc: f64, scale: f64 },
    StudentT { df: f64, loc: f64, scale: f64 },
}

impl Default for Prior {
    fn default() -> Self {
        Prior::Uniform { lo: -10.0, hi: 10.0 }
    }
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Prior::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Prior::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            Prior::DoubleExponential { loc, scale } => loc.is_finite() && scale > 0.0 && scale.is_finite(),
            Prior::StudentT { df, loc, scale } => df > 0.0 && loc.is_finite() && scale > 0.0 && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid prior {self}")))
        }
    }

    pub fn log_density(&self, v: f64) -> f64 {
        match *self {
            Prior::Uniform { lo, hi } => {
                if (lo..=hi).contains(&v) {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Prior::Normal { mean, sd } => Normal::new(mean, sd).map_or(f64::NAN, |d| d.ln_pdf(v)),
            Prior::DoubleExponential { loc, scale } => Laplace::new(loc, scale).map_or(f64::NAN, |d| d.ln_pdf(v)),
            Prior::StudentT { df, loc, scale } => StudentsT::new(loc, scale, df).map_or(f64::NAN, |d| d.ln_pdf(v)),
        }
    }

    /// Moves `v` inside the support (only the uniform prior has a bounded one).
    fn project(&self, v: f64) -> f64 {
        match *self {
            Prior::Uniform { lo, hi } => {
                let margin = 1e-6 * (hi - lo);
                v.clamp(lo + margin, hi - margin)
            }
            _ => v,
        }
    }
}

impl fmt::Display for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Prior::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            Prior::Normal { mean, sd } => write!(f, "normal({mean},{sd})"),
            Prior::DoubleExponential { loc, scale } => write!(f, "dexp({loc},{scale})"),
            Prior::StudentT { df, loc, scale } => write!(f, "t({df},{loc},{scale})"),
        }
    }
}

impl FromStr for Prior {
    type Err = Error;

    /// `uniform(lo,hi)`, `normal(mean,sd)`, `dexp(loc,scale)` or `t(df,loc,scale)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse prior `{s}`"));
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        let name = s[..open].trim().to_ascii_lowercase();
        let body = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let args: Vec<f64> = body
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let prior = match (name.as_str(), args.as_slice()) {
            ("uniform", &[lo, hi]) => Prior::Uniform { lo, hi },
            ("normal", &[mean, sd]) => Prior::Normal { mean, sd },
            ("dexp" | "laplace" | "double-exponential", &[loc, scale]) => Prior::DoubleExponential { loc, scale },
            ("t", &[df, loc, scale]) => Prior::StudentT { df, loc, scale },
            _ => return Err(bad()),
        };
        prior.validate()?;
        Ok(prior)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McmcConfig {
    pub n_chains: usize,
    /// Iterations per chain, burn-in included.
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub prior: Prior,
    pub target_accept: f64,
    pub seed: u64,
    pub label_stages: LabelStages,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            n_chains: 4,
            n_iter: 10_000,
            burn_in: 2_000,
            thin: 1,
            prior: Prior::default(),
            target_accept: 0.234,
            seed: 0,
            label_stages: LabelStages::Both,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 || self.n_iter == 0 || self.thin == 0 {
            return Err(Error::Config("n_chains, n_iter and thin must be positive".into()));
        }
        if self.burn_in >= self.n_iter {
            return Err(Error::Config("burn_in must be smaller than n_iter".into()));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::Config("target_accept must lie in (0, 1)".into()));
        }
        self.prior.validate()
    }

    fn settings(&self) -> ChainSettings {
        ChainSettings {
            n_iter: self.n_iter,
            burn_in: self.burn_in,
            thin: self.thin,
            target_accept: self.target_accept,
        }
    }
}

/// Sum of the prior log-density over all coefficients.
pub fn log_prior(params: &ParamSet, prior: &Prior) -> f64 {
    params.to_flat().iter().map(|&v| prior.log_density(v)).sum()
}

/// Observed log-likelihood plus log prior; `-inf` outside the prior support.
pub fn log_posterior(params: &ParamSet, data: &ObservedDataset, prior: &Prior) -> f64 {
    let lp = log_prior(params, prior);
    if lp == f64::NEG_INFINITY || lp.is_nan() {
        return f64::NEG_INFINITY;
    }
    match joint_observed_loglik(params, data) {
        Ok(ll) => ll + lp,
        Err(_) => f64::NEG_INFINITY,
    }
}

/// A log-density that the blockwise sampler can update one block at a time.
pub trait BlockTarget {
    fn blocks(&self) -> Vec<Range<usize>>;

    /// Evaluates the density at `theta` and makes it the current state.
    fn reset(&mut self, theta: &[f64]) -> f64;

    /// Density at `theta`, which differs from the current state only in `block`.
    fn propose(&mut self, theta: &[f64], block: usize) -> f64;

    /// Makes the last proposal the current state.
    fn commit(&mut self, block: usize);
}

/// A [`BlockTarget`] backed by a plain closure.
pub struct FnTarget<F> {
    f: F,
    blocks: Vec<Range<usize>>,
}

impl<F: Fn(&[f64]) -> f64> FnTarget<F> {
    pub fn new(f: F, blocks: Vec<Range<usize>>) -> Self {
        FnTarget { f, blocks }
    }
}

impl<F: Fn(&[f64]) -> f64> BlockTarget for FnTarget<F> {
    fn blocks(&self) -> Vec<Range<usize>> {
        self.blocks.clone()
    }

    fn reset(&mut self, theta: &[f64]) -> f64 {
        (self.f)(theta)
    }

    fn propose(&mut self, theta: &[f64], _block: usize) -> f64 {
        (self.f)(theta)
    }

    fn commit(&mut self, _block: usize) {}
}

/// The misclassification posterior with per-subject component caches, so a
/// block update only recomputes the log-probabilities that block touches.
pub struct PosteriorTarget<'a> {
    data: &'a ObservedDataset,
    prior: Prior,
    layout_blocks: [Range<usize>; 7],
    /// `[i][j]`: log π_ij, log π*(1)_{i k1(i) j}, log π*(2)_{i k2(i) k1(i) j}.
    terms: [Vec<[f64; 2]>; 3],
    scratch: Vec<[f64; 2]>,
}

impl<'a> PosteriorTarget<'a> {
    pub fn new(data: &'a ObservedDataset, prior: Prior) -> Self {
        let n = data.len();
        PosteriorTarget {
            data,
            prior,
            layout_blocks: data.layout().block_ranges(),
            terms: [vec![[0.0; 2]; n], vec![[0.0; 2]; n], vec![[0.0; 2]; n]],
            scratch: vec![[0.0; 2]; n],
        }
    }

    fn slot(block: Block) -> usize {
        match block {
            Block::Beta => 0,
            Block::Stage1 { .. } => 1,
            Block::Stage2 { .. } => 2,
        }
    }

    /// Writes the block's terms into `out`, starting from the current cache.
    fn fill(&self, theta: &[f64], b: usize, out: &mut [[f64; 2]]) {
        let block = Block::ALL[b];
        let coef = &theta[self.layout_blocks[b].clone()];
        let d = self.data;
        out.copy_from_slice(&self.terms[Self::slot(block)]);
        match block {
            Block::Beta => {
                for (i, o) in out.iter_mut().enumerate() {
                    let eta = dot(coef, d.x().row(i));
                    *o = [log_prob(eta, Class::One), log_prob(eta, Class::Two)];
                }
            }
            Block::Stage1 { j } => {
                for (i, o) in out.iter_mut().enumerate() {
                    o[j.index()] = log_prob(dot(coef, d.z1().row(i)), d.ystar1()[i]);
                }
            }
            Block::Stage2 { k1, j } => {
                for (i, o) in out.iter_mut().enumerate() {
                    if d.ystar1()[i] == k1 {
                        o[j.index()] = log_prob(dot(coef, d.z2().row(i)), d.ystar2()[i]);
                    }
                }
            }
        }
    }

    fn total(&self, replace: Option<(usize, &[[f64; 2]])>) -> f64 {
        let pick = |s: usize| -> &[[f64; 2]] {
            match replace {
                Some((slot, v)) if slot == s => v,
                _ => &self.terms[s],
            }
        };
        let (a, b, c) = (pick(0), pick(1), pick(2));
        (0..self.data.len())
            .map(|i| log_sum_exp2([a[i][0] + b[i][0] + c[i][0], a[i][1] + b[i][1] + c[i][1]]))
            .sum()
    }

    fn prior_sum(&self, theta: &[f64]) -> f64 {
        theta.iter().map(|&v| self.prior.log_density(v)).sum()
    }
}

impl BlockTarget for PosteriorTarget<'_> {
    fn blocks(&self) -> Vec<Range<usize>> {
        self.layout_blocks.to_vec()
    }

    fn reset(&mut self, theta: &[f64]) -> f64 {
        for b in 0..7 {
            let mut out = std::mem::take(&mut self.scratch);
            self.fill(theta, b, &mut out);
            let slot = Self::slot(Block::ALL[b]);
            self.terms[slot].copy_from_slice(&out);
            self.scratch = out;
        }
        let lp = self.prior_sum(theta);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        self.total(None) + lp
    }

    fn propose(&mut self, theta: &[f64], block: usize) -> f64 {
        let lp = self.prior_sum(theta);
        if lp == f64::NEG_INFINITY || lp.is_nan() {
            return f64::NEG_INFINITY;
        }
        let mut out = std::mem::take(&mut self.scratch);
        self.fill(theta, block, &mut out);
        let slot = Self::slot(Block::ALL[block]);
        let ll = self.total(Some((slot, &out)));
        self.scratch = out;
        if ll.is_finite() {
            ll + lp
        } else {
            f64::NEG_INFINITY
        }
    }

    fn commit(&mut self, block: usize) {
        let slot = Self::slot(Block::ALL[block]);
        self.terms[slot].copy_from_slice(&self.scratch);
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ChainSettings {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub target_accept: f64,
}

#[derive(Clone, Debug)]
pub struct ChainOutput {
    /// Kept draws, one flat vector per kept iteration.
    pub draws: Vec<Vec<f64>>,
    /// Post-burn-in acceptance rate per block.
    pub acceptance: Vec<f64>,
    /// Frozen proposal scale per block.
    pub step: Vec<f64>,
}

struct BlockProposal {
    range: Range<usize>,
    scale: f64,
    chol: DMatrix<f64>,
    shaped: bool,
}

impl BlockProposal {
    fn propose(&self, theta: &mut [f64], rng: &mut impl Rng) {
        let d = self.range.len();
        let eps = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));
        if self.shaped && rng.random::<f64>() < SAFE_MIX {
            let s = SAFE_STEP / (d as f64).sqrt();
            for (k, idx) in self.range.clone().enumerate() {
                theta[idx] += s * eps[k];
            }
            return;
        }
        let delta = &self.chol * eps;
        for (k, idx) in self.range.clone().enumerate() {
            theta[idx] += self.scale * delta[k];
        }
    }
}

fn empirical_chol(history: &[Vec<f64>], range: &Range<usize>) -> Option<DMatrix<f64>> {
    let d = range.len();
    let n = history.len();
    if n < 2 * d + 2 {
        return None;
    }
    let mut mean = vec![0.0; d];
    for h in history {
        for (k, idx) in range.clone().enumerate() {
            mean[k] += h[idx] / n as f64;
        }
    }
    let mut cov = DMatrix::zeros(d, d);
    for h in history {
        for a in 0..d {
            for b in 0..d {
                cov[(a, b)] += (h[range.start + a] - mean[a]) * (h[range.start + b] - mean[b]) / (n - 1) as f64;
            }
        }
    }
    let jitter = 1e-10 * cov.diagonal().iter().fold(1.0f64, |m, v| m.max(*v));
    for a in 0..d {
        cov[(a, a)] += jitter;
    }
    cov.cholesky().map(|c| c.l())
}

/// Runs one blockwise adaptive random-walk Metropolis chain.
pub fn run_chain<T: BlockTarget>(target: &mut T, init: &[f64], settings: ChainSettings, chain: usize, rng: &mut impl Rng) -> Result<ChainOutput> {
    let blocks = target.blocks();
    let mut proposals: Vec<BlockProposal> = blocks
        .iter()
        .map(|r| BlockProposal {
            range: r.clone(),
            scale: INITIAL_STEP,
            chol: DMatrix::identity(r.len(), r.len()),
            shaped: false,
        })
        .collect();
    let mut theta = init.to_vec();
    let mut current = target.reset(&theta);
    if !current.is_finite() {
        return Err(Error::Contract(format!("chain {chain} starts outside the posterior support")));
    }

    let nb = blocks.len();
    let mut window_accepts = vec![0usize; nb];
    let mut kept_accepts = vec![0usize; nb];
    let mut window_index = 0usize;
    let mut burn_history: Vec<Vec<f64>> = Vec::new();
    let mut draws = Vec::with_capacity((settings.n_iter - settings.burn_in) / settings.thin + 1);
    let mut candidate = theta.clone();

    for iter in 0..settings.n_iter {
        for (b, prop) in proposals.iter().enumerate() {
            candidate.copy_from_slice(&theta);
            prop.propose(&mut candidate, rng);
            let proposed = target.propose(&candidate, b);
            let log_ratio = proposed - current;
            let accept = proposed.is_finite() && (log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio);
            if accept {
                target.commit(b);
                theta[prop.range.clone()].copy_from_slice(&candidate[prop.range.clone()]);
                current = proposed;
                if iter < settings.burn_in {
                    window_accepts[b] += 1;
                } else {
                    kept_accepts[b] += 1;
                }
            }
        }

        if iter < settings.burn_in {
            burn_history.push(theta.clone());
            let window_done = (iter + 1) % ADAPT_WINDOW == 0 || iter + 1 == settings.burn_in;
            if window_done {
                window_index += 1;
                let len = (iter % ADAPT_WINDOW) + 1;
                let gain = ADAPT_GAIN / (window_index as f64).sqrt();
                for (b, prop) in proposals.iter_mut().enumerate() {
                    if window_accepts[b] == 0 && len == ADAPT_WINDOW {
                        return Err(Error::StepSizeCollapse { chain, block: b });
                    }
                    let rate = window_accepts[b] as f64 / len as f64;
                    prop.scale *= (gain * (rate - settings.target_accept)).exp();
                    if window_index >= 4 {
                        let recent = &burn_history[burn_history.len() / 2..];
                        if let Some(l) = empirical_chol(recent, &prop.range) {
                            prop.chol = l;
                            if !prop.shaped {
                                prop.scale = 2.38 / (prop.range.len() as f64).sqrt();
                                prop.shaped = true;
                            }
                        }
                    }
                    window_accepts[b] = 0;
                }
            }
        } else if (iter - settings.burn_in) % settings.thin == 0 {
            draws.push(theta.clone());
        }
    }

    let sampled = (settings.n_iter - settings.burn_in) as f64;
    Ok(ChainOutput {
        draws,
        acceptance: kept_accepts.iter().map(|&a| a as f64 / sampled).collect(),
        step: proposals.iter().map(|p| p.scale).collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSummary {
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug)]
pub struct McmcResult {
    /// `[chain][kept iteration]` flat parameter vectors, label-corrected.
    pub draws: Vec<Vec<Vec<f64>>>,
    /// `[chain][block]` post-burn-in acceptance rates.
    pub acceptance_rates: Vec<Vec<f64>>,
    /// Pooled posterior summaries in flat parameter order.
    pub summaries: Vec<ParamSummary>,
    /// Whether each chain was relabelled.
    pub flip_counts: Vec<bool>,
    /// Split-chain potential scale reduction per parameter.
    pub rhat: Vec<f64>,
    pub layout: crate::model::ParamLayout,
}

impl McmcResult {
    pub fn posterior_mean(&self) -> ParamSet {
        let flat: Vec<f64> = self.summaries.iter().map(|s| s.mean).collect();
        ParamSet::from_flat(self.layout, &flat).expect("summaries follow the layout")
    }

    pub fn pooled(&self, k: usize) -> Vec<f64> {
        self.draws.iter().flatten().map(|d| d[k]).collect()
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> ParamSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    ParamSummary {
        mean,
        sd: var.sqrt(),
        lower: quantile(&sorted, 0.025),
        upper: quantile(&sorted, 0.975),
    }
}

/// Split-R̂ over chains for one parameter.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let half = chains.iter().map(Vec::len).min().unwrap_or(0) / 2;
    if half < 2 {
        return f64::NAN;
    }
    let seqs: Vec<&[f64]> = chains.iter().flat_map(|c| [&c[..half], &c[half..2 * half]]).collect();
    let n = half as f64;
    let means: Vec<f64> = seqs.iter().map(|s| s.iter().sum::<f64>() / n).collect();
    let vars: Vec<f64> = seqs
        .iter()
        .zip(&means)
        .map(|(s, m)| s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
        .collect();
    let m = seqs.len() as f64;
    let grand = means.iter().sum::<f64>() / m;
    let between = n / (m - 1.0) * means.iter().map(|v| (v - grand).powi(2)).sum::<f64>();
    let within = vars.iter().sum::<f64>() / m;
    if within <= 0.0 {
        return if between <= 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (n - 1.0) / n * within + between / n;
    (var_plus / within).sqrt()
}

fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64 + 1);
    rng
}

/// Runs `n_chains` chains from jittered default starting values.
pub fn run_chains(data: &ObservedDataset, config: &McmcConfig) -> Result<McmcResult> {
    config.validate()?;
    let base = default_init(data).to_flat();
    let normal = rand_distr::Normal::new(0.0, INIT_JITTER_SD).expect("positive sd");
    let inits: Vec<ParamSet> = (0..config.n_chains)
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(1_000_000 + c as u64);
            let flat: Vec<f64> = base.iter().map(|v| v + normal.sample(&mut rng)).collect();
            ParamSet::from_flat(data.layout(), &flat).expect("layout")
        })
        .collect();
    run_chains_from(data, config, &inits)
}

/// Runs one chain per entry of `inits` (overriding `config.n_chains`).
pub fn run_chains_from(data: &ObservedDataset, config: &McmcConfig, inits: &[ParamSet]) -> Result<McmcResult> {
    config.validate()?;
    if inits.is_empty() {
        return Err(Error::Config("at least one chain is required".into()));
    }
    let layout = data.layout();
    for p in inits {
        p.check_layout(layout)?;
    }
    let settings = config.settings();
    let outputs: Vec<Result<ChainOutput>> = inits
        .par_iter()
        .enumerate()
        .map(|(c, init)| {
            let start: Vec<f64> = init.to_flat().iter().map(|&v| config.prior.project(v)).collect();
            let mut target = PosteriorTarget::new(data, config.prior);
            let mut rng = chain_rng(config.seed, c);
            run_chain(&mut target, &start, settings, c, &mut rng)
        })
        .collect();

    let mut draws = Vec::with_capacity(inits.len());
    let mut acceptance_rates = Vec::with_capacity(inits.len());
    let mut flip_counts = Vec::with_capacity(inits.len());
    for out in outputs {
        let out = out?;
        let n_kept = out.draws.len() as f64;
        let mut mean = vec![0.0; layout.n_params()];
        for d in &out.draws {
            for (m, v) in mean.iter_mut().zip(d) {
                *m += v / n_kept;
            }
        }
        let mean = ParamSet::from_flat(layout, &mean)?;
        let (_, report) = correct_labels(&mean, data, config.label_stages)?;
        let chain_draws = if report.flipped {
            out.draws.iter().map(|d| flip_flat(layout, d)).collect()
        } else {
            out.draws
        };
        draws.push(chain_draws);
        acceptance_rates.push(out.acceptance);
        flip_counts.push(report.flipped);
    }

    let n_params = layout.n_params();
    let mut summaries = Vec::with_capacity(n_params);
    let mut rhat = Vec::with_capacity(n_params);
    for k in 0..n_params {
        let per_chain: Vec<Vec<f64>> = draws.iter().map(|c: &Vec<Vec<f64>>| c.iter().map(|d| d[k]).collect()).collect();
        let pooled: Vec<f64> = per_chain.iter().flatten().copied().collect();
        summaries.push(summarize(&pooled));
        rhat.push(split_rhat(&per_chain));
    }
    Ok(McmcResult {
        draws,
        acceptance_rates,
        summaries,
        flip_counts,
        rhat,
        layout,
    })
}
