//! Simulated datasets for the four benchmark settings and the Monte Carlo
//! replication harness.
//!
//! `X` is standard normal and `Z(1)`, `Z(2)` are Gamma with rate 1. All
//! generating equations are on the logit scale.

use std::fmt::Write as _;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::em::{fit_em, EmConfig};
use crate::error::{Error, Result};
use crate::hessian::StdErr;
use crate::mcmc::{run_chains, McmcConfig};
use crate::model::{dot, logistic_pair, model_event_rates, Class, CovariateNames, Design, EventRates, ObservedDataset, ParamLayout, ParamSet};
use crate::naive::{fit_naive, naive_counterpart, NaiveFit};

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationConfig {
    pub n: usize,
    pub truth: ParamSet,
    /// Gamma shape of `Z(1)`.
    pub z1_shape: f64,
    /// Gamma shape of `Z(2)`.
    pub z2_shape: f64,
    pub seed: u64,
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("sample size must be at least 1".into()));
        }
        if !(self.z1_shape > 0.0 && self.z2_shape > 0.0 && self.z1_shape.is_finite() && self.z2_shape.is_finite()) {
            return Err(Error::Config("Gamma shapes must be positive".into()));
        }
        self.truth.check_layout(ParamLayout { x: 2, z1: 2, z2: 2 })?;
        if !self.truth.is_finite() {
            return Err(Error::Config("generating parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Generating parameters shared by settings 1 and 2.
fn base_truth() -> ParamSet {
    ParamSet {
        beta: vec![1.0, -2.0],
        gamma1: [vec![1.0, 1.0], vec![-0.5, -1.5]],
        gamma2: [
            [vec![1.5, 1.0], vec![-0.5, 0.0]],
            [vec![0.5, 0.5], vec![-1.0, -1.0]],
        ],
    }
}

/// The benchmark configuration for `setting` (1 to 4), seed 0.
pub fn preset(setting: u8) -> Result<GenerationConfig> {
    let mut truth = base_truth();
    let (n, shape) = match setting {
        1 => (1000, 1.0),
        2 => (10_000, 2.0),
        3 => {
            truth.gamma1 = [vec![5.0, 5.0], vec![-5.0, -5.0]];
            (1000, 1.0)
        }
        4 => {
            truth.gamma2[0][1] = vec![-5.0, -5.0];
            truth.gamma2[1][1] = vec![-5.0, -5.0];
            (1000, 1.0)
        }
        other => return Err(Error::UnknownSetting(other.to_string())),
    };
    Ok(GenerationConfig {
        n,
        truth,
        z1_shape: shape,
        z2_shape: shape,
        seed: 0,
    })
}

pub fn parse_setting(s: &str) -> Result<u8> {
    match s.trim().parse::<u8>() {
        Ok(v @ 1..=4) => Ok(v),
        _ => Err(Error::UnknownSetting(s.trim().to_string())),
    }
}

#[derive(Clone, Debug)]
pub struct GeneratedDataset {
    pub data: ObservedDataset,
    /// The latent class; only for checking estimators, never passed to them.
    pub y_true: Vec<Class>,
    pub empirical: EventRates,
}

fn draw_class(p_one: f64, rng: &mut impl Rng) -> Class {
    if rng.random::<f64>() < p_one {
        Class::One
    } else {
        Class::Two
    }
}

/// Draws `(Y, Y*(1), Y*(2))` for one subject.
pub fn draw_outcomes(truth: &ParamSet, x: &[f64], z1: &[f64], z2: &[f64], rng: &mut impl Rng) -> (Class, Class, Class) {
    let y = draw_class(logistic_pair(dot(&truth.beta, x))[0], rng);
    let y1 = draw_class(logistic_pair(dot(&truth.gamma1[y.index()], z1))[0], rng);
    let y2 = draw_class(logistic_pair(dot(&truth.gamma2[y1.index()][y.index()], z2))[0], rng);
    (y, y1, y2)
}

/// Realized `P(Y=1)`, `P(Y=2)` and classification rates; a rate whose
/// conditioning cell is empty is NaN.
pub fn empirical_rates(y: &[Class], y1: &[Class], y2: &[Class]) -> EventRates {
    let n = y.len() as f64;
    let n1 = y.iter().filter(|&&c| c == Class::One).count() as f64;
    let ratio = |num: usize, den: usize| if den == 0 { f64::NAN } else { num as f64 / den as f64 };
    let count = |f: &dyn Fn(usize) -> bool| (0..y.len()).filter(|&i| f(i)).count();
    let (c1, c2) = (Class::One, Class::Two);
    EventRates {
        p_y1: n1 / n,
        p_y2: 1.0 - n1 / n,
        stage1_sensitivity: ratio(count(&|i| y[i] == c1 && y1[i] == c1), count(&|i| y[i] == c1)),
        stage1_specificity: ratio(count(&|i| y[i] == c2 && y1[i] == c2), count(&|i| y[i] == c2)),
        stage2_sensitivity: ratio(
            count(&|i| y[i] == c1 && y1[i] == c1 && y2[i] == c1),
            count(&|i| y[i] == c1 && y1[i] == c1),
        ),
        stage2_specificity: ratio(
            count(&|i| y[i] == c2 && y1[i] == c2 && y2[i] == c2),
            count(&|i| y[i] == c2 && y1[i] == c2),
        ),
    }
}

/// Draws outcomes for fixed designs.
pub fn simulate_outcomes(truth: &ParamSet, x: Design, z1: Design, z2: Design, rng: &mut impl Rng) -> Result<GeneratedDataset> {
    let n = x.nrows();
    let mut y = Vec::with_capacity(n);
    let mut y1 = Vec::with_capacity(n);
    let mut y2 = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b, c) = draw_outcomes(truth, x.row(i), z1.row(i), z2.row(i), rng);
        y.push(a);
        y1.push(b);
        y2.push(c);
    }
    let empirical = empirical_rates(&y, &y1, &y2);
    let data = ObservedDataset::new(x, z1, z2, y1, y2)?;
    truth.check_layout(data.layout())?;
    Ok(GeneratedDataset { data, y_true: y, empirical })
}

pub fn generate(config: &GenerationConfig) -> Result<GeneratedDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let g1 = Gamma::new(config.z1_shape, 1.0).map_err(|e| Error::Config(e.to_string()))?;
    let g2 = Gamma::new(config.z2_shape, 1.0).map_err(|e| Error::Config(e.to_string()))?;
    let n = config.n;
    let (mut xs, mut z1s, mut z2s) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        xs.push(rng.sample::<f64, _>(StandardNormal));
        z1s.push(g1.sample(&mut rng));
        z2s.push(g2.sample(&mut rng));
    }
    let mut out = simulate_outcomes(
        &config.truth,
        Design::with_intercept(n, &[xs])?,
        Design::with_intercept(n, &[z1s])?,
        Design::with_intercept(n, &[z2s])?,
        &mut rng,
    )?;
    out.data = out.data.with_names(default_names())?;
    Ok(out)
}

fn default_names() -> CovariateNames {
    CovariateNames {
        x: vec!["x".into()],
        z1: vec!["z1".into()],
        z2: vec!["z2".into()],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Estimator {
    Em,
    Mcmc,
    Naive,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Em => "em",
            Estimator::Mcmc => "mcmc",
            Estimator::Naive => "naive",
        }
    }

    /// Parses a comma-separated list such as `em,naive`.
    pub fn parse_list(s: &str) -> Result<Vec<Estimator>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let e = match part.to_ascii_lowercase().as_str() {
                "em" => Estimator::Em,
                "mcmc" => Estimator::Mcmc,
                "naive" => Estimator::Naive,
                other => return Err(Error::Config(format!("unknown estimator `{other}`"))),
            };
            if !out.contains(&e) {
                out.push(e);
            }
        }
        if out.is_empty() {
            return Err(Error::Config("no estimators selected".into()));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct ReplicationConfig {
    /// `seed` here is the master seed; realization seeds are derived from it.
    pub generation: GenerationConfig,
    pub n_realizations: usize,
    pub estimators: Vec<Estimator>,
    /// Worker threads; 0 uses rayon's default.
    pub parallelism: usize,
    pub em: EmConfig,
    pub mcmc: McmcConfig,
}

impl ReplicationConfig {
    pub fn new(generation: GenerationConfig, n_realizations: usize, estimators: Vec<Estimator>) -> Self {
        ReplicationConfig {
            generation,
            n_realizations,
            estimators,
            parallelism: 0,
            em: EmConfig::default(),
            mcmc: McmcConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmOutcome {
    /// Label-corrected estimates, flat order.
    pub estimate: Vec<f64>,
    pub rates: EventRates,
    pub converged: bool,
    pub iterations: usize,
    pub boundary_flags: Vec<bool>,
    pub se: Vec<StdErr>,
    /// Largest drop in log-likelihood between iterations (≤ 0 when monotone).
    pub max_decrease: f64,
    pub label_flipped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct McmcOutcome {
    pub posterior_mean: Vec<f64>,
    pub rates: EventRates,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealizationOutcome {
    pub index: usize,
    pub seed: u64,
    pub empirical: EventRates,
    pub em: Option<EmOutcome>,
    pub mcmc: Option<McmcOutcome>,
    /// β, γ(2)_{11·}, γ(2)_{22·} concatenated.
    pub naive: Option<Vec<f64>>,
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamStat {
    pub name: String,
    pub truth: f64,
    pub bias: f64,
    pub rmse: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorSummary {
    pub estimator: Estimator,
    pub params: Vec<ParamStat>,
    /// Mean model-implied event probabilities (NaN for the naive fit).
    pub rates: EventRates,
    /// Realizations entering the moments.
    pub n_used: usize,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ReplicationReport {
    pub n_realizations: usize,
    /// Mean realized rates over all generated datasets.
    pub data_rates: EventRates,
    pub estimators: Vec<EstimatorSummary>,
    pub realizations: Vec<RealizationOutcome>,
}

impl ReplicationReport {
    pub fn summary(&self, estimator: Estimator) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|s| s.estimator == estimator)
    }

    /// One row per estimator and parameter: `estimator,parameter,truth,bias,rmse,n_used`,
    /// followed by the event-probability rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("estimator,quantity,truth,bias,rmse,n_used\n");
        for est in &self.estimators {
            for p in &est.params {
                let _ = writeln!(s, "{},{},{},{},{},{}", est.estimator.as_str(), p.name, p.truth, p.bias, p.rmse, est.n_used);
            }
        }
        for (k, label) in EventRates::LABELS.iter().enumerate() {
            let _ = writeln!(s, "data,{label},{},,,{}", self.data_rates.to_array()[k], self.n_realizations);
            for est in &self.estimators {
                if est.estimator != Estimator::Naive {
                    let _ = writeln!(s, "{},{label},{},,,{}", est.estimator.as_str(), est.rates.to_array()[k], est.n_used);
                }
            }
        }
        s
    }

    /// Aligned text tables: bias/rMSE per parameter, then event probabilities.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "realizations: {}", self.n_realizations);
        for est in &self.estimators {
            let _ = writeln!(
                s,
                "{}: {} used, {} failed",
                est.estimator.as_str(),
                est.n_used,
                est.failures.len()
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<10} {:<16} {:>9} {:>9} {:>9}", "estimator", "parameter", "truth", "bias", "rMSE");
        for est in &self.estimators {
            for p in &est.params {
                let _ = writeln!(
                    s,
                    "{:<10} {:<16} {:>9.3} {:>9.3} {:>9.3}",
                    est.estimator.as_str(),
                    p.name,
                    p.truth,
                    p.bias,
                    p.rmse
                );
            }
        }
        let _ = writeln!(s);
        let mut header = format!("{:<22} {:>8}", "probability", "data");
        let shown: Vec<&EstimatorSummary> = self.estimators.iter().filter(|e| e.estimator != Estimator::Naive).collect();
        for est in &shown {
            let _ = write!(header, " {:>8}", est.estimator.as_str());
        }
        let _ = writeln!(s, "{header}");
        for (k, label) in EventRates::LABELS.iter().enumerate() {
            let mut row = format!("{:<22} {:>8.3}", label, self.data_rates.to_array()[k]);
            for est in &shown {
                let _ = write!(row, " {:>8.3}", est.rates.to_array()[k]);
            }
            let _ = writeln!(s, "{row}");
        }
        s
    }
}

/// Seeds for each realization, drawn in order from a generator keyed by the master seed.
pub fn realization_seeds(master: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..n).map(|_| rng.next_u64()).collect()
}

fn run_realization(config: &ReplicationConfig, index: usize, seed: u64) -> RealizationOutcome {
    let mut outcome = RealizationOutcome {
        index,
        seed,
        empirical: EventRates::from_array([f64::NAN; 6]),
        em: None,
        mcmc: None,
        naive: None,
        errors: Vec::new(),
    };
    let gen_config = GenerationConfig {
        seed,
        ..config.generation.clone()
    };
    let generated = match generate(&gen_config) {
        Ok(g) => g,
        Err(e) => {
            outcome.errors.push(format!("generate: {e}"));
            return outcome;
        }
    };
    outcome.empirical = generated.empirical;
    let data = &generated.data;

    for &est in &config.estimators {
        match est {
            Estimator::Em => {
                let em_config = EmConfig { seed, ..config.em.clone() };
                match fit_em(data, &em_config, None).and_then(|fit| {
                    let rates = model_event_rates(&fit.params, data, None)?;
                    Ok((fit, rates))
                }) {
                    Ok((fit, rates)) => {
                        let max_decrease = fit
                            .loglik_trace
                            .windows(2)
                            .map(|w| w[0] - w[1])
                            .fold(f64::NEG_INFINITY, f64::max);
                        outcome.em = Some(EmOutcome {
                            estimate: fit.params.to_flat(),
                            rates,
                            converged: fit.converged,
                            iterations: fit.iterations,
                            boundary_flags: fit.boundary_flags.clone(),
                            se: fit.se.clone(),
                            max_decrease,
                            label_flipped: fit.label_flipped,
                        });
                    }
                    Err(e) => outcome.errors.push(format!("em: {e}")),
                }
            }
            Estimator::Mcmc => {
                let mcmc_config = McmcConfig { seed, ..config.mcmc.clone() };
                match run_chains(data, &mcmc_config).and_then(|r| {
                    let mean = r.posterior_mean();
                    let rates = model_event_rates(&mean, data, None)?;
                    Ok((mean, rates))
                }) {
                    Ok((mean, rates)) => {
                        outcome.mcmc = Some(McmcOutcome {
                            posterior_mean: mean.to_flat(),
                            rates,
                        })
                    }
                    Err(e) => outcome.errors.push(format!("mcmc: {e}")),
                }
            }
            Estimator::Naive => match fit_naive(data) {
                Ok(fit) => {
                    outcome.naive = Some(fit.to_flat());
                }
                Err(e) => outcome.errors.push(format!("naive: {e}")),
            },
        }
    }
    outcome
}

fn moments(names: &[String], truth: &[f64], estimates: &[&[f64]]) -> Vec<ParamStat> {
    let n = estimates.len() as f64;
    names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let (mut sum, mut sq) = (0.0, 0.0);
            for e in estimates {
                let d = e[k] - truth[k];
                sum += d;
                sq += d * d;
            }
            ParamStat {
                name: name.clone(),
                truth: truth[k],
                bias: if estimates.is_empty() { f64::NAN } else { sum / n },
                rmse: if estimates.is_empty() { f64::NAN } else { (sq / n).sqrt() },
            }
        })
        .collect()
}

/// Runs the replication study. Realizations run in parallel; aggregation is in
/// realization order, so the report is reproducible for a fixed master seed.
pub fn replicate(config: &ReplicationConfig) -> Result<ReplicationReport> {
    if config.n_realizations == 0 {
        return Err(Error::Config("n_realizations must be at least 1".into()));
    }
    if config.estimators.is_empty() {
        return Err(Error::Config("no estimators selected".into()));
    }
    config.generation.validate()?;
    config.em.validate()?;
    if config.estimators.contains(&Estimator::Mcmc) {
        config.mcmc.validate()?;
    }

    let seeds = realization_seeds(config.generation.seed, config.n_realizations);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let realizations: Vec<RealizationOutcome> = pool.install(|| {
        seeds
            .par_iter()
            .enumerate()
            .map(|(i, &seed)| run_realization(config, i, seed))
            .collect()
    });

    let truth = &config.generation.truth;
    let truth_flat = truth.to_flat();
    let names = ParamSet::labels(truth.layout(), &default_names());
    let mut estimators = Vec::new();
    for &est in &config.estimators {
        let mut failures = Vec::new();
        let summary = match est {
            Estimator::Em => {
                let mut used: Vec<&EmOutcome> = Vec::new();
                for r in &realizations {
                    match &r.em {
                        Some(o) if o.converged => used.push(o),
                        Some(o) => failures.push(format!("realization {}: not converged after {} iterations", r.index, o.iterations)),
                        None => failures.push(format!("realization {}: {}", r.index, r.errors.join("; "))),
                    }
                }
                let est_slices: Vec<&[f64]> = used.iter().map(|o| o.estimate.as_slice()).collect();
                EstimatorSummary {
                    estimator: est,
                    params: moments(&names, &truth_flat, &est_slices),
                    rates: EventRates::mean(used.iter().map(|o| &o.rates)),
                    n_used: used.len(),
                    failures,
                }
            }
            Estimator::Mcmc => {
                let mut used: Vec<&McmcOutcome> = Vec::new();
                for r in &realizations {
                    match &r.mcmc {
                        Some(o) => used.push(o),
                        None => failures.push(format!("realization {}: {}", r.index, r.errors.join("; "))),
                    }
                }
                let est_slices: Vec<&[f64]> = used.iter().map(|o| o.posterior_mean.as_slice()).collect();
                EstimatorSummary {
                    estimator: est,
                    params: moments(&names, &truth_flat, &est_slices),
                    rates: EventRates::mean(used.iter().map(|o| &o.rates)),
                    n_used: used.len(),
                    failures,
                }
            }
            Estimator::Naive => {
                let naive_names = NaiveFit::labels(truth.layout(), &default_names());
                let naive_values = naive_counterpart(truth);
                let mut used: Vec<&[f64]> = Vec::new();
                for r in &realizations {
                    match &r.naive {
                        Some(v) => used.push(v),
                        None => failures.push(format!("realization {}: {}", r.index, r.errors.join("; "))),
                    }
                }
                EstimatorSummary {
                    estimator: est,
                    params: moments(&naive_names, &naive_values, &used),
                    rates: EventRates::from_array([f64::NAN; 6]),
                    n_used: used.len(),
                    failures,
                }
            }
        };
        estimators.push(summary);
    }

    if estimators.iter().all(|s| s.n_used == 0) {
        let diagnostics = realizations
            .iter()
            .map(|r| format!("realization {} (seed {}): {}", r.index, r.seed, r.errors.join("; ")))
            .collect();
        return Err(Error::HarnessFailed { diagnostics });
    }

    Ok(ReplicationReport {
        n_realizations: config.n_realizations,
        data_rates: EventRates::mean(realizations.iter().map(|r| &r.empirical)),
        estimators,
        realizations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_benchmark_values() {
        let p1 = preset(1).unwrap();
        assert_eq!(p1.truth.beta, vec![1.0, -2.0]);
        assert_eq!(p1.n, 1000);
        let p2 = preset(2).unwrap();
        assert_eq!((p2.n, p2.z1_shape), (10_000, 2.0));
        assert_eq!(p2.truth, p1.truth);
        let p3 = preset(3).unwrap();
        assert_eq!(p3.truth.gamma1, [vec![5.0, 5.0], vec![-5.0, -5.0]]);
        let p4 = preset(4).unwrap();
        assert_eq!(p4.truth.gamma2[0][1], vec![-5.0, -5.0]);
        assert_eq!(p4.truth.gamma2[1][1], vec![-5.0, -5.0]);
        assert_eq!(p4.truth.gamma2[0][0], vec![1.5, 1.0]);
        assert!(matches!(preset(5), Err(Error::UnknownSetting(_))));
        assert!(parse_setting("0").is_err());
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let mut c = preset(1).unwrap();
        c.n = 200;
        c.seed = 9;
        let a = generate(&c).unwrap();
        let b = generate(&c).unwrap();
        assert_eq!(a.y_true, b.y_true);
        assert_eq!(a.data.ystar2(), b.data.ystar2());
        c.seed = 10;
        assert_ne!(generate(&c).unwrap().data.ystar1(), a.data.ystar1());
    }

    #[test]
    fn empirical_rates_by_hand() {
        use Class::{One as A, Two as B};
        let y = [A, A, B, B];
        let y1 = [A, B, B, B];
        let y2 = [B, A, B, A];
        let r = empirical_rates(&y, &y1, &y2);
        assert_eq!(r.p_y1, 0.5);
        assert_eq!(r.stage1_sensitivity, 0.5);
        assert_eq!(r.stage1_specificity, 1.0);
        assert_eq!(r.stage2_sensitivity, 0.0);
        assert_eq!(r.stage2_specificity, 0.5);
    }

    #[test]
    fn estimator_list_parsing() {
        assert_eq!(Estimator::parse_list("em, naive,em").unwrap(), vec![Estimator::Em, Estimator::Naive]);
        assert!(Estimator::parse_list("ols").is_err());
        assert!(Estimator::parse_list("").is_err());
    }
}
