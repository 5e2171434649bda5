//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::fs;
use std::process::Command;
use std::sync::Mutex;
use std::time::Instant;

use common::*;
use multistage::disparity::{disparity_report, generate_analog};
use multistage::em::{block_problem, estep, fit_em, mstep, EmConfig, MONOTONE_SLACK};
use multistage::hessian::StdErr;
use multistage::io::{dataset_csv, load_csv, mapping_for};
use multistage::labels::{average_correct_classification, correct_labels, flip, flip_flat, passes_check, LabelStages};
use multistage::logistic::NewtonOptions;
use multistage::mcmc::{run_chains, run_chains_from, McmcConfig};
use multistage::model::{Block, Class, Design, ObservedDataset, ParamLayout, ParamSet};
use multistage::simgen::{generate, preset, realization_seeds, replicate, Estimator, GenerationConfig, ReplicationConfig, ReplicationReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, StandardNormal};

const MASTER_SEED: u64 = 2024;

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn record(results: &mut Vec<Outcome>, id: &'static str, pass: bool, detail: String) {
    println!("criterion {id:<3} {}  {detail}", if pass { "PASS" } else { "FAIL" });
    results.push(Outcome { id, pass, detail });
}

static WARNINGS: Mutex<Vec<String>> = Mutex::new(Vec::new());

struct CaptureWarnings;

impl log::Log for CaptureWarnings {
    fn enabled(&self, m: &log::Metadata) -> bool {
        m.level() <= log::Level::Warn
    }

    fn log(&self, r: &log::Record) {
        if self.enabled(r.metadata()) {
            WARNINGS.lock().unwrap().push(r.args().to_string());
        }
    }

    fn flush(&self) {}
}

fn batch(setting: u8, realizations: usize, estimators: Vec<Estimator>) -> ReplicationReport {
    let mut generation = preset(setting).unwrap();
    generation.seed = MASTER_SEED;
    let t = Instant::now();
    let report = replicate(&ReplicationConfig::new(generation, realizations, estimators)).unwrap();
    println!("  (setting {setting}: {realizations} realizations in {:.1?})", t.elapsed());
    report
}

fn param<'a>(report: &'a ReplicationReport, est: Estimator, name: &str) -> &'a multistage::simgen::ParamStat {
    report.summary(est).unwrap().params.iter().find(|p| p.name == name).unwrap()
}

fn monotone_violations(report: &ReplicationReport) -> (usize, usize) {
    let mut fits = 0;
    let mut bad = 0;
    for r in &report.realizations {
        if let Some(em) = &r.em {
            fits += 1;
            if em.max_decrease > MONOTONE_SLACK {
                bad += 1;
            }
        }
        if r.errors.iter().any(|e| e.contains("decreased")) {
            fits += 1;
            bad += 1;
        }
    }
    (fits, bad)
}

fn criterion_1_2_5(results: &mut Vec<Outcome>, s1: &ReplicationReport) {
    let em = s1.summary(Estimator::Em).unwrap();
    let bx = param(s1, Estimator::Em, "beta_x").bias;
    let b0 = param(s1, Estimator::Em, "beta_0").bias;
    record(
        results,
        "1",
        (bx - -0.101).abs() <= 0.06 && (b0 - 0.032).abs() <= 0.05,
        format!("EM bias beta_x {bx:.4} (target -0.101 +/- 0.06), beta_0 {b0:.4} (0.032 +/- 0.05), {} fits used", em.n_used),
    );

    let targets = [0.648, 0.852, 0.822, 0.903, 0.853];
    let r = em.rates.to_array();
    let got = [r[0], r[2], r[3], r[4], r[5]];
    let ok = got.iter().zip(&targets).all(|(g, t)| (g - t).abs() <= 0.02);
    let shown: Vec<String> = got.iter().zip(&targets).map(|(g, t)| format!("{g:.3}/{t}")).collect();
    record(results, "2", ok, format!("P(Y=1), stage-1 sens/spec, stage-2 sens/spec (estimate/target): {}", shown.join(" ")));

    let naive = param(s1, Estimator::Naive, "beta_x");
    let emx = param(s1, Estimator::Em, "beta_x");
    record(
        results,
        "5",
        naive.rmse > emx.rmse,
        format!("beta_x rMSE naive {:.4} vs EM {:.4} (naive bias {:.3})", naive.rmse, emx.rmse, naive.bias),
    );
}

fn block_indices(block: Block) -> std::ops::Range<usize> {
    LAYOUT.block_ranges()[block.position()].clone()
}

fn untrusted(em: &multistage::simgen::EmOutcome, k: usize) -> bool {
    em.boundary_flags[k] || matches!(em.se[k], StdErr::Undefined(_))
}

fn criterion_3(results: &mut Vec<Outcome>, s3: &ReplicationReport) {
    let em = s3.summary(Estimator::Em).unwrap();
    let (sens, spec) = (em.rates.stage1_sensitivity, em.rates.stage1_specificity);
    let rates_ok = sens >= 0.97 && spec >= 0.97 && (sens - 0.997).abs() <= 0.02 && (spec - 0.977).abs() <= 0.02;
    let stage1: Vec<usize> = block_indices(Block::Stage1 { j: Class::One })
        .chain(block_indices(Block::Stage1 { j: Class::Two }))
        .collect();
    let fits: Vec<_> = s3.realizations.iter().filter_map(|r| r.em.as_ref()).filter(|e| e.converged).collect();
    let all_untrusted = fits.iter().filter(|e| stage1.iter().all(|&k| untrusted(e, k))).count();
    let any_flag = fits.iter().filter(|e| stage1.iter().any(|&k| e.boundary_flags[k])).count();
    let coef_share = fits.iter().map(|e| stage1.iter().filter(|&&k| untrusted(e, k)).count()).sum::<usize>() as f64 / (4 * fits.len()) as f64;
    record(
        results,
        "3",
        rates_ok && all_untrusted == fits.len(),
        format!(
            "stage-1 sens {sens:.3} spec {spec:.3} (>= 0.97, within 0.02 of 0.997/0.977: {}); all stage-1 gamma flagged or SE undefined in {all_untrusted}/{} fits, some flagged in {any_flag}, coefficient share {coef_share:.2}",
            if rates_ok { "yes" } else { "no" },
            fits.len()
        ),
    );
}

fn criterion_4(results: &mut Vec<Outcome>, s4: &ReplicationReport) {
    let em = s4.summary(Estimator::Em).unwrap();
    let spec = em.rates.stage2_specificity;
    let block = block_indices(Block::Stage2 { k1: Class::Two, j: Class::Two });
    let fits: Vec<_> = s4.realizations.iter().filter_map(|r| r.em.as_ref()).filter(|e| e.converged).collect();
    let flagged = fits.iter().filter(|e| block.clone().all(|k| e.boundary_flags[k])).count();
    record(
        results,
        "4",
        spec >= 0.98 && flagged == fits.len(),
        format!(
            "P(Y*2=2 | Y*1=2, Y=2) {spec:.4} (>= 0.98); gamma2_122 block flagged in {flagged}/{} fits",
            fits.len()
        ),
    );
}

fn criterion_6a(results: &mut Vec<Outcome>, batches: &[&ReplicationReport]) {
    let (mut fits, mut bad) = (0, 0);
    for b in batches {
        let (f, v) = monotone_violations(b);
        fits += f;
        bad += v;
    }
    record(results, "6a", bad == 0 && fits > 0, format!("{bad} of {fits} EM fits decreased the log-likelihood by more than 1e-8"));
}

fn random_instance(rng: &mut ChaCha8Rng) -> (ParamSet, ObservedDataset) {
    let n = rng.random_range(1..=8);
    let gamma = Gamma::new(1.0, 1.0).unwrap();
    let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let z1: Vec<f64> = (0..n).map(|_| rng.sample(gamma)).collect();
    let z2: Vec<f64> = (0..n).map(|_| rng.sample(gamma)).collect();
    let y1: Vec<Class> = (0..n).map(|_| class(rng.random())).collect();
    let y2: Vec<Class> = (0..n).map(|_| class(rng.random())).collect();
    let data = ObservedDataset::new(
        Design::with_intercept(n, &[x]).unwrap(),
        Design::with_intercept(n, &[z1]).unwrap(),
        Design::with_intercept(n, &[z2]).unwrap(),
        y1,
        y2,
    )
    .unwrap();
    let flat: Vec<f64> = (0..LAYOUT.n_params()).map(|_| rng.random_range(-4.0..4.0)).collect();
    (ParamSet::from_flat(LAYOUT, &flat).unwrap(), data)
}

fn criterion_6b(results: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (p, data) = random_instance(&mut rng);
        let w = estep(&p, &data).unwrap();
        for i in 0..data.len() {
            let o = bayes_weights(&p, &data, i);
            worst = worst.max((w.w[i][0] - o[0]).abs()).max((w.w[i][1] - o[1]).abs());
        }
    }
    record(results, "6b", worst <= 1e-12, format!("max |E-step - Bayes enumeration| over 1000 instances: {worst:.2e}"));
}

// Five-point central difference.
fn fd_derivative(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-3 * x.abs().max(1.0);
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

fn criterion_6c(results: &mut Vec<Outcome>) {
    let mut worst = 0.0f64;
    let (mut blocks, mut skipped) = (0, 0);
    for seed in realization_seeds(MASTER_SEED, 10) {
        let config = GenerationConfig { seed, ..preset(1).unwrap() };
        let data = generate(&config).unwrap().data;
        let fit = fit_em(&data, &EmConfig::default(), None).unwrap();
        let w = estep(&fit.params, &data).unwrap();
        let m = mstep(&w, &data, &fit.params, NewtonOptions::default()).unwrap();
        for (b, block) in Block::ALL.into_iter().enumerate() {
            if m.fits[b].is_boundary() {
                skipped += 1;
                continue;
            }
            blocks += 1;
            let problem = block_problem(block, &w, &data);
            let coef = m.params.block(block).to_vec();
            for k in 0..coef.len() {
                let g = fd_derivative(
                    |v| {
                        let mut c = coef.clone();
                        c[k] = v;
                        problem.objective(&c)
                    },
                    coef[k],
                );
                worst = worst.max(g.abs());
            }
        }
    }
    record(
        results,
        "6c",
        worst < 1e-6,
        format!("max |finite-difference M-step gradient| {worst:.2e} over {blocks} non-boundary blocks ({skipped} boundary blocks skipped)"),
    );
}

fn criterion_7(results: &mut Vec<Outcome>) {
    let mut config = preset(1).unwrap();
    config.n = 500;
    config.seed = MASTER_SEED;
    let data = generate(&config).unwrap().data;
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED);
    let (mut tested, mut restored, mut idempotent) = (0, 0, 0);
    while tested < 1000 {
        let flat: Vec<f64> = (0..LAYOUT.n_params()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let p = ParamSet::from_flat(LAYOUT, &flat).unwrap();
        if !passes_check(&average_correct_classification(&p, &data).unwrap(), LabelStages::Both) {
            continue;
        }
        tested += 1;
        let (back, _) = correct_labels(&flip(&p), &data, LabelStages::Both).unwrap();
        restored += (back == p) as usize;
        let (again, report) = correct_labels(&back, &data, LabelStages::Both).unwrap();
        idempotent += (again == back && !report.flipped) as usize;
    }

    WARNINGS.lock().unwrap().clear();
    let tie = ParamSet::zeros(LAYOUT);
    let (out, report) = correct_labels(&tie, &data, LabelStages::Both).unwrap();
    let warned = WARNINGS.lock().unwrap().iter().any(|w| w.contains("0.50"));
    let tie_ok = report.tie && report.flipped && out == flip(&tie) && warned;
    record(
        results,
        "7",
        restored == 1000 && idempotent == 1000 && tie_ok,
        format!("flip-then-correct restored {restored}/1000 exactly, idempotent {idempotent}/1000, 0.50 tie flipped with warning: {tie_ok}"),
    );
}

/// Accuracy rises with the covariates, so well-classified subjects anchor the
/// latent class; `Z` has Gamma shape 2.
fn strong_signal_config(seed: u64) -> GenerationConfig {
    GenerationConfig {
        n: 1000,
        truth: ParamSet {
            beta: vec![0.0, -1.5],
            gamma1: [vec![0.0, 2.0], vec![0.0, -2.0]],
            gamma2: [[vec![0.0, 2.0], vec![0.0, -1.0]], [vec![0.0, 1.0], vec![0.0, -2.0]]],
        },
        z1_shape: 2.0,
        z2_shape: 2.0,
        seed,
    }
}

fn short_chains(seed: u64) -> McmcConfig {
    McmcConfig {
        n_chains: 4,
        n_iter: 2000,
        burn_in: 500,
        seed,
        ..McmcConfig::default()
    }
}

fn share_opposite_to_median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    values.iter().filter(|v| v.signum() != median.signum()).count() as f64 / values.len() as f64
}

fn criterion_8(results: &mut Vec<Outcome>) {
    let config = strong_signal_config(MASTER_SEED);
    let truth = config.truth.clone();
    let data = generate(&config).unwrap().data;
    let bx = 1;

    let inits = [truth.clone(), flip(&truth), truth.clone(), flip(&truth)];
    let two_mode = run_chains_from(&data, &short_chains(MASTER_SEED), &inits).unwrap();
    let layout: ParamLayout = two_mode.layout;
    let raw: Vec<f64> = two_mode
        .draws
        .iter()
        .zip(&two_mode.flip_counts)
        .flat_map(|(chain, &flipped)| chain.iter().map(move |d| if flipped { flip_flat(layout, d)[bx] } else { d[bx] }))
        .collect();
    let before = share_opposite_to_median(&raw);
    let after = share_opposite_to_median(&two_mode.pooled(bx));
    let unimodal = before > 0.25 && after < 0.01;
    record(
        results,
        "8a",
        unimodal,
        format!("two-mode start: beta_x draws on the minority sign {before:.3} before correction, {after:.4} after (chains relabelled {:?})", two_mode.flip_counts),
    );

    let t = Instant::now();
    let fit = run_chains(&data, &short_chains(MASTER_SEED)).unwrap();
    let mean = fit.posterior_mean().to_flat();
    let names = ParamSet::labels(layout, data.names());
    let errors: Vec<(String, f64)> = names.iter().cloned().zip(mean.iter().zip(truth.to_flat()).map(|(m, t)| m - t)).collect();
    let worst = errors.iter().map(|(_, e)| e.abs()).fold(0.0, f64::max);
    let misses: Vec<String> = errors.iter().filter(|(_, e)| e.abs() > 0.5).map(|(n, e)| format!("{n} {e:+.2}")).collect();
    let beta_worst = errors[..2].iter().map(|(_, e)| e.abs()).fold(0.0, f64::max);
    record(
        results,
        "8b",
        worst <= 0.5,
        format!(
            "posterior means vs generating values (4 x 2000 iterations, {:.1?}): max |error| {worst:.2}, beta max {beta_worst:.2}; beyond 0.5: [{}]",
            t.elapsed(),
            misses.join(", ")
        ),
    );

    let again = run_chains(&data, &short_chains(MASTER_SEED)).unwrap();
    let other = run_chains(&data, &short_chains(MASTER_SEED + 1)).unwrap();
    record(
        results,
        "8c",
        again.draws == fit.draws && other.draws != fit.draws,
        format!("same seed bit-identical: {}; different seed differs: {}", again.draws == fit.draws, other.draws != fit.draws),
    );
}

fn criterion_9(results: &mut Vec<Outcome>) {
    let dir = tempfile::tempdir().unwrap();
    let config = GenerationConfig { seed: MASTER_SEED, ..preset(1).unwrap() };
    let generated = generate(&config).unwrap();
    let path = dir.path().join("data.csv");
    fs::write(&path, dataset_csv(&generated.data, &[]).unwrap()).unwrap();
    let loaded = load_csv(&path, &mapping_for(&generated.data, None)).unwrap();
    let em = EmConfig::default();
    let memory = fit_em(&generated.data, &em, None).unwrap();
    let disk = fit_em(&loaded.data, &em, None).unwrap();
    let same_fit = loaded.data == generated.data
        && memory.params.to_flat().iter().map(|v| v.to_bits()).eq(disk.params.to_flat().iter().map(|v| v.to_bits()))
        && memory.loglik_trace == disk.loglik_trace;

    let bin = env!("CARGO_BIN_EXE_multistage");
    let run = |args: &[&str]| Command::new(bin).args(args).env("RUST_LOG", "error").status().unwrap().success();
    let p = |d: &std::path::Path| d.to_str().unwrap().to_string();
    let (sim, first, second) = (dir.path().join("sim"), dir.path().join("first"), dir.path().join("second"));
    let seed = MASTER_SEED.to_string();
    let mut ok = run(&["simulate", "--seed", &seed, "--out", &p(&sim)]);
    let data = p(&sim.join("data.csv"));
    ok &= run(&["fit-em", "--seed", &seed, "--input", &data, "--out", &p(&first)]);
    ok &= run(&["fit-naive", "--input", &data, "--out", &p(&first)]);
    ok &= run(&["fit-em", "--config", &p(&first.join("manifest.conf")), "--out", &p(&second)]);
    let files = ["params_em.csv", "fit_em_meta.txt", "fit_em_trace.csv"];
    let identical = ok && files.iter().all(|f| fs::read(first.join(f)).ok() == fs::read(second.join(f)).ok());
    record(
        results,
        "9",
        same_fit && identical,
        format!("CSV round-trip fit bit-exact: {same_fit}; manifest rerun reproduced {} bit-exactly: {identical}", files.join(", ")),
    );
}

fn criterion_10(results: &mut Vec<Outcome>) {
    let t = Instant::now();
    let seeds = realization_seeds(MASTER_SEED, 100);
    let (mut both, mut sens, mut wrongful, mut failed) = (0, 0, 0, 0);
    for &seed in &seeds {
        let (generated, groups) = generate_analog(2000, seed).unwrap();
        let Ok(fit) = fit_em(&generated.data, &EmConfig::default(), None) else {
            failed += 1;
            continue;
        };
        let report = disparity_report(&fit.params, &generated.data, &groups, None).unwrap();
        let (g0, g1) = (report.group("0").unwrap(), report.group("1").unwrap());
        let s = g1.rates.stage1_sensitivity > g0.rates.stage1_sensitivity;
        let w = g1.decisions.wrongful_detention > g0.decisions.wrongful_detention;
        sens += s as usize;
        wrongful += w as usize;
        both += (s && w) as usize;
    }
    record(
        results,
        "10",
        both >= 95,
        format!(
            "both orderings on {both}/100 analog seeds (sensitivity {sens}, wrongful detention {wrongful}, failed fits {failed}; {:.1?})",
            t.elapsed()
        ),
    );
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    log::set_logger(&CaptureWarnings).unwrap();
    log::set_max_level(log::LevelFilter::Warn);

    let t = Instant::now();
    let mut results = Vec::new();
    let s1 = batch(1, 100, vec![Estimator::Em, Estimator::Naive]);
    criterion_1_2_5(&mut results, &s1);
    let s3 = batch(3, 50, vec![Estimator::Em]);
    criterion_3(&mut results, &s3);
    let s4 = batch(4, 50, vec![Estimator::Em]);
    criterion_4(&mut results, &s4);
    criterion_6a(&mut results, &[&s1, &s3, &s4]);
    criterion_6b(&mut results);
    criterion_6c(&mut results);
    criterion_7(&mut results);
    criterion_8(&mut results);
    criterion_9(&mut results);
    criterion_10(&mut results);

    results.sort_by_key(|r| (r.id.trim_end_matches(char::is_alphabetic).parse::<u32>().unwrap(), r.id));
    let failed: Vec<&Outcome> = results.iter().filter(|r| !r.pass).collect();
    println!("\nacceptance summary ({:.1?}):", t.elapsed());
    for r in &results {
        println!("  {:<3} {}", r.id, if r.pass { "PASS" } else { "FAIL" });
    }
    if !failed.is_empty() {
        for r in &failed {
            eprintln!("criterion {} failed: {}", r.id, r.detail);
        }
        std::process::exit(1);
    }
}
