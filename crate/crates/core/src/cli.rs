//! Command-line front end.
//!
//! Settings come from an optional `--config` key=value file, then flags. Every
//! run writes `manifest.conf` to the output directory; passing it back as
//! `--config` reproduces the run.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::disparity::{disparity_report, generate_analog};
use crate::em::fit_em;
use crate::error::{Error, Result};
use crate::io::{dataset_csv, load_csv, mapping_for, write_atomic, LoadedData, RunConfig};
use crate::mcmc::run_chains;
use crate::model::{EventRates, ParamSet};
use crate::naive::{fit_naive, NaiveFit};
use crate::simgen::{generate, parse_setting, preset, replicate, Estimator, ReplicationConfig};

/// Sample size of the subgroup analog when `n` is not given.
pub const ANALOG_DEFAULT_N: usize = 2000;

#[derive(Debug, Parser)]
#[command(name = "multistage", version, about = "Fit and simulate binary outcomes observed through two misclassified stages")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// key=value run configuration; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// 1-4, or `disparity` (simulate only)
    #[arg(long, global = true)]
    pub setting: Option<String>,
    #[arg(long, global = true)]
    pub realizations: Option<usize>,
    /// Comma-separated subset of em,mcmc,naive
    #[arg(long, global = true)]
    pub estimators: Option<String>,
    /// Input CSV for the fit and report commands
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand, PartialEq, Eq)]
pub enum Command {
    /// Generate a dataset
    Simulate,
    /// Fit the misclassification model by EM
    FitEm,
    /// Fit the misclassification model by MCMC
    FitMcmc,
    /// Fit the comparison model that ignores misclassification
    FitNaive,
    /// Monte Carlo bias/rMSE study
    Replicate,
    /// Accuracy and decision rates by group from a fitted model
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::FitEm => "fit-em",
            Command::FitMcmc => "fit-mcmc",
            Command::FitNaive => "fit-naive",
            Command::Replicate => "replicate",
            Command::Report => "report",
        }
    }
}

/// Parses arguments, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Resolves the run configuration: defaults, then `--config`, then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(s) = &cli.setting {
        cfg.setting = s.clone();
    }
    if let Some(r) = cli.realizations {
        cfg.realizations = r;
    }
    if let Some(e) = &cli.estimators {
        cfg.estimators = Estimator::parse_list(e)?;
    }
    if let Some(i) = &cli.input {
        cfg.input = Some(i.clone());
    }
    cfg.em.seed = cfg.seed;
    cfg.mcmc.seed = cfg.seed;
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    let command = cli.command;
    let outcome = match command {
        Command::Simulate => cmd_simulate(&cfg),
        Command::FitEm => cmd_fit_em(&cfg),
        Command::FitMcmc => cmd_fit_mcmc(&cfg),
        Command::FitNaive => cmd_fit_naive(&cfg),
        Command::Replicate => cmd_replicate(&cfg),
        Command::Report => cmd_report(&cfg),
    };
    match &outcome {
        Ok(()) => {
            let _ = std::fs::remove_file(failure_marker(&cfg.out, command));
        }
        Err(e) if e.exit_code() == 2 => {
            let text = format!("command = {}\nerror = {e}\n", command.name());
            let _ = write_atomic(&failure_marker(&cfg.out, command), text.as_bytes());
        }
        Err(_) => {}
    }
    outcome?;
    write_atomic(&cfg.out.join("manifest.conf"), cfg.manifest(command.name()).as_bytes())
}

/// Written next to the outputs when estimation fails, so partial results are not mistaken for a finished run.
pub fn failure_marker(out: &Path, command: Command) -> PathBuf {
    out.join(format!("{}.FAILED", command.name()))
}

fn load(cfg: &RunConfig) -> Result<LoadedData> {
    let input = cfg
        .input
        .as_deref()
        .ok_or_else(|| Error::Config("an input CSV is required (--input or `input =`)".into()))?;
    let loaded = load_csv(input, &cfg.columns)?;
    if loaded.dropped > 0 {
        eprintln!("dropped {} row(s) with missing values", loaded.dropped);
    }
    Ok(loaded)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into())
}

fn rates_csv(rows: &[(&str, EventRates)]) -> String {
    let mut s = String::from("quantity");
    for (name, _) in rows {
        let _ = write!(s, ",{name}");
    }
    s.push('\n');
    for (k, label) in EventRates::LABELS.iter().enumerate() {
        s.push_str(label);
        for (_, r) in rows {
            let _ = write!(s, ",{}", r.to_array()[k]);
        }
        s.push('\n');
    }
    s
}

fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    let (generated, groups, group_column) = if cfg.setting.trim() == "disparity" {
        let (g, labels) = generate_analog(cfg.n.unwrap_or(ANALOG_DEFAULT_N), cfg.seed)?;
        (g, labels, Some("group"))
    } else {
        let mut gen = preset(parse_setting(&cfg.setting)?)?;
        gen.seed = cfg.seed;
        if let Some(n) = cfg.n {
            gen.n = n;
        }
        (generate(&gen)?, Vec::new(), None)
    };
    let y_true: Vec<String> = generated.y_true.iter().map(|c| c.code().to_string()).collect();
    let mut extra = vec![("y_true", y_true)];
    if let Some(name) = group_column {
        extra.push((name, groups));
    }
    let csv = dataset_csv(&generated.data, &extra)?;
    write_atomic(&cfg.out.join("data.csv"), csv.as_bytes())?;

    let mut columns = RunConfig {
        columns: mapping_for(&generated.data, group_column),
        ..RunConfig::default()
    }
    .to_text()
    .lines()
    .filter(|l| l.starts_with("columns."))
    .collect::<Vec<_>>()
    .join("\n");
    columns.push('\n');
    write_atomic(&cfg.out.join("columns.conf"), columns.as_bytes())?;
    write_atomic(
        &cfg.out.join("empirical.csv"),
        rates_csv(&[("data", generated.empirical)]).as_bytes(),
    )?;
    println!(
        "wrote {} subjects to {}",
        generated.data.len(),
        cfg.out.join("data.csv").display()
    );
    Ok(())
}

fn cmd_fit_em(cfg: &RunConfig) -> Result<()> {
    let loaded = load(cfg)?;
    let data = &loaded.data;
    let fit = fit_em(data, &cfg.em, None)?;
    let labels = ParamSet::labels(data.layout(), data.names());
    let mut s = String::from("parameter,estimate,se,se_status,boundary\n");
    for (k, (label, est)) in labels.iter().zip(fit.params.to_flat()).enumerate() {
        let (se, status) = match fit.se[k] {
            crate::hessian::StdErr::Value(v) => (v.to_string(), "ok".to_string()),
            crate::hessian::StdErr::Undefined(issue) => ("NA".to_string(), issue.to_string()),
        };
        let _ = writeln!(s, "{label},{est},{se},{status},{}", fit.boundary_flags[k]);
    }
    write_atomic(&cfg.out.join("params_em.csv"), s.as_bytes())?;

    let r = &fit.label_report;
    let mut meta = String::new();
    let _ = writeln!(meta, "converged = {}", fit.converged);
    let _ = writeln!(meta, "iterations = {}", fit.iterations);
    let _ = writeln!(meta, "loglik = {}", fit.loglik());
    let _ = writeln!(meta, "start = {}", fit.start);
    let _ = writeln!(meta, "label_flipped = {}", fit.label_flipped);
    let _ = writeln!(meta, "label_check_satisfied = {}", r.satisfied);
    let _ = writeln!(meta, "label_check_tie = {}", r.tie);
    let _ = writeln!(meta, "label_stages = {}", r.stages_checked.as_str());
    let _ = writeln!(
        meta,
        "avg_correct = {}",
        r.avg_correct.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
    );
    let _ = writeln!(meta, "n = {}", data.len());
    let _ = writeln!(meta, "dropped_rows = {}", loaded.dropped);
    write_atomic(&cfg.out.join("fit_em_meta.txt"), meta.as_bytes())?;

    let mut trace = String::from("iteration,loglik\n");
    for (i, ll) in fit.loglik_trace.iter().enumerate() {
        let _ = writeln!(trace, "{i},{ll}");
    }
    write_atomic(&cfg.out.join("fit_em_trace.csv"), trace.as_bytes())?;
    println!(
        "EM {} after {} iterations, log-likelihood {:.4}{}",
        if fit.converged { "converged" } else { "stopped without converging" },
        fit.iterations,
        fit.loglik(),
        if fit.label_flipped { " (labels flipped)" } else { "" }
    );
    Ok(())
}

fn cmd_fit_mcmc(cfg: &RunConfig) -> Result<()> {
    let loaded = load(cfg)?;
    let data = &loaded.data;
    let result = run_chains(data, &cfg.mcmc)?;
    let labels = ParamSet::labels(data.layout(), data.names());
    let mut s = String::from("parameter,mean,sd,lower_2.5,upper_97.5,rhat\n");
    for (k, label) in labels.iter().enumerate() {
        let p = &result.summaries[k];
        let _ = writeln!(s, "{label},{},{},{},{},{}", p.mean, p.sd, p.lower, p.upper, result.rhat[k]);
    }
    write_atomic(&cfg.out.join("params_mcmc.csv"), s.as_bytes())?;

    let mut meta = String::from("chain,relabelled");
    for b in crate::model::Block::ALL {
        let _ = write!(meta, ",accept_{}", b.label());
    }
    meta.push('\n');
    for (c, rates) in result.acceptance_rates.iter().enumerate() {
        let _ = write!(meta, "{c},{}", result.flip_counts[c]);
        for r in rates {
            let _ = write!(meta, ",{r}");
        }
        meta.push('\n');
    }
    write_atomic(&cfg.out.join("fit_mcmc_meta.csv"), meta.as_bytes())?;
    let worst = result.rhat.iter().copied().fold(f64::NAN, f64::max);
    println!(
        "{} chains, {} kept draws each, max split-Rhat {:.3}",
        result.draws.len(),
        result.draws.first().map_or(0, Vec::len),
        worst
    );
    Ok(())
}

fn cmd_fit_naive(cfg: &RunConfig) -> Result<()> {
    let loaded = load(cfg)?;
    let data = &loaded.data;
    let fit = fit_naive(data)?;
    let labels = NaiveFit::labels(data.layout(), data.names());
    let mut s = String::from("parameter,estimate,se,flagged\n");
    let mut k = 0;
    for (_, coefs) in fit.blocks() {
        for (est, se) in coefs.coef.iter().zip(&coefs.se) {
            let _ = writeln!(s, "{},{est},{},{}", labels[k], fmt_opt(*se), coefs.flagged);
            k += 1;
        }
    }
    write_atomic(&cfg.out.join("params_naive.csv"), s.as_bytes())?;
    println!("naive fit: {} coefficients", fit.n_params());
    Ok(())
}

fn cmd_replicate(cfg: &RunConfig) -> Result<()> {
    let mut generation = preset(parse_setting(&cfg.setting)?)?;
    generation.seed = cfg.seed;
    if let Some(n) = cfg.n {
        generation.n = n;
    }
    let rep = ReplicationConfig {
        generation,
        n_realizations: cfg.realizations,
        estimators: cfg.estimators.clone(),
        parallelism: cfg.parallelism,
        em: cfg.em.clone(),
        mcmc: cfg.mcmc.clone(),
    };
    let report = replicate(&rep)?;
    write_atomic(&cfg.out.join("replicate.csv"), report.to_csv().as_bytes())?;
    let table = report.to_table();
    write_atomic(&cfg.out.join("replicate.txt"), table.as_bytes())?;

    let mut per = String::from("realization,seed,estimator,converged,estimates\n");
    for r in &report.realizations {
        if let Some(em) = &r.em {
            let v: Vec<String> = em.estimate.iter().map(f64::to_string).collect();
            let _ = writeln!(per, "{},{},em,{},{}", r.index, r.seed, em.converged, v.join(" "));
        }
        if let Some(m) = &r.mcmc {
            let v: Vec<String> = m.posterior_mean.iter().map(f64::to_string).collect();
            let _ = writeln!(per, "{},{},mcmc,true,{}", r.index, r.seed, v.join(" "));
        }
        if let Some(n) = &r.naive {
            let v: Vec<String> = n.iter().map(f64::to_string).collect();
            let _ = writeln!(per, "{},{},naive,true,{}", r.index, r.seed, v.join(" "));
        }
        for e in &r.errors {
            let _ = writeln!(per, "{},{},error,false,\"{}\"", r.index, r.seed, e.replace('"', "'"));
        }
    }
    write_atomic(&cfg.out.join("replicate_realizations.csv"), per.as_bytes())?;
    print!("{table}");
    Ok(())
}

fn cmd_report(cfg: &RunConfig) -> Result<()> {
    let loaded = load(cfg)?;
    let data = &loaded.data;
    let params = match cfg.report_estimator {
        Estimator::Mcmc => run_chains(data, &cfg.mcmc)?.posterior_mean(),
        _ => fit_em(data, &cfg.em, None)?.params,
    };
    if loaded.groups.is_empty() {
        eprintln!("no group column configured; reporting overall rates only");
    }
    let report = disparity_report(&params, data, &loaded.groups, None)?;
    write_atomic(&cfg.out.join("report.csv"), report.to_csv().as_bytes())?;
    let table = report.to_table();
    write_atomic(&cfg.out.join("report.txt"), table.as_bytes())?;
    print!("{table}");
    Ok(())
}
