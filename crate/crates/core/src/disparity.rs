//! Classification accuracy and decision rates by subgroup, computed from a
//! fitted model, plus a synthetic analog of the pretrial application.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Poisson};

use crate::error::{Error, Result};
use crate::model::{model_event_rates, stage_response_probabilities, Class, CovariateNames, Design, EventRates, ObservedDataset, ParamSet};
use crate::simgen::{simulate_outcomes, GeneratedDataset};

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionRates {
    /// Model-implied `P(Y*(2)=1 | Y=1)`, summed over the first-stage outcome.
    pub appropriate_detention: f64,
    /// Model-implied `P(Y*(2)=1 | Y=2)`, summed over the first-stage outcome.
    pub wrongful_detention: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupReport {
    pub group: String,
    pub n: usize,
    pub rates: EventRates,
    pub decisions: DecisionRates,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisparityReport {
    pub overall: EventRates,
    pub overall_decisions: DecisionRates,
    pub by_group: Vec<GroupReport>,
    /// Requested group levels with no subjects.
    pub omitted: Vec<String>,
}

/// Averages the collapsed detention rates over `rows`.
pub fn decision_rates(params: &ParamSet, data: &ObservedDataset, rows: &[usize]) -> Result<DecisionRates> {
    if rows.is_empty() {
        return Err(Error::Contract("no subjects to average over".into()));
    }
    let probs = stage_response_probabilities(params, data)?;
    let (mut appropriate, mut wrongful) = (0.0, 0.0);
    for &i in rows {
        for k1 in Class::BOTH {
            appropriate += probs.stage2(i, Class::One, k1, Class::One) * probs.stage1(i, k1, Class::One);
            wrongful += probs.stage2(i, Class::One, k1, Class::Two) * probs.stage1(i, k1, Class::Two);
        }
    }
    let n = rows.len() as f64;
    Ok(DecisionRates {
        appropriate_detention: appropriate / n,
        wrongful_detention: wrongful / n,
    })
}

/// Overall and per-group report. `groups` holds one label per subject (may be
/// empty for no breakdown); `levels` fixes the reported groups and their order,
/// otherwise the distinct labels are used in sorted order.
pub fn disparity_report(params: &ParamSet, data: &ObservedDataset, groups: &[String], levels: Option<&[String]>) -> Result<DisparityReport> {
    if !groups.is_empty() && groups.len() != data.len() {
        return Err(Error::Contract(format!("{} group labels for {} subjects", groups.len(), data.len())));
    }
    let all: Vec<usize> = (0..data.len()).collect();
    let overall = model_event_rates(params, data, None)?;
    let overall_decisions = decision_rates(params, data, &all)?;

    let levels: Vec<String> = match levels {
        Some(l) => l.to_vec(),
        None => groups.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect(),
    };
    let mut by_group = Vec::new();
    let mut omitted = Vec::new();
    for level in levels {
        let rows: Vec<usize> = all.iter().copied().filter(|&i| groups.get(i) == Some(&level)).collect();
        if rows.is_empty() {
            log::warn!("group `{level}` has no subjects; omitted from the report");
            omitted.push(level);
            continue;
        }
        by_group.push(GroupReport {
            rates: model_event_rates(params, data, Some(&rows))?,
            decisions: decision_rates(params, data, &rows)?,
            n: rows.len(),
            group: level,
        });
    }
    Ok(DisparityReport {
        overall,
        overall_decisions,
        by_group,
        omitted,
    })
}

impl DisparityReport {
    pub fn group(&self, label: &str) -> Option<&GroupReport> {
        self.by_group.iter().find(|g| g.group == label)
    }

    fn rows(&self) -> Vec<(String, usize, [f64; 8])> {
        let pack = |r: &EventRates, d: &DecisionRates| {
            let a = r.to_array();
            [a[0], a[1], a[2], a[3], a[4], a[5], d.appropriate_detention, d.wrongful_detention]
        };
        let n: usize = self.by_group.iter().map(|g| g.n).sum();
        let mut rows = vec![("overall".to_string(), n, pack(&self.overall, &self.overall_decisions))];
        for g in &self.by_group {
            rows.push((g.group.clone(), g.n, pack(&g.rates, &g.decisions)));
        }
        rows
    }

    const COLUMNS: [&'static str; 8] = [
        "p_y1",
        "p_y2",
        "stage1_sensitivity",
        "stage1_specificity",
        "stage2_sensitivity",
        "stage2_specificity",
        "appropriate_detention",
        "wrongful_detention",
    ];

    pub fn to_csv(&self) -> String {
        let mut s = format!("group,n,{}\n", Self::COLUMNS.join(","));
        for (group, n, vals) in self.rows() {
            let vals: Vec<String> = vals.iter().map(f64::to_string).collect();
            let _ = writeln!(s, "{group},{n},{}", vals.join(","));
        }
        s
    }

    pub fn to_table(&self) -> String {
        let rows = self.rows();
        let mut s = format!("{:<24}", "quantity");
        for (group, _, _) in &rows {
            let _ = write!(s, " {:>10}", group);
        }
        s.push('\n');
        for (k, col) in Self::COLUMNS.iter().enumerate() {
            let _ = write!(s, "{col:<24}");
            for (_, _, vals) in &rows {
                let _ = write!(s, " {:>10.3}", vals[k]);
            }
            s.push('\n');
        }
        for g in &self.omitted {
            let _ = writeln!(s, "omitted (no subjects): {g}");
        }
        s
    }
}

/// Coefficients with the shape of the fitted pretrial model: four risk factors
/// in `X`, and a single group indicator in both `Z(1)` and `Z(2)`.
pub fn analog_truth() -> ParamSet {
    ParamSet {
        beta: vec![-3.512, 1.224, 0.732, 1.968, 0.280],
        gamma1: [vec![-0.029, 1.843], vec![-20.27, 15.341]],
        gamma2: [
            [vec![1.576, 0.327], vec![-6.492, 9.822]],
            [vec![0.892, 15.645], vec![-0.418, 0.459]],
        ],
    }
}

/// Share of subjects with group indicator 1 in the analog.
pub const ANALOG_GROUP_SHARE: f64 = 0.4;

/// Draws a synthetic analog dataset of `n` subjects. Group labels are the
/// indicator values `"0"` and `"1"`.
pub fn generate_analog(n: usize, seed: u64) -> Result<(GeneratedDataset, Vec<String>)> {
    if n == 0 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fta = Poisson::new(0.6).expect("positive rate");
    let violent = Poisson::new(1.0).expect("positive rate");
    let unemployed = Bernoulli::new(0.45).expect("valid probability");
    let drug = Bernoulli::new(0.25).expect("valid probability");
    let group = Bernoulli::new(ANALOG_GROUP_SHARE).expect("valid probability");
    let mut cols = vec![Vec::with_capacity(n); 4];
    let mut g = Vec::with_capacity(n);
    let as_f = |b: bool| if b { 1.0 } else { 0.0 };
    for _ in 0..n {
        cols[0].push(fta.sample(&mut rng));
        cols[1].push(as_f(unemployed.sample(&mut rng)));
        cols[2].push(as_f(drug.sample(&mut rng)));
        cols[3].push(violent.sample(&mut rng));
        g.push(as_f(group.sample(&mut rng)));
    }
    let x = Design::with_intercept(n, &cols)?;
    let z = Design::with_intercept(n, &[g.clone()])?;
    let mut out = simulate_outcomes(&analog_truth(), x, z.clone(), z, &mut rng)?;
    out.data = out.data.with_names(CovariateNames {
        x: ["fta", "unemployed", "drug", "violent"].map(String::from).to_vec(),
        z1: vec!["group".into()],
        z2: vec!["group".into()],
    })?;
    let labels = g.iter().map(|&v| if v == 1.0 { "1".to_string() } else { "0".to_string() }).collect();
    Ok((out, labels))
}
