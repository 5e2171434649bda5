//! CSV datasets, key=value run configuration, manifests and atomic output files.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a dataset
//! written and read back is bit-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::em::EmConfig;
use crate::error::{Error, Result};
use crate::mcmc::{McmcConfig, Prior};
use crate::model::{Class, CovariateNames, Design, ObservedDataset};
use crate::simgen::Estimator;

/// How outcome columns are coded in the file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutcomeCoding {
    /// `1/2` if every value is 1 or 2, otherwise `0/1`.
    #[default]
    Auto,
    OneTwo,
    /// `1` is category 1, `0` is category 2.
    ZeroOne,
}

impl OutcomeCoding {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeCoding::Auto => "auto",
            OutcomeCoding::OneTwo => "12",
            OutcomeCoding::ZeroOne => "01",
        }
    }
}

impl FromStr for OutcomeCoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(OutcomeCoding::Auto),
            "12" | "1/2" => Ok(OutcomeCoding::OneTwo),
            "01" | "0/1" => Ok(OutcomeCoding::ZeroOne),
            other => Err(Error::Config(format!("unknown outcome coding `{other}` (auto, 12, 01)"))),
        }
    }
}

/// Which CSV columns play which role. Intercepts are added on load.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnMapping {
    pub x: Vec<String>,
    pub z1: Vec<String>,
    pub z2: Vec<String>,
    pub ystar1: String,
    pub ystar2: String,
    pub group: Option<String>,
    pub coding: OutcomeCoding,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            x: vec!["x".into()],
            z1: vec!["z1".into()],
            z2: vec!["z2".into()],
            ystar1: "ystar1".into(),
            ystar2: "ystar2".into(),
            group: None,
            coding: OutcomeCoding::Auto,
        }
    }
}

impl ColumnMapping {
    /// Outcome columns must differ from each other and from every covariate;
    /// a covariate may appear in more than one block.
    pub fn validate(&self) -> Result<()> {
        if self.ystar1 == self.ystar2 {
            return Err(Error::Config("the two outcome columns must differ".into()));
        }
        for y in [&self.ystar1, &self.ystar2] {
            if self.x.iter().chain(&self.z1).chain(&self.z2).any(|c| c == y) {
                return Err(Error::Config(format!("outcome column `{y}` is also used as a covariate")));
            }
            if self.group.as_ref() == Some(y) {
                return Err(Error::Config(format!("outcome column `{y}` is also the group column")));
            }
        }
        for block in [&self.x, &self.z1, &self.z2] {
            for (a, name) in block.iter().enumerate() {
                if block[..a].contains(name) {
                    return Err(Error::Config(format!("column `{name}` repeated within a block")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct LoadedData {
    pub data: ObservedDataset,
    /// One label per kept row; empty without a group column.
    pub groups: Vec<String>,
    /// Rows dropped for a missing mapped value.
    pub dropped: usize,
    pub coding: OutcomeCoding,
}

fn is_missing(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan") || t == "."
}

fn decode(v: f64, coding: OutcomeCoding) -> Option<Class> {
    match (coding, v) {
        (OutcomeCoding::OneTwo, 1.0) | (OutcomeCoding::ZeroOne, 1.0) => Some(Class::One),
        (OutcomeCoding::OneTwo, 2.0) | (OutcomeCoding::ZeroOne, 0.0) => Some(Class::Two),
        _ => None,
    }
}

pub fn load_csv(path: &Path, mapping: &ColumnMapping) -> Result<LoadedData> {
    mapping.validate()?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("column `{name}` not found in {}", path.display())))
    };
    let idx = |names: &[String]| names.iter().map(|n| find(n)).collect::<Result<Vec<_>>>();
    let (xi, z1i, z2i) = (idx(&mapping.x)?, idx(&mapping.z1)?, idx(&mapping.z2)?);
    let (y1i, y2i) = (find(&mapping.ystar1)?, find(&mapping.ystar2)?);
    let gi = mapping.group.as_deref().map(find).transpose()?;

    let mut cols: [Vec<Vec<f64>>; 3] = [vec![Vec::new(); xi.len()], vec![Vec::new(); z1i.len()], vec![Vec::new(); z2i.len()]];
    let mut raw_y: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut file_rows = Vec::new();
    let mut groups = Vec::new();
    let mut dropped = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        // data rows are numbered from 1, after the header
        let row = r + 1;
        let field = |c: usize| record.get(c).unwrap_or("");
        let mut needed: Vec<usize> = xi.iter().chain(&z1i).chain(&z2i).copied().collect();
        needed.extend([y1i, y2i]);
        needed.extend(gi);
        if needed.iter().any(|&c| is_missing(field(c))) {
            dropped += 1;
            continue;
        }
        let num = |c: usize| -> Result<f64> {
            let s = field(c).trim();
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse {
                    row,
                    message: format!("column `{}`: `{s}` is not a finite number", &headers[c]),
                }),
            }
        };
        for (block, ids) in [&xi, &z1i, &z2i].into_iter().enumerate() {
            for (k, &c) in ids.iter().enumerate() {
                cols[block][k].push(num(c)?);
            }
        }
        for (slot, c) in [y1i, y2i].into_iter().enumerate() {
            let v = num(c)?;
            if ![0.0, 1.0, 2.0].contains(&v) {
                return Err(Error::Parse {
                    row,
                    message: format!("outcome column `{}` has value {v}; expected two codes (1/2 or 0/1)", &headers[c]),
                });
            }
            raw_y[slot].push(v);
        }
        if let Some(c) = gi {
            groups.push(field(c).trim().to_string());
        }
        file_rows.push(row);
    }

    let coding = match mapping.coding {
        OutcomeCoding::Auto => {
            let has_zero = raw_y.iter().flatten().any(|&v| v == 0.0);
            let has_two = raw_y.iter().flatten().any(|&v| v == 2.0);
            if has_zero && has_two {
                return Err(Error::Parse {
                    row: 0,
                    message: "outcome columns mix 0 and 2 codes".into(),
                });
            }
            if has_zero {
                log::info!("outcomes coded 0/1; recoding 1 -> category 1 and 0 -> category 2");
                OutcomeCoding::ZeroOne
            } else {
                OutcomeCoding::OneTwo
            }
        }
        fixed => fixed,
    };
    let mut ys: [Vec<Class>; 2] = [Vec::new(), Vec::new()];
    for (slot, values) in raw_y.iter().enumerate() {
        for (r, &v) in values.iter().enumerate() {
            let class = decode(v, coding).ok_or_else(|| Error::Parse {
                row: file_rows[r],
                message: format!("outcome value {v} does not fit the {} coding", coding.as_str()),
            })?;
            ys[slot].push(class);
        }
    }
    if dropped > 0 {
        log::info!("dropped {dropped} row(s) with missing values");
    }
    let n = ys[0].len();
    if n == 0 {
        return Err(Error::Parse {
            row: 0,
            message: "no complete data rows".into(),
        });
    }
    let [cx, cz1, cz2] = cols;
    let [y1, y2] = ys;
    let data = ObservedDataset::new(
        Design::with_intercept(n, &cx)?,
        Design::with_intercept(n, &cz1)?,
        Design::with_intercept(n, &cz2)?,
        y1,
        y2,
    )?
    .with_names(CovariateNames {
        x: mapping.x.clone(),
        z1: mapping.z1.clone(),
        z2: mapping.z2.clone(),
    })?;
    Ok(LoadedData {
        data,
        groups,
        dropped,
        coding,
    })
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Serializes a dataset with 1/2 outcome codes. Covariate columns shared by
/// several blocks are written once. `extra` columns are appended verbatim.
pub fn dataset_csv(data: &ObservedDataset, extra: &[(&str, Vec<String>)]) -> Result<String> {
    let names = data.names();
    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    for (design, block_names) in [(data.x(), &names.x), (data.z1(), &names.z1), (data.z2(), &names.z2)] {
        for (k, name) in block_names.iter().enumerate() {
            let values = design.column(k + 1);
            match columns.iter().find(|(n, _)| n == name) {
                Some((_, existing)) if existing == &values => {}
                Some(_) => return Err(Error::Contract(format!("covariate name `{name}` used for different values"))),
                None => columns.push((name.clone(), values)),
            }
        }
    }
    let mut header: Vec<String> = columns.iter().map(|(n, _)| n.clone()).collect();
    header.extend(["ystar1".to_string(), "ystar2".to_string()]);
    for (name, values) in extra {
        if values.len() != data.len() {
            return Err(Error::Contract(format!("extra column `{name}` has the wrong length")));
        }
        if header.iter().any(|h| h == name) {
            let clash = columns.iter().find(|(n, _)| n == name);
            let same = clash.is_some_and(|(_, v)| v.iter().map(f64::to_string).eq(values.iter().cloned()));
            if !same {
                return Err(Error::Contract(format!("column `{name}` written twice with different values")));
            }
            continue;
        }
        header.push(name.to_string());
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for i in 0..data.len() {
        let mut rec: Vec<String> = columns.iter().map(|(_, v)| v[i].to_string()).collect();
        rec.push(data.ystar1()[i].code().to_string());
        rec.push(data.ystar2()[i].code().to_string());
        for (name, values) in extra {
            if !columns.iter().any(|(n, _)| n == name) {
                rec.push(values[i].clone());
            }
        }
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// The mapping that reads back a file produced by [`dataset_csv`].
pub fn mapping_for(data: &ObservedDataset, group: Option<&str>) -> ColumnMapping {
    let names = data.names();
    ColumnMapping {
        x: names.x.clone(),
        z1: names.z1.clone(),
        z2: names.z2.clone(),
        ystar1: "ystar1".into(),
        ystar2: "ystar2".into(),
        group: group.map(String::from),
        coding: OutcomeCoding::OneTwo,
    }
}

/// Everything a CLI run needs; read from a key=value file and overridden by flags.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    /// `1`..`4`, or `disparity` for the subgroup analog (simulate only).
    pub setting: String,
    /// Overrides the setting's sample size.
    pub n: Option<usize>,
    pub realizations: usize,
    pub estimators: Vec<Estimator>,
    pub parallelism: usize,
    pub columns: ColumnMapping,
    pub em: EmConfig,
    pub mcmc: McmcConfig,
    /// Estimator behind the `report` command (em or mcmc).
    pub report_estimator: Estimator,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            input: None,
            out: PathBuf::from("out"),
            setting: "1".into(),
            n: None,
            realizations: 100,
            estimators: vec![Estimator::Em, Estimator::Naive],
            parallelism: 0,
            columns: ColumnMapping::default(),
            em: EmConfig::default(),
            mcmc: McmcConfig::default(),
            report_estimator: Estimator::Em,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn list(value: &str) -> Vec<String> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "seed" => self.seed = parse_num(key, v)?,
            "input" => self.input = (!v.is_empty()).then(|| PathBuf::from(v)),
            "out" => self.out = PathBuf::from(v),
            "setting" | "simulate.setting" | "replicate.setting" => self.setting = v.to_string(),
            "n" | "simulate.n" => self.n = if v.is_empty() { None } else { Some(parse_num(key, v)?) },
            "realizations" | "replicate.realizations" => self.realizations = parse_num(key, v)?,
            "estimators" | "replicate.estimators" => self.estimators = Estimator::parse_list(v)?,
            "parallelism" | "replicate.parallelism" => self.parallelism = parse_num(key, v)?,
            "report.estimator" => {
                self.report_estimator = match Estimator::parse_list(v)?.as_slice() {
                    [e @ (Estimator::Em | Estimator::Mcmc)] => *e,
                    _ => return Err(Error::Config("report.estimator must be em or mcmc".into())),
                }
            }
            "columns.x" => self.columns.x = list(v),
            "columns.z1" => self.columns.z1 = list(v),
            "columns.z2" => self.columns.z2 = list(v),
            "columns.ystar1" => self.columns.ystar1 = v.to_string(),
            "columns.ystar2" => self.columns.ystar2 = v.to_string(),
            "columns.group" => self.columns.group = (!v.is_empty()).then(|| v.to_string()),
            "columns.coding" => self.columns.coding = v.parse()?,
            "em.max_iter" => self.em.max_iter = parse_num(key, v)?,
            "em.tol" => self.em.tol = parse_num(key, v)?,
            "em.inner_max_iter" => self.em.inner_max_iter = parse_num(key, v)?,
            "em.inner_tol" => self.em.inner_tol = parse_num(key, v)?,
            "em.n_starts" => self.em.n_starts = parse_num(key, v)?,
            "em.label_stages" => self.em.label_stages = v.parse()?,
            "mcmc.n_chains" => self.mcmc.n_chains = parse_num(key, v)?,
            "mcmc.n_iter" => self.mcmc.n_iter = parse_num(key, v)?,
            "mcmc.burn_in" => self.mcmc.burn_in = parse_num(key, v)?,
            "mcmc.thin" => self.mcmc.thin = parse_num(key, v)?,
            "mcmc.prior" => self.mcmc.prior = v.parse::<Prior>()?,
            "mcmc.target_accept" => self.mcmc.target_accept = parse_num(key, v)?,
            "mcmc.label_stages" => self.mcmc.label_stages = v.parse()?,
            // manifest bookkeeping
            "version" | "command" => {}
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines onto the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            config.set(key, value)?;
        }
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.columns.validate()?;
        self.em.validate()?;
        self.mcmc.validate()?;
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        if self.n == Some(0) {
            return Err(Error::Config("n must be at least 1".into()));
        }
        Ok(())
    }

    /// The configuration as key=value lines that [`RunConfig::parse`] reads back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = BTreeMap::new();
        kv.insert("seed", self.seed.to_string());
        kv.insert("input", self.input.as_ref().map(|p| p.display().to_string()).unwrap_or_default());
        kv.insert("out", self.out.display().to_string());
        kv.insert("setting", self.setting.clone());
        kv.insert("n", self.n.map(|n| n.to_string()).unwrap_or_default());
        kv.insert("realizations", self.realizations.to_string());
        kv.insert(
            "estimators",
            self.estimators.iter().map(|e| e.as_str()).collect::<Vec<_>>().join(","),
        );
        kv.insert("parallelism", self.parallelism.to_string());
        kv.insert("report.estimator", self.report_estimator.as_str().to_string());
        kv.insert("columns.x", self.columns.x.join(","));
        kv.insert("columns.z1", self.columns.z1.join(","));
        kv.insert("columns.z2", self.columns.z2.join(","));
        kv.insert("columns.ystar1", self.columns.ystar1.clone());
        kv.insert("columns.ystar2", self.columns.ystar2.clone());
        kv.insert("columns.group", self.columns.group.clone().unwrap_or_default());
        kv.insert("columns.coding", self.columns.coding.as_str().to_string());
        kv.insert("em.max_iter", self.em.max_iter.to_string());
        kv.insert("em.tol", self.em.tol.to_string());
        kv.insert("em.inner_max_iter", self.em.inner_max_iter.to_string());
        kv.insert("em.inner_tol", self.em.inner_tol.to_string());
        kv.insert("em.n_starts", self.em.n_starts.to_string());
        kv.insert("em.label_stages", self.em.label_stages.as_str().to_string());
        kv.insert("mcmc.n_chains", self.mcmc.n_chains.to_string());
        kv.insert("mcmc.n_iter", self.mcmc.n_iter.to_string());
        kv.insert("mcmc.burn_in", self.mcmc.burn_in.to_string());
        kv.insert("mcmc.thin", self.mcmc.thin.to_string());
        kv.insert("mcmc.prior", self.mcmc.prior.to_string());
        kv.insert("mcmc.target_accept", self.mcmc.target_accept.to_string());
        kv.insert("mcmc.label_stages", self.mcmc.label_stages.as_str().to_string());
        for (k, v) in kv {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// A manifest: the full configuration plus command and version lines.
    pub fn manifest(&self, command: &str) -> String {
        format!(
            "command = {command}\nversion = {}\n{}",
            env!("CARGO_PKG_VERSION"),
            self.to_text()
        )
    }
}
