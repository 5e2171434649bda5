//! Domain types and the probability kernel shared by every estimator.
//!
//! The model has a latent binary outcome `Y` and two observed proxies that are
//! recorded in sequence. `Y` follows a logistic regression on `X`; the first
//! proxy follows a logistic regression on `Z1` whose coefficients depend on the
//! true class; the second proxy follows a logistic regression on `Z2` whose
//! coefficients depend on both the first proxy and the true class.
//!
//! Category 2 is the reference level everywhere, so only the category-1 logits
//! are stored.

use crate::error::{Error, Result};

/// Linear predictors are clamped to this magnitude before exponentiation.
pub const ETA_CLAMP: f64 = 700.0;

/// A binary category. `One` is the event ("detain", "fail"), `Two` the reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Class {
    One,
    Two,
}

impl Class {
    pub const BOTH: [Class; 2] = [Class::One, Class::Two];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Class::One => 0,
            Class::Two => 1,
        }
    }

    #[inline]
    pub fn code(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_code(code: u8) -> Option<Class> {
        match code {
            1 => Some(Class::One),
            2 => Some(Class::Two),
            _ => None,
        }
    }

    #[inline]
    pub fn other(self) -> Class {
        match self {
            Class::One => Class::Two,
            Class::Two => Class::One,
        }
    }
}

/// Row-major covariate matrix whose first column is the intercept.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    nrows: usize,
    ncols: usize,
    values: Vec<f64>,
}

impl Design {
    /// Builds a design from covariate columns, prepending a column of ones.
    pub fn with_intercept(nrows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        if let Some(bad) = columns.iter().position(|c| c.len() != nrows) {
            return Err(Error::Contract(format!(
                "covariate column {bad} has {} rows, expected {nrows}",
                columns[bad].len()
            )));
        }
        let ncols = columns.len() + 1;
        let mut values = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            values.push(1.0);
            values.extend(columns.iter().map(|c| c[i]));
        }
        Ok(Design {
            nrows,
            ncols,
            values,
        })
    }

    /// Builds a design from full rows (intercept included).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(1, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Contract("ragged design rows".into()));
        }
        Ok(Design {
            nrows: rows.len(),
            ncols,
            values: rows.concat(),
        })
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn get(&self, i: usize, c: usize) -> f64 {
        self.values[i * self.ncols + c]
    }

    /// Column `c`, copied out.
    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, c)).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Design {
        let mut values = Vec::with_capacity(rows.len() * self.ncols);
        for &i in rows {
            values.extend_from_slice(self.row(i));
        }
        Design {
            nrows: rows.len(),
            ncols: self.ncols,
            values,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.ncols == 0 {
            return Err(Error::Contract(format!("{name} has no columns")));
        }
        for i in 0..self.nrows {
            let row = self.row(i);
            if row[0] != 1.0 {
                return Err(Error::Contract(format!(
                    "{name} row {i}: intercept column is {} (expected 1)",
                    row[0]
                )));
            }
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Contract(format!("{name} row {i} column {c} is not finite")));
            }
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn clamp_eta(eta: f64) -> f64 {
    eta.clamp(-ETA_CLAMP, ETA_CLAMP)
}

/// `(P(category 1), P(category 2))` for a (clamped) logit. The smaller of the
/// two is computed directly and the other as its complement.
#[inline]
pub fn logistic_pair(eta: f64) -> [f64; 2] {
    let eta = clamp_eta(eta);
    if eta >= 0.0 {
        let p2 = 1.0 / (1.0 + eta.exp());
        [1.0 - p2, p2]
    } else {
        let p1 = 1.0 / (1.0 + (-eta).exp());
        [p1, 1.0 - p1]
    }
}

/// `log(1 + exp(t))` without overflow.
#[inline]
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Log-probability of `class` under a binary logit with category-1 linear predictor `eta`.
#[inline]
pub fn log_prob(eta: f64, class: Class) -> f64 {
    let eta = clamp_eta(eta);
    match class {
        Class::One => -softplus(-eta),
        Class::Two => -softplus(eta),
    }
}

/// Observed covariates and the two recorded proxies for `N` subjects.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedDataset {
    x: Design,
    z1: Design,
    z2: Design,
    ystar1: Vec<Class>,
    ystar2: Vec<Class>,
    names: CovariateNames,
}

/// Column names for the non-intercept covariates of each design.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CovariateNames {
    pub x: Vec<String>,
    pub z1: Vec<String>,
    pub z2: Vec<String>,
}

impl CovariateNames {
    fn defaults(layout: ParamLayout) -> Self {
        let gen = |prefix: &str, width: usize| -> Vec<String> {
            match width {
                0 | 1 => Vec::new(),
                2 => vec![prefix.to_string()],
                w => (1..w).map(|c| format!("{prefix}_{c}")).collect(),
            }
        };
        CovariateNames {
            x: gen("x", layout.x),
            z1: gen("z1", layout.z1),
            z2: gen("z2", layout.z2),
        }
    }
}

impl ObservedDataset {
    pub fn new(x: Design, z1: Design, z2: Design, ystar1: Vec<Class>, ystar2: Vec<Class>) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::Contract("dataset must have at least one subject".into()));
        }
        for (name, rows) in [
            ("z1", z1.nrows()),
            ("z2", z2.nrows()),
            ("ystar1", ystar1.len()),
            ("ystar2", ystar2.len()),
        ] {
            if rows != n {
                return Err(Error::Contract(format!("{name} has {rows} rows, x has {n}")));
            }
        }
        x.validate("x")?;
        z1.validate("z1")?;
        z2.validate("z2")?;
        let layout = ParamLayout {
            x: x.ncols(),
            z1: z1.ncols(),
            z2: z2.ncols(),
        };
        Ok(ObservedDataset {
            x,
            z1,
            z2,
            ystar1,
            ystar2,
            names: CovariateNames::defaults(layout),
        })
    }

    /// Replaces the covariate names used for parameter labels.
    pub fn with_names(mut self, names: CovariateNames) -> Result<Self> {
        let layout = self.layout();
        if names.x.len() + 1 != layout.x || names.z1.len() + 1 != layout.z1 || names.z2.len() + 1 != layout.z2 {
            return Err(Error::Contract("covariate name count does not match design widths".into()));
        }
        self.names = names;
        Ok(self)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.ystar1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ystar1.is_empty()
    }

    pub fn x(&self) -> &Design {
        &self.x
    }

    pub fn z1(&self) -> &Design {
        &self.z1
    }

    pub fn z2(&self) -> &Design {
        &self.z2
    }

    pub fn ystar1(&self) -> &[Class] {
        &self.ystar1
    }

    pub fn ystar2(&self) -> &[Class] {
        &self.ystar2
    }

    pub fn names(&self) -> &CovariateNames {
        &self.names
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout {
            x: self.x.ncols(),
            z1: self.z1.ncols(),
            z2: self.z2.ncols(),
        }
    }

    /// The subjects at `rows`, in that order.
    pub fn subset(&self, rows: &[usize]) -> Result<ObservedDataset> {
        if rows.is_empty() {
            return Err(Error::Contract("empty subset".into()));
        }
        Ok(ObservedDataset {
            x: self.x.select_rows(rows),
            z1: self.z1.select_rows(rows),
            z2: self.z2.select_rows(rows),
            ystar1: rows.iter().map(|&i| self.ystar1[i]).collect(),
            ystar2: rows.iter().map(|&i| self.ystar2[i]).collect(),
            names: self.names.clone(),
        })
    }
}

/// Widths (intercept included) of the three designs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamLayout {
    pub x: usize,
    pub z1: usize,
    pub z2: usize,
}

impl ParamLayout {
    pub fn n_params(&self) -> usize {
        self.x + 2 * self.z1 + 4 * self.z2
    }

    /// Flat index ranges of the seven coefficient blocks, in [`Block::ALL`] order.
    pub fn block_ranges(&self) -> [std::ops::Range<usize>; 7] {
        let mut start = 0;
        Block::ALL.map(|b| {
            let w = self.width(b);
            let r = start..start + w;
            start += w;
            r
        })
    }

    pub fn width(&self, block: Block) -> usize {
        match block {
            Block::Beta => self.x,
            Block::Stage1 { .. } => self.z1,
            Block::Stage2 { .. } => self.z2,
        }
    }
}

/// One coefficient block of a [`ParamSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Block {
    Beta,
    /// First-stage coefficients for true class `j`.
    Stage1 { j: Class },
    /// Second-stage coefficients given first-stage outcome `k1` and true class `j`.
    Stage2 { k1: Class, j: Class },
}

impl Block {
    /// Flat storage order: β, γ1 (j=1, 2), γ2 (k1,j) = (1,1), (2,1), (1,2), (2,2).
    pub const ALL: [Block; 7] = [
        Block::Beta,
        Block::Stage1 { j: Class::One },
        Block::Stage1 { j: Class::Two },
        Block::Stage2 { k1: Class::One, j: Class::One },
        Block::Stage2 { k1: Class::Two, j: Class::One },
        Block::Stage2 { k1: Class::One, j: Class::Two },
        Block::Stage2 { k1: Class::Two, j: Class::Two },
    ];

    pub fn position(self) -> usize {
        Block::ALL.iter().position(|b| *b == self).unwrap()
    }

    /// Short label following the subscript convention γ(1)_{1 j}, γ(2)_{1 k1 j}.
    pub fn label(self) -> String {
        match self {
            Block::Beta => "beta".into(),
            Block::Stage1 { j } => format!("gamma1_1{}", j.code()),
            Block::Stage2 { k1, j } => format!("gamma2_1{}{}", k1.code(), j.code()),
        }
    }
}

/// Category-1 logit coefficients of all three regressions.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    pub beta: Vec<f64>,
    /// Indexed by true class `j`.
    pub gamma1: [Vec<f64>; 2],
    /// Indexed by `[k1][j]`.
    pub gamma2: [[Vec<f64>; 2]; 2],
}

impl ParamSet {
    pub fn zeros(layout: ParamLayout) -> Self {
        ParamSet {
            beta: vec![0.0; layout.x],
            gamma1: [vec![0.0; layout.z1], vec![0.0; layout.z1]],
            gamma2: [
                [vec![0.0; layout.z2], vec![0.0; layout.z2]],
                [vec![0.0; layout.z2], vec![0.0; layout.z2]],
            ],
        }
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout {
            x: self.beta.len(),
            z1: self.gamma1[0].len(),
            z2: self.gamma2[0][0].len(),
        }
    }

    pub fn block(&self, block: Block) -> &[f64] {
        match block {
            Block::Beta => &self.beta,
            Block::Stage1 { j } => &self.gamma1[j.index()],
            Block::Stage2 { k1, j } => &self.gamma2[k1.index()][j.index()],
        }
    }

    pub fn block_mut(&mut self, block: Block) -> &mut Vec<f64> {
        match block {
            Block::Beta => &mut self.beta,
            Block::Stage1 { j } => &mut self.gamma1[j.index()],
            Block::Stage2 { k1, j } => &mut self.gamma2[k1.index()][j.index()],
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        Block::ALL.iter().flat_map(|&b| self.block(b).iter().copied()).collect()
    }

    pub fn from_flat(layout: ParamLayout, flat: &[f64]) -> Result<Self> {
        if flat.len() != layout.n_params() {
            return Err(Error::Contract(format!(
                "flat parameter vector has {} entries, layout needs {}",
                flat.len(),
                layout.n_params()
            )));
        }
        let mut p = ParamSet::zeros(layout);
        for (block, range) in Block::ALL.iter().zip(layout.block_ranges()) {
            p.block_mut(*block).copy_from_slice(&flat[range]);
        }
        Ok(p)
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }

    /// Checks that the coefficient widths match the dataset's designs.
    pub fn check_layout(&self, layout: ParamLayout) -> Result<()> {
        let ok = self.layout() == layout
            && self.gamma1.iter().all(|g| g.len() == layout.z1)
            && self.gamma2.iter().flatten().all(|g| g.len() == layout.z2);
        if ok {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "parameter widths {:?} do not match data widths {:?}",
                self.layout(),
                layout
            )))
        }
    }

    /// Labels such as `beta_0`, `gamma1_11_z1` or `gamma2_121_z2`, in flat order.
    pub fn labels(layout: ParamLayout, names: &CovariateNames) -> Vec<String> {
        let mut out = Vec::with_capacity(layout.n_params());
        for block in Block::ALL {
            let cov = match block {
                Block::Beta => &names.x,
                Block::Stage1 { .. } => &names.z1,
                Block::Stage2 { .. } => &names.z2,
            };
            let prefix = block.label();
            for c in 0..layout.width(block) {
                let suffix = if c == 0 {
                    "0".to_string()
                } else {
                    cov.get(c - 1).cloned().unwrap_or_else(|| c.to_string())
                };
                out.push(format!("{prefix}_{suffix}"));
            }
        }
        out
    }
}

/// `π_i`, `π*(1)_i` and `π*(2)_i` for every subject.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseProbabilities {
    /// `[i][j]`
    pub pi: Vec<[f64; 2]>,
    /// `[i][k1][j]`
    pub pistar1: Vec<[[f64; 2]; 2]>,
    /// `[i][k2][k1][j]`
    pub pistar2: Vec<[[[f64; 2]; 2]; 2]>,
}

impl ResponseProbabilities {
    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    #[inline]
    pub fn true_class(&self, i: usize, j: Class) -> f64 {
        self.pi[i][j.index()]
    }

    #[inline]
    pub fn stage1(&self, i: usize, k1: Class, j: Class) -> f64 {
        self.pistar1[i][k1.index()][j.index()]
    }

    #[inline]
    pub fn stage2(&self, i: usize, k2: Class, k1: Class, j: Class) -> f64 {
        self.pistar2[i][k2.index()][k1.index()][j.index()]
    }
}

/// `(π_{i1}, π_{i2})` for one covariate row.
pub fn true_response_probability(beta: &[f64], x_row: &[f64]) -> Result<[f64; 2]> {
    if beta.len() != x_row.len() {
        return Err(Error::Contract(format!(
            "beta has {} coefficients, covariate row has {}",
            beta.len(),
            x_row.len()
        )));
    }
    if let Some(c) = beta.iter().chain(x_row).position(|v| !v.is_finite()) {
        return Err(Error::Contract(format!("non-finite input at position {c}")));
    }
    Ok(logistic_pair(dot(beta, x_row)))
}

/// Fills every response and conditional classification probability.
pub fn stage_response_probabilities(params: &ParamSet, data: &ObservedDataset) -> Result<ResponseProbabilities> {
    params.check_layout(data.layout())?;
    let n = data.len();
    let mut pi = Vec::with_capacity(n);
    let mut pistar1 = Vec::with_capacity(n);
    let mut pistar2 = Vec::with_capacity(n);
    for i in 0..n {
        pi.push(logistic_pair(dot(&params.beta, data.x.row(i))));

        let mut s1 = [[0.0; 2]; 2];
        for j in Class::BOTH {
            let [p1, p2] = logistic_pair(dot(&params.gamma1[j.index()], data.z1.row(i)));
            s1[0][j.index()] = p1;
            s1[1][j.index()] = p2;
        }
        pistar1.push(s1);

        let mut s2 = [[[0.0; 2]; 2]; 2];
        for k1 in Class::BOTH {
            for j in Class::BOTH {
                let [p1, p2] = logistic_pair(dot(&params.gamma2[k1.index()][j.index()], data.z2.row(i)));
                s2[0][k1.index()][j.index()] = p1;
                s2[1][k1.index()][j.index()] = p2;
            }
        }
        pistar2.push(s2);
    }
    Ok(ResponseProbabilities { pi, pistar1, pistar2 })
}

/// `P(Y*(1) = k1, Y*(2) = k2)` for subject `i`, marginalizing the true class.
pub fn observed_pattern_probability(probs: &ResponseProbabilities, i: usize, k1: Class, k2: Class) -> f64 {
    Class::BOTH
        .iter()
        .map(|&j| probs.stage2(i, k2, k1, j) * probs.stage1(i, k1, j) * probs.true_class(i, j))
        .sum()
}

/// `log π_ij + log π*(1)_{i k1(i) j} + log π*(2)_{i k2(i) k1(i) j}` for `j = 1, 2`,
/// evaluated at subject `i`'s observed proxies. Layouts are assumed checked.
#[inline]
pub fn subject_log_joint(params: &ParamSet, data: &ObservedDataset, i: usize) -> [f64; 2] {
    let k1 = data.ystar1[i];
    let k2 = data.ystar2[i];
    let eta_y = dot(&params.beta, data.x.row(i));
    let z1 = data.z1.row(i);
    let z2 = data.z2.row(i);
    Class::BOTH.map(|j| {
        log_prob(eta_y, j)
            + log_prob(dot(&params.gamma1[j.index()], z1), k1)
            + log_prob(dot(&params.gamma2[k1.index()][j.index()], z2), k2)
    })
}

#[inline]
pub(crate) fn log_sum_exp2(a: [f64; 2]) -> f64 {
    let m = a[0].max(a[1]);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a[0] - m).exp() + (a[1] - m).exp()).ln()
}

/// Log-likelihood of the observed proxy pairs, marginalizing the latent class.
pub fn joint_observed_loglik(params: &ParamSet, data: &ObservedDataset) -> Result<f64> {
    params.check_layout(data.layout())?;
    let mut total = 0.0;
    for i in 0..data.len() {
        let li = log_sum_exp2(subject_log_joint(params, data, i));
        if !li.is_finite() {
            return Err(Error::NumericOverflow { subject: i });
        }
        total += li;
    }
    Ok(total)
}

/// Log-likelihood when the true classes `y` are known.
pub fn complete_loglik(params: &ParamSet, data: &ObservedDataset, y: &[Class]) -> Result<f64> {
    params.check_layout(data.layout())?;
    if y.len() != data.len() {
        return Err(Error::Contract(format!("y has {} entries, data has {}", y.len(), data.len())));
    }
    let mut total = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let li = subject_log_joint(params, data, i)[yi.index()];
        if !li.is_finite() {
            return Err(Error::NumericOverflow { subject: i });
        }
        total += li;
    }
    Ok(total)
}

/// Number of linear predictors (over all blocks and subjects) that hit [`ETA_CLAMP`].
pub fn clamp_events(params: &ParamSet, data: &ObservedDataset) -> usize {
    let mut count = 0;
    let mut check = |coef: &[f64], row: &[f64]| {
        if dot(coef, row).abs() > ETA_CLAMP {
            count += 1;
        }
    };
    for i in 0..data.len() {
        check(&params.beta, data.x.row(i));
        for g in &params.gamma1 {
            check(g, data.z1.row(i));
        }
        for g in params.gamma2.iter().flatten() {
            check(g, data.z2.row(i));
        }
    }
    count
}

/// The six event probabilities reported per setting: `P(Y=1)`, `P(Y=2)`, and the
/// stage-wise sensitivity/specificity conditional on matching earlier stages.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct EventRates {
    pub p_y1: f64,
    pub p_y2: f64,
    pub stage1_sensitivity: f64,
    pub stage1_specificity: f64,
    pub stage2_sensitivity: f64,
    pub stage2_specificity: f64,
}

impl EventRates {
    pub const LABELS: [&'static str; 6] = [
        "P(Y=1)",
        "P(Y=2)",
        "P(Y*1=1|Y=1)",
        "P(Y*1=2|Y=2)",
        "P(Y*2=1|Y*1=1,Y=1)",
        "P(Y*2=2|Y*1=2,Y=2)",
    ];

    pub fn to_array(self) -> [f64; 6] {
        [
            self.p_y1,
            self.p_y2,
            self.stage1_sensitivity,
            self.stage1_specificity,
            self.stage2_sensitivity,
            self.stage2_specificity,
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        EventRates {
            p_y1: a[0],
            p_y2: a[1],
            stage1_sensitivity: a[2],
            stage1_specificity: a[3],
            stage2_sensitivity: a[4],
            stage2_specificity: a[5],
        }
    }

    /// Componentwise mean; NaN entries are skipped.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a EventRates>) -> EventRates {
        let mut sum = [0.0; 6];
        let mut count = [0usize; 6];
        for r in items {
            for (k, v) in r.to_array().into_iter().enumerate() {
                if v.is_finite() {
                    sum[k] += v;
                    count[k] += 1;
                }
            }
        }
        EventRates::from_array(std::array::from_fn(|k| {
            if count[k] == 0 {
                f64::NAN
            } else {
                sum[k] / count[k] as f64
            }
        }))
    }
}

/// Model-implied event probabilities averaged over the subjects at `rows`
/// (all subjects when `rows` is `None`).
pub fn model_event_rates(params: &ParamSet, data: &ObservedDataset, rows: Option<&[usize]>) -> Result<EventRates> {
    params.check_layout(data.layout())?;
    let all: Vec<usize>;
    let rows = match rows {
        Some(r) => r,
        None => {
            all = (0..data.len()).collect();
            &all
        }
    };
    if rows.is_empty() {
        return Err(Error::Contract("no subjects to average over".into()));
    }
    let mut acc = [0.0; 6];
    for &i in rows {
        let [py1, py2] = logistic_pair(dot(&params.beta, data.x.row(i)));
        let z1 = data.z1.row(i);
        let z2 = data.z2.row(i);
        acc[0] += py1;
        acc[1] += py2;
        acc[2] += logistic_pair(dot(&params.gamma1[0], z1))[0];
        acc[3] += logistic_pair(dot(&params.gamma1[1], z1))[1];
        acc[4] += logistic_pair(dot(&params.gamma2[0][0], z2))[0];
        acc[5] += logistic_pair(dot(&params.gamma2[1][1], z2))[1];
    }
    let n = rows.len() as f64;
    Ok(EventRates::from_array(acc.map(|a| a / n)))
}
