use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite log-likelihood contribution at subject {subject}")]
    NumericOverflow { subject: usize },

    #[error("E-step normalizer is zero for subject {subject}")]
    ZeroDenominator { subject: usize },

    /// The observed log-likelihood went down between EM iterations, which an
    /// exact or generalized M-step cannot do.
    #[error("log-likelihood decreased at EM iteration {iteration}: {previous} -> {current}")]
    LikelihoodDecrease {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("estimation failed for all {} start(s): {}", reasons.len(), reasons.join("; "))]
    EstimationFailed {
        reasons: Vec<String>,
        traces: Vec<Vec<f64>>,
    },

    #[error("MH step size collapsed: chain {chain}, block {block} rejected every proposal in an adaptation window")]
    StepSizeCollapse { chain: usize, block: usize },

    #[error("no subjects with first-stage outcome {category}")]
    StratumEmpty { category: u8 },

    #[error("unknown simulation setting `{0}`")]
    UnknownSetting(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at data row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("every realization failed: {}", diagnostics.join("; "))]
    HarnessFailed { diagnostics: Vec<String> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnknownSetting(_) | Error::Contract(_) => 1,
            Error::Io(_) | Error::Csv(_) | Error::Parse { .. } => 3,
            _ => 2,
        }
    }
}
