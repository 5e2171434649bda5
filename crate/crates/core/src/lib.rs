//! Regression with a binary outcome that is only observed through two
//! sequential, dependent, misclassified proxies.
//!
//! The crate fits the latent-class model by EM ([`em`]) or random-walk
//! Metropolis ([`mcmc`]), resolves label switching ([`labels`]), provides the
//! naive comparison fit ([`naive`]), simulates data and runs replication
//! studies ([`simgen`]), and summarizes fitted models by subgroup
//! ([`disparity`]). [`io`] and [`cli`] hold the file formats and the
//! command-line front end.

pub mod cli;
pub mod disparity;
pub mod em;
pub mod error;
pub mod hessian;
pub mod io;
pub mod labels;
pub mod logistic;
pub mod mcmc;
pub mod model;
pub mod naive;
pub mod simgen;

pub use em::{fit_em, EmConfig, FitResult, PosteriorWeights};
pub use error::{Error, Result};
pub use labels::{correct_labels, LabelCheckReport, LabelStages};
pub use model::{Class, Design, EventRates, ObservedDataset, ParamLayout, ParamSet, ResponseProbabilities};
