//! Label-switching correction.
//!
//! The observed-data likelihood is invariant under swapping the two latent
//! classes: β changes sign and every γ block trades places with its partner of
//! the other true class (the first-stage conditioning category `k1` is an
//! observed quantity and stays put). The correction assumes that correct
//! classification is more likely than not, on average over subjects, in every
//! checked stage; if the fitted parameters violate that, the mirrored set is
//! returned instead.

use log::warn;

use crate::error::{Error, Result};
use crate::model::{dot, logistic_pair, Block, ObservedDataset, ParamLayout, ParamSet};

/// Which stages enter the correct-classification check.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LabelStages {
    Stage1,
    Stage2,
    #[default]
    Both,
}

impl LabelStages {
    pub fn includes_stage1(self) -> bool {
        matches!(self, LabelStages::Stage1 | LabelStages::Both)
    }

    pub fn includes_stage2(self) -> bool {
        matches!(self, LabelStages::Stage2 | LabelStages::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LabelStages::Stage1 => "stage1",
            LabelStages::Stage2 => "stage2",
            LabelStages::Both => "both",
        }
    }
}

impl std::str::FromStr for LabelStages {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "stage1" | "1" => Ok(LabelStages::Stage1),
            "stage2" | "2" => Ok(LabelStages::Stage2),
            "both" | "all" => Ok(LabelStages::Both),
            other => Err(Error::Config(format!("unknown label stages `{other}` (stage1, stage2, both)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelCheckReport {
    /// Population averages of `π*(1)_{11}`, `π*(1)_{22}`, `π*(2)_{111}`, `π*(2)_{222}`
    /// at the parameters that were checked (before any flip).
    pub avg_correct: [f64; 4],
    pub flipped: bool,
    pub stages_checked: LabelStages,
    /// A checked average was exactly 0.5.
    pub tie: bool,
    /// The returned parameters pass the check. False only when neither
    /// labelling does (the stages disagree).
    pub satisfied: bool,
}

/// Average correct-classification probabilities `[π*(1)_{11}, π*(1)_{22}, π*(2)_{111}, π*(2)_{222}]`.
pub fn average_correct_classification(params: &ParamSet, data: &ObservedDataset) -> Result<[f64; 4]> {
    params.check_layout(data.layout())?;
    let mut acc = [0.0; 4];
    for i in 0..data.len() {
        let z1 = data.z1().row(i);
        let z2 = data.z2().row(i);
        acc[0] += logistic_pair(dot(&params.gamma1[0], z1))[0];
        acc[1] += logistic_pair(dot(&params.gamma1[1], z1))[1];
        acc[2] += logistic_pair(dot(&params.gamma2[0][0], z2))[0];
        acc[3] += logistic_pair(dot(&params.gamma2[1][1], z2))[1];
    }
    let n = data.len() as f64;
    Ok(acc.map(|a| a / n))
}

fn checked(avg: &[f64; 4], stages: LabelStages) -> Vec<f64> {
    let mut v = Vec::with_capacity(4);
    if stages.includes_stage1() {
        v.extend_from_slice(&avg[..2]);
    }
    if stages.includes_stage2() {
        v.extend_from_slice(&avg[2..]);
    }
    v
}

pub fn passes_check(avg: &[f64; 4], stages: LabelStages) -> bool {
    checked(avg, stages).iter().all(|&a| a > 0.5)
}

/// The block that trades places with `block` when the latent labels are swapped.
pub fn partner(block: Block) -> Block {
    match block {
        Block::Beta => Block::Beta,
        Block::Stage1 { j } => Block::Stage1 { j: j.other() },
        Block::Stage2 { k1, j } => Block::Stage2 { k1, j: j.other() },
    }
}

/// The relabelling as a signed permutation on flat parameter vectors:
/// `flipped[t] = sign · original[src]` for `(src, sign) = map[t]`.
pub fn flip_map(layout: ParamLayout) -> Vec<(usize, f64)> {
    let ranges = layout.block_ranges();
    let mut map = Vec::with_capacity(layout.n_params());
    for block in Block::ALL {
        let src = ranges[partner(block).position()].clone();
        let sign = if block == Block::Beta { -1.0 } else { 1.0 };
        map.extend(src.map(|s| (s, sign)));
    }
    map
}

/// Applies [`flip_map`] to a flat vector.
pub fn flip_flat(layout: ParamLayout, flat: &[f64]) -> Vec<f64> {
    flip_map(layout).iter().map(|&(s, sign)| sign * flat[s]).collect()
}

/// Permutes per-parameter values (flags, names, ...) without sign changes.
pub fn permute_flat<T: Clone>(layout: ParamLayout, values: &[T]) -> Vec<T> {
    flip_map(layout).iter().map(|&(s, _)| values[s].clone()).collect()
}

/// The mirrored parameter set: `−β`, and γ blocks with their true-class index swapped.
pub fn flip(params: &ParamSet) -> ParamSet {
    let mut out = params.clone();
    out.beta.iter_mut().for_each(|b| *b = -*b);
    for block in Block::ALL.into_iter().skip(1) {
        *out.block_mut(block) = params.block(partner(block)).to_vec();
    }
    out
}

/// Returns the parameters unchanged if every checked average exceeds 0.5,
/// and the mirrored set otherwise. An average of exactly 0.5 counts as a
/// failure and is logged.
pub fn correct_labels(params: &ParamSet, data: &ObservedDataset, stages: LabelStages) -> Result<(ParamSet, LabelCheckReport)> {
    let avg = average_correct_classification(params, data)?;
    let values = checked(&avg, stages);
    let tie = values.iter().any(|&a| a == 0.5);
    if tie {
        warn!("average correct-classification probability is exactly 0.50; applying the label flip");
    }
    let ok = values.iter().all(|&a| a > 0.5);
    let (out, satisfied) = if ok {
        (params.clone(), true)
    } else {
        let flipped = flip(params);
        let after = average_correct_classification(&flipped, data)?;
        let satisfied = passes_check(&after, stages);
        if !satisfied {
            warn!(
                "neither labelling satisfies the correct-classification check (averages {:?})",
                avg
            );
        }
        (flipped, satisfied)
    };
    Ok((
        out,
        LabelCheckReport {
            avg_correct: avg,
            flipped: !ok,
            stages_checked: stages,
            tie,
            satisfied,
        },
    ))
}
