use serde::{Deserialize, Serialize};
use std::fmt;

use crate::concepts::{candidate_dists, posterior_from_dists, GroundTruthSampler, Prompt, Vocabulary};
use crate::error::{Error, Result};
use crate::numerics::tensor::Tensor;

/// Scores over fewer samples than this have useless standard errors.
pub const MIN_SCORE_SAMPLES: usize = 100;

/// Which model produced the scored samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    Baseline,
    Ablated,
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelTag::Baseline => write!(f, "baseline"),
            ModelTag::Ablated => write!(f, "ablated"),
        }
    }
}

/// How well a sample batch matches one concept: mean posterior mass of
/// that concept among the candidates, plus the mean log-density under its
/// ground truth. The raw variant moves even when the posterior saturates,
/// which matters for near-point distributions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlignmentScore {
    pub concept: String,
    pub model_tag: ModelTag,
    pub posterior: f64,
    pub posterior_stderr: f64,
    pub raw_logdens: f64,
    pub raw_stderr: f64,
    pub n: usize,
}

/// Scores `samples` for alignment with `concept` among `candidates`.
pub fn alignment_score(
    vocab: &Vocabulary,
    samples: &Tensor,
    concept: &Prompt,
    candidates: &[Prompt],
    tag: ModelTag,
) -> Result<AlignmentScore> {
    let index = candidates
        .iter()
        .position(|c| c == concept)
        .ok_or_else(|| Error::bad_input("alignment_score", "concept is not one of the candidates"))?;
    if samples.rows() < MIN_SCORE_SAMPLES {
        return Err(Error::bad_input(
            "alignment_score",
            format!("need at least {MIN_SCORE_SAMPLES} samples, got {}", samples.rows()),
        ));
    }
    let dists = candidate_dists(vocab, candidates)?;
    let post = per_sample_posteriors(&dists, samples, index)?;
    let raw = per_sample_logdens(&dists[index], samples)?;
    Ok(AlignmentScore {
        concept: vocab.prompt_label(concept),
        model_tag: tag,
        posterior: mean(&post),
        posterior_stderr: stderr(&post),
        raw_logdens: mean(&raw),
        raw_stderr: stderr(&raw),
        n: samples.rows(),
    })
}

/// Posterior mass of candidate `index` for each sample row.
pub(crate) fn per_sample_posteriors(
    dists: &[GroundTruthSampler],
    samples: &Tensor,
    index: usize,
) -> Result<Vec<f64>> {
    if index >= dists.len() {
        return Err(Error::bad_input("alignment_score", "candidate index out of range"));
    }
    (0..samples.rows())
        .map(|r| Ok(posterior_from_dists(dists, samples.row(r))?[index]))
        .collect()
}

/// Log-density of each sample row under one ground-truth distribution.
pub(crate) fn per_sample_logdens(dist: &GroundTruthSampler, samples: &Tensor) -> Result<Vec<f64>> {
    (0..samples.rows()).map(|r| dist.log_density(samples.row(r))).collect()
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean; zero for fewer than two values.
pub(crate) fn stderr(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}
