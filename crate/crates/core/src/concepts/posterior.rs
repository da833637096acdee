use crate::concepts::prompt::Prompt;
use crate::concepts::sampler::GroundTruthSampler;
use crate::concepts::vocab::Vocabulary;
use crate::error::{Error, Result};

/// Posterior over candidate prompts for one point under a uniform prior:
/// softmax of the candidate log-densities, computed in log space.
pub fn concept_posterior(vocab: &Vocabulary, x: &[f64], candidates: &[Prompt]) -> Result<Vec<f64>> {
    let dists = candidate_dists(vocab, candidates)?;
    let logs = dists
        .iter()
        .map(|d| d.log_density(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(normalize_logs(&logs))
}

/// Same posterior against prebuilt distributions, for scoring loops that
/// evaluate many points against one candidate set.
pub fn posterior_from_dists(dists: &[GroundTruthSampler], x: &[f64]) -> Result<Vec<f64>> {
    if dists.len() < 2 {
        return Err(Error::bad_input("posterior", "need at least two candidates"));
    }
    let logs = dists
        .iter()
        .map(|d| d.log_density(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(normalize_logs(&logs))
}

pub fn candidate_dists(vocab: &Vocabulary, candidates: &[Prompt]) -> Result<Vec<GroundTruthSampler>> {
    if candidates.len() < 2 {
        return Err(Error::bad_input("posterior", "need at least two candidates"));
    }
    candidates.iter().map(|p| vocab.ground_truth(p)).collect()
}

pub(crate) fn normalize_logs(logs: &[f64]) -> Vec<f64> {
    let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = logs.iter().map(|l| (l - mx).exp()).collect();
    let sum: f64 = unnorm.iter().sum();
    unnorm.into_iter().map(|u| u / sum).collect()
}
