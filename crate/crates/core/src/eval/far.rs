use serde::{Deserialize, Serialize};

use crate::concepts::{candidate_dists, Prompt, Vocabulary};
use crate::diffusion::{ddpm_sample, Denoiser, NoiseSchedule};
use crate::error::{Error, Result};
use crate::eval::score::{mean, per_sample_posteriors, stderr, MIN_SCORE_SAMPLES};
use crate::seeding::stage_rng;

/// Alignment change on one far concept. delta > 0 means the ablated model
/// lost alignment the baseline had.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FarRow {
    pub concept: String,
    pub baseline_posterior: f64,
    pub ablated_posterior: f64,
    pub delta: f64,
    pub delta_stderr: f64,
    pub n: usize,
}

/// Informational collateral-damage report; there is no pass threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FarReport {
    pub rows: Vec<FarRow>,
}

/// Scores far concepts under both models with shared noise streams and
/// reports per-sample-paired deltas, so the standard errors measure the
/// model difference rather than two generations' independent spread.
#[allow(clippy::too_many_arguments)]
pub fn far_concept_report(
    baseline: &Denoiser,
    ablated: &Denoiser,
    vocab: &Vocabulary,
    far_prompts: &[Prompt],
    excluded: &[Prompt],
    candidates: &[Prompt],
    sched: &NoiseSchedule,
    n: usize,
    seed: u64,
) -> Result<FarReport> {
    if baseline.arch != ablated.arch {
        return Err(Error::bad_input("far_concept_report", "models have different architectures"));
    }
    if far_prompts.is_empty() {
        return Err(Error::bad_input("far_concept_report", "no far prompts given"));
    }
    if n < MIN_SCORE_SAMPLES {
        return Err(Error::bad_input(
            "far_concept_report",
            format!("need at least {MIN_SCORE_SAMPLES} samples per score, got {n}"),
        ));
    }
    for p in far_prompts {
        vocab.validate_prompt(p)?;
        if excluded.contains(p) {
            return Err(Error::bad_input(
                "far_concept_report",
                format!("far prompt '{}' overlaps the ablation's near concepts", vocab.prompt_label(p)),
            ));
        }
        if !candidates.contains(p) {
            return Err(Error::bad_input(
                "far_concept_report",
                format!("far prompt '{}' is not in the candidate set", vocab.prompt_label(p)),
            ));
        }
    }

    let dists = candidate_dists(vocab, candidates)?;
    let mut rows = Vec::with_capacity(far_prompts.len());
    for p in far_prompts {
        let label = vocab.prompt_label(p);
        let index = candidates.iter().position(|c| c == p).unwrap();
        let rng = stage_rng(seed, &format!("far-{label}"));
        let mut rng_b = rng.clone();
        let mut rng_a = rng;
        let gen_b = ddpm_sample(baseline, p.ids(), sched, n, &mut rng_b)?;
        let gen_a = ddpm_sample(ablated, p.ids(), sched, n, &mut rng_a)?;
        let post_b = per_sample_posteriors(&dists, &gen_b, index)?;
        let post_a = per_sample_posteriors(&dists, &gen_a, index)?;
        let deltas: Vec<f64> = post_b.iter().zip(&post_a).map(|(b, a)| b - a).collect();
        rows.push(FarRow {
            concept: label,
            baseline_posterior: mean(&post_b),
            ablated_posterior: mean(&post_a),
            delta: mean(&deltas),
            delta_stderr: stderr(&deltas),
            n,
        });
    }
    Ok(FarReport { rows })
}
