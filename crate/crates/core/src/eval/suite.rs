use serde::{Deserialize, Serialize};
use std::fmt;

use crate::concepts::posterior::normalize_logs;
use crate::concepts::{candidate_dists, GroundTruthSampler, Prompt, Vocabulary};
use crate::diffusion::{ddpm_sample, Denoiser, NoiseSchedule};
use crate::error::{Error, Result};
use crate::eval::score::{
    alignment_score, mean, per_sample_posteriors, stderr, AlignmentScore, ModelTag,
    MIN_SCORE_SAMPLES,
};
use crate::numerics::tensor::Tensor;
use crate::seeding::stage_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptRole {
    Target,
    Anchor,
    Surrounding,
    Far,
}

impl fmt::Display for ConceptRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConceptRole::Target => "target",
            ConceptRole::Anchor => "anchor",
            ConceptRole::Surrounding => "surrounding",
            ConceptRole::Far => "far",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone)]
pub struct LabeledConcept {
    pub role: ConceptRole,
    pub prompt: Prompt,
}

/// Baseline and ablated scores for one concept. Pairing is structural:
/// a row cannot exist with one side missing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScorePair {
    pub role: ConceptRole,
    pub concept: String,
    pub baseline: AlignmentScore,
    pub ablated: AlignmentScore,
}

/// Target alignment of exact anchor-distribution draws: the level an
/// ideal ablation drives the ablated target score toward.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloorScore {
    pub posterior: f64,
    pub posterior_stderr: f64,
    pub n: usize,
}

/// Posterior of one subvector against its own candidate set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubScore {
    pub posterior: f64,
    pub posterior_stderr: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubScorePair {
    pub baseline: SubScore,
    pub ablated: SubScore,
}

/// Glyph and object subvectors of the target generations scored
/// separately. Whole-vector posteriors under-report glyph removal
/// because the object subspace dominates the density.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrademarkDetail {
    pub glyph: SubScorePair,
    pub object: SubScorePair,
}

/// Candidate prompts for the subvector breakdown; both sets must contain
/// the target prompt.
#[derive(Debug, Clone)]
pub struct TrademarkSpec {
    pub glyph_candidates: Vec<Prompt>,
    pub object_candidates: Vec<Prompt>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub n: usize,
    pub config_hash: String,
    pub scores: Vec<ScorePair>,
    pub target_floor: FloorScore,
    pub trademark: Option<TrademarkDetail>,
}

impl EvalReport {
    pub fn pair(&self, role: ConceptRole) -> Option<&ScorePair> {
        self.scores.iter().find(|p| p.role == role)
    }
}

/// Scores every labeled concept under both models. Each concept draws its
/// generation noise from a stream derived from (seed, concept label), and
/// the two models consume identical streams, so score deltas are paired
/// comparisons rather than independent ones.
#[allow(clippy::too_many_arguments)]
pub fn eval_suite(
    baseline: &Denoiser,
    ablated: &Denoiser,
    vocab: &Vocabulary,
    concepts: &[LabeledConcept],
    candidates: &[Prompt],
    trademark: Option<&TrademarkSpec>,
    sched: &NoiseSchedule,
    n: usize,
    seed: u64,
    config_hash: &str,
) -> Result<EvalReport> {
    if baseline.arch != ablated.arch {
        return Err(Error::bad_input("eval_suite", "models have different architectures"));
    }
    let d = vocab.d_obj + vocab.d_tm;
    if baseline.arch.data_dim != d {
        return Err(Error::bad_input(
            "eval_suite",
            format!("model data dim {} does not match vocabulary dim {d}", baseline.arch.data_dim),
        ));
    }
    if n < MIN_SCORE_SAMPLES {
        return Err(Error::bad_input(
            "eval_suite",
            format!("need at least {MIN_SCORE_SAMPLES} samples per score, got {n}"),
        ));
    }
    let targets = concepts.iter().filter(|c| c.role == ConceptRole::Target).count();
    let anchors = concepts.iter().filter(|c| c.role == ConceptRole::Anchor).count();
    if targets != 1 || anchors != 1 {
        return Err(Error::bad_input(
            "eval_suite",
            format!("need exactly one target and one anchor concept, got {targets} and {anchors}"),
        ));
    }
    for (i, c) in concepts.iter().enumerate() {
        vocab.validate_prompt(&c.prompt)?;
        if !candidates.contains(&c.prompt) {
            return Err(Error::bad_input(
                "eval_suite",
                format!("concept '{}' is not in the candidate set", vocab.prompt_label(&c.prompt)),
            ));
        }
        if concepts[..i].iter().any(|p| p.prompt == c.prompt) {
            return Err(Error::bad_input(
                "eval_suite",
                format!("concept '{}' is listed twice", vocab.prompt_label(&c.prompt)),
            ));
        }
    }

    let mut scores = Vec::with_capacity(concepts.len());
    let mut target_samples: Option<(Tensor, Tensor)> = None;
    for c in concepts {
        let label = vocab.prompt_label(&c.prompt);
        let rng = stage_rng(seed, &format!("eval-{label}"));
        let mut rng_b = rng.clone();
        let mut rng_a = rng;
        let gen_b = ddpm_sample(baseline, c.prompt.ids(), sched, n, &mut rng_b)?;
        let gen_a = ddpm_sample(ablated, c.prompt.ids(), sched, n, &mut rng_a)?;
        let score_b = alignment_score(vocab, &gen_b, &c.prompt, candidates, ModelTag::Baseline)?;
        let score_a = alignment_score(vocab, &gen_a, &c.prompt, candidates, ModelTag::Ablated)?;
        if c.role == ConceptRole::Target {
            target_samples = Some((gen_b.clone(), gen_a.clone()));
        }
        scores.push(ScorePair { role: c.role, concept: label, baseline: score_b, ablated: score_a });
    }

    let target = &concepts.iter().find(|c| c.role == ConceptRole::Target).unwrap().prompt;
    let anchor = &concepts.iter().find(|c| c.role == ConceptRole::Anchor).unwrap().prompt;
    let target_floor = anchor_floor(vocab, target, anchor, candidates, n, seed)?;

    let trademark = match trademark {
        Some(spec) => {
            let (gen_b, gen_a) = target_samples.as_ref().unwrap();
            Some(trademark_detail(vocab, spec, target, gen_b, gen_a)?)
        }
        None => None,
    };

    Ok(EvalReport {
        seed,
        n,
        config_hash: config_hash.to_string(),
        scores,
        target_floor,
        trademark,
    })
}

/// Target alignment of draws from the anchor's ground truth.
fn anchor_floor(
    vocab: &Vocabulary,
    target: &Prompt,
    anchor: &Prompt,
    candidates: &[Prompt],
    n: usize,
    seed: u64,
) -> Result<FloorScore> {
    let index = candidates.iter().position(|c| c == target).unwrap();
    let dists = candidate_dists(vocab, candidates)?;
    let gt = vocab.ground_truth(anchor)?;
    let mut rng = stage_rng(seed, "eval-floor");
    let draws = gt.sample_batch(n, &mut rng)?;
    let post = per_sample_posteriors(&dists, &draws, index)?;
    Ok(FloorScore { posterior: mean(&post), posterior_stderr: stderr(&post), n })
}

#[derive(Clone, Copy)]
enum Part {
    Obj,
    Tm,
}

fn trademark_detail(
    vocab: &Vocabulary,
    spec: &TrademarkSpec,
    target: &Prompt,
    gen_baseline: &Tensor,
    gen_ablated: &Tensor,
) -> Result<TrademarkDetail> {
    let glyph = sub_pair(vocab, &spec.glyph_candidates, target, Part::Tm, gen_baseline, gen_ablated)?;
    let object = sub_pair(vocab, &spec.object_candidates, target, Part::Obj, gen_baseline, gen_ablated)?;
    Ok(TrademarkDetail { glyph, object })
}

fn sub_pair(
    vocab: &Vocabulary,
    candidates: &[Prompt],
    target: &Prompt,
    part: Part,
    gen_baseline: &Tensor,
    gen_ablated: &Tensor,
) -> Result<SubScorePair> {
    let index = candidates.iter().position(|c| c == target).ok_or_else(|| {
        Error::bad_input("eval_suite", "target prompt missing from a subvector candidate set")
    })?;
    let dists = candidate_dists(vocab, candidates)?;
    Ok(SubScorePair {
        baseline: sub_score(vocab, &dists, index, part, gen_baseline)?,
        ablated: sub_score(vocab, &dists, index, part, gen_ablated)?,
    })
}

/// Posterior over candidates using only one subvector's marginal density.
fn sub_score(
    vocab: &Vocabulary,
    dists: &[GroundTruthSampler],
    index: usize,
    part: Part,
    samples: &Tensor,
) -> Result<SubScore> {
    let d_obj = vocab.d_obj;
    let mut post = Vec::with_capacity(samples.rows());
    for r in 0..samples.rows() {
        let row = samples.row(r);
        let logs = dists
            .iter()
            .map(|dist| match part {
                Part::Obj => dist.log_density_obj(&row[..d_obj]),
                Part::Tm => dist.log_density_tm(&row[d_obj..]),
            })
            .collect::<Result<Vec<_>>>()?;
        post.push(normalize_logs(&logs)[index]);
    }
    Ok(SubScore { posterior: mean(&post), posterior_stderr: stderr(&post), n: samples.rows() })
}
