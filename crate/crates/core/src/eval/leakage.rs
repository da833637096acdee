use serde::{Deserialize, Serialize};

use crate::concepts::{candidate_dists, Prompt, TokenKind, Vocabulary};
use crate::diffusion::{ddpm_sample, Denoiser, NoiseSchedule};
use crate::error::{Error, Result};
use crate::eval::score::{mean, per_sample_logdens, per_sample_posteriors, stderr, ModelTag, MIN_SCORE_SAMPLES};
use crate::seeding::stage_rng;

/// Target alignment of generations from one synonym prompt. Higher means
/// the concept leaks through the alternative name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeakProbe {
    pub prompt: String,
    pub target_alignment: f64,
    pub stderr: f64,
    pub raw_logdens: f64,
    pub raw_stderr: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeakReport {
    pub model_tag: ModelTag,
    pub target: String,
    pub probes: Vec<LeakProbe>,
}

/// Generates with each synonym prompt and scores the outputs for target
/// alignment. Noise streams depend only on (seed, prompt label), so calls
/// against different models with the same seed are paired.
#[allow(clippy::too_many_arguments)]
pub fn leakage_probe(
    model: &Denoiser,
    tag: ModelTag,
    vocab: &Vocabulary,
    synonym_prompts: &[Prompt],
    target: &Prompt,
    candidates: &[Prompt],
    sched: &NoiseSchedule,
    n: usize,
    seed: u64,
) -> Result<LeakReport> {
    if synonym_prompts.is_empty() {
        return Err(Error::bad_input("leakage_probe", "no synonym prompts given"));
    }
    if n < MIN_SCORE_SAMPLES {
        return Err(Error::bad_input(
            "leakage_probe",
            format!("need at least {MIN_SCORE_SAMPLES} samples per probe, got {n}"),
        ));
    }
    let index = candidates
        .iter()
        .position(|c| c == target)
        .ok_or_else(|| Error::bad_input("leakage_probe", "target is not in the candidate set"))?;
    for p in synonym_prompts {
        vocab.validate_prompt(p)?;
        check_is_indirect(vocab, p, target)?;
    }

    let dists = candidate_dists(vocab, candidates)?;
    let mut probes = Vec::with_capacity(synonym_prompts.len());
    for p in synonym_prompts {
        let label = vocab.prompt_label(p);
        let mut rng = stage_rng(seed, &format!("leak-{label}"));
        let gen = ddpm_sample(model, p.ids(), sched, n, &mut rng)?;
        let post = per_sample_posteriors(&dists, &gen, index)?;
        let raw = per_sample_logdens(&dists[index], &gen)?;
        probes.push(LeakProbe {
            prompt: label,
            target_alignment: mean(&post),
            stderr: stderr(&post),
            raw_logdens: mean(&raw),
            raw_stderr: stderr(&raw),
            n,
        });
    }
    Ok(LeakReport { model_tag: tag, target: vocab.prompt_label(target), probes })
}

/// A usable probe prompt must reach the target through a paraphrase: it
/// carries at least one synonym resolving to a target token. Sharing the
/// target's other context tokens is fine; the role slots already forbid
/// a synonym and its own referent in one prompt, so the paraphrased
/// token itself can never appear alongside its stand-in.
fn check_is_indirect(vocab: &Vocabulary, probe: &Prompt, target: &Prompt) -> Result<()> {
    let mut paraphrased = false;
    for &id in probe.ids() {
        if let TokenKind::Synonym { of } = vocab.token(id)?.kind {
            if target.contains(of) {
                paraphrased = true;
            }
        }
    }
    if !paraphrased {
        return Err(Error::bad_input(
            "leakage_probe",
            format!(
                "probe '{}' contains no synonym of a target token",
                vocab.prompt_label(probe)
            ),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::vocab::fixtures::test_vocab;
    use crate::diffusion::Architecture;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn fixture() -> (Denoiser, Vocabulary, NoiseSchedule) {
        let v = test_vocab();
        let arch = Architecture {
            data_dim: 6,
            embed_dim: 8,
            attn_dim: 8,
            hidden_dim: 24,
            time_freqs: 4,
            vocab_size: v.len(),
        };
        let mut rng = ChaCha12Rng::seed_from_u64(81);
        let model = Denoiser::init(arch, &mut rng).unwrap();
        (model, v, NoiseSchedule::default_schedule())
    }

    #[test]
    fn probe_runs_and_stays_in_range() {
        let (model, v, sched) = fixture();
        let target = v.prompt(&["grumpy_cat"]).unwrap();
        let syn = v.prompt(&["grumpy_tabby"]).unwrap();
        let candidates = vec![target.clone(), v.prompt(&["cat"]).unwrap(), v.prompt(&["cup"]).unwrap()];
        let r = leakage_probe(&model, ModelTag::Ablated, &v, &[syn], &target, &candidates, &sched, 100, 3)
            .unwrap();
        assert_eq!(r.probes.len(), 1);
        let p = &r.probes[0];
        assert_eq!(p.prompt, "grumpy_tabby");
        assert!(p.target_alignment >= 0.0 && p.target_alignment <= 1.0);
        assert!(p.stderr.is_finite() && p.raw_logdens.is_finite());
    }

    #[test]
    fn probe_is_deterministic_for_fixed_seed() {
        let (model, v, sched) = fixture();
        let target = v.prompt(&["grumpy_cat"]).unwrap();
        let syn = v.prompt(&["grumpy_tabby"]).unwrap();
        let candidates = vec![target.clone(), v.prompt(&["cat"]).unwrap()];
        let a = leakage_probe(&model, ModelTag::Baseline, &v, &[syn.clone()], &target, &candidates, &sched, 100, 4)
            .unwrap();
        let b = leakage_probe(&model, ModelTag::Baseline, &v, &[syn], &target, &candidates, &sched, 100, 4)
            .unwrap();
        assert_eq!(
            a.probes[0].target_alignment.to_bits(),
            b.probes[0].target_alignment.to_bits()
        );
    }

    #[test]
    fn rejects_direct_prompt_with_no_paraphrase() {
        let (model, v, sched) = fixture();
        let target = v.prompt(&["grumpy_cat"]).unwrap();
        let direct = v.prompt(&["grumpy_cat", "warm"]).unwrap();
        let candidates = vec![target.clone(), v.prompt(&["cat"]).unwrap()];
        let err = leakage_probe(&model, ModelTag::Ablated, &v, &[direct], &target, &candidates, &sched, 100, 3);
        assert!(err.is_err());
    }

    /// Paraphrasing one target token while keeping the others is the
    /// leakage pattern for composite targets.
    #[test]
    fn accepts_probe_sharing_context_tokens() {
        let (model, v, sched) = fixture();
        let target = v.prompt(&["grumpy_cat", "warm"]).unwrap();
        let probe = v.prompt(&["grumpy_tabby", "warm"]).unwrap();
        let candidates = vec![target.clone(), v.prompt(&["cat", "warm"]).unwrap()];
        let r = leakage_probe(&model, ModelTag::Ablated, &v, &[probe], &target, &candidates, &sched, 100, 3)
            .unwrap();
        assert_eq!(r.probes[0].prompt, "grumpy_tabby+warm");
    }

    #[test]
    fn rejects_prompt_without_target_synonym() {
        let (model, v, sched) = fixture();
        let target = v.prompt(&["grumpy_cat"]).unwrap();
        let unrelated = v.prompt(&["dog"]).unwrap();
        let candidates = vec![target.clone(), v.prompt(&["cat"]).unwrap()];
        assert!(leakage_probe(&model, ModelTag::Ablated, &v, &[unrelated], &target, &candidates, &sched, 100, 3)
            .is_err());
    }

    #[test]
    fn rejects_target_missing_from_candidates() {
        let (model, v, sched) = fixture();
        let target = v.prompt(&["grumpy_cat"]).unwrap();
        let syn = v.prompt(&["grumpy_tabby"]).unwrap();
        let candidates = vec![v.prompt(&["cat"]).unwrap(), v.prompt(&["cup"]).unwrap()];
        assert!(leakage_probe(&model, ModelTag::Ablated, &v, &[syn], &target, &candidates, &sched, 100, 3)
            .is_err());
    }
}
