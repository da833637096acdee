use anyhow::{Context, Result};

use ablate_core::concepts::GroundTruthSampler;
use ablate_core::diffusion::{train_step_standard, Denoiser, NoiseSchedule};
use ablate_core::numerics::adam::{AdamHyper, AdamState};
use ablate_core::seeding::stage_rng;

use crate::config::ExperimentConfig;

/// Trains the baseline conditional denoiser over the full prompt list,
/// one prompt per step in round-robin order. Output is a pure function
/// of the config values covered by `pretrain_hash`.
pub fn pretrain_baseline(cfg: &ExperimentConfig, sched: &NoiseSchedule) -> Result<Denoiser> {
    let mut init_rng = stage_rng(cfg.seed, "pretrain-init");
    let mut model = Denoiser::init(cfg.arch.clone(), &mut init_rng)?;
    let mut opt = AdamState::new(&model.params, AdamHyper::with_lr(cfg.pretrain.lr))?;

    let samplers: Vec<GroundTruthSampler> = cfg
        .pretrain
        .prompts
        .iter()
        .map(|p| cfg.vocab.ground_truth(p))
        .collect::<ablate_core::Result<_>>()
        .context("building pretraining ground truths")?;

    let mut rng = stage_rng(cfg.seed, "pretrain");
    for step in 0..cfg.pretrain.steps {
        let idx = step % samplers.len();
        let x0 = samplers[idx].sample_batch(cfg.pretrain.batch_size, &mut rng)?;
        let prompt = &cfg.pretrain.prompts[idx];
        train_step_standard(&mut model, &mut opt, &x0, prompt.ids(), sched, &mut rng)
            .with_context(|| format!("pretraining step {step}"))?;
    }
    Ok(model)
}
