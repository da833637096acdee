use crate::ablation::config::{AblationConfig, AblationMethod};
use crate::ablation::scope::select_trainable;
use crate::ablation::steps::{model_ablation_step, noise_ablation_step};
use crate::concepts::augment::augment;
use crate::concepts::compose::compose_prompts;
use crate::concepts::posterior::{candidate_dists, posterior_from_dists};
use crate::concepts::prompt::Prompt;
use crate::concepts::vocab::Vocabulary;
use crate::diffusion::model::Denoiser;
use crate::diffusion::sample::ddpm_sample;
use crate::diffusion::schedule::NoiseSchedule;
use crate::error::{Error, Result};
use crate::numerics::adam::AdamState;
use crate::numerics::tensor::Tensor;
use crate::seeding::stage_rng;
use std::time::Instant;

/// One training step's record. Wall time is in-memory diagnostics only
/// and never serialized, so emitted artifacts stay run-independent.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub loss: f64,
    /// Target alignment probed right after this step, when on the grid.
    pub probe: Option<f64>,
    #[serde(skip)]
    pub wall_ms: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TrainingLog {
    pub probe_interval: usize,
    /// Target alignment before the first update.
    pub initial_probe: Option<f64>,
    pub records: Vec<StepRecord>,
}

impl TrainingLog {
    pub fn empty(probe_interval: usize) -> TrainingLog {
        TrainingLog {
            probe_interval,
            initial_probe: None,
            records: Vec::new(),
        }
    }

    /// (step, score) probe sequence including the initial point.
    pub fn probe_points(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        if let Some(p) = self.initial_probe {
            out.push((0, p));
        }
        for r in &self.records {
            if let Some(p) = r.probe {
                out.push((r.step, p));
            }
        }
        out
    }

    pub fn final_probe(&self) -> Option<f64> {
        self.probe_points().last().map(|&(_, s)| s)
    }

    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }
}

/// How to measure target alignment during a run: generate from `prompt`
/// and average the posterior mass of `candidates[target_index]`.
#[derive(Debug, Clone)]
pub struct ProbeSpec {
    pub prompt: Prompt,
    pub candidates: Vec<Prompt>,
    pub target_index: usize,
    pub samples: usize,
}

impl ProbeSpec {
    pub fn validate(&self, vocab: &Vocabulary) -> Result<()> {
        vocab.validate_prompt(&self.prompt)?;
        if self.target_index >= self.candidates.len() {
            return Err(Error::Config(format!(
                "probe target index {} out of range for {} candidates",
                self.target_index,
                self.candidates.len()
            )));
        }
        if self.samples == 0 {
            return Err(Error::Config("probe samples must be positive".into()));
        }
        Ok(())
    }
}

fn probe_score(
    model: &Denoiser,
    spec: &ProbeSpec,
    dists: &[crate::concepts::sampler::GroundTruthSampler],
    sched: &NoiseSchedule,
    seed: u64,
    step: usize,
) -> Result<f64> {
    let mut rng = stage_rng(seed, &format!("ablation-probe-{step}"));
    let samples = ddpm_sample(model, spec.prompt.ids(), sched, spec.samples, &mut rng)?;
    let mut acc = 0.0;
    for i in 0..samples.rows() {
        acc += posterior_from_dists(dists, samples.row(i))?[spec.target_index];
    }
    Ok(acc / samples.rows() as f64)
}

/// Runs one removal job against `model` in place and returns the log.
///
/// Steps cycle through composed prompt pairs; each step draws (or, with a
/// fixed pool, reuses) an anchor batch, augments it, and applies one
/// update of the configured method. The target alignment is probed before
/// the first step, every probe_interval steps, and after the last step.
/// Everything is a pure function of (cfg.seed, config, model), so a rerun
/// reproduces the exact parameter bits. steps = 0 is the no-op run: the
/// model is untouched and the log comes back empty.
pub fn run_ablation(
    cfg: &AblationConfig,
    model: &mut Denoiser,
    vocab: &Vocabulary,
    sched: &NoiseSchedule,
    probe: &ProbeSpec,
) -> Result<TrainingLog> {
    cfg.validate(vocab)?;
    probe.validate(vocab)?;
    if cfg.steps == 0 {
        return Ok(TrainingLog::empty(cfg.probe_interval));
    }

    let pairs = compose_prompts(vocab, &cfg.target, &cfg.anchor, cfg.prompt_pairs)?;
    let probe_dists = candidate_dists(vocab, &probe.candidates)?;

    let anchor_dists = pairs
        .iter()
        .map(|(_, a)| vocab.ground_truth(a))
        .collect::<Result<Vec<_>>>()?;

    select_trainable(model, cfg.scope)?;
    let mut opt = AdamState::new(&model.params, cfg.hyper)?;
    let mut rng = stage_rng(cfg.seed, "ablation-train");

    let fixed_pool: Option<Vec<Tensor>> = if cfg.fixed_anchor_pool {
        Some(
            anchor_dists
                .iter()
                .map(|d| d.sample_batch(cfg.batch_size, &mut rng))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };

    let mut log = TrainingLog::empty(cfg.probe_interval);
    log.initial_probe = Some(probe_score(model, probe, &probe_dists, sched, cfg.seed, 0)?);

    for step in 1..=cfg.steps {
        let started = Instant::now();
        let idx = (step - 1) % pairs.len();
        let (target_prompt, anchor_prompt) = &pairs[idx];

        let raw = match &fixed_pool {
            Some(pool) => pool[idx].clone(),
            None => anchor_dists[idx].sample_batch(cfg.batch_size, &mut rng)?,
        };
        let batch = augment(&raw, &cfg.augmentation, &mut rng)?;

        let loss = match cfg.method {
            AblationMethod::NoiseBased => {
                noise_ablation_step(model, &mut opt, &batch, target_prompt.ids(), sched, &mut rng)?
            }
            AblationMethod::ModelBased => model_ablation_step(
                model,
                &mut opt,
                anchor_prompt.ids(),
                target_prompt.ids(),
                &batch,
                sched,
                &mut rng,
            )?,
        };

        let on_grid = step % cfg.probe_interval == 0 || step == cfg.steps;
        let probe_value = if on_grid {
            Some(probe_score(model, probe, &probe_dists, sched, cfg.seed, step)?)
        } else {
            None
        };

        log.records.push(StepRecord {
            step,
            loss,
            probe: probe_value,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(log)
}
