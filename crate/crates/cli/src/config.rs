use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ablate_core::ablation::{AblationConfig, AblationMethod, AblationVariant, FinetuneScope, ProbeSpec};
use ablate_core::concepts::{AugmentationConfig, Prompt, Vocabulary};
use ablate_core::diffusion::{
    Architecture, NoiseSchedule, DEFAULT_BETA_MAX, DEFAULT_BETA_MIN, DEFAULT_TIMESTEPS,
};
use ablate_core::eval::{ConceptRole, LabeledConcept, TrademarkSpec, MIN_SCORE_SAMPLES};
use ablate_core::numerics::adam::AdamHyper;

pub const CONFIG_VERSION: u32 = 1;
pub const DEFAULT_PRETRAIN_BATCH: usize = 32;
pub const DEFAULT_PRETRAIN_LR: f64 = 1e-3;
pub const DEFAULT_ABLATION_BATCH: usize = 32;
pub const DEFAULT_PROMPT_PAIRS: usize = 8;
pub const DEFAULT_PROBE_INTERVAL: usize = 25;
pub const DEFAULT_PROBE_SAMPLES: usize = 150;
pub const DEFAULT_EVAL_SAMPLES: usize = 500;

/// Learning-rate default depends on how much of the model moves:
/// full-weight updates destabilize the small trunk at the rate the
/// narrow scopes tolerate.
pub fn default_lr(scope: FinetuneScope) -> f64 {
    match scope {
        FinetuneScope::Full => 1e-4,
        _ => 5e-4,
    }
}

#[derive(Debug, Clone)]
pub struct PretrainPlan {
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub prompts: Vec<Prompt>,
}

#[derive(Debug, Clone)]
pub struct EvalPlan {
    pub n: usize,
    pub surrounding: Vec<Prompt>,
    pub far: Vec<Prompt>,
    pub synonyms: Vec<Prompt>,
    pub candidates: Vec<Prompt>,
    pub trademark: Option<TrademarkSpec>,
}

/// A fully validated experiment: every token resolved, every default
/// filled, derived sizes fixed. Everything a run does is a pure function
/// of this value.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub vocab_path: PathBuf,
    pub vocab_text: String,
    pub vocab: Vocabulary,
    pub timesteps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub arch: Architecture,
    pub pretrain: PretrainPlan,
    pub methods: Vec<AblationMethod>,
    pub ablation: AblationConfig,
    pub eval: EvalPlan,
}

impl ExperimentConfig {
    /// Seed lives in two places; keep them in lockstep.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.ablation.seed = seed;
    }

    pub fn schedule(&self) -> Result<NoiseSchedule> {
        NoiseSchedule::build(self.timesteps, self.beta_min, self.beta_max)
            .context("building noise schedule")
    }

    /// Evaluation concepts in report order.
    pub fn labeled_concepts(&self) -> Vec<LabeledConcept> {
        let mut out = vec![
            LabeledConcept { role: ConceptRole::Target, prompt: self.ablation.target.clone() },
            LabeledConcept { role: ConceptRole::Anchor, prompt: self.ablation.anchor.clone() },
        ];
        for p in &self.eval.surrounding {
            out.push(LabeledConcept { role: ConceptRole::Surrounding, prompt: p.clone() });
        }
        for p in &self.eval.far {
            out.push(LabeledConcept { role: ConceptRole::Far, prompt: p.clone() });
        }
        out
    }

    pub fn probe_spec(&self) -> ProbeSpec {
        let target_index = self
            .eval
            .candidates
            .iter()
            .position(|c| c == &self.ablation.target)
            .expect("validated: target is a candidate");
        ProbeSpec {
            prompt: self.ablation.target.clone(),
            candidates: self.eval.candidates.clone(),
            target_index,
            samples: self.ablation.probe_samples,
        }
    }

    /// Hash of every value that influences run output.
    pub fn config_hash(&self) -> String {
        sha_hex(&serde_json::to_vec(&self.snapshot()).expect("snapshot serializes"))
    }

    /// Hash of the values that influence the pretrained baseline only;
    /// the cache key for baseline checkpoints.
    pub fn pretrain_hash(&self) -> String {
        let snap = self.snapshot();
        let sub = PretrainSnapshot {
            seed: snap.seed,
            timesteps: snap.timesteps,
            beta_min: snap.beta_min,
            beta_max: snap.beta_max,
            arch: snap.arch,
            vocab_sha: snap.vocab_sha,
            pretrain: snap.pretrain,
        };
        sha_hex(&serde_json::to_vec(&sub).expect("snapshot serializes"))
    }

    fn snapshot(&self) -> Snapshot {
        let label = |p: &Prompt| self.vocab.prompt_label(p);
        let labels = |ps: &[Prompt]| ps.iter().map(label).collect::<Vec<_>>();
        Snapshot {
            seed: self.seed,
            timesteps: self.timesteps,
            beta_min: self.beta_min,
            beta_max: self.beta_max,
            arch: self.arch.clone(),
            vocab_sha: sha_hex(self.vocab_text.as_bytes()),
            pretrain: PretrainSnap {
                steps: self.pretrain.steps,
                batch_size: self.pretrain.batch_size,
                lr: self.pretrain.lr,
                prompts: labels(&self.pretrain.prompts),
            },
            methods: self.methods.iter().map(|m| m.to_string()).collect(),
            ablation: AblationSnap {
                variant: self.ablation.variant.to_string(),
                target: label(&self.ablation.target),
                anchor: label(&self.ablation.anchor),
                scope: self.ablation.scope.to_string(),
                steps: self.ablation.steps,
                batch_size: self.ablation.batch_size,
                prompt_pairs: self.ablation.prompt_pairs,
                probe_interval: self.ablation.probe_interval,
                probe_samples: self.ablation.probe_samples,
                lr: self.ablation.hyper.lr,
                augment_enabled: self.ablation.augmentation.enabled,
                jitter: self.ablation.augmentation.jitter,
                rescale: self.ablation.augmentation.rescale,
                fixed_anchor_pool: self.ablation.fixed_anchor_pool,
            },
            eval: EvalSnap {
                n: self.eval.n,
                surrounding: labels(&self.eval.surrounding),
                far: labels(&self.eval.far),
                synonyms: labels(&self.eval.synonyms),
                candidates: labels(&self.eval.candidates),
                trademark: self.eval.trademark.as_ref().map(|t| TrademarkSnap {
                    glyph_candidates: labels(&t.glyph_candidates),
                    object_candidates: labels(&t.object_candidates),
                }),
            },
        }
    }
}

#[derive(Serialize)]
struct Snapshot {
    seed: u64,
    timesteps: usize,
    beta_min: f64,
    beta_max: f64,
    arch: Architecture,
    vocab_sha: String,
    pretrain: PretrainSnap,
    methods: Vec<String>,
    ablation: AblationSnap,
    eval: EvalSnap,
}

#[derive(Serialize)]
struct PretrainSnapshot {
    seed: u64,
    timesteps: usize,
    beta_min: f64,
    beta_max: f64,
    arch: Architecture,
    vocab_sha: String,
    pretrain: PretrainSnap,
}

#[derive(Serialize)]
struct PretrainSnap {
    steps: usize,
    batch_size: usize,
    lr: f64,
    prompts: Vec<String>,
}

#[derive(Serialize)]
struct AblationSnap {
    variant: String,
    target: String,
    anchor: String,
    scope: String,
    steps: usize,
    batch_size: usize,
    prompt_pairs: usize,
    probe_interval: usize,
    probe_samples: usize,
    lr: f64,
    augment_enabled: bool,
    jitter: f64,
    rescale: (f64, f64),
    fixed_anchor_pool: bool,
}

#[derive(Serialize)]
struct EvalSnap {
    n: usize,
    surrounding: Vec<String>,
    far: Vec<String>,
    synonyms: Vec<String>,
    candidates: Vec<String>,
    trademark: Option<TrademarkSnap>,
}

#[derive(Serialize)]
struct TrademarkSnap {
    glyph_candidates: Vec<String>,
    object_candidates: Vec<String>,
}

pub fn sha_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: Option<u32>,
    seed: Option<u64>,
    out_dir: Option<String>,
    vocab: String,
    schedule: Option<RawSchedule>,
    arch: Option<RawArch>,
    pretrain: RawPretrain,
    ablation: RawAblation,
    eval: RawEval,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    timesteps: Option<usize>,
    beta_min: Option<f64>,
    beta_max: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArch {
    embed_dim: Option<usize>,
    attn_dim: Option<usize>,
    hidden_dim: Option<usize>,
    time_freqs: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPretrain {
    steps: usize,
    batch_size: Option<usize>,
    lr: Option<f64>,
    prompts: Vec<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAblation {
    variant: String,
    method: String,
    target: Vec<String>,
    anchor: Vec<String>,
    scope: String,
    steps: usize,
    batch_size: Option<usize>,
    prompt_pairs: Option<usize>,
    probe_interval: Option<usize>,
    probe_samples: Option<usize>,
    lr: Option<f64>,
    augment: Option<bool>,
    jitter: Option<f64>,
    rescale: Option<(f64, f64)>,
    fixed_anchor_pool: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEval {
    n: Option<usize>,
    surrounding: Option<Vec<Vec<String>>>,
    far: Option<Vec<Vec<String>>>,
    synonyms: Option<Vec<Vec<String>>>,
    candidates: Option<Vec<Vec<String>>>,
    trademark: Option<RawTrademark>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrademark {
    glyph_candidates: Vec<Vec<String>>,
    object_candidates: Vec<Vec<String>>,
}

/// Parses and fully validates an experiment file. Validation problems are
/// collected and reported together, one line per problem, each naming the
/// config path it concerns.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let raw: RawConfig = toml::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));

    let mut errs: Vec<String> = Vec::new();

    match raw.version {
        Some(CONFIG_VERSION) => {}
        Some(v) => errs.push(format!("version: unsupported config version {v}, want {CONFIG_VERSION}")),
        None => errs.push(format!("version: missing (this tool reads version {CONFIG_VERSION})")),
    }
    if raw.seed.is_none() {
        errs.push("seed: missing; every run must be seeded explicitly".into());
    }

    let vocab_path = resolve_path(base_dir, &raw.vocab);
    let vocab_text = std::fs::read_to_string(&vocab_path)
        .with_context(|| format!("reading vocabulary {}", vocab_path.display()))?;
    let vocab = match Vocabulary::from_toml_str(&vocab_text) {
        Ok(v) => Some(v),
        Err(e) => {
            errs.push(format!("vocab: {e}"));
            None
        }
    };

    let timesteps = raw.schedule.as_ref().and_then(|s| s.timesteps).unwrap_or(DEFAULT_TIMESTEPS);
    let beta_min = raw.schedule.as_ref().and_then(|s| s.beta_min).unwrap_or(DEFAULT_BETA_MIN);
    let beta_max = raw.schedule.as_ref().and_then(|s| s.beta_max).unwrap_or(DEFAULT_BETA_MAX);
    if let Err(e) = NoiseSchedule::build(timesteps, beta_min, beta_max) {
        errs.push(format!("schedule: {e}"));
    }

    if raw.pretrain.steps == 0 {
        errs.push("pretrain.steps: must be positive".into());
    }
    if raw.pretrain.batch_size == Some(0) {
        errs.push("pretrain.batch_size: must be positive".into());
    }
    if raw.pretrain.prompts.is_empty() {
        errs.push("pretrain.prompts: must list at least one prompt".into());
    }

    let ab = &raw.ablation;
    if ab.batch_size == Some(0) {
        errs.push("ablation.batch_size: must be positive".into());
    }
    if ab.prompt_pairs == Some(0) {
        errs.push("ablation.prompt_pairs: must be positive".into());
    }
    if ab.probe_interval == Some(0) {
        errs.push("ablation.probe_interval: must be positive".into());
    }
    if ab.probe_samples == Some(0) {
        errs.push("ablation.probe_samples: must be positive".into());
    }
    let variant = match ab.variant.as_str() {
        "instance" => Some(AblationVariant::Instance),
        "style" => Some(AblationVariant::Style),
        "memorization" => Some(AblationVariant::Memorization),
        "trademark" => Some(AblationVariant::Trademark),
        other => {
            errs.push(format!("ablation.variant: unknown variant '{other}'"));
            None
        }
    };
    let methods: Vec<AblationMethod> = match ab.method.as_str() {
        "noise" => vec![AblationMethod::NoiseBased],
        "model" => vec![AblationMethod::ModelBased],
        "both" => vec![AblationMethod::NoiseBased, AblationMethod::ModelBased],
        other => {
            errs.push(format!("ablation.method: '{other}' is not one of noise, model, both"));
            Vec::new()
        }
    };
    let scope = match FinetuneScope::from_str(&ab.scope) {
        Ok(s) => Some(s),
        Err(e) => {
            errs.push(format!("ablation.scope: {e}"));
            None
        }
    };

    let ev = &raw.eval;
    let eval_n = ev.n.unwrap_or(DEFAULT_EVAL_SAMPLES);
    if eval_n < MIN_SCORE_SAMPLES {
        errs.push(format!("eval.n: must be at least {MIN_SCORE_SAMPLES}, got {eval_n}"));
    }

    // Everything referencing tokens needs the vocabulary; without it the
    // errors above are all we can say.
    let Some(vocab) = vocab else {
        return Err(config_error(path, errs));
    };

    fn resolve(vocab: &Vocabulary, names: &[String], field: &str, errs: &mut Vec<String>) -> Option<Prompt> {
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        match vocab.prompt(&refs) {
            Ok(p) => Some(p),
            Err(e) => {
                errs.push(format!("{field}: {e}"));
                None
            }
        }
    }
    fn resolve_list(vocab: &Vocabulary, lists: &[Vec<String>], field: &str, errs: &mut Vec<String>) -> Vec<Prompt> {
        lists
            .iter()
            .enumerate()
            .filter_map(|(i, names)| resolve(vocab, names, &format!("{field}[{i}]"), errs))
            .collect()
    }

    let pretrain_prompts = resolve_list(&vocab, &raw.pretrain.prompts, "pretrain.prompts", &mut errs);
    let target = resolve(&vocab, &ab.target, "ablation.target", &mut errs);
    let anchor = resolve(&vocab, &ab.anchor, "ablation.anchor", &mut errs);
    let surrounding = resolve_list(&vocab, ev.surrounding.as_deref().unwrap_or(&[]), "eval.surrounding", &mut errs);
    let far = resolve_list(&vocab, ev.far.as_deref().unwrap_or(&[]), "eval.far", &mut errs);
    let synonyms = resolve_list(&vocab, ev.synonyms.as_deref().unwrap_or(&[]), "eval.synonyms", &mut errs);
    let explicit_candidates = ev
        .candidates
        .as_ref()
        .map(|lists| resolve_list(&vocab, lists, "eval.candidates", &mut errs));

    let trademark = match (&ev.trademark, variant) {
        (Some(raw_tm), Some(AblationVariant::Trademark)) => {
            let glyph = resolve_list(&vocab, &raw_tm.glyph_candidates, "eval.trademark.glyph_candidates", &mut errs);
            let object = resolve_list(&vocab, &raw_tm.object_candidates, "eval.trademark.object_candidates", &mut errs);
            Some(TrademarkSpec { glyph_candidates: glyph, object_candidates: object })
        }
        (Some(_), _) => {
            errs.push("eval.trademark: only valid for the trademark variant".into());
            None
        }
        (None, Some(AblationVariant::Trademark)) => {
            errs.push("eval.trademark: required for the trademark variant".into());
            None
        }
        (None, _) => None,
    };

    let (Some(target), Some(anchor), Some(variant), Some(scope), Some(&method)) =
        (target, anchor, variant, scope, methods.first())
    else {
        return Err(config_error(path, errs));
    };

    let candidates = explicit_candidates.unwrap_or_else(|| {
        let mut c = vec![target.clone(), anchor.clone()];
        c.extend(surrounding.iter().cloned());
        c.extend(far.iter().cloned());
        c
    });
    for (p, field) in [(&target, "ablation.target"), (&anchor, "ablation.anchor")]
        .into_iter()
        .chain(surrounding.iter().map(|p| (p, "eval.surrounding")))
        .chain(far.iter().map(|p| (p, "eval.far")))
    {
        if !candidates.contains(p) {
            errs.push(format!("eval.candidates: missing evaluation concept '{}' from {field}", vocab.prompt_label(p)));
        }
    }
    let mut seen: Vec<&Prompt> = Vec::new();
    for p in std::iter::once(&target)
        .chain(std::iter::once(&anchor))
        .chain(surrounding.iter())
        .chain(far.iter())
    {
        if seen.contains(&p) {
            errs.push(format!("eval: concept '{}' is listed more than once", vocab.prompt_label(p)));
        }
        seen.push(p);
    }
    if let Some(tm) = &trademark {
        for (set, field) in [
            (&tm.glyph_candidates, "eval.trademark.glyph_candidates"),
            (&tm.object_candidates, "eval.trademark.object_candidates"),
        ] {
            if !set.contains(&target) {
                errs.push(format!("{field}: must contain the target prompt"));
            }
            if set.len() < 2 {
                errs.push(format!("{field}: need at least two candidates"));
            }
        }
    }

    let lr = ab.lr.unwrap_or_else(|| default_lr(scope));
    let defaults = AugmentationConfig::default();
    let augmentation = AugmentationConfig {
        enabled: ab.augment.unwrap_or(defaults.enabled),
        jitter: ab.jitter.unwrap_or(defaults.jitter),
        rescale: ab.rescale.unwrap_or(defaults.rescale),
    };

    let ablation = AblationConfig {
        variant,
        method,
        target,
        anchor,
        scope,
        augmentation,
        steps: ab.steps,
        batch_size: ab.batch_size.unwrap_or(DEFAULT_ABLATION_BATCH),
        prompt_pairs: ab.prompt_pairs.unwrap_or(DEFAULT_PROMPT_PAIRS),
        probe_interval: ab.probe_interval.unwrap_or(DEFAULT_PROBE_INTERVAL),
        probe_samples: ab.probe_samples.unwrap_or(DEFAULT_PROBE_SAMPLES),
        hyper: AdamHyper::with_lr(lr),
        seed: raw.seed.unwrap_or(0),
        fixed_anchor_pool: ab.fixed_anchor_pool.unwrap_or(false),
    };
    if let Err(e) = ablation.validate(&vocab) {
        errs.push(format!("ablation: {e}"));
    }

    let arch = Architecture {
        data_dim: vocab.d_obj + vocab.d_tm,
        embed_dim: raw.arch.as_ref().and_then(|a| a.embed_dim).unwrap_or(ablate_core::diffusion::model::DEFAULT_EMBED_DIM),
        attn_dim: raw.arch.as_ref().and_then(|a| a.attn_dim).unwrap_or(ablate_core::diffusion::model::DEFAULT_ATTN_DIM),
        hidden_dim: raw.arch.as_ref().and_then(|a| a.hidden_dim).unwrap_or(ablate_core::diffusion::model::DEFAULT_HIDDEN_DIM),
        time_freqs: raw.arch.as_ref().and_then(|a| a.time_freqs).unwrap_or(ablate_core::diffusion::model::DEFAULT_TIME_FREQS),
        vocab_size: vocab.len(),
    };
    if let Err(e) = arch.validate() {
        errs.push(format!("arch: {e}"));
    }

    if !errs.is_empty() {
        return Err(config_error(path, errs));
    }

    Ok(ExperimentConfig {
        seed: raw.seed.unwrap(),
        out_dir: raw.out_dir.as_ref().map(|d| resolve_path(base_dir, d)),
        vocab_path,
        vocab_text,
        vocab,
        timesteps,
        beta_min,
        beta_max,
        arch,
        pretrain: PretrainPlan {
            steps: raw.pretrain.steps,
            batch_size: raw.pretrain.batch_size.unwrap_or(DEFAULT_PRETRAIN_BATCH),
            lr: raw.pretrain.lr.unwrap_or(DEFAULT_PRETRAIN_LR),
            prompts: pretrain_prompts,
        },
        methods,
        ablation,
        eval: EvalPlan { n: eval_n, surrounding, far, synonyms, candidates, trademark },
    })
}

fn resolve_path(base: &Path, p: &str) -> PathBuf {
    let pb = PathBuf::from(p);
    if pb.is_absolute() {
        pb
    } else {
        base.join(pb)
    }
}

fn config_error(path: &Path, errs: Vec<String>) -> anyhow::Error {
    let mut msg = format!("invalid config {}:", path.display());
    for e in errs {
        msg.push_str("\n  - ");
        msg.push_str(&e);
    }
    anyhow!(msg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recipe(name: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes").join(name)
    }

    #[test]
    fn parses_every_shipped_recipe() {
        for name in ["instance.toml", "style.toml", "memorization.toml", "trademark.toml"] {
            let cfg = parse_config(&recipe(name)).unwrap_or_else(|e| panic!("{name}: {e:#}"));
            assert_eq!(cfg.seed, 17);
            assert_eq!(cfg.arch.data_dim, 6);
            assert_eq!(cfg.arch.vocab_size, 16);
            assert!(cfg.eval.candidates.contains(&cfg.ablation.target));
            assert!(cfg.eval.candidates.contains(&cfg.ablation.anchor));
        }
    }

    #[test]
    fn recipe_defaults_are_filled() {
        let cfg = parse_config(&recipe("instance.toml")).unwrap();
        assert_eq!(cfg.methods.len(), 2);
        assert_eq!(cfg.timesteps, DEFAULT_TIMESTEPS);
        assert_eq!(cfg.ablation.hyper.lr, 5e-4);
        assert!(cfg.ablation.augmentation.enabled);
        assert_eq!(cfg.eval.n, 500);
        assert_eq!(cfg.eval.candidates.len(), 8);

        let tm = parse_config(&recipe("trademark.toml")).unwrap();
        assert!(!tm.ablation.augmentation.enabled);
        assert_eq!(tm.ablation.hyper.lr, 1e-4);
        assert!(tm.eval.trademark.is_some());
    }

    #[test]
    fn missing_seed_is_rejected() {
        let err = parse_config(&recipe("malformed/missing_seed.toml")).unwrap_err();
        assert!(err.to_string().contains("seed: missing"), "got: {err}");
    }

    #[test]
    fn unknown_token_is_rejected_naming_the_field() {
        let err = parse_config(&recipe("malformed/unknown_token.toml")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("ablation.target"), "got: {msg}");
        assert!(msg.contains("grumpy"), "got: {msg}");
    }

    #[test]
    fn bad_counts_are_all_reported_at_once() {
        let err = parse_config(&recipe("malformed/bad_counts.toml")).unwrap_err();
        let msg = err.to_string();
        for want in ["pretrain.steps", "ablation.probe_interval", "eval.n"] {
            assert!(msg.contains(want), "missing `{want}` in: {msg}");
        }
    }

    #[test]
    fn seed_override_moves_both_copies_and_the_hash() {
        let mut cfg = parse_config(&recipe("instance.toml")).unwrap();
        let h17 = cfg.config_hash();
        let p17 = cfg.pretrain_hash();
        cfg.set_seed(99);
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.ablation.seed, 99);
        assert_ne!(cfg.config_hash(), h17);
        assert_ne!(cfg.pretrain_hash(), p17);
    }

    #[test]
    fn pretrain_hash_ignores_eval_plan() {
        let mut cfg = parse_config(&recipe("instance.toml")).unwrap();
        let p = cfg.pretrain_hash();
        let h = cfg.config_hash();
        cfg.eval.n = 200;
        assert_eq!(cfg.pretrain_hash(), p);
        assert_ne!(cfg.config_hash(), h);
    }

    #[test]
    fn probe_spec_points_at_the_target() {
        let cfg = parse_config(&recipe("instance.toml")).unwrap();
        let probe = cfg.probe_spec();
        assert_eq!(probe.candidates[probe.target_index], cfg.ablation.target);
        assert_eq!(probe.prompt, cfg.ablation.target);
        assert_eq!(probe.samples, 150);
    }
}
