use crate::ablation::scope::FinetuneScope;
use crate::concepts::augment::AugmentationConfig;
use crate::concepts::prompt::Prompt;
use crate::concepts::vocab::{TokenKind, Vocabulary};
use crate::error::{Error, Result};
use crate::numerics::adam::AdamHyper;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationVariant {
    Instance,
    Style,
    Memorization,
    Trademark,
}

impl std::fmt::Display for AblationVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AblationVariant::Instance => "instance",
            AblationVariant::Style => "style",
            AblationVariant::Memorization => "memorization",
            AblationVariant::Trademark => "trademark",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMethod {
    NoiseBased,
    ModelBased,
}

impl std::fmt::Display for AblationMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AblationMethod::NoiseBased => "noise_based",
            AblationMethod::ModelBased => "model_based",
        };
        f.write_str(s)
    }
}

/// Everything one removal run needs besides the model and vocabulary.
#[derive(Debug, Clone)]
pub struct AblationConfig {
    pub variant: AblationVariant,
    pub method: AblationMethod,
    pub target: Prompt,
    pub anchor: Prompt,
    pub scope: FinetuneScope,
    pub augmentation: AugmentationConfig,
    pub steps: usize,
    pub batch_size: usize,
    /// Composed target/anchor pairs to cycle through.
    pub prompt_pairs: usize,
    pub probe_interval: usize,
    pub probe_samples: usize,
    pub hyper: AdamHyper,
    pub seed: u64,
    /// Draw each pair's anchor batch once up front and reuse it, instead
    /// of the default fresh draw per step.
    pub fixed_anchor_pool: bool,
}

impl AblationConfig {
    pub fn validate(&self, vocab: &Vocabulary) -> Result<()> {
        vocab.validate_prompt(&self.target)?;
        vocab.validate_prompt(&self.anchor)?;
        if self.target == self.anchor {
            return Err(Error::Config("target and anchor prompts are identical".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.prompt_pairs == 0 {
            return Err(Error::Config("prompt_pairs must be positive".into()));
        }
        if self.probe_interval == 0 {
            return Err(Error::Config("probe_interval must be positive".into()));
        }
        if self.probe_samples == 0 {
            return Err(Error::Config("probe_samples must be positive".into()));
        }
        self.hyper.validate()?;
        self.augmentation.validate()?;

        match self.variant {
            AblationVariant::Trademark => {
                if self.scope != FinetuneScope::Full {
                    return Err(Error::Config("trademark variant requires scope = full".into()));
                }
                if self.augmentation.enabled {
                    return Err(Error::Config("trademark variant requires augmentation off".into()));
                }
                if !prompt_has_trademark(vocab, &self.target)? {
                    return Err(Error::Config("trademark variant needs a trademark token in the target prompt".into()));
                }
                if !prompt_has_generic_trademark(vocab, &self.anchor)? {
                    return Err(Error::Config(
                        "trademark variant needs a generic trademark token in the anchor prompt".into(),
                    ));
                }
            }
            AblationVariant::Memorization => {
                if !prompt_has_memorized(vocab, &self.target)? {
                    return Err(Error::Config("memorization variant needs a memorized token in the target prompt".into()));
                }
            }
            AblationVariant::Instance | AblationVariant::Style => {}
        }
        Ok(())
    }
}

fn prompt_has_trademark(vocab: &Vocabulary, p: &Prompt) -> Result<bool> {
    for &id in p.ids() {
        let (_, tok) = vocab.resolve(id)?;
        if matches!(tok.kind, TokenKind::Trademark { .. }) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn prompt_has_generic_trademark(vocab: &Vocabulary, p: &Prompt) -> Result<bool> {
    for &id in p.ids() {
        let (_, tok) = vocab.resolve(id)?;
        if let TokenKind::Generic { members } = &tok.kind {
            if matches!(vocab.token(members[0])?.kind, TokenKind::Trademark { .. }) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

fn prompt_has_memorized(vocab: &Vocabulary, p: &Prompt) -> Result<bool> {
    for &id in p.ids() {
        let (_, tok) = vocab.resolve(id)?;
        if matches!(tok.kind, TokenKind::Memorized { .. }) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Derives the trademark-removal run from its base instance config:
/// scope forced to full, augmentation off, the anchor rebuilt as the
/// target prompt with its trademark token swapped for the vocabulary's
/// generic trademark token, and steps, seed, and optimizer settings
/// carried over unchanged.
pub fn make_trademark_config(base: &AblationConfig, vocab: &Vocabulary) -> Result<AblationConfig> {
    if base.variant != AblationVariant::Instance {
        return Err(Error::Config(format!(
            "trademark config derives from an instance base, got variant `{}`",
            base.variant
        )));
    }

    let mut generic = None;
    for id in 0..vocab.len() {
        if let TokenKind::Generic { members } = &vocab.token(id)?.kind {
            if matches!(vocab.token(members[0])?.kind, TokenKind::Trademark { .. }) {
                if generic.is_some() {
                    return Err(Error::Config("vocabulary has more than one generic trademark token".into()));
                }
                generic = Some(id);
            }
        }
    }
    let generic =
        generic.ok_or_else(|| Error::Config("vocabulary has no generic trademark token to anchor on".into()))?;

    let mut anchor_ids = Vec::with_capacity(base.target.len());
    let mut swapped = false;
    for &id in base.target.ids() {
        let (_, tok) = vocab.resolve(id)?;
        if matches!(tok.kind, TokenKind::Trademark { .. }) {
            anchor_ids.push(generic);
            swapped = true;
        } else {
            anchor_ids.push(id);
        }
    }
    if !swapped {
        return Err(Error::Config("base target prompt has no trademark token to replace".into()));
    }

    let cfg = AblationConfig {
        variant: AblationVariant::Trademark,
        scope: FinetuneScope::Full,
        augmentation: AugmentationConfig {
            enabled: false,
            ..base.augmentation
        },
        anchor: Prompt::new(anchor_ids)?,
        ..base.clone()
    };
    cfg.validate(vocab)?;
    Ok(cfg)
}
