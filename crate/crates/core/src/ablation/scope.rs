use crate::diffusion::model::{names, Denoiser};
use crate::error::{Error, Result};

/// Which slice of the model a removal run is allowed to move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinetuneScope {
    /// Key/value projections of the conditioning read, nothing else.
    CrossAttention,
    /// The token embedding table, nothing else.
    Embedding,
    /// Every parameter.
    Full,
}

impl FinetuneScope {
    pub fn param_names(&self, model: &Denoiser) -> Vec<String> {
        match self {
            FinetuneScope::CrossAttention => {
                vec![names::ATTN_WK.to_string(), names::ATTN_WV.to_string()]
            }
            FinetuneScope::Embedding => vec![names::EMBED_TABLE.to_string()],
            FinetuneScope::Full => model.params.names().map(str::to_string).collect(),
        }
    }
}

impl std::fmt::Display for FinetuneScope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FinetuneScope::CrossAttention => "cross_attention",
            FinetuneScope::Embedding => "embedding",
            FinetuneScope::Full => "full",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for FinetuneScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross_attention" => Ok(FinetuneScope::CrossAttention),
            "embedding" => Ok(FinetuneScope::Embedding),
            "full" => Ok(FinetuneScope::Full),
            other => Err(Error::Config(format!(
                "unknown scope `{other}` (expected cross_attention, embedding, or full)"
            ))),
        }
    }
}

/// Sets the model's trainable mask to exactly the scope's parameters.
pub fn select_trainable(model: &mut Denoiser, scope: FinetuneScope) -> Result<()> {
    let names = scope.param_names(model);
    model.params.set_trainable(names.iter().map(String::as_str))
}
