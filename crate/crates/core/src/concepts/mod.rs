pub mod augment;
pub mod compose;
pub mod linalg;
pub mod posterior;
pub mod prompt;
pub mod sampler;
pub mod vocab;

pub use augment::{augment, AugmentationConfig};
pub use compose::compose_prompts;
pub use posterior::{candidate_dists, concept_posterior, posterior_from_dists};
pub use prompt::Prompt;
pub use sampler::{sample_ground_truth, GroundTruthSampler, ABSENCE_TAU, GLYPH_SIGMA, SIGMA_MEM};
pub use vocab::{ConceptToken, RoleBits, TokenKind, Vocabulary, STYLE_DET_TOL};
