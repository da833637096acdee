//! Small conditional denoising models over synthetic concept universes,
//! plus targeted removal of individual concepts from a trained model and
//! the measurement tooling to judge how well the removal worked.

pub mod error;
pub mod numerics;
pub mod seeding;

pub mod ablation;
pub mod concepts;
pub mod diffusion;
pub mod eval;

pub use error::{Error, Result};
