pub mod config;
pub mod run;
pub mod scope;
pub mod steps;

pub use config::{make_trademark_config, AblationConfig, AblationMethod, AblationVariant};
pub use run::{run_ablation, ProbeSpec, StepRecord, TrainingLog};
pub use scope::{select_trainable, FinetuneScope};
pub use steps::{
    frozen_reference_loss, model_ablation_step, model_removal_loss_grads, noise_ablation_step,
    noise_removal_loss_grads,
};
