pub mod model;
pub mod sample;
pub mod schedule;
pub mod train;

pub use model::{names, time_features, Architecture, Denoiser};
pub use sample::ddpm_sample;
pub use schedule::{NoiseSchedule, DEFAULT_BETA_MAX, DEFAULT_BETA_MIN, DEFAULT_TIMESTEPS};
pub use train::{denoising_loss_grads, train_step_standard};
