//! Experiment runner: loads a TOML experiment file, pretrains a baseline
//! denoiser over a concept vocabulary, removes a target concept with one
//! or both fine-tuning methods, and writes evaluation artifacts.

pub mod checkpoint;
pub mod config;
pub mod gradcheck;
pub mod pipeline;
pub mod pretrain;
pub mod reports;
