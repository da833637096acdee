use serde::{Deserialize, Serialize};

use crate::ablation::TrainingLog;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodVerdict {
    Tie,
    ModelBasedDominates,
    Inconclusive,
}

/// Target alignment of both methods at one probe step. delta < 0 means
/// the model-based method had removed more by this step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbePointPair {
    pub step: usize,
    pub noise: f64,
    pub model: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodComparison {
    pub points: Vec<ProbePointPair>,
    pub model_not_worse_share: f64,
    pub verdict: MethodVerdict,
}

/// Compares probe trajectories of a noise-based and a model-based run.
/// The runs must come from configs differing only in method, probed on
/// the same step grid; anything else is not a like-for-like comparison.
pub fn compare_methods(log_noise: &TrainingLog, log_model: &TrainingLog) -> Result<MethodComparison> {
    let pts_noise = log_noise.probe_points();
    let pts_model = log_model.probe_points();
    if pts_noise.is_empty() || pts_model.is_empty() {
        return Err(Error::bad_input("compare_methods", "a log has no probe points"));
    }
    let grid_noise: Vec<usize> = pts_noise.iter().map(|&(s, _)| s).collect();
    let grid_model: Vec<usize> = pts_model.iter().map(|&(s, _)| s).collect();
    if grid_noise != grid_model {
        return Err(Error::bad_input(
            "compare_methods",
            format!("probe grids differ ({grid_noise:?} vs {grid_model:?}); runs are not comparable"),
        ));
    }

    let points: Vec<ProbePointPair> = pts_noise
        .iter()
        .zip(&pts_model)
        .map(|(&(step, noise), &(_, model))| ProbePointPair { step, noise, model, delta: model - noise })
        .collect();
    let not_worse = points.iter().filter(|p| p.model <= p.noise).count();
    let model_not_worse_share = not_worse as f64 / points.len() as f64;
    let verdict = if points.iter().all(|p| p.delta == 0.0) {
        MethodVerdict::Tie
    } else if 3 * not_worse >= 2 * points.len() {
        MethodVerdict::ModelBasedDominates
    } else {
        MethodVerdict::Inconclusive
    };
    Ok(MethodComparison { points, model_not_worse_share, verdict })
}
