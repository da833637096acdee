use crate::error::{Error, Result};
use crate::numerics::tensor::Tensor;
use rand::Rng;
use rand_distr::StandardNormal;

/// Batch augmentation: additive jitter then a per-sample rescale,
/// (x + jitter * z) * s with s uniform in [rescale.0, rescale.1].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AugmentationConfig {
    pub enabled: bool,
    pub jitter: f64,
    pub rescale: (f64, f64),
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        AugmentationConfig {
            enabled: true,
            jitter: 0.05,
            rescale: (0.95, 1.05),
        }
    }
}

impl AugmentationConfig {
    pub fn disabled() -> Self {
        AugmentationConfig {
            enabled: false,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.jitter >= 0.0) {
            return Err(Error::bad_input("augment", format!("jitter must be >= 0, got {}", self.jitter)));
        }
        let (lo, hi) = self.rescale;
        if !(lo > 0.0 && lo <= 1.0 && hi >= 1.0 && lo <= hi) {
            return Err(Error::bad_input(
                "augment",
                format!("rescale range must satisfy 0 < lo <= 1 <= hi, got [{lo}, {hi}]"),
            ));
        }
        Ok(())
    }
}

/// Disabled augmentation returns the batch bit-for-bit and consumes no
/// randomness. Enabled augmentation draws, per sample, the jitter vector
/// and then one scale factor.
pub fn augment(batch: &Tensor, cfg: &AugmentationConfig, rng: &mut impl Rng) -> Result<Tensor> {
    cfg.validate()?;
    if batch.rank() != 2 {
        return Err(Error::bad_input("augment", format!("batch must be rank 2, got {:?}", batch.shape())));
    }
    if !cfg.enabled {
        return Ok(batch.clone());
    }
    let (n, d) = (batch.rows(), batch.cols());
    let (lo, hi) = cfg.rescale;
    let mut out = batch.clone();
    for i in 0..n {
        let row = &mut out.data_mut()[i * d..(i + 1) * d];
        for v in row.iter_mut() {
            *v += cfg.jitter * rng.sample::<f64, _>(StandardNormal);
        }
        let s = if lo == hi { lo } else { rng.random_range(lo..=hi) };
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    Ok(out)
}
