use crate::diffusion::model::Denoiser;
use crate::diffusion::schedule::NoiseSchedule;
use crate::error::{Error, Result};
use crate::numerics::tensor::Tensor;
use rand::Rng;

/// Ancestral sampling from pure noise down to t = 0, conditioned on one
/// prompt. Randomness is consumed in a fixed order (initial batch, then
/// one noise batch per step except the last), so a cloned rng reproduces
/// the batch exactly.
pub fn ddpm_sample(
    model: &Denoiser,
    prompt_ids: &[usize],
    sched: &NoiseSchedule,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Tensor> {
    if n == 0 {
        return Err(Error::bad_input("sample", "batch size must be positive"));
    }
    let d = model.arch.data_dim;
    let mut x = Tensor::randn(&[n, d], rng);
    for t in (0..sched.len()).rev() {
        let eps_hat = model.predict_eps(&x, prompt_ids, t, sched.len())?;
        let mut mean = sched.posterior_mean(&x, t, &eps_hat)?;
        if t > 0 {
            let z = Tensor::randn(&[n, d], rng);
            let sigma = sched.posterior_sigma[t];
            for (m, zv) in mean.data_mut().iter_mut().zip(z.data()) {
                *m += sigma * zv;
            }
        }
        if !mean.is_finite() {
            return Err(Error::NonFinite { op: "sample" });
        }
        x = mean;
    }
    Ok(x)
}
