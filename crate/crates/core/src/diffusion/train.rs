use crate::diffusion::model::Denoiser;
use crate::diffusion::schedule::NoiseSchedule;
use crate::error::{Error, Result};
use crate::numerics::adam::AdamState;
use crate::numerics::tape::Tape;
use crate::numerics::tensor::Tensor;
use rand::Rng;
use std::collections::BTreeMap;

/// Weighted denoising loss and its gradients at a fixed (t, eps) draw:
/// w_t * mean((eps - prediction(x_t, prompt, t))^2) with
/// x_t = forward_noise(x0, t, eps). Pure in the parameters, so it doubles
/// as the closure body for gradient checking.
pub fn denoising_loss_grads(
    model: &Denoiser,
    x0: &Tensor,
    prompt_ids: &[usize],
    t: usize,
    eps: &Tensor,
    sched: &NoiseSchedule,
) -> Result<(f64, BTreeMap<String, Tensor>)> {
    let x_t = sched.forward_noise(x0, t, eps)?;
    let mut tape = Tape::new();
    let x_node = tape.constant(x_t);
    let eps_node = tape.constant(eps.clone());
    let pred = model.predict_on(&mut tape, x_node, prompt_ids, t, sched.len())?;
    let diff = tape.sub(eps_node, pred)?;
    let msq = tape.mean_sq(diff);
    let loss = tape.scale(msq, sched.w[t]);
    let value = tape.value(loss).data()[0];
    if !value.is_finite() {
        return Err(Error::NonFinite { op: "denoising_loss" });
    }
    let grads = tape.backward(loss)?;
    Ok((value, grads))
}

/// One standard training step: draws a uniform timestep and fresh noise,
/// then applies a bias-corrected update to the trainable parameters.
/// Returns the loss before the update.
pub fn train_step_standard(
    model: &mut Denoiser,
    opt: &mut AdamState,
    x0: &Tensor,
    prompt_ids: &[usize],
    sched: &NoiseSchedule,
    rng: &mut impl Rng,
) -> Result<f64> {
    if x0.rank() != 2 || x0.rows() == 0 {
        return Err(Error::bad_input("train_step", format!("batch must be non-empty rank 2, got {:?}", x0.shape())));
    }
    let t = rng.random_range(0..sched.len());
    let eps = Tensor::randn(x0.shape(), rng);
    let (loss, grads) = denoising_loss_grads(model, x0, prompt_ids, t, &eps, sched)?;
    model.params.zero_grads();
    model.params.accumulate_grads(&grads)?;
    opt.apply(&mut model.params)?;
    Ok(loss)
}
