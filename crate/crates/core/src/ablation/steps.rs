use crate::diffusion::model::Denoiser;
use crate::diffusion::schedule::NoiseSchedule;
use crate::diffusion::train::denoising_loss_grads;
use crate::error::{Error, Result};
use crate::numerics::adam::AdamState;
use crate::numerics::tape::Tape;
use crate::numerics::tensor::Tensor;
use rand::Rng;
use std::collections::BTreeMap;

/// Noise-based removal loss at a fixed (t, eps): the plain denoising
/// objective, but pairing anchor-distribution points with the target
/// prompt, w_t * mean((eps - prediction(x_t, target, t))^2). Driving the
/// target prompt toward explaining anchor data overwrites what it
/// generates.
pub fn noise_removal_loss_grads(
    model: &Denoiser,
    anchor_batch: &Tensor,
    target_prompt: &[usize],
    t: usize,
    eps: &Tensor,
    sched: &NoiseSchedule,
) -> Result<(f64, BTreeMap<String, Tensor>)> {
    denoising_loss_grads(model, anchor_batch, target_prompt, t, eps, sched)
}

/// Model-based removal loss at a fixed (t, eps):
/// w_t * mean((stopgrad(prediction(x_t, anchor, t)) - prediction(x_t, target, t))^2)
/// with x_t noised from the anchor batch. The anchor branch runs on the
/// live parameters but contributes no gradient, so the target prompt is
/// pulled toward whatever the model currently predicts for the anchor.
pub fn model_removal_loss_grads(
    model: &Denoiser,
    anchor_prompt: &[usize],
    target_prompt: &[usize],
    anchor_batch: &Tensor,
    t: usize,
    eps: &Tensor,
    sched: &NoiseSchedule,
) -> Result<(f64, BTreeMap<String, Tensor>)> {
    let x_t = sched.forward_noise(anchor_batch, t, eps)?;
    let mut tape = Tape::new();
    let x_node = tape.constant(x_t);
    let anchor_pred = model.predict_on(&mut tape, x_node, anchor_prompt, t, sched.len())?;
    let anchor_ref = tape.stop_grad(anchor_pred);
    let target_pred = model.predict_on(&mut tape, x_node, target_prompt, t, sched.len())?;
    let diff = tape.sub(anchor_ref, target_pred)?;
    let msq = tape.mean_sq(diff);
    let loss = tape.scale(msq, sched.w[t]);
    let value = tape.value(loss).data()[0];
    if !value.is_finite() {
        return Err(Error::NonFinite { op: "model_removal_loss" });
    }
    let grads = tape.backward(loss)?;
    Ok((value, grads))
}

/// Reference value for the model-based loss with the anchor branch served
/// by an explicit frozen snapshot instead of a stop-gradient. Exists as an
/// independent oracle: at step 0 (snapshot == live parameters) it must
/// equal the live loss bit for bit.
pub fn frozen_reference_loss(
    model: &Denoiser,
    frozen: &Denoiser,
    anchor_prompt: &[usize],
    target_prompt: &[usize],
    anchor_batch: &Tensor,
    t: usize,
    eps: &Tensor,
    sched: &NoiseSchedule,
) -> Result<f64> {
    if model.arch != frozen.arch {
        return Err(Error::bad_input("frozen_reference", "snapshot architecture differs from the live model"));
    }
    let x_t = sched.forward_noise(anchor_batch, t, eps)?;
    let anchor_pred = frozen.predict_eps(&x_t, anchor_prompt, t, sched.len())?;
    let mut tape = Tape::new();
    let x_node = tape.constant(x_t);
    let anchor_node = tape.constant(anchor_pred);
    let target_pred = model.predict_on(&mut tape, x_node, target_prompt, t, sched.len())?;
    let diff = tape.sub(anchor_node, target_pred)?;
    let msq = tape.mean_sq(diff);
    let loss = tape.scale(msq, sched.w[t]);
    let value = tape.value(loss).data()[0];
    if !value.is_finite() {
        return Err(Error::NonFinite { op: "frozen_reference" });
    }
    Ok(value)
}

fn check_batch(op: &'static str, model: &Denoiser, batch: &Tensor) -> Result<()> {
    if batch.rank() != 2 || batch.rows() == 0 || batch.cols() != model.arch.data_dim {
        return Err(Error::bad_input(op, format!("batch must be (n, {}), got {:?}", model.arch.data_dim, batch.shape())));
    }
    Ok(())
}

/// One noise-based update: uniform timestep, fresh noise, Adam on the
/// trainable mask. Returns the loss before the update.
pub fn noise_ablation_step(
    model: &mut Denoiser,
    opt: &mut AdamState,
    anchor_batch: &Tensor,
    target_prompt: &[usize],
    sched: &NoiseSchedule,
    rng: &mut impl Rng,
) -> Result<f64> {
    check_batch("noise_ablation_step", model, anchor_batch)?;
    let t = rng.random_range(0..sched.len());
    let eps = Tensor::randn(anchor_batch.shape(), rng);
    let (loss, grads) = noise_removal_loss_grads(model, anchor_batch, target_prompt, t, &eps, sched)?;
    model.params.zero_grads();
    model.params.accumulate_grads(&grads)?;
    opt.apply(&mut model.params)?;
    Ok(loss)
}

/// One model-based update, same drawing discipline as the noise-based
/// step so paired runs see identical (t, eps) streams.
pub fn model_ablation_step(
    model: &mut Denoiser,
    opt: &mut AdamState,
    anchor_prompt: &[usize],
    target_prompt: &[usize],
    anchor_batch: &Tensor,
    sched: &NoiseSchedule,
    rng: &mut impl Rng,
) -> Result<f64> {
    check_batch("model_ablation_step", model, anchor_batch)?;
    let t = rng.random_range(0..sched.len());
    let eps = Tensor::randn(anchor_batch.shape(), rng);
    let (loss, grads) =
        model_removal_loss_grads(model, anchor_prompt, target_prompt, anchor_batch, t, &eps, sched)?;
    model.params.zero_grads();
    model.params.accumulate_grads(&grads)?;
    opt.apply(&mut model.params)?;
    Ok(loss)
}
