use crate::error::{Error, Result};
use crate::numerics::params::ParamSet;
use crate::numerics::tensor::Tensor;
use std::collections::BTreeMap;

/// Central-difference step. Small enough for ~1e-9 truncation error on
/// tanh-smooth losses, large enough to stay clear of cancellation noise.
pub const FD_STEP: f64 = 1e-5;

/// Relative-error floor so near-zero gradients compare cleanly.
pub const FD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Worst relative error over all trainable entries.
    pub max_rel_err: f64,
    /// Parameter and flat index where the worst error occurred.
    pub worst: Option<(String, usize)>,
    /// Entries checked in total.
    pub entries: usize,
}

/// Compares the analytic gradient of `f` against central finite
/// differences at every trainable entry of `params`. `f` must be a pure
/// function of the parameter values: it returns the loss and its analytic
/// gradients, and must not mutate shared state.
pub fn grad_check<F>(f: F, params: &ParamSet, step: f64) -> Result<GradCheckReport>
where
    F: Fn(&ParamSet) -> Result<(f64, BTreeMap<String, Tensor>)>,
{
    if !(step > 0.0) {
        return Err(Error::bad_input("grad_check", "step must be positive"));
    }
    let (loss, analytic) = f(params)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite { op: "grad_check" });
    }

    let mut work = params.clone();
    let mut max_rel_err: f64 = 0.0;
    let mut worst = None;
    let mut entries = 0usize;

    let names: Vec<String> = params.trainable().iter().cloned().collect();
    for name in &names {
        let n = params.get(name)?.numel();
        let ga = analytic
            .get(name)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(params.get(name).unwrap().shape()));
        for idx in 0..n {
            let orig = work.get(name)?.data()[idx];

            work.get_mut(name)?.data_mut()[idx] = orig + step;
            let (lp, _) = f(&work)?;
            work.get_mut(name)?.data_mut()[idx] = orig - step;
            let (lm, _) = f(&work)?;
            work.get_mut(name)?.data_mut()[idx] = orig;

            if !lp.is_finite() || !lm.is_finite() {
                return Err(Error::NonFinite { op: "grad_check" });
            }
            let gfd = (lp - lm) / (2.0 * step);
            let g = ga.data()[idx];
            let rel = (g - gfd).abs() / FD_FLOOR.max(g.abs() + gfd.abs());
            if rel > max_rel_err {
                max_rel_err = rel;
                worst = Some((name.clone(), idx));
            }
            entries += 1;
        }
    }

    Ok(GradCheckReport {
        max_rel_err,
        worst,
        entries,
    })
}
