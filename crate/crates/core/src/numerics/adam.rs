use crate::error::{Error, Result};
use crate::numerics::params::ParamSet;
use crate::numerics::tensor::Tensor;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamHyper {
    pub fn with_lr(lr: f64) -> Self {
        AdamHyper {
            lr,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if !ok {
            return Err(Error::bad_input("adam", format!("invalid hyperparameters {self:?}")));
        }
        Ok(())
    }
}

/// First/second moment buffers per parameter plus the shared step count.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub hyper: AdamHyper,
    step: u64,
    m: BTreeMap<String, Tensor>,
    v: BTreeMap<String, Tensor>,
}

impl AdamState {
    pub fn new(params: &ParamSet, hyper: AdamHyper) -> Result<AdamState> {
        hyper.validate()?;
        let mut m = BTreeMap::new();
        let mut v = BTreeMap::new();
        for (name, t) in params.iter() {
            m.insert(name.to_string(), Tensor::zeros(t.shape()));
            v.insert(name.to_string(), Tensor::zeros(t.shape()));
        }
        Ok(AdamState {
            hyper,
            step: 0,
            m,
            v,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update from the gradients currently stored in
    /// `params`. Only trainable parameters move; the rest keep their exact
    /// bit patterns, moments included.
    pub fn apply(&mut self, params: &mut ParamSet) -> Result<()> {
        self.step += 1;
        let h = self.hyper;
        let bc1 = 1.0 - h.beta1.powi(self.step as i32);
        let bc2 = 1.0 - h.beta2.powi(self.step as i32);
        let trainable: Vec<String> = params.trainable().iter().cloned().collect();
        for name in &trainable {
            let g = params.grad(name)?.clone();
            if !g.is_finite() {
                return Err(Error::NonFinite { op: "adam" });
            }
            let m = self
                .m
                .get_mut(name)
                .ok_or_else(|| Error::UnknownParam(name.clone()))?;
            let v = self
                .v
                .get_mut(name)
                .ok_or_else(|| Error::UnknownParam(name.clone()))?;
            let p = params.get_mut(name)?;
            for ((pv, gv), (mv, vv)) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()))
            {
                *mv = h.beta1 * *mv + (1.0 - h.beta1) * gv;
                *vv = h.beta2 * *vv + (1.0 - h.beta2) * gv * gv;
                let mhat = *mv / bc1;
                let vhat = *vv / bc2;
                *pv -= h.lr * mhat / (vhat.sqrt() + h.eps);
            }
        }
        Ok(())
    }
}
