use crate::error::{Error, Result};
use crate::numerics::tensor::Tensor;

pub const DEFAULT_TIMESTEPS: usize = 100;
pub const DEFAULT_BETA_MIN: f64 = 1e-4;
pub const DEFAULT_BETA_MAX: f64 = 0.02;

/// Linear variance schedule with its derived quantities.
///
/// beta[t] ramps linearly from beta_min to beta_max, alpha_bar[t] is the
/// running product of (1 - beta), and posterior_sigma[t] is the standard
/// deviation of the reverse-step posterior,
/// sqrt(beta_t * (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t)), which is 0 at
/// t = 0. Loss weights w[t] are kept explicit even though they are all 1,
/// so reweighted variants stay a schedule-level change.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    pub beta: Vec<f64>,
    pub alpha_bar: Vec<f64>,
    pub posterior_sigma: Vec<f64>,
    pub w: Vec<f64>,
}

impl NoiseSchedule {
    pub fn build(timesteps: usize, beta_min: f64, beta_max: f64) -> Result<NoiseSchedule> {
        if timesteps == 0 {
            return Err(Error::bad_input("schedule", "timesteps must be positive"));
        }
        if !(beta_min > 0.0) || !(beta_max < 1.0) || beta_min > beta_max {
            return Err(Error::bad_input(
                "schedule",
                format!("need 0 < beta_min <= beta_max < 1, got [{beta_min}, {beta_max}]"),
            ));
        }
        let mut beta = Vec::with_capacity(timesteps);
        for t in 0..timesteps {
            let frac = if timesteps == 1 {
                0.0
            } else {
                t as f64 / (timesteps - 1) as f64
            };
            beta.push(beta_min + frac * (beta_max - beta_min));
        }
        let mut alpha_bar = Vec::with_capacity(timesteps);
        let mut prod = 1.0;
        for &b in &beta {
            prod *= 1.0 - b;
            alpha_bar.push(prod);
        }
        let mut posterior_sigma = Vec::with_capacity(timesteps);
        for t in 0..timesteps {
            let prev = if t == 0 { 1.0 } else { alpha_bar[t - 1] };
            let var = beta[t] * (1.0 - prev) / (1.0 - alpha_bar[t]);
            posterior_sigma.push(var.sqrt());
        }
        Ok(NoiseSchedule {
            w: vec![1.0; timesteps],
            beta,
            alpha_bar,
            posterior_sigma,
        })
    }

    pub fn default_schedule() -> NoiseSchedule {
        NoiseSchedule::build(DEFAULT_TIMESTEPS, DEFAULT_BETA_MIN, DEFAULT_BETA_MAX)
            .expect("default schedule parameters are valid")
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    fn check_t(&self, t: usize) -> Result<()> {
        if t >= self.len() {
            return Err(Error::bad_input(
                "schedule",
                format!("timestep {t} out of range for {} steps", self.len()),
            ));
        }
        Ok(())
    }

    /// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
    pub fn forward_noise(&self, x0: &Tensor, t: usize, eps: &Tensor) -> Result<Tensor> {
        self.check_t(t)?;
        if x0.shape() != eps.shape() {
            return Err(Error::ShapeMismatch {
                op: "forward_noise",
                lhs: x0.shape().to_vec(),
                rhs: eps.shape().to_vec(),
            });
        }
        let a = self.alpha_bar[t].sqrt();
        let s = (1.0 - self.alpha_bar[t]).sqrt();
        let data = x0
            .data()
            .iter()
            .zip(eps.data())
            .map(|(x, e)| a * x + s * e)
            .collect();
        Tensor::from_vec(x0.shape(), data)
    }

    /// Posterior mean of x_{t-1} given x_t and predicted noise:
    /// (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(1 - beta_t).
    pub fn posterior_mean(&self, x_t: &Tensor, t: usize, eps_hat: &Tensor) -> Result<Tensor> {
        self.check_t(t)?;
        if x_t.shape() != eps_hat.shape() {
            return Err(Error::ShapeMismatch {
                op: "posterior_mean",
                lhs: x_t.shape().to_vec(),
                rhs: eps_hat.shape().to_vec(),
            });
        }
        let coef = self.beta[t] / (1.0 - self.alpha_bar[t]).sqrt();
        let inv = 1.0 / (1.0 - self.beta[t]).sqrt();
        let data = x_t
            .data()
            .iter()
            .zip(eps_hat.data())
            .map(|(x, e)| (x - coef * e) * inv)
            .collect();
        Tensor::from_vec(x_t.shape(), data)
    }
}
