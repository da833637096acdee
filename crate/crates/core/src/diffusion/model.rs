use crate::error::{Error, Result};
use crate::numerics::params::ParamSet;
use crate::numerics::tape::{NodeId, Tape};
use crate::numerics::tensor::Tensor;
use rand::Rng;

/// Canonical parameter names. Checkpoints and fine-tune scopes address
/// parameters through these, so they are part of the on-disk contract.
pub mod names {
    pub const EMBED_TABLE: &str = "embed.table";
    pub const ATTN_WK: &str = "attn.w_k";
    pub const ATTN_WV: &str = "attn.w_v";
    pub const ATTN_WQ: &str = "attn.w_q";
    pub const TRUNK_W1: &str = "trunk.w1";
    pub const TRUNK_B1: &str = "trunk.b1";
    pub const TRUNK_W2: &str = "trunk.w2";
    pub const TRUNK_B2: &str = "trunk.b2";
    pub const HEAD_W: &str = "head.w";
    pub const HEAD_B: &str = "head.b";
}

pub const DEFAULT_EMBED_DIM: usize = 16;
pub const DEFAULT_ATTN_DIM: usize = 16;
pub const DEFAULT_HIDDEN_DIM: usize = 64;
pub const DEFAULT_TIME_FREQS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Architecture {
    pub data_dim: usize,
    pub embed_dim: usize,
    pub attn_dim: usize,
    pub hidden_dim: usize,
    pub time_freqs: usize,
    pub vocab_size: usize,
}

impl Architecture {
    pub fn with_defaults(data_dim: usize, vocab_size: usize) -> Architecture {
        Architecture {
            data_dim,
            embed_dim: DEFAULT_EMBED_DIM,
            attn_dim: DEFAULT_ATTN_DIM,
            hidden_dim: DEFAULT_HIDDEN_DIM,
            time_freqs: DEFAULT_TIME_FREQS,
            vocab_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.data_dim,
            self.embed_dim,
            self.attn_dim,
            self.hidden_dim,
            self.time_freqs,
            self.vocab_size,
        ];
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::bad_input("architecture", format!("zero dimension in {self:?}")));
        }
        Ok(())
    }

    pub fn trunk_in(&self) -> usize {
        self.data_dim + 2 * self.time_freqs
    }
}

/// Sinusoidal features of normalized time u = t / timesteps:
/// [sin(pi u), cos(pi u), sin(2 pi u), cos(2 pi u), ...], doubling the
/// frequency each pair, 2 * freqs entries total.
pub fn time_features(t: usize, timesteps: usize, freqs: usize) -> Vec<f64> {
    let u = t as f64 / timesteps as f64;
    let mut out = Vec::with_capacity(2 * freqs);
    for f in 0..freqs {
        let phase = (1u64 << f) as f64 * std::f64::consts::PI * u;
        out.push(phase.sin());
        out.push(phase.cos());
    }
    out
}

/// Conditional noise predictor: a two-layer tanh trunk over the noisy
/// point plus time features, a single cross-attention read over prompt
/// token embeddings (queries from the trunk, keys/values from the
/// embeddings), and a linear head over trunk state joined with the
/// attention output.
#[derive(Debug, Clone)]
pub struct Denoiser {
    pub arch: Architecture,
    pub params: ParamSet,
}

impl Denoiser {
    /// Fresh parameters: 1/sqrt(fan_in) scaled normals for weights, unit
    /// normals for the embedding table, zeros for biases, and a small head
    /// so initial predictions sit near zero. Draw order is fixed.
    pub fn init(arch: Architecture, rng: &mut impl Rng) -> Result<Denoiser> {
        arch.validate()?;
        let mut params = ParamSet::new();
        let e_in = (arch.embed_dim as f64).sqrt();
        let h_in = (arch.hidden_dim as f64).sqrt();
        let head_in = arch.hidden_dim + arch.attn_dim;
        params.insert(names::EMBED_TABLE, Tensor::randn(&[arch.vocab_size, arch.embed_dim], rng))?;
        params.insert(names::ATTN_WK, Tensor::randn(&[arch.embed_dim, arch.attn_dim], rng).scaled(1.0 / e_in))?;
        params.insert(names::ATTN_WV, Tensor::randn(&[arch.embed_dim, arch.attn_dim], rng).scaled(1.0 / e_in))?;
        params.insert(names::ATTN_WQ, Tensor::randn(&[arch.hidden_dim, arch.attn_dim], rng).scaled(1.0 / h_in))?;
        params.insert(names::TRUNK_W1, Tensor::randn(&[arch.trunk_in(), arch.hidden_dim], rng).scaled(1.0 / (arch.trunk_in() as f64).sqrt()))?;
        params.insert(names::TRUNK_B1, Tensor::zeros(&[arch.hidden_dim]))?;
        params.insert(names::TRUNK_W2, Tensor::randn(&[arch.hidden_dim, arch.hidden_dim], rng).scaled(1.0 / h_in))?;
        params.insert(names::TRUNK_B2, Tensor::zeros(&[arch.hidden_dim]))?;
        params.insert(names::HEAD_W, Tensor::randn(&[head_in, arch.data_dim], rng).scaled(0.1 / (head_in as f64).sqrt()))?;
        params.insert(names::HEAD_B, Tensor::zeros(&[arch.data_dim]))?;
        Ok(Denoiser { arch, params })
    }

    /// Builds a denoiser around externally supplied parameters, checking
    /// every canonical name and shape.
    pub fn from_params(arch: Architecture, params: ParamSet) -> Result<Denoiser> {
        arch.validate()?;
        let expect: [(&str, Vec<usize>); 10] = [
            (names::EMBED_TABLE, vec![arch.vocab_size, arch.embed_dim]),
            (names::ATTN_WK, vec![arch.embed_dim, arch.attn_dim]),
            (names::ATTN_WV, vec![arch.embed_dim, arch.attn_dim]),
            (names::ATTN_WQ, vec![arch.hidden_dim, arch.attn_dim]),
            (names::TRUNK_W1, vec![arch.trunk_in(), arch.hidden_dim]),
            (names::TRUNK_B1, vec![arch.hidden_dim]),
            (names::TRUNK_W2, vec![arch.hidden_dim, arch.hidden_dim]),
            (names::TRUNK_B2, vec![arch.hidden_dim]),
            (names::HEAD_W, vec![arch.hidden_dim + arch.attn_dim, arch.data_dim]),
            (names::HEAD_B, vec![arch.data_dim]),
        ];
        if params.len() != expect.len() {
            return Err(Error::bad_input(
                "model",
                format!("expected {} parameters, got {}", expect.len(), params.len()),
            ));
        }
        for (name, shape) in &expect {
            let t = params.get(name)?;
            if t.shape() != shape.as_slice() {
                return Err(Error::ShapeMismatch {
                    op: "model",
                    lhs: shape.clone(),
                    rhs: t.shape().to_vec(),
                });
            }
        }
        Ok(Denoiser { arch, params })
    }

    /// Records the full prediction graph on `tape` and returns the
    /// predicted-noise node. `x_t` must already be a node of shape
    /// (batch, data_dim).
    pub fn predict_on(
        &self,
        tape: &mut Tape,
        x_t: NodeId,
        prompt_ids: &[usize],
        t: usize,
        timesteps: usize,
    ) -> Result<NodeId> {
        let xv = tape.value(x_t);
        if xv.rank() != 2 || xv.cols() != self.arch.data_dim {
            return Err(Error::bad_input(
                "predict",
                format!("x_t must be (batch, {}), got {:?}", self.arch.data_dim, xv.shape()),
            ));
        }
        if prompt_ids.is_empty() {
            return Err(Error::bad_input("predict", "empty prompt"));
        }
        if t >= timesteps {
            return Err(Error::bad_input("predict", format!("timestep {t} out of range for {timesteps}")));
        }
        let n = xv.rows();

        let tf = time_features(t, timesteps, self.arch.time_freqs);
        let mut tiled = Vec::with_capacity(n * tf.len());
        for _ in 0..n {
            tiled.extend_from_slice(&tf);
        }
        let tf_node = tape.constant(Tensor::from_vec(&[n, tf.len()], tiled)?);

        let w1 = tape.param(&self.params, names::TRUNK_W1)?;
        let b1 = tape.param(&self.params, names::TRUNK_B1)?;
        let w2 = tape.param(&self.params, names::TRUNK_W2)?;
        let b2 = tape.param(&self.params, names::TRUNK_B2)?;
        let inp = tape.concat_cols(x_t, tf_node)?;
        let h1 = tape.affine(inp, w1, b1)?;
        let h1 = tape.tanh(h1);
        let h2 = tape.affine(h1, w2, b2)?;
        let h2 = tape.tanh(h2);

        let table = tape.param(&self.params, names::EMBED_TABLE)?;
        let wk = tape.param(&self.params, names::ATTN_WK)?;
        let wv = tape.param(&self.params, names::ATTN_WV)?;
        let wq = tape.param(&self.params, names::ATTN_WQ)?;
        let emb = tape.gather_rows(table, prompt_ids)?;
        let keys = tape.matmul(emb, wk)?;
        let vals = tape.matmul(emb, wv)?;
        let queries = tape.matmul(h2, wq)?;
        let scores = tape.matmul_nt(queries, keys)?;
        let scores = tape.scale(scores, 1.0 / (self.arch.attn_dim as f64).sqrt());
        let weights = tape.softmax_rows(scores)?;
        let read = tape.matmul(weights, vals)?;

        let hw = tape.param(&self.params, names::HEAD_W)?;
        let hb = tape.param(&self.params, names::HEAD_B)?;
        let joined = tape.concat_cols(h2, read)?;
        tape.affine(joined, hw, hb)
    }

    /// Prediction values only, no gradient bookkeeping kept.
    pub fn predict_eps(
        &self,
        x_t: &Tensor,
        prompt_ids: &[usize],
        t: usize,
        timesteps: usize,
    ) -> Result<Tensor> {
        let mut tape = Tape::new();
        let x = tape.constant(x_t.clone());
        let out = self.predict_on(&mut tape, x, prompt_ids, t, timesteps)?;
        Ok(tape.value(out).clone())
    }
}
