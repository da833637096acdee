use crate::concepts::linalg::{log_sum_exp, MvnDensity};
use crate::concepts::prompt::Prompt;
use crate::concepts::vocab::{TokenKind, Vocabulary};
use crate::error::{Error, Result};
use crate::numerics::tensor::Tensor;
use rand::Rng;
use rand_distr::StandardNormal;

/// Spread of the memorized-point cloud. Deliberately tight: a memorized
/// concept is a single training example, not a population.
pub const SIGMA_MEM: f64 = 1e-3;

/// Trademark-absent prompts fill the trademark subspace with this noise.
pub const ABSENCE_TAU: f64 = 0.5;

/// Glyph spread, shared by sampling and scoring. Nonzero so densities of
/// generated points stay finite and comparable; small against glyph
/// separations (~2) so glyph identity stays unambiguous.
pub const GLYPH_SIGMA: f64 = 0.15;

struct ObjComponent {
    mu: Vec<f64>,
    sigma: f64,
    density: MvnDensity,
}

struct ObjPart {
    comps: Vec<ObjComponent>,
    /// Style map applied after the component draw, row-major d_obj x d_obj.
    matrix: Option<Vec<f64>>,
}

struct TmPart {
    comps: Vec<MvnDensity>,
}

enum DistKind {
    Memorized {
        full: MvnDensity,
        obj: MvnDensity,
        tm: MvnDensity,
    },
    Factored {
        obj: ObjPart,
        tm: TmPart,
    },
}

/// Exact generative distribution for one prompt: sampling and log-density
/// share the same parameters, so scores are analytic rather than fitted.
///
/// Factored prompts draw the object subvector as style_matrix * (mu +
/// sigma z) with (mu, sigma) from the object token (mixture component
/// chosen uniformly for generics; standard normal when absent), and the
/// trademark subvector from an isotropic Gaussian at the glyph (absence
/// noise when no trademark token is present). A memorized token overrides
/// everything with a tight Gaussian at its stored point.
pub struct GroundTruthSampler {
    d_obj: usize,
    d_tm: usize,
    kind: DistKind,
    memorized_point: Option<Vec<f64>>,
}

impl Vocabulary {
    pub fn ground_truth(&self, prompt: &Prompt) -> Result<GroundTruthSampler> {
        self.validate_prompt(prompt)?;
        let (d_obj, d_tm) = (self.d_obj, self.d_tm);

        let mut obj_comps: Vec<(Vec<f64>, f64)> = Vec::new();
        let mut style: Option<Vec<f64>> = None;
        let mut glyphs: Vec<Vec<f64>> = Vec::new();
        let mut memorized: Option<Vec<f64>> = None;

        for &id in prompt.ids() {
            let (_, tok) = self.resolve(id)?;
            match &tok.kind {
                TokenKind::Object { mean, sigma } => obj_comps.push((mean.clone(), *sigma)),
                TokenKind::Style { matrix } => style = Some(matrix.clone()),
                TokenKind::Trademark { glyph } => glyphs.push(glyph.clone()),
                TokenKind::Memorized { point } => memorized = Some(point.clone()),
                TokenKind::Generic { members } => {
                    for &m in members {
                        match &self.token(m)?.kind {
                            TokenKind::Object { mean, sigma } => obj_comps.push((mean.clone(), *sigma)),
                            TokenKind::Trademark { glyph } => glyphs.push(glyph.clone()),
                            _ => unreachable!("generic members validated to be object or trademark"),
                        }
                    }
                }
                TokenKind::Synonym { .. } => unreachable!("resolve() follows synonyms"),
            }
        }

        if let Some(point) = memorized {
            let full = MvnDensity::isotropic(point.clone(), SIGMA_MEM)?;
            let obj = MvnDensity::isotropic(point[..d_obj].to_vec(), SIGMA_MEM)?;
            let tm = MvnDensity::isotropic(point[d_obj..].to_vec(), SIGMA_MEM)?;
            return Ok(GroundTruthSampler {
                d_obj,
                d_tm,
                kind: DistKind::Memorized { full, obj, tm },
                memorized_point: Some(point),
            });
        }

        if obj_comps.is_empty() {
            obj_comps.push((vec![0.0; d_obj], 1.0));
        }
        let comps = obj_comps
            .into_iter()
            .map(|(mu, sigma)| {
                let density = styled_density(&mu, sigma, style.as_deref(), d_obj)?;
                Ok(ObjComponent { mu, sigma, density })
            })
            .collect::<Result<Vec<_>>>()?;
        let obj = ObjPart {
            comps,
            matrix: style,
        };

        let tm_comps = if glyphs.is_empty() {
            vec![MvnDensity::isotropic(vec![0.0; d_tm], ABSENCE_TAU)?]
        } else {
            glyphs
                .into_iter()
                .map(|g| MvnDensity::isotropic(g, GLYPH_SIGMA))
                .collect::<Result<Vec<_>>>()?
        };

        Ok(GroundTruthSampler {
            d_obj,
            d_tm,
            kind: DistKind::Factored {
                obj,
                tm: TmPart { comps: tm_comps },
            },
            memorized_point: None,
        })
    }
}

/// N(A mu, sigma^2 A A^T), or the isotropic case when no style applies.
fn styled_density(mu: &[f64], sigma: f64, style: Option<&[f64]>, d: usize) -> Result<MvnDensity> {
    match style {
        None => MvnDensity::isotropic(mu.to_vec(), sigma),
        Some(a) => {
            let mean = mat_vec(a, mu, d);
            let mut cov = vec![0.0; d * d];
            for i in 0..d {
                for j in 0..d {
                    let mut acc = 0.0;
                    for k in 0..d {
                        acc += a[i * d + k] * a[j * d + k];
                    }
                    cov[i * d + j] = sigma * sigma * acc;
                }
            }
            MvnDensity::new(mean, &cov)
        }
    }
}

fn mat_vec(a: &[f64], v: &[f64], d: usize) -> Vec<f64> {
    (0..d)
        .map(|i| (0..d).map(|k| a[i * d + k] * v[k]).sum())
        .collect()
}

impl GroundTruthSampler {
    pub fn dim(&self) -> usize {
        self.d_obj + self.d_tm
    }

    /// The stored point when this prompt carries a memorized token.
    pub fn memorized_point(&self) -> Option<&[f64]> {
        self.memorized_point.as_deref()
    }

    /// One draw. Consumes rng values in a fixed order: mixture index (only
    /// when there is a choice), then the object normals, then the
    /// trademark index and normals.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        match &self.kind {
            DistKind::Memorized { full, .. } => {
                let z: Vec<f64> = (0..self.dim()).map(|_| rng.sample(StandardNormal)).collect();
                full.sample_with(&z)
            }
            DistKind::Factored { obj, tm } => {
                let ci = if obj.comps.len() > 1 {
                    rng.random_range(0..obj.comps.len())
                } else {
                    0
                };
                let comp = &obj.comps[ci];
                let mut y: Vec<f64> = comp
                    .mu
                    .iter()
                    .map(|&m| m + comp.sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                if let Some(a) = &obj.matrix {
                    y = mat_vec(a, &y, self.d_obj);
                }

                let ti = if tm.comps.len() > 1 {
                    rng.random_range(0..tm.comps.len())
                } else {
                    0
                };
                let z: Vec<f64> = (0..self.d_tm).map(|_| rng.sample(StandardNormal)).collect();
                let x_tm = tm.comps[ti].sample_with(&z);

                y.extend_from_slice(&x_tm);
                y
            }
        }
    }

    pub fn sample_batch(&self, n: usize, rng: &mut impl Rng) -> Result<Tensor> {
        if n == 0 {
            return Err(Error::bad_input("ground_truth", "batch size must be positive"));
        }
        let d = self.dim();
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n {
            data.extend(self.sample(rng));
        }
        Tensor::from_vec(&[n, d], data)
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::bad_input("ground_truth", format!("point has {} dims, want {}", x.len(), self.dim())));
        }
        Ok(self.log_density_obj_raw(&x[..self.d_obj]) + self.log_density_tm_raw(&x[self.d_obj..]))
    }

    /// Marginal log-density of the object subvector.
    pub fn log_density_obj(&self, x_obj: &[f64]) -> Result<f64> {
        if x_obj.len() != self.d_obj {
            return Err(Error::bad_input("ground_truth", format!("object part has {} dims, want {}", x_obj.len(), self.d_obj)));
        }
        Ok(self.log_density_obj_raw(x_obj))
    }

    /// Marginal log-density of the trademark subvector.
    pub fn log_density_tm(&self, x_tm: &[f64]) -> Result<f64> {
        if x_tm.len() != self.d_tm {
            return Err(Error::bad_input("ground_truth", format!("trademark part has {} dims, want {}", x_tm.len(), self.d_tm)));
        }
        Ok(self.log_density_tm_raw(x_tm))
    }

    fn log_density_obj_raw(&self, x: &[f64]) -> f64 {
        match &self.kind {
            DistKind::Memorized { obj, .. } => obj.log_pdf(x),
            DistKind::Factored { obj, .. } => {
                let k = obj.comps.len() as f64;
                let terms: Vec<f64> = obj.comps.iter().map(|c| c.density.log_pdf(x) - k.ln()).collect();
                log_sum_exp(&terms)
            }
        }
    }

    fn log_density_tm_raw(&self, x: &[f64]) -> f64 {
        match &self.kind {
            DistKind::Memorized { tm, .. } => tm.log_pdf(x),
            DistKind::Factored { tm, .. } => {
                let k = tm.comps.len() as f64;
                let terms: Vec<f64> = tm.comps.iter().map(|c| c.log_pdf(x) - k.ln()).collect();
                log_sum_exp(&terms)
            }
        }
    }
}

/// Batch of ground-truth draws for a prompt, shape (n, d_obj + d_tm).
pub fn sample_ground_truth(
    vocab: &Vocabulary,
    prompt: &Prompt,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Tensor> {
    vocab.ground_truth(prompt)?.sample_batch(n, rng)
}
