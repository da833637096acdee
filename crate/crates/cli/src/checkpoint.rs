use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use ablate_core::diffusion::{Architecture, Denoiser};
use ablate_core::numerics::params::ParamSet;
use ablate_core::numerics::tensor::Tensor;

/// One JSON manifest line, then a little-endian f64 blob. The manifest
/// pins parameter order and shapes so loads are bitwise and self-checking.
pub const CKPT_FORMAT: &str = "ablate-ckpt-v1";

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("checkpoint missing manifest line")]
    Header,
    #[error("checkpoint format `{found}`, this tool reads `{want}`")]
    Version { found: String, want: &'static str },
    #[error("checkpoint blob truncated: want {want} bytes, got {got}")]
    Truncated { want: usize, got: usize },
    #[error("checkpoint shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Model(#[from] ablate_core::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct CkptManifest {
    format: String,
    arch: Architecture,
    params: Vec<CkptParam>,
    blob_len: usize,
}

/// Offsets and lengths count f64 elements, not bytes.
#[derive(Debug, Serialize, Deserialize)]
struct CkptParam {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

pub fn save_checkpoint(path: &Path, model: &Denoiser) -> Result<(), CheckpointError> {
    let mut params = Vec::new();
    let mut blob: Vec<f64> = Vec::new();
    for (name, tensor) in model.params.iter() {
        params.push(CkptParam {
            name: name.to_string(),
            shape: tensor.shape().to_vec(),
            offset: blob.len(),
        });
        blob.extend_from_slice(tensor.data());
    }
    let manifest = CkptManifest {
        format: CKPT_FORMAT.to_string(),
        arch: model.arch.clone(),
        params,
        blob_len: blob.len(),
    };
    let mut bytes = serde_json::to_vec(&manifest)?;
    bytes.push(b'\n');
    for v in &blob {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Denoiser, CheckpointError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or(CheckpointError::Header)?;
    let manifest: CkptManifest = serde_json::from_slice(&bytes[..nl])?;
    if manifest.format != CKPT_FORMAT {
        return Err(CheckpointError::Version { found: manifest.format, want: CKPT_FORMAT });
    }
    let blob_bytes = &bytes[nl + 1..];
    let want = manifest.blob_len * 8;
    if blob_bytes.len() < want {
        return Err(CheckpointError::Truncated { want, got: blob_bytes.len() });
    }
    if blob_bytes.len() > want {
        return Err(CheckpointError::Shape(format!(
            "{} trailing bytes after blob",
            blob_bytes.len() - want
        )));
    }

    let mut params = ParamSet::new();
    let mut cursor = 0usize;
    for p in &manifest.params {
        if p.offset != cursor {
            return Err(CheckpointError::Shape(format!(
                "param `{}` offset {} not contiguous at {}",
                p.name, p.offset, cursor
            )));
        }
        let len: usize = p.shape.iter().product();
        let end = cursor + len;
        if end > manifest.blob_len {
            return Err(CheckpointError::Shape(format!(
                "param `{}` overruns blob: {} > {}",
                p.name, end, manifest.blob_len
            )));
        }
        let mut data = Vec::with_capacity(len);
        for i in cursor..end {
            let mut raw = [0u8; 8];
            raw.copy_from_slice(&blob_bytes[i * 8..i * 8 + 8]);
            data.push(f64::from_le_bytes(raw));
        }
        params.insert(&p.name, Tensor::from_vec(&p.shape, data)?)?;
        cursor = end;
    }
    if cursor != manifest.blob_len {
        return Err(CheckpointError::Shape(format!(
            "params cover {} of {} blob elements",
            cursor, manifest.blob_len
        )));
    }
    Ok(Denoiser::from_params(manifest.arch, params)?)
}
