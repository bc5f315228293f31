//! On-disk parameter format shared by all six models.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   "AQCM" (4 bytes)
//! version u32            currently 1
//! meta    u32 length + JSON (ModelMeta)
//! count   u32            number of tensors
//! tensor  u16 name length + UTF-8 name
//!         u8 rank, then u32 per dimension
//!         f64 (LE bits) per element, row-major
//! ```
//!
//! Values round-trip bit-exactly: floats are stored as their raw IEEE-754
//! bits, never through decimal formatting.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AnyModel, ModelConfig, TrainableModel};
use crate::numeric::{RngState, Tensor};
use crate::train::Scaler;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"AQCM";
pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to rebuild and evaluate a saved model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelMeta {
    pub config: ModelConfig,
    /// Min-max scaler fitted on the training partition.
    pub scaler: Option<Scaler>,
    /// SHA-256 of the raw data file the model was trained on.
    pub data_sha256: Option<String>,
    /// Root seed of the training run.
    pub seed: Option<u64>,
    /// Train/test split fraction used when preparing the data.
    pub train_frac: Option<f64>,
}

impl ModelMeta {
    pub fn bare(config: ModelConfig) -> Self {
        ModelMeta { config, scaler: None, data_sha256: None, seed: None, train_frac: None }
    }
}

fn format_err(detail: impl Into<String>) -> Error {
    Error::Format(detail.into())
}

/// Writes the model's named parameter tensors plus metadata.
pub fn save_model(path: &Path, model: &AnyModel, meta: &ModelMeta) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);

    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;

    let meta_json = serde_json::to_vec(meta).map_err(|e| format_err(format!("meta encode: {e}")))?;
    w.write_all(&(meta_json.len() as u32).to_le_bytes())?;
    w.write_all(&meta_json)?;

    let names = model.param_names();
    let tensors = model.param_tensors();
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for (name, tensor) in names.iter().zip(tensors.iter()) {
        let name_bytes = name.as_bytes();
        w.write_all(&(name_bytes.len() as u16).to_le_bytes())?;
        w.write_all(name_bytes)?;
        w.write_all(&[tensor.rank() as u8])?;
        for &d in tensor.shape() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &v in tensor.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

/// Loads a model saved by [`save_model`], rebuilding it from its metadata
/// and filling every parameter tensor by name.
pub fn load_model(path: &Path) -> Result<(AnyModel, ModelMeta)> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);

    let magic: [u8; 4] = read_exact(&mut r)?;
    if &magic != MAGIC {
        return Err(format_err(format!("{}: not a model file (bad magic)", path.display())));
    }
    let version = u32::from_le_bytes(read_exact(&mut r)?);
    if version != FORMAT_VERSION {
        return Err(format_err(format!(
            "unsupported model format version {version} (expected {FORMAT_VERSION})"
        )));
    }

    let meta_len = u32::from_le_bytes(read_exact(&mut r)?) as usize;
    let mut meta_json = vec![0u8; meta_len];
    r.read_exact(&mut meta_json)?;
    let meta: ModelMeta =
        serde_json::from_slice(&meta_json).map_err(|e| format_err(format!("meta decode: {e}")))?;

    // Shape the model from its config, then overwrite every tensor by name.
    let mut model = AnyModel::init(&meta.config, &mut RngState::new(0))?;
    let names = model.param_names();
    let count = u32::from_le_bytes(read_exact(&mut r)?) as usize;
    if count != names.len() {
        return Err(format_err(format!(
            "model file holds {count} tensors, config implies {}",
            names.len()
        )));
    }

    let mut loaded: Vec<(String, Tensor)> = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = u16::from_le_bytes(read_exact(&mut r)?) as usize;
        let mut name_bytes = vec![0u8; name_len];
        r.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes).map_err(|e| format_err(format!("tensor name: {e}")))?;
        let rank = read_exact::<1>(&mut r)?[0] as usize;
        if rank == 0 || rank > 3 {
            return Err(format_err(format!("tensor '{name}': bad rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(u32::from_le_bytes(read_exact(&mut r)?) as usize);
        }
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f64::from_le_bytes(read_exact(&mut r)?));
        }
        loaded.push((name, Tensor::new(&shape, data)?));
    }

    for ((name, tensor), (expected_name, slot)) in loaded
        .into_iter()
        .zip(names.iter().zip(model.param_tensors_mut()))
    {
        if &name != expected_name {
            return Err(format_err(format!(
                "tensor order mismatch: found '{name}', expected '{expected_name}'"
            )));
        }
        if tensor.shape() != slot.shape() {
            return Err(format_err(format!(
                "tensor '{name}': shape {:?} vs expected {:?}",
                tensor.shape(),
                slot.shape()
            )));
        }
        *slot = tensor;
    }

    Ok((model, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelKind;

    #[test]
    fn round_trip_is_bit_exact_for_every_kind() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = RngState::new(200);
        for kind in ModelKind::ALL {
            let mut config = ModelConfig::new(kind);
            config.units = 5;
            config.tcn.dilations = vec![1, 2];
            let model = AnyModel::init(&config, &mut rng).unwrap();
            let path = dir.path().join(format!("{kind}.acm"));
            let meta = ModelMeta {
                scaler: Some(Scaler::from_bounds(1.25, 9.75).unwrap()),
                data_sha256: Some("abc123".into()),
                seed: Some(42),
                train_frac: Some(0.9),
                ..ModelMeta::bare(config)
            };
            save_model(&path, &model, &meta).unwrap();
            let (loaded, meta2) = load_model(&path).unwrap();

            let before = model.param_tensors();
            let after = loaded.param_tensors();
            assert_eq!(before.len(), after.len());
            for (a, b) in before.iter().zip(after.iter()) {
                assert_eq!(a.shape(), b.shape());
                for (x, y) in a.data().iter().zip(b.data().iter()) {
                    assert_eq!(x.to_bits(), y.to_bits(), "{kind}: parameter bits differ");
                }
            }
            assert_eq!(meta2.config.kind, kind);
            assert_eq!(meta2.seed, Some(42));
            assert_eq!(meta2.scaler.as_ref().unwrap().min(), 1.25);
        }
    }

    #[test]
    fn truncated_file_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.acm");
        std::fs::write(&path, b"AQCM\x01\x00\x00\x00").unwrap();
        assert!(load_model(&path).is_err());
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("not_a_model.acm");
        std::fs::write(&path, b"nope").unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(matches!(err, Error::Format(_) | Error::Io(_)));
    }
}
