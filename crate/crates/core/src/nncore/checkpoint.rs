//! Binary checkpoint container.
//!
//! Layout: 8-byte magic `PRUNCKPT`, little-endian `u64` manifest length, the JSON
//! manifest, then the weight payload as little-endian `f64` in flat-view order.
//! The payload is exactly `8 * param_count` bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{LayerSpec, ModelRecord, Network, TrainConfig};
use crate::evalstats::HyperparamConfig;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"PRUNCKPT";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub schema_version: u32,
    pub model_id: String,
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
    pub param_count: usize,
    pub hyperparams: HyperparamConfig,
    pub train_config: TrainConfig,
    pub seed: u64,
    pub epochs: usize,
    pub epoch_losses: Vec<f64>,
    pub final_train_ce: f64,
    pub final_test_ce: f64,
    pub final_train_err01: f64,
    pub final_test_err01: f64,
    pub gap: f64,
}

/// Serializes a record into checkpoint bytes.
pub fn encode(record: &ModelRecord) -> Result<Vec<u8>> {
    let net = &record.network;
    let manifest = CheckpointManifest {
        schema_version: SCHEMA_VERSION,
        model_id: record.id.clone(),
        input_shape: net.input_shape().to_vec(),
        layers: net.layers().to_vec(),
        param_count: net.param_count(),
        hyperparams: record.hyperparams.clone(),
        train_config: record.train_config.clone(),
        seed: record.seed,
        epochs: record.epoch_losses.len(),
        epoch_losses: record.epoch_losses.clone(),
        final_train_ce: record.final_train_ce,
        final_test_ce: record.final_test_ce,
        final_train_err01: record.final_train_err01,
        final_test_err01: record.final_test_err01,
        gap: record.gap,
    };
    let json = serde_json::to_vec(&manifest)?;
    let mut out = Vec::with_capacity(16 + json.len() + 8 * net.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for p in net.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    Ok(out)
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse { offset, message: message.into() }
}

/// Parses checkpoint bytes back into a record.
pub fn decode(bytes: &[u8]) -> Result<ModelRecord> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(parse_err(0, "missing checkpoint magic"));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let json_end = 16usize
        .checked_add(len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| parse_err(16, format!("manifest length {len} exceeds file")))?;
    let manifest: CheckpointManifest = serde_json::from_slice(&bytes[16..json_end])?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(parse_err(16, format!("unsupported schema version {}", manifest.schema_version)));
    }
    let payload = &bytes[json_end..];
    if payload.len() != 8 * manifest.param_count {
        return Err(parse_err(
            json_end,
            format!("payload has {} bytes, expected {}", payload.len(), 8 * manifest.param_count),
        ));
    }
    let params = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let network = Network::from_params(manifest.input_shape, manifest.layers, params)?;
    if manifest.epoch_losses.len() != manifest.epochs {
        return Err(parse_err(16, "epoch loss trace length does not match epochs"));
    }
    Ok(ModelRecord {
        id: manifest.model_id,
        network,
        hyperparams: manifest.hyperparams,
        train_config: manifest.train_config,
        epoch_losses: manifest.epoch_losses,
        final_train_ce: manifest.final_train_ce,
        final_test_ce: manifest.final_test_ce,
        final_train_err01: manifest.final_train_err01,
        final_test_err01: manifest.final_test_err01,
        gap: manifest.gap,
        seed: manifest.seed,
    })
}

/// Hex SHA-256 of a byte string.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp: PathBuf = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes a checkpoint and returns its digest.
pub fn save(path: &Path, record: &ModelRecord) -> Result<String> {
    let bytes = encode(record)?;
    write_atomic(path, &bytes)?;
    Ok(digest(&bytes))
}

/// Reads a checkpoint; when `expected_digest` is given the file must match it.
pub fn load(path: &Path, expected_digest: Option<&str>) -> Result<ModelRecord> {
    let bytes = fs::read(path)?;
    if let Some(want) = expected_digest {
        let got = digest(&bytes);
        if got != want {
            return Err(Error::Checkpoint {
                path: path.to_path_buf(),
                message: format!("digest mismatch: expected {want}, found {got}"),
            });
        }
    }
    decode(&bytes).map_err(|e| Error::Checkpoint { path: path.to_path_buf(), message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::{mlp_layers, LrSchedule};
    use crate::seeded_rng;

    fn record() -> ModelRecord {
        let net = Network::new(vec![3], mlp_layers(3, 4, 1, 0.0, 2), &mut seeded_rng(1)).unwrap();
        ModelRecord {
            id: "m0".into(),
            network: net,
            hyperparams: HyperparamConfig::default().with("width", 4.0),
            train_config: TrainConfig {
                epochs: 2,
                batch_size: 8,
                learning_rate: LrSchedule::constant(0.1),
                momentum: 0.9,
                weight_decay: 0.0,
                augmentation: false,
                seed: 5,
            },
            epoch_losses: vec![0.7, 0.5],
            final_train_ce: 0.5,
            final_test_ce: 0.6,
            final_train_err01: 0.1,
            final_test_err01: 0.25,
            gap: 0.15,
            seed: 5,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let r = record();
        let bytes = encode(&r).unwrap();
        assert_eq!(decode(&bytes).unwrap(), r);
    }

    #[test]
    fn payload_length_is_eight_omega() {
        let r = record();
        let bytes = encode(&r).unwrap();
        let json_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        assert_eq!(bytes.len() - 16 - json_len, 8 * r.network.param_count());
        let truncated = &bytes[..bytes.len() - 8];
        assert!(matches!(decode(truncated), Err(Error::Parse { .. })));
    }

    #[test]
    fn digest_mismatch_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let d = save(&path, &record()).unwrap();
        assert!(load(&path, Some(&d)).is_ok());
        assert!(matches!(load(&path, Some("00")), Err(Error::Checkpoint { .. })));
    }
}
