//! Versioned JSON checkpoint envelope.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::Mlp;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
pub const MLP_FORMAT: &str = "peg-insert/mlp";

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    payload: T,
}

pub fn to_checkpoint_string<T: Serialize>(format: &str, payload: &T) -> Result<String> {
    let env = Envelope { format: format.to_string(), version: CHECKPOINT_VERSION, payload };
    Ok(serde_json::to_string(&env)?)
}

pub fn from_checkpoint_str<T: DeserializeOwned>(format: &str, text: &str) -> Result<T> {
    let env: Envelope<T> = serde_json::from_str(text)?;
    if env.format != format {
        return Err(Error::Checkpoint(format!("expected format `{format}`, found `{}`", env.format)));
    }
    if env.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {}", env.version)));
    }
    Ok(env.payload)
}

/// Writes through a temporary sibling so a crash never leaves a torn file.
pub fn write_checkpoint<T: Serialize>(path: &Path, format: &str, payload: &T) -> Result<()> {
    let text = to_checkpoint_string(format, payload)?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_checkpoint<T: DeserializeOwned>(path: &Path, format: &str) -> Result<T> {
    let text = fs::read_to_string(path)?;
    from_checkpoint_str(format, &text)
}

#[derive(Serialize, Deserialize)]
struct MlpRecord {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

impl Mlp {
    pub fn save(&self, path: &Path) -> Result<()> {
        let rec = MlpRecord { sizes: self.sizes().to_vec(), params: self.params().to_vec() };
        write_checkpoint(path, MLP_FORMAT, &rec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let rec: MlpRecord = read_checkpoint(path, MLP_FORMAT)?;
        Mlp::from_parts(rec.sizes, rec.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mlp_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::new(&[27, 128, 128, 3], &mut rng).unwrap();
        net.save(&path).unwrap();
        let back = Mlp::load(&path).unwrap();
        assert_eq!(net, back);
        assert!(net.params().iter().zip(back.params()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn wrong_format_or_version_rejected() {
        let text = to_checkpoint_string("other", &1u32).unwrap();
        assert!(from_checkpoint_str::<u32>(MLP_FORMAT, &text).is_err());
        let text = text.replace("\"version\":1", "\"version\":99").replace("other", MLP_FORMAT);
        assert!(matches!(from_checkpoint_str::<u32>(MLP_FORMAT, &text), Err(Error::Checkpoint(_))));
    }
}
