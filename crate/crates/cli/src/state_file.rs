//! Human-writable state files: explicit `re`/`im` pairs per nonzero amplitude.

use entclass::tensor::SparseAmplitude;
use entclass::StateTensor;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub amplitudes: Vec<SparseAmplitude>,
    #[serde(default = "default_normalize")]
    pub normalize: bool,
}

fn default_normalize() -> bool {
    true
}

impl StateFile {
    pub fn from_state(psi: &StateTensor) -> Self {
        Self {
            dims: psi.dims().to_vec(),
            amplitudes: psi.sparse_amplitudes(),
            normalize: true,
        }
    }

    /// Parse JSON text. Errors carry the field path and line/column.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut de = serde_json::Deserializer::from_str(text);
        let file: StateFile = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| format!("field `{}`: {}", e.path(), e.inner()))?;
        de.end().map_err(|e| e.to_string())?;
        Ok(file)
    }

    /// Build the tensor, rejecting bad dims, out-of-range or duplicate
    /// indices and all-zero amplitude sets. Normalizes when requested.
    pub fn to_state(&self) -> entclass::Result<StateTensor> {
        let psi = StateTensor::from_sparse(&self.dims, &self.amplitudes)?;
        if self.normalize {
            psi.normalized()
        } else {
            Ok(psi)
        }
    }
}
