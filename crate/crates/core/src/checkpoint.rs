//! Versioned JSON checkpoints.
//!
//! Floats are written with round-trip precision, so restoring a checkpoint
//! and continuing training gives the same parameters bit for bit as never
//! having stopped.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::BinaryClassifier;
use crate::error::{Error, Result};
use crate::genpu::{GenPuConfig, GenPuState, StateSnapshot};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: GenPuConfig,
    pub state: StateSnapshot,
    /// Downstream classifier trained on generated samples, if any.
    pub classifier: Option<BinaryClassifier>,
}

impl Checkpoint {
    pub fn new(config: &GenPuConfig, state: &GenPuState, classifier: Option<BinaryClassifier>) -> Self {
        Self {
            version: FORMAT_VERSION,
            config: config.clone(),
            state: state.snapshot(),
            classifier,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Self = serde_json::from_str(text)?;
        if ck.version != FORMAT_VERSION {
            return Err(Error::param(format!(
                "checkpoint format version {} is not supported (expected {FORMAT_VERSION})",
                ck.version
            )));
        }
        Ok(ck)
    }

    /// Writes to a sibling temporary file first so a crash never leaves a
    /// truncated checkpoint behind.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, self.to_json()?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn restore(&self) -> Result<GenPuState> {
        GenPuState::from_snapshot(self.state.clone())
    }
}
