//! Loading of JSON configuration files.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{MechError, MechResult};
use crate::export::config_hash;
use crate::friction::FrictionGenerator;
use crate::linkage::LinkageSpec;
use crate::tum::TumSpec;

/// A complete gripper: transmission, finger linkage and friction generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismConfig {
    pub tum: TumSpec,
    pub linkage: LinkageSpec,
    pub friction: FrictionGenerator,
}

impl MechanismConfig {
    pub fn validate(&self) -> MechResult<()> {
        self.tum.validate()?;
        self.linkage.validate()?;
        self.friction.validate()?;
        if (self.tum.strip_length - self.linkage.tum_length).abs() > 1e-12 * self.tum.strip_length {
            return Err(MechError::invalid(format!(
                "linkage tum_length_L {} differs from strip_length_L {}",
                self.linkage.tum_length, self.tum.strip_length
            )));
        }
        Ok(())
    }
}

/// Parsed document plus the hash of its raw bytes.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub value: T,
    pub hash: String,
}

/// Parses JSON text. Syntax errors and unknown fields map to `Config`.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> MechResult<Loaded<T>> {
    let value = serde_json::from_str(text).map_err(|e| MechError::Config { what: e.to_string() })?;
    Ok(Loaded { value, hash: config_hash(text.as_bytes()) })
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> MechResult<Loaded<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| MechError::Config {
        what: format!("{}: {e}", path.display()),
    })?;
    parse_json(&text)
}

pub fn load_mechanism(path: &Path) -> MechResult<Loaded<MechanismConfig>> {
    let loaded: Loaded<MechanismConfig> = load_json(path)?;
    loaded.value.validate()?;
    Ok(loaded)
}
