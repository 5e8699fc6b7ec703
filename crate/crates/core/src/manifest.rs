//! In-memory form of the pair manifest shared by placement and filtering.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    Structural,
    Logical,
    Combined,
}

impl AnomalyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Structural => "structural",
            Self::Logical => "logical",
            Self::Combined => "combined",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "structural" => Some(Self::Structural),
            "logical" => Some(Self::Logical),
            "combined" => Some(Self::Combined),
            _ => None,
        }
    }
}

/// One generated image / aligned mask pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_path: String,
    pub mask_path: String,
    pub cluster: Option<u32>,
    pub kind: AnomalyKind,
    pub ars: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairManifest {
    pub entries: Vec<ManifestEntry>,
}

impl PairManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Image paths are unique, as are mask paths, and scores are finite.
    pub fn validate(&self) -> Result<()> {
        let mut images = BTreeSet::new();
        let mut masks = BTreeSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            if !images.insert(e.image_path.as_str()) {
                return Err(invalid(alloc::format!("entry {i}: duplicate image path {}", e.image_path)));
            }
            if !masks.insert(e.mask_path.as_str()) {
                return Err(invalid(alloc::format!("entry {i}: duplicate mask path {}", e.mask_path)));
            }
            if e.ars.is_some_and(|a| !a.is_finite()) {
                return Err(invalid(alloc::format!("entry {i}: non-finite ARS")));
            }
        }
        Ok(())
    }
}
