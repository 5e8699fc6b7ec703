use std::path::{Path, PathBuf};

use gaa_core::clustering::ClusterConfig;
use gaa_core::enhance::EnhanceConfig;
use gaa_core::features::{DEFAULT_DEEP_WEIGHT, DEFAULT_LAB_WEIGHT, DEFAULT_LBP_WEIGHT};
use gaa_core::filtering::{TrainConfig, Upsample};
use gaa_core::placement::PlacementStrategy;
use serde::{Deserialize, Serialize};

use crate::error::{GaaError, Result};
use crate::io::dataset::Layout;
use crate::io::png::DEFAULT_MASK_THRESHOLD;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Global seed; every stage derives its own streams from it.
    pub seed: u64,
    pub output: PathBuf,
    pub dataset: DatasetSection,
    #[serde(default)]
    pub features: FeatureSection,
    #[serde(default)]
    pub cluster: ClusterConfig,
    #[serde(default)]
    pub enhance: EnhanceConfig,
    pub placement: PlacementSection,
    #[serde(default)]
    pub filter: FilterSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub root: PathBuf,
    /// Subdirectory of `root` holding the category, if any.
    #[serde(default)]
    pub category: Option<String>,
    #[serde(default)]
    pub layout: Layout,
    #[serde(default = "default_threshold")]
    pub mask_threshold: u8,
    /// `<regions>/<region>/<normal stem>.png`
    pub regions: PathBuf,
    /// Optional `N x D` GAAT matrix of deep descriptors, one row per anomaly
    /// record in scan order.
    #[serde(default)]
    pub deep_features: Option<PathBuf>,
}

fn default_threshold() -> u8 {
    DEFAULT_MASK_THRESHOLD
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSection {
    pub deep_weight: f64,
    pub lab_weight: f64,
    pub lbp_weight: f64,
    pub lbp_neighbors: usize,
    pub lbp_radius: usize,
}

impl Default for FeatureSection {
    fn default() -> Self {
        Self {
            deep_weight: DEFAULT_DEEP_WEIGHT,
            lab_weight: DEFAULT_LAB_WEIGHT,
            lbp_weight: DEFAULT_LBP_WEIGHT,
            lbp_neighbors: 8,
            lbp_radius: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementSection {
    pub plan: PathBuf,
    /// Strategy settings used where a plan row does not override them.
    #[serde(default)]
    pub defaults: PlacementStrategy,
    #[serde(default)]
    pub overlap_threshold: f64,
    #[serde(default = "default_members")]
    pub combined_members: usize,
    #[serde(default = "default_retries")]
    pub max_retries: usize,
}

fn default_members() -> usize {
    2
}

fn default_retries() -> usize {
    10
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingGenerated {
    /// Score the host normal image in place of a missing generated image.
    #[default]
    Host,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub training: TrainConfig,
    pub patch: usize,
    pub stride: usize,
    pub upsample: Upsample,
    /// Where generated images are looked up as `<id>.png`; relative to the
    /// output directory.
    pub generated: PathBuf,
    pub missing_generated: MissingGenerated,
    /// Entries kept per (cluster, kind) group.
    pub top: usize,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self {
            training: TrainConfig::default(),
            patch: 16,
            stride: 8,
            upsample: Upsample::Bilinear,
            generated: PathBuf::from("generated"),
            missing_generated: MissingGenerated::Host,
            top: 500,
        }
    }
}

impl PipelineConfig {
    /// Parses TOML and resolves relative paths against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| GaaError::Config(e.to_string()))?;
        let abs = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        abs(&mut cfg.output);
        abs(&mut cfg.dataset.root);
        abs(&mut cfg.dataset.regions);
        if let Some(p) = cfg.dataset.deep_features.as_mut() {
            abs(p);
        }
        abs(&mut cfg.placement.plan);
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GaaError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn category_root(&self) -> PathBuf {
        match &self.dataset.category {
            Some(c) if !c.is_empty() => self.dataset.root.join(c),
            _ => self.dataset.root.clone(),
        }
    }

    /// Checks every setting and referenced path before any work starts.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(GaaError::Config(msg));
        let root = self.category_root();
        if !root.is_dir() {
            return fail(format!("dataset root {} is not a directory", root.display()));
        }
        if !self.dataset.regions.is_dir() {
            return fail(format!("regions directory {} does not exist", self.dataset.regions.display()));
        }
        if !self.placement.plan.is_file() {
            return fail(format!("plan file {} does not exist", self.placement.plan.display()));
        }
        if let Some(p) = &self.dataset.deep_features {
            if !p.is_file() {
                return fail(format!("deep feature file {} does not exist", p.display()));
            }
        }
        let f = &self.features;
        let weights = [f.deep_weight, f.lab_weight, f.lbp_weight];
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
            || f.lab_weight + f.lbp_weight + if self.dataset.deep_features.is_some() { f.deep_weight } else { 0.0 }
                <= 0.0
        {
            return fail("feature weights must be nonnegative with a positive sum".into());
        }
        if !(2..=24).contains(&f.lbp_neighbors) || f.lbp_radius == 0 {
            return fail("lbp_neighbors must be in 2..=24 and lbp_radius at least 1".into());
        }
        self.cluster.validate().map_err(|e| GaaError::Config(format!("cluster: {e}")))?;
        self.enhance.validate().map_err(|e| GaaError::Config(format!("enhance: {e}")))?;
        self.placement.defaults.validate().map_err(|e| GaaError::Config(format!("placement: {e}")))?;
        if !(0.0..=1.0).contains(&self.placement.overlap_threshold) {
            return fail("placement.overlap_threshold must lie in [0, 1]".into());
        }
        if self.placement.combined_members < 2 || self.placement.max_retries == 0 {
            return fail("placement.combined_members must be >= 2 and max_retries >= 1".into());
        }
        self.filter.training.validate().map_err(|e| GaaError::Config(format!("filter: {e}")))?;
        if self.filter.patch == 0 || self.filter.stride == 0 {
            return fail("filter.patch and filter.stride must be positive".into());
        }
        Ok(())
    }
}
