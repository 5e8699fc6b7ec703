//! Stage runner: validation, output-directory lock, content-hashed stage
//! skipping and the run report.

pub mod config;
pub mod stages;

use std::collections::{BTreeMap, HashMap};
use std::fs::OpenOptions;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use gaa_core::clustering::ClusterConfig;
use gaa_core::enhance::EnhanceConfig;
use gaa_core::filtering::TrainConfig;
use gaa_core::placement::SynthesisConfig;
use gaa_core::rng::derive_seed;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::PipelineConfig;

use crate::error::{GaaError, IoContext, Result};
use crate::io::dataset::{scan_dataset, scan_regions, DatasetIndex};
use crate::io::manifest::{load_manifest, relative_to, resolve, save_manifest};
use crate::io::plan::load_plan;
use crate::io::write_file;
use crate::model_file::{load_model, save_model, PatchGeometry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Features,
    Cluster,
    Enhance,
    Place,
    TrainFilter,
    Score,
    Filter,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Features,
        Stage::Cluster,
        Stage::Enhance,
        Stage::Place,
        Stage::TrainFilter,
        Stage::Score,
        Stage::Filter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Features => "features",
            Stage::Cluster => "cluster",
            Stage::Enhance => "enhance",
            Stage::Place => "place",
            Stage::TrainFilter => "train-filter",
            Stage::Score => "score",
            Stage::Filter => "filter",
        }
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ran,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    pub status: StageStatus,
    /// Items produced: records, clusters, pool masks, placed entries,
    /// training images, scored entries, kept entries.
    pub count: usize,
    pub seconds: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub stages: Vec<StageReport>,
}

/// Files under the output directory.
#[derive(Clone, Debug)]
pub struct OutputPaths {
    pub root: PathBuf,
}

impl OutputPaths {
    pub fn features(&self) -> PathBuf {
        self.root.join("features")
    }
    pub fn cluster(&self) -> PathBuf {
        self.root.join("cluster")
    }
    pub fn pool(&self) -> PathBuf {
        self.root.join("pool")
    }
    pub fn placement(&self) -> PathBuf {
        self.root.join("placement")
    }
    pub fn filter_dir(&self) -> PathBuf {
        self.root.join("filter")
    }
    pub fn model(&self) -> PathBuf {
        self.filter_dir().join("filter.model")
    }
    /// Placed masks before scoring.
    pub fn aligned(&self) -> PathBuf {
        self.root.join("aligned.tsv")
    }
    pub fn scored(&self) -> PathBuf {
        self.root.join("scored.tsv")
    }
    /// The final, filtered manifest.
    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.tsv")
    }
    pub fn report(&self) -> PathBuf {
        self.root.join("run_report.json")
    }
    fn lock(&self) -> PathBuf {
        self.root.join(".gaa.lock")
    }
    fn stamp(&self, stage: Stage) -> PathBuf {
        self.root.join(".gaa").join("stages").join(format!("{}.json", stage.name()))
    }
}

struct LockGuard(PathBuf);

impl LockGuard {
    fn acquire(path: PathBuf) -> Result<Self> {
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(GaaError::Locked(path)),
            Err(e) => Err(GaaError::io(&path, e)),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

#[derive(Serialize, Deserialize)]
struct Stamp {
    key: String,
    count: usize,
    warnings: Vec<String>,
    outputs: BTreeMap<String, String>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).at(path)?;
    Ok(hex(&Sha256::digest(&bytes)))
}

/// Digest of every file at or below each path, keyed by path relative to
/// `base`. Missing paths are absent from the map.
fn tree_digests(paths: &[PathBuf], base: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut todo: Vec<PathBuf> = paths.to_vec();
    while let Some(p) = todo.pop() {
        if p.is_dir() {
            for entry in std::fs::read_dir(&p).at(&p)? {
                todo.push(entry.at(&p)?.path());
            }
        } else if p.is_file() {
            out.insert(relative_to(&p, base), file_digest(&p)?);
        }
    }
    Ok(out)
}

/// What a stage reads and writes, for skip decisions.
struct StagePlan {
    settings: String,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

#[derive(Debug)]
pub struct Pipeline {
    cfg: PipelineConfig,
    paths: OutputPaths,
    force: bool,
    index: OnceLock<DatasetIndex>,
}

impl Pipeline {
    /// Validates the configuration; nothing is written.
    pub fn new(cfg: PipelineConfig, force: bool) -> Result<Self> {
        cfg.validate()?;
        let paths = OutputPaths { root: cfg.output.clone() };
        Ok(Self { cfg, paths, force, index: OnceLock::new() })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn paths(&self) -> &OutputPaths {
        &self.paths
    }

    /// Runs `which` in order under the output-directory lock and writes the
    /// run report.
    pub fn run(&self, which: &[Stage]) -> Result<RunReport> {
        std::fs::create_dir_all(&self.paths.root).at(&self.paths.root)?;
        let _lock = LockGuard::acquire(self.paths.lock())?;
        let mut report = RunReport { seed: self.cfg.seed, stages: Vec::new() };
        for &stage in which {
            let r = self.run_stage(stage).map_err(|e| GaaError::Stage { stage: stage.name(), source: Box::new(e) })?;
            match r.status {
                StageStatus::Ran => log::info!("{}: {} items in {:.2}s", stage.name(), r.count, r.seconds),
                StageStatus::Skipped => log::info!("{}: up to date, skipped", stage.name()),
            }
            for w in &r.warnings {
                log::warn!("{}: {w}", stage.name());
            }
            report.stages.push(r);
        }
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write_file(&self.paths.report(), json.as_bytes())?;
        Ok(report)
    }

    fn dataset(&self) -> Result<&DatasetIndex> {
        if let Some(ix) = self.index.get() {
            return Ok(ix);
        }
        let mut ix = scan_dataset(self.cfg.category_root(), self.cfg.dataset.layout)?;
        scan_regions(&mut ix, &self.cfg.dataset.regions)?;
        Ok(self.index.get_or_init(|| ix))
    }

    fn threshold(&self) -> u8 {
        self.cfg.dataset.layout.mask_threshold(self.cfg.dataset.mask_threshold)
    }

    fn stage_seed(&self, stage: Stage) -> u64 {
        derive_seed(self.cfg.seed, &[stage.tag()])
    }

    fn cluster_config(&self) -> ClusterConfig {
        ClusterConfig { seed: self.stage_seed(Stage::Cluster), ..self.cfg.cluster.clone() }
    }

    fn enhance_config(&self) -> EnhanceConfig {
        EnhanceConfig { seed: self.stage_seed(Stage::Enhance), ..self.cfg.enhance.clone() }
    }

    fn synthesis_config(&self) -> SynthesisConfig {
        let p = &self.cfg.placement;
        SynthesisConfig {
            seed: self.stage_seed(Stage::Place),
            overlap_threshold: p.overlap_threshold,
            combined_members: p.combined_members,
            max_retries: p.max_retries,
        }
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.stage_seed(Stage::TrainFilter), ..self.cfg.filter.training }
    }

    fn geometry(&self) -> PatchGeometry {
        PatchGeometry { patch: self.cfg.filter.patch, stride: self.cfg.filter.stride }
    }

    fn generated_dir(&self) -> PathBuf {
        let g = &self.cfg.filter.generated;
        if g.is_relative() {
            self.paths.root.join(g)
        } else {
            g.clone()
        }
    }

    fn plan(&self, stage: Stage) -> Result<StagePlan> {
        let p = &self.paths;
        Ok(match stage {
            Stage::Features => {
                let ix = self.dataset()?;
                let mut inputs: Vec<PathBuf> = Vec::new();
                for r in &ix.anomaly_records {
                    inputs.push(r.image.clone());
                    inputs.extend(r.masks.iter().cloned());
                }
                inputs.extend(self.cfg.dataset.deep_features.iter().cloned());
                StagePlan {
                    settings: settings_json(&(&self.cfg.dataset.layout, self.threshold(), &self.cfg.features)),
                    inputs,
                    outputs: vec![p.features()],
                }
            }
            Stage::Cluster => StagePlan {
                settings: settings_json(&self.cluster_config()),
                inputs: vec![p.features().join("fused.gaat"), p.features().join("records.tsv")],
                outputs: vec![p.cluster()],
            },
            Stage::Enhance => {
                let records = stages::load_records(&p.features().join("records.tsv"))?;
                let mut inputs = vec![p.features().join("records.tsv"), p.cluster().join("assignments.tsv")];
                inputs.extend(records.into_iter().flat_map(|r| r.masks));
                StagePlan {
                    settings: settings_json(&(self.threshold(), &self.enhance_config())),
                    inputs,
                    outputs: vec![p.pool()],
                }
            }
            Stage::Place => {
                let ix = self.dataset()?;
                let mut inputs = vec![p.pool(), self.cfg.placement.plan.clone()];
                for records in ix.region_records.values() {
                    inputs.extend(records.iter().map(|(_, m)| m.clone()));
                }
                StagePlan {
                    settings: settings_json(&(
                        &ix.normal_images,
                        &ix.region_records,
                        &self.cfg.placement.defaults,
                        &self.synthesis_config(),
                        &self.cfg.filter.generated,
                    )),
                    inputs,
                    outputs: vec![p.placement(), p.aligned()],
                }
            }
            Stage::TrainFilter => StagePlan {
                settings: settings_json(&(&self.train_config(), &self.geometry())),
                inputs: self.dataset()?.normal_images.clone(),
                outputs: vec![p.filter_dir()],
            },
            Stage::Score => {
                let manifest = load_manifest(p.aligned())?;
                let mut inputs = vec![p.aligned(), p.placement().join("placement.tsv"), p.model()];
                let hosts = self.host_fallback()?;
                for e in &manifest.entries {
                    let image = resolve(&p.aligned(), &e.image_path);
                    match (image.is_file(), hosts.get(&e.image_path)) {
                        (false, Some(host)) => inputs.push(host.clone()),
                        _ => inputs.push(image),
                    }
                }
                StagePlan {
                    settings: settings_json(&(self.cfg.filter.upsample, self.cfg.filter.missing_generated)),
                    inputs,
                    outputs: vec![p.scored()],
                }
            }
            Stage::Filter => StagePlan {
                settings: settings_json(&self.cfg.filter.top),
                inputs: vec![p.scored()],
                outputs: vec![p.manifest()],
            },
        })
    }

    fn stage_key(&self, stage: Stage, plan: &StagePlan) -> Result<String> {
        let mut h = Sha256::new();
        h.update(stage.name().as_bytes());
        h.update([0]);
        h.update(plan.settings.as_bytes());
        h.update([0]);
        for input in &plan.inputs {
            let digests = tree_digests(std::slice::from_ref(input), &self.paths.root)?;
            if digests.is_empty() {
                return Err(GaaError::format(input, "missing input (has the previous stage run?)"));
            }
            for (name, d) in digests {
                h.update(name.as_bytes());
                h.update([0]);
                h.update(d.as_bytes());
                h.update([0]);
            }
        }
        Ok(hex(&h.finalize()))
    }

    fn up_to_date(&self, stage: Stage, key: &str, outputs: &[PathBuf]) -> Option<Stamp> {
        let text = std::fs::read_to_string(self.paths.stamp(stage)).ok()?;
        let stamp: Stamp = serde_json::from_str(&text).ok()?;
        let current = tree_digests(outputs, &self.paths.root).ok()?;
        (stamp.key == key && stamp.outputs == current).then_some(stamp)
    }

    fn run_stage(&self, stage: Stage) -> Result<StageReport> {
        let start = Instant::now();
        let plan = self.plan(stage)?;
        let key = self.stage_key(stage, &plan)?;
        if !self.force {
            if let Some(stamp) = self.up_to_date(stage, &key, &plan.outputs) {
                return Ok(StageReport {
                    stage,
                    status: StageStatus::Skipped,
                    count: stamp.count,
                    seconds: start.elapsed().as_secs_f64(),
                    warnings: stamp.warnings,
                });
            }
        }
        let stamp_path = self.paths.stamp(stage);
        if stamp_path.exists() {
            std::fs::remove_file(&stamp_path).at(&stamp_path)?;
        }
        for out in &plan.outputs {
            if out.is_dir() {
                std::fs::remove_dir_all(out).at(out)?;
            } else if out.exists() {
                std::fs::remove_file(out).at(out)?;
            }
        }
        let (count, warnings) = self.execute(stage)?;
        let stamp =
            Stamp { key, count, warnings: warnings.clone(), outputs: tree_digests(&plan.outputs, &self.paths.root)? };
        write_file(&stamp_path, serde_json::to_string_pretty(&stamp).expect("stamp serializes").as_bytes())?;
        Ok(StageReport { stage, status: StageStatus::Ran, count, seconds: start.elapsed().as_secs_f64(), warnings })
    }

    /// Manifest image path of each placed entry -> its host normal image.
    fn host_fallback(&self) -> Result<HashMap<String, PathBuf>> {
        let records = stages::load_placements(&self.paths.placement().join("placement.tsv"))?;
        let generated = self.generated_dir();
        Ok(records
            .into_iter()
            .map(|r| (relative_to(&generated.join(format!("{}.png", r.id)), &self.paths.root), r.host))
            .collect())
    }

    fn execute(&self, stage: Stage) -> Result<(usize, stages::Warnings)> {
        let p = &self.paths;
        match stage {
            Stage::Features => {
                let ix = self.dataset()?;
                let (f, mut warnings) = stages::compute_features(
                    ix,
                    self.cfg.dataset.mask_threshold,
                    &self.cfg.features,
                    self.cfg.dataset.deep_features.as_deref(),
                )?;
                stages::save_features(&p.features(), &f)?;
                let mut all = ix.warnings.clone();
                all.append(&mut warnings);
                Ok((f.records.len(), all))
            }
            Stage::Cluster => {
                let f = stages::load_features(&p.features())?;
                let c = stages::cluster_records(&f, &self.cluster_config())?;
                stages::save_clusters(&p.cluster(), &f, &c)?;
                let leaves = c.trees.values().map(|t| t.leaf_count).sum();
                Ok((leaves, Vec::new()))
            }
            Stage::Enhance => {
                let records = stages::load_records(&p.features().join("records.tsv"))?;
                let clusters = stages::load_assignments(&p.cluster().join("assignments.tsv"))?;
                let (pool, warnings) =
                    stages::enhance_pool(&records, &clusters, self.threshold(), &self.enhance_config())?;
                stages::save_pool(&p.pool(), &pool, &self.cfg.category_root())?;
                Ok((pool.len(), warnings))
            }
            Stage::Place => {
                let ix = self.dataset()?;
                let (samples, mut warnings) = stages::load_samples(ix, self.threshold())?;
                let pool = stages::load_pool(&p.pool())?;
                let plan = load_plan(&self.cfg.placement.plan, &self.cfg.placement.defaults)?;
                let (manifest, _, mut more) = stages::place_and_save(
                    &samples,
                    &pool,
                    &plan,
                    &self.synthesis_config(),
                    &p.placement(),
                    &p.root,
                    &self.generated_dir(),
                )?;
                save_manifest(p.aligned(), &manifest)?;
                warnings.append(&mut more);
                Ok((manifest.len(), warnings))
            }
            Stage::TrainFilter => {
                let images = &self.dataset()?.normal_images;
                let model = stages::train_on_images(images, self.geometry(), &self.train_config())?;
                save_model(p.model(), &model, self.geometry())?;
                Ok((images.len(), Vec::new()))
            }
            Stage::Score => {
                let manifest = load_manifest(p.aligned())?;
                let (model, geometry) = load_model(p.model())?;
                let (scored, warnings) = stages::score_manifest(
                    &manifest,
                    &p.aligned(),
                    &model,
                    geometry,
                    self.cfg.filter.upsample,
                    &self.host_fallback()?,
                    self.cfg.filter.missing_generated,
                )?;
                save_manifest(p.scored(), &scored)?;
                Ok((scored.len(), warnings))
            }
            Stage::Filter => {
                let scored = load_manifest(p.scored())?;
                let kept = stages::filter_top(&scored, self.cfg.filter.top)?;
                save_manifest(p.manifest(), &kept)?;
                Ok((kept.len(), Vec::new()))
            }
        }
    }
}

fn settings_json(v: &impl Serialize) -> String {
    serde_json::to_string(v).expect("settings serialize")
}
