//! The pipeline stages as plain functions over files. Each one is usable on
//! its own (the CLI subcommands call them directly) and returns the warnings
//! it produced.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use gaa_core::clustering::{multi_round_cluster, ClusterConfig, ClusterTree};
use gaa_core::enhance::{enhance, EnhanceConfig};
use gaa_core::features::{fuse_features, lab_stats, lbp_histogram, FeatureBlock, LbpParams};
use gaa_core::filtering::{
    ars, extract_local_features, score_image, select_top, train_filter, FilterModel, TrainConfig, Upsample,
};
use gaa_core::manifest::{AnomalyKind, ManifestEntry, PairManifest};
use gaa_core::placement::{synthesize_aligned, NormalSample, PlanRow, PoolMask, SynthesisConfig};
use gaa_core::rng::derive_seed;
use gaa_core::{BinaryMask, FeatureMatrix};
use rayon::prelude::*;

use super::config::{FeatureSection, MissingGenerated};
use crate::error::{GaaError, IoContext, Result};
use crate::io::dataset::{load_record_mask, AnomalyRecord, DatasetIndex};
use crate::io::gaat::{load_feature_file, save_feature_file};
use crate::io::manifest::{relative_to, resolve};
use crate::io::png::{load_mask, load_rgb, save_mask};
use crate::io::write_file;
use crate::model_file::PatchGeometry;

pub type Warnings = Vec<String>;

fn tsv_fields<'a>(line: &'a str, n: usize, origin: &Path, line_no: usize) -> Result<Vec<&'a str>> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() != n {
        return Err(GaaError::format(origin, format!("line {}: expected {n} fields, found {}", line_no + 1, f.len())));
    }
    Ok(f)
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

// ---------------------------------------------------------------- features

/// Anomaly records in feature-row order: `image  label  mask[;mask...]`.
pub fn save_records(path: &Path, records: &[AnomalyRecord]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        let masks: Vec<String> = r.masks.iter().map(|m| m.to_string_lossy().into_owned()).collect();
        text += &format!("{}\t{}\t{}\n", r.image.display(), r.label, masks.join(";"));
    }
    write_file(path, text.as_bytes())
}

pub fn load_records(path: &Path) -> Result<Vec<AnomalyRecord>> {
    let text = std::fs::read_to_string(path).at(path)?;
    data_lines(&text)
        .map(|(n, line)| {
            let f = tsv_fields(line, 3, path, n)?;
            Ok(AnomalyRecord {
                image: PathBuf::from(f[0]),
                label: f[1].to_string(),
                masks: f[2].split(';').map(PathBuf::from).collect(),
            })
        })
        .collect()
}

pub struct Features {
    pub records: Vec<AnomalyRecord>,
    pub fused: FeatureMatrix,
}

/// LAB statistics and LBP histograms of every anomaly, optionally joined by
/// a deep descriptor matrix (one row per scanned record), fused per block.
/// Records with an empty mask are dropped with a warning.
pub fn compute_features(
    index: &DatasetIndex,
    mask_threshold: u8,
    cfg: &FeatureSection,
    deep: Option<&Path>,
) -> Result<(Features, Warnings)> {
    let threshold = index.layout.mask_threshold(mask_threshold);
    let params = LbpParams { neighbors: cfg.lbp_neighbors, radius: cfg.lbp_radius };
    type Row = Option<(Vec<f64>, Vec<f64>)>;
    let rows: Vec<Result<Row>> = index
        .anomaly_records
        .par_iter()
        .map(|r| {
            let img = load_rgb(&r.image)?;
            let mask = load_record_mask(r, threshold)?;
            if mask.is_empty() {
                return Ok(None);
            }
            let lab = lab_stats(&img, &mask).map_err(|e| GaaError::core(&r.image, e))?;
            let lbp = lbp_histogram(&img, &mask, params).map_err(|e| GaaError::core(&r.image, e))?;
            Ok(Some((lab.to_vec(), lbp)))
        })
        .collect();

    let deep = match deep {
        Some(path) => {
            let d = load_feature_file(path)?;
            if d.rows() != index.anomaly_records.len() {
                return Err(GaaError::format(
                    path,
                    format!("{} rows for {} anomaly records", d.rows(), index.anomaly_records.len()),
                ));
            }
            Some(d)
        }
        None => None,
    };
    let mut warnings = Vec::new();
    let mut kept = Vec::new();
    let (mut lab, mut lbp) = (Vec::new(), Vec::new());
    for (i, row) in rows.into_iter().enumerate() {
        match row? {
            Some((a, b)) => {
                kept.push(i);
                lab.push(a);
                lbp.push(b);
            }
            None => {
                warnings.push(format!("{}: empty ground-truth mask, skipped", index.anomaly_records[i].image.display()))
            }
        }
    }
    if kept.is_empty() {
        return Err(GaaError::Config("no usable anomaly records".into()));
    }
    let mut blocks = vec![
        FeatureBlock::new("lab", FeatureMatrix::from_rows(&lab)?, cfg.lab_weight),
        FeatureBlock::new("lbp", FeatureMatrix::from_rows(&lbp)?, cfg.lbp_weight),
    ];
    if let Some(d) = deep {
        blocks.insert(0, FeatureBlock::new("deep", d.select_rows(&kept), cfg.deep_weight));
    }
    let fused = fuse_features(&blocks)?;
    let records = kept.iter().map(|&i| index.anomaly_records[i].clone()).collect();
    Ok((Features { records, fused }, warnings))
}

pub fn save_features(dir: &Path, f: &Features) -> Result<()> {
    save_feature_file(dir.join("fused.gaat"), &f.fused)?;
    save_records(&dir.join("records.tsv"), &f.records)
}

pub fn load_features(dir: &Path) -> Result<Features> {
    let records = load_records(&dir.join("records.tsv"))?;
    let fused = load_feature_file(dir.join("fused.gaat"))?;
    if fused.rows() != records.len() {
        return Err(GaaError::format(dir.join("fused.gaat"), "row count differs from records.tsv"));
    }
    Ok(Features { records, fused })
}

// ----------------------------------------------------------------- cluster

pub struct Clusters {
    /// Global cluster id per record.
    pub ids: Vec<u32>,
    /// Tree per coarse label.
    pub trees: BTreeMap<String, ClusterTree>,
}

/// Refines every coarse label separately. Leaf `j` of the `g`-th label (in
/// label order) gets the global id `offset_g + j`.
pub fn cluster_records(f: &Features, cfg: &ClusterConfig) -> Result<Clusters> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in f.records.iter().enumerate() {
        groups.entry(r.label.as_str()).or_default().push(i);
    }
    let mut ids = vec![0u32; f.records.len()];
    let mut trees = BTreeMap::new();
    let mut offset = 0u32;
    for (g, (label, members)) in groups.into_iter().enumerate() {
        let tree = if members.len() < 2 * cfg.k_min {
            // Too few samples for a sweep: the label is one cluster.
            ClusterTree { rounds: Vec::new(), leaf_labels: vec![0; members.len()], leaf_count: 1 }
        } else {
            let sub = f.fused.select_rows(&members);
            let cfg = ClusterConfig { seed: derive_seed(cfg.seed, &[g as u64]), ..cfg.clone() };
            multi_round_cluster(&sub, &cfg).map_err(|e| {
                GaaError::format(&f.records[members[0]].image, format!("clustering label '{label}': {e}"))
            })?
        };
        for (local, &i) in members.iter().enumerate() {
            ids[i] = offset + tree.leaf_labels[local] as u32;
        }
        offset += tree.leaf_count as u32;
        trees.insert(label.to_string(), tree);
    }
    Ok(Clusters { ids, trees })
}

pub fn save_clusters(dir: &Path, f: &Features, c: &Clusters) -> Result<()> {
    let mut text = String::new();
    for (r, id) in f.records.iter().zip(&c.ids) {
        text += &format!("{}\t{}\t{}\n", r.image.display(), r.label, id);
    }
    write_file(&dir.join("assignments.tsv"), text.as_bytes())?;
    let json = serde_json::to_string_pretty(&c.trees).expect("trees serialize");
    write_file(&dir.join("trees.json"), json.as_bytes())
}

/// Cluster id per record image.
pub fn load_assignments(path: &Path) -> Result<HashMap<PathBuf, u32>> {
    let text = std::fs::read_to_string(path).at(path)?;
    data_lines(&text)
        .map(|(n, line)| {
            let f = tsv_fields(line, 3, path, n)?;
            let id = f[2].parse().map_err(|_| GaaError::format(path, format!("line {}: bad cluster id", n + 1)))?;
            Ok((PathBuf::from(f[0]), id))
        })
        .collect()
}

// ----------------------------------------------------------------- enhance

pub struct PoolItem {
    pub cluster: u32,
    pub source: PathBuf,
    pub mask: BinaryMask,
}

/// Enhances every ground-truth mask toward the mean area of its cluster.
/// Record `i` uses the seed `(cfg.seed, i)`; degenerate results are dropped
/// with a warning.
pub fn enhance_pool(
    records: &[AnomalyRecord],
    clusters: &HashMap<PathBuf, u32>,
    threshold: u8,
    cfg: &EnhanceConfig,
) -> Result<(Vec<PoolItem>, Warnings)> {
    let masks: Vec<(u32, BinaryMask)> = records
        .par_iter()
        .map(|r| {
            let id = *clusters
                .get(&r.image)
                .ok_or_else(|| GaaError::format(&r.image, "record has no cluster assignment"))?;
            Ok((id, load_record_mask(r, threshold)?))
        })
        .collect::<Result<_>>()?;
    let mut area: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for (id, m) in &masks {
        let e = area.entry(*id).or_default();
        e.0 += m.area() as f64;
        e.1 += 1;
    }
    let out: Vec<Result<Option<PoolItem>>> = masks
        .par_iter()
        .zip(records)
        .enumerate()
        .map(|(i, ((id, m), r))| {
            let (sum, n) = area[id];
            let cfg = EnhanceConfig { seed: derive_seed(cfg.seed, &[i as u64]), ..cfg.clone() };
            match enhance(m, &cfg, sum / n as f64) {
                Ok(mask) => Ok(Some(PoolItem { cluster: *id, source: r.image.clone(), mask })),
                Err(gaa_core::Error::DegenerateEnhancement | gaa_core::Error::EmptyMask) => Ok(None),
                Err(e) => Err(GaaError::core(&r.image, e)),
            }
        })
        .collect();
    let mut pool = Vec::new();
    let mut warnings = Vec::new();
    for (r, item) in records.iter().zip(out) {
        match item? {
            Some(p) => pool.push(p),
            None => warnings.push(format!("{}: enhancement degenerated to an empty mask, skipped", r.image.display())),
        }
    }
    Ok((pool, warnings))
}

/// Writes `NNNN.png` per item and `pool.tsv` (`file  cluster  source`), with
/// sources relative to `dataset_root`.
pub fn save_pool(dir: &Path, pool: &[PoolItem], dataset_root: &Path) -> Result<()> {
    let mut text = String::new();
    for (i, p) in pool.iter().enumerate() {
        let name = format!("{i:04}.png");
        save_mask(dir.join(&name), &p.mask)?;
        text += &format!("{name}\t{}\t{}\n", p.cluster, relative_to(&p.source, dataset_root));
    }
    write_file(&dir.join("pool.tsv"), text.as_bytes())
}

pub fn load_pool(dir: &Path) -> Result<Vec<PoolMask>> {
    let list = dir.join("pool.tsv");
    let text = std::fs::read_to_string(&list).at(&list)?;
    data_lines(&text)
        .map(|(n, line)| {
            let f = tsv_fields(line, 3, &list, n)?;
            let cluster =
                f[1].parse().map_err(|_| GaaError::format(&list, format!("line {}: bad cluster id", n + 1)))?;
            Ok(PoolMask { cluster, mask: load_mask(dir.join(f[0]), 127)? })
        })
        .collect()
}

// ------------------------------------------------------------------- place

/// Normal images with their region masks. Empty region masks are dropped
/// with a warning; images without regions are not hosts.
pub fn load_samples(index: &DatasetIndex, threshold: u8) -> Result<(Vec<NormalSample>, Warnings)> {
    let mut by_image: BTreeMap<&Path, BTreeMap<String, BinaryMask>> = BTreeMap::new();
    let mut warnings = Vec::new();
    for (name, records) in &index.region_records {
        for (image, file) in records {
            let m = load_mask(file, threshold)?;
            if m.is_empty() {
                warnings.push(format!("{}: empty region mask, ignored", file.display()));
                continue;
            }
            by_image.entry(image.as_path()).or_default().insert(name.clone(), m);
        }
    }
    let samples = index
        .normal_images
        .iter()
        .filter_map(|p| {
            by_image
                .remove(p.as_path())
                .map(|regions| NormalSample { image: p.to_string_lossy().into_owned(), regions })
        })
        .collect();
    Ok((samples, warnings))
}

/// Provenance of one placed mask.
#[derive(Clone, Debug, PartialEq)]
pub struct PlacementRecord {
    pub id: String,
    pub host: PathBuf,
    pub kind: AnomalyKind,
    pub region: String,
    pub cluster: Option<u32>,
    pub dx: isize,
    pub dy: isize,
    pub rotation_deg: f64,
    pub scale: f64,
    /// Member mask files of a combined mask, relative to the placement file.
    pub members: Vec<String>,
}

const PLACEMENT_HEADER: &str = "#id\thost\tkind\tregion\tcluster\tdx\tdy\trotation_deg\tscale\tmembers";

/// Runs the plan and writes `masks/<id>.png` (plus `masks/<id>_m<j>.png` for
/// combined members) and `placement.tsv` under `dir`. Returns the aligned
/// manifest, whose image paths are `<generated>/<id>.png` and mask paths
/// point into `dir`, both relative to `manifest_dir`.
pub fn place_and_save(
    samples: &[NormalSample],
    pool: &[PoolMask],
    plan: &[PlanRow],
    cfg: &SynthesisConfig,
    dir: &Path,
    manifest_dir: &Path,
    generated: &Path,
) -> Result<(PairManifest, Vec<PlacementRecord>, Warnings)> {
    let synthesis = synthesize_aligned(samples, pool, plan, cfg)?;
    let mut entries = Vec::new();
    let mut records = Vec::new();
    for e in &synthesis.entries {
        let id = format!("r{:02}_e{:04}", e.row, e.entry);
        let mask_file = dir.join("masks").join(format!("{id}.png"));
        save_mask(&mask_file, &e.placed.mask)?;
        let mut members = Vec::new();
        for (j, m) in e.placed.members.iter().enumerate() {
            let rel = format!("masks/{id}_m{j}.png");
            save_mask(dir.join(&rel), m)?;
            members.push(rel);
        }
        let t = e.placed.transform;
        records.push(PlacementRecord {
            id: id.clone(),
            host: PathBuf::from(&samples[e.image_index].image),
            kind: e.placed.kind,
            region: e.placed.source_region.clone(),
            cluster: e.cluster,
            dx: t.dx,
            dy: t.dy,
            rotation_deg: t.rotation_deg,
            scale: t.scale,
            members,
        });
        entries.push(ManifestEntry {
            image_path: relative_to(&generated.join(format!("{id}.png")), manifest_dir),
            mask_path: relative_to(&mask_file, manifest_dir),
            cluster: e.cluster,
            kind: e.placed.kind,
            ars: None,
        });
    }
    let mut text = format!("{PLACEMENT_HEADER}\n");
    for r in &records {
        let cluster = r.cluster.map_or("-".to_string(), |c| c.to_string());
        let members = if r.members.is_empty() { "-".to_string() } else { r.members.join(",") };
        text += &format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.id,
            r.host.display(),
            r.kind.as_str(),
            r.region,
            cluster,
            r.dx,
            r.dy,
            r.rotation_deg,
            r.scale,
            members
        );
    }
    write_file(&dir.join("placement.tsv"), text.as_bytes())?;
    Ok((PairManifest::new(entries), records, synthesis.warnings))
}

pub fn load_placements(path: &Path) -> Result<Vec<PlacementRecord>> {
    let text = std::fs::read_to_string(path).at(path)?;
    data_lines(&text)
        .map(|(n, line)| {
            let f = tsv_fields(line, 10, path, n)?;
            let bad = |what: &str| GaaError::format(path, format!("line {}: bad {what}", n + 1));
            Ok(PlacementRecord {
                id: f[0].to_string(),
                host: PathBuf::from(f[1]),
                kind: AnomalyKind::parse(f[2]).ok_or_else(|| bad("kind"))?,
                region: f[3].to_string(),
                cluster: match f[4] {
                    "-" => None,
                    s => Some(s.parse().map_err(|_| bad("cluster"))?),
                },
                dx: f[5].parse().map_err(|_| bad("dx"))?,
                dy: f[6].parse().map_err(|_| bad("dy"))?,
                rotation_deg: f[7].parse().map_err(|_| bad("rotation"))?,
                scale: f[8].parse().map_err(|_| bad("scale"))?,
                members: match f[9] {
                    "-" => Vec::new(),
                    s => s.split(',').map(str::to_string).collect(),
                },
            })
        })
        .collect()
}

// ------------------------------------------------------------------ filter

/// Trains on the local patch features of the given normal images.
pub fn train_on_images(images: &[PathBuf], geometry: PatchGeometry, cfg: &TrainConfig) -> Result<FilterModel> {
    let maps = images
        .par_iter()
        .map(|p| {
            let img = load_rgb(p)?;
            extract_local_features(&img, geometry.patch, geometry.stride).map_err(|e| GaaError::core(p, e))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(train_filter(&maps, cfg)?)
}

/// Scores every entry of `manifest` (read from `manifest_path`): the ARS of
/// its mask under the filter's score map of its image. A missing image is
/// replaced by `fallback[image_path]` when `missing` allows it.
pub fn score_manifest(
    manifest: &PairManifest,
    manifest_path: &Path,
    model: &FilterModel,
    geometry: PatchGeometry,
    upsample: Upsample,
    fallback: &HashMap<String, PathBuf>,
    missing: MissingGenerated,
) -> Result<(PairManifest, Warnings)> {
    let scored: Vec<Result<(ManifestEntry, Option<String>)>> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let mut image_path = resolve(manifest_path, &e.image_path);
            let mut note = None;
            if !image_path.is_file() {
                match (missing, fallback.get(&e.image_path)) {
                    (MissingGenerated::Host, Some(host)) => {
                        note =
                            Some(format!("{}: not found, scored host image {}", image_path.display(), host.display()));
                        image_path = host.clone();
                    }
                    _ => return Err(GaaError::format(&image_path, "generated image not found")),
                }
            }
            let mask_path = resolve(manifest_path, &e.mask_path);
            let img = load_rgb(&image_path)?;
            let mask = load_mask(&mask_path, 127)?;
            let (w, h) = img.dims();
            let features = extract_local_features(&img, geometry.patch, geometry.stride)
                .map_err(|err| GaaError::core(&image_path, err))?;
            let map = score_image(model, &features, h, w, upsample).map_err(|err| GaaError::core(&image_path, err))?;
            let value = ars(&map, &mask).map_err(|err| GaaError::core(&mask_path, err))?;
            Ok((ManifestEntry { ars: Some(value), ..e.clone() }, note))
        })
        .collect();
    let mut entries = Vec::new();
    let mut substituted = Vec::new();
    for s in scored {
        let (e, note) = s?;
        entries.push(e);
        substituted.extend(note);
    }
    for note in &substituted {
        log::debug!("{note}");
    }
    let warnings = match substituted.len() {
        0 => Vec::new(),
        n => vec![format!("{n} of {} generated images not found; their host images were scored", entries.len())],
    };
    Ok((PairManifest::new(entries), warnings))
}

pub fn filter_top(scored: &PairManifest, top: usize) -> Result<PairManifest> {
    Ok(select_top(scored, top)?)
}
