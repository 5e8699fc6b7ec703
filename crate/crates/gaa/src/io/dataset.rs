use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gaa_core::BinaryMask;
use serde::{Deserialize, Serialize};

use super::png::{image_dims, load_mask};
use crate::error::{GaaError, IoContext, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// `ground_truth/<defect>/<stem>_mask.png`
    #[default]
    MvtecAd,
    /// `ground_truth/<defect>/<stem>/*.png`, unioned; any nonzero level is set.
    MvtecLoco,
}

impl Layout {
    /// LOCO ground truths carry small label values rather than 255.
    pub fn mask_threshold(self, configured: u8) -> u8 {
        match self {
            Self::MvtecAd => configured,
            Self::MvtecLoco => 0,
        }
    }
}

/// A defect image and the ground-truth file(s) describing its anomaly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnomalyRecord {
    pub image: PathBuf,
    pub masks: Vec<PathBuf>,
    /// Defect folder name.
    pub label: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub root: PathBuf,
    pub layout: Layout,
    pub normal_images: Vec<PathBuf>,
    pub anomaly_records: Vec<AnomalyRecord>,
    /// Region name -> (normal image, region mask), in normal-image order.
    pub region_records: BTreeMap<String, Vec<(PathBuf, PathBuf)>>,
    pub warnings: Vec<String>,
}

/// Sorted `.png` files directly inside `dir`.
pub fn png_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).at(dir)? {
        let path = entry.at(dir)?.path();
        let is_png = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn subdirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).at(dir)? {
        let path = entry.at(dir)?.path();
        if path.is_dir() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn require_dir(path: PathBuf) -> Result<PathBuf> {
    if path.is_dir() {
        Ok(path)
    } else {
        Err(GaaError::format(&path, "missing mandatory directory"))
    }
}

/// Enumerates one category: normal training images and every defect test
/// image paired with its ground truth. Unpaired or mis-sized anomalies are
/// excluded with a warning. All lists are in lexicographic path order.
pub fn scan_dataset(root: impl AsRef<Path>, layout: Layout) -> Result<DatasetIndex> {
    let root = root.as_ref().to_path_buf();
    let normal_images = png_files(&require_dir(root.join("train").join("good"))?)?;
    let test = require_dir(root.join("test"))?;
    let ground_truth = root.join("ground_truth");
    let mut index = DatasetIndex { root: root.clone(), layout, normal_images, ..DatasetIndex::default() };

    for defect_dir in subdirs(&test)? {
        let label = stem(&defect_dir);
        if label == "good" {
            continue;
        }
        let gt_dir = require_dir(ground_truth.clone())?.join(&label);
        for image in png_files(&defect_dir)? {
            let masks = match layout {
                Layout::MvtecAd => {
                    let m = gt_dir.join(format!("{}_mask.png", stem(&image)));
                    if m.is_file() {
                        vec![m]
                    } else {
                        Vec::new()
                    }
                }
                Layout::MvtecLoco => {
                    let d = gt_dir.join(stem(&image));
                    if d.is_dir() {
                        png_files(&d)?
                    } else {
                        Vec::new()
                    }
                }
            };
            if masks.is_empty() {
                index.warnings.push(format!("{}: no ground-truth mask, skipped", image.display()));
                continue;
            }
            let dims = image_dims(&image)?;
            if let Some(m) = masks.iter().find(|m| image_dims(m).map_or(true, |d| d != dims)) {
                index.warnings.push(format!(
                    "{}: mask {} does not match the image size, skipped",
                    image.display(),
                    m.display()
                ));
                continue;
            }
            index.anomaly_records.push(AnomalyRecord { image, masks, label: label.clone() });
        }
    }
    for w in &index.warnings {
        log::warn!("{w}");
    }
    Ok(index)
}

/// Attaches region masks stored as `<dir>/<region>/<normal stem>.png`.
/// Files naming no normal image are reported and ignored.
pub fn scan_regions(index: &mut DatasetIndex, dir: impl AsRef<Path>) -> Result<()> {
    let dir = require_dir(dir.as_ref().to_path_buf())?;
    let by_stem: BTreeMap<String, &PathBuf> = index.normal_images.iter().map(|p| (stem(p), p)).collect();
    for region_dir in subdirs(&dir)? {
        let name = stem(&region_dir);
        let mut records = Vec::new();
        for file in png_files(&region_dir)? {
            match by_stem.get(&stem(&file)) {
                Some(&image) => records.push((image.clone(), file)),
                None => {
                    let w = format!("{}: no normal image with this name, ignored", file.display());
                    log::warn!("{w}");
                    index.warnings.push(w);
                }
            }
        }
        records.sort();
        index.region_records.insert(name, records);
    }
    Ok(())
}

/// Union of a record's ground-truth masks.
pub fn load_record_mask(record: &AnomalyRecord, threshold: u8) -> Result<BinaryMask> {
    let mut masks = record.masks.iter();
    let first = masks.next().ok_or_else(|| GaaError::format(&record.image, "record has no mask"))?;
    let mut out = load_mask(first, threshold)?;
    for m in masks {
        out = out.union(&load_mask(m, threshold)?).map_err(|e| GaaError::core(m, e))?;
    }
    Ok(out)
}
