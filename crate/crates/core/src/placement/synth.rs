use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{combine, make_logical, place_structural, PlacedMask, PlacementStrategy};
use crate::error::{invalid, Error, Result};
use crate::manifest::AnomalyKind;
use crate::rng::{derive_seed, stream};
use crate::BinaryMask;

/// A normal image and its named semantic regions.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalSample {
    pub image: String,
    pub regions: BTreeMap<String, BinaryMask>,
}

/// An enhanced mask and the anomaly cluster it was derived from.
#[derive(Clone, Debug, PartialEq)]
pub struct PoolMask {
    pub cluster: u32,
    pub mask: BinaryMask,
}

/// One line of a placement plan. Combined rows place one member per listed
/// region (cycling when fewer regions than members are listed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub kind: AnomalyKind,
    pub regions: Vec<String>,
    pub strategy: PlacementStrategy,
    pub count: usize,
    /// Restricts the masks drawn to one cluster.
    pub cluster: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    pub seed: u64,
    /// Largest IoU tolerated between members of a combined mask.
    pub overlap_threshold: f64,
    /// Members drawn for a combined row naming a single region.
    pub combined_members: usize,
    /// Fresh masks tried for an entry before it is skipped.
    pub max_retries: usize,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self { seed: 0, overlap_threshold: 0.0, combined_members: 2, max_retries: 10 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignedEntry {
    pub row: usize,
    pub entry: usize,
    /// Index into the normal samples.
    pub image_index: usize,
    pub cluster: Option<u32>,
    pub placed: PlacedMask,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Synthesis {
    pub entries: Vec<AlignedEntry>,
    pub warnings: Vec<String>,
}

/// Runs every plan row. Entry `e` of row `r` uses the `e mod n`-th sample
/// carrying all of the row's regions and draws its masks from the stream
/// `(seed, r, e)`, so entries are independent of each other.
pub fn synthesize_aligned(
    samples: &[NormalSample],
    pool: &[PoolMask],
    plan: &[PlanRow],
    cfg: &SynthesisConfig,
) -> Result<Synthesis> {
    if cfg.combined_members < 2 {
        return Err(invalid("combined_members must be at least 2"));
    }
    let mut out = Synthesis::default();
    for (r, row) in plan.iter().enumerate() {
        row.strategy.validate()?;
        if row.regions.is_empty() {
            return Err(invalid(format!("plan row {r} names no region")));
        }
        let hosts: Vec<usize> = (0..samples.len())
            .filter(|&i| row.regions.iter().all(|name| samples[i].regions.contains_key(name)))
            .collect();
        if hosts.is_empty() && row.count > 0 {
            return Err(invalid(format!("plan row {r}: no normal image has region {}", row.regions.join("+"))));
        }
        let draws: Vec<&PoolMask> = pool.iter().filter(|m| row.cluster.is_none_or(|c| m.cluster == c)).collect();
        if row.kind != AnomalyKind::Logical && draws.is_empty() && row.count > 0 {
            return Err(invalid(format!("plan row {r}: mask pool is empty for the requested cluster")));
        }
        for e in 0..row.count {
            let image_index = hosts[e % hosts.len()];
            let sample = &samples[image_index];
            let made = match row.kind {
                AnomalyKind::Logical => {
                    let name = &row.regions[0];
                    Some((make_logical(&sample.regions[name])?.in_region(name.as_str()), row.cluster))
                }
                AnomalyKind::Structural => structural_entry(sample, row, &draws, cfg, r, e)?,
                AnomalyKind::Combined => combined_entry(sample, row, &draws, cfg, r, e)?,
            };
            match made {
                Some((placed, cluster)) => {
                    out.entries.push(AlignedEntry { row: r, entry: e, image_index, cluster, placed })
                }
                None => out.warnings.push(format!(
                    "plan row {r}, entry {e}: no feasible placement on {} after {} masks; skipped",
                    sample.image, cfg.max_retries
                )),
            }
        }
    }
    Ok(out)
}

fn structural_entry(
    sample: &NormalSample,
    row: &PlanRow,
    draws: &[&PoolMask],
    cfg: &SynthesisConfig,
    r: usize,
    e: usize,
) -> Result<Option<(PlacedMask, Option<u32>)>> {
    let name = &row.regions[0];
    let region = &sample.regions[name];
    let mut rng = stream(cfg.seed, &[r as u64, e as u64]);
    for attempt in 0..cfg.max_retries {
        let mg = draws[rng.random_range(0..draws.len())];
        let seed = derive_seed(cfg.seed, &[r as u64, e as u64, attempt as u64]);
        match place_structural(&mg.mask, region, &row.strategy, seed) {
            Ok(p) => return Ok(Some((p.in_region(name.as_str()), Some(mg.cluster)))),
            Err(Error::InfeasiblePlacement { .. }) => continue,
            Err(err) => return Err(err),
        }
    }
    Ok(None)
}

fn combined_entry(
    sample: &NormalSample,
    row: &PlanRow,
    draws: &[&PoolMask],
    cfg: &SynthesisConfig,
    r: usize,
    e: usize,
) -> Result<Option<(PlacedMask, Option<u32>)>> {
    let members = if row.regions.len() > 1 { row.regions.len() } else { cfg.combined_members };
    let mut rng = stream(cfg.seed, &[r as u64, e as u64]);
    'attempt: for attempt in 0..cfg.max_retries {
        let mut placed = Vec::with_capacity(members);
        let mut clusters = Vec::with_capacity(members);
        for m in 0..members {
            let name = &row.regions[m % row.regions.len()];
            let mg = draws[rng.random_range(0..draws.len())];
            let seed = derive_seed(cfg.seed, &[r as u64, e as u64, attempt as u64, m as u64]);
            match place_structural(&mg.mask, &sample.regions[name], &row.strategy, seed) {
                Ok(p) => {
                    placed.push(p.in_region(name.as_str()));
                    clusters.push(mg.cluster);
                }
                Err(Error::InfeasiblePlacement { .. }) => continue 'attempt,
                Err(err) => return Err(err),
            }
        }
        let seed = derive_seed(cfg.seed, &[r as u64, e as u64, attempt as u64, u64::MAX]);
        match combine(&placed, cfg.overlap_threshold, seed) {
            Ok(c) => {
                let cluster = row.cluster.or_else(|| clusters.iter().all(|&c| c == clusters[0]).then_some(clusters[0]));
                return Ok(Some((c, cluster)));
            }
            Err(Error::IncompatibleMasks { .. }) => continue,
            Err(err) => return Err(err),
        }
    }
    Ok(None)
}
