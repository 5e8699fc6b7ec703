use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::manifest::{AnomalyKind, PairManifest};

/// Rank-based AUROC (Mann-Whitney U). `labels[i]` is true for positives;
/// tied scores share the average rank, so each tied pair counts one half.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(invalid("scores and labels differ in length"));
    }
    if let Some(index) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::NonFinite { index });
    }
    let n_pos = labels.iter().filter(|l| **l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share their mean.
        let mean_rank = (i + j + 2) as f64 / 2.0;
        rank_sum += mean_rank * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Keeps the `k_per_type` highest-ARS entries of every (cluster, kind) group.
/// Ties are broken by image path, then mask path. Kept entries retain their
/// manifest order.
pub fn select_top(manifest: &PairManifest, k_per_type: usize) -> Result<PairManifest> {
    let mut groups: BTreeMap<(Option<u32>, AnomalyKind), Vec<usize>> = BTreeMap::new();
    for (i, e) in manifest.entries.iter().enumerate() {
        if e.ars.is_none() {
            return Err(Error::MissingScore(i));
        }
        groups.entry((e.cluster, e.kind)).or_default().push(i);
    }
    let mut keep = alloc::vec![false; manifest.entries.len()];
    for members in groups.values_mut() {
        members.sort_by(|&a, &b| {
            let (ea, eb) = (&manifest.entries[a], &manifest.entries[b]);
            eb.ars
                .unwrap()
                .total_cmp(&ea.ars.unwrap())
                .then_with(|| ea.image_path.cmp(&eb.image_path))
                .then_with(|| ea.mask_path.cmp(&eb.mask_path))
        });
        for &i in members.iter().take(k_per_type) {
            keep[i] = true;
        }
    }
    Ok(PairManifest::new(manifest.entries.iter().zip(&keep).filter(|(_, k)| **k).map(|(e, _)| e.clone()).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::ManifestEntry;
    use alloc::format;
    use alloc::vec;

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap(), 0.75);
        assert_eq!(auroc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.5; 6], &[true, false, true, false, false, true]).unwrap(), 0.5);
        assert_eq!(auroc(&[0.1, 0.2], &[true, true]), Err(Error::SingleClass));
    }

    fn entry(i: usize, ars: f64) -> ManifestEntry {
        ManifestEntry {
            image_path: format!("gen/{i:04}.png"),
            mask_path: format!("mask/{i:04}.png"),
            cluster: Some(0),
            kind: AnomalyKind::Structural,
            ars: Some(ars),
        }
    }

    #[test]
    fn ties_keep_path_order() {
        let m = PairManifest::new((0..10).rev().map(|i| entry(i, 0.5)).collect());
        let top = select_top(&m, 3).unwrap();
        let mut kept: Vec<&str> = top.entries.iter().map(|e| e.image_path.as_str()).collect();
        kept.sort();
        assert_eq!(kept, vec!["gen/0000.png", "gen/0001.png", "gen/0002.png"]);
    }

    #[test]
    fn groups_are_independent() {
        let mut entries: Vec<ManifestEntry> = (0..6).map(|i| entry(i, i as f64 / 10.0)).collect();
        entries[4].kind = AnomalyKind::Logical;
        entries[5].kind = AnomalyKind::Logical;
        let top = select_top(&PairManifest::new(entries), 2).unwrap();
        let kept: Vec<&str> = top.entries.iter().map(|e| e.image_path.as_str()).collect();
        assert_eq!(kept, vec!["gen/0002.png", "gen/0003.png", "gen/0004.png", "gen/0005.png"]);
    }

    #[test]
    fn missing_score() {
        let mut e = entry(0, 0.0);
        e.ars = None;
        assert_eq!(select_top(&PairManifest::new(vec![entry(1, 0.2), e]), 1), Err(Error::MissingScore(1)));
    }
}
