//! Pair manifests as tab-separated text, one entry per line:
//! `image_path  mask_path  cluster_id  kind  ars`, with `-` for an absent
//! cluster or score. Relative paths are relative to the manifest's directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gaa_core::manifest::{AnomalyKind, ManifestEntry, PairManifest};

use crate::error::{GaaError, IoContext, Result};

pub fn format_manifest(m: &PairManifest) -> std::result::Result<String, String> {
    let mut out = String::new();
    for (i, e) in m.entries.iter().enumerate() {
        for p in [&e.image_path, &e.mask_path] {
            if p.is_empty() || p.contains(['\t', '\n', '\r']) {
                return Err(format!("entry {i}: path {p:?} cannot be stored in a manifest"));
            }
        }
        let cluster = e.cluster.map_or_else(|| "-".to_string(), |c| c.to_string());
        let ars = match e.ars {
            Some(v) if v.is_finite() => v.to_string(),
            Some(v) => return Err(format!("entry {i}: non-finite ARS {v}")),
            None => "-".to_string(),
        };
        writeln!(out, "{}\t{}\t{}\t{}\t{}", e.image_path, e.mask_path, cluster, e.kind.as_str(), ars).unwrap();
    }
    Ok(out)
}

pub fn parse_manifest(text: &str, origin: &Path) -> Result<PairManifest> {
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| GaaError::format(origin, format!("line {}: {msg}", n + 1));
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 tab-separated fields, found {}", fields.len())));
        }
        let cluster = match fields[2] {
            "-" => None,
            s => Some(s.parse::<u32>().map_err(|_| bad(format!("bad cluster id {s:?}")))?),
        };
        let kind = AnomalyKind::parse(fields[3]).ok_or_else(|| bad(format!("unknown kind {:?}", fields[3])))?;
        let ars = match fields[4] {
            "-" => None,
            s => Some(s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad(format!("bad ARS {s:?}")))?),
        };
        entries.push(ManifestEntry {
            image_path: fields[0].to_string(),
            mask_path: fields[1].to_string(),
            cluster,
            kind,
            ars,
        });
    }
    let m = PairManifest::new(entries);
    m.validate().map_err(|e| GaaError::core(origin, e))?;
    Ok(m)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<PairManifest> {
    let path = path.as_ref();
    parse_manifest(&std::fs::read_to_string(path).at(path)?, path)
}

pub fn save_manifest(path: impl AsRef<Path>, m: &PairManifest) -> Result<()> {
    let path = path.as_ref();
    let text = format_manifest(m).map_err(|msg| GaaError::format(path, msg))?;
    crate::io::write_file(path, text.as_bytes())
}

/// Resolves an entry path against the manifest that lists it.
pub fn resolve(manifest: &Path, entry: &str) -> PathBuf {
    let p = Path::new(entry);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest.parent().unwrap_or(Path::new("")).join(p)
    }
}

/// `target` relative to `base` when it lies below it, else unchanged.
pub fn relative_to(target: &Path, base: &Path) -> String {
    target.strip_prefix(base).unwrap_or(target).to_string_lossy().replace('\\', "/")
}
