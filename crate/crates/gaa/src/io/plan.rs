//! Placement plans, one row per line: `kind region strategy count [cluster]`.
//!
//! `region` joins several regions with `+` (combined rows place one member in
//! each). `strategy` is an anchor kind (`anywhere`, `skeleton`, `tangent`, or
//! the long names) optionally followed by comma-separated overrides:
//! `rotation=none|uniform`, `scale=LO:HI`, `tolerance=X`. Logical rows may
//! write `-`. Blank lines and `#` comments are ignored.

use std::path::Path;

use gaa_core::manifest::AnomalyKind;
use gaa_core::placement::{AnchorKind, PlacementStrategy, PlanRow, Rotation};

use crate::error::{GaaError, IoContext, Result};

fn parse_strategy(token: &str, defaults: &PlacementStrategy) -> std::result::Result<PlacementStrategy, String> {
    let mut s = *defaults;
    let mut parts = token.split(',');
    let head = parts.next().unwrap_or_default();
    if head != "-" {
        s.kind = AnchorKind::parse(head).ok_or_else(|| format!("unknown strategy {head:?}"))?;
    }
    for opt in parts {
        let (key, value) = opt.split_once('=').ok_or_else(|| format!("expected key=value, found {opt:?}"))?;
        match key {
            "rotation" => {
                s.rotation = match value {
                    "none" => Rotation::None,
                    "uniform" | "uniform_0_360" => Rotation::Uniform,
                    _ => return Err(format!("unknown rotation {value:?}")),
                }
            }
            "scale" => {
                let (lo, hi) = value.split_once(':').ok_or_else(|| format!("scale expects LO:HI, found {value:?}"))?;
                let num = |v: &str| v.parse::<f64>().map_err(|_| format!("bad number {v:?}"));
                s.size_jitter = (num(lo)?, num(hi)?);
            }
            "tolerance" => s.offset_tolerance = value.parse().map_err(|_| format!("bad tolerance {value:?}"))?,
            _ => return Err(format!("unknown strategy option {key:?}")),
        }
    }
    s.validate().map_err(|e| e.to_string())?;
    Ok(s)
}

pub fn parse_plan(text: &str, defaults: &PlacementStrategy, origin: &Path) -> Result<Vec<PlanRow>> {
    let mut rows = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| GaaError::format(origin, format!("line {}: {msg}", n + 1));
        let f: Vec<&str> = line.split_whitespace().collect();
        if !(4..=5).contains(&f.len()) {
            return Err(bad(format!("expected `kind region strategy count [cluster]`, found {} fields", f.len())));
        }
        let kind = AnomalyKind::parse(f[0]).ok_or_else(|| bad(format!("unknown kind {:?}", f[0])))?;
        let regions: Vec<String> = f[1].split('+').map(str::to_string).collect();
        if regions.iter().any(String::is_empty) {
            return Err(bad(format!("bad region list {:?}", f[1])));
        }
        if kind == AnomalyKind::Logical && regions.len() != 1 {
            return Err(bad("a logical row names exactly one region".into()));
        }
        let strategy = parse_strategy(f[2], defaults).map_err(bad)?;
        let count = f[3].parse::<usize>().map_err(|_| bad(format!("bad count {:?}", f[3])))?;
        let cluster = match f.get(4) {
            None | Some(&"-") => None,
            Some(c) => Some(c.parse::<u32>().map_err(|_| bad(format!("bad cluster {c:?}")))?),
        };
        rows.push(PlanRow { kind, regions, strategy, count, cluster });
    }
    Ok(rows)
}

pub fn load_plan(path: impl AsRef<Path>, defaults: &PlacementStrategy) -> Result<Vec<PlanRow>> {
    let path = path.as_ref();
    parse_plan(&std::fs::read_to_string(path).at(path)?, defaults, path)
}
