//! Filter model files: a `GAA-FILTER 1` line, a one-line JSON header with
//! dimensions, thresholds and training settings, then one rank-1 GAAT block
//! (f64) per entry of the header's `blocks` list.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use gaa_core::filtering::{FilterModel, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{GaaError, IoContext, Result};
use crate::io::gaat::{read_tensor, write_tensor, Dtype, Tensor};

const MAGIC_LINE: &str = "GAA-FILTER 1";
const BLOCKS: [&str; 5] = ["mean", "inv_std", "params", "running_mean", "running_var"];

/// Patch geometry the model was trained with; scoring must reuse it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGeometry {
    pub patch: usize,
    pub stride: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    dim: usize,
    hidden: usize,
    th_plus: f64,
    th_minus: f64,
    noise_sigma: f64,
    geometry: PatchGeometry,
    training: TrainConfig,
    blocks: Vec<String>,
}

pub fn save_model(path: impl AsRef<Path>, model: &FilterModel, geometry: PatchGeometry) -> Result<()> {
    let path = path.as_ref();
    let cfg = *model.config();
    let header = Header {
        dim: model.dim(),
        hidden: model.hidden(),
        th_plus: cfg.th_plus,
        th_minus: cfg.th_minus,
        noise_sigma: cfg.noise_sigma,
        geometry,
        training: cfg,
        blocks: BLOCKS.iter().map(|s| s.to_string()).collect(),
    };
    let mut buf =
        format!("{MAGIC_LINE}\n{}\n", serde_json::to_string(&header).expect("header serializes")).into_bytes();
    for block in [model.mean(), model.inv_std(), model.params(), model.running_mean(), model.running_var()] {
        write_tensor(&mut buf, &Tensor::vector(block.to_vec()), Dtype::F64, path)?;
    }
    crate::io::write_file(path, &buf)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(FilterModel, PatchGeometry)> {
    let path = path.as_ref();
    let mut r = BufReader::new(std::fs::File::open(path).at(path)?);
    let mut line = String::new();
    r.read_line(&mut line).at(path)?;
    if line.trim_end() != MAGIC_LINE {
        return Err(GaaError::format(path, "not a filter model file"));
    }
    line.clear();
    r.read_line(&mut line).at(path)?;
    let header: Header = serde_json::from_str(&line).map_err(|e| GaaError::format(path, format!("bad header: {e}")))?;
    if header.blocks != BLOCKS {
        return Err(GaaError::format(path, format!("unexpected block list {:?}", header.blocks)));
    }
    let mut blocks = Vec::with_capacity(BLOCKS.len());
    for name in BLOCKS {
        let t = read_tensor(&mut r, path)?;
        if t.dims.len() != 1 {
            return Err(GaaError::format(path, format!("block {name} must have rank 1")));
        }
        blocks.push(t.data);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest).at(path)?;
    if !rest.is_empty() {
        return Err(GaaError::format(path, "trailing bytes after the last block"));
    }
    let training = header.training;
    if training.th_plus != header.th_plus
        || training.th_minus != header.th_minus
        || training.noise_sigma != header.noise_sigma
    {
        return Err(GaaError::format(path, "header thresholds disagree with the training settings"));
    }
    let mut it = blocks.into_iter();
    let mut next = || it.next().unwrap();
    let model = FilterModel::from_parts(header.dim, header.hidden, next(), next(), next(), next(), next(), training)
        .map_err(|e| GaaError::core(path, e))?;
    Ok((model, header.geometry))
}
