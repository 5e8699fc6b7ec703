//! `GAAT` tensor files: the magic `GAAT`, a version byte (1), a dtype byte,
//! a little-endian `u32` rank, `rank` little-endian `u64` dimensions, then
//! the row-major payload. Dtype 1 is `f32` LE, dtype 2 is `f64` LE.

use std::io::{Read, Write};
use std::path::Path;

use gaa_core::FeatureMatrix;

use crate::error::{GaaError, IoContext, Result};

const MAGIC: &[u8; 4] = b"GAAT";
const VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Dtype {
    F32 = 1,
    #[default]
    F64 = 2,
}

impl Dtype {
    fn width(self) -> usize {
        match self {
            Self::F32 => 4,
            Self::F64 => 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Self { dims, data }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Self::new(vec![data.len()], data)
    }
}

/// Parses one tensor from `r`. `origin` names the source in errors.
pub fn read_tensor(r: &mut impl Read, origin: &Path) -> Result<Tensor> {
    let bad = |msg: String| GaaError::format(origin, msg);
    let mut head = [0u8; 10];
    r.read_exact(&mut head).map_err(|_| bad("truncated GAAT header".into()))?;
    if &head[..4] != MAGIC {
        return Err(bad("bad magic, expected GAAT".into()));
    }
    if head[4] != VERSION {
        return Err(bad(format!("unsupported GAAT version {}", head[4])));
    }
    let dtype = match head[5] {
        1 => Dtype::F32,
        2 => Dtype::F64,
        other => return Err(bad(format!("unsupported dtype code {other}"))),
    };
    let rank = u32::from_le_bytes(head[6..10].try_into().unwrap()) as usize;
    if rank > 16 {
        return Err(bad(format!("implausible rank {rank}")));
    }
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(|_| bad("truncated dimension list".into()))?;
        dims.push(usize::try_from(u64::from_le_bytes(b)).map_err(|_| bad("dimension overflows usize".into()))?);
    }
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| bad("payload size overflows".into()))?;
    let bytes = count.checked_mul(dtype.width()).ok_or_else(|| bad("payload size overflows".into()))?;
    let mut payload = Vec::new();
    r.take(bytes as u64).read_to_end(&mut payload).at(origin)?;
    if payload.len() != bytes {
        return Err(bad(format!("payload holds {} bytes, header promises {bytes}", payload.len())));
    }
    let data: Vec<f64> = match dtype {
        Dtype::F32 => payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect(),
        Dtype::F64 => payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect(),
    };
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(bad(format!("non-finite value at flat index {i}")));
    }
    Ok(Tensor { dims, data })
}

pub fn write_tensor(w: &mut impl Write, t: &Tensor, dtype: Dtype, origin: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(10 + 8 * t.dims.len() + dtype.width() * t.data.len());
    buf.extend_from_slice(MAGIC);
    buf.push(VERSION);
    buf.push(dtype as u8);
    buf.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
    for &d in &t.dims {
        buf.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for &v in &t.data {
        match dtype {
            Dtype::F32 => buf.extend_from_slice(&(v as f32).to_le_bytes()),
            Dtype::F64 => buf.extend_from_slice(&v.to_le_bytes()),
        }
    }
    w.write_all(&buf).at(origin)
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).at(path)?;
    let mut slice = bytes.as_slice();
    let t = read_tensor(&mut slice, path)?;
    if !slice.is_empty() {
        return Err(GaaError::format(path, format!("{} trailing bytes after payload", slice.len())));
    }
    Ok(t)
}

pub fn save_tensor(path: impl AsRef<Path>, t: &Tensor, dtype: Dtype) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_tensor(&mut buf, t, dtype, path)?;
    crate::io::write_file(path, &buf)
}

/// Reads a rank-2 tensor as an `N x D` matrix.
pub fn load_feature_file(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let t = load_tensor(path)?;
    if t.dims.len() != 2 {
        return Err(GaaError::format(path, format!("feature file must have rank 2, found {}", t.dims.len())));
    }
    FeatureMatrix::new(t.dims[0], t.dims[1], t.data).map_err(|e| GaaError::core(path, e))
}

/// Writes a matrix losslessly (dtype 2).
pub fn save_feature_file(path: impl AsRef<Path>, m: &FeatureMatrix) -> Result<()> {
    save_tensor(path, &Tensor::new(vec![m.rows(), m.cols()], m.values().to_vec()), Dtype::F64)
}
