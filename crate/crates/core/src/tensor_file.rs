//! Little-endian binary tensor files.
//!
//! Layout:
//!
//! ```text
//! offset  size        field
//! 0       8           magic "ASQLTNSR"
//! 8       4           version, u32 LE (= 1)
//! 12      1           dtype: 1 = f32, 2 = i32
//! 13      1           rank (1..=8)
//! 14      4 * rank    dims, u32 LE each (≥ 1)
//! ...     n * 4       row-major payload, LE
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayD, IxDyn};

use crate::error::{Error, Result};
use crate::layout::AssignmentGrid;

pub const MAGIC: &[u8; 8] = b"ASQLTNSR";
pub const VERSION: u32 = 1;
pub const MAX_RANK: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub enum Tensor {
    F32(ArrayD<f32>),
    I32(ArrayD<i32>),
}

impl Tensor {
    pub fn shape(&self) -> &[usize] {
        match self {
            Tensor::F32(a) => a.shape(),
            Tensor::I32(a) => a.shape(),
        }
    }

    fn dtype_code(&self) -> u8 {
        match self {
            Tensor::F32(_) => 1,
            Tensor::I32(_) => 2,
        }
    }

    /// Float payload widened to `f64`.
    pub fn to_f64(&self) -> Result<ArrayD<f64>> {
        match self {
            Tensor::F32(a) => Ok(a.mapv(f64::from)),
            Tensor::I32(_) => Err(Error::Format("expected a float tensor, found int32".into())),
        }
    }

    pub fn from_f64<D: ndarray::Dimension>(values: &ndarray::Array<f64, D>) -> Self {
        Tensor::F32(values.mapv(|v| v as f32).into_dyn())
    }
}

pub fn encode(tensor: &Tensor) -> Result<Vec<u8>> {
    let shape = tensor.shape();
    if shape.is_empty() || shape.len() > MAX_RANK {
        return Err(Error::Format(format!(
            "rank {} outside 1..={MAX_RANK}",
            shape.len()
        )));
    }
    if shape.iter().any(|&d| d == 0 || d > u32::MAX as usize) {
        return Err(Error::Format(format!(
            "dims {shape:?} must each be in 1..=u32::MAX"
        )));
    }
    let count: usize = shape.iter().product();
    let mut out = Vec::with_capacity(14 + 4 * shape.len() + 4 * count);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(tensor.dtype_code());
    out.push(shape.len() as u8);
    for &d in shape {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    match tensor {
        Tensor::F32(a) => a
            .iter()
            .for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        Tensor::I32(a) => a
            .iter()
            .for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Tensor> {
    let mut cursor = bytes;
    let mut take = |n: usize, what: &str| -> Result<&[u8]> {
        if cursor.len() < n {
            return Err(Error::Format(format!("truncated {what}")));
        }
        let (head, tail) = cursor.split_at(n);
        cursor = tail;
        Ok(head)
    };
    if take(8, "magic")? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(4, "version")?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dtype = take(1, "dtype")?[0];
    let rank = take(1, "rank")?[0] as usize;
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::Format(format!("rank {rank} outside 1..={MAX_RANK}")));
    }
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        let d = u32::from_le_bytes(take(4, "dims")?.try_into().unwrap()) as usize;
        if d == 0 {
            return Err(Error::Format("zero-length dimension".into()));
        }
        dims.push(d);
    }
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format("dims overflow".into()))?;
    let payload = take(
        count
            .checked_mul(4)
            .ok_or_else(|| Error::Format("dims overflow".into()))?,
        "payload",
    )?;
    if !cursor.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes", cursor.len())));
    }
    let words = payload
        .chunks_exact(4)
        .map(|c| <[u8; 4]>::try_from(c).unwrap());
    let shape = IxDyn(&dims);
    match dtype {
        1 => Ok(Tensor::F32(
            ArrayD::from_shape_vec(shape, words.map(f32::from_le_bytes).collect())
                .expect("count matches dims"),
        )),
        2 => Ok(Tensor::I32(
            ArrayD::from_shape_vec(shape, words.map(i32::from_le_bytes).collect())
                .expect("count matches dims"),
        )),
        other => Err(Error::Format(format!("unknown dtype code {other}"))),
    }
}

pub fn write_tensor(tensor: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode(tensor)?;
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

/// Two int32 channels, `(2, H, W)`: entity ids, then sub-region indices.
pub fn grid_to_tensor(grid: &AssignmentGrid) -> Tensor {
    let (h, w) = grid.dims();
    let data: Vec<i32> = grid
        .entity
        .iter()
        .chain(grid.subregion.iter())
        .map(|&v| v as i32)
        .collect();
    Tensor::I32(ArrayD::from_shape_vec(IxDyn(&[2, h, w]), data).expect("two channels"))
}

pub fn grid_from_tensor(tensor: &Tensor) -> Result<AssignmentGrid> {
    let Tensor::I32(a) = tensor else {
        return Err(Error::Format("assignment grids are int32 tensors".into()));
    };
    let &[2, h, w] = a.shape() else {
        return Err(Error::Format(format!(
            "expected shape (2, H, W), found {:?}",
            a.shape()
        )));
    };
    if a.iter().any(|&v| v < 0) {
        return Err(Error::Format("negative id in assignment grid".into()));
    }
    let channel =
        |c: usize| -> Array2<u32> { Array2::from_shape_fn((h, w), |(y, x)| a[[c, y, x]] as u32) };
    Ok(AssignmentGrid {
        entity: channel(0),
        subregion: channel(1),
    })
}
