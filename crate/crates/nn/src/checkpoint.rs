//! Binary weight blob.
//!
//! ```text
//! "CNW1"  u32 count
//! per parameter:
//!   u16 tag_len, tag (UTF-8)
//!   u8 rank, u32 extent × rank
//!   u8 precision (0 = f32, 1 = f64)
//!   element data, little-endian
//! ```

use std::io::{Read, Write};

use crate::error::{NnError, Result};
use crate::param::{ParamRole, ParamSet, Parameter};
use crate::scalar::{Precision, Scalar};
use crate::tensor::{Shape, Tensor};

pub const WEIGHTS_MAGIC: &[u8; 4] = b"CNW1";

pub fn write_weights<T: Scalar, W: Write>(params: &ParamSet<T>, out: &mut W) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(WEIGHTS_MAGIC);
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for p in params.iter() {
        let tag = p.tag.as_bytes();
        let tag_len = u16::try_from(tag.len())
            .map_err(|_| NnError::Format(format!("tag `{}` too long", p.tag)))?;
        buf.extend_from_slice(&tag_len.to_le_bytes());
        buf.extend_from_slice(tag);
        let dims = p.shape().dims();
        buf.push(dims.len() as u8);
        for d in dims {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        buf.push(T::PRECISION.code());
        for v in p.value.data() {
            v.write_le(&mut buf);
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

fn read_exact<R: Read>(input: &mut R, n: usize) -> Result<Vec<u8>> {
    let mut b = vec![0u8; n];
    input.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => NnError::Format("truncated weight blob".into()),
        _ => NnError::Io(e),
    })?;
    Ok(b)
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(
        read_exact(input, 4)?.try_into().unwrap(),
    ))
}

/// Reads a weight blob, converting stored elements to `T` when the recorded
/// precision differs.
pub fn read_weights<T: Scalar, R: Read>(input: &mut R) -> Result<ParamSet<T>> {
    let magic = read_exact(input, 4)?;
    if magic != WEIGHTS_MAGIC {
        return Err(NnError::Format(format!("bad magic {magic:?}")));
    }
    let count = read_u32(input)?;
    let mut set = ParamSet::new();
    for _ in 0..count {
        let tag_len = u16::from_le_bytes(read_exact(input, 2)?.try_into().unwrap()) as usize;
        let tag = String::from_utf8(read_exact(input, tag_len)?)
            .map_err(|_| NnError::Format("tag is not UTF-8".into()))?;
        let rank = read_exact(input, 1)?[0] as usize;
        if rank > 4 {
            return Err(NnError::Format(format!("`{tag}` has rank {rank} > 4")));
        }
        let mut dims = [1usize; 4];
        for d in dims[4 - rank..].iter_mut() {
            *d = read_u32(input)? as usize;
        }
        let precision = Precision::from_code(read_exact(input, 1)?[0])
            .ok_or_else(|| NnError::Format(format!("`{tag}` has unknown precision code")))?;
        let shape = Shape::new(dims[0], dims[1], dims[2], dims[3]);
        let width = precision.byte_width();
        let raw = read_exact(input, shape.len() * width)?;
        let data: Vec<T> = raw
            .chunks_exact(width)
            .map(|c| match precision {
                Precision::F32 => T::from_f64_lossy(f32::read_le(c) as f64),
                Precision::F64 => T::from_f64_lossy(f64::read_le(c)),
            })
            .collect();
        let role = if tag.ends_with("bias") {
            ParamRole::Bias
        } else {
            ParamRole::Weight
        };
        set.add(Parameter::new(tag, role, Tensor::from_vec(shape, data)?));
    }
    Ok(set)
}
