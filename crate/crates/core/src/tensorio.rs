//! Binary container for named f64 tensors. Little-endian, length-prefixed:
//!
//! ```text
//! u32 tensor-count
//! per tensor: u32 name-len, name bytes (utf-8),
//!             u32 ndim, u64 dim ..., f64 value ... (row-major)
//! ```

use std::io::{Read, Write};

use ndarray::{ArrayD, IxDyn};

use crate::error::{Error, Result};

pub fn write_tensors<W: Write>(w: &mut W, tensors: &[(String, &ArrayD<f64>)]) -> Result<()> {
    let fail = |e: std::io::Error| Error::Checkpoint(format!("write failed: {e}"));
    w.write_all(&(tensors.len() as u32).to_le_bytes()).map_err(fail)?;
    for (name, data) in tensors {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes()).map_err(fail)?;
        w.write_all(bytes).map_err(fail)?;
        w.write_all(&(data.ndim() as u32).to_le_bytes()).map_err(fail)?;
        for &d in data.shape() {
            w.write_all(&(d as u64).to_le_bytes()).map_err(fail)?;
        }
        for &v in data.iter() {
            w.write_all(&v.to_le_bytes()).map_err(fail)?;
        }
    }
    Ok(())
}

pub fn read_tensors<R: Read>(r: &mut R) -> Result<Vec<(String, ArrayD<f64>)>> {
    let count = read_u32(r)? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u32(r)? as usize;
        if name_len > 4096 {
            return Err(Error::Checkpoint("implausible tensor name length".into()));
        }
        let mut name = vec![0u8; name_len];
        read_exact(r, &mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| Error::Checkpoint("tensor name is not utf-8".into()))?;
        let ndim = read_u32(r)? as usize;
        if ndim > 8 {
            return Err(Error::Checkpoint("implausible tensor rank".into()));
        }
        let mut shape = Vec::with_capacity(ndim);
        let mut len = 1usize;
        for _ in 0..ndim {
            let d = read_u64(r)? as usize;
            len = len.saturating_mul(d);
            shape.push(d);
        }
        if len > 1 << 30 {
            return Err(Error::Checkpoint("implausible tensor size".into()));
        }
        let mut values = Vec::with_capacity(len);
        let mut buf = [0u8; 8];
        for _ in 0..len {
            read_exact(r, &mut buf)?;
            values.push(f64::from_le_bytes(buf));
        }
        let arr = ArrayD::from_shape_vec(IxDyn(&shape), values)
            .map_err(|e| Error::Checkpoint(format!("bad tensor shape: {e}")))?;
        out.push((name, arr));
    }
    Ok(out)
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    read_exact(r, &mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

pub(crate) fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| Error::Checkpoint(format!("file truncated or unreadable: {e}")))
}
