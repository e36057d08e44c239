//! Binary tensor encoding used by checkpoints and the feature cache.
//!
//! Layout, all little-endian:
//!
//! ```text
//! u32 rank
//! u32 extent[rank]
//! f64 data[product(extent)]    row-major
//! ```

use std::io::{Read, Write};

use super::Tensor;
use crate::error::{Error, Result};

pub fn write_tensor<W: Write>(w: &mut W, tensor: &Tensor) -> std::io::Result<()> {
    w.write_all(&(tensor.rank() as u32).to_le_bytes())?;
    for &extent in tensor.shape() {
        w.write_all(&(extent as u32).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(tensor.len() * 8);
    for x in tensor.data() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|e| Error::Checkpoint(format!("truncated tensor header: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_tensor<R: Read>(r: &mut R) -> Result<Tensor> {
    let rank = read_u32(r)? as usize;
    if rank == 0 || rank > 8 {
        return Err(Error::Checkpoint(format!("implausible tensor rank {rank}")));
    }
    let shape = (0..rank)
        .map(|_| read_u32(r).map(|e| e as usize))
        .collect::<Result<Vec<_>>>()?;
    let len: usize = shape.iter().product();
    let mut bytes = vec![0u8; len * 8];
    r.read_exact(&mut bytes)
        .map_err(|e| Error::Checkpoint(format!("truncated tensor data for {shape:?}: {e}")))?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Tensor::from_vec(&shape, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_layout() {
        let t = Tensor::from_vec(&[1, 2], vec![1.0, -2.5]).unwrap();
        let mut buf = Vec::new();
        write_tensor(&mut buf, &t).unwrap();
        let mut want = vec![2, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0];
        want.extend_from_slice(&1.0f64.to_le_bytes());
        want.extend_from_slice(&(-2.5f64).to_le_bytes());
        assert_eq!(buf, want);
        assert_eq!(read_tensor(&mut buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn rejects_truncation_and_zero_extent() {
        let t = Tensor::arange(&[3, 3]).unwrap();
        let mut buf = Vec::new();
        write_tensor(&mut buf, &t).unwrap();
        assert!(read_tensor(&mut &buf[..buf.len() - 1]).is_err());

        let zero = [1u8, 0, 0, 0, 0, 0, 0, 0];
        assert!(read_tensor(&mut &zero[..]).is_err());
    }
}
