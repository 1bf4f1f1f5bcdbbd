//! Binary tensor serialization.
//!
//! Single-tensor "VSRT" record:
//!
//! ```text
//! magic "VSRT" | u8 version = 1 | u8 dtype (0 = f32, 1 = f64)
//! | u8 ndim (1..=6) | ndim x u32 LE extents | row-major payload, LE
//! ```
//!
//! Named-tensor container (checkpoints): `u32 LE count`, then `count`
//! repetitions of `u16 LE name length | UTF-8 name | VSRT record`.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{Dtype, Scalar, Shape, Tensor};

pub const MAGIC: [u8; 4] = *b"VSRT";
pub const VERSION: u8 = 1;
pub const MAX_NDIM: usize = 6;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic {0:?}, expected \"VSRT\"")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    BadVersion(u8),
    #[error("dtype code {0} out of range")]
    BadDtype(u8),
    #[error("ndim {0} out of range 1..=6")]
    BadNdim(u8),
    #[error("truncated file while reading {0}")]
    Truncated(&'static str),
    #[error("file holds {file} but {requested} was requested")]
    DtypeMismatch { file: Dtype, requested: Dtype },
    #[error("tensor name is not valid UTF-8")]
    BadName,
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &'static str) -> Result<(), FormatError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => FormatError::Truncated(what),
        _ => FormatError::Io(e),
    })
}

pub fn write_tensor<T: Scalar>(w: &mut impl Write, t: &Tensor<T>) -> Result<(), FormatError> {
    let ndim = t.shape().ndim();
    assert!((1..=MAX_NDIM).contains(&ndim), "tensor rank {ndim} not serializable");
    let mut buf = Vec::with_capacity(7 + 4 * ndim + t.numel() * T::BYTES);
    buf.extend_from_slice(&MAGIC);
    buf.push(VERSION);
    buf.push(T::DTYPE.code());
    buf.push(ndim as u8);
    for &e in t.shape().extents() {
        buf.extend_from_slice(&(e as u32).to_le_bytes());
    }
    for &v in t.data() {
        v.push_le_bytes(&mut buf);
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_tensor<T: Scalar>(r: &mut impl Read) -> Result<Tensor<T>, FormatError> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic, "magic")?;
    if magic != MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let mut head = [0u8; 3];
    read_exact(r, &mut head, "header")?;
    let [version, dtype_code, ndim] = head;
    if version != VERSION {
        return Err(FormatError::BadVersion(version));
    }
    let dtype = Dtype::from_code(dtype_code).ok_or(FormatError::BadDtype(dtype_code))?;
    if !(1..=MAX_NDIM as u8).contains(&ndim) {
        return Err(FormatError::BadNdim(ndim));
    }
    if dtype != T::DTYPE {
        return Err(FormatError::DtypeMismatch { file: dtype, requested: T::DTYPE });
    }

    let mut extents = Vec::with_capacity(ndim as usize);
    for _ in 0..ndim {
        let mut b = [0u8; 4];
        read_exact(r, &mut b, "extents")?;
        extents.push(u32::from_le_bytes(b) as usize);
    }
    let numel: usize = extents.iter().product();
    let mut payload = vec![0u8; numel * T::BYTES];
    read_exact(r, &mut payload, "payload")?;

    let data: Vec<T> = payload.chunks_exact(T::BYTES).map(T::from_le_slice).collect();
    Ok(Tensor::leaf(data, Shape::new(extents), false))
}

pub fn save_tensor<T: Scalar>(path: impl AsRef<Path>, t: &Tensor<T>) -> Result<(), FormatError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn load_tensor<T: Scalar>(path: impl AsRef<Path>) -> Result<Tensor<T>, FormatError> {
    let mut r = BufReader::new(File::open(path)?);
    read_tensor(&mut r)
}

/// Write a named-tensor container (checkpoint file).
pub fn save_named<T: Scalar>(
    path: impl AsRef<Path>,
    entries: &[(String, Tensor<T>)],
) -> Result<(), FormatError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(entries.len() as u32).to_le_bytes())?;
    for (name, tensor) in entries {
        let bytes = name.as_bytes();
        assert!(bytes.len() <= u16::MAX as usize, "tensor name too long");
        w.write_all(&(bytes.len() as u16).to_le_bytes())?;
        w.write_all(bytes)?;
        write_tensor(&mut w, tensor)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a named-tensor container, preserving entry order.
pub fn load_named<T: Scalar>(
    path: impl AsRef<Path>,
) -> Result<Vec<(String, Tensor<T>)>, FormatError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut b4 = [0u8; 4];
    read_exact(&mut r, &mut b4, "entry count")?;
    let count = u32::from_le_bytes(b4);
    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut b2 = [0u8; 2];
        read_exact(&mut r, &mut b2, "name length")?;
        let name_len = u16::from_le_bytes(b2) as usize;
        let mut name = vec![0u8; name_len];
        read_exact(&mut r, &mut name, "name")?;
        let name = String::from_utf8(name).map_err(|_| FormatError::BadName)?;
        let tensor = read_tensor(&mut r)?;
        entries.push((name, tensor));
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::rng::Rng;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("vsr-serial-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn round_trip_f32_bit_exact() {
        let mut rng = Rng::new(1);
        let data: Vec<f32> = (0..6).map(|_| rng.normal() as f32).collect();
        let t = Tensor::from_vec(data.clone(), [2, 3]).unwrap();
        let path = tmp("rt_f32.vsrt");
        save_tensor(&path, &t).unwrap();
        let back = load_tensor::<f32>(&path).unwrap();
        assert_eq!(back.shape().extents(), &[2, 3]);
        let same_bits = back
            .data()
            .iter()
            .zip(&data)
            .all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same_bits);
    }

    #[test]
    fn round_trip_f64_bit_exact() {
        let data = vec![1.0f64, -0.0, f64::MIN_POSITIVE, 3.7e300];
        let t = Tensor::from_vec(data.clone(), [4]).unwrap();
        let path = tmp("rt_f64.vsrt");
        save_tensor(&path, &t).unwrap();
        let back = load_tensor::<f64>(&path).unwrap();
        let same_bits = back
            .data()
            .iter()
            .zip(&data)
            .all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same_bits);
    }

    #[test]
    fn bad_magic_is_distinct() {
        let path = tmp("bad_magic.vsrt");
        std::fs::write(&path, b"XXXX\x01\x00\x01\x01\x00\x00\x00").unwrap();
        assert!(matches!(load_tensor::<f32>(&path), Err(FormatError::BadMagic(_))));
    }

    #[test]
    fn missing_dim_field_is_truncated() {
        // Declares 6 dims but provides only 5 extents.
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"VSRT");
        bytes.push(1); // version
        bytes.push(0); // f32
        bytes.push(6); // ndim
        for _ in 0..5 {
            bytes.extend_from_slice(&1u32.to_le_bytes());
        }
        let path = tmp("truncated_dims.vsrt");
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_tensor::<f32>(&path), Err(FormatError::Truncated("extents"))));
    }

    #[test]
    fn truncated_payload() {
        let t = Tensor::from_vec(vec![1.0f32, 2.0, 3.0], [3]).unwrap();
        let path = tmp("truncated_payload.vsrt");
        save_tensor(&path, &t).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 2);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_tensor::<f32>(&path), Err(FormatError::Truncated("payload"))));
    }

    #[test]
    fn dtype_out_of_range() {
        let path = tmp("bad_dtype.vsrt");
        std::fs::write(&path, b"VSRT\x01\x07\x01\x01\x00\x00\x00").unwrap();
        assert!(matches!(load_tensor::<f32>(&path), Err(FormatError::BadDtype(7))));
    }

    #[test]
    fn ndim_out_of_range() {
        let path = tmp("bad_ndim.vsrt");
        std::fs::write(&path, b"VSRT\x01\x00\x07").unwrap();
        assert!(matches!(load_tensor::<f32>(&path), Err(FormatError::BadNdim(7))));
    }

    #[test]
    fn dtype_mismatch_on_typed_load() {
        let t = Tensor::from_vec(vec![1.0f32], [1]).unwrap();
        let path = tmp("mismatch.vsrt");
        save_tensor(&path, &t).unwrap();
        assert!(matches!(load_tensor::<f64>(&path), Err(FormatError::DtypeMismatch { .. })));
    }

    #[test]
    fn named_container_round_trip() {
        let entries = vec![
            ("branch.conv.weight".to_string(), Tensor::from_vec(vec![1.0f32, 2.0], [2]).unwrap()),
            ("branch.conv.bias".to_string(), Tensor::from_vec(vec![-1.0f32], [1]).unwrap()),
        ];
        let path = tmp("named.ckpt");
        save_named(&path, &entries).unwrap();
        let back = load_named::<f32>(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].0, "branch.conv.weight");
        assert_eq!(back[0].1.data(), entries[0].1.data());
        assert_eq!(back[1].0, "branch.conv.bias");
        assert_eq!(back[1].1.data(), entries[1].1.data());
    }
}
