//! The MCPT tensor file format.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic "MCPT" (4)  kind (1)  dim_count u32 (4)  dims u32 * dim_count  payload
//! ```
//!
//! Kind 0 stores f32 values (images have dims \[h, w, c\]); kind 1 stores
//! u8 {0,1} values (masks have dims \[h, w\]). Values are f64 in memory and
//! f32 on disk, so a write/read round trip is exact precisely for
//! f32-representable data — which holds for everything this crate writes,
//! because producers pass through [`write_image`] before further reads.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{BinaryMask, ImageTensor};

pub const MAGIC: [u8; 4] = *b"MCPT";
const KIND_F32: u8 = 0;
const KIND_U8: u8 = 1;

/// A tensor loaded from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedTensor {
    Image(ImageTensor),
    Mask(BinaryMask),
}

impl LoadedTensor {
    pub fn into_image(self, path: &Path) -> Result<ImageTensor> {
        match self {
            LoadedTensor::Image(t) => Ok(t),
            LoadedTensor::Mask(_) => Err(Error::format(path, "expected image, found mask")),
        }
    }

    pub fn into_mask(self, path: &Path) -> Result<BinaryMask> {
        match self {
            LoadedTensor::Mask(m) => Ok(m),
            LoadedTensor::Image(_) => Err(Error::format(path, "expected mask, found image")),
        }
    }
}

pub fn write_image(path: &Path, t: &ImageTensor) -> Result<()> {
    let dims = [t.height() as u32, t.width() as u32, t.channels() as u32];
    write_f32_nd(path, &dims, t.data())
}

pub fn write_mask(path: &Path, m: &BinaryMask) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut inner = || -> std::io::Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&[KIND_U8])?;
        w.write_all(&2u32.to_le_bytes())?;
        w.write_all(&(m.height() as u32).to_le_bytes())?;
        w.write_all(&(m.width() as u32).to_le_bytes())?;
        w.write_all(m.data())?;
        w.flush()
    };
    inner().map_err(|e| Error::io(path, e))
}

/// Writes an arbitrary-rank f32 array in the same container; used for
/// model checkpoints where weight tensors are rank 1–4.
pub fn write_f32_nd(path: &Path, dims: &[u32], data: &[f64]) -> Result<()> {
    let expected: usize = dims.iter().map(|d| *d as usize).product();
    if data.len() != expected {
        return Err(Error::ShapeMismatch(format!(
            "payload length {} != product of dims {:?}",
            data.len(),
            dims
        )));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut inner = || -> std::io::Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&[KIND_F32])?;
        w.write_all(&(dims.len() as u32).to_le_bytes())?;
        for d in dims {
            w.write_all(&d.to_le_bytes())?;
        }
        for v in data {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
        w.flush()
    };
    inner().map_err(|e| Error::io(path, e))
}

pub fn read_f32_nd(path: &Path) -> Result<(Vec<u32>, Vec<f64>)> {
    let (kind, dims, payload) = read_raw(path)?;
    if kind != KIND_F32 {
        return Err(Error::format(path, format!("expected f32 kind, got {kind}")));
    }
    if payload.len() % 4 != 0 {
        return Err(Error::format(path, "truncated f32 payload"));
    }
    let n: usize = dims.iter().map(|d| *d as usize).product();
    if payload.len() != n * 4 {
        return Err(Error::format(
            path,
            format!("payload holds {} f32s, dims need {}", payload.len() / 4, n),
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    Ok((dims, data))
}

/// Writes either tensor kind through one entry point.
pub fn tensor_write(path: &Path, t: &LoadedTensor) -> Result<()> {
    match t {
        LoadedTensor::Image(img) => write_image(path, img),
        LoadedTensor::Mask(m) => write_mask(path, m),
    }
}

/// Reads a tensor file, dispatching on the kind tag. Rejects wrong magic,
/// truncated payloads, inconsistent dims, and non-binary mask bytes.
pub fn tensor_read(path: &Path) -> Result<LoadedTensor> {
    let (kind, dims, payload) = read_raw(path)?;
    match kind {
        KIND_F32 => {
            if dims.len() != 3 {
                return Err(Error::format(
                    path,
                    format!("image needs 3 dims, found {}", dims.len()),
                ));
            }
            let (h, w, c) = (dims[0] as usize, dims[1] as usize, dims[2] as usize);
            if payload.len() != h * w * c * 4 {
                return Err(Error::format(path, "image payload length mismatch"));
            }
            let data: Vec<f64> = payload
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect();
            let img = ImageTensor::new(h, w, c, data)
                .map_err(|e| Error::format(path, format!("invalid image payload: {e}")))?;
            Ok(LoadedTensor::Image(img))
        }
        KIND_U8 => {
            if dims.len() != 2 {
                return Err(Error::format(
                    path,
                    format!("mask needs 2 dims, found {}", dims.len()),
                ));
            }
            let (h, w) = (dims[0] as usize, dims[1] as usize);
            if payload.len() != h * w {
                return Err(Error::format(path, "mask payload length mismatch"));
            }
            if let Some(v) = payload.iter().find(|v| **v > 1) {
                return Err(Error::format(path, format!("mask byte {v} not in {{0,1}}")));
            }
            let mask = BinaryMask::new(h, w, payload)
                .map_err(|e| Error::format(path, format!("invalid mask payload: {e}")))?;
            Ok(LoadedTensor::Mask(mask))
        }
        other => Err(Error::format(path, format!("unknown kind tag {other}"))),
    }
}

fn read_raw(path: &Path) -> Result<(u8, Vec<u32>, Vec<u8>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::format(path, "file too short for magic"))?;
    if magic != MAGIC {
        return Err(Error::format(
            path,
            format!("bad magic {:?}", String::from_utf8_lossy(&magic)),
        ));
    }
    let mut kind = [0u8; 1];
    r.read_exact(&mut kind)
        .map_err(|_| Error::format(path, "missing kind tag"))?;
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)
        .map_err(|_| Error::format(path, "missing dim count"))?;
    let dim_count = u32::from_le_bytes(buf4) as usize;
    if dim_count == 0 || dim_count > 8 {
        return Err(Error::format(path, format!("implausible dim count {dim_count}")));
    }
    let mut dims = Vec::with_capacity(dim_count);
    for _ in 0..dim_count {
        r.read_exact(&mut buf4)
            .map_err(|_| Error::format(path, "truncated dims"))?;
        dims.push(u32::from_le_bytes(buf4));
    }
    let mut payload = Vec::new();
    r.read_to_end(&mut payload).map_err(|e| Error::io(path, e))?;
    Ok((kind[0], dims, payload))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tmp(name: &str) -> tempfile::TempDir {
        tempfile::Builder::new().prefix(name).tempdir().unwrap()
    }

    #[test]
    fn single_pixel_image_is_25_bytes() {
        let dir = tmp("mcpt");
        let path = dir.path().join("t.mcpt");
        let img = ImageTensor::new(1, 1, 1, vec![0.5]).unwrap();
        write_image(&path, &img).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 25);
    }

    #[test]
    fn zero_mask_payload_is_zero_bytes() {
        let dir = tmp("mcpt");
        let path = dir.path().join("m.mcpt");
        write_mask(&path, &BinaryMask::zeros(2, 2)).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[bytes.len() - 4..], &[0, 0, 0, 0]);
        assert_eq!(bytes.len(), 4 + 1 + 4 + 8 + 4);
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tmp("mcpt");
        let path = dir.path().join("x.mcpt");
        std::fs::write(&path, b"XXXX\x00\x01\x00\x00\x00\x01\x00\x00\x00").unwrap();
        let err = tensor_read(&path).unwrap_err();
        assert!(err.to_string().contains("bad magic"), "{err}");
    }

    #[test]
    fn non_binary_mask_byte_rejected() {
        let dir = tmp("mcpt");
        let path = dir.path().join("m.mcpt");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"MCPT");
        bytes.push(1);
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&[0u8, 2u8]);
        std::fs::write(&path, &bytes).unwrap();
        let err = tensor_read(&path).unwrap_err();
        assert!(err.to_string().contains("not in {0,1}"), "{err}");
    }

    #[test]
    fn truncated_payload_rejected() {
        let dir = tmp("mcpt");
        let path = dir.path().join("t.mcpt");
        let img = ImageTensor::new(2, 2, 1, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        write_image(&path, &img).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(tensor_read(&path).is_err());
    }

    #[test]
    fn random_image_round_trips_bitwise() {
        use rand::Rng;
        let dir = tmp("mcpt");
        let path = dir.path().join("t.mcpt");
        let mut rng = crate::rng::RngStream::new(99).rng();
        // f32-representable values, as everything on disk is.
        let data: Vec<f64> = (0..8 * 8 * 3).map(|_| rng.gen::<f32>() as f64).collect();
        let img = ImageTensor::new(8, 8, 3, data).unwrap();
        write_image(&path, &img).unwrap();
        let back = tensor_read(&path).unwrap().into_image(&path).unwrap();
        assert_eq!(back, img);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn round_trip_identity(
            h in 1usize..=64,
            w in 1usize..=64,
            c in 1usize..=4,
            seed in 0u64..1_000,
        ) {
            use rand::Rng;
            let dir = tmp("mcpt");
            let path = dir.path().join("t.mcpt");
            let mut rng = crate::rng::RngStream::new(seed).rng();
            let data: Vec<f64> = (0..h * w * c).map(|_| rng.gen::<f32>() as f64).collect();
            let img = ImageTensor::new(h, w, c, data).unwrap();
            write_image(&path, &img).unwrap();
            prop_assert_eq!(tensor_read(&path).unwrap().into_image(&path).unwrap(), img);

            let mpath = dir.path().join("m.mcpt");
            let mdata: Vec<u8> = (0..h * w).map(|_| rng.gen_range(0..=1u8)).collect();
            let mask = BinaryMask::new(h, w, mdata).unwrap();
            write_mask(&mpath, &mask).unwrap();
            prop_assert_eq!(tensor_read(&mpath).unwrap().into_mask(&mpath).unwrap(), mask);
        }
    }
}
