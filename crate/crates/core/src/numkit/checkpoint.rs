//! Self-describing checkpoint container.
//!
//! Byte layout, version 1 (all integers and floats little-endian):
//!
//! ```text
//! magic    8 bytes  "NKPARAMS"
//! version  u32      1
//! seed     u64      RNG seed the run was configured with
//! dlen     u32      length of the config digest string
//! digest   dlenized UTF-8 bytes
//! count    u32      number of parameter arrays
//! entries  count ×:
//!   nlen   u32      name length
//!   name   nlen UTF-8 bytes
//!   rows   u64
//!   cols   u64
//!   data   rows·cols f64 values, row-major
//! ```
//!
//! Entries are written in the parameter set's name order (lexicographic), so
//! identical parameter sets serialize to identical bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Matrix, NumError, ParamSet};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"NKPARAMS";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A loaded checkpoint: parameters plus the run metadata they were saved with.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub params: ParamSet,
    pub seed: u64,
    pub digest: String,
}

fn io_err(path: &Path, source: std::io::Error) -> NumError {
    NumError::CheckpointIo {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_checkpoint(
    path: &Path,
    params: &ParamSet,
    seed: u64,
    digest: &str,
) -> Result<(), NumError> {
    params.check_finite("write_checkpoint")?;
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(|e| io_err(path, e));
    write(CHECKPOINT_MAGIC)?;
    write(&CHECKPOINT_VERSION.to_le_bytes())?;
    write(&seed.to_le_bytes())?;
    write(&(digest.len() as u32).to_le_bytes())?;
    write(digest.as_bytes())?;
    write(&(params.len() as u32).to_le_bytes())?;
    for (name, m) in params.iter() {
        write(&(name.len() as u32).to_le_bytes())?;
        write(name.as_bytes())?;
        write(&(m.rows() as u64).to_le_bytes())?;
        write(&(m.cols() as u64).to_le_bytes())?;
        for v in m.data() {
            write(&v.to_le_bytes())?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, NumError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| io_err(path, e))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(NumError::Checkpoint(format!(
            "{}: bad magic, not a checkpoint file",
            path.display()
        )));
    }
    let version = read_u32(&mut r, path)?;
    if version != CHECKPOINT_VERSION {
        return Err(NumError::Checkpoint(format!(
            "{}: unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})",
            path.display()
        )));
    }
    let seed = read_u64(&mut r, path)?;
    let dlen = read_u32(&mut r, path)? as usize;
    let digest = read_string(&mut r, dlen, path)?;
    let count = read_u32(&mut r, path)? as usize;

    let mut params = ParamSet::new();
    for _ in 0..count {
        let nlen = read_u32(&mut r, path)? as usize;
        let name = read_string(&mut r, nlen, path)?;
        let rows = read_u64(&mut r, path)? as usize;
        let cols = read_u64(&mut r, path)? as usize;
        let n = rows.checked_mul(cols).ok_or_else(|| {
            NumError::Checkpoint(format!("{}: shape overflow in {name:?}", path.display()))
        })?;
        let mut data = vec![0.0f64; n];
        let mut buf = [0u8; 8];
        for v in data.iter_mut() {
            r.read_exact(&mut buf).map_err(|e| io_err(path, e))?;
            *v = f64::from_le_bytes(buf);
        }
        let m = Matrix::from_vec(rows, cols, data);
        m.check_finite("read_checkpoint")?;
        params.insert(&name, m);
    }
    Ok(Checkpoint { params, seed, digest })
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32, NumError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| io_err(path, e))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read, path: &Path) -> Result<u64, NumError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|e| io_err(path, e))?;
    Ok(u64::from_le_bytes(buf))
}

fn read_string(r: &mut impl Read, len: usize, path: &Path) -> Result<String, NumError> {
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf).map_err(|e| io_err(path, e))?;
    String::from_utf8(buf)
        .map_err(|_| NumError::Checkpoint(format!("{}: non-UTF-8 string field", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::SeededRng;

    #[test]
    fn round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let mut rng = SeededRng::new(77);
        let mut params = ParamSet::new();
        params.insert("em", ParamSet::glorot(5, 3, &mut rng));
        params.insert("b", Matrix::zeros(3, 1));
        write_checkpoint(&path, &params, 77, "digest-abc").unwrap();
        let ck = read_checkpoint(&path).unwrap();
        assert_eq!(ck.seed, 77);
        assert_eq!(ck.digest, "digest-abc");
        assert_eq!(ck.params.byte_image(), params.byte_image());
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.ckpt");
        std::fs::write(&path, b"NOTMAGIC................").unwrap();
        assert!(matches!(
            read_checkpoint(&path),
            Err(NumError::Checkpoint(_))
        ));

        let mut bytes = Vec::new();
        bytes.extend_from_slice(CHECKPOINT_MAGIC);
        bytes.extend_from_slice(&99u32.to_le_bytes());
        bytes.extend_from_slice(&0u64.to_le_bytes());
        bytes.extend_from_slice(&0u32.to_le_bytes());
        bytes.extend_from_slice(&0u32.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        let err = read_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }

    #[test]
    fn writes_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.ckpt");
        let b = dir.path().join("b.ckpt");
        let mut params = ParamSet::new();
        params.insert("w", Matrix::from_vec(2, 2, vec![0.1, 0.2, 0.3, 0.4]));
        write_checkpoint(&a, &params, 1, "d").unwrap();
        write_checkpoint(&b, &params, 1, "d").unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }
}
