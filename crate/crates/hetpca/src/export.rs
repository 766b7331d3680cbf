//! Binary dataset export for comparison against other implementations.
//!
//! Layout, all little-endian:
//!
//! ```text
//! 0   magic "HPCA"
//! 4   u16 format version
//! 6   u16 field tag (0 real, 1 complex)
//! 8   u64 n
//! 16  u64 d
//! 24  u64 k
//! 32  Y (d × n), U (d × k), Z (n × k) column-major, then η (n reals)
//! ```
//!
//! Complex entries are stored as interleaved `(re, im)` pairs. The generating spec is
//! written next to the file as `<path>.json`.

use std::fs;
use std::path::{Path, PathBuf};

use faer::{c64, Mat};

use crate::datagen::{Dataset, DatasetSpec, Field, GeneratedDataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"HPCA";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_BYTES: usize = 32;

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn field_tag(field: Field) -> u16 {
    match field {
        Field::Real => 0,
        Field::Complex => 1,
    }
}

fn push_matrix<T: Scalar>(out: &mut Vec<u8>, m: &Mat<T>) {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            m[(r, c)].write_le(out);
        }
    }
}

pub fn encode<T: Scalar>(ds: &Dataset<T>) -> Vec<u8> {
    let (d, n, k) = (ds.y.nrows(), ds.y.ncols(), ds.u.ncols());
    let mut out = Vec::with_capacity(HEADER_BYTES + T::BYTES * (d * n + d * k + n * k) + 8 * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&field_tag(T::FIELD).to_le_bytes());
    for v in [n, d, k] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    push_matrix(&mut out, &ds.y);
    push_matrix(&mut out, &ds.u);
    push_matrix(&mut out, &ds.z);
    for &e in &ds.eta {
        out.extend_from_slice(&e.to_le_bytes());
    }
    out
}

/// Writes the binary file and its JSON sidecar.
pub fn write_dataset(path: &Path, ds: &GeneratedDataset) -> Result<()> {
    let bytes = match ds {
        GeneratedDataset::Real(ds) => encode(ds),
        GeneratedDataset::Complex(ds) => encode(ds),
    };
    fs::write(path, bytes)?;
    fs::write(sidecar_path(path), serde_json::to_string_pretty(ds.spec())?)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Validation("dataset file is truncated".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| Error::Validation(format!("dimension {v} does not fit in memory")))
    }

    fn matrix<T: Scalar>(&mut self, rows: usize, cols: usize) -> Result<Mat<T>> {
        let len = rows
            .checked_mul(cols)
            .and_then(|x| x.checked_mul(T::BYTES))
            .ok_or_else(|| Error::Validation("matrix size overflows".into()))?;
        let raw = self.take(len)?;
        Ok(Mat::from_fn(rows, cols, |r, c| T::read_le(&raw[(c * rows + r) * T::BYTES..])))
    }
}

fn decode_typed<T: Scalar>(cur: &mut Cursor<'_>, n: usize, d: usize, k: usize, spec: DatasetSpec) -> Result<Dataset<T>> {
    let y = cur.matrix::<T>(d, n)?;
    let u = cur.matrix::<T>(d, k)?;
    let z = cur.matrix::<T>(n, k)?;
    let eta = (0..n)
        .map(|_| Ok(f64::from_le_bytes(cur.take(8)?.try_into().unwrap())))
        .collect::<Result<Vec<_>>>()?;
    if cur.pos != cur.bytes.len() {
        return Err(Error::Validation("trailing bytes after dataset".into()));
    }
    Ok(Dataset { y, u, z, eta, noise: None, spec })
}

/// Reads a file written by [`write_dataset`], together with its sidecar.
pub fn read_dataset(path: &Path) -> Result<GeneratedDataset> {
    let bytes = fs::read(path)?;
    let spec: DatasetSpec = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
    decode(&bytes, spec)
}

pub fn decode(bytes: &[u8], spec: DatasetSpec) -> Result<GeneratedDataset> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::Validation("not a dataset file: bad magic".into()));
    }
    let version = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Validation(format!("unsupported dataset format version {version}")));
    }
    let tag = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
    let (n, d, k) = (cur.u64()?, cur.u64()?, cur.u64()?);
    if (n, d, k) != (spec.n, spec.d, spec.k()) {
        return Err(Error::Validation("header dimensions disagree with the sidecar spec".into()));
    }
    match tag {
        0 => Ok(GeneratedDataset::Real(decode_typed::<f64>(&mut cur, n, d, k, spec)?)),
        1 => Ok(GeneratedDataset::Complex(decode_typed::<c64>(&mut cur, n, d, k, spec)?)),
        t => Err(Error::Validation(format!("unknown field tag {t}"))),
    }
}
