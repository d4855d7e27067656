//! Binary artifact container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "WROM" | version: u32 | config hash: [u8; 32] | record count: u32
//! per record: name length: u32 | name (UTF-8) | rows: u64 | cols: u64
//!             | dtype: u8 (0 = f64, 1 = complex f64 as re, im) | payload
//! ```
//!
//! Payloads are column-major. Files are written to a temporary sibling and
//! renamed into place, so a crashed run never leaves a half-written archive
//! under the final name.

use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"WROM";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum ArchiveMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl ArchiveMatrix {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Self::Real(m) => m.shape(),
            Self::Complex(m) => m.shape(),
        }
    }
}

impl From<DMatrix<f64>> for ArchiveMatrix {
    fn from(m: DMatrix<f64>) -> Self {
        Self::Real(m)
    }
}

impl From<DMatrix<Complex64>> for ArchiveMatrix {
    fn from(m: DMatrix<Complex64>) -> Self {
        Self::Complex(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    pub hash: [u8; 32],
    records: Vec<(String, ArchiveMatrix)>,
}

impl Archive {
    pub fn new(hash: [u8; 32]) -> Self {
        Self {
            hash,
            records: Vec::new(),
        }
    }

    /// Append a record. Names must be unique.
    pub fn insert(&mut self, name: impl Into<String>, matrix: impl Into<ArchiveMatrix>) {
        let name = name.into();
        assert!(self.records.iter().all(|(n, _)| *n != name), "duplicate record `{name}`");
        self.records.push((name, matrix.into()));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&ArchiveMatrix> {
        self.records.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.hash);
        out.extend_from_slice(&(self.records.len() as u32).to_le_bytes());
        for (name, m) in &self.records {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            let (r, c) = m.shape();
            out.extend_from_slice(&(r as u64).to_le_bytes());
            out.extend_from_slice(&(c as u64).to_le_bytes());
            match m {
                ArchiveMatrix::Real(m) => {
                    out.push(0);
                    for v in m.iter() {
                        out.extend_from_slice(&v.to_le_bytes());
                    }
                }
                ArchiveMatrix::Complex(m) => {
                    out.push(1);
                    for z in m.iter() {
                        out.extend_from_slice(&z.re.to_le_bytes());
                        out.extend_from_slice(&z.im.to_le_bytes());
                    }
                }
            }
        }
        out
    }

    /// Parse `bytes`; `path` is only used in error messages.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0, path };
        if r.take(4)? != MAGIC {
            return Err(r.error("bad magic bytes"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(r.error(&format!("unsupported version {version}")));
        }
        let hash: [u8; 32] = r.take(32)?.try_into().unwrap();
        let count = r.u32()?;
        let mut archive = Archive::new(hash);
        for _ in 0..count {
            let len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| r.error("record name is not UTF-8"))?
                .to_string();
            let rows = r.u64()? as usize;
            let cols = r.u64()? as usize;
            let dtype = r.take(1)?[0];
            let entries = rows
                .checked_mul(cols)
                .ok_or_else(|| r.error("record shape overflows"))?;
            let matrix = match dtype {
                0 => {
                    let payload = r.take(entries.checked_mul(8).ok_or_else(|| r.error("record too large"))?)?;
                    ArchiveMatrix::Real(DMatrix::from_iterator(rows, cols, payload.chunks_exact(8).map(f64_le)))
                }
                1 => {
                    let payload = r.take(entries.checked_mul(16).ok_or_else(|| r.error("record too large"))?)?;
                    ArchiveMatrix::Complex(DMatrix::from_iterator(
                        rows,
                        cols,
                        payload.chunks_exact(16).map(|c| Complex64::new(f64_le(&c[..8]), f64_le(&c[8..]))),
                    ))
                }
                other => return Err(r.error(&format!("unknown dtype code {other}"))),
            };
            if archive.get(&name).is_some() {
                return Err(r.error(&format!("duplicate record `{name}`")));
            }
            archive.records.push((name, matrix));
        }
        if r.pos != bytes.len() {
            return Err(r.error("trailing bytes after the last record"));
        }
        Ok(archive)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = temp_sibling(path);
        let write = || -> std::io::Result<()> {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&self.to_bytes())?;
            f.sync_all()?;
            std::fs::rename(&tmp, path)
        };
        write().map_err(|e| {
            let _ = std::fs::remove_file(&tmp);
            archive_error(path, &format!("write failed: {e}"))
        })
    }

    /// Load and, when `expected` is given, check the configuration hash.
    pub fn load(path: &Path, expected: Option<&[u8; 32]>) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| archive_error(path, &format!("read failed: {e}")))?;
        let archive = Self::from_bytes(&bytes, path)?;
        if let Some(expected) = expected {
            if &archive.hash != expected {
                return Err(archive_error(
                    path,
                    "provenance mismatch: archive was produced by a different configuration",
                ));
            }
        }
        Ok(archive)
    }

    /// The configuration hash stored in the header, without parsing records.
    pub fn peek_hash(path: &Path) -> Result<[u8; 32]> {
        let bytes = std::fs::read(path).map_err(|e| archive_error(path, &format!("read failed: {e}")))?;
        let mut r = Reader { bytes: &bytes, pos: 0, path };
        if r.take(4)? != MAGIC {
            return Err(r.error("bad magic bytes"));
        }
        r.u32()?;
        Ok(r.take(32)?.try_into().unwrap())
    }

    pub fn real(&self, name: &str) -> Result<&DMatrix<f64>> {
        match self.get(name) {
            Some(ArchiveMatrix::Real(m)) => Ok(m),
            Some(_) => Err(missing(name, "is not real")),
            None => Err(missing(name, "is missing")),
        }
    }

    pub fn complex(&self, name: &str) -> Result<&DMatrix<Complex64>> {
        match self.get(name) {
            Some(ArchiveMatrix::Complex(m)) => Ok(m),
            Some(_) => Err(missing(name, "is not complex")),
            None => Err(missing(name, "is missing")),
        }
    }
}

fn missing(name: &str, what: &str) -> Error {
    Error::Archive {
        path: PathBuf::new(),
        reason: format!("record `{name}` {what}"),
    }
}

fn archive_error(path: &Path, reason: &str) -> Error {
    Error::Archive {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

fn temp_sibling(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

fn f64_le(b: &[u8]) -> f64 {
    f64::from_le_bytes(b.try_into().unwrap())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(self.error("file is truncated")),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn error(&self, reason: &str) -> Error {
        archive_error(self.path, &format!("{reason} (at byte {})", self.pos))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Archive {
        let mut a = Archive::new([7; 32]);
        a.insert("real", DMatrix::from_row_slice(2, 3, &[1.0, -0.0, f64::MIN_POSITIVE, 3.5, 1e300, -2.25]));
        a.insert(
            "complex",
            DMatrix::from_fn(3, 2, |i, j| Complex64::new(i as f64 / 3.0, -(j as f64) / 7.0)),
        );
        a.insert("empty", DMatrix::<f64>::zeros(0, 4));
        a
    }

    #[test]
    fn bytes_round_trip_bitwise() {
        let a = sample();
        let bytes = a.to_bytes();
        let b = Archive::from_bytes(&bytes, Path::new("mem")).unwrap();
        assert_eq!(b.to_bytes(), bytes);
        let names: Vec<&str> = b.names().collect();
        assert_eq!(names, ["real", "complex", "empty"]);
        let r = b.real("real").unwrap();
        assert_eq!(r[(0, 1)].to_bits(), (-0.0f64).to_bits());
        assert_eq!(r[(1, 0)], 3.5);
        assert_eq!(&bytes[..4], b"WROM");
        // column-major: the second stored real is entry (1, 0)
        let first_payload = 4 + 4 + 32 + 4 + 4 + 4 + 8 + 8 + 1;
        assert_eq!(f64_le(&bytes[first_payload + 8..first_payload + 16]), 3.5);
    }

    #[test]
    fn every_truncation_is_a_structured_error() {
        let bytes = sample().to_bytes();
        for cut in 0..bytes.len() {
            let err = Archive::from_bytes(&bytes[..cut], Path::new("cut")).unwrap_err();
            assert!(matches!(err, Error::Archive { .. }), "cut {cut}");
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Archive::from_bytes(&extra, Path::new("x")).is_err());
    }

    #[test]
    fn header_checks() {
        let mut bytes = sample().to_bytes();
        bytes[0] = b'X';
        assert!(Archive::from_bytes(&bytes, Path::new("x")).unwrap_err().to_string().contains("magic"));
        let mut bytes = sample().to_bytes();
        bytes[4] = 9;
        assert!(Archive::from_bytes(&bytes, Path::new("x")).unwrap_err().to_string().contains("version"));
    }

    #[test]
    fn files_and_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wrom");
        let a = sample();
        a.save(&path).unwrap();
        assert_eq!(Archive::load(&path, Some(&[7; 32])).unwrap(), a);
        assert_eq!(Archive::peek_hash(&path).unwrap(), [7; 32]);
        let err = Archive::load(&path, Some(&[8; 32])).unwrap_err();
        assert!(err.to_string().contains("provenance"), "{err}");
        assert!(Archive::load(&dir.path().join("missing.wrom"), None).is_err());
        assert!(a.complex("real").is_err());
        assert!(a.real("nope").is_err());
    }
}
