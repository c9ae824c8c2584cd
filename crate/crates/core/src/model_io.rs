//! Self-describing binary model files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes  "MPDAMODL"
//! version      u32      1
//! scalar width u8       4 (f32) or 8 (f64)
//! algorithm    u8 length + ASCII name
//! d, m         u64, u64
//! has_mean     u8, then d scalars when 1
//! projection   d·m scalars, row-major
//! eigenvalues  m scalars
//! hyperparams  u32 count, then per entry: u16 key length, UTF-8 key, f64 value
//! ```
//!
//! Hyperparameters are written in key order, so `save(load(bytes)) == bytes`.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::baselines::LinearModel;
use crate::error::{Error, Result};
use crate::mpda::{transform_with, EmbeddingModel};
use crate::scalar::Real;
use crate::Algorithm;

pub const MAGIC: &[u8; 8] = b"MPDAMODL";
pub const VERSION: u32 = 1;

/// What a model file holds: enough to transform new data.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel<T: Real> {
    pub algorithm: Algorithm,
    pub projection: DMatrix<T>,
    pub mean: Option<DVector<T>>,
    pub eigenvalues: Vec<T>,
    pub hyperparams: BTreeMap<String, f64>,
}

impl<T: Real> From<&EmbeddingModel<T>> for SavedModel<T> {
    fn from(m: &EmbeddingModel<T>) -> Self {
        Self {
            algorithm: m.algorithm,
            projection: m.projection.clone(),
            mean: None,
            eigenvalues: m.eigenvalues.clone(),
            hyperparams: m.hyperparams.clone(),
        }
    }
}

impl<T: Real> From<&LinearModel<T>> for SavedModel<T> {
    fn from(m: &LinearModel<T>) -> Self {
        Self {
            algorithm: m.algorithm,
            projection: m.projection.clone(),
            mean: m.mean.clone(),
            eigenvalues: m.eigenvalues.clone(),
            hyperparams: m.hyperparams.clone(),
        }
    }
}

impl<T: Real> SavedModel<T> {
    pub fn transform(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        let lm = LinearModel {
            algorithm: self.algorithm,
            projection: self.projection.clone(),
            mean: self.mean.clone(),
            eigenvalues: Vec::new(),
            hyperparams: BTreeMap::new(),
        };
        match &self.mean {
            Some(_) => lm.transform(x),
            None => transform_with(&self.projection, x),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (d, m) = self.projection.shape();
        let mut out = Vec::with_capacity(64 + (d * m + d + m) * T::BYTES);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(T::BYTES as u8);
        let name = self.algorithm.name().as_bytes();
        out.push(name.len() as u8);
        out.extend_from_slice(name);
        out.extend_from_slice(&(d as u64).to_le_bytes());
        out.extend_from_slice(&(m as u64).to_le_bytes());
        match &self.mean {
            Some(mean) => {
                out.push(1);
                mean.iter().for_each(|&v| v.write_le(&mut out));
            }
            None => out.push(0),
        }
        for i in 0..d {
            for j in 0..m {
                self.projection[(i, j)].write_le(&mut out);
            }
        }
        self.eigenvalues.iter().for_each(|&v| v.write_le(&mut out));
        out.extend_from_slice(&(self.hyperparams.len() as u32).to_le_bytes());
        for (key, value) in &self.hyperparams {
            out.extend_from_slice(&(key.len() as u16).to_le_bytes());
            out.extend_from_slice(key.as_bytes());
            out.extend_from_slice(&value.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::ModelFormat("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {version}")));
        }
        let width = r.u8()? as usize;
        if width != T::BYTES {
            return Err(Error::ModelFormat(format!(
                "file stores {width}-byte scalars, reader expects {}",
                T::BYTES
            )));
        }
        let name_len = r.u8()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::ModelFormat("algorithm name is not UTF-8".into()))?;
        let algorithm: Algorithm = name.parse().map_err(Error::ModelFormat)?;
        let d = r.u64()? as usize;
        let m = r.u64()? as usize;
        let mean = match r.u8()? {
            0 => None,
            1 => Some(DVector::from_vec(r.scalars::<T>(d)?)),
            x => return Err(Error::ModelFormat(format!("bad mean flag {x}"))),
        };
        let projection = DMatrix::from_row_slice(d, m, &r.scalars::<T>(d * m)?);
        let eigenvalues = r.scalars::<T>(m)?;
        let count = r.u32()? as usize;
        let mut hyperparams = BTreeMap::new();
        for _ in 0..count {
            let len = u16::from_le_bytes(r.take(2)?.try_into().expect("2 bytes")) as usize;
            let key = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::ModelFormat("hyperparameter key is not UTF-8".into()))?
                .to_string();
            let value = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
            hyperparams.insert(key, value);
        }
        if r.pos != bytes.len() {
            return Err(Error::ModelFormat(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self {
            algorithm,
            projection,
            mean,
            eigenvalues,
            hyperparams,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::ModelFormat("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn scalars<T: Real>(&mut self, count: usize) -> Result<Vec<T>> {
        let bytes = self.take(count.checked_mul(T::BYTES).ok_or_else(|| Error::ModelFormat("size overflow".into()))?)?;
        Ok(bytes.chunks_exact(T::BYTES).map(T::read_le).collect())
    }
}
