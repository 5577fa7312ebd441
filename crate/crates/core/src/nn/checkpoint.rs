//! Versioned little-endian binary checkpoint: architecture, parameters and
//! Adam state.

use std::fs;
use std::path::Path;

use super::{AdamState, Architecture, ModelParams};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"MSETCKPT";
const VERSION: u32 = 1;

pub fn encode_checkpoint(params: &ModelParams, adam: &AdamState) -> Result<Vec<u8>> {
    if adam.arch != *params.architecture() {
        return Err(Error::ShapeMismatch("optimizer state does not match parameters".into()));
    }
    let arch = params.architecture();
    let mut out = Vec::with_capacity(64 + 24 * params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(arch.classes as u32).to_le_bytes());
    for widths in [&arch.point_widths, &arch.head_widths] {
        out.extend_from_slice(&(widths.len() as u32).to_le_bytes());
        for &w in widths.iter() {
            out.extend_from_slice(&(w as u32).to_le_bytes());
        }
    }
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    let mut put = |xs: &[f64]| {
        for x in xs {
            out.extend_from_slice(&x.to_le_bytes());
        }
    };
    put(params.values());
    put(&[adam.beta1, adam.beta2, adam.eps]);
    put(&adam.m);
    put(&adam.v);
    out.extend_from_slice(&adam.step.to_le_bytes());
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::InvalidInput(format!("checkpoint truncated at byte {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::InvalidInput("checkpoint size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn widths(&mut self) -> Result<Vec<usize>> {
        let n = self.u32()? as usize;
        if n > 64 {
            return Err(Error::InvalidInput(format!("implausible layer count {n}")));
        }
        (0..n).map(|_| self.u32().map(|w| w as usize)).collect()
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(ModelParams, AdamState)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::InvalidInput("not a checkpoint file".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::InvalidInput(format!("unsupported checkpoint version {version}")));
    }
    let classes = r.u32()? as usize;
    let point_widths = r.widths()?;
    let head_widths = r.widths()?;
    let arch = Architecture {
        point_widths,
        head_widths,
        classes,
    };
    arch.validate()?;
    let count = r.u64()? as usize;
    if count != arch.param_count() {
        return Err(Error::ShapeMismatch(format!(
            "checkpoint stores {count} parameters, architecture needs {}",
            arch.param_count()
        )));
    }
    let params = ModelParams::from_values(&arch, r.f64s(count)?)?;
    let hyper = r.f64s(3)?;
    let mut adam = AdamState::with_hyperparameters(&arch, hyper[0], hyper[1], hyper[2]);
    adam.m = r.f64s(count)?;
    adam.v = r.f64s(count)?;
    adam.step = r.u64()?;
    if r.pos != bytes.len() {
        return Err(Error::InvalidInput("trailing bytes after checkpoint".into()));
    }
    Ok((params, adam))
}

pub fn save_checkpoint(path: &Path, params: &ModelParams, adam: &AdamState) -> Result<()> {
    let bytes = encode_checkpoint(params, adam)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelParams, AdamState)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
