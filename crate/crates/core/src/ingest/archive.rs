//! `GPRO` pseudo-label archive, all fields little-endian:
//!
//! ```text
//! "GPRO"  version:u32  n_points:u32  n_instances:u32
//! per instance:
//!   class_id:u32  count:u32
//!   candidates: count x u32 (strictly increasing, < n_points)
//!   mask: ceil(count / 8) bytes, bit i of byte i/8 (LSB first)
//!   mean: count x f32
//!   variance: count x f32
//! ```

use std::path::Path;

use super::{InstanceLabels, PseudoLabels};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"GPRO";
pub const VERSION: u32 = 1;

pub fn encode_pseudo_labels(labels: &PseudoLabels) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&labels.n_points.to_le_bytes());
    out.extend_from_slice(&(labels.instances.len() as u32).to_le_bytes());
    for inst in &labels.instances {
        let count = inst.candidates.len();
        assert!(
            inst.mask.len() == count && inst.mean.len() == count && inst.variance.len() == count,
            "instance label arrays must have equal length"
        );
        out.extend_from_slice(&inst.class_id.to_le_bytes());
        out.extend_from_slice(&(count as u32).to_le_bytes());
        for p in &inst.candidates {
            out.extend_from_slice(&p.to_le_bytes());
        }
        let mut bits = vec![0u8; count.div_ceil(8)];
        for (i, &m) in inst.mask.iter().enumerate() {
            if m {
                bits[i / 8] |= 1 << (i % 8);
            }
        }
        out.extend_from_slice(&bits);
        for v in &inst.mean {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in &inst.variance {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.pos;
        if n > available {
            return Err(Error::Truncated {
                offset: self.pos,
                needed: n,
                available,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        Ok(self
            .take(n * 4)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode_pseudo_labels(bytes: &[u8]) -> Result<PseudoLabels> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("label archive lacks GPRO magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported label archive version {version}")));
    }
    let n_points = r.u32()?;
    let k = r.u32()? as usize;
    let mut instances = Vec::with_capacity(k.min(1 << 16));
    for inst_idx in 0..k {
        let class_id = r.u32()?;
        let count = r.u32()? as usize;
        let raw = r.take(count * 4)?;
        let candidates: Vec<u32> = raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if candidates.windows(2).any(|w| w[0] >= w[1]) || candidates.last().is_some_and(|&p| p >= n_points) {
            return Err(Error::Format(format!(
                "instance {inst_idx}: candidate indices not strictly increasing below {n_points}"
            )));
        }
        let bits = r.take(count.div_ceil(8))?;
        let mask = (0..count).map(|i| bits[i / 8] & (1 << (i % 8)) != 0).collect();
        let mean = r.f32s(count)?;
        let variance = r.f32s(count)?;
        instances.push(InstanceLabels {
            class_id,
            candidates,
            mask,
            mean,
            variance,
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "label archive has {} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Ok(PseudoLabels { n_points, instances })
}

pub fn write_pseudo_labels(labels: &PseudoLabels, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pseudo_labels(labels)).map_err(|e| Error::io(path, e))
}

pub fn read_pseudo_labels(path: impl AsRef<Path>) -> Result<PseudoLabels> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pseudo_labels(&bytes)
}
