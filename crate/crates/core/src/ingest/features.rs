use std::path::Path;

use super::FeatureMatrix;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"FEAT";
const HEADER_LEN: usize = 12;

pub fn encode_features(features: &FeatureMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * features.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(features.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(features.dims() as u32).to_le_bytes());
    for v in features.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_features(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            offset: 0,
            needed: HEADER_LEN,
            available: bytes.len(),
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("feature file lacks FEAT magic".into()));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let dims = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    let expected = rows * dims * 4;
    if body.len() < expected {
        return Err(Error::Truncated {
            offset: HEADER_LEN,
            needed: expected,
            available: body.len(),
        });
    }
    if body.len() > expected {
        return Err(Error::Format(format!(
            "feature file has {} trailing bytes",
            body.len() - expected
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureMatrix::new(rows, dims, values)
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_features(&bytes)
}

pub fn write_features(features: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_features(features)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let f = FeatureMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.5]).unwrap();
        let bytes = encode_features(&f);
        assert_eq!(bytes.len(), 12 + 24);
        assert_eq!(&bytes[..4], b"FEAT");
        assert_eq!(&bytes[4..8], &2u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        assert_eq!(decode_features(&bytes).unwrap(), f);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let f = FeatureMatrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        let mut bytes = encode_features(&f);
        assert!(matches!(decode_features(&bytes[..15]), Err(Error::Truncated { .. })));
        bytes[0] = b'X';
        assert!(matches!(decode_features(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_non_finite() {
        let mut bytes = encode_features(&FeatureMatrix::new(1, 1, vec![0.0]).unwrap());
        bytes[12..16].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_features(&bytes), Err(Error::Format(_))));
    }
}
