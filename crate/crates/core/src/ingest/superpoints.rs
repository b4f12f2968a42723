use std::fmt::Write as _;
use std::path::Path;

use super::SuperpointPartition;
use crate::error::{Error, Result};

/// Parses one integer id per non-empty line (whitespace-separated tokens are
/// also accepted) and checks there is exactly one per point.
pub fn parse_superpoints(text: &str, n: usize) -> Result<SuperpointPartition> {
    let mut ids = Vec::with_capacity(n);
    for (line_no, line) in text.lines().enumerate() {
        for tok in line.split_whitespace() {
            let id: i64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no + 1,
                message: format!("'{tok}' is not an integer"),
            })?;
            ids.push(id);
        }
    }
    if ids.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: ids.len(),
        });
    }
    Ok(SuperpointPartition::from_ids(&ids))
}

pub fn load_superpoints(path: impl AsRef<Path>, n: usize) -> Result<SuperpointPartition> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_superpoints(&text, n)
}

pub fn encode_superpoints(partition: &SuperpointPartition) -> String {
    let mut out = String::with_capacity(partition.len() * 4);
    for id in partition.assignment() {
        writeln!(out, "{id}").unwrap();
    }
    out
}

pub fn write_superpoints(partition: &SuperpointPartition, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_superpoints(partition)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_remap_first_occurrence() {
        let sp = parse_superpoints("7\n7\n3\n", 3).unwrap();
        assert_eq!(sp.assignment(), &[0, 0, 1]);
        assert_eq!(sp.count(), 2);
    }

    #[test]
    fn short_file_is_length_mismatch() {
        let err = parse_superpoints("1\n2\n", 3).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { expected: 3, found: 2 }));
    }

    #[test]
    fn identity_file() {
        let text: String = (0..10).map(|i| format!("{i}\n")).collect();
        let sp = parse_superpoints(&text, 10).unwrap();
        assert_eq!(sp, SuperpointPartition::identity(10));
    }

    #[test]
    fn non_integer_token() {
        let err = parse_superpoints("1\nx\n", 2).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn negative_ids_are_remapped() {
        let sp = parse_superpoints("-1\n4\n-1\n", 3).unwrap();
        assert_eq!(sp.assignment(), &[0, 1, 0]);
        assert_eq!(parse_superpoints(&encode_superpoints(&sp), 3).unwrap(), sp);
    }
}
