use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Per-point instance id (`-1` for background) and class id (0 for background).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    instance: Vec<i32>,
    class: Vec<u32>,
    instance_class: Vec<u32>,
    instance_size: Vec<usize>,
}

impl GroundTruth {
    /// Instance ids must be dense in `[0, K)` and each instance must carry a
    /// single class.
    pub fn new(instance: Vec<i32>, class: Vec<u32>) -> Result<Self> {
        if instance.len() != class.len() {
            return Err(Error::LengthMismatch {
                expected: instance.len(),
                found: class.len(),
            });
        }
        let k = instance.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize);
        let mut instance_class: Vec<Option<u32>> = vec![None; k];
        let mut instance_size = vec![0usize; k];
        for (p, (&inst, &c)) in instance.iter().zip(&class).enumerate() {
            if inst < -1 {
                return Err(Error::Format(format!("point {p}: instance id {inst} below -1")));
            }
            if inst < 0 {
                continue;
            }
            let slot = &mut instance_class[inst as usize];
            match slot {
                None => *slot = Some(c),
                Some(prev) if *prev != c => {
                    return Err(Error::Format(format!(
                        "instance {inst} has classes {prev} and {c}"
                    )))
                }
                _ => {}
            }
            instance_size[inst as usize] += 1;
        }
        let instance_class = instance_class
            .into_iter()
            .enumerate()
            .map(|(k, c)| c.ok_or_else(|| Error::Format(format!("instance ids not dense: {k} unused"))))
            .collect::<Result<_>>()?;
        Ok(Self {
            instance,
            class,
            instance_class,
            instance_size,
        })
    }

    pub fn len(&self) -> usize {
        self.instance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instance.is_empty()
    }

    pub fn instance_count(&self) -> usize {
        self.instance_class.len()
    }

    pub fn instances(&self) -> &[i32] {
        &self.instance
    }

    pub fn classes(&self) -> &[u32] {
        &self.class
    }

    pub fn instance_class(&self, k: usize) -> u32 {
        self.instance_class[k]
    }

    pub fn instance_size(&self, k: usize) -> usize {
        self.instance_size[k]
    }

    /// Point ids of instance `k`, ascending.
    pub fn mask_points(&self, k: usize) -> Vec<u32> {
        self.instance
            .iter()
            .enumerate()
            .filter_map(|(p, &i)| (i == k as i32).then_some(p as u32))
            .collect()
    }

    pub fn dense_mask(&self, k: usize) -> Vec<bool> {
        self.instance.iter().map(|&i| i == k as i32).collect()
    }
}

/// One `instance class` pair per line.
pub fn encode_ground_truth(gt: &GroundTruth) -> String {
    let mut out = String::with_capacity(gt.len() * 6);
    for (i, c) in gt.instances().iter().zip(gt.classes()) {
        writeln!(out, "{i} {c}").unwrap();
    }
    out
}

pub fn parse_ground_truth(text: &str) -> Result<GroundTruth> {
    let mut instance = Vec::new();
    let mut class = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        let parse_err = |what: &str| Error::Parse {
            line: line_no + 1,
            message: format!("expected '<instance> <class>', bad {what}"),
        };
        let i: i32 = tok.next().and_then(|t| t.parse().ok()).ok_or_else(|| parse_err("instance"))?;
        let c: u32 = tok.next().and_then(|t| t.parse().ok()).ok_or_else(|| parse_err("class"))?;
        if tok.next().is_some() {
            return Err(parse_err("trailing token"));
        }
        instance.push(i);
        class.push(c);
    }
    GroundTruth::new(instance, class)
}

pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ground_truth(&text)
}

pub fn write_ground_truth(gt: &GroundTruth, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_ground_truth(gt)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_validates() {
        let gt = parse_ground_truth("0 3\n-1 0\n1 2\n0 3\n").unwrap();
        assert_eq!(gt.instance_count(), 2);
        assert_eq!(gt.instance_class(0), 3);
        assert_eq!(gt.mask_points(0), vec![0, 3]);
        assert_eq!(parse_ground_truth(&encode_ground_truth(&gt)).unwrap(), gt);
    }

    #[test]
    fn rejects_inconsistent_class_and_gaps() {
        assert!(parse_ground_truth("0 3\n0 2\n").is_err());
        assert!(parse_ground_truth("1 3\n").is_err());
        assert!(matches!(parse_ground_truth("0\n"), Err(Error::Parse { line: 1, .. })));
    }
}
