//! Scene data types and their on-disk formats.
//!
//! | data              | format                                             |
//! |-------------------|----------------------------------------------------|
//! | [`PointCloud`]    | PLY, ascii or binary little-endian                 |
//! | [`BoxSet`]        | JSON array of `{min, max, class, instance}`        |
//! | superpoints       | one integer id per line                            |
//! | [`FeatureMatrix`] | `FEAT` + N u32 + d u32 + N*d f32, little-endian    |
//! | [`PseudoLabels`]  | `GPRO` archive, see [`archive`]                    |

pub mod archive;
pub mod boxes;
pub mod features;
pub mod ply;
pub mod superpoints;

pub use archive::{decode_pseudo_labels, encode_pseudo_labels, read_pseudo_labels, write_pseudo_labels};
pub use boxes::{boxes_from_json, boxes_to_json, load_boxes, write_boxes};
pub use features::{decode_features, encode_features, load_features, write_features};
pub use ply::{encode_point_cloud, load_point_cloud, parse_ply, quantize_color, write_point_cloud, PlyEncoding};
pub use superpoints::{encode_superpoints, load_superpoints, parse_superpoints, write_superpoints};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// N points with positions in meters and colors in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    positions: Vec<[f32; 3]>,
    colors: Vec<[f32; 3]>,
}

impl PointCloud {
    pub fn new(positions: Vec<[f32; 3]>, colors: Vec<[f32; 3]>) -> Result<Self> {
        if positions.len() != colors.len() {
            return Err(Error::LengthMismatch {
                expected: positions.len(),
                found: colors.len(),
            });
        }
        if positions.is_empty() {
            return Err(Error::EmptyInput("point cloud has no points".into()));
        }
        if let Some(i) = positions.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::Format(format!("point {i} has a non-finite coordinate")));
        }
        if let Some(i) = colors
            .iter()
            .position(|c| c.iter().any(|v| !(0.0..=1.0).contains(v)))
        {
            return Err(Error::Format(format!("point {i} has a color outside [0, 1]")));
        }
        Ok(Self { positions, colors })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f32; 3]] {
        &self.positions
    }

    pub fn colors(&self) -> &[[f32; 3]] {
        &self.colors
    }

    /// The raw 6-d feature `[x, y, z, r, g, b]` of point `i`.
    pub fn raw_feature(&self, i: usize) -> [f64; 6] {
        let p = self.positions[i];
        let c = self.colors[i];
        [
            p[0] as f64,
            p[1] as f64,
            p[2] as f64,
            c[0] as f64,
            c[1] as f64,
            c[2] as f64,
        ]
    }
}

/// Axis-aligned box annotation: two corners plus class and instance id.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
    #[serde(rename = "class")]
    pub class_id: u32,
    #[serde(rename = "instance")]
    pub instance_id: u32,
}

impl Aabb {
    /// Inclusive on every face.
    pub fn contains(&self, p: [f32; 3]) -> bool {
        (0..3).all(|a| {
            let v = p[a] as f64;
            self.min[a] <= v && v <= self.max[a]
        })
    }

    pub fn extent(&self) -> [f64; 3] {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e[0] * e[1] * e[2]
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..3).all(|a| self.min[a] <= other.max[a] && other.min[a] <= self.max[a])
    }
}

/// K boxes in file order with unique instance ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoxSet {
    boxes: Vec<Aabb>,
}

impl BoxSet {
    pub fn new(boxes: Vec<Aabb>) -> Result<Self> {
        let mut seen = std::collections::HashMap::with_capacity(boxes.len());
        for (index, b) in boxes.iter().enumerate() {
            for axis in 0..3 {
                if !(b.min[axis].is_finite() && b.max[axis].is_finite()) {
                    return Err(Error::Format(format!("box {index} has a non-finite corner")));
                }
                if b.min[axis] > b.max[axis] {
                    return Err(Error::Geometry { index, axis });
                }
            }
            if let Some(first) = seen.insert(b.instance_id, index) {
                return Err(Error::DuplicateInstance {
                    instance: b.instance_id,
                    first,
                    second: index,
                });
            }
        }
        Ok(Self { boxes })
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn as_slice(&self) -> &[Aabb] {
        &self.boxes
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Aabb> {
        self.boxes.iter()
    }

    pub fn get(&self, k: usize) -> &Aabb {
        &self.boxes[k]
    }

    pub fn into_vec(self) -> Vec<Aabb> {
        self.boxes
    }
}

impl std::ops::Index<usize> for BoxSet {
    type Output = Aabb;

    fn index(&self, k: usize) -> &Aabb {
        &self.boxes[k]
    }
}

/// Dense superpoint id per point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpointPartition {
    assignment: Vec<u32>,
    count: usize,
}

impl SuperpointPartition {
    /// Remaps arbitrary ids to `[0, S)` in first-occurrence order.
    pub fn from_ids<T: Copy + Eq + std::hash::Hash>(ids: &[T]) -> Self {
        let mut dense = std::collections::HashMap::new();
        let assignment = ids
            .iter()
            .map(|id| {
                let next = dense.len() as u32;
                *dense.entry(*id).or_insert(next)
            })
            .collect();
        Self {
            assignment,
            count: dense.len(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            assignment: (0..n as u32).collect(),
            count: n,
        }
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Member point ids of each superpoint, ascending.
    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.count];
        for (p, &s) in self.assignment.iter().enumerate() {
            out[s as usize].push(p as u32);
        }
        out
    }
}

/// Row-major N x d matrix of per-point features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    dims: usize,
    values: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, dims: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != rows * dims {
            return Err(Error::LengthMismatch {
                expected: rows * dims,
                found: values.len(),
            });
        }
        if dims == 0 {
            return Err(Error::Shape("feature dimension must be positive".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!(
                "non-finite feature at row {}, column {}",
                i / dims,
                i % dims
            )));
        }
        Ok(Self { rows, dims, values })
    }

    /// `[x, y, z, r, g, b]` of every point.
    pub fn from_cloud(cloud: &PointCloud) -> Self {
        let values = (0..cloud.len())
            .flat_map(|i| {
                let p = cloud.positions()[i];
                let c = cloud.colors()[i];
                [p[0], p[1], p[2], c[0], c[1], c[2]]
            })
            .collect();
        Self {
            rows: cloud.len(),
            dims: 6,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }
}

/// Labels of one instance over the points of its box that carry an explicit value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InstanceLabels {
    pub class_id: u32,
    /// Sorted point ids.
    pub candidates: Vec<u32>,
    pub mask: Vec<bool>,
    pub mean: Vec<f32>,
    pub variance: Vec<f32>,
}

impl InstanceLabels {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Point ids whose mask bit is set, ascending.
    pub fn foreground(&self) -> Vec<u32> {
        self.candidates
            .iter()
            .zip(&self.mask)
            .filter_map(|(&p, &m)| m.then_some(p))
            .collect()
    }

    pub fn dense_mask(&self, n: usize) -> Vec<bool> {
        let mut out = vec![false; n];
        for p in self.foreground() {
            out[p as usize] = true;
        }
        out
    }

    /// Mean of the mean map over foreground entries; 0 when the mask is empty.
    pub fn confidence(&self) -> f64 {
        let (sum, count) = self
            .mask
            .iter()
            .zip(&self.mean)
            .filter(|(m, _)| **m)
            .fold((0.0f64, 0usize), |(s, c), (_, &e)| (s + e as f64, c + 1));
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }
}

/// Per-instance sparse mask, mean and variance maps. Values outside the
/// candidate set are implicitly zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PseudoLabels {
    pub n_points: u32,
    pub instances: Vec<InstanceLabels>,
}

impl PseudoLabels {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}
