use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub const DEFAULT_JITTER: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparams {
    pub length_scale: f64,
    pub output_scale: f64,
    pub jitter: f64,
}

impl Default for GpHyperparams {
    fn default() -> Self {
        Self {
            length_scale: 0.5,
            output_scale: 1.0,
            jitter: DEFAULT_JITTER,
        }
    }
}

impl GpHyperparams {
    pub fn new(length_scale: f64, output_scale: f64) -> Self {
        Self {
            length_scale,
            output_scale,
            ..Self::default()
        }
    }

    pub fn with_jitter(self, jitter: f64) -> Self {
        Self { jitter, ..self }
    }

    pub fn is_valid(&self) -> bool {
        self.length_scale > 0.0
            && self.output_scale > 0.0
            && self.jitter >= 0.0
            && self.length_scale.is_finite()
            && self.output_scale.is_finite()
            && self.jitter.is_finite()
    }
}

/// Pairwise squared Euclidean distances between the rows of `a` and `b`.
pub fn squared_distances(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.ncols(), "feature dimensions differ");
    let d = a.ncols();
    DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| {
        (0..d)
            .map(|c| {
                let t = a[(i, c)] - b[(j, c)];
                t * t
            })
            .sum()
    })
}

/// `s^2 exp(-|a - b|^2 / (2 l^2))` for every row pair.
pub fn rbf_kernel(a: &DMatrix<f64>, b: &DMatrix<f64>, h: &GpHyperparams) -> DMatrix<f64> {
    let s2 = h.output_scale * h.output_scale;
    let scale = -0.5 / (h.length_scale * h.length_scale);
    squared_distances(a, b).map(|d| s2 * (scale * d).exp())
}
