//! Logistic-regression baseline on standardized features.

use nalgebra::{DMatrix, DVector};

pub const STEPS: usize = 200;
pub const LEARNING_RATE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    center: Vec<f64>,
    inv_scale: Vec<f64>,
    weights: Vec<f64>,
    bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    /// Full-batch gradient descent on mean cross-entropy from all-zero weights.
    pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>, steps: usize, lr: f64) -> Self {
        let (n, d) = x.shape();
        assert_eq!(n, y.len());
        assert!(n > 0, "logistic fit needs data");
        let center: Vec<f64> = (0..d).map(|c| x.column(c).mean()).collect();
        let inv_scale: Vec<f64> = (0..d)
            .map(|c| {
                let sd = x.column(c).variance().sqrt();
                if sd > 1e-12 {
                    1.0 / sd
                } else {
                    0.0
                }
            })
            .collect();
        let z = DMatrix::from_fn(n, d, |r, c| (x[(r, c)] - center[c]) * inv_scale[c]);

        let mut model = Self {
            center,
            inv_scale,
            weights: vec![0.0; d],
            bias: 0.0,
        };
        let mut residual = vec![0.0; n];
        for _ in 0..steps {
            for (r, res) in residual.iter_mut().enumerate() {
                let s: f64 = (0..d).map(|c| z[(r, c)] * model.weights[c]).sum::<f64>() + model.bias;
                *res = sigmoid(s) - y[r];
            }
            for c in 0..d {
                let g: f64 = (0..n).map(|r| residual[r] * z[(r, c)]).sum::<f64>() / n as f64;
                model.weights[c] -= lr * g;
            }
            model.bias -= lr * residual.iter().sum::<f64>() / n as f64;
        }
        model
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|r| {
                let s: f64 = (0..x.ncols())
                    .map(|c| (x[(r, c)] - self.center[c]) * self.inv_scale[c] * self.weights[c])
                    .sum();
                sigmoid(s + self.bias)
            })
            .collect()
    }
}
