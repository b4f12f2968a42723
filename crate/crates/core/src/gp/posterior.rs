use nalgebra::{DMatrix, DVector};

use super::{factor_gram, rbf_kernel, GpHyperparams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GpPosterior {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub probability: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Probit approximation of `E[sigmoid(f)]` for `f ~ N(mean, variance)`.
pub fn probit_squash(mean: f64, variance: f64) -> f64 {
    debug_assert!(variance >= 0.0);
    sigmoid(mean / (1.0 + std::f64::consts::PI / 8.0 * variance).sqrt())
}

/// Conditions the zero-mean GP on noise-free labels `f` at rows of `x` and
/// returns the predictive marginals at rows of `x_star`.
pub fn gp_condition(
    x: &DMatrix<f64>,
    f: &DVector<f64>,
    x_star: &DMatrix<f64>,
    h: &GpHyperparams,
) -> Result<GpPosterior> {
    if x.nrows() == 0 || x_star.nrows() == 0 {
        return Err(Error::Shape("conditioning needs at least one training and one test row".into()));
    }
    if x.nrows() != f.len() || x.ncols() != x_star.ncols() {
        return Err(Error::Shape(format!(
            "x is {}x{}, f has {}, x_star is {}x{}",
            x.nrows(),
            x.ncols(),
            f.len(),
            x_star.nrows(),
            x_star.ncols()
        )));
    }
    let k = rbf_kernel(x, x, h);
    let (chol, _) = factor_gram(&k, h)?;
    let k_star = rbf_kernel(x, x_star, h);

    let alpha = chol.solve(f);
    let mean = k_star.tr_mul(&alpha);

    // v = L^-1 K*, var = diag(K**) - colsum(v^2)
    let mut v = k_star;
    chol.l_dirty().solve_lower_triangular_unchecked_mut(&mut v);
    let prior = h.output_scale * h.output_scale;
    let variance: Vec<f64> = v
        .column_iter()
        .map(|col| (prior - col.norm_squared()).max(0.0))
        .collect();
    let mean: Vec<f64> = mean.iter().copied().collect();
    let probability = mean
        .iter()
        .zip(&variance)
        .map(|(&m, &s)| probit_squash(m, s))
        .collect();
    Ok(GpPosterior {
        mean,
        variance,
        probability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probit_symmetry_and_reference_value() {
        for v in [0.0, 1.0, 100.0] {
            assert_eq!(probit_squash(0.0, v), 0.5);
        }
        assert_eq!(probit_squash(1.3, 0.0), sigmoid(1.3));
        let expect = sigmoid(1.0 / 2f64.sqrt());
        assert!((probit_squash(1.0, 8.0 / std::f64::consts::PI) - expect).abs() < 1e-15);
        assert!((expect - 0.669_761_549_326_657).abs() < 1e-12);
    }

    #[test]
    fn probit_shrinks_toward_half() {
        let mut prev = probit_squash(2.0, 0.0);
        for i in 1..100 {
            let p = probit_squash(2.0, i as f64 * 0.5);
            assert!(p < prev && p > 0.5);
            prev = p;
        }
    }

    #[test]
    fn interpolates_training_point_without_jitter() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.5]);
        let f = DVector::from_vec(vec![1.0, 0.0, 1.0]);
        let h = GpHyperparams::new(0.5, 1.0).with_jitter(0.0);
        let post = gp_condition(&x, &f, &DMatrix::from_row_slice(1, 1, &[1.0]), &h).unwrap();
        assert!(post.mean[0].abs() < 1e-12);
        assert!(post.variance[0] < 1e-12);
    }

    #[test]
    fn reverts_to_prior_far_away() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let f = DVector::from_vec(vec![1.0, 1.0]);
        let h = GpHyperparams::new(0.5, 1.7);
        let post = gp_condition(&x, &f, &DMatrix::from_row_slice(1, 1, &[1e3]), &h).unwrap();
        assert_eq!(post.mean[0], 0.0);
        assert_eq!(post.variance[0], 1.7 * 1.7);
        assert_eq!(post.probability[0], 0.5);
    }

    #[test]
    fn two_point_closed_form() {
        // X = [0], [1], f = [1, 0], l = 0.5, s = 1, x* = 0.5, no jitter.
        // k(0,1) = e^-2, k(x*, 0) = k(x*, 1) = e^-0.5.
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let f = DVector::from_vec(vec![1.0, 0.0]);
        let h = GpHyperparams::new(0.5, 1.0).with_jitter(0.0);
        let post = gp_condition(&x, &f, &DMatrix::from_row_slice(1, 1, &[0.5]), &h).unwrap();

        let c = (-2.0f64).exp();
        let b = (-0.5f64).exp();
        let det = 1.0 - c * c;
        // K^-1 = [[1, -c], [-c, 1]] / det
        let alpha = [1.0 / det, -c / det];
        let mean = b * alpha[0] + b * alpha[1];
        let quad = (b * b + b * b - 2.0 * c * b * b) / det;
        let var = 1.0 - quad;
        assert!((post.mean[0] - mean).abs() < 1e-14, "{} vs {mean}", post.mean[0]);
        assert!((post.variance[0] - var).abs() < 1e-14);
        assert!((mean - b / (1.0 + c)).abs() < 1e-15);
    }

    #[test]
    fn duplicate_rows_need_jitter() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 0.0]);
        let f = DVector::from_vec(vec![1.0, 0.0]);
        let h = GpHyperparams::new(0.5, 1.0);
        let post = gp_condition(&x, &f, &DMatrix::from_row_slice(1, 1, &[0.0]), &h).unwrap();
        assert!((post.mean[0] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn shape_errors() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let f = DVector::from_vec(vec![1.0]);
        let h = GpHyperparams::default();
        assert!(matches!(gp_condition(&x, &f, &x, &h), Err(Error::Shape(_))));
        let empty = DMatrix::<f64>::zeros(0, 1);
        let f2 = DVector::from_vec(vec![1.0, 0.0]);
        assert!(matches!(gp_condition(&x, &f2, &empty, &h), Err(Error::Shape(_))));
    }
}
