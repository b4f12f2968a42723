use nalgebra::{DMatrix, DVector};

use super::{factor_gram, squared_distances, GpHyperparams};
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn check(x: &DMatrix<f64>, f: &DVector<f64>) -> Result<()> {
    if x.nrows() == 0 || x.nrows() != f.len() {
        return Err(Error::Shape(format!("x has {} rows, f has {}", x.nrows(), f.len())));
    }
    Ok(())
}

/// `-1/2 f^T K^-1 f - 1/2 log|K| - n/2 log 2 pi` with `K = k(X, X) + jitter I`.
pub fn marginal_log_likelihood(x: &DMatrix<f64>, f: &DVector<f64>, h: &GpHyperparams) -> Result<f64> {
    check(x, f)?;
    let s2 = h.output_scale * h.output_scale;
    let scale = -0.5 / (h.length_scale * h.length_scale);
    let k = squared_distances(x, x).map(|d| s2 * (scale * d).exp());
    let (chol, _) = factor_gram(&k, h)?;
    let alpha = chol.solve(f);
    Ok(mll_from(&chol, f, &alpha))
}

fn mll_from(chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>, f: &DVector<f64>, alpha: &DVector<f64>) -> f64 {
    let n = f.len() as f64;
    let half_logdet: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
    -0.5 * f.dot(alpha) - half_logdet - 0.5 * n * LN_2PI
}

/// MLL and its gradient with respect to `(ln l, ln s)`; the jitter is held fixed.
pub fn mll_with_gradient(x: &DMatrix<f64>, f: &DVector<f64>, h: &GpHyperparams) -> Result<(f64, [f64; 2])> {
    check(x, f)?;
    let s2 = h.output_scale * h.output_scale;
    let inv_l2 = 1.0 / (h.length_scale * h.length_scale);
    let d2 = squared_distances(x, x);
    let k = d2.map(|d| s2 * (-0.5 * inv_l2 * d).exp());
    let (chol, _) = factor_gram(&k, h)?;
    let alpha = chol.solve(f);
    let mll = mll_from(&chol, f, &alpha);

    // dMLL/dtheta = 1/2 tr((alpha alpha^T - K^-1) dK/dtheta)
    //   dK/dln l = k .* d2 / l^2,  dK/dln s = 2 k
    let k_inv = chol.inverse();
    let n = f.len();
    let mut g_len = 0.0;
    let mut g_out = 0.0;
    for j in 0..n {
        for i in 0..n {
            let a = alpha[i] * alpha[j] - k_inv[(i, j)];
            let kij = k[(i, j)];
            g_len += a * kij * d2[(i, j)] * inv_l2;
            g_out += a * 2.0 * kij;
        }
    }
    Ok((mll, [0.5 * g_len, 0.5 * g_out]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_value() {
        let x = DMatrix::from_row_slice(1, 1, &[0.3]);
        let f = DVector::from_vec(vec![1.0]);
        let h = GpHyperparams::new(0.5, 1.0).with_jitter(0.0);
        let mll = marginal_log_likelihood(&x, &f, &h).unwrap();
        assert!((mll - (-0.5 - 0.5 * (2.0 * std::f64::consts::PI).ln())).abs() < 1e-15);
        assert!((mll + 1.41894).abs() < 1e-5);
    }

    #[test]
    fn zero_labels_leave_only_the_determinant() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 0.4, 1.1]);
        let f = DVector::zeros(3);
        let h = GpHyperparams::new(0.5, 1.3);
        let mut k = crate::gp::rbf_kernel(&x, &x, &h);
        for i in 0..3 {
            k[(i, i)] += h.jitter;
        }
        let expect = -0.5 * k.determinant().ln() - 1.5 * LN_2PI;
        assert!((marginal_log_likelihood(&x, &f, &h).unwrap() - expect).abs() < 1e-10);
    }

    #[test]
    fn gradient_value_matches_plain_evaluation() {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.1, 0.5, 0.2, 1.0, 0.9, 0.3, 0.3]);
        let f = DVector::from_vec(vec![1.0, 1.0, 0.0, 1.0]);
        let h = GpHyperparams::new(0.8, 0.9).with_jitter(1e-3);
        let (mll, _) = mll_with_gradient(&x, &f, &h).unwrap();
        assert_eq!(mll, marginal_log_likelihood(&x, &f, &h).unwrap());
    }
}
