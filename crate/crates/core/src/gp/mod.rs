//! Exact Gaussian-process regression with an isotropic RBF kernel, zero prior
//! mean and noise-free labels (a small diagonal jitter keeps the Gram matrix
//! factorizable).

mod kernel;
mod likelihood;
mod optimize;
mod posterior;

pub use kernel::{rbf_kernel, squared_distances, GpHyperparams, DEFAULT_JITTER};
pub use likelihood::{marginal_log_likelihood, mll_with_gradient};
pub use optimize::{optimize_hyperparams, FitOutcome, DEFAULT_ITERS, DEFAULT_LR};
pub use posterior::{gp_condition, probit_squash, GpPosterior};

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Cholesky factor of `k + jitter * I`, retrying once with a tenfold jitter.
/// Returns the factor and the jitter that succeeded.
pub(crate) fn factor_gram(k: &DMatrix<f64>, h: &GpHyperparams) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let attempt = |jitter: f64| {
        let mut m = k.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if m.iter().any(|v| !v.is_finite()) {
            return None;
        }
        m.cholesky()
    };
    if let Some(c) = attempt(h.jitter) {
        return Ok((c, h.jitter));
    }
    let escalated = (10.0 * h.jitter).max(1e-10 * h.output_scale * h.output_scale);
    log::debug!("gram factorization failed at jitter {}, retrying with {escalated}", h.jitter);
    attempt(escalated)
        .map(|c| (c, escalated))
        .ok_or(Error::Conditioning {
            length_scale: h.length_scale,
            output_scale: h.output_scale,
            n1: k.nrows(),
        })
}
