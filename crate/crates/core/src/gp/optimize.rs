use nalgebra::{DMatrix, DVector};

use super::{mll_with_gradient, GpHyperparams};
use crate::error::Result;

pub const DEFAULT_ITERS: usize = 50;
pub const DEFAULT_LR: f64 = 0.1;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOutcome {
    /// Best iterate visited.
    pub params: GpHyperparams,
    pub mll: f64,
    pub init_mll: f64,
    /// Gradient steps taken.
    pub iterations: usize,
    /// Stopped early on a non-finite gradient or a failed factorization.
    pub halted: bool,
}

/// Adam ascent on the marginal log likelihood over `(ln l, ln s)`.
/// Fails only if the initial parameters cannot be evaluated.
pub fn optimize_hyperparams(
    x: &DMatrix<f64>,
    f: &DVector<f64>,
    init: GpHyperparams,
    iters: usize,
    lr: f64,
) -> Result<FitOutcome> {
    let (init_mll, mut grad) = mll_with_gradient(x, f, &init)?;
    let mut best = (init, init_mll);
    let mut theta = [init.length_scale.ln(), init.output_scale.ln()];
    let mut m = [0.0; 2];
    let mut v = [0.0; 2];
    let mut halted = false;
    let mut steps = 0;

    for t in 1..=iters {
        if !grad.iter().all(|g| g.is_finite()) {
            halted = true;
            break;
        }
        for p in 0..2 {
            m[p] = BETA1 * m[p] + (1.0 - BETA1) * grad[p];
            v[p] = BETA2 * v[p] + (1.0 - BETA2) * grad[p] * grad[p];
            let m_hat = m[p] / (1.0 - BETA1.powi(t as i32));
            let v_hat = v[p] / (1.0 - BETA2.powi(t as i32));
            theta[p] += lr * m_hat / (v_hat.sqrt() + EPS);
        }
        steps = t;
        let h = GpHyperparams {
            length_scale: theta[0].exp(),
            output_scale: theta[1].exp(),
            jitter: init.jitter,
        };
        match mll_with_gradient(x, f, &h) {
            Ok((mll, g)) if mll.is_finite() => {
                if mll > best.1 {
                    best = (h, mll);
                }
                grad = g;
            }
            _ => {
                halted = true;
                break;
            }
        }
    }
    if halted {
        log::warn!("hyperparameter search halted after {steps} steps; keeping best iterate");
    }
    Ok(FitOutcome {
        params: best.0,
        mll: best.1,
        init_mll,
        iterations: steps,
        halted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::marginal_log_likelihood;

    fn toy() -> (DMatrix<f64>, DVector<f64>) {
        let x = DMatrix::from_fn(12, 1, |i, _| i as f64 * 0.3);
        let f = DVector::from_fn(12, |i, _| if i < 6 { 1.0 } else { 0.0 });
        (x, f)
    }

    #[test]
    fn zero_iterations_returns_init() {
        let (x, f) = toy();
        let init = GpHyperparams::new(0.37, 2.1);
        let out = optimize_hyperparams(&x, &f, init, 0, 0.1).unwrap();
        assert_eq!(out.params, init);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.mll, out.init_mll);
    }

    #[test]
    fn never_worse_than_init() {
        let (x, f) = toy();
        let init = GpHyperparams::default();
        let out = optimize_hyperparams(&x, &f, init, 50, 0.1).unwrap();
        let before = marginal_log_likelihood(&x, &f, &init).unwrap();
        let after = marginal_log_likelihood(&x, &f, &out.params).unwrap();
        assert!(after >= before - 1e-9);
        assert!(after > before, "50 steps should improve this toy problem");
        assert_eq!(after, out.mll);
    }
}
