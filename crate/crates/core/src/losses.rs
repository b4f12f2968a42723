//! Reference mask and uncertainty losses with analytic gradients.

use crate::error::{Error, Result};

pub const DICE_EPS: f64 = 1e-6;

/// Pseudo targets `(e, v)` and predictions `(e_hat, v_hat)` per location.
#[derive(Debug, Clone, Copy)]
pub struct LossBatch<'a> {
    pub mean: &'a [f64],
    pub variance: &'a [f64],
    pub pred_mean: &'a [f64],
    pub pred_variance: &'a [f64],
}

impl LossBatch<'_> {
    fn check(&self) -> Result<()> {
        let n = self.mean.len();
        for len in [self.variance.len(), self.pred_mean.len(), self.pred_variance.len()] {
            if len != n {
                return Err(Error::Shape(format!("loss inputs have lengths {n} and {len}")));
            }
        }
        if let Some(index) = self.variance.iter().position(|&v| v.is_nan() || v < 0.0) {
            return Err(Error::Domain {
                index,
                message: "pseudo variance must be nonnegative".into(),
            });
        }
        for (index, (&v, &vh)) in self.variance.iter().zip(self.pred_variance).enumerate() {
            if v > 0.0 && (vh.is_nan() || vh <= 0.0) {
                return Err(Error::Domain {
                    index,
                    message: format!("predicted variance {vh} must be positive where pseudo variance is {v}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KlLoss {
    pub per_location: Vec<f64>,
    pub mean: f64,
}

fn kl_term(e: f64, v: f64, eh: f64, vh: f64) -> f64 {
    if v > 0.0 {
        (vh / v).ln() + (v * v + (e - eh) * (e - eh)) / (2.0 * vh * vh) - 0.5
    } else {
        (e - eh) * (e - eh) + vh * vh
    }
}

/// Gaussian KL where the pseudo variance is positive, squared error on mean
/// and predicted variance where it is zero.
pub fn kl_uncertainty_loss(batch: &LossBatch<'_>) -> Result<KlLoss> {
    batch.check()?;
    let per_location: Vec<f64> = (0..batch.mean.len())
        .map(|i| kl_term(batch.mean[i], batch.variance[i], batch.pred_mean[i], batch.pred_variance[i]))
        .collect();
    let mean = if per_location.is_empty() {
        0.0
    } else {
        per_location.iter().sum::<f64>() / per_location.len() as f64
    };
    Ok(KlLoss { per_location, mean })
}

/// Per-location `(d/d e_hat, d/d v_hat)`.
pub fn kl_uncertainty_grad(batch: &LossBatch<'_>) -> Result<Vec<(f64, f64)>> {
    batch.check()?;
    Ok((0..batch.mean.len())
        .map(|i| {
            let (e, v, eh, vh) = (batch.mean[i], batch.variance[i], batch.pred_mean[i], batch.pred_variance[i]);
            if v > 0.0 {
                let d2 = (e - eh) * (e - eh);
                ((eh - e) / (vh * vh), 1.0 / vh - (v * v + d2) / (vh * vh * vh))
            } else {
                (2.0 * (eh - e), 2.0 * vh)
            }
        })
        .collect())
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("prediction has {} entries, target {}", a.len(), b.len())));
    }
    Ok(())
}

pub fn dice_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    same_len(pred, target)?;
    let inter: f64 = pred.iter().zip(target).map(|(p, t)| p * t).sum();
    let total: f64 = pred.iter().sum::<f64>() + target.iter().sum::<f64>();
    Ok(1.0 - (2.0 * inter + DICE_EPS) / (total + DICE_EPS))
}

pub fn dice_grad(pred: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    same_len(pred, target)?;
    let num: f64 = 2.0 * pred.iter().zip(target).map(|(p, t)| p * t).sum::<f64>() + DICE_EPS;
    let den: f64 = pred.iter().sum::<f64>() + target.iter().sum::<f64>() + DICE_EPS;
    Ok(target.iter().map(|t| -(2.0 * t * den - num) / (den * den)).collect())
}

pub fn bce_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    same_len(pred, target)?;
    if pred.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| -(t * p.ln() + (1.0 - t) * (1.0 - p).ln()))
        .sum();
    Ok(sum / pred.len() as f64)
}

pub fn bce_grad(pred: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    same_len(pred, target)?;
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| (-t / p + (1.0 - t) / (1.0 - p)) / n)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(e: f64, v: f64, eh: f64, vh: f64) -> f64 {
        kl_uncertainty_loss(&LossBatch {
            mean: &[e],
            variance: &[v],
            pred_mean: &[eh],
            pred_variance: &[vh],
        })
        .unwrap()
        .mean
    }

    #[test]
    fn kl_reference_values() {
        assert_eq!(one(0.3, 1.0, 0.3, 1.0), 0.0);
        assert_eq!(one(0.7, 0.0, 0.7, 0.0), 0.0);
        assert!((one(0.0, 1.0, 1.0, 2.0) - 0.443147).abs() < 1e-6);
        assert!((one(0.0, 1.0, 1.0, 2.0) - (2f64.ln() + 0.25 - 0.5)).abs() < 1e-15);
        // dirac branch penalizes v_hat squared
        assert!((one(0.5, 0.0, 0.5, 0.3) - 0.09).abs() < 1e-15);
    }

    #[test]
    fn kl_domain_error_carries_index() {
        let err = kl_uncertainty_loss(&LossBatch {
            mean: &[0.0, 0.0],
            variance: &[0.0, 0.5],
            pred_mean: &[0.0, 0.0],
            pred_variance: &[0.0, 0.0],
        })
        .unwrap_err();
        assert!(matches!(err, Error::Domain { index: 1, .. }));
    }

    #[test]
    fn dice_and_bce_values() {
        let t = [1.0, 0.0, 1.0, 1.0];
        assert!(dice_loss(&t, &t).unwrap().abs() < 1e-6);
        assert!((bce_loss(&[0.5; 4], &t).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((bce_loss(&[0.9, 0.1], &[1.0, 0.0]).unwrap() - 0.10536).abs() < 1e-5);
        assert!(matches!(dice_loss(&[0.5], &t), Err(Error::Shape(_))));
        assert!(matches!(bce_loss(&[0.5], &t), Err(Error::Shape(_))));
    }
}
