//! Box-annotation degradations: corner noise and random drops.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Aabb, BoxSet, PointCloud};

/// Standard deviation of the corner noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "sigma")]
pub enum CornerNoise {
    /// Meters.
    Absolute(f64),
    /// Multiple of the box extent along each axis.
    Fraction(f64),
}

impl CornerNoise {
    fn sigma(&self) -> f64 {
        match *self {
            Self::Absolute(s) | Self::Fraction(s) => s,
        }
    }
}

/// Independent Gaussian noise on all six corner coordinates, then min/max
/// re-sorted per axis. Per box, the draws are the same for every sigma of a
/// given seed, so larger sigmas scale the same displacement.
pub fn perturb_box_corners(boxes: &BoxSet, noise: CornerNoise, seed: u64) -> Result<BoxSet> {
    let sigma = noise.sigma();
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Config(format!("corner noise sigma must be finite and nonnegative, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = boxes
        .iter()
        .map(|b| {
            let extent = b.extent();
            let mut min = b.min;
            let mut max = b.max;
            for a in 0..3 {
                let scale = match noise {
                    CornerNoise::Absolute(s) => s,
                    CornerNoise::Fraction(s) => s * extent[a],
                };
                let z0: f64 = rng.sample(StandardNormal);
                let z1: f64 = rng.sample(StandardNormal);
                let (lo, hi) = (b.min[a] + scale * z0, b.max[a] + scale * z1);
                min[a] = lo.min(hi);
                max[a] = lo.max(hi);
            }
            Aabb { min, max, ..*b }
        })
        .collect();
    BoxSet::new(out)
}

/// Removes each box independently with probability `rate`.
pub fn drop_boxes(boxes: &BoxSet, rate: f64, seed: u64) -> Result<BoxSet> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Config(format!("drop rate must lie in [0, 1], got {rate}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kept = boxes
        .iter()
        .filter(|_| rng.random::<f64>() >= rate)
        .copied()
        .collect();
    BoxSet::new(kept)
}

/// Componentwise min/max over the masked points.
pub fn mask_to_aabb(mask: &[bool], cloud: &PointCloud, class_id: u32, instance_id: u32) -> Result<Aabb> {
    if mask.len() != cloud.len() {
        return Err(Error::Shape(format!("mask has {} entries for {} points", mask.len(), cloud.len())));
    }
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    let mut any = false;
    for (p, _) in cloud.positions().iter().zip(mask).filter(|(_, &m)| m) {
        any = true;
        for a in 0..3 {
            min[a] = min[a].min(p[a] as f64);
            max[a] = max[a].max(p[a] as f64);
        }
    }
    if !any {
        return Err(Error::EmptyMask);
    }
    Ok(Aabb {
        min,
        max,
        class_id,
        instance_id,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_boxes(k: u32) -> BoxSet {
        BoxSet::new(
            (0..k)
                .map(|i| Aabb {
                    min: [i as f64, 0.0, 0.0],
                    max: [i as f64 + 1.0, 1.0, 1.0],
                    class_id: 1,
                    instance_id: i,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_sigma_and_zero_rate_are_identity() {
        let b = unit_boxes(5);
        assert_eq!(perturb_box_corners(&b, CornerNoise::Absolute(0.0), 3).unwrap(), b);
        assert_eq!(perturb_box_corners(&b, CornerNoise::Fraction(0.0), 3).unwrap(), b);
        assert_eq!(drop_boxes(&b, 0.0, 3).unwrap(), b);
        assert!(drop_boxes(&b, 1.0, 3).unwrap().is_empty());
        assert!(drop_boxes(&b, 1.5, 3).is_err());
        assert!(perturb_box_corners(&b, CornerNoise::Absolute(-1.0), 3).is_err());
    }

    #[test]
    fn fraction_on_unit_box_matches_absolute() {
        let b = unit_boxes(3);
        let f = perturb_box_corners(&b, CornerNoise::Fraction(0.1), 9).unwrap();
        let a = perturb_box_corners(&b, CornerNoise::Absolute(0.1), 9).unwrap();
        assert_eq!(f, a);
    }

    #[test]
    fn noise_std_close_to_sigma() {
        let b = unit_boxes(1);
        let n = 4000;
        let mut sum_sq = 0.0;
        for seed in 0..n {
            let p = perturb_box_corners(&b, CornerNoise::Fraction(0.05), seed).unwrap();
            // the x-extent difference of two independent draws has variance 2 sigma^2 when no swap
            let d = (p[0].max[0] - p[0].min[0]) - 1.0;
            sum_sq += d * d;
        }
        let std = (sum_sq / n as f64 / 2.0).sqrt();
        assert!((std - 0.05).abs() < 0.005, "{std}");
    }

    #[test]
    fn drop_is_deterministic() {
        let b = unit_boxes(20);
        assert_eq!(drop_boxes(&b, 0.5, 11).unwrap(), drop_boxes(&b, 0.5, 11).unwrap());
    }

    #[test]
    fn aabb_of_mask() {
        let cloud = PointCloud::new(
            vec![[0.0, 0.0, 0.0], [1.0, 2.0, 3.0], [0.5, 0.5, 0.5], [9.0, 9.0, 9.0]],
            vec![[0.0; 3]; 4],
        )
        .unwrap();
        let b = mask_to_aabb(&[true, true, true, false], &cloud, 2, 7).unwrap();
        assert_eq!((b.min, b.max), ([0.0; 3], [1.0, 2.0, 3.0]));
        let single = mask_to_aabb(&[false, true, false, false], &cloud, 2, 7).unwrap();
        assert_eq!(single.min, single.max);
        assert!(matches!(mask_to_aabb(&[false; 4], &cloud, 0, 0), Err(Error::EmptyMask)));
    }
}
