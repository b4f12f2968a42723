use serde::{Deserialize, Serialize};

use super::GroundTruth;
use crate::error::{Error, Result};
use crate::ingest::PseudoLabels;

/// Which end of the variance ranking gets replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceEnd {
    Highest,
    Lowest,
}

/// Replaces the `quantile` fraction of most uncertain entries with ground truth.
pub fn uncertainty_guided_replacement(labels: &PseudoLabels, gt: &GroundTruth, quantile: f64) -> Result<PseudoLabels> {
    replace_by_variance(labels, gt, quantile, VarianceEnd::Highest)
}

/// Ranks every label entry with positive variance (determined entries carry
/// none and are out of scope), takes `ceil(quantile * n)` from the chosen end
/// plus anything tied with the cutoff, and overwrites mask and mean from the
/// ground truth with variance 0. Label instance `k` is compared against GT
/// instance `k`.
pub fn replace_by_variance(
    labels: &PseudoLabels,
    gt: &GroundTruth,
    quantile: f64,
    end: VarianceEnd,
) -> Result<PseudoLabels> {
    if !(0.0..=1.0).contains(&quantile) {
        return Err(Error::Config(format!("quantile must lie in [0, 1], got {quantile}")));
    }
    if gt.len() != labels.n_points as usize {
        return Err(Error::LengthMismatch {
            expected: labels.n_points as usize,
            found: gt.len(),
        });
    }
    let mut ranked: Vec<f32> = labels
        .instances
        .iter()
        .flat_map(|inst| inst.variance.iter().copied().filter(|&v| v > 0.0))
        .collect();
    let take = (quantile * ranked.len() as f64).ceil() as usize;
    let mut out = labels.clone();
    if take == 0 {
        return Ok(out);
    }
    match end {
        VarianceEnd::Highest => ranked.sort_by(|a, b| b.total_cmp(a)),
        VarianceEnd::Lowest => ranked.sort_by(|a, b| a.total_cmp(b)),
    }
    let cutoff = ranked[take - 1];
    let selected = |v: f32| {
        v > 0.0
            && match end {
                VarianceEnd::Highest => v >= cutoff,
                VarianceEnd::Lowest => v <= cutoff,
            }
    };
    let inst_of = gt.instances();
    for (k, inst) in out.instances.iter_mut().enumerate() {
        for e in 0..inst.len() {
            if selected(inst.variance[e]) {
                let truth = inst_of[inst.candidates[e] as usize] == k as i32;
                inst.mask[e] = truth;
                inst.mean[e] = if truth { 1.0 } else { 0.0 };
                inst.variance[e] = 0.0;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::InstanceLabels;

    fn scene() -> (PseudoLabels, GroundTruth) {
        let gt = GroundTruth::new(vec![0, 0, 1, 1], vec![1, 1, 1, 1]).unwrap();
        let labels = PseudoLabels {
            n_points: 4,
            instances: vec![
                InstanceLabels {
                    class_id: 1,
                    candidates: vec![0, 1, 2],
                    mask: vec![true, false, true],
                    mean: vec![1.0, 0.4, 0.6],
                    variance: vec![0.0, 0.1, 0.2],
                },
                InstanceLabels {
                    class_id: 1,
                    candidates: vec![1, 2, 3],
                    mask: vec![true, false, true],
                    mean: vec![0.6, 0.4, 1.0],
                    variance: vec![0.1, 0.2, 0.0],
                },
            ],
        };
        (labels, gt)
    }

    #[test]
    fn zero_quantile_is_identity() {
        let (labels, gt) = scene();
        assert_eq!(uncertainty_guided_replacement(&labels, &gt, 0.0).unwrap(), labels);
    }

    #[test]
    fn full_quantile_recovers_gt() {
        let (labels, gt) = scene();
        let out = uncertainty_guided_replacement(&labels, &gt, 1.0).unwrap();
        for (k, inst) in out.instances.iter().enumerate() {
            assert_eq!(inst.dense_mask(4), gt.dense_mask(k));
            assert!(inst.variance.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn ends_pick_tied_groups() {
        let (labels, gt) = scene();
        // four ranked entries, ceil(0.25 * 4) = 1, ties pull in the partner
        let hi = replace_by_variance(&labels, &gt, 0.25, VarianceEnd::Highest).unwrap();
        assert_eq!(hi.instances[0].mask, vec![true, false, false]);
        assert_eq!(hi.instances[1].mask, vec![true, true, true]);
        let lo = replace_by_variance(&labels, &gt, 0.25, VarianceEnd::Lowest).unwrap();
        assert_eq!(lo.instances[0].mask, vec![true, true, true]);
        assert_eq!(lo.instances[1].mask, vec![false, false, true]);
    }
}
