//! Mask IoU and instance-segmentation average precision.
//!
//! Matching is greedy per class and IoU threshold: predictions in descending
//! confidence (ties by lower index) each take the unmatched ground-truth
//! instance of the same class with the highest IoU at or above the threshold.
//! AP is the area under the precision envelope of the resulting PR curve,
//! either exactly ([`Interpolation::AllPoint`], the default) or sampled at 101
//! recall levels.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::GroundTruth;
use crate::error::{Error, Result};
use crate::ingest::PseudoLabels;

pub fn mask_iou(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("masks have lengths {} and {}", a.len(), b.len())));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.iter().zip(b) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Ascending point ids.
    pub points: Vec<u32>,
    pub confidence: f64,
    pub class_id: u32,
}

/// One prediction per nonempty instance mask, scored by its mean foreground
/// pseudo mean.
pub fn predictions_from_labels(labels: &PseudoLabels) -> Vec<Prediction> {
    labels
        .instances
        .iter()
        .filter_map(|inst| {
            let points = inst.foreground();
            (!points.is_empty()).then(|| Prediction {
                points,
                confidence: inst.confidence(),
                class_id: inst.class_id,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassAp {
    pub ap: f64,
    pub ap50: f64,
    pub ap25: f64,
    pub ap90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    #[serde(rename = "AP")]
    pub ap: f64,
    #[serde(rename = "AP50")]
    pub ap50: f64,
    #[serde(rename = "AP25")]
    pub ap25: f64,
    #[serde(rename = "AP90")]
    pub ap90: f64,
    pub per_class: BTreeMap<u32, ClassAp>,
}

/// `0.50, 0.55, ..., 0.95`.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

/// IoU of every prediction with every overlapping GT instance of its class.
fn overlaps(preds: &[Prediction], gt: &GroundTruth) -> Vec<Vec<(usize, f64)>> {
    let inst = gt.instances();
    preds
        .iter()
        .map(|p| {
            let mut inter: HashMap<usize, usize> = HashMap::new();
            for &q in &p.points {
                let g = inst[q as usize];
                if g >= 0 {
                    *inter.entry(g as usize).or_insert(0) += 1;
                }
            }
            let mut out: Vec<(usize, f64)> = inter
                .into_iter()
                .filter(|&(g, _)| gt.instance_class(g) == p.class_id)
                .map(|(g, i)| (g, i as f64 / (p.points.len() + gt.instance_size(g) - i) as f64))
                .collect();
            out.sort_unstable_by_key(|&(g, _)| g);
            out
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    #[default]
    AllPoint,
    Points101,
}

fn area_under_envelope(hits: &[bool], n_gt: usize, interp: Interpolation) -> f64 {
    if n_gt == 0 {
        return 0.0;
    }
    let mut tp = 0usize;
    let mut precision = Vec::with_capacity(hits.len());
    let mut recall = Vec::with_capacity(hits.len());
    for (k, &hit) in hits.iter().enumerate() {
        tp += hit as usize;
        precision.push(tp as f64 / (k + 1) as f64);
        recall.push(tp as f64 / n_gt as f64);
    }
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    if interp == Interpolation::Points101 {
        let mut k = 0;
        let mut sum = 0.0;
        for r in 0..=100 {
            let level = r as f64 / 100.0;
            while k < recall.len() && recall[k] < level - 1e-12 {
                k += 1;
            }
            if k < recall.len() {
                sum += precision[k];
            }
        }
        return sum / 101.0;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for k in 0..hits.len() {
        if hits[k] {
            ap += (recall[k] - prev_recall) * precision[k];
            prev_recall = recall[k];
        }
    }
    ap
}

/// Per-class AP at one IoU threshold.
fn class_ap_at(
    order: &[usize],
    ious: &[Vec<(usize, f64)>],
    gt_of_class: usize,
    threshold: f64,
    n_instances: usize,
    interp: Interpolation,
) -> f64 {
    let mut taken = vec![false; n_instances];
    let hits: Vec<bool> = order
        .iter()
        .map(|&p| {
            let best = ious[p]
                .iter()
                .filter(|&&(g, iou)| !taken[g] && iou >= threshold)
                .fold(None::<(usize, f64)>, |acc, &(g, iou)| match acc {
                    Some((_, b)) if b >= iou => acc,
                    _ => Some((g, iou)),
                });
            match best {
                Some((g, _)) => {
                    taken[g] = true;
                    true
                }
                None => false,
            }
        })
        .collect();
    area_under_envelope(&hits, gt_of_class, interp)
}

/// Class-mean AP at each threshold in `thresholds`.
pub fn ap_at_thresholds(
    preds: &[Prediction],
    gt: &GroundTruth,
    thresholds: &[f64],
    interp: Interpolation,
) -> (Vec<f64>, BTreeMap<u32, Vec<f64>>) {
    let ious = overlaps(preds, gt);
    let mut gt_count: BTreeMap<u32, usize> = BTreeMap::new();
    for k in 0..gt.instance_count() {
        *gt_count.entry(gt.instance_class(k)).or_insert(0) += 1;
    }
    let mut per_class = BTreeMap::new();
    for (&class, &n_gt) in &gt_count {
        let mut order: Vec<usize> = (0..preds.len()).filter(|&p| preds[p].class_id == class).collect();
        order.sort_by(|&a, &b| preds[b].confidence.total_cmp(&preds[a].confidence).then(a.cmp(&b)));
        let aps: Vec<f64> = thresholds
            .iter()
            .map(|&t| class_ap_at(&order, &ious, n_gt, t, gt.instance_count(), interp))
            .collect();
        per_class.insert(class, aps);
    }
    let n_classes = per_class.len().max(1) as f64;
    let mean = (0..thresholds.len())
        .map(|t| per_class.values().map(|a| a[t]).sum::<f64>() / n_classes)
        .collect();
    (mean, per_class)
}

/// AP over IoU 0.50:0.05:0.95 plus AP50, AP25 and AP90.
pub fn average_precision(preds: &[Prediction], gt: &GroundTruth) -> ApReport {
    average_precision_with(preds, gt, Interpolation::AllPoint)
}

pub fn average_precision_with(preds: &[Prediction], gt: &GroundTruth, interp: Interpolation) -> ApReport {
    let mut thresholds = coco_thresholds();
    thresholds.push(0.25);
    let (mean, per_class) = ap_at_thresholds(preds, gt, &thresholds, interp);
    let summarize = |a: &[f64]| ClassAp {
        // a mean never exceeds its largest term; clamping absorbs summation rounding
        ap: (a[..10].iter().sum::<f64>() / 10.0).min(a[..10].iter().copied().fold(0.0, f64::max)),
        ap50: a[0],
        ap25: a[10],
        ap90: a[8],
    };
    let overall = summarize(&mean);
    ApReport {
        ap: overall.ap,
        ap50: overall.ap50,
        ap25: overall.ap25,
        ap90: overall.ap90,
        per_class: per_class.into_iter().map(|(c, a)| (c, summarize(&a))).collect(),
    }
}

/// AP of pseudo labels measured against ground truth.
pub fn evaluate_labels(labels: &PseudoLabels, gt: &GroundTruth) -> ApReport {
    average_precision(&predictions_from_labels(labels), gt)
}
