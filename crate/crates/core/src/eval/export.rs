//! Point colorings for visual inspection of labels.

use crate::error::{Error, Result};
use crate::ingest::{PointCloud, PseudoLabels};

const UNLABELED: [f32; 3] = [0.3, 0.3, 0.3];

fn check(cloud: &PointCloud, labels: &PseudoLabels) -> Result<()> {
    if cloud.len() != labels.n_points as usize {
        return Err(Error::LengthMismatch {
            expected: cloud.len(),
            found: labels.n_points as usize,
        });
    }
    Ok(())
}

/// Golden-angle hue walk so that consecutive instances contrast.
pub fn instance_color(k: usize) -> [f32; 3] {
    let h = (k as f64 * 0.618_033_988_749_895).fract() * 6.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [r as f32, g as f32, b as f32]
}

/// Paints each foreground point with its instance's palette color.
pub fn colorize_instances(cloud: &PointCloud, labels: &PseudoLabels) -> Result<PointCloud> {
    check(cloud, labels)?;
    let mut colors = vec![UNLABELED; cloud.len()];
    for (k, inst) in labels.instances.iter().enumerate() {
        for p in inst.foreground() {
            colors[p as usize] = instance_color(k);
        }
    }
    PointCloud::new(cloud.positions().to_vec(), colors)
}

/// Blue-to-red ramp over the largest per-point variance, normalized by the
/// scene maximum.
pub fn colorize_variance(cloud: &PointCloud, labels: &PseudoLabels) -> Result<PointCloud> {
    check(cloud, labels)?;
    let mut var = vec![None::<f32>; cloud.len()];
    for inst in &labels.instances {
        for (&p, &v) in inst.candidates.iter().zip(&inst.variance) {
            let slot = &mut var[p as usize];
            *slot = Some(slot.map_or(v, |s| s.max(v)));
        }
    }
    let top = var.iter().flatten().copied().fold(0.0f32, f32::max);
    let colors = var
        .iter()
        .map(|v| match v {
            None => UNLABELED,
            Some(v) => {
                let t = if top > 0.0 { (v / top).clamp(0.0, 1.0) } else { 0.0 };
                [t, 0.0, 1.0 - t]
            }
        })
        .collect();
    PointCloud::new(cloud.positions().to_vec(), colors)
}
