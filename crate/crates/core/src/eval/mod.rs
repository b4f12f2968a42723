//! Label quality measurement, annotation degradations and synthetic scenes.

pub mod export;
mod ground_truth;
pub mod metrics;
pub mod perturb;
pub mod replace;
pub mod synth;

pub use ground_truth::{encode_ground_truth, load_ground_truth, parse_ground_truth, write_ground_truth, GroundTruth};
pub use metrics::{
    ap_at_thresholds, average_precision, average_precision_with, coco_thresholds, evaluate_labels, mask_iou,
    predictions_from_labels, ApReport, ClassAp, Interpolation, Prediction,
};
pub use perturb::{drop_boxes, mask_to_aabb, perturb_box_corners, CornerNoise};
pub use replace::{replace_by_variance, uncertainty_guided_replacement, VarianceEnd};
pub use synth::{generate_scene, voxel_superpoints, Primitive, Scene, SceneSpec};
