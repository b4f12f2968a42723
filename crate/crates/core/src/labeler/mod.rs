//! Pseudo-label generation from box annotations.
//!
//! Every region inside exactly one box becomes foreground of that box with
//! mean 1 and variance 0. Regions shared by several boxes are resolved per
//! box pair `(i, j)` by the configured [`LabelMode`]; the instance that wins a
//! region gets mask 1, the other gets mask 0, and both store the same
//! variance. Box `i` carries label 1 and box `j` label 0, so `j` stores the
//! mirrored mean `1 - e`.

pub mod linear;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{gp_condition, optimize_hyperparams, GpHyperparams, DEFAULT_ITERS, DEFAULT_LR};
use crate::ingest::{BoxSet, FeatureMatrix, InstanceLabels, PointCloud, PseudoLabels, SuperpointPartition};
use crate::partition::{
    build_region_table, pair_training_data, Granularity, PairData, RegionStatus, RegionTable, DEFAULT_POINT_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelMode {
    /// GP on `{-1, +1}` targets, decided by the probit-squashed posterior.
    GpClassify,
    /// GP on raw `{0, 1}` targets, decided by the posterior mean at 0.5.
    GpRegress,
    /// Undetermined regions get no label.
    Ignore,
    /// Undetermined regions go to the smaller box of their pair.
    SmallerBox,
    /// Logistic regression per pair.
    Linear,
}

impl LabelMode {
    pub const ALL: [LabelMode; 5] = [
        LabelMode::GpClassify,
        LabelMode::GpRegress,
        LabelMode::Ignore,
        LabelMode::SmallerBox,
        LabelMode::Linear,
    ];

    pub fn is_gp(self) -> bool {
        matches!(self, LabelMode::GpClassify | LabelMode::GpRegress)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSource {
    Raw,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelerConfig {
    pub mode: LabelMode,
    pub granularity: Granularity,
    pub feature_source: FeatureSource,
    pub hyper_init: GpHyperparams,
    pub learnable: bool,
    pub opt_iters: usize,
    pub lr: f64,
    /// Training-set cap per pair; `None` keeps every determined region.
    pub point_cap: Option<usize>,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for LabelerConfig {
    fn default() -> Self {
        Self {
            mode: LabelMode::GpClassify,
            granularity: Granularity::Superpoint,
            feature_source: FeatureSource::Raw,
            hyper_init: GpHyperparams::default(),
            learnable: true,
            opt_iters: DEFAULT_ITERS,
            lr: DEFAULT_LR,
            point_cap: None,
            threshold: 0.5,
            seed: 0,
        }
    }
}

impl LabelerConfig {
    pub fn with_mode(mode: LabelMode, granularity: Granularity) -> Self {
        Self {
            mode,
            granularity,
            point_cap: match granularity {
                Granularity::Point => Some(DEFAULT_POINT_CAP),
                Granularity::Superpoint => None,
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("threshold {} outside (0, 1)", self.threshold)));
        }
        if !self.hyper_init.is_valid() {
            return Err(Error::Config(format!("invalid hyperparameters {:?}", self.hyper_init)));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if self.point_cap == Some(0) {
            return Err(Error::Config("point cap must be positive".into()));
        }
        Ok(())
    }
}

/// Per-pair record of what the labeler did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub first_instance: u32,
    pub second_instance: u32,
    pub n_train: usize,
    pub n_test: usize,
    pub length_scale: Option<f64>,
    pub output_scale: Option<f64>,
    pub mll: Option<f64>,
    /// Fell back to the smaller-box rule because one side had no determined region.
    pub fallback: bool,
    pub halted: bool,
}

#[derive(Debug, Clone)]
pub struct LabelRun {
    pub labels: PseudoLabels,
    pub pairs: Vec<PairReport>,
}

/// Outcome for one undetermined region, from instance `i`'s point of view.
#[derive(Debug, Clone, Copy)]
struct Decision {
    region: usize,
    first_wins: bool,
    first_mean: f64,
    variance: f64,
}

struct PairOutcome {
    pair: (usize, usize),
    decisions: Vec<Decision>,
    report: PairReport,
}

fn smaller_box_decisions(pair: (usize, usize), regions: &[usize], boxes: &BoxSet) -> Vec<Decision> {
    let first_wins = boxes[pair.0].volume() <= boxes[pair.1].volume();
    regions
        .iter()
        .map(|&region| Decision {
            region,
            first_wins,
            first_mean: if first_wins { 1.0 } else { 0.0 },
            variance: 0.0,
        })
        .collect()
}

fn fit_params(data: &PairData, targets: &DVector<f64>, config: &LabelerConfig) -> Result<(GpHyperparams, Option<f64>, bool)> {
    if config.learnable && config.opt_iters > 0 {
        let fit = optimize_hyperparams(&data.x, targets, config.hyper_init, config.opt_iters, config.lr)?;
        Ok((fit.params, Some(fit.mll), fit.halted))
    } else {
        Ok((config.hyper_init, None, false))
    }
}

fn resolve_pair(
    table: &RegionTable,
    boxes: &BoxSet,
    pair: (usize, usize),
    tests: &[usize],
    config: &LabelerConfig,
) -> Result<PairOutcome> {
    let mut report = PairReport {
        first_instance: boxes[pair.0].instance_id,
        second_instance: boxes[pair.1].instance_id,
        n_train: 0,
        n_test: tests.len(),
        length_scale: None,
        output_scale: None,
        mll: None,
        fallback: false,
        halted: false,
    };
    let decisions = match config.mode {
        LabelMode::Ignore => Vec::new(),
        LabelMode::SmallerBox => smaller_box_decisions(pair, tests, boxes),
        mode => match pair_training_data(table, pair, config.point_cap, boxes) {
            Err(Error::DegeneratePair { first, second, missing }) => {
                log::warn!(
                    "pair ({first}, {second}): instance {missing} has no determined region, using smaller-box rule"
                );
                report.fallback = true;
                smaller_box_decisions(pair, tests, boxes)
            }
            Err(e) => return Err(e),
            Ok(data) => {
                report.n_train = data.n_train();
                labeled_decisions(&data, mode, config, &mut report)?
            }
        },
    };
    Ok(PairOutcome {
        pair,
        decisions,
        report,
    })
}

fn labeled_decisions(
    data: &PairData,
    mode: LabelMode,
    config: &LabelerConfig,
    report: &mut PairReport,
) -> Result<Vec<Decision>> {
    let zip = |first: Vec<(bool, f64, f64)>| {
        data.test_regions
            .iter()
            .zip(first)
            .map(|(&region, (first_wins, first_mean, variance))| Decision {
                region,
                first_wins,
                first_mean,
                variance,
            })
            .collect()
    };
    Ok(match mode {
        LabelMode::GpClassify => {
            let targets = data.f.map(|v| 2.0 * v - 1.0);
            let (h, mll, halted) = fit_params(data, &targets, config)?;
            report.length_scale = Some(h.length_scale);
            report.output_scale = Some(h.output_scale);
            report.mll = mll;
            report.halted = halted;
            let post = gp_condition(&data.x, &targets, &data.x_star, &h)?;
            // latent y = 2f - 1, so the label-unit mean is (y + 1) / 2 and its variance var(y) / 4
            zip(post
                .mean
                .iter()
                .zip(&post.variance)
                .zip(&post.probability)
                .map(|((&m, &v), &p)| (p >= config.threshold, ((m + 1.0) * 0.5).clamp(0.0, 1.0), 0.25 * v))
                .collect())
        }
        LabelMode::GpRegress => {
            let (h, mll, halted) = fit_params(data, &data.f, config)?;
            report.length_scale = Some(h.length_scale);
            report.output_scale = Some(h.output_scale);
            report.mll = mll;
            report.halted = halted;
            let post = gp_condition(&data.x, &data.f, &data.x_star, &h)?;
            zip(post
                .mean
                .iter()
                .zip(&post.variance)
                .map(|(&m, &v)| (m >= 0.5, m.clamp(0.0, 1.0), v))
                .collect())
        }
        LabelMode::Linear => {
            let model = linear::LogisticModel::fit(&data.x, &data.f, linear::STEPS, linear::LEARNING_RATE);
            zip(model
                .predict(&data.x_star)
                .into_iter()
                .map(|p| (p >= config.threshold, p, 0.0))
                .collect())
        }
        LabelMode::Ignore | LabelMode::SmallerBox => unreachable!("handled without training data"),
    })
}

#[derive(Default)]
struct Entries(Vec<(u32, bool, f32, f32)>);

impl Entries {
    fn into_labels(mut self, class_id: u32) -> InstanceLabels {
        self.0.sort_unstable_by_key(|e| e.0);
        debug_assert!(self.0.windows(2).all(|w| w[0].0 < w[1].0));
        let mut out = InstanceLabels {
            class_id,
            candidates: Vec::with_capacity(self.0.len()),
            mask: Vec::with_capacity(self.0.len()),
            mean: Vec::with_capacity(self.0.len()),
            variance: Vec::with_capacity(self.0.len()),
        };
        for (p, m, e, v) in self.0 {
            out.candidates.push(p);
            out.mask.push(m);
            out.mean.push(e);
            out.variance.push(v);
        }
        out
    }
}

/// Full pipeline returning labels plus per-pair diagnostics.
pub fn generate_with_report(
    cloud: &PointCloud,
    boxes: &BoxSet,
    config: &LabelerConfig,
    superpoints: Option<&SuperpointPartition>,
    features: Option<&FeatureMatrix>,
) -> Result<LabelRun> {
    config.validate()?;
    let superpoints = match config.granularity {
        Granularity::Point => None,
        Granularity::Superpoint => Some(
            superpoints.ok_or_else(|| Error::Config("superpoint granularity requires a superpoint partition".into()))?,
        ),
    };
    let features = match config.feature_source {
        FeatureSource::Raw => None,
        FeatureSource::External => Some(
            features.ok_or_else(|| Error::Config("external feature source requires a feature matrix".into()))?,
        ),
    };
    let table = build_region_table(cloud, boxes, superpoints, features)?;
    assign_labels(&table, cloud, boxes, config)
}

/// Pseudo labels for every box; see the module docs for the rules.
pub fn generate_pseudo_labels(
    cloud: &PointCloud,
    boxes: &BoxSet,
    config: &LabelerConfig,
    superpoints: Option<&SuperpointPartition>,
    features: Option<&FeatureMatrix>,
) -> Result<PseudoLabels> {
    generate_with_report(cloud, boxes, config, superpoints, features).map(|run| run.labels)
}

/// Reruns the pipeline on externally supplied per-point features.
pub fn self_train_relabel(
    cloud: &PointCloud,
    boxes: &BoxSet,
    config: &LabelerConfig,
    superpoints: Option<&SuperpointPartition>,
    features: &FeatureMatrix,
) -> Result<PseudoLabels> {
    let config = LabelerConfig {
        feature_source: FeatureSource::External,
        ..config.clone()
    };
    generate_pseudo_labels(cloud, boxes, &config, superpoints, Some(features))
}

fn assign_labels(table: &RegionTable, cloud: &PointCloud, boxes: &BoxSet, config: &LabelerConfig) -> Result<LabelRun> {
    let membership = table.point_membership();
    let inside = |p: u32, k: usize| membership[p as usize].binary_search(&k).is_ok();
    let mut entries: Vec<Entries> = (0..boxes.len()).map(|_| Entries::default()).collect();

    for (k, slot) in entries.iter_mut().enumerate() {
        for &r in table.determined_of(k) {
            for &p in &table.regions()[r].members {
                if inside(p, k) {
                    slot.0.push((p, true, 1.0, 0.0));
                }
            }
        }
    }

    let jobs: Vec<(&(usize, usize), &Vec<usize>)> = table.pairs().iter().collect();
    let outcomes: Vec<PairOutcome> = jobs
        .into_par_iter()
        .map(|(&pair, tests)| resolve_pair(table, boxes, pair, tests, config))
        .collect::<Result<_>>()?;

    let mut reports = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        let (i, j) = outcome.pair;
        for d in &outcome.decisions {
            debug_assert!(matches!(table.regions()[d.region].status, RegionStatus::Undetermined(..)));
            let first_mean = d.first_mean as f32;
            let second_mean = (1.0 - d.first_mean).clamp(0.0, 1.0) as f32;
            let variance = d.variance as f32;
            for &p in &table.regions()[d.region].members {
                if inside(p, i) {
                    entries[i].0.push((p, d.first_wins, first_mean, variance));
                }
                if inside(p, j) {
                    entries[j].0.push((p, !d.first_wins, second_mean, variance));
                }
            }
        }
        reports.push(outcome.report);
    }

    let instances = entries
        .into_iter()
        .zip(boxes.iter())
        .map(|(e, b)| e.into_labels(b.class_id))
        .collect();
    Ok(LabelRun {
        labels: PseudoLabels {
            n_points: cloud.len() as u32,
            instances,
        },
        pairs: reports,
    })
}
