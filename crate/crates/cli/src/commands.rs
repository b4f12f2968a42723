use std::path::Path;
use std::time::Instant;

use gapro_core::eval::export::{colorize_instances, colorize_variance};
use gapro_core::eval::{
    average_precision_with, drop_boxes, generate_scene, load_ground_truth, perturb_box_corners,
    predictions_from_labels, write_ground_truth, CornerNoise, SceneSpec,
};
use gapro_core::gp::GpHyperparams;
use gapro_core::ingest::{
    load_boxes, load_features, load_point_cloud, load_superpoints, read_pseudo_labels, write_boxes,
    write_point_cloud, write_pseudo_labels, write_superpoints, PlyEncoding,
};
use gapro_core::labeler::{generate_with_report, FeatureSource, LabelerConfig};
use gapro_core::partition::{build_region_table, overlap_statistics, Granularity};
use gapro_core::{Error, Result};
use serde::Serialize;

use crate::manifest::{Inputs, Outputs, RunManifest};
use crate::{EvalArgs, GenerateArgs, PerturbArgs, ReplayArgs, StatsArgs, SynthArgs};

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn config_from_args(args: &GenerateArgs) -> LabelerConfig {
    let granularity = Granularity::from(args.granularity);
    let mut config = LabelerConfig::with_mode(args.mode.into(), granularity);
    config.feature_source = if args.features.is_some() {
        FeatureSource::External
    } else {
        FeatureSource::Raw
    };
    config.hyper_init = GpHyperparams::new(args.length_scale, args.output_scale);
    config.learnable = !args.fixed_params;
    config.opt_iters = args.opt_iters;
    config.lr = args.lr;
    if let Some(cap) = args.point_cap {
        config.point_cap = (cap > 0).then_some(cap);
    }
    config.threshold = args.threshold;
    config.seed = args.seed;
    config
}

/// Runs the labeler over `inputs` and writes every requested output.
fn run_labeler(config: &LabelerConfig, inputs: &Inputs, outputs: &Outputs, threads: Option<usize>) -> Result<RunManifest> {
    config.validate()?;
    let start = Instant::now();
    let cloud = load_point_cloud(&inputs.points)?;
    let boxes = load_boxes(&inputs.boxes)?;
    let superpoints = inputs
        .superpoints
        .as_ref()
        .filter(|_| config.granularity == Granularity::Superpoint)
        .map(|p| load_superpoints(p, cloud.len()))
        .transpose()?;
    let features = inputs.features.as_ref().map(load_features).transpose()?;
    log::info!(
        "{} points, {} boxes, {:?} mode at {:?} granularity",
        cloud.len(),
        boxes.len(),
        config.mode,
        config.granularity
    );

    let run = generate_with_report(&cloud, &boxes, config, superpoints.as_ref(), features.as_ref())?;
    write_pseudo_labels(&run.labels, &outputs.labels)?;
    if let Some(path) = &outputs.export_ply {
        write_point_cloud(&colorize_instances(&cloud, &run.labels)?, path, PlyEncoding::BinaryLittleEndian)?;
    }
    if let Some(path) = &outputs.export_variance_ply {
        write_point_cloud(&colorize_variance(&cloud, &run.labels)?, path, PlyEncoding::BinaryLittleEndian)?;
    }
    let fallbacks = run.pairs.iter().filter(|p| p.fallback).count();
    log::info!("{} pairs resolved ({fallbacks} by fallback)", run.pairs.len());

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        threads,
        config: config.clone(),
        inputs: inputs.clone(),
        outputs: outputs.clone(),
        duration_secs: start.elapsed().as_secs_f64(),
        pairs: run.pairs,
    };
    if let Some(path) = &outputs.manifest {
        manifest.write(path)?;
    }
    Ok(manifest)
}

#[derive(Serialize)]
struct GenerateSummary<'a> {
    labels: &'a Path,
    pairs: usize,
    fallbacks: usize,
    duration_secs: f64,
}

fn summarize(m: &RunManifest) {
    print_json(&GenerateSummary {
        labels: &m.outputs.labels,
        pairs: m.pairs.len(),
        fallbacks: m.pairs.iter().filter(|p| p.fallback).count(),
        duration_secs: m.duration_secs,
    });
}

pub fn generate(args: GenerateArgs, threads: Option<usize>) -> Result<()> {
    let config = config_from_args(&args);
    let inputs = Inputs {
        points: args.points,
        boxes: args.boxes,
        superpoints: args.superpoints,
        features: args.features,
    };
    let outputs = Outputs {
        labels: args.out,
        manifest: args.manifest,
        export_ply: args.export_ply,
        export_variance_ply: args.export_variance_ply,
    };
    summarize(&run_labeler(&config, &inputs, &outputs, threads)?);
    Ok(())
}

pub fn replay(args: ReplayArgs, threads: Option<usize>) -> Result<()> {
    let recorded = RunManifest::load(&args.manifest)?;
    // the manifest is an input here and is never rewritten; a redirected
    // replay also leaves the recorded run's side outputs alone
    let outputs = match args.out {
        Some(labels) => Outputs {
            labels,
            manifest: None,
            export_ply: None,
            export_variance_ply: None,
        },
        None => Outputs {
            manifest: None,
            ..recorded.outputs.clone()
        },
    };
    summarize(&run_labeler(&recorded.config, &recorded.inputs, &outputs, threads)?);
    Ok(())
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let labels = read_pseudo_labels(&args.labels)?;
    let gt = load_ground_truth(&args.gt)?;
    if gt.len() != labels.n_points as usize {
        return Err(Error::LengthMismatch {
            expected: labels.n_points as usize,
            found: gt.len(),
        });
    }
    let report = average_precision_with(&predictions_from_labels(&labels), &gt, args.interpolation.into());
    if let Some(path) = &args.report {
        write_json(&report, path)?;
    }
    print_json(&report);
    Ok(())
}

pub fn stats(args: StatsArgs) -> Result<()> {
    let cloud = load_point_cloud(&args.points)?;
    let boxes = load_boxes(&args.boxes)?;
    let superpoints = args.superpoints.map(|p| load_superpoints(p, cloud.len())).transpose()?;
    let table = build_region_table(&cloud, &boxes, superpoints.as_ref(), None)?;
    print_json(&overlap_statistics(&table));
    Ok(())
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("scene spec {}: {e}", path.display())))?
        }
        None => SceneSpec::default(),
    };
    macro_rules! set {
        ($($field:expr => $value:expr),* $(,)?) => {$(if let Some(v) = $value { $field = v.into(); })*};
    }
    set! {
        spec.seed => args.seed,
        spec.objects[0] => args.objects_min,
        spec.objects[1] => args.objects_max,
        spec.primitive => args.primitive,
        spec.points_per_object[0] => args.points_min,
        spec.points_per_object[1] => args.points_max,
        spec.overlap => args.overlap,
        spec.separability => args.separability,
        spec.background_points => args.background_points,
        spec.voxel_size => args.voxel_size,
    }
    let scene = generate_scene(&spec)?;
    let dir = &args.out_dir;
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.clone(),
        source,
    })?;
    let encoding = if args.ascii {
        PlyEncoding::Ascii
    } else {
        PlyEncoding::BinaryLittleEndian
    };
    write_point_cloud(&scene.cloud, dir.join("points.ply"), encoding)?;
    write_boxes(&scene.boxes, dir.join("boxes.json"))?;
    write_superpoints(&scene.superpoints, dir.join("superpoints.txt"))?;
    write_ground_truth(&scene.ground_truth, dir.join("gt.txt"))?;
    write_json(&spec, &dir.join("spec.json"))?;

    #[derive(Serialize)]
    struct Summary<'a> {
        out_dir: &'a Path,
        points: usize,
        instances: usize,
        superpoints: usize,
    }
    print_json(&Summary {
        out_dir: dir,
        points: scene.cloud.len(),
        instances: scene.boxes.len(),
        superpoints: scene.superpoints.count(),
    });
    Ok(())
}

pub fn perturb(args: PerturbArgs) -> Result<()> {
    let mut boxes = load_boxes(&args.boxes)?;
    let before = boxes.len();
    if let Some(rate) = args.drop_rate {
        boxes = drop_boxes(&boxes, rate, args.seed)?;
    }
    if let Some(sigma) = args.corner_noise {
        let noise = if args.fractional {
            CornerNoise::Fraction(sigma)
        } else {
            CornerNoise::Absolute(sigma)
        };
        // decorrelate the noise draws from the drop draws
        boxes = perturb_box_corners(&boxes, noise, args.seed.wrapping_add(1))?;
    }
    write_boxes(&boxes, &args.out)?;

    #[derive(Serialize)]
    struct Summary<'a> {
        out: &'a Path,
        boxes_in: usize,
        boxes_out: usize,
    }
    print_json(&Summary {
        out: &args.out,
        boxes_in: before,
        boxes_out: boxes.len(),
    });
    Ok(())
}
