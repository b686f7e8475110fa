use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{predictions_csv, ExperimentConfig, MetricsReport, Prediction, RunOutput};
use crate::error::{Error, Result};
use crate::hierarchy::{LevelConfig, MacTemplate, Model, ModelConfig};
use crate::mac::{CsaParams, Mode};
use crate::preprocess::{preprocess_mnist_with, BinaryFrame, MnistSet, MNIST_HEIGHT, MNIST_WIDTH};
use crate::seed;

/// Gradient threshold that keeps only the strongest digit edges; weaker settings leave
/// thick strokes whose skeletons carry spurs that hurt classification.
pub const MNIST_EDGE_THRESHOLD: f64 = 0.8;

/// One level of 5x5-field macs at stride 1 over the 16x24 digit frame (12 x 20 = 240
/// macs, Q = 16, K = 512), feeding a ten-class field. Small fields with a tight
/// active-input ceiling and a steep familiarity curve keep codes specific to local
/// stroke fragments instead of converging on a few broadly tuned units.
pub fn default_mnist_model() -> ModelConfig {
    let rf = 5;
    ModelConfig {
        input_dims: [MNIST_HEIGHT, MNIST_WIDTH],
        levels: vec![LevelConfig {
            grid: [MNIST_HEIGHT - rf + 1, MNIST_WIDTH - rf + 1],
            rf_shape: [rf, rf],
            rf_stride: [1, 1],
            pi_min: 2,
            pi_max: Some(5),
            persistence: 1,
            mac_cfg: MacTemplate {
                q: 16,
                k: 512,
                csa: CsaParams {
                    beta_max: 40.0,
                    g_exponent: 16.0,
                    ..CsaParams::default()
                },
            },
            horizontal: false,
            top_down: false,
            reconstruct: false,
        }],
        seed: 0,
        classes: Some(10),
    }
}

/// A smaller model for the store-then-replay check: 8x8 fields at stride 1 (17 x 9 =
/// 153 macs, Q = K = 8).
pub fn sanity_mnist_model() -> ModelConfig {
    let rf = 8;
    ModelConfig {
        input_dims: [MNIST_HEIGHT, MNIST_WIDTH],
        levels: vec![LevelConfig {
            grid: [MNIST_HEIGHT - rf + 1, MNIST_WIDTH - rf + 1],
            rf_shape: [rf, rf],
            rf_stride: [1, 1],
            pi_min: 2,
            pi_max: None,
            persistence: 1,
            mac_cfg: MacTemplate {
                q: 8,
                k: 8,
                csa: CsaParams {
                    beta_max: 40.0,
                    g_exponent: 2.0,
                    ..CsaParams::default()
                },
            },
            horizontal: false,
            top_down: false,
            reconstruct: false,
        }],
        seed: 0,
        classes: None,
    }
}

/// Per-class seeded split: `train` then `test` distinct indices for every label, drawn
/// without replacement from that label's items. Indices come back sorted by draw order
/// within class, classes interleaved by a seeded shuffle.
pub fn split_per_class(
    labels: &[u8],
    train: usize,
    test: usize,
    run_seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let classes = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for c in 0..classes {
        let mut pool: Vec<usize> = (0..labels.len())
            .filter(|&i| labels[i] as usize == c)
            .collect();
        if pool.len() < train + test {
            return Err(Error::Data(format!(
                "class {c} has {} items, {} requested",
                pool.len(),
                train + test
            )));
        }
        pool.shuffle(&mut seed::stream(run_seed, &[0x5911, c as u64]));
        train_idx.extend_from_slice(&pool[..train]);
        test_idx.extend_from_slice(&pool[train..train + test]);
    }
    train_idx.shuffle(&mut seed::stream(run_seed, &[0x5912]));
    Ok((train_idx, test_idx))
}

pub(crate) fn preprocess_items(
    set: &MnistSet,
    idx: &[usize],
    threshold: f64,
) -> Result<(Vec<BinaryFrame>, usize)> {
    let done: Vec<_> = idx
        .par_iter()
        .map(|&i| preprocess_mnist_with(&set.images[i], threshold))
        .collect::<Result<_>>()?;
    let empty = done.iter().filter(|p| p.empty).count();
    Ok((done.into_iter().map(|p| p.frame).collect(), empty))
}

pub(crate) fn load_mnist(cfg: &ExperimentConfig) -> Result<MnistSet> {
    let (images, labels) = cfg.mnist_paths()?;
    let set = MnistSet::load(images, labels)?;
    if set.is_empty() {
        return Err(Error::Data("MNIST set is empty".into()));
    }
    Ok(set)
}

/// Stores each training frame once and trains the class field on its top-level code.
pub(crate) fn train_model(
    model: &mut Model,
    frames: &[BinaryFrame],
    labels: &[usize],
) -> Result<()> {
    for (frame, &label) in frames.iter().zip(labels) {
        let trace = model.process_sequence(std::slice::from_ref(frame), Mode::Learning)?;
        let top = model.top_code_vector(&trace)?;
        if let Some(cf) = model.class_field_mut() {
            cf.train(&top.ones, label)?;
        }
    }
    Ok(())
}

/// Single learning pass with class-field supervision, then retrieval-mode
/// classification of the held-out items.
pub fn run_mnist(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let set = load_mnist(cfg)?;
    let model_cfg = cfg.resolve_model(default_mnist_model)?;
    let classes = model_cfg
        .classes
        .ok_or_else(|| Error::Config("the model needs a class field (`classes`)".into()))?;
    if let Some(&bad) = set.labels.iter().find(|&&l| l as usize >= classes) {
        return Err(Error::Data(format!(
            "label {bad} exceeds {classes} classes"
        )));
    }
    let mut model = Model::build(model_cfg.clone())?;
    let (train_idx, test_idx) = split_per_class(
        &set.labels,
        cfg.train_per_class,
        cfg.test_per_class,
        cfg.seed,
    )?;

    let mut report = MetricsReport::new(cfg);
    report.model_config = Some(model_cfg);

    let start = Instant::now();
    let (train_frames, empty_train) = preprocess_items(&set, &train_idx, cfg.edge_threshold)?;
    let train_labels: Vec<usize> = train_idx.iter().map(|&i| set.labels[i] as usize).collect();
    train_model(&mut model, &train_frames, &train_labels)?;
    report.train_seconds = start.elapsed().as_secs_f64();
    report.train_presentations = train_frames.len();

    let start = Instant::now();
    let (test_frames, empty_test) = preprocess_items(&set, &test_idx, cfg.edge_threshold)?;
    let cf = model.class_field().expect("class field configured");
    let rows: Vec<Prediction> = test_idx
        .par_iter()
        .zip(&test_frames)
        .map(|(&i, frame)| {
            let trace = model.recall_sequence(std::slice::from_ref(frame))?;
            let top = model.top_code_vector(&trace)?;
            Ok(Prediction {
                item: i,
                actor: None,
                label: set.labels[i] as usize,
                predicted: cf.classify(&top.ones)?.label,
            })
        })
        .collect::<Result<_>>()?;
    report.test_seconds = start.elapsed().as_secs_f64();

    report.empty_inputs = empty_train + empty_test;
    report.set_accuracy(&rows, classes);
    report.model_stats = Some(model.stats());
    let mut out = RunOutput::new(report, predictions_csv(&rows));
    out.model = Some(model);
    Ok(out)
}
