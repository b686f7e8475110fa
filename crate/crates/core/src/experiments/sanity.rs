use std::time::Instant;

use rayon::prelude::*;

use super::mnist::{load_mnist, preprocess_items, sanity_mnist_model, split_per_class};
use super::synth::generate_synthetic;
use super::video::default_video_model;
use super::{ExperimentConfig, MetricsReport, RunOutput};
use crate::error::{Error, Result};
use crate::hierarchy::{recognition_match, Model, Trace};
use crate::mac::Mode;
use crate::preprocess::BinaryFrame;

/// Stores every training item once, then replays each in retrieval mode and compares
/// the replay trace with the trace recorded while storing. Uses MNIST when its paths
/// are configured and the synthetic sequences otherwise.
pub fn run_sanity(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let (items, labels, model_cfg, empty) = if cfg.mnist_images.is_some() {
        let set = load_mnist(cfg)?;
        let (train_idx, _) = split_per_class(&set.labels, cfg.train_per_class, 0, cfg.seed)?;
        let (frames, empty) = preprocess_items(&set, &train_idx, cfg.edge_threshold)?;
        let labels: Vec<usize> = train_idx.iter().map(|&i| set.labels[i] as usize).collect();
        let items: Vec<Vec<BinaryFrame>> = frames.into_iter().map(|f| vec![f]).collect();
        (items, labels, cfg.resolve_model(sanity_mnist_model)?, empty)
    } else {
        let snippets = generate_synthetic(&cfg.synth, cfg.seed)?;
        let labels: Vec<usize> = snippets.iter().map(|s| s.class_label).collect();
        let items = snippets.into_iter().map(|s| s.frames).collect();
        (items, labels, cfg.resolve_model(default_video_model)?, 0)
    };
    if items.is_empty() {
        return Err(Error::Data("no training items to replay".into()));
    }

    let mut model = Model::build(model_cfg.clone())?;
    let mut report = MetricsReport::new(cfg);
    report.model_config = Some(model_cfg);
    report.empty_inputs = empty;

    let start = Instant::now();
    let stored: Vec<Trace> = items
        .iter()
        .map(|frames| model.process_sequence(frames, Mode::Learning))
        .collect::<Result<_>>()?;
    report.train_seconds = start.elapsed().as_secs_f64();
    report.train_presentations = items.len();

    let start = Instant::now();
    let matches: Vec<(f64, bool)> = items
        .par_iter()
        .zip(&stored)
        .map(|(frames, learned)| {
            let replay = model.recall_sequence(frames)?;
            Ok((recognition_match(learned, &replay)?, replay == *learned))
        })
        .collect::<Result<_>>()?;
    report.test_seconds = start.elapsed().as_secs_f64();

    let n = matches.len() as f64;
    report.recognition_match = Some(matches.iter().map(|m| m.0).sum::<f64>() / n);
    report.exact_recall_rate = Some(matches.iter().filter(|m| m.1).count() as f64 / n);
    report.total = matches.len();
    report.correct = matches.iter().filter(|m| m.1).count();
    report.model_stats = Some(model.stats());

    let mut csv = String::from("item,label,match,exact\n");
    for (i, ((m, exact), label)) in matches.iter().zip(&labels).enumerate() {
        csv.push_str(&format!("{i},{label},{m:.6},{}\n", u8::from(*exact)));
    }
    let mut out = RunOutput::new(report, csv);
    out.model = Some(model);
    Ok(out)
}
