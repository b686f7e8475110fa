use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::synth::generate_synthetic;
use super::{
    predictions_csv, ExperimentConfig, ExperimentKind, MetricsReport, Prediction, RunOutput,
};
use crate::classify::{loo_evaluate, SnippetVector};
use crate::error::{Error, Result};
use crate::hierarchy::{LevelConfig, MacTemplate, Model, ModelConfig};
use crate::mac::{CsaParams, Mode};
use crate::preprocess::{
    augment_dataset, preprocess_video, read_pbm, read_pgm, BoundingBox, Snippet, Variant,
    VIDEO_HEIGHT, VIDEO_WIDTH,
};
use crate::seed;

/// Sidecar describing one snippet directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnippetMeta {
    pub label: usize,
    pub actor: usize,
    /// Actor box `[x, y, 84, 120]` in raw-frame pixels; required for PGM frames.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BoundingBox>,
}

/// 12 x 18 L1 macs with 9x9 fields at stride 3 over the 42x60 frame, under 6 x 9 L2 macs
/// of Q = K = 6 (1,944 top-level units). Both levels are self-recurrent; L2 persists for
/// two frames.
pub fn default_video_model() -> ModelConfig {
    let mac = |q, k| MacTemplate {
        q,
        k,
        csa: CsaParams::default(),
    };
    ModelConfig {
        input_dims: [VIDEO_HEIGHT, VIDEO_WIDTH],
        levels: vec![
            LevelConfig {
                grid: [18, 12],
                rf_shape: [9, 9],
                rf_stride: [3, 3],
                pi_min: 2,
                pi_max: None,
                persistence: 1,
                mac_cfg: mac(6, 6),
                horizontal: true,
                top_down: false,
                reconstruct: false,
            },
            LevelConfig {
                grid: [9, 6],
                rf_shape: [4, 4],
                rf_stride: [2, 2],
                pi_min: 2,
                pi_max: Some(16),
                persistence: 2,
                mac_cfg: mac(6, 6),
                horizontal: true,
                top_down: false,
                reconstruct: false,
            },
        ],
        seed: 0,
        classes: None,
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<_>>()?;
    out.sort();
    Ok(out)
}

/// Reads every subdirectory of `dir` holding a `meta.json`. Binary PBM frames are used
/// as they are; grayscale PGM frames are cropped, thinned and decimated.
pub fn load_snippet_dir(dir: &Path, target_frames: usize) -> Result<Vec<Snippet>> {
    let mut out = Vec::new();
    for sub in sorted_entries(dir)?.into_iter().filter(|p| p.is_dir()) {
        let meta_path = sub.join("meta.json");
        if !meta_path.exists() {
            continue;
        }
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: SnippetMeta = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("{}: {e}", meta_path.display())))?;
        let files = sorted_entries(&sub)?;
        let with_ext = |ext: &str| -> Vec<&PathBuf> {
            files
                .iter()
                .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext)))
                .collect()
        };
        let (pbm, pgm) = (with_ext("pbm"), with_ext("pgm"));
        let frames = if !pbm.is_empty() {
            pbm.into_iter()
                .map(|p| read_pbm(p))
                .collect::<Result<Vec<_>>>()?
        } else if !pgm.is_empty() {
            let bbox = meta.bbox.ok_or_else(|| {
                Error::Data(format!("{}: PGM frames need a bbox", meta_path.display()))
            })?;
            let raw = pgm
                .into_iter()
                .map(|p| read_pgm(p))
                .collect::<Result<Vec<_>>>()?;
            preprocess_video(&raw, bbox, target_frames)?
        } else {
            return Err(Error::Data(format!("{}: no frames", sub.display())));
        };
        out.push(
            Snippet::new(frames, meta.label, meta.actor, Variant::Original)
                .map_err(|e| Error::Data(format!("{}: {e}", sub.display())))?,
        );
    }
    if out.is_empty() {
        return Err(Error::Data(format!("{}: no snippets found", dir.display())));
    }
    Ok(out)
}

struct Encoded {
    model: Model,
    vectors: Vec<SnippetVector>,
    report: MetricsReport,
    classes: usize,
}

/// Unsupervised single pass over the augmented snippets, then each snippet's final-frame
/// top-level code is read out in retrieval mode.
fn encode_snippets(cfg: &ExperimentConfig) -> Result<Encoded> {
    let originals = match (&cfg.video_dir, cfg.kind) {
        (Some(dir), ExperimentKind::Video) => load_snippet_dir(dir, cfg.target_frames)?,
        (None, ExperimentKind::Video) => {
            return Err(Error::Config("video runs need video_dir".into()))
        }
        _ => generate_synthetic(&cfg.synth, cfg.seed)?,
    };
    let model_cfg = cfg.resolve_model(default_video_model)?;
    let mut model = Model::build(model_cfg.clone())?;
    let mut report = MetricsReport::new(cfg);
    report.model_config = Some(model_cfg);

    let snippets = augment_dataset(
        &originals,
        cfg.variants,
        &mut seed::stream(cfg.seed, &[0xa06]),
    );
    let mut order: Vec<usize> = (0..snippets.len()).collect();
    order.shuffle(&mut seed::stream(cfg.seed, &[0xa07]));

    let start = Instant::now();
    for &i in &order {
        model.process_sequence(&snippets[i].frames, Mode::Learning)?;
    }
    report.train_seconds = start.elapsed().as_secs_f64();
    report.train_presentations = snippets.len();

    let start = Instant::now();
    let vectors: Vec<SnippetVector> = snippets
        .par_iter()
        .map(|s| {
            let trace = model.recall_sequence(&s.frames)?;
            Ok(SnippetVector {
                label: s.class_label,
                actor: s.actor_id,
                variant: s.variant,
                bits: model.top_code_vector(&trace)?,
            })
        })
        .collect::<Result<_>>()?;
    report.test_seconds = start.elapsed().as_secs_f64();
    report.snippet_vector_len = Some(model.top_units());
    report.model_stats = Some(model.stats());
    let classes = originals
        .iter()
        .map(|s| s.class_label + 1)
        .max()
        .unwrap_or(0);
    Ok(Encoded {
        model,
        vectors,
        report,
        classes,
    })
}

/// Encodes every snippet and scores the vectors leave-one-actor-out.
pub fn run_video(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let Encoded {
        model,
        vectors,
        mut report,
        classes,
    } = encode_snippets(cfg)?;
    let start = Instant::now();
    let loo = loo_evaluate(&vectors, &cfg.linear)?;
    report.test_seconds += start.elapsed().as_secs_f64();

    let rows: Vec<Prediction> = loo
        .predictions
        .iter()
        .map(|p| Prediction {
            item: p.index,
            actor: Some(p.actor),
            label: p.label,
            predicted: p.predicted,
        })
        .collect();
    report.set_accuracy(&rows, classes);
    report.folds = loo.folds.clone();

    let mut out = RunOutput::new(report, predictions_csv(&rows));
    out.folds = Some(loo.folds_csv());
    out.vectors = Some(vectors);
    out.model = Some(model);
    Ok(out)
}

/// Encodes every snippet and returns the vectors without classifying them.
pub fn export_vectors(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let enc = encode_snippets(cfg)?;
    let mut out = RunOutput::new(enc.report, predictions_csv(&[]));
    out.vectors = Some(enc.vectors);
    out.model = Some(enc.model);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_model_has_1944_top_units() {
        let model = Model::build(default_video_model()).unwrap();
        assert_eq!(model.level(1).mac_count(), 216);
        assert_eq!(model.top().mac_count(), 54);
        assert_eq!(model.top_units(), 1944);
    }

    #[test]
    fn sidecar_round_trip() {
        let meta: SnippetMeta =
            serde_json::from_str(r#"{"label":3,"actor":1,"bbox":[10,0,84,120]}"#).unwrap();
        assert_eq!(meta.bbox.unwrap().width, 84);
        assert!(serde_json::from_str::<SnippetMeta>(r#"{"label":3}"#).is_err());
    }
}
