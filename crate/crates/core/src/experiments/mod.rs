//! Experiment protocols: digit classification, snippet classification with
//! leave-one-actor-out evaluation, store-and-replay sanity checks, the fixed-time
//! benchmark and the synthetic video generator.

mod fixed_time;
mod mnist;
mod sanity;
mod synth;
mod video;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{
    write_vectors_csv, write_vectors_jsonl, FoldResult, LinearHyperParams, SnippetVector,
};
use crate::error::{Error, Result};
use crate::format::save_model;
use crate::hierarchy::{Model, ModelConfig, ModelStats};

pub use fixed_time::{run_fixed_time, FixedTimeParams, OpCheckpoint};
pub use mnist::{
    default_mnist_model, run_mnist, sanity_mnist_model, split_per_class, MNIST_EDGE_THRESHOLD,
};
pub use sanity::run_sanity;
pub use synth::{generate_synthetic, write_synthetic, SynthParams};
pub use video::{default_video_model, export_vectors, load_snippet_dir, run_video, SnippetMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Mnist,
    Video,
    SyntheticSeq,
    FixedTime,
    Sanity,
}

/// Everything a run needs. Relative paths in a config file resolve against the file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub mnist_images: Option<PathBuf>,
    pub mnist_labels: Option<PathBuf>,
    /// Directory of snippet subdirectories, each with frames and a `meta.json` sidecar.
    pub video_dir: Option<PathBuf>,
    /// Model config file; `model` takes precedence when both are given.
    pub model_config: Option<PathBuf>,
    pub model: Option<ModelConfig>,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Noisy copies per original snippet.
    pub variants: usize,
    /// Decimation target for raw video frames.
    pub target_frames: usize,
    /// Relative gradient threshold for digit edge filtering.
    pub edge_threshold: f64,
    pub linear: LinearHyperParams,
    pub fixed_time: FixedTimeParams,
    pub synth: SynthParams,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Mnist,
            seed: 0,
            mnist_images: None,
            mnist_labels: None,
            video_dir: None,
            model_config: None,
            model: None,
            train_per_class: 200,
            test_per_class: 100,
            variants: 5,
            target_frames: 10,
            edge_threshold: mnist::MNIST_EDGE_THRESHOLD,
            linear: LinearHyperParams::default(),
            fixed_time: FixedTimeParams::default(),
            synth: SynthParams::default(),
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        let mut cfg = Self {
            kind,
            ..Self::default()
        };
        if kind == ExperimentKind::Sanity {
            cfg.train_per_class = 50;
        }
        cfg
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.mnist_images,
            &mut cfg.mnist_labels,
            &mut cfg.video_dir,
            &mut cfg.model_config,
            &mut cfg.out_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return Err(Error::Config("per-class counts must be at least 1".into()));
        }
        for p in [
            &self.mnist_images,
            &self.mnist_labels,
            &self.video_dir,
            &self.model_config,
        ]
        .into_iter()
        .flatten()
        {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// The model configuration for this run, with the run seed applied.
    pub fn resolve_model(&self, fallback: impl FnOnce() -> ModelConfig) -> Result<ModelConfig> {
        let mut model = match (&self.model, &self.model_config) {
            (Some(m), _) => m.clone(),
            (None, Some(path)) => ModelConfig::load(path)?,
            (None, None) => fallback(),
        };
        model.seed = self.seed;
        Ok(model)
    }

    fn mnist_paths(&self) -> Result<(&Path, &Path)> {
        match (&self.mnist_images, &self.mnist_labels) {
            (Some(i), Some(l)) => Ok((i, l)),
            _ => Err(Error::Config(
                "mnist_images and mnist_labels are required".into(),
            )),
        }
    }
}

/// Metrics plus enough configuration to re-run the experiment.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_config: Option<ModelConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub per_class_accuracy: Vec<Option<f64>>,
    pub correct: usize,
    pub total: usize,
    pub train_seconds: f64,
    pub test_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_stats: Option<ModelStats>,
    pub train_presentations: usize,
    /// Inputs that preprocessed to a blank frame.
    pub empty_inputs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recognition_match: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_recall_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snippet_vector_len: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub folds: Vec<FoldResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub op_series: Vec<OpCheckpoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ops_constant: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ratio: Option<f64>,
}

impl MetricsReport {
    pub(crate) fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            kind: cfg.kind,
            seed: cfg.seed,
            config: cfg.clone(),
            model_config: None,
            accuracy: None,
            per_class_accuracy: Vec::new(),
            correct: 0,
            total: 0,
            train_seconds: 0.0,
            test_seconds: 0.0,
            model_stats: None,
            train_presentations: 0,
            empty_inputs: 0,
            recognition_match: None,
            exact_recall_rate: None,
            snippet_vector_len: None,
            folds: Vec::new(),
            op_series: Vec::new(),
            ops_constant: None,
            wall_time_ratio: None,
        }
    }

    pub(crate) fn set_accuracy(&mut self, rows: &[Prediction], classes: usize) {
        self.total = rows.len();
        self.correct = rows.iter().filter(|p| p.label == p.predicted).count();
        self.accuracy = (self.total > 0).then(|| self.correct as f64 / self.total as f64);
        self.per_class_accuracy = (0..classes)
            .map(|c| {
                let of: Vec<_> = rows.iter().filter(|p| p.label == c).collect();
                (!of.is_empty()).then(|| {
                    of.iter().filter(|p| p.predicted == c).count() as f64 / of.len() as f64
                })
            })
            .collect();
    }
}

/// One classified test item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Prediction {
    pub item: usize,
    pub actor: Option<usize>,
    pub label: usize,
    pub predicted: usize,
}

pub fn predictions_csv(rows: &[Prediction]) -> String {
    let mut s = String::from("item,actor,label,predicted\n");
    for p in rows {
        let actor = p.actor.map(|a| a.to_string()).unwrap_or_default();
        s.push_str(&format!("{},{actor},{},{}\n", p.item, p.label, p.predicted));
    }
    s
}

/// Report, per-item log and artefacts of a finished run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    /// Contents of `predictions.csv`.
    pub predictions: String,
    pub model: Option<Model>,
    pub vectors: Option<Vec<SnippetVector>>,
    /// Contents of `folds.csv`.
    pub folds: Option<String>,
    /// Contents of `optime.csv`.
    pub optime: Option<String>,
}

impl RunOutput {
    pub(crate) fn new(report: MetricsReport, predictions: String) -> Self {
        Self {
            report,
            predictions,
            model: None,
            vectors: None,
            folds: None,
            optime: None,
        }
    }

    /// Writes `report.json`, `predictions.csv` and whichever of `model.sprs`,
    /// `vectors.csv`, `vectors.jsonl`, `folds.csv` and `optime.csv` the run produced.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, bytes: &[u8]| {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
        };
        let mut report = serde_json::to_string_pretty(&self.report)?;
        report.push('\n');
        put("report.json", report.as_bytes())?;
        put("predictions.csv", self.predictions.as_bytes())?;
        if let Some(model) = &self.model {
            save_model(model, &dir.join("model.sprs"))?;
        }
        if let Some(vectors) = &self.vectors {
            let mut buf = Vec::new();
            write_vectors_csv(vectors, &mut buf).map_err(|e| Error::io(dir, e))?;
            put("vectors.csv", &buf)?;
            buf.clear();
            write_vectors_jsonl(vectors, &mut buf).map_err(|e| Error::io(dir, e))?;
            put("vectors.jsonl", &buf)?;
        }
        if let Some(folds) = &self.folds {
            put("folds.csv", folds.as_bytes())?;
        }
        if let Some(optime) = &self.optime {
            put("optime.csv", optime.as_bytes())?;
        }
        Ok(())
    }
}

/// Dispatches on `cfg.kind`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::Mnist => run_mnist(cfg),
        ExperimentKind::Video | ExperimentKind::SyntheticSeq => run_video(cfg),
        ExperimentKind::FixedTime => run_fixed_time(cfg),
        ExperimentKind::Sanity => run_sanity(cfg),
    }
}
