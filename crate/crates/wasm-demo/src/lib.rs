//! Browser bindings. Each exported function wraps a plain Rust function of the same
//! name prefixed with `run_` so the logic can be tested natively.

use macfield::experiments::{default_mnist_model, MNIST_EDGE_THRESHOLD};
use macfield::hierarchy::Model;
use macfield::mac::code_intersection;
use macfield::preprocess::{preprocess_mnist_with, BinaryFrame, GrayImage};
use macfield::{seed, Error, InputVector, Mac, MacConfig, Mode, OpCounts, Result};
use rand::seq::index::sample;
use wasm_bindgen::prelude::*;

pub const DIGIT_SIDE: usize = 28;
pub const SWEEP_STEPS: usize = 11;

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// One row per overlap step from 0% to 100%: `[overlap, mean G, mean intersection / Q]`.
pub fn run_familiarity_sweep(
    q: usize,
    k: usize,
    n_u: usize,
    active: usize,
    trials: usize,
    run_seed: u64,
) -> Result<Vec<[f64; 3]>> {
    if active == 0 || active > n_u || trials == 0 {
        return Err(Error::Config(format!(
            "need 1 <= active <= nU and trials >= 1 (active {active}, nU {n_u}, trials {trials})"
        )));
    }
    let mut mac = Mac::new(MacConfig::new(q, k, n_u))?;
    let mut rng = seed::stream(run_seed, &[0xde40]);
    let mut ops = OpCounts::default();
    let stored: Vec<u32> = sample(&mut rng, n_u, active)
        .iter()
        .map(|i| i as u32)
        .collect();
    let stored_input = InputVector::bottom_up(stored.clone());
    let (code, _) = mac.encode(&stored_input, Mode::Learning, &mut rng, &mut ops)?;
    mac.learn(&stored_input, &code)?;

    let others: Vec<u32> = (0..n_u as u32)
        .filter(|i| stored.binary_search(i).is_err())
        .collect();
    (0..SWEEP_STEPS)
        .map(|step| {
            let overlap = step as f64 / (SWEEP_STEPS - 1) as f64;
            let keep = (overlap * active as f64).round() as usize;
            let fill = (active - keep).min(others.len());
            let (mut g_sum, mut hit_sum) = (0.0, 0.0);
            for _ in 0..trials {
                let mut probe: Vec<u32> = sample(&mut rng, active, keep)
                    .iter()
                    .map(|i| stored[i])
                    .collect();
                probe.extend(
                    sample(&mut rng, others.len(), fill)
                        .iter()
                        .map(|i| others[i]),
                );
                let (probe_code, g) = mac.encode(
                    &InputVector::bottom_up(probe),
                    Mode::Learning,
                    &mut rng,
                    &mut ops,
                )?;
                g_sum += g;
                hit_sum += code_intersection(&code, &probe_code)? as f64 / q as f64;
            }
            let n = trials as f64;
            Ok([overlap, g_sum / n, hit_sum / n])
        })
        .collect()
}

/// Flattened rows of [`run_familiarity_sweep`].
#[wasm_bindgen]
pub fn familiarity_sweep(
    q: usize,
    k: usize,
    n_u: usize,
    active: usize,
    trials: usize,
    seed: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    let rows = run_familiarity_sweep(q, k, n_u, active, trials, seed as u64).map_err(js)?;
    Ok(rows.concat())
}

fn digit_image(pixels: &[u8]) -> Result<GrayImage> {
    GrayImage::new(DIGIT_SIDE, DIGIT_SIDE, pixels.to_vec())
}

/// 28x28 grayscale in, skeletonized and fitted frame out.
pub fn run_preprocess_digit(pixels: &[u8], edge_threshold: f64) -> Result<BinaryFrame> {
    Ok(preprocess_mnist_with(&digit_image(pixels)?, edge_threshold)?.frame)
}

/// Row-major 0/1 bytes of the 16x24 frame.
#[wasm_bindgen]
pub fn preprocess_digit(
    pixels: &[u8],
    edge_threshold: f64,
) -> std::result::Result<Vec<u8>, JsError> {
    let frame = run_preprocess_digit(pixels, edge_threshold).map_err(js)?;
    Ok(frame.bits.iter().map(|&b| b as u8).collect())
}

/// The digit model with its class field: drawings are taught one at a time with a
/// label and recalled by class score.
#[wasm_bindgen]
pub struct DigitField {
    model: Model,
    taught: usize,
}

impl DigitField {
    pub fn build(run_seed: u64) -> Result<Self> {
        let mut cfg = default_mnist_model();
        cfg.seed = run_seed;
        Ok(Self {
            model: Model::build(cfg)?,
            taught: 0,
        })
    }

    /// Stores one drawing; returns the number of macs that took part.
    pub fn teach_digit(&mut self, pixels: &[u8], label: usize) -> Result<usize> {
        let frame = run_preprocess_digit(pixels, MNIST_EDGE_THRESHOLD)?;
        let trace = self.model.process_sequence(&[frame], Mode::Learning)?;
        let top = self.model.top_code_vector(&trace)?;
        if let Some(cf) = self.model.class_field_mut() {
            cf.train(&top.ones, label)?;
        }
        self.taught += 1;
        Ok(trace.steps.first().map_or(0, |s| s.active.len()))
    }

    /// Per-class scores for one drawing; the predicted label is the first maximum.
    pub fn recall_digit(&self, pixels: &[u8]) -> Result<Vec<u32>> {
        let frame = run_preprocess_digit(pixels, MNIST_EDGE_THRESHOLD)?;
        let trace = self.model.recall_sequence(&[frame])?;
        let top = self.model.top_code_vector(&trace)?;
        let cf = self
            .model
            .class_field()
            .ok_or_else(|| Error::Config("model has no class field".into()))?;
        Ok(cf.classify(&top.ones)?.scores)
    }
}

#[wasm_bindgen]
impl DigitField {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> std::result::Result<DigitField, JsError> {
        Self::build(seed as u64).map_err(js)
    }

    pub fn teach(&mut self, pixels: &[u8], label: usize) -> std::result::Result<usize, JsError> {
        self.teach_digit(pixels, label).map_err(js)
    }

    pub fn recall(&self, pixels: &[u8]) -> std::result::Result<Vec<u32>, JsError> {
        self.recall_digit(pixels).map_err(js)
    }

    pub fn taught(&self) -> usize {
        self.taught
    }
}
