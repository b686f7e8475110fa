use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::SnippetVector;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearHyperParams {
    pub epochs: usize,
    /// Step size at update `t` is `step / sqrt(t)`.
    pub step: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for LinearHyperParams {
    fn default() -> Self {
        Self {
            epochs: 50,
            step: 0.1,
            lambda: 1e-4,
            seed: 0,
        }
    }
}

/// One-vs-rest linear classifiers with hinge loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub dim: usize,
    pub labels: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn scores(&self, ones: &[u32]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| b + ones.iter().map(|&i| w[i as usize]).sum::<f64>())
            .collect()
    }

    /// Label with the largest decision value; ties go to the smaller label.
    pub fn predict(&self, ones: &[u32]) -> usize {
        let scores = self.scores(ones);
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        self.labels[best]
    }
}

/// Trains one hinge-loss classifier per label with stochastic subgradient descent on the
/// regularized objective `lambda/2 |w|^2 + mean(hinge)`. Every epoch visits the samples in
/// an order drawn from a stream keyed by `(seed, class, epoch)`.
pub fn train_linear(vectors: &[SnippetVector], hp: &LinearHyperParams) -> Result<LinearModel> {
    let dim = vectors.first().map_or(0, |v| v.bits.len);
    if vectors.iter().any(|v| v.bits.len != dim) {
        return Err(Error::Shape("training vectors differ in length".into()));
    }
    let mut labels: Vec<usize> = vectors.iter().map(|v| v.label).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() < 2 {
        return Err(Error::Data(format!(
            "linear training needs at least two classes, got {}",
            labels.len()
        )));
    }

    let mut weights = Vec::with_capacity(labels.len());
    let mut bias = Vec::with_capacity(labels.len());
    for (ci, &label) in labels.iter().enumerate() {
        let (w, b) = train_binary(vectors, label, dim, hp, ci as u64);
        weights.push(w);
        bias.push(b);
    }
    Ok(LinearModel {
        dim,
        labels,
        weights,
        bias,
    })
}

fn train_binary(
    vectors: &[SnippetVector],
    positive: usize,
    dim: usize,
    hp: &LinearHyperParams,
    class_key: u64,
) -> (Vec<f64>, f64) {
    // w = scale * v keeps the shrinkage step O(1) for sparse binary inputs
    let mut v = vec![0.0f64; dim];
    let mut scale = 1.0f64;
    let mut b = 0.0f64;
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    let mut t = 0u64;
    for epoch in 0..hp.epochs {
        let mut rng = seed::stream(hp.seed, &[class_key, epoch as u64]);
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = hp.step / (t as f64).sqrt();
            let x = &vectors[i].bits.ones;
            let y = if vectors[i].label == positive {
                1.0
            } else {
                -1.0
            };
            let margin = y * (scale * x.iter().map(|&j| v[j as usize]).sum::<f64>() + b);

            scale *= 1.0 - eta * hp.lambda;
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
            if margin < 1.0 {
                let step = eta * y / scale;
                for &j in x {
                    v[j as usize] += step;
                }
                b += eta * y;
            }
        }
    }
    v.iter_mut().for_each(|w| *w *= scale);
    (v, b)
}
