use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use super::{train_linear, LinearHyperParams, SnippetVector};
use crate::error::{Error, Result};

/// Held-out actor plus the train/test split it induces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSpec {
    pub actor: usize,
    /// Indices of every other actor's vectors, originals and noisy variants.
    pub train: Vec<usize>,
    /// Indices of the held-out actor's originals.
    pub test: Vec<usize>,
}

impl FoldSpec {
    pub fn build(vectors: &[SnippetVector], actor: usize) -> Self {
        let train = (0..vectors.len())
            .filter(|&i| vectors[i].actor != actor)
            .collect();
        let test = (0..vectors.len())
            .filter(|&i| vectors[i].actor == actor && vectors[i].is_original())
            .collect();
        Self { actor, train, test }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub actor: usize,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LooPrediction {
    pub index: usize,
    pub actor: usize,
    pub label: usize,
    pub predicted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooReport {
    pub folds: Vec<FoldResult>,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    pub predictions: Vec<LooPrediction>,
}

/// Leave-one-actor-out evaluation: each actor's originals are classified by a model
/// trained on every other actor's vectors.
pub fn loo_evaluate(vectors: &[SnippetVector], hp: &LinearHyperParams) -> Result<LooReport> {
    let actors: BTreeSet<usize> = vectors.iter().map(|v| v.actor).collect();
    if actors.len() < 2 {
        return Err(Error::Data(format!(
            "leave-one-out needs at least two actors, got {}",
            actors.len()
        )));
    }
    let folds: Vec<FoldSpec> = actors
        .iter()
        .map(|&a| FoldSpec::build(vectors, a))
        .collect();
    if let Some(f) = folds.iter().find(|f| f.test.is_empty()) {
        return Err(Error::Data(format!(
            "actor {} has no original snippets",
            f.actor
        )));
    }

    let results: Vec<(FoldResult, Vec<LooPrediction>)> = folds
        .par_iter()
        .map(|fold| {
            let train: Vec<SnippetVector> =
                fold.train.iter().map(|&i| vectors[i].clone()).collect();
            let model = train_linear(&train, hp)?;
            let preds: Vec<LooPrediction> = fold
                .test
                .iter()
                .map(|&i| LooPrediction {
                    index: i,
                    actor: fold.actor,
                    label: vectors[i].label,
                    predicted: model.predict(&vectors[i].bits.ones),
                })
                .collect();
            let correct = preds.iter().filter(|p| p.label == p.predicted).count();
            let result = FoldResult {
                actor: fold.actor,
                correct,
                total: preds.len(),
                accuracy: correct as f64 / preds.len() as f64,
            };
            Ok((result, preds))
        })
        .collect::<Result<_>>()?;

    let mut report = LooReport {
        folds: Vec::new(),
        correct: 0,
        total: 0,
        accuracy: 0.0,
        predictions: Vec::new(),
    };
    for (fold, preds) in results {
        report.correct += fold.correct;
        report.total += fold.total;
        report.folds.push(fold);
        report.predictions.extend(preds);
    }
    report.accuracy = report.correct as f64 / report.total as f64;
    Ok(report)
}

impl LooReport {
    /// `actor,correct,total,accuracy` rows with a header.
    pub fn folds_csv(&self) -> String {
        let mut s = String::from("actor,correct,total,accuracy\n");
        for f in &self.folds {
            s.push_str(&format!(
                "{},{},{},{:.6}\n",
                f.actor, f.correct, f.total, f.accuracy
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::BinaryVector;
    use crate::preprocess::Variant;

    fn dataset(informative: bool) -> Vec<SnippetVector> {
        let mut out = Vec::new();
        for actor in 0..9 {
            for label in 0..10 {
                for variant in [Variant::Original, Variant::Noisy(1)] {
                    let ones = if informative {
                        vec![label as u32 * 3, label as u32 * 3 + 1]
                    } else {
                        vec![0, 1]
                    };
                    out.push(SnippetVector {
                        label,
                        actor,
                        variant,
                        bits: BinaryVector { len: 30, ones },
                    });
                }
            }
        }
        out
    }

    #[test]
    fn folds_cover_each_original_once() {
        let data = dataset(true);
        let report = loo_evaluate(&data, &LinearHyperParams::default()).unwrap();
        assert_eq!(report.total, 90);
        assert_eq!(report.folds.len(), 9);
        let mut seen: Vec<usize> = report.predictions.iter().map(|p| p.index).collect();
        seen.sort_unstable();
        let originals: Vec<usize> = (0..data.len()).filter(|&i| data[i].is_original()).collect();
        assert_eq!(seen, originals);
        for a in 0..9 {
            let f = FoldSpec::build(&data, a);
            assert!(f.train.iter().all(|&i| data[i].actor != a));
            assert!(f
                .test
                .iter()
                .all(|&i| data[i].actor == a && data[i].is_original()));
            assert_eq!(f.train.len(), 160);
        }
    }

    #[test]
    fn separable_vectors_score_perfectly() {
        let report = loo_evaluate(&dataset(true), &LinearHyperParams::default()).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert!(report
            .folds_csv()
            .starts_with("actor,correct,total,accuracy\n0,10,10,1.000000\n"));
    }

    #[test]
    fn uninformative_vectors_sit_at_chance() {
        let report = loo_evaluate(&dataset(false), &LinearHyperParams::default()).unwrap();
        // every test vector is identical, so each fold predicts one class for all ten
        assert!((report.accuracy - 0.1).abs() < 1e-12);
    }

    #[test]
    fn single_actor_is_an_error() {
        let data: Vec<_> = dataset(true).into_iter().filter(|v| v.actor == 0).collect();
        assert!(loo_evaluate(&data, &LinearHyperParams::default()).is_err());
    }
}
