use crate::bits::BitMatrix;
use crate::error::{Error, Result};

/// Localist readout: one binary unit per class with top-down weights from every
/// top-level unit of the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassField {
    weights: BitMatrix,
}

/// Outcome of a class-field readout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub label: usize,
    /// Per-class summed input.
    pub scores: Vec<u32>,
    /// Set when no class received any input; `label` is then 0.
    pub no_evidence: bool,
}

impl ClassField {
    pub fn new(classes: usize, units: usize) -> Self {
        Self {
            weights: BitMatrix::zeros(classes, units),
        }
    }

    pub(crate) fn from_weights(weights: BitMatrix) -> Self {
        Self { weights }
    }

    pub fn classes(&self) -> usize {
        self.weights.rows()
    }

    pub fn units(&self) -> usize {
        self.weights.cols()
    }

    pub fn weights(&self) -> &BitMatrix {
        &self.weights
    }

    fn check_units(&self, units: &[u32]) -> Result<()> {
        match units.iter().find(|&&u| u as usize >= self.units()) {
            Some(u) => Err(Error::Shape(format!(
                "unit {u} out of range for a {}-unit field",
                self.units()
            ))),
            None => Ok(()),
        }
    }

    /// Sets the weight from every active unit to the class unit; returns the count of
    /// weights that went from 0 to 1.
    pub fn train(&mut self, units: &[u32], label: usize) -> Result<usize> {
        if label >= self.classes() {
            return Err(Error::LabelOutOfRange {
                label,
                classes: self.classes(),
            });
        }
        self.check_units(units)?;
        Ok(units
            .iter()
            .filter(|&&u| self.weights.set(label, u as usize))
            .count())
    }

    /// The class with the largest summed input wins; ties go to the lowest label.
    pub fn classify(&self, units: &[u32]) -> Result<Classification> {
        self.check_units(units)?;
        let scores: Vec<u32> = (0..self.classes())
            .map(|c| {
                units
                    .iter()
                    .filter(|&&u| self.weights.get(c, u as usize))
                    .count() as u32
            })
            .collect();
        let mut label = 0;
        for (c, &s) in scores.iter().enumerate() {
            if s > scores[label] {
                label = c;
            }
        }
        let no_evidence = scores.iter().all(|&s| s == 0);
        Ok(Classification {
            label,
            scores,
            no_evidence,
        })
    }
}
