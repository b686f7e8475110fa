//! Supervised readouts over top-level codes.

mod class_field;
mod linear;
mod loo;
mod vectors;

pub use class_field::{ClassField, Classification};
pub use linear::{train_linear, LinearHyperParams, LinearModel};
pub use loo::{loo_evaluate, FoldResult, FoldSpec, LooPrediction, LooReport};
pub use vectors::{
    read_vectors_csv, read_vectors_jsonl, write_vectors_csv, write_vectors_jsonl, SnippetVector,
};
