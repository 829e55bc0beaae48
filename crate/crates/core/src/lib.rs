//! Boundary-gap selection of synthetic training candidates.
//!
//! A candidate generator proposes labelled samples; this crate scores each
//! candidate by how close it sits to the decision boundary, how uncertain the
//! scoring model is there, whether it lies on the real-data support and how
//! much real data already covers its neighbourhood. Candidates are then picked
//! by a diversity-aware greedy routine that decides on its own how many to
//! keep, and each pick receives a soft label.
//!
//! The stages are exposed individually ([`score`], [`geometry`], [`alloc`],
//! [`select`], [`label`]) and wired together by [`pipeline::run_selection`].
//! [`bench`] hosts the two-moons experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alloc;
pub mod bench;
pub mod data;
pub mod error;
pub mod geometry;
pub mod label;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod score;
pub mod select;

pub use data::{CandidatePool, FeatureMatrix, LabeledDataset};
pub use error::{Error, Result};
pub use model::{LogisticModel, RffEncoder};
pub use pipeline::{run_selection, train_final, PipelineConfig, RunMetadata, SelectionReport};

