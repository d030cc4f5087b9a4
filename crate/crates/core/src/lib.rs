//! Quality metrics for code embeddings and a recommender that picks the
//! pre-trained model best suited to a vulnerability-detection dataset.
//!
//! The pipeline: load embeddings ([`tensor_io`]), describe them with thirteen
//! features ([`metrics`]), score them with a linear probe ([`probe`]) on
//! stratified resamples ([`sampler`]), label the top-k models per sample
//! ([`dataset`]) and train classifiers on the result ([`learners`]).

pub mod dataset;
pub mod error;
pub mod fsutil;
pub mod importance;
pub mod learners;
pub mod metrics;
pub mod probe;
pub mod sampler;
pub mod scoring;
pub mod seed;
pub mod synthetic;
pub mod tensor_io;
pub mod config;

pub use error::{Error, Result};
pub use metrics::{MetricVector, FEATURE_NAMES, NUM_FEATURES};
pub use tensor_io::{EmbeddingMatrix, EmbeddingSet, LabelVector, Manifest};
