//! Temporal entity-aspect recommendation over query logs.
//!
//! The pipeline mines aspect candidates for an entity from a co-clicked
//! query/URL graph, computes time-series signals that describe where the
//! entity sits relative to a triggering event, and ranks the aspects with an
//! ensemble of event type and time specific pairwise models.
//!
//! Numeric kernels are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64` for everyday use.

pub mod aspects;
pub mod clickgraph;
pub mod error;
pub mod evalsynth;
pub mod eventclf;
pub mod features;
pub mod logstore;
pub mod pipeline;
pub mod ranker;
pub mod scalar;
pub mod signals;
pub mod standardize;
pub mod text;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type TimeSeries = logstore::TimeSeries<f64>;
pub type ClickGraph = clickgraph::ClickGraph<f64>;
pub type EmbeddingTable = aspects::EmbeddingTable<f64>;
pub type SignalVector = signals::SignalVector<f64>;
pub type MixtureModel = eventclf::MixtureModel<f64>;
pub type AspectFeatureVector = features::AspectFeatureVector<f64>;
pub type ModelSet = ranker::ModelSet<f64>;
