//! Speaker-type mixture PLDA scoring for speaker diarization.
//!
//! The crate covers two-covariance PLDA training and scoring, a three-way
//! speaker-type mixture (male, female, child) whose weights come from
//! per-segment type priors, uniform segmentation with agglomerative
//! clustering, RTTM handling with diarization error rate, and a seeded
//! synthetic corpus for experiments.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64` unless suffixed with `F32`.

pub mod error;
pub mod experiment;
pub mod io;
pub mod metrics;
pub mod mixture;
pub mod pipeline;
pub mod plda;
pub mod prior;
mod scalar;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use mixture::{make_prior, same_speaker_weights, PriorKind, SpeakerTypePrior};
pub use prior::{segment_prior, FramePosteriorSequence};
pub use scalar::{log_sum_exp, Real};
pub use types::SpeakerType;

pub type PldaModel = plda::PldaModel<f64>;
pub type PldaModelF32 = plda::PldaModel<f32>;
pub type MixturePlda = mixture::MixturePlda<f64>;
pub type MixturePldaF32 = mixture::MixturePlda<f32>;
pub type Embedding = plda::Embedding<f64>;
pub type EmbeddingF32 = plda::Embedding<f32>;
pub type Projected = plda::Projected<f64>;
pub type LabeledEmbeddingSet = plda::LabeledEmbeddingSet<f64>;
pub type TrainedPlda = plda::TrainedPlda<f64>;
pub type ScoreMatrix = pipeline::ScoreMatrix<f64>;
