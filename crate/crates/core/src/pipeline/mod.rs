//! Per-recording diarization: subsegmentation, pairwise scoring,
//! agglomerative clustering and turn reconstruction.

mod ahc;
mod diarize;
mod score;
mod segment;
mod turns;

pub use ahc::{cluster_ahc, StopRule};
pub use diarize::{
    assign_segment_types, diarize, mixture_score_matrix, single_score_matrix, DiarizationHypothesis, DiarizationMode,
    DiarizeOptions, PriorSource, RecordingInput, TypeRegion, BASELINE_THRESHOLD, ORACLE_SPLIT_THRESHOLD,
};
pub use score::{score_all_pairs, ScoreMatrix, SCORE_FLOOR};
pub use segment::{uniform_segment, Segment, SegmentationConfig};
pub use turns::labels_to_turns;
