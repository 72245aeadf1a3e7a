//! RTTM interchange and diarization error rate.

mod assign;
mod der;
mod rttm;

pub use assign::max_weight_assignment;
pub use der::{compute_der, compute_der_breakdown, DerBreakdown, DerReport, ScoringOptions};
pub use rttm::{emit_rttm, parse_rttm, parse_rttm_reader, RttmDiagnostic, RttmParse, Turn};
