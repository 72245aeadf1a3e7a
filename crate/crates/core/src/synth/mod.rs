//! Seeded synthetic corpora and conversations drawn from per-type
//! two-covariance models.

mod conversation;
mod corpus;
mod rng;

pub use conversation::{generate_conversation, Conversation, ConversationSpec};
pub use corpus::{
    balance_by_type, generate_speakers, generate_training_corpus, CorpusSpec, SpeakerProfile, ThreeTypeParams,
    TypeParams,
};
pub use rng::SynthRng;
