//! File formats consumed and produced by the command-line tool.

mod embeddings;
mod model_file;
mod text;

pub use embeddings::{
    parse_embeddings_text, read_embeddings_binary, write_embeddings_binary, write_embeddings_text, EmbeddingRecord,
    EMBEDDING_BINARY_MAGIC,
};
pub use model_file::{
    load_model, load_plda, read_mixture, read_plda, save_mixture, save_plda, write_mixture, write_plda, ModelFile,
    FORMAT_VERSION, MIXTURE_MAGIC, PLDA_MAGIC,
};
pub use text::{
    parse_key_values, parse_posteriors, parse_sad, parse_training_labels, parse_type_regions, write_posteriors,
    write_sad, write_training_labels, write_type_regions, TrainingLabel,
};
