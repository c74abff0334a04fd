//! Emotional retrofitting of pre-trained word embeddings.
//!
//! The pipeline pulls words toward the anchor vectors of the emotions a
//! lexicon associates them with, pushes them away from the opposite emotions,
//! and keeps distances inside each word's original epsilon-ball neighborhood
//! as stable as possible. The [`eval`] module scores spaces before and after
//! with in-category and opposite-category similarity over an emotion
//! taxonomy.

pub mod embedding_io;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod lexicon;
pub mod objective;
pub mod space;
pub mod trainer;

pub use embedding_io::{load_embeddings, save_embeddings, EmbeddingFormat, LoadOptions, LoadStats};
pub use error::{Error, Result};
pub use eval::{evaluate, EmotionTaxonomy, Evaluation, EvaluationReport, TaxonomyOptions};
pub use geometry::{
    cache_key, compute_neighborhoods, cosine_distance, cosine_similarity, load_neighborhood_cache,
    save_neighborhood_cache, NeighborScope, NeighborhoodGraph,
};
pub use lexicon::{
    build_constraints, parse_nrc_lexicon, ConstraintSet, Emotion, EmotionModel, LexiconEntries,
    Pair,
};
pub use objective::{
    gradient, nr_term, objective, pr_term, vsp_term, ObjectiveBreakdown, TermWeights,
};
pub use space::{Scalar, VectorSpace};
pub use trainer::{train, train_with, TrainingConfig, TrainingOutcome, UpdateMode, VspScope};
