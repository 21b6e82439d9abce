//! The 36-slot factor vector: bibliometric counts, productivity exponents,
//! co-author-graph distance and circle, research field and employment.

pub mod employment;
pub mod field;
pub mod metrics;
pub mod series;
pub mod zscore;

pub use employment::{employment_embedding, EMPLOYMENT_DIM};
pub use field::{
    field_vector, tokenize, BagOfWordsClassifier, FieldClassifier, FieldVector, FIELD_COUNT,
    FIELD_NAMES,
};
pub use metrics::{
    cosine, fit_alpha, fit_alpha_cumulative, h_index, i10_index, scholarly_distance,
};
pub use series::*;
pub use zscore::{apply_zscore, fit_zscore, fit_zscore_vectors, NormalizationStats};
