//! Corpus data model, ingestion, validation and noise filtering.

mod filter;
mod io;
mod model;
mod stats;

pub use filter::{
    apply_noise_filter, Removal, RemovalReason, MIN_FELLOW_CITATIONS, MIN_YEARS_TO_ELECTION,
};
pub use io::{
    load_corpus, load_corpus_dir, save_corpus_dir, spread_total, write_publications, write_scholars,
};
pub use model::{
    is_external, Corpus, Gender, Publication, Scholar, Society, Year, EXTERNAL_PREFIX,
};
pub use stats::{corpus_stats, GroupStats, SocietyRow, StatsTable};

#[cfg(test)]
pub(crate) use model::fixtures;
