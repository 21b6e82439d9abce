//! Seeded synthetic corpora with planted structure, plus the ledger that
//! records the planted ground truth.

mod careers;
mod generator;

pub use careers::{planted_annual_counts, power_law_career};
pub use generator::{generate, AlphaMixture, GeneratorSpec, Ledger, LedgerGroup, LedgerScholar};
