//! Statistical analyses over corpora and trained models. Each result type
//! renders a CSV table and serializes to a JSON summary.

mod accumulation;
mod alpha;
mod attention;
mod evolution;
mod quartiles;
mod stats;
mod trajectory;

pub use accumulation::{accumulation_distribution, AccumulationReport, GenderDistribution};
pub use alpha::{
    alpha_change, alpha_pair, AlphaChange, AlphaChangeReport, AlphaSummary, MIN_WINDOW,
};
pub use attention::{attention_fragments, fragment_slot, FragmentTable};
pub use evolution::{
    coauthor_evolution, cohort_curves, CohortComparison, CohortSpec, EvolutionCurve, EvolutionPoint,
};
pub use quartiles::{field_quartile_table, QuartileCell, QuartileTable, BUCKET_YEARS, MIN_BUCKET};
pub use stats::{
    mann_whitney, mann_whitney_exact, mann_whitney_normal, mean, median, quantile, std_dev,
    MannWhitney, EXACT_LIMIT,
};
pub use trajectory::{
    cumulative_publications, gender_trajectories, normalized_trajectory, GenderReport,
    TrajectoryPoint, TrajectoryStats,
};
