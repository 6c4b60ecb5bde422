//! Pairwise ranking of entity aspects: six time/type specific linear models
//! combined by the entity's time/type distribution, plus popularity baselines.

mod baselines;
mod list;
mod model;

pub use baselines::{baseline_lnq, baseline_mle, baseline_mle_w, baseline_pnq, baseline_rwr};
pub use list::{load_runs, run_entries, runs_from_tsv, runs_to_tsv, RankedList, RunEntry};
pub use model::{
    ensemble_score, preferences_from_rows, rank, train_ensemble, train_single, DistributionMap, ModelSet,
    PairwisePreference, RankParams, SingleModel, RANK_MODEL_VERSION,
};
