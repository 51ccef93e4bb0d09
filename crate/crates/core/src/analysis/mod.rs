//! Anytime performance measures over recorded trajectories.
//!
//! A run succeeds at quality level `alpha` and budget `T` when some incumbent
//! found by `T` is at most `(1 + alpha)` times the reference length.

mod estimators;
mod quantiles;
mod registry;
mod tables;
mod wilcoxon;

pub use estimators::{
    aggregate_set_probability, estimate_success_probability, first_hitting_time, gap_at,
    max_first_hitting_time, par_score, quality_threshold, success_indicator, MaxHittingTime,
};
pub use quantiles::{quantile_curves, quantile_sorted, QuantileCurve};
pub use registry::{reference_optimum, RefEntry, RefSource, ReferenceRegistry};
pub use tables::{
    analyze, log_time_grid, success_curve, write_csvs, AnalysisConfig, AnalysisReport, CurveSet,
    HittingRow, SuccessRow, DEFAULT_ALPHAS,
};
pub use wilcoxon::{
    significance_matrix, wilcoxon_signed_rank, wilcoxon_with_method, Alternative, Method,
    WilcoxonResult, EXACT_MAX_PAIRS,
};
