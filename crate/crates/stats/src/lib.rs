//! Statistics for interpreting a multiverse of outcomes collectively.

pub mod density;
pub mod fit;
pub mod graph;
pub mod inference;
pub mod prune;
pub mod ratios;
pub mod sensitivity;
pub mod similar;
pub mod stacking;

pub use density::{
    aggregate_density, aggregate_density_on, aggregate_density_weighted, cdf_curve, density_grid, pdf_curve, point_density,
    point_density_on,
    silverman_bandwidth, DensityCurve, Kde, DEFAULT_GRID_SIZE,
};
pub use fit::{nrmse, quantile_sample};
pub use graph::{attach_sensitivity, build_decision_graph};
pub use inference::{null_intervals, percentile, NullInterval, NullReport, MIN_NULL_ESTIMATES};
pub use prune::{prune, Pruned};
pub use ratios::{option_ratios, DecisionRatios, OptionRatio};
pub use sensitivity::{
    f_sensitivity, group_estimates, ks_sensitivity, ks_statistic, sensitivity_report,
    SensitivityReport, SensitivityScore,
};
pub use similar::similar_universes;
pub use stacking::{stacking_objective, stacking_weights, Stacking};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("no universe has draws; use point estimates instead")]
    NoDraws,
    #[error("{0}")]
    InvalidInput(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("unknown universe {0}")]
    UnknownUniverse(usize),
    #[error("the selection is empty")]
    EmptySelection,
    #[error("every universe was removed by pruning at cutoff {cutoff}")]
    EmptyAfterPruning { cutoff: f64 },
}
