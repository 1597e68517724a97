//! Evaluation metrics and Monte Carlo checks of the detection theory.

pub mod curves;
pub mod edge_stats;
pub mod metrics;
pub mod variance;

pub use curves::{
    error_curves, linear_fit, log_rate_fit, positive_region_radius, radius_stats, wilson,
    CurveConfig, CurvePoint, LinearFit, LogRateFit, RadiusSummary,
};
pub use edge_stats::{
    collect_edge_samples, convergence_criterion, criterion, dp_snr, estimate_edge_stats,
    EdgeSamples, EdgeStats, ScaleEstimator,
};
pub use metrics::{
    confusion, disk_area_fraction, evaluate, m_counts, m_precision, precision_recall, Confusion,
    EvalRow,
};
pub use variance::{variance_scaling_check, VarianceReport, VarianceRow};
