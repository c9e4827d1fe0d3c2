//! Closed-form layer: Bessel functions, exact ring correlations and perturbative predictions.

pub mod bessel;
pub mod chain;
pub mod predict;

pub use bessel::{bessel_i, bessel_i_scaled, bessel_i_scaled_orders, bessel_ratio_1_0};
pub use chain::{
    correlation_exact, correlation_length, coupling_for_metric, finite_size_metric, finite_size_metric_with,
    ChainSpec, FiniteSizeReport, RingCorrelator, LONG_RANGE_THRESHOLD,
};
pub use predict::{kt_predictions, predict_quadratures_and_qfi, KtPrediction, KtRegime, QuadraturePrediction};
