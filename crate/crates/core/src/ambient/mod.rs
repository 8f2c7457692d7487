//! Ambient metrics, geodesic-sphere energetics, scaling flows and the
//! monotonicity-type inequalities.

pub mod metric;
pub mod scaling;
pub mod simon;
pub mod sweep;

pub use metric::{AmbientMetric, MetricJet, Riemann3};
pub use scaling::{adjust_area, estimate_lambda_scaling, scaling_curvature_delta, scaling_flow, AreaAdjustment, ScalingMultiplier};
pub use simon::{simon_checks, SimonReport, SimonRow};
pub use sweep::{radius_window, sphere_energy_sweep, SweepFit, SweepRow};
