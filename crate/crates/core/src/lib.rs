//! Numerical laboratory for Willmore surfaces: conservation laws on conformal
//! charts, potential reconstruction, ambient-metric energetics and
//! area-constrained minimization.

pub mod ambient;
pub mod analysis;
pub mod chart;
pub mod conservation;
pub mod error;
pub mod geometry;
pub mod minimize;
pub mod quadrature;
pub mod report;
pub mod surfaces;

pub use chart::{Axis, Chart, ChartGrad3, ChartScalar, ChartVec3, Field, Grad, Norms, Region, Vec3};
pub use error::{Error, Result};
