//! Fixtures shared by the kernel benchmarks.

use willmore_core::ambient::{AmbientMetric, Riemann3};
use willmore_core::surfaces::{harmonic_index, RadialShape, SphereGrid};
use willmore_core::Vec3;

/// Radial shape with a 10% degree-two perturbation, the usual minimizer start.
pub fn perturbed_sphere(lmax: usize, radius: f64) -> RadialShape {
    let mut s = RadialShape::sphere(Vec3::zeros(), radius, lmax);
    s.coeffs[harmonic_index(2, 0)] = 0.1;
    s
}

pub fn sphere_grid(lmax: usize) -> SphereGrid {
    SphereGrid::new(24, 48, lmax).expect("valid grid")
}

/// Normal-form metric of unit sectional curvature.
pub fn unit_curvature() -> AmbientMetric {
    AmbientMetric::normal_form(Riemann3::constant_curvature(1.0)).expect("symmetric tensor")
}
