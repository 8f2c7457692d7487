//! Test surfaces: analytic conformal charts and radial graphs over the sphere.

pub mod harmonics;
pub mod immersion;
pub mod radial;

pub use harmonics::{harmonic_count, harmonic_degree_order, harmonic_index, HarmonicBasis};
pub use immersion::{
    catenoid, cylinder, plane, sphere_stereo, willmore_torus, AnalyticImmersion, Jet, SurfaceKind,
};
pub use radial::{GridPoint, RadialShape, SphereGrid, SurfaceSample};

/// Radial graph over a `n_theta × n_phi` grid; see [`RadialShape`].
pub fn radial_graph(
    center: crate::chart::Vec3,
    radius: f64,
    coeffs: Vec<f64>,
    n_theta: usize,
    n_phi: usize,
) -> crate::error::Result<(RadialShape, SphereGrid)> {
    let shape = RadialShape {
        center,
        radius,
        coeffs,
    };
    shape.validate()?;
    let grid = SphereGrid::new(n_theta, n_phi, shape.lmax())?;
    shape.sample(&grid)?;
    Ok((shape, grid))
}
