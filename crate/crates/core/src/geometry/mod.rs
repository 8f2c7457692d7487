//! Curvature on conformal charts and on surfaces in a Riemannian ambient.

pub mod bundle;

pub use bundle::{
    chart_willmore_energy, el_residual_flat, evaluate_bundle, identity_checks, identity_residuals, DerivativeSource,
    GeometryBundle, IdentityResiduals,
};

pub mod ambient_surface;

pub use ambient_surface::{
    energy_area, first_variation, mean_curvature_ambient, willmore_energy, SurfacePoint, VectorField,
};
