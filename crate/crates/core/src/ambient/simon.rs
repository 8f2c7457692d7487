//! Flat-space area, monotonicity and diameter checks for closed radial
//! surfaces, evaluated on balls around a point of the surface.

use std::f64::consts::PI;

use nalgebra::{Rotation3, Unit};
use serde::{Deserialize, Serialize};

use crate::ambient::metric::AmbientMetric;
use crate::chart::Vec3;
use crate::error::{Error, Result};
use crate::geometry::ambient_surface::mean_curvature_ambient;
use crate::surfaces::{HarmonicBasis, RadialShape, SphereGrid};

/// Slack below which the monotonicity inequality counts as violated; round
/// spheres attain equality.
pub const MONOTONICITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimonRow {
    pub r: f64,
    /// `|Σ ∩ B_r|`.
    pub cap_area: f64,
    /// `W(Σ ∩ B_r)`.
    pub cap_energy: f64,
    /// `∫_{Σ_r} H⟨x, ν⟩ dμ`.
    pub flux: f64,
    /// `r⁻²|Σ_r| + ⅛W(Σ_r) - ½r⁻²∫H⟨x,ν⟩ - π`.
    pub monotonicity_slack: f64,
    pub contained: bool,
    /// `r²W(Σ) - |Σ|` when `Σ ⊂ B_r`.
    pub area_slack: Option<f64>,
}

impl SimonRow {
    pub fn passed(&self) -> bool {
        self.monotonicity_slack >= -MONOTONICITY_TOLERANCE && self.area_slack.is_none_or(|s| s >= 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimonReport {
    pub rows: Vec<SimonRow>,
    pub area: f64,
    pub energy: f64,
    /// Largest chord between quadrature points.
    pub diameter: f64,
    /// `diam / (|Σ|^{1/2} W^{1/2} + |Σ|)`.
    pub diameter_ratio: f64,
}

impl SimonReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| !r.passed()).count()
    }
}

fn frame_to(direction: &Vec3) -> Rotation3<f64> {
    let ez = Vec3::z();
    Rotation3::rotation_between(&ez, direction)
        .unwrap_or_else(|| Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::x()), PI))
}

pub fn simon_checks(
    shape: &RadialShape,
    g: &AmbientMetric,
    center: &Vec3,
    radii: &[f64],
    resolution: (usize, usize),
) -> Result<SimonReport> {
    if !matches!(g, AmbientMetric::Euclidean) {
        return Err(Error::InvalidParameter("monotonicity checks need a flat ambient".into()));
    }
    shape.validate()?;
    let basis = HarmonicBasis::new(shape.lmax())?;
    let offset = center - shape.center;
    if offset.norm() == 0.0 {
        return Err(Error::InvalidParameter("center point coincides with the shape center".into()));
    }
    let omega0 = offset.normalize();
    if (shape.point(&basis, &omega0) - center).norm() > 1e-9 * shape.radius {
        return Err(Error::InvalidParameter("center point is not on the surface".into()));
    }
    let (n_theta, n_phi) = resolution;
    let full = SphereGrid::new(n_theta, n_phi, shape.lmax())?;
    let samples = shape.sample(&full)?;
    let pts = mean_curvature_ambient(&samples, g)?;
    let area: f64 = pts.iter().map(|p| p.dmu).sum();
    let energy: f64 = pts.iter().map(|p| 0.5 * p.h * p.h * p.dmu).sum();
    let mut diameter: f64 = 0.0;
    for (i, a) in samples.iter().enumerate() {
        for b in &samples[i + 1..] {
            diameter = diameter.max((a.f - b.f).norm());
        }
    }
    let reach = samples.iter().fold(0.0f64, |m, s| m.max((s.f - center).norm()));

    let rot = frame_to(&omega0);
    let dist = |theta: f64, phi: f64| {
        let w = rot * Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
        (shape.point(&basis, &w) - center).norm()
    };
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("ball radius {r}")));
        }
        let bounds: Vec<f64> = (0..n_phi)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / n_phi as f64;
                if dist(PI, phi) <= r {
                    return PI;
                }
                let (mut lo, mut hi) = (0.0, PI);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if dist(mid, phi) < r {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
        let cap = SphereGrid::cap(n_theta, &bounds, shape.lmax(), rot.matrix())?;
        let cs = shape.sample(&cap)?;
        let cp = mean_curvature_ambient(&cs, g)?;
        let mut cap_area = 0.0;
        let mut cap_energy = 0.0;
        let mut flux = 0.0;
        for (s, p) in cs.iter().zip(&cp) {
            cap_area += p.dmu;
            cap_energy += 0.5 * p.h * p.h * p.dmu;
            flux += p.h * (s.f - center).dot(&p.nu) * p.dmu;
        }
        let r2 = r * r;
        let monotonicity_slack = cap_area / r2 + cap_energy / 8.0 - 0.5 * flux / r2 - PI;
        let contained = reach <= r;
        rows.push(SimonRow {
            r,
            cap_area,
            cap_energy,
            flux,
            monotonicity_slack,
            contained,
            area_slack: contained.then(|| r2 * energy - area),
        });
    }
    Ok(SimonReport {
        rows,
        area,
        energy,
        diameter,
        diameter_ratio: diameter / ((area * energy).sqrt() + area),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_sphere_caps_match_closed_forms() {
        let shape = RadialShape::sphere(Vec3::new(0.0, 0.0, -1.0), 1.0, 0);
        let rep = simon_checks(&shape, &AmbientMetric::Euclidean, &Vec3::zeros(), &[0.5, 1.0, 2.5], (24, 48)).unwrap();
        let half = &rep.rows[0];
        // Archimedes: the cap within chord distance r has area πr²
        assert_relative_eq!(half.cap_area, PI * 0.25, max_relative = 1e-10);
        assert!(half.monotonicity_slack.abs() < 1e-9);
        assert!(!half.contained);
        let whole = &rep.rows[2];
        assert!(whole.contained);
        assert_relative_eq!(whole.area_slack.unwrap(), 6.25 * 8.0 * PI - 4.0 * PI, max_relative = 1e-10);
        assert_eq!(rep.violations(), 0);
        assert_relative_eq!(rep.diameter, 2.0, max_relative = 1e-3);
    }

    #[test]
    fn point_off_surface_is_rejected() {
        let shape = RadialShape::sphere(Vec3::zeros(), 1.0, 0);
        assert!(simon_checks(&shape, &AmbientMetric::Euclidean, &Vec3::new(0.5, 0.0, 0.0), &[0.5], (8, 16)).is_err());
    }
}
