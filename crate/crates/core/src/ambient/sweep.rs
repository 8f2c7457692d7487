//! Willmore energy of small geodesic spheres.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ambient::metric::AmbientMetric;
use crate::chart::Vec3;
use crate::error::{Error, Result};
use crate::geometry::ambient_surface::willmore_energy;
use crate::surfaces::{RadialShape, SphereGrid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    pub w: f64,
    /// `W - 8π - c₂r²`.
    pub residual: f64,
}

/// Sweep table with the least-squares fit `W(r) ≈ 8π + c₂r²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFit {
    pub rows: Vec<SweepRow>,
    pub c2: f64,
    /// Root-mean-square of the fit residuals.
    pub fit_residual: f64,
}

impl SweepFit {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "W", "fit_residual"])?;
        for row in &self.rows {
            w.write_record([row.r.to_string(), row.w.to_string(), row.residual.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Energies of coordinate spheres `|x| = r`, which are geodesic spheres
/// in normal coordinates.
pub fn sphere_energy_sweep(g: &AmbientMetric, radii: &[f64], grid: &SphereGrid) -> Result<SweepFit> {
    if matches!(g, AmbientMetric::Conformal { .. }) {
        return Err(Error::InvalidParameter(
            "coordinate spheres of a conformal metric are not geodesic spheres".into(),
        ));
    }
    if radii.is_empty() {
        return Err(Error::InvalidParameter("empty radius list".into()));
    }
    let rho = g.validity_radius();
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("radius {r}")));
        }
        if r > rho {
            return Err(Error::OutsideValidity(format!("sphere radius {r} exceeds {rho:.4}")));
        }
        let samples = RadialShape::sphere(Vec3::zeros(), r, 0).sample(grid)?;
        rows.push(SweepRow {
            r,
            w: willmore_energy(&samples, g)?,
            residual: 0.0,
        });
    }
    let num: f64 = rows.iter().map(|x| (x.w - 8.0 * PI) * x.r * x.r).sum();
    let den: f64 = rows.iter().map(|x| x.r.powi(4)).sum();
    let c2 = num / den;
    let mut ss = 0.0;
    for row in &mut rows {
        row.residual = row.w - 8.0 * PI - c2 * row.r * row.r;
        ss += row.residual * row.residual;
    }
    Ok(SweepFit {
        fit_residual: (ss / rows.len() as f64).sqrt(),
        rows,
        c2,
    })
}

/// `n` equally spaced radii from `r0` to `r1`.
pub fn radius_window(r0: f64, r1: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![r0];
    }
    (0..n).map(|k| r0 + (r1 - r0) * k as f64 / (n - 1) as f64).collect()
}
