//! Sphere-like surfaces given as radial graphs over the unit sphere.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::chart::Vec3;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::surfaces::harmonics::{harmonic_count, HarmonicBasis};

/// Position and first/second parameter derivatives of a surface at one
/// quadrature point, with the parameter-space quadrature weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceSample {
    pub f: Vec3,
    pub f_u: Vec3,
    pub f_v: Vec3,
    pub f_uu: Vec3,
    pub f_uv: Vec3,
    pub f_vv: Vec3,
    pub weight: f64,
}

/// A quadrature point in `(θ, φ)` with the direction `ω(θ, φ)` and its
/// derivatives.
#[derive(Clone, Copy, Debug)]
pub struct GridPoint {
    pub theta: f64,
    pub phi: f64,
    pub weight: f64,
    pub omega: Vec3,
    pub omega_u: Vec3,
    pub omega_v: Vec3,
    pub omega_uu: Vec3,
    pub omega_uv: Vec3,
    pub omega_vv: Vec3,
}

impl GridPoint {
    fn new(theta: f64, phi: f64, weight: f64, rotation: &Matrix3<f64>) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let omega = Vec3::new(st * cp, st * sp, ct);
        Self {
            theta,
            phi,
            weight,
            omega: rotation * omega,
            omega_u: rotation * Vec3::new(ct * cp, ct * sp, -st),
            omega_v: rotation * Vec3::new(-st * sp, st * cp, 0.0),
            omega_uu: rotation * (-omega),
            omega_uv: rotation * Vec3::new(-ct * sp, ct * cp, 0.0),
            omega_vv: rotation * Vec3::new(-st * cp, -st * sp, 0.0),
        }
    }
}

/// Harmonic values and `(u, v, uu, uv, vv)` derivatives at one grid point.
type BasisRow = [f64; 6];

/// Product quadrature grid on the sphere with a cached harmonic table.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    points: Vec<GridPoint>,
    table: Arc<Vec<BasisRow>>,
    count: usize,
    lmax: usize,
    n_theta: usize,
    n_phi: usize,
}

impl SphereGrid {
    /// Gauss-Legendre in `cos θ` × uniform `φ`.
    pub fn new(n_theta: usize, n_phi: usize, lmax: usize) -> Result<Self> {
        Self::rotated(n_theta, n_phi, lmax, &Matrix3::identity())
    }

    /// Full grid whose pole `θ = 0` sits at `rotation · e_z`.
    pub fn rotated(n_theta: usize, n_phi: usize, lmax: usize, rotation: &Matrix3<f64>) -> Result<Self> {
        check_resolution(n_theta, n_phi)?;
        let (t, w) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut points = Vec::with_capacity(n_theta * n_phi);
        for (ti, wi) in t.iter().zip(&w) {
            // ascending cos θ, so θ runs from the south pole up
            let theta = ti.acos();
            let st = theta.sin();
            for k in 0..n_phi {
                let phi = k as f64 * dphi;
                points.push(GridPoint::new(theta, phi, wi * dphi / st, rotation));
            }
        }
        Self::with_points(points, lmax, n_theta, n_phi)
    }

    /// Polar cap `θ ≤ θ_b(φ)` around `rotation · e_z`; `bounds` holds one
    /// boundary angle per azimuth node.
    pub fn cap(n_theta: usize, bounds: &[f64], lmax: usize, rotation: &Matrix3<f64>) -> Result<Self> {
        let n_phi = bounds.len();
        check_resolution(n_theta, n_phi)?;
        let (t, w) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut points = Vec::with_capacity(n_theta * n_phi);
        for (ti, wi) in t.iter().zip(&w) {
            for (k, tb) in bounds.iter().enumerate() {
                if !(*tb > 0.0 && *tb <= PI) {
                    return Err(Error::InvalidParameter(format!("cap boundary angle {tb}")));
                }
                let theta = 0.5 * tb * (ti + 1.0);
                points.push(GridPoint::new(theta, k as f64 * dphi, 0.5 * tb * wi * dphi, rotation));
            }
        }
        Self::with_points(points, lmax, n_theta, n_phi)
    }

    fn with_points(points: Vec<GridPoint>, lmax: usize, n_theta: usize, n_phi: usize) -> Result<Self> {
        let basis = HarmonicBasis::new(lmax)?;
        let count = basis.len();
        let mut table = Vec::with_capacity(points.len() * count);
        for p in &points {
            for k in 0..count {
                let j = basis.jet(k, &p.omega);
                let d = |a: &Vec3| j.grad.dot(a);
                let dd = |a: &Vec3, b: &Vec3, ab: &Vec3| (a.transpose() * j.hess * b)[0] + j.grad.dot(ab);
                table.push([
                    j.value,
                    d(&p.omega_u),
                    d(&p.omega_v),
                    dd(&p.omega_u, &p.omega_u, &p.omega_uu),
                    dd(&p.omega_u, &p.omega_v, &p.omega_uv),
                    dd(&p.omega_v, &p.omega_v, &p.omega_vv),
                ]);
            }
        }
        Ok(Self {
            points,
            table: Arc::new(table),
            count,
            lmax,
            n_theta,
            n_phi,
        })
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.n_theta, self.n_phi)
    }

    fn row(&self, point: usize, k: usize) -> &BasisRow {
        &self.table[point * self.count + k]
    }
}

fn check_resolution(n_theta: usize, n_phi: usize) -> Result<()> {
    if n_theta < 4 || n_phi < 8 {
        return Err(Error::InvalidParameter(format!(
            "sphere grid {n_theta}×{n_phi} too coarse"
        )));
    }
    Ok(())
}

/// `F(ω) = center + R (1 + Σ a_lm Y_lm(ω)) ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialShape {
    pub center: Vec3,
    pub radius: f64,
    pub coeffs: Vec<f64>,
}

impl RadialShape {
    pub fn sphere(center: Vec3, radius: f64, lmax: usize) -> Self {
        Self {
            center,
            radius,
            coeffs: vec![0.0; harmonic_count(lmax)],
        }
    }

    pub fn lmax(&self) -> usize {
        let mut l = 0;
        while harmonic_count(l) < self.coeffs.len() {
            l += 1;
        }
        l
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidShape(format!("radius {}", self.radius)));
        }
        if harmonic_count(self.lmax()) != self.coeffs.len() {
            return Err(Error::InvalidShape(format!(
                "{} coefficients do not fill a degree range",
                self.coeffs.len()
            )));
        }
        if self.coeffs.iter().any(|c| !c.is_finite()) || !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("shape parameters".into()));
        }
        Ok(())
    }

    /// `ρ = 1 + Σ a Y` and its derivatives at grid point `p`.
    fn radius_jet(&self, grid: &SphereGrid, p: usize) -> BasisRow {
        let mut out = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for (k, a) in self.coeffs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            let row = grid.row(p, k);
            for (o, r) in out.iter_mut().zip(row) {
                *o += a * r;
            }
        }
        out
    }

    /// Radius function `1 + Σ a Y` at every grid point.
    pub fn radius_function(&self, grid: &SphereGrid) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        Ok((0..grid.points.len()).map(|p| self.radius_jet(grid, p)[0]).collect())
    }

    fn check_grid(&self, grid: &SphereGrid) -> Result<()> {
        self.validate()?;
        if self.coeffs.len() > grid.count {
            return Err(Error::InvalidParameter(format!(
                "shape degree {} exceeds grid degree {}",
                self.lmax(),
                grid.lmax
            )));
        }
        Ok(())
    }

    pub fn sample(&self, grid: &SphereGrid) -> Result<Vec<SurfaceSample>> {
        self.check_grid(grid)?;
        grid.points
            .iter()
            .enumerate()
            .map(|(i, p)| self.assemble(p, self.radius_jet(grid, i)))
            .collect()
    }

    /// Point of the surface in direction `omega` (unit vector).
    pub fn point(&self, basis: &HarmonicBasis, omega: &Vec3) -> Vec3 {
        let rho = 1.0
            + self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| a * basis.value(k, omega))
                .sum::<f64>();
        self.center + self.radius * rho * omega
    }

    /// Sample at an arbitrary `(θ, φ)` of the unrotated grid frame, with
    /// unit weight.
    pub fn sample_at(&self, basis: &HarmonicBasis, theta: f64, phi: f64) -> Result<SurfaceSample> {
        let p = GridPoint::new(theta, phi, 1.0, &Matrix3::identity());
        let mut jet = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for (k, a) in self.coeffs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            let j = basis.jet(k, &p.omega);
            let d = |u: &Vec3| j.grad.dot(u);
            let dd = |u: &Vec3, v: &Vec3, uv: &Vec3| (u.transpose() * j.hess * v)[0] + j.grad.dot(uv);
            let row = [
                j.value,
                d(&p.omega_u),
                d(&p.omega_v),
                dd(&p.omega_u, &p.omega_u, &p.omega_uu),
                dd(&p.omega_u, &p.omega_v, &p.omega_uv),
                dd(&p.omega_v, &p.omega_v, &p.omega_vv),
            ];
            for (o, r) in jet.iter_mut().zip(row) {
                *o += a * r;
            }
        }
        self.assemble(&p, jet)
    }

    fn assemble(&self, p: &GridPoint, jet: BasisRow) -> Result<SurfaceSample> {
        let r = self.radius;
        let [rho, ru, rv, ruu, ruv, rvv] = jet;
        if rho <= 0.0 {
            return Err(Error::InvalidShape(format!(
                "radius function {rho:.3e} ≤ 0 at θ = {:.4}, φ = {:.4}",
                p.theta, p.phi
            )));
        }
        Ok(SurfaceSample {
            f: self.center + r * rho * p.omega,
            f_u: r * (ru * p.omega + rho * p.omega_u),
            f_v: r * (rv * p.omega + rho * p.omega_v),
            f_uu: r * (ruu * p.omega + 2.0 * ru * p.omega_u + rho * p.omega_uu),
            f_uv: r * (ruv * p.omega + ru * p.omega_v + rv * p.omega_u + rho * p.omega_uv),
            f_vv: r * (rvv * p.omega + 2.0 * rv * p.omega_v + rho * p.omega_vv),
            weight: p.weight,
        })
    }

    /// Writes `(θ, φ, ρ)` rows, `ρ` being the physical radius `R (1 + Σ a Y)`.
    pub fn write_csv<W: Write>(&self, grid: &SphereGrid, out: W) -> Result<()> {
        let rho = self.radius_function(grid)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta", "phi", "rho"])?;
        for (p, r) in grid.points.iter().zip(rho) {
            w.write_record([
                p.theta.to_string(),
                p.phi.to_string(),
                (self.radius * r).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
