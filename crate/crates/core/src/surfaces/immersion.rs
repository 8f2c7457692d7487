//! Closed-form conformal test immersions.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::chart::{Axis, Chart, Vec3};
use crate::error::{Error, Result};

/// Value and first two partial derivatives of an immersion at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub phi: Vec3,
    pub phi_x: Vec3,
    pub phi_y: Vec3,
    pub phi_xx: Vec3,
    pub phi_xy: Vec3,
    pub phi_yy: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceKind {
    Sphere { radius: f64 },
    Cylinder,
    Catenoid,
    Plane,
    WillmoreTorus,
    /// `(a·x, y, 0)`: conformal only for `a = 1`; a negative control.
    StretchedPlane { factor: f64 },
}

/// A conformal immersion `Φ: chart → ℝ³` with analytic derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticImmersion {
    kind: SurfaceKind,
}

/// Stereographic chart of the round sphere of radius `radius`.
pub fn sphere_stereo(radius: f64) -> Result<AnalyticImmersion> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!("sphere radius {radius}")));
    }
    Ok(AnalyticImmersion {
        kind: SurfaceKind::Sphere { radius },
    })
}

pub fn cylinder() -> AnalyticImmersion {
    AnalyticImmersion {
        kind: SurfaceKind::Cylinder,
    }
}

pub fn catenoid() -> AnalyticImmersion {
    AnalyticImmersion {
        kind: SurfaceKind::Catenoid,
    }
}

pub fn plane() -> AnalyticImmersion {
    AnalyticImmersion {
        kind: SurfaceKind::Plane,
    }
}

/// Torus of revolution with radii ratio √2 in isothermal coordinates.
pub fn willmore_torus() -> AnalyticImmersion {
    AnalyticImmersion {
        kind: SurfaceKind::WillmoreTorus,
    }
}

impl AnalyticImmersion {
    pub fn from_kind(kind: SurfaceKind) -> Result<Self> {
        match kind {
            SurfaceKind::Sphere { radius } => sphere_stereo(radius),
            other => Ok(Self { kind: other }),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "sphere" => sphere_stereo(1.0),
            "cylinder" => Ok(cylinder()),
            "catenoid" => Ok(catenoid()),
            "plane" => Ok(plane()),
            "torus" | "willmore_torus" => Ok(willmore_torus()),
            other => Err(Error::InvalidParameter(format!("unknown surface '{other}'"))),
        }
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            SurfaceKind::Sphere { .. } => "sphere",
            SurfaceKind::Cylinder => "cylinder",
            SurfaceKind::Catenoid => "catenoid",
            SurfaceKind::Plane => "plane",
            SurfaceKind::WillmoreTorus => "torus",
            SurfaceKind::StretchedPlane { .. } => "stretched_plane",
        }
    }

    /// Whether the surface solves the Willmore equation.
    pub fn is_willmore(&self) -> bool {
        !matches!(self.kind, SurfaceKind::Cylinder)
    }

    /// Natural chart: periodic along the closed directions, `[-π, π]` there.
    pub fn default_chart(&self, n: usize) -> Result<Chart> {
        match self.kind {
            SurfaceKind::Sphere { .. } => Chart::new(n, 1.5),
            SurfaceKind::Plane | SurfaceKind::StretchedPlane { .. } => Chart::new(n, 1.0),
            SurfaceKind::Cylinder | SurfaceKind::Catenoid => {
                Chart::with_periodicity(n, PI, [true, false])
            }
            SurfaceKind::WillmoreTorus => Chart::with_periodicity(n, PI, [true, true]),
        }
    }

    /// Bounded, simply connected chart suitable for line integration.
    pub fn patch_chart(&self, n: usize) -> Result<Chart> {
        match self.kind {
            SurfaceKind::Sphere { .. } => Chart::new(n, 1.5),
            SurfaceKind::Plane | SurfaceKind::StretchedPlane { .. } => Chart::new(n, 1.0),
            SurfaceKind::Cylinder | SurfaceKind::Catenoid => Chart::new(n, 1.5),
            SurfaceKind::WillmoreTorus => Chart::new(n, 2.0),
        }
    }

    pub fn jet(&self, x: f64, y: f64) -> Jet {
        match self.kind {
            SurfaceKind::Sphere { radius } => sphere_jet(radius, x, y),
            SurfaceKind::Cylinder => {
                let (s, c) = x.sin_cos();
                Jet {
                    phi: Vec3::new(c, s, y),
                    phi_x: Vec3::new(-s, c, 0.0),
                    phi_y: Vec3::new(0.0, 0.0, 1.0),
                    phi_xx: Vec3::new(-c, -s, 0.0),
                    phi_xy: Vec3::zeros(),
                    phi_yy: Vec3::zeros(),
                }
            }
            SurfaceKind::Catenoid => {
                let (s, c) = x.sin_cos();
                let (ch, sh) = (y.cosh(), y.sinh());
                Jet {
                    phi: Vec3::new(ch * c, ch * s, y),
                    phi_x: Vec3::new(-ch * s, ch * c, 0.0),
                    phi_y: Vec3::new(sh * c, sh * s, 1.0),
                    phi_xx: Vec3::new(-ch * c, -ch * s, 0.0),
                    phi_xy: Vec3::new(-sh * s, sh * c, 0.0),
                    phi_yy: Vec3::new(ch * c, ch * s, 0.0),
                }
            }
            SurfaceKind::Plane => Jet {
                phi: Vec3::new(x, y, 0.0),
                phi_x: Vec3::new(1.0, 0.0, 0.0),
                phi_y: Vec3::new(0.0, 1.0, 0.0),
                phi_xx: Vec3::zeros(),
                phi_xy: Vec3::zeros(),
                phi_yy: Vec3::zeros(),
            },
            SurfaceKind::WillmoreTorus => torus_jet(x, y),
            SurfaceKind::StretchedPlane { factor } => Jet {
                phi: Vec3::new(factor * x, y, 0.0),
                phi_x: Vec3::new(factor, 0.0, 0.0),
                phi_y: Vec3::new(0.0, 1.0, 0.0),
                phi_xx: Vec3::zeros(),
                phi_xy: Vec3::zeros(),
                phi_yy: Vec3::zeros(),
            },
        }
    }

    /// Analytic conformal factor `λ` with `|Φ_x| = e^λ`.
    pub fn lambda(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            SurfaceKind::Sphere { radius } => (2.0 * radius / (1.0 + x * x + y * y)).ln(),
            SurfaceKind::Cylinder | SurfaceKind::Plane => 0.0,
            SurfaceKind::Catenoid => y.cosh().ln(),
            SurfaceKind::WillmoreTorus => (SQRT_2 + torus_u(x).cos()).ln(),
            SurfaceKind::StretchedPlane { .. } => 0.0,
        }
    }

    /// Largest relative conformality defect over all chart nodes:
    /// `|⟨Φ_x, Φ_y⟩| e^{-2λ}` and `||Φ_x| - e^λ| e^{-λ}` (same for `Φ_y`).
    pub fn conformality_defect(&self, chart: &Chart) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..chart.n() {
            let y = chart.coord(Axis::Y, j);
            for i in 0..chart.n() {
                let x = chart.coord(Axis::X, i);
                let jet = self.jet(x, y);
                let el = self.lambda(x, y).exp();
                let d = (jet.phi_x.dot(&jet.phi_y).abs() / (el * el))
                    .max((jet.phi_x.norm() - el).abs() / el)
                    .max((jet.phi_y.norm() - el).abs() / el);
                worst = worst.max(d);
            }
        }
        worst
    }
}

fn sphere_jet(r: f64, x: f64, y: f64) -> Jet {
    let q = 1.0 / (1.0 + x * x + y * y);
    let (qx, qy) = (-2.0 * x * q * q, -2.0 * y * q * q);
    let q3 = q * q * q;
    let qxx = -2.0 * q * q + 8.0 * x * x * q3;
    let qyy = -2.0 * q * q + 8.0 * y * y * q3;
    let qxy = 8.0 * x * y * q3;
    Jet {
        phi: r * Vec3::new(2.0 * x * q, 2.0 * y * q, 1.0 - 2.0 * q),
        phi_x: r * Vec3::new(2.0 * q + 2.0 * x * qx, 2.0 * y * qx, -2.0 * qx),
        phi_y: r * Vec3::new(2.0 * x * qy, 2.0 * q + 2.0 * y * qy, -2.0 * qy),
        phi_xx: r * Vec3::new(4.0 * qx + 2.0 * x * qxx, 2.0 * y * qxx, -2.0 * qxx),
        phi_xy: r * Vec3::new(
            2.0 * qy + 2.0 * x * qxy,
            2.0 * qx + 2.0 * y * qxy,
            -2.0 * qxy,
        ),
        phi_yy: r * Vec3::new(2.0 * x * qyy, 4.0 * qy + 2.0 * y * qyy, -2.0 * qyy),
    }
}

/// Isothermal coordinate of the √2 torus as a function of the meridian angle.
pub fn torus_s(u: f64) -> f64 {
    2.0 * ((SQRT_2 - 1.0) * (0.5 * u).tan()).atan()
}

/// Inverse of [`torus_s`] by safeguarded Newton iteration on `(-π, π)`.
pub fn torus_u(s: f64) -> f64 {
    // reduce to the principal period; ±π are fixed points of the map
    let s = (s + PI).rem_euclid(2.0 * PI) - PI;
    if s.abs() >= PI - 1e-15 {
        return s;
    }
    let (mut lo, mut hi) = (-PI, PI);
    let mut u = s;
    for _ in 0..200 {
        let f = torus_s(u) - s;
        if f > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        // ds/du = 1 / (√2 + cos u)
        let step = f * (SQRT_2 + u.cos());
        let mut next = u - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - u).abs() < 1e-14;
        u = next;
        if done {
            break;
        }
    }
    u
}

fn torus_jet(s: f64, v: f64) -> Jet {
    let u = torus_u(s);
    let (su, cu) = u.sin_cos();
    let (sv, cv) = v.sin_cos();
    let w = SQRT_2 + cu;
    let p = Vec3::new(w * cv, w * sv, su);
    let p_u = Vec3::new(-su * cv, -su * sv, cu);
    let p_v = Vec3::new(-w * sv, w * cv, 0.0);
    let p_uu = Vec3::new(-cu * cv, -cu * sv, -su);
    let p_uv = Vec3::new(su * sv, -su * cv, 0.0);
    let p_vv = Vec3::new(-w * cv, -w * sv, 0.0);
    // du/ds = w, d²u/ds² = -sin u · w
    let u_ss = -su * w;
    Jet {
        phi: p,
        phi_x: w * p_u,
        phi_y: p_v,
        phi_xx: w * w * p_uu + u_ss * p_u,
        phi_xy: w * p_uv,
        phi_yy: p_vv,
    }
}
