//! Intrinsic second-order checks: covariant Hessian, the Bochner identity
//! and the stability inequality for surfaces of Willmore type.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ambient::metric::AmbientMetric;
use crate::chart::{interpolate, Axis, ChartScalar, Field};
use crate::error::{Error, Result};
use crate::geometry::ambient_surface::mean_curvature_ambient;
use crate::geometry::GeometryBundle;
use crate::quadrature::gauss_legendre;
use crate::surfaces::{RadialShape, SphereGrid};
use crate::Vec3;

/// Components of `∇²f` in chart coordinates.
#[derive(Clone, Debug)]
pub struct CovariantHessian {
    pub xx: ChartScalar,
    pub xy: ChartScalar,
    pub yy: ChartScalar,
}

impl CovariantHessian {
    /// `|∇²f|²` measured with `ḡ = e^{2λ}δ`.
    pub fn norm_sq(&self, lambda: &ChartScalar) -> Result<ChartScalar> {
        let s = self.xx.zip(&self.yy, |a, b| a * a + b * b)?;
        let s = s.zip(&self.xy, |s, c| s + 2.0 * c * c)?;
        s.zip(lambda, |s, l| s * (-4.0 * l).exp())
    }

    /// `tr_ḡ ∇²f`.
    pub fn trace(&self, lambda: &ChartScalar) -> Result<ChartScalar> {
        self.xx.zip(&self.yy, |a, b| a + b)?.zip(lambda, |t, l| t * (-2.0 * l).exp())
    }
}

/// `∂_i∂_j f - Γ^k_ij ∂_k f` with the Christoffels of `e^{2λ}δ`:
/// `Γ^k_ij = δ_ik λ_j + δ_jk λ_i - δ_ij λ_k`.
pub fn covariant_hessian(f: &ChartScalar, bundle: &GeometryBundle) -> Result<CovariantHessian> {
    let fx = f.derivative(Axis::X)?;
    let fy = f.derivative(Axis::Y)?;
    let lx = bundle.lambda.derivative(Axis::X)?;
    let ly = bundle.lambda.derivative(Axis::Y)?;
    let gx = fx.zip(&lx, |a, b| a * b)?;
    let gy = fy.zip(&ly, |a, b| a * b)?;
    let fxx = fx.derivative(Axis::X)?;
    let fxy = fx.derivative(Axis::Y)?;
    let fyy = fy.derivative(Axis::Y)?;
    // xx: Γ¹₁₁ = λx, Γ²₁₁ = -λy;  yy: Γ¹₂₂ = -λx, Γ²₂₂ = λy;  xy: Γ¹₁₂ = λy, Γ²₁₂ = λx
    let xx = fxx.sub(&gx)?.add(&gy)?;
    let yy = fyy.add(&gx)?.sub(&gy)?;
    let cross = fx.zip(&ly, |a, b| a * b)?.add(&fy.zip(&lx, |a, b| a * b)?)?;
    let xy = fxy.sub(&cross)?;
    Ok(CovariantHessian { xx, xy, yy })
}

/// `f = A (1 - |x - c|²/ρ²)^k` on its support disk, zero outside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    /// Exponent `k ≥ 3`, so `f` has two continuous derivatives.
    pub order: u32,
    pub amplitude: f64,
}

/// Value, gradient and Hessian of a chart function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartJet {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl BumpFunction {
    pub fn new(cx: f64, cy: f64, radius: f64, order: u32) -> Result<Self> {
        if !(radius > 0.0) || order < 3 {
            return Err(Error::InvalidParameter(format!("bump radius {radius}, order {order}")));
        }
        Ok(Self {
            cx,
            cy,
            radius,
            order,
            amplitude: 1.0,
        })
    }

    /// Bump centered on chart node `(i, j)`.
    pub fn at_node(chart: &crate::Chart, node: (usize, usize), radius: f64, order: u32) -> Result<Self> {
        Self::new(chart.coord(Axis::X, node.0), chart.coord(Axis::Y, node.1), radius, order)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            amplitude: self.amplitude * s,
            ..*self
        }
    }

    /// Random bump whose support stays inside `[-reach, reach]²`.
    pub fn random<R: Rng>(rng: &mut R, reach: f64, radii: (f64, f64)) -> Result<Self> {
        let radius = rng.random_range(radii.0..radii.1);
        let span = reach - radius;
        if !(span > 0.0) {
            return Err(Error::InvalidParameter("bump does not fit the chart".into()));
        }
        Self::new(rng.random_range(-span..span), rng.random_range(-span..span), radius, 4)
    }

    pub fn jet(&self, x: f64, y: f64) -> ChartJet {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let r2 = self.radius * self.radius;
        let u = 1.0 - (dx * dx + dy * dy) / r2;
        if u <= 0.0 {
            return ChartJet { value: 0.0, dx: 0.0, dy: 0.0, dxx: 0.0, dxy: 0.0, dyy: 0.0 };
        }
        let k = self.order as f64;
        let a = self.amplitude;
        let p1 = a * k * u.powi(self.order as i32 - 1);
        let p2 = a * k * (k - 1.0) * u.powi(self.order as i32 - 2);
        // ∂u = -2(x - c)/ρ², ∂∂u = -2δ/ρ²
        let (ux, uy) = (-2.0 * dx / r2, -2.0 * dy / r2);
        let uxx = -2.0 / r2;
        ChartJet {
            value: a * u.powi(self.order as i32),
            dx: p1 * ux,
            dy: p1 * uy,
            dxx: p2 * ux * ux + p1 * uxx,
            dxy: p2 * ux * uy,
            dyy: p2 * uy * uy + p1 * uxx,
        }
    }

    pub fn sample(&self, chart: &crate::Chart) -> ChartScalar {
        Field::sample(chart, |x, y| self.jet(x, y).value)
    }

    /// Errors unless the support disk with an interpolation collar lies in
    /// the chart's valid interior.
    fn check_support(&self, bundle: &GeometryBundle) -> Result<()> {
        let c = bundle.chart();
        for (axis, center) in [(Axis::X, self.cx), (Axis::Y, self.cy)] {
            if c.is_periodic(axis) {
                continue;
            }
            let collar = 4.0 * c.h(axis);
            let lo = c.coord(axis, *c.interior(axis).start()) + collar;
            let hi = c.coord(axis, *c.interior(axis).end()) - collar;
            if center - self.radius < lo || center + self.radius > hi {
                return Err(Error::RegionOutside(format!(
                    "bump support [{:.3}, {:.3}] leaves the chart interior",
                    center - self.radius,
                    center + self.radius
                )));
            }
        }
        Ok(())
    }

    /// Polar Gauss-Legendre × trapezoid nodes `(x, y, weight)` on the
    /// support disk.
    fn quadrature(&self) -> Vec<(f64, f64, f64)> {
        let n_r = 12 + 2 * self.order as usize;
        let n_t = 96;
        let (xr, wr) = gauss_legendre(n_r);
        let dt = 2.0 * PI / n_t as f64;
        let mut out = Vec::with_capacity(n_r * n_t);
        for (x, w) in xr.iter().zip(&wr) {
            let r = 0.5 * self.radius * (x + 1.0);
            for k in 0..n_t {
                let t = k as f64 * dt;
                out.push((self.cx + r * t.cos(), self.cy + r * t.sin(), 0.5 * self.radius * w * r * dt));
            }
        }
        out
    }
}

/// Bundle quantities interpolated at a point.
struct Local {
    lambda: f64,
    lx: f64,
    ly: f64,
    a0sq: f64,
    h_tr: f64,
    k: f64,
}

struct Interpolant<'a> {
    bundle: &'a GeometryBundle,
    lx: ChartScalar,
    ly: ChartScalar,
}

impl<'a> Interpolant<'a> {
    fn new(bundle: &'a GeometryBundle) -> Result<Self> {
        Ok(Self {
            bundle,
            lx: bundle.lambda.derivative(Axis::X)?,
            ly: bundle.lambda.derivative(Axis::Y)?,
        })
    }

    fn at(&self, x: f64, y: f64) -> Result<Local> {
        let b = self.bundle;
        Ok(Local {
            lambda: interpolate(&b.lambda, x, y)?,
            lx: interpolate(&self.lx, x, y)?,
            ly: interpolate(&self.ly, x, y)?,
            a0sq: interpolate(&b.a0sq, x, y)?,
            h_tr: interpolate(&b.h_tr, x, y)?,
            k: interpolate(&b.k, x, y)?,
        })
    }
}

fn require_flat(g: &AmbientMetric) -> Result<()> {
    if !g.is_flat() {
        return Err(Error::InvalidParameter(
            "chart bundles are immersions in Euclidean space".into(),
        ));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BochnerResult {
    /// `∫|∇²f|² dμ`.
    pub lhs: f64,
    /// `∫(Δf)² + |∇f|²(½|Å|² - ¼H² - ½Scal + Ric(ν,ν)) dμ`.
    pub rhs: f64,
    /// `|lhs - rhs| / max(lhs, 1)`.
    pub defect: f64,
}

/// Bochner identity for a compactly supported bump on a conformal chart,
/// with analytic bump derivatives and interpolated bundle fields.
pub fn bochner_check(f: &BumpFunction, bundle: &GeometryBundle, g: &AmbientMetric) -> Result<BochnerResult> {
    require_flat(g)?;
    f.check_support(bundle)?;
    let interp = Interpolant::new(bundle)?;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (x, y, w) in f.quadrature() {
        let j = f.jet(x, y);
        let p = interp.at(x, y)?;
        let e2 = (2.0 * p.lambda).exp();
        let (gx, gy) = (j.dx * p.lx, j.dy * p.ly);
        let hxx = j.dxx - gx + gy;
        let hyy = j.dyy + gx - gy;
        let hxy = j.dxy - (j.dx * p.ly + j.dy * p.lx);
        let hess_sq = (hxx * hxx + 2.0 * hxy * hxy + hyy * hyy) / (e2 * e2);
        let lap = (j.dxx + j.dyy) / e2;
        let grad_sq = (j.dx * j.dx + j.dy * j.dy) / e2;
        let bracket = 0.5 * p.a0sq - 0.25 * p.h_tr * p.h_tr;
        let dmu = w * e2;
        lhs += hess_sq * dmu;
        rhs += (lap * lap + grad_sq * bracket) * dmu;
    }
    Ok(BochnerResult {
        lhs,
        rhs,
        defect: (lhs - rhs).abs() / lhs.max(1.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityResult {
    /// `∫f²(½|Å|² + ¼H² + ½Scal - ½Scal^Σ + λ) dμ`.
    pub lhs: f64,
    /// `∫|∇f|² dμ`.
    pub rhs: f64,
    pub margin: f64,
    /// Smallest `H` on the support of `f`; the inequality assumes `H > 0`.
    pub min_mean_curvature: f64,
    /// Smallest `λ + ½Scal` on the support, the hypothesis of the
    /// curvature-free form.
    pub min_lambda_plus_half_scal: f64,
}

impl StabilityResult {
    pub fn hypothesis_holds(&self) -> bool {
        self.min_mean_curvature > 0.0
    }
}

/// Stability inequality on a conformal chart of a surface in Euclidean
/// space, with `Scal^Σ = 2K`.
pub fn stability_check(f: &BumpFunction, bundle: &GeometryBundle, lambda: f64, g: &AmbientMetric) -> Result<StabilityResult> {
    require_flat(g)?;
    f.check_support(bundle)?;
    let interp = Interpolant::new(bundle)?;
    let (mut lhs, mut rhs) = (0.0, 0.0);
    let mut min_h = f64::INFINITY;
    for (x, y, w) in f.quadrature() {
        let j = f.jet(x, y);
        let p = interp.at(x, y)?;
        let e2 = (2.0 * p.lambda).exp();
        let bracket = 0.5 * p.a0sq + 0.25 * p.h_tr * p.h_tr - p.k + lambda;
        lhs += j.value * j.value * bracket * w * e2;
        rhs += (j.dx * j.dx + j.dy * j.dy) * w;
        min_h = min_h.min(p.h_tr);
    }
    Ok(StabilityResult {
        lhs,
        rhs,
        margin: rhs - lhs,
        min_mean_curvature: min_h,
        min_lambda_plus_half_scal: lambda,
    })
}

/// `f(ω) = A (1 - |ω - ω₀|²/ρ²)^k` on the parameter sphere of a radial
/// shape.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereBump {
    pub direction: Vec3,
    pub radius: f64,
    pub order: u32,
    pub amplitude: f64,
}

impl SphereBump {
    pub fn new(direction: Vec3, radius: f64, order: u32) -> Result<Self> {
        if !(radius > 0.0 && radius < 2.0) || order < 3 || direction.norm() == 0.0 {
            return Err(Error::InvalidParameter(format!("sphere bump radius {radius}, order {order}")));
        }
        Ok(Self {
            direction: direction.normalize(),
            radius,
            order,
            amplitude: 1.0,
        })
    }

    pub fn random<R: Rng>(rng: &mut R) -> Result<Self> {
        let z: f64 = rng.random_range(-1.0..1.0);
        let t: f64 = rng.random_range(0.0..2.0 * PI);
        let s = (1.0 - z * z).sqrt();
        Self::new(Vec3::new(s * t.cos(), s * t.sin(), z), rng.random_range(0.4..1.2), 4)
    }

    /// Value and derivative along `dω` of the bump.
    fn eval(&self, omega: &Vec3, d_omega: [&Vec3; 2]) -> (f64, [f64; 2]) {
        let diff = omega - self.direction;
        let u = 1.0 - diff.norm_squared() / (self.radius * self.radius);
        if u <= 0.0 {
            return (0.0, [0.0, 0.0]);
        }
        let k = self.order as i32;
        let p1 = self.amplitude * k as f64 * u.powi(k - 1);
        let du = |t: &Vec3| -2.0 * diff.dot(t) / (self.radius * self.radius);
        (self.amplitude * u.powi(k), [p1 * du(d_omega[0]), p1 * du(d_omega[1])])
    }
}

/// Stability inequality on a radial shape in any ambient metric, with
/// `Scal^Σ = Scal - 2Ric(ν,ν) + ½H² - |Å|²` from the Gauss equation.
pub fn stability_check_shape(
    f: &SphereBump,
    shape: &RadialShape,
    grid: &SphereGrid,
    lambda: f64,
    g: &AmbientMetric,
) -> Result<StabilityResult> {
    let samples = shape.sample(grid)?;
    let pts = mean_curvature_ambient(&samples, g)?;
    let (mut lhs, mut rhs) = (0.0, 0.0);
    let mut min_h = f64::INFINITY;
    let mut min_hyp = f64::INFINITY;
    for ((gp, s), p) in grid.points().iter().zip(&samples).zip(&pts) {
        let (v, d) = f.eval(&gp.omega, [&gp.omega_u, &gp.omega_v]);
        if v == 0.0 && d == [0.0, 0.0] {
            continue;
        }
        let (scal, ric_nn) = if g.is_flat() {
            (0.0, 0.0)
        } else {
            let jet = g.jet(&s.f);
            let ric: Matrix3<f64> = jet.ricci()?;
            (jet.scalar()?, (p.nu.transpose() * ric * p.nu)[0])
        };
        let a0 = p.a0_sq();
        let scal_surface = scal - 2.0 * ric_nn + 0.5 * p.h * p.h - a0;
        let bracket = 0.5 * a0 + 0.25 * p.h * p.h + 0.5 * scal - 0.5 * scal_surface + lambda;
        let gi = p.inverse;
        let grad_sq = gi[(0, 0)] * d[0] * d[0] + 2.0 * gi[(0, 1)] * d[0] * d[1] + gi[(1, 1)] * d[1] * d[1];
        lhs += v * v * bracket * p.dmu;
        rhs += grad_sq * p.dmu;
        min_h = min_h.min(p.h);
        min_hyp = min_hyp.min(lambda + 0.5 * scal);
    }
    Ok(StabilityResult {
        lhs,
        rhs,
        margin: rhs - lhs,
        min_mean_curvature: min_h,
        min_lambda_plus_half_scal: min_hyp,
    })
}
