//! Parametrized surfaces in a Riemannian ambient: mean curvature, Willmore
//! energy, area and the first variation of the energy.

use nalgebra::{Matrix2, Matrix3};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambient::metric::{AmbientMetric, Christoffel, MetricJet};
use crate::chart::Vec3;
use crate::error::{Error, Result};
use crate::surfaces::SurfaceSample;

/// Induced geometry at one quadrature point.
#[derive(Clone, Copy, Debug)]
pub struct SurfacePoint {
    /// Mean curvature, trace convention.
    pub h: f64,
    /// `g`-unit normal along `F_u × F_v`.
    pub nu: Vec3,
    pub metric: Matrix2<f64>,
    pub inverse: Matrix2<f64>,
    pub second: Matrix2<f64>,
    /// Quadrature weight times `√det ḡ`.
    pub dmu: f64,
    /// `|A|²`.
    pub a_sq: f64,
}

impl SurfacePoint {
    /// `|Å|² = |A|² - ½H²`.
    pub fn a0_sq(&self) -> f64 {
        self.a_sq - 0.5 * self.h * self.h
    }

    /// `det(ḡ⁻¹h)`; equals the Gauss curvature in a flat ambient.
    pub fn extrinsic_gauss(&self) -> f64 {
        (self.inverse * self.second).determinant()
    }
}

fn gamma_apply(gamma: &Christoffel, a: &Vec3, b: &Vec3) -> Vec3 {
    Vec3::new(
        (a.transpose() * gamma[0] * b)[0],
        (a.transpose() * gamma[1] * b)[0],
        (a.transpose() * gamma[2] * b)[0],
    )
}

/// `h_ij = -g(F_ij + Γ(F_i, F_j), ν)`, `H = ḡ^{ij} h_ij`.
pub fn surface_point(s: &SurfaceSample, jet: &MetricJet, gamma: Option<&Christoffel>) -> Result<SurfacePoint> {
    let g = &jet.g;
    let ip = |a: &Vec3, b: &Vec3| (a.transpose() * g * b)[0];
    let metric = Matrix2::new(ip(&s.f_u, &s.f_u), ip(&s.f_u, &s.f_v), ip(&s.f_v, &s.f_u), ip(&s.f_v, &s.f_v));
    let det = metric.determinant();
    if !(det > 1e-300) || !det.is_finite() {
        return Err(Error::Degenerate(format!("induced metric determinant {det:.3e}")));
    }
    let inverse = Matrix2::new(metric[(1, 1)], -metric[(0, 1)], -metric[(1, 0)], metric[(0, 0)]) / det;
    let ginv = jet.inverse()?;
    let raw = ginv * s.f_u.cross(&s.f_v);
    let nu = raw / ip(&raw, &raw).sqrt();
    let accel = |fij: &Vec3, a: &Vec3, b: &Vec3| match gamma {
        Some(gm) => fij + gamma_apply(gm, a, b),
        None => *fij,
    };
    let h11 = -ip(&accel(&s.f_uu, &s.f_u, &s.f_u), &nu);
    let h12 = -ip(&accel(&s.f_uv, &s.f_u, &s.f_v), &nu);
    let h22 = -ip(&accel(&s.f_vv, &s.f_v, &s.f_v), &nu);
    let second = Matrix2::new(h11, h12, h12, h22);
    let shape = inverse * second;
    Ok(SurfacePoint {
        h: shape.trace(),
        nu,
        metric,
        inverse,
        second,
        dmu: s.weight * det.sqrt(),
        a_sq: (shape * shape).trace(),
    })
}

/// Induced geometry at every sample.
pub fn mean_curvature_ambient(samples: &[SurfaceSample], g: &AmbientMetric) -> Result<Vec<SurfacePoint>> {
    let flat = matches!(g, AmbientMetric::Euclidean);
    samples
        .par_iter()
        .map(|s| {
            if flat {
                surface_point(s, &MetricJet::euclidean(), None)
            } else {
                g.check_point(&s.f)?;
                let jet = g.jet(&s.f);
                let gamma = jet.christoffel()?;
                surface_point(s, &jet, Some(&gamma))
            }
        })
        .collect()
}

/// `(W, |Σ|)` with `W = ½∫H² dμ`.
pub fn energy_area(samples: &[SurfaceSample], g: &AmbientMetric) -> Result<(f64, f64)> {
    let pts = mean_curvature_ambient(samples, g)?;
    let mut w = 0.0;
    let mut a = 0.0;
    for p in &pts {
        w += 0.5 * p.h * p.h * p.dmu;
        a += p.dmu;
    }
    Ok((w, a))
}

pub fn willmore_energy(samples: &[SurfaceSample], g: &AmbientMetric) -> Result<f64> {
    Ok(energy_area(samples, g)?.0)
}

pub fn area(samples: &[SurfaceSample], g: &AmbientMetric) -> Result<f64> {
    Ok(energy_area(samples, g)?.1)
}

/// `∫|A|² dμ`.
pub fn curvature_integral(samples: &[SurfaceSample], g: &AmbientMetric) -> Result<f64> {
    Ok(mean_curvature_ambient(samples, g)?.iter().map(|p| p.a_sq * p.dmu).sum())
}

/// Smooth ambient vector field
/// `X(x) = c + Mx + Σ b (xᵀQx) + Σ b sin(k·x + θ)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    pub constant: Vec3,
    pub linear: Matrix3<f64>,
    pub quadratic: Vec<(Vec3, Matrix3<f64>)>,
    pub waves: Vec<Wave>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub amplitude: Vec3,
    pub wavevector: Vec3,
    pub phase: f64,
}

/// Value, Jacobian `d[(a, b)] = ∂_b X^a` and Hessians `dd[a] = ∂∂X^a`.
#[derive(Clone, Copy, Debug)]
pub struct FieldJet {
    pub value: Vec3,
    pub d: Matrix3<f64>,
    pub dd: [Matrix3<f64>; 3],
}

impl VectorField {
    pub fn translation(c: Vec3) -> Self {
        Self {
            constant: c,
            ..Self::default()
        }
    }

    /// The position field `x`, generator of dilations.
    pub fn position() -> Self {
        Self {
            linear: Matrix3::identity(),
            ..Self::default()
        }
    }

    /// Random field with unit-scale coefficients: a linear part, two
    /// quadratic terms and two waves.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let mut v = || Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let constant = v();
        let linear = Matrix3::from_columns(&[v(), v(), v()]);
        let mut sym = || {
            let m = Matrix3::from_columns(&[v(), v(), v()]);
            (m + m.transpose()) * 0.5
        };
        let q1 = sym();
        let q2 = sym();
        let quadratic = vec![(v(), q1), (v(), q2)];
        let waves = (0..2)
            .map(|_| Wave {
                amplitude: v(),
                wavevector: v() * 2.0,
                phase: v()[0] * std::f64::consts::PI,
            })
            .collect();
        Self {
            constant,
            linear,
            quadratic,
            waves,
        }
    }

    pub fn jet(&self, x: &Vec3) -> FieldJet {
        let mut value = self.constant + self.linear * x;
        let mut d = self.linear;
        let mut dd = [Matrix3::zeros(); 3];
        for (b, q) in &self.quadratic {
            let qs = q + q.transpose();
            value += b * (x.transpose() * q * x)[0];
            let grad = qs * x;
            d += b * grad.transpose();
            for a in 0..3 {
                dd[a] += qs * b[a];
            }
        }
        for w in &self.waves {
            let arg = w.wavevector.dot(x) + w.phase;
            let (s, c) = arg.sin_cos();
            value += w.amplitude * s;
            d += w.amplitude * (c * w.wavevector).transpose();
            let kk = w.wavevector * w.wavevector.transpose();
            for a in 0..3 {
                dd[a] -= kk * (s * w.amplitude[a]);
            }
        }
        FieldJet { value, d, dd }
    }

    /// Samples of `F + tX(F)` with derivatives by the chain rule.
    pub fn displace(&self, samples: &[SurfaceSample], t: f64) -> Vec<SurfaceSample> {
        samples
            .iter()
            .map(|s| {
                let j = self.jet(&s.f);
                let second = |a: &Vec3, b: &Vec3| Vec3::new(
                    (a.transpose() * j.dd[0] * b)[0],
                    (a.transpose() * j.dd[1] * b)[0],
                    (a.transpose() * j.dd[2] * b)[0],
                );
                SurfaceSample {
                    f: s.f + t * j.value,
                    f_u: s.f_u + t * j.d * s.f_u,
                    f_v: s.f_v + t * j.d * s.f_v,
                    f_uu: s.f_uu + t * (second(&s.f_u, &s.f_u) + j.d * s.f_uu),
                    f_uv: s.f_uv + t * (second(&s.f_u, &s.f_v) + j.d * s.f_uv),
                    f_vv: s.f_vv + t * (second(&s.f_v, &s.f_v) + j.d * s.f_vv),
                    weight: s.weight,
                }
            })
            .collect()
    }
}

/// First variation of `W` along the ambient field `X`:
///
/// `∫ -H ḡ^{ij} g(∇²_{F_i,F_j}X, ν) - 2H h^{kl} g(∇_{F_k}X, F_l)
///   + H² g(∇_ν X, ν) - H Ric(X, ν) + ½H² div^T X dμ`,
///
/// with `h^{kl} = ḡ^{ki}ḡ^{lj}h_ij`.
pub fn first_variation(samples: &[SurfaceSample], g: &AmbientMetric, x: &VectorField) -> Result<f64> {
    let terms: Vec<f64> = samples
        .par_iter()
        .map(|s| variation_density(s, g, x))
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

fn variation_density(s: &SurfaceSample, g: &AmbientMetric, field: &VectorField) -> Result<f64> {
    let flat = matches!(g, AmbientMetric::Euclidean);
    if !flat {
        g.check_point(&s.f)?;
    }
    let jet = if flat { MetricJet::euclidean() } else { g.jet(&s.f) };
    let (gamma, dgamma, ric) = if flat {
        ([Matrix3::zeros(); 3], [[Matrix3::zeros(); 3]; 3], Matrix3::zeros())
    } else {
        (jet.christoffel()?, jet.christoffel_derivative()?, jet.ricci()?)
    };
    let p = surface_point(s, &jet, Some(&gamma))?;
    let xj = field.jet(&s.f);
    let xv = xj.value;

    // (∇X)^a_b = ∂_b X^a + Γ^a_bc X^c
    let cov = Matrix3::from_fn(|a, b| xj.d[(a, b)] + (0..3).map(|c| gamma[a][(b, c)] * xv[c]).sum::<f64>());
    // (∇∇X)^a_{cb} = ∂_c (∇X)^a_b + Γ^a_cd (∇X)^d_b - Γ^d_cb (∇X)^a_d
    let hess = |a: usize, c: usize, b: usize| {
        let mut v = xj.dd[a][(c, b)];
        for d in 0..3 {
            v += dgamma[c][a][(b, d)] * xv[d] + gamma[a][(b, d)] * xj.d[(d, c)];
            v += gamma[a][(c, d)] * cov[(d, b)] - gamma[d][(c, b)] * cov[(a, d)];
        }
        v
    };
    let second_cov = |u: &Vec3, w: &Vec3| {
        Vec3::from_fn(|a, _| {
            let mut v = 0.0;
            for c in 0..3 {
                for b in 0..3 {
                    v += u[c] * w[b] * hess(a, c, b);
                }
            }
            v
        })
    };
    let ip = |a: &Vec3, b: &Vec3| (a.transpose() * jet.g * b)[0];
    let tangents = [s.f_u, s.f_v];
    let gi = p.inverse;
    let h_up = gi * p.second * gi;
    let mut lap_term = 0.0;
    let mut shape_term = 0.0;
    let mut div_t = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            lap_term += gi[(i, j)] * ip(&second_cov(&tangents[i], &tangents[j]), &p.nu);
            let dxt = ip(&(cov * tangents[i]), &tangents[j]);
            shape_term += h_up[(i, j)] * dxt;
            div_t += gi[(i, j)] * dxt;
        }
    }
    let h = p.h;
    let normal_term = ip(&(cov * p.nu), &p.nu);
    let ricci_term = (xv.transpose() * ric * p.nu)[0];
    let density = -h * lap_term - 2.0 * h * shape_term + h * h * normal_term - h * ricci_term
        + 0.5 * h * h * div_t;
    Ok(density * p.dmu)
}

/// Central difference `(W(F + tX) - W(F - tX)) / 2t`.
pub fn first_variation_fd(samples: &[SurfaceSample], g: &AmbientMetric, x: &VectorField, t: f64) -> Result<f64> {
    let plus = willmore_energy(&x.displace(samples, t), g)?;
    let minus = willmore_energy(&x.displace(samples, -t), g)?;
    Ok((plus - minus) / (2.0 * t))
}
