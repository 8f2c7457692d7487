//! Ambient Riemannian metrics on coordinate patches of ℝ³.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::chart::Vec3;
use crate::error::{Error, Result};

type Tensor4 = [[[[f64; 3]; 3]; 3]; 3];

/// Algebraic curvature tensor `R_ikjl` at the origin of normal coordinates,
/// in the convention `g_ij = δ_ij - ⅓ R_ikjl x^k x^l`, `Ric_ij = Σ_k R_ikjk`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Riemann3 {
    r: Tensor4,
}

impl Riemann3 {
    pub fn zero() -> Self {
        Self {
            r: [[[[0.0; 3]; 3]; 3]; 3],
        }
    }

    /// Constant sectional curvature `kappa` (`kappa = 1`: unit round S³).
    pub fn constant_curvature(kappa: f64) -> Self {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut r = [[[[0.0; 3]; 3]; 3]; 3];
        for (i, ri) in r.iter_mut().enumerate() {
            for (k, rk) in ri.iter_mut().enumerate() {
                for (j, rj) in rk.iter_mut().enumerate() {
                    for (l, v) in rj.iter_mut().enumerate() {
                        *v = kappa * (d(i, j) * d(k, l) - d(i, l) * d(k, j));
                    }
                }
            }
        }
        Self { r }
    }

    /// In three dimensions the curvature tensor is determined by the Ricci
    /// tensor: `R = Ric ⊙ g - ½ Scal g ⊙ g` (Kulkarni–Nomizu form).
    pub fn from_ricci(ric: &Matrix3<f64>) -> Result<Self> {
        if (ric - ric.transpose()).abs().max() > 1e-12 {
            return Err(Error::CurvatureSymmetry("Ricci tensor is not symmetric".into()));
        }
        let scal = ric.trace();
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut r = [[[[0.0; 3]; 3]; 3]; 3];
        for (i, ri) in r.iter_mut().enumerate() {
            for (k, rk) in ri.iter_mut().enumerate() {
                for (j, rj) in rk.iter_mut().enumerate() {
                    for (l, v) in rj.iter_mut().enumerate() {
                        *v = ric[(i, j)] * d(k, l) + ric[(k, l)] * d(i, j)
                            - ric[(i, l)] * d(k, j)
                            - ric[(k, j)] * d(i, l)
                            - 0.5 * scal * (d(i, j) * d(k, l) - d(i, l) * d(k, j));
                    }
                }
            }
        }
        Ok(Self { r })
    }

    pub fn from_ricci_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::from_ricci(&Matrix3::from_fn(|i, j| rows[i][j]))
    }

    pub fn from_components(r: Tensor4) -> Result<Self> {
        let t = Self { r };
        t.check_symmetries(1e-12)?;
        Ok(t)
    }

    pub fn get(&self, i: usize, k: usize, j: usize, l: usize) -> f64 {
        self.r[i][k][j][l]
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut r = self.r;
        r.iter_mut().flatten().flatten().flatten().for_each(|v| *v *= s);
        Self { r }
    }

    pub fn ricci(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| (0..3).map(|k| self.r[i][k][j][k]).sum())
    }

    pub fn scalar(&self) -> f64 {
        self.ricci().trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.r.iter().flatten().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Antisymmetry in `(i,k)` and `(j,l)`, pair symmetry and the first
    /// Bianchi identity.
    pub fn check_symmetries(&self, tol: f64) -> Result<()> {
        let r = &self.r;
        let scale = self.max_abs().max(1.0);
        for i in 0..3 {
            for k in 0..3 {
                for j in 0..3 {
                    for l in 0..3 {
                        let v = r[i][k][j][l];
                        let fail = |what: &str| {
                            Err(Error::CurvatureSymmetry(format!("{what} fails at ({i},{k},{j},{l})")))
                        };
                        if (v + r[k][i][j][l]).abs() > tol * scale {
                            return fail("antisymmetry in the first pair");
                        }
                        if (v + r[i][k][l][j]).abs() > tol * scale {
                            return fail("antisymmetry in the second pair");
                        }
                        if (v - r[j][l][i][k]).abs() > tol * scale {
                            return fail("pair symmetry");
                        }
                        if (v + r[i][j][l][k] + r[i][l][k][j]).abs() > tol * scale {
                            return fail("first Bianchi identity");
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Metric with its first and second coordinate derivatives at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricJet {
    pub g: Matrix3<f64>,
    /// `dg[c] = ∂_c g`.
    pub dg: [Matrix3<f64>; 3],
    /// `ddg[c][d] = ∂_c ∂_d g`.
    pub ddg: [[Matrix3<f64>; 3]; 3],
}

/// Christoffel symbols `gamma[a][(b, c)] = Γ^a_bc`.
pub type Christoffel = [Matrix3<f64>; 3];

impl MetricJet {
    pub fn euclidean() -> Self {
        Self {
            g: Matrix3::identity(),
            dg: [Matrix3::zeros(); 3],
            ddg: [[Matrix3::zeros(); 3]; 3],
        }
    }

    pub fn inverse(&self) -> Result<Matrix3<f64>> {
        self.g
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("ambient metric is singular".into()))
    }

    fn lowered(&self) -> Christoffel {
        // Γ_{d,bc} = ½(∂_b g_dc + ∂_c g_db - ∂_d g_bc)
        let mut low = [Matrix3::zeros(); 3];
        for (d, m) in low.iter_mut().enumerate() {
            *m = Matrix3::from_fn(|b, c| {
                0.5 * (self.dg[b][(d, c)] + self.dg[c][(d, b)] - self.dg[d][(b, c)])
            });
        }
        low
    }

    pub fn christoffel(&self) -> Result<Christoffel> {
        let ginv = self.inverse()?;
        let low = self.lowered();
        Ok(raise(&ginv, &low))
    }

    /// `dgamma[e][a][(b, c)] = ∂_e Γ^a_bc`.
    pub fn christoffel_derivative(&self) -> Result<[Christoffel; 3]> {
        let ginv = self.inverse()?;
        let low = self.lowered();
        let mut out = [[Matrix3::zeros(); 3]; 3];
        for (e, oe) in out.iter_mut().enumerate() {
            let dginv = -ginv * self.dg[e] * ginv;
            let mut dlow = [Matrix3::zeros(); 3];
            for (d, m) in dlow.iter_mut().enumerate() {
                *m = Matrix3::from_fn(|b, c| {
                    0.5 * (self.ddg[e][b][(d, c)] + self.ddg[e][c][(d, b)] - self.ddg[e][d][(b, c)])
                });
            }
            let a1 = raise(&dginv, &low);
            let a2 = raise(&ginv, &dlow);
            for a in 0..3 {
                oe[a] = a1[a] + a2[a];
            }
        }
        Ok(out)
    }

    /// `R^a_bcd = ∂_c Γ^a_db - ∂_d Γ^a_cb + Γ^a_ce Γ^e_db - Γ^a_de Γ^e_cb`,
    /// returned as `riem[a][b][c][d]`.
    pub fn riemann(&self) -> Result<Tensor4> {
        let gam = self.christoffel()?;
        let dgam = self.christoffel_derivative()?;
        let mut r = [[[[0.0; 3]; 3]; 3]; 3];
        for (a, ra) in r.iter_mut().enumerate() {
            for (b, rb) in ra.iter_mut().enumerate() {
                for (c, rc) in rb.iter_mut().enumerate() {
                    for (d, v) in rc.iter_mut().enumerate() {
                        let mut s = dgam[c][a][(d, b)] - dgam[d][a][(c, b)];
                        for e in 0..3 {
                            s += gam[a][(c, e)] * gam[e][(d, b)] - gam[a][(d, e)] * gam[e][(c, b)];
                        }
                        *v = s;
                    }
                }
            }
        }
        Ok(r)
    }

    /// `Ric_bd = R^a_bad`.
    pub fn ricci(&self) -> Result<Matrix3<f64>> {
        let r = self.riemann()?;
        Ok(Matrix3::from_fn(|b, d| (0..3).map(|a| r[a][b][a][d]).sum()))
    }

    pub fn scalar(&self) -> Result<f64> {
        let ginv = self.inverse()?;
        Ok((ginv * self.ricci()?).trace())
    }
}

fn raise(ginv: &Matrix3<f64>, low: &Christoffel) -> Christoffel {
    let mut up = [Matrix3::zeros(); 3];
    for (a, m) in up.iter_mut().enumerate() {
        for (d, l) in low.iter().enumerate() {
            *m += ginv[(a, d)] * l;
        }
    }
    up
}

/// Ambient metric on a coordinate patch of ℝ³.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmbientMetric {
    Euclidean,
    /// `g_ij = δ_ij - ⅓ R_ikjl x^k x^l`.
    NormalForm { riemann: Riemann3 },
    /// `g = e^{2φ}δ` with `φ(x) = Σ_k coeffs[k] |x - center|^{2(k+1)}`.
    Conformal { center: Vec3, coeffs: Vec<f64> },
}

impl AmbientMetric {
    pub fn normal_form(riemann: Riemann3) -> Result<Self> {
        riemann.check_symmetries(1e-12)?;
        Ok(Self::NormalForm { riemann })
    }

    /// Conformal metric with `φ = ε|x - q|⁴`; its scalar curvature
    /// `≈ -80 ε |x - q|²` is maximal at `q` for `ε > 0`.
    pub fn conformal_quartic(q: Vec3, eps: f64) -> Self {
        Self::Conformal {
            center: q,
            coeffs: vec![0.0, eps],
        }
    }

    pub fn is_flat(&self) -> bool {
        match self {
            Self::Euclidean => true,
            Self::NormalForm { riemann } => riemann.max_abs() == 0.0,
            Self::Conformal { coeffs, .. } => coeffs.iter().all(|c| *c == 0.0),
        }
    }

    /// Radius of the coordinate ball on which the metric is used.
    pub fn validity_radius(&self) -> f64 {
        match self {
            Self::Euclidean | Self::Conformal { .. } => f64::INFINITY,
            Self::NormalForm { riemann } => {
                let m = riemann.max_abs();
                if m == 0.0 {
                    f64::INFINITY
                } else {
                    // keeps |h| ≤ ½ so g stays uniformly positive definite
                    (0.5 / m).sqrt()
                }
            }
        }
    }

    pub fn check_point(&self, x: &Vec3) -> Result<()> {
        let rho = self.validity_radius();
        if x.norm() > rho {
            return Err(Error::OutsideValidity(format!(
                "|x| = {:.4} exceeds {rho:.4}",
                x.norm()
            )));
        }
        Ok(())
    }

    pub fn jet(&self, x: &Vec3) -> MetricJet {
        match self {
            Self::Euclidean => MetricJet::euclidean(),
            Self::NormalForm { riemann } => normal_form_jet(riemann, x),
            Self::Conformal { center, coeffs } => conformal_jet(center, coeffs, x),
        }
    }

    /// Scalar curvature at `x`.
    pub fn scalar_curvature(&self, x: &Vec3) -> Result<f64> {
        match self {
            Self::Euclidean => Ok(0.0),
            _ => self.jet(x).scalar(),
        }
    }
}

fn normal_form_jet(r: &Riemann3, x: &Vec3) -> MetricJet {
    let third = 1.0 / 3.0;
    let g = Matrix3::from_fn(|i, j| {
        let mut s = 0.0;
        for k in 0..3 {
            for l in 0..3 {
                s += r.get(i, k, j, l) * x[k] * x[l];
            }
        }
        (if i == j { 1.0 } else { 0.0 }) - third * s
    });
    let dg = [0, 1, 2].map(|m| {
        Matrix3::from_fn(|i, j| {
            let mut s = 0.0;
            for l in 0..3 {
                s += (r.get(i, m, j, l) + r.get(i, l, j, m)) * x[l];
            }
            -third * s
        })
    });
    let ddg = [0, 1, 2].map(|m| {
        [0, 1, 2].map(|n| Matrix3::from_fn(|i, j| -third * (r.get(i, m, j, n) + r.get(i, n, j, m))))
    });
    MetricJet { g, dg, ddg }
}

fn conformal_jet(q: &Vec3, coeffs: &[f64], x: &Vec3) -> MetricJet {
    let d = x - q;
    let s = d.norm_squared();
    // φ(s) = Σ c_k s^{k+1}
    let (mut p, mut p1, mut p2) = (0.0, 0.0, 0.0);
    for (k, c) in coeffs.iter().enumerate() {
        let e = (k + 1) as i32;
        p += c * s.powi(e);
        p1 += c * e as f64 * s.powi(e - 1);
        if e >= 2 {
            p2 += c * (e * (e - 1)) as f64 * s.powi(e - 2);
        }
    }
    let grad = 2.0 * p1 * d;
    let hess = Matrix3::from_fn(|a, b| 4.0 * p2 * d[a] * d[b] + if a == b { 2.0 * p1 } else { 0.0 });
    let g = Matrix3::identity() * (2.0 * p).exp();
    let dg = [0, 1, 2].map(|a| g * (2.0 * grad[a]));
    let ddg = [0, 1, 2].map(|a| {
        [0, 1, 2].map(|b| g * (4.0 * grad[a] * grad[b] + 2.0 * hess[(a, b)]))
    });
    MetricJet { g, dg, ddg }
}
