//! Curvature of conformal charts: frame, normal, second fundamental form.

use serde::{Deserialize, Serialize};

use crate::chart::{
    grad, laplacian_conformal, laplacian_flat, Axis, Chart, ChartGrad3, ChartScalar, ChartVec3,
    Field, Grad, Vec3,
};
use crate::error::{Error, Result};
use crate::report::ResidualNorms;
use crate::surfaces::AnalyticImmersion;

/// Conformality defect above which an immersion is rejected.
pub const CONFORMALITY_THRESHOLD: f64 = 1e-8;

/// Where first and second derivatives of the immersion come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeSource {
    /// Closed-form derivatives of `Φ`; derivatives of `n` and `λ` by the
    /// chain rule.
    Analytic,
    /// Chart finite differences of sampled `Φ` and of everything derived
    /// from it.
    FiniteDifference,
}

/// Per-node geometry of a conformal chart.
///
/// The normal is `n = e1 ∧ e2` and `h_ij = -e^{-λ}⟨e_j, ∂_i n⟩`, so the
/// mean curvature vector is `H_avg n`.
#[derive(Clone, Debug)]
pub struct GeometryBundle {
    pub source: DerivativeSource,
    pub phi: ChartVec3,
    pub dphi: ChartGrad3,
    pub lap_phi: ChartVec3,
    pub lambda: ChartScalar,
    pub e1: ChartVec3,
    pub e2: ChartVec3,
    pub n: ChartVec3,
    pub dn: ChartGrad3,
    pub h11: ChartScalar,
    pub h12: ChartScalar,
    pub h22: ChartScalar,
    /// Difference of the two off-diagonal formulas `h_12 - h_21`.
    pub h12_asymmetry: ChartScalar,
    pub h_avg: ChartScalar,
    pub h_tr: ChartScalar,
    pub k: ChartScalar,
    pub a0sq: ChartScalar,
}

pub fn evaluate_bundle(
    imm: &AnalyticImmersion,
    chart: &Chart,
    source: DerivativeSource,
) -> Result<GeometryBundle> {
    let defect = imm.conformality_defect(chart);
    if !(defect < CONFORMALITY_THRESHOLD) {
        return Err(Error::NotConformal {
            defect,
            threshold: CONFORMALITY_THRESHOLD,
        });
    }
    let phi = ChartVec3::sample(chart, |x, y| imm.jet(x, y).phi);
    let (dphi, lap_phi, dn_analytic) = match source {
        DerivativeSource::Analytic => {
            let jets: Vec<_> = (0..chart.node_count())
                .map(|k| {
                    let (i, j) = (k % chart.n(), k / chart.n());
                    imm.jet(chart.coord(Axis::X, i), chart.coord(Axis::Y, j))
                })
                .collect();
            let field = |f: &dyn Fn(&crate::surfaces::Jet) -> Vec3| {
                ChartVec3::from_vec(chart, jets.iter().map(f).collect())
            };
            let dphi = Grad::new(field(&|j| j.phi_x)?, field(&|j| j.phi_y)?)?;
            let lap = field(&|j| j.phi_xx + j.phi_yy)?;
            let dn = Grad::new(
                field(&|j| normal_derivative(j.phi_x, j.phi_y, j.phi_xx, j.phi_xy))?,
                field(&|j| normal_derivative(j.phi_x, j.phi_y, j.phi_xy, j.phi_yy))?,
            )?;
            (dphi, lap, Some(dn))
        }
        DerivativeSource::FiniteDifference => (grad(&phi)?, laplacian_flat(&phi)?, None),
    };
    for v in dphi.x.values() {
        if v.norm() < 1e-12 {
            return Err(Error::Degenerate(format!("|Φ_x| = {:.3e}", v.norm())));
        }
    }

    let lambda = dphi.x.map(|v| v.norm().ln());
    let e1 = dphi.x.zip(&lambda, |v, l| v * (-l).exp())?;
    let e2 = dphi.y.zip(&lambda, |v, l| v * (-l).exp())?;
    let n = e1.zip(&e2, |a, b| a.cross(&b).normalize())?;
    let dn = match dn_analytic {
        Some(dn) => dn,
        None => grad(&n)?,
    };

    let coeff = |e: &ChartVec3, d: &ChartVec3| -> Result<ChartScalar> {
        e.zip(d, |e, d| e.dot(&d))?.zip(&lambda, |v, l| -(-l).exp() * v)
    };
    let h11 = coeff(&e1, &dn.x)?;
    let h22 = coeff(&e2, &dn.y)?;
    let h12a = coeff(&e2, &dn.x)?;
    let h21 = coeff(&e1, &dn.y)?;
    let h12 = h12a.zip(&h21, |a, b| 0.5 * (a + b))?;
    let h12_asymmetry = h12a.sub(&h21)?;
    let h_avg = h11.zip(&h22, |a, b| 0.5 * (a + b))?;
    let h_tr = h_avg.scale(2.0);
    let k = h11
        .zip(&h22, |a, b| a * b)?
        .zip(&h12, |ab, c| ab - c * c)?;
    let a0sq = h11
        .zip(&h22, |a, b| 0.5 * (a - b) * (a - b))?
        .zip(&h12, |d, c| d + 2.0 * c * c)?;

    Ok(GeometryBundle {
        source,
        phi,
        dphi,
        lap_phi,
        lambda,
        e1,
        e2,
        n,
        dn,
        h11,
        h12,
        h22,
        h12_asymmetry,
        h_avg,
        h_tr,
        k,
        a0sq,
    })
}

/// `∂n` from `∂(Φ_x × Φ_y)`, given `Φ_x, Φ_y` and their derivatives along
/// one chart direction.
fn normal_derivative(px: Vec3, py: Vec3, pxd: Vec3, pyd: Vec3) -> Vec3 {
    let big_n = px.cross(&py);
    let len = big_n.norm();
    let n = big_n / len;
    let dn_big = pxd.cross(&py) + px.cross(&pyd);
    (dn_big - n * n.dot(&dn_big)) / len
}

impl GeometryBundle {
    pub fn chart(&self) -> &Chart {
        self.phi.chart()
    }

    /// `e^{2λ}`.
    pub fn area_factor(&self) -> ChartScalar {
        self.lambda.map(|l| (2.0 * l).exp())
    }

    /// Gradient of `H_avg`, always by finite differences.
    pub fn grad_h(&self) -> Result<Grad<f64>> {
        grad(&self.h_avg)
    }

    /// Normal residual `max(||n| - 1|, |⟨n, e1⟩|, |⟨n, e2⟩|)` per node.
    pub fn frame_defect(&self) -> Result<ChartScalar> {
        let a = self.n.zip(&self.e1, |n, e| n.dot(&e).abs().max((n.norm() - 1.0).abs()))?;
        let b = self.n.zip(&self.e2, |n, e| n.dot(&e).abs())?;
        a.zip(&b, f64::max)
    }

    /// `|e1 ∧ e2 - n|` per node; zero up to the conformality of the
    /// derivative source.
    pub fn orientation_defect(&self) -> Result<ChartScalar> {
        self.e1
            .zip(&self.e2, |a, b| a.cross(&b))?
            .zip(&self.n, |w, n| (w - n).norm())
    }
}

/// `Δ_g H + 2H(H² - K)` with `Δ_g = e^{-2λ}Δ`.
pub fn el_residual_flat(bundle: &GeometryBundle) -> Result<ChartScalar> {
    let lap = laplacian_conformal(&bundle.h_avg, &bundle.lambda)?;
    let cubic = bundle
        .h_avg
        .zip(&bundle.k, |h, k| 2.0 * h * (h * h - k))?;
    lap.add(&cubic)
}

/// `½∫H_tr² dμ` over the whole chart; a closed surface when both axes are
/// periodic.
pub fn chart_willmore_energy(bundle: &GeometryBundle) -> Result<f64> {
    let h2 = bundle.h_tr.map(|h| 0.5 * h * h);
    crate::chart::integrate(&h2, &bundle.lambda, crate::chart::Region::Full)
}

/// Residual fields of the basic conformal identities.
#[derive(Clone, Debug)]
pub struct IdentityResiduals {
    /// `ΔΦ - 2e^{2λ} H n`.
    pub laplace_phi: ChartVec3,
    /// `H + ½e^{-2λ} ∇n·∇Φ`.
    pub mean_curvature: ChartScalar,
    /// `∇Φ·∇Φ - 2e^{2λ}`.
    pub conformal_metric: ChartScalar,
    /// `∇Φ∧n - ∇⊥Φ`, slot by slot.
    pub wedge_phi: ChartGrad3,
}

pub fn identity_residuals(bundle: &GeometryBundle) -> Result<IdentityResiduals> {
    let e2l = bundle.area_factor();
    let hn = bundle.n.times(&bundle.h_avg)?.times(&e2l)?.scale(2.0);
    let laplace_phi = bundle.lap_phi.sub(&hn)?;
    let dn_dphi = crate::chart::dot(&bundle.dn, &bundle.dphi)?;
    let mean_curvature = dn_dphi
        .zip(&bundle.lambda, |d, l| 0.5 * (-2.0 * l).exp() * d)?
        .add(&bundle.h_avg)?;
    let conformal_metric = crate::chart::dot(&bundle.dphi, &bundle.dphi)?.sub(&e2l.scale(2.0))?;
    let wedge_phi = crate::chart::slots_wedge_field(&bundle.dphi, &bundle.n)?.sub(&bundle.dphi.perp())?;
    Ok(IdentityResiduals {
        laplace_phi,
        mean_curvature,
        conformal_metric,
        wedge_phi,
    })
}

impl IdentityResiduals {
    pub fn norms(&self) -> Result<Vec<ResidualNorms>> {
        Ok(vec![
            ResidualNorms::new("laplace_phi", self.laplace_phi.norms()?),
            ResidualNorms::new("mean_curvature", self.mean_curvature.norms()?),
            ResidualNorms::new("conformal_metric", self.conformal_metric.norms()?),
            ResidualNorms::new("wedge_phi", self.wedge_phi.norms()?),
        ])
    }
}

/// Identity residual norms at each chart in `charts`.
pub fn identity_checks(
    imm: &AnalyticImmersion,
    charts: &[Chart],
    source: DerivativeSource,
) -> Result<Vec<Vec<ResidualNorms>>> {
    charts
        .iter()
        .map(|c| identity_residuals(&evaluate_bundle(imm, c, source)?)?.norms())
        .collect()
}

/// Gathers a scalar from a bundle field for CSV dumps.
pub fn bundle_scalars(bundle: &GeometryBundle) -> Vec<(&'static str, &Field<f64>)> {
    vec![
        ("lambda", &bundle.lambda),
        ("h11", &bundle.h11),
        ("h12", &bundle.h12),
        ("h22", &bundle.h22),
        ("h_avg", &bundle.h_avg),
        ("h_tr", &bundle.h_tr),
        ("k", &bundle.k),
        ("a0sq", &bundle.a0sq),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{cylinder, plane, sphere_stereo, willmore_torus};

    fn interior_max(f: &ChartScalar, g: impl Fn(f64) -> f64) -> f64 {
        f.map(g).norms().unwrap().max
    }

    #[test]
    fn plane_is_flat() {
        let c = Chart::new(33, 1.0).unwrap();
        for src in [DerivativeSource::Analytic, DerivativeSource::FiniteDifference] {
            let b = evaluate_bundle(&plane(), &c, src).unwrap();
            for f in [&b.h11, &b.h12, &b.h22, &b.h_avg, &b.k, &b.a0sq, &b.lambda] {
                assert_eq!(f.norms().unwrap().max, 0.0);
            }
        }
    }

    #[test]
    fn unit_sphere_curvatures() {
        let c = Chart::new(129, 1.5).unwrap();
        let s = sphere_stereo(1.0).unwrap();
        let a = evaluate_bundle(&s, &c, DerivativeSource::Analytic).unwrap();
        assert!(interior_max(&a.h_avg, |h| h.abs() - 1.0) < 1e-12);
        assert!(interior_max(&a.k, |k| k - 1.0) < 1e-12);
        assert!(a.a0sq.norms().unwrap().max < 1e-12);
        assert!(a.orientation_defect().unwrap().norms().unwrap().max < 1e-10);
        let fd = evaluate_bundle(&s, &c, DerivativeSource::FiniteDifference).unwrap();
        assert!(interior_max(&fd.k, |k| k - 1.0) < 1e-5);
        assert!(fd.frame_defect().unwrap().norms().unwrap().max < 1e-10);
    }

    #[test]
    fn cylinder_values() {
        let b = evaluate_bundle(
            &cylinder(),
            &cylinder().default_chart(33).unwrap(),
            DerivativeSource::Analytic,
        )
        .unwrap();
        assert_eq!(b.k.norms().unwrap().max, 0.0);
        assert!(interior_max(&b.h_avg, |h| h.abs() - 0.5) < 1e-15);
        assert!(interior_max(&b.a0sq, |a| a - 0.5) < 1e-15);
        let el = el_residual_flat(&b).unwrap();
        assert!(interior_max(&el, |e| e.abs() - 0.25) < 1e-12);
    }

    #[test]
    fn h_conventions_agree() {
        let b = evaluate_bundle(
            &willmore_torus(),
            &willmore_torus().default_chart(33).unwrap(),
            DerivativeSource::Analytic,
        )
        .unwrap();
        assert_eq!(b.h_tr, b.h_avg.scale(2.0));
        assert!(b.h12_asymmetry.norms().unwrap().max < 1e-12);
    }

    #[test]
    fn non_conformal_input_is_rejected() {
        let imm = AnalyticImmersion::from_kind(crate::surfaces::SurfaceKind::StretchedPlane {
            factor: 1.1,
        })
        .unwrap();
        let c = imm.default_chart(17).unwrap();
        assert!(matches!(
            evaluate_bundle(&imm, &c, DerivativeSource::Analytic),
            Err(Error::NotConformal { .. })
        ));
    }
}
