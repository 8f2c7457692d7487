//! The conserved current of the Willmore equation and its potentials.
//!
//! On a conformal chart with normal `n` and mean curvature `H` (average
//! convention) the field `T = H∇n - 2∇H n - H n∧∇⊥n` satisfies
//! `div T = -2e^{2λ}(Δ_g H + 2H(H² - K)) n` for every immersion, so it is
//! divergence free exactly on Willmore surfaces. There `T = ∇⊥L`, and the
//! fields `L·∇Φ` and `∇Φ∧L - 2H∇Φ` are gradients of potentials `S` and `R`.

use serde::{Deserialize, Serialize};

use crate::chart::{
    dot, field_wedge_slots, grad, laplacian_flat, scalar_dot, slots_times_field, slots_wedge_field,
    wedge_slots, Axis, ChartGrad3, ChartScalar, ChartVec3, Field, Grad, NodeValue, Norms,
};
use crate::error::{Error, Result};
use crate::geometry::{el_residual_flat, GeometryBundle};
use crate::quadrature::cumulative_integral;
use crate::report::ResidualNorms;

/// `2K n + e^{-2λ} ∇n∧∇⊥n`.
pub fn gauss_wedge_residual(bundle: &GeometryBundle) -> Result<ChartVec3> {
    let w = wedge_slots(&bundle.dn, &bundle.dn.perp())?;
    let scaled = w.zip(&bundle.lambda, |v, l| v * (-2.0 * l).exp())?;
    bundle
        .n
        .zip(&bundle.k, |n, k| n * (2.0 * k))?
        .add(&scaled)
}

/// `∇n + n∧∇⊥n + 2H∇Φ`, slot by slot.
pub fn help_wedge_residual(bundle: &GeometryBundle) -> Result<ChartGrad3> {
    let nw = field_wedge_slots(&bundle.n, &bundle.dn.perp())?;
    let hphi = bundle.dphi.times(&bundle.h_avg)?.scale(2.0);
    bundle.dn.add(&nw)?.add(&hphi)
}

/// `T = H∇n - 2∇H n - H n∧∇⊥n`.
pub fn conserved_field(bundle: &GeometryBundle) -> Result<ChartGrad3> {
    let h = &bundle.h_avg;
    let dh = bundle.grad_h()?;
    let first = bundle.dn.times(h)?;
    let second = slots_times_field(&dh, &bundle.n)?.scale(2.0);
    let third = field_wedge_slots(&bundle.n, &bundle.dn.perp())?.times(h)?;
    first.sub(&second)?.sub(&third)
}

/// `div T` and `div T + 2e^{2λ}(Δ_g H + 2H(H² - K)) n`.
pub fn conservation_residual(bundle: &GeometryBundle) -> Result<(ChartVec3, ChartVec3)> {
    let div_t = conserved_field(bundle)?.divergence()?;
    let el = el_residual_flat(bundle)?;
    let source = bundle
        .n
        .times(&el)?
        .times(&bundle.area_factor())?
        .scale(2.0);
    let generalized = div_t.add(&source)?;
    Ok((div_t, generalized))
}

/// Result of integrating `∇⊥P = F`.
#[derive(Clone, Debug)]
pub struct Potential<V> {
    pub field: Field<V>,
    /// Largest difference between the x-then-y and y-then-x path integrals.
    pub defect: f64,
}

/// Solves `∇⊥P = F` (`∂_x P = F_y`, `∂_y P = -F_x`) by fourth-order line
/// integration along chart rows and columns, normalized so `P(base) = 0`.
///
/// Both paths start at the corner of the region where `F` is defined, so
/// moving the base node changes `P` by a constant only.
pub fn reconstruct_potential<V: NodeValue>(f: &Grad<V>, base: (usize, usize)) -> Result<Potential<V>> {
    let chart = *f.chart();
    if chart.is_periodic(Axis::X) || chart.is_periodic(Axis::Y) {
        return Err(Error::InvalidChart(
            "potentials need a bounded, simply connected chart".into(),
        ));
    }
    let n = chart.n();
    let layers = [
        f.x.invalid_layers()[0].max(f.y.invalid_layers()[0]),
        f.x.invalid_layers()[1].max(f.y.invalid_layers()[1]),
    ];
    let (lo_x, hi_x) = (layers[0], n - 1 - layers[0]);
    let (lo_y, hi_y) = (layers[1], n - 1 - layers[1]);
    if hi_x < lo_x + 3 || hi_y < lo_y + 3 {
        return Err(Error::StencilTooWide("no room for line integration".into()));
    }
    let (bi, bj) = base;
    if bi < lo_x.max(chart.margin()) || bi > hi_x.min(n - 1 - chart.margin())
        || bj < lo_y.max(chart.margin()) || bj > hi_y.min(n - 1 - chart.margin())
    {
        return Err(Error::RegionOutside(format!("base node ({bi}, {bj})")));
    }
    let (hx, hy) = (chart.h(Axis::X), chart.h(Axis::Y));
    let row = |j: usize| -> Vec<V> {
        let line: Vec<V> = (lo_x..=hi_x).map(|i| f.y.at(i, j)).collect();
        cumulative_integral(&line, hx)
    };
    let col = |i: usize| -> Vec<V> {
        let line: Vec<V> = (lo_y..=hi_y).map(|j| -f.x.at(i, j)).collect();
        cumulative_integral(&line, hy)
    };

    let mut along_x = vec![V::nan(); n * n];
    let mut along_y = vec![V::nan(); n * n];
    // x then y: along the bottom row, then up each column
    let bottom = row(lo_y);
    for i in lo_x..=hi_x {
        let c = col(i);
        for j in lo_y..=hi_y {
            along_x[chart.index(i, j)] = bottom[i - lo_x] + c[j - lo_y];
        }
    }
    // y then x: up the left column, then along each row
    let left = col(lo_x);
    for j in lo_y..=hi_y {
        let r = row(j);
        for i in lo_x..=hi_x {
            along_y[chart.index(i, j)] = left[j - lo_y] + r[i - lo_x];
        }
    }

    let mut defect: f64 = 0.0;
    for j in lo_y..=hi_y {
        for i in lo_x..=hi_x {
            let k = chart.index(i, j);
            defect = defect.max((along_x[k] - along_y[k]).magnitude());
        }
    }
    let offset = along_x[chart.index(bi, bj)];
    for v in along_x.iter_mut() {
        *v = *v - offset;
    }
    Ok(Potential {
        field: Field::from_vec(&chart, along_x)?.with_layers(layers),
        defect,
    })
}

/// Integrates a gradient field `G = ∇P`.
pub fn integrate_gradient<V: NodeValue>(g: &Grad<V>, base: (usize, usize)) -> Result<Potential<V>> {
    reconstruct_potential(&g.perp(), base)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialOptions {
    /// `‖div T‖` may exceed the generalized residual by at most this factor
    /// (plus `absolute_floor`) before the input counts as non-Willmore.
    pub willmore_factor: f64,
    /// Curl defect of the `S`/`R` generators relative to their max norm.
    pub curl_tolerance: f64,
    pub absolute_floor: f64,
}

impl Default for PotentialOptions {
    fn default() -> Self {
        Self {
            willmore_factor: 10.0,
            curl_tolerance: 1e-3,
            absolute_floor: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PotentialSet {
    pub t: ChartGrad3,
    pub l: ChartVec3,
    pub s: ChartScalar,
    pub r: ChartVec3,
    pub base: (usize, usize),
    pub l_defect: f64,
    pub s_defect: f64,
    pub r_defect: f64,
    pub s_curl: Norms,
    pub r_curl: Norms,
}

/// `(L·Φ_x, L·Φ_y)`.
pub fn s_generator(l: &ChartVec3, bundle: &GeometryBundle) -> Result<Grad<f64>> {
    Ok(Grad {
        x: l.zip(&bundle.dphi.x, |l, p| l.dot(&p))?,
        y: l.zip(&bundle.dphi.y, |l, p| l.dot(&p))?,
    })
}

/// `(Φ_x∧L - 2HΦ_x, Φ_y∧L - 2HΦ_y)`.
pub fn r_generator(l: &ChartVec3, bundle: &GeometryBundle) -> Result<ChartGrad3> {
    slots_wedge_field(&bundle.dphi, l)?.sub(&bundle.dphi.times(&bundle.h_avg)?.scale(2.0))
}

pub fn build_potentials(bundle: &GeometryBundle, opts: &PotentialOptions) -> Result<PotentialSet> {
    let chart = *bundle.chart();
    let base = chart.center_node();
    let t = conserved_field(bundle)?;
    let (div_t, generalized) = conservation_residual(bundle)?;
    let (dt, gen) = (div_t.norms()?.max, generalized.norms()?.max);
    let allowed = opts.willmore_factor * gen + opts.absolute_floor;
    if dt > allowed {
        return Err(Error::CurlDefect {
            field: "T",
            defect: dt,
            tolerance: allowed,
        });
    }
    let l = reconstruct_potential(&t, base)?;

    let gs = s_generator(&l.field, bundle)?;
    let gr = r_generator(&l.field, bundle)?;
    let s_curl = gs.curl()?.norms()?;
    let r_curl = gr.curl()?.norms()?;
    let check = |name: &'static str, curl: &Norms, scale: f64| -> Result<()> {
        let tol = opts.curl_tolerance * scale + opts.absolute_floor;
        if curl.max > tol {
            Err(Error::CurlDefect {
                field: name,
                defect: curl.max,
                tolerance: tol,
            })
        } else {
            Ok(())
        }
    };
    check("S generator", &s_curl, gs.norms()?.max)?;
    check("R generator", &r_curl, gr.norms()?.max)?;

    let s = integrate_gradient(&gs, base)?;
    let r = integrate_gradient(&gr, base)?;
    Ok(PotentialSet {
        t,
        l: l.field,
        s: s.field,
        r: r.field,
        base,
        l_defect: l.defect,
        s_defect: s.defect,
        r_defect: r.defect,
        s_curl,
        r_curl,
    })
}

/// `∇⊥L·∇Φ` and `∇Φ∧∇⊥L - 2∇⊥H·∇Φ` with `∇⊥L` from differences of `L`.
pub fn cons2_residuals(set: &PotentialSet, bundle: &GeometryBundle) -> Result<(ChartScalar, ChartVec3)> {
    let perp_l = grad(&set.l)?.perp();
    let a = dot(&perp_l, &bundle.dphi)?;
    let perp_h = bundle.grad_h()?.perp();
    let b = wedge_slots(&bundle.dphi, &perp_l)?.sub(&scalar_dot(&perp_h, &bundle.dphi)?.scale(2.0))?;
    Ok((a, b))
}

/// `∇⊥R - (∇S n + ∇R∧n)` and `ΔR - ∇S·∇⊥n - ∇R∧∇⊥n`.
pub fn rs_residuals(set: &PotentialSet, bundle: &GeometryBundle) -> Result<(ChartGrad3, ChartVec3)> {
    rs_residuals_from(&grad(&set.s)?, &grad(&set.r)?, &laplacian_flat(&set.r)?, bundle)
}

/// Same residuals from given `∇S`, `∇R` and `ΔR`, e.g. closed forms.
pub fn rs_residuals_from(
    ds: &Grad<f64>,
    dr: &ChartGrad3,
    lap_r: &ChartVec3,
    bundle: &GeometryBundle,
) -> Result<(ChartGrad3, ChartVec3)> {
    let first = dr
        .perp()
        .sub(&slots_times_field(ds, &bundle.n)?.add(&slots_wedge_field(dr, &bundle.n)?)?)?;
    let perp_n = bundle.dn.perp();
    let second = lap_r
        .sub(&scalar_dot(ds, &perp_n)?)?
        .sub(&wedge_slots(dr, &perp_n)?)?;
    Ok((first, second))
}

/// Norms of every conservation-law residual for one bundle.
pub fn conservation_norms(bundle: &GeometryBundle) -> Result<Vec<ResidualNorms>> {
    let (div_t, generalized) = conservation_residual(bundle)?;
    Ok(vec![
        ResidualNorms::new("gauss_wedge", gauss_wedge_residual(bundle)?.norms()?),
        ResidualNorms::new("help_wedge", help_wedge_residual(bundle)?.norms()?),
        ResidualNorms::new("div_t", div_t.norms()?),
        ResidualNorms::new("generalized_conservation", generalized.norms()?),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{grad_perp, Chart};
    use crate::geometry::{evaluate_bundle, DerivativeSource};
    use crate::surfaces::{catenoid, plane, sphere_stereo};

    #[test]
    fn plane_residuals_vanish() {
        let c = Chart::new(65, 1.0).unwrap();
        let b = evaluate_bundle(&plane(), &c, DerivativeSource::FiniteDifference).unwrap();
        for r in conservation_norms(&b).unwrap() {
            assert_eq!(r.norms.max, 0.0, "{}", r.name);
        }
        let set = build_potentials(&b, &PotentialOptions::default()).unwrap();
        assert_eq!(set.l.norms().unwrap().max, 0.0);
        assert_eq!(set.s.norms().unwrap().max, 0.0);
        assert_eq!(set.r.norms().unwrap().max, 0.0);
    }

    #[test]
    fn sphere_has_vanishing_current() {
        let c = Chart::new(65, 1.5).unwrap();
        let b = evaluate_bundle(&sphere_stereo(1.0).unwrap(), &c, DerivativeSource::Analytic).unwrap();
        assert!(conserved_field(&b).unwrap().norms().unwrap().max < 1e-10);
        assert!(help_wedge_residual(&b).unwrap().norms().unwrap().max < 1e-10);
    }

    #[test]
    fn sphere_closed_form_potentials_close() {
        let c = Chart::new(65, 1.5).unwrap();
        let b = evaluate_bundle(&sphere_stereo(1.0).unwrap(), &c, DerivativeSource::Analytic).unwrap();
        let ds = Grad {
            x: ChartScalar::constant(&c, 0.0),
            y: ChartScalar::constant(&c, 0.0),
        };
        let dr = b.dphi.times(&b.h_avg).unwrap().scale(-2.0);
        let lap_r = b.lap_phi.times(&b.h_avg).unwrap().scale(-2.0);
        let (first, second) = rs_residuals_from(&ds, &dr, &lap_r, &b).unwrap();
        assert!(first.norms().unwrap().max < 1e-12);
        assert!(second.norms().unwrap().max < 1e-12);
    }

    #[test]
    fn catenoid_current_is_round_off() {
        let c = catenoid().patch_chart(33).unwrap();
        let b = evaluate_bundle(&catenoid(), &c, DerivativeSource::Analytic).unwrap();
        let (div_t, _) = conservation_residual(&b).unwrap();
        assert!(div_t.norms().unwrap().max < 1e-10);
    }

    #[test]
    fn reconstructs_rotated_gradient() {
        let c = Chart::new(129, 1.0).unwrap();
        let f = ChartScalar::sample(&c, |x, y| x.sin() * y.cos());
        let exact = Grad {
            x: ChartScalar::sample(&c, |x, y| x.sin() * y.sin()),
            y: ChartScalar::sample(&c, |x, y| x.cos() * y.cos()),
        };
        let p = reconstruct_potential(&exact, c.center_node()).unwrap();
        assert!(p.defect < 1e-8, "{}", p.defect);
        let diff = p.field.sub(&f).unwrap();
        let d0 = diff.at(10, 10);
        assert!(diff.map(|v| v - d0).norms().unwrap().max < 1e-8);
        // the discrete rotated gradient also integrates back
        let q = reconstruct_potential(&grad_perp(&f).unwrap(), c.center_node()).unwrap();
        assert!(q.field.is_valid_node(2, 2) && !q.field.is_valid_node(1, 1));
    }

    #[test]
    fn zero_field_gives_zero_potential() {
        let c = Chart::new(17, 1.0).unwrap();
        let z = Grad {
            x: ChartScalar::constant(&c, 0.0),
            y: ChartScalar::constant(&c, 0.0),
        };
        let p = reconstruct_potential(&z, c.center_node()).unwrap();
        assert_eq!(p.defect, 0.0);
        assert_eq!(p.field.norms().unwrap().max, 0.0);
    }

    #[test]
    fn base_outside_interior_is_rejected() {
        let c = Chart::new(17, 1.0).unwrap();
        let z = Grad {
            x: ChartScalar::constant(&c, 0.0),
            y: ChartScalar::constant(&c, 0.0),
        };
        assert!(reconstruct_potential(&z, (0, 8)).is_err());
        let periodic = Chart::with_periodicity(17, 1.0, [true, false]).unwrap();
        let zp = Grad {
            x: ChartScalar::constant(&periodic, 0.0),
            y: ChartScalar::constant(&periodic, 0.0),
        };
        assert!(reconstruct_potential(&zp, (8, 8)).is_err());
    }
}
