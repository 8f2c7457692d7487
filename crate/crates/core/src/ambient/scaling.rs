//! Coordinate dilations: area adjustment and scaling variations.

use serde::{Deserialize, Serialize};

use crate::ambient::metric::AmbientMetric;
use crate::error::{Error, Result};
use crate::geometry::ambient_surface::{area, curvature_integral, energy_area};
use crate::surfaces::SurfaceSample;

/// Step of the central differences along the scaling flow.
pub const SCALING_STEP: f64 = 1e-4;

/// Flow of the position field: `x ↦ e^t x`.
pub fn scaling_flow(samples: &[SurfaceSample], t: f64) -> Vec<SurfaceSample> {
    let s = t.exp();
    samples
        .iter()
        .map(|p| SurfaceSample {
            f: s * p.f,
            f_u: s * p.f_u,
            f_v: s * p.f_v,
            f_uu: s * p.f_uu,
            f_uv: s * p.f_uv,
            f_vv: s * p.f_vv,
            weight: p.weight,
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct AreaAdjustment {
    pub t0: f64,
    pub surface: Vec<SurfaceSample>,
    pub area: f64,
    pub initial_area: f64,
    /// `2||Σ| - a| / a`.
    pub bound: f64,
}

/// Finds `t₀` with `|Φ_{t₀}Σ| = a` by bisection on the increasing area
/// function, and checks `|t₀| ≤ 2||Σ| - a|/a`.
pub fn adjust_area(samples: &[SurfaceSample], a: f64, g: &AmbientMetric) -> Result<AreaAdjustment> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("target area {a}")));
    }
    let initial = area(samples, g)?;
    if !(initial > 0.5 * a && initial < 1.5 * a) {
        return Err(Error::AreaBand { area: initial, target: a });
    }
    let bound = 2.0 * (initial - a).abs() / a;
    let area_at = |t: f64| area(&scaling_flow(samples, t), g);
    let (t0, area_t0) = if initial == a {
        (0.0, initial)
    } else {
        // the flat prediction brackets within a factor of two for curvature
        // perturbations that keep the flow inside the validity ball
        let guess = 0.5 * (a / initial).ln();
        let (mut lo, mut hi) = if guess > 0.0 { (0.0, 2.0 * guess) } else { (2.0 * guess, 0.0) };
        let mut a_lo = area_at(lo)?;
        let mut a_hi = area_at(hi)?;
        let mut widen = 0;
        while !(a_lo <= a && a <= a_hi) {
            widen += 1;
            if widen > 40 {
                return Err(Error::Degenerate("area is not monotone along the scaling flow".into()));
            }
            let w = hi - lo;
            if a_lo > a {
                lo -= w;
                a_lo = area_at(lo)?;
            }
            if a_hi < a {
                hi += w;
                a_hi = area_at(hi)?;
            }
        }
        let mut best = (lo, a_lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let am = area_at(mid)?;
            best = (mid, am);
            if (am - a).abs() <= 1e-14 * a || hi - lo <= f64::EPSILON * hi.abs().max(1e-300) {
                break;
            }
            if am < a {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best
    };
    if t0.abs() > bound {
        return Err(Error::Hypothesis(format!(
            "area adjustment time {t0:.6e} exceeds the bound {bound:.6e}"
        )));
    }
    Ok(AreaAdjustment {
        t0,
        surface: scaling_flow(samples, t0),
        area: area_t0,
        initial_area: initial,
        bound,
    })
}

/// `d/dt ∫|A|² dμ` along the scaling flow at `t = 0`.
pub fn scaling_curvature_delta(samples: &[SurfaceSample], g: &AmbientMetric) -> Result<f64> {
    let h = SCALING_STEP;
    let plus = curvature_integral(&scaling_flow(samples, h), g)?;
    let minus = curvature_integral(&scaling_flow(samples, -h), g)?;
    Ok((plus - minus) / (2.0 * h))
}

/// Scaling variations of energy and area and their quotient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingMultiplier {
    pub delta_w: f64,
    pub delta_a: f64,
    pub lambda: f64,
}

/// `δW / δA` along the scaling flow, whose normal speed is `⟨x, ν⟩`.
pub fn estimate_lambda_scaling(samples: &[SurfaceSample], g: &AmbientMetric) -> Result<ScalingMultiplier> {
    let h = SCALING_STEP;
    let (wp, ap) = energy_area(&scaling_flow(samples, h), g)?;
    let (wm, am) = energy_area(&scaling_flow(samples, -h), g)?;
    let delta_w = (wp - wm) / (2.0 * h);
    let delta_a = (ap - am) / (2.0 * h);
    if delta_a.abs() <= 1e-14 * ap.abs().max(am.abs()) {
        return Err(Error::Degenerate("area does not vary along the scaling flow".into()));
    }
    Ok(ScalingMultiplier {
        delta_w,
        delta_a,
        lambda: delta_w / delta_a,
    })
}
