//! Area-constrained Willmore descent over radial shapes.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DVector, Matrix2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambient::metric::AmbientMetric;
use crate::chart::Vec3;
use crate::error::{Error, Result};
use crate::geometry::ambient_surface::{self, surface_point, SurfacePoint};
use crate::surfaces::{harmonic_count, HarmonicBasis, RadialShape, SphereGrid};

/// Slack of the runtime Willmore-inequality assertion in a flat ambient.
pub const WILLMORE_FLOOR_SLACK: f64 = 1e-6;

/// `(W, |Σ|)` of a shape; in a flat ambient also asserts `W ≥ 8π - 1e-6`.
pub fn energy_area(shape: &RadialShape, grid: &SphereGrid, g: &AmbientMetric) -> Result<(f64, f64)> {
    let samples = shape.sample(grid)?;
    let (w, a) = ambient_surface::energy_area(&samples, g)?;
    if g.is_flat() && w < 8.0 * PI - WILLMORE_FLOOR_SLACK {
        return Err(Error::Hypothesis(format!(
            "flat energy {w:.12} below 8π; quadrature too coarse for the shape"
        )));
    }
    Ok((w, a))
}

/// Relative resolution of quadrature energies.
const ENERGY_RESOLUTION: f64 = 1e-12;

/// Layout of the descent variables: harmonic coefficients, then center,
/// then base radius.
pub fn parameters(shape: &RadialShape) -> DVector<f64> {
    let mut p = DVector::zeros(shape.coeffs.len() + 4);
    let k = shape.coeffs.len();
    p.rows_mut(0, k).copy_from_slice(&shape.coeffs);
    for i in 0..3 {
        p[k + i] = shape.center[i];
    }
    p[k + 3] = shape.radius;
    p
}

pub fn from_parameters(p: &DVector<f64>) -> RadialShape {
    let k = p.len() - 4;
    RadialShape {
        coeffs: p.rows(0, k).iter().copied().collect(),
        center: Vec3::new(p[k], p[k + 1], p[k + 2]),
        radius: p[k + 3],
    }
}

/// Coefficient-space gradients of energy and area.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeGradient {
    pub w: DVector<f64>,
    pub a: DVector<f64>,
}

/// Central differences; harmonic coefficients use step `step`, lengths
/// use `step · R`.
pub fn gradient(shape: &RadialShape, grid: &SphereGrid, g: &AmbientMetric, step: f64) -> Result<ShapeGradient> {
    let p = parameters(shape);
    let k = shape.coeffs.len();
    let cols: Vec<(f64, f64)> = (0..p.len())
        .into_par_iter()
        .map(|i| {
            let h = if i < k { step } else { step * shape.radius };
            let mut plus = p.clone();
            plus[i] += h;
            let mut minus = p.clone();
            minus[i] -= h;
            let (wp, ap) = energy_area(&from_parameters(&plus), grid, g)?;
            let (wm, am) = energy_area(&from_parameters(&minus), grid, g)?;
            Ok(((wp - wm) / (2.0 * h), (ap - am) / (2.0 * h)))
        })
        .collect::<Result<_>>()?;
    Ok(ShapeGradient {
        w: DVector::from_iterator(cols.len(), cols.iter().map(|c| c.0)),
        a: DVector::from_iterator(cols.len(), cols.iter().map(|c| c.1)),
    })
}

/// Least-squares multiplier `⟨∇W, ∇A⟩ / |∇A|²`.
pub fn lagrange_estimate(grad: &ShapeGradient) -> Result<f64> {
    let aa = grad.a.norm_squared();
    if !(aa > 1e-300) {
        return Err(Error::Degenerate("area gradient vanishes".into()));
    }
    Ok(grad.w.dot(&grad.a) / aa)
}

/// `∇W - λ̂∇A` for the least-squares multiplier.
pub fn kkt_residual(grad: &ShapeGradient) -> Result<(f64, DVector<f64>)> {
    let lambda = lagrange_estimate(grad)?;
    Ok((lambda, &grad.w - lambda * &grad.a))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizeOptions {
    pub lmax: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub max_iterations: usize,
    /// Stop when `|∇W - λ̂∇A| ≤ tolerance`.
    pub tolerance: f64,
    pub fd_step: f64,
    pub initial_step: f64,
    pub max_halvings: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            lmax: 4,
            n_theta: 24,
            n_phi: 48,
            max_iterations: 400,
            tolerance: 1e-5,
            fd_step: 1e-5,
            initial_step: 1e-2,
            max_halvings: 40,
        }
    }
}

impl MinimizeOptions {
    pub fn grid(&self) -> Result<SphereGrid> {
        SphereGrid::new(self.n_theta, self.n_phi, self.lmax)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: f64,
    pub area: f64,
    pub lambda: f64,
    pub residual: f64,
    pub center: Vec3,
    pub step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No step decreases `W` by more than its round-off.
    Stalled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentTrace {
    pub rows: Vec<TraceRow>,
    pub termination: Termination,
    pub target_area: f64,
}

impl DescentTrace {
    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("trace has an initial row")
    }

    /// Largest relative deviation of the area from the target.
    pub fn max_area_defect(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.area - self.target_area).abs() / self.target_area)
            .fold(0.0, f64::max)
    }

    /// True when the energy never increased between accepted iterates.
    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].energy <= w[0].energy)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "W", "area", "lambda", "kkt_residual", "cx", "cy", "cz", "step"])?;
        for r in &self.rows {
            w.write_record([
                r.iteration.to_string(),
                r.energy.to_string(),
                r.area.to_string(),
                r.lambda.to_string(),
                r.residual.to_string(),
                r.center.x.to_string(),
                r.center.y.to_string(),
                r.center.z.to_string(),
                r.step.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Folds the constant harmonic into the base radius; the surface is
/// unchanged.
fn normalize_gauge(shape: &mut RadialShape) -> Result<()> {
    if shape.coeffs.is_empty() {
        return Ok(());
    }
    let y00 = 0.5 / PI.sqrt();
    let s = 1.0 + shape.coeffs[0] * y00;
    if !(s > 0.0) {
        return Err(Error::InvalidShape("mean radius is not positive".into()));
    }
    shape.radius *= s;
    shape.coeffs[0] = 0.0;
    for c in shape.coeffs.iter_mut().skip(1) {
        *c /= s;
    }
    Ok(())
}

/// Rescales the base radius so the area equals `target`; returns the area.
pub fn restore_area(shape: &mut RadialShape, target: f64, grid: &SphereGrid, g: &AmbientMetric) -> Result<f64> {
    let area_of = |s: &RadialShape| ambient_surface::area(&s.sample(grid)?, g);
    let a0 = area_of(shape)?;
    let base = shape.radius;
    // flat areas scale quadratically, which is also the starting guess
    let guess = (target / a0).sqrt();
    let mut trial = shape.clone();
    trial.radius = base * guess;
    let a1 = area_of(&trial)?;
    if (a1 - target).abs() <= 1e-13 * target {
        *shape = trial;
        return Ok(a1);
    }
    let (mut lo, mut hi) = if a1 < target { (guess, guess * 1.01) } else { (guess * 0.99, guess) };
    let at = |s: f64| {
        let mut t = shape.clone();
        t.radius = base * s;
        area_of(&t)
    };
    let mut widen = 0;
    while at(lo)? > target || at(hi)? < target {
        widen += 1;
        if widen > 60 {
            return Err(Error::Degenerate("area is not monotone in the base radius".into()));
        }
        lo *= 0.9;
        hi *= 1.1;
    }
    let mut best = (hi, at(hi)?);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let am = at(mid)?;
        best = (mid, am);
        if (am - target).abs() <= 1e-14 * target || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        if am < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    shape.radius = base * best.0;
    Ok(best.1)
}

/// Projected gradient descent along `-(∇W - λ̂∇A)` with area restoration
/// after every step and a backtracking line search on `W`.
pub fn minimize(
    shape0: &RadialShape,
    target_area: f64,
    g: &AmbientMetric,
    opts: &MinimizeOptions,
) -> Result<(RadialShape, DescentTrace)> {
    if !(target_area > 0.0) {
        return Err(Error::InvalidParameter(format!("target area {target_area}")));
    }
    let grid = opts.grid()?;
    let mut shape = shape0.clone();
    if shape.coeffs.len() < harmonic_count(opts.lmax) {
        shape.coeffs.resize(harmonic_count(opts.lmax), 0.0);
    }
    shape.validate()?;
    normalize_gauge(&mut shape)?;
    let mut area = restore_area(&mut shape, target_area, &grid, g)?;
    let mut energy = energy_area(&shape, &grid, g)?.0;
    let mut rows = Vec::new();
    let mut step = opts.initial_step;
    let mut termination = Termination::MaxIterations;
    for iteration in 0..=opts.max_iterations {
        let grad = gradient(&shape, &grid, g, opts.fd_step)?;
        let (lambda, dir) = kkt_residual(&grad)?;
        let residual = dir.norm();
        rows.push(TraceRow {
            iteration,
            energy,
            area,
            lambda,
            residual,
            center: shape.center,
            step,
        });
        if residual <= opts.tolerance {
            termination = Termination::Converged;
            break;
        }
        if iteration == opts.max_iterations {
            break;
        }
        let p = parameters(&shape);
        let mut accepted = None;
        let mut alpha = step * 2.0;
        for _ in 0..opts.max_halvings {
            let mut trial = from_parameters(&(&p - alpha * &dir));
            let outcome = normalize_gauge(&mut trial)
                .and_then(|_| restore_area(&mut trial, target_area, &grid, g))
                .and_then(|a| Ok((a, energy_area(&trial, &grid, g)?.0)));
            if let Ok((a, w)) = outcome {
                if w < energy - 1e-4 * alpha * residual * residual {
                    accepted = Some((trial, a, w));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((s, a, w)) => {
                shape = s;
                area = a;
                energy = w;
                step = alpha;
            }
            None => {
                // the predicted decrease is below the resolution of W
                if 2.0 * step * residual * residual < ENERGY_RESOLUTION * energy.abs() {
                    termination = Termination::Stalled;
                    break;
                }
                return Err(Error::LineSearch(opts.max_halvings));
            }
        }
    }
    Ok((
        shape,
        DescentTrace {
            rows,
            termination,
            target_area,
        },
    ))
}

/// Curvature quantities of a converged shape.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    /// `∫|∇²H|² + H²|∇H|² + H⁴|Å|² dμ`.
    pub curvature_functional: f64,
    /// `‖Å‖_{L²}`.
    pub traceless_l2: f64,
    /// `‖H - 2/R‖_∞` with `4πR² = |Σ|`.
    pub mean_curvature_deviation: f64,
    pub min_mean_curvature: f64,
    pub area: f64,
    pub energy: f64,
}

impl EstimateReport {
    pub fn positive_mean_curvature(&self) -> bool {
        self.min_mean_curvature > 0.0
    }
}

/// Step of the `(θ, φ)` differences of `H`.
const ESTIMATE_STEP: f64 = 1e-3;

/// Induced-metric derivatives `∂_k ḡ_ij` from the sample jets.
fn metric_derivatives(
    s: &crate::surfaces::SurfaceSample,
    g: &AmbientMetric,
) -> [Matrix2<f64>; 2] {
    let jet = g.jet(&s.f);
    let t = [s.f_u, s.f_v];
    let tt = [[s.f_uu, s.f_uv], [s.f_uv, s.f_vv]];
    let mut out = [Matrix2::zeros(); 2];
    for (k, m) in out.iter_mut().enumerate() {
        // ∂g along F_k
        let mut dg = nalgebra::Matrix3::zeros();
        for c in 0..3 {
            dg += jet.dg[c] * t[k][c];
        }
        *m = Matrix2::from_fn(|i, j| {
            (t[i].transpose() * dg * t[j])[0]
                + (tt[k][i].transpose() * jet.g * t[j])[0]
                + (t[i].transpose() * jet.g * tt[k][j])[0]
        });
    }
    out
}

pub fn estimate_report(shape: &RadialShape, grid: &SphereGrid, g: &AmbientMetric) -> Result<EstimateReport> {
    let basis = HarmonicBasis::new(shape.lmax())?;
    let point_at = |theta: f64, phi: f64| -> Result<SurfacePoint> {
        let s = shape.sample_at(&basis, theta, phi)?;
        let jet = g.jet(&s.f);
        let gamma = jet.christoffel()?;
        surface_point(&s, &jet, Some(&gamma))
    };
    let samples = shape.sample(grid)?;
    let pts = ambient_surface::mean_curvature_ambient(&samples, g)?;
    let area: f64 = pts.iter().map(|p| p.dmu).sum();
    let energy: f64 = pts.iter().map(|p| 0.5 * p.h * p.h * p.dmu).sum();
    let r_area = (area / (4.0 * PI)).sqrt();
    let d = ESTIMATE_STEP;
    let densities: Vec<(f64, f64)> = grid
        .points()
        .par_iter()
        .zip(samples.par_iter())
        .zip(pts.par_iter())
        .map(|((gp, s), p)| {
            let (t, f) = (gp.theta, gp.phi);
            let h = |dt: f64, df: f64| point_at(t + dt, f + df).map(|q| q.h);
            let (hp0, hm0, h0p, h0m) = (h(d, 0.0)?, h(-d, 0.0)?, h(0.0, d)?, h(0.0, -d)?);
            let dh = [(hp0 - hm0) / (2.0 * d), (h0p - h0m) / (2.0 * d)];
            let huu = (hp0 - 2.0 * p.h + hm0) / (d * d);
            let hvv = (h0p - 2.0 * p.h + h0m) / (d * d);
            let huv = (h(d, d)? - h(d, -d)? - h(-d, d)? + h(-d, -d)?) / (4.0 * d * d);
            let dgm = metric_derivatives(s, g);
            let gi = p.inverse;
            // Γ^k_ij of the induced metric
            let gamma = |k: usize, i: usize, j: usize| {
                (0..2)
                    .map(|l| 0.5 * gi[(k, l)] * (dgm[i][(j, l)] + dgm[j][(i, l)] - dgm[l][(i, j)]))
                    .sum::<f64>()
            };
            let second = Matrix2::new(huu, huv, huv, hvv);
            let hess = Matrix2::from_fn(|i, j| second[(i, j)] - (0..2).map(|k| gamma(k, i, j) * dh[k]).sum::<f64>());
            // |∇²H|² = ḡ^{ik}ḡ^{jl} H_ij H_kl
            let hess_sq = (gi * hess * gi).component_mul(&hess).sum();
            let grad_sq = (0..2).map(|i| (0..2).map(|j| gi[(i, j)] * dh[i] * dh[j]).sum::<f64>()).sum::<f64>();
            let a0 = p.a0_sq().max(0.0);
            let dens = hess_sq + p.h * p.h * grad_sq + p.h.powi(4) * a0;
            Ok((dens * p.dmu, a0 * p.dmu))
        })
        .collect::<Result<_>>()?;
    Ok(EstimateReport {
        curvature_functional: densities.iter().map(|d| d.0).sum(),
        traceless_l2: densities.iter().map(|d| d.1).sum::<f64>().sqrt(),
        mean_curvature_deviation: pts.iter().fold(0.0, |m, p| m.max((p.h - 2.0 / r_area).abs())),
        min_mean_curvature: pts.iter().fold(f64::INFINITY, |m, p| m.min(p.h)),
        area,
        energy,
    })
}
