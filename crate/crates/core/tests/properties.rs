use std::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3, Unit};
use proptest::prelude::*;
use willmore_core::ambient::{
    adjust_area, radius_window, scaling_flow, sphere_energy_sweep, AmbientMetric, Riemann3,
};
use willmore_core::analysis::{bochner_check, stability_check_shape, BumpFunction, SphereBump};
use willmore_core::chart::{grad, grad_perp, Axis, Chart, ChartScalar, Region};
use willmore_core::conservation::{conserved_field, reconstruct_potential};
use willmore_core::geometry::ambient_surface::{area, energy_area, willmore_energy};
use willmore_core::geometry::{evaluate_bundle, DerivativeSource};
use willmore_core::minimize::minimize;
use willmore_core::minimize::MinimizeOptions;
use willmore_core::surfaces::{
    catenoid, cylinder, harmonic_count, plane, sphere_stereo, willmore_torus, AnalyticImmersion, RadialShape,
    SphereGrid, SurfaceSample,
};
use willmore_core::Vec3;

fn immersion(k: usize) -> AnalyticImmersion {
    match k % 5 {
        0 => sphere_stereo(1.0).unwrap(),
        1 => cylinder(),
        2 => catenoid(),
        3 => willmore_torus(),
        _ => plane(),
    }
}

fn shape_from(coeffs: &[f64], center: [f64; 3], radius: f64) -> RadialShape {
    let mut s = RadialShape::sphere(Vec3::from(center), radius, 3);
    s.coeffs.resize(harmonic_count(3), 0.0);
    for (c, v) in s.coeffs.iter_mut().skip(1).zip(coeffs) {
        *c = *v;
    }
    s
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.06f64..0.06, harmonic_count(3) - 1)
}

fn max_rel_diff(a: &ChartScalar, b: &ChartScalar) -> f64 {
    let scale = a.norms().unwrap().max.max(b.norms().unwrap().max).max(1e-300);
    a.sub(b).unwrap().norms().unwrap().max / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn derivatives_are_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 0.5f64..2.0) {
        let c = Chart::new(33, 1.0).unwrap();
        let f = ChartScalar::sample(&c, |x, y| (k * x).sin() * y.exp());
        let g = ChartScalar::sample(&c, |x, y| x * x * y - (k * y).cos());
        let comb = f.scale(a).add(&g.scale(b)).unwrap();
        for axis in [Axis::X, Axis::Y] {
            let lhs = comb.derivative(axis).unwrap();
            let rhs = f.derivative(axis).unwrap().scale(a).add(&g.derivative(axis).unwrap().scale(b)).unwrap();
            prop_assert!(max_rel_diff(&lhs, &rhs) < 1e-13);
        }
    }

    #[test]
    fn integration_is_exact_for_constant_densities(c0 in -5.0f64..5.0, k in 0usize..3) {
        let imm = [sphere_stereo(1.0).unwrap(), catenoid(), plane()][k];
        let chart = imm.patch_chart(33).unwrap();
        let b = evaluate_bundle(&imm, &chart, DerivativeSource::Analytic).unwrap();
        let f = b.lambda.map(|l| c0 * (-2.0 * l).exp());
        let e = chart.extent();
        let v = willmore_core::chart::integrate(&f, &b.lambda, Region::Full).unwrap();
        prop_assert!((v - c0 * 4.0 * e * e).abs() <= 1e-12 * (1.0 + c0.abs() * 4.0 * e * e));
    }

    #[test]
    fn immersions_are_conformal(k in 0usize..5, half in 16usize..40) {
        let imm = immersion(k);
        let chart = imm.default_chart(2 * half + 1).unwrap();
        prop_assert!(imm.conformality_defect(&chart) <= 1e-10);
    }

    #[test]
    fn trace_mean_curvature_is_twice_the_average(k in 0usize..5, half in 16usize..40, fd in any::<bool>()) {
        let imm = immersion(k);
        let chart = imm.default_chart(2 * half + 1).unwrap();
        let src = if fd { DerivativeSource::FiniteDifference } else { DerivativeSource::Analytic };
        let b = evaluate_bundle(&imm, &chart, src).unwrap();
        for (t, a) in b.h_tr.values().iter().zip(b.h_avg.values()) {
            prop_assert!(*t == 2.0 * a || (t.is_nan() && a.is_nan()));
        }
    }

    #[test]
    fn willmore_energy_is_euclidean_invariant(
        c in coeffs(),
        shift in prop::array::uniform3(-2.0f64..2.0),
        axis in prop::array::uniform3(-1.0f64..1.0),
        angle in 0.0f64..6.0,
        scale in 0.3f64..3.0,
    ) {
        let grid = SphereGrid::new(24, 48, 3).unwrap();
        let s = shape_from(&c, [0.0; 3], 1.0).sample(&grid).unwrap();
        let g = AmbientMetric::Euclidean;
        let w = willmore_energy(&s, &g).unwrap();
        let axis = Vec3::from(axis);
        prop_assume!(axis.norm() > 0.1);
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
        let t = Vec3::from(shift);
        let moved: Vec<SurfaceSample> = s
            .iter()
            .map(|p| SurfaceSample {
                f: rot * p.f + t,
                f_u: rot * p.f_u,
                f_v: rot * p.f_v,
                f_uu: rot * p.f_uu,
                f_uv: rot * p.f_uv,
                f_vv: rot * p.f_vv,
                weight: p.weight,
            })
            .collect();
        let wm = willmore_energy(&moved, &g).unwrap();
        prop_assert!((wm - w).abs() < 1e-10 * w);
        let scaled = scaling_flow(&s, scale.ln());
        prop_assert!((willmore_energy(&scaled, &g).unwrap() - w).abs() < 1e-8 * w);
        // Willmore inequality at quadrature accuracy
        prop_assert!(w >= 8.0 * PI - 1e-6);
    }

    #[test]
    fn riemann_from_ricci_has_curvature_symmetries(
        d in prop::array::uniform3(-2.0f64..2.0),
        o in prop::array::uniform3(-1.0f64..1.0),
        x in prop::array::uniform3(-0.3f64..0.3),
    ) {
        let ric = Matrix3::new(d[0], o[0], o[1], o[0], d[1], o[2], o[1], o[2], d[2]);
        let r = Riemann3::from_ricci(&ric).unwrap();
        prop_assert!(r.check_symmetries(1e-12).is_ok());
        prop_assert!((r.ricci() - ric).abs().max() < 1e-12);
        // Gauss lemma: g(x) x = x
        let g = AmbientMetric::normal_form(r).unwrap();
        let x = Vec3::from(x);
        let jet = g.jet(&x);
        prop_assert!((jet.g * x - x).norm() < 1e-14);
    }

    #[test]
    fn area_adjustment_respects_its_bound(c in coeffs(), radius in 0.3f64..2.0, ratio in 0.51f64..1.49) {
        let grid = SphereGrid::new(16, 32, 3).unwrap();
        let s = shape_from(&c, [0.0; 3], radius).sample(&grid).unwrap();
        let g = AmbientMetric::Euclidean;
        let a0 = area(&s, &g).unwrap();
        let a = a0 / ratio;
        let adj = adjust_area(&s, a, &g).unwrap();
        prop_assert!(adj.t0.abs() <= 2.0 * (a0 - a).abs() / a);
        prop_assert!((adj.area - a).abs() <= 1e-10 * a);
    }

    #[test]
    fn area_increases_along_the_scaling_flow(c in coeffs(), t1 in -0.5f64..0.5, dt in 1e-3f64..0.5, k in 0.0f64..2.0) {
        let grid = SphereGrid::new(16, 32, 3).unwrap();
        let s = shape_from(&c, [0.0; 3], 0.05).sample(&grid).unwrap();
        let g = AmbientMetric::normal_form(Riemann3::constant_curvature(k)).unwrap();
        let a1 = area(&scaling_flow(&s, t1), &g).unwrap();
        let a2 = area(&scaling_flow(&s, t1 + dt), &g).unwrap();
        prop_assert!(a2 > a1);
    }

    #[test]
    fn potentials_change_by_constants_with_the_base_node(i in 4usize..29, j in 4usize..29) {
        let imm = willmore_torus();
        let chart = imm.patch_chart(33).unwrap();
        let b = evaluate_bundle(&imm, &chart, DerivativeSource::Analytic).unwrap();
        let t = conserved_field(&b).unwrap();
        let p0 = reconstruct_potential(&t, chart.center_node()).unwrap();
        let p1 = reconstruct_potential(&t, (i, j)).unwrap();
        prop_assert!((p0.defect - p1.defect).abs() < 1e-10);
        let diff = p1.field.sub(&p0.field).unwrap();
        let (ci, cj) = chart.center_node();
        let offset = diff.at(ci, cj);
        let spread = diff.map(|v| (v - offset).norm()).norms().unwrap().max;
        prop_assert!(spread < 1e-10);
    }

    #[test]
    fn bochner_and_stability_are_quadratic_in_the_bump(s in 0.1f64..5.0, cx in -0.3f64..0.3, cy in -0.3f64..0.3) {
        let imm = sphere_stereo(1.0).unwrap();
        let chart = imm.default_chart(65).unwrap();
        let b = evaluate_bundle(&imm, &chart, DerivativeSource::Analytic).unwrap();
        let g = AmbientMetric::Euclidean;
        let f = BumpFunction::new(cx, cy, 0.5, 4).unwrap();
        let r1 = bochner_check(&f, &b, &g).unwrap();
        let r2 = bochner_check(&f.scaled(s), &b, &g).unwrap();
        prop_assert!((r2.lhs - s * s * r1.lhs).abs() <= 1e-12 * r2.lhs.abs().max(1.0));
        prop_assert!((r2.rhs - s * s * r1.rhs).abs() <= 1e-12 * r2.rhs.abs().max(1.0));

        let grid = SphereGrid::new(16, 32, 0).unwrap();
        let round = RadialShape::sphere(Vec3::zeros(), 1.0, 0);
        let bump = SphereBump::new(Vec3::new(cx, cy, 1.0), 0.7, 4).unwrap();
        let m1 = stability_check_shape(&bump, &round, &grid, 0.3, &g).unwrap();
        let m2 = stability_check_shape(&SphereBump { amplitude: s, ..bump }, &round, &grid, 0.3, &g).unwrap();
        prop_assert!((m2.margin - s * s * m1.margin).abs() <= 1e-12 * m2.rhs.max(1.0));
    }

    #[test]
    fn flat_energy_and_area_are_translation_invariant(c in coeffs(), shift in prop::array::uniform3(-3.0f64..3.0)) {
        let grid = SphereGrid::new(16, 32, 3).unwrap();
        let g = AmbientMetric::Euclidean;
        let (w0, a0) = energy_area(&shape_from(&c, [0.0; 3], 1.0).sample(&grid).unwrap(), &g).unwrap();
        let (w1, a1) = energy_area(&shape_from(&c, shift, 1.0).sample(&grid).unwrap(), &g).unwrap();
        prop_assert!((w1 - w0).abs() < 1e-10 * w0);
        prop_assert!((a1 - a0).abs() < 1e-10 * a0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn descent_keeps_area_and_decreases_energy(a20 in -0.12f64..0.12, a31 in -0.05f64..0.05) {
        let opts = MinimizeOptions { max_iterations: 15, ..MinimizeOptions::default() };
        let mut s = RadialShape::sphere(Vec3::zeros(), 1.0, opts.lmax);
        s.coeffs[willmore_core::surfaces::harmonic_index(2, 0)] = a20;
        s.coeffs[willmore_core::surfaces::harmonic_index(3, 1)] = a31;
        let (_, trace) = minimize(&s, 4.0 * PI, &AmbientMetric::Euclidean, &opts).unwrap();
        prop_assert!(trace.max_area_defect() <= 1e-8);
        prop_assert!(trace.monotone());
        for r in &trace.rows {
            prop_assert!(r.energy >= 8.0 * PI - 1e-6);
        }
    }
}

#[test]
fn divergence_of_rotated_gradient_converges_at_fourth_order() {
    let residual = |n: usize| {
        let c = Chart::new(n, 1.0).unwrap();
        let f = ChartScalar::sample(&c, |x, y| x.exp() * y.cos());
        grad_perp(&f).unwrap().divergence().unwrap().norms().unwrap().max
    };
    let (a, b) = (residual(65), residual(129));
    assert!(b < 1e-11 || (a / b).log2() >= 3.5, "{a:e} {b:e}");
    // the rotated gradient of an exact gradient is curl free
    let c = Chart::new(65, 1.0).unwrap();
    let f = ChartScalar::sample(&c, |x, y| (x * y).sin());
    assert!(grad(&f).unwrap().curl().unwrap().norms().unwrap().max < 1e-6);
}

#[test]
fn analytic_second_derivatives_match_differences() {
    let err = |n: usize| {
        let imm = catenoid();
        let c = imm.patch_chart(n).unwrap();
        let a = evaluate_bundle(&imm, &c, DerivativeSource::Analytic).unwrap();
        let fd = evaluate_bundle(&imm, &c, DerivativeSource::FiniteDifference).unwrap();
        a.lap_phi.sub(&fd.lap_phi).unwrap().norms().unwrap().max
    };
    let (a, b) = (err(65), err(129));
    assert!((a / b).log2() >= 3.5, "{a:e} {b:e}");
}

#[test]
fn sweep_fit_improves_on_smaller_windows() {
    let grid = SphereGrid::new(16, 32, 0).unwrap();
    let g = AmbientMetric::normal_form(Riemann3::constant_curvature(1.0)).unwrap();
    let wide = sphere_energy_sweep(&g, &radius_window(0.04, 0.2, 9), &grid).unwrap();
    let narrow = sphere_energy_sweep(&g, &radius_window(0.02, 0.1, 9), &grid).unwrap();
    assert!(narrow.fit_residual < wide.fit_residual);
}
