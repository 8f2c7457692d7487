//! The five drivers. Each builds its report and output files in memory.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use willmore_core::ambient::{
    adjust_area, estimate_lambda_scaling, scaling_curvature_delta, simon_checks, sphere_energy_sweep, AmbientMetric,
    Riemann3, SweepFit,
};
use willmore_core::analysis::{bochner_check, stability_check_shape, BumpFunction, SphereBump};
use willmore_core::chart::{CsvDump, Field, Grad};
use willmore_core::conservation::{
    build_potentials, cons2_residuals, conservation_norms, rs_residuals, rs_residuals_from, PotentialOptions,
};
use willmore_core::geometry::ambient_surface::{area, curvature_integral};
use willmore_core::geometry::bundle::bundle_scalars;
use willmore_core::geometry::{chart_willmore_energy, evaluate_bundle, identity_checks, DerivativeSource, GeometryBundle};
use willmore_core::minimize::{estimate_report, minimize, DescentTrace, Termination};
use willmore_core::report::{CheckEntry, ResidualNorms, Rule};
use willmore_core::surfaces::{harmonic_count, harmonic_index, AnalyticImmersion, RadialShape, SphereGrid, SurfaceKind};
use willmore_core::{Chart, Norms, Vec3};

use crate::config::{RunConfig, StartConfig};
use crate::CliError;

/// Named output files, written next to the report.
pub type Files = Vec<(String, Vec<u8>)>;

type Checks = Vec<CheckEntry>;

fn ctx(what: &'static str) -> impl Fn(willmore_core::Error) -> CliError {
    move |source| CliError::Command { what, source }
}

fn scalar_norms(v: f64) -> Norms {
    Norms { max: v, l2: v }
}

fn surface(cfg: &RunConfig) -> Result<AnalyticImmersion, CliError> {
    let imm = AnalyticImmersion::by_name(&cfg.surface.name).map_err(ctx("surface"))?;
    match imm.kind() {
        SurfaceKind::Sphere { .. } => willmore_core::surfaces::sphere_stereo(cfg.surface.radius).map_err(ctx("surface")),
        _ => Ok(imm),
    }
}

fn identity_anchor(name: &str) -> &'static str {
    match name {
        "laplace_phi" => "ΔΦ = 2e^{2λ} H n",
        "mean_curvature" => "H = -½e^{-2λ} ∇n·∇Φ",
        "conformal_metric" => "∇Φ·∇Φ = 2e^{2λ}",
        "wedge_phi" => "∇Φ∧n = ∇⊥Φ",
        "gauss_wedge" => "∇n∧∇⊥n = -2e^{2λ} K n",
        "help_wedge" => "∇n + n∧∇⊥n = -2H∇Φ",
        "div_t" => "div(H∇n - 2∇H n - H n∧∇⊥n) = 0",
        "generalized_conservation" => "div T = -2e^{2λ}(Δ_g H + 2H(H² - K)) n",
        _ => "",
    }
}

/// Regroups per-resolution residual lists by residual name.
fn by_name(per_resolution: Vec<Vec<ResidualNorms>>) -> BTreeMap<String, Vec<Norms>> {
    let mut out: BTreeMap<String, Vec<Norms>> = BTreeMap::new();
    for list in per_resolution {
        for r in list {
            out.entry(r.name).or_default().push(r.norms);
        }
    }
    out
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> willmore_core::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(ctx("csv output"))?;
    Ok(buf)
}

fn dump_bundle(b: &GeometryBundle) -> Result<Vec<u8>, CliError> {
    csv_bytes(|buf| {
        let mut d = CsvDump::new(b.chart()).vec3("phi", &b.phi)?.vec3("n", &b.n)?;
        for (name, f) in bundle_scalars(b) {
            d = d.scalar(name, f)?;
        }
        d.write(buf)
    })
}

pub fn verify(cfg: &RunConfig) -> Result<(Checks, Files), CliError> {
    let imm = surface(cfg)?;
    let charts = cfg
        .resolutions
        .iter()
        .map(|&n| imm.default_chart(n))
        .collect::<willmore_core::Result<Vec<Chart>>>()
        .map_err(ctx("chart"))?;
    let mut checks = Vec::new();
    let mut files = Files::new();

    let mut identity = identity_checks(&imm, &charts, cfg.derivative_source).map_err(ctx("identity suite"))?;
    let suite_bundles = charts
        .iter()
        .map(|c| evaluate_bundle(&imm, c, cfg.derivative_source))
        .collect::<willmore_core::Result<Vec<_>>>()
        .map_err(ctx("bundle"))?;
    for (list, b) in identity.iter_mut().zip(&suite_bundles) {
        let cons = conservation_norms(b).map_err(ctx("wedge identities"))?;
        list.extend(cons.into_iter().filter(|r| r.name == "gauss_wedge" || r.name == "help_wedge"));
    }
    for (name, norms) in by_name(identity) {
        checks.push(CheckEntry::order(&format!("identity.{name}"), identity_anchor(&name), norms, 3.5));
    }

    let analytic = charts
        .iter()
        .map(|c| evaluate_bundle(&imm, c, DerivativeSource::Analytic))
        .collect::<willmore_core::Result<Vec<_>>>()
        .map_err(ctx("bundle"))?;
    let cons = analytic
        .iter()
        .map(conservation_norms)
        .collect::<willmore_core::Result<Vec<_>>>()
        .map_err(ctx("conservation suite"))?;
    let mut cons = by_name(cons);
    let willmore = cfg.expect_willmore.unwrap_or(imm.is_willmore());
    let div_t = cons.remove("div_t").unwrap_or_default();
    checks.push(if willmore {
        CheckEntry::order("conservation.div_t", identity_anchor("div_t"), div_t, 3.5)
    } else {
        CheckEntry::plateau("conservation.div_t", identity_anchor("div_t"), div_t, 1e-3)
    });
    let generalized = cons.remove("generalized_conservation").unwrap_or_default();
    checks.push(CheckEntry::order(
        "conservation.generalized",
        identity_anchor("generalized_conservation"),
        generalized,
        3.5,
    ));

    let finest = analytic.last().expect("at least one resolution");
    if matches!(imm.kind(), SurfaceKind::WillmoreTorus) {
        let w = chart_willmore_energy(finest).map_err(ctx("torus energy"))?;
        checks.push(CheckEntry::scalar(
            "energy.torus",
            "½∫H² dμ = 4π² on the √2 torus",
            w,
            Rule::Near {
                target: 4.0 * PI * PI,
                tol: 1e-6,
                relative: false,
            },
        ));
    }
    if cfg.dump_fields {
        files.push(("bundle.csv".into(), dump_bundle(suite_bundles.last().expect("resolution"))?));
    }
    Ok((checks, files))
}

pub fn potentials(cfg: &RunConfig) -> Result<(Checks, Files), CliError> {
    let imm = surface(cfg)?;
    let umbilic = matches!(imm.kind(), SurfaceKind::Sphere { .. } | SurfaceKind::Plane);
    let opts = PotentialOptions::default();
    let mut checks = Vec::new();
    let mut families: BTreeMap<&'static str, Vec<Norms>> = BTreeMap::new();
    let mut last = None;
    let mut l_max: f64 = 0.0;
    let mut s_max: f64 = 0.0;
    let mut closed_rs: f64 = 0.0;
    for &n in &cfg.resolutions {
        let chart = imm.patch_chart(n).map_err(ctx("chart"))?;
        let b = evaluate_bundle(&imm, &chart, DerivativeSource::Analytic).map_err(ctx("bundle"))?;
        let set = build_potentials(&b, &opts).map_err(ctx("potentials"))?;
        let mut push = |k: &'static str, v: Norms| families.entry(k).or_default().push(v);
        push("l_defect", scalar_norms(set.l_defect));
        push("s_curl", set.s_curl);
        push("r_curl", set.r_curl);
        let (a, bb) = cons2_residuals(&set, &b).map_err(ctx("generator residuals"))?;
        push("cons2a", a.norms().map_err(ctx("norms"))?);
        push("cons2b", bb.norms().map_err(ctx("norms"))?);
        let (rs1, rs2) = rs_residuals(&set, &b).map_err(ctx("potential system"))?;
        push("rs1", rs1.norms().map_err(ctx("norms"))?);
        push("rs2", rs2.norms().map_err(ctx("norms"))?);
        if umbilic {
            // T ≡ 0, so L and S vanish and R = -2H(Φ - Φ(base))
            let base = b.phi.at(set.base.0, set.base.1);
            let closed = b.phi.map(|p| p - base).times(&b.h_avg).map_err(ctx("closed form"))?.scale(-2.0);
            let diff = set.r.sub(&closed).map_err(ctx("closed form"))?;
            push("r_closed_form", diff.norms().map_err(ctx("norms"))?);
            l_max = l_max.max(set.l.norms().map_err(ctx("norms"))?.max);
            s_max = s_max.max(set.s.norms().map_err(ctx("norms"))?.max);
            let zero = Field::constant(&chart, 0.0);
            let ds = Grad::new(zero.clone(), zero).map_err(ctx("closed form"))?;
            let dr = b.dphi.times(&b.h_avg).map_err(ctx("closed form"))?.scale(-2.0);
            let lap_r = b.lap_phi.times(&b.h_avg).map_err(ctx("closed form"))?.scale(-2.0);
            let (c1, c2) = rs_residuals_from(&ds, &dr, &lap_r, &b).map_err(ctx("closed form"))?;
            closed_rs = closed_rs
                .max(c1.norms().map_err(ctx("norms"))?.max)
                .max(c2.norms().map_err(ctx("norms"))?.max);
        }
        last = Some((b, set));
    }
    let mut take = |k: &str| families.remove(k).unwrap_or_default();
    if umbilic {
        checks.push(CheckEntry::scalar("potentials.l_max", "T ≡ 0 ⇒ L ≡ 0", l_max, Rule::Below { tol: 1e-8 }));
        checks.push(CheckEntry::scalar("potentials.s_max", "∇S = L·∇Φ ≡ 0", s_max, Rule::Below { tol: 1e-8 }));
        checks.push(CheckEntry::order(
            "potentials.r_closed_form",
            "R = -2H(Φ - Φ₀) when L ≡ 0",
            take("r_closed_form"),
            3.0,
        ));
        checks.push(CheckEntry::scalar(
            "potentials.closed_form_rs",
            "∇⊥R = ∇S n + ∇R∧n, ΔR = ∇S·∇⊥n + ∇R∧∇⊥n",
            closed_rs,
            Rule::Below { tol: 1e-8 },
        ));
        for k in ["l_defect", "s_curl", "r_curl", "cons2a", "cons2b", "rs1", "rs2"] {
            let norms = take(k);
            let v = norms.last().map_or(f64::NAN, |n| n.max);
            checks.push(CheckEntry::info(&format!("potentials.{k}"), "", v));
        }
    } else {
        let spec: [(&str, &str, f64); 7] = [
            ("l_defect", "∇⊥L = T, path independence", 3.0),
            ("s_curl", "curl(L·∇Φ) = 0", 3.0),
            ("r_curl", "curl(∇Φ∧L - 2H∇Φ) = 0", 3.0),
            ("cons2a", "∇⊥L·∇Φ = 0", 3.0),
            ("cons2b", "∇Φ∧∇⊥L = 2∇⊥H·∇Φ", 3.0),
            ("rs1", "∇⊥R = ∇S n + ∇R∧n", 2.5),
            ("rs2", "ΔR = ∇S·∇⊥n + ∇R∧∇⊥n", 2.5),
        ];
        for (k, anchor, min) in spec {
            checks.push(CheckEntry::order(&format!("potentials.{k}"), anchor, take(k), min));
        }
    }
    let (b, set) = last.expect("at least one resolution");
    let dump = csv_bytes(|buf| {
        CsvDump::new(b.chart())
            .vec3("L", &set.l)?
            .scalar("S", &set.s)?
            .vec3("R", &set.r)?
            .write(buf)
    })?;
    let mut files = vec![("potentials.csv".to_string(), dump)];
    if cfg.dump_fields {
        files.push(("bundle.csv".into(), dump_bundle(&b)?));
    }
    Ok((checks, files))
}

fn sweep_csv(fit: &SweepFit) -> Result<Vec<u8>, CliError> {
    csv_bytes(|buf| fit.write_csv(buf))
}

pub fn expand(cfg: &RunConfig) -> Result<(Checks, Files), CliError> {
    let g = cfg.metric.build().map_err(ctx("metric"))?;
    let [nt, np] = cfg.sphere_grid;
    let grid = SphereGrid::new(nt, np, 0).map_err(ctx("sphere grid"))?;
    let fit = sphere_energy_sweep(&g, &cfg.radii, &grid).map_err(ctx("sweep"))?;
    let mut checks = Vec::new();
    let mut files = vec![("sweep.csv".to_string(), sweep_csv(&fit)?)];
    checks.push(CheckEntry::info("expand.fit_residual", "rms of W - 8π - c₂r²", fit.fit_residual));
    match &g {
        AmbientMetric::NormalForm { riemann } if riemann.max_abs() > 0.0 => {
            let scal = g.scalar_curvature(&Vec3::zeros()).map_err(ctx("scalar curvature"))?;
            let target = -4.0 * PI / 3.0 * scal;
            checks.push(CheckEntry::scalar(
                "expand.c2",
                "W(S_r) = 8π - (4π/3) Scal(p) r² + O(r³)",
                fit.c2,
                Rule::Near {
                    target,
                    tol: 0.05,
                    relative: true,
                },
            ));
            let doubled = AmbientMetric::normal_form(riemann.scaled(2.0)).map_err(ctx("metric"))?;
            let fit2 = sphere_energy_sweep(&doubled, &cfg.radii, &grid).map_err(ctx("sweep"))?;
            checks.push(CheckEntry::scalar(
                "expand.doubling_ratio",
                "c₂ is linear in the curvature tensor",
                fit2.c2 / fit.c2,
                Rule::Near {
                    target: 2.0,
                    tol: 0.05,
                    relative: true,
                },
            ));
            files.push(("sweep_doubled.csv".into(), sweep_csv(&fit2)?));
        }
        _ => checks.push(CheckEntry::scalar(
            "expand.c2",
            "W(S_r) = 8π in flat space",
            fit.c2,
            Rule::Below { tol: 1e-6 },
        )),
    }
    Ok((checks, files))
}

fn start_shape(start: &StartConfig, lmax: usize) -> Result<RadialShape, CliError> {
    let mut shape = RadialShape::sphere(Vec3::from(start.center), start.radius, lmax);
    shape.coeffs.resize(harmonic_count(lmax), 0.0);
    for c in &start.perturbation {
        if c.l > lmax || c.m.unsigned_abs() as usize > c.l {
            return Err(CliError::Config(crate::config::ConfigError::Invalid(format!(
                "perturbation ({}, {}) outside degree {lmax}",
                c.l, c.m
            ))));
        }
        shape.coeffs[harmonic_index(c.l, c.m)] = c.value;
    }
    shape.validate().map_err(ctx("start shape"))?;
    Ok(shape)
}

fn trace_csv(trace: &DescentTrace) -> Result<Vec<u8>, CliError> {
    csv_bytes(|buf| trace.write_csv(buf))
}

pub fn minimize_cmd(cfg: &RunConfig) -> Result<(Checks, Files), CliError> {
    let g = cfg.metric.build().map_err(ctx("metric"))?;
    let opts = &cfg.minimizer;
    let grid = opts.grid().map_err(ctx("grid"))?;
    let mut checks = Vec::new();
    let mut files = Files::new();
    for (i, start) in cfg.starts.iter().enumerate() {
        let p = format!("minimize.start{i}");
        let shape0 = start_shape(start, opts.lmax)?;
        let target = cfg.target_area.unwrap_or(4.0 * PI * start.radius * start.radius);
        let (shape, trace) = minimize(&shape0, target, &g, opts).map_err(ctx("minimizer"))?;
        let last = trace.last();
        checks.push(CheckEntry::scalar(
            &format!("{p}.area_defect"),
            "|Σ| = a along the descent",
            trace.max_area_defect(),
            Rule::Below { tol: 1e-8 },
        ));
        checks.push(CheckEntry::scalar(
            &format!("{p}.energy_increases"),
            "W non-increasing between iterates",
            if trace.monotone() { 0.0 } else { 1.0 },
            Rule::Below { tol: 0.0 },
        ));
        checks.push(CheckEntry::info(&format!("{p}.iterations"), "", last.iteration as f64));
        checks.push(CheckEntry::info(
            &format!("{p}.converged"),
            "",
            if trace.termination == Termination::MaxIterations { 0.0 } else { 1.0 },
        ));
        checks.push(CheckEntry::info(&format!("{p}.lambda"), "λ̂ = ⟨∇W, ∇A⟩/|∇A|²", last.lambda));
        if g.is_flat() {
            checks.push(CheckEntry::scalar(
                &format!("{p}.kkt_residual"),
                "|∇W - λ̂∇A| ≤ tolerance",
                last.residual,
                Rule::Below { tol: opts.tolerance },
            ));
            checks.push(CheckEntry::scalar(
                &format!("{p}.energy_gap"),
                "W → 8π, the round sphere",
                last.energy - 8.0 * PI,
                Rule::Below { tol: 1e-3 },
            ));
            let amax = shape.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            checks.push(CheckEntry::scalar(
                &format!("{p}.max_coefficient"),
                "all a_lm → 0",
                amax,
                Rule::Below { tol: 1e-2 },
            ));
        } else {
            checks.push(CheckEntry::info(&format!("{p}.kkt_residual"), "|∇W - λ̂∇A|", last.residual));
            if let AmbientMetric::Conformal { center, .. } = &g {
                let d0 = (shape0.center - center).norm();
                let d1 = (shape.center - center).norm();
                checks.push(CheckEntry::info(&format!("{p}.start_distance"), "", d0));
                checks.push(CheckEntry::scalar(
                    &format!("{p}.distance_decrease"),
                    "the center moves toward the maximum of Scal",
                    d0 - d1,
                    Rule::Positive,
                ));
            }
        }
        let est = estimate_report(&shape, &grid, &g).map_err(ctx("estimates"))?;
        checks.push(CheckEntry::scalar(
            &format!("{p}.min_mean_curvature"),
            "H > 0",
            est.min_mean_curvature,
            Rule::Positive,
        ));
        checks.push(CheckEntry::info(
            &format!("{p}.curvature_functional"),
            "∫|∇²H|² + H²|∇H|² + H⁴|Å|² dμ",
            est.curvature_functional,
        ));
        checks.push(CheckEntry::info(&format!("{p}.traceless_l2"), "‖Å‖_{L²}", est.traceless_l2));
        checks.push(CheckEntry::info(
            &format!("{p}.mean_curvature_deviation"),
            "‖H - 2/R‖_∞, 4πR² = |Σ|",
            est.mean_curvature_deviation,
        ));
        files.push((format!("trace_{i}.csv"), trace_csv(&trace)?));
        files.push((format!("shape_{i}.csv"), csv_bytes(|buf| shape.write_csv(&grid, buf))?));
    }
    Ok((checks, files))
}

fn random_shape(rng: &mut ChaCha8Rng, radius: f64, lmax: usize) -> RadialShape {
    let mut s = RadialShape::sphere(Vec3::zeros(), radius, lmax);
    s.coeffs.resize(harmonic_count(lmax), 0.0);
    for c in s.coeffs.iter_mut().skip(1) {
        *c = rng.random_range(-0.05..0.05);
    }
    s.center = Vec3::new(
        rng.random_range(-0.1..0.1) * radius,
        rng.random_range(-0.1..0.1) * radius,
        rng.random_range(-0.1..0.1) * radius,
    );
    s
}

pub fn estimates(cfg: &RunConfig) -> Result<(Checks, Files), CliError> {
    let flat = AmbientMetric::Euclidean;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();
    let grid = SphereGrid::new(24, 48, 3).map_err(ctx("grid"))?;

    // monotonicity and area bounds on balls around a surface point
    let radii: Vec<f64> = (1..=10).map(|k| 0.25 * k as f64).collect();
    let sphere = RadialShape::sphere(Vec3::new(0.0, 0.0, -1.0), 1.0, 0);
    let mut bumped = RadialShape::sphere(Vec3::zeros(), 1.0, 2);
    bumped.coeffs[harmonic_index(2, 0)] = 0.1;
    let basis = willmore_core::surfaces::HarmonicBasis::new(2).map_err(ctx("basis"))?;
    let on_bumped = bumped.point(&basis, &Vec3::new(0.6, 0.0, 0.8));
    for (name, shape, point) in [("sphere", &sphere, Vec3::zeros()), ("perturbed", &bumped, on_bumped)] {
        let rep = simon_checks(shape, &flat, &point, &radii, (32, 64)).map_err(ctx("monotonicity"))?;
        checks.push(CheckEntry::scalar(
            &format!("simon.{name}.violations"),
            "π ≤ r⁻²|Σ_r| + ⅛W(Σ_r) - ½r⁻²∫H⟨x,ν⟩ and |Σ| ≤ r²W(Σ)",
            rep.violations() as f64,
            Rule::Below { tol: 0.0 },
        ));
        let min_slack = rep.rows.iter().map(|r| r.monotonicity_slack).fold(f64::INFINITY, f64::min);
        checks.push(CheckEntry::info(&format!("simon.{name}.min_monotonicity_slack"), "", min_slack));
        let area_slack = rep.rows.iter().filter_map(|r| r.area_slack).fold(f64::INFINITY, f64::min);
        checks.push(CheckEntry::info(&format!("simon.{name}.min_area_slack"), "r²W - |Σ|", area_slack));
        checks.push(CheckEntry::info(
            &format!("simon.{name}.diameter_ratio"),
            "diam / (|Σ|^{1/2}W^{1/2} + |Σ|)",
            rep.diameter_ratio,
        ));
    }

    // area adjustment along the scaling flow
    let mut violations = 0usize;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let radius = rng.random_range(0.5..1.5);
        let shape = random_shape(&mut rng, radius, 3);
        let samples = shape.sample(&grid).map_err(ctx("shape"))?;
        let a0 = area(&samples, &flat).map_err(ctx("area"))?;
        let a = a0 / rng.random_range(0.55..1.45);
        match adjust_area(&samples, a, &flat) {
            Ok(adj) => {
                if (adj.area - a).abs() > 1e-10 * a || adj.t0.abs() > adj.bound {
                    violations += 1;
                }
                worst = worst.max(adj.t0.abs() / adj.bound.max(f64::MIN_POSITIVE));
            }
            Err(willmore_core::Error::Hypothesis(_)) => violations += 1,
            Err(e) => return Err(ctx("area adjustment")(e)),
        }
    }
    checks.push(CheckEntry::scalar(
        "scaling.area_adjustment_violations",
        "|Φ_{t₀}Σ| = a with |t₀| ≤ 2||Σ| - a|/a",
        violations as f64,
        Rule::Below { tol: 0.0 },
    ));
    checks.push(CheckEntry::info("scaling.max_time_over_bound", "", worst));
    let shape = random_shape(&mut rng, 1.0, 3);
    let samples = shape.sample(&grid).map_err(ctx("shape"))?;
    let delta = scaling_curvature_delta(&samples, &flat).map_err(ctx("scaling"))?;
    checks.push(CheckEntry::scalar(
        "scaling.flat_curvature_delta",
        "∫|A|² dμ is scale invariant in ℝ³",
        delta,
        Rule::Below { tol: 1e-6 },
    ));
    let unit = RadialShape::sphere(Vec3::zeros(), 1.0, 0).sample(&grid).map_err(ctx("shape"))?;
    let m = estimate_lambda_scaling(&unit, &flat).map_err(ctx("scaling"))?;
    checks.push(CheckEntry::scalar(
        "scaling.flat_sphere_lambda",
        "δW = 0 for the round sphere in ℝ³",
        m.lambda,
        Rule::Below { tol: 1e-6 },
    ));
    let curved = match &cfg.metric {
        crate::config::MetricConfig::Euclidean | crate::config::MetricConfig::Conformal { .. } => {
            AmbientMetric::normal_form(Riemann3::constant_curvature(1.0)).map_err(ctx("metric"))?
        }
        other => other.build().map_err(ctx("metric"))?,
    };
    let r = 0.05;
    let small = RadialShape::sphere(Vec3::zeros(), r, 0).sample(&grid).map_err(ctx("shape"))?;
    let a_sq = curvature_integral(&small, &curved).map_err(ctx("curvature integral"))?;
    let delta = scaling_curvature_delta(&small, &curved).map_err(ctx("scaling"))?;
    checks.push(CheckEntry::info(
        "scaling.curved_delta_constant",
        "|δ∫|A|²| ≤ C r ∫|A|²",
        delta.abs() / (r * a_sq),
    ));
    let m = estimate_lambda_scaling(&small, &curved).map_err(ctx("scaling"))?;
    let s_area = area(&small, &curved).map_err(ctx("area"))?;
    checks.push(CheckEntry::info("scaling.curved_lambda", "λ̂ = δW/δA", m.lambda));
    checks.push(CheckEntry::info(
        "scaling.curved_lambda_constant",
        "|λ̂| ≤ C|Σ|⁻¹(|Σ|^{1/2} + r∫|A|²)",
        m.lambda.abs() * s_area / (s_area.sqrt() + r * a_sq),
    ));

    // Bochner identity on charts
    let bochner_anchor = "∫|∇²f|² = ∫(Δf)² + |∇f|²(½|Å|² - ¼H² - ½Scal + Ric(ν,ν))";
    let finest = *cfg.resolutions.last().expect("resolution");
    let plane = willmore_core::surfaces::plane();
    let pb = evaluate_bundle(&plane, &plane.default_chart(finest).map_err(ctx("chart"))?, DerivativeSource::Analytic)
        .map_err(ctx("bundle"))?;
    let mut plane_defect: f64 = 0.0;
    for _ in 0..cfg.bumps {
        let f = BumpFunction::random(&mut rng, 0.6, (0.2, 0.4)).map_err(ctx("bump"))?;
        plane_defect = plane_defect.max(bochner_check(&f, &pb, &flat).map_err(ctx("bochner"))?.defect);
    }
    checks.push(CheckEntry::scalar("bochner.plane", bochner_anchor, plane_defect, Rule::Below { tol: 1e-8 }));
    for (imm, reach) in [
        (willmore_core::surfaces::sphere_stereo(1.0).map_err(ctx("surface"))?, 0.9),
        (willmore_core::surfaces::willmore_torus(), 2.5),
    ] {
        let bundles = cfg
            .resolutions
            .iter()
            .map(|&n| evaluate_bundle(&imm, &imm.default_chart(n)?, DerivativeSource::Analytic))
            .collect::<willmore_core::Result<Vec<_>>>()
            .map_err(ctx("bundle"))?;
        for k in 0..cfg.bumps {
            let f = BumpFunction::random(&mut rng, reach, (0.3, 0.6)).map_err(ctx("bump"))?;
            let norms = bundles
                .iter()
                .map(|b| bochner_check(&f, b, &flat).map(|r| scalar_norms(r.defect)))
                .collect::<willmore_core::Result<Vec<_>>>()
                .map_err(ctx("bochner"))?;
            checks.push(CheckEntry::order(&format!("bochner.{}.bump{k}", imm.name()), bochner_anchor, norms, 2.0));
        }
    }

    // stability inequality on the round sphere and on a flat minimizer
    let stab_anchor = "∫f²(½|Å|² + ¼H² + ½Scal - ½Scal^Σ + λ) ≤ ∫|∇f|²";
    let sgrid = SphereGrid::new(32, 64, 0).map_err(ctx("grid"))?;
    let round = RadialShape::sphere(Vec3::zeros(), 1.0, 0);
    let start = cfg.starts.first().cloned().unwrap_or_default();
    let opts = &cfg.minimizer;
    let shape0 = start_shape(&start, opts.lmax)?;
    let target = cfg.target_area.unwrap_or(4.0 * PI * start.radius * start.radius);
    let (minimizer, trace) = minimize(&shape0, target, &flat, opts).map_err(ctx("minimizer"))?;
    let lambda = trace.last().lambda;
    let mgrid = SphereGrid::new(32, 64, opts.lmax).map_err(ctx("grid"))?;
    for (name, shape, grid, lam) in [("sphere", &round, &sgrid, 0.0), ("minimizer", &minimizer, &mgrid, lambda)] {
        let mut worst = f64::INFINITY;
        let mut min_h = f64::INFINITY;
        let mut min_hyp = f64::INFINITY;
        for _ in 0..cfg.bumps {
            let f = SphereBump::random(&mut rng).map_err(ctx("bump"))?;
            let r = stability_check_shape(&f, shape, grid, lam, &flat).map_err(ctx("stability"))?;
            worst = worst.min(r.margin);
            min_h = min_h.min(r.min_mean_curvature);
            min_hyp = min_hyp.min(r.min_lambda_plus_half_scal);
        }
        checks.push(CheckEntry::scalar(
            &format!("stability.{name}.margin"),
            stab_anchor,
            worst,
            Rule::NonNegative { tol: 1e-4 },
        ));
        checks.push(CheckEntry::info(&format!("stability.{name}.min_mean_curvature"), "H > 0 on the support", min_h));
        checks.push(CheckEntry::info(
            &format!("stability.{name}.min_lambda_plus_half_scal"),
            "λ ≥ -½Scal",
            min_hyp,
        ));
    }
    Ok((checks, Files::new()))
}
