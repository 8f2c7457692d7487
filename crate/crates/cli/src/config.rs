//! Run configuration: one JSON document, with command-line flags applied on
//! top.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use willmore_core::ambient::{radius_window, AmbientMetric, Riemann3};
use willmore_core::geometry::DerivativeSource;
use willmore_core::minimize::MinimizeOptions;
use willmore_core::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Verify,
    Potentials,
    Expand,
    Minimize,
    Estimates,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Verify => "verify",
            Self::Potentials => "potentials",
            Self::Expand => "expand",
            Self::Minimize => "minimize",
            Self::Estimates => "estimates",
        }
    }

    /// Commands whose checks compare residuals across resolutions.
    pub fn needs_orders(self) -> bool {
        matches!(self, Self::Verify | Self::Potentials | Self::Estimates)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceConfig {
    /// sphere, cylinder, catenoid, plane or torus.
    pub name: String,
    /// Sphere radius; ignored by the other surfaces.
    pub radius: f64,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            name: "sphere".into(),
            radius: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricConfig {
    Euclidean,
    /// Constant sectional curvature at the origin, in normal form.
    ConstantCurvature { sectional: f64 },
    /// Curvature tensor built from a symmetric Ricci matrix.
    Ricci { rows: [[f64; 3]; 3] },
    /// `e^{2φ}δ` with `φ = Σ coeffs[k] |x - center|^{2(k+1)}`.
    Conformal { center: [f64; 3], coeffs: Vec<f64> },
}

impl MetricConfig {
    pub fn build(&self) -> willmore_core::Result<AmbientMetric> {
        match self {
            Self::Euclidean => Ok(AmbientMetric::Euclidean),
            Self::ConstantCurvature { sectional } => AmbientMetric::normal_form(Riemann3::constant_curvature(*sectional)),
            Self::Ricci { rows } => AmbientMetric::normal_form(Riemann3::from_ricci_rows(*rows)?),
            Self::Conformal { center, coeffs } => Ok(AmbientMetric::Conformal {
                center: Vec3::from(*center),
                coeffs: coeffs.clone(),
            }),
        }
    }
}

/// One harmonic coefficient `a_{l,m}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficient {
    pub l: usize,
    pub m: i64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StartConfig {
    pub center: [f64; 3],
    pub radius: f64,
    pub perturbation: Vec<Coefficient>,
}

impl Default for StartConfig {
    fn default() -> Self {
        Self {
            center: [0.0; 3],
            radius: 1.0,
            perturbation: vec![Coefficient { l: 2, m: 0, value: 0.1 }],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub surface: SurfaceConfig,
    /// Chart node counts, coarse to fine; each odd and at least 33.
    pub resolutions: Vec<usize>,
    /// Derivative source of the identity suite.
    pub derivative_source: DerivativeSource,
    /// Whether the surface is expected to be Willmore; defaults to the
    /// known answer for the named surface.
    pub expect_willmore: Option<bool>,
    pub metric: MetricConfig,
    /// Sphere radii of the expansion sweep.
    pub radii: Vec<f64>,
    /// `[n_theta, n_phi]` of the sweep quadrature.
    pub sphere_grid: [usize; 2],
    pub minimizer: MinimizeOptions,
    pub starts: Vec<StartConfig>,
    /// Constrained area; defaults to the area of each start.
    pub target_area: Option<f64>,
    /// Randomized bumps or fields per check family.
    pub bumps: usize,
    /// Write per-node CSV dumps of the bundle and potentials.
    pub dump_fields: bool,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            surface: SurfaceConfig::default(),
            resolutions: vec![65, 129],
            derivative_source: DerivativeSource::FiniteDifference,
            expect_willmore: None,
            metric: MetricConfig::Euclidean,
            radii: radius_window(0.02, 0.1, 9),
            sphere_grid: [16, 32],
            minimizer: MinimizeOptions::default(),
            starts: vec![StartConfig::default()],
            target_area: None,
            bumps: 5,
            dump_fields: false,
            out: None,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self, command: Command) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        for &n in &self.resolutions {
            if n < 33 || n % 2 == 0 {
                return bad(format!("resolution {n} must be odd and at least 33"));
            }
        }
        if command.needs_orders() && self.resolutions.len() < 2 {
            return bad(format!("{} needs at least two resolutions", command.name()));
        }
        if self.resolutions.windows(2).any(|w| w[1] <= w[0]) {
            return bad("resolutions must increase".into());
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad("radii must be positive".into());
        }
        if command == Command::Expand && self.radii.len() < 2 {
            return bad("expand needs at least two radii".into());
        }
        if command == Command::Minimize && self.starts.is_empty() {
            return bad("minimize needs at least one start".into());
        }
        if self.starts.iter().any(|s| !(s.radius.is_finite() && s.radius > 0.0)) {
            return bad("start radii must be positive".into());
        }
        if let Some(a) = self.target_area {
            if !(a.is_finite() && a > 0.0) {
                return bad(format!("target area {a}"));
            }
        }
        if self.bumps == 0 {
            return bad("bumps must be positive".into());
        }
        if !(self.surface.radius.is_finite() && self.surface.radius > 0.0) {
            return bad(format!("surface radius {}", self.surface.radius));
        }
        Ok(())
    }
}
