//! Check records and the JSON report shared by all experiment drivers.

use serde::{Deserialize, Serialize};

use crate::chart::Norms;

pub const SCHEMA_VERSION: u32 = 1;

/// Residual values indistinguishable from zero in double precision.
pub const ROUNDOFF_FLOOR: f64 = 1e-11;

/// Observed convergence order between two resolutions whose spacing
/// differs by a factor of two.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualNorms {
    pub name: String,
    pub norms: Norms,
}

impl ResidualNorms {
    pub fn new(name: &str, norms: Norms) -> Self {
        Self {
            name: name.to_string(),
            norms,
        }
    }
}

/// How a check decides pass/fail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    /// Observed order between the two finest resolutions is at least `min`,
    /// or both residuals are below `floor`.
    Order { min: f64, floor: f64 },
    /// `|value| ≤ tol`.
    Below { tol: f64 },
    /// `|value - target| ≤ tol · max(|target|, 1)` when `relative`, else `≤ tol`.
    Near { target: f64, tol: f64, relative: bool },
    /// `value ≥ -tol`.
    NonNegative { tol: f64 },
    /// `value > 0`.
    Positive,
    /// The residual must stay above `min` at the finest resolution (a
    /// negative control that should not converge).
    Plateau { min: f64 },
    /// Recorded, never fails.
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    /// Formula or quantity the check verifies.
    pub anchor: String,
    /// Max/L² norms at each resolution, coarse to fine.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub norms: Vec<Norms>,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub observed_order: Option<f64>,
    #[serde(flatten)]
    pub rule: Rule,
    pub passed: bool,
}

impl CheckEntry {
    /// Order check on interior max norms at successive resolutions.
    pub fn order(name: &str, anchor: &str, norms: Vec<Norms>, min: f64) -> Self {
        Self::order_with_floor(name, anchor, norms, min, ROUNDOFF_FLOOR)
    }

    pub fn order_with_floor(name: &str, anchor: &str, norms: Vec<Norms>, min: f64, floor: f64) -> Self {
        let k = norms.len();
        let (order, value, passed) = if k >= 2 {
            let (c, f) = (norms[k - 2].max, norms[k - 1].max);
            let p = observed_order(c, f);
            let at_floor = c <= floor && f <= floor;
            (Some(p), f, at_floor || (p.is_finite() && p >= min))
        } else {
            (None, norms.first().map_or(f64::NAN, |n| n.max), false)
        };
        Self {
            name: name.to_string(),
            anchor: anchor.to_string(),
            norms,
            value,
            observed_order: order,
            rule: Rule::Order { min, floor },
            passed,
        }
    }

    /// Negative control: the finest-resolution residual stays above `min`.
    pub fn plateau(name: &str, anchor: &str, norms: Vec<Norms>, min: f64) -> Self {
        let k = norms.len();
        let value = norms.last().map_or(f64::NAN, |n| n.max);
        let order = (k >= 2).then(|| observed_order(norms[k - 2].max, norms[k - 1].max));
        Self {
            name: name.to_string(),
            anchor: anchor.to_string(),
            norms,
            value,
            observed_order: order,
            rule: Rule::Plateau { min },
            passed: value >= min,
        }
    }

    pub fn scalar(name: &str, anchor: &str, value: f64, rule: Rule) -> Self {
        let passed = match &rule {
            Rule::Below { tol } => value.abs() <= *tol,
            Rule::Near {
                target,
                tol,
                relative,
            } => {
                let scale = if *relative { target.abs().max(1.0) } else { 1.0 };
                (value - target).abs() <= tol * scale
            }
            Rule::NonNegative { tol } => value >= -tol,
            Rule::Positive => value > 0.0,
            Rule::Plateau { min } => value >= *min,
            Rule::Info => true,
            Rule::Order { .. } => false,
        };
        Self {
            name: name.to_string(),
            anchor: anchor.to_string(),
            norms: Vec::new(),
            value,
            observed_order: None,
            rule,
            passed: passed && !value.is_nan(),
        }
    }

    pub fn info(name: &str, anchor: &str, value: f64) -> Self {
        Self::scalar(name, anchor, value, Rule::Info)
    }

    pub fn is_informational(&self) -> bool {
        matches!(self.rule, Rule::Info)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub artifact_version: String,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub checks: Vec<CheckEntry>,
}

impl Report {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config,
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, entry: CheckEntry) {
        self.checks.push(entry);
    }

    pub fn extend(&mut self, entries: impl IntoIterator<Item = CheckEntry>) {
        self.checks.extend(entries);
    }

    /// True when every non-informational check passed.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.is_informational() || c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.checks.iter().filter(|c| !c.is_informational() && !c.passed)
    }

    pub fn to_json(&self) -> crate::error::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
