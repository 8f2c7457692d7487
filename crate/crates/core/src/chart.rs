//! Finite-difference calculus on a uniform square chart.
//!
//! A [`Chart`] is an `n × n` node lattice on `[-extent, extent]²`. Each axis is
//! either bounded (nodes include both ends, spacing `2·extent/(n-1)`) or
//! periodic (the right end is identified with the left one, spacing
//! `2·extent/n`). Derivatives use the five-point fourth-order central stencil;
//! on bounded axes they are only defined away from the boundary, and every
//! field tracks how many boundary layers are no longer valid.
//!
//! Products of two-slot fields follow one fixed convention: for `A`, `B` with
//! slots `(A_x, A_y)`, `A·B = Σ ⟨A_s, B_s⟩` and `A∧B = Σ A_s × B_s`.

use std::io::Write;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, lagrange_weights, simpson_weights};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Radius of the derivative stencil in nodes.
pub const STENCIL_RADIUS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    n: usize,
    extent: f64,
    periodic: [bool; 2],
    margin: usize,
}

impl Chart {
    /// Bounded chart on `[-extent, extent]²`.
    pub fn new(n: usize, extent: f64) -> Result<Self> {
        Self::with_periodicity(n, extent, [false, false])
    }

    pub fn with_periodicity(n: usize, extent: f64, periodic: [bool; 2]) -> Result<Self> {
        if n < 9 || n % 2 == 0 {
            return Err(Error::InvalidChart(format!(
                "node count must be odd and at least 9, got {n}"
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidChart(format!("extent must be positive, got {extent}")));
        }
        let margin = ((n - 1) / 8).max(STENCIL_RADIUS);
        Ok(Self {
            n,
            extent,
            periodic,
            margin,
        })
    }

    /// Overrides the number of boundary layers excluded from residual norms.
    pub fn with_margin(mut self, margin: usize) -> Result<Self> {
        if margin < STENCIL_RADIUS || 2 * margin + 1 >= self.n {
            return Err(Error::InvalidChart(format!(
                "margin {margin} incompatible with n = {}",
                self.n
            )));
        }
        self.margin = margin;
        Ok(self)
    }

    /// Same physical chart with the spacing halved; the margin keeps its
    /// physical width.
    pub fn refined(&self) -> Result<Self> {
        let n = 2 * (self.n - 1) + 1;
        let refined = Self::with_periodicity(n, self.extent, self.periodic)?;
        refined.with_margin(2 * self.margin)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn is_periodic(&self, axis: Axis) -> bool {
        self.periodic[axis.index()]
    }

    pub fn periodicity(&self) -> [bool; 2] {
        self.periodic
    }

    pub fn h(&self, axis: Axis) -> f64 {
        if self.is_periodic(axis) {
            2.0 * self.extent / self.n as f64
        } else {
            2.0 * self.extent / (self.n - 1) as f64
        }
    }

    pub fn coord(&self, axis: Axis, i: usize) -> f64 {
        -self.extent + i as f64 * self.h(axis)
    }

    pub fn node_count(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn center_node(&self) -> (usize, usize) {
        (self.n / 2, self.n / 2)
    }

    /// Index range used for residual norms along `axis`.
    pub fn interior(&self, axis: Axis) -> std::ops::RangeInclusive<usize> {
        if self.is_periodic(axis) {
            0..=self.n - 1
        } else {
            self.margin..=self.n - 1 - self.margin
        }
    }

    fn check_same(&self, other: &Chart) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ChartMismatch)
        }
    }
}

/// Values that can live on chart nodes.
pub trait NodeValue:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + Neg<Output = Self>
    + PartialEq
    + std::fmt::Debug
    + Send
    + Sync
    + 'static
{
    fn zero() -> Self;
    fn nan() -> Self;
    fn magnitude(&self) -> f64;
    fn components(&self) -> Vec<f64>;
    fn component_count() -> usize;
}

impl NodeValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn nan() -> Self {
        f64::NAN
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn components(&self) -> Vec<f64> {
        vec![*self]
    }
    fn component_count() -> usize {
        1
    }
}

impl NodeValue for Vec3 {
    fn zero() -> Self {
        Vec3::zeros()
    }
    fn nan() -> Self {
        Vec3::repeat(f64::NAN)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn components(&self) -> Vec<f64> {
        vec![self.x, self.y, self.z]
    }
    fn component_count() -> usize {
        3
    }
}

/// Interior norms of a field: maximum magnitude and the discrete L² norm
/// `sqrt(Σ |v|² h_x h_y)` over the chart interior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub max: f64,
    pub l2: f64,
}

impl Norms {
    pub fn zero() -> Self {
        Self { max: 0.0, l2: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field<V> {
    chart: Chart,
    data: Vec<V>,
    valid: [usize; 2],
}

pub type ChartScalar = Field<f64>;
pub type ChartVec3 = Field<Vec3>;

impl<V: NodeValue> Field<V> {
    pub fn sample(chart: &Chart, f: impl Fn(f64, f64) -> V) -> Self {
        let mut data = Vec::with_capacity(chart.node_count());
        for j in 0..chart.n {
            let y = chart.coord(Axis::Y, j);
            for i in 0..chart.n {
                data.push(f(chart.coord(Axis::X, i), y));
            }
        }
        Self {
            chart: *chart,
            data,
            valid: [0, 0],
        }
    }

    /// Builds a field from per-node values computed from node indices.
    pub fn from_nodes(chart: &Chart, f: impl Fn(usize, usize) -> V) -> Self {
        let mut data = Vec::with_capacity(chart.node_count());
        for j in 0..chart.n {
            for i in 0..chart.n {
                data.push(f(i, j));
            }
        }
        Self {
            chart: *chart,
            data,
            valid: [0, 0],
        }
    }

    /// Marks `layers` boundary layers (per axis) as undefined, keeping the
    /// larger of the current and the requested count.
    pub fn with_layers(mut self, layers: [usize; 2]) -> Self {
        for a in 0..2 {
            if !self.chart.periodic[a] {
                self.valid[a] = self.valid[a].max(layers[a]);
            }
        }
        self
    }

    pub fn constant(chart: &Chart, v: V) -> Self {
        Self {
            chart: *chart,
            data: vec![v; chart.node_count()],
            valid: [0, 0],
        }
    }

    pub fn from_vec(chart: &Chart, data: Vec<V>) -> Result<Self> {
        if data.len() != chart.node_count() {
            return Err(Error::InvalidChart(format!(
                "expected {} values, got {}",
                chart.node_count(),
                data.len()
            )));
        }
        Ok(Self {
            chart: *chart,
            data,
            valid: [0, 0],
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn values(&self) -> &[V] {
        &self.data
    }

    /// Boundary layers (per axis) on which the field is undefined.
    pub fn invalid_layers(&self) -> [usize; 2] {
        self.valid
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> V {
        self.data[self.chart.index(i, j)]
    }

    pub fn is_valid_node(&self, i: usize, j: usize) -> bool {
        let n = self.chart.n;
        let ok = |k: usize, a: usize| self.chart.periodic[a] || (k >= self.valid[a] && k + self.valid[a] < n);
        ok(i, 0) && ok(j, 1)
    }

    pub fn map<U: NodeValue>(&self, f: impl Fn(V) -> U) -> Field<U> {
        Field {
            chart: self.chart,
            data: self.data.iter().map(|&v| f(v)).collect(),
            valid: self.valid,
        }
    }

    pub fn zip<W: NodeValue, U: NodeValue>(
        &self,
        other: &Field<W>,
        f: impl Fn(V, W) -> U,
    ) -> Result<Field<U>> {
        self.chart.check_same(&other.chart)?;
        Ok(Field {
            chart: self.chart,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            valid: [
                self.valid[0].max(other.valid[0]),
                self.valid[1].max(other.valid[1]),
            ],
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// Pointwise product with a scalar field.
    pub fn times(&self, s: &ChartScalar) -> Result<Self> {
        self.zip(s, |v, s| v * s)
    }

    /// Fourth-order central difference along `axis`.
    pub fn derivative(&self, axis: Axis) -> Result<Self> {
        let chart = self.chart;
        let n = chart.n;
        let a = axis.index();
        let periodic = chart.periodic[a];
        let inv = 1.0 / (12.0 * chart.h(axis));
        let mut valid = self.valid;
        if !periodic {
            valid[a] += STENCIL_RADIUS;
            if 2 * valid[a] >= n {
                return Err(Error::StencilTooWide(format!(
                    "{} invalid layers leave no interior on n = {n}",
                    valid[a]
                )));
            }
        }
        let lo = valid[a];
        let hi = n - 1 - valid[a];
        let mut data = vec![V::nan(); n * n];
        let wrap = |k: isize| -> usize { k.rem_euclid(n as isize) as usize };
        for j in 0..n {
            for i in 0..n {
                let k = if a == 0 { i } else { j };
                if !periodic && (k < lo || k > hi) {
                    continue;
                }
                let fetch = |off: isize| -> V {
                    let kk = wrap(k as isize + off);
                    if a == 0 {
                        self.data[chart.index(kk, j)]
                    } else {
                        self.data[chart.index(i, kk)]
                    }
                };
                let d = (fetch(-2) - fetch(-1) * 8.0 + fetch(1) * 8.0 - fetch(2)) * inv;
                data[chart.index(i, j)] = d;
            }
        }
        Ok(Self { chart, data, valid })
    }

    /// Norms over the chart interior.
    ///
    /// Fails if the field is undefined anywhere inside the interior, which
    /// happens when more derivatives were chained than the margin allows.
    pub fn norms(&self) -> Result<Norms> {
        let c = &self.chart;
        for a in 0..2 {
            if !c.periodic[a] && self.valid[a] > c.margin {
                return Err(Error::StencilTooWide(format!(
                    "field has {} invalid layers but the chart margin is {}",
                    self.valid[a], c.margin
                )));
            }
        }
        let cell = c.h(Axis::X) * c.h(Axis::Y);
        let mut max: f64 = 0.0;
        let mut sum = 0.0;
        for j in c.interior(Axis::Y) {
            for i in c.interior(Axis::X) {
                let m = self.at(i, j).magnitude();
                if !m.is_finite() {
                    return Err(Error::NonFinite(format!("field value at node ({i}, {j})")));
                }
                max = max.max(m);
                sum += m * m;
            }
        }
        Ok(Norms {
            max,
            l2: (sum * cell).sqrt(),
        })
    }
}

/// A two-slot field: one value per chart direction, e.g. `∇Φ = (Φ_x, Φ_y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grad<V> {
    pub x: Field<V>,
    pub y: Field<V>,
}

pub type ChartGrad3 = Grad<Vec3>;

impl<V: NodeValue> Grad<V> {
    pub fn new(x: Field<V>, y: Field<V>) -> Result<Self> {
        x.chart.check_same(&y.chart)?;
        Ok(Self { x, y })
    }

    pub fn chart(&self) -> &Chart {
        &self.x.chart
    }

    /// Rotates the slots: `(A_x, A_y) ↦ (-A_y, A_x)`, so `grad(f).perp()`
    /// is `∇⊥f`.
    pub fn perp(&self) -> Self {
        Self {
            x: self.y.scale(-1.0),
            y: self.x.clone(),
        }
    }

    pub fn map_slots<U: NodeValue>(&self, f: impl Fn(&Field<V>) -> Field<U>) -> Grad<U> {
        Grad {
            x: f(&self.x),
            y: f(&self.y),
        }
    }

    pub fn try_map_slots<U: NodeValue>(
        &self,
        f: impl Fn(&Field<V>) -> Result<Field<U>>,
    ) -> Result<Grad<U>> {
        Ok(Grad {
            x: f(&self.x)?,
            y: f(&self.y)?,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            x: self.x.add(&other.x)?,
            y: self.y.add(&other.y)?,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            x: self.x.sub(&other.x)?,
            y: self.y.sub(&other.y)?,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_slots(|f| f.scale(s))
    }

    pub fn times(&self, s: &ChartScalar) -> Result<Self> {
        self.try_map_slots(|f| f.times(s))
    }

    /// `∂_x A_x + ∂_y A_y`.
    pub fn divergence(&self) -> Result<Field<V>> {
        self.x.derivative(Axis::X)?.add(&self.y.derivative(Axis::Y)?)
    }

    /// `∂_x A_y - ∂_y A_x`, the scalar curl of a two-slot field.
    pub fn curl(&self) -> Result<Field<V>> {
        self.y.derivative(Axis::X)?.sub(&self.x.derivative(Axis::Y)?)
    }

    /// Norms of the per-node slot magnitude `sqrt(|A_x|² + |A_y|²)`.
    pub fn norms(&self) -> Result<Norms> {
        let combined = self
            .x
            .zip(&self.y, |a, b| (a.magnitude().powi(2) + b.magnitude().powi(2)).sqrt())?;
        combined.norms()
    }
}

pub fn grad<V: NodeValue>(f: &Field<V>) -> Result<Grad<V>> {
    Ok(Grad {
        x: f.derivative(Axis::X)?,
        y: f.derivative(Axis::Y)?,
    })
}

/// `∇⊥f = (-∂_y f, ∂_x f)`.
pub fn grad_perp<V: NodeValue>(f: &Field<V>) -> Result<Grad<V>> {
    Ok(grad(f)?.perp())
}

pub fn divergence<V: NodeValue>(field: &Grad<V>) -> Result<Field<V>> {
    field.divergence()
}

/// Flat Laplacian as divergence of the gradient, using the same stencils.
pub fn laplacian_flat<V: NodeValue>(f: &Field<V>) -> Result<Field<V>> {
    grad(f)?.divergence()
}

/// Laplace–Beltrami operator of the conformal metric `e^{2λ}δ`.
pub fn laplacian_conformal<V: NodeValue>(f: &Field<V>, lambda: &ChartScalar) -> Result<Field<V>> {
    let n = lambda.chart().n();
    for j in 0..n {
        for i in 0..n {
            if lambda.is_valid_node(i, j) && !lambda.at(i, j).is_finite() {
                return Err(Error::NonFinite(format!("conformal factor at node ({i}, {j})")));
            }
        }
    }
    laplacian_flat(f)?.zip(lambda, |v, l| v * (-2.0 * l).exp())
}

/// Cross product, the wedge of ℝ³.
#[inline]
pub fn wedge(u: &Vec3, v: &Vec3) -> Vec3 {
    u.cross(v)
}

/// `A·B = Σ_s ⟨A_s, B_s⟩`.
pub fn dot(a: &ChartGrad3, b: &ChartGrad3) -> Result<ChartScalar> {
    a.x.zip(&b.x, |u, v| u.dot(&v))?
        .add(&a.y.zip(&b.y, |u, v| u.dot(&v))?)
}

/// `A∧B = Σ_s A_s × B_s`.
pub fn wedge_slots(a: &ChartGrad3, b: &ChartGrad3) -> Result<ChartVec3> {
    a.x.zip(&b.x, |u, v| u.cross(&v))?
        .add(&a.y.zip(&b.y, |u, v| u.cross(&v))?)
}

/// `∇s·B = Σ_s (∇s)_s B_s` for a scalar-valued two-slot field.
pub fn scalar_dot(a: &Grad<f64>, b: &ChartGrad3) -> Result<ChartVec3> {
    a.x.zip(&b.x, |s, v| v * s)?.add(&a.y.zip(&b.y, |s, v| v * s)?)
}

/// Per-slot `u ∧ B_s`.
pub fn field_wedge_slots(u: &ChartVec3, b: &ChartGrad3) -> Result<ChartGrad3> {
    Ok(Grad {
        x: u.zip(&b.x, |u, v| u.cross(&v))?,
        y: u.zip(&b.y, |u, v| u.cross(&v))?,
    })
}

/// Per-slot `B_s ∧ u`.
pub fn slots_wedge_field(b: &ChartGrad3, u: &ChartVec3) -> Result<ChartGrad3> {
    Ok(Grad {
        x: b.x.zip(u, |v, u| v.cross(&u))?,
        y: b.y.zip(u, |v, u| v.cross(&u))?,
    })
}

/// Per-slot `g_s · u` for a scalar two-slot field and a vector field.
pub fn slots_times_field(g: &Grad<f64>, u: &ChartVec3) -> Result<ChartGrad3> {
    Ok(Grad {
        x: g.x.zip(u, |s, v| v * s)?,
        y: g.y.zip(u, |s, v| v * s)?,
    })
}

/// Integration region on a chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Region {
    /// The whole chart (periodic axes are integrated over one period).
    Full,
    /// Axis-aligned rectangle whose edges lie on chart nodes.
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
    Disk { cx: f64, cy: f64, radius: f64 },
}

/// Integrates `f e^{2λ}` (the induced area measure of a conformal chart).
///
/// Rectangles use composite Simpson on the node lattice (periodic axes use
/// the trapezoid rule, which is spectrally accurate there). Disks use a polar
/// Gauss-Legendre × trapezoid rule on values interpolated with a six-point
/// Lagrange stencil, which keeps the result sixth-order in `h` instead of
/// the first-order accuracy of node masking.
pub fn integrate(f: &ChartScalar, lambda: &ChartScalar, region: Region) -> Result<f64> {
    let density = f.zip(lambda, |v, l| v * (2.0 * l).exp())?;
    integrate_density(&density, region)
}

/// Integrates a density already expressed per unit chart area.
pub fn integrate_density(density: &ChartScalar, region: Region) -> Result<f64> {
    let c = *density.chart();
    match region {
        Region::Full => {
            let wx = axis_weights(&c, Axis::X, 0, c.n - 1);
            let wy = axis_weights(&c, Axis::Y, 0, c.n - 1);
            sum_weighted(density, &wx, 0, &wy, 0)
        }
        Region::Rect { x0, x1, y0, y1 } => {
            let (i0, i1) = node_span(&c, Axis::X, x0, x1)?;
            let (j0, j1) = node_span(&c, Axis::Y, y0, y1)?;
            let wx = axis_weights(&c, Axis::X, i0, i1);
            let wy = axis_weights(&c, Axis::Y, j0, j1);
            sum_weighted(density, &wx, i0, &wy, j0)
        }
        Region::Disk { cx, cy, radius } => integrate_disk(density, cx, cy, radius),
    }
}

fn node_span(c: &Chart, axis: Axis, a: f64, b: f64) -> Result<(usize, usize)> {
    let h = c.h(axis);
    let to_index = |x: f64| -> Result<usize> {
        let t = (x + c.extent) / h;
        let k = t.round();
        if (t - k).abs() > 1e-9 || k < 0.0 || k > (c.n - 1) as f64 {
            return Err(Error::RegionOutside(format!(
                "edge {x} is not a node of the chart"
            )));
        }
        Ok(k as usize)
    };
    let (i0, i1) = (to_index(a)?, to_index(b)?);
    if i1 <= i0 {
        return Err(Error::RegionOutside(format!("empty span [{a}, {b}]")));
    }
    Ok((i0, i1))
}

fn axis_weights(c: &Chart, axis: Axis, lo: usize, hi: usize) -> Vec<f64> {
    let h = c.h(axis);
    if c.is_periodic(axis) && lo == 0 && hi == c.n - 1 {
        vec![h; c.n]
    } else {
        simpson_weights(hi - lo, h)
    }
}

fn sum_weighted(f: &ChartScalar, wx: &[f64], i0: usize, wy: &[f64], j0: usize) -> Result<f64> {
    let mut total = 0.0;
    for (dj, wj) in wy.iter().enumerate() {
        for (di, wi) in wx.iter().enumerate() {
            let (i, j) = (i0 + di, j0 + dj);
            if !f.is_valid_node(i, j) {
                return Err(Error::RegionOutside(format!(
                    "node ({i}, {j}) lies in an undefined boundary layer"
                )));
            }
            total += wi * wj * f.at(i, j);
        }
    }
    Ok(total)
}

const INTERP_OFFSETS: [f64; 6] = [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0];

/// Six-point tensor Lagrange interpolation of a chart field at `(x, y)`.
pub fn interpolate(f: &ChartScalar, x: f64, y: f64) -> Result<f64> {
    let c = f.chart();
    let locate = |axis: Axis, v: f64| -> Result<(isize, Vec<f64>)> {
        let h = c.h(axis);
        let t = (v + c.extent) / h;
        let base = t.floor();
        let w = lagrange_weights(&INTERP_OFFSETS, t - base);
        Ok((base as isize, w))
    };
    let (bi, wx) = locate(Axis::X, x)?;
    let (bj, wy) = locate(Axis::Y, y)?;
    let n = c.n as isize;
    let resolve = |axis: Axis, k: isize| -> Result<usize> {
        if c.is_periodic(axis) {
            Ok(k.rem_euclid(n) as usize)
        } else if k < 0 || k >= n {
            Err(Error::RegionOutside(format!("interpolation stencil leaves the chart at {k}")))
        } else {
            Ok(k as usize)
        }
    };
    let mut total = 0.0;
    for (b, wj) in wy.iter().enumerate() {
        let j = resolve(Axis::Y, bj + INTERP_OFFSETS[b] as isize)?;
        for (a, wi) in wx.iter().enumerate() {
            let i = resolve(Axis::X, bi + INTERP_OFFSETS[a] as isize)?;
            if !f.is_valid_node(i, j) {
                return Err(Error::RegionOutside(format!(
                    "interpolation stencil touches undefined node ({i}, {j})"
                )));
            }
            total += wi * wj * f.at(i, j);
        }
    }
    Ok(total)
}

fn integrate_disk(density: &ChartScalar, cx: f64, cy: f64, radius: f64) -> Result<f64> {
    let c = density.chart();
    if !(radius > 0.0) {
        return Err(Error::RegionOutside(format!("disk radius {radius}")));
    }
    let hmax = c.h(Axis::X).max(c.h(Axis::Y));
    let n_r = (radius / hmax).ceil() as usize + 8;
    let n_t = 4 * n_r;
    let (xr, wr) = gauss_legendre(n_r);
    let dt = 2.0 * std::f64::consts::PI / n_t as f64;
    let mut total = 0.0;
    for (x, w) in xr.iter().zip(&wr) {
        let r = 0.5 * radius * (x + 1.0);
        let mut ring = 0.0;
        for k in 0..n_t {
            let t = k as f64 * dt;
            ring += interpolate(density, cx + r * t.cos(), cy + r * t.sin())?;
        }
        total += 0.5 * radius * w * r * ring * dt;
    }
    Ok(total)
}

/// Builds a CSV dump of chart fields: one row per node, columns `x, y` and
/// then every component of every registered field.
pub struct CsvDump<'a> {
    chart: Chart,
    columns: Vec<(String, Box<dyn Fn(usize) -> f64 + 'a>)>,
}

impl<'a> CsvDump<'a> {
    pub fn new(chart: &Chart) -> Self {
        Self {
            chart: *chart,
            columns: Vec::new(),
        }
    }

    pub fn scalar(mut self, name: &str, f: &'a ChartScalar) -> Result<Self> {
        self.chart.check_same(f.chart())?;
        self.columns
            .push((name.to_string(), Box::new(move |k| f.values()[k])));
        Ok(self)
    }

    pub fn vec3(mut self, name: &str, f: &'a ChartVec3) -> Result<Self> {
        self.chart.check_same(f.chart())?;
        for (c, suffix) in ["x", "y", "z"].iter().enumerate() {
            self.columns.push((
                format!("{name}_{suffix}"),
                Box::new(move |k| f.values()[k][c]),
            ));
        }
        Ok(self)
    }

    pub fn grad3(self, name: &str, g: &'a ChartGrad3) -> Result<Self> {
        self.vec3(&format!("{name}_dx"), &g.x)?
            .vec3(&format!("{name}_dy"), &g.y)
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["x".to_string(), "y".to_string()];
        header.extend(self.columns.iter().map(|(n, _)| n.clone()));
        w.write_record(&header)?;
        let c = &self.chart;
        for j in 0..c.n {
            for i in 0..c.n {
                let k = c.index(i, j);
                let mut row = vec![
                    c.coord(Axis::X, i).to_string(),
                    c.coord(Axis::Y, j).to_string(),
                ];
                row.extend(self.columns.iter().map(|(_, f)| f(k).to_string()));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn interior_max_error(f: &ChartScalar, exact: impl Fn(f64, f64) -> f64) -> f64 {
        let c = f.chart();
        let mut e: f64 = 0.0;
        for j in c.interior(Axis::Y) {
            for i in c.interior(Axis::X) {
                let (x, y) = (c.coord(Axis::X, i), c.coord(Axis::Y, j));
                e = e.max((f.at(i, j) - exact(x, y)).abs());
            }
        }
        e
    }

    #[test]
    fn rejects_bad_charts() {
        assert!(Chart::new(8, 1.0).is_err());
        assert!(Chart::new(7, 1.0).is_err());
        assert!(Chart::new(33, 0.0).is_err());
        assert!(Chart::new(33, 1.0).unwrap().with_margin(1).is_err());
    }

    #[test]
    fn node_coordinates_are_reproducible() {
        let c = Chart::new(65, 1.5).unwrap();
        for i in 0..65 {
            assert_eq!(c.coord(Axis::X, i), -1.5 + i as f64 * (3.0 / 64.0));
        }
        assert_eq!(c.coord(Axis::X, 32), 0.0);
    }

    #[test]
    fn derivative_is_exact_on_cubics() {
        let c = Chart::new(33, 1.0).unwrap();
        let f = ChartScalar::sample(&c, |x, _| x.powi(3));
        let d = f.derivative(Axis::X).unwrap();
        assert!(interior_max_error(&d, |x, _| 3.0 * x * x) < 1e-12);
        let q = ChartScalar::sample(&c, |x, y| x.powi(4) + y.powi(4) * x);
        let dq = q.derivative(Axis::Y).unwrap();
        assert!(interior_max_error(&dq, |x, y| 4.0 * y.powi(3) * x) < 1e-12);
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let c = Chart::new(17, 2.0).unwrap();
        let f = ChartVec3::constant(&c, Vec3::new(1.0, -2.0, 3.0));
        let d = f.derivative(Axis::Y).unwrap();
        assert_eq!(d.norms().unwrap().max, 0.0);
        let p = grad_perp(&ChartScalar::constant(&c, 4.0)).unwrap();
        assert_eq!(p.norms().unwrap().max, 0.0);
    }

    #[test]
    fn derivative_converges_at_fourth_order() {
        let err = |n| {
            let c = Chart::new(n, 1.0).unwrap();
            let f = ChartScalar::sample(&c, |x, _| x.sin());
            interior_max_error(&f.derivative(Axis::X).unwrap(), |x, _| x.cos())
        };
        let ratio = err(65) / err(129);
        assert!((ratio / 16.0 - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn periodic_derivative_wraps() {
        let c = Chart::with_periodicity(33, std::f64::consts::PI, [true, false]).unwrap();
        let f = ChartScalar::sample(&c, |x, _| x.sin());
        let d = f.derivative(Axis::X).unwrap();
        assert_eq!(d.invalid_layers(), [0, 0]);
        let mut e: f64 = 0.0;
        for i in 0..33 {
            e = e.max((d.at(i, 5) - c.coord(Axis::X, i).cos()).abs());
        }
        assert!(e < 1e-4);
    }

    #[test]
    fn flat_laplacian_exact_on_quadratics() {
        let c = Chart::new(33, 1.0).unwrap();
        let f = ChartScalar::sample(&c, |x, y| x * x + y * y);
        let l = laplacian_flat(&f).unwrap();
        assert!(interior_max_error(&l, |_, _| 4.0) < 1e-11);
        let zero = ChartScalar::constant(&c, 0.0);
        let lc = laplacian_conformal(&f, &zero).unwrap();
        assert_eq!(lc.sub(&l).unwrap().norms().unwrap().max, 0.0);
    }

    #[test]
    fn div_of_perp_grad_converges_to_zero() {
        let res = |n| {
            let c = Chart::new(n, 1.0).unwrap();
            let f = ChartScalar::sample(&c, |x, y| x.exp() * y.cos());
            grad_perp(&f).unwrap().divergence().unwrap().norms().unwrap().max
        };
        let (a, b) = (res(33), res(65));
        // the discrete operators commute, so the residual is round-off only
        assert!(a < 1e-11 && b < 1e-11, "{a} {b}");
    }

    #[test]
    fn chart_mismatch_is_rejected() {
        let a = ChartScalar::constant(&Chart::new(17, 1.0).unwrap(), 1.0);
        let b = ChartScalar::constant(&Chart::new(19, 1.0).unwrap(), 1.0);
        assert!(matches!(a.add(&b), Err(Error::ChartMismatch)));
    }

    #[test]
    fn wedge_of_frame_is_normal() {
        let e1 = Vec3::new(0.6, 0.8, 0.0);
        let e2 = Vec3::new(0.0, 0.0, 1.0);
        let n = wedge(&e1, &e2);
        assert_relative_eq!(n, Vec3::new(0.8, -0.6, 0.0), epsilon = 1e-15);
        assert_eq!(wedge(&e1, &e1), Vec3::zeros());
    }

    #[test]
    fn integrates_unit_square() {
        let c = Chart::new(65, 1.0).unwrap();
        let one = ChartScalar::constant(&c, 1.0);
        let zero = ChartScalar::constant(&c, 0.0);
        let v = integrate(
            &one,
            &zero,
            Region::Rect {
                x0: -0.5,
                x1: 0.5,
                y0: -0.5,
                y1: 0.5,
            },
        )
        .unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-13);
        let d = integrate(&one, &zero, Region::Disk { cx: 0.1, cy: 0.0, radius: 0.5 }).unwrap();
        assert_relative_eq!(d, std::f64::consts::PI * 0.25, epsilon = 1e-13);
        assert!(integrate(&one, &zero, Region::Rect { x0: -0.51, x1: 0.5, y0: 0.0, y1: 0.5 }).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let c = Chart::new(9, 1.0).unwrap();
        let s = ChartScalar::sample(&c, |x, y| x + y);
        let v = ChartVec3::constant(&c, Vec3::new(1.0, 2.0, 3.0));
        let mut buf = Vec::new();
        CsvDump::new(&c)
            .scalar("s", &s)
            .unwrap()
            .vec3("v", &v)
            .unwrap()
            .write(&mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x,y,s,v_x,v_y,v_z");
        assert_eq!(text.lines().count(), 82);
    }
}
