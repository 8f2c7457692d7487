//! Real orthonormal spherical harmonics as homogeneous harmonic polynomials.
//!
//! `Y_lm` is stored as a polynomial in `(x, y, z)` of degree `l`; evaluated
//! at unit vectors it is the usual real basis, and its Euclidean gradient and
//! Hessian give tangential derivatives by the chain rule.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Matrix3;

use crate::chart::Vec3;
use crate::error::{Error, Result};

/// Highest supported degree.
pub const MAX_DEGREE: usize = 10;

/// Sparse polynomial in three variables, keyed by exponent triple.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly3 {
    terms: BTreeMap<[u32; 3], f64>,
}

impl Poly3 {
    pub fn constant(c: f64) -> Self {
        Self::monomial(c, [0, 0, 0])
    }

    pub fn monomial(c: f64, exps: [u32; 3]) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(exps, c);
        }
        Self { terms }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            *terms.entry(*e).or_insert(0.0) += c;
        }
        terms.retain(|_, c| *c != 0.0);
        Self { terms }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (*e, c * s))
                .filter(|(_, c)| *c != 0.0)
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                *terms.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        terms.retain(|_, c: &mut f64| *c != 0.0);
        Self { terms }
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(1.0), |acc, _| acc.mul(self))
    }

    pub fn derivative(&self, axis: usize) -> Self {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[axis] > 0 {
                let mut d = *e;
                d[axis] -= 1;
                *terms.entry(d).or_insert(0.0) += c * e[axis] as f64;
            }
        }
        Self { terms }
    }

    pub fn eval(&self, p: &Vec3) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * p.x.powi(e[0] as i32) * p.y.powi(e[1] as i32) * p.z.powi(e[2] as i32))
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Coefficients of `d^m/dt^m P_l(t)` in ascending powers of `t`.
fn legendre_derivative(l: usize, m: usize) -> Vec<f64> {
    let mut c = vec![0.0; l + 1];
    for k in 0..=l / 2 {
        let num = factorial(2 * l - 2 * k);
        let den = 2f64.powi(l as i32) * factorial(k) * factorial(l - k) * factorial(l - 2 * k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        c[l - 2 * k] = sign * num / den;
    }
    for _ in 0..m {
        c = (1..c.len()).map(|p| c[p] * p as f64).collect();
        if c.is_empty() {
            c.push(0.0);
        }
    }
    c
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Index of `(l, m)` in the flat coefficient vector, `m ∈ [-l, l]`.
pub fn harmonic_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Inverse of [`harmonic_index`].
pub fn harmonic_degree_order(index: usize) -> (usize, i64) {
    let l = (index as f64).sqrt().floor() as usize;
    let l = if (l + 1) * (l + 1) <= index { l + 1 } else { l };
    (l, index as i64 - (l * l + l) as i64)
}

pub fn harmonic_count(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 1)
}

fn real_harmonic(l: usize, m: i64) -> Poly3 {
    let am = m.unsigned_abs() as usize;
    let x = Poly3::monomial(1.0, [1, 0, 0]);
    let y = Poly3::monomial(1.0, [0, 1, 0]);
    let r2 = Poly3::monomial(1.0, [2, 0, 0])
        .add(&Poly3::monomial(1.0, [0, 2, 0]))
        .add(&Poly3::monomial(1.0, [0, 0, 2]));

    // r^{l-m} P_l^{(m)}(z/r), homogeneous of degree l - m
    let dp = legendre_derivative(l, am);
    let mut zonal = Poly3::default();
    for (p, c) in dp.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let rest = (l - am - p) / 2;
        zonal = zonal.add(&Poly3::monomial(*c, [0, 0, p as u32]).mul(&r2.pow(rest as u32)));
    }

    // Re / Im of (x + iy)^m
    let mut re = Poly3::default();
    let mut im = Poly3::default();
    for k in 0..=am {
        let binom = factorial(am) / (factorial(k) * factorial(am - k));
        let term = x.pow((am - k) as u32).mul(&y.pow(k as u32)).scale(binom);
        match k % 4 {
            0 => re = re.add(&term),
            1 => im = im.add(&term),
            2 => re = re.add(&term.scale(-1.0)),
            _ => im = im.add(&term.scale(-1.0)),
        }
    }

    let mut norm = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - am) / factorial(l + am)).sqrt();
    if m != 0 {
        norm *= 2f64.sqrt();
    }
    let angular = if m >= 0 { re } else { im };
    angular.mul(&zonal).scale(norm)
}

/// Value, gradient and Hessian of one harmonic polynomial at a point.
#[derive(Clone, Copy, Debug)]
pub struct HarmonicJet {
    pub value: f64,
    pub grad: Vec3,
    pub hess: Matrix3<f64>,
}

#[derive(Clone, Debug)]
struct HarmonicPoly {
    value: Poly3,
    grad: [Poly3; 3],
    hess: [[Poly3; 3]; 3],
}

/// The real basis `Y_lm`, `l ≤ lmax`, with derivatives.
#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    lmax: usize,
    polys: Vec<HarmonicPoly>,
}

impl HarmonicBasis {
    pub fn new(lmax: usize) -> Result<Self> {
        if lmax > MAX_DEGREE {
            return Err(Error::InvalidParameter(format!(
                "harmonic degree {lmax} exceeds supported maximum {MAX_DEGREE}"
            )));
        }
        let mut polys = Vec::with_capacity(harmonic_count(lmax));
        for l in 0..=lmax {
            for m in -(l as i64)..=(l as i64) {
                let value = real_harmonic(l, m);
                let grad = [0, 1, 2].map(|a| value.derivative(a));
                let hess = [0, 1, 2].map(|a| [0, 1, 2].map(|b| grad[a].derivative(b)));
                polys.push(HarmonicPoly { value, grad, hess });
            }
        }
        Ok(Self { lmax, polys })
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn value(&self, index: usize, p: &Vec3) -> f64 {
        self.polys[index].value.eval(p)
    }

    pub fn jet(&self, index: usize, p: &Vec3) -> HarmonicJet {
        let hp = &self.polys[index];
        HarmonicJet {
            value: hp.value.eval(p),
            grad: Vec3::new(hp.grad[0].eval(p), hp.grad[1].eval(p), hp.grad[2].eval(p)),
            hess: Matrix3::from_fn(|a, b| hp.hess[a][b].eval(p)),
        }
    }
}
