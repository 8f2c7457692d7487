//! One-dimensional quadrature and interpolation rules shared by the chart
//! and sphere-grid code.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Simpson weights for `intervals` equal intervals of width `h`.
///
/// An odd interval count closes with a Simpson 3/8 panel; a single interval
/// falls back to the trapezoid rule.
pub fn simpson_weights(intervals: usize, h: f64) -> Vec<f64> {
    let n = intervals + 1;
    let mut w = vec![0.0; n];
    match intervals {
        0 => {}
        1 => {
            w[0] = 0.5 * h;
            w[1] = 0.5 * h;
        }
        _ => {
            let simpson_end = if intervals % 2 == 0 {
                intervals
            } else {
                intervals - 3
            };
            let mut k = 0;
            while k < simpson_end {
                w[k] += h / 3.0;
                w[k + 1] += 4.0 * h / 3.0;
                w[k + 2] += h / 3.0;
                k += 2;
            }
            if simpson_end < intervals {
                let s = simpson_end;
                w[s] += 3.0 * h / 8.0;
                w[s + 1] += 9.0 * h / 8.0;
                w[s + 2] += 9.0 * h / 8.0;
                w[s + 3] += 3.0 * h / 8.0;
            }
        }
    }
    w
}

/// Lagrange basis weights for interpolating at `t` (in units of the node
/// spacing) from nodes located at integer offsets `offsets`.
pub fn lagrange_weights(offsets: &[f64], t: f64) -> Vec<f64> {
    offsets
        .iter()
        .enumerate()
        .map(|(a, &xa)| {
            offsets
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .fold(1.0, |acc, (_, &xb)| acc * (t - xb) / (xa - xb))
        })
        .collect()
}

/// Cumulative integral of equally spaced samples, fourth order.
///
/// Returns `c` with `c[k] = ∫_{x_0}^{x_k} f` using a cubic through four
/// neighbouring samples on every interval (one-sided at the two ends).
pub fn cumulative_integral<T>(values: &[T], h: f64) -> Vec<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let m = values.len();
    assert!(m >= 4, "cumulative_integral needs at least four samples");
    let zero = values[0] - values[0];
    let mut out = vec![zero; m];
    let v = |k: usize, w: f64| values[k] * w;
    for k in 0..m - 1 {
        let piece = if k == 0 {
            v(0, 9.0) + v(1, 19.0) - v(2, 5.0) + values[3]
        } else if k == m - 2 {
            v(m - 1, 9.0) + v(m - 2, 19.0) - v(m - 3, 5.0) + values[m - 4]
        } else {
            v(k, 13.0) + v(k + 1, 13.0) - values[k - 1] - values[k + 2]
        };
        out[k + 1] = out[k] + piece * (h / 24.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(6);
        // degree 11 is exact for 6 nodes
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((integral - 2.0 / 11.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn simpson_handles_odd_interval_counts() {
        for intervals in [2usize, 3, 5, 8, 9] {
            let h = 1.0 / intervals as f64;
            let w = simpson_weights(intervals, h);
            let integral: f64 = w
                .iter()
                .enumerate()
                .map(|(i, w)| w * (i as f64 * h).powi(3))
                .sum();
            assert!((integral - 0.25).abs() < 1e-14, "intervals {intervals}");
        }
    }

    #[test]
    fn cumulative_integral_is_exact_for_cubics() {
        let h = 0.1;
        let f: Vec<f64> = (0..11).map(|i| (i as f64 * h).powi(3) - 2.0 * i as f64 * h).collect();
        let c = cumulative_integral(&f, h);
        for (k, ck) in c.iter().enumerate() {
            let x = k as f64 * h;
            assert!((ck - (x.powi(4) / 4.0 - x * x)).abs() < 1e-13);
        }
    }

    #[test]
    fn lagrange_reproduces_quintic() {
        let offsets = [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        let t = 0.37;
        let w = lagrange_weights(&offsets, t);
        let p = |x: f64| x.powi(5) - 3.0 * x * x + 1.0;
        let v: f64 = offsets.iter().zip(&w).map(|(x, w)| w * p(*x)).sum();
        assert!((v - p(t)).abs() < 1e-12);
    }
}
