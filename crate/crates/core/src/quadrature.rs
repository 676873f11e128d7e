//! Gauss-Legendre rules and Legendre polynomials on reference intervals.

use std::f64::consts::PI;

/// Gauss-Legendre rule on `[-1, 1]`: `(nodes, weights)` in increasing node order.
///
/// Nodes are the roots of `P_n`, located by Newton iteration from the
/// Chebyshev-like initial guesses. Exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
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

/// Gauss-Legendre rule mapped to `[lo, hi]`.
pub fn gauss_on(n: usize, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    x.into_iter().zip(w).map(move |(x, w)| (mid + half * x, half * w))
}

/// Legendre polynomial `P_n(x)` and its derivative via the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // endpoint limit P_n'(+-1) = (+-1)^(n-1) n(n+1)/2
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * (n * (n + 1)) as f64 / 2.0
    } else {
        n as f64 * (x * p - p_prev) / (x * x - 1.0)
    };
    (p, dp)
}

/// Legendre polynomial `P_n(x)` on `[-1, 1]`.
pub fn legendre(n: usize, x: f64) -> f64 {
    legendre_with_derivative(n, x).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_monomials_exactly() {
        for n in 1..=8 {
            for deg in 0..(2 * n) {
                let (x, w) = gauss_legendre(n);
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn three_point_rule_matches_table() {
        let (x, w) = gauss_legendre(3);
        let r = (0.6f64).sqrt();
        assert!((x[0] + r).abs() < 1e-15 && x[1] == 0.0 && (x[2] - r).abs() < 1e-15);
        assert!((w[0] - 5.0 / 9.0).abs() < 1e-15 && (w[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn mapped_rule_integrates_on_interval() {
        let s: f64 = gauss_on(4, 2.0, 5.0).map(|(t, w)| w * t * t * t).sum();
        assert!((s - (625.0 - 16.0) / 4.0).abs() < 1e-11);
    }

    #[test]
    fn legendre_values() {
        assert_eq!(legendre(0, 0.3), 1.0);
        assert!((legendre(2, 0.5) - (-0.125)).abs() < 1e-15);
        assert!((legendre(3, 1.0) - 1.0).abs() < 1e-15);
        let (_, d) = legendre_with_derivative(3, 1.0);
        assert!((d - 6.0).abs() < 1e-12);
    }
}
