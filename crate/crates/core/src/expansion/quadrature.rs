//! Gauss–Legendre rules and their collapsed (Duffy) extension to simplices.

use crate::error::{Error, Result};

/// Node counts per axis, in increasing order; each rung's error is estimated
/// from the next.
pub const NODE_LADDER: [usize; 3] = [8, 12, 16];

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = ((4 * i + 3) as f64 * std::f64::consts::PI / (4 * n + 2) as f64).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [-1, 1] to [0, 1]; node i and its mirror.
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Next node count on the ladder, used for the error estimate.
pub fn next_rung(n: usize) -> usize {
    NODE_LADDER
        .iter()
        .copied()
        .find(|&k| k > n)
        .unwrap_or(n + 4)
}

/// Nested integral `int_{s_1 + ... + s_N <= t, s >= 0} f(s) ds` by the
/// collapsed product rule: `s_k = (t - s_1 - ... - s_{k-1}) u_k`.
pub fn simplex_integral(
    dim: usize,
    t: f64,
    nodes: usize,
    f: &mut impl FnMut(&[f64]) -> f64,
) -> f64 {
    let (u, w) = gauss_legendre(nodes);
    let mut s = Vec::with_capacity(dim);
    fn rec(
        level: usize,
        dim: usize,
        remaining: f64,
        u: &[f64],
        w: &[f64],
        s: &mut Vec<f64>,
        f: &mut impl FnMut(&[f64]) -> f64,
    ) -> f64 {
        if level == dim {
            return f(s);
        }
        let mut acc = 0.0;
        for (ui, wi) in u.iter().zip(w) {
            s.push(remaining * ui);
            acc += wi * remaining * rec(level + 1, dim, remaining - remaining * ui, u, w, s, f);
            s.pop();
        }
        acc
    }
    rec(0, dim, t, &u, &w, &mut s, f)
}

/// `I_N(t)`, the volume of the `N`-simplex of side `t`, by the same engine.
pub fn simplex_volume(order: usize, t: f64) -> Result<f64> {
    if order == 0 {
        return Err(Error::OrderOutOfRange {
            order,
            reason: "simplex dimension must be >= 1".into(),
        });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    Ok(simplex_integral(order, t, NODE_LADDER[0], &mut |_| 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_polynomials() {
        for n in [1usize, 2, 5, 8, 12, 16] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!(
                    (got - 1.0 / (deg + 1) as f64).abs() < 1e-14,
                    "n {n} deg {deg}"
                );
            }
        }
    }

    #[test]
    fn nodes_are_symmetric() {
        let (x, _) = gauss_legendre(12);
        for i in 0..12 {
            assert!((x[i] + x[11 - i] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn simplex_volume_small_cases() {
        assert!((simplex_volume(2, 1.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((simplex_volume(1, 3.0).unwrap() - 3.0).abs() < 1e-14);
        assert!(simplex_volume(0, 1.0).is_err());
    }
}
