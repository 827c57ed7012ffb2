//! Gauss-Legendre quadrature on the unit interval.

use std::sync::OnceLock;

/// Highest point count kept in the cache. Degree p integrands with rational
/// weights are integrated with p+1 points per direction, so 16 covers every
/// degree this crate instantiates.
pub const MAX_POINTS: usize = 16;

/// Nodes and weights of an n-point Gauss-Legendre rule mapped to [0, 1].
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Integrate a function over [0, 1].
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn build_rule(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-based initial guess, then Newton on P_n.
        let mut x = -f64::cos(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [-1, 1] -> [0, 1].
        nodes[i] = 0.5 * (x + 1.0);
        weights[i] = 0.5 * w;
    }
    Rule { nodes, weights }
}

/// n-point rule on [0, 1], exact for polynomials of degree 2n-1.
pub fn gauss_legendre(n: usize) -> &'static Rule {
    assert!(n >= 1 && n <= MAX_POINTS, "unsupported point count {n}");
    static CACHE: OnceLock<Vec<Rule>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| (1..=MAX_POINTS).map(build_rule).collect());
    &cache[n - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_points_integrate_quartic_exactly() {
        let rule = gauss_legendre(3);
        let val = rule.integrate(|x| x.powi(4));
        assert!((val - 0.2).abs() < 1e-14);
    }

    #[test]
    fn degree_2n_minus_1_is_exact_for_all_cached_rules() {
        for n in 1..=MAX_POINTS {
            let rule = gauss_legendre(n);
            let deg = 2 * n - 1;
            let exact = 1.0 / (deg as f64 + 1.0);
            let val = rule.integrate(|x| x.powi(deg as i32));
            assert!(
                (val - exact).abs() < 1e-13,
                "n={n} deg={deg}: {val} vs {exact}"
            );
        }
    }

    #[test]
    fn weights_sum_to_one() {
        for n in 1..=MAX_POINTS {
            let s: f64 = gauss_legendre(n).weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }
}
