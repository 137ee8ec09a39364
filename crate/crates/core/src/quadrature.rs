//! Gauss-Legendre and Gauss-Lobatto rules, mapped to the unit interval.

use std::f64::consts::PI;

/// A quadrature rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[lo, hi]`.
    pub fn integrate(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = hi - lo;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * f(lo + h * s))
            .sum::<f64>()
            * h
    }

    /// Nodes and weights mapped onto `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = hi - lo;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&s, &w)| (lo + h * s, w * h))
    }
}

/// Legendre polynomial `P_n(x)` and its derivative on `[-1, 1]`.
pub fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // endpoint limit P_n'(±1) = (±1)^{n-1} n(n+1)/2
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (p0 - x * p1) / (1.0 - x * x)
    };
    (p1, dp)
}

/// `n`-point Gauss-Legendre rule on `[0, 1]`, exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // reference [-1,1] -> [0,1], ascending order
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    Rule { nodes, weights }
}

/// `n`-point Gauss-Lobatto rule on `[0, 1]` (endpoints included), exact for degree `2n - 3`.
pub fn gauss_lobatto(n: usize) -> Rule {
    assert!(n >= 2, "Gauss-Lobatto rule needs at least two points");
    let deg = n - 1;
    let mut xs: Vec<f64> = (0..n).map(|i| -(PI * i as f64 / deg as f64).cos()).collect();
    let nf = n as f64;
    for x in xs.iter_mut().take(n - 1).skip(1) {
        for _ in 0..100 {
            let (p, _) = legendre_and_derivative(deg, *x);
            let (pm, _) = legendre_and_derivative(deg - 1, *x);
            let dx = (*x * p - pm) / (nf * p);
            *x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
    }
    xs[0] = -1.0;
    xs[n - 1] = 1.0;
    let weights = xs
        .iter()
        .map(|&x| {
            let (p, _) = legendre_and_derivative(deg, x);
            1.0 / ((deg * n) as f64 * p * p)
        })
        .collect();
    let nodes = xs.iter().map(|&x| 0.5 * (1.0 + x)).collect();
    Rule { nodes, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rules_integrate_monomials() {
        for n in 1..=20 {
            let rule = gauss_legendre(n);
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for p in 0..2 * n {
                let exact = 1.0 / (p as f64 + 1.0);
                let got = rule.integrate(0.0, 1.0, |s| s.powi(p as i32));
                assert!((got - exact).abs() < 1e-14, "n={n} p={p}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn lobatto_rules_include_endpoints() {
        for n in 2..=10 {
            let rule = gauss_lobatto(n);
            assert_eq!(rule.nodes[0], 0.0);
            assert_eq!(rule.nodes[n - 1], 1.0);
            for p in 0..=(2 * n - 3) {
                let got = rule.integrate(0.0, 1.0, |s| s.powi(p as i32));
                assert!((got - 1.0 / (p as f64 + 1.0)).abs() < 1e-14);
            }
        }
        let three = gauss_lobatto(3);
        assert!((three.nodes[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sixty_four_points_are_ordered() {
        let rule = gauss_legendre(64);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(rule.nodes[0] > 0.0 && rule.nodes[63] < 1.0);
    }
}
