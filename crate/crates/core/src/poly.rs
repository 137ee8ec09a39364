//! Dense univariate polynomials in the monomial basis.

use std::ops::Mul;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    /// `coeffs[j]` multiplies `s^j`.
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::constant(0.0);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| j as f64 * c)
                .collect(),
        )
    }

    /// Shifted Legendre polynomial `P_n(2s - 1)` on `[0, 1]`.
    pub fn shifted_legendre(n: usize) -> Poly {
        let mut coeffs = vec![0.0; n + 1];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let sign = if (n + k).is_multiple_of(2) { 1.0 } else { -1.0 };
            *c = sign * binomial(n, k) * binomial(n + k, k);
        }
        Poly::new(coeffs)
    }

    /// Lagrange basis over `nodes`: the `j`-th polynomial is 1 at `nodes[j]`, 0 at the others.
    pub fn lagrange_basis(nodes: &[f64]) -> Vec<Poly> {
        (0..nodes.len())
            .map(|j| {
                let mut p = Poly::constant(1.0);
                for (l, &z) in nodes.iter().enumerate() {
                    if l != j {
                        let d = nodes[j] - z;
                        p = &p * &Poly::new(vec![-z / d, 1.0 / d]);
                    }
                }
                p
            })
            .collect()
    }
}

impl Mul for &Poly {
    type Output = Poly;

    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_legendre_low_orders() {
        assert_eq!(Poly::shifted_legendre(0).coeffs, vec![1.0]);
        assert_eq!(Poly::shifted_legendre(1).coeffs, vec![-1.0, 2.0]);
        assert_eq!(Poly::shifted_legendre(2).coeffs, vec![1.0, -6.0, 6.0]);
        for n in 0..8 {
            assert!((Poly::shifted_legendre(n).eval(1.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lagrange_is_nodal() {
        let nodes = [0.0, 0.3, 0.5, 1.0];
        let basis = Poly::lagrange_basis(&nodes);
        for (j, p) in basis.iter().enumerate() {
            for (i, &z) in nodes.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((p.eval(z) - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn derivative_of_cubic() {
        let p = Poly::new(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(p.derivative().coeffs, vec![2.0, 6.0, 12.0]);
        assert_eq!(Poly::constant(5.0).derivative().eval(0.3), 0.0);
    }
}
