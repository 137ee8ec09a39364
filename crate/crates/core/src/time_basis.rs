//! Reference-slab polynomial bases, exponentially weighted moment matrices, the weighted
//! projection onto the test space and the endpoint-matching interpolation `P_r`.
//!
//! A slab `(t0, t0 + tau]` is mapped to `s ∈ [0, 1]`. The weight `exp(-2 rho t)` becomes
//! `exp(-2 rho t0) * exp(-lambda s)` with `lambda = 2 rho tau`; the first factor is kept
//! apart as the slab prefactor and only the second enters the moment matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::quadrature::{gauss_legendre, gauss_lobatto};

/// Strictly increasing knots `0 = t_0 < ... < t_M = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePartition {
    knots: Vec<f64>,
}

impl TimePartition {
    pub fn uniform(final_time: f64, slabs: usize) -> Self {
        assert!(slabs >= 1 && final_time > 0.0);
        let knots = (0..=slabs)
            .map(|m| final_time * m as f64 / slabs as f64)
            .collect();
        Self { knots }
    }

    pub fn from_knots(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig("time knots must be strictly increasing".into()));
        }
        Ok(Self { knots })
    }

    /// Snaps knots onto the given kink times; fails if a kink lies inside a slab.
    pub fn resolve_kinks(&mut self, kinks: &[f64]) -> Result<()> {
        let tol = 1e-10 * self.final_time().abs().max(1.0);
        for &k in kinks {
            match self.knots.iter().position(|&t| (t - k).abs() <= tol) {
                Some(i) => self.knots[i] = k,
                None => return Err(Error::KinkNotResolved { t: k }),
            }
        }
        Ok(())
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn slabs(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn start(&self, m: usize) -> f64 {
        self.knots[m]
    }

    pub fn tau(&self, m: usize) -> f64 {
        self.knots[m + 1] - self.knots[m]
    }

    pub fn max_tau(&self) -> f64 {
        (0..self.slabs()).map(|m| self.tau(m)).fold(0.0, f64::max)
    }

    pub fn final_time(&self) -> f64 {
        *self.knots.last().expect("partition has knots")
    }

    /// Index of the knot equal to `t` (relative tolerance `1e-12`).
    pub fn knot_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * self.final_time().abs().max(1.0);
        self.knots.iter().position(|&k| (k - t).abs() <= tol)
    }

    /// Slab index and reference coordinate for `t`, with slabs half-open `(t_{m-1}, t_m]`;
    /// `t = 0` maps to the start of the first slab.
    pub fn locate(&self, t: f64) -> Option<(usize, f64)> {
        let t0 = self.knots[0];
        let tn = self.final_time();
        let tol = 1e-14 * tn.abs().max(1.0);
        if t < t0 - tol || t > tn + tol {
            return None;
        }
        let m = match self.knots.partition_point(|&k| k < t) {
            0 => 0,
            p => (p - 1).min(self.slabs() - 1),
        };
        let s = ((t - self.knots[m]) / self.tau(m)).clamp(0.0, 1.0);
        Some((m, s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeScheme {
    /// Continuous trial functions of degree `r`, discontinuous test functions of degree `r - 1`.
    Cgp,
    /// Discontinuous trial and test functions of the same degree with an upwind jump.
    Dg,
}

impl std::fmt::Display for TimeScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TimeScheme::Cgp => "cgp",
            TimeScheme::Dg => "dg",
        })
    }
}

/// Trial and test bases on the reference slab.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeBasisPair {
    pub scheme: TimeScheme,
    /// Trial degree.
    pub degree: usize,
    /// Trial interpolation nodes (Gauss-Lobatto; `{0}` for the constant dG basis).
    pub nodes: Vec<f64>,
    pub trial: Vec<Poly>,
    pub trial_deriv: Vec<Poly>,
    /// Shifted Legendre polynomials.
    pub test: Vec<Poly>,
}

/// cGP(r) bases: Lobatto-Lagrange trial of degree `r`, Legendre test of degree `r - 1`.
pub fn build_time_bases(r: usize) -> Result<TimeBasisPair> {
    if r < 1 {
        return Err(Error::DegreeTooSmall { got: r, min: 1 });
    }
    let nodes = gauss_lobatto(r + 1).nodes;
    let trial = Poly::lagrange_basis(&nodes);
    Ok(TimeBasisPair {
        scheme: TimeScheme::Cgp,
        degree: r,
        trial_deriv: trial.iter().map(Poly::derivative).collect(),
        trial,
        test: (0..r).map(Poly::shifted_legendre).collect(),
        nodes,
    })
}

/// dG(q) bases: trial and test of degree `q >= 0`.
pub fn build_dg_bases(q: usize) -> TimeBasisPair {
    let nodes = if q == 0 { vec![0.0] } else { gauss_lobatto(q + 1).nodes };
    let trial = Poly::lagrange_basis(&nodes);
    TimeBasisPair {
        scheme: TimeScheme::Dg,
        degree: q,
        trial_deriv: trial.iter().map(Poly::derivative).collect(),
        trial,
        test: (0..=q).map(Poly::shifted_legendre).collect(),
        nodes,
    }
}

impl TimeBasisPair {
    pub fn for_scheme(scheme: TimeScheme, degree: usize) -> Result<Self> {
        match scheme {
            TimeScheme::Cgp => build_time_bases(degree),
            TimeScheme::Dg => Ok(build_dg_bases(degree)),
        }
    }

    pub fn n_trial(&self) -> usize {
        self.trial.len()
    }

    pub fn n_test(&self) -> usize {
        self.test.len()
    }

    pub fn trial_values(&self, s: f64) -> Vec<f64> {
        self.trial.iter().map(|p| p.eval(s)).collect()
    }

    pub fn trial_derivatives(&self, s: f64) -> Vec<f64> {
        self.trial_deriv.iter().map(|p| p.eval(s)).collect()
    }

    pub fn test_values(&self, s: f64) -> Vec<f64> {
        self.test.iter().map(|p| p.eval(s)).collect()
    }

    fn max_degree(&self) -> usize {
        let trial = self.trial.iter().map(Poly::degree).max().unwrap_or(0);
        let test = self.test.iter().map(Poly::degree).max().unwrap_or(0);
        2 * trial.max(test)
    }
}

/// `mu_j(lambda) = ∫_0^1 s^j exp(-lambda s) ds` for `j = 0..=jmax`.
///
/// Indices `j <= lambda` use the integration-by-parts recurrence
/// `mu_j = (j mu_{j-1} - exp(-lambda)) / lambda`, which only amplifies rounding when
/// `j > lambda`. The remaining indices use the positive series
/// `mu_j = exp(-lambda) sum_n lambda^n j! / (j+n+1)!`, which also covers `lambda -> 0`.
pub fn exp_moments(lambda: f64, jmax: usize) -> Vec<f64> {
    assert!(lambda >= 0.0, "moment weight must be nonnegative");
    let mut mu = vec![0.0; jmax + 1];
    if lambda == 0.0 {
        for (j, m) in mu.iter_mut().enumerate() {
            *m = 1.0 / (j as f64 + 1.0);
        }
        return mu;
    }
    let e = (-lambda).exp();
    let forward = if lambda >= 1.0 { (lambda.floor() as usize).min(jmax) + 1 } else { 0 };
    if forward > 0 {
        mu[0] = -(-lambda).exp_m1() / lambda;
        for j in 1..forward {
            mu[j] = (j as f64 * mu[j - 1] - e) / lambda;
        }
    }
    for (j, m) in mu.iter_mut().enumerate().skip(forward) {
        let mut term = 1.0 / (j as f64 + 1.0);
        let mut sum = term;
        let mut n = 1.0;
        while term > 1e-17 * sum {
            term *= lambda / (j as f64 + 1.0 + n);
            sum += term;
            n += 1.0;
        }
        *m = e * sum;
    }
    mu
}

/// `∫_0^1 p q exp(-lambda s) ds` from monomial moments.
fn weighted_product(p: &Poly, q: &Poly, mu: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (a, &pa) in p.coeffs.iter().enumerate() {
        for (b, &qb) in q.coeffs.iter().enumerate() {
            acc += pa * qb * mu[a + b];
        }
    }
    acc
}

/// Exact weighted moment matrices of one slab.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMoments {
    pub lambda: f64,
    pub tau: f64,
    /// `exp(-2 rho t0)`.
    pub prefactor: f64,
    /// `g0[(i, j)] = ∫ phi_j psi_i w`.
    pub g0: DMatrix<f64>,
    /// `g1[(i, j)] = ∫ phi_j' psi_i w`.
    pub g1: DMatrix<f64>,
    /// Test Gram matrix `∫ psi_i psi_k w`.
    pub w: DMatrix<f64>,
    /// Trial Gram matrix `∫ phi_j phi_l w`.
    pub trial_gram: DMatrix<f64>,
}

pub fn weighted_moments(basis: &TimeBasisPair, t_prev: f64, tau: f64, rho: f64) -> WeightedMoments {
    assert!(tau > 0.0 && rho >= 0.0);
    let lambda = 2.0 * rho * tau;
    let mu = exp_moments(lambda, basis.max_degree());
    let (nt, nu) = (basis.n_test(), basis.n_trial());
    let g0 = DMatrix::from_fn(nt, nu, |i, j| weighted_product(&basis.trial[j], &basis.test[i], &mu));
    let g1 = DMatrix::from_fn(nt, nu, |i, j| {
        weighted_product(&basis.trial_deriv[j], &basis.test[i], &mu)
    });
    let w = DMatrix::from_fn(nt, nt, |i, k| weighted_product(&basis.test[i], &basis.test[k], &mu));
    let trial_gram =
        DMatrix::from_fn(nu, nu, |j, l| weighted_product(&basis.trial[j], &basis.trial[l], &mu));
    WeightedMoments {
        lambda,
        tau,
        prefactor: (-2.0 * rho * t_prev).exp(),
        g0,
        g1,
        w,
        trial_gram,
    }
}

impl WeightedMoments {
    /// Maps trial coefficients to the test-basis coefficients of their weighted projection.
    pub fn projection_matrix(&self) -> DMatrix<f64> {
        self.w
            .clone()
            .cholesky()
            .expect("test Gram matrix is SPD")
            .solve(&self.g0)
    }

    /// The weight `exp(-lambda s)` on the reference slab.
    pub fn weight(&self, s: f64) -> f64 {
        (-self.lambda * s).exp()
    }
}

/// Weighted L² projection of a vector-valued polynomial (monomial coefficients in `s`,
/// `input[a]` multiplying `s^a`) onto the test space. Returns test-basis coefficients.
pub fn project_test_space(
    input: &[Vec<f64>],
    basis: &TimeBasisPair,
    moments: &WeightedMoments,
) -> Vec<Vec<f64>> {
    let dim = input.first().map_or(0, Vec::len);
    let nt = basis.n_test();
    let test_deg = nt.saturating_sub(1);
    let mu = exp_moments(moments.lambda, input.len() + test_deg);
    let mut rhs = DMatrix::<f64>::zeros(nt, dim);
    for (i, psi) in basis.test.iter().enumerate() {
        for (a, coef) in input.iter().enumerate() {
            let m: f64 = psi.coeffs.iter().enumerate().map(|(b, &pb)| pb * mu[a + b]).sum();
            for (d, &c) in coef.iter().enumerate() {
                rhs[(i, d)] += m * c;
            }
        }
    }
    let x = moments.w.clone().cholesky().expect("test Gram matrix is SPD").solve(&rhs);
    (0..nt).map(|i| x.row(i).iter().copied().collect()).collect()
}

/// `P_r v` in the cGP trial basis: matches `v` at both slab ends and is weighted-orthogonal
/// to polynomials of degree `r - 2`. `v` is evaluated on the reference slab.
pub fn interpolate_pr<F>(basis: &TimeBasisPair, moments: &WeightedMoments, v: F) -> Vec<Vec<f64>>
where
    F: Fn(f64) -> Vec<f64>,
{
    assert_eq!(basis.scheme, TimeScheme::Cgp, "P_r is defined on the cGP trial space");
    let r = basis.degree;
    let v0 = v(0.0);
    let v1 = v(1.0);
    let dim = v0.len();
    let mut out = vec![vec![0.0; dim]; r + 1];
    out[0] = v0;
    out[r] = v1;
    if r == 1 {
        return out;
    }
    let n = r - 1;
    let rule = gauss_legendre(2 * r + 22);
    let mut rhs = DMatrix::<f64>::zeros(n, dim);
    for (&s, &wq) in rule.nodes.iter().zip(&rule.weights) {
        let vs = v(s);
        let ws = wq * moments.weight(s);
        for i in 0..n {
            let psi = basis.test[i].eval(s);
            for d in 0..dim {
                rhs[(i, d)] += ws * psi * vs[d];
            }
        }
    }
    for i in 0..n {
        for d in 0..dim {
            rhs[(i, d)] -= moments.g0[(i, 0)] * out[0][d] + moments.g0[(i, r)] * out[r][d];
        }
    }
    let sys = DMatrix::from_fn(n, n, |i, j| moments.g0[(i, j + 1)]);
    let x = sys.lu().solve(&rhs).expect("P_r interior system is nonsingular");
    for j in 0..n {
        out[j + 1] = x.row(j).iter().copied().collect();
    }
    out
}

/// Evaluates a trial-coefficient polynomial at `s`.
pub fn eval_trial(basis: &TimeBasisPair, coeffs: &[Vec<f64>], s: f64) -> Vec<f64> {
    let phi = basis.trial_values(s);
    let dim = coeffs.first().map_or(0, Vec::len);
    let mut out = vec![0.0; dim];
    for (p, c) in phi.iter().zip(coeffs) {
        for (o, &ci) in out.iter_mut().zip(c) {
            *o += p * ci;
        }
    }
    out
}

/// Evaluates a test-coefficient polynomial at `s`.
pub fn eval_test(basis: &TimeBasisPair, coeffs: &[Vec<f64>], s: f64) -> Vec<f64> {
    let psi = basis.test_values(s);
    let dim = coeffs.first().map_or(0, Vec::len);
    let mut out = vec![0.0; dim];
    for (p, c) in psi.iter().zip(coeffs) {
        for (o, &ci) in out.iter_mut().zip(c) {
            *o += p * ci;
        }
    }
    out
}
