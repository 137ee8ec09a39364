use nalgebra::DMatrix;
use serde::Serialize;

use super::star::star_norm;
use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::manufactured::SeparableField;
use crate::model::ProblemSpec;
use crate::solver::{slab_load, DiscreteSolution};
use crate::space::SpatialSystem1D;
use crate::time_basis::{interpolate_pr, weighted_moments, TimeScheme, WeightedMoments};

/// Per-knot sides of the discrete energy inequality
/// `½⟨M0 U(t_ℓ), U(t_ℓ)⟩e^{-2ρt_ℓ} + γ‖ΠU‖²_{ρ,[0,t_ℓ]} ≤ Σ_{m≤ℓ} ⟨f, ΠU⟩_{ρ,m} + ½⟨M0 U0, U0⟩`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub gamma: f64,
    /// `⟨M0 U(t_ℓ), U(t_ℓ)⟩e^{-2ρt_ℓ}` for `ℓ = 0..=M`.
    pub energies: Vec<f64>,
    /// `‖ΠU‖²_{ρ,[0,t_ℓ]}` for `ℓ = 1..=M`.
    pub projected_sq: Vec<f64>,
    /// `Σ_{m≤ℓ} ⟨f, ΠU⟩_{ρ,m}` for `ℓ = 1..=M`.
    pub work: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `rhs - lhs` per knot `ℓ = 1..=M`.
    pub margins: Vec<f64>,
    pub scales: Vec<f64>,
}

impl StabilityReport {
    /// Smallest margin and its knot index (1-based).
    pub fn min_margin(&self) -> (usize, f64) {
        self.margins
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &m)| if m < acc.1 { (i + 1, m) } else { acc })
    }

    /// Smallest margin relative to its scale.
    pub fn min_relative_margin(&self) -> f64 {
        self.margins.iter().zip(&self.scales).map(|(m, s)| m / s).fold(f64::INFINITY, f64::min)
    }

    fn verify(&self, tol: f64) -> Result<()> {
        for (i, (&m, &s)) in self.margins.iter().zip(&self.scales).enumerate() {
            if m < -tol * s {
                return Err(Error::StabilityViolated { knot: i + 1, margin: m, scale: s });
            }
        }
        Ok(())
    }
}

fn require_cgp(sol: &DiscreteSolution) -> Result<()> {
    if sol.scheme() != TimeScheme::Cgp {
        return Err(Error::InvalidConfig("stability checks need a cGP solution".into()));
    }
    Ok(())
}

/// `Σ_i X_i` with `X = P C`: test coefficients of `Π` applied to the trial modes `c`.
fn project_modes(p: &DMatrix<f64>, c: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = c[0].len();
    (0..p.nrows())
        .map(|i| {
            let mut x = vec![0.0; n];
            for (j, cj) in c.iter().enumerate() {
                let pij = p[(i, j)];
                for (a, b) in x.iter_mut().zip(cj) {
                    *a += pij * b;
                }
            }
            x
        })
        .collect()
}

/// `‖Σ_i X_i ψ_i‖²_{ρ,m}` for test coefficients `x`.
fn test_norm_sq(x: &[Vec<f64>], moments: &WeightedMoments, mass: &BandMatrix) -> f64 {
    let mx: Vec<Vec<f64>> = x.iter().map(|xi| mass.matvec(xi)).collect();
    let mut acc = 0.0;
    for (i, xi) in x.iter().enumerate() {
        for (k, mk) in mx.iter().enumerate() {
            acc += moments.w[(i, k)] * xi.iter().zip(mk).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    moments.tau * moments.prefactor * acc
}

/// Both sides of the energy inequality at every knot, without judging them.
pub fn stability_margins(
    sol: &DiscreteSolution,
    system: &SpatialSystem1D,
    spec: &ProblemSpec,
) -> Result<StabilityReport> {
    require_cgp(sol)?;
    let gamma = spec.gamma;
    let rho = sol.rho;
    let mut energies = vec![system.m0.bilinear(&sol.initial, &sol.initial)];
    let (mut projected_sq, mut work) = (Vec::new(), Vec::new());
    let (mut lhs, mut rhs, mut margins, mut scales) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut p_acc, mut w_acc) = (0.0, 0.0);
    for m in 0..sol.partition.slabs() {
        let (t0, tau) = (sol.partition.start(m), sol.partition.tau(m));
        let moments = weighted_moments(&sol.basis, t0, tau, rho);
        let x = project_modes(&moments.projection_matrix(), &sol.coeffs[m]);
        let load = slab_load(spec, &sol.space, &sol.basis, &moments, t0);
        let b: f64 = x
            .iter()
            .zip(&load)
            .map(|(xi, li)| xi.iter().zip(li).map(|(a, c)| a * c).sum::<f64>())
            .sum();
        p_acc += test_norm_sq(&x, &moments, &system.mass);
        w_acc += moments.prefactor * b;
        let t1 = sol.partition.start(m) + tau;
        let end = sol.end_value(m);
        let e = (-2.0 * rho * t1).exp() * system.m0.bilinear(&end, &end);
        energies.push(e);
        projected_sq.push(p_acc);
        work.push(w_acc);
        let l = 0.5 * e + gamma * p_acc;
        let r = w_acc + 0.5 * energies[0];
        lhs.push(l);
        rhs.push(r);
        margins.push(r - l);
        scales.push(1f64.max(l.abs()).max(r.abs()));
    }
    Ok(StabilityReport { gamma, energies, projected_sq, work, lhs, rhs, margins, scales })
}

/// The energy inequality with tolerance `1e-9 * max(1, lhs, rhs)` at every knot.
pub fn check_stability(
    sol: &DiscreteSolution,
    system: &SpatialSystem1D,
    spec: &ProblemSpec,
) -> Result<StabilityReport> {
    let report = stability_margins(sol, system, spec)?;
    report.verify(1e-9)?;
    Ok(report)
}

/// Per-knot sides of `γ‖Πξ‖²_{ρ,[0,t_m]} + ⟨M0 ξ(t_m), ξ(t_m)⟩e^{-2ρt_m} ≤ (2/γ)‖η‖²_{*,[0,t_m]}`
/// with `ξ = P_r U - U_h` and `η = U - P_r U`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub gamma: f64,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub margins: Vec<f64>,
    pub scales: Vec<f64>,
}

/// Checks the error bound for an exact solution that lives in the discrete space.
pub fn check_error_bound(
    sol: &DiscreteSolution,
    system: &SpatialSystem1D,
    spec: &ProblemSpec,
    exact: &SeparableField,
) -> Result<BoundReport> {
    require_cgp(sol)?;
    let gamma = spec.gamma;
    let rho = sol.rho;
    let star = star_norm(exact, spec, &sol.partition, &sol.basis, &sol.space.mesh.nodes, sol.space.k + 2)?;
    let (mut lhs, mut rhs, mut margins, mut scales) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut p_acc = 0.0;
    for m in 0..sol.partition.slabs() {
        let (t0, tau) = (sol.partition.start(m), sol.partition.tau(m));
        let moments = weighted_moments(&sol.basis, t0, tau, rho);
        let pr = interpolate_pr(&sol.basis, &moments, |s| exact.coefficients(t0 + tau * s));
        let xi: Vec<Vec<f64>> = pr
            .iter()
            .zip(&sol.coeffs[m])
            .map(|(p, c)| p.iter().zip(c).map(|(a, b)| a - b).collect())
            .collect();
        let x = project_modes(&moments.projection_matrix(), &xi);
        p_acc += test_norm_sq(&x, &moments, &system.mass);
        let end = &xi[sol.degree()];
        let e = (-2.0 * rho * (t0 + tau)).exp() * system.m0.bilinear(end, end);
        let l = gamma * p_acc + e;
        let r = 2.0 / gamma * star.up_to(m + 1).powi(2);
        lhs.push(l);
        rhs.push(r);
        margins.push(r - l);
        scales.push(1f64.max(l).max(r));
    }
    for (i, (&mg, &s)) in margins.iter().zip(&scales).enumerate() {
        if mg < -1e-8 * s {
            return Err(Error::StabilityViolated { knot: i + 1, margin: mg, scale: s });
        }
    }
    Ok(BoundReport { gamma, lhs, rhs, margins, scales })
}
