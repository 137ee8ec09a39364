use rayon::prelude::*;

use crate::error::Result;
use crate::manufactured::ExactField;
use crate::model::ProblemSpec;
use crate::quadrature::gauss_legendre;
use crate::time_basis::{eval_trial, interpolate_pr, weighted_moments, TimeBasisPair, TimePartition};

/// Slab-wise pieces of `‖η‖_*` for `η = v - P_r v`.
#[derive(Debug, Clone, PartialEq)]
pub struct StarNorm {
    /// `‖(2ρM0 + M1)η‖²_{ρ,m}` per slab.
    pub weighted_sq: Vec<f64>,
    /// `‖Aη‖²_{ρ,m}` per slab.
    pub coupling_sq: Vec<f64>,
}

impl StarNorm {
    /// `‖η‖_{*,[0,t_end]}` over the first `end` slabs.
    pub fn up_to(&self, end: usize) -> f64 {
        let a: f64 = self.weighted_sq[..end].iter().sum();
        let b: f64 = self.coupling_sq[..end].iter().sum();
        a.sqrt() + b.sqrt()
    }

    pub fn total(&self) -> f64 {
        self.up_to(self.weighted_sq.len())
    }
}

/// `‖v - P_r v‖_*` on every slab of `partition`, with `Aη = (∂x η2, ∂x η1)` taken pointwise.
/// Spatial integrals use `space_points` Gauss points on each cell of `nodes`, which are
/// refined at the region breakpoints of `spec`.
pub fn star_norm(
    v: &dyn ExactField,
    spec: &ProblemSpec,
    partition: &TimePartition,
    basis: &TimeBasisPair,
    nodes: &[f64],
    space_points: usize,
) -> Result<StarNorm> {
    let mut cells = nodes.to_vec();
    cells.extend(spec.breakpoints());
    cells.sort_by(f64::total_cmp);
    cells.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let xrule = gauss_legendre(space_points);
    let mut xs = Vec::new();
    for w in cells.windows(2) {
        for (x, wx) in xrule.mapped(w[0], w[1]) {
            let c = spec.coefficients_at(x);
            let diag = [2.0 * spec.rho * c.m0[0] + c.m1[0], 2.0 * spec.rho * c.m0[1] + c.m1[1]];
            xs.push((x, wx, diag));
        }
    }
    let trule = gauss_legendre(2 * basis.degree + 12);
    let rho = spec.rho;
    let parts: Vec<(f64, f64)> = (0..partition.slabs())
        .into_par_iter()
        .map(|m| {
            let (t0, tau) = (partition.start(m), partition.tau(m));
            let moments = weighted_moments(basis, t0, tau, rho);
            let (mut a, mut b) = (0.0, 0.0);
            for &(x, wx, diag) in &xs {
                let sample = |s: f64| {
                    let t = t0 + tau * s;
                    let u = v.value(t, x);
                    let d = v.dx(t, x);
                    vec![u[0], u[1], d[0], d[1]]
                };
                let pr = interpolate_pr(basis, &moments, sample);
                for (&s, &w) in trule.nodes.iter().zip(&trule.weights) {
                    let exact = sample(s);
                    let interp = eval_trial(basis, &pr, s);
                    let eta: Vec<f64> = exact.iter().zip(&interp).map(|(e, i)| e - i).collect();
                    let ww = wx * w * moments.weight(s);
                    a += ww * ((diag[0] * eta[0]).powi(2) + (diag[1] * eta[1]).powi(2));
                    b += ww * (eta[3].powi(2) + eta[2].powi(2));
                }
            }
            let scale = tau * moments.prefactor;
            (scale * a, scale * b)
        })
        .collect();
    Ok(StarNorm {
        weighted_sq: parts.iter().map(|p| p.0).collect(),
        coupling_sq: parts.iter().map(|p| p.1).collect(),
    })
}
