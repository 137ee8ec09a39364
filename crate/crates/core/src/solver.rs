//! Slab-by-slab assembly and solution of the fully discrete cGP and dG schemes.
//!
//! On a slab the spatial dof `d` and the time mode `j` are combined into the unknown
//! `d * nu + j` (and the test index `i` into the row `d * nu + i`), so the slab matrix
//! inherits the band structure of the spatial matrices.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use crate::banded::{BandLu, BandMatrix};
use crate::error::{Error, Result};
use crate::model::{ProblemSpec, Vec2};
use crate::quadrature::{gauss_legendre, Rule};
use crate::space::{assemble_spatial, build_mesh, interpolate_spatial, FeSpace, SpatialSystem1D};
use crate::time_basis::{
    eval_trial, weighted_moments, TimeBasisPair, TimePartition, TimeScheme, WeightedMoments,
};

/// Discretization parameters of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RunParams {
    /// Spatial polynomial degree.
    pub k: usize,
    /// Time degree: trial degree for cGP, trial = test degree for dG.
    pub r: usize,
    pub cells: usize,
    pub slabs: usize,
    pub scheme: TimeScheme,
}

/// A linear slab system with the slab prefactor divided out.
#[derive(Debug, Clone)]
pub struct SlabSystem {
    pub matrix: BandMatrix,
    pub rhs: Vec<f64>,
}

/// Number of unknown time modes per spatial dof.
pub fn unknown_modes(basis: &TimeBasisPair) -> usize {
    match basis.scheme {
        TimeScheme::Cgp => basis.degree,
        TimeScheme::Dg => basis.degree + 1,
    }
}

/// Slab matrix for the current time step length; it does not depend on the slab position.
pub fn slab_matrix(basis: &TimeBasisPair, moments: &WeightedMoments, space: &SpatialSystem1D) -> BandMatrix {
    let nu = unknown_modes(basis);
    let first = basis.n_trial() - nu;
    let n = space.n_dofs();
    let bw = space.bandwidth() * nu + nu - 1;
    let mut mat = BandMatrix::zeros(n * nu, bw, bw);
    let stiff = space.stiffness();
    let tau = moments.tau;
    let jump: Vec<Vec<f64>> = match basis.scheme {
        TimeScheme::Cgp => vec![vec![0.0; nu]; nu],
        TimeScheme::Dg => {
            let psi0 = basis.test_values(0.0);
            let phi0 = basis.trial_values(0.0);
            psi0.iter().map(|p| phi0.iter().map(|q| p * q).collect()).collect()
        }
    };
    for d in 0..n {
        for e in space.m0.row_range(d) {
            let m0 = space.m0.get(d, e);
            let kk = stiff.get(d, e);
            if m0 == 0.0 && kk == 0.0 {
                continue;
            }
            for i in 0..nu {
                for j in 0..nu {
                    let tj = first + j;
                    let v = (moments.g1[(i, tj)] + jump[i][j]) * m0 + tau * moments.g0[(i, tj)] * kk;
                    if v != 0.0 {
                        mat.add(d * nu + i, e * nu + j, v);
                    }
                }
            }
        }
    }
    mat
}

fn interleave(load: &[Vec<f64>], n: usize) -> Vec<f64> {
    let nu = load.len();
    let mut rhs = vec![0.0; n * nu];
    for (i, li) in load.iter().enumerate() {
        for d in 0..n {
            rhs[d * nu + i] = li[d];
        }
    }
    rhs
}

fn cgp_rhs(state: &[f64], moments: &WeightedMoments, space: &SpatialSystem1D, load: &[Vec<f64>]) -> Vec<f64> {
    let n = space.n_dofs();
    let m0u = space.m0.matvec(state);
    let ku = space.stiffness().matvec(state);
    let shifted: Vec<Vec<f64>> = load
        .iter()
        .enumerate()
        .map(|(i, li)| {
            (0..n)
                .map(|d| li[d] - moments.g1[(i, 0)] * m0u[d] - moments.tau * moments.g0[(i, 0)] * ku[d])
                .collect()
        })
        .collect();
    interleave(&shifted, n)
}

fn dg_rhs(basis: &TimeBasisPair, left: &[f64], space: &SpatialSystem1D, load: &[Vec<f64>]) -> Vec<f64> {
    let n = space.n_dofs();
    let m0u = space.m0.matvec(left);
    let psi0 = basis.test_values(0.0);
    let shifted: Vec<Vec<f64>> = load
        .iter()
        .zip(&psi0)
        .map(|(li, &p)| (0..n).map(|d| li[d] + p * m0u[d]).collect())
        .collect();
    interleave(&shifted, n)
}

/// cGP slab system for unknown modes `1..=r`; mode 0 is the previous end value `state`.
/// `load[i]` is the spatial load vector tested with the `i`-th test function.
pub fn assemble_cgp_slab(
    basis: &TimeBasisPair,
    state: &[f64],
    moments: &WeightedMoments,
    space: &SpatialSystem1D,
    load: &[Vec<f64>],
) -> SlabSystem {
    assert_eq!(basis.scheme, TimeScheme::Cgp);
    SlabSystem {
        matrix: slab_matrix(basis, moments, space),
        rhs: cgp_rhs(state, moments, space, load),
    }
}

/// dG slab system with the upwind jump against the left limit `left`.
pub fn assemble_dg_slab(
    basis: &TimeBasisPair,
    left: &[f64],
    moments: &WeightedMoments,
    space: &SpatialSystem1D,
    load: &[Vec<f64>],
) -> SlabSystem {
    assert_eq!(basis.scheme, TimeScheme::Dg);
    SlabSystem {
        matrix: slab_matrix(basis, moments, space),
        rhs: dg_rhs(basis, left, space, load),
    }
}

/// A factorized slab matrix that checks the residual of every solve.
#[derive(Debug, Clone)]
pub struct SlabSolver {
    matrix: BandMatrix,
    lu: BandLu,
}

impl SlabSolver {
    pub fn new(matrix: BandMatrix, slab: usize) -> Result<Self> {
        let lu = matrix.clone().factorize().map_err(|col| Error::SingularSystem {
            slab,
            detail: format!("zero pivot in column {col} of {}", matrix.size()),
        })?;
        Ok(Self { matrix, lu })
    }

    pub fn solve(&self, rhs: &[f64], slab: usize) -> Result<Vec<f64>> {
        let bnorm = norm(rhs);
        if bnorm == 0.0 {
            return Ok(vec![0.0; rhs.len()]);
        }
        let x = self.lu.solve(rhs);
        let ax = self.matrix.matvec(&x);
        let res = norm(&ax.iter().zip(rhs).map(|(a, b)| a - b).collect::<Vec<_>>()) / bnorm;
        if !(res <= 1e-10) {
            return Err(Error::SingularSystem {
                slab,
                detail: format!("relative residual {res:.3e} after direct solve"),
            });
        }
        Ok(x)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Direct banded solve of one slab system.
pub fn solve_slab(system: &SlabSystem) -> Result<Vec<f64>> {
    SlabSolver::new(system.matrix.clone(), 0)?.solve(&system.rhs, 0)
}

/// Gauss points on `[0, 1]` for one slab, split at the given interior break points.
pub(crate) fn split_rule(rule: &Rule, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts = vec![0.0];
    cuts.extend(breaks.iter().copied().filter(|&b| b > 1e-14 && b < 1.0 - 1e-14));
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2).flat_map(|w| rule.mapped(w[0], w[1]).collect::<Vec<_>>()).collect()
}

/// Time quadrature size for loads and norms.
pub fn time_points(r: usize, k: usize) -> usize {
    (r + k).max(8) + 2
}

/// Spatial load vector of `f(x) -> (f1, f2)` tested against every basis function.
pub fn spatial_load<F>(space: &FeSpace, rule: &Rule, local: &[Vec<f64>], f: F) -> Vec<f64>
where
    F: Fn(f64) -> Vec2,
{
    let mut out = vec![0.0; space.n_dofs()];
    let k = space.k;
    for c in 0..space.mesh.cells() {
        let (lo, hi) = space.mesh.cell_bounds(c);
        let h = hi - lo;
        for (q, (&xi, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            let [f1, f2] = f(lo + h * xi);
            let wh = w * h;
            for (l, &n) in local[q].iter().enumerate() {
                let g = c * k + l;
                if let Some(d) = space.dof_u1(g) {
                    out[d] += wh * f1 * n;
                }
                out[space.dof_u2(g)] += wh * f2 * n;
            }
        }
    }
    out
}

/// `load[i][d] = tau ∫_0^1 <F(t(s)), phi_d> psi_i(s) exp(-lambda s) ds`.
pub fn slab_load(
    spec: &ProblemSpec,
    space: &FeSpace,
    basis: &TimeBasisPair,
    moments: &WeightedMoments,
    t0: f64,
) -> Vec<Vec<f64>> {
    let tau = moments.tau;
    let trule = gauss_legendre(time_points(basis.degree, space.k));
    let breaks: Vec<f64> = spec.source.kinks.iter().map(|&k| (k - t0) / tau).collect();
    let xrule = gauss_legendre(space.k + 3);
    let local: Vec<Vec<f64>> = xrule.nodes.iter().map(|&xi| space.local_values(xi)).collect();
    let mut load = vec![vec![0.0; space.n_dofs()]; basis.n_test()];
    for (s, w) in split_rule(&trule, &breaks) {
        let t = t0 + tau * s;
        let l = spatial_load(space, &xrule, &local, |x| spec.source_at(t, x));
        let ws = tau * w * moments.weight(s);
        for (i, psi) in basis.test.iter().enumerate() {
            let c = ws * psi.eval(s);
            for (a, b) in load[i].iter_mut().zip(&l) {
                *a += c * b;
            }
        }
    }
    load
}

/// Piecewise polynomial-in-time solution over a spatial finite element space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub partition: TimePartition,
    pub basis: TimeBasisPair,
    pub space: FeSpace,
    pub rho: f64,
    /// Interpolated initial value (the dG left limit at `t = 0`).
    pub initial: Vec<f64>,
    /// `coeffs[m][j]`: spatial coefficients of trial mode `j` on slab `m`.
    pub coeffs: Vec<Vec<Vec<f64>>>,
}

impl DiscreteSolution {
    pub fn scheme(&self) -> TimeScheme {
        self.basis.scheme
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    /// Spatial coefficients at reference coordinate `s` of slab `m`.
    pub fn slab_value(&self, m: usize, s: f64) -> Vec<f64> {
        eval_trial(&self.basis, &self.coeffs[m], s)
    }

    /// Left limit at the end of slab `m`.
    pub fn end_value(&self, m: usize) -> Vec<f64> {
        match self.scheme() {
            TimeScheme::Cgp => self.coeffs[m][self.degree()].clone(),
            TimeScheme::Dg => self.slab_value(m, 1.0),
        }
    }

    /// Spatial coefficients at time `t` (left limit at knots).
    pub fn value_at_time(&self, t: f64) -> Option<Vec<f64>> {
        let (m, s) = self.partition.locate(t)?;
        Some(self.slab_value(m, s))
    }

    /// Right limit at knot `m` (start of slab `m`).
    pub fn right_limit(&self, m: usize) -> Vec<f64> {
        self.slab_value(m, 0.0)
    }

    pub fn evaluate(&self, t: f64, x: f64) -> Result<Vec2> {
        let out = || Error::OutOfDomain { t, x };
        let (m, s) = self.partition.locate(t).ok_or_else(out)?;
        let (c, xi) = self.space.mesh.locate(x).ok_or_else(out)?;
        let phi = self.basis.trial_values(s);
        let local = self.space.local_values(xi);
        let mut u = [0.0, 0.0];
        for (p, coef) in phi.iter().zip(&self.coeffs[m]) {
            let [a, b] = self.space.eval_in_cell(coef, c, &local);
            u[0] += p * a;
            u[1] += p * b;
        }
        Ok(u)
    }

    /// `∂x` of both components.
    pub fn evaluate_dx(&self, t: f64, x: f64) -> Result<Vec2> {
        let err = || Error::OutOfDomain { t, x };
        let (m, s) = self.partition.locate(t).ok_or_else(err)?;
        self.space.eval_dx(&self.slab_value(m, s), x).ok_or_else(err)
    }
}

/// Marches the scheme described by `basis` over all slabs of `partition`.
pub fn march(
    spec: &ProblemSpec,
    system: &SpatialSystem1D,
    partition: &TimePartition,
    basis: &TimeBasisPair,
) -> Result<DiscreteSolution> {
    for &k in &spec.source.kinks {
        if partition.knot_index(k).is_none() && k > 0.0 && k < partition.final_time() {
            return Err(Error::KinkNotResolved { t: k });
        }
    }
    let space = &system.space;
    let initial = interpolate_spatial(|x| spec.initial_at(x), space)?;
    let nu = unknown_modes(basis);
    let n = space.n_dofs();
    let mut solvers: HashMap<u64, SlabSolver> = HashMap::new();
    let mut state = initial.clone();
    let mut coeffs = Vec::with_capacity(partition.slabs());
    for m in 0..partition.slabs() {
        let (t0, tau) = (partition.start(m), partition.tau(m));
        let moments = weighted_moments(basis, t0, tau, spec.rho);
        let load = slab_load(spec, space, basis, &moments, t0);
        let rhs = match basis.scheme {
            TimeScheme::Cgp => cgp_rhs(&state, &moments, system, &load),
            TimeScheme::Dg => dg_rhs(basis, &state, system, &load),
        };
        let solver = match solvers.entry(tau.to_bits()) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => {
                log::debug!("factorizing slab matrix for tau = {tau}");
                e.insert(SlabSolver::new(slab_matrix(basis, &moments, system), m)?)
            }
        };
        let x = solver.solve(&rhs, m)?;
        let mut modes: Vec<Vec<f64>> = Vec::with_capacity(basis.n_trial());
        if basis.scheme == TimeScheme::Cgp {
            modes.push(state.clone());
        }
        for j in 0..nu {
            modes.push((0..n).map(|d| x[d * nu + j]).collect());
        }
        state = match basis.scheme {
            TimeScheme::Cgp => modes[basis.degree].clone(),
            TimeScheme::Dg => eval_trial(basis, &modes, 1.0),
        };
        coeffs.push(modes);
    }
    Ok(DiscreteSolution {
        partition: partition.clone(),
        basis: basis.clone(),
        space: space.clone(),
        rho: spec.rho,
        initial,
        coeffs,
    })
}

/// Uniform partition of `[0, T]` with knots snapped onto the source kinks.
pub fn uniform_partition(spec: &ProblemSpec, slabs: usize) -> Result<TimePartition> {
    let mut p = TimePartition::uniform(spec.final_time, slabs);
    p.resolve_kinks(&spec.source.kinks)?;
    Ok(p)
}

/// Builds mesh, spatial system, partition and bases, then marches.
pub fn solve(spec: &ProblemSpec, run: &RunParams) -> Result<DiscreteSolution> {
    let (_, sol) = solve_with_system(spec, run)?;
    Ok(sol)
}

pub fn solve_with_system(spec: &ProblemSpec, run: &RunParams) -> Result<(SpatialSystem1D, DiscreteSolution)> {
    let mesh = build_mesh(spec, run.cells)?;
    let system = assemble_spatial(&mesh, run.k, &mesh.coefficients)?;
    let partition = uniform_partition(spec, run.slabs)?;
    let basis = TimeBasisPair::for_scheme(run.scheme, run.r)?;
    let sol = march(spec, &system, &partition, &basis)?;
    Ok((system, sol))
}
