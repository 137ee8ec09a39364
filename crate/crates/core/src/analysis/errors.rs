use rayon::prelude::*;
use serde::Serialize;

use super::SpaceTimeField;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::solver::{split_rule, time_points, DiscreteSolution};
use crate::time_basis::{weighted_moments, TimePartition};

/// Composite quadrature over a time partition and a spatial cell list, with extra break
/// points where integrands may be non-smooth.
#[derive(Debug, Clone, PartialEq)]
pub struct NormGrid {
    pub partition: TimePartition,
    /// Sorted spatial break points, including both domain ends.
    pub nodes: Vec<f64>,
    /// Sorted interior time break points.
    pub time_breaks: Vec<f64>,
    pub time_points: usize,
    pub space_points: usize,
}

fn merge_sorted(mut v: Vec<f64>, tol: f64) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= tol);
    v
}

impl NormGrid {
    pub fn new(partition: TimePartition, nodes: Vec<f64>, time_points: usize, space_points: usize) -> Self {
        let span = (nodes.last().unwrap_or(&1.0) - nodes.first().unwrap_or(&0.0)).abs().max(1.0);
        Self {
            partition,
            nodes: merge_sorted(nodes, 1e-12 * span),
            time_breaks: Vec::new(),
            time_points,
            space_points,
        }
    }

    /// Adds time and space break points; points outside the domain are ignored.
    pub fn refine(&mut self, time_breaks: &[f64], space_breaks: &[f64]) {
        let t_end = self.partition.final_time();
        let mut tb = std::mem::take(&mut self.time_breaks);
        tb.extend(time_breaks.iter().copied().filter(|&t| t > 0.0 && t < t_end));
        self.time_breaks = merge_sorted(tb, 1e-12 * t_end.max(1.0));
        let (a, b) = (self.nodes[0], *self.nodes.last().expect("nodes"));
        let mut nodes = std::mem::take(&mut self.nodes);
        nodes.extend(space_breaks.iter().copied().filter(|&x| x > a && x < b));
        self.nodes = merge_sorted(nodes, 1e-12 * (b - a).abs().max(1.0));
    }

    /// Spatial points and absolute weights.
    pub fn space_quadrature(&self) -> (Vec<f64>, Vec<f64>) {
        let rule = gauss_legendre(self.space_points);
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for w in self.nodes.windows(2) {
            for (x, wx) in rule.mapped(w[0], w[1]) {
                xs.push(x);
                ws.push(wx);
            }
        }
        (xs, ws)
    }

    /// Reference coordinates and weights on `[0, 1]` for slab `m`.
    pub fn slab_quadrature(&self, m: usize) -> Vec<(f64, f64)> {
        let (t0, tau) = (self.partition.start(m), self.partition.tau(m));
        let cuts: Vec<f64> = self.time_breaks.iter().map(|&t| (t - t0) / tau).collect();
        split_rule(&gauss_legendre(self.time_points), &cuts)
    }
}

/// `‖f‖_{ρ,[0,t]}` for a knot `t` of the grid's partition.
pub fn weighted_norm(field: &dyn SpaceTimeField, rho: f64, t: f64, grid: &NormGrid) -> Result<f64> {
    let end = grid.partition.knot_index(t).ok_or(Error::NotAKnot(t))?;
    let (xs, wx) = grid.space_quadrature();
    let slice = field.slicer(&xs);
    let parts: Vec<f64> = (0..end)
        .into_par_iter()
        .map(|m| {
            let (t0, tau) = (grid.partition.start(m), grid.partition.tau(m));
            let lambda = 2.0 * rho * tau;
            let mut acc = 0.0;
            for (s, w) in grid.slab_quadrature(m) {
                let v = slice.values(t0 + tau * s);
                let inner: f64 = v.iter().zip(&wx).map(|(u, wq)| wq * (u[0] * u[0] + u[1] * u[1])).sum();
                acc += w * (-lambda * s).exp() * inner;
            }
            tau * (-2.0 * rho * t0).exp() * acc
        })
        .collect();
    Ok(parts.iter().sum::<f64>().sqrt())
}

/// Squared error contributions of one slab.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlabError {
    pub full_sq: f64,
    pub projected_sq: f64,
    pub defect_sq: f64,
    pub l2_sq: f64,
}

/// Errors of a discrete solution against a reference over `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub rho: f64,
    /// `‖E‖_{ρ,[0,T]}`.
    pub full: f64,
    /// `‖Π_{r-1} E‖_{ρ,[0,T]}`, the projection taken slab-wise in the solution's test space.
    pub projected: f64,
    /// `‖(I - Π_{r-1}) E‖_{ρ,[0,T]}`.
    pub defect: f64,
    /// `⟨M0 E(T), E(T)⟩ e^{-2ρT}`.
    pub final_energy: f64,
    /// Unweighted `L²(0, T; L²)` error.
    pub l2: f64,
    pub per_slab: Vec<SlabError>,
}

impl ErrorReport {
    /// `|full - projected| <= defect` up to roundoff.
    pub fn triangle_consistent(&self) -> bool {
        (self.full - self.projected).abs() <= self.defect + 1e-12 * self.full.max(1e-300)
    }
}

fn check_nested(sol: &DiscreteSolution, reference: &dyn SpaceTimeField) -> Option<String> {
    let fine_t = reference.time_breaks();
    let fine_x = reference.space_breaks();
    if fine_t.is_empty() && fine_x.is_empty() {
        return None;
    }
    let contains = |set: &[f64], v: f64, scale: f64| set.iter().any(|&f| (f - v).abs() <= 1e-10 * scale);
    let t_scale = sol.partition.final_time().max(1.0);
    if let Some(&t) = sol.partition.knots().iter().find(|&&t| !contains(&fine_t, t, t_scale)) {
        return Some(format!("coarse knot t = {t} is not a reference knot"));
    }
    let nodes = &sol.space.mesh.nodes;
    let x_scale = (sol.space.mesh.b() - sol.space.mesh.a()).abs().max(1.0);
    if let Some(&x) = nodes.iter().find(|&&x| !contains(&fine_x, x, x_scale)) {
        return Some(format!("coarse node x = {x} is not a reference node"));
    }
    None
}

/// Compares `sol` with `reference` at the quadrature points of the coarse run, refined at the
/// reference's own break points. Non-nested discrete references only warn unless `strict`.
pub fn error_vs_reference(
    sol: &DiscreteSolution,
    reference: &dyn SpaceTimeField,
    strict: bool,
) -> Result<ErrorReport> {
    if let Some(msg) = check_nested(sol, reference) {
        if strict {
            return Err(Error::NotNested(msg));
        }
        log::warn!("reference is not nested: {msg}");
    }
    let (mut rt, mut kt) = (sol.degree(), sol.space.k);
    if let Some((r2, k2)) = reference.degrees() {
        rt = rt.max(r2);
        kt = kt.max(k2);
    }
    let mut grid = NormGrid::new(sol.partition.clone(), sol.space.mesh.nodes.clone(), time_points(rt, kt), kt + 2);
    grid.refine(&reference.time_breaks(), &reference.space_breaks());
    let (xs, wx) = grid.space_quadrature();
    let ref_slice = reference.slicer(&xs);
    let sol_slice = sol.slicer(&xs);
    let rho = sol.rho;
    let basis = &sol.basis;
    let nt = basis.n_test();
    let nq = xs.len();

    let per_slab: Vec<SlabError> = (0..sol.partition.slabs())
        .into_par_iter()
        .map(|m| {
            let (t0, tau) = (sol.partition.start(m), sol.partition.tau(m));
            let moments = weighted_moments(basis, t0, tau, rho);
            let pts = grid.slab_quadrature(m);
            let mut errs = Vec::with_capacity(pts.len());
            let mut b = nalgebra::DMatrix::<f64>::zeros(nt, 2 * nq);
            let (mut full, mut l2) = (0.0, 0.0);
            for &(s, w) in &pts {
                let t = t0 + tau * s;
                let e: Vec<[f64; 2]> = ref_slice
                    .values(t)
                    .iter()
                    .zip(sol_slice.values(t))
                    .map(|(r, u)| [r[0] - u[0], r[1] - u[1]])
                    .collect();
                let sq: f64 = e.iter().zip(&wx).map(|(v, wq)| wq * (v[0] * v[0] + v[1] * v[1])).sum();
                let ww = w * moments.weight(s);
                full += ww * sq;
                l2 += w * sq;
                let psi = basis.test_values(s);
                for (i, p) in psi.iter().enumerate() {
                    for (q, v) in e.iter().enumerate() {
                        b[(i, 2 * q)] += ww * p * v[0];
                        b[(i, 2 * q + 1)] += ww * p * v[1];
                    }
                }
                errs.push(e);
            }
            let x = moments.w.clone().cholesky().expect("test Gram matrix is SPD").solve(&b);
            let wx_col = |col: usize| wx[col / 2];
            let wx_x = &moments.w * &x;
            let proj: f64 = (0..2 * nq).map(|col| wx_col(col) * x.column(col).dot(&wx_x.column(col))).sum();
            let mut defect = 0.0;
            for (&(s, w), e) in pts.iter().zip(&errs) {
                let psi = basis.test_values(s);
                let mut acc = 0.0;
                for (q, v) in e.iter().enumerate() {
                    for c in 0..2 {
                        let pe: f64 = (0..nt).map(|i| x[(i, 2 * q + c)] * psi[i]).sum();
                        acc += wx[q] * (v[c] - pe).powi(2);
                    }
                }
                defect += w * moments.weight(s) * acc;
            }
            let scale = tau * moments.prefactor;
            SlabError {
                full_sq: scale * full,
                projected_sq: scale * proj.max(0.0),
                defect_sq: scale * defect,
                l2_sq: tau * l2,
            }
        })
        .collect();

    let t_end = sol.partition.final_time();
    let mesh = &sol.space.mesh;
    let final_energy: f64 = ref_slice
        .values(t_end)
        .iter()
        .zip(sol_slice.values(t_end))
        .zip(xs.iter().zip(&wx))
        .map(|((r, u), (&x, wq))| {
            let (c, _) = mesh.locate(x).unwrap_or((0, 0.0));
            let m0 = mesh.coefficients.cells[c].m0;
            wq * (m0[0] * (r[0] - u[0]).powi(2) + m0[1] * (r[1] - u[1]).powi(2))
        })
        .sum::<f64>()
        * (-2.0 * rho * t_end).exp();

    let total = |f: fn(&SlabError) -> f64| per_slab.iter().map(f).sum::<f64>().sqrt();
    Ok(ErrorReport {
        rho,
        full: total(|s| s.full_sq),
        projected: total(|s| s.projected_sq),
        defect: total(|s| s.defect_sq),
        final_energy,
        l2: total(|s| s.l2_sq),
        per_slab,
    })
}
