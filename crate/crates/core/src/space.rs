//! One-dimensional spatial discretization.
//!
//! Both components use continuous piecewise `P_k` Lagrange elements; the first carries the
//! homogeneous Dirichlet condition, the second is unconstrained (in one dimension the
//! Raviart-Thomas space `RT_{k-1}` is exactly continuous `P_k`).
//!
//! Degrees of freedom are interleaved by Lagrange node so every spatial matrix is banded:
//! node `g` owns the first-component dof `2g - 1` (interior nodes only) and the
//! second-component dof `2g`, shifted down by one after the leftmost node.

use nalgebra::DMatrix;

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::model::{Coefficients, MaterialCoefficients, ProblemSpec, RegionTag, Vec2};
use crate::poly::Poly;
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    pub nodes: Vec<f64>,
    pub tags: Vec<RegionTag>,
    pub coefficients: MaterialCoefficients,
}

/// Equidistant mesh of `n` cells that resolves the region layout of `spec`.
pub fn build_mesh(spec: &ProblemSpec, n: usize) -> Result<Mesh1D> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 cells, got {n}")));
    }
    let (a, b) = (spec.a, spec.b);
    let mut nodes: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    nodes[n] = b;
    for x in spec.breakpoints() {
        let pos = (x - a) / (b - a) * n as f64;
        let i = pos.round();
        if (pos - i).abs() > 1e-9 {
            return Err(Error::UnresolvedRegion { x, cells: n });
        }
        nodes[i as usize] = x;
    }
    Ok(mesh_from_nodes(spec, nodes))
}

/// Mesh on explicit nodes; cells are tagged by their midpoints.
pub fn mesh_from_nodes(spec: &ProblemSpec, nodes: Vec<f64>) -> Mesh1D {
    let mids: Vec<f64> = nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let tags = mids.iter().map(|&x| spec.region_at(x).tag).collect();
    let cells = mids.iter().map(|&x| spec.coefficients_at(x)).collect();
    Mesh1D { nodes, tags, coefficients: MaterialCoefficients { cells } }
}

impl Mesh1D {
    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn h(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn cell_bounds(&self, c: usize) -> (f64, f64) {
        (self.nodes[c], self.nodes[c + 1])
    }

    pub fn a(&self) -> f64 {
        self.nodes[0]
    }

    pub fn b(&self) -> f64 {
        *self.nodes.last().expect("mesh has nodes")
    }

    /// Cell index and local coordinate in `[0, 1]`.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let (a, b) = (self.a(), self.b());
        let tol = 1e-14 * (b - a).abs().max(1.0);
        if x < a - tol || x > b + tol {
            return None;
        }
        let c = self.nodes.partition_point(|&n| n <= x).clamp(1, self.cells()) - 1;
        let (lo, hi) = self.cell_bounds(c);
        Some((c, ((x - lo) / (hi - lo)).clamp(0.0, 1.0)))
    }
}

/// Continuous `P_k` space pair on a mesh, with the interleaved dof numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct FeSpace {
    pub mesh: Mesh1D,
    pub k: usize,
    basis: Vec<Poly>,
    basis_deriv: Vec<Poly>,
}

impl FeSpace {
    pub fn new(mesh: Mesh1D, k: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::DegreeTooSmall { got: k, min: 1 });
        }
        let local: Vec<f64> = (0..=k).map(|l| l as f64 / k as f64).collect();
        let basis = Poly::lagrange_basis(&local);
        let basis_deriv = basis.iter().map(Poly::derivative).collect();
        Ok(Self { mesh, k, basis, basis_deriv })
    }

    /// Number of Lagrange nodes.
    pub fn n_nodes(&self) -> usize {
        self.mesh.cells() * self.k + 1
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.mesh.cells() * self.k
    }

    pub fn n_dofs_component(&self, c: usize) -> usize {
        if c == 0 {
            self.n_nodes() - 2
        } else {
            self.n_nodes()
        }
    }

    pub fn dof_u1(&self, g: usize) -> Option<usize> {
        (g > 0 && g + 1 < self.n_nodes()).then(|| 2 * g - 1)
    }

    pub fn dof_u2(&self, g: usize) -> usize {
        match g {
            0 => 0,
            g if g + 1 == self.n_nodes() => 2 * g - 1,
            g => 2 * g,
        }
    }

    pub fn dof(&self, component: usize, g: usize) -> Option<usize> {
        if component == 0 {
            self.dof_u1(g)
        } else {
            Some(self.dof_u2(g))
        }
    }

    /// Dof indices of one component, ordered by node.
    pub fn component_dofs(&self, component: usize) -> Vec<usize> {
        (0..self.n_nodes()).filter_map(|g| self.dof(component, g)).collect()
    }

    /// Half bandwidth of every spatial matrix.
    pub fn bandwidth(&self) -> usize {
        2 * self.k + 1
    }

    pub fn node_position(&self, g: usize) -> f64 {
        let c = (g / self.k).min(self.mesh.cells() - 1);
        let l = g - c * self.k;
        let (lo, hi) = self.mesh.cell_bounds(c);
        if l == self.k {
            hi
        } else {
            lo + (hi - lo) * l as f64 / self.k as f64
        }
    }

    pub fn local_values(&self, xi: f64) -> Vec<f64> {
        self.basis.iter().map(|p| p.eval(xi)).collect()
    }

    /// Derivatives with respect to the local coordinate.
    pub fn local_derivatives(&self, xi: f64) -> Vec<f64> {
        self.basis_deriv.iter().map(|p| p.eval(xi)).collect()
    }

    /// Evaluates both components in cell `c` from precomputed local values.
    pub fn eval_in_cell(&self, coeffs: &[f64], c: usize, local: &[f64]) -> Vec2 {
        let g0 = c * self.k;
        let mut out = [0.0, 0.0];
        for (l, &n) in local.iter().enumerate() {
            if let Some(d) = self.dof_u1(g0 + l) {
                out[0] += coeffs[d] * n;
            }
            out[1] += coeffs[self.dof_u2(g0 + l)] * n;
        }
        out
    }

    pub fn eval(&self, coeffs: &[f64], x: f64) -> Option<Vec2> {
        let (c, xi) = self.mesh.locate(x)?;
        Some(self.eval_in_cell(coeffs, c, &self.local_values(xi)))
    }

    /// `∂x` of both components.
    pub fn eval_dx(&self, coeffs: &[f64], x: f64) -> Option<Vec2> {
        let (c, xi) = self.mesh.locate(x)?;
        let (lo, hi) = self.mesh.cell_bounds(c);
        let [d1, d2] = self.eval_in_cell(coeffs, c, &self.local_derivatives(xi));
        Some([d1 / (hi - lo), d2 / (hi - lo)])
    }
}

/// Spatial matrices on the stacked dof vector. All matrices are symmetric except `coupling`.
#[derive(Debug, Clone)]
pub struct SpatialSystem1D {
    pub space: FeSpace,
    /// Mass weighted by the `m0` coefficients.
    pub m0: BandMatrix,
    /// Mass weighted by the `m1` coefficients.
    pub m1: BandMatrix,
    /// Plain mass.
    pub mass: BandMatrix,
    /// The discrete `A`: `(∂x u2, v1) + (∂x u1, v2)`.
    pub coupling: BandMatrix,
}

pub fn assemble_spatial(mesh: &Mesh1D, k: usize, coeffs: &MaterialCoefficients) -> Result<SpatialSystem1D> {
    let space = FeSpace::new(mesh.clone(), k)?;
    let n = space.n_dofs();
    let bw = space.bandwidth();
    let mut m0 = BandMatrix::zeros(n, bw, bw);
    let mut m1 = BandMatrix::zeros(n, bw, bw);
    let mut mass = BandMatrix::zeros(n, bw, bw);
    let mut coupling = BandMatrix::zeros(n, bw, bw);

    let rule = gauss_legendre(k + 1);
    let vals: Vec<Vec<f64>> = rule.nodes.iter().map(|&xi| space.local_values(xi)).collect();
    let ders: Vec<Vec<f64>> = rule.nodes.iter().map(|&xi| space.local_derivatives(xi)).collect();
    let nl = k + 1;
    let mut local_mass = vec![0.0; nl * nl];
    let mut local_coupling = vec![0.0; nl * nl];
    for q in 0..rule.len() {
        let w = rule.weights[q];
        for a in 0..nl {
            for b in 0..nl {
                local_mass[a * nl + b] += w * vals[q][a] * vals[q][b];
                // test a, trial derivative b; the Jacobian cancels
                local_coupling[a * nl + b] += w * vals[q][a] * ders[q][b];
            }
        }
    }

    for c in 0..mesh.cells() {
        let (lo, hi) = mesh.cell_bounds(c);
        let h = hi - lo;
        let Coefficients { m0: c0, m1: c1 } = coeffs.cells[c];
        let g0 = c * k;
        for a in 0..nl {
            for b in 0..nl {
                let mab = h * local_mass[a * nl + b];
                let sab = local_coupling[a * nl + b];
                let (ga, gb) = (g0 + a, g0 + b);
                if let (Some(i), Some(j)) = (space.dof_u1(ga), space.dof_u1(gb)) {
                    mass.add(i, j, mab);
                    m0.add(i, j, c0[0] * mab);
                    m1.add(i, j, c1[0] * mab);
                }
                let (i, j) = (space.dof_u2(ga), space.dof_u2(gb));
                mass.add(i, j, mab);
                m0.add(i, j, c0[1] * mab);
                m1.add(i, j, c1[1] * mab);
                if let Some(i) = space.dof_u1(ga) {
                    coupling.add(i, space.dof_u2(gb), sab);
                }
                if let Some(j) = space.dof_u1(gb) {
                    coupling.add(space.dof_u2(ga), j, sab);
                }
            }
        }
    }
    Ok(SpatialSystem1D { space, m0, m1, mass, coupling })
}

impl SpatialSystem1D {
    pub fn n_dofs(&self) -> usize {
        self.mass.size()
    }

    /// Largest half bandwidth among the spatial matrices.
    pub fn bandwidth(&self) -> usize {
        [&self.m0, &self.m1, &self.mass, &self.coupling]
            .iter()
            .map(|m| m.lower_bandwidth().max(m.upper_bandwidth()))
            .max()
            .unwrap_or(0)
    }

    /// Dense restriction of `mat` to one component's dofs.
    pub fn component_block(&self, mat: &BandMatrix, component: usize) -> DMatrix<f64> {
        let dofs = self.space.component_dofs(component);
        DMatrix::from_fn(dofs.len(), dofs.len(), |i, j| mat.get(dofs[i], dofs[j]))
    }

    /// `S[i][j] = ∫ (basis2_j)' basis1_i dx`, first-component rows, second-component columns.
    pub fn coupling_s(&self) -> DMatrix<f64> {
        let rows = self.space.component_dofs(0);
        let cols = self.space.component_dofs(1);
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.coupling.get(rows[i], cols[j]))
    }

    /// `M1h + A_h`.
    pub fn stiffness(&self) -> BandMatrix {
        let mut k = self.m1.clone();
        let n = self.n_dofs();
        for i in 0..n {
            for j in self.coupling.row_range(i) {
                let v = self.coupling.get(i, j);
                if v != 0.0 {
                    k.add(i, j, v);
                }
            }
        }
        k
    }
}

/// Nodal interpolation into the discrete space; the first component must vanish at the ends.
pub fn interpolate_spatial<F>(evaluator: F, space: &FeSpace) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Vec2,
{
    let (coeffs, mismatch) = interpolate_with_check(&evaluator, space);
    match mismatch {
        Some((x, value)) => Err(Error::BoundaryMismatch { x, value }),
        None => Ok(coeffs),
    }
}

/// As [`interpolate_spatial`], but a boundary mismatch only logs a warning.
pub fn interpolate_spatial_lenient<F>(evaluator: F, space: &FeSpace) -> Vec<f64>
where
    F: Fn(f64) -> Vec2,
{
    let (coeffs, mismatch) = interpolate_with_check(&evaluator, space);
    if let Some((x, value)) = mismatch {
        log::warn!("first component is {value} at boundary x = {x}; forced to 0");
    }
    coeffs
}

fn interpolate_with_check<F>(evaluator: &F, space: &FeSpace) -> (Vec<f64>, Option<(f64, f64)>)
where
    F: Fn(f64) -> Vec2,
{
    let mut coeffs = vec![0.0; space.n_dofs()];
    let mut scale = 1.0f64;
    let mut ends = [0.0; 2];
    let last = space.n_nodes() - 1;
    for g in 0..space.n_nodes() {
        let x = space.node_position(g);
        let [u1, u2] = evaluator(x);
        scale = scale.max(u1.abs()).max(u2.abs());
        match space.dof_u1(g) {
            Some(d) => coeffs[d] = u1,
            None => ends[usize::from(g == last)] = u1,
        }
        coeffs[space.dof_u2(g)] = u2;
    }
    let mismatch = [(space.mesh.a(), ends[0]), (space.mesh.b(), ends[1])]
        .into_iter()
        .find(|&(_, v)| v.abs() > 1e-10 * scale);
    (coeffs, mismatch)
}
