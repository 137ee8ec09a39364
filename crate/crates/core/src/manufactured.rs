//! Exact solutions with derivatives, and the sources they induce.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{ProblemSpec, SourceTerm, Vec2};
use crate::space::FeSpace;

/// A space-time field with known time and space derivatives of both components.
pub trait ExactField: Send + Sync {
    fn value(&self, t: f64, x: f64) -> Vec2;
    fn dt(&self, t: f64, x: f64) -> Vec2;
    fn dx(&self, t: f64, x: f64) -> Vec2;
}

type FieldFn = Arc<dyn Fn(f64, f64) -> Vec2 + Send + Sync>;

/// An [`ExactField`] from three closures.
#[derive(Clone)]
pub struct ClosureField {
    pub value: FieldFn,
    pub dt: FieldFn,
    pub dx: FieldFn,
}

impl ExactField for ClosureField {
    fn value(&self, t: f64, x: f64) -> Vec2 {
        (self.value)(t, x)
    }
    fn dt(&self, t: f64, x: f64) -> Vec2 {
        (self.dt)(t, x)
    }
    fn dx(&self, t: f64, x: f64) -> Vec2 {
        (self.dx)(t, x)
    }
}

/// `u1 = sin(x) cos(2t) + sin(2x) sin(t) / 2`, `u2 = cos(x) sin(2t) + x cos(3t) / 4`.
///
/// `u1` vanishes at every multiple of π, so any domain `[-jπ, lπ]` is admissible.
pub fn smooth_solution() -> ClosureField {
    ClosureField {
        value: Arc::new(|t, x| {
            [
                x.sin() * (2.0 * t).cos() + 0.5 * (2.0 * x).sin() * t.sin(),
                x.cos() * (2.0 * t).sin() + 0.25 * x * (3.0 * t).cos(),
            ]
        }),
        dt: Arc::new(|t, x| {
            [
                -2.0 * x.sin() * (2.0 * t).sin() + 0.5 * (2.0 * x).sin() * t.cos(),
                2.0 * x.cos() * (2.0 * t).cos() - 0.75 * x * (3.0 * t).sin(),
            ]
        }),
        dx: Arc::new(|t, x| {
            [
                x.cos() * (2.0 * t).cos() + (2.0 * x).cos() * t.sin(),
                -x.sin() * (2.0 * t).sin() + 0.25 * (3.0 * t).cos(),
            ]
        }),
    }
}

/// `(sin x sin t, cos x cos t)`: a free wave of the all-hyperbolic system.
pub fn free_wave() -> ClosureField {
    ClosureField {
        value: Arc::new(|t, x| [x.sin() * t.sin(), x.cos() * t.cos()]),
        dt: Arc::new(|t, x| [x.sin() * t.cos(), -x.cos() * t.sin()]),
        dx: Arc::new(|t, x| [x.cos() * t.sin(), -x.sin() * t.cos()]),
    }
}

/// A scalar function of time with its derivative.
#[derive(Clone)]
pub struct TimeFn {
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub df: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl TimeFn {
    /// Polynomial with monomial coefficients in `t`.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let d: Vec<f64> = coeffs.iter().enumerate().skip(1).map(|(j, &c)| j as f64 * c).collect();
        let c = coeffs.clone();
        Self {
            f: Arc::new(move |t| c.iter().rev().fold(0.0, |acc, &a| acc * t + a)),
            df: Arc::new(move |t| d.iter().rev().fold(0.0, |acc, &a| acc * t + a)),
        }
    }

    pub fn sine(omega: f64, phase: f64) -> Self {
        Self {
            f: Arc::new(move |t| (omega * t + phase).sin()),
            df: Arc::new(move |t| omega * (omega * t + phase).cos()),
        }
    }
}

/// `U(t, x) = Σ_l g_l(t) W_l(x)` with every `W_l` in the discrete space.
#[derive(Clone)]
pub struct SeparableField {
    pub space: FeSpace,
    pub terms: Vec<(TimeFn, Vec<f64>)>,
}

impl SeparableField {
    fn combine(&self, t: f64, x: f64, dt: bool, dx: bool) -> Vec2 {
        let Some((c, xi)) = self.space.mesh.locate(x) else {
            return [f64::NAN, f64::NAN];
        };
        let local = if dx { self.space.local_derivatives(xi) } else { self.space.local_values(xi) };
        let amps: Vec<f64> = self
            .terms
            .iter()
            .map(|(g, _)| if dt { (g.df)(t) } else { (g.f)(t) })
            .collect();
        let g0 = c * self.space.k;
        let mut out = [0.0, 0.0];
        for (l, &n) in local.iter().enumerate() {
            let g = g0 + l;
            let dofs = [self.space.dof_u1(g), Some(self.space.dof_u2(g))];
            for (comp, dof) in dofs.into_iter().enumerate() {
                if let Some(d) = dof {
                    let coef: f64 = amps.iter().zip(&self.terms).map(|(a, (_, w))| a * w[d]).sum();
                    out[comp] += coef * n;
                }
            }
        }
        if dx {
            let (lo, hi) = self.space.mesh.cell_bounds(c);
            out[0] /= hi - lo;
            out[1] /= hi - lo;
        }
        out
    }

    /// Spatial coefficients at time `t`.
    pub fn coefficients(&self, t: f64) -> Vec<f64> {
        let mut coef = vec![0.0; self.space.n_dofs()];
        for (g, w) in &self.terms {
            let a = (g.f)(t);
            for (c, &wi) in coef.iter_mut().zip(w) {
                *c += a * wi;
            }
        }
        coef
    }
}

impl ExactField for SeparableField {
    fn value(&self, t: f64, x: f64) -> Vec2 {
        self.combine(t, x, false, false)
    }
    fn dt(&self, t: f64, x: f64) -> Vec2 {
        self.combine(t, x, true, false)
    }
    fn dx(&self, t: f64, x: f64) -> Vec2 {
        self.combine(t, x, false, true)
    }
}

/// Deterministic spatial profiles in the discrete space used by the exactness fixtures.
pub fn discrete_profiles(space: &FeSpace, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|l| {
            (0..space.n_dofs())
                .map(|d| ((d as f64 + 1.0) * (0.7 + 0.37 * l as f64)).sin())
                .collect()
        })
        .collect()
}

/// `U = Σ_{j ≤ degree} t^j W_j` with deterministic profiles: lies in the cGP(degree) trial space.
pub fn polynomial_in_time(space: &FeSpace, degree: usize) -> SeparableField {
    let profiles = discrete_profiles(space, degree + 1);
    let terms = profiles
        .into_iter()
        .enumerate()
        .map(|(j, w)| {
            let mut c = vec![0.0; j + 1];
            c[j] = 1.0 / (j as f64 + 1.0);
            (TimeFn::polynomial(c), w)
        })
        .collect();
    SeparableField { space: space.clone(), terms }
}

/// Three sine modes in time over deterministic discrete profiles.
pub fn smooth_in_time(space: &FeSpace) -> SeparableField {
    let profiles = discrete_profiles(space, 3);
    let fns = [TimeFn::sine(2.0, 0.3), TimeFn::sine(1.0, 1.2), TimeFn::sine(3.0, 0.0)];
    SeparableField { space: space.clone(), terms: fns.into_iter().zip(profiles).collect() }
}

/// `F = (∂t M0 + M1 + A) U` for the coefficient layout of `spec`.
pub fn compose_manufactured_source(field: Arc<dyn ExactField>, spec: &ProblemSpec) -> Result<SourceTerm> {
    check_boundary(field.as_ref(), spec)?;
    let layout = spec.clone();
    Ok(SourceTerm::new(
        Arc::new(move |t, x| {
            let c = layout.coefficients_at(x);
            let u = field.value(t, x);
            let ut = field.dt(t, x);
            let ux = field.dx(t, x);
            [
                c.m0[0] * ut[0] + c.m1[0] * u[0] + ux[1],
                c.m0[1] * ut[1] + c.m1[1] * u[1] + ux[0],
            ]
        }),
        Vec::new(),
        false,
    ))
}

fn check_boundary(field: &dyn ExactField, spec: &ProblemSpec) -> Result<()> {
    let samples = 17;
    for i in 0..samples {
        let t = spec.final_time * i as f64 / (samples - 1) as f64;
        let scale = field.value(t, 0.5 * (spec.a + spec.b))[0].abs().max(1.0);
        for x in [spec.a, spec.b] {
            let v = field.value(t, x)[0];
            if v.abs() > 1e-10 * scale {
                return Err(Error::BoundaryMismatch { x, value: v });
            }
        }
    }
    Ok(())
}

/// Replaces source and initial value of `spec` by those of the exact solution `field`.
pub fn with_exact_solution(mut spec: ProblemSpec, field: Arc<dyn ExactField>) -> Result<ProblemSpec> {
    spec.source = compose_manufactured_source(field.clone(), &spec)?;
    spec.initial = Arc::new(move |x| field.value(0.0, x));
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_problem, RawProblem, RegionTag};
    use crate::space::build_mesh;
    use std::f64::consts::PI;

    fn finite_difference_check(field: &dyn ExactField) {
        let h = 1e-6;
        for &(t, x) in &[(0.3, 0.2), (1.7, -2.0), (0.0, 3.0)] {
            let dt = field.dt(t, x);
            let dx = field.dx(t, x);
            for c in 0..2 {
                let fd_t = (field.value(t + h, x)[c] - field.value(t - h, x)[c]) / (2.0 * h);
                let fd_x = (field.value(t, x + h)[c] - field.value(t, x - h)[c]) / (2.0 * h);
                assert!((fd_t - dt[c]).abs() < 1e-7, "dt c={c}");
                assert!((fd_x - dx[c]).abs() < 1e-7, "dx c={c}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        finite_difference_check(&smooth_solution());
        finite_difference_check(&free_wave());
    }

    #[test]
    fn zero_field_gives_zero_source() {
        let spec = ProblemSpec::paper1d(1.0).unwrap();
        let zero = ClosureField {
            value: Arc::new(|_, _| [0.0, 0.0]),
            dt: Arc::new(|_, _| [0.0, 0.0]),
            dx: Arc::new(|_, _| [0.0, 0.0]),
        };
        let f = compose_manufactured_source(Arc::new(zero), &spec).unwrap();
        assert_eq!(f.evaluate(1.0, 0.5), [0.0, 0.0]);
    }

    #[test]
    fn free_wave_solves_the_homogeneous_hyperbolic_system() {
        let spec = build_problem(RawProblem::uniform("h", -PI, PI, 2.0, 1.0, RegionTag::Hyperbolic)).unwrap();
        let f = compose_manufactured_source(Arc::new(free_wave()), &spec).unwrap();
        for &(t, x) in &[(0.1, -2.0), (1.3, 0.4), (2.0, 3.0)] {
            let [a, b] = f.evaluate(t, x);
            assert!(a.abs() < 1e-15 && b.abs() < 1e-15);
        }
    }

    #[test]
    fn changing_type_source_matches_symbolic_form() {
        let spec = ProblemSpec::paper1d(1.0).unwrap();
        let f = compose_manufactured_source(Arc::new(free_wave()), &spec).unwrap();
        let points: [(f64, f64); 4] = [(0.5, -1.0), (0.5, 1.0), (2.2, -0.1), (2.2, 2.9)];
        for (t, x) in points {
            let hyp = if x < 0.0 { 1.0 } else { 0.0 };
            let ell = 1.0 - hyp;
            let f1 = hyp * x.sin() * t.cos() + ell * x.sin() * t.sin() - x.sin() * t.cos();
            let f2 = -hyp * x.cos() * t.sin() + ell * x.cos() * t.cos() + x.cos() * t.sin();
            let [a, b] = f.evaluate(t, x);
            assert!((a - f1).abs() < 1e-14 && (b - f2).abs() < 1e-14);
        }
    }

    #[test]
    fn boundary_values_are_checked() {
        let spec = ProblemSpec::paper1d(1.0).unwrap();
        let bad = ClosureField {
            value: Arc::new(|_, x| [x.cos(), 0.0]),
            dt: Arc::new(|_, _| [0.0, 0.0]),
            dx: Arc::new(|_, x| [-x.sin(), 0.0]),
        };
        assert!(matches!(
            compose_manufactured_source(Arc::new(bad), &spec),
            Err(Error::BoundaryMismatch { .. })
        ));
    }

    #[test]
    fn separable_field_derivatives() {
        let spec = ProblemSpec::paper1d(1.0).unwrap();
        let mesh = build_mesh(&spec, 4).unwrap();
        let space = FeSpace::new(mesh, 2).unwrap();
        let field = smooth_in_time(&space);
        let h = 1e-6;
        let (t, x) = (0.4, -1.1);
        let fd = (field.value(t + h, x)[1] - field.value(t - h, x)[1]) / (2.0 * h);
        assert!((fd - field.dt(t, x)[1]).abs() < 1e-7);
        let fdx = (field.value(t, x + h)[0] - field.value(t, x - h)[0]) / (2.0 * h);
        assert!((fdx - field.dx(t, x)[0]).abs() < 1e-6);
        assert_eq!(field.value(t, spec.a)[0], 0.0);
    }
}
