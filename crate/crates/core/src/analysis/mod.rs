//! Weighted norms, error functionals, stability checkers and convergence tables.

mod errors;
mod probe;
mod rates;
mod stability;
mod star;

pub use errors::{error_vs_reference, weighted_norm, ErrorReport, NormGrid, SlabError};
pub use probe::{probe_norm_equivalence, trace_weights, NormCase, ProbeStats};
pub use rates::{convergence_rates, rates_or_infinite, StudyReport, StudyRow};
pub use stability::{check_error_bound, check_stability, stability_margins, BoundReport, StabilityReport};
pub use star::{star_norm, StarNorm};

use crate::manufactured::ExactField;
use crate::model::Vec2;
use crate::solver::DiscreteSolution;

/// A field that can be sampled on a fixed set of positions at many times.
pub trait SpaceTimeField: Sync {
    /// Prepares evaluation at the positions `xs`.
    fn slicer<'a>(&'a self, xs: &[f64]) -> Box<dyn TimeSlice + 'a>;

    /// Times where the field may be non-smooth.
    fn time_breaks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Positions where the field may be non-smooth.
    fn space_breaks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Polynomial degrees `(time, space)` for quadrature sizing, if piecewise polynomial.
    fn degrees(&self) -> Option<(usize, usize)> {
        None
    }
}

/// Values of a field at the prepared positions.
pub trait TimeSlice: Sync {
    fn values(&self, t: f64) -> Vec<Vec2>;
}

struct DiscreteSlice<'a> {
    sol: &'a DiscreteSolution,
    points: Vec<(usize, Vec<f64>)>,
}

impl TimeSlice for DiscreteSlice<'_> {
    fn values(&self, t: f64) -> Vec<Vec2> {
        let (m, s) = self.sol.partition.locate(t).unwrap_or_else(|| {
            let last = self.sol.partition.slabs() - 1;
            (last, if t <= 0.0 { 0.0 } else { 1.0 })
        });
        let phi = self.sol.basis.trial_values(s);
        let space = &self.sol.space;
        self.points
            .iter()
            .map(|(c, local)| {
                let mut u = [0.0, 0.0];
                for (p, coef) in phi.iter().zip(&self.sol.coeffs[m]) {
                    let [a, b] = space.eval_in_cell(coef, *c, local);
                    u[0] += p * a;
                    u[1] += p * b;
                }
                u
            })
            .collect()
    }
}

impl SpaceTimeField for DiscreteSolution {
    fn slicer<'a>(&'a self, xs: &[f64]) -> Box<dyn TimeSlice + 'a> {
        let points = xs
            .iter()
            .map(|&x| {
                let (c, xi) = self.space.mesh.locate(x).unwrap_or((0, 0.0));
                (c, self.space.local_values(xi))
            })
            .collect();
        Box::new(DiscreteSlice { sol: self, points })
    }

    fn time_breaks(&self) -> Vec<f64> {
        self.partition.knots().to_vec()
    }

    fn space_breaks(&self) -> Vec<f64> {
        self.space.mesh.nodes.clone()
    }

    fn degrees(&self) -> Option<(usize, usize)> {
        Some((self.degree(), self.space.k))
    }
}

/// Adapter sampling an [`ExactField`].
pub struct Exact<'a>(pub &'a dyn ExactField);

struct ExactSlice<'a> {
    field: &'a dyn ExactField,
    xs: Vec<f64>,
}

impl TimeSlice for ExactSlice<'_> {
    fn values(&self, t: f64) -> Vec<Vec2> {
        self.xs.iter().map(|&x| self.field.value(t, x)).collect()
    }
}

impl SpaceTimeField for Exact<'_> {
    fn slicer<'a>(&'a self, xs: &[f64]) -> Box<dyn TimeSlice + 'a> {
        Box::new(ExactSlice { field: self.0, xs: xs.to_vec() })
    }
}

/// Adapter sampling a plain closure.
pub struct FnField<F>(pub F);

struct FnSlice<'a, F> {
    f: &'a F,
    xs: Vec<f64>,
}

impl<F: Fn(f64, f64) -> Vec2 + Sync> TimeSlice for FnSlice<'_, F> {
    fn values(&self, t: f64) -> Vec<Vec2> {
        self.xs.iter().map(|&x| (self.f)(t, x)).collect()
    }
}

impl<F: Fn(f64, f64) -> Vec2 + Sync> SpaceTimeField for FnField<F> {
    fn slicer<'a>(&'a self, xs: &[f64]) -> Box<dyn TimeSlice + 'a> {
        Box::new(FnSlice { f: &self.0, xs: xs.to_vec() })
    }
}
