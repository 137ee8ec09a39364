//! Space-time Galerkin time stepping for evolutionary systems of changing type
//!
//! ```text
//! (∂t M0 + M1 + A) U = F,   A = [[0, ∂x], [∂x°, 0]]
//! ```
//!
//! on an interval split into elliptic, parabolic and hyperbolic regions, with all temporal
//! inner products weighted by `exp(-2 rho t)`. Time is discretized slab by slab with the
//! continuous Galerkin-Petrov method cGP(r) or, for comparison, a discontinuous Galerkin
//! method; space with continuous `P_k` elements.
//!
//! ```no_run
//! use evostep::prelude::*;
//!
//! let spec = ProblemSpec::paper1d(1.0).unwrap();
//! let run = RunParams { k: 2, r: 1, cells: 32, slabs: 64, scheme: TimeScheme::Cgp };
//! let sol = solve(&spec, &run).unwrap();
//! println!("{:?}", sol.evaluate(1.0, 0.5).unwrap());
//! ```

pub mod analysis;
pub mod banded;
pub mod config;
pub mod dump;
pub mod error;
pub mod manufactured;
pub mod model;
pub mod poly;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod study;
pub mod time_basis;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::analysis::{
        check_stability, convergence_rates, error_vs_reference, star_norm, weighted_norm, Exact,
        ErrorReport, StabilityReport, StudyReport,
    };
    pub use crate::error::{Error, Result};
    pub use crate::model::{
        build_problem, evaluate_source, Coefficients, ProblemSpec, RawProblem, Region,
        RegionTag, SourceTerm, Vec2,
    };
    pub use crate::solver::{march, solve, DiscreteSolution, RunParams};
    pub use crate::space::{assemble_spatial, build_mesh, FeSpace, Mesh1D, SpatialSystem1D};
    pub use crate::time_basis::{
        build_time_bases, weighted_moments, TimeBasisPair, TimePartition, TimeScheme,
        WeightedMoments,
    };
}
