//! Fixtures shared by the benchmarks.

use evostep::prelude::*;
use evostep::solver::uniform_partition;

/// The built-in changing-type problem at `rho = 1` with its spatial system, partition and bases.
pub struct Fixture {
    pub spec: ProblemSpec,
    pub system: SpatialSystem1D,
    pub partition: TimePartition,
    pub basis: TimeBasisPair,
}

pub fn builtin_fixture(k: usize, r: usize, cells: usize, slabs: usize, scheme: TimeScheme) -> Fixture {
    let spec = ProblemSpec::paper1d(1.0).expect("built-in problem is valid");
    let mesh = build_mesh(&spec, cells).expect("even cell count resolves the regions");
    let system = assemble_spatial(&mesh, k, &mesh.coefficients).expect("valid degree");
    let partition = uniform_partition(&spec, slabs).expect("slab count resolves the kink");
    let basis = TimeBasisPair::for_scheme(scheme, r).expect("valid degree");
    Fixture { spec, system, partition, basis }
}
