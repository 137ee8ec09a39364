//! The continuous problem `(∂t M0 + M1 + A) U = F` on an interval split into typed regions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A pair of values, one per solution component.
pub type Vec2 = [f64; 2];

pub type SourceFn = Arc<dyn Fn(f64, f64) -> Vec2 + Send + Sync>;
pub type InitialFn = Arc<dyn Fn(f64) -> Vec2 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionTag {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

impl RegionTag {
    /// The characteristic-function coefficients of the changing-type model.
    pub fn model_coefficients(self) -> Coefficients {
        match self {
            RegionTag::Hyperbolic => Coefficients { m0: [1.0, 1.0], m1: [0.0, 0.0] },
            RegionTag::Parabolic => Coefficients { m0: [1.0, 0.0], m1: [0.0, 1.0] },
            RegionTag::Elliptic => Coefficients { m0: [0.0, 0.0], m1: [1.0, 1.0] },
        }
    }

    pub fn letter(self) -> char {
        match self {
            RegionTag::Elliptic => 'E',
            RegionTag::Parabolic => 'P',
            RegionTag::Hyperbolic => 'H',
        }
    }
}

impl fmt::Display for RegionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegionTag::Elliptic => "elliptic",
            RegionTag::Parabolic => "parabolic",
            RegionTag::Hyperbolic => "hyperbolic",
        };
        f.write_str(s)
    }
}

/// Diagonal entries of `M0` and `M1`, per component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub m0: Vec2,
    pub m1: Vec2,
}

impl Coefficients {
    /// `min_c (rho * m0[c] + m1[c])`.
    pub fn coercivity(&self, rho: f64) -> f64 {
        (0..2)
            .map(|c| rho * self.m0[c] + self.m1[c])
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: f64,
    pub hi: f64,
    pub tag: RegionTag,
    pub coefficients: Coefficients,
}

impl Region {
    pub fn new(lo: f64, hi: f64, tag: RegionTag) -> Self {
        Self { lo, hi, tag, coefficients: tag.model_coefficients() }
    }
}

/// Per-cell coefficients on a concrete mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialCoefficients {
    pub cells: Vec<Coefficients>,
}

#[derive(Clone)]
pub struct SourceTerm {
    eval: SourceFn,
    /// Times where the source is continuous but not smooth.
    pub kinks: Vec<f64>,
    /// Multiply by the indicator of `t >= 0`.
    pub switch_on: bool,
}

impl SourceTerm {
    pub fn new(eval: SourceFn, kinks: Vec<f64>, switch_on: bool) -> Self {
        Self { eval, kinks, switch_on }
    }

    pub fn zero() -> Self {
        Self::new(Arc::new(|_, _| [0.0, 0.0]), Vec::new(), false)
    }

    /// `f(t,x) = sin(3t)/5 + min(t,π) cos(3x)`, `g(t,x) = sin(t)(1 - x²/π²)`, switched on at 0.
    pub fn paper1d() -> Self {
        Self::new(
            Arc::new(|t, x| {
                let f = 0.2 * (3.0 * t).sin() + t.min(PI) * (3.0 * x).cos();
                let g = t.sin() * (1.0 - x * x / (PI * PI));
                [f, g]
            }),
            vec![PI],
            true,
        )
    }

    pub fn evaluate(&self, t: f64, x: f64) -> Vec2 {
        if self.switch_on && t < 0.0 {
            return [0.0, 0.0];
        }
        (self.eval)(t, x)
    }
}

impl fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceTerm")
            .field("kinks", &self.kinks)
            .field("switch_on", &self.switch_on)
            .finish_non_exhaustive()
    }
}

/// Unvalidated problem description.
#[derive(Clone)]
pub struct RawProblem {
    pub name: String,
    pub a: f64,
    pub b: f64,
    pub final_time: f64,
    pub rho: f64,
    pub regions: Vec<Region>,
    pub source: SourceTerm,
    pub initial: InitialFn,
}

impl RawProblem {
    /// Hyperbolic on `[-π, 0]`, elliptic on `[0, π]`, `T = 4π`, zero initial value.
    pub fn paper1d(rho: f64) -> Self {
        Self {
            name: "paper1d".into(),
            a: -PI,
            b: PI,
            final_time: 4.0 * PI,
            rho,
            regions: vec![
                Region::new(-PI, 0.0, RegionTag::Hyperbolic),
                Region::new(0.0, PI, RegionTag::Elliptic),
            ],
            source: SourceTerm::paper1d(),
            initial: Arc::new(|_| [0.0, 0.0]),
        }
    }

    /// Single region covering `[a, b]`.
    pub fn uniform(name: &str, a: f64, b: f64, final_time: f64, rho: f64, tag: RegionTag) -> Self {
        Self {
            name: name.into(),
            a,
            b,
            final_time,
            rho,
            regions: vec![Region::new(a, b, tag)],
            source: SourceTerm::zero(),
            initial: Arc::new(|_| [0.0, 0.0]),
        }
    }

    pub fn with_final_time(mut self, final_time: f64) -> Self {
        self.final_time = final_time;
        self.source.kinks.retain(|&k| k <= final_time);
        self
    }
}

/// A validated problem. Immutable once built.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub a: f64,
    pub b: f64,
    pub final_time: f64,
    pub rho: f64,
    pub regions: Vec<Region>,
    pub source: SourceTerm,
    pub initial: InitialFn,
    /// `min` over regions and components of `rho * m0 + m1`.
    pub gamma: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &(self.a, self.b))
            .field("final_time", &self.final_time)
            .field("rho", &self.rho)
            .field("regions", &self.regions)
            .field("gamma", &self.gamma)
            .finish_non_exhaustive()
    }
}

pub fn build_problem(raw: RawProblem) -> Result<ProblemSpec> {
    if !(raw.rho > 0.0) || !raw.rho.is_finite() {
        return Err(Error::BadWeight(raw.rho));
    }
    if !(raw.b > raw.a) {
        return Err(Error::BadPartition(format!("empty domain [{}, {}]", raw.a, raw.b)));
    }
    if !(raw.final_time > 0.0) || !raw.final_time.is_finite() {
        return Err(Error::InvalidConfig(format!("final time {} must be positive", raw.final_time)));
    }
    let mut regions = raw.regions.clone();
    regions.sort_by(|p, q| p.lo.total_cmp(&q.lo));
    check_partition(raw.a, raw.b, &regions)?;

    for r in &regions {
        if r.coefficients.m0.iter().chain(&r.coefficients.m1).any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "coefficients on [{}, {}] must be finite and nonnegative",
                r.lo, r.hi
            )));
        }
    }
    let gamma = regions
        .iter()
        .map(|r| r.coefficients.coercivity(raw.rho))
        .fold(f64::INFINITY, f64::min);
    if !(gamma > 0.0) {
        return Err(Error::NonCoercive { gamma });
    }

    let kinks = &raw.source.kinks;
    if kinks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("kink times must be strictly increasing".into()));
    }
    if let Some(&k) = kinks.iter().find(|&&k| k < 0.0 || k > raw.final_time) {
        return Err(Error::InvalidConfig(format!("kink time {k} outside [0, {}]", raw.final_time)));
    }

    Ok(ProblemSpec {
        name: raw.name,
        a: raw.a,
        b: raw.b,
        final_time: raw.final_time,
        rho: raw.rho,
        regions,
        source: raw.source,
        initial: raw.initial,
        gamma,
    })
}

fn check_partition(a: f64, b: f64, sorted: &[Region]) -> Result<()> {
    let tol = 1e-12 * (b - a).abs().max(1.0);
    let (first, last) = match (sorted.first(), sorted.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::BadPartition("no regions given".into())),
    };
    if (first.lo - a).abs() > tol || (last.hi - b).abs() > tol {
        return Err(Error::BadPartition(format!(
            "regions cover [{}, {}], domain is [{a}, {b}]",
            first.lo, last.hi
        )));
    }
    for r in sorted {
        if !(r.hi > r.lo) {
            return Err(Error::BadPartition(format!("empty region [{}, {}]", r.lo, r.hi)));
        }
    }
    for w in sorted.windows(2) {
        if w[1].lo < w[0].hi - tol {
            return Err(Error::BadPartition(format!(
                "regions [{}, {}] and [{}, {}] overlap",
                w[0].lo, w[0].hi, w[1].lo, w[1].hi
            )));
        }
        if w[1].lo > w[0].hi + tol {
            return Err(Error::BadPartition(format!("gap between {} and {}", w[0].hi, w[1].lo)));
        }
    }
    Ok(())
}

impl ProblemSpec {
    pub fn paper1d(rho: f64) -> Result<Self> {
        build_problem(RawProblem::paper1d(rho))
    }

    /// Region containing `x`; interior breakpoints belong to the region on their right.
    pub fn region_at(&self, x: f64) -> &Region {
        self.regions
            .iter()
            .find(|r| x < r.hi)
            .unwrap_or_else(|| self.regions.last().expect("validated problem has regions"))
    }

    pub fn coefficients_at(&self, x: f64) -> Coefficients {
        self.region_at(x).coefficients
    }

    pub fn source_at(&self, t: f64, x: f64) -> Vec2 {
        self.source.evaluate(t, x)
    }

    pub fn initial_at(&self, x: f64) -> Vec2 {
        (self.initial)(x)
    }

    /// Interior region breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.regions.iter().skip(1).map(|r| r.lo).collect()
    }

    /// True when every region has `m0 > 0` in both components.
    pub fn m0_definite(&self) -> bool {
        self.regions.iter().all(|r| r.coefficients.m0.iter().all(|&m| m > 0.0))
    }
}

pub fn evaluate_source(spec: &ProblemSpec, t: f64, x: f64) -> Vec2 {
    spec.source_at(t, x)
}
