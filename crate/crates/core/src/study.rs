//! Problem setup from a [`Config`], reference solutions, and refinement studies.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{error_vs_reference, ErrorReport, Exact, StudyReport, StudyRow};
use crate::config::{Config, Num, RegionConfig};
use crate::dump::read_reference;
use crate::error::{Error, Result};
use crate::manufactured::{polynomial_in_time, smooth_solution, with_exact_solution, ExactField};
use crate::model::{build_problem, ProblemSpec, RawProblem, Region, SourceTerm};
use crate::solver::{solve, DiscreteSolution, RunParams};
use crate::space::{build_mesh, FeSpace};
use crate::time_basis::TimeScheme;

/// What is known about the exact solution of a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactKind {
    None,
    /// The closed-form smooth field of [`smooth_solution`].
    Smooth,
    /// A polynomial-in-time field in the discrete trial space of each run.
    TrialSpace,
}

#[derive(Debug, Clone)]
pub struct ProblemSetup {
    pub base: ProblemSpec,
    pub kind: ExactKind,
}

impl ProblemSetup {
    /// The problem solved by one run, with its exact solution if known.
    pub fn instance(&self, run: &RunParams) -> Result<(ProblemSpec, Option<Arc<dyn ExactField>>)> {
        match self.kind {
            ExactKind::None => Ok((self.base.clone(), None)),
            ExactKind::Smooth => Ok((self.base.clone(), Some(Arc::new(smooth_solution())))),
            ExactKind::TrialSpace => {
                let space = FeSpace::new(build_mesh(&self.base, run.cells)?, run.k)?;
                let field: Arc<dyn ExactField> = Arc::new(polynomial_in_time(&space, run.r));
                Ok((with_exact_solution(self.base.clone(), field.clone())?, Some(field)))
            }
        }
    }
}

/// Source of a custom problem file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceChoice {
    #[default]
    Zero,
    Paper,
    Smooth,
}

/// A problem file: layout, horizon and source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub name: Option<String>,
    pub a: Num,
    pub b: Num,
    #[serde(rename = "T")]
    pub final_time: Num,
    pub rho: Option<f64>,
    pub regions: Vec<RegionConfig>,
    #[serde(default)]
    pub source: SourceChoice,
}

fn regions_from(cfg: &[RegionConfig]) -> Result<Vec<Region>> {
    cfg.iter()
        .map(|r| {
            Ok(Region { lo: r.lo.value()?, hi: r.hi.value()?, tag: r.tag, coefficients: r.coefficients() })
        })
        .collect()
}

fn apply_overrides(mut raw: RawProblem, cfg: &Config) -> Result<RawProblem> {
    if let Some(rho) = cfg.rho {
        raw.rho = rho;
    }
    if let Some(a) = &cfg.a {
        raw.a = a.value()?;
    }
    if let Some(b) = &cfg.b {
        raw.b = b.value()?;
    }
    if let Some(regions) = &cfg.regions {
        raw.regions = regions_from(regions)?;
    }
    if let Some(t) = &cfg.final_time {
        raw = raw.with_final_time(t.value()?);
    }
    Ok(raw)
}

fn smooth_setup(raw: RawProblem, kind: ExactKind) -> Result<ProblemSetup> {
    let mut raw = raw;
    raw.source = SourceTerm::zero();
    let spec = build_problem(raw)?;
    let base = match kind {
        ExactKind::Smooth => with_exact_solution(spec, Arc::new(smooth_solution()))?,
        _ => spec,
    };
    Ok(ProblemSetup { base, kind })
}

/// Builds the problem named by `cfg.problem` and applies the overrides in `cfg`.
pub fn setup_problem(cfg: &Config) -> Result<ProblemSetup> {
    let rho = cfg.rho.unwrap_or(1.0);
    match cfg.problem.as_str() {
        "paper1d" => {
            let raw = apply_overrides(RawProblem::paper1d(rho), cfg)?;
            Ok(ProblemSetup { base: build_problem(raw)?, kind: ExactKind::None })
        }
        "manufactured-smooth" => {
            let mut raw = RawProblem::paper1d(rho).with_final_time(2.0);
            raw.name = cfg.problem.clone();
            smooth_setup(apply_overrides(raw, cfg)?, ExactKind::Smooth)
        }
        "manufactured-exactness" => {
            let mut raw = RawProblem::paper1d(rho).with_final_time(1.0);
            raw.name = cfg.problem.clone();
            smooth_setup(apply_overrides(raw, cfg)?, ExactKind::TrialSpace)
        }
        path => custom_problem(Path::new(path), cfg),
    }
}

fn custom_problem(path: &Path, cfg: &Config) -> Result<ProblemSetup> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::InvalidConfig(format!("unknown problem {:?} and not a readable file: {e}", path.display()))
    })?;
    let file: ProblemFile = toml::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut raw = RawProblem::paper1d(file.rho.unwrap_or(1.0));
    raw.name = file.name.clone().unwrap_or_else(|| path.display().to_string());
    raw.a = file.a.value()?;
    raw.b = file.b.value()?;
    raw.regions = regions_from(&file.regions)?;
    raw = raw.with_final_time(file.final_time.value()?);
    let raw = apply_overrides(raw, cfg)?;
    match file.source {
        SourceChoice::Paper => Ok(ProblemSetup { base: build_problem(raw)?, kind: ExactKind::None }),
        SourceChoice::Zero => smooth_setup(raw, ExactKind::None),
        SourceChoice::Smooth => smooth_setup(raw, ExactKind::Smooth),
    }
}

/// What a study compares against.
pub enum Reference {
    /// The problem's exact solution, per run.
    Exact,
    Discrete(Arc<DiscreteSolution>),
}

pub fn reference_params(cfg: &Config) -> RunParams {
    let r = &cfg.reference;
    RunParams { k: r.k, r: r.r, cells: r.cells, slabs: r.slabs, scheme: TimeScheme::Cgp }
}

/// Loads `cfg.reference.path`, or uses the exact solution, or solves the reference run.
pub fn build_reference(setup: &ProblemSetup, cfg: &Config) -> Result<Reference> {
    if let Some(path) = &cfg.reference.path {
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        return Ok(Reference::Discrete(Arc::new(read_reference(file)?)));
    }
    match setup.kind {
        ExactKind::TrialSpace => Ok(Reference::Exact),
        ExactKind::Smooth if cfg.reference.exact => Ok(Reference::Exact),
        _ => {
            let run = reference_params(cfg);
            let (spec, _) = setup.instance(&run)?;
            log::info!("solving reference M = {}, N = {}, k = {}, r = {}", run.slabs, run.cells, run.k, run.r);
            Ok(Reference::Discrete(Arc::new(solve(&spec, &run)?)))
        }
    }
}

/// Solves one run and measures it against the reference.
pub fn measure(setup: &ProblemSetup, run: &RunParams, reference: &Reference, strict: bool) -> Result<ErrorReport> {
    let (spec, exact) = setup.instance(run)?;
    let sol = solve(&spec, run)?;
    match reference {
        Reference::Exact => {
            let field = exact.ok_or_else(|| Error::InvalidConfig("problem has no exact solution".into()))?;
            error_vs_reference(&sol, &Exact(field.as_ref()), strict)
        }
        Reference::Discrete(r) => error_vs_reference(&sol, r.as_ref(), strict),
    }
}

/// Worker pool capped by `EVOSTEP_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("EVOSTEP_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("EVOSTEP_THREADS = {v:?} is not a count")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::InvalidConfig(e.to_string()))
}

/// The runs of a study: every level for every configured scheme.
pub fn study_runs(cfg: &Config) -> Result<Vec<RunParams>> {
    let levels = cfg.level_pairs()?;
    let mut runs = Vec::new();
    for scheme in cfg.scheme.schemes() {
        let r = match scheme {
            TimeScheme::Cgp => cfg.r,
            TimeScheme::Dg => cfg.dg_degree(),
        };
        for &(slabs, cells) in &levels {
            runs.push(RunParams { k: cfg.k, r, cells, slabs, scheme });
        }
    }
    Ok(runs)
}

/// Runs every level (in parallel across levels) and tabulates errors and rates.
pub fn run_study(setup: &ProblemSetup, cfg: &Config, reference: &Reference) -> Result<StudyReport> {
    let runs = study_runs(cfg)?;
    let pool = thread_pool()?;
    let reports: Vec<Result<ErrorReport>> = pool.install(|| {
        runs.par_iter().map(|run| measure(setup, run, reference, cfg.strict_nesting)).collect()
    });
    let t_end = setup.base.final_time;
    let mut rows = Vec::with_capacity(runs.len());
    for (run, rep) in runs.iter().zip(reports) {
        let rep = rep?;
        rows.push(StudyRow::new(&setup.base.name, run.scheme, run.slabs, run.cells, run.k, run.r, t_end, &rep));
    }
    StudyReport::from_rows(rows)
}

/// cGP and dG errors side by side for the levels both schemes share.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    #[serde(rename = "M")]
    pub slabs: usize,
    #[serde(rename = "N")]
    pub cells: usize,
    pub k: usize,
    pub r_cgp: usize,
    pub r_dg: usize,
    pub err_cgp: f64,
    pub err_dg: f64,
    pub ratio_dg_cgp: f64,
    pub rho: f64,
    #[serde(rename = "T")]
    pub final_time: f64,
    pub problem: String,
}

pub fn compare_rows(report: &StudyReport) -> Vec<CompareRow> {
    report
        .scheme_rows(TimeScheme::Cgp)
        .filter_map(|c| {
            let d = report.scheme_rows(TimeScheme::Dg).find(|d| d.slabs == c.slabs && d.cells == c.cells)?;
            Some(CompareRow {
                slabs: c.slabs,
                cells: c.cells,
                k: c.k,
                r_cgp: c.r,
                r_dg: d.r,
                err_cgp: c.err_full,
                err_dg: d.err_full,
                ratio_dg_cgp: d.err_full / c.err_full,
                rho: c.rho,
                final_time: c.final_time,
                problem: c.problem.clone(),
            })
        })
        .collect()
}

pub fn write_compare_csv<W: std::io::Write>(rows: &[CompareRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Level, SchemeChoice};

    #[test]
    fn builtin_problems() {
        let mut cfg = Config::default();
        let p = setup_problem(&cfg).unwrap();
        assert_eq!(p.kind, ExactKind::None);
        assert_eq!(p.base.source.kinks, vec![std::f64::consts::PI]);
        cfg.problem = "manufactured-smooth".into();
        let p = setup_problem(&cfg).unwrap();
        assert_eq!((p.kind, p.base.final_time), (ExactKind::Smooth, 2.0));
        cfg.problem = "no/such/file.toml".into();
        assert!(matches!(setup_problem(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn custom_problem_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.toml");
        std::fs::write(
            &path,
            r#"
            a = 0.0
            b = "pi"
            T = 1.0
            source = "smooth"
            regions = [{ lo = 0.0, hi = "pi", tag = "parabolic" }]
            "#,
        )
        .unwrap();
        let cfg = Config { problem: path.display().to_string(), ..Config::default() };
        let p = setup_problem(&cfg).unwrap();
        assert_eq!(p.kind, ExactKind::Smooth);
        assert_eq!(p.base.regions.len(), 1);
    }

    #[test]
    fn exactness_study_has_tiny_errors() {
        let cfg = Config {
            problem: "manufactured-exactness".into(),
            scheme: SchemeChoice::Cgp,
            k: 2,
            r: 2,
            cells: 4,
            slabs: 4,
            levels: vec![Level::Slabs(4), Level::Slabs(8)],
            ..Config::default()
        };
        let setup = setup_problem(&cfg).unwrap();
        let reference = build_reference(&setup, &cfg).unwrap();
        let rep = run_study(&setup, &cfg, &reference).unwrap();
        assert_eq!(rep.rows.len(), 2);
        assert!(rep.rows.iter().all(|r| r.err_full < 1e-10), "{rep:?}");
    }

    #[test]
    fn both_schemes_compare() {
        let cfg = Config {
            scheme: SchemeChoice::Both,
            levels: vec![Level::Pair(8, 4), Level::Pair(16, 8)],
            reference: crate::config::ReferenceConfig { slabs: 32, cells: 16, k: 2, r: 2, ..Default::default() },
            ..Config::default()
        };
        let setup = setup_problem(&cfg).unwrap();
        let reference = build_reference(&setup, &cfg).unwrap();
        let rep = run_study(&setup, &cfg, &reference).unwrap();
        let cmp = compare_rows(&rep);
        assert_eq!(cmp.len(), 2);
        assert!(cmp.iter().all(|c| c.err_cgp > 0.0 && c.err_dg > 0.0));
    }
}
