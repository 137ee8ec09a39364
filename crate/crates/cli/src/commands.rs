use std::fs::{self, File};
use std::path::{Path, PathBuf};

use evostep::analysis::{error_vs_reference, stability_margins, Exact, StabilityReport, StudyReport};
use evostep::config::Config;
use evostep::dump::{read_reference, write_reference, write_solution_table};
use evostep::solver::{solve_with_system, RunParams};
use evostep::study::{
    build_reference, compare_rows, reference_params, run_study, setup_problem, write_compare_csv,
};
use evostep::time_basis::TimeScheme;
use evostep::{Error, Result};

fn out_file(cfg: &Config, name: &str) -> Result<(PathBuf, File)> {
    fs::create_dir_all(&cfg.out).map_err(|e| Error::Io(format!("{}: {e}", cfg.out.display())))?;
    let path = cfg.out.join(name);
    let file = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok((path, file))
}

fn write_stability(report: &StabilityReport, knots: &[f64], path: &Path, file: File) -> Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "knot,t,lhs,rhs,margin,scale")?;
    for (l, t) in knots.iter().enumerate().skip(1) {
        let i = l - 1;
        writeln!(
            w,
            "{l},{t},{},{},{},{}",
            report.lhs[i], report.rhs[i], report.margins[i], report.scales[i]
        )?;
    }
    w.flush()?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub fn solve(cfg: &Config) -> Result<()> {
    let setup = setup_problem(cfg)?;
    let loaded = match &cfg.reference.path {
        Some(p) => {
            let f = File::open(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            Some(read_reference(f)?)
        }
        None => None,
    };
    let mut violation = None;
    for scheme in cfg.scheme.schemes() {
        let r = if scheme == TimeScheme::Dg { cfg.dg_degree() } else { cfg.r };
        let run = RunParams { k: cfg.k, r, cells: cfg.cells, slabs: cfg.slabs, scheme };
        let (spec, exact) = setup.instance(&run)?;
        let (system, sol) = solve_with_system(&spec, &run)?;

        let (_, file) = out_file(cfg, &format!("solution_{scheme}.txt"))?;
        write_solution_table(&sol, cfg.sample.times, cfg.sample.points, file)?;

        if scheme == TimeScheme::Cgp {
            let report = stability_margins(&sol, &system, &spec)?;
            let (path, file) = out_file(cfg, "stability_cgp.csv")?;
            write_stability(&report, sol.partition.knots(), &path, file)?;
            let (knot, margin) = report.min_margin();
            println!("{scheme}: stability min margin {margin:.3e} at knot {knot}");
            let scale = report.scales[knot - 1];
            if margin < -1e-9 * scale {
                violation = Some(Error::StabilityViolated { knot, margin, scale });
            }
        }

        let errors = match (&loaded, &exact) {
            (Some(reference), _) => Some(error_vs_reference(&sol, reference, cfg.strict_nesting)?),
            (None, Some(field)) => Some(error_vs_reference(&sol, &Exact(field.as_ref()), false)?),
            (None, None) => None,
        };
        if let Some(rep) = errors {
            let (_, file) = out_file(cfg, &format!("errors_{scheme}.json"))?;
            serde_json::to_writer_pretty(file, &rep).map_err(|e| Error::Io(e.to_string()))?;
            println!(
                "{scheme}: full {:.6e} projected {:.6e} final energy {:.6e} L2 {:.6e}",
                rep.full, rep.projected, rep.final_energy, rep.l2
            );
        }
    }
    match violation {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn check_levels(cfg: &Config) -> Result<()> {
    let levels = cfg.level_pairs()?;
    for w in levels.windows(2) {
        if w[1].0 != 2 * w[0].0 {
            return Err(Error::InvalidConfig(format!(
                "levels must double M: {} then {}",
                w[0].0, w[1].0
            )));
        }
    }
    Ok(())
}

fn run_and_write(cfg: &Config) -> Result<StudyReport> {
    check_levels(cfg)?;
    let setup = setup_problem(cfg)?;
    let reference = build_reference(&setup, cfg)?;
    let report = run_study(&setup, cfg, &reference)?;
    let (path, file) = out_file(cfg, "study.csv")?;
    report.write_csv(file)?;
    report.write_csv(std::io::stdout().lock())?;
    log::info!("wrote {}", path.display());
    Ok(report)
}

pub fn study(cfg: &Config) -> Result<()> {
    run_and_write(cfg).map(|_| ())
}

pub fn compare(cfg: &Config) -> Result<()> {
    let mut cfg = cfg.clone();
    cfg.scheme = evostep::config::SchemeChoice::Both;
    let report = run_and_write(&cfg)?;
    let rows = compare_rows(&report);
    let (_, file) = out_file(&cfg, "compare.csv")?;
    write_compare_csv(&rows, file)?;
    write_compare_csv(&rows, std::io::stdout().lock())
}

pub fn reference(cfg: &Config) -> Result<()> {
    let setup = setup_problem(cfg)?;
    let run = reference_params(cfg);
    let (spec, _) = setup.instance(&run)?;
    let (_, sol) = solve_with_system(&spec, &run)?;
    let (path, file) = out_file(cfg, "reference.bin")?;
    write_reference(&sol, file)?;
    println!(
        "reference M = {} N = {} k = {} r = {} written to {}",
        run.slabs,
        run.cells,
        run.k,
        run.r,
        path.display()
    );
    Ok(())
}
