use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evostep::config::{parse_num, Config, Level, Num, SchemeChoice};
use evostep::Error;

mod commands;

/// Space-time Galerkin solver for evolutionary systems of changing type.
#[derive(Debug, Parser)]
#[command(name = "evostep", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Solve once; write the solution table, the stability report, and errors if a reference is known.
    Solve,
    /// Solve every refinement level and tabulate errors and rates.
    Study,
    /// Solve the fine reference run and store it as a binary dump.
    Reference,
    /// Study both schemes and tabulate their errors side by side.
    Compare,
}

#[derive(Debug, Default, Args)]
struct Overrides {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// paper1d, manufactured-smooth, manufactured-exactness, or a problem file.
    #[arg(long, global = true)]
    problem: Option<String>,
    /// cgp, dg or both.
    #[arg(long, global = true)]
    scheme: Option<SchemeChoice>,
    /// Spatial degree.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Time degree.
    #[arg(long, global = true)]
    r: Option<usize>,
    /// Number of cells.
    #[arg(long = "N", global = true)]
    cells: Option<usize>,
    /// Number of time slabs.
    #[arg(long = "M", global = true)]
    slabs: Option<usize>,
    #[arg(long, global = true)]
    rho: Option<f64>,
    /// Final time; accepts multiples of pi such as 4pi.
    #[arg(long = "T", global = true)]
    final_time: Option<String>,
    /// Comma-separated levels: M values, or MxN pairs.
    #[arg(long, global = true)]
    levels: Option<String>,
    /// Reference dump to compare against.
    #[arg(long, global = true)]
    reference: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

fn parse_levels(s: &str) -> Result<Vec<Level>, Error> {
    s.split(',')
        .map(|item| {
            let item = item.trim();
            let bad = || Error::InvalidConfig(format!("cannot read level {item:?}"));
            match item.split_once('x') {
                Some((m, n)) => Ok(Level::Pair(m.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?)),
                None => Ok(Level::Slabs(item.parse().map_err(|_| bad())?)),
            }
        })
        .collect()
}

fn build_config(command: Command, o: &Overrides) -> Result<Config, Error> {
    let mut cfg = match &o.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(p) = &o.problem {
        cfg.problem = p.clone();
    }
    if let Some(s) = o.scheme {
        cfg.scheme = s;
    }
    if command == Command::Reference {
        let r = &mut cfg.reference;
        r.k = o.k.unwrap_or(r.k);
        r.r = o.r.unwrap_or(r.r);
        r.cells = o.cells.unwrap_or(r.cells);
        r.slabs = o.slabs.unwrap_or(r.slabs);
    } else {
        cfg.k = o.k.unwrap_or(cfg.k);
        cfg.r = o.r.unwrap_or(cfg.r);
        cfg.cells = o.cells.unwrap_or(cfg.cells);
        cfg.slabs = o.slabs.unwrap_or(cfg.slabs);
    }
    if let Some(rho) = o.rho {
        cfg.rho = Some(rho);
    }
    if let Some(t) = &o.final_time {
        parse_num(t)?;
        cfg.final_time = Some(Num::Text(t.clone()));
    }
    if let Some(l) = &o.levels {
        cfg.levels = parse_levels(l)?;
    }
    if let Some(r) = &o.reference {
        cfg.reference.path = Some(r.clone());
    }
    if let Some(out) = &o.out {
        cfg.out = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = build_config(cli.command, &cli.overrides).and_then(|cfg| match cli.command {
        Command::Solve => commands::solve(&cfg),
        Command::Study => commands::study(&cfg),
        Command::Reference => commands::reference(&cfg),
        Command::Compare => commands::compare(&cfg),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
