//! Solution dumps: a whitespace table for plotting and a reloadable binary reference format.
//!
//! The binary format is one magic line, one JSON header line, then the initial value and the
//! coefficient tensor `coeffs[m][j][dof]` as little-endian `f64`.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Coefficients, MaterialCoefficients, RegionTag};
use crate::solver::DiscreteSolution;
use crate::space::{FeSpace, Mesh1D};
use crate::time_basis::{TimeBasisPair, TimePartition, TimeScheme};

const MAGIC: &str = "EVOSTEP-REFERENCE 1";

/// Writes `t x u1 u2` rows on a uniform `times × points` grid including both ends.
pub fn write_solution_table<W: Write>(sol: &DiscreteSolution, times: usize, points: usize, out: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    let t_end = sol.partition.final_time();
    let (a, b) = (sol.space.mesh.a(), sol.space.mesh.b());
    writeln!(
        out,
        "# scheme={} degree={} k={} M={} N={} rho={} T={}",
        sol.scheme(),
        sol.degree(),
        sol.space.k,
        sol.partition.slabs(),
        sol.space.mesh.cells(),
        sol.rho,
        t_end
    )?;
    writeln!(out, "# t x u1 u2")?;
    let nt = times.max(2);
    let nx = points.max(2);
    for i in 0..nt {
        let t = t_end * i as f64 / (nt - 1) as f64;
        for j in 0..nx {
            let x = if j + 1 == nx { b } else { a + (b - a) * j as f64 / (nx - 1) as f64 };
            let [u1, u2] = sol.evaluate(t, x)?;
            writeln!(out, "{t:.12e} {x:.12e} {u1:.12e} {u2:.12e}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    scheme: TimeScheme,
    degree: usize,
    k: usize,
    rho: f64,
    knots: Vec<f64>,
    nodes: Vec<f64>,
    tags: Vec<RegionTag>,
    cells: Vec<Coefficients>,
    n_dofs: usize,
    n_modes: usize,
}

pub fn write_reference<W: Write>(sol: &DiscreteSolution, out: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    let mesh = &sol.space.mesh;
    let header = Header {
        scheme: sol.scheme(),
        degree: sol.degree(),
        k: sol.space.k,
        rho: sol.rho,
        knots: sol.partition.knots().to_vec(),
        nodes: mesh.nodes.clone(),
        tags: mesh.tags.clone(),
        cells: mesh.coefficients.cells.clone(),
        n_dofs: sol.space.n_dofs(),
        n_modes: sol.basis.n_trial(),
    };
    writeln!(out, "{MAGIC}")?;
    let json = serde_json::to_string(&header).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out, "{json}")?;
    for v in sol.initial.iter().chain(sol.coeffs.iter().flatten().flatten()) {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_reference<R: Read>(input: R) -> Result<DiscreteSolution> {
    let mut input = BufReader::new(input);
    let mut line = String::new();
    input.read_line(&mut line)?;
    if line.trim_end() != MAGIC {
        return Err(Error::BadDump(format!("unexpected first line {:?}", line.trim_end())));
    }
    line.clear();
    input.read_line(&mut line)?;
    let h: Header = serde_json::from_str(&line).map_err(|e| Error::BadDump(e.to_string()))?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let slabs = h.knots.len().saturating_sub(1);
    let expected = h.n_dofs * (1 + slabs * h.n_modes);
    if bytes.len() != 8 * expected {
        return Err(Error::BadDump(format!("expected {expected} values, found {} bytes", bytes.len())));
    }
    if h.tags.len() + 1 != h.nodes.len() || h.cells.len() + 1 != h.nodes.len() {
        return Err(Error::BadDump("cell data does not match the node list".into()));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let mesh = Mesh1D { nodes: h.nodes, tags: h.tags, coefficients: MaterialCoefficients { cells: h.cells } };
    let space = FeSpace::new(mesh, h.k).map_err(|e| Error::BadDump(e.to_string()))?;
    let basis = TimeBasisPair::for_scheme(h.scheme, h.degree).map_err(|e| Error::BadDump(e.to_string()))?;
    if space.n_dofs() != h.n_dofs || basis.n_trial() != h.n_modes {
        return Err(Error::BadDump("header sizes do not match the space and basis".into()));
    }
    let partition = TimePartition::from_knots(h.knots).map_err(|e| Error::BadDump(e.to_string()))?;
    let (initial, rest) = values.split_at(h.n_dofs);
    let coeffs = rest
        .chunks_exact(h.n_dofs * h.n_modes)
        .map(|slab| slab.chunks_exact(h.n_dofs).map(<[f64]>::to_vec).collect())
        .collect();
    Ok(DiscreteSolution { partition, basis, space, rho: h.rho, initial: initial.to_vec(), coeffs })
}
