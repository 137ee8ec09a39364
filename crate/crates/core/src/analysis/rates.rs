use std::io::Write;

use serde::Serialize;

use super::ErrorReport;
use crate::error::{Error, Result};
use crate::time_basis::TimeScheme;

/// `log2(e_{i-1} / e_i)` for consecutive factor-2 refinements.
pub fn convergence_rates(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 levels, got {}", errors.len())));
    }
    if let Some(i) = errors.iter().position(|&e| e == 0.0) {
        return Err(Error::ZeroError(i));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Like [`convergence_rates`] but reports a vanishing error as an infinite rate.
pub fn rates_or_infinite(errors: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .map(|w| if w[1] == 0.0 { f64::INFINITY } else { (w[0] / w[1]).log2() })
        .collect()
}

/// One refinement level of a study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    #[serde(rename = "M")]
    pub slabs: usize,
    #[serde(rename = "N")]
    pub cells: usize,
    pub k: usize,
    pub r: usize,
    pub scheme: TimeScheme,
    pub err_full: f64,
    pub err_proj: f64,
    pub err_final_energy: f64,
    #[serde(rename = "err_L2")]
    pub err_l2: f64,
    pub rate_full: Option<f64>,
    pub rate_proj: Option<f64>,
    pub rho: f64,
    #[serde(rename = "T")]
    pub final_time: f64,
    pub problem: String,
}

impl StudyRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        problem: &str,
        scheme: TimeScheme,
        slabs: usize,
        cells: usize,
        k: usize,
        r: usize,
        final_time: f64,
        report: &ErrorReport,
    ) -> Self {
        Self {
            slabs,
            cells,
            k,
            r,
            scheme,
            err_full: report.full,
            err_proj: report.projected,
            err_final_energy: report.final_energy,
            err_l2: report.l2,
            rate_full: None,
            rate_proj: None,
            rho: report.rho,
            final_time,
            problem: problem.to_string(),
        }
    }
}

/// Errors and observed rates of a refinement study, grouped by scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
}

impl StudyReport {
    /// Orders rows by scheme then `M`, and fills in the rates within each scheme.
    pub fn from_rows(mut rows: Vec<StudyRow>) -> Result<Self> {
        rows.sort_by_key(|r| (r.scheme as u8, r.slabs));
        for w in rows.windows(2) {
            if w[0].scheme == w[1].scheme && (w[1].slabs <= w[0].slabs || w[1].cells < w[0].cells) {
                return Err(Error::InvalidConfig(format!(
                    "refinement levels must increase: (M, N) = ({}, {}) then ({}, {})",
                    w[0].slabs, w[0].cells, w[1].slabs, w[1].cells
                )));
            }
        }
        let mut start = 0;
        while start < rows.len() {
            let scheme = rows[start].scheme;
            let end = start + rows[start..].iter().take_while(|r| r.scheme == scheme).count();
            let full: Vec<f64> = rows[start..end].iter().map(|r| r.err_full).collect();
            let proj: Vec<f64> = rows[start..end].iter().map(|r| r.err_proj).collect();
            for (i, (a, b)) in rates_or_infinite(&full).into_iter().zip(rates_or_infinite(&proj)).enumerate() {
                rows[start + i + 1].rate_full = Some(a);
                rows[start + i + 1].rate_proj = Some(b);
            }
            start = end;
        }
        Ok(Self { rows })
    }

    pub fn scheme_rows(&self, scheme: TimeScheme) -> impl Iterator<Item = &StudyRow> {
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_values() {
        let r = convergence_rates(&[8.890e-4, 3.136e-4]).unwrap();
        assert!((r[0] - 1.50).abs() < 5e-3);
        assert_eq!(convergence_rates(&[4.0, 1.0]).unwrap(), vec![2.0]);
        assert_eq!(convergence_rates(&[1.0, 1.0]).unwrap(), vec![0.0]);
        assert_eq!(convergence_rates(&[1.0, 0.0]), Err(Error::ZeroError(1)));
        assert_eq!(rates_or_infinite(&[1.0, 0.0]), vec![f64::INFINITY]);
        assert!(convergence_rates(&[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn exact_order_data(c in 1e-6f64..1e3, p in 0.5f64..6.0, n in 2usize..8) {
            let e: Vec<f64> = (0..n).map(|i| c * 2f64.powf(-p * i as f64)).collect();
            for rate in convergence_rates(&e).unwrap() {
                prop_assert!((rate - p).abs() < 1e-12);
            }
        }
    }

    fn row(scheme: TimeScheme, m: usize, e: f64) -> StudyRow {
        let rep = ErrorReport {
            rho: 1.0,
            full: e,
            projected: e / 2.0,
            defect: 0.0,
            final_energy: 0.0,
            l2: e,
            per_slab: vec![],
        };
        StudyRow::new("p", scheme, m, m / 2, 2, 1, 1.0, &rep)
    }

    #[test]
    fn rates_are_grouped_by_scheme() {
        let rep = StudyReport::from_rows(vec![
            row(TimeScheme::Dg, 16, 0.25),
            row(TimeScheme::Cgp, 16, 1.0),
            row(TimeScheme::Cgp, 8, 4.0),
            row(TimeScheme::Dg, 8, 0.5),
        ])
        .unwrap();
        let cgp: Vec<_> = rep.scheme_rows(TimeScheme::Cgp).map(|r| r.rate_full).collect();
        let dg: Vec<_> = rep.scheme_rows(TimeScheme::Dg).map(|r| r.rate_full).collect();
        assert_eq!(cgp, vec![None, Some(2.0)]);
        assert_eq!(dg, vec![None, Some(1.0)]);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("M,N,k,r,scheme,err_full,err_proj,err_final_energy,err_L2,rate_full,rate_proj,rho,T,problem\n"));
        assert!(text.contains("16,8,2,1,cgp,1.0,0.5,0.0,1.0,2.0,2.0,1.0,1.0,p"));
    }

    #[test]
    fn rejects_non_increasing_levels() {
        let rows = vec![row(TimeScheme::Cgp, 16, 1.0), row(TimeScheme::Cgp, 16, 0.5)];
        assert!(StudyReport::from_rows(rows).is_err());
    }
}
