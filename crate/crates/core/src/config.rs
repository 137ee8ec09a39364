//! Run configuration, read from TOML and overridable field by field.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Coefficients, RegionTag, Vec2};
use crate::time_basis::TimeScheme;

/// A real number, optionally written with `pi` (`"4pi"`, `"-pi"`, `"pi/2"`, `"3*pi/4"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Value(f64),
    Text(String),
}

impl Num {
    pub fn value(&self) -> Result<f64> {
        match self {
            Num::Value(v) => Ok(*v),
            Num::Text(s) => parse_num(s),
        }
    }
}

impl From<f64> for Num {
    fn from(v: f64) -> Self {
        Num::Value(v)
    }
}

pub fn parse_num(s: &str) -> Result<f64> {
    let bad = || Error::InvalidConfig(format!("cannot read number {s:?}"));
    let t = s.trim().replace(['*', ' '], "").to_lowercase();
    let Some(at) = t.find("pi") else {
        return t.parse().map_err(|_| bad());
    };
    let (pre, post) = (&t[..at], &t[at + 2..]);
    let coef = match pre {
        "" | "+" => 1.0,
        "-" => -1.0,
        p => p.parse::<f64>().map_err(|_| bad())?,
    };
    let div = match post {
        "" => 1.0,
        p => p.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(coef * PI / div)
}

/// `cgp`, `dg`, or both side by side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    #[default]
    Cgp,
    Dg,
    Both,
}

impl SchemeChoice {
    pub fn schemes(self) -> Vec<TimeScheme> {
        match self {
            SchemeChoice::Cgp => vec![TimeScheme::Cgp],
            SchemeChoice::Dg => vec![TimeScheme::Dg],
            SchemeChoice::Both => vec![TimeScheme::Cgp, TimeScheme::Dg],
        }
    }
}

impl std::str::FromStr for SchemeChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "cgp" => Ok(SchemeChoice::Cgp),
            "dg" => Ok(SchemeChoice::Dg),
            "both" => Ok(SchemeChoice::Both),
            _ => Err(Error::InvalidConfig(format!("unknown scheme {s:?} (cgp, dg, both)"))),
        }
    }
}

impl fmt::Display for SchemeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeChoice::Cgp => "cgp",
            SchemeChoice::Dg => "dg",
            SchemeChoice::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub lo: Num,
    pub hi: Num,
    pub tag: RegionTag,
    /// Overrides the model coefficients of `tag`.
    pub m0: Option<Vec2>,
    pub m1: Option<Vec2>,
}

impl RegionConfig {
    pub fn coefficients(&self) -> Coefficients {
        let base = self.tag.model_coefficients();
        Coefficients { m0: self.m0.unwrap_or(base.m0), m1: self.m1.unwrap_or(base.m1) }
    }
}

/// A refinement level: `M` alone (with `N` tied to it) or an explicit `[M, N]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Level {
    Slabs(usize),
    Pair(usize, usize),
}

/// The fine solve (or stored dump) that studies compare against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    #[serde(rename = "M")]
    pub slabs: usize,
    #[serde(rename = "N")]
    pub cells: usize,
    pub k: usize,
    pub r: usize,
    /// Load this dump instead of solving.
    pub path: Option<PathBuf>,
    /// Compare against the closed-form solution when the problem has one.
    pub exact: bool,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self { slabs: 1024, cells: 512, k: 3, r: 2, path: None, exact: true }
    }
}

/// Sample grid of the plain-text solution dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub times: usize,
    pub points: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self { times: 65, points: 129 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// `paper1d`, `manufactured-smooth`, `manufactured-exactness`, or a path to a problem file.
    pub problem: String,
    pub scheme: SchemeChoice,
    /// Time degree of the dG scheme; defaults to `r`.
    pub dg_degree: Option<usize>,
    pub k: usize,
    pub r: usize,
    #[serde(rename = "N")]
    pub cells: usize,
    #[serde(rename = "M")]
    pub slabs: usize,
    pub rho: Option<f64>,
    #[serde(rename = "T")]
    pub final_time: Option<Num>,
    pub a: Option<Num>,
    pub b: Option<Num>,
    pub regions: Option<Vec<RegionConfig>>,
    pub levels: Vec<Level>,
    pub reference: ReferenceConfig,
    pub sample: SampleConfig,
    /// Refuse non-nested discrete references.
    pub strict_nesting: bool,
    pub out: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            problem: "paper1d".into(),
            scheme: SchemeChoice::Cgp,
            dg_degree: None,
            k: 2,
            r: 1,
            cells: 32,
            slabs: 64,
            rho: None,
            final_time: None,
            a: None,
            b: None,
            regions: None,
            levels: vec![Level::Slabs(64), Level::Slabs(128), Level::Slabs(256)],
            reference: ReferenceConfig::default(),
            sample: SampleConfig::default(),
            strict_nesting: false,
            out: PathBuf::from("out"),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn dg_degree(&self) -> usize {
        self.dg_degree.unwrap_or(self.r)
    }

    /// `(M, N)` per level; bare `M` keeps the ratio `N / M` of the single-run fields.
    pub fn level_pairs(&self) -> Result<Vec<(usize, usize)>> {
        let pairs: Vec<(usize, usize)> = self
            .levels
            .iter()
            .map(|l| match *l {
                Level::Pair(m, n) => (m, n),
                Level::Slabs(m) => (m, (m * self.cells / self.slabs.max(1)).max(1)),
            })
            .collect();
        if pairs.is_empty() {
            return Err(Error::InvalidConfig("no refinement levels".into()));
        }
        Ok(pairs)
    }

    pub fn validate(&self) -> Result<()> {
        let at_least = |what: &str, v: usize, min: usize| {
            if v < min {
                Err(Error::InvalidConfig(format!("{what} = {v}, need at least {min}")))
            } else {
                Ok(())
            }
        };
        at_least("k", self.k, 1)?;
        at_least("r", self.r, 1)?;
        at_least("N", self.cells, 2)?;
        at_least("M", self.slabs, 1)?;
        at_least("reference.k", self.reference.k, 1)?;
        at_least("reference.r", self.reference.r, 1)?;
        if let Some(rho) = self.rho {
            if !(rho > 0.0) {
                return Err(Error::BadWeight(rho));
            }
        }
        for v in [&self.final_time, &self.a, &self.b].into_iter().flatten() {
            v.value()?;
        }
        Ok(())
    }
}
