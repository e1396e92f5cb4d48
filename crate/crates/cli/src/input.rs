//! Typed set files: a small JSON schema for rational sets, lattice-point
//! sets, formal-coordinate sets, and symmetric progressions.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use fewsums::gap::{BoxSlice, SymmetricGap};
use fewsums::point::{LatticePoint, PointSet};
use fewsums::scalar::FormalBasis;
use fewsums::{Rat, Scalar, ScalarSet};

/// A CLI-level failure: message plus the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub exit_code: u8,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { message: message.into(), exit_code: 3 }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<fewsums::Error> for CliError {
    fn from(e: fewsums::Error) -> Self {
        use fewsums::Error::*;
        let exit_code = match &e {
            HypothesisFailed(_) | NoIndexFound => 1,
            BudgetExceeded(_) | CapacityExceeded(_) | PipelineStalled { .. } => 2,
            _ => 3,
        };
        CliError { message: e.to_string(), exit_code }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Deserialize)]
struct FormalElement {
    #[serde(default)]
    unit: Option<String>,
    coords: Vec<String>,
}

#[derive(Deserialize)]
#[serde(tag = "domain", rename_all = "kebab-case", deny_unknown_fields)]
enum SetFile {
    Rational {
        elements: Vec<String>,
    },
    IntegerVector {
        dim: usize,
        elements: Vec<Vec<i64>>,
    },
    Formal {
        symbols: Vec<String>,
        approx: Vec<String>,
        err: Vec<String>,
        elements: Vec<FormalElement>,
    },
}

/// A parsed input set, tagged by its ground domain.
pub enum ParsedInput {
    Scalars(ScalarSet),
    Points(PointSet),
}

impl ParsedInput {
    pub fn scalars(self) -> CliResult<ScalarSet> {
        match self {
            ParsedInput::Scalars(s) => Ok(s),
            ParsedInput::Points(_) => {
                Err(CliError::usage("this command needs a scalar set, not lattice points"))
            }
        }
    }
}

pub fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_rat(s: &str, what: &str) -> CliResult<Rat> {
    match Scalar::parse_rational(s) {
        Ok(Scalar::Rational(r)) => Ok(r),
        _ => Err(CliError::usage(format!("{what}: not a rational number: {s:?}"))),
    }
}

/// Parses a set file into a typed set; duplicate elements are rejected.
pub fn parse_input(path: &Path) -> CliResult<ParsedInput> {
    let raw = read_file(path)?;
    let file: SetFile = serde_json::from_str(&raw)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    match file {
        SetFile::Rational { elements } => {
            let parsed = elements
                .iter()
                .map(|s| {
                    Scalar::parse_rational(s).map_err(|e| {
                        CliError::usage(format!("element {s:?}: {e}"))
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok(ParsedInput::Scalars(ScalarSet::new(parsed)?))
        }
        SetFile::IntegerVector { dim, elements } => {
            let points = elements
                .iter()
                .map(|coords| {
                    if coords.len() != dim {
                        return Err(CliError::usage(format!(
                            "point {coords:?} has {} coordinates, expected {dim}",
                            coords.len()
                        )));
                    }
                    Ok(LatticePoint::from_ints(coords))
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok(ParsedInput::Points(PointSet::new(dim, points)?))
        }
        SetFile::Formal { symbols, approx, err, elements } => {
            let approx = approx
                .iter()
                .map(|s| parse_rat(s, "approx"))
                .collect::<CliResult<Vec<_>>>()?;
            let err = err.iter().map(|s| parse_rat(s, "err")).collect::<CliResult<Vec<_>>>()?;
            let basis = FormalBasis::new(symbols, approx, err)?;
            let parsed = elements
                .iter()
                .map(|e| {
                    let unit = match &e.unit {
                        Some(u) => parse_rat(u, "unit")?,
                        None => Rat::new(0.into(), 1.into()),
                    };
                    let coords = e
                        .coords
                        .iter()
                        .map(|s| parse_rat(s, "coords"))
                        .collect::<CliResult<Vec<_>>>()?;
                    Ok(Scalar::formal(&basis, unit, coords)?)
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok(ParsedInput::Scalars(ScalarSet::new(parsed)?))
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GapFile {
    diffs: Vec<String>,
    half_sides: Vec<u64>,
    /// Values inside the progression (required by `gap clean`).
    #[serde(default)]
    values: Vec<String>,
    /// Robustness parameter for `gap clean`.
    #[serde(default)]
    eps: Option<String>,
}

/// A symmetric progression with optional covered values and `eps`.
pub struct ParsedGap {
    pub gap: SymmetricGap,
    pub values: ScalarSet,
    pub eps: Option<Rat>,
}

/// Parses `{"diffs": [...], "half_sides": [...], "values": [...], "eps": "..."}`.
pub fn parse_gap(path: &Path) -> CliResult<ParsedGap> {
    let raw = read_file(path)?;
    let file: GapFile = serde_json::from_str(&raw)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let diffs = file
        .diffs
        .iter()
        .map(|s| Scalar::parse_rational(s).map_err(CliError::from))
        .collect::<CliResult<Vec<_>>>()?;
    let gap = SymmetricGap::new(diffs, file.half_sides)?;
    let values = file
        .values
        .iter()
        .map(|s| Scalar::parse_rational(s).map_err(CliError::from))
        .collect::<CliResult<Vec<_>>>()?;
    let eps = file.eps.as_deref().map(|s| parse_rat(s, "eps")).transpose()?;
    Ok(ParsedGap { gap, values: ScalarSet::new(values)?, eps })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SliceFile {
    lambda: Vec<i64>,
    intervals: Vec<(i64, i64)>,
    level: i64,
}

/// Parses `{"lambda": [...], "intervals": [[lo,hi],...], "level": k}`.
pub fn parse_slice(path: &Path) -> CliResult<BoxSlice> {
    let raw = read_file(path)?;
    let file: SliceFile = serde_json::from_str(&raw)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    Ok(BoxSlice::new(file.lambda, file.intervals, file.level)?)
}
