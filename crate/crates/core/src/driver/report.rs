use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{RunConfig, GAP_LAW_TOLERANCE, SOLVER_AGREEMENT};
use crate::axioms::{CheckReport, GridReport};
use crate::error::{Error, Result};
use crate::extrapolate::LimitEstimate;
use crate::menelaos::IterationTrace;
use crate::models::{GaugeCalibration, ModelDescriptor};
use crate::point::{Point, Scalar};
use crate::semigroup::{CanonicalElement, Word};
use crate::tangent::TangentDefect;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomsPayload {
    pub samples: usize,
    /// A1, A2, linearity and, for group models, the norm axioms.
    pub checks: Vec<CheckReport>,
    /// Grid runs of the A3 and A4 limits.
    pub limits: Vec<GridReport>,
    /// Sphere only: the Menelaos identity on the linearity witness, with the
    /// fixed point of the composition as centre. Expected to fail; reported
    /// for information and not part of `pass`.
    pub negative_control: Option<CheckReport>,
    pub calibration: Option<GaugeCalibration>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentPayload {
    pub base: Point,
    pub u: Point,
    pub v: Point,
    pub metric: LimitEstimate,
    pub op: LimitEstimate,
    pub inv: LimitEstimate,
    pub conical: Vec<CheckReport>,
    pub defect: Vec<TangentDefect>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MenelaosPayload {
    pub x: Point,
    pub y: Point,
    pub eps: Scalar,
    pub mu: Scalar,
    /// The centre: from the two-sequence iteration on linear models, from
    /// direct fixed-point iteration otherwise.
    pub w: Point,
    pub trace: Option<IterationTrace>,
    /// Why the two-sequence iteration did not run.
    pub iteration_error: Option<String>,
    pub banach: Point,
    pub closed_form: Option<Point>,
    /// Largest coordinate residual between the available solvers.
    pub agreement: f64,
    /// Largest relative deviation of `gap_{n+1}/gap_n` from `εμ`.
    pub gap_law_error: Option<f64>,
    pub menelaos: CheckReport,
    pub invariance: Option<CheckReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizePayload {
    pub word: Word,
    pub coefficient_product: f64,
    pub normal_form: CanonicalElement,
    pub verification: CheckReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Payload {
    CheckAxioms(AxiomsPayload),
    Tangent(TangentPayload),
    Menelaos(MenelaosPayload),
    Normalize(NormalizePayload),
}

impl Payload {
    pub fn pass(&self) -> bool {
        match self {
            Payload::CheckAxioms(p) => {
                p.checks.iter().all(|c| c.pass) && p.limits.iter().all(|l| l.pass)
            }
            Payload::Tangent(p) => {
                p.metric.converged
                    && p.op.converged
                    && p.inv.converged
                    && p.conical.iter().all(|c| c.pass)
            }
            Payload::Menelaos(p) => {
                p.trace.as_ref().is_some_and(|t| t.converged)
                    && p.agreement <= SOLVER_AGREEMENT
                    && p.gap_law_error.is_some_and(|e| e <= GAP_LAW_TOLERANCE)
                    && p.menelaos.pass
                    && p.invariance.as_ref().is_some_and(|c| c.pass)
            }
            Payload::Normalize(p) => p.verification.pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub model_label: String,
    /// Descriptor that rebuilds the exact model used.
    pub model: ModelDescriptor,
    pub config: RunConfig,
    pub pass: bool,
    pub payload: Payload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Serializes a report. JSON fields keep their declaration order; CSV is
/// only defined for iteration traces.
pub fn emit(report: &Report, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut out =
                serde_json::to_vec_pretty(report).map_err(|e| Error::Io(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => match &report.payload {
            Payload::Menelaos(MenelaosPayload {
                trace: Some(trace), ..
            }) => Ok(trace.to_csv().into_bytes()),
            _ => Err(Error::UnsupportedFormat(
                "csv output is only available for menelaos traces".into(),
            )),
        },
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial report.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .map_err(|e| Error::Io(e.error.to_string()))?;
    Ok(())
}
