//! Points, dilatation coefficients and the coordinate residual used by every
//! checker.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Threshold below which a coefficient product is treated as exactly 1.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// An element of a model space, stored as a coordinate tuple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFiniteInput(format!("coordinate {bad}")));
        }
        Ok(Point(coords))
    }

    /// Builds a point from coordinates produced by model arithmetic. Finiteness
    /// is enforced at the structure boundary instead.
    pub(crate) fn raw(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.0)
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.dim(),
            });
        }
        Ok(())
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFiniteInput(format!("{self}")))
        }
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
}

/// Mixed absolute/relative coordinate discrepancy
/// `max_i |a_i - b_i| / (1 + max(|a|_inf, |b|_inf))`.
///
/// Gauge distances of step-2 models take square roots of the vertical
/// coordinate, so a round-off of 1e-16 there reads as 1e-8 in the metric.
/// Checkers therefore compare maps pointwise in coordinates.
pub fn coord_residual(a: &Point, b: &Point) -> f64 {
    coord_residual_slice(a.coords(), b.coords())
}

pub(crate) fn coord_residual_slice(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    diff / (1.0 + sup_norm(a).max(sup_norm(b)))
}

/// A dilatation coefficient in `(0, +inf)`. Composition is multiplication.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Scalar(f64);

impl Scalar {
    pub const ONE: Scalar = Scalar(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Scalar(value))
        } else {
            Err(Error::NonPositiveScalar(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn inv(self) -> Scalar {
        Scalar(1.0 / self.0)
    }

    pub fn compose(self, other: Scalar) -> Scalar {
        Scalar(self.0 * other.0)
    }

    /// True when the coefficient is 1 up to [`UNIT_TOLERANCE`].
    pub fn is_unit(self) -> bool {
        (self.0 - 1.0).abs() <= UNIT_TOLERANCE
    }

    pub fn is_contraction(self) -> bool {
        self.0 < 1.0 && !self.is_unit()
    }
}

impl TryFrom<f64> for Scalar {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Scalar::new(v)
    }
}

impl From<Scalar> for f64 {
    fn from(s: Scalar) -> f64 {
        s.0
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Absolute plus relative comparison tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-9,
            rel: 1e-9,
        }
    }
}

impl Tolerance {
    pub fn close(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.abs + self.rel * a.abs().max(b.abs())
    }
}
