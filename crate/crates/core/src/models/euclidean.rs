use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::point::{Point, Scalar};
use crate::structure::{check_points, ConicalGroup, GroupStructure, ModelDomain};

/// Exponent of an `l^p` norm, `p ∈ [1, inf]`. Serialized as a number or `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormExponent(f64);

impl NormExponent {
    pub const TWO: NormExponent = NormExponent(2.0);
    pub const INF: NormExponent = NormExponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p >= 1.0 {
            Ok(NormExponent(p))
        } else {
            Err(Error::InvalidModel(format!(
                "norm exponent must be >= 1, got {p}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn norm(self, v: &[f64]) -> f64 {
        let p = self.0;
        if p.is_infinite() {
            v.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
        } else if p == 1.0 {
            v.iter().map(|c| c.abs()).sum()
        } else if p == 2.0 {
            v.iter().map(|c| c * c).sum::<f64>().sqrt()
        } else {
            v.iter().map(|c| c.abs().powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

impl Default for NormExponent {
    fn default() -> Self {
        NormExponent::TWO
    }
}

impl fmt::Display for NormExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for NormExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "max" => Ok(NormExponent::INF),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::ConfigParse(format!("bad norm exponent {other:?}")))
                .and_then(|p| NormExponent::new(p).map_err(|e| Error::ConfigParse(e.to_string()))),
        }
    }
}

impl Serialize for NormExponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for NormExponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => NormExponent::new(p).map_err(serde::de::Error::custom),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// A finite-dimensional normed vector space as a conical group under `+`,
/// with `δ_ε v = ε v`.
#[derive(Clone, Debug, PartialEq)]
pub struct EuclideanModel {
    dim: usize,
    p: NormExponent,
}

impl EuclideanModel {
    pub fn new(dim: usize, p: f64) -> Result<Self> {
        Self::with_exponent(dim, NormExponent::new(p)?)
    }

    pub fn with_exponent(dim: usize, p: NormExponent) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be at least 1".into()));
        }
        Ok(EuclideanModel { dim, p })
    }

    pub fn exponent(&self) -> NormExponent {
        self.p
    }

    pub fn default_domain() -> ModelDomain {
        ModelDomain::new(4.0, 2.0, None).expect("valid default domain")
    }

    pub fn structure(self) -> GroupStructure<Self> {
        let label = format!("euclidean(dim={}, p={})", self.dim, self.p);
        GroupStructure::new(self, Self::default_domain(), label)
    }
}

impl ConicalGroup for EuclideanModel {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn identity(&self) -> Point {
        Point::zeros(self.dim)
    }

    fn mul(&self, g: &Point, h: &Point) -> Result<Point> {
        check_points(self.dim, &[g, h])?;
        Ok(Point::raw(
            g.coords()
                .iter()
                .zip(h.coords())
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    fn inv(&self, g: &Point) -> Result<Point> {
        check_points(self.dim, &[g])?;
        Ok(Point::raw(g.coords().iter().map(|a| -a).collect()))
    }

    fn dilation(&self, eps: Scalar, g: &Point) -> Result<Point> {
        check_points(self.dim, &[g])?;
        let e = eps.value();
        Ok(Point::raw(g.coords().iter().map(|a| e * a).collect()))
    }

    fn norm(&self, g: &Point) -> Result<f64> {
        check_points(self.dim, &[g])?;
        Ok(self.p.norm(g.coords()))
    }
}
