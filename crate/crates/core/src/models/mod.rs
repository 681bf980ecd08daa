//! Concrete dilatation structures and their configuration descriptors.

mod euclidean;
mod heisenberg;
mod sphere;
mod step2;

use serde::{Deserialize, Serialize};

pub use euclidean::{EuclideanModel, NormExponent};
pub use heisenberg::HeisenbergModel;
pub use sphere::SphereModel;
pub use step2::{random_bracket, Bracket, GaugeCalibration, Step2CarnotModel};

use crate::error::{Error, Result};
use crate::point::{Point, Scalar};
use crate::structure::{ConicalGroup, DilatationStructure, GroupStructure};

/// Serializable model description: a kind tag plus parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelDescriptor {
    Euclidean {
        dim: usize,
        #[serde(default)]
        p: NormExponent,
    },
    Heisenberg {},
    Step2 {
        dim1: usize,
        dim2: usize,
        /// Explicit coefficients `bracket[i][j][k]`; drawn from `bracket_seed`
        /// when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bracket: Option<Bracket>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bracket_seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gauge_c: Option<f64>,
    },
    Sphere {
        #[serde(default = "unit_radius")]
        radius: f64,
        #[serde(default = "north_pole")]
        base: [f64; 3],
    },
}

fn unit_radius() -> f64 {
    1.0
}

fn north_pole() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

impl ModelDescriptor {
    /// Parses the compact command-line form `kind[:key=value,...]`, e.g.
    /// `euclidean:dim=2,p=inf`, `step2:dim1=3,dim2=2,bracket_seed=7`,
    /// `sphere:radius=2`.
    pub fn parse_flag(text: &str) -> Result<Self> {
        let (kind, params) = match text.split_once(':') {
            Some((k, p)) => (k.trim(), p),
            None => (text.trim(), ""),
        };
        let mut pairs = Vec::new();
        for item in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::ConfigParse(format!("expected key=value, got {item:?}")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let get = |key: &str| {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
        };
        let num = |key: &str| -> Result<Option<f64>> {
            get(key)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::ConfigParse(format!("bad number for {key}: {v:?}")))
                })
                .transpose()
        };
        let int = |key: &str| -> Result<Option<u64>> {
            get(key)
                .map(|v| {
                    v.parse::<u64>()
                        .map_err(|_| Error::ConfigParse(format!("bad integer for {key}: {v:?}")))
                })
                .transpose()
        };
        let known: &[&str] = match kind {
            "euclidean" => &["dim", "p"],
            "heisenberg" => &[],
            "step2" => &["dim1", "dim2", "bracket_seed", "gauge_c"],
            "sphere" => &["radius"],
            other => return Err(Error::ConfigParse(format!("unknown model kind {other:?}"))),
        };
        if let Some((k, _)) = pairs.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(Error::ConfigParse(format!(
                "unknown parameter {k:?} for {kind}"
            )));
        }
        Ok(match kind {
            "euclidean" => ModelDescriptor::Euclidean {
                dim: int("dim")?.unwrap_or(2) as usize,
                p: get("p").map(str::parse).transpose()?.unwrap_or_default(),
            },
            "heisenberg" => ModelDescriptor::Heisenberg {},
            "step2" => ModelDescriptor::Step2 {
                dim1: int("dim1")?.unwrap_or(3) as usize,
                dim2: int("dim2")?.unwrap_or(2) as usize,
                bracket: None,
                bracket_seed: int("bracket_seed")?,
                gauge_c: num("gauge_c")?,
            },
            _ => ModelDescriptor::Sphere {
                radius: num("radius")?.unwrap_or(1.0),
                base: north_pole(),
            },
        })
    }
}

/// A constructed model, ready to be used as a dilatation structure.
#[derive(Clone, Debug)]
pub enum Model {
    Euclidean(GroupStructure<EuclideanModel>),
    Heisenberg(GroupStructure<HeisenbergModel>),
    Step2(GroupStructure<Step2CarnotModel>),
    Sphere(SphereModel),
}

impl Model {
    pub fn structure(&self) -> &dyn DilatationStructure {
        match self {
            Model::Euclidean(s) => s,
            Model::Heisenberg(s) => s,
            Model::Step2(s) => s,
            Model::Sphere(s) => s,
        }
    }

    pub fn group(&self) -> Option<&dyn ConicalGroup> {
        self.structure().group()
    }

    /// Descriptor that rebuilds this exact model, including the calibrated
    /// gauge and the expanded bracket of step-2 models.
    pub fn descriptor(&self) -> ModelDescriptor {
        match self {
            Model::Euclidean(s) => ModelDescriptor::Euclidean {
                dim: s.inner().dimension(),
                p: s.inner().exponent(),
            },
            Model::Heisenberg(_) => ModelDescriptor::Heisenberg {},
            Model::Step2(s) => {
                let m = s.inner();
                let (dim1, dim2) = m.dims();
                ModelDescriptor::Step2 {
                    dim1,
                    dim2,
                    bracket: Some(m.bracket().clone()),
                    bracket_seed: None,
                    gauge_c: Some(m.gauge_c()),
                }
            }
            Model::Sphere(s) => ModelDescriptor::Sphere {
                radius: s.radius(),
                base: s.base(),
            },
        }
    }

    pub fn calibration(&self) -> Option<&GaugeCalibration> {
        match self {
            Model::Step2(s) => Some(s.inner().calibration()),
            _ => None,
        }
    }
}

/// Builds the dilatation structure described by `desc`: group models through
/// `δ^x_ε u = x δ_ε(x⁻¹u)` and `d(x, y) = ‖x⁻¹y‖`, the sphere through its
/// exponential map.
pub fn make_dilatation_structure(desc: &ModelDescriptor) -> Result<Model> {
    Ok(match desc {
        ModelDescriptor::Euclidean { dim, p } => {
            Model::Euclidean(EuclideanModel::with_exponent(*dim, *p)?.structure())
        }
        ModelDescriptor::Heisenberg {} => Model::Heisenberg(HeisenbergModel.structure()),
        ModelDescriptor::Step2 {
            dim1,
            dim2,
            bracket,
            bracket_seed,
            gauge_c,
        } => {
            let bracket = match (bracket, bracket_seed) {
                (Some(b), _) => b.clone(),
                (None, seed) => random_bracket(*dim1, *dim2, seed.unwrap_or(0)),
            };
            Model::Step2(Step2CarnotModel::new(*dim1, *dim2, bracket, *gauge_c)?.structure())
        }
        ModelDescriptor::Sphere { radius, base } => {
            Model::Sphere(SphereModel::new(*radius, *base)?)
        }
    })
}

pub fn group_mul(g: &dyn ConicalGroup, a: &Point, b: &Point) -> Result<Point> {
    g.mul(a, b)
}

pub fn group_inv(g: &dyn ConicalGroup, a: &Point) -> Result<Point> {
    g.inv(a)
}

pub fn intrinsic_dilation(g: &dyn ConicalGroup, eps: f64, a: &Point) -> Result<Point> {
    g.dilation(Scalar::new(eps)?, a)
}

pub fn homogeneous_norm(g: &dyn ConicalGroup, a: &Point) -> Result<f64> {
    g.norm(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::Linearity;

    #[test]
    fn flag_parsing() {
        assert_eq!(
            ModelDescriptor::parse_flag("euclidean:dim=3,p=inf").unwrap(),
            ModelDescriptor::Euclidean {
                dim: 3,
                p: NormExponent::INF
            }
        );
        assert_eq!(
            ModelDescriptor::parse_flag("heisenberg").unwrap(),
            ModelDescriptor::Heisenberg {}
        );
        assert!(ModelDescriptor::parse_flag("torus").is_err());
        assert!(ModelDescriptor::parse_flag("euclidean:depth=2").is_err());
        assert!(ModelDescriptor::parse_flag("euclidean:dim").is_err());
    }

    #[test]
    fn descriptor_json_shape() {
        let d: ModelDescriptor =
            serde_json::from_str(r#"{"kind":"euclidean","dim":2,"p":"inf"}"#).unwrap();
        assert_eq!(
            d,
            ModelDescriptor::Euclidean {
                dim: 2,
                p: NormExponent::INF
            }
        );
        let d: ModelDescriptor = serde_json::from_str(r#"{"kind":"sphere"}"#).unwrap();
        assert!(matches!(d, ModelDescriptor::Sphere { radius, .. } if radius == 1.0));
        assert!(serde_json::from_str::<ModelDescriptor>(r#"{"kind":"heisenberg","x":1}"#).is_err());
    }

    #[test]
    fn linearity_flags() {
        let lin = |d: ModelDescriptor| {
            make_dilatation_structure(&d)
                .unwrap()
                .structure()
                .linearity()
        };
        assert_eq!(lin(ModelDescriptor::Heisenberg {}), Linearity::Exact);
        assert_eq!(
            lin(ModelDescriptor::Sphere {
                radius: 1.0,
                base: north_pole()
            }),
            Linearity::None
        );
    }

    #[test]
    fn step2_descriptor_rebuilds_same_model() {
        let m = make_dilatation_structure(&ModelDescriptor::Step2 {
            dim1: 3,
            dim2: 2,
            bracket: None,
            bracket_seed: Some(11),
            gauge_c: None,
        })
        .unwrap();
        let again = make_dilatation_structure(&m.descriptor()).unwrap();
        let g = Point::new(vec![0.1, 0.2, -0.3, 0.4, 0.5]).unwrap();
        assert_eq!(
            m.group().unwrap().norm(&g).unwrap(),
            again.group().unwrap().norm(&g).unwrap()
        );
    }

    #[test]
    fn intrinsic_dilation_rejects_non_positive() {
        let h = HeisenbergModel;
        assert_eq!(
            intrinsic_dilation(&h, 0.0, &h.identity()),
            Err(Error::NonPositiveScalar(0.0))
        );
    }
}
