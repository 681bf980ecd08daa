use std::f64::consts::PI;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::point::{Point, Scalar};
use crate::structure::{check_points, DilatationStructure, Linearity, ModelDomain};

type V3 = [f64; 3];

fn dot(a: &V3, b: &V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &V3, b: &V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: &V3) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: &V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn axpy(s: f64, a: &V3, b: &V3) -> V3 {
    [s * a[0] + b[0], s * a[1] + b[1], s * a[2] + b[2]]
}

fn unit(a: &V3) -> V3 {
    scale(a, 1.0 / norm(a))
}

/// Unit direction of `y` seen from `x` along the great circle, with the angle.
/// Both inputs are unit vectors.
fn direction(x: &V3, y: &V3) -> (V3, f64) {
    let theta = norm(&cross(x, y)).atan2(dot(x, y));
    let w = axpy(-dot(x, y), x, y);
    let wn = norm(&w);
    if wn == 0.0 {
        ([0.0; 3], theta)
    } else {
        (scale(&w, 1.0 / wn), theta)
    }
}

/// The round 2-sphere of a given radius with geodesic dilatations
/// `δ^x_ε y = exp_x(ε log_x y)`, restricted to the open hemisphere around a
/// base point so that `log` is single valued.
///
/// The structure satisfies the dilatation axioms but is not linear.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereModel {
    radius: f64,
    base: V3,
    domain: ModelDomain,
}

impl SphereModel {
    pub fn new(radius: f64, base: [f64; 3]) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "radius must be positive, got {radius}"
            )));
        }
        let n = norm(&base);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidModel(
                "base direction must be a non-zero vector".into(),
            ));
        }
        let domain = ModelDomain::with_default_closeness(1.2 * radius, 1.1 * radius)?;
        Ok(SphereModel {
            radius,
            base: scale(&base, 1.0 / n),
            domain,
        })
    }

    pub fn unit() -> Self {
        SphereModel::new(1.0, [0.0, 0.0, 1.0]).expect("valid unit sphere")
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn base(&self) -> [f64; 3] {
        self.base
    }

    fn to_unit(&self, p: &Point) -> Result<V3> {
        check_points(3, &[p])?;
        let c = p.coords();
        let v = [c[0], c[1], c[2]];
        let n = norm(&v);
        if (n - self.radius).abs() > 1e-9 * self.radius {
            return Err(Error::DomainViolation(format!(
                "{p} is not on the sphere of radius {}",
                self.radius
            )));
        }
        Ok(scale(&v, 1.0 / n))
    }

    fn to_chart(&self, p: &Point) -> Result<V3> {
        let u = self.to_unit(p)?;
        if dot(&u, &self.base) <= 0.0 {
            return Err(Error::ChartViolation(format!(
                "{p} lies outside the open hemisphere around the base point"
            )));
        }
        Ok(u)
    }

    fn on_sphere(&self, u: &V3) -> Point {
        let u = unit(u);
        Point::raw(scale(&u, self.radius).to_vec())
    }

    /// Exponential map at `x`; the tangent vector's length is the geodesic
    /// distance travelled.
    pub fn exp(&self, x: &Point, tangent: [f64; 3]) -> Result<Point> {
        let xu = self.to_unit(x)?;
        let t = axpy(-dot(&tangent, &xu), &xu, &tangent);
        let len = norm(&t);
        if len == 0.0 {
            return Ok(x.clone());
        }
        let angle = len / self.radius;
        Ok(self.on_sphere(&axpy(angle.cos(), &xu, &scale(&t, angle.sin() / len))))
    }

    /// Tangent vector at `x` (ambient coordinates, length = geodesic distance).
    pub fn log(&self, x: &Point, y: &Point) -> Result<[f64; 3]> {
        let xu = self.to_chart(x)?;
        let yu = self.to_chart(y)?;
        let (dir, theta) = direction(&xu, &yu);
        Ok(scale(&dir, theta * self.radius))
    }

    pub fn structure(self) -> Self {
        self
    }
}

impl DilatationStructure for SphereModel {
    fn label(&self) -> String {
        format!("sphere(radius={})", self.radius)
    }

    fn dimension(&self) -> usize {
        3
    }

    fn domain(&self) -> &ModelDomain {
        &self.domain
    }

    fn linearity(&self) -> Linearity {
        Linearity::None
    }

    fn origin(&self) -> Point {
        self.on_sphere(&self.base)
    }

    fn dist(&self, a: &Point, b: &Point) -> Result<f64> {
        let au = self.to_unit(a)?;
        let bu = self.to_unit(b)?;
        Ok(self.radius * norm(&cross(&au, &bu)).atan2(dot(&au, &bu)))
    }

    fn dilate(&self, x: &Point, eps: Scalar, y: &Point) -> Result<Point> {
        let xu = self.to_chart(x)?;
        let yu = self.to_chart(y)?;
        if eps == Scalar::ONE {
            return Ok(y.clone());
        }
        let (dir, theta) = direction(&xu, &yu);
        if theta == 0.0 {
            return Ok(x.clone());
        }
        let angle = eps.value() * theta;
        if angle >= PI {
            return Err(Error::ChartViolation(format!(
                "dilating by {eps} wraps past the antipode of {x}"
            )));
        }
        Ok(self.on_sphere(&axpy(angle.cos(), &xu, &scale(&dir, angle.sin()))))
    }

    fn sample_near(&self, rng: &mut dyn RngCore, center: &Point, radius: f64) -> Point {
        let cu = self.to_unit(center).expect("sampling centre on the sphere");
        loop {
            let raw = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let t = axpy(-dot(&raw, &cu), &cu, &raw);
            let n = norm(&t);
            if n < 1e-3 {
                continue;
            }
            let len = radius.min(0.9 * PI * self.radius) * rng.gen::<f64>();
            let p = self
                .exp(center, scale(&t, len / n))
                .expect("exp of a sampled vector");
            if self.to_chart(&p).is_ok() {
                return p;
            }
        }
    }
}
