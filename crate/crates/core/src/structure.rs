//! The dilatation-structure interface and the operators derived from it:
//! the cone quotient, the second-order difference `Δ^x_ε`, the approximate
//! sum `Σ^x_ε` and the approximate inverse.
//!
//! Coefficients live in `Γ = (0, +inf)` with `ν` the identity. A structure is
//! anything that can dilate and measure; group models build both from a
//! [`ConicalGroup`] through [`GroupStructure`].

use std::fmt;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{Point, Scalar};

/// Sampling radii and the "sufficiently close" constant of a model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDomain {
    /// Inner radius: `B(x, A)` is where dilatations with `ε ≤ 1` act.
    pub a: f64,
    /// Outer radius for inverse dilatations, `1 < B ≤ A`.
    pub b: f64,
    /// Closeness radius for the second-order operators and the solvers.
    /// `None` means unbounded (globally defined dilatations).
    pub closeness: Option<f64>,
}

impl ModelDomain {
    pub fn new(a: f64, b: f64, closeness: Option<f64>) -> Result<Self> {
        if !(b > 1.0 && b <= a && a.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "domain constants must satisfy 1 < B <= A, got A={a}, B={b}"
            )));
        }
        if let Some(c) = closeness {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "closeness must be positive, got {c}"
                )));
            }
        }
        Ok(ModelDomain { a, b, closeness })
    }

    /// Domain with the default closeness `0.5 A`.
    pub fn with_default_closeness(a: f64, b: f64) -> Result<Self> {
        ModelDomain::new(a, b, Some(0.5 * a))
    }

    pub fn closeness_radius(&self) -> f64 {
        self.closeness.unwrap_or(f64::INFINITY)
    }
}

/// Declared linearity status of a structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linearity {
    Exact,
    None,
}

/// A normed conical group: group law, contracting automorphisms `δ_ε` and a
/// homogeneous norm.
pub trait ConicalGroup: Send + Sync + fmt::Debug {
    fn dimension(&self) -> usize;
    fn identity(&self) -> Point;
    fn mul(&self, g: &Point, h: &Point) -> Result<Point>;
    fn inv(&self, g: &Point) -> Result<Point>;
    fn dilation(&self, eps: Scalar, g: &Point) -> Result<Point>;
    fn norm(&self, g: &Point) -> Result<f64>;
}

/// A metric space with based dilatations `δ^x_ε`.
pub trait DilatationStructure: Send + Sync + fmt::Debug {
    /// Short human-readable model name.
    fn label(&self) -> String;
    fn dimension(&self) -> usize;
    fn domain(&self) -> &ModelDomain;
    fn linearity(&self) -> Linearity;
    /// Distinguished point used as the centre of sampling boxes.
    fn origin(&self) -> Point;
    fn dist(&self, a: &Point, b: &Point) -> Result<f64>;
    /// `δ^x_ε y`.
    fn dilate(&self, x: &Point, eps: Scalar, y: &Point) -> Result<Point>;
    /// A random point within distance `radius` of `center`.
    fn sample_near(&self, rng: &mut dyn RngCore, center: &Point, radius: f64) -> Point;
    /// The underlying conical group, for group models.
    fn group(&self) -> Option<&dyn ConicalGroup> {
        None
    }

    /// `d(δ^x_ε u, δ^x_ε v)`. Structures may override this with a better
    /// conditioned evaluation of the same quantity.
    fn dilated_dist(&self, x: &Point, eps: Scalar, u: &Point, v: &Point) -> Result<f64> {
        self.dist(&self.dilate(x, eps, u)?, &self.dilate(x, eps, v)?)
    }
}

pub(crate) fn check_points(dim: usize, points: &[&Point]) -> Result<()> {
    for p in points {
        p.check_dim(dim)?;
        p.check_finite()?;
    }
    Ok(())
}

/// Dilatation structure of a normed conical group:
/// `δ^x_ε u = x δ_ε(x^{-1} u)` and `d(x, y) = ‖x^{-1} y‖`.
#[derive(Debug, Clone)]
pub struct GroupStructure<G> {
    group: G,
    domain: ModelDomain,
    label: String,
}

impl<G: ConicalGroup> GroupStructure<G> {
    pub fn new(group: G, domain: ModelDomain, label: impl Into<String>) -> Self {
        GroupStructure {
            group,
            domain,
            label: label.into(),
        }
    }

    pub fn inner(&self) -> &G {
        &self.group
    }
}

impl<G: ConicalGroup> DilatationStructure for GroupStructure<G> {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn dimension(&self) -> usize {
        self.group.dimension()
    }

    fn domain(&self) -> &ModelDomain {
        &self.domain
    }

    fn linearity(&self) -> Linearity {
        Linearity::Exact
    }

    fn origin(&self) -> Point {
        self.group.identity()
    }

    fn dist(&self, a: &Point, b: &Point) -> Result<f64> {
        check_points(self.dimension(), &[a, b])?;
        let rel = self.group.mul(&self.group.inv(a)?, b)?;
        self.group.norm(&rel)
    }

    fn dilate(&self, x: &Point, eps: Scalar, y: &Point) -> Result<Point> {
        check_points(self.dimension(), &[x, y])?;
        if eps == Scalar::ONE {
            return Ok(y.clone());
        }
        let rel = self.group.mul(&self.group.inv(x)?, y)?;
        let out = self.group.mul(x, &self.group.dilation(eps, &rel)?)?;
        out.check_finite()?;
        Ok(out)
    }

    fn sample_near(&self, rng: &mut dyn RngCore, center: &Point, radius: f64) -> Point {
        let n = self.dimension();
        loop {
            let raw = Point::raw((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let norm = match self.group.norm(&raw) {
                Ok(v) if v > 1e-3 => v,
                _ => continue,
            };
            let target = radius * rng.gen::<f64>();
            let Ok(scale) = Scalar::new(target.max(1e-6 * radius) / norm) else {
                continue;
            };
            let offset = self
                .group
                .dilation(scale, &raw)
                .expect("dilation of a sampled element");
            return self
                .group
                .mul(center, &offset)
                .expect("product of sampled elements");
        }
    }

    fn group(&self) -> Option<&dyn ConicalGroup> {
        Some(&self.group)
    }

    /// Evaluated as `‖δ_ε(x⁻¹u)⁻¹ δ_ε(x⁻¹v)‖` (left invariance), which avoids
    /// subtracting nearly equal points far from the identity when ε is small.
    fn dilated_dist(&self, x: &Point, eps: Scalar, u: &Point, v: &Point) -> Result<f64> {
        check_points(self.dimension(), &[x, u, v])?;
        let g = &self.group;
        let x_inv = g.inv(x)?;
        let a = g.dilation(eps, &g.mul(&x_inv, u)?)?;
        let b = g.dilation(eps, &g.mul(&x_inv, v)?)?;
        g.norm(&g.mul(&g.inv(&a)?, &b)?)
    }
}

/// `δ^x_ε y`, validated.
pub fn dilate(s: &dyn DilatationStructure, x: &Point, eps: Scalar, y: &Point) -> Result<Point> {
    s.dilate(x, eps, y)
}

fn require_contracting(eps: Scalar) -> Result<()> {
    if eps.value() > 1.0 {
        return Err(Error::DomainViolation(format!(
            "coefficient {eps} must lie in (0, 1]"
        )));
    }
    Ok(())
}

fn require_in_ball(s: &dyn DilatationStructure, x: &Point, p: &Point, radius: f64) -> Result<()> {
    let d = s.dist(x, p)?;
    if d > radius * (1.0 + 1e-12) {
        return Err(Error::DomainViolation(format!(
            "{p} lies at distance {d} from {x}, outside radius {radius}"
        )));
    }
    Ok(())
}

fn require_close(s: &dyn DilatationStructure, points: &[&Point]) -> Result<()> {
    let radius = s.domain().closeness_radius();
    if radius.is_infinite() {
        return Ok(());
    }
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            require_in_ball(s, p, q, radius)?;
        }
    }
    Ok(())
}

/// `(1/ε) d(δ^x_ε u, δ^x_ε v)` for `u, v ∈ B(x, A)`.
pub fn cone_quotient(
    s: &dyn DilatationStructure,
    x: &Point,
    eps: Scalar,
    u: &Point,
    v: &Point,
) -> Result<f64> {
    require_contracting(eps)?;
    let a = s.domain().a;
    require_in_ball(s, x, u, a)?;
    require_in_ball(s, x, v, a)?;
    Ok(s.dilated_dist(x, eps, u, v)? / eps.value())
}

/// `Δ^x_ε(u, v) = δ^{δ^x_ε u}_{1/ε} δ^x_ε v`.
pub fn delta2(
    s: &dyn DilatationStructure,
    x: &Point,
    eps: Scalar,
    u: &Point,
    v: &Point,
) -> Result<Point> {
    require_contracting(eps)?;
    require_close(s, &[x, u, v])?;
    let base = s.dilate(x, eps, u)?;
    let moved = s.dilate(x, eps, v)?;
    s.dilate(&base, eps.inv(), &moved)
}

/// `Σ^x_ε(u, v) = δ^x_{1/ε} δ^{δ^x_ε u}_ε v`.
pub fn sigma_eps(
    s: &dyn DilatationStructure,
    x: &Point,
    eps: Scalar,
    u: &Point,
    v: &Point,
) -> Result<Point> {
    require_contracting(eps)?;
    require_close(s, &[x, u, v])?;
    let base = s.dilate(x, eps, u)?;
    let moved = s.dilate(&base, eps, v)?;
    s.dilate(x, eps.inv(), &moved)
}

/// Approximate inverse `inv^x_ε(u) = Δ^x_ε(u, x)`.
pub fn inv_eps(s: &dyn DilatationStructure, x: &Point, eps: Scalar, u: &Point) -> Result<Point> {
    delta2(s, x, eps, u, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{EuclideanModel, HeisenbergModel};
    use crate::point::coord_residual;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn sc(v: f64) -> Scalar {
        Scalar::new(v).unwrap()
    }

    #[test]
    fn euclidean_dilate_worked_case() {
        let s = EuclideanModel::new(2, 2.0).unwrap().structure();
        let out = dilate(&s, &p(&[1.0, 1.0]), sc(0.5), &p(&[3.0, 1.0])).unwrap();
        assert_eq!(out, p(&[2.0, 1.0]));
    }

    #[test]
    fn dilate_a1_identities() {
        let s = HeisenbergModel.structure();
        let x = p(&[0.3, -1.2, 0.7]);
        let y = p(&[1.0, 2.0, -3.0]);
        assert_eq!(dilate(&s, &x, Scalar::ONE, &y).unwrap(), y);
        assert_eq!(dilate(&s, &x, sc(0.37), &x).unwrap(), x);
    }

    #[test]
    fn dilate_rejects_wrong_dimension() {
        let s = EuclideanModel::new(2, 2.0).unwrap().structure();
        let err = dilate(&s, &p(&[0.0, 0.0]), sc(0.5), &p(&[1.0])).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                got: 1
            }
        );
    }

    #[test]
    fn cone_quotient_euclidean() {
        let s = EuclideanModel::new(2, 2.0).unwrap().structure();
        let q = cone_quotient(
            &s,
            &p(&[0.0, 0.0]),
            sc(0.25),
            &p(&[1.0, 0.0]),
            &p(&[0.0, 1.0]),
        )
        .unwrap();
        assert!((q - 2f64.sqrt()).abs() < 1e-15);
        let u = p(&[0.4, 0.1]);
        assert_eq!(
            cone_quotient(&s, &p(&[0.0, 0.0]), sc(0.3), &u, &u).unwrap(),
            0.0
        );
    }

    #[test]
    fn cone_quotient_heisenberg_is_constant() {
        let s = HeisenbergModel.structure();
        let x = p(&[0.2, -0.1, 0.3]);
        let u = p(&[0.5, 0.4, -0.2]);
        let v = p(&[-0.3, 0.6, 0.9]);
        let q: Vec<f64> = [1.0, 0.5, 0.1]
            .iter()
            .map(|&e| cone_quotient(&s, &x, sc(e), &u, &v).unwrap())
            .collect();
        let d = s.dist(&u, &v).unwrap();
        for v in q {
            assert!((v - d).abs() <= 1e-12 * d);
        }
    }

    #[test]
    fn group_dilated_dist_matches_direct_evaluation() {
        let s = HeisenbergModel.structure();
        let x = p(&[0.7, -0.4, 0.3]);
        let u = p(&[0.5, 0.4, -0.2]);
        let v = p(&[-0.3, 0.6, 0.9]);
        for e in [1.0, 0.5, 0.1] {
            let direct = s
                .dist(
                    &s.dilate(&x, sc(e), &u).unwrap(),
                    &s.dilate(&x, sc(e), &v).unwrap(),
                )
                .unwrap();
            let framed = s.dilated_dist(&x, sc(e), &u, &v).unwrap();
            assert!((direct - framed).abs() <= 1e-13, "{direct} vs {framed}");
        }
    }

    #[test]
    fn cone_quotient_outside_ball() {
        let s = EuclideanModel::new(1, 2.0).unwrap().structure();
        let err = cone_quotient(&s, &p(&[0.0]), sc(0.5), &p(&[100.0]), &p(&[0.0])).unwrap_err();
        assert!(matches!(err, Error::DomainViolation(_)));
    }

    #[test]
    fn delta2_euclidean_matches_hand_composition() {
        // δ^x_ε u = 0.5, δ^x_ε v = 1, then δ^{0.5}_2(1) = 0.5 + 2 * 0.5 = 1.5.
        let s = EuclideanModel::new(1, 2.0).unwrap().structure();
        let d = delta2(&s, &p(&[0.0]), sc(0.5), &p(&[1.0]), &p(&[2.0])).unwrap();
        assert!((d.coords()[0] - 1.5).abs() < 1e-15);
        // u = x gives v back.
        let d = delta2(&s, &p(&[0.3]), sc(0.2), &p(&[0.3]), &p(&[1.7])).unwrap();
        assert!((d.coords()[0] - 1.7).abs() < 1e-14);
    }

    #[test]
    fn sigma_euclidean_worked_case() {
        let s = EuclideanModel::new(1, 2.0).unwrap().structure();
        let out = sigma_eps(&s, &p(&[0.0]), sc(0.1), &p(&[2.0]), &p(&[3.0])).unwrap();
        assert!((out.coords()[0] - 4.8).abs() < 1e-13);
        let out = sigma_eps(&s, &p(&[0.5]), sc(0.1), &p(&[0.5]), &p(&[3.0])).unwrap();
        assert!((out.coords()[0] - 3.0).abs() < 1e-13);
    }

    #[test]
    fn inv_eps_fixes_base() {
        let s = HeisenbergModel.structure();
        let x = p(&[0.2, 0.1, -0.4]);
        for e in [0.9, 0.5, 0.01] {
            let out = inv_eps(&s, &x, sc(e), &x).unwrap();
            assert!(coord_residual(&out, &x) < 1e-15);
        }
    }

    #[test]
    fn derived_operators_recompose() {
        let s = HeisenbergModel.structure();
        let x = p(&[0.2, 0.1, -0.4]);
        let u = p(&[0.7, -0.3, 0.2]);
        let v = p(&[-0.1, 0.5, 1.1]);
        let e = sc(0.3);
        let manual = s
            .dilate(
                &s.dilate(&x, e, &u).unwrap(),
                e.inv(),
                &s.dilate(&x, e, &v).unwrap(),
            )
            .unwrap();
        assert_eq!(delta2(&s, &x, e, &u, &v).unwrap(), manual);
        let manual = s
            .dilate(
                &x,
                e.inv(),
                &s.dilate(&s.dilate(&x, e, &u).unwrap(), e, &v).unwrap(),
            )
            .unwrap();
        assert_eq!(sigma_eps(&s, &x, e, &u, &v).unwrap(), manual);
    }

    #[test]
    fn domain_constants_validated() {
        assert!(ModelDomain::new(2.0, 1.5, None).is_ok());
        assert!(ModelDomain::new(2.0, 1.0, None).is_err());
        assert!(ModelDomain::new(1.5, 2.0, None).is_err());
        assert!(ModelDomain::new(2.0, 1.5, Some(0.0)).is_err());
        assert_eq!(
            ModelDomain::with_default_closeness(3.0, 2.0)
                .unwrap()
                .closeness,
            Some(1.5)
        );
    }
}
