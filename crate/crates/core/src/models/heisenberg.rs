use crate::error::Result;
use crate::point::{Point, Scalar};
use crate::structure::{check_points, ConicalGroup, GroupStructure, ModelDomain};

/// The Heisenberg group `H¹` in coordinates `(z, t)`, `z ∈ ℝ²`, with law
/// `(z, t)(z', t') = (z + z', t + t' + 2 Im(z̄ z'))`, dilations `(εz, ε²t)`
/// and the Cygan gauge `(|z|⁴ + t²)^{1/4}`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HeisenbergModel;

impl HeisenbergModel {
    pub fn structure(self) -> GroupStructure<Self> {
        GroupStructure::new(
            self,
            ModelDomain::new(4.0, 2.0, None).expect("valid default domain"),
            "heisenberg",
        )
    }
}

/// `Im(z̄ w)` for `z = (a, b)`, `w = (c, d)`.
fn im_conj_prod(a: f64, b: f64, c: f64, d: f64) -> f64 {
    a * d - b * c
}

impl ConicalGroup for HeisenbergModel {
    fn dimension(&self) -> usize {
        3
    }

    fn identity(&self) -> Point {
        Point::zeros(3)
    }

    fn mul(&self, g: &Point, h: &Point) -> Result<Point> {
        check_points(3, &[g, h])?;
        let [a, b, t] = [g.coords()[0], g.coords()[1], g.coords()[2]];
        let [c, d, s] = [h.coords()[0], h.coords()[1], h.coords()[2]];
        Ok(Point::raw(vec![
            a + c,
            b + d,
            t + s + 2.0 * im_conj_prod(a, b, c, d),
        ]))
    }

    fn inv(&self, g: &Point) -> Result<Point> {
        check_points(3, &[g])?;
        Ok(Point::raw(g.coords().iter().map(|c| -c).collect()))
    }

    fn dilation(&self, eps: Scalar, g: &Point) -> Result<Point> {
        check_points(3, &[g])?;
        let e = eps.value();
        let c = g.coords();
        Ok(Point::raw(vec![e * c[0], e * c[1], e * e * c[2]]))
    }

    fn norm(&self, g: &Point) -> Result<f64> {
        check_points(3, &[g])?;
        let c = g.coords();
        let z2 = c[0] * c[0] + c[1] * c[1];
        // (|z|^4 + t^2)^{1/4} = sqrt(hypot(|z|^2, t))
        Ok(z2.hypot(c[2]).sqrt())
    }
}
