//! Centres of compositions of two dilatations.
//!
//! For a linear structure and `εμ ≠ 1` there is a unique `w` with
//! `δ^x_ε δ^y_μ = δ^w_{εμ}`. [`paper_iteration`] finds it with the
//! two-sequence scheme
//!
//! ```text
//! y_{n+1} = δ^{x_n}_ε y_n,    x_{n+1} = δ^{y_{n+1}}_μ x_n,
//! ```
//!
//! which preserves `δ^{x_n}_ε δ^{y_n}_μ` while shrinking `d(x_n, y_n)` by
//! exactly `εμ` per step. [`banach_iteration`] and, on vector spaces,
//! [`euclidean_center_closed_form`] are independent oracles.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::axioms::{CheckReport, Witness, Worst};
use crate::error::{Error, Result};
use crate::point::{coord_residual, Point, Scalar};
use crate::structure::{ConicalGroup, DilatationStructure, Linearity};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IterationOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IterationOptions {
    fn default() -> Self {
        IterationOptions {
            tol: 1e-12,
            max_iter: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: usize,
    pub x: Point,
    pub y: Point,
    pub gap: f64,
}

/// The sequences `(x_n, y_n)` with their gaps `d(x_n, y_n)`.
///
/// When `εμ > 1` the iteration runs on the inverse composition
/// `δ^y_{1/μ} δ^x_{1/ε}`, which has the same centre; `inverted` is then set
/// and `eps`, `mu`, `rows` refer to that composition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub rows: Vec<TraceRow>,
    pub w: Point,
    pub iterations: usize,
    pub converged: bool,
    pub eps: Scalar,
    pub mu: Scalar,
    pub inverted: bool,
}

impl IterationTrace {
    /// Successive gap ratios `gap_{n+1} / gap_n`, skipping zero gaps.
    pub fn gap_ratios(&self) -> Vec<f64> {
        self.rows
            .windows(2)
            .filter(|w| w[0].gap > 0.0)
            .map(|w| w[1].gap / w[0].gap)
            .collect()
    }

    /// CSV with header `n,x0,..,y0,..,gap`.
    pub fn to_csv(&self) -> String {
        let dim = self.w.dim();
        let mut out = String::from("n");
        for prefix in ["x", "y"] {
            for i in 0..dim {
                write!(out, ",{prefix}{i}").expect("write to string");
            }
        }
        out.push_str(",gap\n");
        for row in &self.rows {
            write!(out, "{}", row.n).expect("write to string");
            for c in row.x.coords().iter().chain(row.y.coords()) {
                write!(out, ",{c}").expect("write to string");
            }
            writeln!(out, ",{}", row.gap).expect("write to string");
        }
        out
    }
}

fn require_linear_group(s: &dyn DilatationStructure) -> Result<&dyn ConicalGroup> {
    match (s.linearity(), s.group()) {
        (Linearity::Exact, Some(g)) => Ok(g),
        _ => Err(Error::NotLinearModel(s.label())),
    }
}

/// Strictly within the closeness radius.
fn require_strictly_close(s: &dyn DilatationStructure, x: &Point, y: &Point) -> Result<()> {
    let r = s.domain().closeness_radius();
    let d = s.dist(x, y)?;
    if d >= r {
        return Err(Error::DomainViolation(format!(
            "{x} and {y} are {d} apart, not within the closeness radius {r}"
        )));
    }
    Ok(())
}

/// The two-sequence iteration for the centre of `δ^x_ε δ^y_μ`.
///
/// Each step is evaluated in the frame left-translated by `x_n⁻¹`: left
/// translations commute with group dilatations, so the step is unchanged,
/// but the gap is computed between points near the identity instead of as a
/// difference of nearly equal points far from it.
pub fn paper_iteration(
    s: &dyn DilatationStructure,
    x: &Point,
    y: &Point,
    eps: Scalar,
    mu: Scalar,
    opts: &IterationOptions,
) -> Result<IterationTrace> {
    let g = require_linear_group(s)?;
    let prod = eps.compose(mu);
    if prod.is_unit() {
        return Err(Error::UnitCoefficient);
    }
    require_strictly_close(s, x, y)?;
    let (x, y, eps, mu, inverted) = if prod.value() > 1.0 {
        (y, x, mu.inv(), eps.inv(), true)
    } else {
        (x, y, eps, mu, false)
    };

    let e = g.identity();
    let mut xn = x.clone();
    // Displacement x_n⁻¹ y_n.
    let mut rel = g.mul(&g.inv(x)?, y)?;
    let gap0 = g.norm(&rel)?;
    let stop = opts.tol * (1.0 + gap0);
    let mut rows = vec![TraceRow {
        n: 0,
        x: xn.clone(),
        y: y.clone(),
        gap: gap0,
    }];
    let mut gap = gap0;
    let mut n = 0;
    while gap > stop {
        if n == opts.max_iter {
            return Err(Error::NoConvergence(format!(
                "gap {gap:e} after {n} iterations, target {stop:e}"
            )));
        }
        let y_next = s.dilate(&e, eps, &rel)?;
        let x_next = s.dilate(&y_next, mu, &e)?;
        rel = g.mul(&g.inv(&x_next)?, &y_next)?;
        xn = g.mul(&xn, &x_next)?;
        gap = g.norm(&rel)?;
        n += 1;
        rows.push(TraceRow {
            n,
            x: xn.clone(),
            y: g.mul(&xn, &rel)?,
            gap,
        });
    }
    Ok(IterationTrace {
        rows,
        w: xn,
        iterations: n,
        converged: true,
        eps,
        mu,
        inverted,
    })
}

/// Picard iteration `z ← f(z)` until the coordinate residual of a step is at
/// most `tol`. Returns the point and the number of steps.
pub fn contraction_fixed_point(
    mut f: impl FnMut(&Point) -> Result<Point>,
    z0: &Point,
    tol: f64,
    max_iter: usize,
) -> Result<(Point, usize)> {
    let mut z = z0.clone();
    for k in 0..=max_iter {
        let next = f(&z)?;
        let r = coord_residual(&next, &z);
        if r <= tol {
            return Ok((next, k + 1));
        }
        if !r.is_finite() {
            break;
        }
        z = next;
    }
    Err(Error::NoConvergence(format!(
        "fixed-point iteration did not settle within {max_iter} steps"
    )))
}

/// Fixed point of `δ^x_ε δ^y_μ` by direct iteration from `z0`, or of its
/// inverse `δ^y_{1/μ} δ^x_{1/ε}` when `εμ > 1`. Works on any structure;
/// on non-linear ones the fixed point need not be a Menelaos centre.
pub fn banach_iteration(
    s: &dyn DilatationStructure,
    x: &Point,
    y: &Point,
    eps: Scalar,
    mu: Scalar,
    z0: &Point,
    opts: &IterationOptions,
) -> Result<Point> {
    let prod = eps.compose(mu);
    if prod.is_unit() {
        return Err(Error::UnitCoefficient);
    }
    let (point, _) = if prod.value() < 1.0 {
        contraction_fixed_point(
            |z| s.dilate(x, eps, &s.dilate(y, mu, z)?),
            z0,
            opts.tol,
            opts.max_iter,
        )?
    } else {
        contraction_fixed_point(
            |z| s.dilate(y, mu.inv(), &s.dilate(x, eps.inv(), z)?),
            z0,
            opts.tol,
            opts.max_iter,
        )?
    };
    Ok(point)
}

/// `w = ((1−ε)x + ε(1−μ)y) / (1−εμ)` in a vector space.
pub fn euclidean_center_closed_form(
    x: &Point,
    y: &Point,
    eps: Scalar,
    mu: Scalar,
) -> Result<Point> {
    y.check_dim(x.dim())?;
    let (e, m) = (eps.value(), mu.value());
    if eps.compose(mu).is_unit() {
        return Err(Error::UnitCoefficient);
    }
    let denom = 1.0 - e * m;
    Point::new(
        x.coords()
            .iter()
            .zip(y.coords())
            .map(|(a, b)| ((1.0 - e) * a + e * (1.0 - m) * b) / denom)
            .collect(),
    )
}

/// `max_z` residual of `δ^x_ε δ^y_μ z = δ^w_{εμ} z`.
#[allow(clippy::too_many_arguments)]
pub fn verify_menelaos(
    s: &dyn DilatationStructure,
    x: &Point,
    y: &Point,
    eps: Scalar,
    mu: Scalar,
    w: &Point,
    zs: &[Point],
    tol: f64,
) -> Result<CheckReport> {
    let mut worst = Worst::new("menelaos");
    let prod = eps.compose(mu);
    for z in zs {
        let lhs = s.dilate(x, eps, &s.dilate(y, mu, z)?)?;
        let rhs = s.dilate(w, prod, z)?;
        worst.record(coord_residual(&lhs, &rhs), || {
            Witness::default()
                .point("x", x)
                .point("y", y)
                .point("w", w)
                .point("z", z)
                .coefficient("eps", eps)
                .coefficient("mu", mu)
        });
    }
    Ok(worst.finish(tol))
}

/// `max_{n, z}` residual of `δ^{x_n}_ε δ^{y_n}_μ z = δ^{x_0}_ε δ^{y_0}_μ z`.
pub fn check_invariance(
    s: &dyn DilatationStructure,
    trace: &IterationTrace,
    zs: &[Point],
    tol: f64,
) -> Result<CheckReport> {
    let mut worst = Worst::new("menelaos-invariance");
    let first = &trace.rows[0];
    let (eps, mu) = (trace.eps, trace.mu);
    for z in zs {
        let reference = s.dilate(&first.x, eps, &s.dilate(&first.y, mu, z)?)?;
        for row in &trace.rows {
            let here = s.dilate(&row.x, eps, &s.dilate(&row.y, mu, z)?)?;
            worst.record(coord_residual(&here, &reference), || {
                Witness::default()
                    .point("x_n", &row.x)
                    .point("y_n", &row.y)
                    .point("z", z)
                    .value("n", row.n as f64)
            });
        }
    }
    Ok(worst.finish(tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{EuclideanModel, HeisenbergModel, SphereModel};
    use crate::sampling::Sampler;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn half() -> Scalar {
        Scalar::new(0.5).unwrap()
    }

    #[test]
    fn euclidean_hand_iteration() {
        let s = EuclideanModel::new(1, 2.0).unwrap().structure();
        let t = paper_iteration(
            &s,
            &p(&[0.0]),
            &p(&[1.0]),
            half(),
            half(),
            &Default::default(),
        )
        .unwrap();
        let xs: Vec<f64> = t.rows.iter().take(4).map(|r| r.x.coords()[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.3125, 0.328125]);
        let gaps: Vec<f64> = t.rows.iter().take(3).map(|r| r.gap).collect();
        assert_eq!(gaps, vec![1.0, 0.25, 0.0625]);
        assert!((t.w.coords()[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!(t.converged && !t.inverted);
        assert!(t.gap_ratios().iter().all(|r| (r - 0.25).abs() < 1e-10));
    }

    #[test]
    fn equal_points_are_the_centre() {
        let s = HeisenbergModel.structure();
        let x = p(&[0.3, -0.2, 0.1]);
        let t = paper_iteration(&s, &x, &x, half(), half(), &Default::default()).unwrap();
        assert_eq!(t.iterations, 0);
        assert_eq!(t.w, x);
    }

    #[test]
    fn heisenberg_matches_banach() {
        let s = HeisenbergModel.structure();
        let (x, y) = (p(&[0.0, 0.0, 0.0]), p(&[1.0, 0.0, 0.0]));
        let opts = IterationOptions::default();
        let t = paper_iteration(&s, &x, &y, half(), half(), &opts).unwrap();
        let b = banach_iteration(&s, &x, &y, half(), half(), &x, &opts).unwrap();
        assert!(coord_residual(&t.w, &b) < 1e-10);
        let zs = Sampler::new(1)
            .axiom_samples(&s, 100)
            .into_iter()
            .map(|a| a.u)
            .collect::<Vec<_>>();
        assert!(
            verify_menelaos(&s, &x, &y, half(), half(), &t.w, &zs, 1e-9)
                .unwrap()
                .pass
        );
        assert!(check_invariance(&s, &t, &zs, 1e-10).unwrap().pass);
    }

    #[test]
    fn closed_form_examples() {
        let (x, y) = (p(&[0.0]), p(&[1.0]));
        let w = euclidean_center_closed_form(&x, &y, half(), half()).unwrap();
        assert!((w.coords()[0] - 1.0 / 3.0).abs() < 1e-15);
        let w = euclidean_center_closed_form(&x, &y, Scalar::ONE, half()).unwrap();
        assert_eq!(w, y);
        let w = euclidean_center_closed_form(&x, &y, half(), Scalar::ONE).unwrap();
        assert_eq!(w, x);
        assert_eq!(
            euclidean_center_closed_form(&x, &y, half(), Scalar::new(2.0).unwrap()),
            Err(Error::UnitCoefficient)
        );
    }

    #[test]
    fn verify_hand_values() {
        let s = EuclideanModel::new(1, 2.0).unwrap().structure();
        let w = p(&[1.0 / 3.0]);
        let r = verify_menelaos(
            &s,
            &p(&[0.0]),
            &p(&[1.0]),
            half(),
            half(),
            &w,
            &[p(&[2.0]), w.clone()],
            1e-15,
        )
        .unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn unit_product_and_nonlinear_models_are_rejected() {
        let s = HeisenbergModel.structure();
        let x = p(&[0.0, 0.0, 0.0]);
        let two = Scalar::new(2.0).unwrap();
        assert_eq!(
            paper_iteration(&s, &x, &x, half(), two, &Default::default()),
            Err(Error::UnitCoefficient)
        );
        let m = SphereModel::unit();
        let o = m.origin();
        assert!(matches!(
            paper_iteration(&m, &o, &o, half(), half(), &Default::default()),
            Err(Error::NotLinearModel(_))
        ));
    }

    #[test]
    fn expanding_pair_runs_inverted() {
        let s = EuclideanModel::new(1, 2.0).unwrap().structure();
        let (x, y) = (p(&[0.0]), p(&[1.0]));
        let (e, m) = (Scalar::new(2.0).unwrap(), Scalar::new(4.0).unwrap());
        let t = paper_iteration(&s, &x, &y, e, m, &Default::default()).unwrap();
        assert!(t.inverted);
        let w = euclidean_center_closed_form(&x, &y, e, m).unwrap();
        assert!(coord_residual(&t.w, &w) < 1e-12);
        let b = banach_iteration(&s, &x, &y, e, m, &x, &Default::default()).unwrap();
        assert!(coord_residual(&b, &w) < 1e-11);
    }

    #[test]
    fn csv_layout() {
        let s = EuclideanModel::new(1, 2.0).unwrap().structure();
        let t = paper_iteration(
            &s,
            &p(&[0.0]),
            &p(&[1.0]),
            half(),
            half(),
            &Default::default(),
        )
        .unwrap();
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,x0,y0,gap"));
        assert_eq!(lines.next(), Some("0,0,1,1"));
        assert_eq!(lines.next(), Some("1,0.25,0.5,0.25"));
    }

    #[test]
    fn sphere_fixed_point_is_not_a_centre() {
        let m = SphereModel::unit();
        let w = crate::axioms::sphere_witness(&m);
        let opts = IterationOptions::default();
        let z = banach_iteration(&m, &w.x, &w.u, w.eps, w.mu, &w.x, &opts).unwrap();
        let r = verify_menelaos(
            &m,
            &w.x,
            &w.u,
            w.eps,
            w.mu,
            &z,
            std::slice::from_ref(&w.v),
            1e-9,
        )
        .unwrap();
        assert!(!r.pass);
    }
}
