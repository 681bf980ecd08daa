//! The metric tangent space at a point.
//!
//! The tangent distance `d^x`, the operation `Σ^x` and the inverse `inv^x`
//! are limits as `ε → 0` of the cone quotient, `Σ^x_ε` and `inv^x_ε`; each
//! query samples its sequence along the schedule and extrapolates it.

use serde::{Deserialize, Serialize};

use crate::axioms::{check_a3, CheckReport, Witness, Worst};
use crate::error::Result;
use crate::extrapolate::{extrapolate, LimitEstimate, LimitSettings, ToleranceSchedule};
use crate::point::{coord_residual, Point, Scalar};
use crate::sampling::{AxiomSample, Sampler};
use crate::structure::{inv_eps, sigma_eps, DilatationStructure};

/// Tangent space of `s` at `base`, evaluated lazily along `schedule`.
/// Immutable; every query is a pure function of its arguments.
#[derive(Clone, Copy, Debug)]
pub struct TangentSpace<'a> {
    structure: &'a dyn DilatationStructure,
    base: &'a Point,
    schedule: ToleranceSchedule,
    settings: LimitSettings,
}

impl<'a> TangentSpace<'a> {
    pub fn new(
        structure: &'a dyn DilatationStructure,
        base: &'a Point,
        schedule: ToleranceSchedule,
        settings: LimitSettings,
    ) -> Self {
        TangentSpace {
            structure,
            base,
            schedule,
            settings,
        }
    }

    pub fn base(&self) -> &Point {
        self.base
    }

    pub fn schedule(&self) -> ToleranceSchedule {
        self.schedule
    }

    pub fn metric_estimate(&self, u: &Point, v: &Point) -> Result<LimitEstimate> {
        check_a3(
            self.structure,
            self.base,
            u,
            v,
            &self.schedule,
            &self.settings,
        )
    }

    pub fn op_estimate(&self, u: &Point, v: &Point) -> Result<LimitEstimate> {
        let (s, x) = (self.structure, self.base);
        let samples = self
            .schedule
            .sample(|e| Ok(sigma_eps(s, x, e, u, v)?.into_coords()))?;
        extrapolate(samples, &self.settings)
    }

    pub fn inv_estimate(&self, u: &Point) -> Result<LimitEstimate> {
        let (s, x) = (self.structure, self.base);
        let samples = self
            .schedule
            .sample(|e| Ok(inv_eps(s, x, e, u)?.into_coords()))?;
        extrapolate(samples, &self.settings)
    }

    /// `d^x(u, v)`.
    pub fn metric(&self, u: &Point, v: &Point) -> Result<f64> {
        Ok(self
            .metric_estimate(u, v)?
            .require_converged("tangent metric")?
            .scalar())
    }

    /// `Σ^x(u, v)`.
    pub fn op(&self, u: &Point, v: &Point) -> Result<Point> {
        Point::new(
            self.op_estimate(u, v)?
                .require_converged("tangent operation")?
                .limit,
        )
    }

    /// `inv^x(u)`.
    pub fn inv(&self, u: &Point) -> Result<Point> {
        Point::new(
            self.inv_estimate(u)?
                .require_converged("tangent inverse")?
                .limit,
        )
    }
}

pub fn tangent_metric<'a>(
    s: &'a dyn DilatationStructure,
    x: &'a Point,
    sched: ToleranceSchedule,
) -> TangentSpace<'a> {
    TangentSpace::new(s, x, sched, LimitSettings::default())
}

pub fn tangent_op(
    s: &dyn DilatationStructure,
    x: &Point,
    u: &Point,
    v: &Point,
    sched: ToleranceSchedule,
) -> Result<Point> {
    tangent_metric(s, x, sched).op(u, v)
}

pub fn tangent_inv(
    s: &dyn DilatationStructure,
    x: &Point,
    u: &Point,
    sched: ToleranceSchedule,
) -> Result<Point> {
    tangent_metric(s, x, sched).inv(u)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

/// Cone properties of the tangent space, with `(w, u, v, ε, μ)` read from the
/// `(x, u, v, eps, mu)` of each sample:
/// (b) `d^x(Σ^x(w, u), Σ^x(w, v)) = d^x(u, v)`;
/// (c) `δ^x_ε Σ^x(u, v) = Σ^x(δ^x_ε u, δ^x_ε v)`;
/// (d) `d^x(u, v) = (1/μ) d^x(δ^x_μ u, δ^x_μ v)`.
pub fn verify_conical(
    ts: &TangentSpace<'_>,
    samples: &[AxiomSample],
    tol: f64,
) -> Result<Vec<CheckReport>> {
    let s = ts.structure;
    let x = ts.base;
    let mut b = Worst::new("conical-b");
    let mut c = Worst::new("conical-c");
    let mut d = Worst::new("conical-d");
    for smp in samples {
        let (w, u, v) = (&smp.x, &smp.u, &smp.v);
        let duv = ts.metric(u, v)?;
        let witness = || {
            Witness::default()
                .point("w", w)
                .point("u", u)
                .point("v", v)
                .coefficient("eps", smp.eps)
                .coefficient("mu", smp.mu)
        };

        let moved = ts.metric(&ts.op(w, u)?, &ts.op(w, v)?)?;
        b.record(rel(moved, duv), witness);

        let lhs = s.dilate(x, smp.eps, &ts.op(u, v)?)?;
        let rhs = ts.op(&s.dilate(x, smp.eps, u)?, &s.dilate(x, smp.eps, v)?)?;
        c.record(coord_residual(&lhs, &rhs), witness);

        let scaled = if smp.mu == Scalar::ONE {
            duv
        } else {
            ts.metric(&s.dilate(x, smp.mu, u)?, &s.dilate(x, smp.mu, v)?)? / smp.mu.value()
        };
        d.record(rel(scaled, duv), witness);
    }
    Ok(vec![b.finish(tol), c.finish(tol), d.finish(tol)])
}

/// `sup |d(u, v) − d^x(u, v)| / ε` over sampled `u, v ∈ B(x, ε)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentDefect {
    pub eps: f64,
    pub defect: f64,
}

/// The defect at each scale `ε` of `scales`, from `pairs` random pairs per
/// scale. It tends to zero when `d^x` is the metric tangent space at `x`.
pub fn metric_tangent_defect(
    ts: &TangentSpace<'_>,
    scales: &ToleranceSchedule,
    sampler: &mut Sampler,
    pairs: usize,
) -> Result<Vec<TangentDefect>> {
    let s = ts.structure;
    scales
        .coefficients()
        .map(|e| {
            let r = e.value();
            let mut sup = 0.0_f64;
            for _ in 0..pairs {
                let u = sampler.point_near(s, ts.base, r);
                let v = sampler.point_near(s, ts.base, r);
                sup = sup.max((s.dist(&u, &v)? - ts.metric(&u, &v)?).abs() / r);
            }
            Ok(TangentDefect {
                eps: r,
                defect: sup,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::sphere_witness;
    use crate::models::{EuclideanModel, HeisenbergModel, SphereModel};
    use crate::structure::ConicalGroup;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn sched() -> ToleranceSchedule {
        ToleranceSchedule::default()
    }

    #[test]
    fn euclidean_operation_examples() {
        let s = EuclideanModel::new(1, 2.0).unwrap().structure();
        let r = tangent_op(&s, &p(&[0.0]), &p(&[2.0]), &p(&[3.0]), sched()).unwrap();
        assert!((r.coords()[0] - 5.0).abs() < 1e-12);
        let r = tangent_op(&s, &p(&[1.0]), &p(&[2.0]), &p(&[3.0]), sched()).unwrap();
        assert!((r.coords()[0] - 4.0).abs() < 1e-12);
        let i = tangent_inv(&s, &p(&[0.0]), &p(&[2.0]), sched()).unwrap();
        assert!((i.coords()[0] + 2.0).abs() < 1e-12);
        let x = p(&[0.7]);
        assert_eq!(tangent_inv(&s, &x, &x, sched()).unwrap(), x);
    }

    #[test]
    fn base_point_is_neutral() {
        let s = HeisenbergModel.structure();
        let x = p(&[0.2, -0.1, 0.3]);
        let u = p(&[0.5, 0.4, -0.2]);
        let ts = tangent_metric(&s, &x, sched());
        assert_eq!(ts.metric(&x, &x).unwrap(), 0.0);
        assert!(coord_residual(&ts.op(&x, &u).unwrap(), &u) < 1e-12);
        assert!(coord_residual(&ts.op(&u, &x).unwrap(), &u) < 1e-12);
        let back = ts.op(&u, &ts.inv(&u).unwrap()).unwrap();
        assert!(coord_residual(&back, &x) < 1e-9);
    }

    #[test]
    fn heisenberg_tangent_at_identity_is_the_group() {
        let h = HeisenbergModel;
        let s = h.structure();
        let e = h.identity();
        let ts = tangent_metric(&s, &e, sched());
        let mut smp = Sampler::new(5);
        for _ in 0..100 {
            let u = smp.point(&s);
            let v = smp.point(&s);
            let got = ts.op(&u, &v).unwrap();
            assert!(coord_residual(&got, &h.mul(&u, &v).unwrap()) < 1e-8);
            let inv = ts.inv(&u).unwrap();
            assert!(coord_residual(&inv, &h.inv(&u).unwrap()) < 1e-8);
        }
    }

    #[test]
    fn heisenberg_is_conical() {
        let s = HeisenbergModel.structure();
        let x = p(&[0.1, 0.2, -0.1]);
        let ts = tangent_metric(&s, &x, sched());
        let mut smp = Sampler::new(6);
        let samples: Vec<AxiomSample> = smp
            .axiom_samples(&s, 10)
            .into_iter()
            .map(|mut a| {
                a.x = smp.point_near(&s, &x, 0.5);
                a.u = smp.point_near(&s, &x, 0.5);
                a.v = smp.point_near(&s, &x, 0.5);
                a
            })
            .collect();
        for r in verify_conical(&ts, &samples, 1e-9).unwrap() {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn conical_d_with_unit_mu_is_exact() {
        let s = EuclideanModel::new(2, 2.0).unwrap().structure();
        let x = p(&[0.0, 0.0]);
        let ts = tangent_metric(&s, &x, sched());
        let a = AxiomSample {
            x: p(&[0.1, 0.0]),
            u: p(&[0.3, 0.4]),
            v: p(&[-0.2, 0.1]),
            eps: Scalar::new(0.5).unwrap(),
            mu: Scalar::ONE,
        };
        let reports = verify_conical(&ts, &[a], 0.0).unwrap();
        assert_eq!(reports[2].max_residual, 0.0);
        assert!(
            reports.iter().all(|r| r.max_residual < 1e-14),
            "{reports:?}"
        );
    }

    #[test]
    fn sphere_tangent_metric_is_log_distance() {
        let m = SphereModel::unit();
        let w = sphere_witness(&m);
        let ts = tangent_metric(&m, &w.x, sched());
        let lu = m.log(&w.x, &w.u).unwrap();
        let lv = m.log(&w.x, &w.v).unwrap();
        let expect =
            ((lu[0] - lv[0]).powi(2) + (lu[1] - lv[1]).powi(2) + (lu[2] - lv[2]).powi(2)).sqrt();
        assert!((ts.metric(&w.u, &w.v).unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn sphere_defect_shrinks() {
        let m = SphereModel::unit();
        let x = m.origin();
        let ts = tangent_metric(&m, &x, sched());
        let scales = ToleranceSchedule::new(0.2, 0.25, 3).unwrap();
        let defects = metric_tangent_defect(&ts, &scales, &mut Sampler::new(7), 10).unwrap();
        assert!(defects[0].defect > 0.0);
        assert!(
            defects.windows(2).all(|w| w[1].defect < w[0].defect),
            "{defects:?}"
        );
    }
}
