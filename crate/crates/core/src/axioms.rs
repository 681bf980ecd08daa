//! Numerical checks of the dilatation axioms, the norm axioms and linearity.
//!
//! Pointwise identities are measured with [`coord_residual`], a relative
//! coordinate difference. The metric itself is unsuitable as a residual for
//! round-off sized errors: a gauge such as `|t|^{1/2}` turns a 1e-16
//! coordinate error into a 1e-8 distance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::extrapolate::{extrapolate, LimitEstimate, LimitSettings, ToleranceSchedule};
use crate::models::SphereModel;
use crate::point::{coord_residual, Point, Scalar};
use crate::sampling::{AxiomSample, Grid, NormSample};
use crate::structure::{cone_quotient, delta2, ConicalGroup, DilatationStructure};

/// The configuration responsible for a report's largest residual.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub points: BTreeMap<String, Point>,
    pub coefficients: BTreeMap<String, f64>,
}

impl Witness {
    pub fn point(mut self, name: &str, p: &Point) -> Self {
        self.points.insert(name.to_string(), p.clone());
        self
    }

    pub fn coefficient(self, name: &str, e: Scalar) -> Self {
        self.value(name, e.value())
    }

    pub fn value(mut self, name: &str, v: f64) -> Self {
        self.coefficients.insert(name.to_string(), v);
        self
    }
}

/// Outcome of a sampled check; `pass` iff `max_residual <= tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub axiom: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub witness: Option<Witness>,
    pub pass: bool,
}

/// Running maximum of residuals with the witness of the worst one.
pub(crate) struct Worst {
    axiom: String,
    samples: usize,
    residual: f64,
    witness: Option<Witness>,
}

impl Worst {
    pub(crate) fn new(axiom: &str) -> Self {
        Worst {
            axiom: axiom.to_string(),
            samples: 0,
            residual: 0.0,
            witness: None,
        }
    }

    pub(crate) fn record(&mut self, residual: f64, witness: impl FnOnce() -> Witness) {
        self.samples += 1;
        // A NaN residual sticks so it cannot hide behind a pass.
        let replace = self.witness.is_none()
            || (!self.residual.is_nan() && (residual.is_nan() || residual > self.residual));
        if replace {
            self.residual = residual;
            self.witness = Some(witness());
        }
    }

    pub(crate) fn finish(self, tolerance: f64) -> CheckReport {
        CheckReport {
            pass: self.residual <= tolerance,
            axiom: self.axiom,
            samples: self.samples,
            max_residual: self.residual,
            tolerance,
            witness: self.witness,
        }
    }
}

/// `δ^x_ε x = x` and `δ^x_1 u = u`.
pub fn check_a1(
    s: &dyn DilatationStructure,
    samples: &[AxiomSample],
    tol: f64,
) -> Result<CheckReport> {
    let mut worst = Worst::new("A1");
    for smp in samples {
        let fixed = s.dilate(&smp.x, smp.eps, &smp.x)?;
        let ident = s.dilate(&smp.x, Scalar::ONE, &smp.u)?;
        let r = coord_residual(&fixed, &smp.x).max(coord_residual(&ident, &smp.u));
        worst.record(r, || {
            Witness::default()
                .point("x", &smp.x)
                .point("u", &smp.u)
                .coefficient("eps", smp.eps)
        });
    }
    Ok(worst.finish(tol))
}

/// `δ^x_ε δ^x_μ u = δ^x_{εμ} u`.
pub fn check_a2(
    s: &dyn DilatationStructure,
    samples: &[AxiomSample],
    tol: f64,
) -> Result<CheckReport> {
    let mut worst = Worst::new("A2");
    for smp in samples {
        let inner = s.dilate(&smp.x, smp.mu, &smp.u)?;
        let lhs = s.dilate(&smp.x, smp.eps, &inner)?;
        let rhs = s.dilate(&smp.x, smp.eps.compose(smp.mu), &smp.u)?;
        worst.record(coord_residual(&lhs, &rhs), || {
            Witness::default()
                .point("x", &smp.x)
                .point("u", &smp.u)
                .coefficient("eps", smp.eps)
                .coefficient("mu", smp.mu)
        });
    }
    Ok(worst.finish(tol))
}

/// Samples the cone quotient `(1/ε) d(δ^x_ε u, δ^x_ε v)` along `sched` and
/// extrapolates the tangent distance `d^x(u, v)`.
pub fn check_a3(
    s: &dyn DilatationStructure,
    x: &Point,
    u: &Point,
    v: &Point,
    sched: &ToleranceSchedule,
    settings: &LimitSettings,
) -> Result<LimitEstimate> {
    let samples = sched.sample(|e| Ok(vec![cone_quotient(s, x, e, u, v)?]))?;
    extrapolate(samples, settings)
}

/// Samples `Δ^x_ε(u, v)` along `sched` and extrapolates `Δ^x(u, v)`.
pub fn check_a4(
    s: &dyn DilatationStructure,
    x: &Point,
    u: &Point,
    v: &Point,
    sched: &ToleranceSchedule,
    settings: &LimitSettings,
) -> Result<LimitEstimate> {
    let samples = sched.sample(|e| Ok(delta2(s, x, e, u, v)?.into_coords()))?;
    extrapolate(samples, settings)
}

/// `δ^x_ε δ^y_μ z = δ^{δ^x_ε y}_μ δ^x_ε z`, with `(x, y, z)` taken from the
/// `(x, u, v)` of each sample.
pub fn check_linearity(
    s: &dyn DilatationStructure,
    samples: &[AxiomSample],
    tol: f64,
) -> Result<CheckReport> {
    let mut worst = Worst::new("linearity");
    for smp in samples {
        let r = linearity_residual(s, &smp.x, &smp.u, &smp.v, smp.eps, smp.mu)?;
        worst.record(r, || {
            Witness::default()
                .point("x", &smp.x)
                .point("y", &smp.u)
                .point("z", &smp.v)
                .coefficient("eps", smp.eps)
                .coefficient("mu", smp.mu)
        });
    }
    Ok(worst.finish(tol))
}

pub fn linearity_residual(
    s: &dyn DilatationStructure,
    x: &Point,
    y: &Point,
    z: &Point,
    eps: Scalar,
    mu: Scalar,
) -> Result<f64> {
    let lhs = s.dilate(x, eps, &s.dilate(y, mu, z)?)?;
    let moved_center = s.dilate(x, eps, y)?;
    let rhs = s.dilate(&moved_center, mu, &s.dilate(x, eps, z)?)?;
    Ok(coord_residual(&lhs, &rhs))
}

/// A fixed non-degenerate triple on the sphere: `x` is the base point and
/// `y`, `z` lie 0.55 radians away from it, sixty degrees apart, with
/// `ε = μ = 1/2`. All three are pairwise within the closeness radius, and
/// linearity visibly fails on them.
const WITNESS_ARM: f64 = 0.55;

pub fn sphere_witness(model: &SphereModel) -> AxiomSample {
    let b = model.base();
    let helper = if b[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    // Orthonormal tangent frame (e1, e2) at the base point.
    let d = helper[0] * b[0] + helper[1] * b[1] + helper[2] * b[2];
    let t: Vec<f64> = (0..3).map(|i| helper[i] - d * b[i]).collect();
    let tn = t.iter().map(|a| a * a).sum::<f64>().sqrt();
    let e1 = [t[0] / tn, t[1] / tn, t[2] / tn];
    let e2 = [
        b[1] * e1[2] - b[2] * e1[1],
        b[2] * e1[0] - b[0] * e1[2],
        b[0] * e1[1] - b[1] * e1[0],
    ];
    let len = WITNESS_ARM * model.radius();
    let (c, s) = (
        std::f64::consts::FRAC_PI_3.cos(),
        std::f64::consts::FRAC_PI_3.sin(),
    );
    let x = model.origin();
    let y = model
        .exp(&x, [len * e1[0], len * e1[1], len * e1[2]])
        .expect("tangent step from the base point");
    let z = model
        .exp(
            &x,
            [
                len * (c * e1[0] + s * e2[0]),
                len * (c * e1[1] + s * e2[1]),
                len * (c * e1[2] + s * e2[2]),
            ],
        )
        .expect("tangent step from the base point");
    let half = Scalar::new(0.5).expect("positive");
    AxiomSample {
        x,
        u: y,
        v: z,
        eps: half,
        mu: half,
    }
}

/// Norm axioms of a conical group:
/// (a) `‖e‖ = 0`, `‖g‖ ≥ 0`, and `‖g‖ = 0` only at `e`;
/// (b) `‖gh‖ ≤ ‖g‖ + ‖h‖`;
/// (c) `‖g⁻¹‖ = ‖g‖`;
/// (d) `‖δ_ε g‖ = ε ‖g‖`.
pub fn check_norm_axioms(
    g: &dyn ConicalGroup,
    samples: &[NormSample],
    tol: f64,
) -> Result<Vec<CheckReport>> {
    let e = g.identity();
    let mut a = Worst::new("norm-a");
    let mut b = Worst::new("norm-b");
    let mut c = Worst::new("norm-c");
    let mut d = Worst::new("norm-d");
    let ne = g.norm(&e)?;
    a.record(ne.abs(), || Witness::default().point("g", &e));
    for smp in samples {
        let wg = || Witness::default().point("g", &smp.g);
        let ng = g.norm(&smp.g)?;
        let nh = g.norm(&smp.h)?;
        let degenerate = ng == 0.0 && coord_residual(&smp.g, &e) > 0.0;
        a.record(if degenerate { 1.0 } else { (-ng).max(0.0) }, wg);

        let ngh = g.norm(&g.mul(&smp.g, &smp.h)?)?;
        b.record((ngh - ng - nh).max(0.0) / (1.0 + ng + nh), || {
            Witness::default().point("g", &smp.g).point("h", &smp.h)
        });

        let ninv = g.norm(&g.inv(&smp.g)?)?;
        c.record((ninv - ng).abs() / (1.0 + ng), wg);

        let nd = g.norm(&g.dilation(smp.eps, &smp.g)?)?;
        let ev = smp.eps.value();
        d.record((nd - ev * ng).abs() / (ev * (1.0 + ng)), || {
            Witness::default()
                .point("g", &smp.g)
                .coefficient("eps", smp.eps)
        });
    }
    Ok(vec![
        a.finish(tol),
        b.finish(tol),
        c.finish(tol),
        d.finish(tol),
    ])
}

/// Which limit a grid run extrapolates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitCheck {
    A3,
    A4,
}

impl LimitCheck {
    pub fn run(
        self,
        s: &dyn DilatationStructure,
        x: &Point,
        u: &Point,
        v: &Point,
        sched: &ToleranceSchedule,
        settings: &LimitSettings,
    ) -> Result<LimitEstimate> {
        match self {
            LimitCheck::A3 => check_a3(s, x, u, v, sched, settings),
            LimitCheck::A4 => check_a4(s, x, u, v, sched, settings),
        }
    }
}

/// Largest spread between per-base-point convergence orders tolerated as
/// "uniform" convergence over the grid.
pub const ORDER_SPREAD_LIMIT: f64 = 0.5;

/// Summary of a limit check over a grid of `(x, u, v)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub check: LimitCheck,
    pub cases: usize,
    pub converged: usize,
    /// Largest relative deviation of a sampled sequence from its first value;
    /// zero up to round-off for homogeneous models and the A3 quotient.
    pub max_spread: f64,
    pub max_error_estimate: f64,
    /// Median fitted order for each base point; `None` when all its
    /// sequences are constant.
    pub orders: Vec<Option<f64>>,
    pub order_spread: f64,
    pub uniform: bool,
    /// Up to five descriptions of failed cases.
    pub failures: Vec<String>,
    pub pass: bool,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// Runs `check` on every case of `grid`. Extrapolation failures count as
/// non-converged cases rather than aborting the run.
pub fn check_limits_on_grid(
    s: &dyn DilatationStructure,
    grid: &Grid,
    check: LimitCheck,
    sched: &ToleranceSchedule,
    settings: &LimitSettings,
) -> Result<GridReport> {
    let mut per_x: Vec<Vec<f64>> = vec![Vec::new(); grid.cells.len()];
    let mut converged = 0;
    let mut max_spread = 0.0_f64;
    let mut max_err = 0.0_f64;
    let mut failures = Vec::new();
    for (i, x, u, v) in grid.cases() {
        match check.run(s, x, u, v, sched, settings) {
            Ok(est) => {
                max_spread = max_spread.max(est.spread());
                max_err = max_err.max(est.error_estimate);
                if let Some(p) = est.order {
                    per_x[i].push(p);
                }
                if est.converged {
                    converged += 1;
                } else if failures.len() < 5 {
                    failures.push(format!(
                        "x={x} u={u} v={v}: deviations {:?}",
                        est.deviations
                    ));
                }
            }
            Err(e) => {
                if failures.len() < 5 {
                    failures.push(format!("x={x} u={u} v={v}: {e}"));
                }
            }
        }
    }
    let orders: Vec<Option<f64>> = per_x.into_iter().map(median).collect();
    let known: Vec<f64> = orders.iter().flatten().copied().collect();
    let order_spread = match (
        known.iter().copied().reduce(f64::min),
        known.iter().copied().reduce(f64::max),
    ) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0.0,
    };
    let uniform = order_spread <= ORDER_SPREAD_LIMIT;
    let cases = grid.len();
    Ok(GridReport {
        check,
        cases,
        converged,
        max_spread,
        max_error_estimate: max_err,
        orders,
        order_spread,
        uniform,
        failures,
        pass: converged == cases && uniform,
    })
}
