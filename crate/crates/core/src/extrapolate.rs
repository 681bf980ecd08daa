//! Limits along shrinking coefficient schedules.
//!
//! A quantity `q(ε)` is sampled at `ε_k = eps0 · ratio^k`. The convergence
//! order is fitted on the last successive differences, then repeated
//! Richardson elimination of the terms `ε^p, ε^{p+1}, ε^{p+2}` produces one
//! estimate per four-sample window. The window with the smallest elimination
//! error supplies the limit; the spread of the last window estimates decides
//! convergence.
//!
//! Sequences that are constant up to a floor over the leading half of the
//! schedule are taken at face value there: at small `ε` the derived
//! operators compare nearly equal points and their round-off is amplified by
//! powers of `1/ε`, so the tail carries noise rather than information.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{coord_residual_slice, sup_norm, Scalar};

/// Geometric schedule `ε_k = eps0 · ratio^k`, `k = 0..steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct ToleranceSchedule {
    eps0: f64,
    ratio: f64,
    steps: usize,
}

#[derive(Serialize, Deserialize)]
struct RawSchedule {
    eps0: f64,
    ratio: f64,
    steps: usize,
}

impl TryFrom<RawSchedule> for ToleranceSchedule {
    type Error = Error;

    fn try_from(r: RawSchedule) -> Result<Self> {
        ToleranceSchedule::new(r.eps0, r.ratio, r.steps)
    }
}

impl From<ToleranceSchedule> for RawSchedule {
    fn from(s: ToleranceSchedule) -> Self {
        RawSchedule {
            eps0: s.eps0,
            ratio: s.ratio,
            steps: s.steps,
        }
    }
}

impl ToleranceSchedule {
    pub fn new(eps0: f64, ratio: f64, steps: usize) -> Result<Self> {
        if !(eps0 > 0.0 && eps0 <= 1.0) {
            return Err(Error::ConfigParse(format!(
                "eps0 must lie in (0, 1], got {eps0}"
            )));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::ConfigParse(format!(
                "ratio must lie in (0, 1), got {ratio}"
            )));
        }
        if steps == 0 {
            return Err(Error::ConfigParse("steps must be positive".into()));
        }
        Ok(ToleranceSchedule { eps0, ratio, steps })
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn coefficients(&self) -> impl Iterator<Item = Scalar> + '_ {
        (0..self.steps).map(move |k| {
            Scalar::new(self.eps0 * self.ratio.powi(k as i32)).expect("schedule stays positive")
        })
    }

    /// Evaluates `f` along the schedule.
    pub fn sample<F>(&self, mut f: F) -> Result<Vec<LimitSample>>
    where
        F: FnMut(Scalar) -> Result<Vec<f64>>,
    {
        self.coefficients()
            .map(|e| {
                Ok(LimitSample {
                    eps: e.value(),
                    value: f(e)?,
                })
            })
            .collect()
    }
}

impl Default for ToleranceSchedule {
    /// `eps0 = 1`, `ratio = 1/2`, 12 steps (down to `ε ≈ 4.9e-4`).
    fn default() -> Self {
        ToleranceSchedule {
            eps0: 1.0,
            ratio: 0.5,
            steps: 12,
        }
    }
}

impl fmt::Display for ToleranceSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.eps0, self.ratio, self.steps)
    }
}

impl FromStr for ToleranceSchedule {
    type Err = Error;

    /// Parses `eps0:ratio:steps`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let bad = || Error::ConfigParse(format!("schedule must be eps0:ratio:steps, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let eps0 = parts[0].parse().map_err(|_| bad())?;
        let ratio = parts[1].parse().map_err(|_| bad())?;
        let steps = parts[2].parse().map_err(|_| bad())?;
        ToleranceSchedule::new(eps0, ratio, steps)
    }
}

/// Thresholds used by [`extrapolate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSettings {
    /// Final window-estimate deviation allowed for convergence, relative to
    /// `1 + |limit|`.
    pub tol: f64,
    /// Successive differences at or below this (relative) are treated as an
    /// exactly constant sequence.
    pub exact_floor: f64,
    /// Number of trailing successive differences used for the order fit.
    pub fit_window: usize,
    /// Largest RMS residual of the log-log order fit.
    pub max_fit_residual: f64,
}

impl Default for LimitSettings {
    fn default() -> Self {
        LimitSettings {
            tol: 1e-6,
            exact_floor: 1e-9,
            fit_window: 5,
            max_fit_residual: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSample {
    pub eps: f64,
    pub value: Vec<f64>,
}

/// Sampled values along a schedule with the extrapolated limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    /// Samples in order of decreasing `ε`.
    pub samples: Vec<LimitSample>,
    pub limit: Vec<f64>,
    /// Fitted convergence exponent; `None` when the sequence is constant.
    pub order: Option<f64>,
    /// Richardson elimination error of the selected window.
    pub error_estimate: f64,
    /// Deviations between consecutive window estimates, last three.
    pub deviations: Vec<f64>,
    pub converged: bool,
}

impl LimitEstimate {
    /// The limit of a scalar quantity.
    pub fn scalar(&self) -> f64 {
        self.limit[0]
    }

    /// Largest deviation of any sample from the first one, relative.
    pub fn spread(&self) -> f64 {
        let first = &self.samples[0].value;
        self.samples
            .iter()
            .map(|s| coord_residual_slice(first, &s.value))
            .fold(0.0, f64::max)
    }

    pub fn require_converged(self, what: &str) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence(format!(
                "{what}: deviations {:?} do not settle",
                self.deviations
            )))
        }
    }
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Least-squares slope and RMS residual of `y` against `x`.
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, rms)
}

const LEVELS: usize = 3;

/// Estimates the limit as `ε → 0` of a sampled sequence.
///
/// Errors with `NoConvergence` when the order fit is not a clean power law
/// (RMS residual above `settings.max_fit_residual`) or the differences grow.
pub fn extrapolate(samples: Vec<LimitSample>, settings: &LimitSettings) -> Result<LimitEstimate> {
    let n = samples.len();
    if n < LEVELS + 2 {
        return Err(Error::NoConvergence(format!(
            "{n} samples are too few to extrapolate"
        )));
    }
    if samples.windows(2).any(|w| w[1].eps >= w[0].eps) {
        return Err(Error::NoConvergence(
            "samples must have decreasing eps".into(),
        ));
    }
    if samples
        .iter()
        .any(|s| s.value.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::NoConvergence("non-finite sample".into()));
    }
    let last = &samples[n - 1].value;
    let scale = 1.0 + sup_norm(last);

    let diffs: Vec<f64> = samples
        .windows(2)
        .map(|w| diff_norm(&w[1].value, &w[0].value))
        .collect();
    let window = settings.fit_window.clamp(2, diffs.len());
    let tail = &diffs[diffs.len() - window..];
    let tail_eps: Vec<f64> = samples[n - window..].iter().map(|s| s.eps).collect();

    // Constant over the leading half of the schedule, where cancellation is
    // least: later variation is amplified round-off, not convergence. The
    // sequence is accepted if that variation stays within the tolerance.
    let head = &diffs[..diffs.len().div_ceil(2)];
    if head.iter().all(|d| *d <= settings.exact_floor * scale) {
        let limit = samples[head.len()].value.clone();
        let drift: Vec<f64> = samples[head.len()..]
            .iter()
            .map(|s| diff_norm(&s.value, &limit))
            .collect();
        let worst = drift.iter().cloned().fold(0.0, f64::max);
        let lscale = 1.0 + sup_norm(&limit);
        return Ok(LimitEstimate {
            order: None,
            error_estimate: worst,
            deviations: tail[tail.len().saturating_sub(3)..].to_vec(),
            converged: worst <= settings.tol * lscale,
            limit,
            samples,
        });
    }

    if tail.iter().all(|d| *d <= settings.exact_floor * scale) {
        return Ok(LimitEstimate {
            limit: last.clone(),
            order: None,
            error_estimate: tail.iter().cloned().fold(0.0, f64::max),
            deviations: tail[tail.len().saturating_sub(3)..].to_vec(),
            converged: true,
            samples,
        });
    }

    let pts: Vec<(f64, f64)> = tail
        .iter()
        .zip(&tail_eps)
        .filter(|(d, _)| **d > 0.0)
        .map(|(d, e)| (e.ln(), d.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::NoConvergence(
            "too few non-zero differences to fit an order".into(),
        ));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let (order, rms) = fit_line(&xs, &ys);
    if order.is_nan() || order <= 0.0 {
        return Err(Error::NoConvergence(format!(
            "differences do not shrink (fitted order {order:.3})"
        )));
    }
    if rms > settings.max_fit_residual {
        return Err(Error::NoConvergence(format!(
            "order fit residual {rms:.3} exceeds {}",
            settings.max_fit_residual
        )));
    }

    let base = if (order - order.round()).abs() <= 0.25 && order.round() >= 1.0 {
        order.round()
    } else {
        order
    };
    let exponents: Vec<f64> = (0..LEVELS).map(|j| base + j as f64).collect();

    // One Richardson table per window of LEVELS + 1 consecutive samples.
    let mut estimates = Vec::new();
    for end in LEVELS..n {
        let mut col: Vec<Vec<f64>> = samples[end - LEVELS..=end]
            .iter()
            .map(|s| s.value.clone())
            .collect();
        let mut prev_top = col[LEVELS].clone();
        for (level, e) in exponents.iter().enumerate() {
            let mut next = Vec::with_capacity(col.len() - 1);
            for i in 1..col.len() {
                let idx = end - LEVELS + i + level;
                let r = samples[idx - 1].eps / samples[idx].eps;
                let denom = r.powf(*e) - 1.0;
                next.push(
                    col[i]
                        .iter()
                        .zip(&col[i - 1])
                        .map(|(fine, coarse)| fine + (fine - coarse) / denom)
                        .collect::<Vec<f64>>(),
                );
            }
            prev_top = col.last().cloned().expect("non-empty column");
            col = next;
        }
        let top = col.pop().expect("single entry after elimination");
        let err = diff_norm(&top, &prev_top);
        estimates.push((end, top, err));
    }

    // Only windows in the asymptotic part of the schedule are candidates.
    let min_start = n / 3;
    let (_, limit, error_estimate) = estimates
        .iter()
        .filter(|(end, _, _)| end - LEVELS >= min_start)
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .or_else(|| estimates.last())
        .cloned()
        .expect("at least one window");

    let deviations: Vec<f64> = estimates
        .windows(2)
        .map(|w| diff_norm(&w[1].1, &w[0].1))
        .collect();
    let last3 = &deviations[deviations.len().saturating_sub(3)..];
    let tol = settings.tol * (1.0 + sup_norm(&limit));
    let slack = 1e-2 * tol;
    let monotone = last3.windows(2).all(|w| w[1] <= w[0].max(slack));
    let converged = monotone && last3.last().is_some_and(|d| *d <= tol);

    Ok(LimitEstimate {
        samples,
        limit,
        order: Some(order),
        error_estimate,
        deviations: last3.to_vec(),
        converged,
    })
}
