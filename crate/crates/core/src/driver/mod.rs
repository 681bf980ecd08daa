//! Batch driver: run configurations, task dispatch and reports.
//!
//! A run is a pure function of its [`RunConfig`]; all sampling is seeded from
//! `config.seed`, so identical configurations give byte-identical reports.

mod report;

use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use report::{
    emit, write_atomic, AxiomsPayload, Format, MenelaosPayload, NormalizePayload, Payload, Report,
    TangentPayload,
};

use crate::axioms::{
    check_a1, check_a2, check_limits_on_grid, check_linearity, check_norm_axioms, sphere_witness,
    LimitCheck,
};
use crate::error::{Error, Result};
use crate::extrapolate::{LimitSettings, ToleranceSchedule};
use crate::menelaos::{
    banach_iteration, check_invariance, euclidean_center_closed_form, paper_iteration,
    verify_menelaos, IterationOptions,
};
use crate::models::{make_dilatation_structure, Model, ModelDescriptor};
use crate::point::{coord_residual, Point, Scalar};
use crate::sampling::{sampling_radius, AxiomSample, Sampler};
use crate::semigroup::{normalize_word, verify_normal_form, Word};
use crate::tangent::{metric_tangent_defect, verify_conical, TangentSpace};

/// Largest relative deviation of a gap ratio from `εμ` accepted by the
/// menelaos task.
pub const GAP_LAW_TOLERANCE: f64 = 1e-10;
/// Gaps below this are dominated by round-off and excluded from the gap law.
pub const GAP_FLOOR: f64 = 1e-13;
/// Largest coordinate disagreement accepted between the centre solvers.
pub const SOLVER_AGREEMENT: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    CheckAxioms,
    Tangent,
    Menelaos,
    Normalize,
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "check-axioms" => Ok(Task::CheckAxioms),
            "tangent" => Ok(Task::Tangent),
            "menelaos" => Ok(Task::Menelaos),
            "normalize" => Ok(Task::Normalize),
            other => Err(Error::ConfigParse(format!("unknown task {other:?}"))),
        }
    }
}

/// Task-specific inputs; unset points are sampled or default to the model
/// origin.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<Scalar>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<Scalar>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word: Option<Word>,
}

fn default_seed() -> u64 {
    0
}

fn default_samples() -> usize {
    1000
}

fn default_grid() -> usize {
    5
}

fn default_points() -> usize {
    100
}

fn default_tol() -> f64 {
    1e-9
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelDescriptor,
    pub task: Task,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub schedule: ToleranceSchedule,
    /// Samples for the pointwise checks (and the conical checks of the
    /// tangent task).
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Side of the `grid³` grid of `(x, u, v)` for the limit checks.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Probe points for the Menelaos and normal-form checks.
    #[serde(default = "default_points")]
    pub points: usize,
    /// Residual tolerance of every sampled check.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub limits: LimitSettings,
    #[serde(default)]
    pub iteration: IterationOptions,
    #[serde(default)]
    pub inputs: Inputs,
    /// Record the wall time in the report (breaks byte-identity).
    #[serde(default)]
    pub timing: bool,
}

impl RunConfig {
    pub fn new(model: ModelDescriptor, task: Task) -> Self {
        RunConfig {
            model,
            task,
            seed: default_seed(),
            schedule: ToleranceSchedule::default(),
            samples: default_samples(),
            grid: default_grid(),
            points: default_points(),
            tol: default_tol(),
            limits: LimitSettings::default(),
            iteration: IterationOptions::default(),
            inputs: Inputs::default(),
            timing: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    /// Dimension checks that do not need the task to run.
    pub fn validate(&self, model: &Model) -> Result<()> {
        let dim = model.structure().dimension();
        let i = &self.inputs;
        for p in [&i.x, &i.y, &i.u, &i.v].into_iter().flatten() {
            p.check_dim(dim)?;
        }
        if let Some(w) = &i.word {
            if w.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: w.dim(),
                });
            }
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::ConfigParse(format!(
                "tol must be non-negative, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Runs the configured task and assembles its report.
pub fn run(config: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let model = make_dilatation_structure(&config.model)?;
    config.validate(&model)?;
    let payload = match config.task {
        Task::CheckAxioms => Payload::CheckAxioms(run_check_axioms(config, &model)?),
        Task::Tangent => Payload::Tangent(run_tangent(config, &model)?),
        Task::Menelaos => Payload::Menelaos(run_menelaos(config, &model)?),
        Task::Normalize => Payload::Normalize(run_normalize(config, &model)?),
    };
    Ok(Report {
        tool: "dilatox".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        model_label: model.structure().label(),
        model: model.descriptor(),
        config: config.clone(),
        pass: payload.pass(),
        payload,
        wall_time_s: config.timing.then(|| start.elapsed().as_secs_f64()),
    })
}

fn run_check_axioms(config: &RunConfig, model: &Model) -> Result<AxiomsPayload> {
    let s = model.structure();
    let mut sampler = Sampler::new(config.seed);
    let mut samples = sampler.axiom_samples(s, config.samples);
    let mut negative_control = None;
    if let Model::Sphere(m) = model {
        let w = sphere_witness(m);
        let opts = config.iteration;
        let z = banach_iteration(s, &w.x, &w.u, w.eps, w.mu, &w.x, &opts)?;
        negative_control = Some(verify_menelaos(
            s,
            &w.x,
            &w.u,
            w.eps,
            w.mu,
            &z,
            std::slice::from_ref(&w.v),
            config.tol,
        )?);
        samples.insert(0, w);
    }
    let mut checks = vec![
        check_a1(s, &samples, config.tol)?,
        check_a2(s, &samples, config.tol)?,
        check_linearity(s, &samples, config.tol)?,
    ];
    if let Some(g) = model.group() {
        let norm_samples = sampler.norm_samples(g, config.samples);
        checks.extend(check_norm_axioms(g, &norm_samples, config.tol)?);
    }
    let grid = sampler.grid(s, config.grid);
    let limits = [LimitCheck::A3, LimitCheck::A4]
        .into_iter()
        .map(|c| check_limits_on_grid(s, &grid, c, &config.schedule, &config.limits))
        .collect::<Result<Vec<_>>>()?;
    Ok(AxiomsPayload {
        samples: samples.len(),
        checks,
        limits,
        negative_control,
        calibration: model.calibration().cloned(),
    })
}

fn run_tangent(config: &RunConfig, model: &Model) -> Result<TangentPayload> {
    let s = model.structure();
    let mut sampler = Sampler::new(config.seed);
    let x = config.inputs.x.clone().unwrap_or_else(|| s.origin());
    // Half the sampling radius keeps Σ^x of sampled points near x.
    let r = 0.5 * sampling_radius(s);
    let u = match &config.inputs.u {
        Some(u) => u.clone(),
        None => sampler.point_near(s, &x, r),
    };
    let v = match &config.inputs.v {
        Some(v) => v.clone(),
        None => sampler.point_near(s, &x, r),
    };
    let ts = TangentSpace::new(s, &x, config.schedule, config.limits);
    let metric = ts.metric_estimate(&u, &v)?;
    let op = ts.op_estimate(&u, &v)?;
    let inv = ts.inv_estimate(&u)?;
    let samples: Vec<AxiomSample> = (0..config.samples)
        .map(|_| AxiomSample {
            x: sampler.point_near(s, &x, r),
            u: sampler.point_near(s, &x, r),
            v: sampler.point_near(s, &x, r),
            eps: sampler.coefficient(0.01, 1.0),
            mu: sampler.coefficient(0.01, 1.0),
        })
        .collect();
    let conical = verify_conical(&ts, &samples, config.tol)?;
    let scales = ToleranceSchedule::new(r.min(1.0), 0.25, 4)?;
    let defect = metric_tangent_defect(&ts, &scales, &mut sampler, 10)?;
    Ok(TangentPayload {
        base: x.clone(),
        u,
        v,
        metric,
        op,
        inv,
        conical,
        defect,
    })
}

fn run_menelaos(config: &RunConfig, model: &Model) -> Result<MenelaosPayload> {
    let s = model.structure();
    let inputs = &config.inputs;
    let x = inputs.x.clone().unwrap_or_else(|| s.origin());
    let y = inputs
        .y
        .clone()
        .ok_or_else(|| Error::ConfigParse("the menelaos task needs a point y".into()))?;
    let half = Scalar::new(0.5)?;
    let eps = inputs.eps.unwrap_or(half);
    let mu = inputs.mu.unwrap_or(half);
    let opts = config.iteration;

    let mut sampler = Sampler::new(config.seed);
    let zs: Vec<Point> = (0..config.points).map(|_| sampler.point(s)).collect();

    let (trace, iteration_error) = match paper_iteration(s, &x, &y, eps, mu, &opts) {
        Ok(t) => (Some(t), None),
        Err(Error::NotLinearModel(m)) => (None, Some(format!("not a linear model: {m}"))),
        Err(e) => return Err(e),
    };
    let banach = banach_iteration(s, &x, &y, eps, mu, &x, &opts)?;
    let closed_form = match model {
        Model::Euclidean(_) => Some(euclidean_center_closed_form(&x, &y, eps, mu)?),
        _ => None,
    };
    let w = trace.as_ref().map_or(banach.clone(), |t| t.w.clone());
    let mut agreement = coord_residual(&w, &banach);
    if let Some(c) = &closed_form {
        agreement = agreement.max(coord_residual(&w, c));
    }
    let menelaos = verify_menelaos(s, &x, &y, eps, mu, &w, &zs, config.tol)?;
    let invariance = trace
        .as_ref()
        .map(|t| check_invariance(s, t, &zs, config.tol))
        .transpose()?;
    let gap_law_error = trace.as_ref().map(|t| {
        let rate = t.eps.compose(t.mu).value();
        t.rows
            .windows(2)
            .filter(|w| w[1].gap >= GAP_FLOOR)
            .map(|w| (w[1].gap / w[0].gap - rate).abs() / rate)
            .fold(0.0, f64::max)
    });
    Ok(MenelaosPayload {
        x,
        y,
        eps,
        mu,
        w,
        trace,
        iteration_error,
        banach,
        closed_form,
        agreement,
        gap_law_error,
        menelaos,
        invariance,
    })
}

fn run_normalize(config: &RunConfig, model: &Model) -> Result<NormalizePayload> {
    let s = model.structure();
    let word = config
        .inputs
        .word
        .clone()
        .ok_or_else(|| Error::ConfigParse("the normalize task needs a word".into()))?;
    let normal_form = normalize_word(s, &word, config.tol)?;
    let mut sampler = Sampler::new(config.seed);
    let zs: Vec<Point> = (0..config.points).map(|_| sampler.point(s)).collect();
    let verification = verify_normal_form(s, &word, &normal_form, &zs, config.tol)?;
    Ok(NormalizePayload {
        coefficient_product: word.coefficient_product().value(),
        word,
        normal_form,
        verification,
    })
}
