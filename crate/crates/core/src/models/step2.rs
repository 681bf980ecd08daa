use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{Point, Scalar};
use crate::structure::{check_points, ConicalGroup, GroupStructure, ModelDomain};

/// Seed of the fixed sample set used to calibrate the gauge constant.
const CALIBRATION_SEED: u64 = 0x5eed_ca1b;
const CALIBRATION_PAIRS: usize = 4000;
const CALIBRATION_SHRINK: f64 = 0.8;
const CALIBRATION_MARGIN: f64 = 0.9;

/// Bracket coefficients `bracket[i][j][k]`: the `k`-th second-layer
/// component of `[e_i, e_j]`.
pub type Bracket = Vec<Vec<Vec<f64>>>;

/// How the gauge constant was chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeCalibration {
    /// Starting value of the search.
    pub requested: f64,
    /// Largest value `c` on the shrinking grid such that `c / margin` shows
    /// no sampled subadditivity defect.
    pub sampled: f64,
    /// `2 / sqrt(K)` with `K` the Frobenius bound of the bracket; the gauge is
    /// provably subadditive at or below this value.
    pub analytic_bound: f64,
    /// Constant in use: `requested` when it is at or below the analytic bound,
    /// `min(sampled, analytic_bound)` otherwise.
    pub value: f64,
    pub pairs: usize,
    pub seed: u64,
}

/// A step-2 Carnot group `V₁ ⊕ V₂` with law
/// `(v₁, v₂)(w₁, w₂) = (v₁ + w₁, v₂ + w₂ + ½[v₁, w₁])`, dilations
/// `(εv₁, ε²v₂)` and the gauge `max(‖v₁‖, c ‖v₂‖^{1/2})`.
#[derive(Clone, Debug, PartialEq)]
pub struct Step2CarnotModel {
    dim1: usize,
    dim2: usize,
    bracket: Bracket,
    gauge_c: f64,
    calibration: GaugeCalibration,
}

impl Step2CarnotModel {
    /// Builds the model and calibrates the gauge constant starting from
    /// `requested_c` (default 1).
    pub fn new(
        dim1: usize,
        dim2: usize,
        bracket: Bracket,
        requested_c: Option<f64>,
    ) -> Result<Self> {
        if dim1 == 0 || dim2 == 0 {
            return Err(Error::InvalidModel(
                "layer dimensions must be positive".into(),
            ));
        }
        validate_bracket(dim1, dim2, &bracket)?;
        let requested = requested_c.unwrap_or(1.0);
        if !(requested > 0.0 && requested.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "gauge constant must be positive, got {requested}"
            )));
        }
        let mut model = Step2CarnotModel {
            dim1,
            dim2,
            bracket,
            gauge_c: requested,
            calibration: GaugeCalibration {
                requested,
                sampled: requested,
                analytic_bound: f64::INFINITY,
                value: requested,
                pairs: CALIBRATION_PAIRS,
                seed: CALIBRATION_SEED,
            },
        };
        model.calibrate();
        Ok(model)
    }

    /// Model with bracket entries drawn uniformly from `[-1, 1]` (upper
    /// triangle, antisymmetric completion).
    pub fn random(dim1: usize, dim2: usize, seed: u64, requested_c: Option<f64>) -> Result<Self> {
        Self::new(dim1, dim2, random_bracket(dim1, dim2, seed), requested_c)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim1, self.dim2)
    }

    pub fn bracket(&self) -> &Bracket {
        &self.bracket
    }

    pub fn gauge_c(&self) -> f64 {
        self.gauge_c
    }

    pub fn calibration(&self) -> &GaugeCalibration {
        &self.calibration
    }

    pub fn structure(self) -> GroupStructure<Self> {
        let label = format!("step2(dim1={}, dim2={})", self.dim1, self.dim2);
        GroupStructure::new(
            self,
            ModelDomain::new(4.0, 2.0, None).expect("valid default domain"),
            label,
        )
    }

    /// `[v, w]` for first-layer vectors.
    pub fn lie_bracket(&self, v: &[f64], w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim2];
        for (i, vi) in v.iter().enumerate() {
            if *vi == 0.0 {
                continue;
            }
            for (j, wj) in w.iter().enumerate() {
                let c = vi * wj;
                for (o, b) in out.iter_mut().zip(&self.bracket[i][j]) {
                    *o += c * b;
                }
            }
        }
        out
    }

    fn gauge_with(&self, c: f64, g: &[f64]) -> f64 {
        let (v1, v2) = g.split_at(self.dim1);
        let n1 = v1.iter().map(|a| a * a).sum::<f64>().sqrt();
        let n2 = v2.iter().map(|a| a * a).sum::<f64>().sqrt();
        n1.max(c * n2.sqrt())
    }

    fn calibrate(&mut self) {
        let k_frob = self
            .bracket
            .iter()
            .flatten()
            .flatten()
            .map(|b| b * b)
            .sum::<f64>()
            .sqrt();
        let analytic_bound = if k_frob > 0.0 {
            2.0 / k_frob.sqrt()
        } else {
            f64::INFINITY
        };

        let mut rng = ChaCha8Rng::seed_from_u64(CALIBRATION_SEED);
        let n = self.dim1 + self.dim2;
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..CALIBRATION_PAIRS)
            .map(|_| {
                let mut draw = || -> Vec<f64> {
                    let scale = 10f64.powf(rng.gen_range(-1.0..1.0));
                    (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
                };
                (draw(), draw())
            })
            .collect();

        let requested = self.calibration.requested;
        let mut c = requested;
        for _ in 0..200 {
            let worst = pairs
                .iter()
                .map(|(g, h)| {
                    let gh = self.raw_mul(g, h);
                    let probe = c / CALIBRATION_MARGIN;
                    self.gauge_with(probe, &gh)
                        - self.gauge_with(probe, g)
                        - self.gauge_with(probe, h)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            if worst <= 0.0 {
                break;
            }
            c *= CALIBRATION_SHRINK;
        }
        // At or below the analytic bound the gauge is provably subadditive.
        let value = if requested <= analytic_bound {
            requested
        } else {
            c.min(analytic_bound)
        };
        self.gauge_c = value;
        self.calibration.sampled = c;
        self.calibration.analytic_bound = analytic_bound;
        self.calibration.value = value;
    }

    fn raw_mul(&self, g: &[f64], h: &[f64]) -> Vec<f64> {
        let (g1, g2) = g.split_at(self.dim1);
        let (h1, h2) = h.split_at(self.dim1);
        let br = self.lie_bracket(g1, h1);
        let mut out = Vec::with_capacity(g.len());
        out.extend(g1.iter().zip(h1).map(|(a, b)| a + b));
        out.extend(
            g2.iter()
                .zip(h2)
                .zip(&br)
                .map(|((a, b), c)| a + b + 0.5 * c),
        );
        out
    }
}

fn validate_bracket(dim1: usize, dim2: usize, bracket: &Bracket) -> Result<()> {
    if bracket.len() != dim1 || bracket.iter().any(|row| row.len() != dim1) {
        return Err(Error::InvalidModel(format!(
            "bracket must be a {dim1}x{dim1} array of {dim2}-vectors"
        )));
    }
    for (i, row) in bracket.iter().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            if entry.len() != dim2 {
                return Err(Error::InvalidModel(format!(
                    "bracket[{i}][{j}] has {} components, expected {dim2}",
                    entry.len()
                )));
            }
            for (k, b) in entry.iter().enumerate() {
                if !b.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "bracket[{i}][{j}][{k}] is not finite"
                    )));
                }
                let mirror = bracket[j][i][k];
                if (b + mirror).abs() > 1e-12 * (1.0 + b.abs()) {
                    return Err(Error::InvalidModel(format!(
                        "bracket is not antisymmetric at [{i}][{j}][{k}]: {b} vs {mirror}"
                    )));
                }
            }
        }
    }
    Ok(())
}

// Antisymmetric fill writes b[i][j] and b[j][i] together.
#[allow(clippy::needless_range_loop)]
pub fn random_bracket(dim1: usize, dim2: usize, seed: u64) -> Bracket {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = vec![vec![vec![0.0; dim2]; dim1]; dim1];
    for i in 0..dim1 {
        for j in (i + 1)..dim1 {
            for k in 0..dim2 {
                let v: f64 = rng.gen_range(-1.0..1.0);
                b[i][j][k] = v;
                b[j][i][k] = -v;
            }
        }
    }
    b
}

impl ConicalGroup for Step2CarnotModel {
    fn dimension(&self) -> usize {
        self.dim1 + self.dim2
    }

    fn identity(&self) -> Point {
        Point::zeros(self.dimension())
    }

    fn mul(&self, g: &Point, h: &Point) -> Result<Point> {
        check_points(self.dimension(), &[g, h])?;
        Ok(Point::raw(self.raw_mul(g.coords(), h.coords())))
    }

    fn inv(&self, g: &Point) -> Result<Point> {
        check_points(self.dimension(), &[g])?;
        Ok(Point::raw(g.coords().iter().map(|c| -c).collect()))
    }

    fn dilation(&self, eps: Scalar, g: &Point) -> Result<Point> {
        check_points(self.dimension(), &[g])?;
        let e = eps.value();
        let e2 = e * e;
        Ok(Point::raw(
            g.coords()
                .iter()
                .enumerate()
                .map(|(i, c)| if i < self.dim1 { e * c } else { e2 * c })
                .collect(),
        ))
    }

    fn norm(&self, g: &Point) -> Result<f64> {
        check_points(self.dimension(), &[g])?;
        Ok(self.gauge_with(self.gauge_c, g.coords()))
    }
}
