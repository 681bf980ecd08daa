//! Seeded sampling of points, coefficients and grids.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! a `u64` through `SeedableRng::seed_from_u64`, which is portable across
//! platforms. Every checker takes its samples from here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::point::{Point, Scalar};
use crate::structure::{ConicalGroup, DilatationStructure};

/// A sampled configuration for the pointwise axiom checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomSample {
    pub x: Point,
    pub u: Point,
    pub v: Point,
    pub eps: Scalar,
    pub mu: Scalar,
}

/// A sampled pair of group elements with a coefficient, for the norm axioms.
#[derive(Clone, Debug, PartialEq)]
pub struct NormSample {
    pub g: Point,
    pub h: Point,
    pub eps: Scalar,
}

/// Base points with, for each, a family of nearby `u` and `v` points.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub cells: Vec<GridCell>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub x: Point,
    pub us: Vec<Point>,
    pub vs: Vec<Point>,
}

impl Grid {
    pub fn cases(&self) -> impl Iterator<Item = (usize, &Point, &Point, &Point)> {
        self.cells.iter().enumerate().flat_map(|(i, c)| {
            c.us.iter()
                .flat_map(move |u| c.vs.iter().map(move |v| (i, &c.x, u, v)))
        })
    }

    pub fn len(&self) -> usize {
        self.cells.iter().map(|c| c.us.len() * c.vs.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Radius of the sampling box around the model origin, and of the
/// neighbourhoods of each base point. Keeps every sampled triple pairwise
/// within the closeness radius.
pub fn sampling_radius(s: &dyn DilatationStructure) -> f64 {
    let dom = s.domain();
    1.0_f64.min(0.25 * dom.a).min(dom.closeness_radius() / 2.5)
}

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn coefficient(&mut self, lo: f64, hi: f64) -> Scalar {
        Scalar::new(self.rng.gen_range(lo..=hi)).expect("positive sampling range")
    }

    pub fn point_near(
        &mut self,
        s: &dyn DilatationStructure,
        center: &Point,
        radius: f64,
    ) -> Point {
        s.sample_near(&mut self.rng, center, radius)
    }

    /// A point in the sampling box around the model origin.
    pub fn point(&mut self, s: &dyn DilatationStructure) -> Point {
        let r = sampling_radius(s);
        self.point_near(s, &s.origin(), r)
    }

    pub fn axiom_samples(&mut self, s: &dyn DilatationStructure, n: usize) -> Vec<AxiomSample> {
        let r = sampling_radius(s);
        (0..n)
            .map(|_| {
                let x = self.point(s);
                let u = self.point_near(s, &x, r);
                let v = self.point_near(s, &x, r);
                AxiomSample {
                    x,
                    u,
                    v,
                    eps: self.coefficient(0.01, 1.0),
                    mu: self.coefficient(0.01, 1.0),
                }
            })
            .collect()
    }

    /// Group elements over three orders of magnitude, with coefficients that
    /// include exact powers of two.
    pub fn norm_samples(&mut self, g: &dyn ConicalGroup, n: usize) -> Vec<NormSample> {
        let dim = g.dimension();
        (0..n)
            .map(|i| {
                let draw = |rng: &mut ChaCha8Rng| {
                    let scale = 10f64.powf(rng.gen_range(-1.5..1.5));
                    Point::new((0..dim).map(|_| scale * rng.gen_range(-1.0..1.0)).collect())
                        .expect("finite sample")
                };
                let a = draw(&mut self.rng);
                let b = draw(&mut self.rng);
                let eps = if i % 2 == 0 {
                    Scalar::new(0.5f64.powi(self.rng.gen_range(0..=20))).expect("positive")
                } else {
                    self.coefficient(1e-3, 1.0)
                };
                NormSample { g: a, h: b, eps }
            })
            .collect()
    }

    /// `k` base points, each with `k` nearby `u` and `k` nearby `v`.
    pub fn grid(&mut self, s: &dyn DilatationStructure, k: usize) -> Grid {
        let r = sampling_radius(s);
        let cells = (0..k)
            .map(|_| {
                let x = self.point(s);
                let us = (0..k).map(|_| self.point_near(s, &x, r)).collect();
                let vs = (0..k).map(|_| self.point_near(s, &x, r)).collect();
                GridCell { x, us, vs }
            })
            .collect();
        Grid { cells }
    }
}
