//! Normal forms in the semigroup generated by dilatations.
//!
//! On a linear group model every finite composition of dilatations is the
//! identity, a single dilatation, or a left translation. Composition follows
//! `(a ∘ b)(z) = a(b(z))`; a [`Word`] applies its rightmost factor first.
//!
//! Text forms: `I`, `D(c_1;…;c_n;coeff)` and `T(g_1;…;g_n)`. A word is a
//! sequence of `D(…)` factors separated by whitespace or `*`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::axioms::{CheckReport, Witness, Worst};
use crate::error::{Error, Result};
use crate::menelaos::{
    contraction_fixed_point, paper_iteration, verify_menelaos, IterationOptions,
};
use crate::point::{coord_residual, Point, Scalar};
use crate::sampling::Sampler;
use crate::structure::{ConicalGroup, DilatationStructure, Linearity};

/// Translations closer than this to the identity (coordinate residual)
/// collapse to `Identity`.
pub const IDENTITY_TOLERANCE: f64 = 1e-14;

/// Iteration cap for the centre of a translation composed with a
/// dilatation; the rate is the dilatation coefficient.
const MIXED_MAX_ITER: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CanonicalElement {
    Identity,
    Dilatation {
        center: Point,
        coeff: Scalar,
    },
    #[serde(rename = "translation")]
    LeftTranslation {
        g: Point,
    },
}

impl CanonicalElement {
    /// `Dilatation`, or `Identity` for a unit coefficient.
    pub fn dilatation(center: Point, coeff: Scalar) -> Self {
        if coeff.is_unit() {
            CanonicalElement::Identity
        } else {
            CanonicalElement::Dilatation { center, coeff }
        }
    }

    /// `LeftTranslation`, or `Identity` when `g` is the group identity.
    pub fn translation(group: &dyn ConicalGroup, g: Point) -> Self {
        if coord_residual(&g, &group.identity()) <= IDENTITY_TOLERANCE {
            CanonicalElement::Identity
        } else {
            CanonicalElement::LeftTranslation { g }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CanonicalElement::Identity => "identity",
            CanonicalElement::Dilatation { .. } => "dilatation",
            CanonicalElement::LeftTranslation { .. } => "translation",
        }
    }
}

fn write_coords(f: &mut fmt::Formatter<'_>, coords: &[f64]) -> fmt::Result {
    for (i, c) in coords.iter().enumerate() {
        if i > 0 {
            write!(f, ";")?;
        }
        write!(f, "{c}")?;
    }
    Ok(())
}

impl fmt::Display for CanonicalElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CanonicalElement::Identity => write!(f, "I"),
            CanonicalElement::Dilatation { center, coeff } => {
                write!(f, "D(")?;
                write_coords(f, center.coords())?;
                write!(f, ";{coeff})")
            }
            CanonicalElement::LeftTranslation { g } => {
                write!(f, "T(")?;
                write_coords(f, g.coords())?;
                write!(f, ")")
            }
        }
    }
}

/// Splits `X(a;b;c)` into its tag and numbers.
fn parse_tagged(text: &str) -> Result<(char, Vec<f64>)> {
    let bad = || Error::ConfigParse(format!("cannot parse element {text:?}"));
    let t = text.trim();
    let tag = t.chars().next().ok_or_else(bad)?;
    let body = t[tag.len_utf8()..]
        .trim()
        .strip_prefix('(')
        .and_then(|b| b.strip_suffix(')'))
        .ok_or_else(bad)?;
    let nums = body
        .split(';')
        .map(|n| n.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<f64>>>()?;
    Ok((tag, nums))
}

impl FromStr for CanonicalElement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "I" {
            return Ok(CanonicalElement::Identity);
        }
        match parse_tagged(s)? {
            ('D', mut nums) if nums.len() >= 2 => {
                let coeff = Scalar::new(nums.pop().expect("non-empty"))?;
                Ok(CanonicalElement::Dilatation {
                    center: Point::new(nums)?,
                    coeff,
                })
            }
            ('T', nums) => Ok(CanonicalElement::LeftTranslation {
                g: Point::new(nums)?,
            }),
            _ => Err(Error::ConfigParse(format!("cannot parse element {s:?}"))),
        }
    }
}

/// `δ^center_coeff`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilatationMap {
    pub center: Point,
    pub coeff: Scalar,
}

impl fmt::Display for DilatationMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D(")?;
        write_coords(f, self.center.coords())?;
        write!(f, ";{})", self.coeff)
    }
}

/// A non-empty product of dilatations, applied right to left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Word {
    factors: Vec<DilatationMap>,
}

impl Word {
    pub fn new(factors: Vec<DilatationMap>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::ConfigParse(
                "a word needs at least one factor".into(),
            ));
        }
        let dim = factors[0].center.dim();
        for f in &factors {
            f.center.check_dim(dim)?;
        }
        Ok(Word { factors })
    }

    pub fn factors(&self) -> &[DilatationMap] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors[0].center.dim()
    }

    /// Product of the coefficients, multiplied left to right.
    pub fn coefficient_product(&self) -> Scalar {
        self.factors
            .iter()
            .skip(1)
            .fold(self.factors[0].coeff, |acc, f| acc.compose(f.coeff))
    }

    /// The reversed word with inverted coefficients.
    pub fn inverse(&self) -> Word {
        Word {
            factors: self
                .factors
                .iter()
                .rev()
                .map(|f| DilatationMap {
                    center: f.center.clone(),
                    coeff: f.coeff.inv(),
                })
                .collect(),
        }
    }

    /// Applies the factors one by one, rightmost first.
    pub fn apply(&self, s: &dyn DilatationStructure, z: &Point) -> Result<Point> {
        self.factors
            .iter()
            .rev()
            .try_fold(z.clone(), |acc, f| s.dilate(&f.center, f.coeff, &acc))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut factors = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            rest = rest.trim_start_matches(|c: char| c.is_whitespace() || c == '*');
            if rest.is_empty() {
                break;
            }
            let end = rest
                .find(')')
                .ok_or_else(|| Error::ConfigParse(format!("unterminated factor in {s:?}")))?;
            match rest[..=end].parse::<CanonicalElement>()? {
                CanonicalElement::Dilatation { center, coeff } => {
                    factors.push(DilatationMap { center, coeff })
                }
                other => {
                    return Err(Error::ConfigParse(format!(
                        "words are products of dilatations, found {other}"
                    )))
                }
            }
            rest = &rest[end + 1..];
        }
        Word::new(factors)
    }
}

impl TryFrom<String> for Word {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Word> for String {
    fn from(w: Word) -> String {
        w.to_string()
    }
}

fn require_linear_group(s: &dyn DilatationStructure) -> Result<&dyn ConicalGroup> {
    match (s.linearity(), s.group()) {
        (Linearity::Exact, Some(g)) => Ok(g),
        _ => Err(Error::NotLinearModel(s.label())),
    }
}

pub fn apply_canonical(
    s: &dyn DilatationStructure,
    e: &CanonicalElement,
    z: &Point,
) -> Result<Point> {
    match e {
        CanonicalElement::Identity => {
            z.check_dim(s.dimension())?;
            Ok(z.clone())
        }
        CanonicalElement::Dilatation { center, coeff } => s.dilate(center, *coeff, z),
        CanonicalElement::LeftTranslation { g } => {
            let group = s.group().ok_or_else(|| Error::NotLinearModel(s.label()))?;
            group.mul(g, z)
        }
    }
}

/// `δ^x_ε δ^y_{1/ε}` as the left translation by `x δ_ε(x⁻¹y) y⁻¹`.
pub fn translation_from_pair(
    s: &dyn DilatationStructure,
    x: &Point,
    y: &Point,
    eps: Scalar,
) -> Result<CanonicalElement> {
    let g = require_linear_group(s)?;
    let moved = g.mul(x, &g.dilation(eps, &g.mul(&g.inv(x)?, y)?)?)?;
    Ok(CanonicalElement::translation(g, g.mul(&moved, &g.inv(y)?)?))
}

/// Fixed probe points for checking a composed normal form: the identity,
/// every point mentioned by the operands, and a few seeded points.
fn probe_points(s: &dyn DilatationStructure, elems: &[&CanonicalElement]) -> Vec<Point> {
    let mut pts = vec![s.origin()];
    for e in elems {
        match e {
            CanonicalElement::Identity => {}
            CanonicalElement::Dilatation { center, .. } => pts.push(center.clone()),
            CanonicalElement::LeftTranslation { g } => pts.push(g.clone()),
        }
    }
    let mut smp = Sampler::new(0x7072_6f62);
    pts.extend((0..3).map(|_| smp.point(s)));
    pts
}

/// Centre of the dilatation `f` with coefficient `coeff`: the fixed point of
/// `f`, found through `f` when contracting and through `f_inv` otherwise.
fn fixed_center(
    coeff: Scalar,
    start: &Point,
    f: impl FnMut(&Point) -> Result<Point>,
    f_inv: impl FnMut(&Point) -> Result<Point>,
) -> Result<Point> {
    let tol = 1e-15;
    let (c, _) = if coeff.value() < 1.0 {
        contraction_fixed_point(f, start, tol, MIXED_MAX_ITER)?
    } else {
        contraction_fixed_point(f_inv, start, tol, MIXED_MAX_ITER)?
    };
    Ok(c)
}

/// Canonical form of `a ∘ b`. The result is checked pointwise against the
/// composition and rejected with `NoConvergence` above `tol`.
pub fn compose_canonical(
    s: &dyn DilatationStructure,
    a: &CanonicalElement,
    b: &CanonicalElement,
    tol: f64,
) -> Result<CanonicalElement> {
    use CanonicalElement::*;
    let g = require_linear_group(s)?;
    let result = match (a, b) {
        (Identity, other) | (other, Identity) => return Ok(other.clone()),
        (LeftTranslation { g: p }, LeftTranslation { g: q }) => {
            CanonicalElement::translation(g, g.mul(p, q)?)
        }
        (
            Dilatation {
                center: x,
                coeff: eps,
            },
            Dilatation {
                center: y,
                coeff: mu,
            },
        ) => {
            let prod = eps.compose(*mu);
            if prod.is_unit() {
                translation_from_pair(s, x, y, *eps)?
            } else {
                // Products near 1 converge slowly; allow the same budget as the
                // mixed compositions.
                let opts = IterationOptions {
                    max_iter: MIXED_MAX_ITER,
                    ..IterationOptions::default()
                };
                let trace = paper_iteration(s, x, y, *eps, *mu, &opts)?;
                let probes = probe_points(s, &[a, b]);
                let check = verify_menelaos(s, x, y, *eps, *mu, &trace.w, &probes, tol)?;
                if !check.pass {
                    return Err(Error::NoConvergence(format!(
                        "centre of {a} ∘ {b} fails verification (residual {:e})",
                        check.max_residual
                    )));
                }
                CanonicalElement::dilatation(trace.w, prod)
            }
        }
        // z ↦ p δ^y_μ z has the centre c = p δ^y_μ c.
        (
            LeftTranslation { g: p },
            Dilatation {
                center: y,
                coeff: mu,
            },
        ) => {
            let p_inv = g.inv(p)?;
            let c = fixed_center(
                *mu,
                y,
                |z| g.mul(p, &s.dilate(y, *mu, z)?),
                |z| s.dilate(y, mu.inv(), &g.mul(&p_inv, z)?),
            )?;
            CanonicalElement::dilatation(c, *mu)
        }
        // z ↦ δ^x_ε (q z) has the centre c = δ^x_ε (q c).
        (
            Dilatation {
                center: x,
                coeff: eps,
            },
            LeftTranslation { g: q },
        ) => {
            let q_inv = g.inv(q)?;
            let c = fixed_center(
                *eps,
                x,
                |z| s.dilate(x, *eps, &g.mul(q, z)?),
                |z| g.mul(&q_inv, &s.dilate(x, eps.inv(), z)?),
            )?;
            CanonicalElement::dilatation(c, *eps)
        }
    };
    let mut worst = 0.0_f64;
    for z in probe_points(s, &[a, b, &result]) {
        let lhs = apply_canonical(s, a, &apply_canonical(s, b, &z)?)?;
        let rhs = apply_canonical(s, &result, &z)?;
        worst = worst.max(coord_residual(&lhs, &rhs));
    }
    if worst.is_nan() || worst > tol {
        return Err(Error::NoConvergence(format!(
            "normal form {result} of {a} ∘ {b} is off by {worst:e}"
        )));
    }
    if let CanonicalElement::Dilatation { center, .. } = &result {
        let r = s.domain().closeness_radius();
        if r.is_finite() && s.dist(&s.origin(), center)? > r {
            return Err(Error::DomainViolation(format!(
                "centre {center} leaves the working domain"
            )));
        }
    }
    Ok(result)
}

/// Left fold of [`compose_canonical`] over the factors of `w`.
pub fn normalize_word(s: &dyn DilatationStructure, w: &Word, tol: f64) -> Result<CanonicalElement> {
    require_linear_group(s)?;
    w.factors()[0].center.check_dim(s.dimension())?;
    let mut acc: Option<CanonicalElement> = None;
    for f in w.factors() {
        let next = CanonicalElement::dilatation(f.center.clone(), f.coeff);
        acc = Some(match acc {
            None => next,
            Some(prev) => compose_canonical(s, &prev, &next, tol)?,
        });
    }
    Ok(acc.expect("non-empty word"))
}

/// `max_z` residual between applying `w` factor by factor and applying `e`.
pub fn verify_normal_form(
    s: &dyn DilatationStructure,
    w: &Word,
    e: &CanonicalElement,
    zs: &[Point],
    tol: f64,
) -> Result<CheckReport> {
    let mut worst = Worst::new("normal-form");
    for z in zs {
        let lhs = w.apply(s, z)?;
        let rhs = apply_canonical(s, e, z)?;
        worst.record(coord_residual(&lhs, &rhs), || {
            Witness::default().point("z", z)
        });
    }
    Ok(worst.finish(tol))
}

/// A seeded random word of `len` factors with centres in the sampling box
/// and coefficients drawn from `coeffs`.
pub fn random_word(
    s: &dyn DilatationStructure,
    sampler: &mut Sampler,
    len: usize,
    coeffs: &[f64],
) -> Result<Word> {
    use rand::Rng;
    let factors = (0..len)
        .map(|_| {
            let center = sampler.point(s);
            let k = sampler.rng().gen_range(0..coeffs.len());
            Ok(DilatationMap {
                center,
                coeff: Scalar::new(coeffs[k])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Word::new(factors)
}
