//! Dilatation structures on concrete metric spaces.
//!
//! The crate provides
//!
//! * a [`DilatationStructure`] interface with the derived operators
//!   `Δ^x_ε`, `Σ^x_ε` and the cone quotient ([`structure`]);
//! * Euclidean, Heisenberg, step-2 Carnot and spherical models ([`models`]);
//! * numerical checks of the axioms, the norm axioms and linearity with limit
//!   extrapolation ([`axioms`], [`extrapolate`]);
//! * the metric tangent space at a point ([`tangent`]);
//! * the two-sequence Menelaos solver and its oracles ([`menelaos`]);
//! * normal forms of words of dilatations ([`semigroup`]);
//! * the batch driver behind the `dilatox` binary ([`driver`]).

pub mod axioms;
pub mod driver;
pub mod error;
pub mod extrapolate;
pub mod menelaos;
pub mod models;
pub mod point;
pub mod sampling;
pub mod semigroup;
pub mod structure;
pub mod tangent;

pub use axioms::CheckReport;
pub use error::{Error, Result};
pub use extrapolate::{LimitEstimate, LimitSettings, ToleranceSchedule};
pub use models::{make_dilatation_structure, Model, ModelDescriptor};
pub use point::{coord_residual, Point, Scalar, Tolerance};
pub use structure::{
    cone_quotient, delta2, dilate, inv_eps, sigma_eps, ConicalGroup, DilatationStructure,
    GroupStructure, Linearity, ModelDomain,
};
