//! Numerical differential geometry of nearly sub-Riemannian manifolds.
//!
//! A manifold is described in adapted coordinates `(x^1..x^l, x^{l+1}..x^n)`:
//! the first `l` coordinates are horizontal, the rest vertical. The horizontal
//! distribution is spanned by the adapted frame
//!
//! ```text
//! e_i = d/dx^i - A_i^a d/dx^a,        i = 1..l,  a = l+1..n,
//! ```
//!
//! and carries a metric `g_ij` that must not depend on the vertical
//! coordinates (the "nearly sub-Riemannian" condition). On top of that frame
//! the crate builds, at any sampled point:
//!
//! * the horizontal connection (the unique metric, torsion-free one) and its
//!   curvature, Ricci and scalar data ([`connection`], [`curvature`]),
//! * semi-symmetric metric (SNS) connections `G = {} + d pi - g pi` for a
//!   1-form `pi`, and projective transformations `G = {} + p d + q d` for a
//!   pair of 1-forms ([`connection`]),
//! * the characteristic tensor of a 1-form and the conformal- and
//!   projective-type trace adjustments of any curvature ([`weyl`]),
//! * residual-checked identities relating all of the above, packaged as named
//!   checks producing [`verify::Verdict`]s over seeded random sample points.
//!
//! Metric and Pfaffian entries are closed-form expressions in a small DSL
//! ([`expr`]); all derivatives are propagated exactly (up to rounding) with
//! second-order jets ([`jet`]), so identity residuals sit at rounding level
//! rather than finite-difference level.
//!
//! Everything is a pure function of `(manifold, point)`; sample sweeps run in
//! parallel when the `parallel` feature (default) is enabled and fall back to
//! a sequential loop otherwise, with bitwise-identical results either way.

// Index-form loops are kept throughout the tensor code: they mirror the
// component formulas they implement.
#![allow(clippy::needless_range_loop)]

pub mod catalog;
pub mod chart;
pub mod connection;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod jet;
pub mod sample;
pub mod tensor;
pub mod tol;
pub mod verify;
pub mod weyl;

pub use chart::{AdaptedManifold, MetricAtPoint, Point, ValidationReport};
pub use connection::{ChristoffelAtPoint, ConnectionSpec, OneFormField};
pub use curvature::CurvatureAtPoint;
pub use error::{Error, Result};
pub use expr::Expr;
pub use jet::Jet2;
pub use verify::{CheckConfig, RandomMetricConfig, Verdict};
