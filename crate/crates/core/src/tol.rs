//! Default residual tolerances, tiered by differentiation depth.
//!
//! Jets propagate derivatives exactly, so a residual only accumulates
//! rounding. Each extra differentiation of the metric roughly multiplies the
//! term count (and the cancellation) by the dimension, hence one decade per
//! tier. Witness constructions divide by `l-1`/`l-2` factors and quotients of
//! metric entries, which costs one more decade.

/// Identities that are pure algebra on already-computed tensors
/// (index shuffles, raise/lower round trips, torsion shape).
pub const ALGEBRAIC: f64 = 1e-12;

/// Identities involving one differentiation of the metric
/// (symmetry suite, Bianchi, metricity).
pub const ONE_DERIVATIVE: f64 = 1e-10;

/// Identities involving two differentiations (anything through curvature:
/// two-path relations, conformal/projective comparisons).
pub const TWO_DERIVATIVE: f64 = 1e-9;

/// Closed-form witness constructions layered on curvature data.
pub const WITNESS: f64 = 1e-8;
