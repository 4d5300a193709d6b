//! Characteristic tensors and trace-adjusted (Weyl-type) curvature tensors.
//!
//! For a 1-form `pi` the characteristic tensor is
//!
//! ```text
//! pi_ik = nabla_i pi_k - pi_i pi_k + 1/2 g_ik |pi|^2,
//! nabla_i pi_j = e_i(pi_j) - {^e_ij} pi_e,       alpha = pi_i^i,
//! ```
//!
//! the quadratic object controlling how curvature changes under the
//! semi-symmetric transformation. The conformal- and projective-type tensors
//!
//! ```text
//! C^h_ijk = R^h_ijk - (d_j^h R_ik - d_i^h R_jk + g_ik R^h_j - g_jk R^h_i)/(l-2)
//!           + R (g_ik d_j^h - g_jk d_i^h) / ((l-1)(l-2))
//! W^h_ijk = R^h_ijk - (d_j^h R_ik - d_i^h R_jk)/(l-1)
//! ```
//!
//! are one formula each, parameterized by the curvature fed in: horizontal
//! curvature gives the hatted tensors, SNS curvature the unhatted ones and
//! projective-SNS curvature the tilde variant. All relation residuals here
//! compute both sides through independent code paths.

use crate::chart::{AdaptedManifold, MetricAtPoint, Point};
use crate::connection::{
    coeffs_from_metric, ChristoffelAtPoint, ConnectionSpec, OneFormAtPoint, OneFormField,
};
use crate::curvature::{complete_curvature, curvature_from_parts, CurvatureAtPoint};
use crate::error::{Error, Result};
use crate::tensor::T4;
use nalgebra::DMatrix;

/// Characteristic data of a 1-form at a point.
#[derive(Debug, Clone)]
pub struct CharTensors {
    /// `pi_ik` (not symmetric unless `nabla pi` is).
    pub pi_low: DMatrix<f64>,
    /// `pi_i^h = pi_ik g^{kh}`.
    pub pi_mixed: DMatrix<f64>,
    /// `alpha = pi_i^i`.
    pub alpha: f64,
    /// `nabla_i pi_j`.
    pub nabla_pi: DMatrix<f64>,
}

pub(crate) fn char_tensor_from_parts(
    m: &AdaptedManifold,
    pi: &OneFormField,
    metric: &MetricAtPoint,
    horizontal: &ChristoffelAtPoint,
    p: &Point,
) -> Result<CharTensors> {
    let l = m.l();
    let pi_at = pi.at(m, p)?;
    let mut nabla = DMatrix::zeros(l, l);
    for i in 0..l {
        for j in 0..l {
            let mut v = pi_at.d[(i, j)];
            for e in 0..l {
                v -= horizontal.gamma.get(i, j, e) * pi_at.v[e];
            }
            nabla[(i, j)] = v;
        }
    }
    let piv = DMatrix::from_column_slice(l, 1, &pi_at.v);
    let norm2 = (piv.transpose() * &metric.ginv * &piv)[(0, 0)];
    let mut pi_low = DMatrix::zeros(l, l);
    for i in 0..l {
        for k in 0..l {
            pi_low[(i, k)] =
                nabla[(i, k)] - pi_at.v[i] * pi_at.v[k] + 0.5 * metric.g[(i, k)] * norm2;
        }
    }
    let pi_mixed = &pi_low * &metric.ginv;
    let alpha = pi_mixed.trace();
    Ok(CharTensors {
        pi_low,
        pi_mixed,
        alpha,
        nabla_pi: nabla,
    })
}

/// Characteristic tensor of `pi` at `p` (horizontal covariant derivative,
/// then the quadratic completion).
pub fn char_tensor(m: &AdaptedManifold, pi: &OneFormField, p: &Point) -> Result<CharTensors> {
    let metric = m.metric_at(p)?;
    let horizontal = coeffs_from_metric(m, &ConnectionSpec::Horizontal, &metric, p)?;
    char_tensor_from_parts(m, pi, &metric, &horizontal, p)
}

/// The curvature correction induced by a semi-symmetric transformation:
/// `d_j^h pi_ik - d_i^h pi_jk + pi_j^h g_ik - pi_i^h g_jk`.
pub(crate) fn sns_correction(char_t: &CharTensors, metric: &MetricAtPoint) -> T4 {
    let l = metric.g.nrows();
    T4::from_fn(l, |i, j, k, h| {
        let mut v =
            char_t.pi_mixed[(j, h)] * metric.g[(i, k)] - char_t.pi_mixed[(i, h)] * metric.g[(j, k)];
        if j == h {
            v += char_t.pi_low[(i, k)];
        }
        if i == h {
            v -= char_t.pi_low[(j, k)];
        }
        v
    })
}

/// Difference `W - W_hat` predicted from the characteristic tensor alone:
/// `(d_j^h pi_ik - d_i^h pi_jk)/(l-1) + (g_ik pi_j^h - g_jk pi_i^h)
///  - alpha (d_j^h g_ik - d_i^h g_jk)/(l-1)`.
pub(crate) fn projective_correction(char_t: &CharTensors, metric: &MetricAtPoint) -> T4 {
    let l = metric.g.nrows();
    let lm1 = (l - 1) as f64;
    T4::from_fn(l, |i, j, k, h| {
        let mut v =
            metric.g[(i, k)] * char_t.pi_mixed[(j, h)] - metric.g[(j, k)] * char_t.pi_mixed[(i, h)];
        if j == h {
            v += char_t.pi_low[(i, k)] / lm1 - char_t.alpha * metric.g[(i, k)] / lm1;
        }
        if i == h {
            v -= char_t.pi_low[(j, k)] / lm1 - char_t.alpha * metric.g[(j, k)] / lm1;
        }
        v
    })
}

/// Conformal-type trace adjustment of `curv`; requires `l >= 3`.
pub fn conformal_tensor(curv: &CurvatureAtPoint, metric: &MetricAtPoint, l: usize) -> Result<T4> {
    if l < 3 {
        return Err(Error::EllTooSmall {
            what: "conformal tensor",
            l,
        });
    }
    let lm1 = (l - 1) as f64;
    let lm2 = (l - 2) as f64;
    let ric_mixed = &curv.ricci * &metric.ginv;
    Ok(T4::from_fn(l, |i, j, k, h| {
        let mut v = curv.r_mixed.get(i, j, k, h);
        let mut trace_part =
            metric.g[(i, k)] * ric_mixed[(j, h)] - metric.g[(j, k)] * ric_mixed[(i, h)];
        if j == h {
            trace_part += curv.ricci[(i, k)];
        }
        if i == h {
            trace_part -= curv.ricci[(j, k)];
        }
        v -= trace_part / lm2;
        let mut scalar_part = 0.0;
        if j == h {
            scalar_part += metric.g[(i, k)];
        }
        if i == h {
            scalar_part -= metric.g[(j, k)];
        }
        v + curv.scalar * scalar_part / (lm1 * lm2)
    }))
}

/// Projective-type trace adjustment of `curv`; defined for `l >= 2`.
pub fn projective_tensor(curv: &CurvatureAtPoint, l: usize) -> T4 {
    let lm1 = (l - 1) as f64;
    T4::from_fn(l, |i, j, k, h| {
        let mut v = curv.r_mixed.get(i, j, k, h);
        if j == h {
            v -= curv.ricci[(i, k)] / lm1;
        }
        if i == h {
            v += curv.ricci[(j, k)] / lm1;
        }
        v
    })
}

/// Residuals of the curvature/scalar/trace-grouped/projective relations
/// between the horizontal connection and the SNS connection of `pi`, each
/// side computed through its own path.
#[derive(Debug, Clone)]
pub struct RelationResiduals {
    /// Direct SNS curvature vs horizontal curvature plus correction.
    pub eq33: f64,
    /// `|R - K - 2(l-1) alpha|`.
    pub eq35: f64,
    /// Trace-grouped identity; `None` when `l = 2`.
    pub eq38: Option<f64>,
    /// Projective tensors vs the characteristic correction.
    pub eq311_w: f64,
}

pub fn relation_residuals(
    m: &AdaptedManifold,
    pi: &OneFormField,
    p: &Point,
) -> Result<RelationResiduals> {
    let l = m.l();
    let metric = m.metric_at(p)?;
    let horizontal = coeffs_from_metric(m, &ConnectionSpec::Horizontal, &metric, p)?;
    let k_curv = curvature_from_parts(&metric, &horizontal);
    let sns_ch = coeffs_from_metric(m, &ConnectionSpec::Sns { pi: pi.clone() }, &metric, p)?;
    let r_curv = curvature_from_parts(&metric, &sns_ch);
    let char_t = char_tensor_from_parts(m, pi, &metric, &horizontal, p)?;

    let corr = sns_correction(&char_t, &metric);
    let mut eq33 = 0.0_f64;
    for i in 0..l {
        for j in 0..l {
            for k in 0..l {
                for h in 0..l {
                    let rhs = k_curv.r_mixed.get(i, j, k, h) + corr.get(i, j, k, h);
                    eq33 = eq33.max((r_curv.r_mixed.get(i, j, k, h) - rhs).abs());
                }
            }
        }
    }

    let eq35 = (r_curv.scalar - k_curv.scalar - 2.0 * (l as f64 - 1.0) * char_t.alpha).abs();

    let eq38 = if l >= 3 {
        let lhs = trace_grouped(&r_curv, &metric, l);
        let rhs = trace_grouped(&k_curv, &metric, l);
        Some(lhs.max_abs_diff(&rhs))
    } else {
        None
    };

    let w_r = projective_tensor(&r_curv, l);
    let w_k = projective_tensor(&k_curv, l);
    let pcorr = projective_correction(&char_t, &metric);
    let mut eq311_w = 0.0_f64;
    for i in 0..l {
        for j in 0..l {
            for k in 0..l {
                for h in 0..l {
                    let rhs = w_k.get(i, j, k, h) + pcorr.get(i, j, k, h);
                    eq311_w = eq311_w.max((w_r.get(i, j, k, h) - rhs).abs());
                }
            }
        }
    }

    Ok(RelationResiduals {
        eq33,
        eq35,
        eq38,
        eq311_w,
    })
}

/// `R^h_ijk` minus its full trace grouping
/// `{d_j^h (R_ik - R g_ik / (2(l-1))) - d_i^h (R_jk - R g_jk / (2(l-1))) +
/// g_ik (R^h_j - R d_j^h / (2(l-1))) - g_jk (R^h_i - R d_i^h / (2(l-1)))} / (l-2)`,
/// equal between the horizontal and SNS curvatures.
fn trace_grouped(curv: &CurvatureAtPoint, metric: &MetricAtPoint, l: usize) -> T4 {
    let lm1 = (l - 1) as f64;
    let lm2 = (l - 2) as f64;
    let ric_mixed = &curv.ricci * &metric.ginv;
    let half = curv.scalar / (2.0 * lm1);
    T4::from_fn(l, |i, j, k, h| {
        let mut grouped = metric.g[(i, k)]
            * (ric_mixed[(j, h)] - half * f64::from(u8::from(j == h)))
            - metric.g[(j, k)] * (ric_mixed[(i, h)] - half * f64::from(u8::from(i == h)));
        if j == h {
            grouped += curv.ricci[(i, k)] - half * metric.g[(i, k)];
        }
        if i == h {
            grouped -= curv.ricci[(j, k)] - half * metric.g[(j, k)];
        }
        curv.r_mixed.get(i, j, k, h) - grouped / lm2
    })
}

/// Auxiliary tensors of a projective transformation with 1-forms `p`, `q`,
/// written through `phi = (p+q)/2` and `rho = (q-p)/2`.
#[derive(Debug, Clone)]
pub struct ProjectiveAux {
    /// `beta_ij = nabla_i p_j - nabla_j p_i`; antisymmetric by construction.
    pub beta: DMatrix<f64>,
    /// `alpha_ij = nabla_i q_j - q_i q_j`.
    pub alpha_t: DMatrix<f64>,
    /// `phi_ij = nabla_i phi_j - phi_i phi_j`.
    pub phi_ij: DMatrix<f64>,
    /// `rho_ij = nabla_i rho_j - rho_i rho_j`.
    pub rho_ij: DMatrix<f64>,
}

fn covariant(l: usize, form: &OneFormAtPoint, horizontal: &ChristoffelAtPoint) -> DMatrix<f64> {
    let mut nabla = DMatrix::zeros(l, l);
    for i in 0..l {
        for j in 0..l {
            let mut v = form.d[(i, j)];
            for e in 0..l {
                v -= horizontal.gamma.get(i, j, e) * form.v[e];
            }
            nabla[(i, j)] = v;
        }
    }
    nabla
}

fn combine(a: &OneFormAtPoint, b: &OneFormAtPoint, ca: f64, cb: f64) -> OneFormAtPoint {
    OneFormAtPoint {
        v: a.v.iter().zip(&b.v).map(|(x, y)| ca * x + cb * y).collect(),
        d: ca * &a.d + cb * &b.d,
    }
}

pub fn projective_aux(
    m: &AdaptedManifold,
    p_form: &OneFormField,
    q_form: &OneFormField,
    point: &Point,
) -> Result<ProjectiveAux> {
    let metric = m.metric_at(point)?;
    let horizontal = coeffs_from_metric(m, &ConnectionSpec::Horizontal, &metric, point)?;
    projective_aux_from_parts(m, p_form, q_form, &horizontal, point)
}

pub(crate) fn projective_aux_from_parts(
    m: &AdaptedManifold,
    p_form: &OneFormField,
    q_form: &OneFormField,
    horizontal: &ChristoffelAtPoint,
    point: &Point,
) -> Result<ProjectiveAux> {
    let l = m.l();
    let p_at = p_form.at(m, point)?;
    let q_at = q_form.at(m, point)?;
    let phi = combine(&p_at, &q_at, 0.5, 0.5);
    let rho = combine(&q_at, &p_at, 0.5, -0.5);

    let quad = |form: &OneFormAtPoint| -> DMatrix<f64> {
        let nabla = covariant(l, form, horizontal);
        let mut t = nabla;
        for i in 0..l {
            for j in 0..l {
                t[(i, j)] -= form.v[i] * form.v[j];
            }
        }
        t
    };
    let phi_ij = quad(&phi);
    let rho_ij = quad(&rho);
    // beta from p directly (its own path; equals phi_ij - phi_ji + rho_ji - rho_ij)
    let nabla_p = covariant(l, &p_at, horizontal);
    let beta = &nabla_p - nabla_p.transpose();
    // alpha from q directly (its own path; equals phi_ij + rho_ij - phi_i rho_j - phi_j rho_i)
    let alpha_t = quad(&q_at);
    Ok(ProjectiveAux {
        beta,
        alpha_t,
        phi_ij,
        rho_ij,
    })
}

/// Projective-SNS curvature reconstructed from horizontal curvature:
/// `R~^h_ijk = K^h_ijk + beta_ij d_k^h + alpha_ik d_j^h - alpha_jk d_i^h`,
/// the independent counterpart to
/// `curvature_direct(ProjectiveSns { p, q }, ..)`.
pub fn rtilde_via_relation(
    m: &AdaptedManifold,
    p_form: &OneFormField,
    q_form: &OneFormField,
    point: &Point,
) -> Result<CurvatureAtPoint> {
    let l = m.l();
    let metric = m.metric_at(point)?;
    let horizontal = coeffs_from_metric(m, &ConnectionSpec::Horizontal, &metric, point)?;
    let k_curv = curvature_from_parts(&metric, &horizontal);
    let aux = projective_aux_from_parts(m, p_form, q_form, &horizontal, point)?;
    let r = T4::from_fn(l, |i, j, k, h| {
        let mut v = k_curv.r_mixed.get(i, j, k, h);
        if k == h {
            v += aux.beta[(i, j)];
        }
        if j == h {
            v += aux.alpha_t[(i, k)];
        }
        if i == h {
            v -= aux.alpha_t[(j, k)];
        }
        v
    });
    Ok(complete_curvature(r, &metric))
}

/// `max_{i<j} |e_i(p_j) - e_j(p_i)|`; zero means horizontally closed at `p`
/// (the bracket term of the exterior derivative has no horizontal part in
/// adapted frames).
pub fn closedness_check(m: &AdaptedManifold, form: &OneFormField, p: &Point) -> Result<f64> {
    let at = form.at(m, p)?;
    let l = m.l();
    let mut worst = 0.0_f64;
    for i in 0..l {
        for j in i + 1..l {
            worst = worst.max((at.d[(i, j)] - at.d[(j, i)]).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::curvature::curvature_direct;
    use crate::tol;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords.to_vec()).unwrap()
    }

    fn form(m: &AdaptedManifold, parts: &[&str]) -> OneFormField {
        let strings: Vec<String> = parts.iter().map(|s| s.to_string()).collect();
        OneFormField::parse(&strings, m.l(), m.n()).unwrap()
    }

    fn random_form(m: &AdaptedManifold, seed: u64) -> OneFormField {
        crate::verify::random_one_form(m, seed, 2, 0.5)
    }

    #[test]
    fn char_tensor_zero_form() {
        let m = catalog::get("hyperbolic3").unwrap().manifold;
        let c = char_tensor(&m, &form(&m, &["0", "0", "0"]), &pt(&[0.1, 0.2, 1.0, 0.0])).unwrap();
        assert_eq!(c.alpha, 0.0);
        assert_eq!(c.pi_low.abs().max(), 0.0);
    }

    #[test]
    fn char_tensor_constant_pi_on_flat() {
        // pi = (1,0,0) on the flat entry: nabla pi = 0,
        // pi_ik = -pi_i pi_k + d_ik/2 = diag(-1/2, 1/2, 1/2), alpha = 1/2.
        let m = catalog::get("flat3").unwrap().manifold;
        let c = char_tensor(&m, &form(&m, &["1", "0", "0"]), &pt(&[0.0; 5])).unwrap();
        assert_eq!(c.nabla_pi.abs().max(), 0.0);
        assert_eq!(c.pi_low[(0, 0)], -0.5);
        assert_eq!(c.pi_low[(1, 1)], 0.5);
        assert_eq!(c.pi_low[(2, 2)], 0.5);
        assert_eq!(c.pi_low[(0, 1)], 0.0);
        assert!((c.alpha - 0.5).abs() < 1e-15);
    }

    #[test]
    fn char_tensor_exact_gradient_at_origin() {
        // pi = d_h(x1^2/2) = (x1,0,0) at x1 = 0: pi_ik = diag(1,0,0), alpha = 1.
        let m = catalog::get("flat3").unwrap().manifold;
        let c = char_tensor(&m, &form(&m, &["x1", "0", "0"]), &pt(&[0.0; 5])).unwrap();
        assert_eq!(c.pi_low[(0, 0)], 1.0);
        assert_eq!(c.pi_low[(1, 1)], 0.0);
        assert!((c.alpha - 1.0).abs() < 1e-15);
    }

    #[test]
    fn char_tensor_invariants() {
        let m = catalog::get("hyperbolic3").unwrap().manifold;
        let pi = random_form(&m, 5);
        for s in 0..10 {
            let mut rng = crate::sample::stream_rng(12, s);
            let (p, metric) = crate::sample::sample_point(&m, &mut rng).unwrap();
            let c = char_tensor(&m, &pi, &p).unwrap();
            let dev = (&c.pi_low * &metric.ginv - &c.pi_mixed).abs().max();
            assert!(dev < tol::ALGEBRAIC);
            assert!((c.pi_mixed.trace() - c.alpha).abs() < tol::ALGEBRAIC);
        }
    }

    #[test]
    fn conformal_rejects_l2() {
        let m = catalog::get("particle").unwrap().manifold;
        let p = pt(&[0.0, 0.0, 0.0]);
        let metric = m.metric_at(&p).unwrap();
        let c = curvature_direct(&m, &ConnectionSpec::Horizontal, &p).unwrap();
        assert!(matches!(
            conformal_tensor(&c, &metric, 2).unwrap_err(),
            Error::EllTooSmall { .. }
        ));
    }

    #[test]
    fn conformal_vanishes_on_flat_and_hyperbolic() {
        for name in ["flat3", "hyperbolic3"] {
            let m = catalog::get(name).unwrap().manifold;
            for s in 0..10 {
                let mut rng = crate::sample::stream_rng(13, s);
                let (p, metric) = crate::sample::sample_point(&m, &mut rng).unwrap();
                let curv = curvature_direct(&m, &ConnectionSpec::Horizontal, &p).unwrap();
                let c = conformal_tensor(&curv, &metric, m.l()).unwrap();
                assert!(c.max_abs() < tol::TWO_DERIVATIVE, "{name}: {}", c.max_abs());
            }
        }
    }

    #[test]
    fn conformal_is_trace_free() {
        // sum_j C^j_ijk = 0 for horizontal-kind curvature, including on a
        // random non-flat manifold
        let m = crate::verify::generate_random_manifold(
            &crate::verify::RandomMetricConfig {
                degree: 2,
                amplitude: 0.4,
                seed: 3,
            },
            5,
            3,
        );
        for s in 0..10 {
            let mut rng = crate::sample::stream_rng(14, s);
            let (p, metric) = crate::sample::sample_point(&m, &mut rng).unwrap();
            let curv = curvature_direct(&m, &ConnectionSpec::Horizontal, &p).unwrap();
            let c = conformal_tensor(&curv, &metric, 3).unwrap();
            let mut worst = 0.0_f64;
            for i in 0..3 {
                for k in 0..3 {
                    let mut tr = 0.0;
                    for j in 0..3 {
                        tr += c.get(i, j, k, j);
                    }
                    worst = worst.max(tr.abs());
                }
            }
            assert!(worst < tol::ONE_DERIVATIVE, "trace residual {worst}");
        }
    }

    #[test]
    fn projective_vanishes_where_it_should() {
        // flat: trivially; hyperbolic: constant curvature; particle: l = 2
        // where the formula collapses identically (2D curvature is pointwise
        // isotropic with the Gauss curvature as factor).
        for name in ["flat3", "hyperbolic3", "particle"] {
            let m = catalog::get(name).unwrap().manifold;
            for s in 0..10 {
                let mut rng = crate::sample::stream_rng(15, s);
                let (p, _) = crate::sample::sample_point(&m, &mut rng).unwrap();
                let curv = curvature_direct(&m, &ConnectionSpec::Horizontal, &p).unwrap();
                let w = projective_tensor(&curv, m.l());
                assert!(w.max_abs() < tol::TWO_DERIVATIVE, "{name}: {}", w.max_abs());
            }
        }
    }

    #[test]
    fn particle_curvature_is_pointwise_isotropic() {
        // oracle for the l = 2 collapse: R_ijkh = Kg (g_ih g_jk - g_jh g_ik)
        // with Kg = -1/(1+y^2)^2 the closed-form Gauss curvature
        let m = catalog::get("particle").unwrap().manifold;
        for s in 0..10 {
            let mut rng = crate::sample::stream_rng(16, s);
            let (p, metric) = crate::sample::sample_point(&m, &mut rng).unwrap();
            let y = p.coords()[1];
            let kg = -1.0 / (1.0 + y * y).powi(2);
            let curv = curvature_direct(&m, &ConnectionSpec::Horizontal, &p).unwrap();
            let mut worst = 0.0_f64;
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for h in 0..2 {
                            let iso = kg
                                * (metric.g[(i, h)] * metric.g[(j, k)]
                                    - metric.g[(j, h)] * metric.g[(i, k)]);
                            worst = worst.max((curv.r_low.get(i, j, k, h) - iso).abs());
                        }
                    }
                }
            }
            assert!(worst < 1e-12, "residual {worst}");
        }
    }

    #[test]
    fn relation_residuals_zero_pi() {
        let m = catalog::get("hyperbolic3").unwrap().manifold;
        let r = relation_residuals(&m, &form(&m, &["0", "0", "0"]), &pt(&[0.4, 0.0, 0.9, 0.1]))
            .unwrap();
        assert!(r.eq33 < tol::ALGEBRAIC);
        assert!(r.eq35 < tol::ALGEBRAIC);
        assert!(r.eq38.unwrap() < tol::ALGEBRAIC);
        assert!(r.eq311_w < tol::ALGEBRAIC);
    }

    #[test]
    fn relation_residuals_random_pi() {
        for name in ["flat3", "hyperbolic3", "particle", "heisenberg"] {
            let m = catalog::get(name).unwrap().manifold;
            for fs in 0..3 {
                let pi = random_form(&m, 100 + fs);
                for s in 0..5 {
                    let mut rng = crate::sample::stream_rng(17, s);
                    let (p, _) = crate::sample::sample_point(&m, &mut rng).unwrap();
                    let r = relation_residuals(&m, &pi, &p).unwrap();
                    assert!(r.eq33 < tol::TWO_DERIVATIVE, "{name} eq33 {}", r.eq33);
                    assert!(r.eq35 < tol::TWO_DERIVATIVE, "{name} eq35 {}", r.eq35);
                    if let Some(e38) = r.eq38 {
                        assert!(e38 < tol::TWO_DERIVATIVE, "{name} eq38 {e38}");
                    } else {
                        assert_eq!(m.l(), 2, "{name} skipped eq38 with l >= 3");
                    }
                    assert!(
                        r.eq311_w < tol::TWO_DERIVATIVE,
                        "{name} eq311 {}",
                        r.eq311_w
                    );
                }
            }
        }
    }

    #[test]
    fn recovery_formulas_reconstruct_char_tensor() {
        // pi_ik = (R_ik - K_ik - (R-K) g_ik / (2(l-1))) / (l-2) and its
        // mixed form, inverted from the curvature data, match char_tensor.
        let m = catalog::get("hyperbolic3").unwrap().manifold;
        let l = m.l();
        let pi = random_form(&m, 23);
        for s in 0..8 {
            let mut rng = crate::sample::stream_rng(18, s);
            let (p, metric) = crate::sample::sample_point(&m, &mut rng).unwrap();
            let k = curvature_direct(&m, &ConnectionSpec::Horizontal, &p).unwrap();
            let r = curvature_direct(&m, &ConnectionSpec::Sns { pi: pi.clone() }, &p).unwrap();
            let c = char_tensor(&m, &pi, &p).unwrap();
            let lm1 = (l - 1) as f64;
            let lm2 = (l - 2) as f64;
            let scal = (r.scalar - k.scalar) / (2.0 * lm1);
            let rec = (&r.ricci - &k.ricci - scal * &metric.g) / lm2;
            let dev = (&rec - &c.pi_low).abs().max();
            assert!(dev < tol::TWO_DERIVATIVE, "pi_low recovery {dev}");
            let rec_mixed = (&r.ricci * &metric.ginv
                - &k.ricci * &metric.ginv
                - scal * DMatrix::identity(l, l))
                / lm2;
            let dev = (&rec_mixed - &c.pi_mixed).abs().max();
            assert!(dev < tol::TWO_DERIVATIVE, "pi_mixed recovery {dev}");
        }
    }

    #[test]
    fn conformal_invariance_under_sns() {
        // the conformal-type tensor of the SNS curvature equals the one of
        // the horizontal curvature, for random pi on l >= 3 entries
        for name in ["flat3", "hyperbolic3"] {
            let m = catalog::get(name).unwrap().manifold;
            for fs in 0..5 {
                let pi = random_form(&m, 40 + fs);
                for s in 0..4 {
                    let mut rng = crate::sample::stream_rng(19, s);
                    let (p, metric) = crate::sample::sample_point(&m, &mut rng).unwrap();
                    let k = curvature_direct(&m, &ConnectionSpec::Horizontal, &p).unwrap();
                    let r =
                        curvature_direct(&m, &ConnectionSpec::Sns { pi: pi.clone() }, &p).unwrap();
                    let c_hat = conformal_tensor(&k, &metric, m.l()).unwrap();
                    let c = conformal_tensor(&r, &metric, m.l()).unwrap();
                    let dev = c.max_abs_diff(&c_hat);
                    assert!(dev < tol::TWO_DERIVATIVE, "{name}: C deviation {dev}");
                }
            }
        }
    }

    #[test]
    fn isotropic_char_tensor_leaves_projective_unchanged() {
        // substituting pi_ik := (alpha/l) g_ik into the projective
        // correction yields zero identically
        let m = catalog::get("hyperbolic3").unwrap().manifold;
        let l = m.l();
        for s in 0..6 {
            let mut rng = crate::sample::stream_rng(20, s);
            let (_, metric) = crate::sample::sample_point(&m, &mut rng).unwrap();
            let alpha = 0.37 + s as f64;
            let pi_low = (alpha / l as f64) * metric.g.clone();
            let pi_mixed = &pi_low * &metric.ginv;
            let c = CharTensors {
                pi_low,
                pi_mixed,
                alpha,
                nabla_pi: DMatrix::zeros(l, l),
            };
            let corr = projective_correction(&c, &metric);
            assert!(
                corr.max_abs() < tol::ALGEBRAIC,
                "residual {}",
                corr.max_abs()
            );
        }
    }

    #[test]
    fn projective_correction_contracts_to_isotropy_defect() {
        // contracting the projective correction with g^{jk} gives
        // -(l(l-2)/(l-1)) (pi_i^h - (alpha/l) d_i^h): the correction can
        // only vanish when the characteristic tensor is isotropic (l >= 3;
        // at l = 2 the contraction is identically zero)
        let m = catalog::get("hyperbolic3").unwrap().manifold;
        let l = m.l();
        let pi = random_form(&m, 83);
        for s in 0..6 {
            let mut rng = crate::sample::stream_rng(26, s);
            let (p, metric) = crate::sample::sample_point(&m, &mut rng).unwrap();
            let c = char_tensor(&m, &pi, &p).unwrap();
            let corr = projective_correction(&c, &metric);
            let coeff = -(l as f64) * (l as f64 - 2.0) / (l as f64 - 1.0);
            let mut worst = 0.0_f64;
            for i in 0..l {
                for h in 0..l {
                    let mut contracted = 0.0;
                    for j in 0..l {
                        for k in 0..l {
                            contracted += corr.get(i, j, k, h) * metric.ginv[(j, k)];
                        }
                    }
                    let defect =
                        c.pi_mixed[(i, h)] - (c.alpha / l as f64) * f64::from(u8::from(i == h));
                    worst = worst.max((contracted - coeff * defect).abs());
                }
            }
            assert!(
                worst < tol::ONE_DERIVATIVE,
                "contraction identity residual {worst}"
            );
        }
    }

    #[test]
    fn projective_aux_equal_forms() {
        let m = catalog::get("flat3").unwrap().manifold;
        let phi = form(&m, &["x1*x2", "x2^2", "0.3*x3"]);
        let aux = projective_aux(&m, &phi, &phi, &pt(&[0.2, -0.4, 0.5, 0.0, 0.0])).unwrap();
        // p = q means rho = 0 and beta_ij = phi_ij - phi_ji
        assert_eq!(aux.rho_ij.abs().max(), 0.0);
        let dev = (&aux.beta - (&aux.phi_ij - aux.phi_ij.transpose()))
            .abs()
            .max();
        assert!(dev < tol::ALGEBRAIC);
        // closed phi on the flat entry: beta = 0
        let closed = form(&m, &["x2", "x1", "0"]);
        let aux = projective_aux(&m, &closed, &closed, &pt(&[0.1, 0.7, -0.2, 0.0, 0.0])).unwrap();
        assert!(aux.beta.abs().max() < tol::ALGEBRAIC);
    }

    #[test]
    fn projective_aux_two_alpha_routes_agree() {
        let m = catalog::get("hyperbolic3").unwrap().manifold;
        let pf = random_form(&m, 61);
        let qf = random_form(&m, 62);
        for s in 0..8 {
            let mut rng = crate::sample::stream_rng(21, s);
            let (p, _) = crate::sample::sample_point(&m, &mut rng).unwrap();
            let aux = projective_aux(&m, &pf, &qf, &p).unwrap();
            let p_at = pf.at(&m, &p).unwrap();
            let q_at = qf.at(&m, &p).unwrap();
            let phi_v: Vec<f64> = p_at
                .v
                .iter()
                .zip(&q_at.v)
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            let rho_v: Vec<f64> = p_at
                .v
                .iter()
                .zip(&q_at.v)
                .map(|(a, b)| 0.5 * (b - a))
                .collect();
            let l = m.l();
            let mut worst = 0.0_f64;
            for i in 0..l {
                for j in 0..l {
                    let via_phi_rho = aux.phi_ij[(i, j)] + aux.rho_ij[(i, j)]
                        - phi_v[i] * rho_v[j]
                        - phi_v[j] * rho_v[i];
                    worst = worst.max((aux.alpha_t[(i, j)] - via_phi_rho).abs());
                }
            }
            assert!(
                worst < tol::ONE_DERIVATIVE,
                "alpha routes differ by {worst}"
            );
            // beta antisymmetric exactly
            assert_eq!((&aux.beta + aux.beta.transpose()).abs().max(), 0.0);
        }
    }

    #[test]
    fn lemma_construction_makes_alpha_proportional_to_metric() {
        // q_j = -2 x_j / (1 + |x_h|^2), p = 0 on the flat entry:
        // alpha_ij = -2 d_ij / (1 + |x_h|^2)
        let entry = catalog::get("flat3").unwrap();
        let q = entry.forms.get("lemma43_q").unwrap().clone();
        let p0 = entry.forms.get("zero").unwrap().clone();
        let m = entry.manifold;
        for s in 0..8 {
            let mut rng = crate::sample::stream_rng(22, s);
            let (p, _) = crate::sample::sample_point(&m, &mut rng).unwrap();
            let aux = projective_aux(&m, &p0, &q, &p).unwrap();
            let x = p.coords();
            let lam = -2.0 / (1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
            let mut worst = 0.0_f64;
            for i in 0..3 {
                for j in 0..3 {
                    let expect = if i == j { lam } else { 0.0 };
                    worst = worst.max((aux.alpha_t[(i, j)] - expect).abs());
                }
            }
            assert!(worst < 1e-12, "alpha deviation {worst}");
            assert!(aux.beta.abs().max() < 1e-12);
        }
    }

    #[test]
    fn rtilde_matches_direct_path() {
        for name in ["flat3", "hyperbolic3", "particle"] {
            let m = catalog::get(name).unwrap().manifold;
            let pf = random_form(&m, 71);
            let qf = random_form(&m, 72);
            for s in 0..5 {
                let mut rng = crate::sample::stream_rng(23, s);
                let (p, _) = crate::sample::sample_point(&m, &mut rng).unwrap();
                let direct = curvature_direct(
                    &m,
                    &ConnectionSpec::ProjectiveSns {
                        p: pf.clone(),
                        q: qf.clone(),
                    },
                    &p,
                )
                .unwrap();
                let rel = rtilde_via_relation(&m, &pf, &qf, &p).unwrap();
                let dev = direct.r_mixed.max_abs_diff(&rel.r_mixed);
                assert!(dev < tol::TWO_DERIVATIVE, "{name}: rtilde deviation {dev}");
                // contracted form R~_ik = K_ik + beta_ik + (l-1) alpha_ik
                let k = curvature_direct(&m, &ConnectionSpec::Horizontal, &p).unwrap();
                let aux = projective_aux(&m, &pf, &qf, &p).unwrap();
                let lm1 = (m.l() - 1) as f64;
                let expect = &k.ricci + &aux.beta + lm1 * &aux.alpha_t;
                let dev = (&rel.ricci - expect).abs().max();
                assert!(
                    dev < tol::TWO_DERIVATIVE,
                    "{name}: ricci form deviation {dev}"
                );
            }
        }
    }

    #[test]
    fn rtilde_zero_forms_is_horizontal() {
        let m = catalog::get("hyperbolic3").unwrap().manifold;
        let z = form(&m, &["0", "0", "0"]);
        let p = pt(&[0.0, 0.5, 1.2, -0.3]);
        let k = curvature_direct(&m, &ConnectionSpec::Horizontal, &p).unwrap();
        let r = rtilde_via_relation(&m, &z, &z, &p).unwrap();
        assert_eq!(k.r_mixed.max_abs_diff(&r.r_mixed), 0.0);
    }

    #[test]
    fn rtilde_lemma_witness_is_isotropic() {
        // flat entry with p = 0 and the lemma form: beta = 0 and
        // R~^h_ijk = lam (g_ik d_j^h - g_jk d_i^h), lam = -2/(1+|x_h|^2)
        let entry = catalog::get("flat3").unwrap();
        let q = entry.forms.get("lemma43_q").unwrap().clone();
        let p0 = entry.forms.get("zero").unwrap().clone();
        let m = entry.manifold;
        for s in 0..6 {
            let mut rng = crate::sample::stream_rng(24, s);
            let (p, metric) = crate::sample::sample_point(&m, &mut rng).unwrap();
            let x = p.coords();
            let lam = -2.0 / (1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
            let r = rtilde_via_relation(&m, &p0, &q, &p).unwrap();
            let mut worst = 0.0_f64;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        for h in 0..3 {
                            let mut expect = 0.0;
                            if j == h {
                                expect += lam * metric.g[(i, k)];
                            }
                            if i == h {
                                expect -= lam * metric.g[(j, k)];
                            }
                            worst = worst.max((r.r_mixed.get(i, j, k, h) - expect).abs());
                        }
                    }
                }
            }
            assert!(worst < 1e-11, "isotropic deviation {worst}");
        }
    }

    #[test]
    fn closedness_examples() {
        let m = catalog::get("flat3").unwrap().manifold;
        // exact horizontal differential of a horizontal-only function
        let f = crate::expr::Expr::parse("x1^2*x2 + x3", m.n()).unwrap();
        let df = catalog::dhf(&m, &f).unwrap();
        let p = pt(&[0.3, -0.2, 0.6, 0.0, 0.0]);
        assert!(closedness_check(&m, &df, &p).unwrap() < 1e-14);
        // p = (x2, 0, 0): residual exactly 1
        let nc = form(&m, &["x2", "0", "0"]);
        assert!((closedness_check(&m, &nc, &p).unwrap() - 1.0).abs() < 1e-15);
        // constants are closed
        let c = form(&m, &["0.4", "-2", "1"]);
        assert_eq!(closedness_check(&m, &c, &p).unwrap(), 0.0);
    }

    #[test]
    fn special_connection_symmetry_suite_both_branches() {
        // closed pi: the SNS curvature keeps the full symmetry suite;
        // non-closed pi: the pair-swap identity breaks by order one
        let m = catalog::get("flat3").unwrap().manifold;
        let f = crate::expr::Expr::parse("x1*x2 + 0.5*x2^2", m.n()).unwrap();
        let closed = catalog::dhf(&m, &f).unwrap();
        let open = form(&m, &["x2", "0", "0"]);
        for s in 0..6 {
            let mut rng = crate::sample::stream_rng(25, s);
            let (p, _) = crate::sample::sample_point(&m, &mut rng).unwrap();
            let c = char_tensor(&m, &closed, &p).unwrap();
            assert!((&c.nabla_pi - c.nabla_pi.transpose()).abs().max() < tol::ONE_DERIVATIVE);
            let suite = special_suite_residual(&m, &closed, &p);
            assert!(
                suite < tol::TWO_DERIVATIVE,
                "closed-branch residual {suite}"
            );
            let suite = special_suite_residual(&m, &open, &p);
            assert!(suite > 1e-2, "non-closed witness too small: {suite}");
        }
    }

    fn special_suite_residual(m: &AdaptedManifold, pi: &OneFormField, p: &Point) -> f64 {
        let curv = curvature_direct(m, &ConnectionSpec::Sns { pi: pi.clone() }, p).unwrap();
        let l = m.l();
        let mut worst = 0.0_f64;
        for i in 0..l {
            for j in 0..l {
                for k in 0..l {
                    for h in 0..l {
                        let r = curv.r_low.get(i, j, k, h);
                        worst = worst.max((r + curv.r_low.get(i, j, h, k)).abs());
                        worst = worst.max((r - curv.r_low.get(k, h, i, j)).abs());
                        worst = worst.max(
                            (r + curv.r_low.get(j, k, i, h) + curv.r_low.get(k, i, j, h)).abs(),
                        );
                    }
                }
            }
        }
        worst
    }
}
