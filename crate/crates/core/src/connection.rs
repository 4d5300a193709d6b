//! Connection coefficients at a point, for the three connection kinds.
//!
//! * `Horizontal` -- the unique metric, torsion-free connection of the
//!   adapted frame, with coefficients
//!   `{^k_ij} = 1/2 g^{kh} (dg_ih/dx^j + dg_jh/dx^i - dg_ij/dx^h)`.
//! * `Sns(pi)` -- semi-symmetric metric transformation
//!   `G^k_ij = {^k_ij} + d_i^k pi_j - g_ij pi^k`; its torsion is
//!   `pi_j d_i^k - pi_i d_j^k` and it stays metric.
//! * `ProjectiveSns(p, q)` -- `G^k_ij = {^k_ij} + p_i d_j^k + q_j d_i^k`,
//!   the coefficient form of the transformations preserving normal
//!   geodesics; generally not metric.
//!
//! Coefficient derivatives (`dgamma`) are assembled in closed form from the
//! metric jets and the 1-form jets -- finite differences appear only in the
//! test oracles.

use crate::chart::{AdaptedManifold, MetricAtPoint, Point};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet2;
use crate::tensor::{T3, T4};
use nalgebra::DMatrix;

/// A horizontal 1-form given by `l` component expressions over all `n`
/// coordinates (vertical dependence is allowed; frame derivatives pick up
/// the `-A_i^a d/dx^a` part).
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormField {
    components: Vec<Expr>,
}

impl OneFormField {
    pub fn new(components: Vec<Expr>, l: usize, n: usize) -> Result<OneFormField> {
        if components.len() != l {
            return Err(Error::Invalid(format!(
                "one-form needs {l} components, got {}",
                components.len()
            )));
        }
        for e in &components {
            if let Some(maxv) = e.max_var() {
                if maxv >= n {
                    return Err(Error::Invalid(format!(
                        "one-form component mentions x{} but n = {n}",
                        maxv + 1
                    )));
                }
            }
        }
        Ok(OneFormField { components })
    }

    pub fn parse(strings: &[String], l: usize, n: usize) -> Result<OneFormField> {
        let components = strings
            .iter()
            .map(|s| Expr::parse(s, n))
            .collect::<Result<Vec<_>>>()?;
        OneFormField::new(components, l, n)
    }

    /// Parse a comma-separated component list, e.g. `"x1,0,0"`.
    pub fn parse_csv(text: &str, l: usize, n: usize) -> Result<OneFormField> {
        let parts: Vec<String> = text.split(',').map(|s| s.trim().to_string()).collect();
        OneFormField::parse(&parts, l, n)
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.components.iter().map(|e| e.to_string()).collect()
    }

    /// Values and frame derivatives at a point.
    pub fn at(&self, m: &AdaptedManifold, p: &Point) -> Result<OneFormAtPoint> {
        let l = m.l();
        let jets: Vec<Jet2> = self
            .components
            .iter()
            .map(|e| e.eval_jet2(p.coords()))
            .collect::<Result<_>>()?;
        let mut v = Vec::with_capacity(l);
        let mut d = DMatrix::zeros(l, l);
        for (i, jet) in jets.iter().enumerate() {
            v.push(jet.value());
            for mi in 0..l {
                d[(mi, i)] = m.frame_component(jet, mi, p)?;
            }
        }
        Ok(OneFormAtPoint { v, d })
    }
}

/// Evaluated 1-form: component values and their frame derivatives.
#[derive(Debug, Clone)]
pub struct OneFormAtPoint {
    /// `v[i] = pi_i`.
    pub v: Vec<f64>,
    /// `d[(m, i)] = e_m(pi_i)`.
    pub d: DMatrix<f64>,
}

/// Which connection to build.
#[derive(Debug, Clone)]
pub enum ConnectionSpec {
    Horizontal,
    Sns { pi: OneFormField },
    ProjectiveSns { p: OneFormField, q: OneFormField },
}

/// Coefficients and their frame derivatives at a point.
///
/// Index layout: `gamma.get(i, j, k)` is the coefficient with lower pair
/// `(i, j)` and upper index `k`; `dgamma.get(m, i, j, k)` is its frame
/// derivative `e_m(G^k_ij)`.
#[derive(Debug, Clone)]
pub struct ChristoffelAtPoint {
    pub gamma: T3,
    pub dgamma: T4,
}

/// Horizontal connection coefficients and derivatives from metric jets.
pub(crate) fn horizontal_from_metric(metric: &MetricAtPoint) -> ChristoffelAtPoint {
    let l = metric.g.nrows();
    let mut gamma = T3::zeros(l);
    let mut dgamma = T4::zeros(l);
    for i in 0..l {
        for j in 0..l {
            for k in 0..l {
                let mut sum = 0.0;
                for h in 0..l {
                    sum += metric.ginv[(k, h)]
                        * (metric.dg.get(i, h, j) + metric.dg.get(j, h, i)
                            - metric.dg.get(i, j, h));
                }
                gamma.set(i, j, k, 0.5 * sum);
            }
        }
    }
    for m in 0..l {
        let dginv_m = metric.dginv(m);
        for i in 0..l {
            for j in 0..l {
                for k in 0..l {
                    let mut sum = 0.0;
                    for h in 0..l {
                        let bracket = metric.dg.get(i, h, j) + metric.dg.get(j, h, i)
                            - metric.dg.get(i, j, h);
                        let dbracket = metric.ddg.get(i, h, j, m) + metric.ddg.get(j, h, i, m)
                            - metric.ddg.get(i, j, h, m);
                        sum += dginv_m[(k, h)] * bracket + metric.ginv[(k, h)] * dbracket;
                    }
                    dgamma.set(m, i, j, k, 0.5 * sum);
                }
            }
        }
    }
    ChristoffelAtPoint { gamma, dgamma }
}

/// Coefficients for `spec` from precomputed metric data; shared by the
/// curvature and check runners to avoid re-evaluating metric jets.
pub(crate) fn coeffs_from_metric(
    m: &AdaptedManifold,
    spec: &ConnectionSpec,
    metric: &MetricAtPoint,
    p: &Point,
) -> Result<ChristoffelAtPoint> {
    let l = m.l();
    let mut ch = horizontal_from_metric(metric);
    match spec {
        ConnectionSpec::Horizontal => {}
        ConnectionSpec::Sns { pi } => {
            let pi = pi.at(m, p)?;
            // pi^k = g^{ke} pi_e and its frame derivatives; g is vertical-
            // independent, so e_m(g^{ke}) is the plain horizontal partial.
            let piv = DMatrix::from_column_slice(l, 1, &pi.v);
            let piup = &metric.ginv * &piv;
            let mut dpiup = DMatrix::zeros(l, l); // [(m, k)] = e_m(pi^k)
            for mi in 0..l {
                let dginv_m = metric.dginv(mi);
                for k in 0..l {
                    let mut s = 0.0;
                    for e in 0..l {
                        s += dginv_m[(k, e)] * pi.v[e] + metric.ginv[(k, e)] * pi.d[(mi, e)];
                    }
                    dpiup[(mi, k)] = s;
                }
            }
            for i in 0..l {
                for j in 0..l {
                    for k in 0..l {
                        let mut v = -metric.g[(i, j)] * piup[(k, 0)];
                        if i == k {
                            v += pi.v[j];
                        }
                        ch.gamma.add_to(i, j, k, v);
                        for mi in 0..l {
                            let mut dv = -metric.dg.get(i, j, mi) * piup[(k, 0)]
                                - metric.g[(i, j)] * dpiup[(mi, k)];
                            if i == k {
                                dv += pi.d[(mi, j)];
                            }
                            ch.dgamma.add_to(mi, i, j, k, dv);
                        }
                    }
                }
            }
        }
        ConnectionSpec::ProjectiveSns { p: pf, q: qf } => {
            let pv = pf.at(m, p)?;
            let qv = qf.at(m, p)?;
            for i in 0..l {
                for j in 0..l {
                    for k in 0..l {
                        let mut v = 0.0;
                        if j == k {
                            v += pv.v[i];
                        }
                        if i == k {
                            v += qv.v[j];
                        }
                        ch.gamma.add_to(i, j, k, v);
                        for mi in 0..l {
                            let mut dv = 0.0;
                            if j == k {
                                dv += pv.d[(mi, i)];
                            }
                            if i == k {
                                dv += qv.d[(mi, j)];
                            }
                            ch.dgamma.add_to(mi, i, j, k, dv);
                        }
                    }
                }
            }
        }
    }
    Ok(ch)
}

/// Coefficients of the horizontal connection at `p`.
pub fn christoffel_horizontal(m: &AdaptedManifold, p: &Point) -> Result<ChristoffelAtPoint> {
    Ok(horizontal_from_metric(&m.metric_at(p)?))
}

/// Coefficients of any [`ConnectionSpec`] at `p`.
pub fn connection_coeffs(
    m: &AdaptedManifold,
    spec: &ConnectionSpec,
    p: &Point,
) -> Result<ChristoffelAtPoint> {
    let metric = m.metric_at(p)?;
    coeffs_from_metric(m, spec, &metric, p)
}

/// Torsion `T^k_ij = G^k_ij - G^k_ji`; valid in adapted frames because
/// `[e_i, e_j]` has no horizontal part.
pub fn torsion(m: &AdaptedManifold, spec: &ConnectionSpec, p: &Point) -> Result<T3> {
    let ch = connection_coeffs(m, spec, p)?;
    let l = m.l();
    let mut t = T3::zeros(l);
    for i in 0..l {
        for j in 0..l {
            for k in 0..l {
                t.set(i, j, k, ch.gamma.get(i, j, k) - ch.gamma.get(j, i, k));
            }
        }
    }
    Ok(t)
}

/// Metricity residual `max |e_i(g_jk) - G^e_ij g_ek - G^e_ik g_je|`;
/// < 1e-10 for the two metric kinds, generically nonzero for the
/// projective kind.
pub fn compatibility_residual(
    m: &AdaptedManifold,
    spec: &ConnectionSpec,
    p: &Point,
) -> Result<f64> {
    let metric = m.metric_at(p)?;
    let ch = coeffs_from_metric(m, spec, &metric, p)?;
    Ok(compatibility_from_parts(&metric, &ch))
}

pub(crate) fn compatibility_from_parts(metric: &MetricAtPoint, ch: &ChristoffelAtPoint) -> f64 {
    let l = metric.g.nrows();
    let mut worst = 0.0_f64;
    for i in 0..l {
        for j in 0..l {
            for k in 0..l {
                // e_i(g_jk) equals the plain partial: g is vertical-independent.
                let mut r = metric.dg.get(j, k, i);
                for e in 0..l {
                    r -= ch.gamma.get(i, j, e) * metric.g[(e, k)];
                    r -= ch.gamma.get(i, k, e) * metric.g[(j, e)];
                }
                worst = worst.max(r.abs());
            }
        }
    }
    worst
}
