//! Nearly sub-Riemannian manifolds in adapted coordinates.
//!
//! Coordinates are split `(x^1..x^l | x^{l+1}..x^n)` into horizontal and
//! vertical. The horizontal frame is `e_i = d/dx^i - A_i^a d/dx^a` with the
//! Pfaffian coefficients `A_i^a`, and the metric `g_ij = g(e_i, e_j)` lives on
//! horizontal indices only. "Nearly sub-Riemannian" means `dg_ij/dx^a = 0`
//! for every vertical `a`, which [`AdaptedManifold::validate`] checks
//! numerically at sampled
//! points.

use crate::connection::OneFormField;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet2;
use crate::tensor::{T3, T4};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// A point in adapted coordinates; first `l` entries horizontal.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Point> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid(format!(
                "non-finite point coordinates {coords:?}"
            )));
        }
        Ok(Point(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Manifold data: dimensions, metric entries, Pfaffian coefficients and a
/// rectangular sampling domain. Optional 1-forms (`pi`, `p`, `q`) ride along
/// from the definition file for use by the connection builders.
#[derive(Debug, Clone)]
pub struct AdaptedManifold {
    n: usize,
    l: usize,
    g: Vec<Vec<Expr>>,
    a: Vec<Vec<Expr>>,
    domain: Vec<[f64; 2]>,
    pub pi: Option<OneFormField>,
    pub p: Option<OneFormField>,
    pub q: Option<OneFormField>,
}

impl AdaptedManifold {
    /// Build and shape-check a manifold. `g` must be `l x l` and given
    /// structurally symmetric (equal ASTs across the diagonal); `a` is
    /// `l x (n-l)`; `domain` one `[lo, hi]` per coordinate.
    pub fn new(
        n: usize,
        l: usize,
        g: Vec<Vec<Expr>>,
        a: Vec<Vec<Expr>>,
        domain: Vec<[f64; 2]>,
    ) -> Result<AdaptedManifold> {
        if !(2 <= l && l < n) {
            return Err(Error::InvalidManifold(format!(
                "need 2 <= l < n, got l = {l}, n = {n}"
            )));
        }
        if g.len() != l || g.iter().any(|row| row.len() != l) {
            return Err(Error::InvalidManifold(format!("g must be {l} x {l}")));
        }
        if a.len() != l || a.iter().any(|row| row.len() != n - l) {
            return Err(Error::InvalidManifold(format!("A must be {l} x {}", n - l)));
        }
        if domain.len() != n {
            return Err(Error::InvalidManifold(format!(
                "domain must have {n} intervals"
            )));
        }
        for (c, d) in domain.iter().enumerate() {
            if !(d[0].is_finite() && d[1].is_finite() && d[0] < d[1]) {
                return Err(Error::InvalidManifold(format!(
                    "domain interval {} = [{}, {}] is not a finite [lo, hi] with lo < hi",
                    c + 1,
                    d[0],
                    d[1]
                )));
            }
        }
        for i in 0..l {
            for j in 0..i {
                if g[i][j] != g[j][i] {
                    return Err(Error::InvalidManifold(format!(
                        "g[{}][{}] and g[{}][{}] are not the same expression",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        let check_vars = |e: &Expr, what: &str| -> Result<()> {
            if let Some(maxv) = e.max_var() {
                if maxv >= n {
                    return Err(Error::InvalidManifold(format!(
                        "{what} mentions x{} but n = {n}",
                        maxv + 1
                    )));
                }
            }
            Ok(())
        };
        for row in &g {
            for e in row {
                check_vars(e, "metric entry")?;
            }
        }
        for row in &a {
            for e in row {
                check_vars(e, "Pfaffian entry")?;
            }
        }
        Ok(AdaptedManifold {
            n,
            l,
            g,
            a,
            domain,
            pi: None,
            p: None,
            q: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Horizontal dimension (the paper's `l`).
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn metric_expr(&self, i: usize, j: usize) -> &Expr {
        &self.g[i][j]
    }

    /// Pfaffian coefficient `A_i^a` with `a` counted from 0 (so `a = 0` is
    /// coordinate `x^{l+1}`).
    pub fn pfaffian_expr(&self, i: usize, a: usize) -> &Expr {
        &self.a[i][a]
    }

    pub fn domain(&self) -> &[[f64; 2]] {
        &self.domain
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        if p.len() != self.n {
            return Err(Error::Invalid(format!(
                "point has {} coordinates, manifold has n = {}",
                p.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// Metric data at `p`: values, inverse, and first/second horizontal
    /// partials, all from one jet sweep over the metric entries.
    pub fn metric_at(&self, p: &Point) -> Result<MetricAtPoint> {
        self.check_point(p)?;
        let l = self.l;
        let mut g = DMatrix::zeros(l, l);
        let mut dg = T3::zeros(l);
        let mut ddg = T4::zeros(l);
        for i in 0..l {
            for j in i..l {
                let jet = self.g[i][j].eval_jet2(p.coords())?;
                g[(i, j)] = jet.value();
                g[(j, i)] = jet.value();
                for k in 0..l {
                    dg.set(i, j, k, jet.grad()[k]);
                    dg.set(j, i, k, jet.grad()[k]);
                    for h in 0..l {
                        ddg.set(i, j, k, h, jet.hess(k, h));
                        ddg.set(j, i, k, h, jet.hess(k, h));
                    }
                }
            }
        }
        let chol = g
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite {
                point: p.coords().to_vec(),
            })?;
        let ginv = chol.inverse();
        Ok(MetricAtPoint { g, ginv, dg, ddg })
    }

    /// Frame derivative `e_i(f) = df/dx^i - sum_a A_i^a df/dx^a` at `p`;
    /// `i` is 0-based horizontal.
    pub fn frame_derivative(&self, f: &Expr, i: usize, p: &Point) -> Result<f64> {
        self.check_point(p)?;
        assert!(
            i < self.l,
            "frame index {} out of range, l = {}",
            i + 1,
            self.l
        );
        let jet = f.eval_jet2(p.coords())?;
        self.frame_component(&jet, i, p)
    }

    /// Frame derivative applied to an already-evaluated jet.
    pub(crate) fn frame_component(&self, jet: &Jet2, i: usize, p: &Point) -> Result<f64> {
        let mut out = jet.grad()[i];
        for a in 0..self.n - self.l {
            let coeff = self.a[i][a].eval(p.coords())?;
            out -= coeff * jet.grad()[self.l + a];
        }
        Ok(out)
    }

    /// Vertical bracket components `M_ij^a = e_j(A_i^a) - e_i(A_j^a)`;
    /// `result[a]` is the antisymmetric `l x l` matrix for vertical
    /// coordinate `x^{l+1+a}`. Antisymmetry is exact because each entry is
    /// written as the explicit difference.
    pub fn vertical_bracket(&self, p: &Point) -> Result<Vec<DMatrix<f64>>> {
        self.check_point(p)?;
        let l = self.l;
        let nv = self.n - l;
        let jets: Vec<Vec<Jet2>> = self
            .a
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| e.eval_jet2(p.coords()))
                    .collect::<Result<_>>()
            })
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(nv);
        for a in 0..nv {
            let mut m = DMatrix::zeros(l, l);
            for i in 0..l {
                for j in 0..l {
                    let ej_ai = self.frame_component(&jets[i][a], j, p)?;
                    let ei_aj = self.frame_component(&jets[j][a], i, p)?;
                    m[(i, j)] = ej_ai - ei_aj;
                }
            }
            out.push(m);
        }
        Ok(out)
    }

    /// Horizontal part of `[d/dx^a, e_k]`. In adapted coordinates the bracket
    /// is `-(dA_k^b/dx^a) d/dx^b`, purely vertical, so the horizontal
    /// component vanishes identically; this returns the structural 0.
    pub fn lambda_check(&self, p: &Point) -> f64 {
        debug_assert!(p.len() == self.n);
        0.0
    }

    /// Sampled structural checks: metric symmetry, positive definiteness and
    /// the vertical-independence condition `max |dg_ij/dx^a| < 1e-12`
    /// (gradient and Hessian rows). Expression evaluation failures trigger a
    /// resample (up to 100 tries per point); SPD failures are reported, not
    /// resampled.
    pub fn validate(&self, samples: usize, seed: u64) -> Result<ValidationReport> {
        use rand::Rng;
        assert!(samples >= 1);
        let l = self.l;
        let mut symmetry_max = 0.0_f64;
        let mut omega_max = 0.0_f64;
        let mut spd_failures = 0usize;
        for s in 0..samples {
            let mut rng = crate::sample::stream_rng(seed, s as u64);
            let mut last_err: Option<Error> = None;
            let mut done = false;
            for _ in 0..100 {
                let coords: Vec<f64> = self
                    .domain
                    .iter()
                    .map(|d| rng.gen_range(d[0]..=d[1]))
                    .collect();
                match self.validate_at(&coords) {
                    Ok((sym, omega, spd_ok)) => {
                        symmetry_max = symmetry_max.max(sym);
                        omega_max = omega_max.max(omega);
                        if !spd_ok {
                            spd_failures += 1;
                        }
                        done = true;
                        break;
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            if !done {
                return Err(Error::SamplingExhausted {
                    tries: 100,
                    last: last_err.map(|e| e.to_string()).unwrap_or_default(),
                });
            }
        }
        let omega_pass = omega_max < 1e-12;
        let symmetry_pass = symmetry_max < 1e-12;
        let spd_pass = spd_failures == 0;
        let _ = l;
        Ok(ValidationReport {
            samples,
            seed,
            symmetry_max,
            symmetry_pass,
            omega_max,
            omega_pass,
            spd_failures,
            spd_pass,
            pass: omega_pass && symmetry_pass && spd_pass,
        })
    }

    fn validate_at(&self, coords: &[f64]) -> Result<(f64, f64, bool)> {
        let l = self.l;
        let mut sym = 0.0_f64;
        let mut omega = 0.0_f64;
        let mut g = DMatrix::zeros(l, l);
        for i in 0..l {
            for j in 0..l {
                let jet = self.g[i][j].eval_jet2(coords)?;
                g[(i, j)] = jet.value();
                for a in l..self.n {
                    omega = omega.max(jet.grad()[a].abs());
                    for m in 0..self.n {
                        omega = omega.max(jet.hess(a, m).abs());
                    }
                }
            }
        }
        for i in 0..l {
            for j in 0..l {
                sym = sym.max((g[(i, j)] - g[(j, i)]).abs());
            }
        }
        let spd_ok = g.clone().cholesky().is_some();
        // A-coefficients must also evaluate at the point.
        for row in &self.a {
            for e in row {
                e.eval(coords)?;
            }
        }
        Ok((sym, omega, spd_ok))
    }

    /// Parse the JSON definition format. Fields: `n`, `l`, `g` (`l x l`
    /// expression strings, given symmetric), `A` (`l x (n-l)`), `domain`
    /// (`n` pairs), optional `pi`/`p`/`q` (`l` expression strings each).
    pub fn from_json(text: &str) -> Result<AdaptedManifold> {
        let raw: ManifoldRaw =
            serde_json::from_str(text).map_err(|e| Error::ManifoldJson(e.to_string()))?;
        raw.build()
    }

    pub fn to_json(&self) -> String {
        let raw = ManifoldRaw {
            n: self.n,
            l: self.l,
            g: self
                .g
                .iter()
                .map(|r| r.iter().map(|e| e.to_string()).collect())
                .collect(),
            a: self
                .a
                .iter()
                .map(|r| r.iter().map(|e| e.to_string()).collect())
                .collect(),
            domain: self.domain.clone(),
            pi: self.pi.as_ref().map(OneFormField::to_strings),
            p: self.p.as_ref().map(OneFormField::to_strings),
            q: self.q.as_ref().map(OneFormField::to_strings),
        };
        serde_json::to_string_pretty(&raw).expect("manifold serialization cannot fail")
    }
}

#[derive(Serialize, Deserialize)]
struct ManifoldRaw {
    n: usize,
    l: usize,
    g: Vec<Vec<String>>,
    #[serde(rename = "A")]
    a: Vec<Vec<String>>,
    domain: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pi: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<Vec<String>>,
}

impl ManifoldRaw {
    fn build(self) -> Result<AdaptedManifold> {
        let parse_grid = |rows: &[Vec<String>], what: &str, n: usize| -> Result<Vec<Vec<Expr>>> {
            rows.iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, s)| {
                            Expr::parse(s, n).map_err(|e| {
                                Error::ManifoldJson(format!("{what}[{i}][{j}] = {s:?}: {e}"))
                            })
                        })
                        .collect()
                })
                .collect()
        };
        let g = parse_grid(&self.g, "g", self.n)?;
        let a = parse_grid(&self.a, "A", self.n)?;
        let mut m = AdaptedManifold::new(self.n, self.l, g, a, self.domain)?;
        let parse_form =
            |strings: &Option<Vec<String>>, what: &str| -> Result<Option<OneFormField>> {
                match strings {
                    None => Ok(None),
                    Some(ss) => {
                        Ok(Some(OneFormField::parse(ss, m.l, m.n).map_err(|e| {
                            Error::ManifoldJson(format!("{what}: {e}"))
                        })?))
                    }
                }
            };
        m.pi = parse_form(&self.pi, "pi")?;
        m.p = parse_form(&self.p, "p")?;
        m.q = parse_form(&self.q, "q")?;
        Ok(m)
    }
}

/// Evaluated metric data at a point; derivative slots are horizontal only.
#[derive(Debug, Clone)]
pub struct MetricAtPoint {
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    /// `dg.get(i, j, k) = dg_ij / dx^k`.
    pub dg: T3,
    /// `ddg.get(i, j, k, h) = d^2 g_ij / dx^k dx^h`.
    pub ddg: T4,
}

impl MetricAtPoint {
    /// `d g^{-1} / dx^m = -ginv * dg_m * ginv`.
    pub(crate) fn dginv(&self, m: usize) -> DMatrix<f64> {
        let l = self.g.nrows();
        let mut dgm = DMatrix::zeros(l, l);
        for i in 0..l {
            for j in 0..l {
                dgm[(i, j)] = self.dg.get(i, j, m);
            }
        }
        -(&self.ginv * dgm * &self.ginv)
    }

    pub fn lambda_min(&self) -> f64 {
        self.g
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, v| m.min(*v))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub seed: u64,
    pub symmetry_max: f64,
    pub symmetry_pass: bool,
    pub omega_max: f64,
    pub omega_pass: bool,
    pub spd_failures: usize,
    pub spd_pass: bool,
    pub pass: bool,
}
