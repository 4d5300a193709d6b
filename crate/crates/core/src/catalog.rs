//! Built-in manifolds and 1-form constructions used as fixtures and
//! theorem witnesses.

use crate::chart::AdaptedManifold;
use crate::connection::OneFormField;
use crate::error::{Error, Result};
use crate::expr::Expr;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub manifold: AdaptedManifold,
    pub forms: BTreeMap<String, OneFormField>,
    pub notes: String,
}

/// Names of the fixed entries; `random` / `random:<seed>` also resolve via
/// [`get`], delegating to the seeded generator.
pub fn names() -> &'static [&'static str] {
    &["flat3", "heisenberg", "particle", "hyperbolic3"]
}

pub fn get(name: &str) -> Result<CatalogEntry> {
    match name {
        "flat3" => flat3(),
        "heisenberg" => heisenberg(),
        "particle" => particle(),
        "hyperbolic3" => hyperbolic3(),
        _ => {
            if let Some(rest) = name.strip_prefix("random") {
                let seed = match rest.strip_prefix(':') {
                    None if rest.is_empty() => 42,
                    Some(s) => s
                        .parse::<u64>()
                        .map_err(|_| Error::UnknownCatalogEntry(name.to_string()))?,
                    _ => return Err(Error::UnknownCatalogEntry(name.to_string())),
                };
                let cfg = crate::verify::RandomMetricConfig {
                    degree: 2,
                    amplitude: 0.3,
                    seed,
                };
                let manifold = crate::verify::generate_random_manifold(&cfg, 5, 3);
                return Ok(CatalogEntry {
                    name: name.to_string(),
                    manifold,
                    forms: BTreeMap::new(),
                    notes: format!(
                        "seeded random entry: g = I + B^T B with degree-2 polynomial B (seed {seed})"
                    ),
                });
            }
            Err(Error::UnknownCatalogEntry(name.to_string()))
        }
    }
}

fn grid(n: usize, rows: &[&[&str]]) -> Result<Vec<Vec<Expr>>> {
    rows.iter()
        .map(|row| row.iter().map(|s| Expr::parse(s, n)).collect())
        .collect()
}

fn flat3() -> Result<CatalogEntry> {
    let n = 5;
    let g = grid(n, &[&["1", "0", "0"], &["0", "1", "0"], &["0", "0", "1"]])?;
    // constant Pfaffian coefficients keep the frame nontrivial without
    // disturbing flatness
    let a = grid(n, &[&["0.3", "-0.7"], &["0.1", "0.4"], &["-0.2", "0.6"]])?;
    let manifold = AdaptedManifold::new(n, 3, g, a, vec![[-1.0, 1.0]; n])?;
    let mut forms = BTreeMap::new();
    forms.insert("zero".to_string(), const_form(&[0.0, 0.0, 0.0], 3, n)?);
    forms.insert(
        "lemma43_q".to_string(),
        OneFormField::parse(
            &[
                "-2*x1/(1 + x1^2 + x2^2 + x3^2)".to_string(),
                "-2*x2/(1 + x1^2 + x2^2 + x3^2)".to_string(),
                "-2*x3/(1 + x1^2 + x2^2 + x3^2)".to_string(),
            ],
            3,
            n,
        )?,
    );
    // gradient of -log(1 + 0.3 x1 + 0.2 x2 + 0.1 x3); its quadratic
    // characteristic data vanishes, giving a flat projective transformation
    forms.insert(
        "affine_log_q".to_string(),
        OneFormField::parse(
            &[
                "-0.3/(1 + 0.3*x1 + 0.2*x2 + 0.1*x3)".to_string(),
                "-0.2/(1 + 0.3*x1 + 0.2*x2 + 0.1*x3)".to_string(),
                "-0.1/(1 + 0.3*x1 + 0.2*x2 + 0.1*x3)".to_string(),
            ],
            3,
            n,
        )?,
    );
    Ok(CatalogEntry {
        name: "flat3".to_string(),
        manifold,
        forms,
        notes: "Euclidean horizontal metric with a constant-coefficient frame; zero curvature"
            .to_string(),
    })
}

fn heisenberg() -> Result<CatalogEntry> {
    let n = 3;
    let g = grid(n, &[&["1", "0"], &["0", "1"]])?;
    // symmetric-gauge frame e_1 = d/dx + (y/2) d/dz, e_2 = d/dy - (x/2) d/dz
    let a = grid(n, &[&["-x2/2"], &["x1/2"]])?;
    let manifold = AdaptedManifold::new(n, 2, g, a, vec![[-1.0, 1.0]; n])?;
    Ok(CatalogEntry {
        name: "heisenberg".to_string(),
        manifold,
        forms: BTreeMap::new(),
        notes: "step-2 stratified group in symmetric gauge; left-invariant flat metric, \
                bracket-generating frame"
            .to_string(),
    })
}

fn particle() -> Result<CatalogEntry> {
    let n = 3;
    // constraint z' = y x': horizontal span {d/dx + y d/dz, d/dy} with the
    // induced Euclidean metric diag(1 + y^2, 1)
    let g = grid(n, &[&["1 + x2^2", "0"], &["0", "1"]])?;
    let a = grid(n, &[&["-x2"], &["0"]])?;
    let manifold = AdaptedManifold::new(n, 2, g, a, vec![[-1.0, 1.0]; n])?;
    Ok(CatalogEntry {
        name: "particle".to_string(),
        manifold,
        forms: BTreeMap::new(),
        notes: "unit-mass particle under a linear nonholonomic constraint; curved l = 2 metric"
            .to_string(),
    })
}

fn hyperbolic3() -> Result<CatalogEntry> {
    let n = 4;
    let g = grid(
        n,
        &[
            &["1/x3^2", "0", "0"],
            &["0", "1/x3^2", "0"],
            &["0", "0", "1/x3^2"],
        ],
    )?;
    // the A-coefficients only shape the frame; curvature data is blind to
    // them here because g depends on x3 alone
    let a = grid(n, &[&["x2"], &["x1*x3"], &["x1 + x2"]])?;
    let manifold = AdaptedManifold::new(
        n,
        3,
        g,
        a,
        vec![[-1.0, 1.0], [-1.0, 1.0], [0.5, 2.0], [-1.0, 1.0]],
    )?;
    Ok(CatalogEntry {
        name: "hyperbolic3".to_string(),
        manifold,
        forms: BTreeMap::new(),
        notes: "upper-half-space metric on the horizontal factor; constant sectional \
                curvature -1"
            .to_string(),
    })
}

/// Exact horizontal differential: `(d_h f)_i = e_i(f)`, built symbolically
/// so the result is an ordinary 1-form field.
pub fn dhf(m: &AdaptedManifold, f: &Expr) -> Result<OneFormField> {
    let l = m.l();
    let n = m.n();
    let mut components = Vec::with_capacity(l);
    for i in 0..l {
        let mut comp = f.derivative(i);
        for a in 0..n - l {
            comp = Expr::Sub(
                Box::new(comp),
                Box::new(Expr::Mul(
                    Box::new(m.pfaffian_expr(i, a).clone()),
                    Box::new(f.derivative(l + a)),
                )),
            );
        }
        components.push(comp);
    }
    OneFormField::new(components, l, n)
}

/// Constant 1-form with the given components.
pub fn const_form(values: &[f64], l: usize, n: usize) -> Result<OneFormField> {
    OneFormField::new(values.iter().map(|v| Expr::Const(*v)).collect(), l, n)
}
