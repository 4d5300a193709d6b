//! `nsr` -- tensors and residual checks on nearly sub-Riemannian manifolds.
//!
//! Manifolds come from the built-in catalog (`catalog:NAME`) or from a JSON
//! definition file. Exit status: 0 when everything passes (skipped checks
//! allowed), 1 when any check fails, 2 on usage or input errors.

#![allow(clippy::needless_range_loop)]

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use nsr_core::connection::{ConnectionSpec, OneFormField};
use nsr_core::curvature::{curvature_direct, sectional};
use nsr_core::verify::{run_check, run_suite, CheckConfig, Verdict, CHECK_IDS};
use nsr_core::weyl::{conformal_tensor, projective_tensor};
use nsr_core::{catalog, AdaptedManifold, Expr, Point};
use serde::Serialize;
use serde_json::json;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nsr",
    version,
    about = "connections and curvature on nearly sub-Riemannian manifolds in adapted coordinates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a manifold definition at sampled points
    Check {
        /// `catalog:NAME` or path to a manifold JSON file
        manifold: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Evaluate connection and curvature tensors at a point
    Tensors {
        manifold: String,
        /// Point coordinates, comma-separated constant expressions
        #[arg(long)]
        at: String,
        #[command(flatten)]
        forms: FormArgs,
        /// Plane for sectional curvature as `u1,..,ul:v1,..,vl`; repeatable
        #[arg(long)]
        plane: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Run one named check and report its verdict
    Verify {
        manifold: String,
        /// Check id (see `nsr catalog list` for the manifolds, `--theorem help` for ids)
        #[arg(long)]
        theorem: String,
        #[command(flatten)]
        forms: FormArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run every applicable check
    Suite {
        manifold: String,
        #[command(flatten)]
        forms: FormArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// List or show built-in manifolds
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    /// Names and one-line descriptions
    List,
    /// Emit the manifold JSON for one entry
    Show { name: String },
}

#[derive(Args)]
struct RunArgs {
    /// Sample points per check
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Base RNG seed; sample s uses stream s of this seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Override the per-check default tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Emit JSON instead of human-readable text
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct FormArgs {
    /// Semi-symmetric 1-form components, e.g. `--pi "x1,0,0"`
    #[arg(long, conflicts_with_all = ["p", "q"])]
    pi: Option<String>,
    /// First projective 1-form (use with --q)
    #[arg(long, requires = "q")]
    p: Option<String>,
    /// Second projective 1-form (use with --p)
    #[arg(long, requires = "p")]
    q: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Check { manifold, run } => cmd_check(&manifold, &run),
        Command::Tensors {
            manifold,
            at,
            forms,
            plane,
            json,
        } => cmd_tensors(&manifold, &at, &forms, &plane, json),
        Command::Verify {
            manifold,
            theorem,
            forms,
            run,
        } => cmd_verify(&manifold, &theorem, &forms, &run),
        Command::Suite {
            manifold,
            forms,
            run,
        } => cmd_suite(&manifold, &forms, &run),
        Command::Catalog { action } => cmd_catalog(action),
    }
}

/// Load `catalog:NAME` or a JSON file, then apply CLI 1-form overrides.
fn load_manifold(source: &str, forms: Option<&FormArgs>) -> anyhow::Result<AdaptedManifold> {
    let mut m = if let Some(name) = source.strip_prefix("catalog:") {
        catalog::get(name)?.manifold
    } else {
        let text = std::fs::read_to_string(source)
            .with_context(|| format!("reading manifold file '{source}'"))?;
        AdaptedManifold::from_json(&text)
            .with_context(|| format!("parsing manifold file '{source}'"))?
    };
    if let Some(f) = forms {
        if let Some(pi) = &f.pi {
            m.pi = Some(OneFormField::parse_csv(pi, m.l(), m.n()).context("parsing --pi")?);
        }
        if let Some(p) = &f.p {
            m.p = Some(OneFormField::parse_csv(p, m.l(), m.n()).context("parsing --p")?);
        }
        if let Some(q) = &f.q {
            m.q = Some(OneFormField::parse_csv(q, m.l(), m.n()).context("parsing --q")?);
        }
    }
    Ok(m)
}

fn connection_from_flags(m: &AdaptedManifold) -> ConnectionSpec {
    match (&m.pi, &m.p, &m.q) {
        (Some(pi), _, _) => ConnectionSpec::Sns { pi: pi.clone() },
        (None, Some(p), Some(q)) => ConnectionSpec::ProjectiveSns {
            p: p.clone(),
            q: q.clone(),
        },
        _ => ConnectionSpec::Horizontal,
    }
}

/// Comma-separated constant expressions, e.g. `0,0.5,1/3`.
fn parse_point(text: &str, n: usize) -> anyhow::Result<Point> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != n {
        return Err(anyhow!(
            "point has {} coordinates, manifold needs {n}",
            parts.len()
        ));
    }
    let coords = parts
        .iter()
        .map(|s| Ok(Expr::parse(s.trim(), 0)?.eval(&[])?))
        .collect::<anyhow::Result<Vec<f64>>>()?;
    Ok(Point::new(coords)?)
}

fn parse_plane(text: &str, l: usize) -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
    let (u, v) = text
        .split_once(':')
        .ok_or_else(|| anyhow!("plane must be `u1,..,ul:v1,..,vl`"))?;
    let vec = |s: &str| -> anyhow::Result<Vec<f64>> {
        let out = s
            .split(',')
            .map(|c| Ok(Expr::parse(c.trim(), 0)?.eval(&[])?))
            .collect::<anyhow::Result<Vec<f64>>>()?;
        if out.len() != l {
            return Err(anyhow!("plane vector needs {l} components"));
        }
        Ok(out)
    };
    Ok((vec(u)?, vec(v)?))
}

fn cmd_check(source: &str, run: &RunArgs) -> anyhow::Result<ExitCode> {
    let m = load_manifold(source, None)?;
    let report = m.validate(run.samples, run.seed)?;
    if run.json {
        let out = json!({
            "manifold": source,
            "command": "check",
            "results": report,
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!("manifold {source}: n = {}, l = {}", m.n(), m.l());
        println!(
            "  symmetry      {}  (max residual {:.3e})",
            pass_str(report.symmetry_pass),
            report.symmetry_max
        );
        println!(
            "  positive def  {}  ({} failures / {} samples)",
            pass_str(report.spd_pass),
            report.spd_failures,
            report.samples
        );
        println!(
            "  vertical independence {}  (max residual {:.3e})",
            pass_str(report.omega_pass),
            report.omega_max
        );
    }
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn pass_str(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

#[derive(Serialize)]
struct TensorReport {
    n: usize,
    l: usize,
    point: Vec<f64>,
    connection: String,
    gamma: Vec<Vec<Vec<f64>>>,
    r_mixed: Vec<Vec<Vec<Vec<f64>>>>,
    r_low: Vec<Vec<Vec<Vec<f64>>>>,
    ricci: Vec<Vec<f64>>,
    scalar: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    conformal: Option<Vec<Vec<Vec<Vec<f64>>>>>,
    projective: Vec<Vec<Vec<Vec<f64>>>>,
    sectional: Vec<SectionalOut>,
}

#[derive(Serialize)]
struct SectionalOut {
    u: Vec<f64>,
    v: Vec<f64>,
    value: f64,
}

fn cmd_tensors(
    source: &str,
    at: &str,
    forms: &FormArgs,
    planes: &[String],
    json_out: bool,
) -> anyhow::Result<ExitCode> {
    let m = load_manifold(source, Some(forms))?;
    let p = parse_point(at, m.n())?;
    let spec = connection_from_flags(&m);
    let l = m.l();
    let metric = m.metric_at(&p)?;
    let coeffs = nsr_core::connection::connection_coeffs(&m, &spec, &p)?;
    let curv = curvature_direct(&m, &spec, &p)?;
    let conformal = if l >= 3 {
        Some(conformal_tensor(&curv, &metric, l)?)
    } else {
        None
    };
    let projective = projective_tensor(&curv, l);
    let mut sectionals = Vec::new();
    for plane in planes {
        let (u, v) = parse_plane(plane, l)?;
        let value = sectional(&m, &spec, &p, &u, &v)?;
        sectionals.push(SectionalOut { u, v, value });
    }

    let t3 = |f: &dyn Fn(usize, usize, usize) -> f64| -> Vec<Vec<Vec<f64>>> {
        (0..l)
            .map(|i| {
                (0..l)
                    .map(|j| (0..l).map(|k| f(i, j, k)).collect())
                    .collect()
            })
            .collect()
    };
    let t4 = |f: &dyn Fn(usize, usize, usize, usize) -> f64| -> Vec<Vec<Vec<Vec<f64>>>> {
        (0..l)
            .map(|i| {
                (0..l)
                    .map(|j| {
                        (0..l)
                            .map(|k| (0..l).map(|h| f(i, j, k, h)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect()
    };
    let report = TensorReport {
        n: m.n(),
        l,
        point: p.coords().to_vec(),
        connection: match &spec {
            ConnectionSpec::Horizontal => "horizontal".to_string(),
            ConnectionSpec::Sns { .. } => "sns".to_string(),
            ConnectionSpec::ProjectiveSns { .. } => "projective_sns".to_string(),
        },
        gamma: t3(&|i, j, k| coeffs.gamma.get(i, j, k)),
        r_mixed: t4(&|i, j, k, h| curv.r_mixed.get(i, j, k, h)),
        r_low: t4(&|i, j, k, h| curv.r_low.get(i, j, k, h)),
        ricci: (0..l)
            .map(|i| (0..l).map(|k| curv.ricci[(i, k)]).collect())
            .collect(),
        scalar: curv.scalar,
        conformal: conformal
            .as_ref()
            .map(|c| t4(&|i, j, k, h| c.get(i, j, k, h))),
        projective: t4(&|i, j, k, h| projective.get(i, j, k, h)),
        sectional: sectionals,
    };

    if json_out {
        let out = json!({
            "manifold": source,
            "command": "tensors",
            "results": report,
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        print_tensor_report(&report);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_tensor_report(r: &TensorReport) {
    println!("point {:?}  connection: {}", r.point, r.connection);
    let mut shown = 0usize;
    println!("Gamma (coefficients, upper index last):");
    for i in 0..r.l {
        for j in 0..r.l {
            for k in 0..r.l {
                let v = r.gamma[i][j][k];
                if v.abs() > 1e-14 {
                    println!("  Gamma[{}][{}]^{} = {v:.12}", i + 1, j + 1, k + 1);
                    shown += 1;
                }
            }
        }
    }
    if shown == 0 {
        println!("  (all zero)");
    }
    let dump4 = |name: &str, t: &Vec<Vec<Vec<Vec<f64>>>>| {
        println!("{name}:");
        let mut shown = 0usize;
        for i in 0..r.l {
            for j in 0..r.l {
                for k in 0..r.l {
                    for h in 0..r.l {
                        let v = t[i][j][k][h];
                        if v.abs() > 1e-14 {
                            println!(
                                "  {name}[{}][{}][{}][{}] = {v:.12}",
                                i + 1,
                                j + 1,
                                k + 1,
                                h + 1
                            );
                            shown += 1;
                        }
                    }
                }
            }
        }
        if shown == 0 {
            println!("  (all zero)");
        }
    };
    dump4("R_mixed", &r.r_mixed);
    dump4("R", &r.r_low);
    println!("Ricci:");
    for i in 0..r.l {
        let row: Vec<String> = r.ricci[i].iter().map(|v| format!("{v:.12}")).collect();
        println!("  [{}]", row.join(", "));
    }
    println!("scalar = {:.12}", r.scalar);
    if let Some(c) = &r.conformal {
        dump4("C", c);
    }
    dump4("W", &r.projective);
    for s in &r.sectional {
        println!("sectional(u = {:?}, v = {:?}) = {:.12}", s.u, s.v, s.value);
    }
}

fn verdict_line(v: &Verdict) -> String {
    if v.skipped {
        format!(
            "SKIP {:12} ({})",
            v.theorem_id,
            v.skip_reason.as_deref().unwrap_or("not applicable")
        )
    } else {
        format!(
            "{} {:12} max {:.3e}  mean {:.3e}  tol {:.0e}  ({} samples, seed {})",
            pass_str(v.pass),
            v.theorem_id,
            v.max_residual,
            v.mean_residual,
            v.tolerance,
            v.samples,
            v.seed
        )
    }
}

fn cmd_verify(
    source: &str,
    theorem: &str,
    forms: &FormArgs,
    run: &RunArgs,
) -> anyhow::Result<ExitCode> {
    if theorem == "help" {
        for id in CHECK_IDS {
            println!("{id:13} {}", nsr_core::verify::check_description(id)?);
        }
        return Ok(ExitCode::SUCCESS);
    }
    let m = load_manifold(source, Some(forms))?;
    let cfg = CheckConfig {
        samples: run.samples,
        seed: run.seed,
        tol_override: run.tol,
    };
    let verdict = run_check(theorem, &m, &cfg)?;
    if run.json {
        let out = json!({
            "manifold": source,
            "command": "verify",
            "verdicts": [verdict],
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!("{}", verdict_line(&verdict));
        for w in &verdict.witnesses {
            println!("  worst point {:?}", w.point);
            for (k, r) in &w.residuals {
                println!("    {k}: {r:.3e}");
            }
        }
    }
    Ok(if verdict.pass || verdict.skipped {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_suite(source: &str, forms: &FormArgs, run: &RunArgs) -> anyhow::Result<ExitCode> {
    let m = load_manifold(source, Some(forms))?;
    let cfg = CheckConfig {
        samples: run.samples,
        seed: run.seed,
        tol_override: run.tol,
    };
    let verdicts = run_suite(&m, &cfg);
    let all_ok = verdicts.iter().all(|v| v.pass || v.skipped);
    if run.json {
        let out = json!({
            "manifold": source,
            "command": "suite",
            "verdicts": verdicts,
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        for v in &verdicts {
            println!("{}", verdict_line(v));
        }
        let passed = verdicts.iter().filter(|v| v.pass).count();
        let skipped = verdicts.iter().filter(|v| v.skipped).count();
        println!(
            "{passed} passed, {} failed, {skipped} skipped",
            verdicts.len() - passed - skipped
        );
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_catalog(action: CatalogAction) -> anyhow::Result<ExitCode> {
    match action {
        CatalogAction::List => {
            for name in catalog::names() {
                let e = catalog::get(name)?;
                println!(
                    "{name:12} n = {}, l = {}  -- {}",
                    e.manifold.n(),
                    e.manifold.l(),
                    e.notes
                );
            }
            println!("random[:SEED]  n = 5, l = 3  -- seeded random metric g = I + B^T B");
            Ok(ExitCode::SUCCESS)
        }
        CatalogAction::Show { name } => {
            let e = catalog::get(&name)?;
            println!("{}", e.manifold.to_json());
            Ok(ExitCode::SUCCESS)
        }
    }
}
