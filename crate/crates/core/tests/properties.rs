//! Property tests for the expression DSL and jet arithmetic: jets against a
//! central finite-difference oracle, the Leibniz combination, and the
//! print/parse round trip.

use nsr_core::expr::{Expr, Func};
use nsr_core::jet::Jet2;
use proptest::prelude::*;

const N: usize = 3;

fn poly_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-0.5..0.5f64).prop_map(Expr::Const),
        (0..N).prop_map(Expr::Var),
    ];
    leaf.prop_recursive(2, 16, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), 0..3i32).prop_map(|(a, k)| Expr::Pow(Box::new(a), k)),
            inner.prop_map(|a| Expr::Neg(Box::new(a))),
        ]
    })
}

/// Polynomials wrapped in total unary functions; always evaluable.
fn smooth_expr() -> impl Strategy<Value = Expr> {
    (poly_expr(), 0..4usize).prop_map(|(e, wrap)| match wrap {
        1 => Expr::Func(Func::Sin, Box::new(e)),
        2 => Expr::Func(Func::Cos, Box::new(e)),
        3 => Expr::Func(Func::Exp, Box::new(e)),
        _ => e,
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0..1.0f64, N)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1.0_f64.max(a.abs()).max(b.abs())
}

proptest! {
    /// Gradient and Hessian from jets match central finite differences of
    /// the value channel to 1e-6 relative (step 1e-4, values O(1)).
    #[test]
    fn jets_match_finite_differences(e in poly_expr(), p in point()) {
        let h = 1e-4;
        let jet = e.eval_jet2(&p).unwrap();
        let f = |q: &[f64]| e.eval(q).unwrap();
        for k in 0..N {
            let mut qp = p.clone();
            let mut qm = p.clone();
            qp[k] += h;
            qm[k] -= h;
            let fd = (f(&qp) - f(&qm)) / (2.0 * h);
            prop_assert!(
                rel_close(jet.grad()[k], fd, 1e-6),
                "grad[{k}]: jet {} vs fd {} for {e}", jet.grad()[k], fd
            );
        }
        let f0 = f(&p);
        for i in 0..N {
            for j in 0..N {
                let fd = if i == j {
                    let mut qp = p.clone();
                    let mut qm = p.clone();
                    qp[i] += h;
                    qm[i] -= h;
                    (f(&qp) - 2.0 * f0 + f(&qm)) / (h * h)
                } else {
                    let mut qpp = p.clone();
                    let mut qpm = p.clone();
                    let mut qmp = p.clone();
                    let mut qmm = p.clone();
                    qpp[i] += h; qpp[j] += h;
                    qpm[i] += h; qpm[j] -= h;
                    qmp[i] -= h; qmp[j] += h;
                    qmm[i] -= h; qmm[j] -= h;
                    (f(&qpp) - f(&qpm) - f(&qmp) + f(&qmm)) / (4.0 * h * h)
                };
                prop_assert!(
                    rel_close(jet.hess(i, j), fd, 1e-6),
                    "hess[{i}][{j}]: jet {} vs fd {} for {e}", jet.hess(i, j), fd
                );
            }
        }
    }

    /// The jet of a product equals the Leibniz combination of the factor
    /// jets to 1e-12 relative.
    #[test]
    fn product_jet_is_leibniz_combination(a in smooth_expr(), b in smooth_expr(), p in point()) {
        let ja = a.eval_jet2(&p).unwrap();
        let jb = b.eval_jet2(&p).unwrap();
        let prod = Expr::Mul(Box::new(a), Box::new(b)).eval_jet2(&p).unwrap();
        prop_assert!(rel_close(prod.value(), ja.value() * jb.value(), 1e-12));
        for k in 0..N {
            let leibniz = ja.grad()[k] * jb.value() + ja.value() * jb.grad()[k];
            prop_assert!(rel_close(prod.grad()[k], leibniz, 1e-12));
        }
        for i in 0..N {
            for j in 0..N {
                let leibniz = ja.hess(i, j) * jb.value()
                    + ja.grad()[i] * jb.grad()[j]
                    + ja.grad()[j] * jb.grad()[i]
                    + ja.value() * jb.hess(i, j);
                prop_assert!(rel_close(prod.hess(i, j), leibniz, 1e-12));
            }
        }
    }

    /// Hessians stay exactly symmetric through arbitrary expressions.
    #[test]
    fn hessian_symmetry(e in smooth_expr(), p in point()) {
        let jet = e.eval_jet2(&p).unwrap();
        for i in 0..N {
            for j in 0..N {
                prop_assert_eq!(jet.hess(i, j), jet.hess(j, i));
            }
        }
    }

    /// Printing and re-parsing preserves evaluation, and one round of
    /// print/parse is a structural fixed point (negated literals fold into
    /// constants on the first pass).
    #[test]
    fn print_parse_roundtrip(e in smooth_expr(), p in point()) {
        let once = Expr::parse(&e.to_string(), N).unwrap();
        let a = e.eval(&p).unwrap();
        let b = once.eval(&p).unwrap();
        prop_assert!(rel_close(a, b, 1e-14));
        let twice = Expr::parse(&once.to_string(), N).unwrap();
        prop_assert_eq!(&twice, &once);
    }

    /// Constant jets carry no derivatives; variable jets carry unit seeds.
    #[test]
    fn seed_jets(c in -2.0..2.0f64, idx in 0..N, p in point()) {
        let jc = Jet2::constant(N, c);
        prop_assert_eq!(jc.value(), c);
        prop_assert!(jc.grad().iter().all(|g| *g == 0.0));
        let jv = Jet2::variable(N, idx, p[idx]);
        prop_assert_eq!(jv.value(), p[idx]);
        for k in 0..N {
            prop_assert_eq!(jv.grad()[k], if k == idx { 1.0 } else { 0.0 });
        }
    }
}
