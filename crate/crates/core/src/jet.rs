//! Second-order forward-mode jets.
//!
//! A [`Jet2`] carries a value, its gradient over `n` coordinates and its
//! (symmetric) Hessian, propagated through arithmetic by the product and
//! chain rules truncated at order two. Polynomial and elementary-function
//! expressions therefore evaluate to *exact* first and second partials, up to
//! floating-point rounding -- there is no truncation error to budget for.

use crate::error::DomainErrorKind;

/// Truncated second-order Taylor value: `(f, grad f, hess f)` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    n: usize,
    v: f64,
    grad: Vec<f64>,
    /// Row-major `n x n`; symmetric by construction (every rule below writes
    /// `h[i][j]` and `h[j][i]` from the same arithmetic).
    hess: Vec<f64>,
}

type JetResult = Result<Jet2, DomainErrorKind>;

impl Jet2 {
    pub fn constant(n: usize, c: f64) -> Self {
        Jet2 {
            n,
            v: c,
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
        }
    }

    /// Seed jet for coordinate `idx` (0-based) with value `x`.
    pub fn variable(n: usize, idx: usize, x: f64) -> Self {
        assert!(idx < n, "variable index {idx} out of range for n = {n}");
        let mut j = Jet2::constant(n, x);
        j.grad[idx] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn value(&self) -> f64 {
        self.v
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.n + j]
    }

    fn zip(n: usize, v: f64) -> Jet2 {
        Jet2::constant(n, v)
    }

    pub fn add(&self, rhs: &Jet2) -> Jet2 {
        let mut out = self.clone();
        out.v += rhs.v;
        for i in 0..self.n {
            out.grad[i] += rhs.grad[i];
        }
        for i in 0..self.n * self.n {
            out.hess[i] += rhs.hess[i];
        }
        out
    }

    pub fn sub(&self, rhs: &Jet2) -> Jet2 {
        let mut out = self.clone();
        out.v -= rhs.v;
        for i in 0..self.n {
            out.grad[i] -= rhs.grad[i];
        }
        for i in 0..self.n * self.n {
            out.hess[i] -= rhs.hess[i];
        }
        out
    }

    pub fn neg(&self) -> Jet2 {
        let mut out = self.clone();
        out.v = -out.v;
        for g in &mut out.grad {
            *g = -*g;
        }
        for h in &mut out.hess {
            *h = -*h;
        }
        out
    }

    /// Leibniz rule: `(ab)'' = a''b + a'b' + b'a' + ab''`. Only the upper
    /// triangle is computed and mirrored, keeping the Hessian symmetric to
    /// the last ulp.
    pub fn mul(&self, rhs: &Jet2) -> Jet2 {
        let n = self.n;
        let mut out = Jet2::zip(n, self.v * rhs.v);
        for i in 0..n {
            out.grad[i] = self.grad[i] * rhs.v + self.v * rhs.grad[i];
        }
        for i in 0..n {
            for j in i..n {
                let v = self.hess[i * n + j] * rhs.v
                    + self.grad[i] * rhs.grad[j]
                    + self.grad[j] * rhs.grad[i]
                    + self.v * rhs.hess[i * n + j];
                out.hess[i * n + j] = v;
                out.hess[j * n + i] = v;
            }
        }
        out
    }

    pub fn div(&self, rhs: &Jet2) -> JetResult {
        if rhs.v == 0.0 {
            return Err(DomainErrorKind::DivisionByZero);
        }
        Ok(self.mul(&rhs.recip()))
    }

    /// `1/u`: chain rule with `f' = -1/u^2`, `f'' = 2/u^3`.
    fn recip(&self) -> Jet2 {
        let u = self.v;
        self.chain(1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u))
    }

    /// Integer power; negative exponents require a nonzero base.
    pub fn powi(&self, k: i32) -> JetResult {
        if k == 0 {
            return Ok(Jet2::constant(self.n, 1.0));
        }
        if self.v == 0.0 && k < 0 {
            return Err(DomainErrorKind::NegativePowerOfZero);
        }
        let u = self.v;
        // f = u^k, f' = k u^(k-1), f'' = k(k-1) u^(k-2). The k = 1 branch
        // avoids 0 * 0^(-1) = NaN at u = 0.
        let f = u.powi(k);
        let fp = f64::from(k) * u.powi(k - 1);
        let fpp = if k == 1 {
            0.0
        } else {
            f64::from(k) * f64::from(k - 1) * u.powi(k - 2)
        };
        Ok(self.chain(f, fp, fpp))
    }

    pub fn sin(&self) -> Jet2 {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Jet2 {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(&self) -> Jet2 {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> JetResult {
        if self.v <= 0.0 {
            return Err(DomainErrorKind::LogNonPositive);
        }
        let u = self.v;
        Ok(self.chain(u.ln(), 1.0 / u, -1.0 / (u * u)))
    }

    pub fn sqrt(&self) -> JetResult {
        if self.v <= 0.0 {
            return Err(DomainErrorKind::SqrtNonPositive);
        }
        let r = self.v.sqrt();
        Ok(self.chain(r, 0.5 / r, -0.25 / (self.v * r)))
    }

    /// Second-order chain rule for a scalar function with value `f`,
    /// derivative `fp` and second derivative `fpp` at `self.value()`;
    /// upper triangle mirrored for exact symmetry.
    fn chain(&self, f: f64, fp: f64, fpp: f64) -> Jet2 {
        let n = self.n;
        let mut out = Jet2::zip(n, f);
        for i in 0..n {
            out.grad[i] = fp * self.grad[i];
        }
        for i in 0..n {
            for j in i..n {
                let v = fpp * self.grad[i] * self.grad[j] + fp * self.hess[i * n + j];
                out.hess[i * n + j] = v;
                out.hess[j * n + i] = v;
            }
        }
        out
    }
}
