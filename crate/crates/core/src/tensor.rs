//! Small dense rank-3 and rank-4 tensors with runtime side length.
//!
//! Sides are the horizontal dimension `l` (2..=5 in practice), so flat
//! `Vec<f64>` storage with closed-form strides is all that is needed.
//! Rank-2 objects use `nalgebra::DMatrix` throughout the crate.

use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct T3 {
    l: usize,
    data: Vec<f64>,
}

impl T3 {
    pub fn zeros(l: usize) -> Self {
        T3 {
            l,
            data: vec![0.0; l * l * l],
        }
    }

    pub fn side(&self) -> usize {
        self.l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.l + j) * self.l + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.l + j) * self.l + k] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.l + j) * self.l + k] += v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct T4 {
    l: usize,
    data: Vec<f64>,
}

impl T4 {
    pub fn zeros(l: usize) -> Self {
        T4 {
            l,
            data: vec![0.0; l * l * l * l],
        }
    }

    pub fn side(&self) -> usize {
        self.l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, h: usize) -> f64 {
        self.data[((i * self.l + j) * self.l + k) * self.l + h]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, h: usize, v: f64) {
        self.data[((i * self.l + j) * self.l + k) * self.l + h] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, k: usize, h: usize, v: f64) {
        self.data[((i * self.l + j) * self.l + k) * self.l + h] += v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max-abs of the componentwise difference.
    pub fn max_abs_diff(&self, other: &T4) -> f64 {
        assert_eq!(self.l, other.l);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Build from a closure over `(i, j, k, h)`.
    pub fn from_fn(l: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> T4 {
        let mut t = T4::zeros(l);
        for i in 0..l {
            for j in 0..l {
                for k in 0..l {
                    for h in 0..l {
                        t.set(i, j, k, h, f(i, j, k, h));
                    }
                }
            }
        }
        t
    }
}

pub fn max_abs_mat(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}
