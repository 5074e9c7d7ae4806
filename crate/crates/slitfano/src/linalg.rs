//! Small dense complex linear algebra: column-pivoted LU for the
//! boundary-integral systems (4N x 4N at most) and a cheap condition
//! estimate used to flag near-resonant solves.

use crate::error::{Error, Result};
use num_complex::Complex64;

type C = Complex64;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<C>,
}

impl CMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![C::new(0.0, 0.0); nrows * ncols],
        }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> C) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                C::new(1.0, 0.0)
            } else {
                C::new(0.0, 0.0)
            }
        })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut out = Self::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a == C::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.ncols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[C]) -> Vec<C> {
        assert_eq!(self.ncols, x.len());
        let mut y = vec![C::new(0.0, 0.0); self.nrows];
        for i in 0..self.nrows {
            let mut acc = C::new(0.0, 0.0);
            for j in 0..self.ncols {
                acc += self[(i, j)] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    pub fn scale(&mut self, s: C) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn add_scaled(&mut self, other: &Self, s: C) {
        assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.ncols)
            .map(|j| (0..self.nrows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.data.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Copy `block` into self with its (0,0) entry at (r0, c0).
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &CMat) {
        for i in 0..block.nrows {
            for j in 0..block.ncols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C {
        &mut self.data[i * self.ncols + j]
    }
}

/// LU factorization with partial pivoting.
pub struct LuFactors {
    lu: CMat,
    piv: Vec<usize>,
    norm_one_a: f64,
}

impl LuFactors {
    pub fn factor(a: &CMat) -> Result<Self> {
        assert_eq!(a.nrows, a.ncols);
        let n = a.nrows;
        let norm_one_a = a.norm_one();
        let mut lu = a.clone();
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].norm();
            for i in (k + 1)..n {
                let v = lu[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::SingularSystem { cond: f64::INFINITY });
            }
            piv[k] = p;
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let m = lu[(i, k)] / pivot;
                lu[(i, k)] = m;
                for j in (k + 1)..n {
                    let s = lu[(k, j)];
                    lu[(i, j)] -= m * s;
                }
            }
        }
        Ok(Self {
            lu,
            piv,
            norm_one_a,
        })
    }

    pub fn solve(&self, b: &[C]) -> Vec<C> {
        let n = self.lu.nrows;
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        // Apply every recorded interchange before the triangular solves;
        // interleaving them with the L-solve mixes rows once a later pivot
        // moves an already-updated entry.
        for k in 0..n {
            x.swap(k, self.piv[k]);
        }
        for k in 0..n {
            let xk = x[k];
            if xk != C::new(0.0, 0.0) {
                for i in (k + 1)..n {
                    x[i] -= self.lu[(i, k)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for j in (k + 1)..n {
                acc -= self.lu[(k, j)] * x[j];
            }
            x[k] = acc / self.lu[(k, k)];
        }
        x
    }

    /// One-norm condition estimate: ||A||_1 * max ||A^{-1} v||_1 / ||v||_1
    /// over a few deterministic probe vectors.
    pub fn cond_estimate(&self) -> f64 {
        let n = self.lu.nrows;
        let mut worst: f64 = 0.0;
        for probe in 0..3 {
            let v: Vec<C> = (0..n)
                .map(|i| {
                    let t = (i as f64 + 1.0) * (0.618_034 + probe as f64 * 0.231);
                    C::new(t.sin(), t.cos())
                })
                .collect();
            let vn: f64 = v.iter().map(|c| c.norm()).sum();
            let w = self.solve(&v);
            let wn: f64 = w.iter().map(|c| c.norm()).sum();
            worst = worst.max(wn / vn);
        }
        self.norm_one_a * worst
    }
}

/// Eigenvalues of a complex 2x2 matrix [[a, b], [c, d]], returned with
/// the `+sqrt` branch first: (t/2 + s, t/2 - s) where s^2 = (a-d)^2/4 + bc.
pub fn eig2(a: C, b: C, c: C, d: C) -> (C, C) {
    let half_tr = 0.5 * (a + d);
    let s = (0.25 * (a - d) * (a - d) + b * c).sqrt();
    (half_tr + s, half_tr - s)
}
