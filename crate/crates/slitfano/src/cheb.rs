//! Weighted Chebyshev spectral basis on the aperture interval I = (-1/2, 1/2).
//!
//! Trial and test functions are chi_j(X) = T_j(2X)/sqrt(1/4 - X^2), which
//! matches the inverse-square-root edge behavior of the aperture flux.
//! Under X = cos(theta)/2 the pairing <f, chi_j> becomes a plain cosine
//! integral, so Galerkin matrices of smooth kernels follow from the
//! Gauss-Chebyshev product rule, while the logarithmic kernels
//! (X-Y)^p ln|X-Y| and the corner logs ln(X+Y+1), ln(1-X-Y) have exact
//! entries from classical log-Chebyshev identities.

use crate::linalg::CMat;
use crate::special::{bessel_j_seq, gauss_legendre, ln_abs_sinc};
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

type C = Complex64;

/// Largest transverse slit mode retained in the separable interior
/// residual. The residual coefficients decay like 1/m^3 with an
/// O(k^2 eps^2) prefactor, so the tail beyond this cap is far below
/// double-precision noise for every configuration of interest.
pub const MAX_INTERIOR_MODES: usize = 512;

/// Kernel of the fixed log operator: rho(X,Y) = (1/pi)[ln|X-Y|
/// + ln|sin(pi(X-Y)/2)| + ln|sin(pi(X+Y+1)/2)|].
pub fn rho_kernel(x: f64, y: f64) -> f64 {
    let z = x - y;
    let s = x + y + 1.0;
    (z.abs().ln() + (0.5 * PI * z).sin().abs().ln() + (0.5 * PI * s).sin().abs().ln()) / PI
}

/// Coefficient vector in the T_s basis with multiply-by-u support.
#[derive(Clone, Debug)]
struct ChebPoly(Vec<f64>);

impl ChebPoly {
    fn unit(j: usize, len: usize) -> Self {
        let mut c = vec![0.0; len.max(j + 1)];
        c[j] = 1.0;
        Self(c)
    }

    fn mul_by_u(&self) -> Self {
        let n = self.0.len();
        let mut out = vec![0.0; n + 1];
        for (s, &c) in self.0.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if s == 0 {
                out[1] += c;
            } else {
                out[s + 1] += 0.5 * c;
                out[s - 1] += 0.5 * c;
            }
        }
        Self(out)
    }

    fn mul_by_u_pow(&self, p: usize) -> Self {
        let mut cur = self.clone();
        for _ in 0..p {
            cur = cur.mul_by_u();
        }
        cur
    }

    /// Action of f -> int ln|u-v| f(v) w(v) dv in coefficient space:
    /// T_0 -> -pi ln2, T_s -> -(pi/s) T_s.
    fn apply_log(&self) -> Self {
        let mut out = vec![0.0; self.0.len()];
        for (s, &c) in self.0.iter().enumerate() {
            if s == 0 {
                out[0] += -PI * (2.0_f64).ln() * c;
            } else {
                out[s] += -PI / s as f64 * c;
            }
        }
        Self(out)
    }

    /// <self, T_i>_w = pi c_0 (i = 0) or (pi/2) c_i.
    fn moment(&self, i: usize) -> f64 {
        let c = self.0.get(i).copied().unwrap_or(0.0);
        if i == 0 {
            PI * c
        } else {
            0.5 * PI * c
        }
    }
}

fn binom(p: usize, r: usize) -> f64 {
    let mut b = 1.0;
    for i in 0..r {
        b = b * (p - i) as f64 / (i + 1) as f64;
    }
    b
}

/// Exact Galerkin matrix of (X-Y)^p ln|X-Y| in the weighted basis.
pub fn log_moment_matrix(n: usize, p: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let mut m_val = 0.0;
            let mut d_val = 0.0;
            for r in 0..=p {
                let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                let w = binom(p, r) * sign;
                let vr_ej = ChebPoly::unit(j, n).mul_by_u_pow(r);
                // Log part: u^{p-r} * Lambda[v^r T_j], tested against T_i.
                let lam = vr_ej.apply_log().mul_by_u_pow(p - r);
                m_val += w * lam.moment(i);
                // Plain (u-v)^p moment for the ln 2 correction: the u and v
                // integrals factor.
                let u_pow = ChebPoly::unit(0, n).mul_by_u_pow(p - r);
                d_val += w * u_pow.moment(i) * vr_ej.moment(0);
            }
            m[(i, j)] = C::new(
                (m_val - (2.0_f64).ln() * d_val) / (2.0_f64).powi(p as i32),
                0.0,
            );
        }
    }
    m
}

/// Exact Galerkin matrix of ln(X+Y+1) via the Chebyshev expansion of
/// ln(t - u) for t outside [-1, 1]; the remaining one-dimensional integral
/// is analytic in the Chebyshev angle and handled by Gauss-Legendre.
pub fn corner_log_matrix_plus(n: usize) -> CMat {
    let n_gl = (2 * n + 64).max(96);
    let (gx, gw) = gauss_legendre(n_gl);
    let mut m = CMat::zeros(n, n);
    for (node, w) in gx.iter().zip(gw.iter()) {
        let phi = 0.5 * PI * (node + 1.0);
        let wphi = 0.5 * PI * w;
        let v = phi.cos();
        let t = 2.0 + v;
        let zeta = t + (t * t - 1.0).sqrt();
        for i in 0..n {
            // Phi_i(t) = int ln(t - u) T_i w du; the ln(t + u) variant gains (-1)^i.
            let phi_i = if i == 0 {
                PI * (0.5 * zeta).ln()
            } else {
                -PI / i as f64 * zeta.powi(-(i as i32))
            };
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            for j in 0..n {
                m[(i, j)] += C::new(sign * phi_i * (j as f64 * phi).cos() * wphi, 0.0);
            }
        }
    }
    // ln(X+Y+1) = ln(u+v+2) - ln 2 under the half-interval scaling.
    m[(0, 0)] -= C::new(PI * PI * (2.0_f64).ln(), 0.0);
    m
}

/// Exact Galerkin matrix of ln(1-X-Y) = parity flip of ln(X+Y+1).
pub fn corner_log_matrix_minus(plus: &CMat) -> CMat {
    CMat::from_fn(plus.nrows, plus.ncols, |i, j| {
        if (i + j) % 2 == 0 {
            plus[(i, j)]
        } else {
            -plus[(i, j)]
        }
    })
}

/// Precomputed, k-independent spectral data for one basis size.
pub struct SBasis {
    pub n: usize,
    /// Quadrature size of the Gauss-Chebyshev product rule.
    pub m_quad: usize,
    /// Quadrature nodes X_p = cos(theta_p)/2 on I.
    pub xs: Vec<f64>,
    /// cos(i theta_p) table, row i, column p.
    cos_table: Vec<f64>,
    /// Exact Galerkin matrix of ln|X-Y|.
    pub l0: CMat,
    /// Exact Galerkin matrix of (X-Y)^2 ln|X-Y|.
    pub l2: CMat,
    /// Galerkin matrix of the fixed log operator S (kernel rho).
    pub s_mat: CMat,
    /// Cosine moments q[j][m-1] = int cos(m pi (X+1/2)) chi_j dX for m >= 1.
    q_cos: Vec<f64>,
}

impl SBasis {
    fn build(n: usize) -> Self {
        let m_quad = 4 * n;
        let thetas: Vec<f64> = (0..m_quad)
            .map(|p| (p as f64 + 0.5) * PI / m_quad as f64)
            .collect();
        let xs: Vec<f64> = thetas.iter().map(|t| 0.5 * t.cos()).collect();
        let mut cos_table = vec![0.0; n * m_quad];
        for i in 0..n {
            for (p, t) in thetas.iter().enumerate() {
                cos_table[i * m_quad + p] = (i as f64 * t).cos();
            }
        }
        let l0 = log_moment_matrix(n, 0);
        let l2 = log_moment_matrix(n, 2);
        let corner_p = corner_log_matrix_plus(n);
        let corner_m = corner_log_matrix_minus(&corner_p);

        let mut basis = Self {
            n,
            m_quad,
            xs,
            cos_table,
            l0: l0.clone(),
            l2,
            s_mat: CMat::zeros(n, n),
            q_cos: Vec::new(),
        };

        // S = (2/pi) L0 + (1/pi)(corner_+ + corner_-) + (1/pi) GC[sigma + F_c],
        // where sigma and F_c are the analytic leftovers of the two
        // ln|sin| factors after their log singularities are split off.
        let smooth = basis.assemble_smooth_fn(|x, y| {
            let z = x - y;
            let sigma = (0.5 * PI).ln() + ln_abs_sinc(0.5 * PI * z);
            let s = x + y + 1.0;
            let sp = s.min(2.0 - s);
            let fc = (0.5 * PI).ln() + ln_abs_sinc(0.5 * PI * sp) - (2.0 - sp).ln();
            C::new(sigma + fc, 0.0)
        });
        let mut s_mat = CMat::zeros(n, n);
        s_mat.add_scaled(&l0, C::new(2.0 / PI, 0.0));
        s_mat.add_scaled(&corner_p, C::new(1.0 / PI, 0.0));
        s_mat.add_scaled(&corner_m, C::new(1.0 / PI, 0.0));
        s_mat.add_scaled(&smooth, C::new(1.0 / PI, 0.0));
        basis.s_mat = s_mat;

        // Cosine moments q_{j m} = pi J_j(m pi/2) cos((m+j) pi/2).
        let mut q_cos = vec![0.0; n * MAX_INTERIOR_MODES];
        for m in 1..=MAX_INTERIOR_MODES {
            let js = bessel_j_seq(n - 1, m as f64 * PI / 2.0);
            for (j, &jv) in js.iter().enumerate() {
                let c = match (m + j) % 4 {
                    0 => 1.0,
                    2 => -1.0,
                    _ => 0.0,
                };
                q_cos[j * MAX_INTERIOR_MODES + (m - 1)] = PI * jv * c;
            }
        }
        basis.q_cos = q_cos;
        basis
    }

    /// Galerkin matrix of a smooth kernel from its values on the tensor
    /// quadrature grid: A = (pi/M)^2 C G C^T.
    pub fn assemble_smooth(&self, grid: &CMat) -> CMat {
        let n = self.n;
        let m = self.m_quad;
        assert_eq!(grid.nrows, m);
        assert_eq!(grid.ncols, m);
        // tmp[i][q] = sum_p cos(i theta_p) grid[p][q]
        let mut tmp = CMat::zeros(n, m);
        for i in 0..n {
            let crow = &self.cos_table[i * m..(i + 1) * m];
            for p in 0..m {
                let c = crow[p];
                let grow = &grid.data[p * m..(p + 1) * m];
                let trow = &mut tmp.data[i * m..(i + 1) * m];
                for (t, &g) in trow.iter_mut().zip(grow) {
                    *t += c * g;
                }
            }
        }
        let scale = (PI / m as f64) * (PI / m as f64);
        CMat::from_fn(n, n, |i, j| {
            let trow = &tmp.data[i * m..(i + 1) * m];
            let crow = &self.cos_table[j * m..(j + 1) * m];
            let mut acc = C::new(0.0, 0.0);
            for (t, &c) in trow.iter().zip(crow) {
                acc += t * c;
            }
            acc * scale
        })
    }

    pub fn assemble_smooth_fn(&self, f: impl Fn(f64, f64) -> C) -> CMat {
        let m = self.m_quad;
        let grid = CMat::from_fn(m, m, |p, q| f(self.xs[p], self.xs[q]));
        self.assemble_smooth(&grid)
    }

    /// Rank-one Galerkin matrix of the averaging projection P phi = <phi,1> 1.
    pub fn projection_matrix(&self) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        m[(0, 0)] = C::new(PI * PI, 0.0);
        m
    }

    /// Galerkin right-hand side of the constant function 1.
    pub fn constant_rhs(&self) -> Vec<C> {
        let mut v = vec![C::new(0.0, 0.0); self.n];
        v[0] = C::new(PI, 0.0);
        v
    }

    /// <phi, 1> from the coefficient vector of phi.
    pub fn average(&self, coeffs: &[C]) -> C {
        PI * coeffs[0]
    }

    /// Moments int e^{i c X} chi_j(X) dX = pi i^j J_j(c/2) for j < n.
    pub fn fourier_moments(&self, c: f64) -> Vec<C> {
        let b = 0.5 * c;
        let js = bessel_j_seq(self.n - 1, b.abs());
        (0..self.n)
            .map(|j| {
                let sign = if b < 0.0 && j % 2 == 1 { -1.0 } else { 1.0 };
                let ipow = match j % 4 {
                    0 => C::new(1.0, 0.0),
                    1 => C::new(0.0, 1.0),
                    2 => C::new(-1.0, 0.0),
                    _ => C::new(0.0, -1.0),
                };
                PI * sign * js[j] * ipow
            })
            .collect()
    }

    /// q_{j m} = int cos(m pi (X + 1/2)) chi_j(X) dX, m >= 1.
    pub fn cos_moment(&self, j: usize, m: usize) -> f64 {
        assert!(m >= 1 && m <= MAX_INTERIOR_MODES && j < self.n);
        self.q_cos[j * MAX_INTERIOR_MODES + (m - 1)]
    }

    /// Separable matrix sum_m coeffs[m-1] q_{i m} q_{j m}.
    pub fn cosine_residual_matrix(&self, coeffs: &[C]) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n, n);
        for (mi, &c) in coeffs.iter().enumerate() {
            let m = mi + 1;
            if c.norm() == 0.0 {
                continue;
            }
            for i in 0..n {
                let qi = self.cos_moment(i, m);
                if qi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let qj = self.cos_moment(j, m);
                    if qj != 0.0 {
                        out[(i, j)] += c * qi * qj;
                    }
                }
            }
        }
        out
    }

    /// Parity flip J = diag((-1)^j): coefficients of phi(-X).
    pub fn parity_matrix(&self) -> CMat {
        CMat::from_fn(self.n, self.n, |i, j| {
            if i == j {
                C::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
            } else {
                C::new(0.0, 0.0)
            }
        })
    }

    /// Evaluate a coefficient vector as a function value at X in I
    /// (including the edge weight).
    pub fn eval(&self, coeffs: &[C], x: f64) -> C {
        let u = 2.0 * x;
        let w = (0.25 - x * x).sqrt();
        let theta = u.clamp(-1.0, 1.0).acos();
        let mut acc = C::new(0.0, 0.0);
        for (j, &c) in coeffs.iter().enumerate() {
            acc += c * (j as f64 * theta).cos();
        }
        acc / w
    }
}

static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SBasis>>>> = OnceLock::new();

/// Shared per-N basis data. Thread-safe and semantically transparent:
/// entries are immutable once built.
pub fn basis(n: usize) -> Arc<SBasis> {
    assert!(n >= 4, "basis size too small");
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(n).or_insert_with(|| Arc::new(SBasis::build(n))).clone()
}
