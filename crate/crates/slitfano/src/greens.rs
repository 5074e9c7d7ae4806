//! Quasi-periodic Green functions of the slit-grating scattering problem.
//!
//! The grating is a perfectly conducting slab of thickness 1 with two
//! slits of width `eps` per period `d`, centered at `x1 = ±d0/2`. All
//! kernels are built from the Rayleigh series
//!
//! g(k,kappa; x,y) = -(i/2d) sum_n (1/zeta_n) e^{i kappa_n (x1-y1) + i zeta_n |x2-y2|},
//!
//! with `kappa_n = kappa + 2 pi n / d` and `zeta_n = sqrt(k^2 - kappa_n^2)`
//! on the branch cut along the negative imaginary axis. On the aperture
//! lines (`x2 = y2`) the series converges like 1/n and is summed with a
//! Kummer acceleration: the 1/n, 1/n^2, ..., 1/n^5 asymptote families are
//! subtracted term by term and added back in closed form (log, Clausen and
//! related periodic sums), leaving a tail that decays like 1/n^6.

use crate::error::{Error, Result};
use crate::special::{
    cis, clausen_cl2, clausen_s3, clausen_s4, clausen_s5, cot_stable, inv_sin_stable, ln_abs_sinc,
    ZETA3, ZETA5,
};
use num_complex::Complex64;
use std::f64::consts::PI;

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// Default margin for rejecting spectral points near a Wood anomaly.
pub const WOOD_MARGIN: f64 = 1e-6;
/// Hard cap on lattice-series terms.
pub const MAX_TERMS: usize = 1_000_000;
/// Default absolute tolerance for kernel and constant evaluations.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Grating geometry. The slab thickness is normalized to 1; `d` is the
/// period, `d0` the center-to-center slit offset and `eps` the slit width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConfig {
    pub d: f64,
    pub d0: f64,
    pub eps: f64,
}

impl PhysicalConfig {
    pub fn new(d: f64, d0: f64, eps: f64) -> Result<Self> {
        if !(d > 0.0) {
            return Err(Error::InvalidConfig(format!("period d = {d} must be positive")));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidConfig(format!("slit width eps = {eps} must be positive")));
        }
        if !(eps < d0) {
            return Err(Error::InvalidConfig(format!(
                "slits must be disjoint: eps = {eps} must be < d0 = {d0}"
            )));
        }
        if !(d0 + eps < d) {
            return Err(Error::InvalidConfig(format!(
                "slits must fit inside one period: d0 + eps = {} must be < d = {d}",
                d0 + eps
            )));
        }
        Ok(Self { d, d0, eps })
    }

    /// Reciprocal lattice spacing 2 pi / d.
    #[inline]
    pub fn a(&self) -> f64 {
        2.0 * PI / self.d
    }
}

/// Complex frequency `k` together with the real Bloch wavenumber `kappa`
/// restricted to the first Brillouin zone (-pi/d, pi/d].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub k: C,
    pub kappa: f64,
}

impl SpectralPoint {
    pub fn new(k: C, kappa: f64, cfg: &PhysicalConfig) -> Result<Self> {
        let edge = PI / cfg.d;
        if !(kappa > -edge && kappa <= edge) {
            return Err(Error::InvalidConfig(format!(
                "kappa = {kappa} outside the first Brillouin zone (-{edge}, {edge}]"
            )));
        }
        if !k.re.is_finite() || !k.im.is_finite() {
            return Err(Error::InvalidConfig("non-finite frequency".into()));
        }
        Ok(Self { k, kappa })
    }

    pub fn real(k: f64, kappa: f64, cfg: &PhysicalConfig) -> Result<Self> {
        Self::new(C::new(k, 0.0), kappa, cfg)
    }

    #[inline]
    pub fn is_real_k(&self) -> bool {
        self.k.im == 0.0
    }

    /// kappa_n = kappa + 2 pi n / d.
    #[inline]
    pub fn kappa_n(&self, n: i64, cfg: &PhysicalConfig) -> f64 {
        self.kappa + cfg.a() * n as f64
    }
}

/// Square root with branch cut along the negative imaginary axis
/// (argument taken in (-pi/2, 3pi/2), sqrt(1) = 1).
#[inline]
pub fn branch_sqrt(w: C) -> C {
    let r = w.norm();
    if r == 0.0 {
        return C::new(0.0, 0.0);
    }
    let mut theta = w.arg();
    if theta < -PI / 2.0 {
        theta += 2.0 * PI;
    }
    C::from_polar(r.sqrt(), 0.5 * theta)
}

fn zeta_raw(k: C, kappa_n: f64) -> C {
    branch_sqrt(k * k - kappa_n * kappa_n)
}

/// zeta_n(k, kappa) = sqrt(k^2 - kappa_n^2) on the outgoing branch: real
/// positive for propagating orders, positive imaginary for evanescent ones.
pub fn zeta(n: i64, pt: &SpectralPoint, cfg: &PhysicalConfig) -> Result<C> {
    let kn = pt.kappa_n(n, cfg);
    if pt.is_real_k() {
        let k = pt.k.re;
        if (k * k - kn * kn).abs() < WOOD_MARGIN {
            return Err(Error::BranchPointProximity {
                n,
                branch: kn.abs(),
                margin: WOOD_MARGIN,
            });
        }
    }
    Ok(zeta_raw(pt.k, kn))
}

/// True iff (kappa, Re k) lies in the diamond with exactly one propagating
/// Rayleigh order: |kappa| < pi/d, |kappa| < k (the n = 0 order radiates,
/// zeta_0 real) and k < |kappa + 2 pi n/d| for all n != 0 (every other
/// order evanescent).
pub fn in_diamond(pt: &SpectralPoint, cfg: &PhysicalConfig) -> bool {
    let k = pt.k.re;
    let edge = PI / cfg.d;
    if !(pt.kappa.abs() < edge) || !(k > pt.kappa.abs()) {
        return false;
    }
    // Among n != 0 the n = -1 and n = +1 orders are binding.
    k < (cfg.a() - pt.kappa.abs())
}

/// Reject real-axis points within `margin` of any Rayleigh branch point.
pub fn check_wood(pt: &SpectralPoint, cfg: &PhysicalConfig, margin: f64) -> Result<()> {
    if !pt.is_real_k() {
        return Ok(());
    }
    let k = pt.k.re.abs();
    let a = cfg.a();
    let n_max = ((k + pt.kappa.abs()) / a).ceil() as i64 + 2;
    for n in -n_max..=n_max {
        let bp = pt.kappa_n(n, cfg).abs();
        if (k - bp).abs() < margin {
            return Err(Error::BranchPointProximity {
                n,
                branch: bp,
                margin,
            });
        }
    }
    Ok(())
}

/// Kummer-accelerated evaluator for aperture-line lattice sums
/// A(p) = -(i/d) sum_n e^{i kappa_n p} / zeta_n at fixed (k, kappa).
///
/// Construction subtracts the asymptote of 1/(i zeta_n) through order
/// n^{-5}; `value` restores those families in closed form, so a call costs
/// only the pre-truncated fast tail (typically under a hundred pairs).
pub struct LatticeAccel {
    d: f64,
    a: f64,
    k: C,
    kappa: f64,
    inv_izeta0: C,
    c3: C,
    c4: C,
    c5: C,
    /// (R'_n, R'_{-n}) for n = 1..: remainders after asymptote subtraction.
    rp: Vec<(C, C)>,
    /// sum over the stored pairs of (R'_n + R'_{-n}).
    fast0: C,
}

impl LatticeAccel {
    pub fn new(pt: &SpectralPoint, cfg: &PhysicalConfig, tol: f64) -> Result<Self> {
        check_wood(pt, cfg, WOOD_MARGIN)?;
        let a = cfg.a();
        let d = cfg.d;
        let k = pt.k;
        let kappa = pt.kappa;
        let zeta0 = zeta_raw(k, kappa);
        if zeta0.norm() == 0.0 {
            return Err(Error::BranchPointProximity {
                n: 0,
                branch: kappa.abs(),
                margin: WOOD_MARGIN,
            });
        }
        let k2 = k * k;
        let c3 = 0.5 * (k2 + 2.0 * kappa * kappa);
        let c4 = kappa * (kappa * kappa + 1.5 * k2);
        let kp2 = kappa * kappa;
        let c5 = kp2 * kp2 + 3.0 * kp2 * k2 + 0.375 * k2 * k2;

        let floor = 1e-16 * (1.0 + 1.0 / a);
        let threshold = (0.05 * tol).max(floor);
        let mut rp = Vec::with_capacity(64);
        let mut fast0 = C::new(0.0, 0.0);
        let mut quiet = 0usize;
        let mut n = 1usize;
        loop {
            let nf = n as f64;
            let t = 1.0 / (a * nf);
            let t2 = t * t;
            let t3 = t2 * t;
            let t4 = t3 * t;
            let t5 = t4 * t;
            let s_pos = kappa * t2 - c3 * t3 + c4 * t4 - c5 * t5;
            let s_neg = -kappa * t2 - c3 * t3 - c4 * t4 - c5 * t5;
            let zp = zeta_raw(k, kappa + a * nf);
            let zm = zeta_raw(k, kappa - a * nf);
            let rp_pos = 1.0 / (I * zp) + t - s_pos;
            let rp_neg = 1.0 / (I * zm) + t - s_neg;
            fast0 += rp_pos + rp_neg;
            rp.push((rp_pos, rp_neg));
            if rp_pos.norm() + rp_neg.norm() < threshold {
                quiet += 1;
                if quiet >= 3 {
                    break;
                }
            } else {
                quiet = 0;
            }
            n += 1;
            if n > MAX_TERMS {
                return Err(Error::NonConvergence {
                    what: "lattice sum asymptote remainder",
                    tol,
                    max_terms: MAX_TERMS,
                });
            }
        }
        Ok(Self {
            d,
            a,
            k,
            kappa,
            inv_izeta0: 1.0 / (I * zeta0),
            c3,
            c4,
            c5,
            rp,
            fast0,
        })
    }

    #[inline]
    pub fn zeta0(&self) -> C {
        1.0 / (I * self.inv_izeta0)
    }

    pub fn pair_count(&self) -> usize {
        self.rp.len()
    }

    /// Closed-form part of sum_{n != 0} s_n e^{i n theta} for the subtracted
    /// asymptote families (theta real).
    fn closed(&self, theta: f64) -> C {
        let a = self.a;
        let a2 = a * a;
        2.0 * I * self.kappa / a2 * clausen_cl2(theta) - 2.0 * self.c3 / (a2 * a) * clausen_s3(theta)
            + 2.0 * I * self.c4 / (a2 * a2) * clausen_s4(theta)
            - 2.0 * self.c5 / (a2 * a2 * a) * clausen_s5(theta)
    }

    fn closed_zero(&self) -> C {
        let a = self.a;
        let a3 = a * a * a;
        -2.0 * self.c3 / a3 * ZETA3 - 2.0 * self.c5 / (a3 * a * a) * ZETA5
    }

    /// Fast tail sum_{n != 0} R'_n e^{i n theta}.
    fn fast(&self, theta: f64) -> C {
        let e = cis(theta);
        let mut ep = C::new(1.0, 0.0);
        let mut acc = C::new(0.0, 0.0);
        for &(rp_pos, rp_neg) in &self.rp {
            ep *= e;
            acc += rp_pos * ep + rp_neg * ep.conj();
        }
        acc
    }

    /// A(p) = -(i/d) sum_n e^{i kappa_n p}/zeta_n for p not a multiple of d.
    pub fn value(&self, p: f64) -> Result<C> {
        let theta = self.a * p;
        let s = (0.5 * theta).sin().abs();
        if s < 1e-14 {
            return Err(Error::SingularArgument);
        }
        let sum = self.inv_izeta0 + self.fast(theta) + self.closed(theta);
        Ok(cis(self.kappa * p) * (sum / self.d + (2.0 * s).ln() / PI))
    }

    /// beta_e(k, kappa, eps): the regularized aperture self-interaction
    /// constant (1/pi) ln(2 pi eps / d) + sum_{n!=0}(1/(2 pi |n|) - i/(d zeta_n)) - i/(d zeta_0).
    pub fn beta_e(&self, eps: f64) -> C {
        (self.a * eps).ln() / PI
            + (self.inv_izeta0 + self.fast0 + self.closed_zero()) / self.d
    }

    /// The coefficient of Z^2 ln|Z| in the aperture kernel about Z = 0.
    fn p2(&self, eps: f64) -> C {
        -self.k * self.k * eps * eps / (4.0 * PI)
    }

    /// Smoothed exterior remainder r_e(Z) - P2 Z^2 ln|Z| at Z = X - Y,
    /// where r_e = G_eps^e - beta_e - (1/pi) ln|X - Y|.
    pub fn exterior_remainder_smooth(&self, eps: f64, z: f64) -> C {
        if z == 0.0 {
            return C::new(0.0, 0.0);
        }
        let theta = self.a * eps * z;
        let phase = cis(self.kappa * eps * z);
        let part1 = (phase * (self.inv_izeta0 + self.fast(theta) + self.closed(theta))
            - (self.inv_izeta0 + self.fast0 + self.closed_zero()))
            / self.d;
        let ln_scale = (self.a * eps * z.abs()).ln();
        let part2 = ((phase - 1.0) * ln_scale + phase * ln_abs_sinc(0.5 * theta)) / PI;
        part1 + part2 - self.p2(eps) * z * z * z.abs().ln()
    }

    /// Coefficient multiplying the exact (X-Y)^2 ln|X-Y| Galerkin block in
    /// the exterior assembly.
    pub fn z2log_coefficient(&self, eps: f64) -> C {
        self.p2(eps)
    }

    /// Grids of the smoothed exterior remainder and the two cross-slit
    /// remainders rho^{+-}(X,Y) = G^{e,+-}(X,Y) - beta^{+-} on the tensor
    /// product of `xs` with itself, plus the three constants
    /// (beta_e, beta^+, beta^-). One pass of rank-one updates over the
    /// stored tail shares the work between the three kernels.
    pub fn aperture_grids(&self, cfg: &PhysicalConfig, xs: &[f64]) -> Result<ApertureGrids> {
        use crate::linalg::CMat;
        let m = xs.len();
        let eps = cfg.eps;
        let d0 = cfg.d0;
        let a = self.a;

        let beta_e = self.beta_e(eps);
        let beta_p = self.value(d0)?;
        let beta_m = self.value(-d0)?;

        // Fast-tail accumulation, separable in (p, q).
        let mut fast_re = CMat::zeros(m, m);
        let mut fast_p = CMat::zeros(m, m);
        let mut fast_m = CMat::zeros(m, m);
        let e_base: Vec<C> = xs.iter().map(|&x| cis(a * eps * x)).collect();
        let mut u: Vec<C> = vec![C::new(1.0, 0.0); m];
        let ed0 = cis(a * d0);
        let mut ed0_pow = C::new(1.0, 0.0);
        for &(rn_pos, rn_neg) in &self.rp {
            for (uv, &ev) in u.iter_mut().zip(&e_base) {
                *uv *= ev;
            }
            ed0_pow *= ed0;
            let cp_pos = rn_pos * ed0_pow;
            let cp_neg = rn_neg * ed0_pow.conj();
            let cm_pos = rn_pos * ed0_pow.conj();
            let cm_neg = rn_neg * ed0_pow;
            for p in 0..m {
                let up = u[p];
                let row_re = &mut fast_re.data[p * m..(p + 1) * m];
                for (q, slot) in row_re.iter_mut().enumerate() {
                    let apq = up * u[q].conj();
                    *slot += rn_pos * apq + rn_neg * apq.conj();
                }
            }
            for p in 0..m {
                let up = u[p];
                let row_p = &mut fast_p.data[p * m..(p + 1) * m];
                for (q, slot) in row_p.iter_mut().enumerate() {
                    let apq = up * u[q].conj();
                    *slot += cp_pos * apq + cp_neg * apq.conj();
                }
            }
            for p in 0..m {
                let up = u[p];
                let row_m = &mut fast_m.data[p * m..(p + 1) * m];
                for (q, slot) in row_m.iter_mut().enumerate() {
                    let apq = up * u[q].conj();
                    *slot += cm_pos * apq + cm_neg * apq.conj();
                }
            }
        }

        let fast0 = self.fast0;
        let closed0 = self.closed_zero();
        let p2 = self.p2(eps);
        let mut re_smooth = CMat::zeros(m, m);
        let mut rho_p = CMat::zeros(m, m);
        let mut rho_m = CMat::zeros(m, m);
        for p in 0..m {
            for q in 0..m {
                let z = xs[p] - xs[q];
                let theta = a * eps * z;
                // Exterior same-slit remainder, smoothed.
                re_smooth[(p, q)] = if z == 0.0 {
                    C::new(0.0, 0.0)
                } else {
                    let phase = cis(self.kappa * eps * z);
                    let part1 = (phase
                        * (self.inv_izeta0 + fast_re[(p, q)] + self.closed(theta))
                        - (self.inv_izeta0 + fast0 + closed0))
                        / self.d;
                    let ln_scale = (a * eps * z.abs()).ln();
                    let part2 =
                        ((phase - 1.0) * ln_scale + phase * ln_abs_sinc(0.5 * theta)) / PI;
                    part1 + part2 - p2 * z * z * z.abs().ln()
                };
                // Cross-slit kernels: G^{e,+-}(Z) - beta^{+-}.
                let tp = theta + a * d0;
                let sum_p = self.inv_izeta0 + fast_p[(p, q)] + self.closed(tp);
                let gp = cis(self.kappa * (eps * z + d0))
                    * (sum_p / self.d + (2.0 * (0.5 * tp).sin().abs()).ln() / PI);
                rho_p[(p, q)] = gp - beta_p;
                let tm = theta - a * d0;
                let sum_m = self.inv_izeta0 + fast_m[(p, q)] + self.closed(tm);
                let gm = cis(self.kappa * (eps * z - d0))
                    * (sum_m / self.d + (2.0 * (0.5 * tm).sin().abs()).ln() / PI);
                rho_m[(p, q)] = gm - beta_m;
            }
        }
        Ok(ApertureGrids {
            re_smooth,
            rho_plus: rho_p,
            rho_minus: rho_m,
            beta_e,
            beta_plus: beta_p,
            beta_minus: beta_m,
            z2log_coeff: p2,
        })
    }
}

/// Output of [`LatticeAccel::aperture_grids`].
pub struct ApertureGrids {
    pub re_smooth: crate::linalg::CMat,
    pub rho_plus: crate::linalg::CMat,
    pub rho_minus: crate::linalg::CMat,
    pub beta_e: C,
    pub beta_plus: C,
    pub beta_minus: C,
    pub z2log_coeff: C,
}

/// Quasi-periodic Green function g(k, kappa; x, y).
pub fn quasiperiodic_green(
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    x: (f64, f64),
    y: (f64, f64),
    tol: f64,
) -> Result<C> {
    let dx1 = x.0 - y.0;
    let h = (x.1 - y.1).abs();
    if h == 0.0 {
        let accel = LatticeAccel::new(pt, cfg, tol)?;
        return match accel.value(dx1) {
            Ok(v) => Ok(0.5 * v),
            Err(e) => Err(e),
        };
    }
    check_wood(pt, cfg, WOOD_MARGIN)?;
    // Vertical separation: evanescent orders decay like e^{-a |n| h}.
    let mut acc = C::new(0.0, 0.0);
    let mut n: i64 = 0;
    let mut quiet = 0usize;
    loop {
        let mut shell = C::new(0.0, 0.0);
        let orders: &[i64] = if n == 0 { &[0] } else { &[n, -n] };
        for &m in orders {
            let kn = pt.kappa_n(m, cfg);
            let zn = zeta_raw(pt.k, kn);
            shell += (I * (kn * dx1 + zn * h)).exp() / zn;
        }
        acc += shell;
        if n > 0 && shell.norm() < 0.25 * tol * cfg.d {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
        n += 1;
        if n as usize > MAX_TERMS {
            return Err(Error::NonConvergence {
                what: "quasi-periodic Green function",
                tol,
                max_terms: MAX_TERMS,
            });
        }
    }
    Ok(-I / (2.0 * cfg.d) * acc)
}

/// Half-space Green function with Neumann condition on the slab face:
/// g^e(x,y) = g(x,y) + g(x',y) with x' the mirror image in {x2 = 1}
/// (upper region) or {x2 = 0} (lower region).
pub fn exterior_green(
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    x: (f64, f64),
    y: (f64, f64),
    upper: bool,
    tol: f64,
) -> Result<C> {
    let x_image = if upper { (x.0, 2.0 - x.1) } else { (x.0, -x.1) };
    Ok(quasiperiodic_green(pt, cfg, x, y, tol)?
        + quasiperiodic_green(pt, cfg, x_image, y, tol)?)
}

/// Which rescaled exterior aperture kernel to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExteriorKernelKind {
    SameSlit,
    CrossPlus,
    CrossMinus,
}

/// Rescaled exterior kernels on I = (-1/2, 1/2):
/// G_eps^e(X,Y), G_eps^{e,+}(X,Y), G_eps^{e,-}(X,Y).
pub fn exterior_kernel(
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    x: f64,
    y: f64,
    which: ExteriorKernelKind,
    tol: f64,
) -> Result<C> {
    let accel = LatticeAccel::new(pt, cfg, tol)?;
    let z = cfg.eps * (x - y);
    match which {
        ExteriorKernelKind::SameSlit => {
            if x == y {
                return Err(Error::SingularArgument);
            }
            accel.value(z)
        }
        ExteriorKernelKind::CrossPlus => accel.value(z + cfg.d0),
        ExteriorKernelKind::CrossMinus => accel.value(z - cfg.d0),
    }
}

/// Axial wavenumber gamma_m = sqrt(k^2 - (m pi / eps)^2) of the m-th
/// transverse slit mode, on the same branch as zeta_n.
#[inline]
pub fn gamma_m(m: usize, k: C, eps: f64) -> C {
    let km = m as f64 * PI / eps;
    branch_sqrt(k * k - km * km)
}

/// Per-mode coefficient of the same-end interior kernel: cot(gamma_m)/(eps gamma_m).
pub fn interior_mode_coeff_same(m: usize, k: C, eps: f64) -> Result<C> {
    let g = gamma_m(m, k, eps);
    let inv_sin = inv_sin_stable(g);
    if inv_sin.norm() > 1e12 {
        return Err(Error::ModeResonance {
            m,
            value: 1.0 / inv_sin.norm(),
        });
    }
    Ok(cot_stable(g) / (eps * g))
}

/// Per-mode coefficient of the opposite-end interior kernel: 1/(eps gamma_m sin gamma_m).
pub fn interior_mode_coeff_opposite(m: usize, k: C, eps: f64) -> Result<C> {
    let g = gamma_m(m, k, eps);
    let inv_sin = inv_sin_stable(g);
    if inv_sin.norm() > 1e12 {
        return Err(Error::ModeResonance {
            m,
            value: 1.0 / inv_sin.norm(),
        });
    }
    Ok(inv_sin / (eps * g))
}

/// Interior kernel variant: both points on the same slit end, or one on
/// each end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteriorVariant {
    SameEnd,
    OppositeEnd,
}

/// Rescaled interior (slit waveguide) kernels G_eps^i and G~_eps^i on I.
///
/// The axial mode sum is collapsed per transverse mode m; the m-series is
/// split into its closed-form logarithmic part plus a residual that decays
/// like 1/m^3 (same end) or e^{-m pi/eps} (opposite end).
pub fn interior_kernel(
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    x: f64,
    y: f64,
    variant: InteriorVariant,
    tol: f64,
) -> Result<C> {
    let eps = cfg.eps;
    let k = pt.k;
    match variant {
        InteriorVariant::SameEnd => {
            if x == y {
                return Err(Error::SingularArgument);
            }
            let logs = (ln_abs_log_pair(x, y)) / PI;
            let mut acc = interior_mode_coeff_same(0, k, eps)? + 2.0 * (2.0_f64).ln() / PI + logs;
            let mut m = 1usize;
            loop {
                let res =
                    2.0 * interior_mode_coeff_same(m, k, eps)? + 2.0 / (m as f64 * PI);
                let cm = (m as f64 * PI * (x + 0.5)).cos() * (m as f64 * PI * (y + 0.5)).cos();
                acc += res * cm;
                if res.norm() < tol {
                    break;
                }
                m += 1;
                if m > 100_000 {
                    return Err(Error::NonConvergence {
                        what: "interior kernel residual series",
                        tol,
                        max_terms: 100_000,
                    });
                }
            }
            Ok(acc)
        }
        InteriorVariant::OppositeEnd => {
            let mut acc = interior_mode_coeff_opposite(0, k, eps)?;
            let mut m = 1usize;
            loop {
                let res = 2.0 * interior_mode_coeff_opposite(m, k, eps)?;
                if res.norm() < tol {
                    break;
                }
                let cm = (m as f64 * PI * (x + 0.5)).cos() * (m as f64 * PI * (y + 0.5)).cos();
                acc += res * cm;
                m += 1;
                if m > 100_000 {
                    return Err(Error::NonConvergence {
                        what: "interior cross kernel series",
                        tol,
                        max_terms: 100_000,
                    });
                }
            }
            Ok(acc)
        }
    }
}

/// ln|sin(pi(X-Y)/2)| + ln|sin(pi(X+Y+1)/2)| (the interior log pair).
fn ln_abs_log_pair(x: f64, y: f64) -> f64 {
    let t1 = 0.5 * PI * (x - y);
    let t2 = 0.5 * PI * (x + y + 1.0);
    t1.sin().abs().ln() + t2.sin().abs().ln()
}

/// The set of scalar constants controlling the leading asymptotics at a
/// spectral point.
#[derive(Debug, Clone, Copy)]
pub struct BetaSet {
    pub beta_e: C,
    pub beta_plus: C,
    pub beta_minus: C,
    pub beta_i: C,
    pub beta_tilde: C,
    pub beta: C,
    pub gamma: C,
    pub beta_hat: C,
    pub eta: C,
}

impl BetaSet {
    /// sqrt(beta^- beta^+) on the branch that continues beta_hat through
    /// kappa = 0 (equals beta_minus * (1 + eta)).
    #[inline]
    pub fn sqrt_beta_pm(&self) -> C {
        self.beta_minus * (1.0 + self.eta)
    }

    /// beta + s beta~ evaluated through the cancellation-free combined form
    /// (cos k + s)/(eps k sin k) + beta_e + 2 ln 2 / pi, s = +-1.
    pub fn beta_pm_tilde(&self, sign: f64, k: C, eps: f64) -> C {
        let combo = (k.cos() + sign) * inv_sin_stable(k) / (eps * k);
        self.beta_e + 2.0 * (2.0_f64).ln() / PI + combo
    }
}

/// All closed-form constants of the leading-order theory at one spectral
/// point: beta_e, beta^{+-}, beta_i, beta~, beta, gamma, beta_hat, eta.
pub fn beta_constants(pt: &SpectralPoint, cfg: &PhysicalConfig, tol: f64) -> Result<BetaSet> {
    let accel = LatticeAccel::new(pt, cfg, tol)?;
    beta_constants_with(&accel, pt, cfg, tol)
}

/// Same as [`beta_constants`] but reusing an existing lattice evaluator.
pub fn beta_constants_with(
    accel: &LatticeAccel,
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    tol: f64,
) -> Result<BetaSet> {
    let eps = cfg.eps;
    let k = pt.k;
    let beta_e = accel.beta_e(eps);
    let beta_plus = accel.value(cfg.d0)?;
    let beta_minus = accel.value(-cfg.d0)?;
    let ln2 = (2.0_f64).ln();
    let cot_term = cot_stable(k) / (eps * k);
    let beta_i = cot_term + 2.0 * ln2 / PI;
    let beta_tilde = inv_sin_stable(k) / (eps * k);
    let beta = beta_e + beta_i;
    // gamma = beta - 1/(eps k tan k) - ln(eps)/pi is eps-free:
    // equivalent to beta_e at eps = 1 plus 2 ln 2 / pi.
    let gamma = accel.beta_e(1.0) + 2.0 * ln2 / PI;
    // beta_hat is the kappa = 0 value of beta^{+-} at the same k.
    let beta_hat = if pt.kappa == 0.0 {
        0.5 * (beta_plus + beta_minus)
    } else {
        let pt0 = SpectralPoint { k, kappa: 0.0 };
        LatticeAccel::new(&pt0, cfg, tol)?.value(cfg.d0)?
    };
    // sqrt(beta^- beta^+) on the branch near (beta^+ + beta^-)/2, which
    // reduces to beta_hat as kappa -> 0.
    let mid = 0.5 * (beta_plus + beta_minus);
    let mut s = (beta_minus * beta_plus).sqrt();
    if (s - mid).norm() > (s + mid).norm() {
        s = -s;
    }
    let eta = s / beta_minus - 1.0;
    Ok(BetaSet {
        beta_e,
        beta_plus,
        beta_minus,
        beta_i,
        beta_tilde,
        beta,
        gamma,
        beta_hat,
        eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg() -> PhysicalConfig {
        PhysicalConfig::new(1.0, 0.4, 0.05).unwrap()
    }

    /// Brute-force beta_e by direct pair summation of the defining series.
    fn beta_e_brute(k: f64, kappa: f64, cfg: &PhysicalConfig, n_terms: usize) -> C {
        let a = cfg.a();
        let d = cfg.d;
        let pt = SpectralPoint::real(k, kappa, cfg).unwrap();
        let mut acc = (a * cfg.eps).ln() / PI - I / (d * zeta_raw(pt.k, kappa));
        for n in 1..=n_terms {
            let nf = n as f64;
            for kn in [kappa + a * nf, kappa - a * nf] {
                acc += 1.0 / (2.0 * PI * nf) - I / (d * zeta_raw(pt.k, kn));
            }
        }
        acc
    }

    /// Brute-force aperture lattice sum -(i/d) sum e^{i kappa_n p}/zeta_n.
    fn lattice_brute(k: f64, kappa: f64, cfg: &PhysicalConfig, p: f64, n_terms: usize) -> C {
        let a = cfg.a();
        let mut acc = C::new(0.0, 0.0);
        for n in -(n_terms as i64)..=(n_terms as i64) {
            let kn = kappa + a * n as f64;
            acc += cis(kn * p) / zeta_raw(C::new(k, 0.0), kn);
        }
        -I / cfg.d * acc
    }

    #[test]
    fn zeta_examples() {
        let cfg = cfg();
        let pt = SpectralPoint::real(PI, 0.0, &cfg).unwrap();
        let z0 = zeta(0, &pt, &cfg).unwrap();
        assert_abs_diff_eq!(z0.re, PI, epsilon = 1e-14);
        assert_abs_diff_eq!(z0.im, 0.0, epsilon = 1e-14);
        let z1 = zeta(1, &pt, &cfg).unwrap();
        assert_abs_diff_eq!(z1.re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z1.im, PI * 3.0_f64.sqrt(), epsilon = 1e-12);

        let pt2 = SpectralPoint::real(2.83, 0.1, &cfg).unwrap();
        let z = zeta(0, &pt2, &cfg).unwrap();
        assert_abs_diff_eq!(z.re, (2.83_f64 * 2.83 - 0.01).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(z.re, 2.828_233, epsilon = 1e-5);
    }

    #[test]
    fn diamond_examples() {
        let cfg = cfg();
        let inside = SpectralPoint::real(2.83, 0.1, &cfg).unwrap();
        assert!(in_diamond(&inside, &cfg));
        let origin = SpectralPoint::real(0.0, 0.0, &cfg).unwrap();
        assert!(!in_diamond(&origin, &cfg));
        let above = SpectralPoint::real(6.5, 0.1, &cfg).unwrap();
        assert!(!in_diamond(&above, &cfg));
    }

    proptest! {
        /// Branch consistency: Im zeta >= 0 always; zeta real positive
        /// exactly when the order propagates (real k).
        #[test]
        fn zeta_branch_consistency(k in 0.05f64..6.0, kappa in -3.1f64..=3.1, n in -4i64..=4) {
            let cfg = cfg();
            let pt = SpectralPoint::real(k, kappa, &cfg).unwrap();
            let kn = pt.kappa_n(n, &cfg);
            if (k - kn.abs()).abs() > 1e-3 {
                let z = zeta(n, &pt, &cfg).unwrap();
                prop_assert!(z.im >= -1e-15);
                if kn.abs() < k {
                    prop_assert!(z.re > 0.0 && z.im.abs() < 1e-12);
                } else {
                    prop_assert!(z.im > 0.0 && z.re.abs() < 1e-12);
                }
            }
        }

        /// The binding-order shortcut agrees with checking every order:
        /// the n = 0 mode propagates, all others are evanescent.
        #[test]
        fn diamond_equivalence(k in 0.01f64..8.0, kappa in -3.14f64..=3.14) {
            let cfg = cfg();
            let pt = SpectralPoint::real(k, kappa, &cfg).unwrap();
            let direct = {
                let mut ok = kappa.abs() < PI / cfg.d && k > kappa.abs();
                for n in [-3i64, -2, -1, 1, 2, 3] {
                    ok &= k < (kappa + cfg.a() * n as f64).abs();
                }
                ok
            };
            prop_assert_eq!(in_diamond(&pt, &cfg), direct);
        }
    }

    #[test]
    fn beta_e_accelerated_matches_brute_force() {
        // Five fixed pseudo-random points in the diamond.
        let cfg = cfg();
        let pts = [
            (2.0, 0.1),
            (1.3, -0.7),
            (2.83, 0.1),
            (1.4, 1.2),
            (4.1, 0.35),
        ];
        for (k, kappa) in pts {
            let pt = SpectralPoint::real(k, kappa, &cfg).unwrap();
            assert!(in_diamond(&pt, &cfg), "test point outside diamond");
            let accel = LatticeAccel::new(&pt, &cfg, 1e-12).unwrap();
            let fast = accel.beta_e(cfg.eps);
            let brute = beta_e_brute(k, kappa, &cfg, 1_000_000);
            assert!(
                (fast - brute).norm() < 1e-8,
                "beta_e mismatch at (k,kappa)=({k},{kappa}): {:e}",
                (fast - brute).norm()
            );
        }
    }

    #[test]
    fn lattice_value_matches_brute_force() {
        let cfg = cfg();
        let pt = SpectralPoint::real(2.0, 0.1, &cfg).unwrap();
        let accel = LatticeAccel::new(&pt, &cfg, 1e-12).unwrap();
        for p in [0.4, -0.4, 0.37, 0.03] {
            let fast = accel.value(p).unwrap();
            let brute = lattice_brute(2.0, 0.1, &cfg, p, 2_000_000);
            // The brute sum converges like 1/N with oscillation.
            assert!(
                (fast - brute).norm() < 2e-6,
                "lattice sum mismatch at p={p}: {:e}",
                (fast - brute).norm()
            );
        }
    }

    #[test]
    fn quasiperiodicity_of_green_function() {
        let cfg = cfg();
        let pt = SpectralPoint::real(2.0, 0.1, &cfg).unwrap();
        let x = (0.13, 1.7);
        let y = (-0.21, 1.0);
        let g = quasiperiodic_green(&pt, &cfg, x, y, 1e-12).unwrap();
        let g_shift =
            quasiperiodic_green(&pt, &cfg, (x.0 + cfg.d, x.1), (y.0 + cfg.d, y.1), 1e-12).unwrap();
        // Shifting both arguments by one period leaves g unchanged.
        assert!((g - g_shift).norm() < 1e-12);
        // Shifting only the observation point multiplies by the Bloch phase.
        let g_bloch = quasiperiodic_green(&pt, &cfg, (x.0 + cfg.d, x.1), y, 1e-12).unwrap();
        assert!((g_bloch - cis(pt.kappa * cfg.d) * g).norm() < 1e-12);
    }

    #[test]
    fn green_truncation_is_converged() {
        // Evanescent decay: doubling the tolerance-driven truncation
        // changes nothing at the 1e-12 level for separated heights.
        let cfg = cfg();
        let pt = SpectralPoint::real(2.0, 0.1, &cfg).unwrap();
        let g1 = quasiperiodic_green(&pt, &cfg, (0.0, 2.0), (0.0, 1.0), 1e-8).unwrap();
        let g2 = quasiperiodic_green(&pt, &cfg, (0.0, 2.0), (0.0, 1.0), 1e-15).unwrap();
        assert!((g1 - g2).norm() < 1e-12);
    }

    #[test]
    fn image_green_satisfies_neumann_condition() {
        let cfg = cfg();
        let pt = SpectralPoint::real(2.0, 0.1, &cfg).unwrap();
        let x = (0.07, 1.9);
        let y1 = 1.0;
        let delta = 1e-5;
        let gp = exterior_green(&pt, &cfg, x, (0.23, y1 + delta), true, 1e-13).unwrap();
        let gm = exterior_green(&pt, &cfg, x, (0.23, y1 - delta), true, 1e-13).unwrap();
        let dg = (gp - gm) / (2.0 * delta);
        assert!(dg.norm() < 1e-6, "normal derivative {:.3e}", dg.norm());
    }

    #[test]
    fn exterior_remainder_small_and_consistent() {
        let cfg = cfg();
        let pt = SpectralPoint::real(2.0, 0.1, &cfg).unwrap();
        let accel = LatticeAccel::new(&pt, &cfg, 1e-13).unwrap();
        let beta_e = accel.beta_e(cfg.eps);
        for z in [0.9, 0.5, 0.11, -0.77] {
            let full = accel.value(cfg.eps * z).unwrap();
            let r_smooth = accel.exterior_remainder_smooth(cfg.eps, z);
            let p2 = accel.z2log_coefficient(cfg.eps);
            let recon = beta_e + z.abs().ln() / PI + r_smooth + p2 * z * z * z.abs().ln();
            assert!(
                (full - recon).norm() < 1e-12,
                "kernel split inconsistent at Z={z}: {:e}",
                (full - recon).norm()
            );
            // Expansion bound: the remainder is O(eps^2 |ln eps| + kappa eps).
            let r_full = r_smooth + p2 * z * z * z.abs().ln();
            assert!(r_full.norm() < 10.0 * (cfg.eps * cfg.eps * cfg.eps.ln().abs() + 0.1 * cfg.eps));
        }
    }

    #[test]
    fn exterior_remainder_scales_with_eps_and_kappa() {
        // Two-point ratio check of r_e = O(eps^2 |ln eps| + |kappa| eps).
        let base = cfg();
        let probe = |eps: f64, kappa: f64| -> f64 {
            let c = PhysicalConfig::new(1.0, 0.4, eps).unwrap();
            let pt = SpectralPoint::real(2.0, kappa, &c).unwrap();
            let accel = LatticeAccel::new(&pt, &c, 1e-13).unwrap();
            let mut worst: f64 = 0.0;
            for z in [-0.9, -0.3, 0.2, 0.6, 1.0] {
                let p2 = accel.z2log_coefficient(eps);
                let r = accel.exterior_remainder_smooth(eps, z)
                    + p2 * z * z * z.abs().ln();
                worst = worst.max(r.norm());
            }
            worst
        };
        let bound = |eps: f64, kappa: f64| eps * eps * eps.ln().abs() + kappa.abs() * eps;
        let c_fit = probe(base.eps, 0.1) / bound(base.eps, 0.1);
        // Halving eps must keep the remainder within the fitted constant
        // (factor 4 slack on the fit).
        assert!(probe(base.eps / 2.0, 0.05) <= 4.0 * c_fit * bound(base.eps / 2.0, 0.05));
    }

    #[test]
    fn cross_kernel_symmetry_at_normal_incidence() {
        let cfg = cfg();
        let pt = SpectralPoint::real(2.0, 0.0, &cfg).unwrap();
        let (x, y) = (0.21, -0.37);
        let gp = exterior_kernel(&pt, &cfg, x, y, ExteriorKernelKind::CrossPlus, 1e-12).unwrap();
        let gm = exterior_kernel(&pt, &cfg, y, x, ExteriorKernelKind::CrossMinus, 1e-12).unwrap();
        assert!((gp - gm).norm() < 1e-12);
        // G_eps^e is even in X - Y at kappa = 0.
        let ge1 = exterior_kernel(&pt, &cfg, x, y, ExteriorKernelKind::SameSlit, 1e-12).unwrap();
        let ge2 = exterior_kernel(&pt, &cfg, y, x, ExteriorKernelKind::SameSlit, 1e-12).unwrap();
        assert!((ge1 - ge2).norm() < 1e-12);
    }

    #[test]
    fn interior_mode_coefficients() {
        let cfg = cfg();
        let k = C::new(0.5 * PI, 0.0);
        // m = 0 same end: 1/(eps k tan k); tan(pi/2) = inf kills it.
        let c0 = interior_mode_coeff_same(0, k, cfg.eps).unwrap();
        assert!(c0.norm() < 1e-12);
        // m = 0 opposite end: 1/(eps k sin k) = 40/pi at k = pi/2.
        let t0 = interior_mode_coeff_opposite(0, k, cfg.eps).unwrap();
        assert_abs_diff_eq!(t0.re, 40.0 / PI, epsilon = 1e-10);
        assert_abs_diff_eq!(t0.im, 0.0, epsilon = 1e-14);
        // m = 1 at k = 1: gamma_1 ~ 62.82 i, coefficient ~ -1/(eps |gamma_1|).
        let c1 = interior_mode_coeff_same(1, C::new(1.0, 0.0), 0.05).unwrap();
        let g1 = gamma_m(1, C::new(1.0, 0.0), 0.05);
        assert_abs_diff_eq!(g1.im, (PI / 0.05_f64).hypot(0.0), epsilon = 1.0);
        assert_abs_diff_eq!(c1.re, -1.0 / (0.05 * g1.im), epsilon = 1e-6);
        assert_abs_diff_eq!(c1.re, -0.3183, epsilon = 1e-3);
    }

    #[test]
    fn beta_constant_examples() {
        let cfg = cfg();
        let pt = SpectralPoint::real(0.5 * PI, 0.1, &cfg).unwrap();
        let b = beta_constants(&pt, &cfg, 1e-12).unwrap();
        assert_abs_diff_eq!(b.beta_i.re, 2.0 * (2.0_f64).ln() / PI, epsilon = 1e-10);
        assert_abs_diff_eq!(b.beta_tilde.re, 40.0 / PI, epsilon = 1e-10);
        // beta = beta_e + beta_i by construction.
        assert!((b.beta - b.beta_e - b.beta_i).norm() < 1e-15);

        // At kappa = 0: beta^+ = beta^- = beta_hat exactly, eta = 0.
        let pt0 = SpectralPoint::real(2.0, 0.0, &cfg).unwrap();
        let b0 = beta_constants(&pt0, &cfg, 1e-12).unwrap();
        assert!((b0.beta_plus - b0.beta_minus).norm() < 1e-13);
        assert!((b0.beta_plus - b0.beta_hat).norm() < 1e-12);
        assert!(b0.eta.norm() < 1e-13);
    }

    #[test]
    fn imaginary_part_identities() {
        // In the diamond: Im(gamma + beta_hat) = -2/(d zeta_0) and
        // Im(gamma - beta_hat) = 0 at kappa = 0; for kappa != 0,
        // Im beta - (Im beta^+ + Im beta^-)/2 = (cos(kappa d0) - 1)/(zeta_0 d).
        let cfg = cfg();
        for k in [1.0, 2.0, 2.83, 4.5] {
            let pt0 = SpectralPoint::real(k, 0.0, &cfg).unwrap();
            let b = beta_constants(&pt0, &cfg, 1e-13).unwrap();
            let zeta0 = zeta(0, &pt0, &cfg).unwrap().re;
            assert_abs_diff_eq!(
                (b.gamma + b.beta_hat).im,
                -2.0 / (cfg.d * zeta0),
                epsilon = 1e-10
            );
            assert_abs_diff_eq!((b.gamma - b.beta_hat).im, 0.0, epsilon = 1e-10);
        }
        for (k, kappa) in [(2.0, 0.1), (2.83, 0.1), (1.5, 0.6), (3.3, -0.25)] {
            let pt = SpectralPoint::real(k, kappa, &cfg).unwrap();
            assert!(in_diamond(&pt, &cfg));
            let b = beta_constants(&pt, &cfg, 1e-13).unwrap();
            let zeta0 = zeta(0, &pt, &cfg).unwrap().re;
            let lhs = b.beta.im - 0.5 * (b.beta_plus.im + b.beta_minus.im);
            let rhs = ((kappa * cfg.d0).cos() - 1.0) / (zeta0 * cfg.d);
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
        }
    }

    #[test]
    fn eta_is_linear_in_kappa() {
        let cfg = cfg();
        let eta_at = |kappa: f64| {
            let pt = SpectralPoint::real(2.0, kappa, &cfg).unwrap();
            beta_constants(&pt, &cfg, 1e-13).unwrap().eta.norm()
        };
        let c_fit = eta_at(0.1) / 0.1;
        for kappa in [0.05, 0.025] {
            assert!(eta_at(kappa) <= 2.0 * c_fit * kappa);
        }
    }

    #[test]
    fn wood_proximity_is_rejected() {
        let cfg = cfg();
        let pt = SpectralPoint::real(cfg.a() - 0.1, 0.1, &cfg).unwrap();
        // k = a - kappa is exactly the n = -1 branch point.
        assert!(matches!(
            check_wood(&pt, &cfg, WOOD_MARGIN),
            Err(Error::BranchPointProximity { .. })
        ));
        let ok = SpectralPoint::real(2.0, 0.1, &cfg).unwrap();
        assert!(check_wood(&ok, &cfg, WOOD_MARGIN).is_ok());
    }
}
