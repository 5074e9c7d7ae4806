//! Location of the singular frequencies: complex roots of
//! lambda_{j,+-}(k; kappa, eps), found by argument-principle counting on
//! rectangular contours plus Muller refinement seeded by the closed-form
//! predictions. Family j = 1 is the Fabry-Perot branch (Im k = O(eps));
//! family j = 2 is the embedded/Fano branch (real at kappa = 0,
//! Im k = O(kappa^2 eps) otherwise). Roots of the "+" parity cluster near
//! odd multiples of pi, roots of the "-" parity near even multiples.

use crate::asymptotics::{
    alpha_default, lambda_set_full, lambda_set_hat, resonance_prediction, Parity,
};
use crate::error::{Error, Result};
use crate::greens::{self, PhysicalConfig, SpectralPoint};
use num_complex::Complex64;
use std::f64::consts::PI;

type C = Complex64;

/// Which resonance family a branch belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResonanceFamily {
    /// j = 1: complex even at normal incidence, Im k = O(eps).
    FabryPerot,
    /// j = 2: embedded eigenvalue at kappa = 0, perturbed Fano resonance.
    Embedded,
}

/// Provenance of a located root.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMethod {
    Asymptotic,
    NumericHat,
    NumericFull,
}

/// One located complex root.
#[derive(Debug, Clone)]
pub struct ResonanceBranch {
    pub m: u32,
    pub family: ResonanceFamily,
    pub parity: Parity,
    pub k: C,
    pub kappa: f64,
    pub eps: f64,
    pub method: RootMethod,
    pub residual: f64,
}

/// Axis-aligned rectangle in the complex k plane.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn centered(center: C, half_re: f64, half_im: f64) -> Self {
        Self {
            re_min: center.re - half_re,
            re_max: center.re + half_re,
            im_min: center.im - half_im,
            im_max: center.im + half_im,
        }
    }

    pub fn contains(&self, k: C) -> bool {
        k.re >= self.re_min && k.re <= self.re_max && k.im >= self.im_min && k.im <= self.im_max
    }

    fn corners(&self) -> [C; 4] {
        [
            C::new(self.re_min, self.im_min),
            C::new(self.re_max, self.im_min),
            C::new(self.re_max, self.im_max),
            C::new(self.re_min, self.im_max),
        ]
    }

    /// `n` points per unit length along the boundary, counterclockwise,
    /// closed (first point repeated at the end).
    fn sample(&self, n_total: usize) -> Vec<C> {
        let corners = self.corners();
        let mut pts = Vec::with_capacity(n_total + 5);
        let perim: f64 = 2.0 * ((self.re_max - self.re_min) + (self.im_max - self.im_min));
        for s in 0..4 {
            let a = corners[s];
            let b = corners[(s + 1) % 4];
            let len = (b - a).norm();
            let n_side = ((n_total as f64 * len / perim).ceil() as usize).max(2);
            for i in 0..n_side {
                let t = i as f64 / n_side as f64;
                pts.push(a + (b - a) * t);
            }
        }
        pts.push(corners[0]);
        pts
    }
}

/// Detect whether a contour segment straddles the branch cut of any
/// zeta_n (the half-line k^2 - kappa_n^2 in -i R_+).
fn crosses_branch_cut(a: C, b: C, kappa: f64, cfg: &PhysicalConfig) -> Option<i64> {
    let max_n = ((a.norm().max(b.norm()) + kappa.abs()) / cfg.a()).ceil() as i64 + 1;
    for n in -max_n..=max_n {
        let kn = kappa + cfg.a() * n as f64;
        let wa = a * a - kn * kn;
        let wb = b * b - kn * kn;
        if wa.re.signum() != wb.re.signum() && 0.5 * (wa.im + wb.im) < 0.0 {
            return Some(n);
        }
    }
    None
}

/// Winding number of lambda around zero along a rectangular contour, by
/// trapezoid quadrature of the finite-difference logarithmic derivative.
/// The sampling is doubled until the estimate sits within 0.25 of an
/// integer and is stable. With a pole of lambda inside, the winding counts
/// zeros minus poles.
pub fn count_roots(
    lambda: &dyn Fn(C) -> Result<C>,
    contour: &Rect,
    quad_points: usize,
    kappa: f64,
    cfg: &PhysicalConfig,
) -> Result<i64> {
    let mut n = quad_points.max(16);
    let mut last: Option<f64> = None;
    for _ in 0..8 {
        let pts = contour.sample(n);
        for w in pts.windows(2) {
            if let Some(bad_n) = crosses_branch_cut(w[0], w[1], kappa, cfg) {
                return Err(Error::BranchCut { n: bad_n });
            }
        }
        let vals: Vec<C> = pts
            .iter()
            .map(|&k| lambda(k))
            .collect::<Result<Vec<_>>>()?;
        let min_abs = vals.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        if min_abs < 1e-14 {
            return Err(Error::ContourThroughZero { min_abs });
        }
        // Trapezoid of lambda'/lambda with centered finite differences
        // along the closed polyline (indices wrap; last point = first).
        let m = pts.len() - 1;
        let mut acc = C::new(0.0, 0.0);
        for j in 0..m {
            let prev = if j == 0 { m - 1 } else { j - 1 };
            let next = (j + 1) % m;
            let dk_c = pts[next] - pts[prev];
            let deriv = (vals[next] - vals[prev]) / dk_c;
            let dk = 0.5 * (pts[next] - pts[j]) + 0.5 * (pts[j] - pts[prev]);
            acc += deriv / vals[j] * dk;
        }
        let winding = (acc / (2.0 * PI * I_C)).re;
        let rounded = winding.round();
        if (winding - rounded).abs() < 0.25 {
            if let Some(prev) = last {
                if (prev - rounded).abs() < 0.25 {
                    return Ok(rounded as i64);
                }
            }
            last = Some(rounded);
        } else {
            last = None;
        }
        n *= 2;
    }
    Err(Error::NonConvergence {
        what: "argument-principle winding",
        tol: 0.25,
        max_terms: n,
    })
}

const I_C: C = C::new(0.0, 1.0);

/// Muller iteration (three-point parabola) with secant fallback; stops at
/// |lambda| < `tol_f` and |dk| < `tol_k`.
pub fn refine_root(
    lambda: &dyn Fn(C) -> Result<C>,
    seed: C,
    tol_f: f64,
    tol_k: f64,
    fence: Option<Rect>,
) -> Result<(C, f64)> {
    let fence = fence.unwrap_or_else(|| Rect::centered(seed, 0.5, 0.5));
    let h = 1e-4 * (1.0 + seed.norm());
    let mut x0 = seed - h;
    let mut x1 = seed + h;
    let mut x2 = seed;
    let mut f0 = lambda(x0)?;
    let mut f1 = lambda(x1)?;
    let mut f2 = lambda(x2)?;
    for iter in 0..100 {
        // Muller step through (x0,f0), (x1,f1), (x2,f2).
        let q = (x2 - x1) / (x1 - x0);
        let a = q * f2 - q * (1.0 + q) * f1 + q * q * f0;
        let b = (2.0 * q + 1.0) * f2 - (1.0 + q) * (1.0 + q) * f1 + q * q * f0;
        let c = (1.0 + q) * f2;
        let disc = (b * b - 4.0 * a * c).sqrt();
        let den_p = b + disc;
        let den_m = b - disc;
        let den = if den_p.norm() >= den_m.norm() { den_p } else { den_m };
        let step = if den.norm() > 1e-300 {
            -(x2 - x1) * 2.0 * c / den
        } else {
            // Degenerate parabola: secant on the last two points.
            -f2 * (x2 - x1) / (f2 - f1)
        };
        let x3 = x2 + step;
        if !fence.contains(x3) {
            return Err(Error::EscapedRegion);
        }
        let f3 = lambda(x3)?;
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        x2 = x3;
        f2 = f3;
        if f2.norm() < tol_f && step.norm() < tol_k {
            return Ok((x2, f2.norm()));
        }
        let _ = iter;
    }
    Err(Error::NoConvergence { iterations: 100 })
}

/// Default basis size for root refinement against the discretized operator.
pub const N_ROOTFIND: usize = 32;

/// Build a lambda evaluator for one family and parity.
pub fn lambda_evaluator<'a>(
    cfg: &'a PhysicalConfig,
    kappa: f64,
    family: ResonanceFamily,
    parity: Parity,
    use_full: bool,
    n: usize,
) -> impl Fn(C) -> Result<C> + 'a {
    let alpha = alpha_default();
    let fam_idx = match family {
        ResonanceFamily::FabryPerot => 1,
        ResonanceFamily::Embedded => 2,
    };
    move |k: C| -> Result<C> {
        let pt = SpectralPoint::new(k, kappa, cfg)?;
        let set = if use_full {
            lambda_set_full(&pt, cfg, n)?
        } else {
            lambda_set_hat(&pt, cfg, alpha, greens::DEFAULT_TOL)?
        };
        Ok(set.get(fam_idx, parity))
    }
}

/// Default contour half-width around m pi, clamped away from the
/// wrong-parity poles at neighboring multiples of pi, the Rayleigh branch
/// points on the real axis, and the zeta_0 branch cut.
fn default_half_widths(m: u32, kappa: f64, cfg: &PhysicalConfig) -> (f64, f64) {
    let km = f64::from(m) * PI;
    let eps = cfg.eps;
    let mut half_re = (20.0 * eps * eps.ln().abs()).max(0.05);
    // Wrong-parity poles live at the neighboring multiples of pi.
    half_re = half_re.min(0.8 * PI);
    // Stay clear of the real-axis branch points |kappa + 2 pi n / d|.
    let a = cfg.a();
    for n in [-2i64, -1, 1, 2] {
        let bp = (kappa + a * n as f64).abs();
        let dist = (bp - km).abs();
        half_re = half_re.min(0.9 * dist);
    }
    half_re = half_re.min(0.9 * (km - kappa.abs()).abs());
    // Keep |Im k| < Re k on the contour so zeta_0 stays on its branch.
    let half_im = half_re.min(0.7 * (km - half_re)).min(0.45);
    (half_re, half_im)
}

/// Locate both families for every m <= m_max at one Bloch wavenumber.
/// Parity is + for odd m and - for even m; each root is seeded from the
/// closed-form prediction, refined, and verified by a winding count of 1
/// in a surrounding box.
pub fn find_resonances(
    cfg: &PhysicalConfig,
    kappa: f64,
    m_max: u32,
    use_full: bool,
) -> Result<Vec<ResonanceBranch>> {
    find_resonances_at(cfg, kappa, m_max, use_full, N_ROOTFIND)
}

/// As [`find_resonances`] with an explicit basis size for the full route.
pub fn find_resonances_at(
    cfg: &PhysicalConfig,
    kappa: f64,
    m_max: u32,
    use_full: bool,
    n: usize,
) -> Result<Vec<ResonanceBranch>> {
    if !(f64::from(m_max) < 2.0 / cfg.d) {
        return Err(Error::InvalidConfig(format!(
            "m_max = {m_max} reaches the multi-order regime m >= 2/d"
        )));
    }
    let alpha = alpha_default();
    let mut out = Vec::new();
    for m in 1..=m_max {
        let parity = if m % 2 == 1 { Parity::Plus } else { Parity::Minus };
        let (seed_fp, seed_ee) = resonance_prediction(m, kappa, cfg, alpha, greens::DEFAULT_TOL)?;
        let (half_re, half_im) = default_half_widths(m, kappa, cfg);
        let km = f64::from(m) * PI;
        let fence = Rect {
            re_min: km - half_re,
            re_max: km + half_re,
            im_min: -half_im,
            im_max: half_im,
        };
        for (family, seed) in [
            (ResonanceFamily::FabryPerot, seed_fp),
            (ResonanceFamily::Embedded, seed_ee),
        ] {
            let lam = lambda_evaluator(cfg, kappa, family, parity, use_full, n);
            let (root, residual) = refine_root(&lam, seed, 1e-10, 1e-12, Some(fence))?;
            // Verification box around the refined root, kept inside the
            // pole-free fence.
            let wr = (0.25 * half_re).min(0.15).max(8.0 * (root - seed).norm().max(1e-3));
            let wi = wr.min(half_im).max(4.0 * root.im.abs().max(1e-3));
            let boxr = Rect::centered(C::new(root.re, 0.0), wr, wi.min(half_im));
            let count = count_roots(&lam, &boxr, 64, kappa, cfg)?;
            if count != 1 {
                return Err(Error::RootCountMismatch {
                    expected: 1,
                    found: count,
                });
            }
            out.push(ResonanceBranch {
                m,
                family,
                parity,
                k: root,
                kappa,
                eps: cfg.eps,
                method: if use_full {
                    RootMethod::NumericFull
                } else {
                    RootMethod::NumericHat
                },
                residual,
            });
        }
    }
    Ok(out)
}

/// The closed-form predictions packaged as branches (method = Asymptotic).
pub fn predicted_resonances(
    cfg: &PhysicalConfig,
    kappa: f64,
    m_max: u32,
) -> Result<Vec<ResonanceBranch>> {
    let alpha = alpha_default();
    let mut out = Vec::new();
    for m in 1..=m_max {
        let parity = if m % 2 == 1 { Parity::Plus } else { Parity::Minus };
        let (k1, k2) = resonance_prediction(m, kappa, cfg, alpha, greens::DEFAULT_TOL)?;
        for (family, k) in [
            (ResonanceFamily::FabryPerot, k1),
            (ResonanceFamily::Embedded, k2),
        ] {
            out.push(ResonanceBranch {
                m,
                family,
                parity,
                k,
                kappa,
                eps: cfg.eps,
                method: RootMethod::Asymptotic,
                residual: f64::NAN,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PhysicalConfig {
        PhysicalConfig::new(1.0, 0.4, 0.05).unwrap()
    }

    #[test]
    fn count_roots_on_cubic_oracle() {
        let cfg = cfg();
        let c = C::new(3.0, -0.05);
        let f = move |k: C| -> Result<C> { Ok((k - c) * (k - c) * (k - c)) };
        let boxr = Rect::centered(c, 0.21, 0.17);
        assert_eq!(count_roots(&f, &boxr, 32, 0.0, &cfg).unwrap(), 3);
        // A box not containing c sees no roots.
        let empty = Rect::centered(c + 1.0, 0.2, 0.2);
        assert_eq!(count_roots(&f, &empty, 32, 0.0, &cfg).unwrap(), 0);
    }

    #[test]
    fn count_roots_for_lambda_families() {
        let cfg = cfg();
        // lambda_{2,+} has exactly one root near pi at kappa = 0. At
        // eps = 0.05 it sits at k ~ 2.83, distance ~0.31 from pi, so the
        // box needs half-width a bit above 0.3.
        let lam2p = lambda_evaluator(&cfg, 0.0, ResonanceFamily::Embedded, Parity::Plus, false, 0);
        let boxr = Rect::centered(C::new(PI, 0.0), 0.35, 0.3);
        assert_eq!(count_roots(&lam2p, &boxr, 48, 0.0, &cfg).unwrap(), 1);

        // Wrong parity for odd m: lambda_{2,-} has no roots near pi. On a
        // pole-free box left of pi the winding is 0.
        let lam2m = lambda_evaluator(&cfg, 0.0, ResonanceFamily::Embedded, Parity::Minus, false, 0);
        let pole_free = Rect::centered(C::new(PI - 0.45, 0.0), 0.2, 0.2);
        assert_eq!(count_roots(&lam2m, &pole_free, 48, 0.0, &cfg).unwrap(), 0);
        // On a box containing pi itself, lambda_{2,-} carries the
        // (cos k - 1)/sin k pole: the winding counts zeros minus poles = -1.
        assert_eq!(count_roots(&lam2m, &boxr, 48, 0.0, &cfg).unwrap(), -1);
    }

    #[test]
    fn refine_root_on_quadratic_oracle() {
        let cfg = cfg();
        let c = C::new(2.0, -0.3);
        let f = move |k: C| -> Result<C> { Ok((k - c) * (k + 1.0)) };
        let (root, res) = refine_root(&f, c + 0.05, 1e-12, 1e-13, None).unwrap();
        assert!((root - c).norm() < 1e-12);
        assert!(res < 1e-12);
        let _ = cfg;
    }

    #[test]
    fn embedded_root_is_real_at_normal_incidence() {
        let cfg = cfg();
        let branches = find_resonances(&cfg, 0.0, 1, false).unwrap();
        assert_eq!(branches.len(), 2);
        let ee = branches
            .iter()
            .find(|b| b.family == ResonanceFamily::Embedded)
            .unwrap();
        let fp = branches
            .iter()
            .find(|b| b.family == ResonanceFamily::FabryPerot)
            .unwrap();
        assert!(ee.k.im.abs() < 1e-8, "embedded Im k = {:e}", ee.k.im);
        assert!(fp.k.im < 0.0);
        let ratio = fp.k.im.abs() / cfg.eps;
        assert!((0.01..=10.0).contains(&ratio), "FP Im/eps = {ratio}");
        assert!(ee.residual < 1e-10 && fp.residual < 1e-10);
        // Independent re-evaluation of |lambda| at the returned roots.
        for b in &branches {
            let lam = lambda_evaluator(&cfg, 0.0, b.family, b.parity, false, 0);
            assert!(lam(b.k).unwrap().norm() <= 1e-10);
        }
    }

    #[test]
    fn embedded_root_acquires_kappa_squared_imaginary_part() {
        let cfg = cfg();
        let im_at = |kappa: f64| {
            let b = find_resonances(&cfg, kappa, 1, false).unwrap();
            b.iter()
                .find(|b| b.family == ResonanceFamily::Embedded)
                .unwrap()
                .k
                .im
        };
        let i1 = im_at(0.1);
        let i2 = im_at(0.05);
        assert!(i1 < 0.0 && i2 < 0.0, "perturbed roots must go below axis");
        let ratio = i1.abs() / i2.abs();
        assert!((3.0..=5.0).contains(&ratio), "kappa^2 law: ratio = {ratio}");
    }

    #[test]
    fn prediction_error_shrinks_at_expansion_rate() {
        // |k_numeric - k_predicted| <= C eps^2 ln^2 eps, checked at eps and
        // eps/2 (ratio of the bound is ~2.6).
        let alpha = alpha_default();
        let err_at = |eps: f64| -> f64 {
            let c = PhysicalConfig::new(1.0, 0.4, eps).unwrap();
            let (_, seed) = resonance_prediction(1, 0.0, &c, alpha, 1e-13).unwrap();
            let b = find_resonances(&c, 0.0, 1, false).unwrap();
            let ee = b
                .iter()
                .find(|b| b.family == ResonanceFamily::Embedded)
                .unwrap();
            (ee.k - seed).norm()
        };
        let e1 = err_at(0.05);
        let e2 = err_at(0.025);
        let bound = |eps: f64| eps * eps * eps.ln() * eps.ln();
        assert!(e1 < 10.0 * bound(0.05), "prediction error {e1:e}");
        assert!(e2 < 10.0 * bound(0.025));
        assert!(e1 / e2 > 2.0, "error does not shrink at the eps^2 ln^2 rate");
    }

    #[test]
    fn root_trajectory_is_continuous_in_kappa() {
        let cfg = cfg();
        let mut prev: Option<C> = None;
        for kappa in [0.0, 0.025, 0.05, 0.1] {
            let b = find_resonances(&cfg, kappa, 1, false).unwrap();
            let ee = b
                .iter()
                .find(|b| b.family == ResonanceFamily::Embedded)
                .unwrap();
            if let Some(p) = prev {
                let jump = (ee.k - p).norm();
                assert!(
                    jump < 10.0 * kappa * kappa * cfg.eps + 10.0 * kappa * cfg.eps + 1e-3,
                    "trajectory jump {jump:e} at kappa = {kappa}"
                );
            }
            prev = Some(ee.k);
        }
    }

    #[test]
    fn full_route_agrees_with_hat_route() {
        // Roots from the discretized operator differ from the closed-form
        // ones by O(eps^2 ln^2 eps), the expansion remainder.
        let cfg = cfg();
        let hat = find_resonances(&cfg, 0.1, 1, false).unwrap();
        let full = find_resonances(&cfg, 0.1, 1, true).unwrap();
        for (h, f) in hat.iter().zip(&full) {
            let d = (h.k - f.k).norm();
            let bound = cfg.eps * cfg.eps * cfg.eps.ln() * cfg.eps.ln();
            assert!(d < 10.0 * bound, "hat vs full root distance {d:e}");
            assert!(f.residual < 1e-10);
        }
        // The full embedded root keeps the kappa^2-small imaginary part.
        let ee = full
            .iter()
            .find(|b| b.family == ResonanceFamily::Embedded)
            .unwrap();
        assert!(ee.k.im < 0.0 && ee.k.im.abs() < 10.0 * 0.1 * 0.1 * cfg.eps);
    }
}
