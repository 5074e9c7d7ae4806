//! Closed-form leading-order objects of the two-slit grating: the constant
//! alpha = <S^{-1} 1, 1>, the reduced 2x2 matrices whose eigenvalues
//! lambda_{j,+-}(k; kappa, eps) vanish at the singular frequencies, the
//! coefficients mu_{+-}, Lambda, r^{+-}, t^{+-}, the asymptotic reflection
//! and transmission, the resonance predictions near k = m pi, and the
//! asymptotic slit field.

use crate::bie::Assembly;
use crate::cheb;
use crate::error::{Error, Result};
use crate::greens::{self, BetaSet, PhysicalConfig, SpectralPoint};
use crate::linalg::{eig2, LuFactors};
use crate::special::cis;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// The constant alpha = <S^{-1} 1, 1> with its convergence diagnostics.
#[derive(Debug, Clone)]
pub struct AlphaConstant {
    pub value: f64,
    pub grid_sizes: Vec<usize>,
    pub richardson_estimate: f64,
    pub error_estimate: f64,
}

/// Solve S q = 1 per grid size and extrapolate alpha = <q, 1>.
pub fn alpha_constant(n_list: &[usize]) -> Result<AlphaConstant> {
    if n_list.len() < 3 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "alpha_constant needs at least 3 ascending grid sizes".into(),
        ));
    }
    let mut vals = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let b = cheb::basis(n);
        let lu = LuFactors::factor(&b.s_mat).map_err(|_| Error::SingularOperator)?;
        let q = lu.solve(&b.constant_rhs());
        let a = b.average(&q);
        if a.im.abs() > 1e-10 || a.norm() == 0.0 {
            return Err(Error::SingularOperator);
        }
        vals.push(a.re);
    }
    let m = vals.len();
    // Aitken delta-squared on the final three estimates.
    let (a0, a1, a2) = (vals[m - 3], vals[m - 2], vals[m - 1]);
    let denom = (a2 - a1) - (a1 - a0);
    let richardson = if denom.abs() > 1e-300 {
        a2 - (a2 - a1) * (a2 - a1) / denom
    } else {
        a2
    };
    Ok(AlphaConstant {
        value: richardson,
        grid_sizes: n_list.to_vec(),
        richardson_estimate: richardson,
        error_estimate: (a2 - a1).abs(),
    })
}

/// alpha at the default grid ladder, computed once and shared.
pub fn alpha_default() -> f64 {
    static ALPHA: OnceLock<f64> = OnceLock::new();
    *ALPHA.get_or_init(|| {
        alpha_constant(&[16, 24, 32, 48])
            .expect("fixed log operator is invertible")
            .value
    })
}

/// Parity of the even/odd subsystem: +1 selects T_+, -1 selects T_-.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Plus => 1.0,
            Parity::Minus => -1.0,
        }
    }
}

/// Where a lambda set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaVariant {
    Hat,
    Full,
}

/// The four eigenvalues lambda_{j,+-} at one spectral point.
#[derive(Debug, Clone, Copy)]
pub struct LambdaSet {
    pub lambda_1_plus: C,
    pub lambda_2_plus: C,
    pub lambda_1_minus: C,
    pub lambda_2_minus: C,
    pub variant: LambdaVariant,
    /// eta at the same point (needed by the mu coefficients).
    pub eta: C,
}

impl LambdaSet {
    pub fn get(&self, family: usize, parity: Parity) -> C {
        match (family, parity) {
            (1, Parity::Plus) => self.lambda_1_plus,
            (2, Parity::Plus) => self.lambda_2_plus,
            (1, Parity::Minus) => self.lambda_1_minus,
            (2, Parity::Minus) => self.lambda_2_minus,
            _ => panic!("family must be 1 or 2"),
        }
    }
}

/// The closed-form matrix M_hat/eps = alpha [[beta+-beta~, beta^-],
/// [beta^+, beta+-beta~]] + I with its explicit eigen-decomposition.
#[derive(Debug, Clone)]
pub struct MHat {
    pub matrix: [[C; 2]; 2],
    pub lambda1: C,
    pub lambda2: C,
    pub eigvec1: [C; 2],
    pub eigvec2: [C; 2],
}

/// Both sign variants of M_hat; eigenvalues from the explicit formulas
/// lambda_hat_{j,+-} = eps + eps alpha (beta +- beta~ -+(-1)^j sqrt(beta^- beta^+)).
pub fn matrix_m_hat(
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    alpha: f64,
    parity: Parity,
    tol: f64,
) -> Result<MHat> {
    let betas = greens::beta_constants(pt, cfg, tol)?;
    Ok(m_hat_from_betas(&betas, pt, cfg, alpha, parity))
}

pub(crate) fn m_hat_from_betas(
    betas: &BetaSet,
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    alpha: f64,
    parity: Parity,
) -> MHat {
    let eps = cfg.eps;
    let diag = betas.beta_pm_tilde(parity.sign(), pt.k, eps);
    let sqrt_bpm = betas.sqrt_beta_pm();
    let lambda1 = eps * (1.0 + alpha * (diag + sqrt_bpm));
    let lambda2 = eps * (1.0 + alpha * (diag - sqrt_bpm));
    let ratio = sqrt_bpm / betas.beta_minus; // = 1 + eta
    let matrix = [
        [
            eps * (1.0 + alpha * diag),
            eps * alpha * betas.beta_minus,
        ],
        [
            eps * alpha * betas.beta_plus,
            eps * (1.0 + alpha * diag),
        ],
    ];
    MHat {
        matrix,
        lambda1,
        lambda2,
        eigvec1: [C::new(1.0, 0.0), ratio],
        eigvec2: [C::new(1.0, 0.0), -ratio],
    }
}

/// All four lambda_hat eigenvalues at one spectral point.
pub fn lambda_set_hat(
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    alpha: f64,
    tol: f64,
) -> Result<LambdaSet> {
    let betas = greens::beta_constants(pt, cfg, tol)?;
    let plus = m_hat_from_betas(&betas, pt, cfg, alpha, Parity::Plus);
    let minus = m_hat_from_betas(&betas, pt, cfg, alpha, Parity::Minus);
    Ok(LambdaSet {
        lambda_1_plus: plus.lambda1,
        lambda_2_plus: plus.lambda2,
        lambda_1_minus: minus.lambda1,
        lambda_2_minus: minus.lambda2,
        variant: LambdaVariant::Hat,
        eta: betas.eta,
    })
}

/// The discretized matrix M = eps M~ built from the inner products
/// <L_kappa^{-1} e_l, e_j> of the full remainder operator.
#[derive(Debug, Clone)]
pub struct MFull {
    pub matrix: [[C; 2]; 2],
    pub lambda1: C,
    pub lambda2: C,
    /// gram[j][l] = <L^{-1} e_l, e_j>.
    pub gram: [[C; 2]; 2],
}

/// Assemble L_kappa at basis size `n`, compute the four inner products and
/// the eigenvalues of M = eps(G B + I). Eigenvalues are labeled by the
/// parity of their eigenvectors (component ratio near +1 for j = 1, near
/// -1 for j = 2), matching the closed-form labels.
pub fn matrix_m_full(
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    n: usize,
    parity: Parity,
) -> Result<MFull> {
    let asm = Assembly::new(pt, cfg, n, greens::DEFAULT_TOL)?;
    m_full_from_assembly(&asm, parity)
}

pub(crate) fn m_full_from_assembly(asm: &Assembly, parity: Parity) -> Result<MFull> {
    let n = asm.n;
    let l = asm.l_pm(parity.sign());
    let lu = LuFactors::factor(&l).map_err(|_| Error::SingularOperator)?;
    let mut e1 = vec![C::new(0.0, 0.0); 2 * n];
    e1[0] = C::new(PI, 0.0);
    let mut e2 = vec![C::new(0.0, 0.0); 2 * n];
    e2[n] = C::new(PI, 0.0);
    let x1 = lu.solve(&e1);
    let x2 = lu.solve(&e2);
    // gram[j][l] = <L^{-1} e_l, e_j>.
    let gram = [
        [PI * x1[0], PI * x2[0]],
        [PI * x1[n], PI * x2[n]],
    ];
    let betas = &asm.betas;
    let diag = betas.beta_pm_tilde(parity.sign(), asm.pt.k, asm.cfg.eps);
    let b = [
        [diag, betas.beta_minus],
        [betas.beta_plus, diag],
    ];
    // M~ = gram * B + I, M = eps M~.
    let eps = asm.cfg.eps;
    let mut m = [[C::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            let mut acc = if r == c { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) };
            for t in 0..2 {
                acc += gram[r][t] * b[t][c];
            }
            m[r][c] = eps * acc;
        }
    }
    let (la, lb) = eig2(m[0][0], m[0][1], m[1][0], m[1][1]);
    // Label by eigenvector parity: v2/v1 = (lambda - a)/b has Re > 0 for
    // the symmetric combination (j = 1).
    let ratio_a = (la - m[0][0]) / m[0][1];
    let (lambda1, lambda2) = if ratio_a.re >= 0.0 { (la, lb) } else { (lb, la) };
    Ok(MFull {
        matrix: m,
        lambda1,
        lambda2,
        gram,
    })
}

/// All four lambda eigenvalues from the discretized operator.
pub fn lambda_set_full(pt: &SpectralPoint, cfg: &PhysicalConfig, n: usize) -> Result<LambdaSet> {
    let asm = Assembly::new(pt, cfg, n, greens::DEFAULT_TOL)?;
    let plus = m_full_from_assembly(&asm, Parity::Plus)?;
    let minus = m_full_from_assembly(&asm, Parity::Minus)?;
    Ok(LambdaSet {
        lambda_1_plus: plus.lambda1,
        lambda_2_plus: plus.lambda2,
        lambda_1_minus: minus.lambda1,
        lambda_2_minus: minus.lambda2,
        variant: LambdaVariant::Full,
        eta: asm.betas.eta,
    })
}

/// The scalar coefficients entering the far-field and slit-field formulas.
#[derive(Debug, Clone, Copy)]
pub struct MuLambdaCoeffs {
    pub mu_plus: C,
    pub mu_minus: C,
    pub lambda_cap_1_plus: C,
    pub lambda_cap_1_minus: C,
    pub lambda_cap_2_plus: C,
    pub lambda_cap_2_minus: C,
    pub r_minus: C,
    pub r_plus: C,
    pub t_minus: C,
    pub t_plus: C,
}

/// mu_{+-}, Lambda_{j,+-} and the aperture coefficients r^{+-}, t^{+-}.
pub fn mu_lambda_coeffs(
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    lambdas: &LambdaSet,
) -> Result<MuLambdaCoeffs> {
    let floor = 1e-300;
    for l in [
        lambdas.lambda_1_plus,
        lambdas.lambda_1_minus,
        lambdas.lambda_2_plus,
        lambdas.lambda_2_minus,
    ] {
        if l.norm() < floor {
            return Err(Error::DivisionByZeroLambda);
        }
    }
    let eta = lambdas.eta;
    let half_phase = cis(pt.kappa * cfg.d0 / 2.0);
    let mu_plus = half_phase + (1.0 + eta) * half_phase.conj();
    let mu_minus = half_phase - (1.0 + eta) * half_phase.conj();
    let l1p = 1.0 / lambdas.lambda_1_plus + 1.0 / lambdas.lambda_1_minus;
    let l1m = 1.0 / lambdas.lambda_1_plus - 1.0 / lambdas.lambda_1_minus;
    let l2p = 1.0 / lambdas.lambda_2_plus + 1.0 / lambdas.lambda_2_minus;
    let l2m = 1.0 / lambdas.lambda_2_plus - 1.0 / lambdas.lambda_2_minus;
    let one_eta = 1.0 + eta;
    Ok(MuLambdaCoeffs {
        mu_plus,
        mu_minus,
        lambda_cap_1_plus: l1p,
        lambda_cap_1_minus: l1m,
        lambda_cap_2_plus: l2p,
        lambda_cap_2_minus: l2m,
        r_minus: -mu_plus / (2.0 * one_eta) * l1p + mu_minus / (2.0 * one_eta) * l2p,
        r_plus: -mu_plus / 2.0 * l1p - mu_minus / 2.0 * l2p,
        t_minus: -mu_plus / (2.0 * one_eta) * l1m + mu_minus / (2.0 * one_eta) * l2m,
        t_plus: -mu_plus / 2.0 * l1m - mu_minus / 2.0 * l2m,
    })
}

/// Leading-order reflection and transmission:
/// R = 1 + eps tau alpha (-mu_+^2 Lambda_{1,+} + mu_-^2 Lambda_{2,+}),
/// T = eps tau alpha (-mu_+^2 Lambda_{1,-} + mu_-^2 Lambda_{2,-}),
/// tau = -i/(2 d zeta_0 (1+eta)). The O(eps + kappa^2) corrections are
/// deliberately not modeled, so the energy residual is reported but only
/// O(eps) small.
pub fn rt_asymptotic(
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    lambdas: &LambdaSet,
    alpha: f64,
) -> Result<crate::bie::ScatteringCoefficients> {
    if !greens::in_diamond(pt, cfg) {
        return Err(Error::OutsideDiamond);
    }
    let co = mu_lambda_coeffs(pt, cfg, lambdas)?;
    let zeta0 = greens::zeta(0, pt, cfg)?;
    let tau = -I / (2.0 * cfg.d * zeta0 * (1.0 + lambdas.eta));
    let pre = cfg.eps * tau * alpha;
    let mu_p2 = co.mu_plus * co.mu_plus;
    let mu_m2 = co.mu_minus * co.mu_minus;
    let r = 1.0 + pre * (-mu_p2 * co.lambda_cap_1_plus + mu_m2 * co.lambda_cap_2_plus);
    let t = pre * (-mu_p2 * co.lambda_cap_1_minus + mu_m2 * co.lambda_cap_2_minus);
    Ok(crate::bie::ScatteringCoefficients {
        r,
        t,
        energy_residual: (r.norm_sqr() + t.norm_sqr() - 1.0).abs(),
    })
}

/// Closed-form resonance predictions near k = m pi:
/// k_m^{(j)} = m pi + 2 m pi [eps ln(eps)/pi
///   + (1/alpha + gamma(m pi, kappa) + (-1)^{j+1} (beta^+ + beta^-)/2) eps],
/// returned as (k_m^{(1)} Fabry-Perot, k_m^{(2)} embedded/Fano family).
pub fn resonance_prediction(
    m: u32,
    kappa: f64,
    cfg: &PhysicalConfig,
    alpha: f64,
    tol: f64,
) -> Result<(C, C)> {
    if !(f64::from(m) < 2.0 / cfg.d) || m == 0 {
        return Err(Error::InvalidConfig(format!(
            "mode index m = {m} outside 0 < m < 2/d"
        )));
    }
    let km = f64::from(m) * PI;
    let pt = SpectralPoint::real(km, kappa, cfg)?;
    let betas = greens::beta_constants(&pt, cfg, tol)?;
    let eps = cfg.eps;
    let base = eps * eps.ln() / PI + eps / alpha;
    let mid = 0.5 * (betas.beta_plus + betas.beta_minus);
    let k1 = km + 2.0 * km * (base + eps * (betas.gamma + mid));
    let k2 = km + 2.0 * km * (base + eps * (betas.gamma - mid));
    Ok((k1, k2))
}

/// The leading-order expansions hold for kappa = O(eps^rho) with
/// rho < 1/2; callers probing beyond kappa ~ sqrt(eps) should expect the
/// dropped corrections to matter.
pub fn kappa_within_expansion_regime(kappa: f64, eps: f64) -> bool {
    kappa.abs() <= eps.sqrt()
}

/// Leading-order field inside a slit:
/// u(x) = -(alpha/(k sin k)) (r^{+-} cos(k x2) + t^{+-} cos(k(1-x2))).
pub fn slit_field_asymptotic(
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    lambdas: &LambdaSet,
    alpha: f64,
    x2: f64,
    slit_sign: f64,
) -> Result<C> {
    let margin = 5.0 * cfg.eps;
    if x2 < margin || x2 > 1.0 - margin {
        return Err(Error::OutsideValidRegion(format!(
            "x2 = {x2} within 5 eps of a slit end"
        )));
    }
    let co = mu_lambda_coeffs(pt, cfg, lambdas)?;
    let (rc, tc) = if slit_sign >= 0.0 {
        (co.r_plus, co.t_plus)
    } else {
        (co.r_minus, co.t_minus)
    };
    let k = pt.k;
    Ok(-(alpha / (k * k.sin())) * (rc * (k * x2).cos() + tc * (k * (1.0 - x2)).cos()))
}
