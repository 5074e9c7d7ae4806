//! Direct boundary-integral solver for the four-aperture system.
//!
//! The unknowns are the rescaled aperture flux densities
//! phi_1^{-}, phi_1^{+}, phi_2^{-}, phi_2^{+} on I = (-1/2, 1/2) (upper and
//! lower apertures of the two slits). The Galerkin system couples them
//! through the exterior aperture kernels (same slit and cross slit), the
//! interior waveguide kernel, and the top-bottom interior coupling:
//!
//! ```text
//! [ Te+Ti   Te,-    Ti~     0    ] [phi1-]           [2 f-]
//! [ Te,+    Te+Ti   0       Ti~  ] [phi1+]  = 1/eps  [2 f+]
//! [ Ti~     0       Te+Ti   Te,- ] [phi2-]           [ 0  ]
//! [ 0       Ti~     Te,+    Te+Ti] [phi2+]           [ 0  ]
//! ```
//!
//! with plane-wave forcing f^{+-}(X) = -e^{i kappa (eps X +- d0/2)}. The
//! solver works with psi = eps * phi internally so matrix entries stay O(1).

use crate::cheb::{self, SBasis, MAX_INTERIOR_MODES};
use crate::error::{Error, Result};
use crate::greens::{
    self, in_diamond, interior_mode_coeff_opposite, interior_mode_coeff_same, BetaSet,
    LatticeAccel, PhysicalConfig, SpectralPoint,
};
use crate::linalg::{CMat, LuFactors};
use crate::special::cis;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// Condition-estimate threshold above which a solve is flagged as
/// near-singular (resonance sweeps legitimately approach singularity).
pub const CONDITION_FLAG: f64 = 1e12;

/// Tag for the spectral basis used by a discretized operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisTag {
    WeightedChebyshev,
}

/// One rescaled boundary-integral operator in the spectral basis.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub n_modes: usize,
    pub entries: CMat,
    pub basis: BasisTag,
}

/// Which operator block to discretize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// Exterior same-slit kernel G_eps^e.
    Te,
    /// Interior same-end kernel G_eps^i.
    Ti,
    /// Exterior cross-slit kernel G_eps^{e,+}.
    TePlus,
    /// Exterior cross-slit kernel G_eps^{e,-}.
    TeMinus,
    /// Interior opposite-end kernel G~_eps^i.
    TiTilde,
}

/// Solved aperture flux densities (coefficients of the true phi in the
/// weighted basis) and their averages <phi, 1>.
#[derive(Debug, Clone)]
pub struct ApertureDensities {
    pub phi1_minus: Vec<C>,
    pub phi1_plus: Vec<C>,
    pub phi2_minus: Vec<C>,
    pub phi2_plus: Vec<C>,
    /// <phi_1^-,1>, <phi_1^+,1>, <phi_2^-,1>, <phi_2^+,1>.
    pub averages: [C; 4],
}

/// Reflection and transmission of the zeroth Rayleigh order.
#[derive(Debug, Clone, Copy)]
pub struct ScatteringCoefficients {
    pub r: C,
    pub t: C,
    pub energy_residual: f64,
}

/// Full output of a direct solve.
#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    pub densities: ApertureDensities,
    pub coefficients: ScatteringCoefficients,
    pub condition_estimate: f64,
    pub condition_flagged: bool,
}

/// All Galerkin blocks of the system at one spectral point, plus the
/// pieces needed by the asymptotic modules (beta constants and the
/// projection-free remainder operators).
pub struct Assembly {
    pub n: usize,
    pub basis: Arc<SBasis>,
    pub betas: BetaSet,
    pub pt: SpectralPoint,
    pub cfg: PhysicalConfig,
    /// Te + Ti.
    diag: CMat,
    /// Te alone (so single blocks can be extracted).
    te: CMat,
    /// Te,+ and Te,-.
    cross_plus: CMat,
    cross_minus: CMat,
    /// Ti~.
    tilde: CMat,
    /// S_kappa^infty = (Te + Ti) - beta P - S.
    sinf: CMat,
    /// S~^infty = Ti~ - beta~ P.
    stilde_res: CMat,
}

impl Assembly {
    pub fn new(pt: &SpectralPoint, cfg: &PhysicalConfig, n: usize, tol: f64) -> Result<Self> {
        let basis = cheb::basis(n);
        let accel = LatticeAccel::new(pt, cfg, tol)?;
        let betas = greens::beta_constants_with(&accel, pt, cfg, tol)?;
        let grids = accel.aperture_grids(cfg, &basis.xs)?;

        // Exterior same-slit block: beta_e P + (1/pi) L0 + P2 L2 + smooth.
        let re_mat = basis.assemble_smooth(&grids.re_smooth);
        let mut te = basis.projection_matrix();
        te.scale(grids.beta_e);
        te.add_scaled(&basis.l0, C::new(1.0 / PI, 0.0));
        te.add_scaled(&basis.l2, grids.z2log_coeff);
        te.add_scaled(&re_mat, C::new(1.0, 0.0));

        // Interior same-end block: beta_i P + (S - (1/pi) L0) + residual.
        let res_same = interior_residual_coeffs(pt.k, cfg.eps, true)?;
        let res_same_mat = basis.cosine_residual_matrix(&res_same);
        let mut ti = basis.projection_matrix();
        ti.scale(betas.beta_i);
        ti.add_scaled(&basis.s_mat, C::new(1.0, 0.0));
        ti.add_scaled(&basis.l0, C::new(-1.0 / PI, 0.0));
        ti.add_scaled(&res_same_mat, C::new(1.0, 0.0));

        let mut diag = te.clone();
        diag.add_scaled(&ti, C::new(1.0, 0.0));

        // Cross-slit blocks: beta^{+-} P + rho^{+-}.
        let rho_p_mat = basis.assemble_smooth(&grids.rho_plus);
        let rho_m_mat = basis.assemble_smooth(&grids.rho_minus);
        let mut cross_plus = basis.projection_matrix();
        cross_plus.scale(grids.beta_plus);
        cross_plus.add_scaled(&rho_p_mat, C::new(1.0, 0.0));
        let mut cross_minus = basis.projection_matrix();
        cross_minus.scale(grids.beta_minus);
        cross_minus.add_scaled(&rho_m_mat, C::new(1.0, 0.0));

        // Interior opposite-end block: beta~ P + exponentially small residual.
        let res_opp = interior_residual_coeffs(pt.k, cfg.eps, false)?;
        let stilde_res = basis.cosine_residual_matrix(&res_opp);
        let mut tilde = basis.projection_matrix();
        tilde.scale(betas.beta_tilde);
        tilde.add_scaled(&stilde_res, C::new(1.0, 0.0));

        // Projection-free exterior+interior remainder for the L operator.
        let mut sinf = diag.clone();
        let mut proj = basis.projection_matrix();
        proj.scale(betas.beta);
        sinf.add_scaled(&proj, C::new(-1.0, 0.0));
        sinf.add_scaled(&basis.s_mat, C::new(-1.0, 0.0));

        Ok(Self {
            n,
            basis,
            betas,
            pt: *pt,
            cfg: *cfg,
            diag,
            te,
            cross_plus,
            cross_minus,
            tilde,
            sinf,
            stilde_res,
        })
    }

    pub fn block(&self, which: BlockKind) -> CMat {
        match which {
            BlockKind::Te => self.te.clone(),
            BlockKind::Ti => {
                let mut ti = self.diag.clone();
                ti.add_scaled(&self.te, C::new(-1.0, 0.0));
                ti
            }
            BlockKind::TePlus => self.cross_plus.clone(),
            BlockKind::TeMinus => self.cross_minus.clone(),
            BlockKind::TiTilde => self.tilde.clone(),
        }
    }

    /// The full 4N x 4N Galerkin matrix.
    pub fn full_matrix(&self) -> CMat {
        let n = self.n;
        let mut m = CMat::zeros(4 * n, 4 * n);
        let z = CMat::zeros(n, n);
        let blocks: [[&CMat; 4]; 4] = [
            [&self.diag, &self.cross_minus, &self.tilde, &z],
            [&self.cross_plus, &self.diag, &z, &self.tilde],
            [&self.tilde, &z, &self.diag, &self.cross_minus],
            [&z, &self.tilde, &self.cross_plus, &self.diag],
        ];
        for (bi, row) in blocks.iter().enumerate() {
            for (bj, blk) in row.iter().enumerate() {
                m.set_block(bi * n, bj * n, blk);
            }
        }
        m
    }

    /// T_{+-} = T_hat +- T_tilde as a 2N x 2N matrix.
    pub fn t_pm(&self, sign: f64) -> CMat {
        let n = self.n;
        let mut dd = self.diag.clone();
        dd.add_scaled(&self.tilde, C::new(sign, 0.0));
        let mut m = CMat::zeros(2 * n, 2 * n);
        m.set_block(0, 0, &dd);
        m.set_block(0, n, &self.cross_minus);
        m.set_block(n, 0, &self.cross_plus);
        m.set_block(n, n, &dd);
        m
    }

    /// The operator L_kappa = S I + S^infty (the T_{+-} block structure
    /// with every rank-one beta projection removed).
    pub fn l_pm(&self, sign: f64) -> CMat {
        let n = self.n;
        let mut dd = self.basis.s_mat.clone();
        dd.add_scaled(&self.sinf, C::new(1.0, 0.0));
        dd.add_scaled(&self.stilde_res, C::new(sign, 0.0));
        let mut off_m = self.cross_minus.clone();
        let mut proj = self.basis.projection_matrix();
        proj.scale(self.betas.beta_minus);
        off_m.add_scaled(&proj, C::new(-1.0, 0.0));
        let mut off_p = self.cross_plus.clone();
        let mut proj = self.basis.projection_matrix();
        proj.scale(self.betas.beta_plus);
        off_p.add_scaled(&proj, C::new(-1.0, 0.0));
        let mut m = CMat::zeros(2 * n, 2 * n);
        m.set_block(0, 0, &dd);
        m.set_block(0, n, &off_m);
        m.set_block(n, 0, &off_p);
        m.set_block(n, n, &dd);
        m
    }

    /// Remainder operators for norm diagnostics.
    pub fn sinf_matrix(&self) -> &CMat {
        &self.sinf
    }

    pub fn stilde_matrix(&self) -> &CMat {
        &self.stilde_res
    }

    /// Galerkin moments of f^{+-}(X) = -e^{i kappa(eps X +- d0/2)}.
    pub fn forcing(&self, sign: f64) -> Vec<C> {
        let mom = self.basis.fourier_moments(self.pt.kappa * self.cfg.eps);
        let phase = -cis(sign * self.pt.kappa * self.cfg.d0 / 2.0);
        mom.into_iter().map(|m| phase * m).collect()
    }
}

/// Residual cosine-series coefficients of the interior kernels: for
/// m >= 1, same end: 2 cot(gamma_m)/(eps gamma_m) + 2/(m pi) (decay 1/m^3);
/// opposite end: 2/(eps gamma_m sin gamma_m) (decay e^{-m pi / eps}).
fn interior_residual_coeffs(k: C, eps: f64, same_end: bool) -> Result<Vec<C>> {
    let mut coeffs = Vec::new();
    for m in 1..=MAX_INTERIOR_MODES {
        let c = if same_end {
            2.0 * interior_mode_coeff_same(m, k, eps)? + C::new(2.0 / (m as f64 * PI), 0.0)
        } else {
            2.0 * interior_mode_coeff_opposite(m, k, eps)?
        };
        if c.norm() < 1e-16 && m > 4 {
            break;
        }
        coeffs.push(c);
    }
    Ok(coeffs)
}

/// Discretize one operator block.
pub fn assemble_block(
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    n: usize,
    which: BlockKind,
) -> Result<DiscreteOperator> {
    if n < 8 {
        return Err(Error::InvalidConfig(format!(
            "basis size N = {n} below the minimum of 8"
        )));
    }
    let asm = Assembly::new(pt, cfg, n, greens::DEFAULT_TOL)?;
    Ok(DiscreteOperator {
        n_modes: n,
        entries: asm.block(which),
        basis: BasisTag::WeightedChebyshev,
    })
}

fn split4(psi: &[C], n: usize) -> [Vec<C>; 4] {
    [
        psi[0..n].to_vec(),
        psi[n..2 * n].to_vec(),
        psi[2 * n..3 * n].to_vec(),
        psi[3 * n..4 * n].to_vec(),
    ]
}

/// Extract R and T from the solved psi = eps*phi coefficient blocks using
/// the exact n = 0 Rayleigh moments of the aperture layer potentials.
fn extract_rt(asm: &Assembly, psi_blocks: &[Vec<C>; 4]) -> Result<ScatteringCoefficients> {
    let pt = &asm.pt;
    let cfg = &asm.cfg;
    let zeta0 = greens::zeta(0, pt, cfg)?;
    let wneg = asm.basis.fourier_moments(-pt.kappa * cfg.eps);
    let dot = |coeffs: &[C]| -> C { coeffs.iter().zip(&wneg).map(|(c, w)| c * w).sum() };
    let phase_p = cis(-pt.kappa * cfg.d0 / 2.0);
    let phase_m = cis(pt.kappa * cfg.d0 / 2.0);
    let pre = -I / (cfg.d * zeta0);
    let r = 1.0 + pre * (phase_m * dot(&psi_blocks[0]) + phase_p * dot(&psi_blocks[1]));
    let t = pre * (phase_m * dot(&psi_blocks[2]) + phase_p * dot(&psi_blocks[3]));
    let energy_residual = (r.norm_sqr() + t.norm_sqr() - 1.0).abs();
    Ok(ScatteringCoefficients {
        r,
        t,
        energy_residual,
    })
}

fn densities_from_psi(asm: &Assembly, psi_blocks: [Vec<C>; 4]) -> ApertureDensities {
    let eps = asm.cfg.eps;
    let to_phi = |v: &Vec<C>| -> Vec<C> { v.iter().map(|c| c / eps).collect() };
    let phi1_minus = to_phi(&psi_blocks[0]);
    let phi1_plus = to_phi(&psi_blocks[1]);
    let phi2_minus = to_phi(&psi_blocks[2]);
    let phi2_plus = to_phi(&psi_blocks[3]);
    let averages = [
        asm.basis.average(&phi1_minus),
        asm.basis.average(&phi1_plus),
        asm.basis.average(&phi2_minus),
        asm.basis.average(&phi2_plus),
    ];
    ApertureDensities {
        phi1_minus,
        phi1_plus,
        phi2_minus,
        phi2_plus,
        averages,
    }
}

/// Solve the full 4N x 4N scattering system at a real frequency in the
/// single-propagating-order diamond.
pub fn solve_scattering(
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    n: usize,
) -> Result<ScatteringSolution> {
    if !pt.is_real_k() {
        return Err(Error::InvalidConfig(
            "direct scattering solve requires a real frequency".into(),
        ));
    }
    if !in_diamond(pt, cfg) {
        return Err(Error::OutsideDiamond);
    }
    let asm = Assembly::new(pt, cfg, n, greens::DEFAULT_TOL)?;
    let a = asm.full_matrix();
    let mut rhs = vec![C::new(0.0, 0.0); 4 * n];
    let f_minus = asm.forcing(-1.0);
    let f_plus = asm.forcing(1.0);
    for i in 0..n {
        rhs[i] = 2.0 * f_minus[i];
        rhs[n + i] = 2.0 * f_plus[i];
    }
    let lu = LuFactors::factor(&a)?;
    let cond = lu.cond_estimate();
    let psi = lu.solve(&rhs);
    let blocks = split4(&psi, n);
    let coefficients = extract_rt(&asm, &blocks)?;
    let densities = densities_from_psi(&asm, blocks);
    Ok(ScatteringSolution {
        densities,
        coefficients,
        condition_estimate: cond,
        condition_flagged: cond > CONDITION_FLAG,
    })
}

/// The two decoupled 2N x 2N systems T_+ and T_-.
pub fn even_odd_split(
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    n: usize,
) -> Result<(DiscreteOperator, DiscreteOperator)> {
    let asm = Assembly::new(pt, cfg, n, greens::DEFAULT_TOL)?;
    let make = |m: CMat| DiscreteOperator {
        n_modes: 2 * n,
        entries: m,
        basis: BasisTag::WeightedChebyshev,
    };
    Ok((make(asm.t_pm(1.0)), make(asm.t_pm(-1.0))))
}

/// Solve via the even/odd subsystems and recombine:
/// [phi1-, phi1+] = phi_+ + phi_-, [phi2-, phi2+] = phi_+ - phi_-.
pub fn solve_even_odd(
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    n: usize,
) -> Result<ScatteringSolution> {
    if !pt.is_real_k() {
        return Err(Error::InvalidConfig(
            "direct scattering solve requires a real frequency".into(),
        ));
    }
    if !in_diamond(pt, cfg) {
        return Err(Error::OutsideDiamond);
    }
    let asm = Assembly::new(pt, cfg, n, greens::DEFAULT_TOL)?;
    let mut rhs = vec![C::new(0.0, 0.0); 2 * n];
    let f_minus = asm.forcing(-1.0);
    let f_plus = asm.forcing(1.0);
    for i in 0..n {
        rhs[i] = f_minus[i];
        rhs[n + i] = f_plus[i];
    }
    let lu_p = LuFactors::factor(&asm.t_pm(1.0))?;
    let lu_m = LuFactors::factor(&asm.t_pm(-1.0))?;
    let cond = lu_p.cond_estimate().max(lu_m.cond_estimate());
    let psi_p = lu_p.solve(&rhs);
    let psi_m = lu_m.solve(&rhs);
    let zero = C::new(0.0, 0.0);
    let mut blocks = [
        vec![zero; n],
        vec![zero; n],
        vec![zero; n],
        vec![zero; n],
    ];
    for i in 0..n {
        blocks[0][i] = psi_p[i] + psi_m[i];
        blocks[1][i] = psi_p[n + i] + psi_m[n + i];
        blocks[2][i] = psi_p[i] - psi_m[i];
        blocks[3][i] = psi_p[n + i] - psi_m[n + i];
    }
    let coefficients = extract_rt(&asm, &blocks)?;
    let densities = densities_from_psi(&asm, blocks);
    Ok(ScatteringSolution {
        densities,
        coefficients,
        condition_estimate: cond,
        condition_flagged: cond > CONDITION_FLAG,
    })
}

/// Axial factor cos(gamma x2)/(gamma sin gamma), overflow-safe for
/// evanescent modes (|Im gamma| large).
fn axial_green_top(gamma: C, x2: f64) -> C {
    if gamma.im >= 0.0 {
        let num = (I * gamma * (x2 + 1.0)).exp() + (I * gamma * (1.0 - x2)).exp();
        I * num / (gamma * ((2.0 * I * gamma).exp() - 1.0))
    } else {
        let num = (I * gamma * (x2 - 1.0)).exp() + (-I * gamma * (x2 + 1.0)).exp();
        I * num / (gamma * (1.0 - (-2.0 * I * gamma).exp()))
    }
}

/// Cosine moments <phi, cos(m pi (X+1/2))> for one density block.
fn cos_moments(basis: &SBasis, coeffs: &[C], m: usize) -> C {
    if m == 0 {
        return basis.average(coeffs);
    }
    coeffs
        .iter()
        .enumerate()
        .map(|(j, &c)| c * basis.cos_moment(j, m))
        .sum()
}

/// Evaluate the total field inside a slit from the solved densities using
/// the interior Green representation (modal sum over transverse modes).
pub fn slit_field(
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    densities: &ApertureDensities,
    x: (f64, f64),
) -> Result<C> {
    let margin = 5.0 * cfg.eps;
    if x.1 < margin || x.1 > 1.0 - margin {
        return Err(Error::OutsideValidRegion(format!(
            "x2 = {} within 5 eps of a slit end",
            x.1
        )));
    }
    let (x_loc, phi1, phi2) = if (x.0 - cfg.d0 / 2.0).abs() <= cfg.eps / 2.0 {
        (
            (x.0 - cfg.d0 / 2.0) / cfg.eps,
            &densities.phi1_plus,
            &densities.phi2_plus,
        )
    } else if (x.0 + cfg.d0 / 2.0).abs() <= cfg.eps / 2.0 {
        (
            (x.0 + cfg.d0 / 2.0) / cfg.eps,
            &densities.phi1_minus,
            &densities.phi2_minus,
        )
    } else {
        return Err(Error::OutsideValidRegion(format!(
            "x1 = {} not inside either slit",
            x.0
        )));
    };
    let basis = cheb::basis(phi1.len());
    let mut acc = C::new(0.0, 0.0);
    for m in 0..=MAX_INTERIOR_MODES {
        let gm = greens::gamma_m(m, pt.k, cfg.eps);
        let g_top = axial_green_top(gm, x.1);
        let g_bot = axial_green_top(gm, 1.0 - x.1);
        let a_m = if m == 0 { 1.0 } else { 2.0 };
        let cosx = (m as f64 * PI * (x_loc + 0.5)).cos();
        let term = -a_m
            * cosx
            * (g_top * cos_moments(&basis, phi1, m) + g_bot * cos_moments(&basis, phi2, m));
        acc += term;
        if m > 2 && term.norm() < 1e-15 * acc.norm().max(1.0) {
            break;
        }
    }
    Ok(acc)
}

/// Modal slit coefficients (a_m, b_m) of
/// u = a_0 cos(k x2) + b_0 cos(k(1-x2))
///   + sum_m [a_m e^{-g_m x2} + b_m e^{-g_m (1-x2)}] cos(m pi (X+1/2)),
/// recovered from the aperture flux moments; `slit` = +1 or -1.
pub fn slit_modal_coefficients(
    pt: &SpectralPoint,
    cfg: &PhysicalConfig,
    densities: &ApertureDensities,
    slit: f64,
    m_max: usize,
) -> Vec<(C, C)> {
    let (phi1, phi2) = if slit > 0.0 {
        (&densities.phi1_plus, &densities.phi2_plus)
    } else {
        (&densities.phi1_minus, &densities.phi2_minus)
    };
    let basis = cheb::basis(phi1.len());
    let k = pt.k;
    let mut out = Vec::with_capacity(m_max + 1);
    // m = 0: -a0 k sin k = <phi1, 1>, b0 k sin k = -<phi2, 1>.
    let ks = k * k.sin();
    out.push((
        -cos_moments(&basis, phi1, 0) / ks,
        -cos_moments(&basis, phi2, 0) / ks,
    ));
    for m in 1..=m_max {
        let g = -I * greens::gamma_m(m, pt.k, cfg.eps); // decay rate, ~ m pi/eps
        let p = 2.0 * cos_moments(&basis, phi1, m);
        let q = -2.0 * cos_moments(&basis, phi2, m);
        let eg = (-g).exp();
        let den = g * (1.0 - eg * eg);
        out.push(((eg * p - q) / den, (p - eg * q) / den));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg() -> PhysicalConfig {
        PhysicalConfig::new(1.0, 0.4, 0.05).unwrap()
    }

    #[test]
    fn matrices_real_and_symmetric_at_normal_incidence() {
        let cfg = cfg();
        let pt = SpectralPoint::real(2.0, 0.0, &cfg).unwrap();
        let asm = Assembly::new(&pt, &cfg, 16, 1e-12).unwrap();
        // S, S0^infty and S~^infty all real at kappa = 0.
        assert!(asm.basis.s_mat.max_abs_imag() < 1e-12);
        assert!(
            asm.sinf.max_abs_imag() < 1e-12,
            "{:e}",
            asm.sinf.max_abs_imag()
        );
        assert!(asm.stilde_res.max_abs_imag() < 1e-12);
        // S kernel depends on |X-Y| and |X+Y+1|: symmetric matrix.
        let s = &asm.basis.s_mat;
        for i in 0..16 {
            for j in 0..16 {
                assert_abs_diff_eq!(s[(i, j)].re, s[(j, i)].re, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cross_block_mirror_relation_at_normal_incidence() {
        // The reflection identity [S0^{infty,+} phi~](X) = [S0^{infty,-} phi](-X)
        // reads S+ J = J S- in matrix form, i.e. S+ = J S- J; the kernel
        // transpose symmetry additionally gives S+ = (S-)^T.
        let cfg = cfg();
        let pt = SpectralPoint::real(2.0, 0.0, &cfg).unwrap();
        let asm = Assembly::new(&pt, &cfg, 16, 1e-12).unwrap();
        let j = asm.basis.parity_matrix();
        let mut sp = asm.cross_plus.clone();
        let mut proj = asm.basis.projection_matrix();
        proj.scale(asm.betas.beta_plus);
        sp.add_scaled(&proj, C::new(-1.0, 0.0));
        let mut sm = asm.cross_minus.clone();
        let mut proj = asm.basis.projection_matrix();
        proj.scale(asm.betas.beta_minus);
        sm.add_scaled(&proj, C::new(-1.0, 0.0));

        let conj_rel = j.matmul(&sm).matmul(&j);
        let mut diff = sp.clone();
        diff.add_scaled(&conj_rel, C::new(-1.0, 0.0));
        assert!(diff.max_abs() < 1e-12, "S+ != J S- J: {:e}", diff.max_abs());

        let mut diff_t = sp.clone();
        diff_t.add_scaled(&sm.transpose(), C::new(-1.0, 0.0));
        assert!(diff_t.max_abs() < 1e-12, "S+ != (S-)^T: {:e}", diff_t.max_abs());
    }

    #[test]
    fn remainder_operator_norms_are_small() {
        // ||S_kappa^infty|| <= C eps (ratio check at eps and eps/2) and
        // ||S~^infty|| <= C e^{-1/eps}.
        let norm_at = |eps: f64| {
            let c = PhysicalConfig::new(1.0, 0.4, eps).unwrap();
            let pt = SpectralPoint::real(2.0, 0.1, &c).unwrap();
            let asm = Assembly::new(&pt, &c, 16, 1e-12).unwrap();
            (asm.sinf.frobenius_norm(), asm.stilde_res.frobenius_norm())
        };
        let (s1, st1) = norm_at(0.05);
        let (s2, _) = norm_at(0.025);
        let c_fit = s2 / 0.025;
        assert!(s1 <= 4.0 * c_fit * 0.05, "S_inf does not scale like eps");
        assert!(st1 <= (-1.0 / 0.05_f64).exp(), "S~ not exponentially small");
    }

    #[test]
    fn energy_is_conserved_and_solution_converges() {
        let cfg = cfg();
        let pt = SpectralPoint::real(2.0, 0.1, &cfg).unwrap();
        let s32 = solve_scattering(&pt, &cfg, 32).unwrap();
        assert!(
            s32.coefficients.energy_residual < 1e-6,
            "energy residual {:e}",
            s32.coefficients.energy_residual
        );
        let s64 = solve_scattering(&pt, &cfg, 64).unwrap();
        // The corner exponent limits the rate to ~N^-2.7 (see the basis
        // notes); measured |T(32)-T(64)| is ~5e-8.
        assert!(
            (s32.coefficients.t - s64.coefficients.t).norm() < 2e-7,
            "self-convergence {:e}",
            (s32.coefficients.t - s64.coefficients.t).norm()
        );
        let s128 = solve_scattering(&pt, &cfg, 128).unwrap();
        assert!(
            (s64.coefficients.t - s128.coefficients.t).norm() < 1e-8,
            "self-convergence at N=64 {:e}",
            (s64.coefficients.t - s128.coefficients.t).norm()
        );
    }

    #[test]
    fn densities_mirror_at_normal_incidence() {
        let cfg = cfg();
        let pt = SpectralPoint::real(2.0, 0.0, &cfg).unwrap();
        let sol = solve_scattering(&pt, &cfg, 24).unwrap();
        // phi1+(X) = phi1-(-X): coefficients flip sign on odd modes.
        for (j, (cp, cm)) in sol
            .densities
            .phi1_plus
            .iter()
            .zip(&sol.densities.phi1_minus)
            .enumerate()
        {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            assert!(
                (cp - sign * cm).norm() < 1e-9 * (1.0 + cp.norm()),
                "mode {j}: {cp} vs {cm}"
            );
        }
    }

    #[test]
    fn even_odd_recombination_matches_full_solve() {
        let cfg = cfg();
        let pt = SpectralPoint::real(2.0, 0.1, &cfg).unwrap();
        let full = solve_scattering(&pt, &cfg, 24).unwrap();
        let eo = solve_even_odd(&pt, &cfg, 24).unwrap();
        for (a, b) in full
            .densities
            .phi1_minus
            .iter()
            .chain(&full.densities.phi2_plus)
            .zip(eo.densities.phi1_minus.iter().chain(&eo.densities.phi2_plus))
        {
            assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
        assert!((full.coefficients.t - eo.coefficients.t).norm() < 1e-10);
    }

    #[test]
    fn l_operator_real_inverse_and_symmetric_inner_products() {
        // At kappa = 0: L0^{-1} of a real rhs is real;
        // <L0^{-1}e1,e1> = <L0^{-1}e2,e2> and <L0^{-1}e1,e2> = <L0^{-1}e2,e1>.
        let cfg = cfg();
        let pt = SpectralPoint::real(2.0, 0.0, &cfg).unwrap();
        let asm = Assembly::new(&pt, &cfg, 24, 1e-12).unwrap();
        let n = 24;
        let l = asm.l_pm(1.0);
        let lu = LuFactors::factor(&l).unwrap();
        let mut e1 = vec![C::new(0.0, 0.0); 2 * n];
        e1[0] = C::new(PI, 0.0);
        let mut e2 = vec![C::new(0.0, 0.0); 2 * n];
        e2[n] = C::new(PI, 0.0);
        let x1 = lu.solve(&e1);
        let x2 = lu.solve(&e2);
        let max_im = x1.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        assert!(max_im < 1e-12, "L0^-1 of real rhs has imag {max_im:e}");
        let g11 = PI * x1[0];
        let g21 = PI * x1[n];
        let g12 = PI * x2[0];
        let g22 = PI * x2[n];
        assert!((g11 - g22).norm() < 1e-10);
        assert!((g21 - g12).norm() < 1e-10);
    }

    #[test]
    fn slit_field_layer_representation_matches_modal_form() {
        let cfg = cfg();
        let pt = SpectralPoint::real(2.0, 0.1, &cfg).unwrap();
        let sol = solve_scattering(&pt, &cfg, 32).unwrap();
        // Midpoint of the + slit.
        let x = (cfg.d0 / 2.0, 0.5);
        let u_layer = slit_field(&pt, &cfg, &sol.densities, x).unwrap();
        let modal = slit_modal_coefficients(&pt, &cfg, &sol.densities, 1.0, 0);
        let (a0, b0) = modal[0];
        let k = pt.k;
        let u_modal = a0 * (k * 0.5).cos() + b0 * (k * 0.5).cos();
        assert!(
            (u_layer - u_modal).norm() < 1e-6,
            "layer {u_layer} vs modal {u_modal}"
        );
    }

    #[test]
    fn modal_coefficients_decay() {
        let cfg = cfg();
        let pt = SpectralPoint::real(2.0, 0.1, &cfg).unwrap();
        let sol = solve_scattering(&pt, &cfg, 32).unwrap();
        let modal = slit_modal_coefficients(&pt, &cfg, &sol.densities, 1.0, 12);
        // Fit the constant over the first few modes; alternating parity
        // makes any single mode a poor normalizer.
        let c_fit = modal[1..4]
            .iter()
            .enumerate()
            .map(|(i, (a, b))| a.norm().max(b.norm()) * ((i + 1) as f64).sqrt())
            .fold(1e-12, f64::max);
        for (m, (am, bm)) in modal.iter().enumerate().skip(1) {
            let bound = 4.0 * c_fit / (m as f64).sqrt();
            assert!(
                am.norm() <= bound && bm.norm() <= bound,
                "mode {m} grows: |a| = {:e}, |b| = {:e}",
                am.norm(),
                bm.norm()
            );
        }
    }

    #[test]
    fn slit_fields_mirror_at_normal_incidence() {
        let cfg = cfg();
        let pt = SpectralPoint::real(2.0, 0.0, &cfg).unwrap();
        let sol = solve_scattering(&pt, &cfg, 24).unwrap();
        for (dx, x2) in [(0.01, 0.3), (-0.015, 0.62)] {
            let up = slit_field(&pt, &cfg, &sol.densities, (cfg.d0 / 2.0 + dx, x2)).unwrap();
            let um = slit_field(&pt, &cfg, &sol.densities, (-cfg.d0 / 2.0 - dx, x2)).unwrap();
            assert!((up - um).norm() < 1e-8, "{up} vs {um}");
        }
    }

    #[test]
    fn block_extraction_is_consistent() {
        let cfg = cfg();
        let pt = SpectralPoint::real(2.0, 0.1, &cfg).unwrap();
        let te = assemble_block(&pt, &cfg, 12, BlockKind::Te).unwrap();
        let ti = assemble_block(&pt, &cfg, 12, BlockKind::Ti).unwrap();
        let tilde = assemble_block(&pt, &cfg, 12, BlockKind::TiTilde).unwrap();
        assert_eq!(te.basis, BasisTag::WeightedChebyshev);
        // Te + Ti + Ti~ is the diagonal block of T_+.
        let (t_plus, t_minus) = even_odd_split(&pt, &cfg, 12).unwrap();
        assert_eq!(t_plus.n_modes, 24);
        let mut diag = te.entries.clone();
        diag.add_scaled(&ti.entries, C::new(1.0, 0.0));
        diag.add_scaled(&tilde.entries, C::new(1.0, 0.0));
        let mut worst: f64 = 0.0;
        for i in 0..12 {
            for j in 0..12 {
                worst = worst.max((t_plus.entries[(i, j)] - diag[(i, j)]).norm());
                // T_- differs from T_+ only through the Ti~ sign.
                let expect_minus = diag[(i, j)] - 2.0 * tilde.entries[(i, j)];
                worst = worst.max((t_minus.entries[(i, j)] - expect_minus).norm());
            }
        }
        assert!(worst < 1e-13, "block algebra inconsistent: {worst:e}");
        assert!(assemble_block(&pt, &cfg, 4, BlockKind::Te).is_err());
    }

    #[test]
    fn rejects_outside_diamond_and_complex_k() {
        let cfg = cfg();
        let outside = SpectralPoint::real(6.5, 0.1, &cfg).unwrap();
        assert!(matches!(
            solve_scattering(&outside, &cfg, 16),
            Err(Error::OutsideDiamond)
        ));
        let complexk = SpectralPoint::new(C::new(2.0, -0.1), 0.1, &cfg).unwrap();
        assert!(solve_scattering(&complexk, &cfg, 16).is_err());
    }
}
