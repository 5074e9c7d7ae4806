//! Command-line front end: every computation as a reproducible, scriptable
//! run with bit-stable CSV output.
//!
//! Configuration is a plain text file with one `key = value` per line,
//! `#` comments, and dotted keys (`numerics.n`). Identical configs produce
//! byte-identical CSV: floats are printed with 17 significant digits in a
//! fixed column order, and every file starts with a format-version line
//! and a comment block echoing the effective configuration.

use crate::asymptotics::alpha_default;
use crate::bie;
use crate::error::Error;
use crate::greens::{self, PhysicalConfig, SpectralPoint};
use crate::resonance::{
    find_resonances_at, predicted_resonances, ResonanceBranch, ResonanceFamily, RootMethod,
};
use crate::spectra::{self, SpectrumSource};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// CSV format version written into every output file.
pub const FORMAT_VERSION: u32 = 1;

/// Effective settings of one run. Parses from and serializes to the
/// `key = value` config format; the echo embedded in each CSV reproduces
/// the run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub d: f64,
    pub d0: f64,
    pub eps: f64,
    pub kappa: f64,
    pub k: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub k_count: usize,
    pub n: usize,
    pub tol: f64,
    pub max_terms: usize,
    pub threads: usize,
    pub m_max: u32,
    pub use_full: bool,
    pub source: SpectrumSource,
    pub points_per_unit: f64,
    pub tol_energy: f64,
    pub tol_identity: f64,
    pub tol_symmetry: f64,
    pub enhance_kappa: Vec<f64>,
    pub enhance_eps: Vec<f64>,
    pub enhance_family: ResonanceFamily,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            d: 1.0,
            d0: 0.4,
            eps: 0.05,
            kappa: 0.1,
            k: 2.0,
            k_min: 2.5,
            k_max: 3.1,
            k_count: 101,
            n: 48,
            tol: greens::DEFAULT_TOL,
            max_terms: greens::MAX_TERMS,
            threads: 0,
            m_max: 1,
            use_full: true,
            source: SpectrumSource::Direct,
            points_per_unit: 400.0,
            tol_energy: 1e-6,
            tol_identity: 1e-10,
            tol_symmetry: 1e-12,
            enhance_kappa: vec![0.1, 0.05, 0.025],
            enhance_eps: vec![0.05, 0.035, 0.025],
            enhance_family: ResonanceFamily::Embedded,
            out: None,
        }
    }
}

/// A config-file problem, carrying the offending line number.
#[derive(Debug)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config line {}: {}", self.line, self.message)
    }
}

fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    v.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError {
                    line: line_no,
                    message: format!("expected `key = value`, got `{raw}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            let fail = |message: String| ConfigError {
                line: line_no,
                message,
            };
            macro_rules! num {
                () => {
                    value.parse().map_err(|e| fail(format!("bad value for {key}: {e}")))?
                };
            }
            match key {
                "geometry.d" => cfg.d = num!(),
                "geometry.d0" => cfg.d0 = num!(),
                "geometry.eps" => cfg.eps = num!(),
                "spectral.kappa" => cfg.kappa = num!(),
                "spectral.k" => cfg.k = num!(),
                "spectral.k_min" => cfg.k_min = num!(),
                "spectral.k_max" => cfg.k_max = num!(),
                "spectral.k_count" => cfg.k_count = num!(),
                "numerics.n" => cfg.n = num!(),
                "numerics.tol" => cfg.tol = num!(),
                "numerics.max_terms" => cfg.max_terms = num!(),
                "numerics.threads" => cfg.threads = num!(),
                "resonances.m_max" => cfg.m_max = num!(),
                "resonances.use_full" => {
                    cfg.use_full = value
                        .parse()
                        .map_err(|_| fail(format!("bad bool for {key}: {value}")))?
                }
                "spectrum.source" => {
                    cfg.source = match value {
                        "direct" => SpectrumSource::Direct,
                        "asymptotic" => SpectrumSource::Asymptotic,
                        other => {
                            return Err(fail(format!(
                                "spectrum.source must be direct|asymptotic, got {other}"
                            )))
                        }
                    }
                }
                "spectrum.points_per_unit" => cfg.points_per_unit = num!(),
                "selfcheck.tol_energy" => cfg.tol_energy = num!(),
                "selfcheck.tol_identity" => cfg.tol_identity = num!(),
                "selfcheck.tol_symmetry" => cfg.tol_symmetry = num!(),
                "enhance.kappa_list" => {
                    cfg.enhance_kappa = parse_list(value).map_err(|e| fail(e))?
                }
                "enhance.eps_list" => cfg.enhance_eps = parse_list(value).map_err(|e| fail(e))?,
                "enhance.family" => {
                    cfg.enhance_family = match value {
                        "embedded" | "fano" => ResonanceFamily::Embedded,
                        "fabry_perot" | "fp" => ResonanceFamily::FabryPerot,
                        other => {
                            return Err(fail(format!(
                                "enhance.family must be embedded|fabry_perot, got {other}"
                            )))
                        }
                    }
                }
                "output.path" => cfg.out = Some(PathBuf::from(value)),
                other => {
                    return Err(ConfigError {
                        line: line_no,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        Ok(cfg)
    }

    pub fn geometry(&self) -> Result<PhysicalConfig, Error> {
        PhysicalConfig::new(self.d, self.d0, self.eps)
    }

    /// Effective settings as config-format lines (parsing them back gives
    /// an identical run).
    pub fn echo_lines(&self) -> Vec<String> {
        let f = fmt_float;
        let mut out = vec![
            format!("geometry.d = {}", f(self.d)),
            format!("geometry.d0 = {}", f(self.d0)),
            format!("geometry.eps = {}", f(self.eps)),
            format!("spectral.kappa = {}", f(self.kappa)),
            format!("spectral.k = {}", f(self.k)),
            format!("spectral.k_min = {}", f(self.k_min)),
            format!("spectral.k_max = {}", f(self.k_max)),
            format!("spectral.k_count = {}", self.k_count),
            format!("numerics.n = {}", self.n),
            format!("numerics.tol = {}", f(self.tol)),
            format!("numerics.max_terms = {}", self.max_terms),
            format!("numerics.threads = {}", self.threads),
            format!("resonances.m_max = {}", self.m_max),
            format!("resonances.use_full = {}", self.use_full),
            format!("spectrum.source = {}", self.source.as_str()),
            format!("spectrum.points_per_unit = {}", f(self.points_per_unit)),
            format!("selfcheck.tol_energy = {}", f(self.tol_energy)),
            format!("selfcheck.tol_identity = {}", f(self.tol_identity)),
            format!("selfcheck.tol_symmetry = {}", f(self.tol_symmetry)),
            format!(
                "enhance.kappa_list = {}",
                self.enhance_kappa.iter().map(|&x| f(x)).collect::<Vec<_>>().join(",")
            ),
            format!(
                "enhance.eps_list = {}",
                self.enhance_eps.iter().map(|&x| f(x)).collect::<Vec<_>>().join(",")
            ),
            format!(
                "enhance.family = {}",
                match self.enhance_family {
                    ResonanceFamily::Embedded => "embedded",
                    ResonanceFamily::FabryPerot => "fabry_perot",
                }
            ),
        ];
        if let Some(p) = &self.out {
            out.push(format!("output.path = {}", p.display()));
        }
        out
    }
}

/// 17 significant digits, locale-free; reruns are byte-identical.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn csv_header(command: &str, cfg: &RunConfig, columns: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# slitfano {command} csv");
    let _ = writeln!(s, "# format-version = {FORMAT_VERSION}");
    for line in cfg.echo_lines() {
        let _ = writeln!(s, "# {line}");
    }
    let _ = writeln!(s, "{columns}");
    s
}

fn family_str(f: ResonanceFamily) -> &'static str {
    match f {
        ResonanceFamily::Embedded => "embedded",
        ResonanceFamily::FabryPerot => "fabry_perot",
    }
}

fn method_str(m: RootMethod) -> &'static str {
    match m {
        RootMethod::Asymptotic => "asymptotic",
        RootMethod::NumericHat => "numeric_hat",
        RootMethod::NumericFull => "numeric_full",
    }
}

struct CommandOutput {
    csv: String,
    /// Rows that carried error markers.
    error_rows: usize,
    /// Human-readable notes for stdout.
    notes: Vec<String>,
}

fn cmd_betas(cfg: &RunConfig) -> Result<CommandOutput, Error> {
    let geom = cfg.geometry()?;
    let columns = "k,beta_e_re,beta_e_im,beta_plus_re,beta_plus_im,beta_minus_re,beta_minus_im,beta_i_re,beta_i_im,beta_tilde_re,beta_tilde_im,beta_re,beta_im,gamma_re,gamma_im,beta_hat_re,beta_hat_im,eta_re,eta_im,error_flag";
    let mut csv = csv_header("betas", cfg, columns);
    let mut error_rows = 0;
    let ks: Vec<f64> = if cfg.k_count <= 1 {
        vec![cfg.k]
    } else {
        (0..cfg.k_count)
            .map(|i| cfg.k_min + (cfg.k_max - cfg.k_min) * i as f64 / (cfg.k_count - 1) as f64)
            .collect()
    };
    for k in ks {
        let row = SpectralPoint::real(k, cfg.kappa, &geom)
            .and_then(|pt| greens::beta_constants(&pt, &geom, cfg.tol));
        match row {
            Ok(b) => {
                let f = fmt_float;
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},",
                    f(k),
                    f(b.beta_e.re),
                    f(b.beta_e.im),
                    f(b.beta_plus.re),
                    f(b.beta_plus.im),
                    f(b.beta_minus.re),
                    f(b.beta_minus.im),
                    f(b.beta_i.re),
                    f(b.beta_i.im),
                    f(b.beta_tilde.re),
                    f(b.beta_tilde.im),
                    f(b.beta.re),
                    f(b.beta.im),
                    f(b.gamma.re),
                    f(b.gamma.im),
                    f(b.beta_hat.re),
                    f(b.beta_hat.im),
                    f(b.eta.re),
                    f(b.eta.im),
                );
            }
            Err(e) => {
                error_rows += 1;
                let nan = "nan";
                let _ = writeln!(
                    csv,
                    "{},{}",
                    fmt_float(k),
                    format!("{nan},{nan},{nan},{nan},{nan},{nan},{nan},{nan},{nan},{nan},{nan},{nan},{nan},{nan},{nan},{nan},{nan},{nan},{e}")
                );
            }
        }
    }
    Ok(CommandOutput {
        csv,
        error_rows,
        notes: vec![],
    })
}

fn cmd_solve(cfg: &RunConfig) -> Result<CommandOutput, Error> {
    let geom = cfg.geometry()?;
    let pt = SpectralPoint::real(cfg.k, cfg.kappa, &geom)?;
    let sol = bie::solve_scattering(&pt, &geom, cfg.n)?;
    let columns = "k,kappa,r_re,r_im,t_re,t_im,r_abs,t_abs,energy_residual,avg1m_re,avg1m_im,avg1p_re,avg1p_im,avg2m_re,avg2m_im,avg2p_re,avg2p_im,cond_estimate";
    let mut csv = csv_header("solve", cfg, columns);
    let f = fmt_float;
    let c = &sol.coefficients;
    let a = &sol.densities.averages;
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        f(cfg.k),
        f(cfg.kappa),
        f(c.r.re),
        f(c.r.im),
        f(c.t.re),
        f(c.t.im),
        f(c.r.norm()),
        f(c.t.norm()),
        f(c.energy_residual),
        f(a[0].re),
        f(a[0].im),
        f(a[1].re),
        f(a[1].im),
        f(a[2].re),
        f(a[2].im),
        f(a[3].re),
        f(a[3].im),
        f(sol.condition_estimate),
    );
    let notes = if sol.condition_flagged {
        vec![format!(
            "near-singular solve: condition estimate {:.2e}",
            sol.condition_estimate
        )]
    } else {
        vec![]
    };
    Ok(CommandOutput {
        csv,
        error_rows: 0,
        notes,
    })
}

fn resonance_rows(csv: &mut String, branches: &[ResonanceBranch]) {
    let f = fmt_float;
    for b in branches {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            b.m,
            family_str(b.family),
            match b.parity {
                crate::asymptotics::Parity::Plus => "+",
                crate::asymptotics::Parity::Minus => "-",
            },
            f(b.k.re),
            f(b.k.im),
            f(b.kappa),
            f(b.eps),
            method_str(b.method),
            f(b.residual),
        );
    }
}

fn cmd_resonances(cfg: &RunConfig) -> Result<CommandOutput, Error> {
    let geom = cfg.geometry()?;
    let columns = "m,family,parity,re_k,im_k,kappa,eps,method,residual";
    let mut csv = csv_header("resonances", cfg, columns);
    let predicted = predicted_resonances(&geom, cfg.kappa, cfg.m_max)?;
    resonance_rows(&mut csv, &predicted);
    let numeric = find_resonances_at(&geom, cfg.kappa, cfg.m_max, cfg.use_full, cfg.n)?;
    resonance_rows(&mut csv, &numeric);
    let mut notes: Vec<String> = numeric
        .iter()
        .map(|b| {
            format!(
                "m={} {}: k = {} + {}i (residual {:.2e})",
                b.m,
                family_str(b.family),
                b.k.re,
                b.k.im,
                b.residual
            )
        })
        .collect();
    if !crate::asymptotics::kappa_within_expansion_regime(cfg.kappa, geom.eps) {
        notes.push(format!(
            "warning: kappa = {} exceeds sqrt(eps) = {:.4}; the leading-order expansions degrade",
            cfg.kappa,
            geom.eps.sqrt()
        ));
    }
    Ok(CommandOutput {
        csv,
        error_rows: 0,
        notes,
    })
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<CommandOutput, Error> {
    let geom = cfg.geometry()?;
    // Refine near every located resonance: a coarse tier over the expected
    // feature region and a fine tier at the branch linewidth.
    let branches = find_resonances_at(&geom, cfg.kappa, cfg.m_max, cfg.use_full, cfg.n)
        .unwrap_or_default();
    let base_step = 1.0 / cfg.points_per_unit;
    let mut windows = Vec::new();
    for b in &branches {
        let center = b.k.re;
        windows.push((center, 64.0 * base_step / 4.0, base_step / 64.0));
        let lw = b.k.im.abs().max(1e-9);
        windows.push((center, 24.0 * lw, lw / 3.0));
    }
    let grid = spectra::adaptive_grid(cfg.k_min, cfg.k_max, cfg.points_per_unit, &windows);
    let rows = spectra::sweep(&geom, cfg.kappa, &grid, cfg.source, cfg.n);
    let columns = "k,t_abs,r_abs,t_arg,energy_residual,max_slit_amp,source,error_flag";
    let mut csv = csv_header("spectrum", cfg, columns);
    let f = fmt_float;
    let mut error_rows = 0;
    for r in &rows {
        if r.error_flag.is_some() {
            error_rows += 1;
        }
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            f(r.k),
            f(r.t_abs),
            f(r.r_abs),
            f(r.t_arg),
            f(r.energy_residual),
            f(r.max_slit_amp),
            r.source.as_str(),
            r.error_flag.clone().unwrap_or_default(),
        );
    }
    // Fano summary block for embedded branches inside the sweep range.
    let mut notes = Vec::new();
    if cfg.kappa != 0.0 {
        for b in branches
            .iter()
            .filter(|b| b.family == ResonanceFamily::Embedded)
        {
            if b.k.re < cfg.k_min || b.k.re > cfg.k_max {
                continue;
            }
            match spectra::detect_fano(&geom, cfg.kappa, b, cfg.n, 48) {
                Ok(feat) => {
                    let _ = writeln!(csv, "# fano.m = {}", b.m);
                    let _ = writeln!(csv, "# fano.k_star = {}", f(feat.k_star));
                    let _ = writeln!(csv, "# fano.k_dip = {}", f(feat.k_dip));
                    let _ = writeln!(csv, "# fano.k_peak = {}", f(feat.k_peak));
                    let _ = writeln!(csv, "# fano.t_dip = {}", f(feat.t_dip));
                    let _ = writeln!(csv, "# fano.t_peak = {}", f(feat.t_peak));
                    let _ = writeln!(csv, "# fano.window_c = {}", f(feat.window_c));
                    notes.push(format!(
                        "fano feature m={}: dip |T|={:.4} at k={:.6}, peak |T|={:.4} at k={:.6}",
                        b.m, feat.t_dip, feat.k_dip, feat.t_peak, feat.k_peak
                    ));
                }
                Err(e) => {
                    let _ = writeln!(csv, "# fano.m = {} not detected: {e}", b.m);
                    notes.push(format!("fano feature m={} not detected: {e}", b.m));
                }
            }
        }
    }
    Ok(CommandOutput {
        csv,
        error_rows,
        notes,
    })
}

fn cmd_enhance(cfg: &RunConfig) -> Result<CommandOutput, Error> {
    let geom = cfg.geometry()?;
    let rep = spectra::enhancement_scan(
        &geom,
        &cfg.enhance_kappa,
        &cfg.enhance_eps,
        cfg.enhance_family,
        cfg.n,
    )?;
    let columns = "family,kappa,eps,k_res,amplitude";
    let mut csv = csv_header("enhance", cfg, columns);
    let f = fmt_float;
    for r in &rep.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            family_str(r.family),
            f(r.kappa),
            f(r.eps),
            f(r.k_res),
            f(r.amplitude),
        );
    }
    let _ = writeln!(csv, "# slope.kappa = {}", f(rep.slope_kappa));
    let _ = writeln!(csv, "# slope.kappa_r2 = {}", f(rep.r2_kappa));
    let _ = writeln!(csv, "# slope.eps = {}", f(rep.slope_eps));
    let _ = writeln!(csv, "# slope.eps_r2 = {}", f(rep.r2_eps));
    Ok(CommandOutput {
        csv,
        error_rows: 0,
        notes: vec![
            format!("kappa slope = {:+.3} (r2 {:.4})", rep.slope_kappa, rep.r2_kappa),
            format!("eps slope = {:+.3} (r2 {:.4})", rep.slope_eps, rep.r2_eps),
        ],
    })
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn run_selfcheck(cfg: &RunConfig) -> Result<Vec<Check>, Error> {
    use num_complex::Complex64 as C;
    let geom = cfg.geometry()?;
    let mut checks = Vec::new();
    fn bound_check(name: &'static str, value: f64, tol: f64) -> Check {
        Check {
            name,
            passed: value <= tol,
            detail: format!("{value:.3e} <= {tol:.1e}"),
        }
    }
    let mut push = |c: Check| checks.push(c);

    // Branch convention of the propagating and evanescent orders.
    let pt_pi = SpectralPoint::real(std::f64::consts::PI, 0.0, &geom)?;
    let z0 = greens::zeta(0, &pt_pi, &geom)?;
    let z1 = greens::zeta(1, &pt_pi, &geom)?;
    push(bound_check(
        "zeta-branch",
        (z0 - C::new(std::f64::consts::PI, 0.0)).norm() + z1.re.abs()
            + (z1.im - std::f64::consts::PI * 3.0_f64.sqrt()).abs(),
        1e-10,
    ));

    // Diamond membership of the reference points.
    let inside = SpectralPoint::real(2.83, 0.1, &geom)?;
    let outside = SpectralPoint::real(6.5, 0.1, &geom)?;
    push(Check {
        name: "diamond-region",
        passed: greens::in_diamond(&inside, &geom) && !greens::in_diamond(&outside, &geom),
        detail: "membership of (2.83, 0.1) and (6.5, 0.1)".into(),
    });

    // Imaginary-part identities of the constants at kappa = 0.
    let pt0 = SpectralPoint::real(2.0, 0.0, &geom)?;
    let b0 = greens::beta_constants(&pt0, &geom, cfg.tol)?;
    let zeta0 = greens::zeta(0, &pt0, &geom)?.re;
    push(bound_check(
        "im-gamma-beta-hat",
        ((b0.gamma + b0.beta_hat).im + 2.0 / (geom.d * zeta0)).abs()
            + (b0.gamma - b0.beta_hat).im.abs(),
        cfg.tol_identity,
    ));
    push(bound_check(
        "beta-pm-coincide-at-kappa0",
        (b0.beta_plus - b0.beta_minus).norm() + (b0.beta_plus - b0.beta_hat).norm(),
        cfg.tol_identity,
    ));

    // mu coefficients at normal incidence.
    let alpha = alpha_default();
    let ls0 = crate::asymptotics::lambda_set_hat(&pt0, &geom, alpha, cfg.tol)?;
    let co0 = crate::asymptotics::mu_lambda_coeffs(&pt0, &geom, &ls0)?;
    push(bound_check(
        "mu-at-kappa0",
        (co0.mu_plus - 2.0).norm() + co0.mu_minus.norm(),
        cfg.tol_identity,
    ));

    // Fixed log kernel: spot value and discrete symmetry/reality.
    push(bound_check(
        "rho-kernel-spot",
        crate::cheb::rho_kernel(0.5, -0.5).abs(),
        1e-13,
    ));
    let basis = crate::cheb::basis(16);
    let mut asym: f64 = 0.0;
    for i in 0..16 {
        for j in 0..16 {
            asym = asym.max((basis.s_mat[(i, j)] - basis.s_mat[(j, i)]).norm());
        }
    }
    push(bound_check(
        "s-matrix-symmetry",
        asym + basis.s_mat.max_abs_imag(),
        cfg.tol_symmetry,
    ));

    // Direct solver energy conservation at the reference point.
    let pt = SpectralPoint::real(2.0, cfg.kappa, &geom)?;
    let sol = bie::solve_scattering(&pt, &geom, 24)?;
    push(bound_check(
        "energy-conservation",
        sol.coefficients.energy_residual,
        cfg.tol_energy,
    ));

    // Even/odd split reproduces the full solve.
    let eo = bie::solve_even_odd(&pt, &geom, 16)?;
    let full = bie::solve_scattering(&pt, &geom, 16)?;
    push(bound_check(
        "even-odd-recombination",
        (eo.coefficients.t - full.coefficients.t).norm(),
        1e-10,
    ));

    // alpha against its golden value.
    push(bound_check("alpha-golden", (alpha - (-1.107_022_1)).abs(), 1e-4));

    Ok(checks)
}

fn cmd_selfcheck(cfg: &RunConfig) -> Result<CommandOutput, Error> {
    let checks = run_selfcheck(cfg)?;
    let columns = "check,status,detail";
    let mut csv = csv_header("selfcheck", cfg, columns);
    let mut notes = Vec::new();
    let mut error_rows = 0;
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        if !c.passed {
            error_rows += 1;
        }
        let _ = writeln!(csv, "{},{},{}", c.name, status, c.detail.replace(',', ";"));
        notes.push(format!("{status} {} ({})", c.name, c.detail));
    }
    Ok(CommandOutput {
        csv,
        error_rows,
        notes,
    })
}

/// Gnuplot companion script for a CSV.
fn plot_script(command: &str, csv_path: &Path) -> String {
    let data = csv_path.display();
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot script generated by slitfano {command}");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set datafile commentschars '#'");
    let _ = writeln!(s, "set key left top");
    match command {
        "spectrum" => {
            let _ = writeln!(s, "set xlabel 'k'");
            let _ = writeln!(s, "set ylabel '|T|'");
            let _ = writeln!(
                s,
                "plot '{data}' using 1:2 with lines title '|T|', '' using 1:3 with lines title '|R|'"
            );
        }
        "betas" => {
            let _ = writeln!(s, "set xlabel 'k'");
            let _ = writeln!(
                s,
                "plot '{data}' using 1:2 with lines title 'Re beta_e', '' using 1:3 with lines title 'Im beta_e'"
            );
        }
        "enhance" => {
            let _ = writeln!(s, "set logscale xy");
            let _ = writeln!(s, "set xlabel 'kappa or eps'");
            let _ = writeln!(s, "set ylabel 'max slit amplitude'");
            let _ = writeln!(
                s,
                "plot '{data}' using 2:5 with points title 'vs kappa', '' using 3:5 with points title 'vs eps'"
            );
        }
        _ => {
            let _ = writeln!(s, "plot '{data}' using 1:2 with lines");
        }
    }
    s
}

/// Parsed command line.
struct Cli {
    command: String,
    config_path: Option<PathBuf>,
    out: Option<PathBuf>,
    emit_plot_script: bool,
}

fn parse_args(args: &[String]) -> Result<Cli, String> {
    let mut command = None;
    let mut config_path = None;
    let mut out = None;
    let mut emit_plot_script = false;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        match a.as_str() {
            "--config" => {
                config_path = Some(PathBuf::from(
                    it.next().ok_or("--config needs a path")?,
                ))
            }
            "--out" => out = Some(PathBuf::from(it.next().ok_or("--out needs a path")?)),
            "--emit-plot-script" => emit_plot_script = true,
            other if command.is_none() && !other.starts_with('-') => {
                command = Some(other.to_string())
            }
            other => return Err(format!("unexpected argument `{other}`")),
        }
    }
    Ok(Cli {
        command: command.ok_or("missing command (betas|solve|resonances|spectrum|enhance|selfcheck)")?,
        config_path,
        out,
        emit_plot_script,
    })
}

const USAGE: &str = "usage: slitfano <betas|solve|resonances|spectrum|enhance|selfcheck> \
[--config PATH] [--out PATH] [--emit-plot-script]";

/// Entry point; returns the process exit code
/// (0 success, 1 computation error, 2 config error).
pub fn run(args: &[String]) -> i32 {
    let cli = match parse_args(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}\n{USAGE}");
            return 2;
        }
    };
    let mut cfg = match &cli.config_path {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("cannot read config {}: {e}", path.display());
                    return 2;
                }
            };
            match RunConfig::parse(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{e}");
                    return 2;
                }
            }
        }
        None => RunConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.out = Some(out);
    }
    if cfg.geometry().is_err() {
        eprintln!(
            "invalid geometry: d = {}, d0 = {}, eps = {}",
            cfg.d, cfg.d0, cfg.eps
        );
        return 2;
    }

    // Thread count: explicit env var wins, then numerics.threads, then all cores.
    let threads = std::env::var("SLITFANO_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(cfg.threads);
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let result = match cli.command.as_str() {
        "betas" => cmd_betas(&cfg),
        "solve" => cmd_solve(&cfg),
        "resonances" => cmd_resonances(&cfg),
        "spectrum" => cmd_spectrum(&cfg),
        "enhance" => cmd_enhance(&cfg),
        "selfcheck" => cmd_selfcheck(&cfg),
        other => {
            eprintln!("unknown command `{other}`\n{USAGE}");
            return 2;
        }
    };
    let output = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("computation failed: {e}");
            return 1;
        }
    };
    let path = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cli.command)));
    if let Err(e) = std::fs::write(&path, &output.csv) {
        eprintln!("cannot write {}: {e}", path.display());
        return 1;
    }
    for note in &output.notes {
        println!("{note}");
    }
    println!("wrote {}", path.display());
    if cli.emit_plot_script {
        let gp = path.with_extension("gp");
        if let Err(e) = std::fs::write(&gp, plot_script(&cli.command, &path)) {
            eprintln!("cannot write {}: {e}", gp.display());
            return 1;
        }
        println!("wrote {}", gp.display());
    }
    if output.error_rows > 0 {
        eprintln!("{} row(s) carried error markers", output.error_rows);
        return 1;
    }
    0
}
