//! Special functions used by the lattice sums and the spectral basis:
//! Bessel `J_n` sequences, the periodic polylogarithm sums
//! `sum sin(n t)/n^2`, `sum cos(n t)/n^3`, ... that accelerate the
//! Rayleigh series, Gauss-Legendre rules, and overflow-safe complex
//! cotangent / cosecant.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

pub const ZETA3: f64 = 1.2020569031595942854;
pub const ZETA5: f64 = 1.0369277551433699263;

/// e^{ix} for real x.
#[inline]
pub fn cis(x: f64) -> Complex64 {
    Complex64::new(x.cos(), x.sin())
}

/// zeta(2n) for n = 1..=N_ZETA via Euler's recurrence
/// (n + 1/2) zeta(2n) = sum_{k=1}^{n-1} zeta(2k) zeta(2n-2k).
const N_ZETA: usize = 40;

fn zeta_even_table() -> &'static [f64; N_ZETA + 1] {
    static TABLE: OnceLock<[f64; N_ZETA + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut z = [0.0; N_ZETA + 1];
        z[1] = PI * PI / 6.0;
        for n in 2..=N_ZETA {
            let mut s = 0.0;
            for k in 1..n {
                s += z[k] * z[n - k];
            }
            z[n] = s / (n as f64 + 0.5);
        }
        z
    })
}

/// Reduce t to [0, pi] and report whether the parity flip applies.
/// For an odd 2pi-periodic function f, f(t) = sign * f(r).
fn reduce_angle(t: f64) -> (f64, f64) {
    let two_pi = 2.0 * PI;
    let mut r = t % two_pi;
    if r < 0.0 {
        r += two_pi;
    }
    if r > PI {
        (two_pi - r, -1.0)
    } else {
        (r, 1.0)
    }
}

/// Clausen function Cl_2(t) = sum_{n>=1} sin(n t)/n^2.
pub fn clausen_cl2(t: f64) -> f64 {
    let (r, sign) = reduce_angle(t);
    if r == 0.0 {
        return 0.0;
    }
    let z = zeta_even_table();
    let ratio = (r / (2.0 * PI)).powi(2);
    let mut pow = ratio * r; // r (r/2pi)^{2n} running power, n = 1
    let mut s = r - r * r.ln();
    for n in 1..=N_ZETA {
        let term = z[n] * pow / (n as f64 * (2 * n + 1) as f64);
        s += term;
        if term.abs() < 1e-17 * s.abs().max(1.0) {
            break;
        }
        pow *= ratio;
    }
    sign * s
}

/// sum_{n>=1} cos(n t)/n^3 (even, 2pi-periodic; value zeta(3) at t = 0).
pub fn clausen_s3(t: f64) -> f64 {
    let (r, _) = reduce_angle(t);
    if r == 0.0 {
        return ZETA3;
    }
    let z = zeta_even_table();
    let ratio = (r / (2.0 * PI)).powi(2);
    let r2 = r * r;
    let mut pow = ratio * r2;
    let mut s = ZETA3 - 0.75 * r2 + 0.5 * r2 * r.ln();
    for n in 1..=N_ZETA {
        let nn = n as f64;
        let term = z[n] * pow / (nn * (2 * n + 1) as f64 * (2 * n + 2) as f64);
        s -= term;
        if term.abs() < 1e-17 {
            break;
        }
        pow *= ratio;
    }
    s
}

/// sum_{n>=1} sin(n t)/n^4 (odd, 2pi-periodic).
pub fn clausen_s4(t: f64) -> f64 {
    let (r, sign) = reduce_angle(t);
    if r == 0.0 {
        return 0.0;
    }
    let z = zeta_even_table();
    let ratio = (r / (2.0 * PI)).powi(2);
    let r3 = r * r * r;
    let mut pow = ratio * r3;
    let mut s = ZETA3 * r - (11.0 / 36.0) * r3 + r3 / 6.0 * r.ln();
    for n in 1..=N_ZETA {
        let nn = n as f64;
        let term =
            z[n] * pow / (nn * (2 * n + 1) as f64 * (2 * n + 2) as f64 * (2 * n + 3) as f64);
        s -= term;
        if term.abs() < 1e-17 {
            break;
        }
        pow *= ratio;
    }
    sign * s
}

/// sum_{n>=1} cos(n t)/n^5 (even, 2pi-periodic; value zeta(5) at t = 0).
pub fn clausen_s5(t: f64) -> f64 {
    let (r, _) = reduce_angle(t);
    if r == 0.0 {
        return ZETA5;
    }
    let z = zeta_even_table();
    let ratio = (r / (2.0 * PI)).powi(2);
    let r2 = r * r;
    let r4 = r2 * r2;
    let mut pow = ratio * r4;
    let mut s = ZETA5 - 0.5 * ZETA3 * r2 + (25.0 / 288.0) * r4 - r4 / 24.0 * r.ln();
    for n in 1..=N_ZETA {
        let nn = n as f64;
        let term = z[n] * pow
            / (nn * (2 * n + 1) as f64
                * (2 * n + 2) as f64
                * (2 * n + 3) as f64
                * (2 * n + 4) as f64);
        s += term;
        if term.abs() < 1e-17 {
            break;
        }
        pow *= ratio;
    }
    s
}

/// Sequence J_0(x), ..., J_nmax(x) for x >= 0 by Miller's backward
/// recurrence with the normalization J_0 + 2 J_2 + 2 J_4 + ... = 1.
pub fn bessel_j_seq(nmax: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0, "bessel_j_seq takes x >= 0; use parity for x < 0");
    if x == 0.0 {
        let mut out = vec![0.0; nmax + 1];
        out[0] = 1.0;
        return out;
    }
    if x < 1e-8 {
        // Leading-order series; avoids a long recurrence for tiny x.
        let mut out = vec![0.0; nmax + 1];
        out[0] = 1.0 - 0.25 * x * x;
        if nmax >= 1 {
            out[1] = 0.5 * x;
        }
        if nmax >= 2 {
            out[2] = 0.125 * x * x;
        }
        return out;
    }
    let start = {
        let base = (nmax as f64).max(x);
        let m = base + 15.0 + 2.0 * base.sqrt() + 10.0 * (x / (base + 1.0));
        let mut m = m.ceil() as usize;
        if m % 2 == 1 {
            m += 1;
        }
        m
    };
    let mut out = vec![0.0; nmax + 1];
    let mut jp = 0.0_f64; // J_{n+1}
    let mut j = 1e-300_f64; // J_n (arbitrary scale)
    let mut norm = 0.0_f64; // accumulates J_0 + 2 sum J_{2k}
    for n in (0..=start).rev() {
        let jm = (2.0 * (n as f64 + 1.0) / x) * j - jp;
        jp = j;
        j = jm;
        // j now holds J_n at the arbitrary scale
        if n % 2 == 0 {
            norm += if n == 0 { j } else { 2.0 * j };
        }
        if n <= nmax {
            out[n] = j;
        }
        if j.abs() > 1e250 {
            let s = 1e-250;
            j *= s;
            jp *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev-based initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// cot z, overflow-safe for large |Im z|.
pub fn cot_stable(z: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    if z.im >= 0.0 {
        let q = (2.0 * i * z).exp(); // |q| <= 1
        i * (q + 1.0) / (q - 1.0)
    } else {
        let q = (-2.0 * i * z).exp(); // |q| < 1
        i * (1.0 + q) / (1.0 - q)
    }
}

/// 1/sin z, overflow-safe for large |Im z|.
pub fn inv_sin_stable(z: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    if z.im >= 0.0 {
        let e = (i * z).exp(); // |e| <= 1
        -2.0 * i * e / (1.0 - e * e)
    } else {
        let e = (-i * z).exp(); // |e| < 1
        2.0 * i * e / (1.0 - e * e)
    }
}

/// ln|sin(t)/t| evaluated safely near t = 0 (real t, |t| < pi).
pub fn ln_abs_sinc(t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let at = t.abs();
    if at < 1e-4 {
        // ln(sin t / t) = -t^2/6 - t^4/180 - ...
        let t2 = t * t;
        -t2 / 6.0 - t2 * t2 / 180.0
    } else {
        (at.sin() / at).abs().ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zeta_even_matches_closed_forms() {
        let z = zeta_even_table();
        assert_abs_diff_eq!(z[1], PI.powi(2) / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z[2], PI.powi(4) / 90.0, epsilon = 1e-14);
        assert_abs_diff_eq!(z[3], PI.powi(6) / 945.0, epsilon = 1e-13);
    }

    fn brute_sum(f: impl Fn(f64) -> f64, p: i32, t: f64, n: usize) -> f64 {
        (1..=n)
            .map(|k| f(k as f64 * t) / (k as f64).powi(p))
            .sum()
    }

    #[test]
    fn clausen_sums_match_brute_force() {
        for &t in &[0.3, 1.0, 2.5, 3.0, 4.5, -1.3] {
            // Cl2 converges slowly; compare the faster sums tightly and
            // Cl2 with a looser tolerance.
            let s3b = brute_sum(f64::cos, 3, t, 200_000);
            let s4b = brute_sum(f64::sin, 4, t, 100_000);
            let s5b = brute_sum(f64::cos, 5, t, 50_000);
            assert_abs_diff_eq!(clausen_s3(t), s3b, epsilon = 1e-9);
            assert_abs_diff_eq!(clausen_s4(t), s4b, epsilon = 1e-11);
            assert_abs_diff_eq!(clausen_s5(t), s5b, epsilon = 1e-12);
        }
        // Cl2(pi/2) = Catalan's constant.
        assert_abs_diff_eq!(clausen_cl2(PI / 2.0), 0.915_965_594_177_219, epsilon = 1e-13);
        assert_abs_diff_eq!(clausen_cl2(PI), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn bessel_known_values() {
        let j = bessel_j_seq(5, 1.0);
        assert_abs_diff_eq!(j[0], 0.765_197_686_557_966_6, epsilon = 1e-14);
        assert_abs_diff_eq!(j[1], 0.440_050_585_744_933_5, epsilon = 1e-14);
        let j10 = bessel_j_seq(10, 10.0);
        assert_abs_diff_eq!(j10[0], -0.245_935_764_451_348_3, epsilon = 1e-13);
        assert_abs_diff_eq!(j10[5], -0.234_061_528_186_794_0, epsilon = 1e-13);
        // Large argument sanity against the n = 0 asymptotic form.
        let x = 300.0;
        let jx = bessel_j_seq(4, x);
        let asym = (2.0 / (PI * x)).sqrt() * (x - PI / 4.0).cos();
        assert_abs_diff_eq!(jx[0], asym, epsilon = 1e-4);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (xs, ws) = gauss_legendre(12);
        let int_x10: f64 = xs
            .iter()
            .zip(&ws)
            .map(|(x, w)| w * x.powi(10))
            .sum();
        assert_abs_diff_eq!(int_x10, 2.0 / 11.0, epsilon = 1e-14);
        let int_cos: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.cos()).sum();
        assert_abs_diff_eq!(int_cos, 2.0 * 1.0_f64.sin(), epsilon = 1e-14);
    }

    #[test]
    fn stable_trig_matches_naive_for_moderate_arguments() {
        let zs = [
            Complex64::new(0.7, 0.3),
            Complex64::new(2.0, -1.5),
            Complex64::new(-1.0, 4.0),
        ];
        for z in zs {
            let naive_cot = z.cos() / z.sin();
            assert!((cot_stable(z) - naive_cot).norm() < 1e-13);
            assert!((inv_sin_stable(z) - 1.0 / z.sin()).norm() < 1e-13);
        }
        // Huge imaginary part must not overflow: cot(i y) -> -i.
        let big = Complex64::new(0.3, 5000.0);
        let c = cot_stable(big);
        assert!((c - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!(inv_sin_stable(big).norm() < 1e-300 || inv_sin_stable(big).norm() == 0.0);
    }
}
