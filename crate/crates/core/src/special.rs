//! Numerical building blocks shared by the Green's functions and the oracle.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
pub const ZETA3: f64 = 1.202_056_903_159_594_3;

/// Riemann zeta at an integer argument `s >= 2`.
pub fn zeta_int(s: u32) -> f64 {
    match s {
        2 => PI * PI / 6.0,
        3 => ZETA3,
        4 => PI.powi(4) / 90.0,
        _ => {
            // direct sum plus Euler-Maclaurin tail; s >= 5 makes N = 30 plenty
            let n = 30usize;
            let sf = s as f64;
            let mut acc = 0.0;
            for m in (1..=n).rev() {
                acc += (m as f64).powf(-sf);
            }
            let nf = n as f64;
            acc + nf.powf(1.0 - sf) / (sf - 1.0) - 0.5 * nf.powf(-sf) + sf * nf.powf(-sf - 1.0) / 12.0
        }
    }
}

/// Polylogarithm Li_n(z) for n in {2, 3} and |z| <= 1.
pub fn polylog(n: u32, z: C64) -> C64 {
    assert!(n == 2 || n == 3, "polylog order {n} not supported");
    if z.norm() <= 0.5 {
        let mut acc = C64::new(0.0, 0.0);
        let mut zp = z;
        for p in 1..200 {
            let term = zp / (p as f64).powi(n as i32);
            acc += term;
            if term.norm() < 1e-18 {
                break;
            }
            zp *= z;
        }
        return acc;
    }
    let mu = z.ln();
    if mu.norm() == 0.0 {
        return C64::new(zeta_int(n), 0.0);
    }
    // Li_n(e^mu) = sum_k zeta(n-k) mu^k/k! with the k = n-1 term replaced by
    // mu^(n-1)/(n-1)! (H_{n-1} - ln(-mu)); converges for |mu| < 2 pi.
    let mut acc = C64::new(0.0, 0.0);
    let mut mk = C64::new(1.0, 0.0);
    let mut fact = 1.0;
    for k in 0..(n - 1) {
        if k > 0 {
            mk *= mu;
            fact *= k as f64;
        }
        acc += mk * zeta_int(n - k) / fact;
    }
    let harmonic: f64 = (1..n).map(|j| 1.0 / j as f64).sum();
    let mn1 = mu.powu(n - 1);
    let fn1: f64 = (1..n).map(|j| j as f64).product();
    acc += mn1 / fn1 * (C64::new(harmonic, 0.0) - (-mu).ln());
    let fnn = fn1 * n as f64;
    acc += -0.5 * mu.powu(n) / fnn;
    // odd negative zeta values: zeta(1-2j)/(n-1+2j)!
    let w = mu / (2.0 * PI);
    let w2 = w * w;
    let mut wp = mn1;
    for j in 1..80u32 {
        wp *= w2;
        let jf = j as f64;
        let mut denom = 2.0 * jf * (2.0 * jf + 1.0);
        if n == 3 {
            denom *= 2.0 * jf + 2.0;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let coef = sign * 2.0 * zeta_int(2 * j) / denom;
        let term = wp * coef;
        acc += term;
        if term.norm() < 1e-18 * acc.norm().max(1e-300) {
            break;
        }
    }
    acc
}

/// Sum of cos(p t)/p^3 over p >= 1 (real part of Li_3 on the unit circle).
pub fn cos_sum3(theta: f64) -> f64 {
    polylog(3, C64::from_polar(1.0, theta)).re
}

/// Exponential integral E_n(x) for real x >= 0.
pub fn expint(n: u32, x: f64) -> f64 {
    const EPS: f64 = 1e-16;
    const FPMIN: f64 = 1e-300;
    if n == 0 {
        return (-x).exp() / x;
    }
    if x == 0.0 {
        assert!(n > 1, "E_1(0) diverges");
        return 1.0 / (n as f64 - 1.0);
    }
    let nm1 = n as i64 - 1;
    if x > 1.0 {
        let mut b = x + n as f64;
        let mut c = 1.0 / FPMIN;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000i64 {
            let a = -(i * (nm1 + i)) as f64;
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < EPS {
                break;
            }
        }
        h * (-x).exp()
    } else {
        let mut ans = if nm1 != 0 { 1.0 / nm1 as f64 } else { -x.ln() - EULER_GAMMA };
        let mut fact = 1.0;
        for i in 1..10_000i64 {
            fact *= -x / i as f64;
            let del = if i != nm1 {
                -fact / (i - nm1) as f64
            } else {
                let psi = -EULER_GAMMA + (1..=nm1).map(|ii| 1.0 / ii as f64).sum::<f64>();
                fact * (-x.ln() + psi)
            };
            ans += del;
            if del.abs() < ans.abs() * EPS {
                break;
            }
        }
        ans
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss-Legendre rule on [a, b] graded geometrically towards `a`,
/// for integrands with an integrable log or algebraic singularity there.
pub fn graded_rule(a: f64, b: f64, levels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let mut xs = Vec::with_capacity(levels * order + order);
    let mut ws = Vec::with_capacity(levels * order + order);
    let len = b - a;
    let mut hi = 1.0;
    for lvl in 0..=levels {
        let lo = if lvl == levels { 0.0 } else { hi * 0.5 };
        let (l, r) = (a + lo * len, a + hi * len);
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(0.5 * (l + r) + 0.5 * (r - l) * x);
            ws.push(0.5 * (r - l) * w);
        }
        hi = lo;
    }
    (xs, ws)
}

/// Chebyshev polynomials T_0..T_{n-1} at s.
pub fn chebyshev_t(n: usize, s: f64) -> Vec<f64> {
    let mut t = vec![0.0; n];
    if n > 0 {
        t[0] = 1.0;
    }
    if n > 1 {
        t[1] = s;
    }
    for j in 2..n {
        t[j] = 2.0 * s * t[j - 1] - t[j - 2];
    }
    t
}

/// J_0 by its power series; intended for |z| up to a few units.
pub fn bessel_j0_series(z: C64) -> C64 {
    let q = -(z * z) / 4.0;
    let mut term = C64::new(1.0, 0.0);
    let mut acc = term;
    for m in 1..200 {
        term *= q / ((m * m) as f64);
        acc += term;
        if term.norm() < 1e-18 * acc.norm().max(1.0) {
            break;
        }
    }
    acc
}

/// The series sum_{m>=1} (-1)^{m+1} H_m (z/2)^{2m} / (m!)^2 that appears in
/// the small-argument expansion of Y_0.
pub fn y0_harmonic_series(z: C64) -> C64 {
    let q = -(z * z) / 4.0;
    let mut pow = C64::new(1.0, 0.0);
    let mut acc = C64::new(0.0, 0.0);
    let mut hm = 0.0;
    for m in 1..200 {
        pow *= q / ((m * m) as f64);
        hm += 1.0 / m as f64;
        let term = -pow * hm;
        acc += term;
        if term.norm() < 1e-18 * acc.norm().max(1e-30) && m > 2 {
            break;
        }
    }
    acc
}

/// Hankel function H_0^(1)(z).
pub fn hankel1_0(z: C64) -> C64 {
    complex_bessel::hankel1(0.0, z).expect("Hankel evaluation failed")
}

/// Hankel function H_1^(1)(z).
pub fn hankel1_1(z: C64) -> C64 {
    complex_bessel::hankel1(1.0, z).expect("Hankel evaluation failed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zeta_values() {
        assert_abs_diff_eq!(zeta_int(6), PI.powi(6) / 945.0, epsilon = 1e-13);
        assert_abs_diff_eq!(zeta_int(8), PI.powi(8) / 9450.0, epsilon = 1e-13);
    }

    #[test]
    fn polylog_matches_direct_sums() {
        for &(r, th) in &[(0.3, 1.0), (0.7, 2.0), (0.95, 0.1), (1.0, 0.4), (1.0, 3.0), (0.9, -2.9)] {
            let z = C64::from_polar(r, th);
            for n in [2u32, 3] {
                let mut direct = C64::new(0.0, 0.0);
                let mut zp = C64::new(1.0, 0.0);
                let pmax = if r < 1.0 { 4000 } else { 400_000 };
                for p in 1..=pmax {
                    zp *= z;
                    direct += zp / (p as f64).powi(n as i32);
                }
                let tol = if r < 1.0 || n == 3 { 1e-10 } else { 1e-5 };
                assert!((polylog(n, z) - direct).norm() < tol, "n={n} z={z}");
            }
        }
    }

    #[test]
    fn cos_sum3_at_pi() {
        assert_abs_diff_eq!(cos_sum3(PI), -0.75 * ZETA3, epsilon = 1e-14);
        assert_abs_diff_eq!(cos_sum3(0.0), ZETA3, epsilon = 1e-15);
        assert_abs_diff_eq!(cos_sum3(1.3), cos_sum3(2.0 * PI - 1.3), epsilon = 1e-14);
    }

    #[test]
    fn expint_against_quadrature() {
        // E_n(x) = int_1^inf e^{-x s} s^{-n} ds, mapped to s = 1/u on (0, 1]
        let (gx, gw) = gauss_legendre(200);
        for n in 1..5u32 {
            for &x in &[0.05, 0.5, 1.0, 2.5, 10.0] {
                let mut q = 0.0;
                for (u, w) in gx.iter().zip(&gw) {
                    let u = 0.5 * (u + 1.0);
                    q += 0.5 * w * (-x / u).exp() * u.powi(n as i32 - 2);
                }
                assert!((expint(n, x) - q).abs() < 1e-12 * q.max(1e-3), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert_abs_diff_eq!(s, 2.0 / 23.0, epsilon = 1e-14);
    }

    #[test]
    fn graded_rule_handles_log() {
        let (x, w) = graded_rule(0.0, 1.0, 40, 12);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.ln()).sum();
        assert_abs_diff_eq!(s, -1.0, epsilon = 1e-13);
    }

    #[test]
    fn bessel_series_agree_with_hankel() {
        for &z in &[C64::new(0.3, 0.0), C64::new(2.0, -0.4), C64::new(1.1, 0.2)] {
            let h = hankel1_0(z);
            let j0 = bessel_j0_series(z);
            let y0 = (2.0 / PI) * ((z / 2.0).ln() + EULER_GAMMA) * j0 + (2.0 / PI) * y0_harmonic_series(z);
            assert!((h - (j0 + C64::i() * y0)).norm() < 1e-12, "z={z}");
        }
    }
}
