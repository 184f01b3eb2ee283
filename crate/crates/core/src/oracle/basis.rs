//! Aperture bases on the reference interval [-1, 1] and the Galerkin moments
//! that do not depend on `k` or on the aperture width.

use crate::special::{chebyshev_t, gauss_legendre, graded_rule};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Highest power `(s-t)^{2m}` kept in the `J0(k d) ln d` expansion.
pub const SERIES_TERMS: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// `T_i(t) / sqrt(1 - t^2)`.
    Weighted,
    /// Plain `T_i(t)`; kept for comparison only.
    Unweighted,
}

/// Quadrature for `int b_i(t) f(t) dt`: nodes, weights and `T_i` at the nodes,
/// with the edge weight absorbed into the weights.
#[derive(Clone, Debug)]
pub struct BasisRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `t_vals[q][i] = T_i(nodes[q])`.
    pub t_vals: Vec<Vec<f64>>,
}

impl BasisRule {
    pub fn new(kind: BasisKind, n_basis: usize, n_quad: usize) -> Self {
        let (nodes, weights) = match kind {
            BasisKind::Weighted => gauss_chebyshev(n_quad),
            BasisKind::Unweighted => gauss_legendre(n_quad),
        };
        let t_vals = nodes.iter().map(|&t| chebyshev_t(n_basis, t)).collect();
        BasisRule { nodes, weights, t_vals }
    }

    /// `int b_i(t) f(t) dt` for every basis index.
    pub fn project<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        let n = self.t_vals[0].len();
        let mut out = vec![0.0; n];
        for ((&t, &w), tv) in self.nodes.iter().zip(&self.weights).zip(&self.t_vals) {
            let v = w * f(t);
            for i in 0..n {
                out[i] += v * tv[i];
            }
        }
        out
    }
}

pub fn gauss_chebyshev(n: usize) -> (Vec<f64>, Vec<f64>) {
    let x = (0..n).map(|q| ((2 * q + 1) as f64 * PI / (2 * n) as f64).cos()).collect();
    (x, vec![PI / n as f64; n])
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// k-independent moments of one basis.
#[derive(Clone, Debug)]
pub struct Moments {
    pub kind: BasisKind,
    pub n: usize,
    /// `int int b_l b_i (s-t)^{2m}`.
    pub poly: Vec<DMatrix<f64>>,
    /// `int int b_l b_i (s-t)^{2m} ln|s-t|`.
    pub poly_log: Vec<DMatrix<f64>>,
    /// `int int b_l b_i L(s,t)` with `L = (2/pi) sum_j cos(j th_s) cos(j th_t) / j`,
    /// `th = pi (t+1)/2`.
    pub channel_log: DMatrix<f64>,
    /// `int b_l`.
    pub mean: Vec<f64>,
}

impl Moments {
    pub fn new(kind: BasisKind, n: usize) -> Self {
        // mom[a][l][k] = int b_l(s) s^a T_k(s) ds, so that
        // ln|s-t| = -ln 2 - sum (2/k) T_k(s) T_k(t) integrates term by term
        let nmax = match kind {
            BasisKind::Weighted => n + 2 * SERIES_TERMS + 2,
            BasisKind::Unweighted => 400,
        };
        let nq = nmax + n + 2 * SERIES_TERMS + 8;
        let rule = BasisRule::new(kind, n, nq);
        let amax = 2 * SERIES_TERMS;
        let mut mom = vec![vec![vec![0.0; nmax + 1]; n]; amax + 1];
        for ((&t, &w), tv) in rule.nodes.iter().zip(&rule.weights).zip(&rule.t_vals) {
            let tk = chebyshev_t(nmax + 1, t);
            let mut pw = w;
            for row in mom.iter_mut() {
                for l in 0..n {
                    let c = pw * tv[l];
                    for (k, v) in row[l].iter_mut().enumerate() {
                        *v += c * tk[k];
                    }
                }
                pw *= t;
            }
        }
        let lam = |k: usize| if k == 0 { -(2f64).ln() } else { -2.0 / k as f64 };

        let mut poly = Vec::with_capacity(SERIES_TERMS);
        let mut poly_log = Vec::with_capacity(SERIES_TERMS);
        for m in 0..SERIES_TERMS {
            let mut p = DMatrix::zeros(n, n);
            let mut q = DMatrix::zeros(n, n);
            for a in 0..=2 * m {
                let b = 2 * m - a;
                let c = binomial(2 * m, a) * if b % 2 == 0 { 1.0 } else { -1.0 };
                for l in 0..n {
                    for i in 0..n {
                        let pl = mom[a][l][0] * mom[b][i][0];
                        let mut ql = 0.0;
                        for k in 0..=nmax {
                            ql += lam(k) * mom[a][l][k] * mom[b][i][k];
                        }
                        p[(l, i)] += c * pl;
                        q[(l, i)] += c * ql;
                    }
                }
            }
            poly.push(p);
            poly_log.push(q);
        }
        let mean: Vec<f64> = (0..n).map(|l| mom[0][l][0]).collect();
        let channel_log = channel_log_moments(kind, n, &poly_log[0], &mean);
        Moments { kind, n, poly, poly_log, channel_log, mean }
    }
}

fn channel_log_moments(kind: BasisKind, n: usize, log_mom: &DMatrix<f64>, mean: &[f64]) -> DMatrix<f64> {
    // L = -(1/pi)[ ln|s-t| + ln(pi/2) + ln sinc(pi(s-t)/4) + ln|2 cos(pi(s+t)/4)| ]
    let mut out = DMatrix::zeros(n, n);
    for l in 0..n {
        for i in 0..n {
            out[(l, i)] = -(log_mom[(l, i)] + (PI / 2.0).ln() * mean[l] * mean[i]) / PI;
        }
    }
    // remaining smooth-plus-corner part on a tensor rule in s = cos(phi),
    // graded towards phi = 0 and phi = pi where s + t = +-2
    let (gx, gw) = graded_rule(0.0, PI / 2.0, 24, 12);
    let mut phi = gx.clone();
    let mut wts = gw.clone();
    phi.extend(gx.iter().map(|x| PI - x));
    wts.extend(gw.iter());
    let vals: Vec<(f64, Vec<f64>)> = phi
        .iter()
        .zip(&wts)
        .map(|(&p, &w)| {
            let s = p.cos();
            let jac = match kind {
                BasisKind::Weighted => 1.0,
                BasisKind::Unweighted => p.sin(),
            };
            (s, chebyshev_t(n, s).into_iter().map(|t| t * w * jac).collect())
        })
        .collect();
    let mut acc = DMatrix::<f64>::zeros(n, n);
    for (s, bs) in &vals {
        for (t, bt) in &vals {
            let u = PI * (s - t) / 4.0;
            let sinc = if u.abs() < 1e-8 { 1.0 - u * u / 6.0 } else { u.sin() / u };
            let f = sinc.ln() + (2.0 * (PI * (s + t) / 4.0).cos()).abs().ln();
            for l in 0..n {
                let c = f * bs[l];
                for i in 0..n {
                    acc[(l, i)] += c * bt[i];
                }
            }
        }
    }
    out - acc / PI
}

/// `int b_l(t) cos(j pi (t+1)/2) dt` for `j = 1..=n_channel`.
pub fn cosine_projections(rule: &BasisRule, n_channel: usize) -> Vec<Vec<f64>> {
    (1..=n_channel)
        .map(|j| rule.project(|t| (j as f64 * PI * (t + 1.0) / 2.0).cos()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weighted_log_moments_closed_form() {
        let m = Moments::new(BasisKind::Weighted, 6);
        assert_abs_diff_eq!(m.poly_log[0][(0, 0)], -PI * PI * 2f64.ln(), epsilon = 1e-12);
        for k in 1..6 {
            assert_abs_diff_eq!(m.poly_log[0][(k, k)], -PI * PI / (2.0 * k as f64), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(m.poly_log[0][(1, 3)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.mean[0], PI, epsilon = 1e-13);
        // int int w w (s-t)^2 = 2 * pi * (pi/2)
        assert_abs_diff_eq!(m.poly[1][(0, 0)], PI * PI, epsilon = 1e-12);
    }

    #[test]
    fn log_moments_against_brute_force() {
        // (s-t)^2 ln|s-t| against T_1 x T_2 with a graded product rule in
        // phi-variables, split at the diagonal
        let m = Moments::new(BasisKind::Weighted, 4);
        let (gx, gw) = gauss_legendre(40);
        let mut acc = 0.0;
        for (x, wx) in gx.iter().zip(&gw) {
            let p = 0.5 * PI * (x + 1.0);
            let s = p.cos();
            // inner integral in chi split at chi = phi
            for (a, b) in [(0.0, p), (p, PI)] {
                let (rx, rw) = graded_rule(0.0, 1.0, 30, 12);
                for (y, wy) in rx.iter().zip(&rw) {
                    // grade towards chi = phi from both sides
                    let c = if a == 0.0 { p - (b - a) * y } else { p + (b - a) * y };
                    let t = c.cos();
                    let d = s - t;
                    let f = if d == 0.0 { 0.0 } else { d * d * d.abs().ln() };
                    acc += 0.5 * PI * wx * (b - a) * wy * s * (2.0 * t * t - 1.0) * f;
                }
            }
        }
        assert_abs_diff_eq!(m.poly_log[1][(1, 2)], acc, epsilon = 1e-9);
    }

    #[test]
    fn channel_kernel_matches_series() {
        // the slowly converging cosine series, summed far out, for T_0 x T_0
        let m = Moments::new(BasisKind::Weighted, 3);
        let rule = BasisRule::new(BasisKind::Weighted, 3, 64);
        let nj = 20000;
        let mut s = 0.0;
        for j in 1..=nj {
            // int w cos(j pi (t+1)/2) = pi J0(j pi/2) cos(j pi/2)
            let c = rule.project(|t| (j as f64 * PI * (t + 1.0) / 2.0).cos());
            if j <= 40 {
                s += 2.0 / PI * c[0] * c[0] / j as f64;
            } else if j % 2 == 0 {
                // J0(x)^2 cos^2 -> (2/(pi x)) cos^2(x - pi/4) for even j
                let x = j as f64 * PI / 2.0;
                let j0 = (2.0 / (PI * x)).sqrt() * ((x - PI / 4.0).cos() + (x - PI / 4.0).sin() / (8.0 * x));
                s += 2.0 / PI * (PI * j0).powi(2) / j as f64;
            }
        }
        assert!((m.channel_log[(0, 0)] - s).abs() < 2e-4, "{} vs {s}", m.channel_log[(0, 0)]);
    }

    #[test]
    fn unweighted_moments_consistent() {
        let m = Moments::new(BasisKind::Unweighted, 3);
        assert_abs_diff_eq!(m.mean[0], 2.0, epsilon = 1e-13);
        // int int (s-t)^2 ds dt = 8/3
        assert_abs_diff_eq!(m.poly[1][(0, 0)], 8.0 / 3.0, epsilon = 1e-12);
        // int int ln|s-t| ds dt = 4 ln 2 - 6
        assert_abs_diff_eq!(m.poly_log[0][(0, 0)], 4.0 * 2f64.ln() - 6.0, epsilon = 1e-9);
        assert!((m.channel_log.clone() - m.channel_log.transpose()).abs().max() < 1e-10);
    }
}
