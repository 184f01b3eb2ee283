//! The channel mouth `gamma_omega`: the upper half-plane `xi2 > 0` joined to
//! the semi-infinite strip `omega x (-inf, 0]`, and its harmonic function `X`
//! with Neumann walls, `X ~ xi2 + q_omega` down the strip and
//! `X ~ c_omega ln rho` at upper infinity.
//!
//! The map from the upper half `zeta`-plane is
//! `z = C [w + i ln((1 + i w) / zeta)] + omega_plus`, `w = sqrt(zeta^2 - 1)`,
//! `C = |omega| / pi`. The corners sit at `zeta = +-1`, the strip end at
//! `zeta = 0`, and `X = C ln|zeta| + C ln C`.

use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JunctionError {
    #[error("point ({0}, {1}) outside the junction domain")]
    OutsideDomain(f64, f64),
    #[error("map inversion did not converge at ({0}, {1})")]
    NoConvergence(f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JunctionConstants {
    pub c_omega: f64,
    pub q_omega: f64,
    pub q_upper: f64,
    pub c_upper: f64,
    pub mu1: f64,
}

pub fn junction_constants(omega_minus: f64, omega_plus: f64) -> JunctionConstants {
    assert!(omega_minus < omega_plus);
    let w = omega_plus - omega_minus;
    JunctionConstants {
        c_omega: w / PI,
        q_omega: (w / PI) * ((2.0 * w / PI).ln() - 1.0),
        q_upper: 0.5 * (omega_plus + omega_minus),
        c_upper: 0.0,
        mu1: PI / w,
    }
}

/// Beyond this radius the upper tail expansion is used.
pub const SWITCH_RADIUS: f64 = 1e4;

#[derive(Clone, Debug, Serialize)]
pub struct JunctionFieldX {
    pub omega_minus: f64,
    pub omega_plus: f64,
    pub consts: JunctionConstants,
}

fn w_of(zeta: C64) -> C64 {
    (zeta - 1.0).sqrt() * (zeta + 1.0).sqrt()
}

impl JunctionFieldX {
    pub fn new(omega_minus: f64, omega_plus: f64) -> Self {
        JunctionFieldX { omega_minus, omega_plus, consts: junction_constants(omega_minus, omega_plus) }
    }

    fn c(&self) -> f64 {
        self.consts.c_omega
    }

    /// Forward conformal map from the closed upper half-plane.
    pub fn map(&self, mut zeta: C64) -> C64 {
        // boundary points are taken as limits from above
        zeta.im = zeta.im.abs();
        let w = w_of(zeta);
        let i = C64::i();
        // (1 + iw)(1 - iw) = zeta^2; use whichever form avoids cancellation
        let (p, m) = (1.0 + i * w, 1.0 - i * w);
        let ratio = if p.norm() < m.norm() { zeta / m } else { p / zeta };
        let log = if ratio.im == 0.0 && ratio.re < 0.0 {
            C64::new((-ratio.re).ln(), PI)
        } else {
            ratio.ln()
        };
        self.c() * (w + i * log) + self.omega_plus
    }

    pub fn contains(&self, xi: [f64; 2]) -> bool {
        xi[1] >= 0.0 || (xi[0] >= self.omega_minus - 1e-14 && xi[0] <= self.omega_plus + 1e-14)
    }

    fn guesses(&self, z: C64) -> Vec<C64> {
        let c = self.c();
        let mut g = vec![(z - self.consts.q_upper) / c];
        g.push(2.0 * (-C64::i() * (z - self.omega_plus) / c - 1.0).exp());
        // corner expansions: z - w+ ~ (2 sqrt2 C / 3)(zeta - 1)^{3/2} and
        // z - w- ~ -i (2 sqrt2 C / 3)(zeta + 1)^{3/2}
        let k = 2.0 * 2f64.sqrt() * c / 3.0;
        let pow23 = |t: C64| {
            let mut arg = t.arg();
            if arg < -0.5 * PI {
                arg += 2.0 * PI;
            }
            C64::from_polar(t.norm().powf(2.0 / 3.0), arg * 2.0 / 3.0)
        };
        g.push(1.0 + pow23((z - self.omega_plus) / k));
        g.push(-1.0 + pow23(C64::i() * (z - self.omega_minus) / k));
        g
    }

    /// Preimage of `xi` in the closed upper half-plane.
    pub fn invert(&self, xi: [f64; 2]) -> Result<C64, JunctionError> {
        let z = C64::new(xi[0], xi[1]);
        let c = self.c();
        let tol = 1e-14 * z.norm().max(1.0);
        let mut best: Option<(f64, C64)> = None;
        for mut zeta in self.guesses(z) {
            if zeta.im < 0.0 {
                zeta.im = -zeta.im;
            }
            for _ in 0..200 {
                let f = self.map(zeta) - z;
                let res = f.norm();
                if best.is_none_or(|(r, _)| res < r) {
                    best = Some((res, zeta));
                }
                if res < tol {
                    return Ok(zeta);
                }
                let df = c * w_of(zeta) / zeta;
                let mut step = f / df;
                let lim = 0.5 * zeta.norm();
                if step.norm() > lim {
                    step *= lim / step.norm();
                }
                zeta -= step;
                if zeta.im < 0.0 {
                    zeta.im = -zeta.im;
                }
                if !zeta.re.is_finite() || !zeta.im.is_finite() || zeta.norm() == 0.0 {
                    break;
                }
            }
        }
        match best {
            Some((r, zeta)) if r < 1e-10 * z.norm().max(1.0) => Ok(zeta),
            _ => Err(JunctionError::NoConvergence(xi[0], xi[1])),
        }
    }

    pub fn eval_x(&self, xi: [f64; 2]) -> Result<f64, JunctionError> {
        if !self.contains(xi) {
            return Err(JunctionError::OutsideDomain(xi[0], xi[1]));
        }
        let c = self.c();
        // deep in the strip the first transverse mode e^{mu1 xi2} is below rounding
        if xi[1] < -40.0 / self.consts.mu1 {
            return Ok(xi[1] + self.consts.q_omega);
        }
        let zc = C64::new(xi[0] - self.consts.q_upper, xi[1]);
        if xi[1] > 0.0 && zc.norm() > SWITCH_RADIUS {
            return Ok(self.upper_tail(xi));
        }
        let zeta = self.invert(xi)?;
        Ok(c * zeta.norm().ln() + c * c.ln())
    }

    /// `C ln|z - q| - (C^3/2) Re (z - q)^{-2}`, accurate to O(rho^-3).
    pub fn upper_tail(&self, xi: [f64; 2]) -> f64 {
        let c = self.c();
        let zc = C64::new(xi[0] - self.consts.q_upper, xi[1]);
        c * zc.norm().ln() - 0.5 * c.powi(3) * (1.0 / (zc * zc)).re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sym() -> JunctionFieldX {
        JunctionFieldX::new(-0.5, 0.5)
    }

    #[test]
    fn constants_closed_form() {
        let k = junction_constants(-0.5, 0.5);
        assert_abs_diff_eq!(k.c_omega, 1.0 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(k.q_omega, -0.462_053_1, epsilon = 1e-7);
        assert_eq!(k.q_upper, 0.0);
        assert_eq!(k.c_upper, 0.0);
        assert_abs_diff_eq!(k.mu1, PI, epsilon = 1e-15);
        let s = junction_constants(0.0, 1.0);
        assert_abs_diff_eq!(s.q_omega, k.q_omega, epsilon = 1e-15);
        assert_abs_diff_eq!(s.q_upper, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn map_sends_special_points() {
        let x = sym();
        assert!((x.map(C64::new(1.0, 0.0)) - C64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((x.map(C64::new(-1.0, 0.0)) - C64::new(-0.5, 0.0)).norm() < 1e-14);
        // real axis beyond the corners lands on the wall xi2 = 0
        for t in [1.5, 3.0, -2.0, -10.0] {
            assert!(x.map(C64::new(t, 0.0)).im.abs() < 1e-14);
        }
        // (-1, 1) lands on the channel walls
        for t in [0.3, -0.6] {
            let z = x.map(C64::new(t, 0.0));
            assert!((z.re.abs() - 0.5).abs() < 1e-14 && z.im < 0.0, "{z}");
        }
    }

    #[test]
    fn deep_channel() {
        let x = sym();
        let v = x.eval_x([0.0, -20.0]).unwrap();
        assert_abs_diff_eq!(v, -20.0 + x.consts.q_omega, epsilon = 1e-8);
        // below the shortcut depth the map itself must agree
        let v = x.eval_x([0.2, -6.0]).unwrap();
        assert_abs_diff_eq!(v, -6.0 + x.consts.q_omega, epsilon = 1e-8);
    }

    #[test]
    fn far_field() {
        let x = sym();
        for phi in [0.3, 1.2, 2.8] {
            let r = 1e3;
            let v = x.eval_x([r * f64::cos(phi), r * f64::sin(phi)]).unwrap();
            assert!((v - x.consts.c_omega * r.ln()).abs() < 1e-3);
        }
    }

    #[test]
    fn tail_switch_is_continuous() {
        let x = JunctionFieldX::new(-0.2, 0.9);
        for phi in [0.1, 1.5, 3.0] {
            let r = SWITCH_RADIUS * 0.999_999;
            let xi = [x.consts.q_upper + r * f64::cos(phi), r * f64::sin(phi)];
            let exact = x.eval_x(xi).unwrap();
            assert!((exact - x.upper_tail(xi)).abs() < 1e-6);
        }
    }

    #[test]
    fn tail_constants_recovered_by_fit() {
        let x = JunctionFieldX::new(-0.3, 0.7);
        // channel: X - xi2 -> q_omega
        let q = x.eval_x([0.2, -8.0]).unwrap() + 8.0;
        assert_abs_diff_eq!(q, x.consts.q_omega, epsilon = 1e-5);
        // upper: least squares of X against ln rho on a ray
        let rs = [200.0, 400.0, 800.0, 1600.0];
        let pts: Vec<(f64, f64)> = rs
            .iter()
            .map(|&r| (f64::ln(r), x.eval_x([x.consts.q_upper, r]).unwrap()))
            .collect();
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let icpt = (sy - slope * sx) / n;
        assert_abs_diff_eq!(slope, x.consts.c_omega, epsilon = 1e-5);
        assert_abs_diff_eq!(icpt, 0.0, epsilon = 1e-5);
    }

    #[test]
    fn neumann_on_walls() {
        let x = sym();
        let d = 1e-3;
        for y in [-0.05, -0.3, -1.0] {
            // one-sided second-order difference of d/dxi1 at the wall xi1 = 0.5
            let f = |t: f64| x.eval_x([0.5 - t, y]).unwrap();
            let der = (-3.0 * f(0.0) + 4.0 * f(d) - f(2.0 * d)) / (2.0 * d);
            assert!(der.abs() < 1e-5, "y={y} der={der}");
        }
        for x1 in [0.6, 1.5, -3.0] {
            let f = |t: f64| x.eval_x([x1, t]).unwrap();
            let der = (-3.0 * f(0.0) + 4.0 * f(d) - f(2.0 * d)) / (2.0 * d);
            assert!(der.abs() < 1e-5, "x1={x1} der={der}");
        }
    }

    #[test]
    fn mean_value_property() {
        let x = sym();
        for (c, r) in [([0.0, 0.4], 0.3), ([0.1, -0.6], 0.35), ([2.0, 1.0], 0.9)] {
            let n = 64;
            let mut m = 0.0;
            for j in 0..n {
                let t = 2.0 * PI * j as f64 / n as f64;
                m += x.eval_x([c[0] + r * t.cos(), c[1] + r * t.sin()]).unwrap();
            }
            m /= n as f64;
            assert!((m - x.eval_x(c).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn outside_rejected() {
        assert!(matches!(sym().eval_x([0.8, -0.1]), Err(JunctionError::OutsideDomain(..))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn discrete_laplacian_vanishes(x1 in -3.0f64..3.0, x2 in -2.0f64..3.0) {
            let x = sym();
            let hh = 2e-3;
            let inside = |p: [f64; 2]| p[1] > 0.0 || p[0].abs() < 0.5;
            let nbrs = [[x1, x2], [x1 + hh, x2], [x1 - hh, x2], [x1, x2 + hh], [x1, x2 - hh]];
            // keep the stencil away from the corners and walls
            prop_assume!(nbrs.iter().all(|p| inside(*p)));
            prop_assume!((x1.abs() - 0.5).hypot(x2) > 0.05 && (x2.abs() > 0.02 || x1.abs() < 0.45));
            prop_assume!(x2 > 0.0 || x1.abs() < 0.45);
            let v: Vec<f64> = nbrs.iter().map(|p| x.eval_x(*p).unwrap()).collect();
            let lap = (v[1] + v[2] + v[3] + v[4] - 4.0 * v[0]) / (hh * hh);
            prop_assert!(lap.abs() < 1e-2, "lap = {}", lap);
        }

        #[test]
        fn map_round_trip(x1 in -5.0f64..5.0, x2 in -5.0f64..5.0, lo in -1.0f64..0.0, len in 0.2f64..2.0) {
            let x = JunctionFieldX::new(lo, lo + len);
            prop_assume!(x.contains([x1, x2]));
            let z = x.invert([x1, x2]).unwrap();
            prop_assert!(z.im >= 0.0);
            prop_assert!((x.map(z) - C64::new(x1, x2)).norm() < 1e-9);
        }
    }
}
