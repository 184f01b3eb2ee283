//! Neumann spectral data of the rectangular trap `[-a/2, a/2] x [0, b]`.
//!
//! The Green's function solves `(Delta + k^2) G = -delta` with zero normal
//! derivative, so `G = sum_n psi_n(x) psi_n(y) / (k_n^2 - k^2)`. Near the
//! diagonal `G ~ -(1/2pi) ln|x - y|` inside and `-(1/pi) ln|x - y|` on a wall.
//!
//! Two evaluation routes are provided. [`ModalGreen`] sums over the
//! horizontal cosine index `p` with the exact 1D Green's function in `x2`;
//! the slowly decaying part is removed in closed form (log plus two polylog
//! corrections), leaving terms of size `|k|^4 / alpha_p^5`.
//! [`EwaldGreen`] splits the spectral sum with a heat-kernel cut at time `T`
//! and sums the short-time part over the Neumann image lattice.

use crate::geometry::ValidatedSpec;
use crate::special::{bessel_j0_series, expint, polylog, EULER_GAMMA};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InteriorError {
    #[error("mode (0,0) has zero frequency")]
    ZeroMode,
    #[error("point ({0}, {1}) outside the trap")]
    OutOfDomain(f64, f64),
    #[error("k^2 = {k2} within tolerance of eigenvalue of mode {mode:?}")]
    NearSpectrum { k2: C64, mode: (u32, u32) },
    #[error("coincident points")]
    CoincidentPoints,
    #[error("g_in schemes disagree by {0:e}")]
    NoConvergence(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Trap {
    pub a: f64,
    pub b: f64,
}

impl Trap {
    pub fn contains(&self, x: [f64; 2]) -> bool {
        let tol = 1e-12;
        x[0].abs() <= self.a / 2.0 + tol && x[1] >= -tol && x[1] <= self.b + tol
    }
}

fn neumann_weight(n: u32) -> f64 {
    if n == 0 {
        1.0
    } else {
        2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EigenMode {
    pub p: u32,
    pub q: u32,
    pub k: f64,
    pub norm: f64,
    pub sign: f64,
}

impl EigenMode {
    pub fn new(p: u32, q: u32, trap: &Trap) -> Result<Self, InteriorError> {
        let k = interior_eigenfrequency(p, q, trap.a, trap.b)?;
        Ok(Self::unchecked(p, q, k, trap))
    }

    fn unchecked(p: u32, q: u32, k: f64, trap: &Trap) -> Self {
        let norm = (neumann_weight(p) / trap.a * neumann_weight(q) / trap.b).sqrt();
        let c = (p as f64 * PI / 2.0).cos();
        let sign = if c < -1e-12 { -1.0 } else { 1.0 };
        EigenMode { p, q, k, norm, sign }
    }

    pub fn eval(&self, x: [f64; 2], trap: &Trap) -> f64 {
        let cx = (self.p as f64 * PI * (x[0] + trap.a / 2.0) / trap.a).cos();
        let cy = (self.q as f64 * PI * x[1] / trap.b).cos();
        self.sign * self.norm * cx * cy
    }

    pub fn grad(&self, x: [f64; 2], trap: &Trap) -> [f64; 2] {
        let (ax, ay) = (self.p as f64 * PI / trap.a, self.q as f64 * PI / trap.b);
        let tx = ax * (x[0] + trap.a / 2.0);
        let ty = ay * x[1];
        let s = self.sign * self.norm;
        [-s * ax * tx.sin() * ty.cos(), -s * ay * tx.cos() * ty.sin()]
    }
}

pub fn interior_eigenfrequency(p: u32, q: u32, a: f64, b: f64) -> Result<f64, InteriorError> {
    if p == 0 && q == 0 {
        return Err(InteriorError::ZeroMode);
    }
    let (pa, qb) = (p as f64 / a, q as f64 / b);
    Ok(PI * (pa * pa + qb * qb).sqrt())
}

pub fn psi_eval(x: [f64; 2], mode: &EigenMode, trap: &Trap) -> Result<f64, InteriorError> {
    if !trap.contains(x) {
        return Err(InteriorError::OutOfDomain(x[0], x[1]));
    }
    Ok(mode.eval(x, trap))
}

/// All modes (including (0,0)) with `k_pq <= kmax`, in lexicographic order.
pub fn modes_below(trap: &Trap, kmax: f64) -> Vec<EigenMode> {
    let pmax = (kmax * trap.a / PI).floor() as u32;
    let qmax = (kmax * trap.b / PI).floor() as u32;
    let mut out = Vec::new();
    for p in 0..=pmax {
        for q in 0..=qmax {
            let (pa, qb) = (p as f64 / trap.a, q as f64 / trap.b);
            let k = PI * (pa * pa + qb * qb).sqrt();
            if k <= kmax {
                out.push(EigenMode::unchecked(p, q, k, trap));
            }
        }
    }
    out
}

/// Rejects `k` whose square lies within `tol_rel * scale^2` of an eigenvalue,
/// skipping the mode `skip` (the resonant one, handled analytically).
pub fn check_spectrum(trap: &Trap, k: C64, scale: f64, skip: Option<(u32, u32)>) -> Result<(), InteriorError> {
    let k2 = k * k;
    let tol = 1e-6 * scale * scale;
    let kmax = (k2.norm() + tol).sqrt() + 1.0;
    for m in modes_below(trap, kmax) {
        if Some((m.p, m.q)) == skip {
            continue;
        }
        if (k2 - m.k * m.k).norm() < tol {
            return Err(InteriorError::NearSpectrum { k2, mode: (m.p, m.q) });
        }
    }
    Ok(())
}

/// ln(1 - 2 e^{-s} cos t + e^{-2s}) without cancellation near s = t = 0.
fn log_kernel(theta: f64, sigma: f64) -> f64 {
    let e = (-sigma).exp();
    let om = -(-sigma).exp_m1();
    let sh = (theta / 2.0).sin();
    (om * om + 4.0 * e * sh * sh).ln()
}

/// sin(x)/x
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// What to remove from the Green's function before returning it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regular {
    /// Full value; the points must differ.
    None,
    /// Both points on the bottom edge `x2 = 0`; returns
    /// `G + (1/pi) J0(k|x1-y1|) ln|x1-y1|`, finite at coincidence.
    EdgeLog,
}

/// 1D Neumann Green's function on [0, b] for `-u'' + kappa^2 u = delta`.
fn g1d(kap2: C64, x2: f64, y2: f64, b: f64) -> C64 {
    let kap = kap2.sqrt();
    let d = (x2 - y2).abs();
    let s = x2 + y2;
    let ex = |u: f64| (-kap * u).exp();
    let num = ex(d) + ex(2.0 * b - d) + ex(s) + ex(2.0 * b - s);
    let den = 2.0 * kap * (1.0 - ex(2.0 * b));
    num / den
}

/// Modal sum over the x1 cosine index with Kummer acceleration.
#[derive(Clone, Debug)]
pub struct ModalGreen {
    trap: Trap,
    k2: C64,
    kabs: f64,
    resonant: Option<(u32, u32)>,
    pmax: usize,
}

impl ModalGreen {
    /// `resonant` names a mode whose pole term `psi psi / (k_n^2 - k^2)` is
    /// removed from the sum. `tol` bounds the truncated tail.
    pub fn new(trap: Trap, k: C64, resonant: Option<(u32, u32)>, tol: f64) -> Self {
        let kabs = k.norm();
        let ap = trap.a / PI;
        // tail of the |k|^4/alpha^5 remainder: sum_{p>P} (3/a)|k|^4 (a/pi)^5 p^-5
        let tail = (3.0 / trap.a) * kabs.powi(4) * ap.powi(5) / (4.0 * tol);
        let p_tail = tail.powf(0.25).ceil() as usize;
        let p_asym = (2.0 * kabs * ap).ceil() as usize + 1;
        let p_exp = (45.0 * ap / (2.0 * trap.b)).ceil() as usize;
        let p_res = resonant.map_or(0, |(p, _)| p as usize + 1);
        let pmax = p_tail.max(p_asym).max(p_exp).max(p_res).max(8);
        ModalGreen { trap, k2: k * k, kabs, resonant, pmax }
    }

    /// Same sum truncated at an explicit horizontal index.
    pub fn with_cutoff(trap: Trap, k: C64, resonant: Option<(u32, u32)>, pmax: usize) -> Self {
        let p_res = resonant.map_or(0, |(p, _)| p as usize + 1);
        ModalGreen { trap, k2: k * k, kabs: k.norm(), resonant, pmax: pmax.max(p_res) }
    }

    pub fn cutoff(&self) -> usize {
        self.pmax
    }

    fn alpha(&self, p: usize) -> f64 {
        p as f64 * PI / self.trap.a
    }

    /// x2 factor of the p-th term, with the resonant q-mode removed when `p`
    /// is the resonant horizontal index.
    fn g_p(&self, p: usize, x2: f64, y2: f64) -> C64 {
        let b = self.trap.b;
        let al = self.alpha(p);
        let kap2 = C64::new(al * al, 0.0) - self.k2;
        match self.resonant {
            Some((p0, q0)) if p0 as usize == p => {
                let beta = q0 as f64 * PI / b;
                let amp = neumann_weight(q0) / b * (beta * x2).cos() * (beta * y2).cos();
                let z0 = C64::new(-beta * beta, 0.0);
                let zeta = kap2 - z0;
                // distance to the neighbouring q poles of the 1D Green's function
                let bn = (q0 as f64 + 1.0) * PI / b;
                let mut gap = bn * bn - beta * beta;
                if q0 > 0 {
                    let bm = (q0 as f64 - 1.0) * PI / b;
                    gap = gap.min(beta * beta - bm * bm);
                }
                let rho = 0.5 * gap;
                if zeta.norm() > 0.25 * rho {
                    g1d(kap2, x2, y2, b) - amp / zeta
                } else {
                    let n = 64;
                    let mut acc = C64::new(0.0, 0.0);
                    for j in 0..n {
                        let w = C64::from_polar(rho, 2.0 * PI * j as f64 / n as f64);
                        let f = g1d(z0 + w, x2, y2, b) - amp / w;
                        acc += f * w / (w - zeta);
                    }
                    acc / n as f64
                }
            }
            _ => g1d(kap2, x2, y2, b),
        }
    }

    pub fn eval(&self, x: [f64; 2], y: [f64; 2], reg: Regular) -> C64 {
        let (a, b) = (self.trap.a, self.trap.b);
        let k2 = self.k2;
        let th_m = PI * (x[0] - y[0]) / a;
        let th_p = PI * (x[0] + y[0] + a) / a;
        let d = (x[1] - y[1]).abs();
        let s = x[1] + y[1];
        let us = [d, 2.0 * b - d, s, 2.0 * b - s];
        let edge = reg == Regular::EdgeLog;
        if edge {
            debug_assert!(x[1] == 0.0 && y[1] == 0.0);
        }

        let mut acc = self.g_p(0, x[1], y[1]) / a;
        for p in 1..=self.pmax {
            let al = self.alpha(p);
            let pf = p as f64;
            let cs = (pf * th_m).cos() + (pf * th_p).cos();
            if cs == 0.0 {
                continue;
            }
            let mut asym = C64::new(0.0, 0.0);
            for &u in &us {
                let e = (-al * u).exp();
                asym += e * (C64::new(0.5 / al, 0.0) + k2 * (0.25 / al.powi(3) + 0.25 * u / (al * al)));
            }
            acc += (self.g_p(p, x[1], y[1]) - asym) * (cs / a);
        }

        // closed forms of the subtracted asymptotic terms
        let mut log_part = 0.0;
        let mut c3 = 0.0;
        let mut c2 = C64::new(0.0, 0.0);
        for &u in &us {
            let sig = PI * u / a;
            for (i, &th) in [th_m, th_p].iter().enumerate() {
                if !(edge && i == 0 && u == 0.0) {
                    log_part += log_kernel(th, sig);
                }
                let z = C64::from_polar((-sig).exp(), th);
                c3 += polylog(3, z).re;
                if u != 0.0 {
                    c2 += u * polylog(2, z).re;
                }
            }
        }
        acc += C64::new(-log_part / (4.0 * PI), 0.0);
        acc += k2 * (c3 * a * a / (4.0 * PI.powi(3)) + c2 * a / (4.0 * PI * PI));
        if edge {
            // the two removed u = 0 terms equal -(1/pi) ln|2 sin(th_m/2)|
            let delta = (x[0] - y[0]).abs();
            acc += -(1.0 / PI) * ((PI / a) * sinc(th_m / 2.0).abs()).ln();
            if delta > 0.0 {
                let j0 = bessel_j0_series(C64::new(delta, 0.0) * k2.sqrt());
                acc += (j0 - 1.0) * (delta.ln() / PI);
            }
        }
        let _ = self.kabs;
        acc
    }
}

/// Heat-kernel split of the modal sum: spectral part for `t > T`, image
/// lattice for `t < T`.
#[derive(Clone, Debug)]
pub struct EwaldGreen {
    trap: Trap,
    k2: C64,
    t: f64,
    modes: Vec<EigenMode>,
    resonant: Option<(u32, u32)>,
}

const EWALD_CUT: f64 = 45.0;

impl EwaldGreen {
    pub fn new(trap: Trap, k: C64, resonant: Option<(u32, u32)>) -> Self {
        let t = 0.3 * trap.a * trap.b / (4.0 * PI);
        let k2 = k * k;
        let kmax = (k2.re.max(0.0) + EWALD_CUT / t).sqrt();
        let modes = modes_below(&trap, kmax);
        EwaldGreen { trap, k2, t, modes, resonant }
    }

    fn spectral(&self, x: [f64; 2], y: [f64; 2]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for m in &self.modes {
            let lam = C64::new(m.k * m.k, 0.0) - self.k2;
            let pp = m.eval(x, &self.trap) * m.eval(y, &self.trap);
            let lt = lam * self.t;
            if Some((m.p, m.q)) == self.resonant {
                // (e^{-lam T} - 1)/lam, stable as lam -> 0
                let v = if lt.norm() < 1e-3 {
                    -self.t * (1.0 - lt / 2.0 + lt * lt / 6.0 - lt * lt * lt / 24.0)
                } else {
                    ((-lt).exp() - 1.0) / lam
                };
                acc += v * pp;
            } else {
                acc += (-lt).exp() / lam * pp;
            }
        }
        acc
    }

    /// (1/4 pi) sum_j (k^2 T)^j / j! E_{j+1}(r^2 / 4T)
    fn image_term(&self, r2: f64) -> C64 {
        let z = r2 / (4.0 * self.t);
        let kt = self.k2 * self.t;
        let mut pw = C64::new(1.0, 0.0);
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..200u32 {
            if j > 0 {
                pw *= kt / j as f64;
            }
            let term = pw * expint(j + 1, z);
            acc += term;
            if term.norm() < 1e-18 * acc.norm().max(1e-300) && j as f64 > kt.norm() {
                break;
            }
        }
        acc / (4.0 * PI)
    }

    /// Sum over images; the image at distance zero (when `skip_self`) is
    /// left out for the caller to handle.
    fn spatial(&self, x: [f64; 2], y: [f64; 2], skip_self: bool) -> C64 {
        let (a, b) = (self.trap.a, self.trap.b);
        let rmax2 = 4.0 * self.t * EWALD_CUT;
        let rmax = rmax2.sqrt();
        let (xx, yy) = (x[0] + a / 2.0, y[0] + a / 2.0);
        let mm = (rmax / (2.0 * a)).ceil() as i64 + 1;
        let nn = (rmax / (2.0 * b)).ceil() as i64 + 1;
        let mut acc = C64::new(0.0, 0.0);
        for m in -mm..=mm {
            let sh = 2.0 * m as f64 * a;
            for dx in [xx - yy - sh, xx + yy - sh] {
                if dx.abs() > rmax {
                    continue;
                }
                for n in -nn..=nn {
                    let sv = 2.0 * n as f64 * b;
                    for dy in [x[1] - y[1] - sv, x[1] + y[1] - sv] {
                        let r2 = dx * dx + dy * dy;
                        if r2 > rmax2 {
                            continue;
                        }
                        if r2 == 0.0 {
                            if skip_self {
                                continue;
                            }
                            panic!("zero-distance image without regularization");
                        }
                        acc += self.image_term(r2);
                    }
                }
            }
        }
        acc
    }

    pub fn eval(&self, x: [f64; 2], y: [f64; 2]) -> C64 {
        self.spectral(x, y) + self.spatial(x, y, false)
    }

    /// `G(x, y) + (1/pi) ln|x - y|` at `x = y` on the bottom edge, with the
    /// resonant pole removed. The two coincident images (source and its
    /// reflection in `x2 = 0`) contribute `2 (1/4pi) E_1` plus the series.
    pub fn edge_regular_at(&self, y: [f64; 2]) -> C64 {
        debug_assert!(y[1] == 0.0);
        let kt = self.k2 * self.t;
        let mut series = C64::new(0.0, 0.0);
        let mut pw = C64::new(1.0, 0.0);
        for j in 1..200u32 {
            pw *= kt / j as f64;
            let term = pw / j as f64;
            series += term;
            if term.norm() < 1e-18 {
                break;
            }
        }
        let self_pair = (C64::new(-EULER_GAMMA + (4.0 * self.t).ln(), 0.0) + series) / (2.0 * PI);
        self.spectral(y, y) + self.spatial(y, y, true) + self_pair
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralDataInterior {
    pub k0: f64,
    pub psi0: f64,
    pub g_in: f64,
    pub g_in_modal: C64,
    pub g_in_ewald: C64,
}

pub fn trap_of(spec: &ValidatedSpec) -> Trap {
    Trap { a: spec.spec.a, b: spec.spec.b }
}

/// g^in(k) at the aperture center by the modal route.
pub fn g_in_modal(trap: Trap, mode: (u32, u32), k: C64) -> C64 {
    ModalGreen::new(trap, k, Some(mode), 1e-13).eval([0.0, 0.0], [0.0, 0.0], Regular::EdgeLog)
}

/// g^in(k) at the aperture center by the Ewald route.
pub fn g_in_ewald(trap: Trap, mode: (u32, u32), k: C64) -> C64 {
    EwaldGreen::new(trap, k, Some(mode)).edge_regular_at([0.0, 0.0])
}

pub fn g_in_regularized(spec: &ValidatedSpec) -> Result<SpectralDataInterior, InteriorError> {
    let trap = trap_of(spec);
    let mode = (spec.spec.p, spec.spec.q);
    let k0 = C64::new(spec.k0, 0.0);
    let gm = g_in_modal(trap, mode, k0);
    let ge = g_in_ewald(trap, mode, k0);
    if (gm - ge).norm() > 1e-8 {
        return Err(InteriorError::NoConvergence((gm - ge).norm()));
    }
    Ok(SpectralDataInterior { k0: spec.k0, psi0: spec.psi0, g_in: gm.re, g_in_modal: gm, g_in_ewald: ge })
}

/// Interior Green's function by the accelerated modal route, to about 1e-10.
pub fn green_interior(trap: &Trap, x: [f64; 2], y: [f64; 2], k: C64) -> Result<C64, InteriorError> {
    if !trap.contains(x) {
        return Err(InteriorError::OutOfDomain(x[0], x[1]));
    }
    if !trap.contains(y) {
        return Err(InteriorError::OutOfDomain(y[0], y[1]));
    }
    if x == y {
        return Err(InteriorError::CoincidentPoints);
    }
    check_spectrum(trap, k, k.norm(), None)?;
    Ok(ModalGreen::new(*trap, k, None, 1e-11).eval(x, y, Regular::None))
}

/// Interior Green's function by the Ewald route.
pub fn green_interior_ewald(trap: &Trap, x: [f64; 2], y: [f64; 2], k: C64) -> Result<C64, InteriorError> {
    if x == y {
        return Err(InteriorError::CoincidentPoints);
    }
    check_spectrum(trap, k, k.norm(), None)?;
    Ok(EwaldGreen::new(*trap, k, None).eval(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{validate_spec, ResonatorSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const TRAP: Trap = Trap { a: 2.0, b: 1.0 };

    fn mode21() -> EigenMode {
        EigenMode::new(2, 1, &TRAP).unwrap()
    }

    #[test]
    fn eigenfrequencies() {
        assert_abs_diff_eq!(interior_eigenfrequency(2, 1, 2.0, 1.0).unwrap(), PI * 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(interior_eigenfrequency(1, 0, 1.0, 1.0).unwrap(), PI, epsilon = 1e-15);
        assert_eq!(interior_eigenfrequency(0, 0, 1.0, 1.0), Err(InteriorError::ZeroMode));
    }

    #[test]
    fn psi_values() {
        let m = mode21();
        assert_abs_diff_eq!(psi_eval([0.0, 0.0], &m, &TRAP).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(psi_eval([0.25, 0.25], &m, &TRAP).unwrap(), 0.5f64.sqrt(), epsilon = 1e-15);
        assert!(psi_eval([0.0, 1.5], &m, &TRAP).is_err());
        // sign convention: psi(0) > 0 also for p = 2 mod 4 where the raw cosine is negative
        let m61 = EigenMode::new(6, 1, &TRAP).unwrap();
        assert!(m61.eval([0.0, 0.0], &TRAP) > 0.0);
    }

    #[test]
    fn neumann_condition_on_walls() {
        let m = mode21();
        for &x in &[[-1.0, 0.3], [1.0, 0.7]] {
            assert!(m.grad(x, &TRAP)[0].abs() < 1e-14);
        }
        for &x in &[[0.2, 0.0], [0.7, 1.0]] {
            assert!(m.grad(x, &TRAP)[1].abs() < 1e-14);
        }
    }

    #[test]
    fn gram_matrix_of_first_modes() {
        let mut modes = modes_below(&TRAP, 8.0);
        modes.truncate(10);
        let (gx, gw) = crate::special::gauss_legendre(24);
        for i in 0..modes.len() {
            for j in 0..modes.len() {
                let mut s = 0.0;
                for (u, wu) in gx.iter().zip(&gw) {
                    for (v, wv) in gx.iter().zip(&gw) {
                        let x = [u * TRAP.a / 2.0, (v + 1.0) * TRAP.b / 2.0];
                        s += wu * wv * modes[i].eval(x, &TRAP) * modes[j].eval(x, &TRAP);
                    }
                }
                s *= TRAP.a * TRAP.b / 4.0;
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-10, "({i},{j}) -> {s}");
            }
        }
    }

    #[test]
    fn two_schemes_agree_at_generic_point() {
        let x = [0.3, 0.4];
        let y = [-0.2, 0.7];
        let k = C64::new(1.0, 0.0);
        let g1 = green_interior(&TRAP, x, y, k).unwrap();
        let g2 = green_interior_ewald(&TRAP, x, y, k).unwrap();
        assert!((g1 - g2).norm() < 1e-8, "{g1} vs {g2}");
    }

    #[test]
    fn two_schemes_agree_complex_k_and_boundary() {
        let k = C64::new(4.2, -0.3);
        for (x, y) in [([0.01, 0.0], [-0.013, 0.0]), ([0.9, 0.95], [-0.99, 0.02]), ([0.0, 0.0], [0.0, 0.5])] {
            let g1 = green_interior(&TRAP, x, y, k).unwrap();
            let g2 = green_interior_ewald(&TRAP, x, y, k).unwrap();
            assert!((g1 - g2).norm() < 1e-8, "{x:?} {y:?}: {g1} vs {g2}");
        }
    }

    #[test]
    fn symmetric_in_arguments() {
        let k = C64::new(2.3, -0.1);
        let (x, y) = ([0.31, 0.12], [-0.7, 0.66]);
        let a = green_interior(&TRAP, x, y, k).unwrap();
        let b = green_interior(&TRAP, y, x, k).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn log_coefficient_is_one_over_pi() {
        let k = C64::new(1.0, 0.0);
        let fit = |x: [f64; 2]| {
            let g = |r: f64| green_interior(&TRAP, x, [x[0] + r, x[1]], k).unwrap().re;
            let (r1, r2) = (1e-6, 1e-9);
            (g(r2) - g(r1)) / (r1.ln() - r2.ln())
        };
        // on the wall the reflected image doubles the free-space coefficient
        assert!((fit([0.1, 0.0]) - 1.0 / PI).abs() < 1e-6);
        assert!((fit([0.1, 0.5]) - 0.5 / PI).abs() < 1e-6);
    }

    #[test]
    fn near_spectrum_rejected() {
        let k = C64::new(PI * 2f64.sqrt(), 0.0);
        assert!(matches!(
            green_interior(&TRAP, [0.1, 0.2], [0.3, 0.4], k),
            Err(InteriorError::NearSpectrum { mode: (2, 1), .. })
        ));
        assert_eq!(green_interior(&TRAP, [0.1, 0.2], [0.1, 0.2], C64::new(1.0, 0.0)), Err(InteriorError::CoincidentPoints));
    }

    #[test]
    fn resonant_pole_residue() {
        let m = mode21();
        let k0 = m.k;
        let x = [0.25, 0.25];
        let k = C64::new(k0 + 1e-7, 0.0);
        let g = ModalGreen::new(TRAP, k, None, 1e-11).eval(x, [0.0, 0.0], Regular::None);
        let res = (k * k - k0 * k0) * g;
        let want = -m.eval(x, &TRAP) * m.eval([0.0, 0.0], &TRAP);
        assert!((res.re - want).abs() < 1e-6, "{res} vs {want}");
    }

    #[test]
    fn resonant_removal_continuous_through_k0() {
        let m = mode21();
        let f = |dk: f64| g_in_modal(TRAP, (2, 1), C64::new(m.k + dk, 0.0));
        let (a, b, c) = (f(-1e-4), f(0.0), f(1e-4));
        assert!(((a + c) / 2.0 - b).norm() < 1e-7);
        // the circle trick and plain subtraction must match where both are valid
        let k = C64::new(m.k, -0.2);
        let g_m = g_in_modal(TRAP, (2, 1), k);
        let g_e = g_in_ewald(TRAP, (2, 1), k);
        assert!((g_m - g_e).norm() < 1e-8, "{g_m} vs {g_e}");
    }

    #[test]
    fn g_in_two_schemes() {
        let spec = validate_spec(&ResonatorSpec::canonical(0.01)).unwrap();
        let d = g_in_regularized(&spec).unwrap();
        assert!((d.g_in_modal - d.g_in_ewald).norm() < 1e-8);
        assert!(d.g_in_modal.im.abs() < 1e-10);
    }

    #[test]
    fn g_in_dilation_identity() {
        let lam = 2.0;
        let k0 = mode21().k;
        let big = Trap { a: lam * TRAP.a, b: lam * TRAP.b };
        let g1 = g_in_modal(TRAP, (2, 1), C64::new(k0, 0.0));
        let g2 = g_in_modal(big, (2, 1), C64::new(k0 / lam, 0.0));
        assert_abs_diff_eq!(g2.re - g1.re, lam.ln() / PI, epsilon = 1e-9);
        let e2 = g_in_ewald(big, (2, 1), C64::new(k0 / lam, 0.0));
        assert_abs_diff_eq!(e2.re - g1.re, lam.ln() / PI, epsilon = 1e-8);
    }

    #[test]
    fn edge_regular_matches_full_minus_log() {
        let k = C64::new(3.1, -0.05);
        let mg = ModalGreen::new(TRAP, k, None, 1e-12);
        let (x, y) = ([0.013, 0.0], [-0.004, 0.0]);
        let full = mg.eval(x, y, Regular::None);
        let delta = 0.017f64;
        let j0 = bessel_j0_series(k * delta);
        let want = full + j0 * delta.ln() / PI;
        let reg = mg.eval(x, y, Regular::EdgeLog);
        assert!((reg - want).norm() < 1e-11, "{reg} vs {want}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn schemes_agree_random(x1 in -0.95f64..0.95, x2 in 0.05f64..0.95, y1 in -0.95f64..0.95, y2 in 0.05f64..0.95, kr in 0.5f64..5.0, ki in -0.5f64..0.0) {
            prop_assume!((x1 - y1).hypot(x2 - y2) > 0.05);
            let k = C64::new(kr, ki);
            prop_assume!(check_spectrum(&TRAP, k, 1e2, None).is_ok());
            let g1 = green_interior(&TRAP, [x1, x2], [y1, y2], k).unwrap();
            let g2 = green_interior_ewald(&TRAP, [x1, x2], [y1, y2], k).unwrap();
            prop_assert!((g1 - g2).norm() < 1e-8);
        }
    }
}
