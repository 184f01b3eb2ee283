//! Galerkin matching system for one `(spec, eps, truncation)`.
//!
//! Layout of the unknown vector: top-aperture coefficients (N), bottom
//! aperture coefficients (N), the two amplitudes `a, b` of the channel plane
//! wave `a cos(k x2) + b sin(k x2)/k`, and the amplitude `beta` of the
//! resonant trap mode. Bordering with `a, b, beta` keeps every entry
//! analytic in `k` through `k0`, where both the trap and the channel have
//! poles.

use super::basis::{cosine_projections, BasisRule, Moments, SERIES_TERMS};
use super::{OracleError, Truncation};
use crate::geometry::ValidatedSpec;
use crate::interior::{modes_below, EigenMode, ModalGreen, Regular, Trap};
use crate::special::EULER_GAMMA;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssembleOptions {
    /// Outgoing exterior kernel; `false` switches to the incoming one.
    pub outgoing: bool,
    /// Drop all coupling through the apertures.
    pub sealed: bool,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions { outgoing: true, sealed: false }
    }
}

/// Everything about the problem that does not depend on `k`.
#[derive(Clone, Debug)]
pub struct OracleContext {
    pub spec: ValidatedSpec,
    pub trunc: Truncation,
    pub trap: Trap,
    pub mode: EigenMode,
    /// Aperture width `eps |omega|` and centre abscissa.
    pub width: f64,
    pub centre: f64,
    pub h: f64,
    pub moments: Moments,
    pub rule: BasisRule,
    /// `cos_proj[j-1][l] = int b_l cos(j pi (t+1)/2) dt`.
    pub cos_proj: Vec<Vec<f64>>,
    /// `int b_l psi(x(t), 0) dt`.
    pub psi_proj: Vec<f64>,
}

impl OracleContext {
    pub fn new(spec: &ValidatedSpec, trunc: Truncation) -> Result<Self, OracleError> {
        trunc.check()?;
        let s = &spec.spec;
        let trap = Trap { a: s.a, b: s.b };
        let mode = EigenMode::new(s.p, s.q, &trap).expect("validated mode");
        let width = s.eps * s.omega_len();
        let centre = 0.5 * s.eps * (s.omega_minus + s.omega_plus);
        let moments = Moments::new(trunc.kind, trunc.basis);
        let rule = BasisRule::new(trunc.kind, trunc.basis, trunc.n_quad);
        let cos_proj = cosine_projections(&rule, trunc.n_channel);
        let psi_proj = rule.project(|t| mode.eval([centre + 0.5 * width * t, 0.0], &trap));
        Ok(OracleContext {
            spec: spec.clone(),
            trunc,
            trap,
            mode,
            width,
            centre,
            h: s.h,
            moments,
            rule,
            cos_proj,
            psi_proj,
        })
    }

    pub fn n(&self) -> usize {
        self.trunc.basis
    }

    pub fn size(&self) -> usize {
        2 * self.n() + 3
    }

    pub fn k0(&self) -> f64 {
        self.spec.k0
    }

    /// Abscissa of reference point `t` on either aperture.
    pub fn x1(&self, t: f64) -> f64 {
        self.centre + 0.5 * self.width * t
    }

    pub fn check_spectrum(&self, k: C64) -> Result<(), OracleError> {
        for m in modes_below(&self.trap, k.norm() + 1.0) {
            if (m.p, m.q) != (self.mode.p, self.mode.q) && (k - m.k).norm() < 1e-9 {
                return Err(OracleError::NearInteriorSpectrum(k, m.k));
            }
        }
        Ok(())
    }

    /// Channel coefficients of mode `j >= 1`: `-cot(kappa h)/kappa` and
    /// `csc(kappa h)/kappa`.
    pub fn channel_coeffs(&self, k: C64, j: usize) -> (C64, C64) {
        let beta = j as f64 * PI / self.width;
        let mut kap = (k * k - beta * beta).sqrt();
        if kap.im < 0.0 {
            kap = -kap;
        }
        let z = (C64::i() * kap * self.h).exp();
        let z2 = z * z;
        let den = (z2 - 1.0) * kap;
        (-C64::i() * (1.0 + z2) / den, 2.0 * C64::i() * z / den)
    }

    /// `-(1/pi) J0(k d) ln d` against the basis pair, `d = (W/2)|s-t|`.
    fn log_block(&self, k: C64) -> DMatrix<C64> {
        let n = self.n();
        let hw = 0.5 * self.width;
        let mut out = DMatrix::<C64>::zeros(n, n);
        let mut jm = C64::new(1.0, 0.0);
        let mut scale = 1.0;
        for m in 0..SERIES_TERMS {
            if m > 0 {
                jm *= -(k * k) / (4.0 * (m * m) as f64);
                scale *= hw * hw;
            }
            let blk = &self.moments.poly[m] * hw.ln() + &self.moments.poly_log[m];
            out += blk.map(|v| C64::new(v, 0.0)) * (-jm * scale / PI);
        }
        out
    }

    /// Smooth part of `(i/2) H0(k d)` after the log block.
    fn exterior_smooth_block(&self, k: C64, outgoing: bool) -> DMatrix<C64> {
        let n = self.n();
        let hw = 0.5 * self.width;
        let dir = if outgoing { 0.5 } else { -0.5 };
        let base = C64::new(0.0, dir) - ((k / 2.0).ln() + EULER_GAMMA) / PI;
        let mut out = DMatrix::<C64>::zeros(n, n);
        let mut jm = C64::new(1.0, 0.0);
        let mut harm = 0.0;
        let mut scale = 1.0;
        for m in 0..SERIES_TERMS {
            if m > 0 {
                jm *= -(k * k) / (4.0 * (m * m) as f64);
                harm += 1.0 / m as f64;
                scale *= hw * hw;
            }
            let em = jm * (base + harm / PI) * scale;
            out += self.moments.poly[m].map(|v| C64::new(v, 0.0)) * em;
        }
        out
    }

    /// Regular part of the non-resonant trap kernel on the aperture.
    fn interior_regular_block(&self, k: C64) -> DMatrix<C64> {
        let n = self.n();
        let g = ModalGreen::with_cutoff(self.trap, k, Some((self.mode.p, self.mode.q)), self.trunc.n_trap);
        let nq = self.rule.nodes.len();
        let xs: Vec<[f64; 2]> = self.rule.nodes.iter().map(|&t| [self.x1(t), 0.0]).collect();
        let rows: Vec<Vec<C64>> = (0..nq)
            .into_par_iter()
            .map(|p| (p..nq).map(|q| g.eval(xs[p], xs[q], Regular::EdgeLog)).collect())
            .collect();
        let mut out = DMatrix::<C64>::zeros(n, n);
        for p in 0..nq {
            for q in p..nq {
                let v = rows[p][q - p];
                let (wp, wq) = (self.rule.weights[p], self.rule.weights[q]);
                let (tp, tq) = (&self.rule.t_vals[p], &self.rule.t_vals[q]);
                for l in 0..n {
                    for i in 0..n {
                        let mut c = wp * wq * tp[l] * tq[i];
                        if q != p {
                            c += wp * wq * tq[l] * tp[i];
                        }
                        out[(l, i)] += v * c;
                    }
                }
            }
        }
        out
    }

    /// Channel cross-section part shared by both apertures: the exact
    /// `W/(j pi)` kernel plus the remainder series, and the end-to-end block.
    fn channel_blocks(&self, k: C64) -> (DMatrix<C64>, DMatrix<C64>) {
        let n = self.n();
        let w = self.width;
        let mut same = self.moments.channel_log.map(|v| C64::new(v, 0.0));
        let mut cross = DMatrix::<C64>::zeros(n, n);
        for (jj, mj) in self.cos_proj.iter().enumerate() {
            let j = jj + 1;
            let (c, d) = self.channel_coeffs(k, j);
            let cr = (c - w / (j as f64 * PI)) * (2.0 / w);
            let dr = d * (2.0 / w);
            for l in 0..n {
                for i in 0..n {
                    let mm = mj[l] * mj[i];
                    same[(l, i)] += cr * mm;
                    cross[(l, i)] += dr * mm;
                }
            }
        }
        (same, cross)
    }

    /// Top and bottom blocks with the aperture rows scaled by `(2/W)^2`.
    pub fn assemble_with(&self, k: C64, opts: AssembleOptions) -> Result<MatchingSystem, OracleError> {
        self.check_spectrum(k)?;
        let n = self.n();
        let size = self.size();
        let (ia, ib, ibeta) = (2 * n, 2 * n + 1, 2 * n + 2);
        let log = self.log_block(k);
        let (same, cross) = self.channel_blocks(k);
        let tt = &log + self.interior_regular_block(k) + &same;
        let bb = &log + self.exterior_smooth_block(k, opts.outgoing) + &same;

        let mut m = DMatrix::<C64>::zeros(size, size);
        m.view_mut((0, 0), (n, n)).copy_from(&tt);
        m.view_mut((n, n), (n, n)).copy_from(&bb);
        let kh = k * self.h;
        let (ckh, skh) = (kh.cos(), kh.sin());
        let w = self.width;
        let k0 = self.k0();
        let couple = if opts.sealed { 0.0 } else { 1.0 };
        if !opts.sealed {
            m.view_mut((0, n), (n, n)).copy_from(&cross);
            m.view_mut((n, 0), (n, n)).copy_from(&cross);
        }
        for l in 0..n {
            let mu = C64::new(2.0 / w * self.moments.mean[l] * couple, 0.0);
            m[(l, ia)] = mu;
            m[(l, ibeta)] = C64::new(2.0 / w * self.psi_proj[l] * couple, 0.0);
            m[(n + l, ia)] = -mu * ckh;
            m[(n + l, ib)] = mu * skh / k;
            m[(ia, l)] = C64::new(0.5 * self.moments.mean[l] * couple, 0.0);
            m[(ib, n + l)] = C64::new(0.5 * self.moments.mean[l] * couple, 0.0);
            m[(ibeta, l)] = C64::new(0.5 * w * self.psi_proj[l] * couple, 0.0);
        }
        m[(ia, ib)] = C64::new(-1.0, 0.0);
        m[(ib, ia)] = -k * skh;
        m[(ib, ib)] = -ckh;
        m[(ibeta, ibeta)] = -(C64::new(k0 * k0, 0.0) - k * k);
        Ok(MatchingSystem { k, n, matrix: m })
    }

    pub fn assemble(&self, k: C64) -> Result<MatchingSystem, OracleError> {
        self.assemble_with(k, AssembleOptions::default())
    }

    /// Matching indicator: determinant of the bordered system.
    pub fn indicator(&self, k: C64) -> Result<C64, OracleError> {
        Ok(self.assemble(k)?.det())
    }
}

/// Dense bordered system at one frequency.
#[derive(Clone, Debug)]
pub struct MatchingSystem {
    pub k: C64,
    pub n: usize,
    pub matrix: DMatrix<C64>,
}

impl MatchingSystem {
    pub fn det(&self) -> C64 {
        self.matrix.clone().lu().determinant()
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.matrix.clone().svd(false, false).singular_values.iter().copied().collect()
    }

    pub fn condition_number(&self) -> f64 {
        let sv = self.singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    pub fn solve(&self, rhs: &DVector<C64>) -> Option<DVector<C64>> {
        self.matrix.clone().lu().solve(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{validate_spec, ResonatorSpec};

    fn ctx(eps: f64) -> OracleContext {
        let spec = validate_spec(&ResonatorSpec::canonical(eps)).unwrap();
        OracleContext::new(&spec, Truncation::new(8, 60, 6)).unwrap()
    }

    #[test]
    fn sealed_system_decouples() {
        let c = ctx(0.01);
        let k = C64::new(4.3, -0.05);
        let s = c.assemble_with(k, AssembleOptions { outgoing: true, sealed: true }).unwrap();
        let n = c.n();
        assert_eq!(s.matrix.view((0, n), (n, n)).iter().map(|v| v.norm()).fold(0.0, f64::max), 0.0);
        assert_eq!(s.matrix.view((0, 2 * n), (n, 3)).iter().map(|v| v.norm()).fold(0.0, f64::max), 0.0);
        // the resonant row closes on k0 exactly
        let s0 = c.assemble_with(C64::new(c.k0(), 0.0), AssembleOptions { outgoing: true, sealed: true }).unwrap();
        assert!(s0.det().norm() < 1e-10 * s.det().norm());
    }

    #[test]
    fn parity_blocks_decouple() {
        let c = ctx(0.01);
        let s = c.assemble(C64::new(4.5, -0.02)).unwrap();
        let n = c.n();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for r in 0..2 * n {
            for col in 0..2 * n {
                let v = s.matrix[(r, col)].norm();
                scale = scale.max(v);
                if (r % n) % 2 != (col % n) % 2 {
                    worst = worst.max(v);
                }
            }
            // borders talk to even functions only
            if (r % n) % 2 == 1 {
                for col in 2 * n..2 * n + 3 {
                    worst = worst.max(s.matrix[(r, col)].norm());
                }
            }
        }
        assert!(worst <= 1e-12 * scale, "{worst} vs {scale}");
    }

    #[test]
    fn incoming_kernel_is_the_reflection() {
        let c = ctx(0.01);
        let k = C64::new(4.5, -0.03);
        let out = c.assemble(k).unwrap().det();
        let inc = c.assemble_with(k.conj(), AssembleOptions { outgoing: false, sealed: false }).unwrap().det();
        assert!((out.conj() - inc).norm() < 1e-10 * out.norm(), "{out} {inc}");
    }

    #[test]
    fn indicator_is_analytic() {
        let c = ctx(0.01);
        let k = C64::new(4.4, -0.02);
        let d = 1e-4;
        let f = |z: C64| c.indicator(z).unwrap();
        let dx = (f(k + d) - f(k - d)) / (2.0 * d);
        let dy = (f(k + C64::i() * d) - f(k - C64::i() * d)) / (2.0 * d);
        // Cauchy-Riemann: df/dy = i df/dx
        assert!((dy - C64::i() * dx).norm() < 1e-5 * dx.norm(), "{dx} {dy}");
    }

    #[test]
    fn channel_coefficients_evanescent() {
        let c = ctx(0.01);
        let (cc, dd) = c.channel_coeffs(C64::new(4.4, -0.1), 1);
        let gam = (PI / c.width).hypot(0.0);
        assert!((cc - 1.0 / gam).norm() < 0.01 / gam);
        assert!(dd.norm() < 1e-90);
    }

    #[test]
    fn off_spectrum_guard() {
        let c = ctx(0.01);
        assert!(matches!(
            c.assemble(C64::new(1.5 * PI, 0.0)),
            Err(OracleError::NearInteriorSpectrum(..))
        ));
        assert!(c.assemble(C64::new(c.k0(), 0.0)).is_ok());
    }
}
