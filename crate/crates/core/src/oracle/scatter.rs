//! Real-frequency scattering by a point source below the channel mouth.

use super::assemble::OracleContext;
use super::OracleError;
use crate::exterior::{green_halfplane, SourceTerm};
use crate::interior::{modes_below, ModalGreen, Regular};
use crate::special::{gauss_legendre, hankel1_0, hankel1_1};
use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

/// Condition numbers above this are reported instead of solved.
pub const MAX_CONDITION: f64 = 1e14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Part {
    Trap,
    Channel,
    Exterior,
}

/// Solved matching system plus the data needed to evaluate the field.
#[derive(Clone, Debug)]
pub struct ScatterSolution<'a> {
    pub ctx: &'a OracleContext,
    pub k: f64,
    pub src: SourceTerm,
    pub coeffs: DVector<C64>,
    pub condition: f64,
    /// Flux densities at the quadrature nodes of each aperture.
    flux_top: Vec<C64>,
    flux_bottom: Vec<C64>,
}

fn kc(k: f64) -> C64 {
    C64::new(k, 0.0)
}

/// Right-hand side of the bordered system for the source `src`.
pub fn source_rhs(ctx: &OracleContext, k: f64, src: &SourceTerm) -> Result<DVector<C64>, OracleError> {
    let n = ctx.n();
    let mut rhs = DVector::<C64>::zeros(ctx.size());
    if src.amplitude == C64::new(0.0, 0.0) {
        return Ok(rhs);
    }
    let vals = ctx
        .rule
        .nodes
        .iter()
        .map(|&t| green_halfplane([ctx.x1(t), -ctx.h], src.y0, kc(k), ctx.h))
        .collect::<Result<Vec<_>, _>>()?;
    for l in 0..n {
        let mut f = C64::new(0.0, 0.0);
        for q in 0..vals.len() {
            f += ctx.rule.weights[q] * ctx.rule.t_vals[q][l] * vals[q];
        }
        rhs[n + l] = -src.amplitude * f * (2.0 / ctx.width);
    }
    Ok(rhs)
}

pub fn scatter_solve<'a>(ctx: &'a OracleContext, k: f64, src: SourceTerm) -> Result<ScatterSolution<'a>, OracleError> {
    let sys = ctx.assemble(kc(k))?;
    let condition = sys.condition_number();
    if !(condition < MAX_CONDITION) {
        return Err(OracleError::IllConditioned(condition));
    }
    let rhs = source_rhs(ctx, k, &src)?;
    let coeffs = sys.solve(&rhs).ok_or(OracleError::IllConditioned(f64::INFINITY))?;
    let n = ctx.n();
    let density = |off: usize| -> Vec<C64> {
        ctx.rule
            .t_vals
            .iter()
            .map(|tv| (0..n).map(|i| coeffs[off + i] * tv[i]).sum())
            .collect()
    };
    let flux_top = density(0);
    let flux_bottom = density(n);
    Ok(ScatterSolution { ctx, k, src, coeffs, condition, flux_top, flux_bottom })
}

impl ScatterSolution<'_> {
    fn n(&self) -> usize {
        self.ctx.n()
    }

    /// Amplitudes `(a, b)` of the channel plane wave and the resonant-mode amplitude.
    pub fn borders(&self) -> (C64, C64, C64) {
        let n = self.n();
        (self.coeffs[2 * n], self.coeffs[2 * n + 1], self.coeffs[2 * n + 2])
    }

    pub fn part_of(&self, x: [f64; 2]) -> Option<Part> {
        let c = self.ctx;
        let (lo, hi) = (c.centre - 0.5 * c.width, c.centre + 0.5 * c.width);
        if c.trap.contains(x) && x[1] >= 0.0 {
            Some(Part::Trap)
        } else if x[1] < 0.0 && x[1] > -c.h && x[0] >= lo && x[0] <= hi {
            Some(Part::Channel)
        } else if x[1] <= -c.h {
            Some(Part::Exterior)
        } else {
            None
        }
    }

    /// Plane-wave part of the channel field at height `x2`.
    pub fn channel_plane_wave(&self, x2: f64) -> C64 {
        let (a, b, _) = self.borders();
        let k = self.k;
        a * (k * x2).cos() + b * (k * x2).sin() / k
    }

    fn channel_field(&self, x: [f64; 2]) -> C64 {
        let c = self.ctx;
        let n = self.n();
        let mut u = self.channel_plane_wave(x[1]);
        let th = PI * (x[0] - (c.centre - 0.5 * c.width)) / c.width;
        for (jj, mj) in c.cos_proj.iter().enumerate() {
            let j = jj + 1;
            let beta = j as f64 * PI / c.width;
            let mut kap = C64::new(self.k * self.k - beta * beta, 0.0).sqrt();
            if kap.im < 0.0 {
                kap = -kap;
            }
            let phi0: C64 = (0..n).map(|i| self.coeffs[i] * mj[i]).sum();
            let phih: C64 = (0..n).map(|i| self.coeffs[n + i] * mj[i]).sum();
            // cos(kappa y)/(kappa sin(kappa h)) for 0 <= y <= h, written with
            // decaying exponentials
            let e2 = (2.0 * C64::i() * kap * c.h).exp();
            let g = |y: f64| {
                C64::i() * ((C64::i() * kap * (y + c.h)).exp() + (C64::i() * kap * (c.h - y)).exp())
                    / ((e2 - 1.0) * kap)
            };
            let uj = -phi0 * g(x[1] + c.h) + phih * g(-x[1]);
            u += (j as f64 * th).cos() * uj;
        }
        u
    }

    fn trap_field(&self, x: [f64; 2]) -> C64 {
        let c = self.ctx;
        let g = ModalGreen::new(c.trap, kc(self.k), Some((c.mode.p, c.mode.q)), 1e-10);
        let mut acc = C64::new(0.0, 0.0);
        for (q, &t) in c.rule.nodes.iter().enumerate() {
            acc += c.rule.weights[q] * self.flux_top[q] * g.eval(x, [c.x1(t), 0.0], Regular::None);
        }
        let (_, _, beta) = self.borders();
        -(acc * (0.5 * c.width) + beta * c.mode.eval(x, &c.trap))
    }

    /// Field scattered by the aperture into the exterior.
    pub fn exterior_scattered(&self, x: [f64; 2]) -> Result<C64, OracleError> {
        let c = self.ctx;
        let mut acc = C64::new(0.0, 0.0);
        for (q, &t) in c.rule.nodes.iter().enumerate() {
            acc += c.rule.weights[q] * self.flux_bottom[q] * green_halfplane(x, [c.x1(t), -c.h], kc(self.k), c.h)?;
        }
        Ok(acc * (0.5 * c.width))
    }

    fn exterior_grad(&self, x: [f64; 2]) -> [C64; 2] {
        let c = self.ctx;
        let k = kc(self.k);
        let src_grad = |y: [f64; 2], amp: C64| -> [C64; 2] {
            // free space plus mirror image
            let mut g = [C64::new(0.0, 0.0); 2];
            for yy in [y, [y[0], -2.0 * c.h - y[1]]] {
                let d = [x[0] - yy[0], x[1] - yy[1]];
                let r = d[0].hypot(d[1]);
                let f = -C64::i() / 4.0 * k * hankel1_1(k * r) / r * amp;
                g[0] += f * d[0];
                g[1] += f * d[1];
            }
            g
        };
        let mut g = src_grad(self.src.y0, self.src.amplitude);
        for (q, &t) in c.rule.nodes.iter().enumerate() {
            let w = c.rule.weights[q] * self.flux_bottom[q] * (0.5 * c.width);
            let gq = src_grad([c.x1(t), -c.h], w);
            g[0] += gq[0];
            g[1] += gq[1];
        }
        g
    }

    /// Total field; `None` outside the resonator.
    pub fn field(&self, x: [f64; 2]) -> Option<C64> {
        match self.part_of(x)? {
            Part::Trap => Some(self.trap_field(x)),
            Part::Channel => Some(self.channel_field(x)),
            Part::Exterior => {
                let inc = crate::exterior::limit_exterior_solution(x, &self.src, kc(self.k), self.ctx.h).ok()?;
                Some(inc + self.exterior_scattered(x).ok()?)
            }
        }
    }

    /// `<psi_pq, d u/d x2>` over the top aperture.
    fn top_projection(&self, p: u32, q: u32) -> C64 {
        let c = self.ctx;
        let m = crate::interior::EigenMode::new(p, q, &c.trap).unwrap_or_else(|_| unreachable!());
        let mut acc = C64::new(0.0, 0.0);
        for (i, &t) in c.rule.nodes.iter().enumerate() {
            acc += c.rule.weights[i] * self.flux_top[i] * m.eval([c.x1(t), 0.0], &c.trap);
        }
        acc * (0.5 * c.width)
    }

    /// L2 norm over the whole trap by Parseval over its Neumann modes.
    pub fn interior_norm(&self) -> f64 {
        let c = self.ctx;
        let k2 = self.k * self.k;
        let mut s = 0.0;
        // the constant mode is included; (0,0) carries ψ = 1/sqrt(ab)
        let area = c.trap.a * c.trap.b;
        let mut c00 = C64::new(0.0, 0.0);
        for (i, _) in c.rule.nodes.iter().enumerate() {
            c00 += c.rule.weights[i] * self.flux_top[i];
        }
        s += (c00 * (0.5 * c.width) / area.sqrt()).norm_sqr() / (k2 * k2);
        for md in modes_below(&c.trap, 150.0) {
            if md.p == 0 && md.q == 0 {
                continue;
            }
            let proj = if (md.p, md.q) == (c.mode.p, c.mode.q) {
                self.borders().2 * (md.k * md.k - k2)
            } else {
                self.top_projection(md.p, md.q)
            };
            s += proj.norm_sqr() / (md.k * md.k - k2).powi(2);
        }
        s.sqrt()
    }

    /// `max |a cos(k x2) + b sin(k x2)/k|` over the channel.
    pub fn channel_amplitude(&self) -> f64 {
        (0..=400)
            .map(|i| self.channel_plane_wave(-self.ctx.h * i as f64 / 400.0).norm())
            .fold(0.0, f64::max)
    }

    /// Channel L2 norm from the plane wave; the evanescent modes are
    /// exponentially small away from the two ends.
    pub fn channel_norm(&self) -> f64 {
        let (x, w) = gauss_legendre(64);
        let h = self.ctx.h;
        let s: f64 = x
            .iter()
            .zip(&w)
            .map(|(t, wt)| 0.5 * h * wt * self.channel_plane_wave(-0.5 * h * (t + 1.0)).norm_sqr())
            .sum();
        (s * self.ctx.width).sqrt()
    }

    /// L2 norm over the half annulus `r0 < |x - x0| < r1` below the mouth.
    pub fn exterior_annulus_norm(&self, r0: f64, r1: f64) -> Result<f64, OracleError> {
        let (x, w) = gauss_legendre(24);
        let (a, aw) = gauss_legendre(48);
        let h = self.ctx.h;
        let mut s = 0.0;
        for (tr, wr) in x.iter().zip(&w) {
            let r = r0 + 0.5 * (r1 - r0) * (tr + 1.0);
            for (ta, wa) in a.iter().zip(&aw) {
                let phi = 1.5 * PI + 0.5 * PI * ta;
                let p = [r * phi.cos(), -h + r * phi.sin()];
                if (p[0] - self.src.y0[0]).hypot(p[1] - self.src.y0[1]) < 1e-9 {
                    continue;
                }
                let u = self.field(p).ok_or(OracleError::IllConditioned(f64::NAN))?;
                s += 0.5 * (r1 - r0) * wr * 0.5 * PI * wa * r * u.norm_sqr();
            }
        }
        Ok(s.sqrt())
    }

    /// Power radiated through the half circle of radius `r` about the mouth.
    pub fn radiated_power(&self, r: f64) -> f64 {
        let (x, w) = gauss_legendre(512);
        let h = self.ctx.h;
        let mut p = 0.0;
        for (t, wt) in x.iter().zip(&w) {
            let phi = 1.5 * PI + 0.5 * PI * t;
            let (c, s) = (phi.cos(), phi.sin());
            let pt = [r * c, -h + r * s];
            let u = self.field(pt).unwrap_or_default();
            let g = self.exterior_grad(pt);
            let du = g[0] * c + g[1] * s;
            p += 0.5 * PI * wt * r * (u.conj() * du).im;
        }
        p
    }

    /// Power put in by the source: `Im(conj(A) u_reg(y0))`.
    pub fn source_power(&self) -> Result<f64, OracleError> {
        let y = self.src.y0;
        let h = self.ctx.h;
        let img = (2.0 * (y[1] + h)).abs();
        let reg = self.src.amplitude * C64::i() / 4.0 * (1.0 + hankel1_0(kc(self.k * img)));
        let u = reg + self.exterior_scattered(y)?;
        Ok((self.src.amplitude.conj() * u).im)
    }

    /// `|P_out - P_in| / P_in` on a half circle enclosing the source.
    pub fn flux_balance(&self) -> Result<f64, OracleError> {
        let y = self.src.y0;
        let r = y[0].hypot(y[1] + self.ctx.h) + 1.0;
        let pin = self.source_power()?;
        Ok((self.radiated_power(r) - pin).abs() / pin.abs())
    }
}

#[cfg(test)]
impl ScatterSolution<'_> {
    fn top_projection_const(&self) -> C64 {
        let c = self.ctx;
        let mut acc = C64::new(0.0, 0.0);
        for (i, _) in c.rule.nodes.iter().enumerate() {
            acc += c.rule.weights[i] * self.flux_top[i];
        }
        acc * (0.5 * c.width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{validate_spec, ResonatorSpec};
    use crate::oracle::Truncation;

    fn ctx(eps: f64) -> OracleContext {
        let spec = validate_spec(&ResonatorSpec::canonical(eps)).unwrap();
        OracleContext::new(&spec, Truncation::new(8, 60, 6)).unwrap()
    }

    fn src(y: [f64; 2]) -> SourceTerm {
        SourceTerm::new(y, C64::new(1.0, 0.0), std::f64::consts::FRAC_1_SQRT_2).unwrap()
    }

    #[test]
    fn zero_source_zero_field() {
        let c = ctx(0.01);
        let s = SourceTerm { y0: [0.3, -2.0], amplitude: C64::new(0.0, 0.0) };
        let sol = scatter_solve(&c, 4.3, s).unwrap();
        for x in [[0.2, 0.4], [0.0, -0.3], [0.5, -1.5]] {
            assert_eq!(sol.field(x).unwrap(), C64::new(0.0, 0.0));
        }
        assert_eq!(sol.interior_norm(), 0.0);
    }

    #[test]
    fn flux_balance_holds() {
        let c = ctx(0.01);
        for k in [4.3, 4.48, 4.6] {
            let sol = scatter_solve(&c, k, src([0.3, -2.0])).unwrap();
            let fb = sol.flux_balance().unwrap();
            assert!(fb < 1e-6, "k={k}: {fb:e}");
        }
    }

    #[test]
    fn reciprocity() {
        let c = ctx(0.01);
        let (y0, y1) = ([0.3, -2.0], [-0.7, -1.4]);
        let k = 4.45;
        let a = scatter_solve(&c, k, src(y0)).unwrap().exterior_scattered(y1).unwrap();
        let b = scatter_solve(&c, k, src(y1)).unwrap().exterior_scattered(y0).unwrap();
        assert!((a - b).norm() < 1e-8 * a.norm(), "{a} {b}");
    }

    #[test]
    fn continuity_at_lower_mouth() {
        // the exterior field approaches the channel plane wave at the mouth
        let c = ctx(0.01);
        let sol = scatter_solve(&c, 4.5, src([0.3, -2.0])).unwrap();
        let inside = sol.channel_plane_wave(-c.h);
        let d = 1e-4;
        let outside = sol.field([0.0, -c.h - d]).unwrap();
        assert!((inside - outside).norm() < 0.02 * inside.norm(), "{inside} {outside}");
    }

    #[test]
    fn parseval_matches_direct_value() {
        // the modal sum for the trap field against the direct evaluation at
        // a bulk point, through the resonant mode amplitude
        let c = ctx(0.01);
        let sol = scatter_solve(&c, 4.49, src([0.3, -2.0])).unwrap();
        let x = [0.4, 0.6];
        let direct = sol.field(x).unwrap();
        let mut modal = C64::new(0.0, 0.0);
        let k2 = sol.k * sol.k;
        for md in modes_below(&c.trap, 120.0) {
            if md.p == 0 && md.q == 0 {
                continue;
            }
            let proj = sol.top_projection(md.p, md.q);
            modal -= proj * md.eval(x, &c.trap) / (md.k * md.k - k2);
        }
        let c00: C64 = sol.top_projection_const();
        modal -= c00 / (c.trap.a * c.trap.b) / (-k2);
        assert!((modal - direct).norm() < 1e-3 * direct.norm(), "{modal} {direct}");
    }
}

