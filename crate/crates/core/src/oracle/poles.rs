//! Poles of the continued resolvent as zeros of the matching indicator.

use super::assemble::OracleContext;
use super::OracleError;
use crate::interior::modes_below;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Disc in the complex `k` plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Window {
    pub centre: C64,
    pub radius: f64,
}

impl Window {
    /// Disc of radius `3 c eps^{1/2} |tau10|` about `k0`. When that disc
    /// would reach another singular frequency of the sealed trap or channel,
    /// the centre moves away from it until the disc edge keeps a tenth of the
    /// gap clear; the radius shrinks only if `k0` would otherwise drop out.
    pub fn auto(ctx: &OracleContext, c: f64) -> Window {
        let s = &ctx.spec.spec;
        let k0 = ctx.k0();
        let tau10 = ctx.spec.psi0 * (s.omega_len() / (2.0 * s.h)).sqrt();
        let r = 3.0 * c * s.eps.sqrt() * tau10;
        let sing = singular_frequencies(ctx);
        let (gap, near) = sing
            .iter()
            .map(|&f| ((f - k0).abs(), f))
            .fold((f64::INFINITY, k0 + 1.0), |a, b| if b.0 < a.0 { b } else { a });
        let keep = 0.1 * gap;
        if r + keep <= gap {
            return Window { centre: C64::new(k0, 0.0), radius: r };
        }
        let dir = if near > k0 { -1.0 } else { 1.0 };
        let centre = k0 + dir * (r + keep - gap);
        let clear = sing.iter().map(|&f| (f - centre).abs()).fold(f64::INFINITY, f64::min) - keep;
        let radius = r.min(clear);
        if (centre - k0).abs() >= 0.9 * radius {
            return Window { centre: C64::new(k0, 0.0), radius: 0.9 * gap };
        }
        Window { centre: C64::new(centre, 0.0), radius }
    }

    pub fn contains(&self, z: C64) -> bool {
        (z - self.centre).norm() < self.radius
    }

    pub fn translated(&self, dk: f64) -> Window {
        Window { centre: self.centre + dk, radius: self.radius }
    }
}

/// Trap eigenfrequencies other than the resonant one and channel
/// frequencies other than `m pi / h`, near `k0`.
pub fn singular_frequencies(ctx: &OracleContext) -> Vec<f64> {
    let k0 = ctx.k0();
    let mut out: Vec<f64> = modes_below(&ctx.trap, k0 + 4.0)
        .iter()
        .filter(|md| (md.p, md.q) != (ctx.mode.p, ctx.mode.q))
        .map(|md| md.k)
        .collect();
    let m = ctx.spec.spec.m as f64;
    out.extend([(m - 1.0) * PI / ctx.h, (m + 1.0) * PI / ctx.h]);
    out
}

/// Distance from `k0` to the nearest singular frequency.
pub fn singular_gap(ctx: &OracleContext) -> f64 {
    let k0 = ctx.k0();
    singular_frequencies(ctx).iter().map(|f| (f - k0).abs()).fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pole {
    pub k: C64,
    /// `|D(k)|` over the largest `|D|` on the window boundary.
    pub residual: f64,
    /// Smallest over largest singular value of the matching system at `k`.
    pub sv_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContourCount {
    /// Winding number from the unwrapped phase.
    pub by_phase: i64,
    /// Trapezoidal `(1/2 pi i) \oint D'/D`, rounded.
    pub by_integral: i64,
    /// `(1/2 pi i) \oint z^p D'/D` for p = 1, 2.
    pub power_sums: [C64; 2],
    pub max_abs: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    pub window: Window,
    pub count: ContourCount,
    /// Sorted by real part.
    pub poles: Vec<Pole>,
}

fn dft_derivative(vals: &[C64]) -> Vec<C64> {
    // derivative in theta of the trigonometric interpolant
    let m = vals.len();
    let mut coef = vec![C64::new(0.0, 0.0); m];
    for (k, c) in coef.iter_mut().enumerate() {
        for (j, v) in vals.iter().enumerate() {
            *c += v * C64::from_polar(1.0, -2.0 * PI * (k * j) as f64 / m as f64);
        }
        *c /= m as f64;
    }
    (0..m)
        .map(|j| {
            let mut d = C64::new(0.0, 0.0);
            for (k, c) in coef.iter().enumerate() {
                let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
                if 2 * k == m {
                    continue;
                }
                d += c * C64::i() * kk * C64::from_polar(1.0, 2.0 * PI * (kk * j as f64) / m as f64);
            }
            d
        })
        .collect()
}

/// Argument-principle count on the window boundary.
pub fn count_roots(ctx: &OracleContext, w: &Window) -> Result<ContourCount, OracleError> {
    let mut m = 128;
    loop {
        let zs: Vec<C64> = (0..m)
            .map(|j| w.centre + C64::from_polar(w.radius, 2.0 * PI * j as f64 / m as f64))
            .collect();
        let ds = zs.par_iter().map(|&z| ctx.indicator(z)).collect::<Result<Vec<_>, _>>()?;
        let mut phase = 0.0;
        let mut max_step: f64 = 0.0;
        for j in 0..m {
            let step = (ds[(j + 1) % m] / ds[j]).arg();
            max_step = max_step.max(step.abs());
            phase += step;
        }
        if max_step > 0.5 * PI && m < 2048 {
            m *= 2;
            continue;
        }
        let dd = dft_derivative(&ds);
        let mut sums = [C64::new(0.0, 0.0); 3];
        for j in 0..m {
            let ld = dd[j] / ds[j];
            let mut zp = C64::new(1.0, 0.0);
            for s in sums.iter_mut() {
                *s += zp * ld;
                zp *= zs[j];
            }
        }
        // (1/2 pi i) \oint z^p (dD/dtheta)/D dtheta
        let norm = 1.0 / (C64::i() * m as f64);
        let by_integral = (sums[0] * norm).re.round() as i64;
        return Ok(ContourCount {
            by_phase: (phase / (2.0 * PI)).round() as i64,
            by_integral,
            power_sums: [sums[1] * norm, sums[2] * norm],
            max_abs: ds.iter().map(|d| d.norm()).fold(0.0, f64::max),
            points: m,
        });
    }
}

/// Muller iteration on `f`, started near `seed`.
pub fn muller<F>(f: F, seed: C64, step: f64, tol: f64) -> Result<C64, OracleError>
where
    F: Fn(C64) -> Result<C64, OracleError>,
{
    let mut x = [seed - step, seed + step, seed];
    let mut fx = [f(x[0])?, f(x[1])?, f(x[2])?];
    let mut last = f64::INFINITY;
    for _ in 0..60 {
        let h1 = x[1] - x[0];
        let h2 = x[2] - x[1];
        let d1 = (fx[1] - fx[0]) / h1;
        let d2 = (fx[2] - fx[1]) / h2;
        let a = (d2 - d1) / (h2 + h1);
        let b = a * h2 + d2;
        let c = fx[2];
        let disc = (b * b - 4.0 * a * c).sqrt();
        let den = if (b + disc).norm() > (b - disc).norm() { b + disc } else { b - disc };
        if den.norm() == 0.0 {
            return Err(OracleError::NoConvergence(last));
        }
        let dx = -2.0 * c / den;
        let xn = x[2] + dx;
        last = dx.norm();
        x = [x[1], x[2], xn];
        fx = [fx[1], fx[2], f(xn)?];
        if last <= tol * xn.norm() || fx[2].norm() == 0.0 {
            return Ok(xn);
        }
    }
    Err(OracleError::NoConvergence(last))
}

/// Residual and singular-value diagnostics at a converged root.
pub fn pole_at(ctx: &OracleContext, z: C64, scale: f64) -> Result<Pole, OracleError> {
    let sys = ctx.assemble(z)?;
    let sv = sys.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Pole { k: z, residual: sys.det().norm() / scale, sv_ratio: min / max })
}

/// Seeds from the contour power sums when two roots are counted.
fn seeds(count: &ContourCount, fallback: &[C64]) -> Vec<C64> {
    if count.by_integral == 2 {
        let [s1, s2] = count.power_sums;
        let prod = (s1 * s1 - s2) / 2.0;
        let disc = (s1 * s1 - 4.0 * prod).sqrt();
        vec![(s1 - disc) / 2.0, (s1 + disc) / 2.0]
    } else if count.by_integral == 1 {
        vec![count.power_sums[0]]
    } else {
        fallback.to_vec()
    }
}

/// Counts roots in `w`, then polishes each one. `fallback` seeds are used
/// only when the count is not 1 or 2.
pub fn pole_search_in(ctx: &OracleContext, w: Window, fallback: &[C64]) -> Result<OracleResult, OracleError> {
    let count = count_roots(ctx, &w)?;
    let scale = count.max_abs;
    let mut found: Vec<C64> = Vec::new();
    for seed in seeds(&count, fallback) {
        let prev = found.clone();
        let f = |z: C64| -> Result<C64, OracleError> {
            let mut d = ctx.indicator(z)? / scale;
            for r in &prev {
                d /= z - r;
            }
            Ok(d)
        };
        let z = muller(f, seed, 1e-3 * w.radius, 1e-14)?;
        found.push(z);
    }
    let mut poles = found.iter().map(|&z| pole_at(ctx, z, scale)).collect::<Result<Vec<_>, _>>()?;
    poles.sort_by(|a, b| a.k.re.total_cmp(&b.k.re));
    let inside: Vec<Pole> = poles.iter().filter(|p| w.contains(p.k)).cloned().collect();
    let expected = count.by_integral.max(0) as usize;
    let distinct = inside.windows(2).all(|p| (p[0].k - p[1].k).norm() > 1e-9);
    if count.by_phase != count.by_integral || inside.len() != expected || !distinct {
        return Err(OracleError::CountMismatch {
            found: inside.len(),
            expected,
            roots: poles.iter().map(|p| p.k).collect(),
        });
    }
    Ok(OracleResult { window: w, count, poles: inside })
}

/// Poles in the auto-sized window about `k0`.
pub fn pole_search(ctx: &OracleContext) -> Result<OracleResult, OracleError> {
    let w = Window::auto(ctx, 1.0);
    pole_search_in(ctx, w, &[w.centre - 0.3 * w.radius, w.centre + 0.3 * w.radius])
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

    #[test]
    fn two_poles_below_the_axis() {
        let res = pole_search(&ctx(0.01)).unwrap();
        assert_eq!(res.count.by_phase, 2);
        assert_eq!(res.poles.len(), 2);
        assert!(res.poles.iter().all(|p| p.k.im < 0.0 && p.residual < 1e-10));
        // the two power sums agree with the located roots
        let s1: C64 = res.poles.iter().map(|p| p.k).sum();
        assert!((s1 - res.count.power_sums[0]).norm() < 1e-6, "{s1} {:?}", res.count.power_sums);
    }

    #[test]
    fn empty_window_finds_nothing() {
        let c = ctx(0.01);
        let w = Window::auto(&c, 1.0);
        // above the real axis the outgoing indicator has no zeros
        let up = Window { centre: w.centre + C64::new(0.0, 0.5), radius: 0.2 };
        let res = pole_search_in(&c, up, &[]).unwrap();
        assert_eq!(res.count.by_integral, 0);
        assert!(res.poles.is_empty());
    }

    #[test]
    fn window_avoids_singular_frequencies() {
        for eps in [0.02, 0.005] {
            let c = ctx(eps);
            let w = Window::auto(&c, 1.0);
            assert!(w.contains(C64::new(c.k0(), 0.0)));
            for f in singular_frequencies(&c) {
                assert!((f - w.centre.re).abs() > w.radius, "eps={eps} f={f}");
            }
        }
    }

    #[test]
    fn muller_finds_polynomial_roots() {
        let f = |z: C64| Ok((z - C64::new(1.0, -0.5)) * (z + 2.0));
        let z = muller(f, C64::new(0.8, 0.0), 0.1, 1e-14).unwrap();
        assert!((z - C64::new(1.0, -0.5)).norm() < 1e-12);
    }

    #[test]
    fn seeds_from_power_sums() {
        let (a, b) = (C64::new(4.3, -0.01), C64::new(4.5, -0.004));
        let count = ContourCount {
            by_phase: 2,
            by_integral: 2,
            power_sums: [a + b, a * a + b * b],
            max_abs: 1.0,
            points: 128,
        };
        let s = seeds(&count, &[]);
        assert!((s[0] - a).norm() < 1e-12 && (s[1] - b).norm() < 1e-12, "{s:?}");
    }
}
