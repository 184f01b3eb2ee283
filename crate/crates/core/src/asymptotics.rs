//! Two-pole expansions, peak frequencies and regional field formulas.
//!
//! Everything here is a closed-form evaluator over [`SpectralData`]: the
//! numbers `k0, psi(0), g_in, g_ex, sigma` plus `h, |omega|, m`.

use crate::exterior::{green_halfplane, ExteriorError, SourceTerm};
use crate::geometry::ValidatedSpec;
use crate::interior::{EigenMode, Trap};
use crate::junction::{JunctionError, JunctionFieldX};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AsymptoticsError {
    #[error("point ({0}, {1}) outside the resonator")]
    OutsideDomain(f64, f64),
    #[error("t hits the pole of c_F")]
    PoleHit,
    #[error("k coincides with a pole")]
    AtPole,
    #[error(transparent)]
    Junction(#[from] JunctionError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

fn sgn(n: u32) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LeadingCoefficients {
    pub b_minus10: f64,
    /// Interior matching constant for branch 2; branch 1 flips the sign.
    pub r0_in: f64,
    pub r0_ex: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralData {
    pub k0: f64,
    pub psi0: f64,
    pub g_in: f64,
    pub g_ex: C64,
    pub sigma: f64,
    pub h: f64,
    pub omega_len: f64,
    pub m: u32,
    pub coeffs: LeadingCoefficients,
    // geometry needed by the field formulas
    pub trap: Trap,
    pub mode: (u32, u32),
    pub omega: (f64, f64),
}

impl SpectralData {
    pub fn new(spec: &ValidatedSpec, g_in: f64, g_ex: C64, sigma: f64) -> Self {
        let s = &spec.spec;
        let w = s.omega_len();
        let psi0 = spec.psi0;
        let r0_in = 1.0 / (psi0 * 2f64.sqrt());
        SpectralData {
            k0: spec.k0,
            psi0,
            g_in,
            g_ex,
            sigma,
            h: s.h,
            omega_len: w,
            m: s.m,
            coeffs: LeadingCoefficients {
                b_minus10: (s.h * w).powf(-0.5),
                r0_in,
                r0_ex: sgn(s.m + 1) * r0_in,
            },
            trap: Trap { a: s.a, b: s.b },
            mode: (s.p, s.q),
            omega: (s.omega_minus, s.omega_plus),
        }
    }

    /// `(R0_in psi(0))^2 + b_{-1,0}^2 |omega| h / 2`, which must equal 1.
    pub fn normalization(&self) -> f64 {
        let c = &self.coeffs;
        (c.r0_in * self.psi0).powi(2) + c.b_minus10.powi(2) * self.omega_len * self.h / 2.0
    }

    fn eigenmode(&self) -> EigenMode {
        EigenMode::new(self.mode.0, self.mode.1, &self.trap).expect("validated mode")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoleExpansion {
    pub branch: u32,
    pub tau10: f64,
    pub tau21: f64,
    pub tau20: C64,
    pub k0: f64,
}

pub fn pole_coefficients(d: &SpectralData, n: u32) -> PoleExpansion {
    assert!(n == 1 || n == 2, "branch must be 1 or 2");
    let s = sgn(n);
    let r = (d.omega_len / (2.0 * d.h)).sqrt();
    let tau10 = s * d.psi0 * r;
    let tau21 = s * 4.0 * d.k0 / (PI * d.psi0) * r;
    let w = d.omega_len;
    let bracket = C64::new((2.0 * d.k0 / PI) * ((2.0 * w / PI).ln() - 1.0) - 0.25 * d.psi0 * d.psi0, 0.0)
        - d.k0 * (d.g_in + d.g_ex);
    let tau20 = 0.5 * (w / d.h) * bracket;
    PoleExpansion { branch: n, tau10, tau21, tau20, k0: d.k0 }
}

/// `Im tau20` from the far-field constant alone.
pub fn im_tau20_from_sigma(d: &SpectralData) -> f64 {
    -0.5 * (d.omega_len / d.h) * d.k0 * d.k0 * d.sigma
}

/// `k0 + eps^{1/2} tau10 + eps ln eps tau21 + eps tau20`.
pub fn pole_value(e: &PoleExpansion, eps: f64) -> C64 {
    if eps == 0.0 {
        return C64::new(e.k0, 0.0);
    }
    C64::new(e.k0 + eps.sqrt() * e.tau10 + eps * eps.ln() * e.tau21, 0.0) + eps * e.tau20
}

/// Size of the first dropped scale, `eps^{3/2} |ln eps|`.
pub fn truncation_error(eps: f64) -> f64 {
    eps.powf(1.5) * eps.ln().abs()
}

/// `eps |ln eps| |tau21| / (eps^{1/2} |tau10|)`; above 1 the ordering of the
/// expansion is violated.
pub fn ordering_ratio(e: &PoleExpansion, eps: f64) -> f64 {
    eps * eps.ln().abs() * e.tau21.abs() / (eps.sqrt() * e.tau10.abs())
}

/// `k0 + eps^{1/2} tau10 + eps ln eps tau21 + eps t`. The `t` term is taken
/// at order `eps` so that `c_F` stays finite (see the crate docs).
pub fn peak_frequency(e: &PoleExpansion, t: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        return e.k0;
    }
    e.k0 + eps.sqrt() * e.tau10 + eps * eps.ln() * e.tau21 + eps * t
}

/// Both poles from the two-mode balance
/// `h d^2 - eps |omega| k0 Z d - eps |omega| psi(0)^2 / 2 = 0`, `d = k - k0`,
/// with `Z = (2/pi)(ln(2|omega|/pi) - 1) + (2/pi) ln eps - g_in - g_ex`:
/// the trap mode and the channel mode exchange energy through the aperture,
/// and `Z` is the aperture self-interaction left after the log singularities
/// of both Green functions cancel. Sorted by real part.
///
/// Expanded in `eps`, the roots share the even term
/// `eps ln eps k0 |omega| / (pi h)` and carry no `psi(0)^2` correction at
/// order `eps`. This is used as a diagnostic next to [`pole_value`].
pub fn coupled_mode_poles(d: &SpectralData, eps: f64) -> [C64; 2] {
    let w = d.omega_len;
    let z = C64::new((2.0 / PI) * ((2.0 * w / PI).ln() - 1.0 + eps.ln()) - d.g_in, 0.0) - d.g_ex;
    let b = eps * w * d.k0 * z;
    let disc = (b * b + 2.0 * d.h * eps * w * d.psi0 * d.psi0).sqrt();
    let (lo, hi) = ((b - disc) / (2.0 * d.h), (b + disc) / (2.0 * d.h));
    let mut r = [d.k0 + lo, d.k0 + hi];
    r.sort_by(|a, b| a.re.total_cmp(&b.re));
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RegionTag {
    InteriorBulk,
    InnerTop,
    Channel,
    InnerBottom,
    ExteriorBulk,
}

impl RegionTag {
    pub fn name(&self) -> &'static str {
        match self {
            RegionTag::InteriorBulk => "interior",
            RegionTag::InnerTop => "inner_top",
            RegionTag::Channel => "channel",
            RegionTag::InnerBottom => "inner_bottom",
            RegionTag::ExteriorBulk => "exterior",
        }
    }
}

/// Regions containing `x`, with the selected tag first. Inside an overlap
/// annulus the inner region is selected below radius `1.5 eps^{1/2}`.
pub fn classify(x: [f64; 2], eps: f64, d: &SpectralData) -> Result<Vec<RegionTag>, AsymptoticsError> {
    let (a, b, h) = (d.trap.a, d.trap.b, d.h);
    let tol = 1e-12;
    let in_trap = x[0].abs() <= a / 2.0 + tol && x[1] >= -tol && x[1] <= b + tol;
    let in_channel = x[0] >= eps * d.omega.0 - tol && x[0] <= eps * d.omega.1 + tol && x[1] <= tol && x[1] >= -h - tol;
    let in_ext = x[1] <= -h + tol;
    if !(in_trap || in_channel || in_ext) {
        return Err(AsymptoticsError::OutsideDomain(x[0], x[1]));
    }
    let s = eps.sqrt();
    let r_top = x[0].hypot(x[1]);
    let r_bot = x[0].hypot(x[1] + h);
    let mut tags = Vec::new();
    let near_top = (in_trap || in_channel) && r_top < 2.0 * s;
    let near_bot = (in_channel || in_ext) && r_bot < 2.0 * s;
    if in_trap && r_top >= s {
        tags.push(RegionTag::InteriorBulk);
    }
    if near_top {
        tags.push(RegionTag::InnerTop);
    }
    if in_channel && r_top >= s && r_bot >= s && !(in_trap && x[1] > tol) && !(in_ext && x[1] < -h - tol) {
        tags.push(RegionTag::Channel);
    }
    if near_bot {
        tags.push(RegionTag::InnerBottom);
    }
    if in_ext && r_bot >= s {
        tags.push(RegionTag::ExteriorBulk);
    }
    let prefer_inner = |r: f64| r < 1.5 * s;
    let selected = if near_top && prefer_inner(r_top) {
        RegionTag::InnerTop
    } else if near_bot && prefer_inner(r_bot) {
        RegionTag::InnerBottom
    } else {
        *tags.iter().find(|t| !matches!(t, RegionTag::InnerTop | RegionTag::InnerBottom)).unwrap_or(&tags[0])
    };
    tags.retain(|t| *t != selected);
    tags.insert(0, selected);
    Ok(tags)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldValue {
    pub tag: RegionTag,
    pub value: C64,
    /// Every region formula valid at the point, the selected one included.
    pub candidates: Vec<(RegionTag, C64)>,
}

impl FieldValue {
    pub fn in_overlap(&self) -> bool {
        self.candidates.len() > 1
    }
}

fn x_value(x: [f64; 2], eps: f64, d: &SpectralData, jx: &JunctionFieldX) -> Result<f64, AsymptoticsError> {
    let st = crate::geometry::starred(x, d.h);
    Ok(jx.eval_x([st[0] / eps, st[1] / eps])?)
}

fn g_ex_from_mouth(x: [f64; 2], k: f64, d: &SpectralData) -> Result<C64, AsymptoticsError> {
    Ok(green_halfplane(x, [0.0, -d.h], C64::new(k, 0.0), d.h)?)
}

fn quasimode_region(
    tag: RegionTag,
    n: u32,
    x: [f64; 2],
    eps: f64,
    d: &SpectralData,
    jx: &JunctionFieldX,
) -> Result<C64, AsymptoticsError> {
    let sn = sgn(n);
    let w = d.omega_len;
    let v = match tag {
        RegionTag::InteriorBulk => C64::new(sn * d.eigenmode().eval(x, &d.trap) / 2f64.sqrt(), 0.0),
        RegionTag::InnerTop => C64::new(sn * d.psi0 / 2f64.sqrt(), 0.0),
        RegionTag::Channel => C64::new((d.h * w * eps).powf(-0.5) * (d.k0 * x[1]).sin(), 0.0),
        RegionTag::InnerBottom => {
            let xv = x_value(x, eps, d, jx)?;
            C64::new(eps.sqrt() * sgn(d.m + 1) * (d.k0 / PI) * (w / d.h).sqrt() * (eps.ln() + PI / w * xv), 0.0)
        }
        RegionTag::ExteriorBulk => eps.sqrt() * sgn(d.m) * d.k0 * (w / d.h).sqrt() * g_ex_from_mouth(x, d.k0, d)?,
    };
    Ok(v)
}

/// Leading-order quasimode of branch `n` at `x`.
pub fn quasimode_field(
    n: u32,
    x: [f64; 2],
    eps: f64,
    d: &SpectralData,
    jx: &JunctionFieldX,
) -> Result<FieldValue, AsymptoticsError> {
    let tags = classify(x, eps, d)?;
    let candidates = tags
        .iter()
        .map(|&t| quasimode_region(t, n, x, eps, d, jx).map(|v| (t, v)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FieldValue { tag: tags[0], value: candidates[0].1, candidates })
}

/// `c_F^{(n)}(t) = (-1)^{m+n+1} / (2 (t - tau20)) (|omega|/2h)^{1/2} u^ex(x0; k0)`.
pub fn c_f(n: u32, t: f64, d: &SpectralData, src: &SourceTerm) -> Result<C64, AsymptoticsError> {
    let e = pole_coefficients(d, n);
    let den = C64::new(t, 0.0) - e.tau20;
    if den.norm() == 0.0 {
        return Err(AsymptoticsError::PoleHit);
    }
    let uex = crate::exterior::limit_exterior_solution([0.0, -d.h], src, C64::new(d.k0, 0.0), d.h)?;
    Ok(sgn(d.m + n + 1) / (2.0 * den) * (d.omega_len / (2.0 * d.h)).sqrt() * uex)
}

fn peak_region(
    tag: RegionTag,
    n: u32,
    t: f64,
    x: [f64; 2],
    eps: f64,
    d: &SpectralData,
    src: &SourceTerm,
    jx: &JunctionFieldX,
) -> Result<C64, AsymptoticsError> {
    let cf = c_f(n, t, d, src)?;
    let w = d.omega_len;
    let k = peak_frequency(&pole_coefficients(d, n), t, eps);
    let v = match tag {
        RegionTag::InteriorBulk => cf * d.eigenmode().eval(x, &d.trap) / eps.sqrt(),
        RegionTag::InnerTop => cf * d.psi0 / eps.sqrt(),
        RegionTag::Channel => cf * sgn(n) * (2.0 / (d.h * w)).sqrt() * (d.k0 * x[1]).sin() / eps,
        RegionTag::InnerBottom => {
            let xv = x_value(x, eps, d, jx)?;
            cf * sgn(d.m + n + 1) * (d.k0 / PI) * (2.0 * w / d.h).sqrt() * (eps.ln() + PI / w * xv)
        }
        RegionTag::ExteriorBulk => {
            let g = green_halfplane(x, [0.0, -d.h], C64::new(k, 0.0), d.h)?;
            let uex = crate::exterior::limit_exterior_solution(x, src, C64::new(k, 0.0), d.h)?;
            cf * sgn(d.m + n) * d.k0 * (2.0 * w / d.h).sqrt() * g + uex
        }
    };
    Ok(v)
}

/// Scattered field at the peak frequency `peak_frequency(n, t, eps)`.
#[allow(clippy::too_many_arguments)]
pub fn peak_solution_field(
    n: u32,
    t: f64,
    x: [f64; 2],
    eps: f64,
    d: &SpectralData,
    src: &SourceTerm,
    jx: &JunctionFieldX,
) -> Result<FieldValue, AsymptoticsError> {
    let tags = classify(x, eps, d)?;
    let candidates = tags
        .iter()
        .map(|&tg| peak_region(tg, n, t, x, eps, d, src, jx).map(|v| (tg, v)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FieldValue { tag: tags[0], value: candidates[0].1, candidates })
}

/// Leading part of the resolvent split: the two pole terms plus `u^ex`
/// outside (zero inside) for a point source, i.e. `F = -amplitude delta_{y0}`.
pub fn resolvent_leading(
    k: C64,
    x: [f64; 2],
    eps: f64,
    d: &SpectralData,
    src: &SourceTerm,
    jx: &JunctionFieldX,
) -> Result<C64, AsymptoticsError> {
    let mut acc = C64::new(0.0, 0.0);
    if src.amplitude != C64::new(0.0, 0.0) {
        for n in [1, 2] {
            let tau = pole_value(&pole_coefficients(d, n), eps);
            if (tau - k).norm() < 1e-14 * tau.norm() {
                return Err(AsymptoticsError::AtPole);
            }
            let psi_x = quasimode_field(n, x, eps, d, jx)?.value;
            let psi_y = quasimode_field(n, src.y0, eps, d, jx)?.value;
            let pairing = -src.amplitude * psi_y;
            acc -= psi_x * pairing / (tau * tau - k * k);
        }
    }
    if x[1] < -d.h {
        acc += crate::exterior::limit_exterior_solution(x, src, k, d.h)?;
    }
    Ok(acc)
}

/// Top-aperture overlap discrepancy between the channel and inner formulas,
/// scaled by the channel amplitude `eps^{-1/2} (h|omega|)^{-1/2}`.
pub fn top_overlap_discrepancy(n: u32, eps: f64, d: &SpectralData, jx: &JunctionFieldX) -> Result<f64, AsymptoticsError> {
    let x = [0.0, -1.5 * eps.sqrt()];
    let ch = quasimode_region(RegionTag::Channel, n, x, eps, d, jx)?;
    let top = quasimode_region(RegionTag::InnerTop, n, x, eps, d, jx)?;
    Ok((ch - top).norm() * (d.h * d.omega_len * eps).sqrt())
}
