//! Half-plane exterior `x2 < -h` with a Neumann condition on `x2 = -h`.

use crate::special::{hankel1_0, hankel1_1, EULER_GAMMA};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExteriorError {
    #[error("coincident points")]
    CoincidentPoints,
    #[error("point ({0}, {1}) above the exterior boundary")]
    OutOfDomain(f64, f64),
    #[error("source must lie strictly below the boundary line")]
    SourceOnBoundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralDataExterior {
    pub g_ex: C64,
    pub sigma: f64,
}

/// Point source `amplitude * delta_{y0}` below the channel mouth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct SourceTerm {
    pub y0: [f64; 2],
    pub amplitude: C64,
}

impl SourceTerm {
    pub fn new(y0: [f64; 2], amplitude: C64, h: f64) -> Result<Self, ExteriorError> {
        if !(y0[1] < -h) {
            return Err(ExteriorError::SourceOnBoundary);
        }
        Ok(SourceTerm { y0, amplitude })
    }
}

fn dist(x: [f64; 2], y: [f64; 2]) -> f64 {
    (x[0] - y[0]).hypot(x[1] - y[1])
}

/// Outgoing Neumann Green's function of the half-plane: free-space kernel
/// plus its mirror image in `x2 = -h`.
pub fn green_halfplane(x: [f64; 2], y: [f64; 2], k: C64, h: f64) -> Result<C64, ExteriorError> {
    let tol = 1e-12;
    if x[1] > -h + tol {
        return Err(ExteriorError::OutOfDomain(x[0], x[1]));
    }
    if y[1] > -h + tol {
        return Err(ExteriorError::OutOfDomain(y[0], y[1]));
    }
    let r = dist(x, y);
    if r == 0.0 {
        return Err(ExteriorError::CoincidentPoints);
    }
    let yr = [y[0], -2.0 * h - y[1]];
    let rr = dist(x, yr);
    Ok(C64::i() / 4.0 * (hankel1_0(k * r) + hankel1_0(k * rr)))
}

/// Radial derivative of `(i/2) H0(k r)`, the kernel seen from a source on the line.
pub fn green_line_source_dr(r: f64, k: C64) -> C64 {
    -C64::i() / 2.0 * k * hankel1_1(k * r)
}

/// `i/2 - (1/pi)(ln(k/2) + gamma)`: the finite part of `(i/2) H0(k r)` after
/// adding `(1/pi) ln r`.
pub fn g_ex_value(k0: f64) -> C64 {
    g_ex_complex(C64::new(k0, 0.0))
}

pub fn g_ex_complex(k: C64) -> C64 {
    C64::i() / 2.0 - ((k / 2.0).ln() + EULER_GAMMA) / PI
}

/// Far-field constant: `R * pi * |(i/2) H0(k R)|^2 -> 1/(2k)` on the lower half-circle.
pub fn sigma_value(k0: f64) -> f64 {
    assert!(k0 > 0.0);
    1.0 / (2.0 * k0)
}

/// Half-circle quadrature of `|G^ex(x, x0)|^2` at radius `r`.
pub fn sigma_quadrature(k0: f64, r: f64, h: f64, n: usize) -> f64 {
    let (gx, gw) = crate::special::gauss_legendre(n);
    let x0 = [0.0, -h];
    let mut acc = 0.0;
    for (t, w) in gx.iter().zip(&gw) {
        // angle in (pi, 2 pi): the part of the circle inside the exterior
        let phi = 1.5 * PI + 0.5 * PI * t;
        let x = [r * phi.cos(), -h + r * phi.sin()];
        let g = green_halfplane(x, x0, C64::new(k0, 0.0), h).unwrap();
        acc += 0.5 * PI * w * g.norm_sqr() * r;
    }
    acc
}

pub fn exterior_data(k0: f64) -> SpectralDataExterior {
    SpectralDataExterior { g_ex: g_ex_value(k0), sigma: sigma_value(k0) }
}

/// `u^ex = amplitude * G^ex(x, y0, k)`.
pub fn limit_exterior_solution(x: [f64; 2], src: &SourceTerm, k: C64, h: f64) -> Result<C64, ExteriorError> {
    if src.amplitude == C64::new(0.0, 0.0) {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok(src.amplitude * green_halfplane(x, src.y0, k, h)?)
}
