//! Resonator geometry: a Neumann rectangle `[-a/2, a/2] x [0, b]` over a
//! straight channel `(eps w-, eps w+) x [-h, 0]` that opens into the
//! half-plane `x2 < -h`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

pub const EPS_MAX_DEFAULT: f64 = 0.05;
pub const EPS_WARN: f64 = 0.02;
pub const CRITICAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonatorSpec {
    pub a: f64,
    pub b: f64,
    pub omega_minus: f64,
    pub omega_plus: f64,
    pub h: f64,
    pub p: u32,
    pub q: u32,
    pub m: u32,
    pub eps: f64,
}

impl ResonatorSpec {
    /// The geometry used throughout the tests: 2x1 trap, mode (2,1), unit
    /// aperture, first channel resonance.
    pub fn canonical(eps: f64) -> Self {
        let k0 = PI * 2f64.sqrt();
        ResonatorSpec {
            a: 2.0,
            b: 1.0,
            omega_minus: -0.5,
            omega_plus: 0.5,
            h: critical_channel_length(k0, 1),
            p: 2,
            q: 1,
            m: 1,
            eps,
        }
    }

    pub fn omega_len(&self) -> f64 {
        self.omega_plus - self.omega_minus
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NonPositiveDimension(&'static str, f64),
    EmptyAperture { omega_minus: f64, omega_plus: f64 },
    BadEpsilon { eps: f64, eps_max: f64 },
    ApertureOutOfRange { left: f64, right: f64, half_width: f64 },
    ZeroMode,
    NotCritical { k0: f64, channel: f64 },
    DegenerateMode { p: u32, q: u32, partner: (u32, u32) },
    NodalOpening { psi0: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveDimension(name, v) => write!(f, "{name} must be positive, got {v}"),
            Violation::EmptyAperture { omega_minus, omega_plus } => {
                write!(f, "aperture needs omega_minus < omega_plus, got ({omega_minus}, {omega_plus})")
            }
            Violation::BadEpsilon { eps, eps_max } => write!(f, "BadEpsilon: eps = {eps} outside (0, {eps_max}]"),
            Violation::ApertureOutOfRange { left, right, half_width } => write!(
                f,
                "ApertureOutOfRange: [{left}, {right}] not inside (-{half_width}, {half_width})"
            ),
            Violation::ZeroMode => write!(f, "mode (0,0) has zero frequency"),
            Violation::NotCritical { k0, channel } => {
                write!(f, "NotCritical: k0 = {k0} but m pi / h = {channel}")
            }
            Violation::DegenerateMode { p, q, partner } => {
                write!(f, "DegenerateMode: ({p},{q}) shares its eigenvalue with {partner:?}")
            }
            Violation::NodalOpening { psi0 } => write!(f, "NodalOpening: psi(0) = {psi0}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid resonator spec: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct InvalidSpec(pub Vec<Violation>);

/// A spec that passed every check, together with the derived scalars.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidatedSpec {
    pub spec: ResonatorSpec,
    pub k0: f64,
    pub psi0: f64,
    pub warnings: Vec<String>,
}

impl ValidatedSpec {
    pub fn omega_len(&self) -> f64 {
        self.spec.omega_len()
    }
    pub fn x0(&self) -> [f64; 2] {
        [0.0, -self.spec.h]
    }
    /// Aperture endpoints on the x1 axis.
    pub fn aperture(&self) -> (f64, f64) {
        (self.spec.eps * self.spec.omega_minus, self.spec.eps * self.spec.omega_plus)
    }
}

pub fn critical_channel_length(k0: f64, m: u32) -> f64 {
    assert!(k0 > 0.0);
    m as f64 * PI / k0
}

pub fn eigenvalue(p: u32, q: u32, a: f64, b: f64) -> f64 {
    let (pa, qb) = (p as f64 / a, q as f64 / b);
    PI * PI * (pa * pa + qb * qb)
}

/// First lattice pair other than (p,q) with the same Neumann eigenvalue.
pub fn degenerate_partner(p: u32, q: u32, a: f64, b: f64) -> Option<(u32, u32)> {
    let target = eigenvalue(p, q, a, b);
    let pmax = (a * target.sqrt() / PI).floor() as u32 + 1;
    let qmax = (b * target.sqrt() / PI).floor() as u32 + 1;
    for pp in 0..=pmax {
        for qq in 0..=qmax {
            if (pp, qq) == (p, q) || (pp, qq) == (0, 0) {
                continue;
            }
            if (eigenvalue(pp, qq, a, b) - target).abs() <= 1e-12 * target {
                return Some((pp, qq));
            }
        }
    }
    None
}

pub fn check_simple_mode(p: u32, q: u32, a: f64, b: f64) -> bool {
    if p == 0 && q == 0 {
        return false;
    }
    degenerate_partner(p, q, a, b).is_none()
}

/// Unit-normalized Neumann mode value at the origin, before sign fixing.
fn raw_psi0(p: u32, q: u32, a: f64, b: f64) -> f64 {
    let ep = if p == 0 { 1.0 } else { 2.0 };
    let eq = if q == 0 { 1.0 } else { 2.0 };
    (ep / a * eq / b).sqrt() * (p as f64 * PI / 2.0).cos()
}

pub fn validate_spec(raw: &ResonatorSpec) -> Result<ValidatedSpec, InvalidSpec> {
    validate_spec_with_cap(raw, EPS_MAX_DEFAULT)
}

pub fn validate_spec_with_cap(raw: &ResonatorSpec, eps_max: f64) -> Result<ValidatedSpec, InvalidSpec> {
    let mut v = Vec::new();
    for (name, val) in [("a", raw.a), ("b", raw.b), ("h", raw.h)] {
        if !(val > 0.0) {
            v.push(Violation::NonPositiveDimension(name, val));
        }
    }
    if !(raw.omega_minus < raw.omega_plus) {
        v.push(Violation::EmptyAperture { omega_minus: raw.omega_minus, omega_plus: raw.omega_plus });
    }
    if !(raw.eps > 0.0 && raw.eps <= eps_max) {
        v.push(Violation::BadEpsilon { eps: raw.eps, eps_max });
    }
    let (left, right) = (raw.eps * raw.omega_minus, raw.eps * raw.omega_plus);
    if raw.a > 0.0 && !(left > -raw.a / 2.0 && right < raw.a / 2.0) {
        v.push(Violation::ApertureOutOfRange { left, right, half_width: raw.a / 2.0 });
    }
    let mut k0 = f64::NAN;
    let mut psi0 = f64::NAN;
    if raw.p == 0 && raw.q == 0 {
        v.push(Violation::ZeroMode);
    } else if raw.a > 0.0 && raw.b > 0.0 {
        k0 = eigenvalue(raw.p, raw.q, raw.a, raw.b).sqrt();
        if raw.h > 0.0 {
            let channel = raw.m as f64 * PI / raw.h;
            if raw.m == 0 || (k0 - channel).abs() > CRITICAL_TOL * k0.max(1.0) {
                v.push(Violation::NotCritical { k0, channel });
            }
        }
        if let Some(partner) = degenerate_partner(raw.p, raw.q, raw.a, raw.b) {
            v.push(Violation::DegenerateMode { p: raw.p, q: raw.q, partner });
        }
        psi0 = raw_psi0(raw.p, raw.q, raw.a, raw.b);
        if psi0.abs() < 1e-12 {
            v.push(Violation::NodalOpening { psi0 });
        }
        psi0 = psi0.abs();
    }
    if !v.is_empty() {
        return Err(InvalidSpec(v));
    }
    let mut warnings = Vec::new();
    if raw.eps > EPS_WARN {
        warnings.push(format!("eps = {} above {EPS_WARN}: asymptotic ordering degrades", raw.eps));
    }
    Ok(ValidatedSpec { spec: raw.clone(), k0, psi0, warnings })
}

/// Reflection `x -> (x - x0)^*` with `x0 = (0, -h)` and `(y1, y2)^* = (y1, -y2)`.
pub fn starred(x: [f64; 2], h: f64) -> [f64; 2] {
    [x[0], -(x[1] + h)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn canonical_is_valid() {
        let v = validate_spec(&ResonatorSpec::canonical(0.01)).unwrap();
        assert_abs_diff_eq!(v.k0, PI * 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(v.psi0, 2f64.sqrt(), epsilon = 1e-14);
        assert!(v.warnings.is_empty());
    }

    #[test]
    fn wrong_length_is_not_critical() {
        let mut s = ResonatorSpec::canonical(0.01);
        s.h = 1.0;
        let err = validate_spec(&s).unwrap_err();
        assert!(matches!(err.0[..], [Violation::NotCritical { .. }]));
    }

    #[test]
    fn mode_20_is_degenerate() {
        let mut s = ResonatorSpec::canonical(0.01);
        s.q = 0;
        s.h = critical_channel_length(PI, 1);
        let err = validate_spec(&s).unwrap_err();
        assert!(err.0.iter().any(|v| matches!(v, Violation::DegenerateMode { partner: (0, 1), .. })));
    }

    #[test]
    fn reports_every_violation() {
        let mut s = ResonatorSpec::canonical(0.5);
        s.p = 1;
        s.q = 0;
        s.h = 1.0;
        let err = validate_spec(&s).unwrap_err();
        // eps too large, mode (1,0) nodal at the aperture
        assert!(err.0.iter().any(|v| matches!(v, Violation::BadEpsilon { .. })));
        assert!(err.0.iter().any(|v| matches!(v, Violation::NodalOpening { .. })));
        assert!(err.to_string().contains("NodalOpening"));
    }

    #[test]
    fn aperture_must_fit() {
        let mut s = ResonatorSpec::canonical(0.04);
        s.omega_minus = -30.0;
        let err = validate_spec(&s).unwrap_err();
        assert!(matches!(err.0[..], [Violation::ApertureOutOfRange { .. }]));
    }

    #[test]
    fn critical_lengths() {
        assert_abs_diff_eq!(critical_channel_length(PI * 2f64.sqrt(), 1), 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(critical_channel_length(PI, 1), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(critical_channel_length(PI * 2f64.sqrt(), 2), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn simple_modes() {
        assert!(check_simple_mode(2, 1, 2.0, 1.0));
        assert!(!check_simple_mode(2, 0, 2.0, 1.0));
        assert!(!check_simple_mode(0, 1, 2.0, 1.0));
        assert!(!check_simple_mode(0, 0, 2.0, 1.0));
    }

    #[test]
    fn warning_band() {
        let v = validate_spec(&ResonatorSpec::canonical(0.03)).unwrap();
        assert_eq!(v.warnings.len(), 1);
    }

    #[test]
    fn starred_map() {
        let h = 0.7;
        let y = starred([0.3, -1.5], h);
        assert_abs_diff_eq!(y[1], 0.8, epsilon = 1e-15);
        assert!(starred([0.0, -0.2], h)[1] < 0.0);
    }

    proptest! {
        #[test]
        fn critical_length_round_trip(p in 0u32..6, q in 0u32..6, m in 1u32..4, a in 0.5f64..3.0, b in 0.5f64..3.0) {
            prop_assume!(p + q > 0);
            let k0 = eigenvalue(p, q, a, b).sqrt();
            let s = ResonatorSpec { a, b, omega_minus: -0.5, omega_plus: 0.5, h: critical_channel_length(k0, m), p, q, m, eps: 0.01 };
            if let Err(e) = validate_spec(&s) {
                let not_critical = e.0.iter().any(|v| matches!(v, Violation::NotCritical { .. }));
                prop_assert!(!not_critical);
            }
        }

        #[test]
        fn degeneracy_is_symmetric(p in 0u32..7, q in 0u32..7, a in prop::sample::select(vec![1.0, 2.0, 3.0]), b in prop::sample::select(vec![1.0, 2.0])) {
            prop_assume!(p + q > 0);
            if let Some((pp, qq)) = degenerate_partner(p, q, a, b) {
                prop_assert!(!check_simple_mode(pp, qq, a, b));
            }
        }

        #[test]
        fn starred_is_involution_after_translation(x1 in -5.0f64..5.0, x2 in -5.0f64..5.0, h in 0.1f64..2.0) {
            let s = starred([x1, x2], h);
            let back = [s[0], -s[1] - h];
            prop_assert!((back[0] - x1).abs() < 1e-12 && (back[1] - x2).abs() < 1e-12);
            prop_assert_eq!(s[1] >= 0.0, x2 <= -h);
        }
    }
}
