//! Oracle poles against the asymptotic formulas, amplitude scalings at the
//! peak frequencies, and the identity suite.

use crate::asymptotics::{
    coupled_mode_poles, im_tau20_from_sigma, peak_frequency, pole_coefficients, pole_value, top_overlap_discrepancy,
    SpectralData,
};
use crate::exterior::{g_ex_value, green_line_source_dr, sigma_value, SourceTerm};
use crate::geometry::{check_simple_mode, critical_channel_length, validate_spec, InvalidSpec, ValidatedSpec};
use crate::interior::{g_in_regularized, modes_below, trap_of, InteriorError, ModalGreen, Regular, SpectralDataInterior};
use crate::junction::{junction_constants, JunctionConstants, JunctionFieldX};
use crate::oracle::{scatter_solve, truncation_convergence, Certificate, OracleContext, OracleError, Truncation};
use crate::special::{gauss_legendre, hankel1_0};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::f64::consts::PI;

/// Fits with a 95% half-width above this are rejected.
pub const MAX_HALF_WIDTH: f64 = 0.3;

#[derive(Debug, Clone, thiserror::Error)]
pub enum VerifyError {
    #[error("oracle failed at eps = {eps}: {source}")]
    OracleFailed { eps: f64, source: OracleError },
    #[error("{what}: slope {slope} has 95% half-width {half_width}")]
    FitUnstable { what: String, slope: f64, half_width: f64 },
    #[error("bad eps ladder: {0}")]
    BadLadder(String),
    #[error(transparent)]
    Interior(#[from] InteriorError),
    #[error(transparent)]
    Spec(#[from] InvalidSpec),
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// Studentized 95% half-width of the slope; infinite with two points.
    pub half_width: f64,
    pub points: usize,
}

impl Fit {
    pub fn stable(&self) -> bool {
        self.half_width <= MAX_HALF_WIDTH
    }
}

pub fn loglog_fit(x: &[f64], y: &[f64]) -> Fit {
    let n = x.len();
    assert!(n >= 2 && n == y.len(), "need at least two points");
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let nf = n as f64;
    let mx = lx.iter().sum::<f64>() / nf;
    let my = ly.iter().sum::<f64>() / nf;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let half_width = if n > 2 {
        let rss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let se = (rss / (nf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 2.0).map_or(f64::INFINITY, |d| d.inverse_cdf(0.975));
        t * se
    } else {
        f64::INFINITY
    };
    Fit { slope, intercept, half_width, points: n }
}

/// Sorted strictly decreasing; duplicates and non-positive values rejected.
pub fn normalize_ladder(ladder: &[f64]) -> Result<Vec<f64>, VerifyError> {
    let mut l = ladder.to_vec();
    if l.iter().any(|e| !(*e > 0.0)) {
        return Err(VerifyError::BadLadder("eps must be positive".into()));
    }
    l.sort_by(|a, b| b.total_cmp(a));
    if l.windows(2).any(|w| w[0] == w[1]) {
        return Err(VerifyError::BadLadder("repeated eps".into()));
    }
    Ok(l)
}

/// Dyadic from 0.02 down to 0.0025.
pub fn default_ladder() -> Vec<f64> {
    vec![0.02, 0.01, 0.005, 0.0025]
}

pub fn with_eps(spec: &ValidatedSpec, eps: f64) -> Result<ValidatedSpec, InvalidSpec> {
    let mut raw = spec.spec.clone();
    raw.eps = eps;
    validate_spec(&raw)
}

/// Spectral data of a validated spec, with `g_in` from the two-scheme routine.
pub fn spectral_data(spec: &ValidatedSpec) -> Result<(SpectralData, SpectralDataInterior), VerifyError> {
    let int = g_in_regularized(spec)?;
    let d = SpectralData::new(spec, int.g_in, g_ex_value(spec.k0), sigma_value(spec.k0));
    Ok((d, int))
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub branch: u32,
    pub oracle: C64,
    pub asym: C64,
    /// `|oracle - pole_value|`.
    pub residual: f64,
    /// `|oracle - (k0 + eps^{1/2} tau10)|`.
    pub crude_residual: f64,
    pub coupled: C64,
    pub coupled_residual: f64,
}

/// Oracle diagnostics at one eps on the finest truncation.
#[derive(Clone, Debug, Serialize)]
pub struct OracleHealth {
    pub eps: f64,
    pub poles: Vec<C64>,
    pub differences: Vec<f64>,
    pub decay: Vec<f64>,
    pub certified: bool,
    pub error_estimate: f64,
    /// Relative flux balance at the real part of the narrower pole.
    pub flux_balance: f64,
    /// Relative reciprocity defect between two exterior points.
    pub reciprocity: f64,
}

/// Splitting and widths of the oracle poles.
#[derive(Clone, Debug, Serialize)]
pub struct PoleShape {
    pub eps: f64,
    /// `Re(tau2 - tau1) / (2 eps^{1/2} |tau10|)`.
    pub split: f64,
    /// `-Im tau_n / (eps (|omega|/2h) k0^2 sigma)` for branches 1 and 2.
    pub width: [f64; 2],
    pub mean_width: f64,
    /// Ratio of the larger to the smaller branch residual.
    pub branch_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchFit {
    pub branch: u32,
    pub full: Fit,
    pub crude: Fit,
    pub coupled: Fit,
    /// eps <= 0.01 where the residual grew from the previous rung.
    pub non_monotone: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub ladder: Vec<f64>,
    pub rows: Vec<SweepRow>,
    pub health: Vec<OracleHealth>,
    pub shapes: Vec<PoleShape>,
    pub fits: Vec<BranchFit>,
    pub identities: Vec<IdentityResult>,
}

impl SweepReport {
    /// Both full-truncation fits must be stable.
    pub fn check_fits(&self) -> Result<(), VerifyError> {
        for f in &self.fits {
            if !f.full.stable() {
                return Err(VerifyError::FitUnstable {
                    what: format!("branch {} residual", f.branch),
                    slope: f.full.slope,
                    half_width: f.full.half_width,
                });
            }
        }
        Ok(())
    }
}

/// Source points used by the oracle health checks: below the mouth, one
/// straight under it and one off to the side.
pub fn probe_sources(spec: &ValidatedSpec) -> ([f64; 2], [f64; 2]) {
    let h = spec.spec.h;
    ([0.3, -h - 1.3], [-0.7, -h - 0.7])
}

fn health(spec: &ValidatedSpec, cert: &Certificate) -> Result<OracleHealth, OracleError> {
    let tr = *cert.ladder.last().unwrap_or_else(|| unreachable!());
    let ctx = OracleContext::new(spec, tr)?;
    let poles = cert.roots.last().cloned().unwrap_or_default();
    let k = poles.iter().max_by(|a, b| a.im.total_cmp(&b.im)).map_or(ctx.k0(), |z| z.re);
    let (y0, y1) = probe_sources(spec);
    let one = C64::new(1.0, 0.0);
    let s0 = SourceTerm::new(y0, one, spec.spec.h)?;
    let s1 = SourceTerm::new(y1, one, spec.spec.h)?;
    let a = scatter_solve(&ctx, k, s0)?;
    let b = scatter_solve(&ctx, k, s1)?;
    let u01 = a.exterior_scattered(y1)?;
    let u10 = b.exterior_scattered(y0)?;
    Ok(OracleHealth {
        eps: spec.spec.eps,
        poles,
        differences: cert.differences.clone(),
        decay: cert.decay.clone(),
        certified: cert.certified,
        error_estimate: cert.error_estimate,
        flux_balance: a.flux_balance()?,
        reciprocity: (u01 - u10).norm() / u01.norm(),
    })
}

/// Certified oracle poles and health checks at one eps.
pub fn oracle_at(spec: &ValidatedSpec, ladder: &[Truncation]) -> Result<OracleHealth, VerifyError> {
    let eps = spec.spec.eps;
    let fail = |source| VerifyError::OracleFailed { eps, source };
    let cert = truncation_convergence(spec, ladder).map_err(fail)?;
    cert.check().map_err(fail)?;
    if cert.poles.len() != 2 {
        return Err(fail(OracleError::CountMismatch {
            found: cert.poles.len(),
            expected: 2,
            roots: cert.poles.iter().map(|p| p.k).collect(),
        }));
    }
    health(spec, &cert).map_err(fail)
}

/// Oracle poles at every eps of the ladder against `pole_value`, with
/// log-log residual fits per branch. Branch 1 is the lower pole.
pub fn sweep_compare(spec: &ValidatedSpec, eps_ladder: &[f64], trunc: &[Truncation]) -> Result<SweepReport, VerifyError> {
    let ladder = normalize_ladder(eps_ladder)?;
    if ladder.len() < 4 {
        return Err(VerifyError::BadLadder("slope fits need at least four eps".into()));
    }
    let (d, int) = spectral_data(spec)?;
    let health = ladder
        .par_iter()
        .map(|&eps| oracle_at(&with_eps(spec, eps)?, trunc))
        .collect::<Result<Vec<_>, _>>()?;

    let exps = [pole_coefficients(&d, 1), pole_coefficients(&d, 2)];
    let width_unit = 0.5 * d.omega_len / d.h * d.k0 * d.k0 * d.sigma;
    let mut rows = Vec::new();
    let mut shapes = Vec::new();
    for hl in &health {
        let eps = hl.eps;
        let coupled = coupled_mode_poles(&d, eps);
        let mut res = [0.0; 2];
        for (i, e) in exps.iter().enumerate() {
            let oracle = hl.poles[i];
            let asym = pole_value(e, eps);
            let crude = C64::new(e.k0 + eps.sqrt() * e.tau10, 0.0);
            res[i] = (oracle - asym).norm();
            rows.push(SweepRow {
                eps,
                branch: e.branch,
                oracle,
                asym,
                residual: res[i],
                crude_residual: (oracle - crude).norm(),
                coupled: coupled[i],
                coupled_residual: (oracle - coupled[i]).norm(),
            });
        }
        let width = [-hl.poles[0].im / (eps * width_unit), -hl.poles[1].im / (eps * width_unit)];
        shapes.push(PoleShape {
            eps,
            split: (hl.poles[1] - hl.poles[0]).re / (2.0 * eps.sqrt() * exps[1].tau10.abs()),
            width,
            mean_width: 0.5 * (width[0] + width[1]),
            branch_ratio: res[0].max(res[1]) / res[0].min(res[1]),
        });
    }

    let fits = [1u32, 2]
        .iter()
        .map(|&n| {
            let r: Vec<&SweepRow> = rows.iter().filter(|r| r.branch == n).collect();
            let x: Vec<f64> = r.iter().map(|r| r.eps).collect();
            let pick = |f: fn(&SweepRow) -> f64| r.iter().map(|r| f(r)).collect::<Vec<_>>();
            let full = pick(|r| r.residual);
            let non_monotone = r
                .windows(2)
                .filter(|w| w[1].eps <= 0.01 && w[1].residual >= w[0].residual)
                .map(|w| w[1].eps)
                .collect();
            BranchFit {
                branch: n,
                full: loglog_fit(&x, &full),
                crude: loglog_fit(&x, &pick(|r| r.crude_residual)),
                coupled: loglog_fit(&x, &pick(|r| r.coupled_residual)),
                non_monotone,
            }
        })
        .collect();

    let inputs = IdentityInputs { spec: spec.clone(), data: d, junction: junction_constants(spec.spec.omega_minus, spec.spec.omega_plus), interior: int };
    Ok(SweepReport { ladder, rows, health, shapes, fits, identities: identity_suite(&inputs) })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeRow {
    pub eps: f64,
    pub k_peak: f64,
    pub interior_norm: f64,
    pub channel_amplitude: f64,
    pub k_detuned: f64,
    pub detuned_interior_norm: f64,
    /// Real part of the oracle pole of the probed branch.
    pub k_oracle: f64,
    pub oracle_interior_norm: f64,
    pub oracle_channel_amplitude: f64,
    pub flux_balance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub branch: u32,
    pub t: f64,
    pub rows: Vec<ProbeRow>,
    pub interior_slope: Fit,
    pub channel_slope: Fit,
    /// Detuned interior norm at each eps over the one before it.
    pub detuned_ratios: Vec<f64>,
    pub oracle_interior_slope: Fit,
    pub oracle_channel_slope: Fit,
}

/// Field amplitudes at `k = peak_frequency(branch, t, eps)` with
/// `t = Re tau20`, midway between the two printed peaks, and at the real
/// part of the oracle pole.
pub fn amplitude_scaling_probe(
    spec: &ValidatedSpec,
    eps_ladder: &[f64],
    src: &SourceTerm,
    branch: u32,
    trunc: &[Truncation],
) -> Result<ProbeReport, VerifyError> {
    let ladder = normalize_ladder(eps_ladder)?;
    if ladder.len() < 2 {
        return Err(VerifyError::BadLadder("need at least two eps".into()));
    }
    let (d, _) = spectral_data(spec)?;
    let e1 = pole_coefficients(&d, 1);
    let e2 = pole_coefficients(&d, 2);
    let e = if branch == 1 { e1 } else { e2 };
    let t = e.tau20.re;
    let fine = *trunc.last().ok_or_else(|| VerifyError::BadLadder("empty truncation ladder".into()))?;
    let rows = ladder
        .par_iter()
        .map(|&eps| -> Result<ProbeRow, VerifyError> {
            let fail = |source| VerifyError::OracleFailed { eps, source };
            let s = with_eps(spec, eps)?;
            let ctx = OracleContext::new(&s, fine).map_err(fail)?;
            let k_peak = peak_frequency(&e, t, eps);
            let k_detuned = 0.5 * (peak_frequency(&e1, t, eps) + peak_frequency(&e2, t, eps));
            let at = scatter_solve(&ctx, k_peak, *src).map_err(fail)?;
            let det = scatter_solve(&ctx, k_detuned, *src).map_err(fail)?;
            let cert = truncation_convergence(&s, trunc).map_err(fail)?;
            let poles = cert.roots.last().cloned().unwrap_or_default();
            let k_oracle = poles.get((branch as usize).saturating_sub(1)).map_or(k_peak, |z| z.re);
            let tru = scatter_solve(&ctx, k_oracle, *src).map_err(fail)?;
            Ok(ProbeRow {
                eps,
                k_peak,
                interior_norm: at.interior_norm(),
                channel_amplitude: at.channel_amplitude(),
                k_detuned,
                detuned_interior_norm: det.interior_norm(),
                k_oracle,
                oracle_interior_norm: tru.interior_norm(),
                oracle_channel_amplitude: tru.channel_amplitude(),
                flux_balance: at.flux_balance().map_err(fail)?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let x: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let col = |f: fn(&ProbeRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    Ok(ProbeReport {
        branch,
        t,
        interior_slope: loglog_fit(&x, &col(|r| r.interior_norm)),
        channel_slope: loglog_fit(&x, &col(|r| r.channel_amplitude)),
        detuned_ratios: rows.windows(2).map(|w| w[1].detuned_interior_norm / w[0].detuned_interior_norm).collect(),
        oracle_interior_slope: loglog_fit(&x, &col(|r| r.oracle_interior_norm)),
        oracle_channel_slope: loglog_fit(&x, &col(|r| r.oracle_channel_amplitude)),
        rows,
    })
}

/// Everything the identity suite reads. Fields are public so that faults
/// can be injected.
#[derive(Clone, Debug)]
pub struct IdentityInputs {
    pub spec: ValidatedSpec,
    pub data: SpectralData,
    pub junction: JunctionConstants,
    pub interior: SpectralDataInterior,
}

impl IdentityInputs {
    pub fn build(spec: &ValidatedSpec) -> Result<Self, VerifyError> {
        let (data, interior) = spectral_data(spec)?;
        let junction = junction_constants(spec.spec.omega_minus, spec.spec.omega_plus);
        Ok(IdentityInputs { spec: spec.clone(), data, junction, interior })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityResult {
    pub name: &'static str,
    pub error: f64,
    pub tol: f64,
    pub pass: bool,
}

fn ident(name: &'static str, error: f64, tol: f64) -> IdentityResult {
    IdentityResult { name, error, tol, pass: error <= tol }
}

fn flag(name: &'static str, ok: bool) -> IdentityResult {
    ident(name, if ok { 0.0 } else { 1.0 }, 0.0)
}

pub fn identity_suite(inp: &IdentityInputs) -> Vec<IdentityResult> {
    let s = &inp.spec.spec;
    let d = &inp.data;
    let trap = trap_of(&inp.spec);
    let mut out = Vec::new();

    let mut crit = s.clone();
    crit.h = critical_channel_length(inp.spec.k0, s.m);
    out.push(flag("critical_round_trip", validate_spec(&crit).is_ok()));
    out.push(flag("simple_mode", check_simple_mode(s.p, s.q, s.a, s.b)));

    // interior
    let mut modes = modes_below(&trap, 4.0 * PI + inp.spec.k0);
    modes.truncate(10);
    let (gx, gw) = gauss_legendre(24);
    let mut gram: f64 = 0.0;
    for i in 0..modes.len() {
        for j in 0..=i {
            let mut acc = 0.0;
            for (u, wu) in gx.iter().zip(&gw) {
                for (v, wv) in gx.iter().zip(&gw) {
                    let x = [u * s.a / 2.0, (v + 1.0) * s.b / 2.0];
                    acc += wu * wv * modes[i].eval(x, &trap) * modes[j].eval(x, &trap);
                }
            }
            acc *= s.a * s.b / 4.0;
            gram = gram.max((acc - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    out.push(ident("eigenmode_orthonormality", gram, 1e-10));

    let mode = crate::interior::EigenMode::new(s.p, s.q, &trap);
    let residue = mode.map_or(f64::INFINITY, |m| {
        let x = [s.a / 8.0, s.b / 4.0];
        let k = C64::new(m.k + 1e-7, 0.0);
        let g = ModalGreen::new(trap, k, None, 1e-11).eval(x, [0.0, 0.0], Regular::None);
        ((k * k - m.k * m.k) * g + m.eval(x, &trap) * m.eval([0.0, 0.0], &trap)).norm()
    });
    out.push(ident("resonant_pole_residue", residue, 1e-6));
    let gi = &inp.interior;
    out.push(ident("g_in_two_schemes", (gi.g_in_modal - gi.g_in_ewald).norm(), 1e-8));
    out.push(ident("im_g_in_zero", gi.g_in_modal.im.abs().max(gi.g_in_ewald.im.abs()), 1e-10));

    // exterior
    out.push(ident("im_g_ex_is_k0_sigma", (d.g_ex.im - d.k0 * d.sigma).abs(), 1e-10));
    let k = C64::new(d.k0, 0.0);
    let mut defects = Vec::new();
    let mut bounded = true;
    for r in [1e2, 1e3, 1e4] {
        let g = C64::i() / 2.0 * hankel1_0(k * r);
        let dg = green_line_source_dr(r, k);
        bounded &= g.norm() * r.sqrt() < 1.0;
        defects.push(((dg - C64::i() * k * g) * r.sqrt()).norm());
    }
    let decreasing = defects.windows(2).all(|w| w[1] < w[0]);
    out.push(ident(
        "radiation_condition",
        if bounded && decreasing { defects[2] } else { f64::INFINITY },
        1e-4,
    ));

    // asymptotics
    out.push(ident("normalization", (d.normalization() - 1.0).abs(), 1e-12));
    let (e1, e2) = (pole_coefficients(d, 1), pole_coefficients(d, 2));
    out.push(flag(
        "branch_antisymmetry",
        e1.tau10 == -e2.tau10 && e1.tau21 == -e2.tau21 && e1.tau20 == e2.tau20,
    ));
    out.push(ident("im_tau20_two_ways", (e2.tau20.im - im_tau20_from_sigma(d)).abs(), 1e-12));
    let ladder = default_ladder();
    out.push(flag(
        "poles_below_axis",
        ladder.iter().all(|&eps| [e1, e2].iter().all(|e| pole_value(e, eps).im < 0.0)),
    ));

    // junction
    let jx = JunctionFieldX::new(s.omega_minus, s.omega_plus);
    let overlap: Result<Vec<f64>, _> = ladder.iter().map(|&eps| top_overlap_discrepancy(2, eps, d, &jx)).collect();
    out.push(flag("overlap_trend", overlap.is_ok_and(|v| v.windows(2).all(|w| w[1] < w[0]))));
    out.push(ident("junction_tail_constants", junction_tail_error(&jx, &inp.junction), 1e-5));
    out.push(ident("junction_mean_value", junction_mean_value_error(&jx), 1e-6));
    out.push(flag("junction_harmonic", junction_harmonic(&jx)));
    out
}

/// Tail constants read off `eval_x` against the closed forms.
fn junction_tail_error(jx: &JunctionFieldX, k: &JunctionConstants) -> f64 {
    // strip centre, eight widths down
    let mid = jx.consts.q_upper;
    let depth = 8.0 * jx.consts.c_omega * PI;
    let q = jx.eval_x([mid, -depth]).map_or(f64::INFINITY, |v| v + depth);
    let rs = [200.0, 400.0, 800.0, 1600.0];
    let pts: Result<Vec<(f64, f64)>, _> =
        rs.iter().map(|&r| jx.eval_x([k.q_upper, r]).map(|v| (r.ln(), v))).collect();
    let Ok(pts) = pts else { return f64::INFINITY };
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let slope = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    let icpt = my - slope * mx;
    (q - k.q_omega).abs().max((slope - k.c_omega).abs()).max((icpt - k.c_upper).abs())
}

fn junction_mean_value_error(jx: &JunctionFieldX) -> f64 {
    let w = jx.consts.c_omega * PI;
    let c0 = jx.consts.q_upper;
    let mut worst: f64 = 0.0;
    for (c, r) in [([c0, 0.4 * w], 0.3 * w), ([c0 + 0.1 * w, -0.6 * w], 0.35 * w), ([c0 + 2.0 * w, w], 0.9 * w)] {
        let n = 64;
        let mut m = 0.0;
        for j in 0..n {
            let t = 2.0 * PI * j as f64 / n as f64;
            m += jx.eval_x([c[0] + r * t.cos(), c[1] + r * t.sin()]).unwrap_or(f64::NAN);
        }
        m /= n as f64;
        let e = (m - jx.eval_x(c).unwrap_or(f64::NAN)).abs();
        worst = if e.is_nan() { f64::INFINITY } else { worst.max(e) };
    }
    worst
}

/// Five-point Laplacian falls at second order under step halving, or sits
/// below the rounding floor.
fn junction_harmonic(jx: &JunctionFieldX) -> bool {
    let w = jx.consts.c_omega * PI;
    let c0 = jx.consts.q_upper;
    let lap = |c: [f64; 2], s: f64| -> Option<f64> {
        let f = |dx: f64, dy: f64| jx.eval_x([c[0] + dx, c[1] + dy]).ok();
        Some((f(s, 0.0)? + f(-s, 0.0)? + f(0.0, s)? + f(0.0, -s)? - 4.0 * f(0.0, 0.0)?) / (s * s))
    };
    [[c0, 0.3 * w], [c0 + 0.2 * w, -0.3 * w], [c0 + 1.5 * w, 0.8 * w]].iter().all(|&c| {
        match (lap(c, 0.02 * w), lap(c, 0.01 * w)) {
            (Some(a), Some(b)) => b.abs() <= (a.abs() / 3.0).max(1e-6),
            _ => false,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ResonatorSpec;

    fn canonical() -> IdentityInputs {
        IdentityInputs::build(&validate_spec(&ResonatorSpec::canonical(0.01)).unwrap()).unwrap()
    }

    fn failing(r: &[IdentityResult]) -> Vec<&'static str> {
        r.iter().filter(|i| !i.pass).map(|i| i.name).collect()
    }

    #[test]
    fn identities_pass_on_canonical() {
        let r = identity_suite(&canonical());
        assert!(failing(&r).is_empty(), "{r:#?}");
        assert!(r.len() >= 15);
    }

    #[test]
    fn corrupt_g_ex_fails_two() {
        let mut inp = canonical();
        inp.data.g_ex += C64::new(0.0, 0.01);
        assert_eq!(failing(&identity_suite(&inp)), vec!["im_g_ex_is_k0_sigma", "im_tau20_two_ways"]);
    }

    #[test]
    fn consistent_sigma_shift_passes() {
        let mut inp = canonical();
        let ds = 1e-3;
        inp.data.sigma += ds;
        inp.data.g_ex += C64::new(0.0, inp.data.k0 * ds);
        assert!(failing(&identity_suite(&inp)).is_empty());
    }

    #[test]
    fn corrupt_junction_constant_is_named() {
        let mut inp = canonical();
        inp.junction.q_omega += 1e-3;
        assert_eq!(failing(&identity_suite(&inp)), vec!["junction_tail_constants"]);
    }

    #[test]
    fn exact_line_fit() {
        let x = [0.02, 0.01, 0.005, 0.0025];
        let y: Vec<f64> = x.iter().map(|e: &f64| 3.0 * e.powf(1.5)).collect();
        let f = loglog_fit(&x, &y);
        assert!((f.slope - 1.5).abs() < 1e-12 && (f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.half_width < 1e-10 && f.stable());
    }

    #[test]
    fn noisy_fit_is_unstable() {
        let x = [0.02, 0.01, 0.005, 0.0025];
        let y = [1.0, 0.2, 1.5, 0.1];
        assert!(!loglog_fit(&x, &y).stable());
    }

    #[test]
    fn studentized_interval_matches_table() {
        // residuals +-0.1 about a line of slope 0.96; t(0.975, 2) = 4.302653
        let x = [1.0f64, 2.0, 3.0, 4.0].map(f64::exp);
        let y = [1.1f64, 1.9, 3.1, 3.9].map(f64::exp);
        let f = loglog_fit(&x, &y);
        assert!((f.slope - 0.96).abs() < 1e-12);
        let rss: f64 = [1.1, 1.9, 3.1, 3.9]
            .iter()
            .zip([1.0, 2.0, 3.0, 4.0])
            .map(|(y, x)| (y - f.intercept - f.slope * x).powi(2))
            .sum();
        let want = 4.302_652_729_749_464 * (rss / 2.0 / 5.0).sqrt();
        assert!((f.half_width - want).abs() < 1e-9, "{} {want}", f.half_width);
    }

    #[test]
    fn ladder_normalization() {
        assert_eq!(normalize_ladder(&[0.005, 0.02, 0.01]).unwrap(), vec![0.02, 0.01, 0.005]);
        assert!(normalize_ladder(&[0.01, 0.01]).is_err());
        assert!(normalize_ladder(&[0.01, -1.0]).is_err());
    }
}
