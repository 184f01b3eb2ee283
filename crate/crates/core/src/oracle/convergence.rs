//! Cauchy certificate for a truncation ladder.

use super::assemble::OracleContext;
use super::poles::{muller, pole_at, pole_search, Pole};
use super::{OracleError, Truncation};
use crate::geometry::ValidatedSpec;
use num_complex::Complex64 as C64;
use serde::Serialize;

/// Required ratio between consecutive Cauchy differences.
pub const MIN_DECAY: f64 = 4.0;

/// Differences below this (relative to `|k|`) count as saturated.
pub const SATURATION: f64 = 1e-11;

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub ladder: Vec<Truncation>,
    /// `roots[level][j]`, poles sorted by real part.
    pub roots: Vec<Vec<C64>>,
    /// `max_j |roots[l+1][j] - roots[l][j]|`.
    pub differences: Vec<f64>,
    /// `differences[l] / differences[l+1]`.
    pub decay: Vec<f64>,
    pub certified: bool,
    /// Error bound on the finest level from a geometric tail.
    pub error_estimate: f64,
    /// Poles on the finest level.
    pub poles: Vec<Pole>,
}

impl Certificate {
    pub fn check(&self) -> Result<&Self, OracleError> {
        if self.certified {
            Ok(self)
        } else {
            Err(OracleError::NotConverged(self.differences.clone()))
        }
    }
}

pub fn default_ladder() -> Vec<Truncation> {
    Truncation::ladder().to_vec()
}

/// Counts and locates poles on the coarsest level, where the contour is
/// cheapest, then follows each root up the ladder.
pub fn truncation_convergence(spec: &ValidatedSpec, ladder: &[Truncation]) -> Result<Certificate, OracleError> {
    if ladder.len() < 2 {
        return Err(OracleError::BadTruncation("ladder needs at least two levels".into()));
    }
    let coarse = OracleContext::new(spec, ladder[0])?;
    let res = pole_search(&coarse)?;
    let step = 1e-4 * res.window.radius;
    let mut roots = vec![res.poles.iter().map(|p| p.k).collect::<Vec<_>>()];
    let mut poles = res.poles;
    for tr in &ladder[1..] {
        let ctx = OracleContext::new(spec, *tr)?;
        let scale = ctx.indicator(C64::new(ctx.k0(), 0.0))?.norm().max(f64::MIN_POSITIVE);
        let prev = roots.last().unwrap_or_else(|| unreachable!()).clone();
        let mut level = Vec::with_capacity(prev.len());
        for &z in &prev {
            let f = |k: C64| ctx.indicator(k).map(|d| d / scale);
            level.push(muller(f, z, step, 1e-14)?);
        }
        poles = level.iter().map(|&z| pole_at(&ctx, z, scale)).collect::<Result<_, _>>()?;
        roots.push(level);
    }
    Ok(certify(ladder.to_vec(), roots, poles))
}

fn certify(ladder: Vec<Truncation>, roots: Vec<Vec<C64>>, poles: Vec<Pole>) -> Certificate {
    let differences: Vec<f64> = roots
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
        .collect();
    let kmax = roots.last().map_or(1.0, |r| r.iter().map(|z| z.norm()).fold(1.0, f64::max));
    let floor = SATURATION * kmax;
    let decay: Vec<f64> = differences.windows(2).map(|w| w[0] / w[1]).collect();
    let certified = differences.windows(2).all(|w| w[1] <= floor || w[0] >= MIN_DECAY * w[1]);
    let last = *differences.last().unwrap_or(&0.0);
    let ratio = decay.last().copied().unwrap_or(MIN_DECAY).max(1.0 + 1e-12);
    let error_estimate = if last <= floor { last } else { last / (ratio - 1.0) };
    Certificate { ladder, roots, differences, decay, certified, error_estimate, poles }
}
