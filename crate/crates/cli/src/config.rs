//! Run configuration: a TOML file with `[trap]`, `[channel]` and optional
//! `[sweep]`, `[oracle]`, `[source]`, `[field]`, `[peaks]`, `[junction]`
//! sections. Every default is written back into the resolved config.

use num_complex::Complex64 as C64;
use resonance_core::geometry::{critical_channel_length, eigenvalue, validate_spec, InvalidSpec, ResonatorSpec, ValidatedSpec};
use resonance_core::oracle::{BasisKind, Truncation};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    ParseError { line: usize, key: String, message: String },
    #[error(transparent)]
    ValidationError(#[from] InvalidSpec),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub a: f64,
    pub b: f64,
    pub p: u32,
    pub q: u32,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub omega_minus: f64,
    pub omega_plus: f64,
    pub m: u32,
    pub h: Option<f64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_eps() -> f64 {
    0.01
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_sweep")]
    pub ladder: Vec<f64>,
    /// Probe ladder for the amplitude scalings.
    #[serde(default = "default_probe")]
    pub probe_ladder: Vec<f64>,
}

fn default_sweep() -> Vec<f64> {
    resonance_core::verify::default_ladder()
}

fn default_probe() -> Vec<f64> {
    vec![0.02, 0.01, 0.005]
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { ladder: default_sweep(), probe_ladder: default_probe() }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TruncationEntry {
    pub n_channel: usize,
    pub n_trap: usize,
    pub basis: usize,
    pub n_quad: Option<usize>,
    pub kind: Option<BasisKind>,
}

impl TruncationEntry {
    fn resolve(&self) -> Truncation {
        let mut t = Truncation::new(self.n_channel, self.n_trap, self.basis);
        if let Some(q) = self.n_quad {
            t.n_quad = q;
        }
        if let Some(k) = self.kind {
            t.kind = k;
        }
        t
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "default_truncations")]
    pub ladder: Vec<TruncationEntry>,
}

fn default_truncations() -> Vec<TruncationEntry> {
    Truncation::ladder()
        .iter()
        .map(|t| TruncationEntry { n_channel: t.n_channel, n_trap: t.n_trap, basis: t.basis, n_quad: Some(t.n_quad), kind: Some(t.kind) })
        .collect()
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection { ladder: default_truncations() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    /// Source position; must lie below the channel mouth.
    pub y0: [f64; 2],
    /// Complex amplitude as `[re, im]`.
    #[serde(default = "unit")]
    pub amplitude: [f64; 2],
}

fn unit() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Quasimode,
    Peak,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    #[serde(default = "quasimode")]
    pub kind: FieldKind,
    #[serde(default = "default_x1")]
    pub x1: [f64; 2],
    #[serde(default = "default_x2")]
    pub x2: [f64; 2],
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default = "default_ny")]
    pub ny: usize,
}

fn quasimode() -> FieldKind {
    FieldKind::Quasimode
}
fn default_x1() -> [f64; 2] {
    [-1.0, 1.0]
}
fn default_x2() -> [f64; 2] {
    [-2.0, 1.0]
}
fn default_nx() -> usize {
    41
}
fn default_ny() -> usize {
    61
}

impl Default for FieldSection {
    fn default() -> Self {
        FieldSection { kind: quasimode(), x1: default_x1(), x2: default_x2(), nx: default_nx(), ny: default_ny() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PeaksSection {
    /// Inclusive range of the detuning parameter `t`.
    #[serde(default = "default_t")]
    pub t: [f64; 2],
    #[serde(default = "default_nt")]
    pub n: usize,
}

fn default_t() -> [f64; 2] {
    [-3.0, 3.0]
}
fn default_nt() -> usize {
    25
}

impl Default for PeaksSection {
    fn default() -> Self {
        PeaksSection { t: default_t(), n: default_nt() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JunctionSection {
    /// Sample points in the stretched junction coordinates.
    #[serde(default = "default_samples")]
    pub samples: Vec<[f64; 2]>,
}

fn default_samples() -> Vec<[f64; 2]> {
    let mut s = Vec::new();
    for y in [-4.0, -2.0, -1.0, -0.5, -0.1] {
        s.push([0.0, y]);
    }
    for y in [0.0, 0.5, 1.0, 2.0, 10.0, 100.0] {
        s.push([0.0, y]);
        s.push([2.0, y]);
    }
    s
}

impl Default for JunctionSection {
    fn default() -> Self {
        JunctionSection { samples: default_samples() }
    }
}

/// File layout; optional sections may be absent.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    trap: TrapSection,
    channel: ChannelSection,
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    oracle: OracleSection,
    source: Option<SourceSection>,
    #[serde(default)]
    field: FieldSection,
    #[serde(default)]
    peaks: PeaksSection,
    #[serde(default)]
    junction: JunctionSection,
}

/// Config with every default materialized.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Config {
    pub trap: TrapSection,
    pub channel: ChannelSection,
    pub sweep: SweepSection,
    pub oracle: OracleSection,
    pub source: SourceSection,
    pub field: FieldSection,
    pub peaks: PeaksSection,
    pub junction: JunctionSection,
    /// Keys filled by computation rather than by the file.
    pub derived: Vec<String>,
}

impl Config {
    pub fn spec(&self) -> ResonatorSpec {
        ResonatorSpec {
            a: self.trap.a,
            b: self.trap.b,
            omega_minus: self.channel.omega_minus,
            omega_plus: self.channel.omega_plus,
            h: self.channel.h.unwrap_or(f64::NAN),
            p: self.trap.p,
            q: self.trap.q,
            m: self.channel.m,
            eps: self.channel.eps,
        }
    }

    pub fn validated(&self) -> Result<ValidatedSpec, InvalidSpec> {
        validate_spec(&self.spec())
    }

    pub fn truncations(&self) -> Result<Vec<Truncation>, ConfigError> {
        let t: Vec<Truncation> = self.oracle.ladder.iter().map(TruncationEntry::resolve).collect();
        for tr in &t {
            tr.check().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if t.len() < 2 {
            return Err(ConfigError::Invalid("oracle.ladder needs at least two levels".into()));
        }
        Ok(t)
    }

    pub fn source_amplitude(&self) -> C64 {
        C64::new(self.source.amplitude[0], self.source.amplitude[1])
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn key_of(message: &str) -> String {
    // "unknown field `name`, expected ..." and "missing field `name`"
    message.split('`').nth(1).unwrap_or("").to_string()
}

pub fn parse_config_str(text: &str) -> Result<Config, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::ParseError {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        key: key_of(e.message()),
        message: e.message().to_string(),
    })?;
    let mut derived = Vec::new();
    let mut channel = raw.channel;
    if channel.h.is_none() {
        let k0 = eigenvalue(raw.trap.p, raw.trap.q, raw.trap.a, raw.trap.b).sqrt();
        channel.h = Some(critical_channel_length(k0, channel.m));
        derived.push("channel.h".to_string());
    }
    let source = match raw.source {
        Some(s) => s,
        None => {
            derived.push("source.y0".to_string());
            SourceSection { y0: [0.3, -channel.h.unwrap_or(0.0) - 1.3], amplitude: unit() }
        }
    };
    let cfg = Config {
        trap: raw.trap,
        channel,
        sweep: raw.sweep,
        oracle: raw.oracle,
        source,
        field: raw.field,
        peaks: raw.peaks,
        junction: raw.junction,
        derived,
    };
    cfg.validated()?;
    cfg.truncations()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config_str(&text)
}

/// The canonical geometry as a config file.
pub const CANONICAL: &str = "\
[trap]
a = 2.0
b = 1.0
p = 2
q = 1

[channel]
omega_minus = -0.5
omega_plus = 0.5
m = 1
eps = 0.01
";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config_str(CANONICAL).unwrap();
        assert_eq!(c.sweep.ladder, vec![0.02, 0.01, 0.005, 0.0025]);
        assert_eq!(c.oracle.ladder.len(), 3);
        assert_eq!(c.field.kind, FieldKind::Quasimode);
        assert_eq!(c.derived, vec!["channel.h", "source.y0"]);
    }

    #[test]
    fn derived_h_is_critical() {
        let c = parse_config_str(CANONICAL).unwrap();
        let h = c.channel.h.unwrap();
        assert!((h - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let v = c.validated().unwrap();
        assert!((h - std::f64::consts::PI / v.k0).abs() < 1e-15);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = CANONICAL.replace("m = 1", "m = 1\nchannelwidth = 0.1");
        match parse_config_str(&text) {
            Err(ConfigError::ParseError { key, line, .. }) => {
                assert_eq!(key, "channelwidth");
                assert_eq!(line, 11);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_geometry_forwarded() {
        let text = CANONICAL.replace("eps = 0.01", "eps = 0.5");
        assert!(matches!(parse_config_str(&text), Err(ConfigError::ValidationError(_))));
    }

    #[test]
    fn explicit_h_kept() {
        let text = CANONICAL.replace("m = 1", "m = 1\nh = 0.7071067811865476");
        let c = parse_config_str(&text).unwrap();
        assert_eq!(c.derived, vec!["source.y0"]);
    }
}
