//! Command dispatch.

use crate::config::{Config, FieldKind};
use crate::output::{fmt_f64, sha256_hex, to_json, RunManifest, Writer};
use anyhow::{bail, Context, Result};
use num_complex::Complex64 as C64;
use resonance_core::asymptotics::{
    c_f, coupled_mode_poles, peak_frequency, peak_solution_field, pole_coefficients, pole_value, quasimode_field,
    AsymptoticsError, FieldValue, PoleExpansion,
};
use resonance_core::exterior::SourceTerm;
use resonance_core::junction::JunctionFieldX;
use resonance_core::verify::{amplitude_scaling_probe, identity_suite, oracle_at, spectral_data, sweep_compare, IdentityInputs};
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Poles,
    Sweep,
    Field,
    Peaks,
    Identities,
    Junction,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Poles => "poles",
            Command::Sweep => "sweep",
            Command::Field => "field",
            Command::Peaks => "peaks",
            Command::Identities => "identities",
            Command::Junction => "junction",
        }
    }
}

/// Flags that override the config file.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Overrides {
    pub eps: Option<f64>,
    pub branch: Option<u32>,
    pub t: Option<f64>,
}

#[derive(Debug)]
pub struct Outcome {
    /// False when a requested identity failed.
    pub ok: bool,
    pub manifest: RunManifest,
    pub out: PathBuf,
}

pub fn run(cmd: Command, mut cfg: Config, ov: &Overrides, out: PathBuf) -> Result<Outcome> {
    let start = Instant::now();
    if let Some(e) = ov.eps {
        cfg.channel.eps = e;
    }
    if let Some(b) = ov.branch {
        if b != 1 && b != 2 {
            bail!("branch must be 1 or 2, got {b}");
        }
    }
    cfg.validated().context("validating the geometry")?;
    let mut w = Writer::new(&out).with_context(|| format!("creating {}", out.display()))?;
    let ok = match cmd {
        Command::Poles => poles(&cfg, &mut w)?,
        Command::Sweep => sweep(&cfg, ov, &mut w)?,
        Command::Field => field(&cfg, ov, &mut w)?,
        Command::Peaks => peaks(&cfg, ov, &mut w)?,
        Command::Identities => identities(&cfg, &mut w)?,
        Command::Junction => junction(&cfg, &mut w)?,
    };
    let config = serde_json::from_str(&to_json(&cfg)?)?;
    let inputs = format!("{}\n{}\n{}", cmd.name(), to_json(&cfg)?, to_json(ov)?);
    let manifest = RunManifest {
        schema: 1,
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cmd.name().to_string(),
        config,
        input_hash: sha256_hex(inputs.as_bytes()),
        outputs: std::mem::take(&mut w.entries),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    std::fs::write(w.dir().join("manifest.json"), to_json(&manifest)?)?;
    Ok(Outcome { ok, manifest, out })
}

fn branches(ov: &Overrides) -> Vec<u32> {
    ov.branch.map_or(vec![1, 2], |b| vec![b])
}

fn expansion_json(e: &PoleExpansion) -> serde_json::Value {
    json!({ "branch": e.branch, "tau10": e.tau10, "tau21": e.tau21, "tau20": [e.tau20.re, e.tau20.im] })
}

fn poles(cfg: &Config, w: &mut Writer) -> Result<bool> {
    let spec = cfg.validated()?;
    let eps = spec.spec.eps;
    let (d, _) = spectral_data(&spec)?;
    let exps = [pole_coefficients(&d, 1), pole_coefficients(&d, 2)];
    let health = oracle_at(&spec, &cfg.truncations()?)?;
    let mut csv = String::from("kind,branch,re,im\n");
    for e in &exps {
        let z = pole_value(e, eps);
        csv += &format!("asymptotic,{},{},{}\n", e.branch, fmt_f64(z.re), fmt_f64(z.im));
    }
    for (i, z) in health.poles.iter().enumerate() {
        csv += &format!("oracle,{},{},{}\n", i + 1, fmt_f64(z.re), fmt_f64(z.im));
    }
    w.write("poles.csv", &csv)?;
    let coupled = coupled_mode_poles(&d, eps);
    let summary = json!({
        "schema": 1,
        "eps": eps,
        "k0": d.k0,
        "g_in": d.g_in,
        "g_ex": [d.g_ex.re, d.g_ex.im],
        "sigma": d.sigma,
        "coefficients": exps.iter().map(expansion_json).collect::<Vec<_>>(),
        "coupled_mode": coupled.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "oracle": health,
    });
    w.write("poles.json", &to_json(&summary)?)?;
    Ok(true)
}

fn source(cfg: &Config) -> Result<SourceTerm> {
    let h = cfg.channel.h.unwrap_or(f64::NAN);
    Ok(SourceTerm::new(cfg.source.y0, cfg.source_amplitude(), h)?)
}

fn sweep(cfg: &Config, ov: &Overrides, w: &mut Writer) -> Result<bool> {
    let spec = cfg.validated()?;
    let trunc = cfg.truncations()?;
    let report = sweep_compare(&spec, &cfg.sweep.ladder, &trunc)?;
    let mut csv = String::from("eps,branch,re_oracle,im_oracle,re_asym,im_asym,residual\n");
    for r in &report.rows {
        csv += &format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f64(r.eps),
            r.branch,
            fmt_f64(r.oracle.re),
            fmt_f64(r.oracle.im),
            fmt_f64(r.asym.re),
            fmt_f64(r.asym.im),
            fmt_f64(r.residual)
        );
    }
    w.write("sweep.csv", &csv)?;
    let branch = ov.branch.unwrap_or(2);
    let probe = amplitude_scaling_probe(&spec, &cfg.sweep.probe_ladder, &source(cfg)?, branch, &trunc)?;
    let all_pass = report.identities.iter().all(|i| i.pass);
    let summary = json!({
        "schema": 1,
        "ladder": report.ladder,
        "fits": report.fits,
        "fits_stable": report.check_fits().is_ok(),
        "shapes": report.shapes,
        "health": report.health,
        "rows": report.rows,
        "probe": probe,
        "identities_pass": all_pass,
        "identities": report.identities,
    });
    w.write("sweep.json", &to_json(&summary)?)?;
    Ok(all_pass)
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn field(cfg: &Config, ov: &Overrides, w: &mut Writer) -> Result<bool> {
    let spec = cfg.validated()?;
    let eps = spec.spec.eps;
    let (d, _) = spectral_data(&spec)?;
    let jx = JunctionFieldX::new(spec.spec.omega_minus, spec.spec.omega_plus);
    let n = ov.branch.unwrap_or(2);
    let f = &cfg.field;
    let t = ov.t.unwrap_or(pole_coefficients(&d, n).tau20.re);
    let src = source(cfg)?;
    let mut text = String::from("# x1 x2 re im region flag\n");
    for &x2 in &grid(f.x2[0], f.x2[1], f.ny) {
        for &x1 in &grid(f.x1[0], f.x1[1], f.nx) {
            let x = [x1, x2];
            let v: Result<FieldValue, AsymptoticsError> = match f.kind {
                FieldKind::Quasimode => quasimode_field(n, x, eps, &d, &jx),
                FieldKind::Peak => peak_solution_field(n, t, x, eps, &d, &src, &jx),
            };
            let v = match v {
                Ok(v) => v,
                Err(AsymptoticsError::OutsideDomain(..)) => continue,
                Err(e) => return Err(e).with_context(|| format!("field at ({x1}, {x2})")),
            };
            let flag = if v.in_overlap() { "overlap" } else { "single" };
            for (tag, z) in &v.candidates {
                if z.re.is_finite() && z.im.is_finite() {
                    text += &format!("{} {} {} {} {} {}\n", fmt_f64(x1), fmt_f64(x2), fmt_f64(z.re), fmt_f64(z.im), tag.name(), flag);
                }
            }
        }
    }
    w.write("field.txt", &text)?;
    Ok(true)
}

fn peaks(cfg: &Config, ov: &Overrides, w: &mut Writer) -> Result<bool> {
    let spec = cfg.validated()?;
    let eps = spec.spec.eps;
    let (d, _) = spectral_data(&spec)?;
    let src = source(cfg)?;
    let ts = ov.t.map_or_else(|| grid(cfg.peaks.t[0], cfg.peaks.t[1], cfg.peaks.n), |t| vec![t]);
    let mut csv = String::from("t,branch,k_peak,re_cf,im_cf\n");
    for n in branches(ov) {
        let e = pole_coefficients(&d, n);
        for &t in &ts {
            let cf: C64 = c_f(n, t, &d, &src)?;
            csv += &format!("{},{},{},{},{}\n", fmt_f64(t), n, fmt_f64(peak_frequency(&e, t, eps)), fmt_f64(cf.re), fmt_f64(cf.im));
        }
    }
    w.write("peaks.csv", &csv)?;
    Ok(true)
}

fn identities(cfg: &Config, w: &mut Writer) -> Result<bool> {
    let spec = cfg.validated()?;
    let r = identity_suite(&IdentityInputs::build(&spec)?);
    let all_pass = r.iter().all(|i| i.pass);
    w.write("identities.json", &to_json(&json!({ "schema": 1, "all_pass": all_pass, "identities": r }))?)?;
    Ok(all_pass)
}

fn junction(cfg: &Config, w: &mut Writer) -> Result<bool> {
    let jx = JunctionFieldX::new(cfg.channel.omega_minus, cfg.channel.omega_plus);
    let mut csv = String::from("xi1,xi2,x\n");
    for &xi in &cfg.junction.samples {
        let v = jx.eval_x(xi).with_context(|| format!("X at ({}, {})", xi[0], xi[1]))?;
        csv += &format!("{},{},{}\n", fmt_f64(xi[0]), fmt_f64(xi[1]), fmt_f64(v));
    }
    w.write("junction.csv", &csv)?;
    w.write("junction.json", &to_json(&json!({ "schema": 1, "constants": jx.consts }))?)?;
    Ok(true)
}
