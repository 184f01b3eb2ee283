use clap::Parser;
use resonance_cli::config::{parse_config, parse_config_str, CANONICAL};
use resonance_cli::run::{run, Command, Overrides};
use std::path::PathBuf;
use std::process::ExitCode;

/// Two-pole resonance asymptotics and the mode-matching oracle.
#[derive(Parser, Debug)]
#[command(name = "resonance", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML config; the canonical geometry when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
    branch: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let cfg = match &cli.config {
        Some(p) => parse_config(p),
        None => parse_config_str(CANONICAL),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let ov = Overrides { eps: cli.eps, branch: cli.branch, t: cli.t };
    match run(cli.command, cfg, &ov, cli.out) {
        Ok(o) => {
            for f in &o.manifest.outputs {
                println!("{}", o.out.join(&f.path).display());
            }
            if o.ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("identity check failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
