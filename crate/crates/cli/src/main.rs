use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use duflat::report::{self, Direction, MetricSpec, ProbeConfig, METRICS, PROFILES};

const SEED_ENV: &str = "DUFLAT_SEED";
const USAGE_ERROR: u8 = 2;

/// Numerical checks for dually flat Randers metrics.
#[derive(Parser)]
#[command(name = "duflat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the dual-flatness, equivalence, navigation and deformation checks.
    Verify(Common),
    /// Navigation data and round-trip residual.
    Navigate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        direction: Option<Dir>,
    },
    /// Deformation lemma cross-checks for one profile.
    Deform {
        #[command(flatten)]
        common: Common,
        /// identity, navigation, quartic-root, constant-kappa (kappa = --mu) or construction
        #[arg(long)]
        profile: Option<String>,
    },
    /// List catalog metrics and deformation profiles.
    List,
}

#[derive(Clone, Copy, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Dir {
    Forward,
    Inverse,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    metric: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// plus or minus (Funk metric)
    #[arg(long)]
    sign: Option<String>,
    /// cc (with csc) or drb (with dfr)
    #[arg(long)]
    as_randers_with: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    /// Defaults to $DUFLAT_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Probes are drawn from |x| < shrink * domain radius.
    #[arg(long)]
    shrink: Option<f64>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    metric: Option<String>,
    mu: Option<f64>,
    lambda: Option<f64>,
    sign: Option<String>,
    as_randers_with: Option<String>,
    dim: Option<usize>,
    samples: Option<usize>,
    seed: Option<u64>,
    tol: Option<f64>,
    shrink: Option<f64>,
    out: Option<PathBuf>,
    direction: Option<Dir>,
    profile: Option<String>,
}

fn read_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

struct Resolved {
    config: ProbeConfig,
    spec: MetricSpec,
    seed_source: String,
    out: Option<PathBuf>,
    file: FileConfig,
}

fn resolve(c: Common) -> Result<Resolved> {
    let file = match &c.config {
        Some(p) => read_config(p)?,
        None => FileConfig::default(),
    };
    let defaults = ProbeConfig::default();
    let (seed, seed_source) = match (c.seed, file.seed) {
        (Some(s), _) => (s, "flag".to_string()),
        (None, Some(s)) => (s, "config".to_string()),
        (None, None) => match std::env::var(SEED_ENV) {
            Ok(v) => {
                let s = v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer"))?;
                (s, format!("env {SEED_ENV}"))
            }
            Err(_) => (defaults.seed, "default".to_string()),
        },
    };
    let Some(metric) = c.metric.or(file.metric.clone()) else {
        bail!("--metric is required (see `duflat list`)");
    };
    let config = ProbeConfig {
        dim: c.dim.or(file.dim).unwrap_or(defaults.dim),
        samples: c.samples.or(file.samples).unwrap_or(defaults.samples),
        seed,
        shrink: c.shrink.or(file.shrink).unwrap_or(defaults.shrink),
        tol: c.tol.or(file.tol).unwrap_or(defaults.tol),
    };
    let spec = MetricSpec {
        metric,
        mu: c.mu.or(file.mu).unwrap_or(0.0),
        lambda: c.lambda.or(file.lambda).unwrap_or(0.0),
        sign: c.sign.or(file.sign.clone()).unwrap_or_else(|| "plus".into()),
        with: c.as_randers_with.or(file.as_randers_with.clone()),
    };
    Ok(Resolved { config, spec, seed_source, out: c.out.or(file.out.clone()), file })
}

fn write_out(path: &Option<PathBuf>, json: &str) -> Result<()> {
    if let Some(p) = path {
        std::fs::write(p, format!("{json}\n")).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    let code = match cli.command {
        Command::List => {
            println!("metrics:");
            for (name, about) in METRICS {
                println!("  {name:<10} {about}");
            }
            println!("profiles:");
            for name in PROFILES {
                println!("  {name}");
            }
            0
        }
        Command::Verify(common) => {
            let r = resolve(common)?;
            let rep = report::run_verify(&r.config, &r.spec, &r.seed_source)?;
            print!("{}", rep.table());
            write_out(&r.out, &rep.to_json())?;
            rep.exit_code()
        }
        Command::Navigate { common, direction } => {
            let r = resolve(common)?;
            let dir = match direction.or(r.file.direction) {
                Some(Dir::Inverse) => Direction::Inverse,
                _ => Direction::Forward,
            };
            let rep = report::run_navigate(&r.config, &r.spec, dir, &r.seed_source)?;
            println!("{} navigation ({:?}), seed {} [{}]", rep.metric, rep.direction, rep.config.seed, rep.config.seed_source);
            for s in &rep.samples {
                println!("  x = {:?}", s.x);
                println!("    h = {:?}", s.h);
                println!("    W = {:?}  |W|_h = {:.6}", s.wind, s.wind_norm);
            }
            println!("max |W|_h over probes: {:.6}", rep.max_wind_norm);
            for c in &rep.checks {
                println!("{:<14} max {:.3e}  mean {:.3e}  {:?}", c.name, c.max_residual, c.mean_residual, c.verdict);
            }
            write_out(&r.out, &serde_json::to_string_pretty(&rep)?)?;
            rep.exit_code()
        }
        Command::Deform { common, profile } => {
            let r = resolve(common)?;
            let Some(profile) = profile.or(r.file.profile.clone()) else {
                bail!("--profile is required: one of {PROFILES:?}");
            };
            let rep = report::run_deform(&r.config, &r.spec, &profile, &r.seed_source)?;
            print!("{}", rep.table());
            write_out(&r.out, &rep.to_json())?;
            rep.exit_code()
        }
    };
    Ok(code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}
