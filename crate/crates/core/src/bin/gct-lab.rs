use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use gct_lab::harness::{emit_json, run, ExperimentConfig, Mode};
use gct_lab::model::SpikePrior;
use gct_lab::GctError;

const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "gct-lab", version, about = "Generalized covariance thresholding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal and best soft-threshold transition over a (gamma, beta) grid.
    TheoryCurve(Flags),
    /// Predicted regime, outlier and overlap over a (gamma, beta, lambda, kernel) grid.
    PhaseDiagram(Flags),
    /// Monte Carlo eigenvalues, overlaps and detection.
    Simulate(Flags),
    /// Monte Carlo with support recovery scores.
    Recover(Flags),
    /// Resolvent quadratic forms against their deterministic equivalents.
    Diagnose(Flags),
}

/// Lists take `a,b,c` or an inclusive range `start:stop:step`.
#[derive(Args, Clone, Debug)]
struct Flags {
    /// JSON config; its fields override the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output (default: config `output`, else stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary output.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, env = "GCT_LAB_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    /// Kernel (repeatable): `soft:t=2`, `hard:t=1.5`, `hermite:a1=..,a3=..`,
    /// `identity`, `pca`, `adaptive`, `soft:t=star`.
    #[arg(long)]
    kernel: Vec<String>,
    #[arg(long)]
    prior: Option<SpikePrior>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long = "seed")]
    base_seed: Option<u64>,
    #[arg(long)]
    eps_exponent: Option<f64>,
    #[arg(long)]
    detect_eps: Option<f64>,
    #[arg(long)]
    t_grid: Option<String>,
    #[arg(long)]
    adaptive_grid: Option<String>,
    #[arg(long)]
    z_offset: Option<f64>,
    #[arg(long)]
    record_runtime: bool,
}

fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if h.is_nan() || h <= 0.0 || b < a {
            return Err(format!("bad range '{s}'"));
        }
        let k = ((b - a) / h + 1e-9).floor() as usize;
        return Ok((0..=k).map(|i| a + i as f64 * h).collect());
    }
    s.split(',').map(num).collect()
}

fn parse_counts(s: &str) -> Result<Vec<usize>, String> {
    parse_floats(s)?
        .into_iter()
        .map(|x| {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(format!("'{x}' is not a count"))
            }
        })
        .collect()
}

fn mode_of(cmd: &Command) -> (Mode, &Flags) {
    match cmd {
        Command::TheoryCurve(f) => (Mode::TheoryCurve, f),
        Command::PhaseDiagram(f) => (Mode::PhaseDiagram, f),
        Command::Simulate(f) => (Mode::Simulate, f),
        Command::Recover(f) => (Mode::Recover, f),
        Command::Diagnose(f) => (Mode::Diagnose, f),
    }
}

/// Applies the flags to the defaults of `mode`.
fn from_flags(mode: Mode, f: &Flags) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig {
        mode,
        ..Default::default()
    };
    if let Some(s) = &f.n {
        cfg.n = parse_counts(s)?;
    }
    if let Some(s) = &f.gamma {
        cfg.gamma = parse_floats(s)?;
        cfg.p.clear();
    }
    if let Some(s) = &f.p {
        cfg.p = parse_counts(s)?;
    }
    if let Some(s) = &f.beta {
        cfg.beta = parse_floats(s)?;
        cfg.m.clear();
    }
    if let Some(s) = &f.m {
        cfg.m = parse_counts(s)?;
    }
    if let Some(s) = &f.lambda {
        cfg.lambda = parse_floats(s)?;
    }
    if !f.kernel.is_empty() {
        cfg.kernel = f.kernel.clone();
    }
    if let Some(x) = f.prior {
        cfg.prior = x;
    }
    if let Some(x) = f.trials {
        cfg.trials = x;
    }
    if let Some(x) = f.base_seed {
        cfg.base_seed = x;
    }
    if let Some(x) = f.eps_exponent {
        cfg.eps_exponent = x;
    }
    if f.detect_eps.is_some() {
        cfg.detect_eps = f.detect_eps;
    }
    if let Some(s) = &f.t_grid {
        cfg.t_grid = parse_floats(s)?;
    }
    if let Some(s) = &f.adaptive_grid {
        cfg.adaptive_grid = parse_floats(s)?;
    }
    if let Some(x) = f.z_offset {
        cfg.z_offset = x;
    }
    cfg.record_runtime |= f.record_runtime;
    Ok(cfg)
}

/// Overlays the fields present in `file` on `base`.
fn merge(base: ExperimentConfig, file: Value) -> Result<ExperimentConfig, String> {
    let Value::Object(over) = file else {
        return Err("config must be a JSON object".into());
    };
    let Value::Object(mut merged) = serde_json::to_value(&base).map_err(|e| e.to_string())? else {
        unreachable!("config serializes to an object")
    };
    // a dimension given one way in the file replaces the other form
    for (a, b) in [("p", "gamma"), ("gamma", "p"), ("m", "beta"), ("beta", "m")] {
        if over.contains_key(a) && !over.contains_key(b) {
            merged.insert(b.into(), Value::Array(vec![]));
        }
    }
    for (k, v) in over {
        merged.insert(k, v);
    }
    ExperimentConfig::from_json(&Value::Object(merged).to_string()).map_err(|e| e.to_string())
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("gct-lab: config error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, flags) = mode_of(&cli.command);
    let mut cfg = match from_flags(mode, flags) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if let Some(path) = &flags.config {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("gct-lab: cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_IO);
            }
        };
        let value: Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => return config_error(format!("{}: {e}", path.display())),
        };
        cfg = match merge(cfg, value) {
            Ok(c) => c,
            Err(e) => return config_error(format!("{}: {e}", path.display())),
        };
        if cfg.mode != mode {
            return config_error(format!("config mode '{}' does not match subcommand '{mode}'", cfg.mode));
        }
    }

    let out = match run(&cfg, flags.threads) {
        Ok(o) => o,
        Err(GctError::Io { path, source }) => {
            eprintln!("gct-lab: i/o error on {path}: {source}");
            return ExitCode::from(EXIT_IO);
        }
        Err(e) => return config_error(e),
    };

    let csv_path = flags.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from));
    let written = match &csv_path {
        Some(p) => out.table.emit_csv(p),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            out.table
                .write_csv(&mut lock)
                .and_then(|_| lock.flush())
                .map_err(|source| GctError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    };
    let summary_path = flags.summary.clone().or_else(|| cfg.summary.as_ref().map(PathBuf::from));
    let written = written.and_then(|_| match &summary_path {
        Some(p) => emit_json(&out.summary, p),
        None => Ok(()),
    });
    if let Err(e) = written {
        eprintln!("gct-lab: {e}");
        return ExitCode::from(EXIT_IO);
    }

    let failed = out.failed();
    if let Some(p) = &csv_path {
        eprintln!("gct-lab: {} rows ({failed} failed) -> {}", out.table.len(), p.display());
    }
    if failed > 0 {
        eprintln!("gct-lab: {failed} rows recorded an error");
        return ExitCode::from(EXIT_PARTIAL);
    }
    ExitCode::SUCCESS
}
