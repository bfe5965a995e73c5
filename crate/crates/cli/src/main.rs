use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use mfg_core::sweep::{
    compare_oracle, dbeta, find_g_peak, find_t_n, fmt_float, phasemap, run_sweep, with_pool,
    write_sweep_csv, write_table, DbetaConfig, EvalOptions, Method, PhaseMapConfig, Point,
    SweepConfig,
};
use mfg_core::Error;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_VALIDITY: u8 = 3;

#[derive(Parser)]
#[command(name = "mfgstate", version, about = "Reservoir-mediated entanglement of two qubits in the mean-force Gibbs state")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads
    #[arg(long)]
    threads: Option<usize>,
    /// Tolerance override: search tolerance for gpeak/tn, cutoff convergence for oracle runs
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a method over a parameter grid
    Sweep(Common),
    /// Coupling that maximizes the negativity, per temperature
    Gpeak(Common),
    /// Temperature at which the negativity vanishes, per coupling
    Tn(Common),
    /// Sign of the broadening response over a (g, T) grid
    Phasemap(Common),
    /// Reservoir kernel on a frequency grid
    Dbeta(Common),
    /// Zero-width state against exact diagonalization
    CompareOracle(Common),
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Io(_) | Error::Json(_) | Error::InvalidBracket(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn metadata<T: Serialize>(config: &T) -> Vec<(&'static str, String)> {
    let ts = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    vec![
        ("config", serde_json::to_string(config).unwrap_or_default()),
        ("version", env!("CARGO_PKG_VERSION").to_string()),
        ("timestamp", ts.to_string()),
    ]
}

fn opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GPeakConfig {
    method: Method,
    omega_z: f64,
    #[serde(default)]
    epsilon: f64,
    #[serde(default)]
    gamma: f64,
    #[serde(default)]
    lambda: Option<f64>,
    temperature: Vec<f64>,
    bracket: [f64; 2],
    #[serde(default = "gpeak_tol")]
    tol: f64,
    #[serde(default, skip_serializing)]
    threads: Option<usize>,
    #[serde(default)]
    options: EvalOptions,
}

fn gpeak_tol() -> f64 {
    1e-4
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TnConfig {
    method: Method,
    omega_z: f64,
    #[serde(default)]
    epsilon: f64,
    #[serde(default)]
    gamma: f64,
    #[serde(default)]
    lambda: Option<f64>,
    g: Vec<f64>,
    bracket: [f64; 2],
    #[serde(default = "tn_tol")]
    tol: f64,
    #[serde(default, skip_serializing)]
    threads: Option<usize>,
    #[serde(default)]
    options: EvalOptions,
}

fn tn_tol() -> f64 {
    1e-5
}

fn sweep(c: &Common) -> Result<u8, Failure> {
    let mut cfg: SweepConfig = read_config(&c.config)?;
    if c.threads.is_some() {
        cfg.threads = c.threads;
    }
    if let Some(t) = c.tol {
        cfg.options.oracle.convergence_tol = t;
    }
    cfg.validate()?;
    let result = run_sweep(&cfg)?;
    let out_path = c.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from));
    write_sweep_csv(&result, open_out(out_path.as_deref())?)?;
    let failed = result.failed_rows();
    if failed > 0 {
        eprintln!("{failed} of {} rows failed", result.rows.len());
        return Ok(EXIT_NUMERICAL);
    }
    let breaches = result.validity_breaches();
    if breaches > 0 {
        eprintln!(
            "{breaches} rows exceed the validity threshold {}",
            cfg.options.validity_threshold
        );
        if cfg.strict {
            return Ok(EXIT_VALIDITY);
        }
    }
    Ok(0)
}

fn gpeak(c: &Common) -> Result<u8, Failure> {
    let mut cfg: GPeakConfig = read_config(&c.config)?;
    if let Some(t) = c.tol {
        cfg.tol = t;
    }
    let threads = c.threads.or(cfg.threads);
    let rows = with_pool(threads, || {
        cfg.temperature
            .iter()
            .map(|&t| {
                let p = Point {
                    omega_z: cfg.omega_z,
                    epsilon: cfg.epsilon,
                    g: 0.0,
                    gamma: cfg.gamma,
                    temperature: t,
                    lambda: cfg.lambda,
                };
                find_g_peak(cfg.method, &p, (cfg.bracket[0], cfg.bracket[1]), cfg.tol, &cfg.options)
                    .map(|r| (t, r))
            })
            .collect::<Result<Vec<_>, _>>()
    })??;
    let table = rows.iter().map(|(t, r)| {
        vec![fmt_float(*t), fmt_float(r.g), fmt_float(r.negativity), r.interior.to_string()]
    });
    write_table(
        open_out(c.out.as_deref())?,
        &metadata(&cfg),
        &["temperature", "g_peak", "negativity", "interior"],
        table,
    )?;
    Ok(0)
}

fn tn(c: &Common) -> Result<u8, Failure> {
    let mut cfg: TnConfig = read_config(&c.config)?;
    if let Some(t) = c.tol {
        cfg.tol = t;
    }
    let threads = c.threads.or(cfg.threads);
    let rows = with_pool(threads, || {
        cfg.g
            .iter()
            .map(|&g| {
                let p = Point {
                    omega_z: cfg.omega_z,
                    epsilon: cfg.epsilon,
                    g,
                    gamma: cfg.gamma,
                    temperature: 0.0,
                    lambda: cfg.lambda,
                };
                (g, find_t_n(cfg.method, &p, (cfg.bracket[0], cfg.bracket[1]), cfg.tol, &cfg.options))
            })
            .collect::<Vec<_>>()
    })?;
    let failed = rows.iter().filter(|(_, r)| r.is_err()).count();
    let table = rows.iter().map(|(g, r)| match r {
        Ok(t) => vec![fmt_float(*g), fmt_float(*t), String::new()],
        Err(e) => vec![fmt_float(*g), String::new(), e.to_string()],
    });
    write_table(
        open_out(c.out.as_deref())?,
        &metadata(&cfg),
        &["g", "t_n", "error"],
        table,
    )?;
    Ok(if failed > 0 { EXIT_NUMERICAL } else { 0 })
}

fn phase(c: &Common) -> Result<u8, Failure> {
    let mut cfg: PhaseMapConfig = read_config(&c.config)?;
    if c.threads.is_some() {
        cfg.threads = c.threads;
    }
    let map = phasemap(&cfg)?;
    let peak_at = |t: f64| {
        map.g_peak
            .iter()
            .find(|(tt, _)| *tt == t)
            .and_then(|(_, p)| *p)
    };
    let table = map.cells.iter().map(|cell| {
        let peak = peak_at(cell.temperature);
        vec![
            fmt_float(cell.g),
            fmt_float(cell.temperature),
            fmt_float(cell.negativity),
            fmt_float(cell.slope.value),
            fmt_float(cell.slope.half_step_value),
            cell.slope.stable.to_string(),
            opt_float(peak.map(|p| p.g)),
            peak.map(|p| p.interior.to_string()).unwrap_or_default(),
        ]
    });
    write_table(
        open_out(c.out.as_deref())?,
        &metadata(&cfg),
        &[
            "g", "temperature", "negativity", "dn_dgamma2", "dn_dgamma2_half_step", "stable",
            "g_peak", "g_peak_interior",
        ],
        table,
    )?;
    Ok(0)
}

fn kernel(c: &Common) -> Result<u8, Failure> {
    let cfg: DbetaConfig = read_config(&c.config)?;
    let rows = with_pool(c.threads, || dbeta(&cfg))??;
    let table = rows.iter().map(|r| {
        vec![
            fmt_float(r.omega),
            fmt_float(r.d),
            fmt_float(r.d_prime),
            opt_float(r.d_residue),
            opt_float(r.d_prime_residue),
        ]
    });
    write_table(
        open_out(c.out.as_deref())?,
        &metadata(&cfg),
        &["omega", "d", "d_prime", "d_residue", "d_prime_residue"],
        table,
    )?;
    Ok(0)
}

fn oracle(c: &Common) -> Result<u8, Failure> {
    let mut cfg: SweepConfig = read_config(&c.config)?;
    if c.threads.is_some() {
        cfg.threads = c.threads;
    }
    if let Some(t) = c.tol {
        cfg.options.oracle.convergence_tol = t;
    }
    let rows = compare_oracle(&cfg)?;
    let table = rows.iter().map(|r| {
        vec![
            fmt_float(r.point.omega_z),
            fmt_float(r.point.epsilon),
            fmt_float(r.point.g),
            fmt_float(r.point.temperature),
            fmt_float(r.zero_width),
            fmt_float(r.oracle),
            fmt_float((r.zero_width - r.oracle).abs()),
            fmt_float(r.zero_width_purity),
            fmt_float(r.oracle_purity),
            r.n_max.to_string(),
        ]
    });
    write_table(
        open_out(c.out.as_deref())?,
        &metadata(&cfg),
        &[
            "omega_z", "epsilon", "g", "temperature", "negativity_zero_width", "negativity_oracle",
            "abs_diff", "purity_zero_width", "purity_oracle", "n_max",
        ],
        table,
    )?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep(c) => sweep(c),
        Command::Gpeak(c) => gpeak(c),
        Command::Tn(c) => tn(c),
        Command::Phasemap(c) => phase(c),
        Command::Dbeta(c) => kernel(c),
        Command::CompareOracle(c) => oracle(c),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
