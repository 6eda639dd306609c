//! The `grandpot` command line.
//!
//! Every subcommand reads state files, calls the library, and prints one
//! JSON document. Exit codes: 0 on success, 1 when the library rejects the
//! input (domain errors), 2 for usage, I/O and parse errors.

mod statefile;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

pub use statefile::{load_state, LevelEntry, StateFile, StateFileError};

use crate::asymptotics::{second_order_gaps, second_order_sweep, SecondOrderExpansion};
use crate::divergences::{hinge_divergence, relative_entropy, renyi_divergence};
use crate::error::Error;
use crate::free::{fit_gibbs, uniform_eigensubspace_check};
use crate::lorenz::{build_lorenz, equimajorizes};
use crate::lp::find_witness;
use crate::numeric::ExtReal;
use crate::states::{EnergyLevel, QcState, Spectrum, StatePair};
use crate::typed::type_class_count;
use crate::work::{
    build_extraction_channel, conversion_rate, ensure_battery_level, work_gain, work_report,
};

const DEFAULT_EPS: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(name = "grandpot", version, about = "Grand-potential resource theory toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct EpsArg {
    /// Type I error tolerance
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gibbs state, partition function and equilibrium grand potential
    Gibbs { state: PathBuf },
    /// Lorenz curve breakpoints
    Lorenz {
        state: PathBuf,
        /// Write "t,L" rows to this file
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Equimajorization in both directions, plus monotones
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Also report Rényi divergences of this order
        #[arg(long)]
        alpha: Option<f64>,
        /// Also report hinge divergences at this point
        #[arg(long = "a", id = "hinge_a")]
        a_point: Option<f64>,
    },
    /// Stochastic witness matrix for A ≻ B
    Witness { a: PathBuf, b: PathBuf },
    /// Optimal Type II error b_eps
    #[command(name = "b-eps")]
    BEps {
        state: PathBuf,
        #[command(flatten)]
        eps: EpsArg,
    },
    /// Hypothesis-testing relative entropy D_H^eps
    Dh {
        state: PathBuf,
        #[command(flatten)]
        eps: EpsArg,
    },
    /// Extractable eps-work
    #[command(name = "work-gain")]
    WorkGain {
        state: PathBuf,
        #[command(flatten)]
        eps: EpsArg,
    },
    /// Work-cost bounds and full work report
    #[command(name = "work-cost")]
    WorkCost {
        state: PathBuf,
        #[command(flatten)]
        eps: EpsArg,
    },
    /// Work-extraction channel onto a battery
    Channel {
        state: PathBuf,
        #[command(flatten)]
        eps: EpsArg,
        /// Comma-separated battery energies (particle number 0)
        #[arg(long, value_delimiter = ',')]
        battery: Vec<f64>,
        /// Starting battery energy
        #[arg(long, default_value_t = 0.0)]
        energy: f64,
    },
    /// Asymptotic conversion rate A -> B
    Rate { a: PathBuf, b: PathBuf },
    /// Second-order expansion of D_H^eps over an n-sweep
    Asymptotics {
        state: PathBuf,
        #[command(flatten)]
        eps: EpsArg,
        /// Largest number of copies
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Write "n,exact,leading,correction,residual" rows to this file
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Fit (beta, mu) to the probabilities
    #[command(name = "fit-gibbs")]
    FitGibbs {
        state: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Check whether a state can be a free state
    #[command(name = "check-free")]
    CheckFree {
        state: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

/// Failure classes, mapped to exit codes.
#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Domain(#[from] Error),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl From<StateFileError> for CliError {
    fn from(e: StateFileError) -> Self {
        match e {
            StateFileError::Invalid { source, .. } => CliError::Domain(source),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command) {
        Ok(value) => {
            let text = serde_json::to_string_pretty(&value).expect("JSON values serialize");
            let _ = writeln!(out, "{text}");
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

/// JSON for `f64` results that may not be finite.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

fn write_csv<R: Serialize>(path: &Path, header: &[&str], rows: &[R]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Copy counts `1, 2, 5, 10, 20, 50, ...` up to `n_max`, plus `n_max`.
pub fn sweep_grid(n_max: usize) -> Vec<usize> {
    let mut ns = Vec::new();
    let mut decade = 1;
    'outer: loop {
        for m in [1, 2, 5] {
            let n = m * decade;
            if n > n_max {
                break 'outer;
            }
            ns.push(n);
        }
        decade *= 10;
    }
    if ns.last() != Some(&n_max) && n_max > 0 {
        ns.push(n_max);
    }
    ns
}

fn execute(command: Command) -> Result<Value, CliError> {
    match command {
        Command::Gibbs { state } => {
            let s = load_state(&state)?;
            let g = s.equilibrium();
            Ok(json!({
                "log_z": s.log_z(),
                "grand_potential": crate::divergences::equilibrium_grand_potential(&s),
                "gibbs": g.probs(),
                "state": StateFile::from_state(&g),
            }))
        }
        Command::Lorenz { state, csv } => {
            let s = load_state(&state)?;
            let points: Vec<(f64, f64)> = build_lorenz(&s).points().collect();
            if let Some(path) = &csv {
                write_csv(path, &["t", "L"], &points)?;
            }
            Ok(json!({ "points": points }))
        }
        Command::Compare {
            a,
            b,
            alpha,
            a_point,
        } => {
            let (ra, rb) = (load_state(&a)?, load_state(&b)?);
            let mut v = json!({
                "a_to_b": equimajorizes(&ra, &rb)?,
                "b_to_a": equimajorizes(&rb, &ra)?,
                "relative_entropy": [relative_entropy(&ra), relative_entropy(&rb)],
            });
            if let Some(al) = alpha {
                v["renyi"] = json!([renyi_divergence(&ra, al)?, renyi_divergence(&rb, al)?]);
            }
            if let Some(x) = a_point {
                v["hinge"] = json!([hinge_divergence(&ra, x), hinge_divergence(&rb, x)]);
            }
            Ok(v)
        }
        Command::Witness { a, b } => {
            let (ra, rb) = (load_state(&a)?, load_state(&b)?);
            let w = find_witness(&ra, &rb)?;
            Ok(json!({ "exists": w.is_some(), "witness": w }))
        }
        Command::BEps { state, eps } => {
            let s = load_state(&state)?;
            Ok(json!({ "eps": eps.eps, "b_eps": build_lorenz(&s).type2_error(eps.eps)? }))
        }
        Command::Dh { state, eps } => {
            let s = load_state(&state)?;
            Ok(json!({ "eps": eps.eps, "dh": build_lorenz(&s).dh_entropy(eps.eps)? }))
        }
        Command::WorkGain { state, eps } => {
            let s = load_state(&state)?;
            Ok(json!({ "eps": eps.eps, "w_gain": work_gain(&s, eps.eps)? }))
        }
        Command::WorkCost { state, eps } => {
            let s = load_state(&state)?;
            Ok(to_value(&work_report(&s, eps.eps)?))
        }
        Command::Channel {
            state,
            eps,
            battery,
            energy,
        } => channel(&load_state(&state)?, eps.eps, &battery, energy),
        Command::Rate { a, b } => {
            let (ra, rb) = (load_state(&a)?, load_state(&b)?);
            Ok(json!({ "rate": conversion_rate(&ra, &rb)? }))
        }
        Command::Asymptotics { state, eps, n, csv } => {
            let s = load_state(&state)?;
            if n == 0 {
                return Err(Error::Domain("--n must be at least 1".into()).into());
            }
            let rows = second_order_sweep(&s, eps.eps, &sweep_grid(n))?;
            if let Some(path) = &csv {
                let flat: Vec<_> = rows.iter().map(csv_row).collect();
                write_csv(path, &["n", "exact", "leading", "correction", "residual"], &flat)?;
            }
            let gaps = match second_order_gaps(&s, eps.eps, n) {
                Ok(g) => to_value(&g),
                Err(Error::ResourceLimit(_)) => Value::Null,
                Err(e) => return Err(e.into()),
            };
            Ok(json!({
                "eps": eps.eps,
                "exact_available": rows.iter().all(|r| r.exact.is_some()),
                "type_classes": type_class_count(n, s.dim()),
                "rows": rows,
                "gaps": gaps,
            }))
        }
        Command::FitGibbs { state, tol } => {
            let s = load_state(&state)?;
            Ok(json!({ "fit": fit_gibbs(&s, tol)?.map(|f| json!({
                "beta": f.beta, "mu": f.mu, "max_residual": f.max_residual,
            })) }))
        }
        Command::CheckFree { state, tol } => {
            let s = load_state(&state)?;
            let uniform = uniform_eigensubspace_check(&s, tol);
            let (fit, note) = match fit_gibbs(&s, tol) {
                Ok(Some(f)) => (json!({ "beta": f.beta, "mu": f.mu, "max_residual": f.max_residual }), None),
                Ok(None) => (Value::Null, None),
                Err(e) => (Value::Null, Some(e.to_string())),
            };
            Ok(json!({
                "uniform_eigensubspace": uniform,
                "gibbs_fit": fit,
                "fit_note": note,
                "is_equilibrium": s.probs().iter().zip(s.g()).all(|(p, g)| (p - g).abs() <= tol),
            }))
        }
    }
}

#[derive(Serialize)]
struct SweepCsvRow {
    n: usize,
    exact: Option<String>,
    leading: f64,
    correction: f64,
    residual: Option<f64>,
}

fn csv_row(e: &SecondOrderExpansion) -> SweepCsvRow {
    SweepCsvRow {
        n: e.n,
        exact: e.exact.map(|x| x.to_string()),
        leading: e.leading,
        correction: e.correction,
        residual: e.residual,
    }
}

fn channel(s: &QcState, eps: f64, battery: &[f64], energy: f64) -> Result<Value, CliError> {
    let w = match work_gain(s, eps)? {
        ExtReal::Finite(w) => w,
        ExtReal::Infinite => {
            return Err(Error::Domain("extractable work is unbounded (b_eps = 0)".into()).into())
        }
    };
    let mut levels: Vec<EnergyLevel> = battery.iter().map(|&e| EnergyLevel::new(e, 0.0)).collect();
    if !levels.iter().any(|l| (l.energy - energy).abs() <= crate::states::SECTOR_TOL) {
        levels.push(EnergyLevel::new(energy, 0.0));
    }
    let spectrum = Spectrum::new(levels)?;
    let (spectrum, _, inserted) = ensure_battery_level(&spectrum, energy + w, 0.0)?;
    let ch = build_extraction_channel(s, eps, &spectrum, energy)?;
    let start = QcState::pure_level(spectrum.clone(), s.theory(), ch.start_level)?;
    let output = ch.apply(crate::states::compose(s, &start)?.probs());
    Ok(json!({
        "eps": eps,
        "work": ch.work,
        "battery_energies": spectrum.levels().iter().map(|l| l.energy).collect::<Vec<_>>(),
        "inserted_target_level": inserted,
        "start_level": ch.start_level,
        "target_level": ch.target_level,
        "target_weight": num(output[ch.target_level]),
        "output": output,
        "matrix": ch.matrix,
    }))
}
