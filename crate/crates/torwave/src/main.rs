//! Command-line surface: reproducible experiments with machine-readable
//! output. Exit codes: 0 success, 1 failed acceptance assertion,
//! 2 validation error, 3 numeric failure.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use torwave::curve::{parse_curve, validate_curve, CurveDef, CurveError};
use torwave::experiments::{
    concentration_scan, parse_trial_csv, repulsion_probe, run_mc, summarize, summarize_counts,
    universality_gap, variance_leading_term, ExperimentError,
};
use torwave::lattice::enumerate_lattice_points;
use torwave::wave::{sample_coefficients, Ensemble, WaveError};
use torwave::zeros::{count_zeros, GridConfig, ZerosError};
use torwave::DerivOrder;

#[derive(Parser)]
#[command(
    name = "torwave",
    version,
    about = "Arithmetic random waves on the flat torus: lattice sets, nodal \
             intersection counting, and Monte Carlo experiments"
)]
struct Cli {
    /// Worker threads for parallel commands (default: rayon's choice)
    #[arg(long, global = true, env = "TORWAVE_WORKERS")]
    workers: Option<usize>,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct GridArgs {
    /// Grid points per 1/λ
    #[arg(long, default_value_t = 50)]
    points_per_lambda: u32,
    /// Root bracket tolerance
    #[arg(long, default_value_t = 1e-12)]
    bisection_tol: f64,
    /// Near-tangency threshold η
    #[arg(long, default_value_t = 1e-4)]
    eta: f64,
    /// Certify cells zero-free / single-crossing
    #[arg(long, default_value_t = false)]
    certified: bool,
}

impl GridArgs {
    fn config(&self) -> GridConfig {
        GridConfig {
            points_per_lambda: self.points_per_lambda,
            bisection_tol: self.bisection_tol,
            tangency_threshold: self.eta,
            certified_mode: self.certified,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the lattice set of μ₁² + μ₂² = m
    Lattice {
        #[arg(long)]
        m: u64,
        /// json | csv
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Grid-validate a curve definition
    CurveValidate {
        /// circle:cx,cy | oval:A,B,cx,cy
        #[arg(long)]
        curve: String,
        #[arg(long, default_value_t = 2048)]
        grid: usize,
    },
    /// Count nodal intersections of one sampled wave
    Count {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        curve: String,
        #[arg(long, default_value = "gaussian")]
        ensemble: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Also write the coefficient dump here
        #[arg(long)]
        dump_sample: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Monte Carlo counting batch; emits the trial CSV
    Mc {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        curve: String,
        #[arg(long, default_value = "gaussian")]
        ensemble: String,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write a summary report (JSON) here
        #[arg(long)]
        report: Option<PathBuf>,
        /// ε values for the report's tail table
        #[arg(long, default_value = "0.1,0.2")]
        eps_list: String,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Summary report with tail table (JSON)
    Tail {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        curve: String,
        #[arg(long, default_value = "gaussian")]
        ensemble: String,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "0.1,0.2")]
        eps_list: String,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Simultaneous-smallness probability at one curve point
    Repulsion {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        curve: String,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value = "gaussian")]
        ensemble: String,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Observed large-sieve constants over samples
    Sieve {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        curve: String,
        #[arg(long, default_value = "gaussian")]
        ensemble: String,
        /// Derivative order, 1 or 2
        #[arg(long, default_value_t = 1)]
        d: u8,
        #[arg(long, default_value_t = 1e-3)]
        separation: f64,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Leading variance coefficient by tensor quadrature
    VarianceTerm {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        curve: String,
        #[arg(long, default_value_t = 96)]
        quad_points: usize,
    },
    /// Cross-ensemble gap of the count statistics
    Universality {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        curve: String,
        #[arg(long, default_value = "gaussian")]
        ensemble_a: String,
        #[arg(long, default_value = "rademacher")]
        ensemble_b: String,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Empirical tails across a list of eigenvalues
    Scan {
        /// Comma-separated m values, e.g. 5,65,1105,32045
        #[arg(long)]
        m_list: String,
        #[arg(long)]
        curve: String,
        #[arg(long, default_value = "gaussian")]
        ensemble: String,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// json | csv
        #[arg(long, default_value = "json")]
        format: String,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Re-derive statistics from an emitted CSV (or re-echo a JSON file)
    Replay {
        #[arg(long)]
        file: PathBuf,
        /// Required for CSV replays: the m the trials were drawn at
        #[arg(long)]
        m: Option<u64>,
        #[arg(long, default_value = "0.1,0.2")]
        eps_list: String,
    },
    /// Run a named acceptance preset (or "all"); exits 1 on failure
    Accept {
        name: String,
        /// List registered preset names and exit
        #[arg(long, default_value_t = false)]
        list: bool,
    },
}

enum CliError {
    Validation(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<CurveError> for CliError {
    fn from(e: CurveError) -> Self {
        match e {
            CurveError::ReparamFailed { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<WaveError> for CliError {
    fn from(e: WaveError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ZerosError> for CliError {
    fn from(e: ZerosError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Trial { .. } | ExperimentError::ImplausibleCount { .. } => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numeric(format!("io error: {e}"))
    }
}

fn main() {
    let cli = Cli::parse();
    let workers = cli.workers;
    let out = cli.out.clone();
    let body = move || dispatch(cli.command, out);
    let result = match workers {
        Some(w) if w > 0 => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(body),
            Err(e) => Err(CliError::Validation(format!("worker pool: {e}"))),
        },
        Some(_) => Err(CliError::Validation("--workers must be positive".into())),
        None => body(),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("torwave: {}", e.message());
            std::process::exit(e.code());
        }
    }
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => println!("{}", content.trim_end_matches('\n')),
    }
    Ok(())
}

fn parse_ensemble(s: &str) -> Result<Ensemble, CliError> {
    Ok(Ensemble::from_str(s)?)
}

fn parse_curve_arc(s: &str) -> Result<Arc<CurveDef>, CliError> {
    Ok(Arc::new(parse_curve(s)?))
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Validation(format!("bad {what} list {s:?}: {e}")))
}

fn parse_u64_list(s: &str, what: &str) -> Result<Vec<u64>, CliError> {
    s.split(',')
        .map(|p| p.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Validation(format!("bad {what} list {s:?}: {e}")))
}

fn dispatch(command: Command, out: Option<PathBuf>) -> Result<i32, CliError> {
    match command {
        Command::Lattice { m, format } => {
            if m == 0 {
                return Err(CliError::Validation("m must be at least 1".into()));
            }
            let spec = enumerate_lattice_points(m);
            match format.as_str() {
                "json" => emit(&out, &spec.to_json())?,
                "csv" => {
                    let mut s = String::from("mu1,mu2\n");
                    for p in &spec.points {
                        s.push_str(&format!("{},{}\n", p.mu1, p.mu2));
                    }
                    emit(&out, &s)?;
                }
                other => {
                    return Err(CliError::Validation(format!(
                        "unknown format {other:?} (json | csv)"
                    )))
                }
            }
            Ok(0)
        }
        Command::CurveValidate { curve, grid } => {
            let c = parse_curve(&curve)?;
            let report = validate_curve(&c, grid)?;
            emit(
                &out,
                &serde_json::to_string(&report).expect("serializing report"),
            )?;
            Ok(0)
        }
        Command::Count {
            m,
            curve,
            ensemble,
            seed,
            trial,
            dump_sample,
            grid,
        } => {
            let spec = Arc::new(enumerate_lattice_points(m));
            let cv = parse_curve_arc(&curve)?;
            let sample = sample_coefficients(&spec, parse_ensemble(&ensemble)?, seed, trial)?;
            if let Some(path) = dump_sample {
                std::fs::write(path, sample.to_json())?;
            }
            let rw = sample.restrict(cv);
            let res = count_zeros(&rw, &grid.config())?;
            emit(&out, &res.to_json())?;
            Ok(0)
        }
        Command::Mc {
            m,
            curve,
            ensemble,
            trials,
            seed,
            report,
            eps_list,
            grid,
        } => {
            let spec = Arc::new(enumerate_lattice_points(m));
            let cv = parse_curve_arc(&curve)?;
            let batch = run_mc(
                &spec,
                &cv,
                parse_ensemble(&ensemble)?,
                trials,
                seed,
                &grid.config(),
            )?;
            if let Some(path) = report {
                let eps = parse_f64_list(&eps_list, "eps")?;
                let rep = summarize(&batch, &eps)?;
                std::fs::write(path, rep.to_json())?;
            }
            emit(&out, &batch.to_csv())?;
            Ok(0)
        }
        Command::Tail {
            m,
            curve,
            ensemble,
            trials,
            seed,
            eps_list,
            grid,
        } => {
            let spec = Arc::new(enumerate_lattice_points(m));
            let cv = parse_curve_arc(&curve)?;
            let batch = run_mc(
                &spec,
                &cv,
                parse_ensemble(&ensemble)?,
                trials,
                seed,
                &grid.config(),
            )?;
            let rep = summarize(&batch, &parse_f64_list(&eps_list, "eps")?)?;
            emit(&out, &rep.to_json())?;
            Ok(0)
        }
        Command::Repulsion {
            m,
            curve,
            t,
            ensemble,
            alpha,
            beta,
            trials,
            seed,
        } => {
            let spec = Arc::new(enumerate_lattice_points(m));
            let cv = parse_curve_arc(&curve)?;
            let est = repulsion_probe(
                &spec,
                &cv,
                t,
                parse_ensemble(&ensemble)?,
                alpha,
                beta,
                trials,
                seed,
            )?;
            emit(
                &out,
                &serde_json::to_string(&est).expect("serializing estimate"),
            )?;
            Ok(0)
        }
        Command::Sieve {
            m,
            curve,
            ensemble,
            d,
            separation,
            samples,
            seed,
        } => {
            let order = match d {
                1 => DerivOrder::First,
                2 => DerivOrder::Second,
                other => {
                    return Err(CliError::Validation(format!(
                        "sieve order must be 1 or 2, got {other}"
                    )))
                }
            };
            let spec = Arc::new(enumerate_lattice_points(m));
            let cv = parse_curve_arc(&curve)?;
            let law = parse_ensemble(&ensemble)?;
            let mut max_ratio = 0.0f64;
            let mut sum = 0.0;
            for i in 0..samples {
                let rw = sample_coefficients(&spec, law, seed, i)?.restrict(Arc::clone(&cv));
                let r = torwave::zeros::large_sieve_check(&rw, separation, order)?;
                max_ratio = max_ratio.max(r);
                sum += r;
            }
            #[derive(serde::Serialize)]
            struct SieveOut {
                m: u64,
                d: u8,
                separation: f64,
                samples: u64,
                max_ratio: f64,
                mean_ratio: f64,
            }
            emit(
                &out,
                &serde_json::to_string(&SieveOut {
                    m,
                    d,
                    separation,
                    samples,
                    max_ratio,
                    mean_ratio: sum / samples as f64,
                })
                .expect("serializing sieve summary"),
            )?;
            Ok(0)
        }
        Command::VarianceTerm {
            m,
            curve,
            quad_points,
        } => {
            let spec = enumerate_lattice_points(m);
            let cv = parse_curve(&curve)?;
            let lt = variance_leading_term(&spec, &cv, quad_points)?;
            emit(&out, &serde_json::to_string(&lt).expect("serializing term"))?;
            Ok(0)
        }
        Command::Universality {
            m,
            curve,
            ensemble_a,
            ensemble_b,
            trials,
            seed,
            grid,
        } => {
            let spec = Arc::new(enumerate_lattice_points(m));
            let cv = parse_curve_arc(&curve)?;
            let rep = universality_gap(
                &spec,
                &cv,
                (parse_ensemble(&ensemble_a)?, parse_ensemble(&ensemble_b)?),
                trials,
                seed,
                &grid.config(),
            )?;
            emit(&out, &serde_json::to_string(&rep).expect("serializing gap"))?;
            Ok(0)
        }
        Command::Scan {
            m_list,
            curve,
            ensemble,
            eps,
            trials,
            seed,
            format,
            grid,
        } => {
            let ms = parse_u64_list(&m_list, "m")?;
            let cv = parse_curve_arc(&curve)?;
            let table = concentration_scan(
                &ms,
                &cv,
                parse_ensemble(&ensemble)?,
                eps,
                trials,
                seed,
                &grid.config(),
            )?;
            match format.as_str() {
                "json" => emit(&out, &table.to_json())?,
                "csv" => {
                    let mut s = String::from(
                        "m,N,lambda,eps,trials,tail,tail_se,wilson_low,wilson_high,markov,eps_log_flag\n",
                    );
                    for r in &table.rows {
                        s.push_str(&format!(
                            "{},{},{},{},{},{},{},{},{},{},{}\n",
                            r.m,
                            r.n_lattice,
                            r.lambda,
                            r.eps,
                            r.trials,
                            r.tail,
                            r.tail_se,
                            r.wilson_low,
                            r.wilson_high,
                            r.markov,
                            r.eps_log_flag
                        ));
                    }
                    emit(&out, &s)?;
                }
                other => {
                    return Err(CliError::Validation(format!(
                        "unknown format {other:?} (json | csv)"
                    )))
                }
            }
            Ok(0)
        }
        Command::Replay { file, m, eps_list } => {
            let text = std::fs::read_to_string(&file)?;
            if text.starts_with("trial,z,suspects,seed") {
                let m = m.ok_or_else(|| {
                    CliError::Validation("CSV replay needs --m to rebuild the spectrum".into())
                })?;
                let (z, suspects) = parse_trial_csv(&text)?;
                let spec = enumerate_lattice_points(m);
                let rep = summarize_counts(
                    &spec,
                    &z,
                    &suspects,
                    &parse_f64_list(&eps_list, "eps")?,
                    format!("replay of {}", file.display()),
                )?;
                emit(&out, &rep.to_json())?;
            } else {
                let value: serde_json::Value = serde_json::from_str(&text)
                    .map_err(|e| CliError::Validation(format!("unparseable JSON: {e}")))?;
                emit(
                    &out,
                    &serde_json::to_string(&value).expect("re-serializing value"),
                )?;
            }
            Ok(0)
        }
        Command::Accept { name, list } => {
            if list {
                emit(&out, &torwave::accept::criterion_names().join("\n"))?;
                return Ok(0);
            }
            match torwave::accept::run_preset(&name) {
                None => Err(CliError::Validation(format!(
                    "unknown preset {name:?}; try --list"
                ))),
                Some(outcomes) => {
                    let mut all_ok = true;
                    let mut text = String::new();
                    for o in &outcomes {
                        all_ok &= o.passed;
                        text.push_str(&format!("{o}\n"));
                    }
                    emit(&out, &text)?;
                    Ok(if all_ok { 0 } else { 1 })
                }
            }
        }
    }
}
