//! Command line front end for the semi-implicit projection solver.
//!
//! Modes: a single integration, spatial/temporal/coupled convergence
//! studies, and the empirical solvability probe. Configuration comes from a
//! sectioned key-value file, command line flags, or both (flags win).
//! Studies write errors.csv, table.txt, and per-norm log-log data into the
//! output directory and print the error table to standard output.
//!
//! Exit codes: 0 success, 2 linear solver divergence, 3 degenerate
//! projection magnitude, 4 configuration problems, 1 anything else. Every
//! failure prints one machine-readable line on standard error of the form
//! `error kind=<kind> msg="..."`.

mod config;

use clap::Parser;
use config::{ConfigError, Draft, Mode, RunConfig};
use llg_core::error::LlgError;
use llg_core::grid::Grid;
use llg_core::krylov::solvability_probe;
use llg_core::study::{convergence_study, CaseSpec, RefinementAxis, StudyConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "llg",
    version,
    about = "Semi-implicit projection solver for unit-length magnetization dynamics: \
             single runs, convergence studies, and solvability probes"
)]
struct Cli {
    /// Configuration file with [run], [solver], [probe], [output] sections.
    #[arg(long)]
    config: Option<PathBuf>,

    /// single | study-spatial | study-temporal | study-coupled | probe.
    #[arg(long)]
    mode: Option<String>,

    /// Spatial dimension, 1 or 3.
    #[arg(long)]
    dim: Option<usize>,

    /// Comma-separated cell counts per axis.
    #[arg(long)]
    n: Option<String>,

    /// Comma-separated time step counts.
    #[arg(long)]
    nt: Option<String>,

    /// Damping parameter.
    #[arg(long)]
    alpha: Option<f64>,

    /// Final time.
    #[arg(long = "T")]
    t_final: Option<f64>,

    /// Relative linear solver tolerance.
    #[arg(long)]
    tol: Option<f64>,

    /// Worker threads for study cases; 0 picks automatically.
    #[arg(long, env = "LLG_THREADS")]
    threads: Option<usize>,

    /// Seed for randomized probes.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write the four ready-to-run study configurations and exit.
    #[arg(long)]
    emit_suite: bool,
}

fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()))
}

fn config_error(err: &ConfigError) -> u8 {
    eprintln!("error kind=config msg=\"{err}\"");
    4
}

fn run(cli: Cli) -> u8 {
    let out_dir = cli.out.clone();
    if cli.emit_suite {
        return emit_suite(out_dir.unwrap_or_else(|| PathBuf::from("out")));
    }

    let flags = match flag_draft(&cli) {
        Ok(draft) => draft,
        Err(err) => return config_error(&err),
    };
    let file = match cli.config {
        Some(path) => match std::fs::read_to_string(&path) {
            Ok(text) => match config::parse_file(&text) {
                Ok(draft) => draft,
                Err(err) => return config_error(&err),
            },
            Err(err) => {
                eprintln!("error kind=config msg=\"{}: {err}\"", path.display());
                return 4;
            }
        },
        None => Draft::default(),
    };
    let config = match file.overlay(flags).build() {
        Ok(config) => config,
        Err(err) => return config_error(&err),
    };

    match config.mode {
        Mode::Probe => run_probe(&config),
        _ => run_study(&config),
    }
}

fn flag_draft(cli: &Cli) -> Result<Draft, ConfigError> {
    let flag = |key: &str, message: String| ConfigError::Validation {
        key: key.into(),
        message,
    };
    Ok(Draft {
        mode: cli
            .mode
            .as_deref()
            .map(Mode::parse)
            .transpose()
            .map_err(|m| flag("mode", m))?,
        dim: cli.dim,
        solution: None,
        n: cli
            .n
            .as_deref()
            .map(config::parse_usize_list)
            .transpose()
            .map_err(|m| flag("n", m))?,
        nt: cli
            .nt
            .as_deref()
            .map(config::parse_usize_list)
            .transpose()
            .map_err(|m| flag("nt", m))?,
        k: None,
        alpha: cli.alpha,
        t_final: cli.t_final,
        tol: cli.tol,
        maxit: None,
        out_dir: cli.out.clone(),
        threads: cli.threads,
        seed: cli.seed,
        probe_trials: None,
        probe_k: None,
        probe_alpha: None,
    })
}

fn emit_suite(dir: PathBuf) -> u8 {
    if let Err(err) = std::fs::create_dir_all(&dir) {
        eprintln!("error kind=io msg=\"{}: {err}\"", dir.display());
        return 1;
    }
    for (name, text) in config::reproduction_suite() {
        let path = dir.join(name);
        if let Err(err) = std::fs::write(&path, text) {
            eprintln!("error kind=io msg=\"{}: {err}\"", path.display());
            return 1;
        }
        println!("wrote {}", path.display());
    }
    0
}

fn error_kind(err: &LlgError) -> &'static str {
    match err.root_cause() {
        LlgError::SolverDiverged { .. } => "solver-diverged",
        LlgError::DegenerateMagnitude { .. } => "degenerate-magnitude",
        LlgError::DimensionTooLarge { .. } => "dimension-too-large",
        LlgError::NonPositiveError { .. } => "order-fit",
        LlgError::InvalidRun(_) => "invalid-run",
        LlgError::StepFailed { .. } | LlgError::CaseFailed { .. } => "wrapped",
    }
}

fn fail(err: &LlgError) -> u8 {
    eprintln!("error kind={} msg=\"{err}\"", error_kind(err));
    match err.root_cause() {
        LlgError::SolverDiverged { .. } => 2,
        LlgError::DegenerateMagnitude { .. } => 3,
        LlgError::DimensionTooLarge { .. } | LlgError::InvalidRun(_) => 4,
        _ => 1,
    }
}

fn run_study(config: &RunConfig) -> u8 {
    if config.alpha <= std::f64::consts::FRAC_1_SQRT_2 {
        eprintln!(
            "note: alpha = {} is at or below sqrt(2)/2 = 0.7071, the damping threshold the \
             unconditional convergence theory assumes; the run is conditionally stable, see \
             the scheme documentation for the step size window",
            config.alpha
        );
    }

    let (cases, axis) = match config.mode {
        Mode::Single => (
            vec![CaseSpec {
                n: config.n[0],
                nt: config.nt[0],
            }],
            RefinementAxis::Spatial,
        ),
        Mode::StudySpatial => (
            config
                .n
                .iter()
                .map(|&n| CaseSpec {
                    n,
                    nt: config.nt[0],
                })
                .collect(),
            RefinementAxis::Spatial,
        ),
        Mode::StudyTemporal => (
            config
                .nt
                .iter()
                .map(|&nt| CaseSpec { n: config.n[0], nt })
                .collect(),
            RefinementAxis::Temporal,
        ),
        Mode::StudyCoupled => (
            config
                .n
                .iter()
                .zip(&config.nt)
                .map(|(&n, &nt)| CaseSpec { n, nt })
                .collect(),
            RefinementAxis::Coupled,
        ),
        Mode::Probe => unreachable!("probe dispatches separately"),
    };

    let study = StudyConfig {
        solution: config.solution,
        alpha: config.alpha,
        t_final: config.t_final,
        cases,
        axis,
        solver_tol: config.tol,
        solver_maxit: config.maxit,
        threads: config.threads,
    };
    let report = match convergence_study(&study) {
        Ok(report) => report,
        Err(err) => return fail(&err),
    };
    if let Err(err) = report.write_files(&config.out_dir) {
        eprintln!("error kind=io msg=\"{err}\"");
        return 1;
    }
    print!("{}", report.to_table());
    0
}

fn run_probe(config: &RunConfig) -> u8 {
    let grid = Grid::new(config.dim, config.n[0]);
    let mut csv = String::from("setting,k,alpha,trials,min_singular_value\n");
    let mut all_positive = true;
    let mut setting: u64 = 0;
    for &k in &config.probe_k {
        for &alpha in &config.probe_alpha {
            let report = match solvability_probe(
                grid,
                k,
                alpha,
                config.probe_trials,
                config.seed.wrapping_add(setting),
            ) {
                Ok(report) => report,
                Err(err) => return fail(&err),
            };
            println!(
                "probe k = {k:e}, alpha = {alpha}: min singular value = {:e} over {} trials",
                report.min_singular_value, report.trials
            );
            csv.push_str(&format!(
                "{setting},{k:e},{alpha:e},{},{:e}\n",
                report.trials, report.min_singular_value
            ));
            all_positive &= report.min_singular_value > 0.0;
            setting += 1;
        }
    }
    println!(
        "min singular value {} over {setting} settings",
        if all_positive { "> 0" } else { "<= 0" }
    );
    if let Err(err) = std::fs::create_dir_all(&config.out_dir)
        .and_then(|_| std::fs::write(config.out_dir.join("probe.csv"), csv))
    {
        eprintln!("error kind=io msg=\"{err}\"");
        return 1;
    }
    if all_positive {
        0
    } else {
        1
    }
}
