//! Convergence studies against the manufactured solution.
//!
//! A study integrates one case per grid/step pair, measures the final-time
//! error in the max, mean-square, and gradient-augmented norms, and fits a
//! convergence order per norm by least squares over ln(error) against
//! ln(step). Cases are independent and run on a thread pool; results keep
//! the configured case order regardless of scheduling.

use crate::error::LlgError;
use crate::field::VectorField;
use crate::grid::Grid;
use crate::mms::{self, MmsSolution};
use crate::scheme::{self, SchemeParams};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

/// Which discretization parameter a study refines. Selects the abscissa
/// used for order fits and log-log data: the mesh size for spatial and
/// coupled refinement, the time step for temporal refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefinementAxis {
    Spatial,
    Temporal,
    Coupled,
}

#[derive(Debug, Clone, Copy)]
pub struct CaseSpec {
    /// Cells per axis.
    pub n: usize,
    /// Time steps covering the final time.
    pub nt: usize,
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub solution: MmsSolution,
    pub alpha: f64,
    pub t_final: f64,
    pub cases: Vec<CaseSpec>,
    pub axis: RefinementAxis,
    pub solver_tol: f64,
    pub solver_maxit: usize,
    /// Worker threads for running cases; 0 lets the pool pick.
    pub threads: usize,
}

#[derive(Debug, Clone)]
pub struct CaseResult {
    pub case_id: usize,
    pub n: usize,
    pub nt: usize,
    pub h: f64,
    pub k: f64,
    pub err_linf: f64,
    pub err_l2: f64,
    pub err_h1: f64,
    pub seconds: f64,
    /// Largest |1 - |m|| seen over every projected time level of the run.
    pub max_unit_deviation: f64,
}

#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub axis: RefinementAxis,
    pub t_final: f64,
    pub rows: Vec<CaseResult>,
    /// Fitted orders for (linf, l2, h1); absent for single-case studies.
    pub orders: Option<[f64; 3]>,
}

/// Runs one case of the study: build the starting levels, integrate to the
/// final time, and measure errors against the manufactured solution.
pub fn run_case(config: &StudyConfig, case_id: usize) -> Result<CaseResult, LlgError> {
    let case = config.cases[case_id];
    if case.nt < 3 {
        return Err(LlgError::InvalidRun(format!(
            "case {case_id} has {} time steps; the scheme needs at least 3",
            case.nt
        )));
    }
    let grid = Grid::new(config.solution.dim(), case.n);
    let k = config.t_final / case.nt as f64;
    let mut params = SchemeParams::new(config.alpha, k);
    params.solver_tol = config.solver_tol;
    params.solver_maxit = config.solver_maxit;
    params.forcing = Some(mms::forcing(config.solution, config.alpha));

    let start = Instant::now();
    let levels = mms::initial_history(config.solution, grid, k);
    let mut max_unit_deviation = levels
        .iter()
        .map(|l| l.max_unit_deviation())
        .fold(0.0, f64::max);
    let state = scheme::run(levels, &params, config.t_final, |s| {
        max_unit_deviation = max_unit_deviation.max(s.newest().max_unit_deviation());
    })?;
    let exact = VectorField::from_fn(grid, |x| config.solution.eval(x, config.t_final));
    let norms = state.newest().sub(&exact).norms();
    let seconds = start.elapsed().as_secs_f64();

    Ok(CaseResult {
        case_id,
        n: case.n,
        nt: case.nt,
        h: grid.h(),
        k,
        err_linf: norms.linf,
        err_l2: norms.l2,
        err_h1: norms.h1,
        seconds,
        max_unit_deviation,
    })
}

/// Least-squares slope of ln(error) against ln(step). Steps must be
/// strictly decreasing and errors strictly positive.
pub fn estimate_order(steps: &[f64], errors: &[f64]) -> Result<f64, LlgError> {
    if steps.len() != errors.len() || steps.len() < 2 {
        return Err(LlgError::InvalidRun(format!(
            "order fit needs matching step/error lists of length >= 2, got {} and {}",
            steps.len(),
            errors.len()
        )));
    }
    for w in steps.windows(2) {
        if !(w[1] > 0.0 && w[1] < w[0]) {
            return Err(LlgError::InvalidRun(
                "order fit needs strictly decreasing positive steps".into(),
            ));
        }
    }
    for (index, &value) in errors.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(LlgError::NonPositiveError { index, value });
        }
    }
    let xs: Vec<f64> = steps.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..xs.len() {
        num += (xs[i] - x_mean) * (ys[i] - y_mean);
        den += (xs[i] - x_mean) * (xs[i] - x_mean);
    }
    Ok(num / den)
}

/// Coupled refinements report temporal orders, so every non-spatial axis
/// fits against k.
fn fit_steps(axis: RefinementAxis, rows: &[CaseResult]) -> Vec<f64> {
    rows.iter()
        .map(|r| match axis {
            RefinementAxis::Spatial => r.h,
            RefinementAxis::Temporal | RefinementAxis::Coupled => r.k,
        })
        .collect()
}

/// Runs every case of the study and fits per-norm orders. Case failures are
/// reported with the failing case index; results keep configuration order.
pub fn convergence_study(config: &StudyConfig) -> Result<ErrorReport, LlgError> {
    if config.cases.is_empty() {
        return Err(LlgError::InvalidRun("study has no cases".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| LlgError::InvalidRun(format!("thread pool: {e}")))?;
    let rows: Vec<CaseResult> = pool.install(|| {
        (0..config.cases.len())
            .into_par_iter()
            .map(|case_id| {
                run_case(config, case_id).map_err(|source| LlgError::CaseFailed {
                    case_id,
                    source: Box::new(source),
                })
            })
            .collect::<Result<_, _>>()
    })?;

    let orders = if rows.len() >= 2 {
        let steps = fit_steps(config.axis, &rows);
        Some([
            estimate_order(&steps, &collect_errors(&rows, 0))?,
            estimate_order(&steps, &collect_errors(&rows, 1))?,
            estimate_order(&steps, &collect_errors(&rows, 2))?,
        ])
    } else {
        None
    };

    Ok(ErrorReport {
        axis: config.axis,
        t_final: config.t_final,
        rows,
        orders,
    })
}

fn collect_errors(rows: &[CaseResult], norm: usize) -> Vec<f64> {
    rows.iter()
        .map(|r| match norm {
            0 => r.err_linf,
            1 => r.err_l2,
            _ => r.err_h1,
        })
        .collect()
}

impl ErrorReport {
    /// Machine-readable rows, one line per case.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("case_id,h,k,err_linf,err_l2,err_h1,seconds\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{:.3}",
                r.case_id, r.h, r.k, r.err_linf, r.err_l2, r.err_h1, r.seconds
            );
        }
        out
    }

    /// Human-readable error table with a trailing fitted-order row.
    pub fn to_table(&self) -> String {
        let show_h = self.axis != RefinementAxis::Temporal;
        let show_k = self.axis != RefinementAxis::Spatial;
        let mut out = String::new();
        if show_h {
            let _ = write!(out, "{:>8}", "h");
        }
        if show_k {
            let _ = write!(out, "{:>8}", "k");
        }
        let _ = writeln!(out, "{:>16}{:>16}{:>16}", "err_linf", "err_l2", "err_h1");
        for r in &self.rows {
            if show_h {
                let _ = write!(out, "{:>8}", format!("1/{}", r.n));
            }
            if show_k {
                let _ = write!(out, "{:>8}", format!("T/{}", r.nt));
            }
            let _ = writeln!(
                out,
                "{:>16.6e}{:>16.6e}{:>16.6e}",
                r.err_linf, r.err_l2, r.err_h1
            );
        }
        if let Some(orders) = self.orders {
            if show_h {
                let _ = write!(out, "{:>8}", "order");
            }
            if show_k {
                let _ = write!(out, "{:>8}", if show_h { "" } else { "order" });
            }
            let _ = writeln!(
                out,
                "{:>16.2}{:>16.2}{:>16.2}",
                orders[0], orders[1], orders[2]
            );
        }
        out
    }

    /// Two-column step/error data for one norm (0 = linf, 1 = l2, 2 = h1),
    /// ready for log-log plotting.
    pub fn loglog_data(&self, norm: usize) -> String {
        let steps = fit_steps(self.axis, &self.rows);
        let errors = collect_errors(&self.rows, norm);
        let mut out = String::from("# step error\n");
        for (s, e) in steps.iter().zip(&errors) {
            let _ = writeln!(out, "{s:e} {e:e}");
        }
        out
    }

    /// Writes errors.csv, table.txt, and one log-log data file per norm
    /// into `dir`, creating it if needed.
    pub fn write_files(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("errors.csv"), self.to_csv())?;
        std::fs::write(dir.join("table.txt"), self.to_table())?;
        for (norm, name) in ["loglog_linf.txt", "loglog_l2.txt", "loglog_h1.txt"]
            .iter()
            .enumerate()
        {
            std::fs::write(dir.join(name), self.loglog_data(norm))?;
        }
        Ok(())
    }

    /// Largest unit-length deviation across every case of the study.
    pub fn max_unit_deviation(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.max_unit_deviation)
            .fold(0.0, f64::max)
    }
}
