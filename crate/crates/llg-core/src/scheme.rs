//! Third-order semi-implicit projection scheme.
//!
//! One step advances the two history queues (projected fields m and
//! intermediate fields m~) by solving a linear system and renormalizing.
//! With time levels n, n+1, n+2 in hand and beta = 11/(6k):
//!
//! ```text
//! m^          = 3 m^{n+2} - 3 m^{n+1} + m^n
//! p           = 3 m~^{n+2} - (3/2) m~^{n+1} + (1/3) m~^n
//! A(u)        = beta u + m^ x Lap4 u - alpha Lap4 u
//! A(m~^{n+3}) = p / k + alpha |grad4 m^|^2 m^ + f(x, t^{n+3})
//! m^{n+3}     = m~^{n+3} / |m~^{n+3}|   cell by cell
//! ```
//!
//! The extrapolated coefficient m^ uses projected history, the backward
//! differences use intermediate history, and the forcing (when present) is
//! evaluated at the new time level. Cells whose intermediate length falls
//! below [`PROJECTION_EPS_MIN`](crate::error::PROJECTION_EPS_MIN) abort the
//! step instead of being normalized.
//!
//! Stability: each Laplacian eigenvalue mu (up to 16 n^2 d / 3 on an n-cell
//! grid) contributes characteristic roots of the three-level formula at
//! z = -k mu (alpha + i) and at z = -k mu (alpha - i). For alpha large the
//! roots stay inside the unit circle for every k. For small alpha there is
//! a window of unstable products; at alpha = 0.01 it is roughly
//! k mu in [0.36, 1.86], with root magnitudes up to 1.037. Long runs must
//! keep k times the top eigenvalue below the window (or, for a handful of
//! steps, accept the bounded amplification of the few modes inside it).

use crate::banded::BandedMatrix;
use crate::error::{LlgError, PROJECTION_EPS_MIN};
use crate::field::VectorField;
use crate::grid::Grid;
use crate::krylov::{self, LinearOperator, Preconditioner, SolveStats};
use crate::vec3;
use std::sync::Arc;

/// Space-time forcing term; receives a cell center and the evaluation time.
pub type ForcingFn = Arc<dyn Fn([f64; 3], f64) -> [f64; 3] + Send + Sync>;

#[derive(Clone)]
pub struct SchemeParams {
    pub alpha: f64,
    /// Time step size.
    pub k: f64,
    /// Relative tolerance handed to the linear solver.
    pub solver_tol: f64,
    pub solver_maxit: usize,
    pub forcing: Option<ForcingFn>,
}

impl SchemeParams {
    pub fn new(alpha: f64, k: f64) -> SchemeParams {
        assert!(alpha > 0.0 && alpha.is_finite(), "damping must be positive");
        assert!(k > 0.0 && k.is_finite(), "step size must be positive");
        SchemeParams {
            alpha,
            k,
            solver_tol: 1e-12,
            solver_maxit: 10_000,
            forcing: None,
        }
    }
}

impl std::fmt::Debug for SchemeParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SchemeParams")
            .field("alpha", &self.alpha)
            .field("k", &self.k)
            .field("solver_tol", &self.solver_tol)
            .field("solver_maxit", &self.solver_maxit)
            .field("forcing", &self.forcing.as_ref().map(|_| ".."))
            .finish()
    }
}

/// Rolling time levels. Index 0 is the oldest of the three; `step_index`
/// counts completed steps, so the newest level sits at time
/// (step_index + 2) k.
#[derive(Debug, Clone)]
pub struct SchemeState {
    grid: Grid,
    m_hist: [VectorField; 3],
    mt_hist: [VectorField; 3],
    step_index: usize,
}

impl SchemeState {
    /// Starts from three consecutive projected levels, oldest first. The
    /// intermediate history is initialized to the same fields. Every level
    /// must hold unit-length cells (within 1e-13).
    pub fn new(mut levels: [VectorField; 3]) -> SchemeState {
        let grid = levels[0].grid();
        for level in &mut levels {
            assert_eq!(level.grid(), grid, "history levels share one grid");
            let dev = level.max_unit_deviation();
            assert!(
                dev <= 1e-13,
                "history level breaks the unit-length invariant: deviation {dev:.3e}"
            );
            level.extend_neumann();
        }
        SchemeState {
            grid,
            mt_hist: levels.clone(),
            m_hist: levels,
            step_index: 0,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    /// Newest projected level.
    pub fn newest(&self) -> &VectorField {
        &self.m_hist[2]
    }

    /// Newest intermediate (pre-projection) level.
    pub fn newest_intermediate(&self) -> &VectorField {
        &self.mt_hist[2]
    }

    pub fn history(&self) -> &[VectorField; 3] {
        &self.m_hist
    }

    fn rotate(&mut self, m_new: VectorField, mt_new: VectorField) {
        self.m_hist.swap(0, 1);
        self.m_hist.swap(1, 2);
        self.m_hist[2] = m_new;
        self.mt_hist.swap(0, 1);
        self.mt_hist.swap(1, 2);
        self.mt_hist[2] = mt_new;
        self.step_index += 1;
    }
}

/// Quadratic extrapolation 3a - 3b + c to the next time level, with `a` the
/// newest field. Combines the full storage, so ghost-filled inputs yield a
/// ghost-filled result.
pub fn extrapolate3(a: &VectorField, b: &VectorField, c: &VectorField) -> VectorField {
    let mut out = VectorField::zeros(a.grid());
    let (ar, br, cr) = (a.raw(), b.raw(), c.raw());
    let dst = out.raw_mut();
    for i in 0..dst.len() {
        for comp in 0..3 {
            dst[i][comp] = 3.0 * ar[i][comp] - 3.0 * br[i][comp] + cr[i][comp];
        }
    }
    out
}

/// Backward-difference history fold p = 3 a - (3/2) b + (1/3) c with `a` the
/// newest intermediate level.
pub fn history_combination(mt_hist: &[VectorField; 3]) -> VectorField {
    let grid = mt_hist[0].grid();
    let mut out = VectorField::zeros(grid);
    let (c, b, a) = (mt_hist[0].raw(), mt_hist[1].raw(), mt_hist[2].raw());
    let dst = out.raw_mut();
    grid.for_each_interior(|_, storage| {
        for comp in 0..3 {
            dst[storage][comp] =
                3.0 * a[storage][comp] - 1.5 * b[storage][comp] + c[storage][comp] / 3.0;
        }
    });
    out
}

/// Explicit right-hand-side terms alpha |grad4 m^|^2 m^ + f(x, t_new).
/// `m_hat` must arrive ghost-filled for the gradient.
pub fn explicit_terms(m_hat: &VectorField, params: &SchemeParams, t_new: f64) -> VectorField {
    let grid = m_hat.grid();
    let gns = m_hat.grad_norm_sq();
    let mut out = VectorField::zeros(grid);
    let src = m_hat.raw();
    let dst = out.raw_mut();
    grid.for_each_interior(|cell, storage| {
        let ag = params.alpha * gns.get(cell);
        let f = match &params.forcing {
            Some(f) => f(grid.cell_center(cell), t_new),
            None => [0.0; 3],
        };
        for comp in 0..3 {
            dst[storage][comp] = ag * src[storage][comp] + f[comp];
        }
    });
    out
}

fn rhs_from_parts(p: &VectorField, f_h: &VectorField, k: f64) -> VectorField {
    let grid = p.grid();
    let mut out = VectorField::zeros(grid);
    let (pr, fr) = (p.raw(), f_h.raw());
    let dst = out.raw_mut();
    grid.for_each_interior(|_, storage| {
        for comp in 0..3 {
            dst[storage][comp] = pr[storage][comp] / k + fr[storage][comp];
        }
    });
    out
}

/// Right-hand side of the step system, assembled from the state's histories.
pub fn assemble_rhs(state: &SchemeState, params: &SchemeParams, t_new: f64) -> VectorField {
    let m_hat = extrapolate3(&state.m_hist[2], &state.m_hist[1], &state.m_hist[0]);
    let p = history_combination(&state.mt_hist);
    let f_h = explicit_terms(&m_hat, params, t_new);
    rhs_from_parts(&p, &f_h, params.k)
}

/// Matrix-free step operator A(u) = beta u + m^ x Lap4 u - alpha Lap4 u with
/// beta = 11/(6k). Applications fill ghosts of `u` by even reflection.
pub struct StepOperator<'a> {
    m_hat: &'a VectorField,
    k: f64,
    alpha: f64,
    scratch: VectorField,
}

impl<'a> StepOperator<'a> {
    pub fn new(m_hat: &'a VectorField, k: f64, alpha: f64) -> StepOperator<'a> {
        StepOperator {
            m_hat,
            k,
            alpha,
            scratch: VectorField::zeros(m_hat.grid()),
        }
    }
}

impl LinearOperator for StepOperator<'_> {
    fn dimension(&self) -> usize {
        self.m_hat.grid().flat_len()
    }

    fn apply(&mut self, v: &[f64], out: &mut [f64]) {
        let grid = self.m_hat.grid();
        let scratch = self.scratch.raw_mut();
        grid.for_each_interior(|cell, storage| {
            scratch[storage] = [v[3 * cell], v[3 * cell + 1], v[3 * cell + 2]];
        });
        self.scratch.extend_neumann();
        let lap = self.scratch.laplacian4();
        let beta = 11.0 / (6.0 * self.k);
        let (mh, lp) = (self.m_hat.raw(), lap.raw());
        grid.for_each_interior(|cell, storage| {
            let precession = vec3::cross(mh[storage], lp[storage]);
            for comp in 0..3 {
                out[3 * cell + comp] =
                    beta * v[3 * cell + comp] + precession[comp] - self.alpha * lp[storage][comp];
            }
        });
    }
}

/// Assembles the one-dimensional step operator as a banded matrix: cells
/// couple to two neighbors per side, so component-minor ordering gives a
/// scalar bandwidth of 8, and ghost reflection folds into near-boundary
/// coefficients. Its LU factorization preconditions the 1D solves exactly;
/// three-dimensional systems would have bandwidth 3(2n^2 + 2n + 2) and stay
/// matrix-free.
fn banded_operator_1d(m_hat: &VectorField, k: f64, alpha: f64) -> BandedMatrix {
    let grid = m_hat.grid();
    debug_assert_eq!(grid.dim(), 1);
    let n = grid.n();
    let h = grid.h();
    let beta = 11.0 / (6.0 * k);
    let scale = 1.0 / (12.0 * h * h);
    let weights = [(-2i64, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)];
    let reflect = |j: i64| -> usize {
        if j < 0 {
            (-1 - j) as usize
        } else if j >= n as i64 {
            (2 * n as i64 - 1 - j) as usize
        } else {
            j as usize
        }
    };
    let mut mat = BandedMatrix::zeros(3 * n, 8, 8);
    for i in 0..n {
        let m = m_hat.get(i);
        for comp in 0..3 {
            mat.add(3 * i + comp, 3 * i + comp, beta);
        }
        for (off, w) in weights {
            let j = reflect(i as i64 + off);
            let l = w * scale;
            for comp in 0..3 {
                mat.add(3 * i + comp, 3 * j + comp, -alpha * l);
            }
            mat.add(3 * i, 3 * j + 1, -m[2] * l);
            mat.add(3 * i, 3 * j + 2, m[1] * l);
            mat.add(3 * i + 1, 3 * j, m[2] * l);
            mat.add(3 * i + 1, 3 * j + 2, -m[0] * l);
            mat.add(3 * i + 2, 3 * j, -m[1] * l);
            mat.add(3 * i + 2, 3 * j + 1, m[0] * l);
        }
    }
    mat
}

/// Cell-by-cell renormalization m = u / |u|. Cells shorter than
/// [`PROJECTION_EPS_MIN`](crate::error::PROJECTION_EPS_MIN) are an error,
/// not a division. The result comes back ghost-filled.
pub fn project(u: &VectorField) -> Result<VectorField, LlgError> {
    let grid = u.grid();
    let mut out = VectorField::zeros(grid);
    let src = u.raw();
    let dst = out.raw_mut();
    let mut degenerate: Option<(usize, f64)> = None;
    grid.for_each_interior(|cell, storage| {
        if degenerate.is_some() {
            return;
        }
        let v = src[storage];
        let mag = vec3::norm(v);
        if mag < PROJECTION_EPS_MIN {
            degenerate = Some((cell, mag));
            return;
        }
        dst[storage] = [v[0] / mag, v[1] / mag, v[2] / mag];
    });
    if let Some((cell, magnitude)) = degenerate {
        return Err(LlgError::DegenerateMagnitude { cell, magnitude });
    }
    out.extend_neumann();
    Ok(out)
}

/// Solves the step system for the intermediate field given the folded
/// history `p`, the coefficient field `m_hat` (ghost-filled), and the
/// explicit terms `f_h`. This is the common core of [`step`]; exposing it
/// keeps the folded formulation testable against the direct one.
pub fn solve_intermediate(
    p: &VectorField,
    m_hat: &VectorField,
    f_h: &VectorField,
    initial_guess: &VectorField,
    params: &SchemeParams,
) -> Result<(VectorField, SolveStats), LlgError> {
    let grid = m_hat.grid();
    let rhs = rhs_from_parts(p, f_h, params.k).flatten_interior();
    let guess = initial_guess.flatten_interior();
    let mut op = StepOperator::new(m_hat, params.k, params.alpha);
    let precond = if grid.dim() == 1 {
        Some(banded_operator_1d(m_hat, params.k, params.alpha).factor()?)
    } else {
        None
    };
    let (x, stats) = krylov::solve_preconditioned(
        &mut op,
        &rhs,
        &guess,
        params.solver_tol,
        params.solver_maxit,
        precond.as_ref().map(|p| p as &dyn Preconditioner),
    )?;
    Ok((VectorField::from_flat(grid, &x), stats))
}

/// Advances the state by one step to time `t_new`, returning the linear
/// solve statistics.
pub fn step(
    state: &mut SchemeState,
    params: &SchemeParams,
    t_new: f64,
) -> Result<SolveStats, LlgError> {
    let m_hat = extrapolate3(&state.m_hist[2], &state.m_hist[1], &state.m_hist[0]);
    let p = history_combination(&state.mt_hist);
    let f_h = explicit_terms(&m_hat, params, t_new);
    let (mt_new, stats) = solve_intermediate(&p, &m_hat, &f_h, &state.mt_hist[2], params)?;
    let m_new = project(&mt_new)?;
    state.rotate(m_new, mt_new);
    Ok(stats)
}

/// Integrates from the three starting levels (prepared at t = 0, k, 2k) up
/// to `t_total`, which must be an integer multiple N_t >= 3 of the step
/// size. Runs N_t - 2 steps and calls `observer` after each one. Step
/// failures come back wrapped with the failing step index.
pub fn run(
    levels: [VectorField; 3],
    params: &SchemeParams,
    t_total: f64,
    mut observer: impl FnMut(&SchemeState),
) -> Result<SchemeState, LlgError> {
    let k = params.k;
    let steps_exact = t_total / k;
    let nt = steps_exact.round();
    if !(t_total > 0.0) || (steps_exact - nt).abs() > 1e-9 * nt.max(1.0) {
        return Err(LlgError::InvalidRun(format!(
            "final time {t_total} is not an integer multiple of the step size {k}"
        )));
    }
    if nt < 3.0 {
        return Err(LlgError::InvalidRun(format!(
            "final time {t_total} spans fewer than three step sizes {k}; the scheme needs \
             its three starting levels inside the run"
        )));
    }
    let nt = nt as usize;
    let mut state = SchemeState::new(levels);
    for s in 0..nt - 2 {
        let t_new = (s + 3) as f64 * k;
        step(&mut state, params, t_new).map_err(|source| LlgError::StepFailed {
            step: s,
            source: Box::new(source),
        })?;
        observer(&state);
    }
    Ok(state)
}
