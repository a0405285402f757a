//! Manufactured solutions with closed-form derivatives and forcing.
//!
//! Both solutions rotate a unit vector through a spatial phase q and a
//! temporal envelope:
//!
//! ```text
//! m(x, t) = ( cos(q) sin(t),  sin(q) sin(t),  cos(t) )
//! ```
//!
//! with q = cos(pi x) on the interval and q = cos(pi x) cos(pi y) cos(pi z)
//! on the cube. |m| = 1 holds identically, and grad q vanishes on every
//! face, so m is compatible with homogeneous Neumann boundaries. The useful
//! identities are Lap q = -d pi^2 q and
//!
//! ```text
//! Lap m      = ( (-cos q |grad q|^2 - sin q Lap q) sin t,
//!                (-sin q |grad q|^2 + cos q Lap q) sin t,  0 )
//! |grad m|^2 = |grad q|^2 sin^2 t.
//! ```
//!
//! The forcing that makes m solve the damped-precession equation is
//! f = m_t + m x Lap m - alpha Lap m - alpha |grad m|^2 m.

use crate::field::VectorField;
use crate::grid::Grid;
use crate::scheme::ForcingFn;
use crate::vec3;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmsSolution {
    Dim1,
    Dim3,
}

impl MmsSolution {
    pub fn for_dim(dim: usize) -> MmsSolution {
        match dim {
            1 => MmsSolution::Dim1,
            3 => MmsSolution::Dim3,
            _ => panic!("manufactured solutions exist for dim 1 and 3"),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MmsSolution::Dim1 => 1,
            MmsSolution::Dim3 => 3,
        }
    }

    fn phase(&self, x: [f64; 3]) -> f64 {
        match self {
            MmsSolution::Dim1 => (PI * x[0]).cos(),
            MmsSolution::Dim3 => (PI * x[0]).cos() * (PI * x[1]).cos() * (PI * x[2]).cos(),
        }
    }

    /// Per-axis derivatives of the phase; unused axes are zero.
    fn phase_gradient(&self, x: [f64; 3]) -> [f64; 3] {
        match self {
            MmsSolution::Dim1 => [-PI * (PI * x[0]).sin(), 0.0, 0.0],
            MmsSolution::Dim3 => {
                let (cx, sx) = ((PI * x[0]).cos(), (PI * x[0]).sin());
                let (cy, sy) = ((PI * x[1]).cos(), (PI * x[1]).sin());
                let (cz, sz) = ((PI * x[2]).cos(), (PI * x[2]).sin());
                [-PI * sx * cy * cz, -PI * cx * sy * cz, -PI * cx * cy * sz]
            }
        }
    }

    pub fn eval(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let q = self.phase(x);
        let st = t.sin();
        [q.cos() * st, q.sin() * st, t.cos()]
    }

    /// Time derivative of the solution.
    pub fn dt(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let q = self.phase(x);
        let ct = t.cos();
        [q.cos() * ct, q.sin() * ct, -t.sin()]
    }

    pub fn laplacian(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let q = self.phase(x);
        let g = self.phase_gradient(x);
        let grad_q_sq = vec3::dot(g, g);
        let lap_q = -(self.dim() as f64) * PI * PI * q;
        let st = t.sin();
        [
            (-q.cos() * grad_q_sq - q.sin() * lap_q) * st,
            (-q.sin() * grad_q_sq + q.cos() * lap_q) * st,
            0.0,
        ]
    }

    pub fn grad_norm_sq(&self, x: [f64; 3], t: f64) -> f64 {
        let g = self.phase_gradient(x);
        let st = t.sin();
        vec3::dot(g, g) * st * st
    }
}

/// Forcing that turns the manufactured solution into an exact solution of
/// the damped-precession equation with the given damping.
pub fn forcing(sol: MmsSolution, alpha: f64) -> ForcingFn {
    Arc::new(move |x, t| {
        let m = sol.eval(x, t);
        let lap = sol.laplacian(x, t);
        let dt = sol.dt(x, t);
        let precession = vec3::cross(m, lap);
        let gns = sol.grad_norm_sq(x, t);
        let mut f = [0.0; 3];
        for c in 0..3 {
            f[c] = dt[c] + precession[c] - alpha * lap[c] - alpha * gns * m[c];
        }
        f
    })
}

/// Exact solution sampled at t = 0, k, 2k; the scheme's starting history.
/// Levels are ordered oldest first and arrive with ghosts filled.
pub fn initial_history(sol: MmsSolution, grid: Grid, k: f64) -> [VectorField; 3] {
    assert_eq!(grid.dim(), sol.dim());
    let mut levels = [0.0, k, 2.0 * k].map(|t| VectorField::from_fn(grid, |x| sol.eval(x, t)));
    for level in &mut levels {
        level.extend_neumann();
    }
    levels
}

/// Worst relative deviations between the closed-form derivatives and
/// sixth-order central finite differences at randomized sample points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeCheck {
    pub max_dt_error: f64,
    pub max_laplacian_error: f64,
    pub max_grad_norm_sq_error: f64,
}

const FD_STEP: f64 = 1e-2;

fn central_first<F: Fn(f64) -> f64>(f: F, s: f64) -> f64 {
    let d = FD_STEP;
    (-f(s + 3.0 * d) + 9.0 * f(s + 2.0 * d) - 45.0 * f(s + d) + 45.0 * f(s - d)
        - 9.0 * f(s - 2.0 * d)
        + f(s - 3.0 * d))
        / (-60.0 * d)
}

fn central_second<F: Fn(f64) -> f64>(f: F, s: f64) -> f64 {
    let d = FD_STEP;
    (2.0 * f(s - 3.0 * d) - 27.0 * f(s - 2.0 * d) + 270.0 * f(s - d) - 490.0 * f(s)
        + 270.0 * f(s + d)
        - 27.0 * f(s + 2.0 * d)
        + 2.0 * f(s + 3.0 * d))
        / (180.0 * d * d)
}

fn rel_err(got: f64, reference: f64) -> f64 {
    (got - reference).abs() / reference.abs().max(1.0)
}

/// Validates the hand-derived calculus behind [`MmsSolution`] against finite
/// differences of `eval` alone. The solution formulas are entire, so sample
/// stencils may poke past the domain faces.
pub fn analytic_derivative_check(sol: MmsSolution, samples: usize, seed: u64) -> DerivativeCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = DerivativeCheck {
        max_dt_error: 0.0,
        max_laplacian_error: 0.0,
        max_grad_norm_sq_error: 0.0,
    };
    for _ in 0..samples {
        let mut x = [0.0; 3];
        for a in 0..sol.dim() {
            x[a] = rng.random_range(0.0..1.0);
        }
        let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);

        let dt = sol.dt(x, t);
        for c in 0..3 {
            let fd = central_first(|s| sol.eval(x, s)[c], t);
            check.max_dt_error = check.max_dt_error.max(rel_err(dt[c], fd));
        }

        let lap = sol.laplacian(x, t);
        for c in 0..3 {
            let mut fd = 0.0;
            for a in 0..sol.dim() {
                fd += central_second(
                    |s| {
                        let mut y = x;
                        y[a] = s;
                        sol.eval(y, t)[c]
                    },
                    x[a],
                );
            }
            check.max_laplacian_error = check.max_laplacian_error.max(rel_err(lap[c], fd));
        }

        let mut fd_gns = 0.0;
        for a in 0..sol.dim() {
            for c in 0..3 {
                let d = central_first(
                    |s| {
                        let mut y = x;
                        y[a] = s;
                        sol.eval(y, t)[c]
                    },
                    x[a],
                );
                fd_gns += d * d;
            }
        }
        check.max_grad_norm_sq_error = check
            .max_grad_norm_sq_error
            .max(rel_err(sol.grad_norm_sq(x, t), fd_gns));
    }
    check
}
