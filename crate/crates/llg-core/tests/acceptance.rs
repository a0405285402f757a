//! Acceptance gate for the library. Each test checks one shipping
//! requirement end to end and prints a single verdict line; run with
//! `--nocapture` to see the lines for passing gates too. The four
//! convergence studies are shared between tests through lazily initialized
//! statics, so the unit-length gate certifies exactly the runs that the
//! order gates measured.

use std::sync::OnceLock;
use std::time::Instant;

use llg_core::field::VectorField;
use llg_core::grid::Grid;
use llg_core::krylov::{assemble_dense, solvability_probe};
use llg_core::mms::{self, MmsSolution};
use llg_core::scheme::{self, SchemeParams, StepOperator};
use llg_core::study::{convergence_study, CaseSpec, RefinementAxis, StudyConfig};
use llg_core::vec3;
use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

struct Timed {
    report: llg_core::study::ErrorReport,
    seconds: f64,
}

fn timed_study(config: StudyConfig, label: &str) -> Timed {
    let start = Instant::now();
    let report =
        convergence_study(&config).unwrap_or_else(|e| panic!("{label} study must complete: {e}"));
    Timed {
        report,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn spatial_1d() -> &'static Timed {
    static CELL: OnceLock<Timed> = OnceLock::new();
    CELL.get_or_init(|| {
        // With alpha = 0.01 the three-level formula's characteristic roots
        // exceed one for k mu roughly in [0.36, 1.86], mu ranging over the
        // Laplacian eigenvalues up to 16 n^2 / 3 per axis. The step count
        // must keep k times that top eigenvalue below the window on the
        // finest grid: 1e5 steps give k Lambda = 0.35 at n = 256.
        let config = StudyConfig {
            solution: MmsSolution::Dim1,
            alpha: 0.01,
            t_final: 0.1,
            cases: [16, 32, 64, 128, 256]
                .into_iter()
                .map(|n| CaseSpec { n, nt: 100_000 })
                .collect(),
            axis: RefinementAxis::Spatial,
            solver_tol: 1e-13,
            solver_maxit: 10_000,
            threads: 0,
        };
        timed_study(config, "1d spatial")
    })
}

fn temporal_1d() -> &'static Timed {
    static CELL: OnceLock<Timed> = OnceLock::new();
    CELL.get_or_init(|| {
        let config = StudyConfig {
            solution: MmsSolution::Dim1,
            alpha: 0.01,
            t_final: 0.1,
            cases: [8, 12, 16, 24, 32]
                .into_iter()
                .map(|nt| CaseSpec { n: 2000, nt })
                .collect(),
            axis: RefinementAxis::Temporal,
            // At n = 2000 the residual evaluation floor sits near 2e-13 of
            // the right-hand side, so the tolerance stays above it.
            solver_tol: 5e-13,
            solver_maxit: 10_000,
            threads: 0,
        };
        timed_study(config, "1d temporal")
    })
}

fn spatial_3d() -> &'static Timed {
    static CELL: OnceLock<Timed> = OnceLock::new();
    CELL.get_or_init(|| {
        // Same stability window as the 1d study: 1e4 steps keep
        // k Lambda = 0.23 at n = 12 with Lambda = 16 n^2.
        let config = StudyConfig {
            solution: MmsSolution::Dim3,
            alpha: 0.01,
            t_final: 1.0,
            cases: [4, 6, 8, 10, 12]
                .into_iter()
                .map(|n| CaseSpec { n, nt: 10_000 })
                .collect(),
            axis: RefinementAxis::Spatial,
            solver_tol: 1e-12,
            solver_maxit: 50_000,
            threads: 0,
        };
        timed_study(config, "3d spatial")
    })
}

fn coupled_3d() -> &'static Timed {
    static CELL: OnceLock<Timed> = OnceLock::new();
    CELL.get_or_init(|| {
        let config = StudyConfig {
            solution: MmsSolution::Dim3,
            alpha: 0.01,
            t_final: 1.0,
            cases: [(6, 10), (8, 15), (10, 21), (12, 27), (16, 40)]
                .into_iter()
                .map(|(n, nt)| CaseSpec { n, nt })
                .collect(),
            axis: RefinementAxis::Coupled,
            solver_tol: 1e-12,
            solver_maxit: 200_000,
            threads: 0,
        };
        timed_study(config, "3d coupled")
    })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Frozen reference error magnitudes (L-inf, L2, H1 per row) for the 1d
/// spatial configuration, recorded from a trusted run with the time step
/// refined far below the spatial error floor. The study must land within a
/// factor of four of every entry.
const REFERENCE_ERRORS_1D_SPATIAL: [[f64; 3]; 5] = [
    [
        9.081724873419295e-6,
        6.480755332622150e-6,
        9.925805477628938e-5,
    ],
    [
        5.803494078082672e-7,
        4.113288938373731e-7,
        6.397213459888633e-6,
    ],
    [
        3.641971156598256e-8,
        2.580904089084249e-8,
        4.030617118174344e-7,
    ],
    [
        2.280198946325029e-9,
        1.614584426499681e-9,
        2.524313256978843e-8,
    ],
    [
        1.424844547903703e-10,
        1.009176797442278e-10,
        1.578646012187375e-9,
    ],
];

#[test]
fn criterion_01_spatial_order_1d() {
    let t = spatial_1d();
    let orders = t.report.orders.expect("five cases give an order fit");
    let orders_ok = orders.iter().all(|o| (3.8..=4.2).contains(o));

    let mut ratio_lo = f64::INFINITY;
    let mut ratio_hi: f64 = 0.0;
    for (row, refs) in t.report.rows.iter().zip(REFERENCE_ERRORS_1D_SPATIAL) {
        for (err, reference) in [row.err_linf, row.err_l2, row.err_h1].into_iter().zip(refs) {
            let ratio = err / reference;
            ratio_lo = ratio_lo.min(ratio);
            ratio_hi = ratio_hi.max(ratio);
        }
    }
    let magnitudes_ok = ratio_lo >= 0.25 && ratio_hi <= 4.0;
    let time_ok = t.seconds < 180.0;

    let pass = orders_ok && magnitudes_ok && time_ok;
    let line = format!(
        "criterion 01 {}: 1d spatial orders [{:.3}, {:.3}, {:.3}] target [3.8, 4.2]; \
         reference ratios in [{:.2}, {:.2}] target [0.25, 4]; {:.1} s budget 180 s",
        verdict(pass),
        orders[0],
        orders[1],
        orders[2],
        ratio_lo,
        ratio_hi,
        t.seconds
    );
    println!("{line}");
    assert!(pass, "{line}");
}

#[test]
fn criterion_02_temporal_order_1d() {
    let t = temporal_1d();
    let orders = t.report.orders.expect("five cases give an order fit");
    let orders_ok = orders.iter().all(|o| (2.7..=3.2).contains(o));
    let time_ok = t.seconds < 60.0;

    let pass = orders_ok && time_ok;
    let line = format!(
        "criterion 02 {}: 1d temporal orders [{:.3}, {:.3}, {:.3}] target [2.7, 3.2]; \
         {:.1} s budget 60 s",
        verdict(pass),
        orders[0],
        orders[1],
        orders[2],
        t.seconds
    );
    println!("{line}");
    assert!(pass, "{line}");
}

#[test]
fn criterion_03_spatial_order_3d() {
    let t = spatial_3d();
    let orders = t.report.orders.expect("five cases give an order fit");
    let orders_ok = orders.iter().all(|o| *o >= 3.5);
    let time_ok = t.seconds < 900.0;

    let pass = orders_ok && time_ok;
    let line = format!(
        "criterion 03 {}: 3d spatial orders [{:.3}, {:.3}, {:.3}] target >= 3.5; \
         {:.1} s budget 900 s",
        verdict(pass),
        orders[0],
        orders[1],
        orders[2],
        t.seconds
    );
    println!("{line}");
    assert!(pass, "{line}");
}

#[test]
fn criterion_04_coupled_refinement_3d() {
    let t = coupled_3d();
    let orders = t.report.orders.expect("five cases give an order fit");
    let orders_ok = orders.iter().all(|o| (2.7..=3.4).contains(o));
    let time_ok = t.seconds < 1200.0;

    let pass = orders_ok && time_ok;
    let line = format!(
        "criterion 04 {}: 3d coupled temporal orders [{:.3}, {:.3}, {:.3}] target [2.7, 3.4]; \
         {:.1} s budget 1200 s",
        verdict(pass),
        orders[0],
        orders[1],
        orders[2],
        t.seconds
    );
    println!("{line}");
    assert!(pass, "{line}");
}

#[test]
fn criterion_05_unit_length_invariant() {
    let studies = [spatial_1d(), temporal_1d(), spatial_3d(), coupled_3d()];
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for study in studies {
        for row in &study.report.rows {
            worst = worst.max(row.max_unit_deviation);
            runs += 1;
        }
    }
    let pass = worst <= 1e-13;
    let line = format!(
        "criterion 05 {}: max | |m| - 1 | = {:.3e} over {} runs at every time level, \
         target 1e-13",
        verdict(pass),
        worst,
        runs
    );
    println!("{line}");
    assert!(pass, "{line}");
}

#[test]
fn criterion_06_solvability_probe() {
    let start = Instant::now();
    let grids = [Grid::new(1, 32), Grid::new(3, 4)];
    let step_sizes = [1e-3, 1e-1, 10.0];
    let alphas = [0.01, 1.0];

    let mut min_sigma = f64::INFINITY;
    let mut settings = 0;
    let mut all_positive = true;
    for grid in grids {
        for k in step_sizes {
            for alpha in alphas {
                let seed = 0xC0FFEE + settings as u64;
                let report = solvability_probe(grid, k, alpha, 100, seed)
                    .expect("probe dimensions are within the dense limit");
                all_positive &= report.min_singular_value > 0.0;
                min_sigma = min_sigma.min(report.min_singular_value);
                settings += 1;
            }
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    let time_ok = seconds < 300.0;

    let pass = all_positive && time_ok;
    let line = format!(
        "criterion 06 {}: smallest singular value {:.3e} > 0 over {} settings x 100 trials; \
         {:.1} s budget 300 s",
        verdict(pass),
        min_sigma,
        settings,
        seconds
    );
    println!("{line}");
    assert!(pass, "{line}");
}

fn random_unit_ball(rng: &mut ChaCha8Rng, radius: f64) -> [f64; 3] {
    loop {
        let v = [
            rng.random_range(-radius..radius),
            rng.random_range(-radius..radius),
            rng.random_range(-radius..radius),
        ];
        if vec3::norm(v) <= radius {
            return v;
        }
    }
}

#[test]
fn criterion_07_krylov_dense_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7001);

    // Largest flattened dimension is 3 * 512 = 3 * 8^3 = 1536. Step sizes
    // keep the operator condition number below a few hundred so the dense
    // oracle itself stays trustworthy at the 1e-10 comparison level.
    let mut systems: Vec<(usize, usize, f64)> = Vec::new();
    for n in [16, 24, 32, 48, 64, 96, 128, 192, 256, 384, 512, 512] {
        systems.push((1, n, rng.random_range(20.0..200.0)));
    }
    for n in [4, 4, 5, 5, 6, 6, 8, 8] {
        systems.push((3, n, rng.random_range(20.0..60.0)));
    }

    let mut max_rel: f64 = 0.0;
    let mut all_converged = true;
    for (dim, n, c) in systems {
        let grid = Grid::new(dim, n);
        let lambda_max = 16.0 * (n * n * dim) as f64 / 3.0;
        let k = 11.0 * c / (6.0 * lambda_max);
        let alpha = 10f64.powf(rng.random_range(-2.0..0.0));

        let mut m_hat = VectorField::zeros(grid);
        {
            let raw = m_hat.raw_mut();
            grid.for_each_interior(|_, storage| {
                raw[storage] = random_unit_ball(&mut rng, 2.0);
            });
        }
        m_hat.extend_neumann();

        let rhs_flat: Vec<f64> = (0..grid.flat_len())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let f_h = VectorField::from_flat(grid, &rhs_flat);
        let p = VectorField::zeros(grid);
        let guess = VectorField::zeros(grid);

        let mut params = SchemeParams::new(alpha, k);
        params.solver_tol = 1e-13;
        params.solver_maxit = 100_000;
        let (x_field, stats) = scheme::solve_intermediate(&p, &m_hat, &f_h, &guess, &params)
            .expect("iterative solve must converge on well conditioned systems");
        all_converged &= stats.converged;
        let x_iter = DVector::from_vec(x_field.flatten_interior());

        let mut op = StepOperator::new(&m_hat, k, alpha);
        let dense = assemble_dense(&mut op).expect("dimensions are within the dense limit");
        let x_direct = dense
            .lu()
            .solve(&DVector::from_column_slice(&rhs_flat))
            .expect("step operator is nonsingular");

        let rel = (&x_iter - &x_direct).norm() / x_direct.norm();
        max_rel = max_rel.max(rel);
    }
    let seconds = start.elapsed().as_secs_f64();

    let pass = all_converged && max_rel <= 1e-10;
    let line = format!(
        "criterion 07 {}: max relative L2 gap between iterative and dense solves {:.3e} \
         over 20 systems, target 1e-10; {:.1} s",
        verdict(pass),
        max_rel,
        seconds
    );
    println!("{line}");
    assert!(pass, "{line}");
}

/// Fills every storage cell, ghosts included, from the coordinates of the
/// cell center. Ghost centers sit outside the domain at the mirrored
/// offsets, so an entire monomial is representable exactly.
fn fill_storage(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> VectorField {
    let mut out = VectorField::zeros(grid);
    let e = grid.ext();
    let h = grid.h();
    for s in 0..grid.storage_len() {
        let mut x = [0.0; 3];
        let mut rem = s;
        for axis in 0..grid.dim() {
            x[axis] = (rem % e) as f64 * h - 1.5 * h;
            rem /= e;
        }
        let v = f(x);
        out.raw_mut()[s] = [v, v, v];
    }
    out
}

fn monomial(x: [f64; 3], p: [i32; 3]) -> f64 {
    x[0].powi(p[0]) * x[1].powi(p[1]) * x[2].powi(p[2])
}

fn monomial_laplacian(x: [f64; 3], p: [i32; 3], dim: usize) -> f64 {
    let mut total = 0.0;
    for axis in 0..dim {
        if p[axis] >= 2 {
            let mut q = p;
            q[axis] -= 2;
            total += (p[axis] * (p[axis] - 1)) as f64 * monomial(x, q);
        }
    }
    total
}

fn monomial_derivative(x: [f64; 3], p: [i32; 3], axis: usize) -> f64 {
    if p[axis] < 1 {
        return 0.0;
    }
    let mut q = p;
    q[axis] -= 1;
    p[axis] as f64 * monomial(x, q)
}

fn exponent_set(dim: usize, max_total: i32) -> Vec<[i32; 3]> {
    let mut out = Vec::new();
    if dim == 1 {
        for px in 0..=max_total {
            out.push([px, 0, 0]);
        }
    } else {
        for px in 0..=max_total {
            for py in 0..=(max_total - px) {
                for pz in 0..=(max_total - px - py) {
                    out.push([px, py, pz]);
                }
            }
        }
    }
    out
}

#[test]
fn criterion_08_stencil_exactness() {
    let mut worst_lap: f64 = 0.0;
    let mut worst_grad: f64 = 0.0;
    for (dim, n) in [(1, 16), (3, 8)] {
        let grid = Grid::new(dim, n);
        for p in exponent_set(dim, 5) {
            let field = fill_storage(grid, |x| monomial(x, p));
            let lap = field.laplacian4();
            grid.for_each_interior(|cell, storage| {
                let expected = monomial_laplacian(grid.cell_center(cell), p, dim);
                worst_lap = worst_lap.max((lap.raw()[storage][0] - expected).abs());
            });
        }
        for p in exponent_set(dim, 4) {
            let field = fill_storage(grid, |x| monomial(x, p));
            let grads = field.gradient4();
            for (axis, grad) in grads.iter().enumerate() {
                grid.for_each_interior(|cell, storage| {
                    let expected = monomial_derivative(grid.cell_center(cell), p, axis);
                    worst_grad = worst_grad.max((grad.raw()[storage][0] - expected).abs());
                });
            }
        }
    }

    let pass = worst_lap <= 1e-12 && worst_grad <= 1e-12;
    let line = format!(
        "criterion 08 {}: laplacian exact on monomials to degree 5 ({:.3e}), gradient to \
         degree 4 ({:.3e}), target 1e-12 with exact ghosts",
        verdict(pass),
        worst_lap,
        worst_grad
    );
    println!("{line}");
    assert!(pass, "{line}");
}

#[test]
fn criterion_09_manufactured_solution_consistency() {
    let alpha = 0.01;
    let mut worst_residual: f64 = 0.0;
    let mut worst_derivative: f64 = 0.0;
    for sol in [MmsSolution::Dim1, MmsSolution::Dim3] {
        let forcing = mms::forcing(sol, alpha);
        let mut rng = ChaCha8Rng::seed_from_u64(0x515 + sol.dim() as u64);
        for _ in 0..1000 {
            let mut x = [0.0; 3];
            for axis in 0..sol.dim() {
                x[axis] = rng.random_range(0.0..1.0);
            }
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);

            let m = sol.eval(x, t);
            let dt = sol.dt(x, t);
            let lap = sol.laplacian(x, t);
            let gns = sol.grad_norm_sq(x, t);
            let f = forcing(x, t);

            // dt(m) = -m x lap(m) + alpha lap(m) + alpha |grad m|^2 m + f
            let mut residual = vec3::sub(dt, f);
            residual = vec3::add(residual, vec3::cross(m, lap));
            residual = vec3::sub(residual, vec3::scale(lap, alpha));
            residual = vec3::sub(residual, vec3::scale(m, alpha * gns));
            for comp in residual {
                worst_residual = worst_residual.max(comp.abs());
            }
        }

        let check = mms::analytic_derivative_check(sol, 400, 0xD1F + sol.dim() as u64);
        worst_derivative = worst_derivative
            .max(check.max_dt_error)
            .max(check.max_laplacian_error)
            .max(check.max_grad_norm_sq_error);
    }

    let pass = worst_residual <= 1e-12 && worst_derivative <= 1e-6;
    let line = format!(
        "criterion 09 {}: forcing closes the equation to {:.3e} at 1000 random points per \
         dimension (target 1e-12); analytic derivatives within {:.3e} of finite differences \
         (target 1e-6)",
        verdict(pass),
        worst_residual,
        worst_derivative
    );
    println!("{line}");
    assert!(pass, "{line}");
}

#[test]
fn criterion_10_steady_state_invariance() {
    let constant = [0.6, 0.8, 0.0];
    let mut worst: f64 = 0.0;
    for (dim, n) in [(1, 32), (3, 6)] {
        let grid = Grid::new(dim, n);
        let level = VectorField::from_fn(grid, |_| constant);
        let levels = [level.clone(), level.clone(), level];
        let params = SchemeParams::new(0.01, 0.01);

        let mut drift: f64 = 0.0;
        // t_total / k = 102 levels, which is 100 executed steps.
        scheme::run(levels, &params, 1.02, |state| {
            let newest = state.newest();
            state.grid().for_each_interior(|_, storage| {
                let v = newest.raw()[storage];
                for comp in 0..3 {
                    drift = drift.max((v[comp] - constant[comp]).abs());
                }
            });
        })
        .expect("steady state run must complete");
        worst = worst.max(drift);
    }

    let pass = worst <= 1e-12;
    let line = format!(
        "criterion 10 {}: constant unit field drifts {:.3e} over 100 steps with zero \
         forcing, target 1e-12",
        verdict(pass),
        worst
    );
    println!("{line}");
    assert!(pass, "{line}");
}
