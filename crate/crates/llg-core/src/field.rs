//! Vector and scalar fields on a [`Grid`].
//!
//! A `VectorField` stores one `[f64; 3]` per cell including the two ghost
//! layers on every side. Ghosts are filled by even reflection about each
//! face (homogeneous Neumann): with 1-based interior cells u_1..u_n,
//!
//! ```text
//! u_0 = u_1,   u_-1 = u_2,   u_{n+1} = u_n,   u_{n+2} = u_{n-1}.
//! ```
//!
//! In three dimensions the reflection is applied axis by axis over the full
//! storage extent of the other axes, so edge and corner ghosts end up as
//! mirrors of mirrors; the result does not depend on axis order.

use crate::grid::{Grid, GHOST_WIDTH};
use crate::vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    data: Vec<[f64; 3]>,
}

/// Interior-only scalar data, indexed by interior cell in cell-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<f64>,
}

/// Discrete error norms. `l2` carries the cell-volume weight h^d; `h1` adds
/// the fourth-order-gradient seminorm: h1^2 = l2^2 + h^d sum |grad v|^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub linf: f64,
    pub l2: f64,
    pub h1: f64,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> VectorField {
        VectorField {
            grid,
            data: vec![[0.0; 3]; grid.storage_len()],
        }
    }

    /// Samples `f` at interior cell centers; ghosts start at zero.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> VectorField {
        let mut field = VectorField::zeros(grid);
        grid.for_each_interior(|cell, storage| {
            field.data[storage] = f(grid.cell_center(cell));
        });
        field
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn raw(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn raw_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.data
    }

    /// Value at an interior cell (cell-major index).
    pub fn get(&self, cell: usize) -> [f64; 3] {
        self.data[self.grid.interior_to_storage(cell)]
    }

    pub fn set(&mut self, cell: usize, value: [f64; 3]) {
        let storage = self.grid.interior_to_storage(cell);
        self.data[storage] = value;
    }

    /// Fills all ghost cells by even reflection about each face. Idempotent.
    pub fn extend_neumann(&mut self) {
        let e = self.grid.ext();
        debug_assert_eq!(GHOST_WIDTH, 2);
        // (ghost, mirror) index pairs along one axis.
        let pairs = [(0, 3), (1, 2), (e - 2, e - 3), (e - 1, e - 4)];
        match self.grid.dim() {
            1 => {
                for (ghost, mirror) in pairs {
                    self.data[ghost] = self.data[mirror];
                }
            }
            _ => {
                for axis in 0..3 {
                    for (ghost, mirror) in pairs {
                        for b in 0..e {
                            for a in 0..e {
                                let (src, dst) = match axis {
                                    0 => (mirror + e * (a + e * b), ghost + e * (a + e * b)),
                                    1 => (a + e * (mirror + e * b), a + e * (ghost + e * b)),
                                    _ => (a + e * (b + e * mirror), a + e * (b + e * ghost)),
                                };
                                self.data[dst] = self.data[src];
                            }
                        }
                    }
                }
            }
        }
    }

    /// Entrywise difference over the full storage (ghosts included).
    pub fn sub(&self, other: &VectorField) -> VectorField {
        assert_eq!(self.grid, other.grid);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| vec3::sub(*a, *b))
            .collect();
        VectorField {
            grid: self.grid,
            data,
        }
    }

    /// Copies interior values into the flat unknown vector: component c of
    /// interior cell i lands at index 3*i + c (cell-major, component-minor).
    pub fn flatten_interior(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.flat_len()];
        self.grid.for_each_interior(|cell, storage| {
            out[3 * cell..3 * cell + 3].copy_from_slice(&self.data[storage]);
        });
        out
    }

    /// Rebuilds a field from the flat unknown vector; ghosts are zero.
    pub fn from_flat(grid: Grid, flat: &[f64]) -> VectorField {
        assert_eq!(flat.len(), grid.flat_len());
        let mut field = VectorField::zeros(grid);
        grid.for_each_interior(|cell, storage| {
            field.data[storage] = [flat[3 * cell], flat[3 * cell + 1], flat[3 * cell + 2]];
        });
        field
    }

    /// Largest deviation of interior cell lengths from one.
    pub fn max_unit_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        self.grid.for_each_interior(|_, storage| {
            worst = worst.max((vec3::norm(self.data[storage]) - 1.0).abs());
        });
        worst
    }

    /// Interior norms of the field. The H1 seminorm applies the fourth-order
    /// gradient to an even-reflection extension of this field, so callers can
    /// pass difference fields without filling ghosts first. Sums run
    /// sequentially in cell-major order, independent of thread count.
    pub fn norms(&self) -> Norms {
        let grid = self.grid;
        let hd = grid.h().powi(grid.dim() as i32);

        let mut linf: f64 = 0.0;
        let mut sum_sq = 0.0;
        grid.for_each_interior(|_, storage| {
            let v = self.data[storage];
            for c in 0..3 {
                linf = linf.max(v[c].abs());
                sum_sq += v[c] * v[c];
            }
        });
        let l2_sq = hd * sum_sq;

        let mut extended = self.clone();
        extended.extend_neumann();
        let mut grad_sq = 0.0;
        for axis_grad in extended.gradient4() {
            grid.for_each_interior(|_, storage| {
                let g = axis_grad.data[storage];
                grad_sq += g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
            });
        }

        Norms {
            linf,
            l2: l2_sq.sqrt(),
            h1: (l2_sq + hd * grad_sq).sqrt(),
        }
    }
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> ScalarField {
        ScalarField {
            grid,
            data: vec![0.0; grid.interior_len()],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn get(&self, cell: usize) -> f64 {
        self.data[cell]
    }

    pub fn set(&mut self, cell: usize, value: f64) {
        self.data[cell] = value;
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }
}
