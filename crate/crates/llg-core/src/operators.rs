//! Fourth-order finite-difference stencils on ghost-extended fields.
//!
//! Per axis, with mesh width h:
//!
//! ```text
//! Lap4 u_i  = (-u_{i-2} + 16 u_{i-1} - 30 u_i + 16 u_{i+1} - u_{i+2}) / (12 h^2)
//! Grad4 u_i = ( u_{i-2} -  8 u_{i-1}          +  8 u_{i+1} - u_{i+2}) / (12 h)
//! ```
//!
//! Both are evaluated in neighbor-difference form, e.g. the Laplacian as
//! 16[(u_{i-1}-u_i) + (u_{i+1}-u_i)] - [(u_{i-2}-u_i) + (u_{i+2}-u_i)], which
//! is the same polynomial but keeps the roundoff of smooth fields at the
//! scale of the result instead of eps/h^2. All operators assume ghost cells
//! are already filled; they read two cells beyond the interior and write
//! interior cells only.

use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;

fn strides(grid: Grid) -> [usize; 3] {
    let e = grid.ext();
    match grid.dim() {
        1 => [1, 0, 0],
        _ => [1, e, e * e],
    }
}

impl VectorField {
    /// Fourth-order Laplacian, summed over the grid's axes. Ghosts of the
    /// result are zero.
    pub fn laplacian4(&self) -> VectorField {
        let grid = self.grid();
        let scale = 1.0 / (12.0 * grid.h() * grid.h());
        let strides = strides(grid);
        let dim = grid.dim();
        let src = self.raw();
        let mut out = VectorField::zeros(grid);
        let dst = out.raw_mut();
        grid.for_each_interior(|_, storage| {
            let u0 = src[storage];
            let mut acc = [0.0f64; 3];
            for &s in &strides[..dim] {
                let um2 = src[storage - 2 * s];
                let um1 = src[storage - s];
                let up1 = src[storage + s];
                let up2 = src[storage + 2 * s];
                for c in 0..3 {
                    let near = (um1[c] - u0[c]) + (up1[c] - u0[c]);
                    let far = (um2[c] - u0[c]) + (up2[c] - u0[c]);
                    acc[c] += 16.0 * near - far;
                }
            }
            dst[storage] = [acc[0] * scale, acc[1] * scale, acc[2] * scale];
        });
        out
    }

    /// Fourth-order first derivative along each axis, one field per axis.
    pub fn gradient4(&self) -> Vec<VectorField> {
        let grid = self.grid();
        let scale = 1.0 / (12.0 * grid.h());
        let strides = strides(grid);
        let src = self.raw();
        (0..grid.dim())
            .map(|axis| {
                let s = strides[axis];
                let mut out = VectorField::zeros(grid);
                let dst = out.raw_mut();
                grid.for_each_interior(|_, storage| {
                    let um2 = src[storage - 2 * s];
                    let um1 = src[storage - s];
                    let up1 = src[storage + s];
                    let up2 = src[storage + 2 * s];
                    let mut g = [0.0f64; 3];
                    for c in 0..3 {
                        g[c] = (8.0 * (up1[c] - um1[c]) - (up2[c] - um2[c])) * scale;
                    }
                    dst[storage] = g;
                });
                out
            })
            .collect()
    }

    /// Pointwise |grad u|^2: the sum over axes and components of squared
    /// fourth-order derivatives.
    pub fn grad_norm_sq(&self) -> ScalarField {
        let grid = self.grid();
        let grads = self.gradient4();
        let mut out = ScalarField::zeros(grid);
        grid.for_each_interior(|cell, storage| {
            let mut acc = 0.0;
            for g in &grads {
                let v = g.raw()[storage];
                acc += v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            }
            out.set(cell, acc);
        });
        out
    }
}
