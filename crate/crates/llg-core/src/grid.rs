//! Cell-centered uniform grids on the unit interval / unit cube.
//!
//! Each axis carries n cells with centers x_i = (i + 1/2) h, h = 1/n, plus
//! two ghost cells on each side for the wide fourth-order stencils. Interior
//! cells are enumerated in cell-major order with the x index fastest:
//! cell = ix + n*(iy + n*iz).

/// Ghost layers per side. Matches the widest stencil half-width.
pub const GHOST_WIDTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    dim: usize,
    n: usize,
}

impl Grid {
    /// A `dim`-dimensional grid (`dim` is 1 or 3) with `n >= 2` cells per axis.
    /// The reflection ghost fill reaches two interior cells deep, hence the
    /// lower bound on `n`.
    pub fn new(dim: usize, n: usize) -> Grid {
        assert!(dim == 1 || dim == 3, "grid dimension must be 1 or 3");
        assert!(n >= 2, "grid needs at least 2 cells per axis");
        Grid { dim, n }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Mesh width h = 1/n.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Storage extent per axis including ghosts.
    pub fn ext(&self) -> usize {
        self.n + 2 * GHOST_WIDTH
    }

    /// Number of interior cells.
    pub fn interior_len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Number of stored cells including ghosts.
    pub fn storage_len(&self) -> usize {
        self.ext().pow(self.dim as u32)
    }

    /// Unknown count of the flattened vector form (three components per cell).
    pub fn flat_len(&self) -> usize {
        3 * self.interior_len()
    }

    /// Storage index of the interior cell with the given interior linear index.
    pub fn interior_to_storage(&self, cell: usize) -> usize {
        let g = GHOST_WIDTH;
        match self.dim {
            1 => cell + g,
            _ => {
                let e = self.ext();
                let ix = cell % self.n;
                let iy = (cell / self.n) % self.n;
                let iz = cell / (self.n * self.n);
                (ix + g) + e * ((iy + g) + e * (iz + g))
            }
        }
    }

    /// Center coordinates of an interior cell; unused axes are zero.
    pub fn cell_center(&self, cell: usize) -> [f64; 3] {
        let h = self.h();
        match self.dim {
            1 => [(cell as f64 + 0.5) * h, 0.0, 0.0],
            _ => {
                let ix = cell % self.n;
                let iy = (cell / self.n) % self.n;
                let iz = cell / (self.n * self.n);
                [
                    (ix as f64 + 0.5) * h,
                    (iy as f64 + 0.5) * h,
                    (iz as f64 + 0.5) * h,
                ]
            }
        }
    }

    /// Calls `f(cell, storage)` for every interior cell in cell-major order.
    pub fn for_each_interior(&self, mut f: impl FnMut(usize, usize)) {
        let g = GHOST_WIDTH;
        let n = self.n;
        match self.dim {
            1 => {
                for i in 0..n {
                    f(i, i + g);
                }
            }
            _ => {
                let e = self.ext();
                let mut cell = 0;
                for iz in 0..n {
                    for iy in 0..n {
                        let row = e * ((iy + g) + e * (iz + g)) + g;
                        for ix in 0..n {
                            f(cell, row + ix);
                            cell += 1;
                        }
                    }
                }
            }
        }
    }
}
