//! Banded LU factorization with partial pivoting.
//!
//! Stores an n x n matrix with lower bandwidth kl and upper bandwidth ku in
//! the usual packed band layout, column by column, with kl extra rows of
//! headroom so row swaps during elimination can widen the upper band to
//! ku + kl. Factoring is O(n kl (kl + ku)) and a solve is O(n (kl + ku)),
//! which makes exact solves affordable for the block-pentadiagonal systems
//! the one-dimensional scheme produces at every time step.

use crate::error::LlgError;
use crate::krylov::Preconditioner;

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> BandedMatrix {
        assert!(n > 0);
        let ldab = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            ldab,
            data: vec![0.0; ldab * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn index(&self, i: usize, j: usize) -> usize {
        j * self.ldab + self.kl + self.ku + i - j
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.n && j < self.n);
        assert!(
            i <= j + self.kl && j <= i + self.ku,
            "entry ({i}, {j}) lies outside the band"
        );
        let idx = self.index(i, j);
        self.data[idx] += value;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i <= j + self.kl && j <= i + self.ku {
            self.data[self.index(i, j)]
        } else {
            0.0
        }
    }

    /// LU factorization with partial pivoting, consuming the matrix. Fails
    /// only when a pivot column is exactly zero, i.e. the matrix is
    /// singular to working precision.
    pub fn factor(mut self) -> Result<BandedLu, LlgError> {
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let width = kl + ku;
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let reach = kl.min(n - 1 - j);
            let mut p = 0;
            let mut best = self.data[self.index(j, j)].abs();
            for cand in 1..=reach {
                let v = self.data[self.index(j + cand, j)].abs();
                if v > best {
                    best = v;
                    p = cand;
                }
            }
            if best == 0.0 {
                return Err(LlgError::InvalidRun(format!(
                    "banded matrix is singular to working precision at column {j}"
                )));
            }
            ipiv[j] = j + p;
            let last_col = (j + width).min(n - 1);
            if p > 0 {
                for col in j..=last_col {
                    let a = col * ldab + kl + ku + j - col;
                    let b = a + p;
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.index(j, j)];
            for i in 1..=reach {
                let idx = self.index(j + i, j);
                self.data[idx] /= pivot;
            }
            for col in j + 1..=last_col {
                let top = self.data[self.index(j, col)];
                if top == 0.0 {
                    continue;
                }
                let col_base = col * ldab + kl + ku - col;
                for i in 1..=reach {
                    let m = self.data[self.index(j + i, j)];
                    self.data[col_base + j + i] -= m * top;
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            ldab,
            data: self.data,
            ipiv,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    fn index(&self, i: usize, j: usize) -> usize {
        j * self.ldab + self.kl + self.ku + i - j
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        for j in 0..n {
            if self.ipiv[j] != j {
                b.swap(j, self.ipiv[j]);
            }
            let bj = b[j];
            if bj != 0.0 {
                let reach = self.kl.min(n - 1 - j);
                for i in 1..=reach {
                    b[j + i] -= self.data[self.index(j + i, j)] * bj;
                }
            }
        }
        let width = self.kl + self.ku;
        for j in (0..n).rev() {
            b[j] /= self.data[self.index(j, j)];
            let bj = b[j];
            if bj != 0.0 {
                let lo = j.saturating_sub(width);
                for i in lo..j {
                    b[i] -= self.data[self.index(i, j)] * bj;
                }
            }
        }
    }
}

impl Preconditioner for BandedLu {
    fn solve_into(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        self.solve_in_place(z);
    }
}
