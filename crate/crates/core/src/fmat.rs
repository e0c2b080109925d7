//! Dense exact linear algebra over F_{p^m}.
//!
//! This is the workhorse behind every graded-dimension, kernel and cokernel
//! computation: plain Gaussian elimination over a small finite field, with no
//! floating point anywhere.

use std::sync::Arc;

use crate::field::{Fe, FieldSpec};

/// Row-major dense matrix over the coefficient field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FMat {
    field: Arc<FieldSpec>,
    rows: usize,
    cols: usize,
    data: Vec<Fe>,
}

impl FMat {
    pub fn zero(field: Arc<FieldSpec>, rows: usize, cols: usize) -> Self {
        FMat { field, rows, cols, data: vec![Fe::ZERO; rows * cols] }
    }

    pub fn identity(field: Arc<FieldSpec>, n: usize) -> Self {
        let mut m = Self::zero(field, n, n);
        for i in 0..n {
            m.set(i, i, Fe::ONE);
        }
        m
    }

    pub fn from_rows(field: Arc<FieldSpec>, rows: Vec<Vec<Fe>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend(row);
        }
        FMat { field, rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Fe {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Fe) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Fe] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul(&self, other: &FMat) -> FMat {
        assert_eq!(self.cols, other.rows);
        let f = &self.field;
        let mut out = FMat::zero(self.field.clone(), self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = f.add(out.get(i, j), f.mul(a, other.get(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Fe]) -> Vec<Fe> {
        assert_eq!(self.cols, v.len());
        let f = &self.field;
        (0..self.rows)
            .map(|i| {
                let mut acc = Fe::ZERO;
                for j in 0..self.cols {
                    acc = f.add(acc, f.mul(self.get(i, j), v[j]));
                }
                acc
            })
            .collect()
    }

    /// In-place reduced row echelon form; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let f = self.field.clone();
        let mut pivots = Vec::new();
        let mut r = 0usize;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(pr) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            if pr != r {
                for j in 0..self.cols {
                    let (a, b) = (self.get(r, j), self.get(pr, j));
                    self.set(r, j, b);
                    self.set(pr, j, a);
                }
            }
            let inv = f.inv(self.get(r, c)).expect("pivot nonzero");
            for j in 0..self.cols {
                self.set(r, j, f.mul(self.get(r, j), inv));
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let factor = self.get(i, c);
                if factor.is_zero() {
                    continue;
                }
                for j in 0..self.cols {
                    let v = f.sub(self.get(i, j), f.mul(factor, self.get(r, j)));
                    self.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    pub fn nullity(&self) -> usize {
        self.cols - self.rank()
    }

    /// Basis of the right kernel, one vector per free column.
    pub fn kernel_basis(&self) -> Vec<Vec<Fe>> {
        let f = self.field.clone();
        let mut m = self.clone();
        let pivots = m.rref();
        let pivot_of_col: Vec<Option<usize>> = {
            let mut v = vec![None; self.cols];
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = Some(r);
            }
            v
        };
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_of_col[free].is_some() {
                continue;
            }
            let mut vec = vec![Fe::ZERO; self.cols];
            vec[free] = Fe::ONE;
            for (r, &c) in pivots.iter().enumerate() {
                vec[c] = f.neg(m.get(r, free));
            }
            basis.push(vec);
        }
        basis
    }

    /// One solution of `self * x = b`, if any.
    pub fn solve(&self, b: &[Fe]) -> Option<Vec<Fe>> {
        assert_eq!(b.len(), self.rows);
        let f = self.field.clone();
        let mut aug = FMat::zero(self.field.clone(), self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, self.cols, b[i]);
        }
        let pivots = aug.rref();
        if pivots.contains(&self.cols) {
            return None; // inconsistent
        }
        let mut x = vec![Fe::ZERO; self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = aug.get(r, self.cols);
        }
        // check (handles rows beyond rank)
        let fx = self.mul_vec(&x);
        if fx.iter().zip(b).all(|(a, c)| a == c) {
            Some(x)
        } else {
            debug_assert!(false, "rref solve produced a non-solution");
            let _ = f;
            None
        }
    }

    /// Dimension of the projection of the right kernel onto the first
    /// `head_cols` coordinates: nullity(A) - nullity(A restricted to the tail).
    pub fn kernel_projection_dim(&self, head_cols: usize) -> usize {
        assert!(head_cols <= self.cols);
        let tail = self.cols - head_cols;
        let mut sub = FMat::zero(self.field.clone(), self.rows, tail);
        for i in 0..self.rows {
            for j in 0..tail {
                sub.set(i, j, self.get(i, head_cols + j));
            }
        }
        self.nullity() - sub.nullity()
    }

    /// Row-space membership: can `v` be written as a combination of the rows?
    pub fn row_space_contains(&self, v: &[Fe]) -> bool {
        let mut m = self.clone();
        let rank = m.rref().len();
        let mut aug = self.clone();
        aug.data.extend_from_slice(v);
        aug.rows += 1;
        aug.rank() == rank
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;

    #[test]
    fn rank_kernel_solve_over_f9() {
        let f = FieldSpec::new(3, vec![1, 0, 1]).unwrap();
        let g = f.generator();
        let m = FMat::from_rows(
            f.clone(),
            vec![
                vec![Fe::ONE, g, Fe::ZERO],
                vec![Fe::ZERO, Fe::ZERO, Fe::ONE],
                vec![Fe::ONE, g, Fe::ONE],
            ],
        );
        assert_eq!(m.rank(), 2);
        let ker = m.kernel_basis();
        assert_eq!(ker.len(), 1);
        for v in &ker {
            assert!(m.mul_vec(v).iter().all(|c| c.is_zero()));
        }
        let b = vec![g, Fe::ONE, f.add(g, Fe::ONE)];
        let x = m.solve(&b).unwrap();
        assert_eq!(m.mul_vec(&x), b);
        assert!(m.solve(&vec![Fe::ONE, Fe::ZERO, Fe::ZERO]).is_none());
    }

    #[test]
    fn kernel_projection() {
        let f = FieldSpec::new(2, vec![1, 1]).unwrap();
        // x0 + x2 = 0, x1 = 0 over F_2: kernel = {(t, 0, t)}, projection on x0 has dim 1
        let m = FMat::from_rows(
            f,
            vec![vec![Fe::ONE, Fe::ZERO, Fe::ONE], vec![Fe::ZERO, Fe::ONE, Fe::ZERO]],
        );
        assert_eq!(m.kernel_projection_dim(1), 1);
        assert_eq!(m.kernel_projection_dim(2), 1);
        assert_eq!(m.kernel_projection_dim(3), 1);
    }
}
