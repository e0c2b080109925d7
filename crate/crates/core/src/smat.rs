//! Matrices over precision-tracked Laurent series.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Fe, FieldSpec};
use crate::series::LaurentSeries;

/// Row-major dense matrix with [`LaurentSeries`] entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SMat {
    field: Arc<FieldSpec>,
    rows: usize,
    cols: usize,
    data: Vec<LaurentSeries>,
}

impl SMat {
    pub fn zero(field: Arc<FieldSpec>, rows: usize, cols: usize) -> Self {
        let z = LaurentSeries::zero(field.clone());
        SMat { field, rows, cols, data: vec![z; rows * cols] }
    }

    pub fn identity(field: Arc<FieldSpec>, n: usize) -> Self {
        let mut m = Self::zero(field.clone(), n, n);
        for i in 0..n {
            m.set(i, i, LaurentSeries::one(field.clone()));
        }
        m
    }

    pub fn from_entries(field: Arc<FieldSpec>, rows: usize, cols: usize, data: Vec<LaurentSeries>) -> Self {
        assert_eq!(data.len(), rows * cols);
        SMat { field, rows, cols, data }
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
    pub fn get(&self, i: usize, j: usize) -> &LaurentSeries {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: LaurentSeries) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> impl Iterator<Item = &LaurentSeries> {
        self.data.iter()
    }

    pub fn mul(&self, other: &SMat) -> SMat {
        assert_eq!(self.cols, other.rows);
        let mut out = SMat::zero(self.field.clone(), self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = LaurentSeries::zero(self.field.clone());
                for k in 0..self.cols {
                    acc = acc.add(&self.get(i, k).mul(other.get(k, j)));
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn add(&self, other: &SMat) -> SMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.add(b)).collect();
        SMat { field: self.field.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &SMat) -> SMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.sub(b)).collect();
        SMat { field: self.field.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn neg(&self) -> SMat {
        let data = self.data.iter().map(|a| a.neg()).collect();
        SMat { field: self.field.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: &LaurentSeries) -> SMat {
        let data = self.data.iter().map(|a| a.mul(s)).collect();
        SMat { field: self.field.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn transpose(&self) -> SMat {
        let mut out = SMat::zero(self.field.clone(), self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    /// Entrywise Frobenius substitution u -> u^p.
    pub fn frobenius(&self) -> SMat {
        let data = self.data.iter().map(|a| a.frobenius_substitute()).collect();
        SMat { field: self.field.clone(), rows: self.rows, cols: self.cols, data }
    }

    /// Entrywise inverse substitution u^p -> u (entries must live in F[[u^p]]).
    pub fn desubstitute(&self) -> Result<SMat> {
        let data: Result<Vec<_>> = self.data.iter().map(|a| a.desubstitute()).collect();
        Ok(SMat { field: self.field.clone(), rows: self.rows, cols: self.cols, data: data? })
    }

    /// Kronecker product with column-major vec convention:
    /// (A (x) B) vec(X) = vec(B X A^T).
    pub fn kronecker(&self, other: &SMat) -> SMat {
        let mut out = SMat::zero(self.field.clone(), self.rows * other.rows, self.cols * other.cols);
        for a in 0..self.rows {
            for c in 0..self.cols {
                let s = self.get(a, c);
                if s.is_certified_zero() {
                    continue;
                }
                for b in 0..other.rows {
                    for d in 0..other.cols {
                        out.set(a * other.rows + b, c * other.cols + d, s.mul(other.get(b, d)));
                    }
                }
            }
        }
        out
    }

    /// True when all known coefficients sit at non-negative exponents.
    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|s| s.is_zero_within_prec() || s.val() >= 0)
    }

    /// Smallest certified window over the entries.
    pub fn min_window(&self) -> i64 {
        self.data.iter().map(|s| s.first_unknown()).min().unwrap_or(i64::MAX)
    }

    /// Largest pole depth visible among the entries (0 for integral matrices).
    pub fn pole_depth(&self) -> i64 {
        self.data
            .iter()
            .filter(|s| !s.is_zero_within_prec())
            .map(|s| (-s.val()).max(0))
            .max()
            .unwrap_or(0)
    }

    /// A generous elimination window for exact inputs: wide enough that
    /// valuation bookkeeping cannot starve before the answer is certified.
    pub fn auto_window(&self) -> i64 {
        let hi = self
            .data
            .iter()
            .filter_map(|s| s.degree().or_else(|| Some(s.first_unknown().min(1 << 20))))
            .max()
            .unwrap_or(1);
        let lo = self.data.iter().map(|s| s.val().min(0)).min().unwrap_or(0);
        let n = self.rows.max(self.cols) as i64;
        (hi - lo + 2) * (n + 1) + 16
    }

    /// Agreement on every exponent certified by both sides, entrywise.
    pub fn agrees_with(&self, other: &SMat) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| a.agrees_with(b))
    }

    /// Entrywise equality of all coefficients on `[lo, hi)`.
    pub fn agrees_on_window(&self, other: &SMat, lo: i64, hi: i64) -> Result<bool> {
        for (a, b) in self.data.iter().zip(&other.data) {
            if !a.agrees_on_window(b, lo, hi)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Inverse by Gaussian elimination with valuation-minimal pivoting.
    ///
    /// `win` bounds the number of certified coefficients produced when exact
    /// entries have to be inverted (inverses of non-monomial units are
    /// infinite series). Errors with `ZeroLeadingCoefficient` /
    /// `InsufficientPrecision` when a pivot cannot be certified.
    pub fn inverse(&self, win: i64) -> Result<SMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut work = self.clone();
        let mut inv = SMat::identity(self.field.clone(), n);

        for k in 0..n {
            // valuation-minimal visible pivot in column k at rows >= k
            let mut best: Option<(usize, i64)> = None;
            let mut saw_window_only = false;
            for i in k..n {
                match work.get(i, k).leading() {
                    Ok((v, _)) => {
                        if best.map_or(true, |(_, bv)| v < bv) {
                            best = Some((i, v));
                        }
                    }
                    Err(Error::ZeroLeadingCoefficient { .. }) => saw_window_only = true,
                    Err(_) => {}
                }
            }
            let Some((pi, _)) = best else {
                if saw_window_only {
                    return Err(Error::InsufficientPrecision(format!(
                        "cannot certify a pivot in column {k} during inversion"
                    )));
                }
                return Err(Error::BadInput("matrix is singular over F((u))".into()));
            };
            if pi != k {
                for j in 0..n {
                    let a = work.get(k, j).clone();
                    work.set(k, j, work.get(pi, j).clone());
                    work.set(pi, j, a);
                    let b = inv.get(k, j).clone();
                    inv.set(k, j, inv.get(pi, j).clone());
                    inv.set(pi, j, b);
                }
            }
            let piv_inv = work.get(k, k).invert(win)?;
            for j in 0..n {
                work.set(k, j, work.get(k, j).mul(&piv_inv));
                inv.set(k, j, inv.get(k, j).mul(&piv_inv));
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let factor = work.get(i, k).clone();
                if factor.is_zero_within_prec() {
                    continue;
                }
                for j in 0..n {
                    let w = work.get(i, j).sub(&factor.mul(work.get(k, j)));
                    work.set(i, j, w);
                    let v = inv.get(i, j).sub(&factor.mul(inv.get(k, j)));
                    inv.set(i, j, v);
                }
            }
        }
        Ok(inv)
    }

    /// Valuations of the pivots of a valuation-minimal elimination, ascending.
    ///
    /// This certifies invertibility over F((u)) and computes the elementary
    /// divisor exponents without accumulating the transformation matrices.
    pub fn divisor_valuations(&self, win: i64) -> Result<Vec<i64>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut work = self.clone();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut best: Option<(usize, usize, i64)> = None;
            let mut saw_window_only = false;
            for i in k..n {
                for j in k..n {
                    match work.get(i, j).leading() {
                        Ok((v, _)) => {
                            if best.map_or(true, |(_, _, bv)| v < bv) {
                                best = Some((i, j, v));
                            }
                        }
                        Err(Error::ZeroLeadingCoefficient { .. }) => saw_window_only = true,
                        Err(_) => {}
                    }
                }
            }
            let Some((pi, pj, pv)) = best else {
                if saw_window_only {
                    return Err(Error::InsufficientPrecision(format!(
                        "cannot certify pivot {k} of the elimination"
                    )));
                }
                return Err(Error::BadInput("matrix is singular over F((u))".into()));
            };
            work.swap_rows(pi, k);
            work.swap_cols(pj, k);
            let piv_inv = work.get(k, k).invert(win)?;
            for i in (k + 1)..n {
                let factor = work.get(i, k).mul(&piv_inv);
                if factor.is_zero_within_prec() {
                    continue;
                }
                for j in k..n {
                    let w = work.get(i, j).sub(&factor.mul(work.get(k, j)));
                    work.set(i, j, w);
                }
            }
            for j in (k + 1)..n {
                let factor = work.get(k, j).mul(&piv_inv);
                if factor.is_zero_within_prec() {
                    continue;
                }
                for i in k..n {
                    let w = work.get(i, j).sub(&factor.mul(work.get(i, k)));
                    work.set(i, j, w);
                }
            }
            out.push(pv);
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            let t = self.get(a, j).clone();
            self.set(a, j, self.get(b, j).clone());
            self.set(b, j, t);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            let t = self.get(i, a).clone();
            self.set(i, a, self.get(i, b).clone());
            self.set(i, b, t);
        }
    }

    /// Constant matrix embedding.
    pub fn from_fe(field: Arc<FieldSpec>, rows: usize, cols: usize, data: &[Fe]) -> Self {
        assert_eq!(data.len(), rows * cols);
        let entries = data
            .iter()
            .map(|&c| LaurentSeries::constant(field.clone(), c))
            .collect();
        Self::from_entries(field, rows, cols, entries)
    }

    /// Diagonal matrix of monomials u^{r_i}.
    pub fn diag_monomials(field: Arc<FieldSpec>, exps: &[i64]) -> Self {
        let n = exps.len();
        let mut m = Self::zero(field.clone(), n, n);
        for (i, &e) in exps.iter().enumerate() {
            m.set(i, i, LaurentSeries::monomial(field.clone(), Fe::ONE, e));
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;

    fn f3() -> Arc<FieldSpec> {
        FieldSpec::new(3, vec![1, 1]).unwrap()
    }

    fn series(field: &Arc<FieldSpec>, val: i64, cs: &[u32]) -> LaurentSeries {
        LaurentSeries::from_coeffs(field.clone(), val, cs.iter().map(|&c| Fe(c)).collect())
    }

    #[test]
    fn inverse_roundtrip() {
        let f = f3();
        let m = SMat::from_entries(
            f.clone(),
            2,
            2,
            vec![series(&f, 0, &[1, 1]), series(&f, 1, &[2]), series(&f, 0, &[0]), series(&f, 0, &[2, 0, 1])],
        );
        let inv = m.inverse(32).unwrap();
        let prod = m.mul(&inv);
        let id = SMat::identity(f, 2);
        assert!(prod.agrees_on_window(&id, -4, 20).unwrap());
    }

    #[test]
    fn divisor_valuations_of_diag() {
        let f = f3();
        let m = SMat::diag_monomials(f.clone(), &[2, 0]);
        assert_eq!(m.divisor_valuations(16).unwrap(), vec![0, 2]);
        let singular = SMat::from_entries(
            f.clone(),
            2,
            2,
            vec![series(&f, 0, &[1]), series(&f, 0, &[1]), series(&f, 0, &[1]), series(&f, 0, &[1])],
        );
        assert!(singular.divisor_valuations(16).is_err());
    }

    #[test]
    fn kronecker_convention() {
        // (A (x) B) vec(X) = vec(B X A^T) with column-major vec
        let f = f3();
        let a = SMat::from_entries(
            f.clone(),
            2,
            2,
            vec![series(&f, 0, &[1]), series(&f, 0, &[2]), series(&f, 1, &[1]), series(&f, 0, &[0])],
        );
        let b = SMat::from_entries(
            f.clone(),
            2,
            2,
            vec![series(&f, 0, &[0, 1]), series(&f, 0, &[1]), series(&f, 0, &[2]), series(&f, 0, &[1, 1])],
        );
        let x = SMat::from_entries(
            f.clone(),
            2,
            2,
            vec![series(&f, 0, &[1]), series(&f, 2, &[1]), series(&f, 0, &[1, 2]), series(&f, 0, &[2])],
        );
        let vec_x = |m: &SMat| {
            let mut v = Vec::new();
            for c in 0..m.cols() {
                for r in 0..m.rows() {
                    v.push(m.get(r, c).clone());
                }
            }
            v
        };
        let lhs = {
            let k = a.kronecker(&b);
            let xv = vec_x(&x);
            let mut out = Vec::new();
            for i in 0..4 {
                let mut acc = LaurentSeries::zero(f.clone());
                for j in 0..4 {
                    acc = acc.add(&k.get(i, j).mul(&xv[j]));
                }
                out.push(acc);
            }
            out
        };
        let rhs = vec_x(&b.mul(&x).mul(&a.transpose()));
        for (l, r) in lhs.iter().zip(&rhs) {
            assert_eq!(l, r);
        }
    }
}
