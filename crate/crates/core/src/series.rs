//! Precision-tracked Laurent series over F_{p^m}.
//!
//! A series knows its coefficients for all exponents below a "first unknown"
//! bound. Exact values (Laurent polynomials, which is what almost all module
//! data is in practice) carry no bound at all; windowed values arise from
//! inversion and from consuming serialized input. Every operation propagates
//! the worst-case window, and consumers that need more certified coefficients
//! than are available fail loudly with `InsufficientPrecision` instead of
//! returning silently truncated answers.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Fe, FieldSpec};

/// First exponent whose coefficient is not certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prec {
    /// Every coefficient is known (the value is a Laurent polynomial).
    Exact,
    /// Coefficients are known exactly for all exponents below the bound.
    Window(i64),
}

impl Prec {
    #[inline]
    pub fn bound(self) -> i64 {
        match self {
            Prec::Exact => i64::MAX,
            Prec::Window(w) => w,
        }
    }

    fn min(self, other: Prec) -> Prec {
        match (self, other) {
            (Prec::Exact, o) => o,
            (s, Prec::Exact) => s,
            (Prec::Window(a), Prec::Window(b)) => Prec::Window(a.min(b)),
        }
    }
}

/// A Laurent series with explicit valuation and precision metadata.
///
/// `coeffs[i]` is the coefficient of `u^(val + i)`. Exponents below `val` are
/// certified zero; exponents in `[val + coeffs.len(), prec)` are certified
/// zero as well; exponents at or beyond `prec` are unknown.
#[derive(Clone)]
pub struct LaurentSeries {
    field: Arc<FieldSpec>,
    val: i64,
    coeffs: Vec<Fe>,
    prec: Prec,
}

impl fmt::Debug for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u^{}*{:?} (prec {:?})", self.val, self.coeffs.iter().map(|c| c.0).collect::<Vec<_>>(), self.prec)
    }
}

impl PartialEq for LaurentSeries {
    /// Structural equality of the normalized representation. For "equal on
    /// the shared certified window" use [`LaurentSeries::agrees_with`].
    fn eq(&self, other: &Self) -> bool {
        self.val == other.val && self.coeffs == other.coeffs && self.prec == other.prec
    }
}
impl Eq for LaurentSeries {}

impl LaurentSeries {
    fn normalized(field: Arc<FieldSpec>, mut val: i64, mut coeffs: Vec<Fe>, prec: Prec) -> Self {
        // trim certified-zero leading coefficients
        let lead = coeffs.iter().position(|c| !c.is_zero());
        match lead {
            Some(k) => {
                if k > 0 {
                    coeffs.drain(..k);
                    val += k as i64;
                }
                while coeffs.last().is_some_and(|c| c.is_zero()) {
                    coeffs.pop();
                }
            }
            None => {
                coeffs.clear();
                val = match prec {
                    Prec::Exact => 0,
                    Prec::Window(w) => w,
                };
            }
        }
        if let Prec::Window(w) = prec {
            // drop anything the window does not certify
            if val >= w {
                coeffs.clear();
                val = w;
            } else if val + coeffs.len() as i64 > w {
                coeffs.truncate((w - val) as usize);
                while coeffs.last().is_some_and(|c| c.is_zero()) {
                    coeffs.pop();
                }
            }
        }
        LaurentSeries { field, val, coeffs, prec }
    }

    /// Exact Laurent polynomial from little-endian coefficients starting at `val`.
    pub fn from_coeffs(field: Arc<FieldSpec>, val: i64, coeffs: Vec<Fe>) -> Self {
        Self::normalized(field, val, coeffs, Prec::Exact)
    }

    /// Windowed series: coefficients known on `[val, prec)`.
    pub fn from_coeffs_window(field: Arc<FieldSpec>, val: i64, coeffs: Vec<Fe>, prec: i64) -> Self {
        assert!(val + coeffs.len() as i64 <= prec, "coefficients past the stated window");
        Self::normalized(field, val, coeffs, Prec::Window(prec))
    }

    pub fn zero(field: Arc<FieldSpec>) -> Self {
        LaurentSeries { field, val: 0, coeffs: Vec::new(), prec: Prec::Exact }
    }

    /// Zero on the window `(-inf, prec)`, unknown beyond: "zero to precision".
    pub fn zero_to_prec(field: Arc<FieldSpec>, prec: i64) -> Self {
        LaurentSeries { field, val: prec, coeffs: Vec::new(), prec: Prec::Window(prec) }
    }

    pub fn constant(field: Arc<FieldSpec>, c: Fe) -> Self {
        Self::from_coeffs(field, 0, vec![c])
    }

    pub fn one(field: Arc<FieldSpec>) -> Self {
        Self::constant(field, Fe::ONE)
    }

    pub fn monomial(field: Arc<FieldSpec>, c: Fe, e: i64) -> Self {
        Self::from_coeffs(field, e, vec![c])
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    /// Lowest possibly-nonzero exponent.
    pub fn val(&self) -> i64 {
        self.val
    }

    pub fn prec(&self) -> Prec {
        self.prec
    }

    /// First exponent whose coefficient is not certified (i64::MAX if exact).
    pub fn first_unknown(&self) -> i64 {
        self.prec.bound()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.prec, Prec::Exact)
    }

    /// Certified zero everywhere (the exact zero series).
    pub fn is_certified_zero(&self) -> bool {
        self.coeffs.is_empty() && self.is_exact()
    }

    /// All known coefficients vanish (includes certified zero).
    pub fn is_zero_within_prec(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient at exponent `e`; `None` when `e` is outside the certified window.
    pub fn coeff(&self, e: i64) -> Option<Fe> {
        if e >= self.first_unknown() {
            return None;
        }
        if e < self.val || e >= self.val + self.coeffs.len() as i64 {
            return Some(Fe::ZERO);
        }
        Some(self.coeffs[(e - self.val) as usize])
    }

    /// Coefficients on `[lo, hi)`, failing if the window is not certified.
    pub fn coeff_range(&self, lo: i64, hi: i64) -> Result<Vec<Fe>> {
        if hi > self.first_unknown() {
            return Err(Error::InsufficientPrecision(format!(
                "need coefficients up to u^{hi}, certified only below u^{}",
                self.first_unknown()
            )));
        }
        Ok((lo..hi).map(|e| self.coeff(e).unwrap()).collect())
    }

    /// Leading term `(exponent, coefficient)` of a series certified nonzero.
    ///
    /// Errors with `ZeroLeadingCoefficient` when no nonzero coefficient is
    /// visible in the window (a precision-insufficiency signal), and with
    /// `BadInput` on the certified zero series.
    pub fn leading(&self) -> Result<(i64, Fe)> {
        match self.coeffs.first() {
            Some(&c) => Ok((self.val, c)),
            None => {
                if self.is_certified_zero() {
                    Err(Error::BadInput("certified zero series has no leading term".into()))
                } else {
                    Err(Error::ZeroLeadingCoefficient { val: self.val, prec: self.first_unknown() })
                }
            }
        }
    }

    /// Exact degree of a Laurent polynomial.
    pub fn degree(&self) -> Option<i64> {
        if !self.is_exact() || self.coeffs.is_empty() {
            return None;
        }
        Some(self.val + self.coeffs.len() as i64 - 1)
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.field, other.field);
        let prec = self.prec.min(other.prec);
        if self.coeffs.is_empty() && other.coeffs.is_empty() {
            return Self::normalized(self.field.clone(), 0, Vec::new(), prec);
        }
        let lo = self.val.min(other.val);
        let hi = (self.val + self.coeffs.len() as i64).max(other.val + other.coeffs.len() as i64);
        let hi = hi.min(prec.bound());
        let mut out = vec![Fe::ZERO; (hi - lo).max(0) as usize];
        for (i, slot) in out.iter_mut().enumerate() {
            let e = lo + i as i64;
            let a = self.coeff(e).unwrap_or(Fe::ZERO);
            let b = other.coeff(e).unwrap_or(Fe::ZERO);
            *slot = self.field.add(a, b);
        }
        Self::normalized(self.field.clone(), lo, out, prec)
    }

    pub fn neg(&self) -> Self {
        let coeffs = self.coeffs.iter().map(|&c| self.field.neg(c)).collect();
        LaurentSeries { field: self.field.clone(), val: self.val, coeffs, prec: self.prec }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.field, other.field);
        if self.is_certified_zero() || other.is_certified_zero() {
            return Self::zero(self.field.clone());
        }
        // worst-case window: min(val_a + prec_b, val_b + prec_a)
        let prec = match (self.prec, other.prec) {
            (Prec::Exact, Prec::Exact) => Prec::Exact,
            _ => {
                let a = self.val.checked_add(other.prec.bound()).unwrap_or(i64::MAX);
                let b = other.val.checked_add(self.prec.bound()).unwrap_or(i64::MAX);
                Prec::Window(a.min(b))
            }
        };
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::normalized(self.field.clone(), 0, Vec::new(), prec);
        }
        let lo = self.val + other.val;
        let full = self.coeffs.len() + other.coeffs.len() - 1;
        let keep = match prec {
            Prec::Exact => full as i64,
            Prec::Window(w) => (w - lo).clamp(0, full as i64),
        };
        let mut out = vec![Fe::ZERO; keep as usize];
        let f = &self.field;
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let jmax = ((keep - i as i64).min(other.coeffs.len() as i64)).max(0) as usize;
            for (j, &b) in other.coeffs.iter().enumerate().take(jmax) {
                let slot = &mut out[i + j];
                *slot = f.add(*slot, f.mul(a, b));
            }
        }
        Self::normalized(self.field.clone(), lo, out, prec)
    }

    pub fn scale(&self, c: Fe) -> Self {
        if c.is_zero() {
            return Self::normalized(self.field.clone(), 0, Vec::new(), self.prec);
        }
        let coeffs = self.coeffs.iter().map(|&a| self.field.mul(a, c)).collect();
        LaurentSeries { field: self.field.clone(), val: self.val, coeffs, prec: self.prec }
    }

    /// Multiply by `u^k`.
    pub fn shift(&self, k: i64) -> Self {
        let prec = match self.prec {
            Prec::Exact => Prec::Exact,
            Prec::Window(w) => Prec::Window(w + k),
        };
        LaurentSeries {
            field: self.field.clone(),
            val: if self.coeffs.is_empty() && self.is_exact() { 0 } else { self.val + k },
            coeffs: self.coeffs.clone(),
            prec,
        }
    }

    /// Forget certification at and beyond `w`.
    pub fn truncate_to(&self, w: i64) -> Self {
        Self::normalized(self.field.clone(), self.val, self.coeffs.clone(), Prec::Window(w.min(self.first_unknown())))
    }

    /// The Frobenius substitution on series: sum a_i u^i -> sum a_i u^(i p).
    ///
    /// Coefficients are fixed; between stretched exponents the output is
    /// certified zero, so the window multiplies by p.
    pub fn frobenius_substitute(&self) -> Self {
        let p = self.field.p() as i64;
        let prec = match self.prec {
            Prec::Exact => Prec::Exact,
            Prec::Window(w) => Prec::Window(w.saturating_mul(p)),
        };
        if self.coeffs.is_empty() {
            return Self::normalized(self.field.clone(), 0, Vec::new(), prec);
        }
        let mut out = vec![Fe::ZERO; (self.coeffs.len() - 1) * p as usize + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i * p as usize] = c;
        }
        Self::normalized(self.field.clone(), self.val * p, out, prec)
    }

    /// Iterated Frobenius substitution u -> u^(p^n).
    pub fn frobenius_power(&self, n: u32) -> Self {
        let mut s = self.clone();
        for _ in 0..n {
            s = s.frobenius_substitute();
        }
        s
    }

    /// Inverse substitution u^p -> u, defined on series supported on exponents
    /// divisible by p. Errors if a known coefficient sits at a non-multiple.
    pub fn desubstitute(&self) -> Result<Self> {
        let p = self.field.p() as i64;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() && (self.val + i as i64).rem_euclid(p) != 0 {
                return Err(Error::BadInput(format!(
                    "series has a coefficient at exponent {} not divisible by {p}",
                    self.val + i as i64
                )));
            }
        }
        let prec = match self.prec {
            Prec::Exact => Prec::Exact,
            // first unknown input exponent w certifies output below ceil(w/p)
            Prec::Window(w) => Prec::Window(w.div_euclid(p) + i64::from(w.rem_euclid(p) != 0)),
        };
        if self.coeffs.is_empty() {
            return Ok(Self::normalized(self.field.clone(), 0, Vec::new(), prec));
        }
        let lo = self.val.div_euclid(p) + i64::from(self.val.rem_euclid(p) != 0);
        let hi = (self.val + self.coeffs.len() as i64 - 1).div_euclid(p);
        let mut out = vec![Fe::ZERO; (hi - lo + 1).max(0) as usize];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.coeff((lo + i as i64) * p).unwrap_or(Fe::ZERO);
        }
        Ok(Self::normalized(self.field.clone(), lo, out, prec))
    }

    /// Multiplicative inverse.
    ///
    /// The leading coefficient must be visible within the precision window.
    /// For a windowed input the result is certified on `[-val, prec - 2 val)`.
    /// Exact non-monomial inputs have a genuinely infinite expansion, so the
    /// caller supplies `exact_terms`, the number of unit-part coefficients to
    /// produce in that case.
    pub fn invert(&self, exact_terms: i64) -> Result<Self> {
        let (e, c) = self.leading()?;
        let cinv = self.field.inv(c)?;
        if self.coeffs.len() == 1 && self.is_exact() {
            return Ok(Self::monomial(self.field.clone(), cinv, -e));
        }
        // s = c u^e (1 + t); 1/(1+t) by the coefficient recursion
        let terms = match self.prec {
            Prec::Exact => exact_terms.max(1),
            Prec::Window(w) => w - e,
        };
        let f = &self.field;
        let mut t = vec![Fe::ZERO; terms.max(0) as usize]; // t[k] = coeff of u^k in t, k >= 1 used
        for k in 1..terms {
            let raw = self.coeff(e + k).unwrap_or(Fe::ZERO);
            t[k as usize] = f.mul(raw, cinv);
        }
        let mut b = vec![Fe::ZERO; terms.max(0) as usize];
        if terms > 0 {
            b[0] = Fe::ONE;
            for k in 1..terms as usize {
                let mut acc = Fe::ZERO;
                for j in 1..=k {
                    acc = f.add(acc, f.mul(t[j], b[k - j]));
                }
                b[k] = f.neg(acc);
            }
        }
        let out: Vec<Fe> = b.iter().map(|&x| f.mul(x, cinv)).collect();
        let prec = match self.prec {
            Prec::Exact => Prec::Window(-e + terms),
            Prec::Window(w) => Prec::Window(w - 2 * e),
        };
        Ok(Self::normalized(self.field.clone(), -e, out, prec))
    }

    /// True when the two series agree on every exponent both certify, and the
    /// shared window covers at least `[lo_of_interest, min_window)`.
    pub fn agrees_with(&self, other: &Self) -> bool {
        let hi = self.first_unknown().min(other.first_unknown());
        let lo = self.val.min(other.val);
        if lo >= hi {
            return true;
        }
        (lo..hi).all(|e| self.coeff(e) == other.coeff(e))
    }

    /// Certified-equal to an exact target on the target's full support and
    /// certified zero on the rest of the shared window.
    pub fn agrees_on_window(&self, other: &Self, lo: i64, hi: i64) -> Result<bool> {
        let a = self.coeff_range(lo, hi)?;
        let b = other.coeff_range(lo, hi)?;
        Ok(a == b)
    }

    /// Constant term of a series with val >= 0.
    pub fn eval_at_zero(&self) -> Fe {
        self.coeff(0).unwrap_or(Fe::ZERO)
    }
}

/// Solve the unit-twist equation `phi^n(z) = x^n f z` for a unit `f` of F[[u]].
///
/// Returns a unit `z` (certified to `terms` coefficients for exact `f`) and
/// the constant `x`, the smallest n-th root of `f(0)^{-1}`. The degree-k
/// coefficient of `z` is determined by lower ones because the substitution
/// shifts degrees to multiples of p^n.
pub fn solve_unit_twist(f: &LaurentSeries, n: u32, terms: i64) -> Result<(LaurentSeries, Fe)> {
    let (e, c0) = f.leading()?;
    if e != 0 {
        return Err(Error::BadInput(format!("solve_unit_twist needs a unit of F[[u]], got valuation {e}")));
    }
    let fld = f.field().clone();
    let x = fld.nth_root(fld.inv(c0)?, n as u64)?;
    // g = x^n f has g(0) = 1; solve phi^n(z) = g z with z(0) = 1.
    let g = f.scale(fld.pow(x, n as u64));
    let pn = (fld.p() as i64).checked_pow(n).ok_or_else(|| Error::BadInput("p^n overflow".into()))?;
    let terms = terms.max(1).min(g.first_unknown());
    let mut z = vec![Fe::ZERO; terms as usize];
    z[0] = Fe::ONE;
    for ee in 1..terms {
        // z_e = [p^n | e] z_{e/p^n} - sum_{a=1}^{e} g_a z_{e-a}
        let mut acc = if ee % pn == 0 { z[(ee / pn) as usize] } else { Fe::ZERO };
        for a in 1..=ee {
            let ga = g.coeff(a).unwrap_or(Fe::ZERO);
            if !ga.is_zero() {
                acc = fld.sub(acc, fld.mul(ga, z[(ee - a) as usize]));
            }
        }
        z[ee as usize] = acc;
    }
    let prec = if g.is_exact() { Prec::Window(terms) } else { Prec::Window(terms) };
    Ok((LaurentSeries::normalized(fld, 0, z, prec), x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;

    fn f3() -> Arc<FieldSpec> {
        FieldSpec::new(3, vec![1, 1]).unwrap() // F_3 itself (x + 1)
    }

    fn s(field: &Arc<FieldSpec>, val: i64, cs: &[u32]) -> LaurentSeries {
        LaurentSeries::from_coeffs(field.clone(), val, cs.iter().map(|&c| Fe(c)).collect())
    }

    #[test]
    fn frobenius_of_binomial() {
        let f = f3();
        let one_plus_u = s(&f, 0, &[1, 1]);
        let phi = one_plus_u.frobenius_substitute();
        assert_eq!(phi, s(&f, 0, &[1, 0, 0, 1])); // 1 + u^3
        assert!(LaurentSeries::zero(f.clone()).frobenius_substitute().is_certified_zero());
    }

    #[test]
    fn frobenius_is_multiplicative() {
        // (1+u)(1+u^2): expand both routes by schoolbook multiplication, p = 3
        let f = f3();
        let a = s(&f, 0, &[1, 1]);
        let b = s(&f, 0, &[1, 0, 1]);
        let lhs = a.mul(&b).frobenius_substitute();
        let rhs = a.frobenius_substitute().mul(&b.frobenius_substitute());
        assert!(lhs.agrees_on_window(&rhs, 0, 30).unwrap());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn invert_monomial_and_geometric() {
        let f = f3();
        let u2 = s(&f, 2, &[1]);
        assert_eq!(u2.invert(0).unwrap(), s(&f, -2, &[1]));

        // (1+u)^{-1} = 1 - u + u^2 - ... over F_3
        let inv = s(&f, 0, &[1, 1]).invert(10).unwrap();
        for k in 0..10 {
            let expect = if k % 2 == 0 { Fe(1) } else { Fe(2) };
            assert_eq!(inv.coeff(k).unwrap(), expect);
        }
        let back = inv.mul(&s(&f, 0, &[1, 1]));
        assert!(back.agrees_on_window(&LaurentSeries::one(f.clone()), 0, 10).unwrap());
    }

    #[test]
    fn invert_zero_window_errors() {
        let f = f3();
        let z = LaurentSeries::zero_to_prec(f, 5);
        match z.invert(4) {
            Err(Error::ZeroLeadingCoefficient { .. }) => {}
            other => panic!("expected ZeroLeadingCoefficient, got {other:?}"),
        }
    }

    #[test]
    fn window_propagation_through_mul() {
        let f = f3();
        let a = s(&f, -1, &[1, 1]).truncate_to(6); // known on (-inf, 6)
        let b = s(&f, 2, &[2]); // exact monomial
        let prod = a.mul(&b);
        assert_eq!(prod.first_unknown(), 8);
        assert_eq!(prod.coeff(1), Some(Fe(2)));
        assert_eq!(prod.coeff(8), None);
    }

    #[test]
    fn unit_twist_identity_and_substitution_check() {
        let f = f3();
        let (z, x) = solve_unit_twist(&LaurentSeries::one(f.clone()), 1, 8).unwrap();
        assert_eq!(x, Fe::ONE);
        assert!(z.agrees_on_window(&LaurentSeries::one(f.clone()), 0, 8).unwrap());

        // f = 1 + u over F_2, n = 1: z(u^2) = x (1+u) z(u) to high precision
        let f2 = FieldSpec::new(2, vec![1, 1]).unwrap();
        let one_plus_u = LaurentSeries::from_coeffs(f2.clone(), 0, vec![Fe::ONE, Fe::ONE]);
        let (z, x) = solve_unit_twist(&one_plus_u, 1, 64).unwrap();
        assert_eq!(x, Fe::ONE); // f(0) = 1
        let lhs = z.frobenius_substitute();
        let rhs = one_plus_u.mul(&z).scale(x);
        assert!(lhs.agrees_with(&rhs));
        assert!(lhs.first_unknown() >= 64);
    }

    #[test]
    fn desubstitute_roundtrip() {
        let f = f3();
        let a = s(&f, -1, &[2, 0, 1, 1]);
        let sub = a.frobenius_substitute();
        assert_eq!(sub.desubstitute().unwrap(), a);
        assert!(s(&f, 0, &[1, 1]).desubstitute().is_err());
    }
}
