//! Arithmetic in F_{p^m} presented over a user-supplied defining polynomial.
//!
//! Elements are stored as table indices ([`Fe`]); the coefficient-vector view
//! required by the on-disk format is recovered through [`FieldSpec::coeffs`].
//! No canonical (Conway) polynomial is assumed: the modulus is part of the
//! field description and is validated for irreducibility at construction.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// An element of F_{p^m}, encoded as the integer whose base-p digits are the
/// coefficients of the element on the power basis of the modulus root.
///
/// The encoding is only meaningful relative to a [`FieldSpec`]; all arithmetic
/// goes through the spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fe(pub u32);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// F_{p^m} with precomputed exp/log tables for multiplication and a digitwise
/// (or xor, for p = 2) addition path.
pub struct FieldSpec {
    p: u32,
    m: u32,
    q: u32,
    modulus: Vec<u32>,
    /// exp[i] = generator^i, length 2(q-1) so products of logs need no reduction.
    exp: Vec<u32>,
    /// log[code] for code != 0; log[0] is unused.
    log: Vec<u32>,
    neg: Vec<u32>,
    /// Full addition table when q is small enough, otherwise empty and the
    /// digitwise path is used.
    add_table: Vec<u32>,
    generator: u32,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldSpec(p={}, m={}, modulus={:?})", self.p, self.m, self.modulus)
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.m == other.m && self.modulus == other.modulus
    }
}
impl Eq for FieldSpec {}

const ADD_TABLE_MAX_Q: u32 = 1024;

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Multiply two polynomials over F_p, reducing modulo `modulus` (monic).
fn polymul_mod(a: &[u32], b: &[u32], modulus: &[u32], p: u32) -> Vec<u32> {
    let m = modulus.len() - 1;
    let mut prod = vec![0u32; a.len() + b.len()];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + ai * bj) % p;
        }
    }
    // reduce: x^m = -(lower part of modulus)
    for k in (m..prod.len()).rev() {
        let c = prod[k];
        if c == 0 {
            continue;
        }
        prod[k] = 0;
        for (j, &mj) in modulus.iter().enumerate().take(m) {
            let sub = (c * mj) % p;
            prod[k - m + j] = (prod[k - m + j] + p * p - sub) % p;
        }
    }
    prod.truncate(m.max(1));
    prod.resize(m.max(1), 0);
    prod
}

fn poly_pow_mod(base: &[u32], mut e: u64, modulus: &[u32], p: u32) -> Vec<u32> {
    let m = modulus.len() - 1;
    let mut acc = vec![0u32; m.max(1)];
    acc[0] = 1;
    let mut b = base.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            acc = polymul_mod(&acc, &b, modulus, p);
        }
        b = polymul_mod(&b, &b, modulus, p);
        e >>= 1;
    }
    acc
}

fn factor_u64(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

impl FieldSpec {
    /// Build F_{p^m} from a monic degree-m polynomial over F_p given as a
    /// little-endian coefficient list of length m+1. The polynomial is checked
    /// for irreducibility; `p` must be prime.
    pub fn new(p: u32, modulus: Vec<u32>) -> Result<Arc<FieldSpec>> {
        if !is_prime(p) {
            return Err(Error::BadFieldSpec(format!("p = {p} is not prime")));
        }
        if modulus.len() < 2 {
            return Err(Error::BadFieldSpec("modulus must have degree >= 1".into()));
        }
        let m = (modulus.len() - 1) as u32;
        if modulus.iter().any(|&c| c >= p) {
            return Err(Error::BadFieldSpec("modulus coefficients must lie in [0, p)".into()));
        }
        if *modulus.last().unwrap() != 1 {
            return Err(Error::BadFieldSpec("modulus must be monic".into()));
        }
        let q_big = (p as u64).checked_pow(m).filter(|&q| q <= (1 << 24));
        let q = match q_big {
            Some(q) => q as u32,
            None => return Err(Error::BadFieldSpec(format!("p^m = {p}^{m} too large"))),
        };
        if !Self::modulus_irreducible(p, &modulus) {
            return Err(Error::BadFieldSpec("modulus is not irreducible over F_p".into()));
        }

        let mut spec = FieldSpec {
            p,
            m,
            q,
            modulus,
            exp: Vec::new(),
            log: Vec::new(),
            neg: Vec::new(),
            add_table: Vec::new(),
            generator: 0,
        };
        spec.build_tables();
        Ok(Arc::new(spec))
    }

    /// F_{p^m} over the lexicographically smallest monic irreducible modulus.
    /// Deterministic, so independently constructed fields agree.
    pub fn default_field(p: u32, m: u32) -> Result<Arc<FieldSpec>> {
        if !is_prime(p) {
            return Err(Error::BadFieldSpec(format!("p = {p} is not prime")));
        }
        let lower = (p as u64).pow(m);
        for code in 0..lower {
            let mut coeffs: Vec<u32> = Vec::with_capacity(m as usize + 1);
            let mut c = code;
            for _ in 0..m {
                coeffs.push((c % p as u64) as u32);
                c /= p as u64;
            }
            coeffs.push(1);
            if Self::modulus_irreducible(p, &coeffs) {
                return FieldSpec::new(p, coeffs);
            }
        }
        unreachable!("an irreducible polynomial of every degree exists")
    }

    fn modulus_irreducible(p: u32, modulus: &[u32]) -> bool {
        let m = (modulus.len() - 1) as u32;
        if m == 1 {
            return true;
        }
        // x^(p^m) == x mod f, and x^(p^(m/l)) != x for every prime l | m.
        let x = {
            let mut v = vec![0u32; m as usize];
            v[1] = 1;
            v
        };
        let xq = poly_pow_mod(&x, (p as u64).pow(m), modulus, p);
        if xq != x {
            return false;
        }
        for l in factor_u64(m as u64) {
            let e = (p as u64).pow((m as u64 / l) as u32);
            let xe = poly_pow_mod(&x, e, modulus, p);
            if xe == x {
                return false;
            }
        }
        true
    }

    fn build_tables(&mut self) {
        let q = self.q as usize;
        let p = self.p;
        let m = self.m as usize;

        // Find the smallest primitive element by exhausting multiplicative orders.
        let order_facs = factor_u64(self.q as u64 - 1);
        let mut gen = 0u32;
        'search: for cand in 1..self.q {
            if cand == 1 && self.q > 2 {
                continue;
            }
            for &f in &order_facs {
                let e = (self.q as u64 - 1) / f;
                if self.pow_raw(cand, e) == 1 {
                    continue 'search;
                }
            }
            gen = cand;
            break;
        }
        assert!(gen != 0 || self.q == 2, "no generator found");
        if self.q == 2 {
            gen = 1;
        }
        self.generator = gen;

        let mut exp = vec![0u32; 2 * (q - 1).max(1)];
        let mut log = vec![0u32; q];
        let mut acc = 1u32;
        for (i, slot) in exp.iter_mut().enumerate().take(q - 1) {
            *slot = acc;
            log[acc as usize] = i as u32;
            acc = self.mul_raw(acc, gen);
        }
        for i in 0..(q - 1) {
            exp[q - 1 + i] = exp[i];
        }
        self.exp = exp;
        self.log = log;

        let mut neg = vec![0u32; q];
        for (code, slot) in neg.iter_mut().enumerate() {
            let mut out = 0u32;
            let mut mul = 1u32;
            let mut c = code as u32;
            for _ in 0..m {
                let d = c % p;
                out += ((p - d) % p) * mul;
                mul *= p;
                c /= p;
            }
            *slot = out;
        }
        self.neg = neg;

        if self.q <= ADD_TABLE_MAX_Q && p != 2 {
            let mut table = vec![0u32; q * q];
            for a in 0..q as u32 {
                for b in 0..=a {
                    let s = self.add_digitwise(a, b);
                    table[(a as usize) * q + b as usize] = s;
                    table[(b as usize) * q + a as usize] = s;
                }
            }
            self.add_table = table;
        }
    }

    fn add_digitwise(&self, a: u32, b: u32) -> u32 {
        let p = self.p;
        let mut out = 0u32;
        let mut mul = 1u32;
        let (mut a, mut b) = (a, b);
        for _ in 0..self.m {
            out += ((a % p + b % p) % p) * mul;
            mul *= p;
            a /= p;
            b /= p;
        }
        out
    }

    /// Schoolbook multiply on codes; only used while bootstrapping the tables.
    fn mul_raw(&self, a: u32, b: u32) -> u32 {
        let to_poly = |mut c: u32| {
            let mut v = vec![0u32; self.m as usize];
            for slot in v.iter_mut() {
                *slot = c % self.p;
                c /= self.p;
            }
            v
        };
        let prod = polymul_mod(&to_poly(a), &to_poly(b), &self.modulus, self.p);
        let mut code = 0u32;
        let mut mul = 1u32;
        for &c in &prod {
            code += c * mul;
            mul = mul.saturating_mul(self.p);
        }
        code
    }

    fn pow_raw(&self, a: u32, mut e: u64) -> u32 {
        let mut acc = 1u32;
        let mut b = a;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_raw(acc, b);
            }
            b = self.mul_raw(b, b);
            e >>= 1;
        }
        acc
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn m(&self) -> u32 {
        self.m
    }
    pub fn q(&self) -> u32 {
        self.q
    }
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }
    /// The fixed primitive element used by the exp/log tables.
    pub fn generator(&self) -> Fe {
        Fe(self.generator)
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        if self.p == 2 {
            return Fe(a.0 ^ b.0);
        }
        if !self.add_table.is_empty() {
            return Fe(self.add_table[(a.0 as usize) * self.q as usize + b.0 as usize]);
        }
        Fe(self.add_digitwise(a.0, b.0))
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        if self.p == 2 {
            return a;
        }
        Fe(self.neg[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a.0 == 0 || b.0 == 0 {
            return Fe::ZERO;
        }
        let la = self.log[a.0 as usize] as usize;
        let lb = self.log[b.0 as usize] as usize;
        Fe(self.exp[la + lb])
    }

    #[inline]
    pub fn inv(&self, a: Fe) -> Result<Fe> {
        if a.0 == 0 {
            return Err(Error::BadInput("division by zero field element".into()));
        }
        let la = self.log[a.0 as usize] as usize;
        let ord = self.q as usize - 1;
        Ok(Fe(self.exp[(ord - la) % ord]))
    }

    #[inline]
    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: Fe, e: u64) -> Fe {
        if a.0 == 0 {
            return if e == 0 { Fe::ONE } else { Fe::ZERO };
        }
        let ord = self.q as u64 - 1;
        let la = self.log[a.0 as usize] as u64;
        Fe(self.exp[((la * (e % ord)) % ord) as usize])
    }

    /// Smallest solution x of x^n = a in this field, via discrete logs.
    pub fn nth_root(&self, a: Fe, n: u64) -> Result<Fe> {
        if a.0 == 0 {
            return Ok(Fe::ZERO);
        }
        let ord = self.q as u64 - 1;
        let la = self.log[a.0 as usize] as u64;
        let nn = n % ord;
        let g = gcd(nn.max(1), ord);
        if la % g != 0 {
            return Err(Error::RootNotInField { n, target: format!("{:?}", self.coeffs(a)) });
        }
        // solve n*s == la (mod ord): s = (la/g) * inv(n/g) mod ord/g
        let ord_g = ord / g;
        let inv = mod_inverse(nn / g % ord_g, ord_g);
        let s = (la / g % ord_g) * inv % ord_g;
        Ok(Fe(self.exp[(s % ord) as usize]))
    }

    /// Element from a little-endian F_p coefficient vector of length <= m.
    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<Fe> {
        if coeffs.len() > self.m as usize {
            return Err(Error::BadInput(format!(
                "coefficient vector of length {} in degree-{} field",
                coeffs.len(),
                self.m
            )));
        }
        let mut code = 0u32;
        let mut mul = 1u32;
        for &c in coeffs {
            if c >= self.p {
                return Err(Error::BadInput(format!("coefficient {c} not reduced mod {}", self.p)));
            }
            code += c * mul;
            mul *= self.p;
        }
        Ok(Fe(code))
    }

    /// Little-endian length-m F_p coefficient vector of an element.
    pub fn coeffs(&self, a: Fe) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.m as usize);
        let mut c = a.0;
        for _ in 0..self.m {
            out.push(c % self.p);
            c /= self.p;
        }
        out
    }

    /// Embed a prime-field scalar.
    pub fn from_prime(&self, c: u32) -> Fe {
        Fe(c % self.p)
    }

    /// All field elements in code order; handy for exhaustive sweeps.
    pub fn elements(&self) -> impl Iterator<Item = Fe> {
        (0..self.q).map(Fe)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Inverse of a modulo n, assuming gcd(a, n) = 1.
fn mod_inverse(a: u64, n: u64) -> u64 {
    if n == 1 {
        return 0;
    }
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (n as i128, (a % n) as i128);
    while new_r != 0 {
        let qt = r / new_r;
        (t, new_t) = (new_t, t - qt * new_t);
        (r, new_r) = (new_r, r - qt * new_r);
    }
    assert!(r == 1, "not invertible");
    ((t % n as i128 + n as i128) % n as i128) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f4_arithmetic() {
        // x^2 + x + 1 over F_2
        let f = FieldSpec::new(2, vec![1, 1, 1]).unwrap();
        assert_eq!(f.q(), 4);
        let x = f.from_coeffs(&[0, 1]).unwrap();
        // x * x = x + 1
        assert_eq!(f.mul(x, x), f.from_coeffs(&[1, 1]).unwrap());
        // x^3 = 1
        assert_eq!(f.pow(x, 3), Fe::ONE);
        assert_eq!(f.add(x, x), Fe::ZERO);
    }

    #[test]
    fn f9_tables_match_polynomial_arithmetic() {
        // x^2 + 1 over F_3
        let f = FieldSpec::new(3, vec![1, 0, 1]).unwrap();
        assert_eq!(f.q(), 9);
        for a in f.elements() {
            for b in f.elements() {
                assert_eq!(f.mul(a, b), Fe(f.mul_raw(a.0, b.0)));
                assert_eq!(f.add(a, b), Fe(f.add_digitwise(a.0, b.0)));
            }
        }
        for a in f.elements().skip(1) {
            assert_eq!(f.mul(a, f.inv(a).unwrap()), Fe::ONE);
        }
    }

    #[test]
    fn rejects_reducible_modulus() {
        // x^2 + 2x + 1 = (x+1)^2 over F_3
        assert!(FieldSpec::new(3, vec![1, 2, 1]).is_err());
        assert!(FieldSpec::new(4, vec![1, 1]).is_err());
    }

    #[test]
    fn default_fields_are_deterministic() {
        let a = FieldSpec::default_field(3, 4).unwrap();
        let b = FieldSpec::default_field(3, 4).unwrap();
        assert_eq!(a.modulus(), b.modulus());
        assert_eq!(a.q(), 81);
        assert_eq!(a.generator(), b.generator());
    }

    #[test]
    fn nth_roots() {
        let f = FieldSpec::default_field(3, 4).unwrap();
        let g = f.generator();
        for e in [0u64, 1, 5, 17, 40] {
            let a = f.pow(g, e * 4);
            let r = f.nth_root(a, 4).unwrap();
            assert_eq!(f.pow(r, 4), a);
        }
        // g itself is not a 4th power in F_81 (index 1 not divisible by gcd(4,80))
        assert!(f.nth_root(g, 4).is_err());
    }
}
