//! Deterministic generators and independent oracles used by the test suites
//! and benchmarks. Everything here is reproducible from a seed; nothing in
//! the library proper depends on it.

use std::sync::Arc;

use crate::error::Result;
use crate::field::{Fe, FieldSpec};
use crate::fmat::FMat;
use crate::module::BKModule;
use crate::series::LaurentSeries;
use crate::smat::SMat;

/// SplitMix64: small, seedable, good enough for test-data generation.
#[derive(Clone, Debug)]
pub struct TinyRng(u64);

impl TinyRng {
    pub fn new(seed: u64) -> Self {
        TinyRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n.max(1)
    }

    pub fn range_i64(&mut self, lo: i64, hi: i64) -> i64 {
        lo + self.below((hi - lo + 1) as u64) as i64
    }

    pub fn fe(&mut self, field: &FieldSpec) -> Fe {
        Fe(self.below(field.q() as u64) as u32)
    }

    pub fn nonzero_fe(&mut self, field: &FieldSpec) -> Fe {
        Fe(1 + self.below(field.q() as u64 - 1) as u32)
    }
}

/// Exact random polynomial with valuation in [val_lo, val_hi] and the given
/// number of coefficients, guaranteed nonzero leading coefficient.
pub fn random_poly(rng: &mut TinyRng, field: &Arc<FieldSpec>, val_lo: i64, val_hi: i64, len: usize) -> LaurentSeries {
    let val = rng.range_i64(val_lo, val_hi);
    let mut coeffs = vec![rng.nonzero_fe(field)];
    for _ in 1..len {
        coeffs.push(rng.fe(field));
    }
    LaurentSeries::from_coeffs(field.clone(), val, coeffs)
}

/// Random unit of F[[u]] (nonzero constant term) as an exact polynomial.
pub fn random_unit(rng: &mut TinyRng, field: &Arc<FieldSpec>, len: usize) -> LaurentSeries {
    random_poly(rng, field, 0, 0, len)
}

/// Random element of GL_n(F[[u]]) with polynomial entries: a product of
/// elementary operations applied to a unit diagonal.
pub fn random_unit_matrix(rng: &mut TinyRng, field: &Arc<FieldSpec>, n: usize, deg: i64) -> SMat {
    let mut m = SMat::zero(field.clone(), n, n);
    for i in 0..n {
        m.set(i, i, LaurentSeries::constant(field.clone(), rng.nonzero_fe(field)));
    }
    let ops = 2 * n * n;
    for _ in 0..ops {
        let i = rng.below(n as u64) as usize;
        let j = rng.below(n as u64) as usize;
        if i == j {
            continue;
        }
        let c = rng.fe(field);
        if c.is_zero() {
            continue;
        }
        let e = rng.range_i64(0, deg.max(0));
        let factor = LaurentSeries::monomial(field.clone(), c, e);
        for col in 0..n {
            let v = m.get(j, col).add(&factor.mul(m.get(i, col)));
            m.set(j, col, v);
        }
    }
    m
}

/// Random invertible Laurent matrix A diag(u^{r_i}) B with r_i in the given
/// range and random unit factors; returns the matrix and the sorted r.
pub fn random_weighted_matrix(
    rng: &mut TinyRng,
    field: &Arc<FieldSpec>,
    n: usize,
    w_lo: i64,
    w_hi: i64,
    deg: i64,
) -> (SMat, Vec<i64>) {
    let a = random_unit_matrix(rng, field, n, deg);
    let b = random_unit_matrix(rng, field, n, deg);
    let mut r: Vec<i64> = (0..n).map(|_| rng.range_i64(w_lo, w_hi)).collect();
    let x = a.mul(&SMat::diag_monomials(field.clone(), &r)).mul(&b);
    r.sort_unstable();
    (x, r)
}

/// Random module with weights in [w_lo, w_hi] at every embedding.
pub fn random_module(
    rng: &mut TinyRng,
    field: &Arc<FieldSpec>,
    d: usize,
    n: usize,
    w_lo: i64,
    w_hi: i64,
) -> Result<BKModule> {
    let frob = (0..d)
        .map(|_| random_weighted_matrix(rng, field, n, w_lo, w_hi, 2).0)
        .collect();
    BKModule::with_default_prec(field.clone(), d, n, frob)
}

/// Random strongly divisible rank-one module (weights in [0, p]).
pub fn random_sd_rank_one(rng: &mut TinyRng, field: &Arc<FieldSpec>, d: usize) -> Result<BKModule> {
    let p = field.p() as i64;
    let units: Vec<Fe> = (0..d).map(|_| rng.nonzero_fe(field)).collect();
    let weights: Vec<i64> = (0..d).map(|_| rng.range_i64(0, p)).collect();
    BKModule::rank_one(field.clone(), &units, &weights)
}

/// Independent solver for the morphism space Hom_BK(M, N): unknowns are the
/// coefficients of the per-embedding matrices G_j on the degree window
/// forced by the pole depths, equations come from the fixed-point form
/// G_j = frob_N[j] phi(G_{j+1}) frob_M[j]^{-1} coefficientwise.
///
/// This shares no code path with the internal-Hom construction: it inverts
/// the source Frobenius directly and never builds a Kronecker product.
pub fn morphism_space_dim_direct(m_src: &BKModule, n_tgt: &BKModule) -> Result<usize> {
    let d = m_src.embeddings();
    assert_eq!(d, n_tgt.embeddings());
    let field = m_src.field().clone();
    let p = field.p() as i64;
    let nm = m_src.rank();
    let nn = n_tgt.rank();
    let win = m_src.prec().max(n_tgt.prec());

    // pairwise products P[j][(rho, a, b, c)] = frob_N[j][rho, a] * inv_M[j][b, c]
    let mut pairs: Vec<Vec<LaurentSeries>> = Vec::with_capacity(d);
    let mut v_bound = 0i64;
    for j in 0..d {
        let inv_m = m_src.frob(j).inverse(win)?;
        let mut tab = Vec::with_capacity(nn * nn * nm * nm);
        for rho in 0..nn {
            for a in 0..nn {
                for b in 0..nm {
                    for c in 0..nm {
                        let prod = n_tgt.frob(j).get(rho, a).mul(inv_m.get(b, c));
                        if !prod.is_zero_within_prec() {
                            v_bound = v_bound.max(-prod.val());
                        }
                        tab.push(prod);
                    }
                }
            }
        }
        pairs.push(tab);
    }
    let dm = v_bound / (p - 1) + 1;
    let lo = -v_bound;

    let deg = dm as usize;
    let unknowns = d * nn * nm * deg;
    let idx = |j: usize, a: usize, b: usize, k: i64| -> usize {
        ((j * nn + a) * nm + b) * deg + k as usize
    };
    let equations = d * nn * nm * (dm - lo) as usize;
    let mut sys = FMat::zero(field.clone(), equations, unknowns);
    let mut row = 0usize;
    for j in 0..d {
        let src = (j + 1) % d;
        for rho in 0..nn {
            for c in 0..nm {
                for e in lo..dm {
                    // G_j[rho, c] at degree e ...
                    if e >= 0 {
                        let col = idx(j, rho, c, e);
                        sys.set(row, col, field.sub(sys.get(row, col), Fe::ONE));
                    }
                    // ... minus sum over (a, b, k) of P[(rho,a,b,c)]_(e - pk) G_{j+1}[a,b]_k
                    for a in 0..nn {
                        for b in 0..nm {
                            let prod = &pairs[j][((rho * nn + a) * nm + b) * nm + c];
                            for k in 0..dm {
                                let coef = prod.coeff(e - p * k).unwrap_or(Fe::ZERO);
                                if !coef.is_zero() {
                                    let col = idx(src, a, b, k);
                                    sys.set(row, col, field.add(sys.get(row, col), coef));
                                }
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
    }
    Ok(sys.nullity())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohom::{h0_dim, hom_dim};
    use crate::factor::iwasawa_factor;
    use crate::module::hom_module;

    #[test]
    fn random_unit_matrices_are_units() {
        let f = FieldSpec::new(3, vec![1, 0, 1]).unwrap();
        let mut rng = TinyRng::new(7);
        for _ in 0..20 {
            let m = random_unit_matrix(&mut rng, &f, 3, 2);
            assert_eq!(m.divisor_valuations(64).unwrap(), vec![0, 0, 0]);
        }
    }

    #[test]
    fn weighted_matrices_factor_back() {
        let f = FieldSpec::new(2, vec![1, 1]).unwrap();
        let mut rng = TinyRng::new(11);
        for _ in 0..10 {
            let (x, r) = random_weighted_matrix(&mut rng, &f, 3, -2, 3, 2);
            let fac = iwasawa_factor(&x, 96).unwrap();
            assert_eq!(fac.r, r);
        }
    }

    #[test]
    fn direct_morphism_solver_matches_hom_h0() {
        let f = FieldSpec::new(3, vec![1, 0, 1]).unwrap();
        let mut rng = TinyRng::new(23);
        for _ in 0..8 {
            let a = random_module(&mut rng, &f, 1, 2, 0, 2).unwrap();
            let b = random_module(&mut rng, &f, 1, 2, 0, 2).unwrap();
            let via_hom = hom_dim(&a, &b).unwrap();
            let direct = morphism_space_dim_direct(&a, &b).unwrap();
            assert_eq!(via_hom, direct);
            let h = hom_module(&a, &b).unwrap();
            assert_eq!(h0_dim(&h).unwrap(), direct);
        }
    }
}
