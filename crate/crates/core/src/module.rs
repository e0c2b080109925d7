//! The p-torsion Breuil-Kisin module data type and its categorical plumbing:
//! morphisms, duals, internal Hom, direct sums, rank-one twists, extensions
//! and basis changes.
//!
//! A module of rank n over the product of d copies of F[[u]] is presented by
//! one invertible Frobenius matrix per embedding index. Embeddings are indexed
//! j in Z/d with tau_j = tau_0 o phi^j, and `frob[j]` represents
//! phi: M_{tau_{j+1 mod d}} -> M_{tau_j} in the fixed bases (columns are the
//! images of the source basis vectors). Every module in the crate uses this
//! orientation; the on-disk format records it.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Fe, FieldSpec};
use crate::series::LaurentSeries;
use crate::smat::SMat;

/// Default working precision for a rank-n module: weights in all in-scope
/// computations are bounded by n(p+1), and one Frobenius application
/// multiplies required windows by p.
pub fn n_work(p: u32, n: usize) -> i64 {
    (p as i64) * ((n as i64) * (p as i64 + 1) + 2)
}

/// Provenance tag for modules produced by restriction of scalars of a
/// rank-one module; the lattice machinery needs to know the generator layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestrictedRankOne {
    /// Residue degree of the upstairs field l.
    pub big_d: usize,
    /// Weight vector r[j] = r_{theta_j} of the rank-one module upstairs.
    pub r: Vec<i64>,
    /// Cycle product of the leading units (basis-free unit invariant).
    pub x_total: Fe,
}

/// A p-torsion Breuil-Kisin module with coefficients, free of rank `n` over
/// each of `d` embedding components.
#[derive(Clone, Debug)]
pub struct BKModule {
    field: Arc<FieldSpec>,
    d: usize,
    n: usize,
    frob: Vec<SMat>,
    prec: i64,
    pub(crate) origin: Option<RestrictedRankOne>,
}

impl BKModule {
    /// Validating constructor. Checks shapes, that d divides m, and that each
    /// Frobenius matrix has a certified-invertible determinant.
    pub fn new(field: Arc<FieldSpec>, d: usize, n: usize, frob: Vec<SMat>, prec: i64) -> Result<Self> {
        if d == 0 || field.m() as usize % d != 0 {
            return Err(Error::DegreeIncompatible(format!(
                "d = {d} must divide the coefficient degree m = {}",
                field.m()
            )));
        }
        if frob.len() != d {
            return Err(Error::BadInput(format!("expected {d} Frobenius matrices, got {}", frob.len())));
        }
        for (j, x) in frob.iter().enumerate() {
            if x.rows() != n || x.cols() != n {
                return Err(Error::BadInput(format!("Frobenius matrix {j} is not {n}x{n}")));
            }
            if x.field() != &field {
                return Err(Error::BadInput("Frobenius entries live in a different field".into()));
            }
            x.divisor_valuations(prec).map_err(|e| match e {
                Error::BadInput(_) => Error::BadInput(format!("Frobenius matrix {j} is singular over F((u))")),
                other => other,
            })?;
        }
        Ok(BKModule { field, d, n, frob, prec, origin: None })
    }

    /// Construct with the default working precision for this rank.
    pub fn with_default_prec(field: Arc<FieldSpec>, d: usize, n: usize, frob: Vec<SMat>) -> Result<Self> {
        let prec = 2 * n_work(field.p(), n) + 32;
        Self::new(field, d, n, frob, prec)
    }

    /// Rank-n module with identity Frobenius at every embedding.
    pub fn trivial(field: Arc<FieldSpec>, d: usize, n: usize) -> Result<Self> {
        let frob = (0..d).map(|_| SMat::identity(field.clone(), n)).collect();
        Self::with_default_prec(field, d, n, frob)
    }

    /// Rank-one module with Frobenius entry `x_j u^{r_j}` at embedding j.
    pub fn rank_one(field: Arc<FieldSpec>, units: &[Fe], weights: &[i64]) -> Result<Self> {
        assert_eq!(units.len(), weights.len());
        let d = units.len();
        let frob = units
            .iter()
            .zip(weights)
            .map(|(&x, &r)| {
                SMat::from_entries(field.clone(), 1, 1, vec![LaurentSeries::monomial(field.clone(), x, r)])
            })
            .collect();
        Self::with_default_prec(field, d, 1, frob)
    }

    /// Rank-one normal form: the same unit x at every embedding.
    pub fn rank_one_uniform(field: Arc<FieldSpec>, x: Fe, weights: &[i64]) -> Result<Self> {
        let units = vec![x; weights.len()];
        Self::rank_one(field, &units, weights)
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }
    pub fn embeddings(&self) -> usize {
        self.d
    }
    pub fn rank(&self) -> usize {
        self.n
    }
    pub fn prec(&self) -> i64 {
        self.prec
    }
    pub fn frob(&self, j: usize) -> &SMat {
        &self.frob[j % self.d]
    }
    pub fn frob_all(&self) -> &[SMat] {
        &self.frob
    }
    pub fn origin(&self) -> Option<&RestrictedRankOne> {
        self.origin.as_ref()
    }

    pub fn with_prec(mut self, prec: i64) -> Self {
        self.prec = prec;
        self
    }

    /// Largest pole depth V >= 0 of any Frobenius entry.
    pub fn pole_depth(&self) -> i64 {
        self.frob.iter().map(|x| x.pole_depth()).max().unwrap_or(0)
    }

    /// The module u^k M on the basis u^k e_i: Frobenius scales by u^{k(p-1)}.
    pub fn u_power(&self, k: i64) -> BKModule {
        let p = self.field.p() as i64;
        let s = LaurentSeries::monomial(self.field.clone(), Fe::ONE, k * (p - 1));
        let frob = self.frob.iter().map(|x| x.scale(&s)).collect();
        BKModule {
            field: self.field.clone(),
            d: self.d,
            n: self.n,
            frob,
            prec: self.prec,
            origin: None,
        }
    }
}

/// An F[[u]]-linear phi-equivariant map between modules of equal shape,
/// presented by one matrix per embedding (poles allowed for maps of the
/// ambient Hom-with-denominators).
#[derive(Clone, Debug)]
pub struct BKMorphism {
    pub mats: Vec<SMat>,
}

impl BKMorphism {
    /// Check the commutation square mats[j] frob_M[j] = frob_N[j] phi(mats[j+1])
    /// per embedding, within certified precision.
    ///
    /// Returns Ok(true) when the defect vanishes on the full certified window
    /// and the window is at least the default working precision; a visible
    /// nonzero defect gives Ok(false); a window too small to decide errors.
    pub fn check(&self, source: &BKModule, target: &BKModule) -> Result<bool> {
        let d = source.embeddings();
        assert_eq!(d, target.embeddings());
        assert_eq!(self.mats.len(), d);
        let need = n_work(source.field().p(), source.rank().max(target.rank()));
        for j in 0..d {
            let lhs = self.mats[j].mul(source.frob(j));
            let rhs = target.frob(j).mul(&self.mats[(j + 1) % d].frobenius());
            let defect = lhs.sub(&rhs);
            if defect.entries().any(|s| !s.is_zero_within_prec()) {
                return Ok(false);
            }
            if defect.min_window() < need {
                return Err(Error::InsufficientPrecision(format!(
                    "morphism defect certified only below u^{}, need u^{need}",
                    defect.min_window()
                )));
            }
        }
        Ok(true)
    }
}

/// The internal Hom module Hom(P, M): underlying module of rank
/// rank(P) * rank(M) on the basis of elementary maps, with Frobenius
/// f |-> phi_M o f o phi_P^{-1}.
///
/// With the column-major vec convention, the Frobenius matrix at embedding j
/// is kron(frob_P[j]^{-T}, frob_M[j]): a fixed vector of the result is
/// exactly a morphism P -> M.
pub fn hom_module(p_mod: &BKModule, m_mod: &BKModule) -> Result<BKModule> {
    if p_mod.embeddings() != m_mod.embeddings() || p_mod.field() != m_mod.field() {
        return Err(Error::DegreeIncompatible("Hom needs equal field and embedding count".into()));
    }
    let d = p_mod.embeddings();
    let win = p_mod.prec().max(m_mod.prec());
    let mut frob = Vec::with_capacity(d);
    for j in 0..d {
        let p_inv_t = p_mod.frob(j).inverse(win)?.transpose();
        frob.push(p_inv_t.kronecker(m_mod.frob(j)));
    }
    let n = p_mod.rank() * m_mod.rank();
    let field = p_mod.field().clone();
    let prec = p_mod.prec().min(m_mod.prec());
    BKModule::new(field, d, n, frob, prec)
}

/// Column-major index of the elementary map sending p_l to m_i.
pub fn hom_basis_index(m_rank: usize, i: usize, l: usize) -> usize {
    l * m_rank + i
}

/// Dual module: inverse-transpose Frobenius; weights negate.
pub fn dual(m: &BKModule) -> Result<BKModule> {
    let d = m.embeddings();
    let mut frob = Vec::with_capacity(d);
    for j in 0..d {
        frob.push(m.frob(j).inverse(m.prec())?.transpose());
    }
    BKModule::new(m.field().clone(), d, m.rank(), frob, m.prec())
}

/// The extension N_f of P by M attached to a Hom(P,M)-valued cochain f:
/// underlying module M (+) P, Frobenius (phi_M + f o phi_P, phi_P), i.e. the
/// block matrix [[frob_M, f frob_P], [0, frob_P]] per embedding.
pub fn build_extension(p_mod: &BKModule, m_mod: &BKModule, f: &[SMat]) -> Result<BKModule> {
    if p_mod.embeddings() != m_mod.embeddings() {
        return Err(Error::DegreeIncompatible("extension needs equal embedding count".into()));
    }
    let d = p_mod.embeddings();
    assert_eq!(f.len(), d);
    let nm = m_mod.rank();
    let np = p_mod.rank();
    let field = m_mod.field().clone();
    let mut frob = Vec::with_capacity(d);
    for j in 0..d {
        let top_right = f[j].mul(p_mod.frob(j));
        let mut b = SMat::zero(field.clone(), nm + np, nm + np);
        for i in 0..nm {
            for k in 0..nm {
                b.set(i, k, m_mod.frob(j).get(i, k).clone());
            }
            for k in 0..np {
                b.set(i, nm + k, top_right.get(i, k).clone());
            }
        }
        for i in 0..np {
            for k in 0..np {
                b.set(nm + i, nm + k, p_mod.frob(j).get(i, k).clone());
            }
        }
        frob.push(b);
    }
    let prec = p_mod.prec().min(m_mod.prec());
    BKModule::new(field, d, nm + np, frob, prec)
}

/// The evident inclusion M -> N_f and projection N_f -> P of an extension.
pub fn extension_maps(p_mod: &BKModule, m_mod: &BKModule) -> (Vec<SMat>, Vec<SMat>) {
    let d = p_mod.embeddings();
    let nm = m_mod.rank();
    let np = p_mod.rank();
    let field = m_mod.field().clone();
    let mut incl = Vec::with_capacity(d);
    let mut proj = Vec::with_capacity(d);
    for _ in 0..d {
        let mut inc = SMat::zero(field.clone(), nm + np, nm);
        for i in 0..nm {
            inc.set(i, i, LaurentSeries::one(field.clone()));
        }
        incl.push(inc);
        let mut pr = SMat::zero(field.clone(), np, nm + np);
        for i in 0..np {
            pr.set(i, nm + i, LaurentSeries::one(field.clone()));
        }
        proj.push(pr);
    }
    (incl, proj)
}

/// Direct sum, blockwise per embedding.
pub fn direct_sum(a: &BKModule, b: &BKModule) -> Result<BKModule> {
    let zero = vec![SMat::zero(a.field().clone(), a.rank(), b.rank()); a.embeddings()];
    // reuse the extension builder with f = 0: [[A, 0], [0, B]]
    build_extension(b, a, &zero)
}

/// Twist by a rank-one module: multiply each Frobenius entry by the rank-one
/// scalar series of the same embedding. Weights shift by the rank-one weight.
pub fn twist(m: &BKModule, line: &BKModule) -> Result<BKModule> {
    if line.rank() != 1 {
        return Err(Error::BadInput("twist requires a rank-one module".into()));
    }
    if line.embeddings() != m.embeddings() {
        return Err(Error::DegreeIncompatible("twist needs equal embedding count".into()));
    }
    let frob = (0..m.embeddings())
        .map(|j| m.frob(j).scale(line.frob(j).get(0, 0)))
        .collect();
    BKModule::new(m.field().clone(), m.embeddings(), m.rank(), frob, m.prec().min(line.prec()))
}

/// Change of basis by C[j] in GL_n(F[[u]]) per embedding:
/// frob'[j] = C[j]^{-1} frob[j] phi(C[j+1]). Isomorphic output; weights and
/// strong-divisibility verdicts are unchanged.
pub fn change_basis(m: &BKModule, c: &[SMat]) -> Result<BKModule> {
    let d = m.embeddings();
    assert_eq!(c.len(), d);
    for (j, cj) in c.iter().enumerate() {
        if !cj.is_integral() {
            return Err(Error::NotAUnitMatrix { embedding: j });
        }
        match cj.divisor_valuations(m.prec()) {
            Ok(vals) if vals.iter().all(|&v| v == 0) => {}
            Ok(_) => return Err(Error::NotAUnitMatrix { embedding: j }),
            Err(Error::BadInput(_)) => return Err(Error::NotAUnitMatrix { embedding: j }),
            Err(e) => return Err(e),
        }
    }
    let mut frob = Vec::with_capacity(d);
    for j in 0..d {
        let cj_inv = c[j].inverse(m.prec())?;
        frob.push(cj_inv.mul(m.frob(j)).mul(&c[(j + 1) % d].frobenius()));
    }
    BKModule::new(m.field().clone(), d, m.rank(), frob, m.prec())
}

/// Present a sublattice (columns of C[j] span the lattice inside the ambient)
/// on its own basis: same formula as a basis change but C need not be a unit.
/// The result is the induced Frobenius of the lattice, entries in F((u)).
pub fn sublattice_module(ambient: &BKModule, c: &[SMat]) -> Result<BKModule> {
    let d = ambient.embeddings();
    assert_eq!(c.len(), d);
    let mut frob = Vec::with_capacity(d);
    for j in 0..d {
        let cj_inv = c[j].inverse(ambient.prec())?;
        frob.push(cj_inv.mul(ambient.frob(j)).mul(&c[(j + 1) % d].frobenius()));
    }
    BKModule::new(ambient.field().clone(), d, ambient.rank(), frob, ambient.prec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;

    fn f3() -> Arc<FieldSpec> {
        FieldSpec::new(3, vec![1, 1]).unwrap()
    }

    #[test]
    fn trivial_hom_is_trivial() {
        let f = f3();
        let m = BKModule::trivial(f.clone(), 1, 1).unwrap();
        let h = hom_module(&m, &m).unwrap();
        assert_eq!(h.rank(), 1);
        assert!(h.frob(0).agrees_with(&SMat::identity(f, 1)));
    }

    #[test]
    fn dual_of_rank_one_negates_weight() {
        let f = f3();
        let g = f.generator();
        let m = BKModule::rank_one(f.clone(), &[g], &[2]).unwrap();
        let dm = dual(&m).unwrap();
        let e = dm.frob(0).get(0, 0);
        assert_eq!(e.val(), -2);
        assert_eq!(e.coeff(-2).unwrap(), f.inv(g).unwrap());
        // dual(dual(M)) has the original matrices back (1x1 case is exact)
        let ddm = dual(&dm).unwrap();
        assert!(ddm.frob(0).agrees_with(m.frob(0)));
    }

    #[test]
    fn extension_with_zero_is_direct_sum() {
        let f = f3();
        let m = BKModule::rank_one(f.clone(), &[Fe::ONE], &[0]).unwrap();
        let p = BKModule::rank_one(f.clone(), &[Fe::ONE], &[1]).unwrap();
        let zero = vec![SMat::zero(f.clone(), 1, 1)];
        let n = build_extension(&p, &m, &zero).unwrap();
        assert_eq!(n.rank(), 2);
        assert_eq!(n.frob(0).get(0, 0).val(), 0);
        assert_eq!(n.frob(0).get(1, 1).val(), 1);
        assert!(n.frob(0).get(0, 1).is_certified_zero());
        // inclusion and projection are morphisms and compose to zero
        let (incl, proj) = extension_maps(&p, &m);
        assert!(BKMorphism { mats: incl.clone() }.check(&m, &n).unwrap());
        assert!(BKMorphism { mats: proj.clone() }.check(&n, &p).unwrap());
        let comp = proj[0].mul(&incl[0]);
        assert!(comp.entries().all(|s| s.is_certified_zero()));
    }

    #[test]
    fn twist_of_rank_ones_multiplies() {
        let f = f3();
        let g = f.generator();
        let m = BKModule::rank_one(f.clone(), &[g], &[2]).unwrap();
        let l = BKModule::rank_one(f.clone(), &[g], &[1]).unwrap();
        let t = twist(&m, &l).unwrap();
        let e = t.frob(0).get(0, 0);
        assert_eq!(e.val(), 3);
        assert_eq!(e.coeff(3).unwrap(), f.mul(g, g));
        let trivial = BKModule::rank_one(f.clone(), &[Fe::ONE], &[0]).unwrap();
        assert!(twist(&m, &trivial).unwrap().frob(0).agrees_with(m.frob(0)));
    }

    #[test]
    fn change_basis_identity_and_unit_check() {
        let f = f3();
        let m = BKModule::rank_one(f.clone(), &[Fe::ONE], &[1]).unwrap();
        let id = vec![SMat::identity(f.clone(), 1)];
        let m2 = change_basis(&m, &id).unwrap();
        assert!(m2.frob(0).agrees_with(m.frob(0)));

        let non_unit = vec![SMat::diag_monomials(f.clone(), &[1])];
        assert!(matches!(change_basis(&m, &non_unit), Err(Error::NotAUnitMatrix { .. })));
    }

    #[test]
    fn rejects_singular_frobenius() {
        let f = f3();
        let sing = SMat::zero(f.clone(), 2, 2);
        assert!(BKModule::with_default_prec(f, 1, 2, vec![sing]).is_err());
    }
}
