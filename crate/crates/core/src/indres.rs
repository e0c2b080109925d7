//! Unramified base change f^*, restriction of scalars f_*, rank-one normal
//! forms, and the irreducibility test for restricted rank-one modules.
//!
//! For an unramified extension of residue degree D over degree d, base change
//! repeats the Frobenius matrices along the embedding cycle, and restriction
//! assembles them into block matrices along the phi-orbit; weights pull back
//! along embedding restriction and union over fibers respectively.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Fe, FieldSpec};
use crate::module::{BKModule, RestrictedRankOne};
use crate::series::{solve_unit_twist, LaurentSeries};
use crate::smat::SMat;

/// Normal-form data of a rank-one module over a residue field of degree D:
/// phi(1) = x u^{r_theta} e_theta per embedding, with x a D-th root of the
/// basis-free cycle product `x_total` of the leading units.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankOneData {
    pub big_d: usize,
    pub r: Vec<i64>,
    /// A D-th root of x_total; not canonical (any root presents the module).
    pub x: Fe,
    /// Cycle product of the leading units: invariant under basis change.
    pub x_total: Fe,
}

impl RankOneData {
    /// The normal-form module this data presents.
    pub fn to_module(&self, field: &Arc<FieldSpec>) -> Result<BKModule> {
        BKModule::rank_one_uniform(field.clone(), self.x, &self.r)
    }
}

/// Extension of scalars along an unramified extension: the output has
/// `d_new` embeddings with frob'[j] = frob[j mod d]. Weights at an upstairs
/// embedding equal the weights at its restriction; strong divisibility is
/// preserved.
pub fn induce(m: &BKModule, d_new: usize) -> Result<BKModule> {
    let d = m.embeddings();
    if d_new == 0 || d_new % d != 0 || m.field().m() as usize % d_new != 0 {
        return Err(Error::DegreeIncompatible(format!(
            "need d | D' | m, got d = {d}, D' = {d_new}, m = {}",
            m.field().m()
        )));
    }
    let frob = (0..d_new).map(|j| m.frob(j % d).clone()).collect();
    BKModule::new(m.field().clone(), d_new, m.rank(), frob, m.prec())
}

/// Restriction of scalars down to `d_new` embeddings (d_new | D). The rank
/// multiplies by D/d_new; per downstairs embedding the Frobenius is the block
/// matrix assembling the upstairs blocks along the phi-orbit. Upstairs block
/// i of component tau_j sits at block row/column position (i - j)/d_new, for
/// i running over indices congruent to j.
pub fn restrict(n: &BKModule, d_new: usize) -> Result<BKModule> {
    let big_d = n.embeddings();
    if d_new == 0 || big_d % d_new != 0 {
        return Err(Error::DegreeIncompatible(format!(
            "need d | D, got d = {d_new}, D = {big_d}"
        )));
    }
    let field = n.field().clone();
    let blocks = big_d / d_new;
    let rk = n.rank();
    let out_rank = rk * blocks;
    let mut frob = Vec::with_capacity(d_new);
    for j in 0..d_new {
        let mut mat = SMat::zero(field.clone(), out_rank, out_rank);
        // column block b holds theta_{j + 1 + b d}; phi maps it into
        // theta_{j + b d} via the upstairs matrix at index j + b d.
        for b in 0..blocks {
            let src_theta = (j + 1 + b * d_new) % big_d;
            let dst_theta = (j + b * d_new) % big_d;
            let x = n.frob(dst_theta);
            debug_assert_eq!((src_theta + big_d - 1) % big_d, dst_theta);
            let row_block = (dst_theta - j) / d_new;
            for rr in 0..rk {
                for cc in 0..rk {
                    mat.set(row_block * rk + rr, b * rk + cc, x.get(rr, cc).clone());
                }
            }
        }
        frob.push(mat);
    }
    let mut out = BKModule::new(field.clone(), d_new, out_rank, frob, n.prec())?;
    if rk == 1 {
        // record the generator layout for the lattice machinery
        let mut r = Vec::with_capacity(big_d);
        let mut x_total = Fe::ONE;
        for j in 0..big_d {
            let (v, c) = n.frob(j).get(0, 0).leading()?;
            r.push(v);
            x_total = field.mul(x_total, c);
        }
        out.origin = Some(RestrictedRankOne { big_d, r, x_total });
    }
    Ok(out)
}

/// Bring a rank-one module to normal form.
///
/// The weight vector is read off the entry valuations; the cycle product of
/// the leading units is the basis-free unit invariant, and the returned x is
/// its smallest D-th root (an error asks the caller to enlarge the field when
/// no root exists). `normalizing_change` returns the unit scalars that
/// realize the isomorphism onto the normal form.
pub fn normalize_rank_one(n: &BKModule) -> Result<RankOneData> {
    if n.rank() != 1 {
        return Err(Error::BadInput("normal form requires a rank-one module".into()));
    }
    let field = n.field().clone();
    let big_d = n.embeddings();
    let mut r = Vec::with_capacity(big_d);
    let mut x_total = Fe::ONE;
    for j in 0..big_d {
        let (v, c) = n.frob(j).get(0, 0).leading()?;
        r.push(v);
        x_total = field.mul(x_total, c);
    }
    let x = field.nth_root(x_total, big_d as u64)?;
    Ok(RankOneData { big_d, r, x, x_total })
}

/// The unit scalars z_j with z_j^{-1} s_j phi(z_{j+1}) = x u^{r_j}, solving
/// the cycle equation phi^D(z) = G^{-1} z for the twisted unit product G.
/// Feeding them to `change_basis` carries the module onto its normal form.
pub fn normalizing_change(n: &BKModule, data: &RankOneData) -> Result<Vec<SMat>> {
    let field = n.field().clone();
    let big_d = n.embeddings();
    let terms = n.prec();
    // g_j = unit part of s_j divided by x; the cycle product has constant term 1
    let x_inv = field.inv(data.x)?;
    let mut g = Vec::with_capacity(big_d);
    for j in 0..big_d {
        let s = n.frob(j).get(0, 0);
        let unit = s.shift(-data.r[j]).scale(x_inv);
        g.push(unit);
    }
    let mut cycle = LaurentSeries::one(field.clone());
    for (j, gj) in g.iter().enumerate() {
        cycle = cycle.mul(&gj.frobenius_power(j as u32));
    }
    let f_twist = cycle.invert(terms)?;
    let (z0, one) = solve_unit_twist(&f_twist, big_d as u32, terms)?;
    debug_assert_eq!(one, Fe::ONE);
    // z_j = g_j phi(g_{j+1}) ... phi^{D-1-j}(g_{D-1}) phi^{D-j}(z0), z_0 = z0
    let mut z = vec![LaurentSeries::one(field.clone()); big_d];
    z[0] = z0.clone();
    for j in (1..big_d).rev() {
        let mut acc = g[j].clone();
        for (step, gk) in g.iter().enumerate().take(big_d).skip(j + 1) {
            acc = acc.mul(&gk.frobenius_power((step - j) as u32));
        }
        acc = acc.mul(&z0.frobenius_power((big_d - j) as u32));
        z[j] = acc;
    }
    Ok(z
        .into_iter()
        .map(|s| SMat::from_entries(field.clone(), 1, 1, vec![s]))
        .collect())
}

/// Cyclic rotation of a rank-one presentation: relabel the base embedding.
pub fn rotate_rank_one(n: &BKModule, s: usize) -> Result<BKModule> {
    if n.rank() != 1 {
        return Err(Error::BadInput("rotation is for rank-one modules".into()));
    }
    let d = n.embeddings();
    let frob = (0..d).map(|j| n.frob((j + s) % d).clone()).collect();
    BKModule::new(n.field().clone(), d, 1, frob, n.prec())
}

/// Constructively decide whether two rank-one modules agree up to relabeling
/// the base embedding and a basis change: returns the rotation and scalars
/// when the invariants (rotation class of r, x_total) match.
pub fn rank_one_isomorphism(a: &BKModule, b: &BKModule) -> Result<Option<(usize, Vec<SMat>)>> {
    if a.rank() != 1 || b.rank() != 1 || a.embeddings() != b.embeddings() {
        return Ok(None);
    }
    let field = a.field().clone();
    let big_d = a.embeddings();
    let read = |m: &BKModule| -> Result<(Vec<i64>, Fe)> {
        let mut r = Vec::with_capacity(big_d);
        let mut xt = Fe::ONE;
        for j in 0..big_d {
            let (v, c) = m.frob(j).get(0, 0).leading()?;
            r.push(v);
            xt = field.mul(xt, c);
        }
        Ok((r, xt))
    };
    let (ra, xa) = read(a)?;
    let (rb, xb) = read(b)?;
    if xa != xb {
        return Ok(None);
    }
    for s in 0..big_d {
        if (0..big_d).all(|j| ra[(j + s) % big_d] == rb[j]) {
            let rot = rotate_rank_one(a, s)?;
            // scalars z with z_j^{-1} rot_j phi(z_{j+1}) = b_j: same cycle trick
            // applied to the ratio rot_j / b_j.
            let terms = a.prec();
            let mut g = Vec::with_capacity(big_d);
            for j in 0..big_d {
                let num = rot.frob(j).get(0, 0).clone();
                let den = b.frob(j).get(0, 0).invert(terms)?;
                g.push(num.mul(&den));
            }
            let mut cycle = LaurentSeries::one(field.clone());
            for (j, gj) in g.iter().enumerate() {
                cycle = cycle.mul(&gj.frobenius_power(j as u32));
            }
            if cycle.eval_at_zero() != Fe::ONE {
                continue;
            }
            let f_twist = cycle.invert(terms)?;
            let (z0, _) = solve_unit_twist(&f_twist, big_d as u32, terms)?;
            let mut z = vec![LaurentSeries::one(field.clone()); big_d];
            z[0] = z0.clone();
            for j in (1..big_d).rev() {
                let mut acc = g[j].clone();
                for (step, gk) in g.iter().enumerate().take(big_d).skip(j + 1) {
                    acc = acc.mul(&gk.frobenius_power((step - j) as u32));
                }
                acc = acc.mul(&z0.frobenius_power((big_d - j) as u32));
                z[j] = acc;
            }
            let mats: Vec<SMat> = z
                .into_iter()
                .map(|ser| SMat::from_entries(field.clone(), 1, 1, vec![ser]))
                .collect();
            return Ok(Some((s, mats)));
        }
    }
    Ok(None)
}

/// Tame-exponent irreducibility criterion for the restriction to F_p of a
/// rank-one module over degree D: with E = sum r_j p^j, the restriction is
/// reducible exactly when some proper divisor D' of D fixes E under
/// multiplication by p^{D'} modulo p^D - 1 (the unramified part is treated as
/// always matchable after enlarging the coefficient field).
pub fn is_irreducible_restricted(data: &RankOneData, p: u32) -> bool {
    let big_d = data.big_d as u32;
    if big_d == 1 {
        return true;
    }
    let modulus: i128 = (p as i128).pow(big_d) - 1;
    let mut e: i128 = 0;
    for (j, &rj) in data.r.iter().enumerate() {
        e += (rj as i128) * (p as i128).pow(j as u32);
    }
    e = e.rem_euclid(modulus);
    for dd in 1..big_d {
        if big_d % dd != 0 {
            continue;
        }
        let shift = (p as i128).pow(dd).rem_euclid(modulus);
        if (e * shift).rem_euclid(modulus) == e {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::{is_strongly_divisible, weights_all};
    use crate::module::change_basis;

    fn field(p: u32, m: u32) -> Arc<FieldSpec> {
        FieldSpec::default_field(p, m).unwrap()
    }

    #[test]
    fn induce_repeats_and_preserves_weights() {
        let f = field(3, 4);
        let m = BKModule::rank_one(f.clone(), &[f.generator()], &[2]).unwrap();
        let up = induce(&m, 4).unwrap();
        assert_eq!(up.embeddings(), 4);
        for j in 0..4 {
            assert_eq!(weights_all(&up).unwrap()[j], vec![2]);
        }
        assert!(induce(&m, 3).is_err());
        // identity when the degree is unchanged
        let same = induce(&m, 1).unwrap();
        assert!(same.frob(0).agrees_with(m.frob(0)));
    }

    #[test]
    fn restrict_unions_weights_and_tags_origin() {
        let f = field(3, 4);
        let n = BKModule::rank_one_uniform(f.clone(), f.generator(), &[0, 1, 2, 3]).unwrap();
        let down = restrict(&n, 1).unwrap();
        assert_eq!(down.rank(), 4);
        let mut w = weights_all(&down).unwrap()[0].clone();
        w.sort_unstable();
        assert_eq!(w, vec![0, 1, 2, 3]);
        let tag = down.origin().unwrap();
        assert_eq!(tag.big_d, 4);
        assert_eq!(tag.r, vec![0, 1, 2, 3]);
        assert_eq!(tag.x_total, f.pow(f.generator(), 4));
        // D = d is the identity
        let same = restrict(&n, 4).unwrap();
        for j in 0..4 {
            assert!(same.frob(j).agrees_with(n.frob(j)));
        }
    }

    #[test]
    fn restrict_preserves_sd() {
        let f = field(3, 2);
        let n = BKModule::rank_one_uniform(f.clone(), f.generator(), &[1, 3]).unwrap();
        assert!(is_strongly_divisible(&n).unwrap().sd);
        let down = restrict(&n, 1).unwrap();
        assert!(is_strongly_divisible(&down).unwrap().sd);
    }

    #[test]
    fn normalize_recovers_disguised_rank_one() {
        let f = field(3, 2);
        let g = f.generator();
        // start from normal form (x = g, r = (1, 2)) and disguise by units
        let m = BKModule::rank_one_uniform(f.clone(), g, &[1, 2]).unwrap();
        let disguise = vec![
            SMat::from_entries(
                f.clone(),
                1,
                1,
                vec![LaurentSeries::from_coeffs(f.clone(), 0, vec![Fe::ONE, g])],
            ),
            SMat::from_entries(
                f.clone(),
                1,
                1,
                vec![LaurentSeries::from_coeffs(f.clone(), 0, vec![g, Fe::ONE, Fe::ONE])],
            ),
        ];
        let hidden = change_basis(&m, &disguise).unwrap();
        let data = normalize_rank_one(&hidden).unwrap();
        assert_eq!(data.r, vec![1, 2]);
        assert_eq!(data.x_total, f.mul(g, g));
        // the normalizing change actually lands on the normal form
        let z = normalizing_change(&hidden, &data).unwrap();
        let back = change_basis(&hidden, &z).unwrap();
        let normal = data.to_module(&f).unwrap();
        for j in 0..2 {
            assert!(back.frob(j).agrees_with(normal.frob(j)));
        }
    }

    #[test]
    fn already_normal_input_is_fixed() {
        let f = field(2, 3);
        let m = BKModule::rank_one_uniform(f.clone(), f.generator(), &[0, 1, 1]).unwrap();
        let data = normalize_rank_one(&m).unwrap();
        assert_eq!(data.r, vec![0, 1, 1]);
        assert_eq!(data.x_total, f.pow(f.generator(), 3));
    }

    #[test]
    fn irreducibility_criterion_examples() {
        for p in [2u32, 3] {
            let d1010 = RankOneData { big_d: 4, r: vec![0, 1, 0, 1], x: Fe::ONE, x_total: Fe::ONE };
            // r written low-index-first; (1,0,1,0) in cycle order has period 2
            assert!(!is_irreducible_restricted(&d1010, p));
            let d0011 = RankOneData { big_d: 4, r: vec![1, 1, 0, 0], x: Fe::ONE, x_total: Fe::ONE };
            assert!(is_irreducible_restricted(&d0011, p));
            let dconst = RankOneData { big_d: 4, r: vec![2, 2, 2, 2], x: Fe::ONE, x_total: Fe::ONE };
            assert!(!is_irreducible_restricted(&dconst, p));
            let rank1 = RankOneData { big_d: 1, r: vec![1], x: Fe::ONE, x_total: Fe::ONE };
            assert!(is_irreducible_restricted(&rank1, p));
        }
    }

    #[test]
    fn rank_one_isomorphism_is_complete() {
        let f = field(3, 2);
        let g = f.generator();
        let a = BKModule::rank_one(f.clone(), &[g, Fe::ONE], &[1, 2]).unwrap();
        // same rotation class and same cycle product, different presentation
        let b = BKModule::rank_one(f.clone(), &[Fe::ONE, g], &[2, 1]).unwrap();
        let iso = rank_one_isomorphism(&a, &b).unwrap();
        assert!(iso.is_some());
        let (s, z) = iso.unwrap();
        let rotated = rotate_rank_one(&a, s).unwrap();
        let moved = change_basis(&rotated, &z).unwrap();
        assert!(moved.frob(0).agrees_with(b.frob(0)));
        assert!(moved.frob(1).agrees_with(b.frob(1)));

        // different cycle product: no isomorphism
        let c = BKModule::rank_one(f.clone(), &[g, g], &[1, 2]).unwrap();
        assert!(rank_one_isomorphism(&a, &c).unwrap().is_none());
        // different rotation class
        let dmod = BKModule::rank_one(f.clone(), &[g, Fe::ONE], &[2, 2]).unwrap();
        assert!(rank_one_isomorphism(&a, &dmod).unwrap().is_none());
    }
}
