//! Rank calculus for free submodules of free modules: supplementary
//! submodules, rank/corank identities, additivity along chains, and the
//! second isomorphism `G/(F∩G) ≅ (F+G)/F` at sheaf level.
//!
//! Ranks are taken per connected component of the whole space: a free
//! submodule has constant stalk dimension on each component, and any
//! supplement is constant there too (the ambient restrictions are the
//! identity per block, so a supplement at a bigger open sits inside every
//! smaller one, and equal dimensions force equality).

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::presheaf::{is_complete_sub, quotient_presheaf, Completeness, ModulePresheaf,
    MorphismPresheaf, SubmodulePresheaf};
use crate::sheaf::{sheafify, sheafify_morphism};
use crate::subspace::Subspace;
use crate::topo::OpenSet;

/// The rank of a standard free presentation: every component block has the
/// same dimension and all restriction blocks are identities.
pub fn free_rank(p: &ModulePresheaf) -> Option<usize> {
    if !p.is_equivariant() {
        return None;
    }
    let space = p.space();
    let whole = space.whole_open();
    let dims = p.comp_dims(whole).ok()?;
    let n = *dims.first()?;
    for u in space.opens() {
        if u == space.empty_open() {
            continue;
        }
        if p.comp_dims(u).ok()?.iter().any(|&d| d != n) {
            return None;
        }
    }
    for (u, v) in space.strict_inclusions() {
        let refine = space.component_refinement(u, v).ok()?;
        for (d, &c) in refine.iter().enumerate() {
            let block = p.restriction_block(u, c, v, d).ok()?;
            if block != Mat::identity(p.field(), n) {
                return None;
            }
        }
    }
    Some(n)
}

/// A free submodule together with a supplementary free submodule and the
/// per-component ranks.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub supplement: SubmodulePresheaf,
    /// rank of the submodule on each component of the whole space
    pub ranks: Vec<usize>,
    /// rank of the supplement on each component of the whole space
    pub coranks: Vec<usize>,
}

#[derive(Clone, Debug)]
pub enum SupplementOutcome {
    Found(Decomposition),
    /// The submodule has different stalk dimensions inside one component
    /// of the space, so it is not free and has no rank.
    NonConstantRank {
        component: usize,
        open_a: OpenSet,
        open_b: OpenSet,
        dim_a: usize,
        dim_b: usize,
    },
    /// No subspace complements every section space of the submodule on
    /// this component of the space.
    NoCommonComplement { component: usize },
}

impl SupplementOutcome {
    pub fn decomposition(self) -> Option<Decomposition> {
        match self {
            SupplementOutcome::Found(d) => Some(d),
            _ => None,
        }
    }
}

/// Searches for a free submodule supplementary to `f` inside its free
/// ambient module. Coordinate-spanned complements are preferred; otherwise
/// a common complement of the section spaces is built greedily.
pub fn find_supplement(f: &SubmodulePresheaf) -> Result<SupplementOutcome> {
    let e = f.ambient();
    let n = free_rank(e).ok_or_else(|| {
        Error::Invalid("supplements require a standard free ambient module".into())
    })?;
    let space = e.space();
    let field = e.field();
    let whole = space.whole_open();
    let x_comps = space.components(whole)?.components;
    // gather, per component of the space, the section spaces of f
    let mut families: Vec<Vec<(OpenSet, Subspace)>> = vec![Vec::new(); x_comps.len()];
    for u in space.opens() {
        let comps = space.components(u)?.components;
        for (c, &cbits) in comps.iter().enumerate() {
            let k = x_comps
                .iter()
                .position(|&kbits| kbits & cbits == cbits)
                .expect("every component sits in a component of the space");
            families[k].push((u, f.part(u, c).clone()));
        }
    }
    let mut picks: Vec<Subspace> = Vec::with_capacity(x_comps.len());
    let mut ranks = Vec::with_capacity(x_comps.len());
    let mut coranks = Vec::with_capacity(x_comps.len());
    for (k, family) in families.iter().enumerate() {
        let r = family.first().map(|(_, s)| s.dim()).unwrap_or(0);
        if let Some((u_bad, s_bad)) = family.iter().find(|(_, s)| s.dim() != r) {
            return Ok(SupplementOutcome::NonConstantRank {
                component: k,
                open_a: family[0].0,
                open_b: *u_bad,
                dim_a: r,
                dim_b: s_bad.dim(),
            });
        }
        // coordinate complements first
        let spaces: Vec<Subspace> = family.iter().map(|(_, s)| s.clone()).collect();
        let mut found = None;
        for bits in 0u32..(1 << n) {
            if bits.count_ones() as usize != n - r {
                continue;
            }
            let rows: Vec<Vec<_>> = (0..n)
                .filter(|j| bits & (1 << j) != 0)
                .map(|j| {
                    let mut v = vec![field.zero(); n];
                    v[j] = field.one();
                    v
                })
                .collect();
            let w = Subspace::from_vecs(field, n, &rows)?;
            if spaces.iter().all(|s| s.intersect(&w).map(|i| i.is_zero()).unwrap_or(false)) {
                found = Some(w);
                break;
            }
        }
        let w = match found.or_else(|| Subspace::common_complement(field, n, &spaces)) {
            Some(w) => w,
            None => return Ok(SupplementOutcome::NoCommonComplement { component: k }),
        };
        picks.push(w);
        ranks.push(r);
        coranks.push(n - r);
    }
    // the supplement is constant: the picked subspace on every component
    let mut parts = Vec::with_capacity(space.n_opens());
    for u in space.opens() {
        let comps = space.components(u)?.components;
        let mut row = Vec::with_capacity(comps.len());
        for &cbits in &comps {
            let k = x_comps
                .iter()
                .position(|&kbits| kbits & cbits == cbits)
                .expect("component of the space");
            row.push(picks[k].clone());
        }
        parts.push(row);
    }
    let supplement = SubmodulePresheaf::from_parts(e.clone(), parts)?;
    Ok(SupplementOutcome::Found(Decomposition {
        supplement,
        ranks,
        coranks,
    }))
}

/// Outcome of one rank identity, per component of the space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Holds,
    Fails { component: usize },
    Skipped(String),
}

impl Outcome {
    pub fn holds(&self) -> bool {
        matches!(self, Outcome::Holds)
    }
}

/// The rank identities for two free submodules of a free module, checked
/// against ranks measured on independently built quotient sheaves.
#[derive(Clone, Debug)]
pub struct RankReport {
    /// rank F + corank F = rank E (and the same for G)
    pub rank_nullity: Outcome,
    /// rank(F+G) + rank(F∩G) = rank F + rank G
    pub modular: Outcome,
    /// corank(F+G) + corank(F∩G) = corank F + corank G
    pub comodular: Outcome,
    /// additivity along chains: rank F₃/F₁ = rank F₂/F₁ + rank F₃/F₂
    /// for 0 ⊆ F ⊆ F+G and F∩G ⊆ G ⊆ E
    pub chain_additivity: Outcome,
}

impl RankReport {
    pub fn all_hold(&self) -> bool {
        self.rank_nullity.holds()
            && self.modular.holds()
            && self.comodular.holds()
            && self.chain_additivity.holds()
    }
}

/// Per-component stalk ranks of the sheafified quotient `amb/sub`, where
/// `amb` is a module presheaf and `sub` a submodule re-coordinatized in it.
/// Returns None if the quotient sheaf has non-constant stalk dimensions.
fn quotient_ranks(
    amb: &ModulePresheaf,
    sub: &SubmodulePresheaf,
) -> Result<Option<Vec<usize>>> {
    let (q, _) = quotient_presheaf(amb, sub)?;
    let sheafified = sheafify(&q)?;
    per_component_stalk_ranks(sheafified.sheaf())
}

fn per_component_stalk_ranks(p: &ModulePresheaf) -> Result<Option<Vec<usize>>> {
    let space = p.space();
    let whole = space.whole_open();
    let x_comps = space.components(whole)?.components;
    let mut out = Vec::with_capacity(x_comps.len());
    for &kbits in &x_comps {
        let mut rank = None;
        for x in (0..space.n_points()).filter(|x| kbits & (1 << x) != 0) {
            let d = p.dim(space.min_open(x));
            match rank {
                None => rank = Some(d),
                Some(r) if r != d => return Ok(None),
                _ => {}
            }
        }
        out.push(rank.unwrap_or(0));
    }
    Ok(Some(out))
}

/// Re-coordinatizes `small ⊆ big` (both submodules of one ambient) as a
/// submodule of the module presheaf of `big`.
fn sub_inside(
    big: &SubmodulePresheaf,
    big_mod: &ModulePresheaf,
    small: &SubmodulePresheaf,
) -> Result<SubmodulePresheaf> {
    let space = big.space();
    let mut parts = Vec::with_capacity(space.n_opens());
    for u in space.opens() {
        let n_comps = space.n_components(u);
        let mut row = Vec::with_capacity(n_comps);
        for c in 0..n_comps {
            let coords = big.part(u, c).coordinates_of_rows(small.part(u, c).basis())?;
            row.push(Subspace::from_rows(&coords));
        }
        parts.push(row);
    }
    SubmodulePresheaf::from_parts(big_mod.clone(), parts)
}

/// Verifies the rank identities for `f` and `g`, measuring every rank on
/// independently constructed supplements and quotient sheaves.
pub fn verify_rank_identities(
    f: &SubmodulePresheaf,
    g: &SubmodulePresheaf,
) -> Result<RankReport> {
    if f.ambient() != g.ambient() {
        return Err(Error::AmbientMismatch);
    }
    let e = f.ambient();
    let n = free_rank(e).ok_or_else(|| {
        Error::Invalid("rank identities require a standard free ambient module".into())
    })?;
    let sum = f.sum(g)?;
    let meet = f.intersect(g)?;
    let mut decs = Vec::new();
    let mut skip: Option<String> = None;
    for (name, sub) in [("F", f), ("G", g), ("F+G", &sum), ("F∩G", &meet)] {
        match find_supplement(sub)? {
            SupplementOutcome::Found(d) => decs.push(Some(d)),
            SupplementOutcome::NonConstantRank { .. } => {
                skip.get_or_insert(format!("{name} is not free: non-constant stalk rank"));
                decs.push(None);
            }
            SupplementOutcome::NoCommonComplement { .. } => {
                skip.get_or_insert(format!("{name} has no free supplement over this field"));
                decs.push(None);
            }
        }
    }
    if let Some(reason) = skip {
        let s = Outcome::Skipped(reason);
        return Ok(RankReport {
            rank_nullity: s.clone(),
            modular: s.clone(),
            comodular: s.clone(),
            chain_additivity: s,
        });
    }
    let dec: Vec<Decomposition> = decs.into_iter().map(|d| d.expect("checked")).collect();
    let n_comps = dec[0].ranks.len();
    let check = |pred: &dyn Fn(usize) -> bool| -> Outcome {
        match (0..n_comps).find(|&k| !pred(k)) {
            None => Outcome::Holds,
            Some(k) => Outcome::Fails { component: k },
        }
    };
    // coranks measured independently on quotient sheaves
    let corank_f = quotient_ranks(e, f)?;
    let corank_g = quotient_ranks(e, g)?;
    let corank_sum = quotient_ranks(e, &sum)?;
    let corank_meet = quotient_ranks(e, &meet)?;
    let rank_nullity = match (&corank_f, &corank_g) {
        (Some(cf), Some(cg)) => check(&|k| {
            dec[0].ranks[k] + cf[k] == n
                && dec[1].ranks[k] + cg[k] == n
                && cf[k] == dec[0].coranks[k]
                && cg[k] == dec[1].coranks[k]
        }),
        _ => Outcome::Skipped("quotient sheaf has non-constant stalk rank".into()),
    };
    let modular = check(&|k| {
        dec[2].ranks[k] + dec[3].ranks[k] == dec[0].ranks[k] + dec[1].ranks[k]
    });
    let comodular = match (&corank_f, &corank_g, &corank_sum, &corank_meet) {
        (Some(cf), Some(cg), Some(cs), Some(cm)) => {
            check(&|k| cs[k] + cm[k] == cf[k] + cg[k])
        }
        _ => Outcome::Skipped("quotient sheaf has non-constant stalk rank".into()),
    };
    // chains 0 ⊆ F ⊆ F+G and F∩G ⊆ G ⊆ E, quotient ranks measured directly
    let (sum_mod, _) = sum.to_presheaf()?;
    let f_in_sum = sub_inside(&sum, &sum_mod, f)?;
    let rank_sum_over_f = quotient_ranks(&sum_mod, &f_in_sum)?;
    let (g_mod, _) = g.to_presheaf()?;
    let meet_in_g = sub_inside(g, &g_mod, &meet)?;
    let rank_g_over_meet = quotient_ranks(&g_mod, &meet_in_g)?;
    let chain_additivity = match (rank_sum_over_f, rank_g_over_meet, &corank_g, &corank_meet)
    {
        (Some(sf), Some(gm), Some(cg), Some(cm)) => check(&|k| {
            dec[2].ranks[k] == dec[0].ranks[k] + sf[k]
                && cm[k] == gm[k] + cg[k]
        }),
        _ => Outcome::Skipped("quotient sheaf has non-constant stalk rank".into()),
    };
    Ok(RankReport {
        rank_nullity,
        modular,
        comodular,
        chain_additivity,
    })
}

/// The canonical map `S(G/(F∩G)) -> S((F+G)/F)` induced by inclusion,
/// with an isomorphism audit at every open.
#[derive(Clone, Debug)]
pub struct SecondIsoReport {
    pub map: MorphismPresheaf,
    pub is_iso: bool,
}

pub fn second_isomorphism(
    f: &SubmodulePresheaf,
    g: &SubmodulePresheaf,
) -> Result<SecondIsoReport> {
    if f.ambient() != g.ambient() {
        return Err(Error::AmbientMismatch);
    }
    let space = f.space();
    let field = f.field();
    let sum = f.sum(g)?;
    let meet = f.intersect(g)?;
    let (sum_mod, _) = sum.to_presheaf()?;
    let (g_mod, _) = g.to_presheaf()?;
    let f_in_sum = sub_inside(&sum, &sum_mod, f)?;
    let meet_in_g = sub_inside(g, &g_mod, &meet)?;
    let (q_sum, sum_surj) = quotient_presheaf(&sum_mod, &f_in_sum)?;
    let (q_g, g_surj) = quotient_presheaf(&g_mod, &meet_in_g)?;
    // ψ: G -> (F+G)/F, a section maps to the coset of itself
    let mut psi_maps = Vec::with_capacity(space.n_opens());
    for u in space.opens() {
        let n_comps = space.n_components(u);
        let mut incl = Mat::zero(field, 0, 0);
        for c in 0..n_comps {
            let coords = sum.part(u, c).coordinates_of_rows(g.part(u, c).basis())?;
            incl = incl.direct_sum(&coords.transpose());
        }
        psi_maps.push(sum_surj.map(u).mul(&incl)?);
    }
    // ψ kills F∩G, so it factors through G/(F∩G)
    let mut bar_maps = Vec::with_capacity(space.n_opens());
    for u in space.opens() {
        let on_meet = psi_maps[u.0].mul(&meet_in_g.flat(u).basis().transpose())?;
        if !on_meet.is_zero() {
            return Err(Error::Invalid(format!(
                "intersection does not vanish in the quotient at open {}",
                u.0
            )));
        }
        let r = g_surj.map(u).right_inverse()?;
        bar_maps.push(psi_maps[u.0].mul(&r)?);
    }
    let bar = MorphismPresheaf::new(q_g.clone(), q_sum.clone(), bar_maps)?;
    let sf_src = sheafify(&q_g)?;
    let sf_tgt = sheafify(&q_sum)?;
    let map = sheafify_morphism(&bar, &sf_src, &sf_tgt)?;
    let is_iso = space.opens().all(|u| {
        let m = map.map(u);
        m.rows() == m.cols() && m.rank() == m.rows()
    });
    Ok(SecondIsoReport { map, is_iso })
}

/// Completeness of the section-wise sum presheaf `U ↦ F(U) + G(U)`.
pub fn verify_sum_completeness(
    f: &SubmodulePresheaf,
    g: &SubmodulePresheaf,
) -> Result<Completeness> {
    is_complete_sub(&f.sum(g)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presheaf::StructureSheaf;
    use crate::scalar::Field;
    use crate::topo::{discrete2, sierpinski, FiniteSpace};
    use std::sync::Arc;

    const Q: Field = Field::Rational;

    fn structure(space: FiniteSpace) -> StructureSheaf {
        StructureSheaf::new(Arc::new(space), Q)
    }

    /// ∅, {1}, {0,1}, {1,2}, {0,1,2}: two minimal opens overlapping in {1}.
    fn wedge3() -> FiniteSpace {
        FiniteSpace::validate_topology(3, &[0b000, 0b010, 0b011, 0b110, 0b111]).unwrap()
    }

    /// The same subspace on every component of every non-empty open.
    fn const_sub(e: &ModulePresheaf, rows: &[&[i64]]) -> SubmodulePresheaf {
        let space = e.space();
        let n = free_rank(e).unwrap();
        let s = if rows.is_empty() {
            Subspace::zero(e.field(), n)
        } else {
            Subspace::from_rows(&Mat::from_i64(e.field(), rows))
        };
        assert_eq!(s.basis().cols(), n);
        let parts = space
            .opens()
            .map(|u| vec![s.clone(); space.n_components(u)])
            .collect();
        SubmodulePresheaf::from_parts(e.clone(), parts).unwrap()
    }

    #[test]
    fn free_rank_detects_standard_presentations() {
        let e = ModulePresheaf::free(structure(wedge3()), 3);
        assert_eq!(free_rank(&e), Some(3));
        let c = ModulePresheaf::constant(structure(wedge3()), 2);
        assert_eq!(free_rank(&c), None); // no component-split module structure
    }

    #[test]
    fn coordinate_supplement_is_found_with_ranks() {
        let e = ModulePresheaf::free(structure(wedge3()), 2);
        let f = const_sub(&e, &[&[1, 0]]);
        let dec = find_supplement(&f).unwrap().decomposition().unwrap();
        assert_eq!(dec.ranks, vec![1]);
        assert_eq!(dec.coranks, vec![1]);
        let whole = e.space().whole_open();
        // the supplement really is supplementary: F ⊕ W = E sectionwise
        let total = f.sum(&dec.supplement).unwrap();
        assert_eq!(total.flat(whole).dim(), 2);
        assert!(f
            .intersect(&dec.supplement)
            .unwrap()
            .flat(whole)
            .is_zero());
        dec.supplement.validate().unwrap();
    }

    #[test]
    fn supplement_of_skew_line_avoids_it() {
        let e = ModulePresheaf::free(structure(discrete2()), 2);
        let f = const_sub(&e, &[&[1, 1]]);
        let dec = find_supplement(&f).unwrap().decomposition().unwrap();
        assert_eq!(dec.ranks, vec![1, 1]);
        for u in e.space().opens() {
            let flat = f.sum(&dec.supplement).unwrap().flat(u);
            assert_eq!(flat.dim(), e.dim(u));
        }
    }

    #[test]
    fn non_constant_stalk_rank_is_witnessed() {
        // dimension 1 on the open point, 0 on the whole space
        let space = sierpinski();
        let e = ModulePresheaf::free(structure(space), 2);
        let sp = e.space();
        let mut parts = vec![Vec::new(); sp.n_opens()];
        for u in sp.opens() {
            let dims = if u == sp.whole_open() { 0 } else { 1 };
            parts[u.0] = (0..sp.n_components(u))
                .map(|_| {
                    if dims == 0 {
                        Subspace::zero(Q, 2)
                    } else {
                        Subspace::from_rows(&Mat::from_i64(Q, &[&[1, 0]]))
                    }
                })
                .collect();
        }
        let f = SubmodulePresheaf::from_parts(e, parts).unwrap();
        match find_supplement(&f).unwrap() {
            SupplementOutcome::NonConstantRank {
                component,
                dim_a,
                dim_b,
                ..
            } => {
                assert_eq!(component, 0);
                assert_ne!(dim_a, dim_b);
            }
            other => panic!("expected a rank witness, got {other:?}"),
        }
    }

    #[test]
    fn rank_identities_hold_for_free_submodules() {
        // disconnected base: identities hold per component
        let e = ModulePresheaf::free(structure(discrete2()), 3);
        let f = const_sub(&e, &[&[1, 0, 0], &[0, 1, 0]]);
        let g = const_sub(&e, &[&[0, 1, 1]]);
        let report = verify_rank_identities(&f, &g).unwrap();
        assert!(report.all_hold(), "{report:?}");

        // connected base with overlapping submodules
        let e = ModulePresheaf::free(structure(wedge3()), 3);
        let f = const_sub(&e, &[&[1, 0, 0], &[0, 1, 0]]);
        let g = const_sub(&e, &[&[0, 1, 0], &[0, 0, 1]]);
        let report = verify_rank_identities(&f, &g).unwrap();
        assert!(report.all_hold(), "{report:?}");
    }

    #[test]
    fn rank_identities_skip_for_non_free_submodule() {
        let e = ModulePresheaf::free(structure(sierpinski()), 2);
        let sp = e.space();
        let mut parts = vec![Vec::new(); sp.n_opens()];
        for u in sp.opens() {
            let s = if u == sp.whole_open() {
                Subspace::zero(Q, 2)
            } else {
                Subspace::from_rows(&Mat::from_i64(Q, &[&[1, 0]]))
            };
            parts[u.0] = vec![s; sp.n_components(u)];
        }
        let f = SubmodulePresheaf::from_parts(e.clone(), parts).unwrap();
        let g = const_sub(&e, &[]);
        let report = verify_rank_identities(&f, &g).unwrap();
        assert!(matches!(report.rank_nullity, Outcome::Skipped(_)));
        assert!(matches!(report.chain_additivity, Outcome::Skipped(_)));
    }

    #[test]
    fn second_isomorphism_with_trivial_intersection() {
        let e = ModulePresheaf::free(structure(discrete2()), 3);
        let f = const_sub(&e, &[&[1, 0, 0], &[0, 1, 0]]);
        let g = const_sub(&e, &[&[0, 1, 1]]);
        let report = second_isomorphism(&f, &g).unwrap();
        assert!(report.is_iso);
        assert_eq!(report.map.validate(), crate::presheaf::MorphismVerdict::Valid);
    }

    #[test]
    fn second_isomorphism_with_overlap() {
        let e = ModulePresheaf::free(structure(wedge3()), 3);
        let f = const_sub(&e, &[&[1, 0, 0], &[0, 1, 0]]);
        let g = const_sub(&e, &[&[0, 1, 0], &[0, 0, 1]]);
        let report = second_isomorphism(&f, &g).unwrap();
        assert!(report.is_iso);
        // both sides have one-dimensional sections everywhere but ∅
        let whole = e.space().whole_open();
        assert_eq!(report.map.source().dim(whole), 1);
        assert_eq!(report.map.target().dim(whole), 1);
    }

    #[test]
    fn sum_of_complete_subsheaves_can_fail_gluing() {
        // two complete rank-one subsheaves each supported near one closed
        // point; their sum has local sections that cannot glue globally
        let e = ModulePresheaf::free(structure(wedge3()), 1);
        let sp = e.space();
        let full = Subspace::full(Q, 1);
        let zero = Subspace::zero(Q, 1);
        let opens: Vec<_> = sp.opens().collect();
        let mk = |live: &[usize]| {
            let parts = opens
                .iter()
                .map(|u| {
                    let s = if live.contains(&u.0) { full.clone() } else { zero.clone() };
                    vec![s; sp.n_components(*u)]
                })
                .collect();
            SubmodulePresheaf::from_parts(e.clone(), parts).unwrap()
        };
        // opens: 0=∅, 1={1}, 2={0,1}, 3={1,2}, 4=whole
        let f = mk(&[1, 2]);
        let g = mk(&[1, 3]);
        assert!(is_complete_sub(&f).unwrap().is_complete());
        assert!(is_complete_sub(&g).unwrap().is_complete());
        match verify_sum_completeness(&f, &g).unwrap() {
            Completeness::GluingFails { open, .. } => {
                assert_eq!(open, sp.whole_open());
            }
            other => panic!("expected a gluing failure, got {other:?}"),
        }
    }
}
