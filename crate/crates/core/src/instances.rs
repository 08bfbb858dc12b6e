//! Seeded random generators for spaces, modules, submodules, morph data and
//! pairings. Everything is driven by a ChaCha stream, so a seed determines
//! the instance exactly; the generators are the substrate for the randomized
//! property suites and the fuzzing mode of the command-line tool.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::error::Result;
use crate::matrix::Mat;
use crate::pairing::{Pairing, PresheafBilinear};
use crate::presheaf::{ModulePresheaf, StructureSheaf, SubmodulePresheaf};
use crate::scalar::{Field, Scalar};
use crate::subspace::Subspace;
use crate::topo::FiniteSpace;

pub type Seeded = ChaCha8Rng;

pub fn rng(seed: u64) -> Seeded {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The rationals half the time, otherwise a small prime field.
pub fn random_field(rng: &mut Seeded) -> Field {
    if rng.random_bool(0.5) {
        Field::Rational
    } else {
        const PRIMES: [u64; 5] = [2, 3, 5, 7, 101];
        Field::Prime(PRIMES[rng.random_range(0..PRIMES.len())])
    }
}

/// A small scalar; nonzero values stay in a fixed window so rational
/// arithmetic cannot blow up.
pub fn random_scalar(rng: &mut Seeded, field: Field) -> Scalar {
    field.from_i64(rng.random_range(-4..=4))
}

fn random_nonzero(rng: &mut Seeded, field: Field) -> Scalar {
    loop {
        let s = random_scalar(rng, field);
        if !s.is_zero() {
            return s;
        }
    }
}

/// A topology on `n_points` points: a few random subsets closed under
/// union and intersection, always containing ∅ and the whole set.
pub fn random_space(rng: &mut Seeded, n_points: usize) -> FiniteSpace {
    let full: u32 = (1 << n_points) - 1;
    let mut opens: BTreeSet<u32> = BTreeSet::from([0, full]);
    for _ in 0..rng.random_range(1..=n_points + 2) {
        opens.insert(rng.random_range(0..=full));
    }
    loop {
        let snapshot: Vec<u32> = opens.iter().copied().collect();
        let before = opens.len();
        for (i, &a) in snapshot.iter().enumerate() {
            for &b in &snapshot[i + 1..] {
                opens.insert(a | b);
                opens.insert(a & b);
            }
        }
        if opens.len() == before {
            break;
        }
    }
    let list: Vec<u32> = opens.into_iter().collect();
    FiniteSpace::validate_topology(n_points, &list).expect("closure yields a topology")
}

pub fn random_structure(rng: &mut Seeded, field: Field, n_points: usize) -> StructureSheaf {
    let space = random_space(rng, n_points);
    StructureSheaf::new(Arc::new(space), field)
}

pub fn random_matrix(rng: &mut Seeded, field: Field, rows: usize, cols: usize) -> Mat {
    let mut m = Mat::zero(field, rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m.set(r, c, random_scalar(rng, field));
        }
    }
    m
}

pub fn random_invertible(rng: &mut Seeded, field: Field, n: usize) -> Mat {
    // unit triangulars with a nonzero diagonal multiply to something
    // invertible; a final random full-rank draw adds variety
    for _ in 0..64 {
        let m = random_matrix(rng, field, n, n);
        if m.rank() == n {
            return m;
        }
    }
    let mut m = Mat::identity(field, n);
    for i in 0..n {
        m.set(i, i, random_nonzero(rng, field));
    }
    m
}

/// A random matrix of exact rank `r`.
pub fn random_matrix_of_rank(
    rng: &mut Seeded,
    field: Field,
    rows: usize,
    cols: usize,
    r: usize,
) -> Mat {
    assert!(r <= rows.min(cols));
    loop {
        let a = random_matrix(rng, field, rows, r);
        let b = random_matrix(rng, field, r, cols);
        let m = a.mul(&b).expect("shapes agree");
        if m.rank() == r {
            return m;
        }
    }
}

pub fn random_subspace(rng: &mut Seeded, field: Field, ambient: usize) -> Subspace {
    let r = rng.random_range(0..=ambient);
    Subspace::from_rows(&random_matrix(rng, field, r, ambient))
}

/// A free module presheaf on a random space.
pub fn random_free(rng: &mut Seeded, st: StructureSheaf, max_rank: usize) -> ModulePresheaf {
    let rank = rng.random_range(0..=max_rank);
    ModulePresheaf::free(st, rank)
}

/// A submodule of a standard free module that is constant on every
/// component of the space; these are exactly the free submodules.
pub fn random_constant_submodule(rng: &mut Seeded, e: &ModulePresheaf) -> SubmodulePresheaf {
    let space = e.space();
    let field = e.field();
    let whole = space.whole_open();
    let n = e.comp_dims(whole).expect("module structure").first().copied().unwrap_or(0);
    let x_comps = space.components(whole).expect("valid").components;
    let picks: Vec<Subspace> = x_comps
        .iter()
        .map(|_| random_subspace(rng, field, n))
        .collect();
    let parts = space
        .opens()
        .map(|u| {
            space
                .components(u)
                .expect("valid")
                .components
                .iter()
                .map(|&cbits| {
                    let k = x_comps
                        .iter()
                        .position(|&kb| kb & cbits == cbits)
                        .expect("nested");
                    picks[k].clone()
                })
                .collect()
        })
        .collect();
    SubmodulePresheaf::from_parts(e.clone(), parts).expect("constant parts are closed")
}

/// A restriction-closed submodule of a standard free module, generally of
/// non-constant stalk rank: random seeds at random opens, closed downward.
pub fn random_submodule(rng: &mut Seeded, e: &ModulePresheaf) -> SubmodulePresheaf {
    let space = e.space();
    let field = e.field();
    let whole = space.whole_open();
    let n = e.comp_dims(whole).expect("module structure").first().copied().unwrap_or(0);
    let mut parts: Vec<Vec<Subspace>> = space
        .opens()
        .map(|u| {
            (0..space.n_components(u))
                .map(|_| {
                    if rng.random_bool(0.4) {
                        random_subspace(rng, field, n)
                    } else {
                        Subspace::zero(field, n)
                    }
                })
                .collect()
        })
        .collect();
    // close downward: restrictions are identities per block, so each part
    // must contain every part it receives from a bigger open
    loop {
        let mut changed = false;
        for (u, v) in space.strict_inclusions() {
            let refine = space.component_refinement(u, v).expect("valid");
            for (d, &c) in refine.iter().enumerate() {
                let merged = parts[v.0][d].sum(&parts[u.0][c]).expect("same ambient");
                if merged.dim() != parts[v.0][d].dim() {
                    parts[v.0][d] = merged;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    SubmodulePresheaf::from_parts(e.clone(), parts).expect("closure is restriction-closed")
}

/// Conjugates a module presheaf by random block-diagonal basis changes,
/// one per open. The result is isomorphic but no longer in standard form.
pub fn conjugate(rng: &mut Seeded, p: &ModulePresheaf) -> ModulePresheaf {
    let space = p.space();
    let field = p.field();
    let changes: Vec<Mat> = space
        .opens()
        .map(|u| {
            let dims = p.comp_dims(u).expect("module structure");
            let mut b = Mat::zero(field, 0, 0);
            for &d in dims {
                b = b.direct_sum(&random_invertible(rng, field, d));
            }
            b
        })
        .collect();
    let mut restrictions = HashMap::new();
    for (u, v) in space.strict_inclusions() {
        let rho = p.restriction(u, v).expect("valid");
        let inv = changes[u.0].inverse().expect("invertible");
        let new_rho = changes[v.0].mul(&rho.mul(&inv).expect("shape")).expect("shape");
        restrictions.insert((u.0, v.0), new_rho);
    }
    let comp_dims = space
        .opens()
        .map(|u| p.comp_dims(u).expect("module structure").to_vec())
        .collect();
    ModulePresheaf::from_components(p.structure().clone(), comp_dims, restrictions)
        .expect("conjugation preserves functoriality")
}

/// An equivariant module presheaf, frequently incomplete: free modules,
/// point-supported modules, quotients, submodule section spaces, and
/// modules with extra dimensions that restrict to zero, possibly conjugated.
pub fn random_presheaf(rng: &mut Seeded, st: StructureSheaf, max_dim: usize) -> ModulePresheaf {
    let base = match rng.random_range(0..5) {
        0 => ModulePresheaf::free(st, rng.random_range(0..=max_dim)),
        1 => {
            let dims: Vec<usize> = (0..st.space().n_points())
                .map(|_| rng.random_range(0..=max_dim))
                .collect();
            ModulePresheaf::point_supported(st, &dims)
        }
        2 => {
            let free = ModulePresheaf::free(st, rng.random_range(1..=max_dim.max(1)));
            let sub = random_submodule(rng, &free);
            crate::presheaf::quotient_presheaf(&free, &sub)
                .expect("valid quotient")
                .0
        }
        3 => {
            let free = ModulePresheaf::free(st, rng.random_range(1..=max_dim.max(1)));
            let sub = random_submodule(rng, &free);
            sub.to_presheaf().expect("valid submodule").0
        }
        _ => separation_defect(rng, st, max_dim),
    };
    if rng.random_bool(0.5) {
        conjugate(rng, &base)
    } else {
        base
    }
}

/// A free module with extra dimensions at non-minimal opens that restrict
/// to zero: sections indistinguishable on any cover, so separation fails.
pub fn separation_defect(rng: &mut Seeded, st: StructureSheaf, max_dim: usize) -> ModulePresheaf {
    let space = st.space_arc();
    let field = st.field();
    let base = rng.random_range(0..=max_dim);
    let min_opens: BTreeSet<usize> = (0..space.n_points())
        .map(|x| space.min_open(x).0)
        .collect();
    let comp_dims: Vec<Vec<usize>> = space
        .opens()
        .map(|u| {
            (0..space.n_components(u))
                .map(|_| {
                    if u == space.empty_open() {
                        0
                    } else if min_opens.contains(&u.0) {
                        base
                    } else {
                        base + rng.random_range(0..=1)
                    }
                })
                .collect()
        })
        .collect();
    let mut restrictions = HashMap::new();
    for (u, v) in space.strict_inclusions() {
        let refine = space.component_refinement(u, v).expect("valid");
        let src_dims = &comp_dims[u.0];
        let dst_dims = &comp_dims[v.0];
        let rows: usize = dst_dims.iter().sum();
        let cols: usize = src_dims.iter().sum();
        let mut m = Mat::zero(field, rows, cols);
        let off = |dims: &[usize], c: usize| -> usize { dims[..c].iter().sum() };
        for (d, &c) in refine.iter().enumerate() {
            // the shared `base` coordinates copy over; extras die
            for i in 0..base.min(dst_dims[d]).min(src_dims[c]) {
                m.set(off(dst_dims, d) + i, off(src_dims, c) + i, field.one());
            }
        }
        restrictions.insert((u.0, v.0), m);
    }
    ModulePresheaf::from_components(st, comp_dims, restrictions)
        .expect("projections are functorial")
}

/// Random compatible bilinear data between two equivariant presheaves:
/// a uniform sample from the solution space of the compatibility equations.
pub fn random_bilinear(
    rng: &mut Seeded,
    f: &ModulePresheaf,
    e: &ModulePresheaf,
) -> Result<PresheafBilinear> {
    let space = f.space();
    let field = f.field();
    // index the unknown entries of every component matrix
    let mut offsets: Vec<Vec<usize>> = Vec::with_capacity(space.n_opens());
    let mut total = 0usize;
    for u in space.opens() {
        let fd = f.comp_dims(u)?;
        let ed = e.comp_dims(u)?;
        let mut row = Vec::with_capacity(fd.len());
        for c in 0..fd.len() {
            row.push(total);
            total += fd[c] * ed[c];
        }
        offsets.push(row);
    }
    let entry = |u: usize, c: usize, i: usize, j: usize, ecols: usize| -> usize {
        offsets[u][c] + i * ecols + j
    };
    // one linear constraint per entry of every pulled-back matrix
    let mut rows: Vec<Vec<Scalar>> = Vec::new();
    for (u, v) in space.strict_inclusions() {
        let refine = space.component_refinement(u, v)?;
        let fd_u = f.comp_dims(u)?.to_vec();
        let ed_u = e.comp_dims(u)?.to_vec();
        let fd_v = f.comp_dims(v)?.to_vec();
        let ed_v = e.comp_dims(v)?.to_vec();
        for (d, &c) in refine.iter().enumerate() {
            let l = f.restriction_block(u, c, v, d)?;
            let r = e.restriction_block(u, c, v, d)?;
            for i in 0..fd_u[c] {
                for j in 0..ed_u[c] {
                    let mut row = vec![field.zero(); total];
                    // (Lᵀ M_{v,d} R)_{ij} = Σ_{a,b} L_{ai} M_{ab} R_{bj}
                    for a in 0..fd_v[d] {
                        for b in 0..ed_v[d] {
                            let coeff = l.at(a, i).mul_ref(r.at(b, j));
                            let k = entry(v.0, d, a, b, ed_v[d]);
                            row[k] = row[k].add_ref(&coeff);
                        }
                    }
                    let k = entry(u.0, c, i, j, ed_u[c]);
                    row[k] = row[k].sub_ref(&field.one());
                    rows.push(row);
                }
            }
        }
    }
    let solution = if rows.is_empty() {
        // no constraints: any assignment works
        (0..total).map(|_| random_scalar(rng, field)).collect::<Vec<_>>()
    } else {
        let system = Mat::from_rows(field, rows)?;
        let kernel = system.kernel_basis();
        let mut sol = vec![field.zero(); total];
        for r in 0..kernel.rows() {
            let w = random_scalar(rng, field);
            for k in 0..total {
                sol[k] = sol[k].add_ref(&w.mul_ref(kernel.at(r, k)));
            }
        }
        sol
    };
    let mut mats = Vec::with_capacity(space.n_opens());
    for u in space.opens() {
        let fd = f.comp_dims(u)?;
        let ed = e.comp_dims(u)?;
        let mut per_comp = Vec::with_capacity(fd.len());
        for c in 0..fd.len() {
            let mut m = Mat::zero(field, fd[c], ed[c]);
            for i in 0..fd[c] {
                for j in 0..ed[c] {
                    m.set(i, j, solution[entry(u.0, c, i, j, ed[c])].clone());
                }
            }
            per_comp.push(m);
        }
        mats.push(per_comp);
    }
    PresheafBilinear::new(f.clone(), e.clone(), mats)
}

/// A pairing of free modules from one stalk matrix per component of the
/// space; `rank` caps the rank of each matrix (None = unconstrained).
pub fn random_pairing(
    rng: &mut Seeded,
    st: StructureSheaf,
    m: usize,
    n: usize,
    rank: Option<usize>,
) -> Pairing {
    let space = st.space_arc();
    let field = st.field();
    let f = ModulePresheaf::free(st.clone(), m);
    let e = ModulePresheaf::free(st, n);
    let whole = space.whole_open();
    let x_comps = space.components(whole).expect("valid").components;
    let per_comp: Vec<Mat> = x_comps
        .iter()
        .map(|_| match rank {
            Some(r) => random_matrix_of_rank(rng, field, m, n, r.min(m).min(n)),
            None => random_matrix(rng, field, m, n),
        })
        .collect();
    let point_mats = (0..space.n_points())
        .map(|x| {
            let k = x_comps
                .iter()
                .position(|&kb| kb & (1 << x) != 0)
                .expect("point in a component");
            per_comp[k].clone()
        })
        .collect();
    Pairing::new(f, e, point_mats).expect("constant stalk matrices are compatible")
}

/// A degenerate pairing: both ranks at least 1, stalk matrices of rank
/// strictly below both side ranks.
pub fn random_degenerate_pairing(rng: &mut Seeded, st: StructureSheaf, max_rank: usize) -> Pairing {
    let m = rng.random_range(1..=max_rank.max(1));
    let n = rng.random_range(1..=max_rank.max(1));
    let r = rng.random_range(0..m.min(n));
    random_pairing(rng, st, m, n, Some(r))
}

/// A non-degenerate pairing: equal ranks, invertible stalk matrices.
pub fn random_nondegenerate_pairing(
    rng: &mut Seeded,
    st: StructureSheaf,
    max_rank: usize,
) -> Pairing {
    let n = rng.random_range(0..=max_rank);
    random_pairing(rng, st, n, n, Some(n))
}

/// A pairing with zero left kernel (full row rank), possibly degenerate on
/// the right.
pub fn random_left_injective_pairing(
    rng: &mut Seeded,
    st: StructureSheaf,
    max_rank: usize,
) -> Pairing {
    let m = rng.random_range(0..=max_rank);
    let n = rng.random_range(m..=max_rank.max(m));
    random_pairing(rng, st, m, n, Some(m))
}
