//! Sheafification of module presheaves on finite spaces, its functorial
//! action on morphisms, and finite products.
//!
//! On a finite space the minimal-open cover of an open refines every other
//! cover, so the sheafification can be computed in one step: sections of the
//! sheafification over `u` are the compatible families of sections over the
//! minimal opens of the points of `u`. Compatibility only ties comparable
//! points, so the result always splits along connected components — even
//! when the input presheaf carries no component structure.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::presheaf::{ModulePresheaf, MorphismPresheaf};
use crate::subspace::Subspace;
use crate::topo::OpenSet;

/// Basis data of the compatible families over one component of one open.
#[derive(Clone, Debug)]
pub struct FamilyChart {
    /// points of the component, ascending
    pub points: Vec<usize>,
    /// offsets of the per-point blocks inside a flat family vector
    pub offsets: Vec<usize>,
    /// canonical basis of the compatible-family subspace of ⊕_x p(U_x)
    pub basis: Subspace,
}

impl FamilyChart {
    /// The rows of the family basis restricted to the block of point `x`:
    /// a `dim x p(U_x)` matrix whose rows are the x-parts of basis families.
    pub fn point_block(&self, x: usize) -> Result<Mat> {
        let i = self
            .points
            .iter()
            .position(|&y| y == x)
            .ok_or(Error::BadPoint(x))?;
        Ok(self
            .basis
            .basis()
            .submatrix(0..self.basis.dim(), self.offsets[i]..self.offsets[i + 1]))
    }
}

/// A presheaf together with its sheafification and the unit morphism.
#[derive(Clone, Debug)]
pub struct Sheafification {
    source: ModulePresheaf,
    sheaf: ModulePresheaf,
    unit: MorphismPresheaf,
    charts: Vec<Vec<FamilyChart>>,
}

impl Sheafification {
    pub fn source(&self) -> &ModulePresheaf {
        &self.source
    }

    pub fn sheaf(&self) -> &ModulePresheaf {
        &self.sheaf
    }

    pub fn unit(&self) -> &MorphismPresheaf {
        &self.unit
    }

    pub fn chart(&self, u: OpenSet, c: usize) -> &FamilyChart {
        &self.charts[u.0][c]
    }
}

fn component_chart(p: &ModulePresheaf, cbits: u32) -> Result<FamilyChart> {
    let space = p.space();
    let field = p.field();
    let points: Vec<usize> = (0..space.n_points()).filter(|x| cbits & (1 << x) != 0).collect();
    let mut offsets = Vec::with_capacity(points.len() + 1);
    let mut acc = 0;
    for &x in &points {
        offsets.push(acc);
        acc += p.dim(space.min_open(x));
    }
    offsets.push(acc);
    let total = acc;
    // compatibility: for y ∈ U_x, restricting the x-part must give the y-part
    let mut rows: Vec<Vec<crate::scalar::Scalar>> = Vec::new();
    for (i, &x) in points.iter().enumerate() {
        let ux = space.min_open(x);
        for (j, &y) in points.iter().enumerate() {
            if i == j || !space.points(ux).any(|z| z == y) {
                continue;
            }
            let rho = p.restriction(ux, space.min_open(y))?;
            for r in 0..rho.rows() {
                let mut row = vec![field.zero(); total];
                for c in 0..rho.cols() {
                    row[offsets[i] + c] = rho.at(r, c).clone();
                }
                row[offsets[j] + r] = row[offsets[j] + r].sub_ref(&field.one());
                rows.push(row);
            }
        }
    }
    let basis = if rows.is_empty() {
        Subspace::full(field, total)
    } else {
        Subspace::from_rows(&Mat::from_rows(field, rows)?.kernel_basis())
    };
    Ok(FamilyChart {
        points,
        offsets,
        basis,
    })
}

/// Computes the sheafification of `p` together with the unit `p -> S(p)`.
/// The result always carries component structure.
pub fn sheafify(p: &ModulePresheaf) -> Result<Sheafification> {
    let space = p.space();
    let field = p.field();
    let mut charts: Vec<Vec<FamilyChart>> = Vec::with_capacity(space.n_opens());
    for u in space.opens() {
        let comps = space.components(u)?.components;
        charts.push(
            comps
                .iter()
                .map(|&c| component_chart(p, c))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let comp_dims: Vec<Vec<usize>> = charts
        .iter()
        .map(|row| row.iter().map(|ch| ch.basis.dim()).collect())
        .collect();

    // restriction (u,c) -> (v,d): truncate a family to the points of d and
    // re-express it in the canonical family basis over (v,d)
    let mut restrictions = HashMap::new();
    for (u, v) in space.strict_inclusions() {
        let refine = space.component_refinement(u, v)?;
        let dim_u: usize = comp_dims[u.0].iter().sum();
        let dim_v: usize = comp_dims[v.0].iter().sum();
        let mut m = Mat::zero(field, dim_v, dim_u);
        let u_off = prefix(&comp_dims[u.0]);
        let v_off = prefix(&comp_dims[v.0]);
        for (d, &c) in refine.iter().enumerate() {
            let src = &charts[u.0][c];
            let dst = &charts[v.0][d];
            let total_d = *dst.offsets.last().expect("offsets nonempty");
            let mut rows: Vec<Vec<crate::scalar::Scalar>> = Vec::new();
            for fam in src.basis.basis().row_vecs() {
                let mut row = vec![field.zero(); total_d];
                for (j, &x) in dst.points.iter().enumerate() {
                    let i = src.points.iter().position(|&y| y == x).expect("d ⊆ c");
                    let width = src.offsets[i + 1] - src.offsets[i];
                    for k in 0..width {
                        row[dst.offsets[j] + k] = fam[src.offsets[i] + k].clone();
                    }
                }
                rows.push(row);
            }
            let coords = if rows.is_empty() {
                Mat::zero(field, 0, dst.basis.dim())
            } else {
                dst.basis
                    .coordinates_of_rows(&Mat::from_rows(field, rows)?)?
            };
            // coords: src_dim x dst_dim, transpose into the (d, c) block
            for r in 0..dst.basis.dim() {
                for cc in 0..src.basis.dim() {
                    m.set(v_off[d] + r, u_off[c] + cc, coords.at(cc, r).clone());
                }
            }
        }
        restrictions.insert((u.0, v.0), m);
    }
    let sheaf = ModulePresheaf::from_components(p.structure().clone(), comp_dims.clone(), restrictions)?;

    // unit: a section restricts to the compatible family of its germs
    let mut maps = Vec::with_capacity(space.n_opens());
    for u in space.opens() {
        let mut m = Mat::zero(field, sheaf.dim(u), p.dim(u));
        let off = prefix(&comp_dims[u.0]);
        for (c, chart) in charts[u.0].iter().enumerate() {
            let total = *chart.offsets.last().expect("offsets nonempty");
            let mut compare = Mat::zero(field, total, p.dim(u));
            for (i, &x) in chart.points.iter().enumerate() {
                let rho = p.restriction(u, space.min_open(x))?;
                for r in 0..rho.rows() {
                    for cc in 0..rho.cols() {
                        compare.set(chart.offsets[i] + r, cc, rho.at(r, cc).clone());
                    }
                }
            }
            let coords = chart.basis.coordinates_of_rows(&compare.transpose())?;
            for r in 0..chart.basis.dim() {
                for cc in 0..p.dim(u) {
                    m.set(off[c] + r, cc, coords.at(cc, r).clone());
                }
            }
        }
        maps.push(m);
    }
    let unit = MorphismPresheaf::new(p.clone(), sheaf.clone(), maps)?;
    Ok(Sheafification {
        source: p.clone(),
        sheaf,
        unit,
        charts,
    })
}

fn prefix(dims: &[usize]) -> Vec<usize> {
    let mut off = Vec::with_capacity(dims.len() + 1);
    let mut acc = 0;
    for &d in dims {
        off.push(acc);
        acc += d;
    }
    off.push(acc);
    off
}

/// The induced morphism between sheafifications: a compatible family maps
/// pointwise through the stalk maps of `phi`.
pub fn sheafify_morphism(
    phi: &MorphismPresheaf,
    sf_src: &Sheafification,
    sf_tgt: &Sheafification,
) -> Result<MorphismPresheaf> {
    if phi.source() != sf_src.source() || phi.target() != sf_tgt.source() {
        return Err(Error::Invalid(
            "morphism ends do not match the given sheafifications".into(),
        ));
    }
    let space = phi.source().space();
    let field = phi.source().field();
    let mut maps = Vec::with_capacity(space.n_opens());
    for u in space.opens() {
        let n_comps = space.n_components(u);
        let src_dims: Vec<usize> = (0..n_comps)
            .map(|c| sf_src.chart(u, c).basis.dim())
            .collect();
        let tgt_dims: Vec<usize> = (0..n_comps)
            .map(|c| sf_tgt.chart(u, c).basis.dim())
            .collect();
        let (src_off, tgt_off) = (prefix(&src_dims), prefix(&tgt_dims));
        let mut m = Mat::zero(field, sf_tgt.sheaf().dim(u), sf_src.sheaf().dim(u));
        for c in 0..n_comps {
            let src = sf_src.chart(u, c);
            let tgt = sf_tgt.chart(u, c);
            let total_t = *tgt.offsets.last().expect("offsets nonempty");
            let mut rows: Vec<Vec<crate::scalar::Scalar>> = Vec::new();
            for fam in src.basis.basis().row_vecs() {
                let mut row = vec![field.zero(); total_t];
                for (i, &x) in src.points.iter().enumerate() {
                    let block = &fam[src.offsets[i]..src.offsets[i + 1]];
                    let image = phi.apply(space.min_open(x), block)?;
                    for (k, val) in image.into_iter().enumerate() {
                        row[tgt.offsets[i] + k] = val;
                    }
                }
                rows.push(row);
            }
            let coords = if rows.is_empty() {
                Mat::zero(field, 0, tgt.basis.dim())
            } else {
                tgt.basis.coordinates_of_rows(&Mat::from_rows(field, rows)?)?
            };
            for r in 0..tgt.basis.dim() {
                for cc in 0..src.basis.dim() {
                    m.set(tgt_off[c] + r, src_off[c] + cc, coords.at(cc, r).clone());
                }
            }
        }
        maps.push(m);
    }
    MorphismPresheaf::new(sf_src.sheaf().clone(), sf_tgt.sheaf().clone(), maps)
}

/// The direct product `p × q` with its two projections. When both factors
/// carry component structure the product does too (blocks interleaved
/// component-major); otherwise the product is a plain presheaf laid out as
/// `[p-part, q-part]`.
pub fn product_presheaf(
    p: &ModulePresheaf,
    q: &ModulePresheaf,
) -> Result<(ModulePresheaf, MorphismPresheaf, MorphismPresheaf)> {
    p.same_base(q)?;
    let space = p.space();
    let field = p.field();
    if p.is_equivariant() && q.is_equivariant() {
        let comp_dims: Vec<Vec<usize>> = space
            .opens()
            .map(|u| {
                p.comp_dims(u)
                    .expect("equivariant")
                    .iter()
                    .zip(q.comp_dims(u).expect("equivariant"))
                    .map(|(a, b)| a + b)
                    .collect()
            })
            .collect();
        let mut restrictions = HashMap::new();
        for (u, v) in space.strict_inclusions() {
            let refine = space.component_refinement(u, v)?;
            let dims_u = &comp_dims[u.0];
            let dims_v = &comp_dims[v.0];
            let (ou, ov) = (prefix(dims_u), prefix(dims_v));
            let mut m = Mat::zero(field, ov[dims_v.len()], ou[dims_u.len()]);
            for (d, &c) in refine.iter().enumerate() {
                let bp = p.restriction_block(u, c, v, d)?;
                let bq = q.restriction_block(u, c, v, d)?;
                let block = bp.direct_sum(&bq);
                for r in 0..block.rows() {
                    for cc in 0..block.cols() {
                        m.set(ov[d] + r, ou[c] + cc, block.at(r, cc).clone());
                    }
                }
            }
            restrictions.insert((u.0, v.0), m);
        }
        let prod = ModulePresheaf::from_components(p.structure().clone(), comp_dims, restrictions)?;
        let mut proj_p = Vec::with_capacity(space.n_opens());
        let mut proj_q = Vec::with_capacity(space.n_opens());
        for u in space.opens() {
            let po = p.comp_offsets(u)?;
            let qo = q.comp_offsets(u)?;
            let to = prod.comp_offsets(u)?;
            let mut mp = Mat::zero(field, p.dim(u), prod.dim(u));
            let mut mq = Mat::zero(field, q.dim(u), prod.dim(u));
            for c in 0..po.len() - 1 {
                for i in 0..po[c + 1] - po[c] {
                    mp.set(po[c] + i, to[c] + i, field.one());
                }
                for i in 0..qo[c + 1] - qo[c] {
                    mq.set(qo[c] + i, to[c] + (po[c + 1] - po[c]) + i, field.one());
                }
            }
            proj_p.push(mp);
            proj_q.push(mq);
        }
        let pr1 = MorphismPresheaf::new(prod.clone(), p.clone(), proj_p)?;
        let pr2 = MorphismPresheaf::new(prod.clone(), q.clone(), proj_q)?;
        Ok((prod, pr1, pr2))
    } else {
        let dims: Vec<usize> = space.opens().map(|u| p.dim(u) + q.dim(u)).collect();
        let mut restrictions = HashMap::new();
        for (u, v) in space.strict_inclusions() {
            let m = p.restriction(u, v)?.direct_sum(&q.restriction(u, v)?);
            restrictions.insert((u.0, v.0), m);
        }
        let prod = ModulePresheaf::plain(p.structure().clone(), dims, restrictions)?;
        let mut proj_p = Vec::with_capacity(space.n_opens());
        let mut proj_q = Vec::with_capacity(space.n_opens());
        for u in space.opens() {
            let mut mp = Mat::zero(field, p.dim(u), prod.dim(u));
            let mut mq = Mat::zero(field, q.dim(u), prod.dim(u));
            for i in 0..p.dim(u) {
                mp.set(i, i, field.one());
            }
            for i in 0..q.dim(u) {
                mq.set(i, p.dim(u) + i, field.one());
            }
            proj_p.push(mp);
            proj_q.push(mq);
        }
        let pr1 = MorphismPresheaf::new(prod.clone(), p.clone(), proj_p)?;
        let pr2 = MorphismPresheaf::new(prod.clone(), q.clone(), proj_q)?;
        Ok((prod, pr1, pr2))
    }
}

/// Checks that sheafification commutes with finite products: the canonical
/// map `S(p × q) -> S(p) × S(q)` induced by the sheafified projections is
/// an isomorphism at every open.
pub fn verify_product_lemma(p: &ModulePresheaf, q: &ModulePresheaf) -> Result<bool> {
    let (prod, pr1, pr2) = product_presheaf(p, q)?;
    let sf_prod = sheafify(&prod)?;
    let sf_p = sheafify(p)?;
    let sf_q = sheafify(q)?;
    let s1 = sheafify_morphism(&pr1, &sf_prod, &sf_p)?;
    let s2 = sheafify_morphism(&pr2, &sf_prod, &sf_q)?;
    let space = p.space();
    for u in space.opens() {
        let m1 = s1.map(u);
        let m2 = s2.map(u);
        let stacked = m1.vstack(m2)?;
        let n = sf_prod.sheaf().dim(u);
        if sf_p.sheaf().dim(u) + sf_q.sheaf().dim(u) != n || stacked.rank() != n {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The stalk of a presheaf at a point: its sections over the minimal open.
pub fn stalk_dim(p: &ModulePresheaf, x: usize) -> usize {
    p.dim(p.space().min_open(x))
}
