//! Bilinear pairings of sheaves of modules into the structure sheaf:
//! evaluation, orthogonal submodules, left/right kernels, the duality
//! morphisms into the dual module, pairings induced on quotients, and the
//! sheafification of presheaf-level bilinear data.
//!
//! A pairing `[F, E; A]` of complete equivariant sheaves is stored by its
//! stalk matrices: one `dim F(U_x) x dim E(U_x)` matrix per point, with the
//! value of the pairing germwise, `(t·s)(x) = t(x)ᵀ M_x s(x)`. Restriction
//! compatibility, `ρᵀ M_y ρ' = M_x` along specializations `y ∈ U_x`, makes
//! the A(U)-valued evaluation independent of representative points.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::presheaf::{
    is_complete, quotient_presheaf, ModulePresheaf, MorphismPresheaf, SubmodulePresheaf,
};
use crate::scalar::Scalar;
use crate::sheaf::{sheafify, sheafify_morphism, FamilyChart, Sheafification};
use crate::subspace::Subspace;
use crate::topo::OpenSet;

/// A pairing `[F, E; A]` of two complete equivariant sheaves.
#[derive(Clone, Debug)]
pub struct Pairing {
    f: ModulePresheaf,
    e: ModulePresheaf,
    /// stalk matrices: `point_mats[x]` has shape dim F(U_x) x dim E(U_x)
    point_mats: Vec<Mat>,
}

impl Pairing {
    pub fn new(f: ModulePresheaf, e: ModulePresheaf, point_mats: Vec<Mat>) -> Result<Pairing> {
        f.same_base(&e)?;
        if !f.is_equivariant() || !e.is_equivariant() {
            return Err(Error::Invalid("pairing sides must carry module structure".into()));
        }
        if !is_complete(&f)?.is_complete() || !is_complete(&e)?.is_complete() {
            return Err(Error::Invalid("pairing sides must be complete".into()));
        }
        let space = f.space();
        if point_mats.len() != space.n_points() {
            return Err(Error::Dimension("one stalk matrix per point required".into()));
        }
        for x in 0..space.n_points() {
            let ux = space.min_open(x);
            let m = &point_mats[x];
            if m.rows() != f.dim(ux) || m.cols() != e.dim(ux) {
                return Err(Error::Dimension(format!(
                    "stalk matrix at point {x} has shape {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    f.dim(ux),
                    e.dim(ux)
                )));
            }
        }
        if let Some((x, y)) = Pairing::compatibility_failure(&f, &e, &point_mats)? {
            return Err(Error::Invalid(format!(
                "stalk matrices are incompatible along the specialization {y} ∈ U_{x}"
            )));
        }
        Ok(Pairing { f, e, point_mats })
    }

    /// The first specialization pair `(x, y)` with `y ∈ U_x` violating
    /// `ρᵀ M_y ρ' = M_x`, if any.
    pub fn compatibility_failure(
        f: &ModulePresheaf,
        e: &ModulePresheaf,
        point_mats: &[Mat],
    ) -> Result<Option<(usize, usize)>> {
        let space = f.space();
        for x in 0..space.n_points() {
            let ux = space.min_open(x);
            for y in space.points(ux) {
                if y == x {
                    continue;
                }
                let uy = space.min_open(y);
                let rho_f = f.restriction(ux, uy)?;
                let rho_e = e.restriction(ux, uy)?;
                let pulled = rho_f.transpose().mul(&point_mats[y].mul(&rho_e)?)?;
                if pulled != point_mats[x] {
                    return Ok(Some((x, y)));
                }
            }
        }
        Ok(None)
    }

    pub fn f(&self) -> &ModulePresheaf {
        &self.f
    }

    pub fn e(&self) -> &ModulePresheaf {
        &self.e
    }

    pub fn point_mat(&self, x: usize) -> &Mat {
        &self.point_mats[x]
    }

    /// Least point of component `c` of `u`, used as evaluation representative.
    fn rep(&self, u: OpenSet, c: usize) -> Result<usize> {
        let comps = self.f.space().components(u)?.components;
        let bits = comps[c];
        Ok((0..self.f.space().n_points())
            .find(|x| bits & (1 << x) != 0)
            .expect("components are nonempty"))
    }

    /// Evaluates `t · s` over `u`: one scalar per component of `u`.
    pub fn evaluate(&self, u: OpenSet, t: &[Scalar], s: &[Scalar]) -> Result<Vec<Scalar>> {
        let space = self.f.space();
        let n_comps = space.n_components(u);
        let mut out = Vec::with_capacity(n_comps);
        for c in 0..n_comps {
            let x = self.rep(u, c)?;
            let ux = space.min_open(x);
            let t_loc = self.f.restriction(u, ux)?.mul_vec(t)?;
            let s_loc = self.e.restriction(u, ux)?.mul_vec(s)?;
            let m_s = self.point_mats[x].mul_vec(&s_loc)?;
            let mut acc = self.f.field().zero();
            for (a, b) in t_loc.iter().zip(&m_s) {
                acc = acc.add_ref(&a.mul_ref(b));
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// The submodule of `F` orthogonal to `e0 ⊆ E`: sections of `F` whose
    /// germs annihilate every stalk of `e0`.
    pub fn orthogonal_in_f(&self, e0: &SubmodulePresheaf) -> Result<SubmodulePresheaf> {
        if e0.ambient() != &self.e {
            return Err(Error::AmbientMismatch);
        }
        self.orthogonal(&self.f, |x| {
            let b = e0.part(self.space_min(x), 0).basis().clone();
            b.mul(&self.point_mats[x].transpose())
        })
    }

    /// The submodule of `E` orthogonal to `f0 ⊆ F`.
    pub fn orthogonal_in_e(&self, f0: &SubmodulePresheaf) -> Result<SubmodulePresheaf> {
        if f0.ambient() != &self.f {
            return Err(Error::AmbientMismatch);
        }
        self.orthogonal(&self.e, |x| {
            let b = f0.part(self.space_min(x), 0).basis().clone();
            b.mul(&self.point_mats[x])
        })
    }

    fn space_min(&self, x: usize) -> OpenSet {
        self.f.space().min_open(x)
    }

    /// Shared construction: part(u, c) = ∩_{x ∈ c} ker(annihilator(x) ∘ R_x),
    /// where `annihilator(x)` sends a germ to its pairings with a basis of
    /// the opposing stalk data.
    fn orthogonal(
        &self,
        side: &ModulePresheaf,
        annihilator: impl Fn(usize) -> Result<Mat>,
    ) -> Result<SubmodulePresheaf> {
        let space = side.space();
        let field = side.field();
        let mut parts = Vec::with_capacity(space.n_opens());
        for u in space.opens() {
            let comps = space.components(u)?.components;
            let mut row = Vec::with_capacity(comps.len());
            for (c, &cbits) in comps.iter().enumerate() {
                let dims = side.comp_dims(u)?;
                let mut sub = Subspace::full(field, dims[c]);
                for x in (0..space.n_points()).filter(|x| cbits & (1 << x) != 0) {
                    let ux = space.min_open(x);
                    let r = side.restriction_block(u, c, ux, 0)?;
                    let cond = annihilator(x)?.mul(&r)?;
                    sub = sub.intersect(&Subspace::from_rows(&cond.kernel_basis()))?;
                }
                row.push(sub);
            }
            parts.push(row);
        }
        SubmodulePresheaf::from_parts(side.clone(), parts)
    }

    /// `E⊥ ⊆ F`: the left kernel of the pairing.
    pub fn left_kernel(&self) -> Result<SubmodulePresheaf> {
        self.orthogonal_in_f(&SubmodulePresheaf::full(&self.e))
    }

    /// `F⊥ ⊆ E`: the right kernel of the pairing.
    pub fn right_kernel(&self) -> Result<SubmodulePresheaf> {
        self.orthogonal_in_e(&SubmodulePresheaf::full(&self.f))
    }

    pub fn is_degenerate(&self) -> Result<bool> {
        Ok(!self.left_kernel()?.is_zero() || !self.right_kernel()?.is_zero())
    }

    /// The duality morphism `E -> F*`, `s ↦ (t ↦ t·s)`. Its kernel is the
    /// right kernel `F⊥`.
    pub fn gamma(&self) -> Result<(DualModule, MorphismPresheaf)> {
        let dual = hom_dual(&self.f)?;
        let phi = self.duality_map(&self.e, &self.f, &dual, false)?;
        Ok((dual, phi))
    }

    /// The duality morphism `F -> E*`, `t ↦ (s ↦ t·s)`. Its kernel is the
    /// left kernel `E⊥`.
    pub fn delta(&self) -> Result<(DualModule, MorphismPresheaf)> {
        let dual = hom_dual(&self.e)?;
        let phi = self.duality_map(&self.f, &self.e, &dual, true)?;
        Ok((dual, phi))
    }

    /// Assembles `src -> (opp)*` from the stalk matrices. With
    /// `transpose = false` a germ `s` maps to the functional `M_x s`; with
    /// `transpose = true`, to `M_xᵀ t`.
    fn duality_map(
        &self,
        src: &ModulePresheaf,
        opp: &ModulePresheaf,
        dual: &DualModule,
        transpose: bool,
    ) -> Result<MorphismPresheaf> {
        let space = src.space();
        let field = src.field();
        let mut maps = Vec::with_capacity(space.n_opens());
        for u in space.opens() {
            let comps = space.components(u)?.components;
            let src_off = src.comp_offsets(u)?;
            let dual_off = dual.module.comp_offsets(u)?;
            let mut m = Mat::zero(field, dual.module.dim(u), src.dim(u));
            for (c, _) in comps.iter().enumerate() {
                let chart = dual.chart(u, c);
                let total = *chart.offsets.last().expect("offsets nonempty");
                let width = src_off[c + 1] - src_off[c];
                // each source basis direction yields one functional family
                let mut rows: Vec<Vec<Scalar>> = Vec::new();
                for i in 0..width {
                    let mut basis_vec = vec![field.zero(); width];
                    basis_vec[i] = field.one();
                    let mut flat = vec![field.zero(); total];
                    for (k, &x) in chart.points.iter().enumerate() {
                        let ux = space.min_open(x);
                        let r = src.restriction_block(u, c, ux, 0)?;
                        let germ = r.mul_vec(&basis_vec)?;
                        let functional = if transpose {
                            self.point_mats[x].transpose().mul_vec(&germ)?
                        } else {
                            self.point_mats[x].mul_vec(&germ)?
                        };
                        debug_assert_eq!(functional.len(), opp.dim(ux));
                        flat[chart.offsets[k]..chart.offsets[k + 1]]
                            .clone_from_slice(&functional);
                    }
                    rows.push(flat);
                }
                let coords = if rows.is_empty() {
                    Mat::zero(field, 0, chart.basis.dim())
                } else {
                    chart
                        .basis
                        .coordinates_of_rows(&Mat::from_rows(field, rows)?)?
                };
                for r in 0..chart.basis.dim() {
                    for cc in 0..width {
                        m.set(dual_off[c] + r, src_off[c] + cc, coords.at(cc, r).clone());
                    }
                }
            }
            maps.push(m);
        }
        MorphismPresheaf::new(src.clone(), dual.module.clone(), maps)
    }
}

/// The dual module `Hom(P, A)` of an equivariant presheaf, computed from
/// stalk data: a section over a component is a compatible family of
/// functionals `(φ_x ∈ P(U_x)*)` with `φ_y ∘ ρ_{xy} = φ_x` whenever
/// `y ∈ U_x`. The dual is always a complete sheaf.
#[derive(Clone, Debug)]
pub struct DualModule {
    source: ModulePresheaf,
    module: ModulePresheaf,
    charts: Vec<Vec<FamilyChart>>,
}

impl DualModule {
    pub fn source(&self) -> &ModulePresheaf {
        &self.source
    }

    pub fn module(&self) -> &ModulePresheaf {
        &self.module
    }

    pub fn chart(&self, u: OpenSet, c: usize) -> &FamilyChart {
        &self.charts[u.0][c]
    }

    /// The evaluation pairing `[P*, P; A]`, `ϑ(φ, s) = φ(s)`.
    pub fn evaluation_pairing(&self) -> Result<Pairing> {
        let space = self.source.space();
        let mut mats = Vec::with_capacity(space.n_points());
        for x in 0..space.n_points() {
            let ux = space.min_open(x);
            mats.push(self.chart(ux, 0).point_block(x)?);
        }
        Pairing::new(self.module.clone(), self.source.clone(), mats)
    }
}

fn dual_chart(p: &ModulePresheaf, cbits: u32) -> Result<FamilyChart> {
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
    // for y ∈ U_x: the functional at x is the pullback of the one at y
    let mut rows: Vec<Vec<Scalar>> = Vec::new();
    for (i, &x) in points.iter().enumerate() {
        let ux = space.min_open(x);
        for (j, &y) in points.iter().enumerate() {
            if i == j || !space.points(ux).any(|z| z == y) {
                continue;
            }
            let rho = p.restriction(ux, space.min_open(y))?;
            // φ_x - ρᵀ φ_y = 0, one row per coordinate of P(U_x)*
            for r in 0..rho.cols() {
                let mut row = vec![field.zero(); total];
                row[offsets[i] + r] = field.one();
                for cc in 0..rho.rows() {
                    row[offsets[j] + cc] =
                        row[offsets[j] + cc].sub_ref(rho.at(cc, r));
                }
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

/// Computes the dual module of an equivariant presheaf.
pub fn hom_dual(p: &ModulePresheaf) -> Result<DualModule> {
    if !p.is_equivariant() {
        return Err(Error::Invalid("dual requires module structure".into()));
    }
    let space = p.space();
    let field = p.field();
    let mut charts: Vec<Vec<FamilyChart>> = Vec::with_capacity(space.n_opens());
    for u in space.opens() {
        let comps = space.components(u)?.components;
        charts.push(
            comps
                .iter()
                .map(|&c| dual_chart(p, c))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let comp_dims: Vec<Vec<usize>> = charts
        .iter()
        .map(|row| row.iter().map(|ch| ch.basis.dim()).collect())
        .collect();
    let mut restrictions = HashMap::new();
    for (u, v) in space.strict_inclusions() {
        let refine = space.component_refinement(u, v)?;
        let u_off = prefix(&comp_dims[u.0]);
        let v_off = prefix(&comp_dims[v.0]);
        let mut m = Mat::zero(
            field,
            comp_dims[v.0].iter().sum(),
            comp_dims[u.0].iter().sum(),
        );
        for (d, &c) in refine.iter().enumerate() {
            let src = &charts[u.0][c];
            let dst = &charts[v.0][d];
            let total_d = *dst.offsets.last().expect("offsets nonempty");
            let mut rows: Vec<Vec<Scalar>> = Vec::new();
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
                dst.basis.coordinates_of_rows(&Mat::from_rows(field, rows)?)?
            };
            for r in 0..dst.basis.dim() {
                for cc in 0..src.basis.dim() {
                    m.set(v_off[d] + r, u_off[c] + cc, coords.at(cc, r).clone());
                }
            }
        }
        restrictions.insert((u.0, v.0), m);
    }
    let module = ModulePresheaf::from_components(p.structure().clone(), comp_dims, restrictions)?;
    Ok(DualModule {
        source: p.clone(),
        module,
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

/// Given an `A(u)`-basis of a free module's sections over `u` (germ matrices
/// invertible at every point), returns the dual basis in `P*(u)`:
/// functional sections with `φ_i(s_j) = δ_ij ∈ A(u)`.
pub fn dual_basis(
    dual: &DualModule,
    u: OpenSet,
    sections: &[Vec<Scalar>],
) -> Result<Vec<Vec<Scalar>>> {
    let p = dual.source();
    let space = p.space();
    let field = p.field();
    let comps = space.components(u)?.components;
    let p_off = p.comp_offsets(u)?;
    let d_off = dual.module.comp_offsets(u)?;
    let n = sections.len();
    let mut out = vec![vec![field.zero(); dual.module.dim(u)]; n];
    for (c, _) in comps.iter().enumerate() {
        if p_off[c + 1] - p_off[c] != n {
            return Err(Error::Dimension(format!(
                "{} sections cannot form a basis on component {c}",
                n
            )));
        }
        let chart = dual.chart(u, c);
        let total = *chart.offsets.last().expect("offsets nonempty");
        // germ matrix at each point: columns are the germs of the sections
        let mut inverses = Vec::with_capacity(chart.points.len());
        for &x in &chart.points {
            let ux = space.min_open(x);
            let r = p.restriction_block(u, c, ux, 0)?;
            let mut germs = Mat::zero(field, p.dim(ux), n);
            for (j, s) in sections.iter().enumerate() {
                let block = &s[p_off[c]..p_off[c + 1]];
                let germ = r.mul_vec(block)?;
                for (i, v) in germ.into_iter().enumerate() {
                    germs.set(i, j, v);
                }
            }
            let inv = germs
                .inverse()
                .ok_or(Error::SingularBasis { open: u.0, component: c })?;
            inverses.push(inv);
        }
        for i in 0..n {
            // the i-th dual functional: row i of each germ inverse
            let mut flat = vec![field.zero(); total];
            for (k, inv) in inverses.iter().enumerate() {
                let row = inv.row(i);
                flat[chart.offsets[k]..chart.offsets[k + 1]].clone_from_slice(row);
            }
            let coords = chart.basis.coordinates(&flat)?;
            out[i][d_off[c]..d_off[c] + coords.len()].clone_from_slice(&coords);
        }
    }
    Ok(out)
}

/// Presheaf-level bilinear data: per-open, per-component matrices pairing
/// two equivariant presheaves into the structure sheaf, compatible with
/// restrictions.
#[derive(Clone, Debug)]
pub struct PresheafBilinear {
    pub f: ModulePresheaf,
    pub e: ModulePresheaf,
    /// mats[u][c]: shape dim F(u, c) x dim E(u, c)
    pub mats: Vec<Vec<Mat>>,
}

impl PresheafBilinear {
    pub fn new(f: ModulePresheaf, e: ModulePresheaf, mats: Vec<Vec<Mat>>) -> Result<PresheafBilinear> {
        f.same_base(&e)?;
        if !f.is_equivariant() || !e.is_equivariant() {
            return Err(Error::Invalid("bilinear data requires module structure".into()));
        }
        let b = PresheafBilinear { f, e, mats };
        if let Some((u, v)) = b.compatibility_failure()? {
            return Err(Error::Invalid(format!(
                "bilinear data incompatible with restrictions at opens ({}, {})",
                u.0, v.0
            )));
        }
        Ok(b)
    }

    /// First pair of opens where `Lᵀ M_V R ≠ M_U` for some component.
    pub fn compatibility_failure(&self) -> Result<Option<(OpenSet, OpenSet)>> {
        let space = self.f.space();
        for u in space.opens() {
            let n_comps = space.n_components(u);
            if self.mats[u.0].len() != n_comps {
                return Err(Error::Dimension("one matrix per component required".into()));
            }
            let fd = self.f.comp_dims(u)?;
            let ed = self.e.comp_dims(u)?;
            for c in 0..n_comps {
                let m = &self.mats[u.0][c];
                if m.rows() != fd[c] || m.cols() != ed[c] {
                    return Err(Error::Dimension(format!(
                        "bilinear matrix at open {} component {c} has wrong shape",
                        u.0
                    )));
                }
            }
        }
        for (u, v) in space.strict_inclusions() {
            let refine = space.component_refinement(u, v)?;
            for (d, &c) in refine.iter().enumerate() {
                let l = self.f.restriction_block(u, c, v, d)?;
                let r = self.e.restriction_block(u, c, v, d)?;
                let pulled = l.transpose().mul(&self.mats[v.0][d].mul(&r)?)?;
                if pulled != self.mats[u.0][c] {
                    return Ok(Some((u, v)));
                }
            }
        }
        Ok(None)
    }

    /// Evaluates the presheaf-level pairing over `u`.
    pub fn evaluate(&self, u: OpenSet, t: &[Scalar], s: &[Scalar]) -> Result<Vec<Scalar>> {
        let space = self.f.space();
        let fo = self.f.comp_offsets(u)?;
        let eo = self.e.comp_offsets(u)?;
        let mut out = Vec::new();
        for c in 0..space.n_components(u) {
            let tc = &t[fo[c]..fo[c + 1]];
            let sc = &s[eo[c]..eo[c + 1]];
            let m_s = self.mats[u.0][c].mul_vec(sc)?;
            let mut acc = self.f.field().zero();
            for (a, b) in tc.iter().zip(&m_s) {
                acc = acc.add_ref(&a.mul_ref(b));
            }
            out.push(acc);
        }
        Ok(out)
    }
}

/// The pairing of sheafifications induced by presheaf-level bilinear data:
/// the stalk matrix at `x` pairs compatible families through the germ
/// matrix at `U_x`.
pub fn sheafify_pairing(
    b: &PresheafBilinear,
) -> Result<(Sheafification, Sheafification, Pairing)> {
    let space = b.f.space();
    let sf_f = sheafify(&b.f)?;
    let sf_e = sheafify(&b.e)?;
    let mut mats = Vec::with_capacity(space.n_points());
    for x in 0..space.n_points() {
        let ux = space.min_open(x);
        // germ projections of the family bases onto the x-blocks
        let pf = sf_f.chart(ux, 0).point_block(x)?;
        let pe = sf_e.chart(ux, 0).point_block(x)?;
        let m = pf.mul(&b.mats[ux.0][0].mul(&pe.transpose())?)?;
        mats.push(m);
    }
    let pairing = Pairing::new(sf_f.sheaf().clone(), sf_e.sheaf().clone(), mats)?;
    Ok((sf_f, sf_e, pairing))
}

/// Verdict of the orthogonal-presheaf audit: the per-open orthogonal
/// `E₀(U)⊥ = {t ∈ F(U) : t·s = 0 ∀ s ∈ E₀(U)}` should form a complete
/// presheaf agreeing with the germwise orthogonal submodule.
#[derive(Clone, Debug, PartialEq)]
pub enum OrthogonalVerdict {
    Holds,
    /// The per-open orthogonal family is not closed under restriction:
    /// at `(u, v)` some orthogonal section escapes.
    NotAPresheaf { u: OpenSet, v: OpenSet },
    /// The per-open orthogonal disagrees with the germwise orthogonal.
    Differs { open: OpenSet },
    /// The per-open orthogonal presheaf is not complete.
    Incomplete { open: OpenSet },
}

/// Per-open orthogonal of `e0` inside `F`, as one subspace per open per
/// component: vanishing against sections of `e0` over `u` only.
fn per_open_orthogonal(pairing: &Pairing, e0: &SubmodulePresheaf) -> Result<Vec<Vec<Subspace>>> {
    let space = pairing.f.space();
    let field = pairing.f.field();
    let mut parts = Vec::with_capacity(space.n_opens());
    for u in space.opens() {
        let n_comps = space.n_components(u);
        let fd = pairing.f.comp_dims(u)?;
        let mut row = Vec::with_capacity(n_comps);
        for c in 0..n_comps {
            // conditions: for the representative point x of c, t ⊥ every
            // basis section of e0 over (u, c); one scalar per point of c
            let comps = space.components(u)?.components;
            let cbits = comps[c];
            let mut sub = Subspace::full(field, fd[c]);
            for x in (0..space.n_points()).filter(|x| cbits & (1 << x) != 0) {
                let ux = space.min_open(x);
                let r_f = pairing.f.restriction_block(u, c, ux, 0)?;
                let r_e = pairing.e.restriction_block(u, c, ux, 0)?;
                // germs over u of e0(u, c), paired at x
                let germs = e0.part(u, c).basis().mul(&r_e.transpose())?;
                let cond = germs.mul(&pairing.point_mats[x].transpose())?.mul(&r_f)?;
                sub = sub.intersect(&Subspace::from_rows(&cond.kernel_basis()))?;
            }
            row.push(sub);
        }
        parts.push(row);
    }
    Ok(parts)
}

/// Audits the per-open orthogonal of `e0`: restriction closure, equality
/// with the germwise orthogonal submodule, and completeness.
pub fn verify_orthogonal_completeness(
    pairing: &Pairing,
    e0: &SubmodulePresheaf,
) -> Result<OrthogonalVerdict> {
    let space = pairing.f.space();
    let parts = per_open_orthogonal(pairing, e0)?;
    let flat = |u: OpenSet| -> Subspace {
        let mut basis: Option<Mat> = None;
        for s in &parts[u.0] {
            let b = s.basis().clone();
            basis = Some(match basis {
                None => b,
                Some(acc) => acc.direct_sum(&b),
            });
        }
        match basis {
            None => Subspace::zero(pairing.f.field(), 0),
            Some(b) => Subspace::from_rows(&b),
        }
    };
    for (u, v) in space.strict_inclusions() {
        let rho = pairing.f.restriction(u, v)?;
        let image = Subspace::from_rows(&flat(u).basis().mul(&rho.transpose())?);
        if !flat(v).contains(&image) {
            return Ok(OrthogonalVerdict::NotAPresheaf { u, v });
        }
    }
    let germwise = pairing.orthogonal_in_f(e0)?;
    for u in space.opens() {
        for c in 0..space.n_components(u) {
            if &parts[u.0][c] != germwise.part(u, c) {
                return Ok(OrthogonalVerdict::Differs { open: u });
            }
        }
    }
    // the family agrees with a germwise submodule of a complete sheaf, so
    // completeness is checked on its section presheaf
    let sub = SubmodulePresheaf::from_parts(pairing.f.clone(), parts)?;
    match crate::presheaf::is_complete_sub(&sub)? {
        crate::presheaf::Completeness::Complete => Ok(OrthogonalVerdict::Holds),
        crate::presheaf::Completeness::SeparationFails { open, .. }
        | crate::presheaf::Completeness::GluingFails { open, .. } => {
            Ok(OrthogonalVerdict::Incomplete { open })
        }
    }
}

/// Report of the two duality injections available when the left kernel
/// vanishes: `E/F₀⊥ -> F₀*` and `E₀⊥ -> (E/E₀)*`.
#[derive(Clone, Debug)]
pub struct DualityInjections {
    /// `S(E/F₀⊥) -> F₀*`
    pub quotient_to_dual: MorphismPresheaf,
    /// `S(E₀⊥ as presheaf) -> (S(E/E₀))*`
    pub orthogonal_to_dual: MorphismPresheaf,
    pub quotient_injective: bool,
    pub orthogonal_injective: bool,
}

/// Builds the two natural morphisms of the duality theorem for a pairing
/// with zero left kernel, and checks injectivity at every open. `f0` must
/// be a submodule of `F`, `e0` of `E`.
pub fn duality_injections(
    pairing: &Pairing,
    f0: &SubmodulePresheaf,
    e0: &SubmodulePresheaf,
) -> Result<DualityInjections> {
    if !pairing.left_kernel()?.is_zero() {
        return Err(Error::Invalid("left kernel must vanish".into()));
    }
    let space = pairing.f.space();
    let field = pairing.f.field();

    // --- first map: E/F₀⊥ -> F₀*, s + F₀⊥ ↦ (t₀ ↦ t₀·s) ---
    let f0_perp = pairing.orthogonal_in_e(f0)?;
    let (q_pre, q_surj) = quotient_presheaf(&pairing.e, &f0_perp)?;
    let (f0_mod, _) = f0.to_presheaf()?;
    let f0_dual = hom_dual(&f0_mod)?;
    // per-open map on the quotient presheaf, then sheafified
    let mut maps = Vec::with_capacity(space.n_opens());
    for u in space.opens() {
        let comps = space.components(u)?.components;
        let q_off = q_pre.comp_offsets(u)?;
        let d_off = f0_dual.module().comp_offsets(u)?;
        let e_off = pairing.e.comp_offsets(u)?;
        let mut m = Mat::zero(field, f0_dual.module().dim(u), q_pre.dim(u));
        for (c, _) in comps.iter().enumerate() {
            let chart = f0_dual.chart(u, c);
            let total = *chart.offsets.last().expect("offsets nonempty");
            let width_e = e_off[c + 1] - e_off[c];
            // on E-coordinates first; must kill F₀⊥ before factoring
            let mut rows: Vec<Vec<Scalar>> = Vec::new();
            for i in 0..width_e {
                let mut basis_vec = vec![field.zero(); width_e];
                basis_vec[i] = field.one();
                let mut flat = vec![field.zero(); total];
                for (k, &x) in chart.points.iter().enumerate() {
                    let ux = space.min_open(x);
                    let r_e = pairing.e.restriction_block(u, c, ux, 0)?;
                    let germ = r_e.mul_vec(&basis_vec)?;
                    // functional on F₀(U_x): t₀ ↦ t₀ᵀ M_x s
                    let on_f = pairing.point_mats[x].mul_vec(&germ)?;
                    let b_f0 = f0.part(ux, 0).basis();
                    let restricted = b_f0.mul_vec(&on_f)?;
                    flat[chart.offsets[k]..chart.offsets[k + 1]]
                        .clone_from_slice(&restricted);
                }
                rows.push(flat);
            }
            let coords = if rows.is_empty() {
                Mat::zero(field, 0, chart.basis.dim())
            } else {
                chart.basis.coordinates_of_rows(&Mat::from_rows(field, rows)?)?
            };
            let on_e = coords.transpose(); // dual-dim x E-dim block
            // well-definedness: the block must vanish on F₀⊥(u, c)
            let perp_basis = f0_perp.part(u, c).basis();
            if !on_e.mul(&perp_basis.transpose())?.is_zero() {
                return Err(Error::Invalid(format!(
                    "duality map not constant on cosets at open {}",
                    u.0
                )));
            }
            // factor through the quotient coordinates
            let q_block = q_surj
                .map(u)
                .submatrix(q_off[c]..q_off[c + 1], e_off[c]..e_off[c + 1]);
            let r_inv = q_block.right_inverse()?;
            let factored = on_e.mul(&r_inv)?;
            for r in 0..factored.rows() {
                for cc in 0..factored.cols() {
                    m.set(d_off[c] + r, q_off[c] + cc, factored.at(r, cc).clone());
                }
            }
        }
        maps.push(m);
    }
    let pre_map = MorphismPresheaf::new(q_pre.clone(), f0_dual.module().clone(), maps)?;
    let sf_q = sheafify(&q_pre)?;
    let sf_dual = sheafify(f0_dual.module())?;
    let lifted = sheafify_morphism(&pre_map, &sf_q, &sf_dual)?;
    // identify S(F₀*) with F₀* through the invertible unit
    let mut final_maps = Vec::with_capacity(space.n_opens());
    for u in space.opens() {
        let unit_inv = sf_dual.unit().map(u).inverse().ok_or(Error::Inconsistent)?;
        final_maps.push(unit_inv.mul(lifted.map(u))?);
    }
    let quotient_to_dual =
        MorphismPresheaf::new(sf_q.sheaf().clone(), f0_dual.module().clone(), final_maps)?;
    let quotient_injective = space
        .opens()
        .all(|u| quotient_to_dual.map(u).rank() == sf_q.sheaf().dim(u));

    // --- second map: E₀⊥ -> (E/E₀)*, t ↦ (s + E₀ ↦ t·s) ---
    let e0_perp = pairing.orthogonal_in_f(e0)?;
    let (perp_mod, _) = e0_perp.to_presheaf()?;
    let (qe_pre, qe_surj) = quotient_presheaf(&pairing.e, e0)?;
    let sf_qe = sheafify(&qe_pre)?;
    let qe_dual = hom_dual(sf_qe.sheaf())?;
    let mut maps2 = Vec::with_capacity(space.n_opens());
    for u in space.opens() {
        let comps = space.components(u)?.components;
        let p_off = perp_mod.comp_offsets(u)?;
        let d_off = qe_dual.module().comp_offsets(u)?;
        let mut m = Mat::zero(field, qe_dual.module().dim(u), perp_mod.dim(u));
        for (c, _) in comps.iter().enumerate() {
            let chart = qe_dual.chart(u, c);
            let total = *chart.offsets.last().expect("offsets nonempty");
            let width = p_off[c + 1] - p_off[c];
            let b_perp = e0_perp.part(u, c).basis();
            let mut rows: Vec<Vec<Scalar>> = Vec::new();
            for i in 0..width {
                // the i-th basis section of E₀⊥(u, c), in F-coordinates
                let t_vec = b_perp.row(i).to_vec();
                let mut flat = vec![field.zero(); total];
                for (k, &x) in chart.points.iter().enumerate() {
                    let ux = space.min_open(x);
                    let r_f = pairing.f.restriction_block(u, c, ux, 0)?;
                    let germ = r_f.mul_vec(&t_vec)?;
                    // functional on E(U_x), vanishing on E₀(U_x)
                    let on_e = pairing.point_mats[x].transpose().mul_vec(&germ)?;
                    // express on the quotient stalk: precompose the section
                    // representative map S(E/E₀)(U_x) -> E(U_x)
                    let q_block = qe_surj.map(ux).clone();
                    let r_inv = q_block.right_inverse()?;
                    let unit_inv = sf_qe.unit().map(ux).inverse().ok_or(Error::Inconsistent)?;
                    let rep = r_inv.mul(&unit_inv)?;
                    let functional = rep.transpose().mul_vec(&on_e)?;
                    flat[chart.offsets[k]..chart.offsets[k + 1]]
                        .clone_from_slice(&functional);
                }
                rows.push(flat);
            }
            let coords = if rows.is_empty() {
                Mat::zero(field, 0, chart.basis.dim())
            } else {
                chart.basis.coordinates_of_rows(&Mat::from_rows(field, rows)?)?
            };
            for r in 0..chart.basis.dim() {
                for cc in 0..width {
                    m.set(d_off[c] + r, p_off[c] + cc, coords.at(cc, r).clone());
                }
            }
        }
        maps2.push(m);
    }
    let orthogonal_to_dual =
        MorphismPresheaf::new(perp_mod.clone(), qe_dual.module().clone(), maps2)?;
    let orthogonal_injective = space
        .opens()
        .all(|u| orthogonal_to_dual.map(u).rank() == perp_mod.dim(u));

    Ok(DualityInjections {
        quotient_to_dual,
        orthogonal_to_dual,
        quotient_injective,
        orthogonal_injective,
    })
}

/// The non-degenerate pairing induced on the kernel quotients:
/// `[S(F/E⊥), S(E/F⊥); A]` with stalk matrices transported through coset
/// representatives. Returns the two quotient sheafifications and the
/// induced pairing.
pub struct InducedPairing {
    pub qf: Sheafification,
    pub qe: Sheafification,
    pub pairing: Pairing,
}

pub fn induced_quotient_pairing(pairing: &Pairing) -> Result<InducedPairing> {
    let space = pairing.f.space();
    let left = pairing.left_kernel()?;
    let right = pairing.right_kernel()?;
    let (qf_pre, qf_surj) = quotient_presheaf(&pairing.f, &left)?;
    let (qe_pre, qe_surj) = quotient_presheaf(&pairing.e, &right)?;
    let qf = sheafify(&qf_pre)?;
    let qe = sheafify(&qe_pre)?;
    let mut mats = Vec::with_capacity(space.n_points());
    for x in 0..space.n_points() {
        let ux = space.min_open(x);
        // coset representatives: sheaf stalk -> presheaf quotient -> side
        let rep_f = qf_surj
            .map(ux)
            .right_inverse()?
            .mul(&qf.unit().map(ux).inverse().ok_or(Error::Inconsistent)?)?;
        let rep_e = qe_surj
            .map(ux)
            .right_inverse()?
            .mul(&qe.unit().map(ux).inverse().ok_or(Error::Inconsistent)?)?;
        let m = rep_f.transpose().mul(&pairing.point_mats[x].mul(&rep_e)?)?;
        mats.push(m);
    }
    let induced = Pairing::new(qf.sheaf().clone(), qe.sheaf().clone(), mats)?;
    Ok(InducedPairing {
        qf,
        qe,
        pairing: induced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presheaf::{MorphismVerdict, StructureSheaf};
    use crate::scalar::Field;
    use crate::topo::{discrete2, sierpinski, FiniteSpace};
    use std::sync::Arc;

    const Q: Field = Field::Rational;

    fn structure(space: FiniteSpace) -> StructureSheaf {
        StructureSheaf::new(Arc::new(space), Q)
    }

    fn wedge3() -> FiniteSpace {
        FiniteSpace::validate_topology(3, &[0b000, 0b010, 0b011, 0b110, 0b111]).unwrap()
    }

    /// [A, A; A] with multiplication as the pairing.
    fn mult_pairing(space: FiniteSpace) -> Pairing {
        let st = structure(space);
        let a = ModulePresheaf::free(st, 1);
        let mats = (0..a.space().n_points())
            .map(|x| Mat::identity(Q, a.dim(a.space().min_open(x))))
            .collect();
        Pairing::new(a.clone(), a, mats).unwrap()
    }

    /// Free rank 2 on the Sierpinski space paired by diag(1, 0) everywhere.
    fn degenerate_pairing() -> Pairing {
        let st = structure(sierpinski());
        let a = ModulePresheaf::free(st, 2);
        let m = Mat::from_i64(Q, &[&[1, 0], &[0, 0]]);
        Pairing::new(a.clone(), a, vec![m.clone(), m]).unwrap()
    }

    #[test]
    fn multiplication_pairing_is_non_degenerate() {
        let p = mult_pairing(wedge3());
        assert!(!p.is_degenerate().unwrap());
        assert!(p.left_kernel().unwrap().is_zero());
        assert!(p.right_kernel().unwrap().is_zero());
        // 3 · 5 = 15 on the whole space (one component)
        let u = OpenSet(4);
        let v = p
            .evaluate(u, &[Q.from_i64(3)], &[Q.from_i64(5)])
            .unwrap();
        assert_eq!(v, vec![Q.from_i64(15)]);
    }

    #[test]
    fn evaluation_commutes_with_restriction() {
        let p = degenerate_pairing();
        let space = sierpinski();
        let whole = space.whole_open();
        let t: Vec<Scalar> = [1, 2].iter().map(|&k| Q.from_i64(k)).collect();
        let s: Vec<Scalar> = [3, 4].iter().map(|&k| Q.from_i64(k)).collect();
        let at_whole = p.evaluate(whole, &t, &s).unwrap();
        let v = OpenSet(1);
        let tv = p.f().restriction(whole, v).unwrap().mul_vec(&t).unwrap();
        let sv = p.e().restriction(whole, v).unwrap().mul_vec(&s).unwrap();
        let at_v = p.evaluate(v, &tv, &sv).unwrap();
        // both opens are connected: one scalar each, and they agree
        assert_eq!(at_whole, at_v);
        assert_eq!(at_whole, vec![Q.from_i64(3)]);
    }

    #[test]
    fn incompatible_stalk_matrices_rejected() {
        let st = structure(sierpinski());
        let a = ModulePresheaf::free(st, 1);
        let mats = vec![Mat::from_i64(Q, &[&[1]]), Mat::from_i64(Q, &[&[2]])];
        assert!(
            Pairing::compatibility_failure(&a, &a, &mats)
                .unwrap()
                .is_some()
        );
        assert!(Pairing::new(a.clone(), a, mats).is_err());
    }

    #[test]
    fn kernels_of_rank_one_pairing() {
        let p = degenerate_pairing();
        assert!(p.is_degenerate().unwrap());
        let expect = SubmodulePresheaf::from_stalk_generators(
            p.f(),
            &[
                vec![vec![Q.zero(), Q.one()]],
                vec![vec![Q.zero(), Q.one()]],
            ],
        )
        .unwrap();
        assert_eq!(p.left_kernel().unwrap(), expect);
        assert_eq!(p.right_kernel().unwrap(), expect);
    }

    #[test]
    fn orthogonal_of_diagonal_line() {
        let st = structure(sierpinski());
        let a = ModulePresheaf::free(st, 2);
        let mats = vec![Mat::identity(Q, 2), Mat::identity(Q, 2)];
        let p = Pairing::new(a.clone(), a.clone(), mats).unwrap();
        let diag = vec![vec![Q.one(), Q.one()]];
        let e0 =
            SubmodulePresheaf::from_stalk_generators(&a, &[diag.clone(), diag]).unwrap();
        let perp = p.orthogonal_in_f(&e0).unwrap();
        // by hand: (x, y) · (1, 1) = x + y = 0, the anti-diagonal line
        let anti = vec![vec![Q.one(), Q.from_i64(-1)]];
        let expect =
            SubmodulePresheaf::from_stalk_generators(&a, &[anti.clone(), anti]).unwrap();
        assert_eq!(perp, expect);
        // double orthogonal recovers the line (finite-dimensional stalks)
        let back = p.orthogonal_in_e(&perp).unwrap();
        assert_eq!(back, e0);
        assert!(
            verify_orthogonal_completeness(&p, &e0).unwrap() == OrthogonalVerdict::Holds
        );
    }

    #[test]
    fn per_open_orthogonal_can_fail_to_be_a_presheaf() {
        // E has a one-dimensional stalk at the open point and nothing
        // globally, so "orthogonal to all global sections" is everything
        // at the whole open but restricts outside the pointwise orthogonal
        let st = structure(sierpinski());
        let mut restrictions = HashMap::new();
        restrictions.insert((2, 1), Mat::zero(Q, 1, 0));
        let e = ModulePresheaf::from_components(
            st.clone(),
            vec![vec![], vec![1], vec![0]],
            restrictions,
        )
        .unwrap();
        let f = ModulePresheaf::free(st, 1);
        let mats = vec![Mat::identity(Q, 1), Mat::zero(Q, 1, 0)];
        let p = Pairing::new(f, e.clone(), mats).unwrap();
        let full = SubmodulePresheaf::full(&e);
        assert_eq!(
            verify_orthogonal_completeness(&p, &full).unwrap(),
            OrthogonalVerdict::NotAPresheaf {
                u: OpenSet(2),
                v: OpenSet(1)
            }
        );
        // the germwise left kernel is still a genuine submodule: zero here
        assert!(p.left_kernel().unwrap().is_zero());
    }

    #[test]
    fn dual_of_free_module_has_equal_dimensions() {
        for space in [discrete2(), wedge3()] {
            let a = ModulePresheaf::free(structure(space), 2);
            let dual = hom_dual(&a).unwrap();
            dual.module().validate().unwrap();
            assert!(is_complete(dual.module()).unwrap().is_complete());
            for u in a.space().opens() {
                assert_eq!(dual.module().dim(u), a.dim(u));
            }
            let theta = dual.evaluation_pairing().unwrap();
            assert!(!theta.is_degenerate().unwrap());
        }
    }

    #[test]
    fn dual_basis_pairs_to_identity() {
        let st = structure(discrete2());
        let a = ModulePresheaf::free(st, 2);
        let space = a.space();
        let whole = space.whole_open();
        let dual = hom_dual(&a).unwrap();
        let theta = dual.evaluation_pairing().unwrap();
        // an A(X)-basis: [[1,1],[0,1]] on one component, identity on the other
        let s1: Vec<Scalar> = [1, 0, 1, 0].iter().map(|&k| Q.from_i64(k)).collect();
        let s2: Vec<Scalar> = [1, 1, 0, 1].iter().map(|&k| Q.from_i64(k)).collect();
        let phis = dual_basis(&dual, whole, &[s1.clone(), s2.clone()]).unwrap();
        for (i, phi) in phis.iter().enumerate() {
            for (j, s) in [&s1, &s2].iter().enumerate() {
                let v = theta.evaluate(whole, phi, s).unwrap();
                let expect = if i == j { Q.one() } else { Q.zero() };
                assert_eq!(v, vec![expect.clone(), expect]);
            }
        }
        // linearly dependent germs cannot be a basis
        let bad = dual_basis(&dual, whole, &[s1.clone(), s1]);
        assert!(matches!(bad, Err(Error::SingularBasis { .. })));
    }

    #[test]
    fn gamma_delta_kernels_are_the_pairing_kernels() {
        let p = degenerate_pairing();
        let (_, gamma) = p.gamma().unwrap();
        let (_, delta) = p.delta().unwrap();
        assert_eq!(gamma.validate(), MorphismVerdict::Valid);
        assert_eq!(delta.validate(), MorphismVerdict::Valid);
        assert_eq!(gamma.kernel_presheaf().unwrap(), p.right_kernel().unwrap());
        assert_eq!(delta.kernel_presheaf().unwrap(), p.left_kernel().unwrap());
        // for the non-degenerate multiplication pairing both maps are iso
        let m = mult_pairing(wedge3());
        let (_, g) = m.gamma().unwrap();
        for u in m.e().space().opens() {
            assert_eq!(g.map(u).rank(), m.e().dim(u));
        }
    }

    #[test]
    fn induced_quotient_pairing_is_non_degenerate() {
        let p = degenerate_pairing();
        let ind = induced_quotient_pairing(&p).unwrap();
        assert!(!ind.pairing.is_degenerate().unwrap());
        // values are preserved: Φ̄(t̄, s̄) = Φ(t, s) at every open
        let space = p.f().space();
        let left = p.left_kernel().unwrap();
        let right = p.right_kernel().unwrap();
        let (_, qf_surj) = quotient_presheaf(p.f(), &left).unwrap();
        let (_, qe_surj) = quotient_presheaf(p.e(), &right).unwrap();
        for u in space.opens() {
            let to_qf = ind.qf.unit().map(u).mul(qf_surj.map(u)).unwrap();
            let to_qe = ind.qe.unit().map(u).mul(qe_surj.map(u)).unwrap();
            for i in 0..p.f().dim(u) {
                for j in 0..p.e().dim(u) {
                    let mut t = vec![Q.zero(); p.f().dim(u)];
                    t[i] = Q.one();
                    let mut s = vec![Q.zero(); p.e().dim(u)];
                    s[j] = Q.one();
                    let lhs = ind
                        .pairing
                        .evaluate(u, &to_qf.mul_vec(&t).unwrap(), &to_qe.mul_vec(&s).unwrap())
                        .unwrap();
                    let rhs = p.evaluate(u, &t, &s).unwrap();
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn sheafified_bilinear_data_extends_values() {
        // an incomplete equivariant presheaf: one dimension per point but
        // invisible from the whole open (zero restrictions)
        let st = structure(discrete2());
        let mut restrictions = HashMap::new();
        restrictions.insert((3, 1), Mat::zero(Q, 1, 2));
        restrictions.insert((3, 2), Mat::zero(Q, 1, 2));
        let p = ModulePresheaf::from_components(
            st.clone(),
            vec![vec![], vec![1], vec![1], vec![1, 1]],
            restrictions,
        )
        .unwrap();
        assert!(!is_complete(&p).unwrap().is_complete());
        // compatibility forces the matrices over the whole open to vanish
        let mats = vec![
            vec![],
            vec![Mat::identity(Q, 1)],
            vec![Mat::identity(Q, 1)],
            vec![Mat::zero(Q, 1, 1), Mat::zero(Q, 1, 1)],
        ];
        let b = PresheafBilinear::new(p.clone(), p.clone(), mats).unwrap();
        let (sf_f, sf_e, pairing) = sheafify_pairing(&b).unwrap();
        // Φ̄(unit t, unit s) = φ(t, s) at every open, on all basis pairs
        for u in p.space().opens() {
            for i in 0..p.dim(u) {
                for j in 0..p.dim(u) {
                    let mut t = vec![Q.zero(); p.dim(u)];
                    t[i] = Q.one();
                    let mut s = vec![Q.zero(); p.dim(u)];
                    s[j] = Q.one();
                    let lhs = pairing
                        .evaluate(
                            u,
                            &sf_f.unit().apply(u, &t).unwrap(),
                            &sf_e.unit().apply(u, &s).unwrap(),
                        )
                        .unwrap();
                    assert_eq!(lhs, b.evaluate(u, &t, &s).unwrap());
                }
            }
        }
        // incompatible data is rejected with the offending pair of opens
        let bad = vec![
            vec![],
            vec![Mat::identity(Q, 1)],
            vec![Mat::identity(Q, 1)],
            vec![Mat::identity(Q, 1), Mat::zero(Q, 1, 1)],
        ];
        assert!(PresheafBilinear::new(p.clone(), p, bad).is_err());
    }

    #[test]
    fn sheafified_bilinear_data_of_complete_sides_reproduces() {
        let st = structure(wedge3());
        let a = ModulePresheaf::point_supported(st, &[1, 1, 1]);
        let space = a.space();
        // only the coordinate of the common point 1 survives restriction
        // to every minimal open, so it carries the whole pairing
        let mats: Vec<Vec<Mat>> = space
            .opens()
            .map(|u| {
                let d = a.dim(u);
                if d == 0 {
                    return vec![];
                }
                let idx = space.points(u).position(|x| x == 1).expect("1 ∈ u");
                let mut m = Mat::zero(Q, d, d);
                m.set(idx, idx, Q.one());
                vec![m]
            })
            .collect();
        let b = PresheafBilinear::new(a.clone(), a.clone(), mats).unwrap();
        let (sf_f, sf_e, pairing) = sheafify_pairing(&b).unwrap();
        for u in space.opens() {
            for i in 0..a.dim(u) {
                let mut t = vec![Q.zero(); a.dim(u)];
                t[i] = Q.one();
                let lhs = pairing
                    .evaluate(
                        u,
                        &sf_f.unit().apply(u, &t).unwrap(),
                        &sf_e.unit().apply(u, &t).unwrap(),
                    )
                    .unwrap();
                assert_eq!(lhs, b.evaluate(u, &t, &t).unwrap());
            }
        }
    }

    #[test]
    fn duality_injections_for_identity_pairing() {
        let st = structure(wedge3());
        let a = ModulePresheaf::free(st, 2);
        let mats = (0..3).map(|_| Mat::identity(Q, 2)).collect();
        let p = Pairing::new(a.clone(), a.clone(), mats).unwrap();
        let diag = vec![vec![Q.one(), Q.one()]];
        let f0 = SubmodulePresheaf::from_stalk_generators(
            &a,
            &[diag.clone(), diag.clone(), diag],
        )
        .unwrap();
        let line = vec![vec![Q.one(), Q.zero()]];
        let e0 = SubmodulePresheaf::from_stalk_generators(
            &a,
            &[line.clone(), line.clone(), line],
        )
        .unwrap();
        let inj = duality_injections(&p, &f0, &e0).unwrap();
        assert!(inj.quotient_injective);
        assert!(inj.orthogonal_injective);
        assert_eq!(inj.quotient_to_dual.validate(), MorphismVerdict::Valid);
        assert_eq!(inj.orthogonal_to_dual.validate(), MorphismVerdict::Valid);
        // E/F₀⊥ is one-dimensional per component, as is F₀*
        for u in a.space().opens() {
            assert_eq!(
                inj.quotient_to_dual.source().dim(u),
                inj.quotient_to_dual.target().dim(u)
            );
        }
        // a degenerate pairing is rejected outright
        let d = degenerate_pairing();
        let sub = SubmodulePresheaf::zero(d.f());
        assert!(duality_injections(&d, &sub, &sub).is_err());
    }
}
