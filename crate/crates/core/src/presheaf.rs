//! Presheaves of modules over the component-wise structure sheaf, their
//! morphisms, and the presheaf-level constructions: sums, intersections,
//! quotients, kernels and the completeness (sheaf-axiom) check.
//!
//! The structure sheaf assigns to an open `u` one field copy per connected
//! component, `A(u) = k^{c(u)}`. A module presheaf assigns to each open a
//! finite-dimensional section space together with restriction matrices; when
//! the presheaf is a module over `A` the section space splits per component
//! and restrictions respect that splitting. Plain vector-space presheaves
//! (no component splitting) are also allowed; the sheafification machinery
//! works for both.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::{Field, Scalar};
use crate::subspace::Subspace;
use crate::topo::{FiniteSpace, OpenSet};

/// The component-wise structure sheaf `A(u) = field^{c(u)}`.
#[derive(Clone, PartialEq, Debug)]
pub struct StructureSheaf {
    space: Arc<FiniteSpace>,
    field: Field,
}

impl StructureSheaf {
    pub fn new(space: Arc<FiniteSpace>, field: Field) -> StructureSheaf {
        StructureSheaf { space, field }
    }

    pub fn space(&self) -> &FiniteSpace {
        &self.space
    }

    pub fn space_arc(&self) -> Arc<FiniteSpace> {
        self.space.clone()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn n_components(&self, u: OpenSet) -> usize {
        self.space.n_components(u)
    }

    /// The component-copying restriction `A(u) -> A(v)` as a 0/1 matrix.
    pub fn kappa(&self, u: OpenSet, v: OpenSet) -> Result<Mat> {
        let refine = self.space.component_refinement(u, v)?;
        let mut m = Mat::zero(self.field, refine.len(), self.n_components(u));
        for (d, &c) in refine.iter().enumerate() {
            m.set(d, c, self.field.one());
        }
        Ok(m)
    }
}

/// A presheaf of finite-dimensional section spaces with exact restriction
/// matrices. `comp_dims` is present exactly when the presheaf carries an
/// `A`-module structure split along connected components.
#[derive(Clone, PartialEq, Debug)]
pub struct ModulePresheaf {
    structure: StructureSheaf,
    dims: Vec<usize>,
    comp_dims: Option<Vec<Vec<usize>>>,
    /// keyed by (u, v) for strict inclusions v ⊂ u; shape dim(v) x dim(u)
    restrictions: HashMap<(usize, usize), Mat>,
}

impl ModulePresheaf {
    /// The free module `A^rank`: one rank-`rank` block per component, with
    /// component-copying identity restrictions.
    pub fn free(structure: StructureSheaf, rank: usize) -> ModulePresheaf {
        let space = structure.space_arc();
        let field = structure.field();
        let comp_dims: Vec<Vec<usize>> = space
            .opens()
            .map(|u| vec![rank; space.n_components(u)])
            .collect();
        let dims: Vec<usize> = comp_dims.iter().map(|c| c.iter().sum()).collect();
        let mut restrictions = HashMap::new();
        for (u, v) in space.strict_inclusions() {
            let refine = space.component_refinement(u, v).expect("v subset of u");
            let mut m = Mat::zero(field, dims[v.0], dims[u.0]);
            for (d, &c) in refine.iter().enumerate() {
                for i in 0..rank {
                    m.set(d * rank + i, c * rank + i, field.one());
                }
            }
            restrictions.insert((u.0, v.0), m);
        }
        ModulePresheaf {
            structure,
            dims,
            comp_dims: Some(comp_dims),
            restrictions,
        }
    }

    pub fn zero(structure: StructureSheaf) -> ModulePresheaf {
        ModulePresheaf::free(structure, 0)
    }

    /// An `A`-module presheaf from per-open per-component dimensions and
    /// restriction matrices. Checks the block discipline and functoriality.
    pub fn from_components(
        structure: StructureSheaf,
        comp_dims: Vec<Vec<usize>>,
        restrictions: HashMap<(usize, usize), Mat>,
    ) -> Result<ModulePresheaf> {
        let dims = comp_dims.iter().map(|c| c.iter().sum()).collect();
        let p = ModulePresheaf {
            structure,
            dims,
            comp_dims: Some(comp_dims),
            restrictions,
        };
        p.validate()?;
        Ok(p)
    }

    /// A presheaf of plain vector spaces (no `A`-module splitting).
    pub fn plain(
        structure: StructureSheaf,
        dims: Vec<usize>,
        restrictions: HashMap<(usize, usize), Mat>,
    ) -> Result<ModulePresheaf> {
        let p = ModulePresheaf {
            structure,
            dims,
            comp_dims: None,
            restrictions,
        };
        p.validate()?;
        Ok(p)
    }

    /// The constant presheaf of dimension `dim`: identity restrictions
    /// everywhere. Not an `A`-module on spaces with disconnected opens,
    /// and typically incomplete there.
    pub fn constant(structure: StructureSheaf, dim: usize) -> ModulePresheaf {
        let space = structure.space_arc();
        let field = structure.field();
        let empty = space.empty_open();
        let dims: Vec<usize> = space
            .opens()
            .map(|u| if u == empty { 0 } else { dim })
            .collect();
        let mut restrictions = HashMap::new();
        for (u, v) in space.strict_inclusions() {
            restrictions.insert((u.0, v.0), Mat::zero(field, dims[v.0], dims[u.0]));
        }
        for ((u, v), m) in restrictions.iter_mut() {
            if dims[*u] == dim && dims[*v] == dim {
                *m = Mat::identity(field, dim);
            }
        }
        ModulePresheaf {
            structure,
            dims,
            comp_dims: None,
            restrictions,
        }
    }

    /// The point-supported presheaf `P(u) = ⊕_{x∈u} W_x` with coordinate
    /// projections as restrictions. An `A`-module, usually incomplete.
    pub fn point_supported(structure: StructureSheaf, point_dims: &[usize]) -> ModulePresheaf {
        let space = structure.space_arc();
        let field = structure.field();
        assert_eq!(point_dims.len(), space.n_points());
        // coordinates over u: points of u ordered component-major
        let layout = |u: OpenSet| -> Vec<usize> {
            let comps = space.components(u).expect("valid open").components;
            comps
                .iter()
                .flat_map(|&c| (0..space.n_points()).filter(move |x| c & (1 << x) != 0))
                .collect()
        };
        let comp_dims: Vec<Vec<usize>> = space
            .opens()
            .map(|u| {
                space
                    .components(u)
                    .expect("valid open")
                    .components
                    .iter()
                    .map(|&c| {
                        (0..space.n_points())
                            .filter(|x| c & (1 << x) != 0)
                            .map(|x| point_dims[x])
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let dims: Vec<usize> = comp_dims.iter().map(|c| c.iter().sum()).collect();
        let offsets = |order: &[usize]| -> HashMap<usize, usize> {
            let mut off = HashMap::new();
            let mut acc = 0;
            for &x in order {
                off.insert(x, acc);
                acc += point_dims[x];
            }
            off
        };
        let mut restrictions = HashMap::new();
        for (u, v) in space.strict_inclusions() {
            let (ou, ov) = (offsets(&layout(u)), offsets(&layout(v)));
            let mut m = Mat::zero(field, dims[v.0], dims[u.0]);
            for x in space.points(v) {
                for i in 0..point_dims[x] {
                    m.set(ov[&x] + i, ou[&x] + i, field.one());
                }
            }
            restrictions.insert((u.0, v.0), m);
        }
        ModulePresheaf {
            structure,
            dims,
            comp_dims: Some(comp_dims),
            restrictions,
        }
    }

    pub fn structure(&self) -> &StructureSheaf {
        &self.structure
    }

    pub fn space(&self) -> &FiniteSpace {
        self.structure.space()
    }

    pub fn field(&self) -> Field {
        self.structure.field()
    }

    pub fn dim(&self, u: OpenSet) -> usize {
        self.dims[u.0]
    }

    pub fn is_equivariant(&self) -> bool {
        self.comp_dims.is_some()
    }

    pub fn comp_dims(&self, u: OpenSet) -> Result<&[usize]> {
        self.comp_dims
            .as_ref()
            .map(|c| c[u.0].as_slice())
            .ok_or_else(|| Error::Invalid("presheaf has no component structure".into()))
    }

    /// Offsets of the component blocks inside the flat section space of `u`.
    pub fn comp_offsets(&self, u: OpenSet) -> Result<Vec<usize>> {
        let dims = self.comp_dims(u)?;
        let mut off = Vec::with_capacity(dims.len() + 1);
        let mut acc = 0;
        for &d in dims {
            off.push(acc);
            acc += d;
        }
        off.push(acc);
        Ok(off)
    }

    /// The restriction matrix for `v ⊆ u` (identity when `v = u`).
    pub fn restriction(&self, u: OpenSet, v: OpenSet) -> Result<Mat> {
        if u == v {
            return Ok(Mat::identity(self.field(), self.dims[u.0]));
        }
        if !self.space().is_subset(v, u) {
            return Err(Error::NotSubOpen { sub: v.0, sup: u.0 });
        }
        if self.dims[u.0] == 0 || self.dims[v.0] == 0 {
            // the unique map when either side is the zero space
            return Ok(Mat::zero(self.field(), self.dims[v.0], self.dims[u.0]));
        }
        self.restrictions
            .get(&(u.0, v.0))
            .cloned()
            .ok_or_else(|| Error::IncompatibleRestriction { sup: u.0, sub: v.0 })
    }

    /// The block of the restriction mapping component `c` of `u` into its
    /// refinement component `d` of `v`.
    pub fn restriction_block(&self, u: OpenSet, c: usize, v: OpenSet, d: usize) -> Result<Mat> {
        let m = self.restriction(u, v)?;
        let (ou, ov) = (self.comp_offsets(u)?, self.comp_offsets(v)?);
        Ok(m.submatrix(ov[d]..ov[d + 1], ou[c]..ou[c + 1]))
    }

    /// The action of `a ∈ A(u)` (one scalar per component) on sections.
    pub fn action(&self, u: OpenSet, a: &[Scalar]) -> Result<Mat> {
        let off = self.comp_offsets(u)?;
        if a.len() + 1 != off.len() {
            return Err(Error::Dimension("algebra element has wrong arity".into()));
        }
        let mut m = Mat::zero(self.field(), self.dims[u.0], self.dims[u.0]);
        for (c, s) in a.iter().enumerate() {
            for i in off[c]..off[c + 1] {
                m.set(i, i, s.clone());
            }
        }
        Ok(m)
    }

    /// Identity at each open, functorial composition, zero sections over the
    /// empty open, and (when present) the component block discipline.
    pub fn validate(&self) -> Result<()> {
        let space = self.space();
        if self.dims.len() != space.n_opens() {
            return Err(Error::Dimension("one dimension per open required".into()));
        }
        if self.dims[space.empty_open().0] != 0 {
            return Err(Error::Invalid("sections over the empty open must be zero".into()));
        }
        if let Some(cd) = &self.comp_dims {
            for u in space.opens() {
                if cd[u.0].len() != space.n_components(u) {
                    return Err(Error::Dimension(format!(
                        "component dimensions of open {} have wrong arity",
                        u.0
                    )));
                }
                if cd[u.0].iter().sum::<usize>() != self.dims[u.0] {
                    return Err(Error::Dimension(format!(
                        "component dimensions of open {} do not sum to the total",
                        u.0
                    )));
                }
            }
        }
        for (u, v) in space.strict_inclusions() {
            let m = self.restriction(u, v)?;
            if m.rows() != self.dims[v.0] || m.cols() != self.dims[u.0] {
                return Err(Error::Dimension(format!(
                    "restriction ({}, {}) has shape {}x{}, expected {}x{}",
                    u.0,
                    v.0,
                    m.rows(),
                    m.cols(),
                    self.dims[v.0],
                    self.dims[u.0]
                )));
            }
            if self.comp_dims.is_some() {
                let refine = space.component_refinement(u, v)?;
                let (ou, ov) = (self.comp_offsets(u)?, self.comp_offsets(v)?);
                for d in 0..refine.len() {
                    for c in 0..ou.len() - 1 {
                        if c != refine[d] {
                            let block = m.submatrix(ov[d]..ov[d + 1], ou[c]..ou[c + 1]);
                            if !block.is_zero() {
                                return Err(Error::Invalid(format!(
                                    "restriction ({}, {}) couples unrelated components",
                                    u.0, v.0
                                )));
                            }
                        }
                    }
                }
            }
        }
        // functoriality over all chains w ⊆ v ⊆ u
        for (u, v) in space.strict_inclusions() {
            for w in space.opens() {
                if w != v && space.is_subset(w, v) {
                    let uv = self.restriction(u, v)?;
                    let vw = self.restriction(v, w)?;
                    let uw = self.restriction(u, w)?;
                    if vw.mul(&uv)? != uw {
                        return Err(Error::IncompatibleRestriction { sup: u.0, sub: w.0 });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn same_base(&self, other: &ModulePresheaf) -> Result<()> {
        if self.structure == other.structure {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }
}

/// A sub-`A`-module of an equivariant presheaf, stored as one canonical
/// subspace per open per component.
#[derive(Clone, PartialEq, Debug)]
pub struct SubmodulePresheaf {
    ambient: ModulePresheaf,
    parts: Vec<Vec<Subspace>>,
}

impl SubmodulePresheaf {
    pub fn from_parts(ambient: ModulePresheaf, parts: Vec<Vec<Subspace>>) -> Result<SubmodulePresheaf> {
        let sub = SubmodulePresheaf { ambient, parts };
        sub.validate()?;
        Ok(sub)
    }

    pub fn zero(ambient: &ModulePresheaf) -> SubmodulePresheaf {
        let parts = ambient
            .space()
            .opens()
            .map(|u| {
                ambient
                    .comp_dims(u)
                    .expect("equivariant ambient")
                    .iter()
                    .map(|&d| Subspace::zero(ambient.field(), d))
                    .collect()
            })
            .collect();
        SubmodulePresheaf {
            ambient: ambient.clone(),
            parts,
        }
    }

    pub fn full(ambient: &ModulePresheaf) -> SubmodulePresheaf {
        let parts = ambient
            .space()
            .opens()
            .map(|u| {
                ambient
                    .comp_dims(u)
                    .expect("equivariant ambient")
                    .iter()
                    .map(|&d| Subspace::full(ambient.field(), d))
                    .collect()
            })
            .collect();
        SubmodulePresheaf {
            ambient: ambient.clone(),
            parts,
        }
    }

    /// Builds the largest restriction-closed submodule whose sections over
    /// each minimal open `U_x` are `span(gens[x])`. Fails when the stalk
    /// spans themselves are not closed under specialization.
    pub fn from_stalk_generators(
        ambient: &ModulePresheaf,
        gens: &[Vec<Vec<Scalar>>],
    ) -> Result<SubmodulePresheaf> {
        let space = ambient.space();
        let field = ambient.field();
        if gens.len() != space.n_points() {
            return Err(Error::Dimension("one generator list per point required".into()));
        }
        let mut stalk_spans = Vec::with_capacity(space.n_points());
        for (x, g) in gens.iter().enumerate() {
            let ux = space.min_open(x);
            stalk_spans.push(Subspace::from_vecs(field, ambient.dim(ux), g)?);
        }
        // specialization closure between minimal opens
        for x in 0..space.n_points() {
            let ux = space.min_open(x);
            for y in space.points(ux) {
                let uy = space.min_open(y);
                if uy == ux {
                    continue;
                }
                let rho = ambient.restriction(ux, uy)?;
                let image = Subspace::from_rows(&stalk_spans[x].basis().mul(&rho.transpose())?);
                if !stalk_spans[y].contains(&image) {
                    return Err(Error::Invalid(format!(
                        "stalk generators at point {x} do not restrict into those at point {y}"
                    )));
                }
            }
        }
        let mut parts = Vec::with_capacity(space.n_opens());
        for u in space.opens() {
            let comps = space.components(u)?.components;
            let offsets = ambient.comp_offsets(u)?;
            let mut row = Vec::with_capacity(comps.len());
            for (c, &cbits) in comps.iter().enumerate() {
                let dim_c = offsets[c + 1] - offsets[c];
                let mut sub = Subspace::full(field, dim_c);
                for x in (0..space.n_points()).filter(|x| cbits & (1 << x) != 0) {
                    let ux = space.min_open(x);
                    // preimage of the stalk span under the restriction block
                    let block = ambient.restriction_block(u, c, ux, 0)?;
                    let q = stalk_spans[x].quotient_map();
                    let pre = Subspace::from_rows(&q.mul(&block)?.kernel_basis());
                    sub = sub.intersect(&pre)?;
                }
                row.push(sub);
            }
            parts.push(row);
        }
        SubmodulePresheaf::from_parts(ambient.clone(), parts)
    }

    pub fn ambient(&self) -> &ModulePresheaf {
        &self.ambient
    }

    pub fn space(&self) -> &FiniteSpace {
        self.ambient.space()
    }

    pub fn field(&self) -> Field {
        self.ambient.field()
    }

    pub fn part(&self, u: OpenSet, c: usize) -> &Subspace {
        &self.parts[u.0][c]
    }

    pub fn parts_at(&self, u: OpenSet) -> &[Subspace] {
        &self.parts[u.0]
    }

    /// The submodule's sections over `u` as one subspace of the flat
    /// section space (direct sum of the component pieces).
    pub fn flat(&self, u: OpenSet) -> Subspace {
        let field = self.field();
        let mut basis: Option<Mat> = None;
        for s in &self.parts[u.0] {
            let b = s.basis().clone();
            basis = Some(match basis {
                None => b,
                Some(acc) => acc.direct_sum(&b),
            });
        }
        match basis {
            None => Subspace::zero(field, 0),
            Some(b) => Subspace::from_rows(&b),
        }
    }

    pub fn dim(&self, u: OpenSet) -> usize {
        self.parts[u.0].iter().map(Subspace::dim).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.parts.iter().flatten().all(Subspace::is_zero)
    }

    pub fn validate(&self) -> Result<()> {
        let space = self.ambient.space();
        if self.parts.len() != space.n_opens() {
            return Err(Error::Dimension("one part list per open required".into()));
        }
        for u in space.opens() {
            let dims = self.ambient.comp_dims(u)?;
            if self.parts[u.0].len() != dims.len() {
                return Err(Error::Dimension(format!(
                    "parts of open {} have wrong component arity",
                    u.0
                )));
            }
            for (c, s) in self.parts[u.0].iter().enumerate() {
                if s.ambient_dim() != dims[c] {
                    return Err(Error::Dimension(format!(
                        "part ({}, {c}) lives in the wrong fiber",
                        u.0
                    )));
                }
            }
        }
        for (u, v) in space.strict_inclusions() {
            let rho = self.ambient.restriction(u, v)?;
            let image = Subspace::from_rows(&self.flat(u).basis().mul(&rho.transpose())?);
            if !self.flat(v).contains(&image) {
                return Err(Error::Invalid(format!(
                    "submodule is not restriction-closed at opens ({}, {})",
                    u.0, v.0
                )));
            }
        }
        Ok(())
    }

    fn check_same_ambient(&self, other: &SubmodulePresheaf) -> Result<()> {
        if self.ambient == other.ambient {
            Ok(())
        } else {
            Err(Error::AmbientMismatch)
        }
    }

    /// Per-open, per-component subspace sum; the presheaf-level sum.
    pub fn sum(&self, other: &SubmodulePresheaf) -> Result<SubmodulePresheaf> {
        self.check_same_ambient(other)?;
        let parts = self
            .parts
            .iter()
            .zip(&other.parts)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x.sum(y))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SubmodulePresheaf {
            ambient: self.ambient.clone(),
            parts,
        })
    }

    /// Per-open, per-component subspace intersection.
    pub fn intersect(&self, other: &SubmodulePresheaf) -> Result<SubmodulePresheaf> {
        self.check_same_ambient(other)?;
        let parts = self
            .parts
            .iter()
            .zip(&other.parts)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x.intersect(y))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SubmodulePresheaf {
            ambient: self.ambient.clone(),
            parts,
        })
    }

    pub fn contains(&self, other: &SubmodulePresheaf) -> Result<bool> {
        self.check_same_ambient(other)?;
        Ok(self
            .parts
            .iter()
            .zip(&other.parts)
            .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.contains(y))))
    }

    /// Re-presents the submodule as a module presheaf in its own right,
    /// together with the inclusion into the ambient presheaf.
    pub fn to_presheaf(&self) -> Result<(ModulePresheaf, MorphismPresheaf)> {
        let space = self.ambient.space();
        let comp_dims: Vec<Vec<usize>> = self
            .parts
            .iter()
            .map(|row| row.iter().map(Subspace::dim).collect())
            .collect();
        let mut restrictions = HashMap::new();
        for (u, v) in space.strict_inclusions() {
            let rho = self.ambient.restriction(u, v)?;
            // rows of flat(u) basis, restricted, in coordinates of flat(v)
            let mapped = self.flat(u).basis().mul(&rho.transpose())?;
            let coords = self.flat(v).coordinates_of_rows(&mapped)?;
            restrictions.insert((u.0, v.0), coords.transpose());
        }
        let module = ModulePresheaf::from_components(
            self.ambient.structure().clone(),
            comp_dims,
            restrictions,
        )?;
        let maps = space
            .opens()
            .map(|u| self.flat(u).basis().transpose())
            .collect();
        let inclusion = MorphismPresheaf::new(module.clone(), self.ambient.clone(), maps)?;
        Ok((module, inclusion))
    }
}

/// A per-open linear map between presheaves over the same base.
#[derive(Clone, PartialEq, Debug)]
pub struct MorphismPresheaf {
    source: ModulePresheaf,
    target: ModulePresheaf,
    maps: Vec<Mat>,
}

/// Outcome of the commuting-square / linearity audit of a morphism.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum MorphismVerdict {
    Valid,
    /// The restriction square for the pair (u, v) does not commute.
    FailingSquare { u: OpenSet, v: OpenSet },
    /// The map at `u` couples unrelated components.
    NotALinear { u: OpenSet },
}

impl MorphismPresheaf {
    pub fn new(
        source: ModulePresheaf,
        target: ModulePresheaf,
        maps: Vec<Mat>,
    ) -> Result<MorphismPresheaf> {
        source.same_base(&target)?;
        if maps.len() != source.space().n_opens() {
            return Err(Error::Dimension("one map per open required".into()));
        }
        for u in source.space().opens() {
            let m = &maps[u.0];
            if m.rows() != target.dim(u) || m.cols() != source.dim(u) {
                return Err(Error::Dimension(format!(
                    "map at open {} has shape {}x{}, expected {}x{}",
                    u.0,
                    m.rows(),
                    m.cols(),
                    target.dim(u),
                    source.dim(u)
                )));
            }
        }
        Ok(MorphismPresheaf {
            source,
            target,
            maps,
        })
    }

    pub fn identity(p: &ModulePresheaf) -> MorphismPresheaf {
        let maps = p
            .space()
            .opens()
            .map(|u| Mat::identity(p.field(), p.dim(u)))
            .collect();
        MorphismPresheaf {
            source: p.clone(),
            target: p.clone(),
            maps,
        }
    }

    pub fn source(&self) -> &ModulePresheaf {
        &self.source
    }

    pub fn target(&self) -> &ModulePresheaf {
        &self.target
    }

    pub fn map(&self, u: OpenSet) -> &Mat {
        &self.maps[u.0]
    }

    pub fn apply(&self, u: OpenSet, section: &[Scalar]) -> Result<Vec<Scalar>> {
        self.maps[u.0].mul_vec(section)
    }

    /// `other` after `self` (so `self.source -> other.target`).
    pub fn then(&self, other: &MorphismPresheaf) -> Result<MorphismPresheaf> {
        if self.target != other.source {
            return Err(Error::Invalid("morphism composition of mismatched ends".into()));
        }
        let maps = self
            .maps
            .iter()
            .zip(&other.maps)
            .map(|(f, g)| g.mul(f))
            .collect::<Result<Vec<_>>>()?;
        MorphismPresheaf::new(self.source.clone(), other.target.clone(), maps)
    }

    /// Confirms all restriction squares commute and, when both ends carry
    /// component structure, that each per-open map is `A`-linear. Reports
    /// the first failure.
    pub fn validate(&self) -> MorphismVerdict {
        let space = self.source.space();
        if self.source.is_equivariant() && self.target.is_equivariant() {
            for u in space.opens() {
                let so = self.source.comp_offsets(u).expect("equivariant");
                let to = self.target.comp_offsets(u).expect("equivariant");
                let m = &self.maps[u.0];
                for cr in 0..to.len() - 1 {
                    for cc in 0..so.len() - 1 {
                        if cr != cc {
                            let block = m.submatrix(to[cr]..to[cr + 1], so[cc]..so[cc + 1]);
                            if !block.is_zero() {
                                return MorphismVerdict::NotALinear { u };
                            }
                        }
                    }
                }
            }
        }
        for (u, v) in space.strict_inclusions() {
            let pi_s = self.source.restriction(u, v).expect("valid presheaf");
            let pi_t = self.target.restriction(u, v).expect("valid presheaf");
            let lhs = pi_t.mul(&self.maps[u.0]).expect("shape checked");
            let rhs = self.maps[v.0].mul(&pi_s).expect("shape checked");
            if lhs != rhs {
                return MorphismVerdict::FailingSquare { u, v };
            }
        }
        MorphismVerdict::Valid
    }

    /// Per-open, per-component kernels, bundled as a submodule of the source.
    pub fn kernel_presheaf(&self) -> Result<SubmodulePresheaf> {
        let space = self.source.space();
        let mut parts = Vec::with_capacity(space.n_opens());
        for u in space.opens() {
            let so = self.source.comp_offsets(u)?;
            let to = self.target.comp_offsets(u)?;
            let m = &self.maps[u.0];
            let mut row = Vec::with_capacity(so.len() - 1);
            for c in 0..so.len() - 1 {
                let block = m.submatrix(to[c]..to[c + 1], so[c]..so[c + 1]);
                row.push(Subspace::from_rows(&block.kernel_basis()));
            }
            parts.push(row);
        }
        SubmodulePresheaf::from_parts(self.source.clone(), parts)
    }
}

/// The quotient presheaf `e/f` together with the canonical surjection.
/// The kernel of the surjection is exactly `f` at every open.
pub fn quotient_presheaf(
    e: &ModulePresheaf,
    f: &SubmodulePresheaf,
) -> Result<(ModulePresheaf, MorphismPresheaf)> {
    if f.ambient() != e {
        return Err(Error::AmbientMismatch);
    }
    let space = e.space();
    let field = e.field();
    // per open: the block-diagonal quotient map onto complement coordinates
    let mut qmaps: Vec<Mat> = Vec::with_capacity(space.n_opens());
    let mut comp_dims: Vec<Vec<usize>> = Vec::with_capacity(space.n_opens());
    for u in space.opens() {
        let mut q: Option<Mat> = None;
        let mut cd = Vec::new();
        for s in f.parts_at(u) {
            let qc = s.quotient_map();
            cd.push(qc.rows());
            q = Some(match q {
                None => qc,
                Some(acc) => acc.direct_sum(&qc),
            });
        }
        qmaps.push(q.unwrap_or_else(|| Mat::zero(field, 0, 0)));
        comp_dims.push(cd);
    }
    let mut restrictions = HashMap::new();
    for (u, v) in space.strict_inclusions() {
        let pi = e.restriction(u, v)?;
        let r = qmaps[u.0].right_inverse()?;
        let sigma = qmaps[v.0].mul(&pi.mul(&r)?)?;
        restrictions.insert((u.0, v.0), sigma);
    }
    let quotient = ModulePresheaf::from_components(e.structure().clone(), comp_dims, restrictions)?;
    let surjection = MorphismPresheaf::new(e.clone(), quotient.clone(), qmaps)?;
    Ok((quotient, surjection))
}

/// Verdict of the sheaf-axiom audit against the minimal-open cover.
#[derive(Clone, PartialEq, Debug)]
pub enum Completeness {
    Complete,
    /// A nonzero section over `open` vanishing on every minimal open.
    SeparationFails { open: OpenSet, witness: Vec<Scalar> },
    /// A compatible family over the minimal opens of `open` with no glue;
    /// one flat block per point of the open, in point order.
    GluingFails { open: OpenSet, family: Vec<Scalar> },
}

impl Completeness {
    pub fn is_complete(&self) -> bool {
        matches!(self, Completeness::Complete)
    }
}

/// Data of the minimal-open cover of `u`: the space of compatible families
/// and the comparison map from sections over `u` into it.
pub(crate) struct GlueData {
    /// basis of the compatible-family subspace inside ⊕_x p(U_x)
    pub families: Subspace,
    /// sections(u) -> ⊕_x p(U_x), stacking the restrictions to minimal opens
    pub compare: Mat,
}

pub(crate) fn glue_data(p: &ModulePresheaf, u: OpenSet) -> Result<GlueData> {
    let space = p.space();
    let field = p.field();
    let points: Vec<usize> = space.points(u).collect();
    let mut offsets = Vec::with_capacity(points.len() + 1);
    let mut acc = 0;
    for &x in &points {
        offsets.push(acc);
        acc += p.dim(space.min_open(x));
    }
    offsets.push(acc);
    let total = acc;
    // constraints: for y ∈ U_x, restricting the x-block must give the y-block
    let mut constraint_rows: Vec<Vec<Scalar>> = Vec::new();
    for (i, &x) in points.iter().enumerate() {
        let ux = space.min_open(x);
        for (j, &y) in points.iter().enumerate() {
            if i == j || !space.points(ux).any(|z| z == y) {
                continue;
            }
            let uy = space.min_open(y);
            let rho = p.restriction(ux, uy)?;
            for r in 0..rho.rows() {
                let mut row = vec![field.zero(); total];
                for c in 0..rho.cols() {
                    row[offsets[i] + c] = rho.at(r, c).clone();
                }
                row[offsets[j] + r] = row[offsets[j] + r].sub_ref(&field.one());
                constraint_rows.push(row);
            }
        }
    }
    let families = if constraint_rows.is_empty() {
        Subspace::full(field, total)
    } else {
        Subspace::from_rows(&Mat::from_rows(field, constraint_rows)?.kernel_basis())
    };
    let mut compare = Mat::zero(field, total, p.dim(u));
    for (i, &x) in points.iter().enumerate() {
        let rho = p.restriction(u, space.min_open(x))?;
        for r in 0..rho.rows() {
            for c in 0..rho.cols() {
                compare.set(offsets[i] + r, c, rho.at(r, c).clone());
            }
        }
    }
    Ok(GlueData { families, compare })
}

/// Checks separation and gluing against the minimal-open cover of every
/// open. On a finite space that cover refines every other cover, so success
/// here is the full sheaf axiom.
pub fn is_complete(p: &ModulePresheaf) -> Result<Completeness> {
    let space = p.space();
    for u in space.opens() {
        let data = glue_data(p, u)?;
        let kernel = data.compare.kernel_basis();
        if kernel.rows() > 0 {
            return Ok(Completeness::SeparationFails {
                open: u,
                witness: kernel.row(0).to_vec(),
            });
        }
        let image = Subspace::from_rows(&data.compare.transpose());
        if image.dim() < data.families.dim() {
            // a compatible family outside the image of the comparison map
            let witness = data
                .families
                .basis()
                .row_vecs()
                .into_iter()
                .find(|f| !image.contains_vec(f))
                .expect("dimension gap guarantees an unglued family");
            return Ok(Completeness::GluingFails {
                open: u,
                family: witness,
            });
        }
    }
    Ok(Completeness::Complete)
}

/// Completeness of a submodule, checked on its own presheaf of sections.
pub fn is_complete_sub(f: &SubmodulePresheaf) -> Result<Completeness> {
    let (module, _) = f.to_presheaf()?;
    is_complete(&module)
}
