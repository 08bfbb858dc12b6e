//! Exact-arithmetic presheaves and sheaves of modules on finite topological
//! spaces: sheafification, bilinear pairings, orthogonals, duals and the
//! rank calculus, all over the rationals or a prime field.

pub mod error;
pub mod instances;
pub mod matrix;
pub mod pairing;
pub mod presheaf;
pub mod ranks;
pub mod scalar;
pub mod sheaf;
pub mod subspace;
pub mod topo;

pub use error::{Error, Result};
pub use matrix::Mat;
pub use pairing::{
    dual_basis, duality_injections, hom_dual, induced_quotient_pairing, sheafify_pairing,
    verify_orthogonal_completeness, DualModule, DualityInjections, InducedPairing,
    OrthogonalVerdict, Pairing, PresheafBilinear,
};
pub use presheaf::{
    is_complete, is_complete_sub, quotient_presheaf, Completeness, ModulePresheaf,
    MorphismPresheaf, MorphismVerdict, StructureSheaf, SubmodulePresheaf,
};
pub use ranks::{
    find_supplement, free_rank, second_isomorphism, verify_rank_identities,
    verify_sum_completeness, Decomposition, Outcome, RankReport, SecondIsoReport,
    SupplementOutcome,
};
pub use scalar::{Field, Scalar};
pub use sheaf::{
    product_presheaf, sheafify, sheafify_morphism, stalk_dim, verify_product_lemma, FamilyChart,
    Sheafification,
};
pub use subspace::Subspace;
pub use topo::{FiniteSpace, OpenSet};
