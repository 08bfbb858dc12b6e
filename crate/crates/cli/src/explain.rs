//! Self-contained statements of the verified properties, one per tag.

use crate::report::{Tag, ALL_TAGS};

pub fn explain(tag: Tag) -> &'static str {
    match tag {
        Tag::Eq1 => "Eq1 — completeness of sums.\n\
            Let E be a free module presheaf over the structure sheaf of a finite \
            space and let F and G be submodule presheaves of E whose parts are \
            constant on each connected component of the space. Then the sum \
            presheaf F+G, with (F+G)(U) = F(U) + G(U), satisfies both sheaf \
            axioms: sections agreeing on a cover are equal (separation) and \
            compatible families glue. The constancy hypothesis matters: two \
            complete submodules with genuinely varying parts can have an \
            incomplete sum, and the checker reports the open where gluing or \
            separation fails.",
        Tag::Thm1_1 => "Thm1.1 — second isomorphism for sheafified quotients.\n\
            For submodule presheaves F, G of a common ambient module, the \
            canonical map (F+G)/G -> F/(F∩G) induced by inclusion becomes an \
            isomorphism after sheafification. The checker builds both quotient \
            presheaves, sheafifies them, lifts the canonical map, and verifies \
            it is a bijection on sections over every open set.",
        Tag::RankThm => "RankThm — rank identities for free submodules.\n\
            When F and G are submodules with constant stalk dimension on each \
            component of the space, ranks and coranks are well defined and \
            satisfy: rank-nullity (rank F + corank F equals the ambient rank), \
            the modular law rank(F+G) + rank(F∩G) = rank F + rank G, and its \
            comodular counterpart for coranks. Coranks are measured on \
            independently constructed quotient sheaves, not inferred \
            arithmetically. Instances without constant ranks are skipped with \
            the witnessing component and opens.",
        Tag::Eq2 => "Eq2 — additivity of rank along chains.\n\
            For the chains 0 ⊆ F ⊆ F+G and F∩G ⊆ G ⊆ E, rank is additive: \
            rank(F+G) = rank F + rank S((F+G)/F), and corank(F∩G) = \
            rank S(G/(F∩G)) + corank G, where S denotes sheafification. Each \
            quotient sheaf is built explicitly and its stalk ranks are compared \
            against the subtraction-free identity.",
        Tag::DualThm => "DualThm — the dual module of a free module.\n\
            For a free module presheaf P of rank n, the module of morphisms \
            P -> A into the structure sheaf is again locally free of the same \
            rank: its section space over every open has the same dimension as \
            P. Moreover, for any basis s_1..s_n of sections over an open, there \
            exist dual functionals phi_1..phi_n with phi_i(s_j) equal to 1 when \
            i = j and 0 otherwise, on every component.",
        Tag::UniqueFunctional => "UniqueFunctional — uniqueness of dual functionals.\n\
            The dual functionals of DualThm are unique: the linear system \
            expressing 'evaluate against the given basis' has a zero kernel on \
            the dual module's section space, so no two distinct functionals \
            take the same values on a basis.",
        Tag::OrthLemma => "OrthLemma — orthogonal submodules of a pairing.\n\
            Given a pairing [F, E; A] and a submodule E0 of E, the orthogonal \
            E0⊥ in F (sections pairing to zero with every germ of E0) is a \
            complete submodule, and E0 is contained in its bi-orthogonal \
            (E0⊥)⊥. The per-open orthogonal (computed open by open rather than \
            germwise) need not be restriction-closed; when it is not, the \
            checker reports the witnessing pair of opens.",
        Tag::KernelLemma => "KernelLemma — kernels of the duality morphisms.\n\
            A pairing [F, E; A] induces morphisms gamma: E -> F* and \
            delta: F -> E* into the dual modules. The kernel of gamma is \
            exactly the right kernel F⊥ of the pairing, and the kernel of \
            delta is the left kernel E⊥. For a declared morphism this tag also \
            verifies naturality: every restriction square commutes and no map \
            couples distinct components; failures name the witnessing opens.",
        Tag::Lem1_3 => "Lem1.3 — sheafification preserves finite products.\n\
            For module presheaves P and Q, the sheafification of the product \
            presheaf P x Q is canonically isomorphic to the product of the \
            sheafifications S(P) x S(Q), via the map induced by the two \
            projections. The checker verifies the comparison map is bijective \
            over every open.",
        Tag::Lem1_4 => "Lem1.4 — pairings extend to sheafifications.\n\
            Bilinear data on a pair of presheaves, compatible with all \
            restrictions, induces a pairing on the sheafifications that \
            commutes with the unit maps: pairing the images of two sections \
            under the units gives the same answer as pairing the sections \
            directly. The checker validates compatibility (naming the failing \
            specialization when data is inconsistent) and tests the commuting \
            identity on seeded random section pairs.",
        Tag::Lem1_5 => "Lem1.5 — orthogonals commute with sheafification.\n\
            Suppose the per-open left kernel of bilinear data on presheaves is \
            itself a presheaf (restriction-closed). Then sheafifying that \
            kernel gives exactly the left kernel of the induced pairing on the \
            sheafifications: the lifted inclusion is injective with image the \
            sheaf-level kernel, in matching dimension at every open. Instances \
            where the hypothesis fails are skipped (in documents) or reported \
            (in fuzzing) explicitly.",
        Tag::Eq3 => "Eq3 — vanishing right kernel of the restricted pairing.\n\
            In the setting of Thm2.2, with the ambient pairing's left kernel \
            zero, the pairing restricted to F0 against the quotient E/F0⊥ has \
            zero right kernel: the natural map S(E/F0⊥) -> F0* has full column \
            rank at every open. A witness open is reported otherwise.",
        Tag::Thm2_2 => "Thm2.2 — duality injections.\n\
            Let [F, E; A] be a pairing whose left kernel E⊥ is zero, and let \
            F0 ⊆ F and E0 ⊆ E be submodules. Then the natural maps \
            S(E/F0⊥) -> F0* and S(E0⊥) -> (S(E/E0))* are both injective. \
            When the hypothesis fails, the checker names an open where the \
            left kernel is nonzero.",
        Tag::Thm2_5i => "Thm2.5i — non-degenerate pairings are dualities.\n\
            If a pairing [F, E; A] between modules of equal rank has zero left \
            and right kernels, the induced morphisms gamma: E -> F* and \
            delta: F -> E* are isomorphisms at every open. The check is \
            skipped (not failed) for degenerate pairings, which are the \
            subject of Thm2.5ii instead.",
        Tag::Thm2_5ii => "Thm2.5ii — the induced pairing on kernel quotients.\n\
            Any pairing [F, E; A] descends to a pairing between the sheafified \
            quotients S(F/E⊥) and S(E/F⊥) by its own kernels, and the \
            descended pairing is non-degenerate: both of its kernels vanish. \
            The pass detail reports the stalk ranks of the two quotients.",
    }
}

pub fn known_tags() -> String {
    ALL_TAGS
        .iter()
        .map(|t| t.label())
        .collect::<Vec<_>>()
        .join(", ")
}
