//! End-to-end acceptance suite: every numbered criterion runs over seeded
//! random instances and prints a single pass/fail line. All arithmetic is
//! exact; every comparison is equality, never a tolerance.

use rand::Rng;
use sheafmod::instances as gen;
use sheafmod::{
    dual_basis, duality_injections, hom_dual, induced_quotient_pairing, is_complete,
    is_complete_sub, second_isomorphism, sheafify, sheafify_morphism, sheafify_pairing,
    verify_orthogonal_completeness, verify_product_lemma, verify_rank_identities,
    verify_sum_completeness, Completeness, Field, Mat, ModulePresheaf, OpenSet, Outcome,
    OrthogonalVerdict, Scalar, StructureSheaf, SubmodulePresheaf, Subspace,
};
use std::sync::Arc;

fn criterion(n: usize, name: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("criterion {n} ({name}): PASS"),
        Err(msg) => {
            println!("criterion {n} ({name}): FAIL — {msg}");
            panic!("criterion {n} ({name}) failed: {msg}");
        }
    }
}

fn random_open(r: &mut gen::Seeded, p: &ModulePresheaf) -> OpenSet {
    let opens: Vec<OpenSet> = p.space().opens().collect();
    opens[r.random_range(0..opens.len())]
}

fn random_section(r: &mut gen::Seeded, p: &ModulePresheaf, u: OpenSet) -> Vec<Scalar> {
    (0..p.dim(u))
        .map(|_| gen::random_scalar(r, p.field()))
        .collect()
}

fn unit_iso_everywhere(p: &ModulePresheaf) -> Result<bool, String> {
    let sf = sheafify(p).map_err(|e| e.to_string())?;
    Ok(p.space().opens().all(|u| {
        let m = sf.unit().map(u);
        m.rows() == m.cols() && m.rank() == m.rows()
    }))
}

#[test]
fn criterion_01_second_isomorphism() {
    criterion(1, "second isomorphism theorem", || {
        let mut r = gen::rng(101);
        for trial in 0..100 {
            let field = gen::random_field(&mut r);
            let st = gen::random_structure(&mut r, field, 4);
            let e = ModulePresheaf::free(st, r.random_range(1..=3));
            let f = if trial % 2 == 0 {
                gen::random_constant_submodule(&mut r, &e)
            } else {
                gen::random_submodule(&mut r, &e)
            };
            let g = if trial % 3 == 0 {
                gen::random_constant_submodule(&mut r, &e)
            } else {
                gen::random_submodule(&mut r, &e)
            };
            let rep = second_isomorphism(&f, &g).map_err(|e| format!("trial {trial}: {e}"))?;
            if !rep.is_iso {
                return Err(format!("trial {trial}: canonical map is not an isomorphism"));
            }
            for u in e.space().opens() {
                if rep.map.source().dim(u) != rep.map.target().dim(u) {
                    return Err(format!("trial {trial}: section dimensions differ at {}", u.0));
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_02_sum_completeness() {
    criterion(2, "sum presheaf completeness", || {
        let mut r = gen::rng(202);
        for trial in 0..100 {
            let field = gen::random_field(&mut r);
            let st = gen::random_structure(&mut r, field, 4);
            let e = ModulePresheaf::free(st, r.random_range(1..=4));
            let f = gen::random_constant_submodule(&mut r, &e);
            let g = gen::random_constant_submodule(&mut r, &e);
            match verify_sum_completeness(&f, &g).map_err(|e| e.to_string())? {
                Completeness::Complete => {}
                other => return Err(format!("trial {trial}: sum not complete: {other:?}")),
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_03_rank_theorem() {
    criterion(3, "rank theorem and chain additivity", || {
        let mut r = gen::rng(303);
        let mut held = 0;
        let mut skipped = 0;
        for trial in 0..100 {
            let field = gen::random_field(&mut r);
            let st = gen::random_structure(&mut r, field, 4);
            let e = ModulePresheaf::free(st, r.random_range(1..=4));
            let constant = trial % 2 == 0;
            let (f, g) = if constant {
                (
                    gen::random_constant_submodule(&mut r, &e),
                    gen::random_constant_submodule(&mut r, &e),
                )
            } else {
                (
                    gen::random_submodule(&mut r, &e),
                    gen::random_submodule(&mut r, &e),
                )
            };
            let report = verify_rank_identities(&f, &g).map_err(|e| e.to_string())?;
            for (label, o) in [
                ("rank-nullity", &report.rank_nullity),
                ("modular", &report.modular),
                ("comodular", &report.comodular),
                ("chain", &report.chain_additivity),
            ] {
                match o {
                    Outcome::Holds => held += 1,
                    Outcome::Skipped(_) => skipped += 1,
                    Outcome::Fails { component } => {
                        return Err(format!(
                            "trial {trial}: {label} identity fails on component {component}"
                        ))
                    }
                }
            }
            if constant && !report.all_hold() {
                return Err(format!(
                    "trial {trial}: constant-rank submodules must never be skipped: {report:?}"
                ));
            }
        }
        if held < 200 || skipped == 0 {
            return Err(format!(
                "suite not exercised as intended: held={held} skipped={skipped}"
            ));
        }
        Ok(())
    });
}

#[test]
fn criterion_04_dual_dimensions_and_bases() {
    criterion(4, "dual dimensions, dual bases, uniqueness", || {
        let mut r = gen::rng(404);
        // dim E*(U) = dim E(U) for ranks 0..4 over all opens
        for n in 0..=4 {
            let field = gen::random_field(&mut r);
            let st = gen::random_structure(&mut r, field, 4);
            let e = ModulePresheaf::free(st, n);
            let d = hom_dual(&e).map_err(|e| e.to_string())?;
            for u in e.space().opens() {
                if d.module().dim(u) != e.dim(u) {
                    return Err(format!("rank {n}: dual dimension differs at open {}", u.0));
                }
            }
        }
        // 100 random bases: φ_i(s_j) = δ_ij exactly, and uniqueness via a
        // zero kernel of the defining evaluation system
        for trial in 0..100 {
            let field = gen::random_field(&mut r);
            let st = gen::random_structure(&mut r, field, 4);
            let n = r.random_range(1..=3);
            let e = ModulePresheaf::free(st, n);
            let space = e.space();
            let u = space.whole_open();
            let comps = space.n_components(u);
            let blocks: Vec<Mat> = (0..comps)
                .map(|_| gen::random_invertible(&mut r, field, n))
                .collect();
            let sections: Vec<Vec<Scalar>> = (0..n)
                .map(|i| {
                    blocks
                        .iter()
                        .flat_map(|b| b.row(i).to_vec())
                        .collect()
                })
                .collect();
            let d = hom_dual(&e).map_err(|e| e.to_string())?;
            let phis = dual_basis(&d, u, &sections).map_err(|e| e.to_string())?;
            let ev = d.evaluation_pairing().map_err(|e| e.to_string())?;
            for (i, phi) in phis.iter().enumerate() {
                for (j, s) in sections.iter().enumerate() {
                    let vals = ev.evaluate(u, phi, s).map_err(|e| e.to_string())?;
                    let want = if i == j { field.one() } else { field.zero() };
                    if vals.iter().any(|v| *v != want) {
                        return Err(format!("trial {trial}: φ_{i}(s_{j}) ≠ δ"));
                    }
                }
            }
            // defining system: a functional vanishing on every s_j is zero
            let dim_dual = d.module().dim(u);
            let mut rows = Vec::new();
            for k in 0..dim_dual {
                let mut unit = vec![field.zero(); dim_dual];
                unit[k] = field.one();
                let mut row = Vec::new();
                for s in &sections {
                    row.extend(ev.evaluate(u, &unit, s).map_err(|e| e.to_string())?);
                }
                rows.push(row);
            }
            let system = Mat::from_rows(field, rows).map_err(|e| e.to_string())?;
            if system.rank() != dim_dual {
                return Err(format!("trial {trial}: dual basis is not unique"));
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_05_orthogonality() {
    criterion(5, "orthogonal completeness, bi-orthogonality, γ/δ kernels", || {
        let mut r = gen::rng(505);
        for trial in 0..100 {
            let field = gen::random_field(&mut r);
            let st = gen::random_structure(&mut r, field, 4);
            let p = match trial % 3 {
                0 => gen::random_nondegenerate_pairing(&mut r, st, 3),
                1 => gen::random_degenerate_pairing(&mut r, st, 3),
                _ => {
                    let m = r.random_range(0..=3);
                    let n = r.random_range(0..=3);
                    gen::random_pairing(&mut r, st, m, n, None)
                }
            };
            let e0 = gen::random_constant_submodule(&mut r, p.e());
            let orth = p.orthogonal_in_f(&e0).map_err(|e| e.to_string())?;
            if !is_complete_sub(&orth).map_err(|e| e.to_string())?.is_complete() {
                return Err(format!("trial {trial}: orthogonal presheaf not complete"));
            }
            let biorth = p.orthogonal_in_e(
                &p.orthogonal_in_f(&e0).map_err(|e| e.to_string())?,
            )
            .map_err(|e| e.to_string())?;
            if !biorth.contains(&e0).map_err(|e| e.to_string())? {
                return Err(format!("trial {trial}: E₀ ⊄ E₀⊥⊥"));
            }
            let (_, gamma) = p.gamma().map_err(|e| e.to_string())?;
            let (_, delta) = p.delta().map_err(|e| e.to_string())?;
            let kg = gamma.kernel_presheaf().map_err(|e| e.to_string())?;
            let kd = delta.kernel_presheaf().map_err(|e| e.to_string())?;
            let rk = p.right_kernel().map_err(|e| e.to_string())?;
            let lk = p.left_kernel().map_err(|e| e.to_string())?;
            let eq = |a: &SubmodulePresheaf, b: &SubmodulePresheaf| -> Result<bool, String> {
                Ok(a.contains(b).map_err(|e| e.to_string())?
                    && b.contains(a).map_err(|e| e.to_string())?)
            };
            if !eq(&kg, &rk)? {
                return Err(format!("trial {trial}: ker γ ≠ F⊥"));
            }
            if !eq(&kd, &lk)? {
                return Err(format!("trial {trial}: ker δ ≠ E⊥"));
            }
            match verify_orthogonal_completeness(&p, &e0).map_err(|e| e.to_string())? {
                OrthogonalVerdict::Holds | OrthogonalVerdict::NotAPresheaf { .. } => {}
                other => return Err(format!("trial {trial}: orthogonal audit: {other:?}")),
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_06_product_lemma() {
    criterion(6, "sheafification commutes with products", || {
        let mut r = gen::rng(606);
        for trial in 0..100 {
            let field = gen::random_field(&mut r);
            let n_points = r.random_range(3..=5);
            let st = gen::random_structure(&mut r, field, n_points);
            let p = gen::random_presheaf(&mut r, st.clone(), 3);
            let q = gen::random_presheaf(&mut r, st, 3);
            if !verify_product_lemma(&p, &q).map_err(|e| e.to_string())? {
                return Err(format!("trial {trial}: product comparison map not bijective"));
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_07_sheafified_pairing_extends_values() {
    criterion(7, "sheafified pairing agrees on unit images", || {
        let mut r = gen::rng(707);
        for trial in 0..100 {
            let field = gen::random_field(&mut r);
            let st = gen::random_structure(&mut r, field, 4);
            let f = gen::random_presheaf(&mut r, st.clone(), 2);
            let e = gen::random_presheaf(&mut r, st, 2);
            let b = gen::random_bilinear(&mut r, &f, &e).map_err(|e| e.to_string())?;
            let (sf_f, sf_e, pairing) = sheafify_pairing(&b).map_err(|e| e.to_string())?;
            for _ in 0..50 {
                let u = random_open(&mut r, &f);
                let t = random_section(&mut r, &f, u);
                let s = random_section(&mut r, &e, u);
                let tt = sf_f.unit().apply(u, &t).map_err(|e| e.to_string())?;
                let ss = sf_e.unit().apply(u, &s).map_err(|e| e.to_string())?;
                let lhs = pairing.evaluate(u, &tt, &ss).map_err(|e| e.to_string())?;
                let rhs = b.evaluate(u, &t, &s).map_err(|e| e.to_string())?;
                if lhs != rhs {
                    return Err(format!("trial {trial}: Φ̄(t̃, s̃) ≠ φ(t, s) at open {}", u.0));
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_08_orthogonal_commutes_with_sheafification() {
    criterion(8, "orthogonal of sheafification = sheafification of orthogonal", || {
        let mut r = gen::rng(808);
        let mut done = 0;
        let mut attempts = 0;
        while done < 100 {
            attempts += 1;
            if attempts > 1000 {
                return Err(format!("only {done} usable instances in 1000 attempts"));
            }
            let field = gen::random_field(&mut r);
            let st = gen::random_structure(&mut r, field, 4);
            let f = gen::random_presheaf(&mut r, st.clone(), 2);
            let e = gen::random_presheaf(&mut r, st, 2);
            let b = gen::random_bilinear(&mut r, &f, &e).map_err(|e| e.to_string())?;
            // per-open left kernel of the presheaf-level data
            let space = f.space();
            let mut parts = Vec::with_capacity(space.n_opens());
            for u in space.opens() {
                let row: Vec<Subspace> = b.mats[u.0]
                    .iter()
                    .map(|m| Subspace::from_rows(&m.transpose().kernel_basis()))
                    .collect();
                parts.push(row);
            }
            // the lemma assumes the per-open orthogonal is a presheaf;
            // instances where it is not are skipped, not failed
            let l = match SubmodulePresheaf::from_parts(f.clone(), parts) {
                Ok(l) => l,
                Err(_) => continue,
            };
            done += 1;
            let (l_mod, incl) = l.to_presheaf().map_err(|e| e.to_string())?;
            let sf_l = sheafify(&l_mod).map_err(|e| e.to_string())?;
            let sf_f = sheafify(&f).map_err(|e| e.to_string())?;
            let lifted =
                sheafify_morphism(&incl, &sf_l, &sf_f).map_err(|e| e.to_string())?;
            let (_, _, pairing) = sheafify_pairing(&b).map_err(|e| e.to_string())?;
            let k = pairing.left_kernel().map_err(|e| e.to_string())?;
            for u in space.opens() {
                let m = lifted.map(u);
                if m.rank() != m.cols() {
                    return Err(format!("instance {done}: S(E⊥) → S(F) not injective at {}", u.0));
                }
                let target = k.flat(u);
                if target.dim() != m.cols() {
                    return Err(format!(
                        "instance {done}: dim S(E⊥)({}) = {} but dim S(E)⊥({}) = {}",
                        u.0,
                        m.cols(),
                        u.0,
                        target.dim()
                    ));
                }
                let cols = m.transpose();
                for i in 0..cols.rows() {
                    if !target.contains_vec(cols.row(i)) {
                        return Err(format!(
                            "instance {done}: image of S(E⊥) leaves S(E)⊥ at open {}",
                            u.0
                        ));
                    }
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_09_induced_quotient_pairing() {
    criterion(9, "non-degeneracy facts and induced quotient pairings", || {
        let mut r = gen::rng(909);
        // non-degenerate: equal ranks, γ and δ invertible at every open
        for trial in 0..100 {
            let field = gen::random_field(&mut r);
            let st = gen::random_structure(&mut r, field, 4);
            let p = gen::random_nondegenerate_pairing(&mut r, st, 3);
            let whole = p.f().space().whole_open();
            if p.f().dim(whole) != p.e().dim(whole) {
                return Err(format!("trial {trial}: non-degenerate with m ≠ n"));
            }
            for (_, phi) in [
                p.gamma().map_err(|e| e.to_string())?,
                p.delta().map_err(|e| e.to_string())?,
            ] {
                for u in p.f().space().opens() {
                    let m = phi.map(u);
                    if m.rows() != m.cols() || m.rank() != m.rows() {
                        return Err(format!("trial {trial}: duality map singular at {}", u.0));
                    }
                }
            }
        }
        // canonical hand example: M = diag(1, 0) on rank 2 × rank 2
        {
            let space = sheafmod::topo::sierpinski();
            let st = StructureSheaf::new(Arc::new(space), Field::Rational);
            let f = ModulePresheaf::free(st.clone(), 2);
            let e = ModulePresheaf::free(st, 2);
            let m = Mat::from_i64(Field::Rational, &[&[1, 0], &[0, 0]]);
            let p = sheafmod::Pairing::new(f.clone(), e, vec![m.clone(), m])
                .map_err(|e| e.to_string())?;
            let induced = induced_quotient_pairing(&p).map_err(|e| e.to_string())?;
            for u in f.space().opens() {
                if u == f.space().empty_open() {
                    continue;
                }
                if induced.qf.sheaf().dim(u) != 1 || induced.qe.sheaf().dim(u) != 1 {
                    return Err("diag(1,0): quotients must have rank 1".into());
                }
            }
            let one = Mat::from_i64(Field::Rational, &[&[1]]);
            for x in 0..2 {
                if *induced.pairing.point_mat(x) != one {
                    return Err("diag(1,0): induced stalk matrix must be (1)".into());
                }
            }
            if induced.pairing.is_degenerate().map_err(|e| e.to_string())? {
                return Err("diag(1,0): induced pairing must be non-degenerate".into());
            }
        }
        // 100 random degenerate pairings: induced kernels vanish everywhere
        for trial in 0..100 {
            let field = gen::random_field(&mut r);
            let st = gen::random_structure(&mut r, field, 4);
            let p = gen::random_degenerate_pairing(&mut r, st, 3);
            let induced = induced_quotient_pairing(&p).map_err(|e| e.to_string())?;
            let lk = induced.pairing.left_kernel().map_err(|e| e.to_string())?;
            let rk = induced.pairing.right_kernel().map_err(|e| e.to_string())?;
            if !lk.is_zero() || !rk.is_zero() {
                return Err(format!("trial {trial}: induced pairing still degenerate"));
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_10_duality_injections() {
    criterion(10, "injections into duals for zero left kernel", || {
        let mut r = gen::rng(1010);
        for trial in 0..100 {
            let field = gen::random_field(&mut r);
            let st = gen::random_structure(&mut r, field, 4);
            let p = gen::random_left_injective_pairing(&mut r, st, 3);
            let f0 = gen::random_constant_submodule(&mut r, p.f());
            let e0 = gen::random_constant_submodule(&mut r, p.e());
            let inj = duality_injections(&p, &f0, &e0).map_err(|e| e.to_string())?;
            if !inj.quotient_injective || !inj.orthogonal_injective {
                return Err(format!("trial {trial}: a duality map fails injectivity"));
            }
            // the right kernel of the induced sub-pairing is zero: the map
            // S(E/F₀⊥) → F₀* has full column rank at every open
            for u in p.f().space().opens() {
                let m = inj.quotient_to_dual.map(u);
                if m.rank() != m.cols() {
                    return Err(format!("trial {trial}: F̂₀ ≠ 0 at open {}", u.0));
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_11_sheafification_characterization() {
    criterion(11, "unit iso ⟺ complete, plus idempotence", || {
        let mut r = gen::rng(1111);
        for trial in 0..100 {
            let field = gen::random_field(&mut r);
            let st = gen::random_structure(&mut r, field, 4);
            let p = gen::random_presheaf(&mut r, st, 3);
            let complete = is_complete(&p).map_err(|e| e.to_string())?.is_complete();
            let unit_iso = unit_iso_everywhere(&p)?;
            if complete != unit_iso {
                return Err(format!(
                    "trial {trial}: complete={complete} but unit iso={unit_iso}"
                ));
            }
            let sheaf = sheafify(&p).map_err(|e| e.to_string())?;
            if !unit_iso_everywhere(sheaf.sheaf())? {
                return Err(format!("trial {trial}: sheafification not idempotent"));
            }
        }
        // the standard incomplete example: constant dimension 1 on two
        // discrete points has a two-dimensional space of compatible families
        let st = StructureSheaf::new(Arc::new(sheafmod::topo::discrete2()), Field::Rational);
        let p = ModulePresheaf::constant(st, 1);
        let sf = sheafify(&p).map_err(|e| e.to_string())?;
        let whole = p.space().whole_open();
        if sf.sheaf().dim(whole) != 2 {
            return Err("discrete example: global sections of S must have dimension 2".into());
        }
        Ok(())
    });
}

// The generated instances include genuinely incomplete and degenerate
// cases; this guards the suites above against silently testing trivia only.
#[test]
fn generated_corpora_are_nontrivial() {
    let mut r = gen::rng(4242);
    let mut incomplete = 0;
    let mut degenerate = 0;
    for _ in 0..60 {
        let field = gen::random_field(&mut r);
        let st = gen::random_structure(&mut r, field, 4);
        let p = gen::random_presheaf(&mut r, st.clone(), 3);
        if !is_complete(&p).unwrap().is_complete() {
            incomplete += 1;
        }
        let pr = gen::random_degenerate_pairing(&mut r, st, 3);
        if pr.is_degenerate().unwrap() {
            degenerate += 1;
        }
    }
    assert!(incomplete >= 10, "only {incomplete} incomplete presheaves");
    assert_eq!(degenerate, 60);
}
