//! Property tests for the term engine: normalization is idempotent,
//! substitution application commutes with normalizing the images, and
//! composition is exactly sequential application.

use std::sync::OnceLock;

use proptest::collection::{btree_map, vec};
use proptest::prelude::*;
use proptest::sample::select;
use spv_calculus::{NameId, Subst, SymId, Term, Theory, VarId};

mod common;

struct Fixture {
    theory: Theory,
    syms: Vec<(SymId, usize)>,
    atoms: Vec<NameId>,
    vars: Vec<VarId>,
}

fn fx() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let mut plan = common::plan();
        let syms = ["pk", "enc", "commit", "sign", "key", "host", "dec", "open", "hash"]
            .iter()
            .map(|ident| {
                let id = common::sym(&plan, ident);
                (id, plan.tab.symbol(id).arity)
            })
            .collect();
        let atoms = ["m", "sk", "a", "b", "c"]
            .iter()
            .map(|ident| plan.tab.lookup_name(ident).unwrap())
            .collect();
        let vars = (0..5)
            .map(|i| plan.tab.fresh_var(&format!("v{i}")))
            .collect();
        Fixture {
            theory: plan.theory,
            syms,
            atoms,
            vars,
        }
    })
}

/// Open terms of depth ≤ 4 over the fixture signature: leaves are free names
/// or variables, inner nodes random constructor/destructor applications.
fn term_strategy() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        select(fx().atoms.clone()).prop_map(Term::Name),
        select(fx().vars.clone()).prop_map(Term::Var),
    ];
    leaf.prop_recursive(4, 48, 3, |inner| {
        select(fx().syms.clone()).prop_flat_map(move |(f, arity)| {
            vec(inner.clone(), arity).prop_map(move |args| Term::App(f, args))
        })
    })
}

fn subst_strategy() -> impl Strategy<Value = Subst> {
    btree_map(select(fx().vars.clone()), term_strategy(), 0..=4)
        .prop_map(|m| m.into_iter().collect())
}

proptest! {
    #[test]
    fn normalize_is_idempotent(t in term_strategy()) {
        let theory = &fx().theory;
        let once = theory.normalize(&t).unwrap();
        prop_assert_eq!(theory.normalize(&once).unwrap(), once);
    }

    /// Normalizing a substitution's images before applying it cannot change
    /// the normal form of the result.
    #[test]
    fn apply_commutes_with_normalizing_the_images(
        s in subst_strategy(),
        t in term_strategy(),
    ) {
        let theory = &fx().theory;
        let s_norm: Subst = s
            .iter()
            .map(|(v, img)| (*v, theory.normalize(img).unwrap()))
            .collect();
        prop_assert_eq!(
            theory.normalize(&s.apply(&t)).unwrap(),
            theory.normalize(&s_norm.apply(&t)).unwrap()
        );
    }

    #[test]
    fn composition_is_sequential_application(
        s1 in subst_strategy(),
        s2 in subst_strategy(),
        t in term_strategy(),
    ) {
        prop_assert_eq!(s1.compose(&s2).apply(&t), s2.apply(&s1.apply(&t)));
    }
}
