use std::collections::BTreeSet;

use proptest::prelude::*;
use quill_core::entail::improving_subst;
use quill_core::generate::{program_source, random_source, PRELUDE};
use quill_core::pretty::{program_to_string, scheme_to_string};
use quill_core::unify::mgu;
use quill_core::{
    canonicalize, instance_of, parse_program, EntailEnv, Kind, Predicate, Preds, QualType, Scheme, Signatures,
    Subst, Type, TypeVar, Types,
};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn sigs() -> Signatures {
    parse_program(PRELUDE).unwrap().signatures()
}

fn star(i: usize) -> TypeVar {
    TypeVar::new(format!("t{i}"), Kind::Star)
}

fn arrow_var(i: usize) -> TypeVar {
    TypeVar::new(format!("f{i}"), Kind::function())
}

fn head() -> impl Strategy<Value = Type> {
    prop_oneof![
        (0..2usize).prop_map(|i| Type::Var(arrow_var(i))),
        Just(Type::lin_con()),
        Just(Type::un_con()),
    ]
}

/// ⋆-kinded types over `vars` variables, arrows and the prelude datatypes.
fn ty(vars: usize) -> impl Strategy<Value = Type> {
    let leaf = prop_oneof![
        4 => (0..vars).prop_map(|i| Type::Var(star(i))),
        1 => Just(Type::Con("Tok".into(), Kind::Star)),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            3 => (head(), inner.clone(), inner.clone()).prop_map(|(h, a, b)| Type::arrow(h, a, b)),
            1 => (inner.clone(), inner.clone()).prop_map(|(a, b)| Type::sum(a, b)),
            1 => inner.clone().prop_map(|a| Type::app(Type::Con("Box".into(), Kind::arrow(Kind::Star, Kind::Star)), a)),
            1 => (inner.clone(), inner).prop_map(|(a, b)| {
                let mp = Type::Con("MP".into(), Kind::from_args(&[Kind::Star, Kind::Star]));
                Type::apps(mp, [a, b])
            }),
        ]
    })
}

fn pred(vars: usize) -> impl Strategy<Value = Predicate> {
    let rhs = prop_oneof![
        2 => (0..2usize).prop_map(|i| Type::Var(arrow_var(i))),
        1 => (head(), ty(vars), ty(vars)).prop_map(|(h, a, b)| Type::arrow(h, a, b)),
    ];
    prop_oneof![
        3 => ty(vars).prop_map(Predicate::Un),
        1 => (0..2usize).prop_map(|i| Predicate::Un(Type::Var(arrow_var(i)))),
        1 => (0..2usize).prop_map(|i| Predicate::Fun(Type::Var(arrow_var(i)))),
        3 => (ty(vars), rhs).prop_map(|(l, r)| Predicate::Geq(l, r)),
        1 => (0..2usize, 0..2usize)
            .prop_map(|(i, j)| Predicate::Geq(Type::Var(arrow_var(i)), Type::Var(arrow_var(j)))),
    ]
}

fn preds(vars: usize, max: usize) -> impl Strategy<Value = Preds> {
    prop::collection::btree_set(pred(vars), 0..=max)
}

/// Kind-respecting substitutions over the variable pool.
fn subst() -> impl Strategy<Value = Subst> {
    let stars = prop::collection::vec((0..4usize, ty(4)), 0..3);
    let arrows = prop::collection::vec((0..2usize, head()), 0..2);
    (stars, arrows).prop_map(|(s, a)| {
        let mut out = Subst::new();
        for (i, t) in s {
            out.insert(star(i), t);
        }
        for (i, h) in a {
            out.insert(arrow_var(i), h);
        }
        out
    })
}

/// Closes a qualified type over all of its variables, adding `Fun` for
/// arrow variables.
fn generalize(context: Preds, body: Type) -> Scheme {
    let mut context = context;
    let mut vars = body.ftv();
    context.ftv_into(&mut vars);
    for v in &vars {
        if v.kind.is_function() {
            context.insert(Predicate::Fun(Type::Var(v.clone())));
        }
    }
    Scheme { vars: vars.into_iter().collect(), qual: QualType { context, body } }
}

fn scheme() -> impl Strategy<Value = Scheme> {
    (ty(3), prop::collection::btree_set(pred(3), 0..3)).prop_map(|(b, c)| generalize(c, b))
}

fn instance(s: &Scheme, theta: &Subst) -> Scheme {
    generalize(s.qual.context.apply(theta), s.qual.body.apply(theta))
}

fn holds(env: &EntailEnv, p: &Predicate) -> bool {
    matches!(env.entails(p), Ok(true))
}

proptest! {
    #[test]
    fn compose_applies_right_then_left(a in subst(), b in subst(), t in ty(4)) {
        prop_assert_eq!(t.apply(&Subst::compose(&a, &b)), t.apply(&b).apply(&a));
    }

    #[test]
    fn compose_is_associative(a in subst(), b in subst(), c in subst(), t in ty(4)) {
        let left = Subst::compose(&Subst::compose(&a, &b), &c);
        let right = Subst::compose(&a, &Subst::compose(&b, &c));
        prop_assert_eq!(t.apply(&left), t.apply(&right));
    }

    #[test]
    fn identity_is_a_unit(a in subst(), t in ty(4)) {
        let id = Subst::new();
        prop_assert_eq!(t.apply(&Subst::compose(&id, &a)), t.apply(&a));
        prop_assert_eq!(t.apply(&Subst::compose(&a, &id)), t.apply(&a));
    }

    #[test]
    fn mgu_equalizes(a in ty(3), b in ty(3)) {
        if let Ok(s) = mgu(&BTreeSet::new(), &a, &b) {
            prop_assert_eq!(a.apply(&s), b.apply(&s));
            prop_assert!(s.is_idempotent());
        }
    }

    #[test]
    fn mgu_finds_instances(a in ty(3), theta in subst()) {
        // Any unifiable pair built by substitution must be unified.
        let b = a.apply(&theta);
        let fresh = a.ftv().into_iter().map(|v| {
            let renamed = TypeVar::new(format!("{}'", v.name), v.kind.clone());
            (v, Type::Var(renamed))
        });
        let a2 = a.apply(&Subst::from_pairs(fresh));
        prop_assert!(mgu(&BTreeSet::new(), &a2, &b).is_ok() || a2.ftv().iter().any(|v| b.occurs(v)));
    }

    #[test]
    fn mgu_of_equal_types_is_empty(a in ty(4)) {
        prop_assert!(mgu(&BTreeSet::new(), &a, &a).unwrap().is_empty());
    }

    #[test]
    fn mgu_never_binds_rigid_variables(a in ty(3), b in ty(3)) {
        let rigid: BTreeSet<TypeVar> = [star(0), arrow_var(0)].into_iter().collect();
        if let Ok(s) = mgu(&rigid, &a, &b) {
            prop_assert!(s.domain().all(|v| !rigid.contains(v)));
            prop_assert_eq!(a.apply(&s), b.apply(&s));
        }
    }

    #[test]
    fn canonicalize_is_idempotent(s in scheme()) {
        let once = canonicalize(&s);
        prop_assert_eq!(canonicalize(&once), once);
    }

    #[test]
    fn canonical_form_ignores_variable_names(s in scheme()) {
        let renaming = Subst::from_pairs(s.vars.iter().map(|v| {
            (v.clone(), Type::Var(TypeVar::new(format!("z_{}", v.name), v.kind.clone())))
        }));
        let renamed = Scheme {
            vars: s.vars.iter().map(|v| TypeVar::new(format!("z_{}", v.name), v.kind.clone())).collect(),
            qual: QualType { context: s.qual.context.apply(&renaming), body: s.qual.body.apply(&renaming) },
        };
        prop_assert_eq!(canonicalize(&renamed), canonicalize(&s));
    }

    #[test]
    fn instance_of_is_reflexive(s in scheme()) {
        prop_assert!(instance_of(&sigs(), &s, &s), "{}", scheme_to_string(&s));
    }

    #[test]
    fn instance_of_is_transitive(s in scheme(), a in subst(), b in subst()) {
        let sigs = sigs();
        let mid = instance(&s, &a);
        let last = instance(&mid, &b);
        if instance_of(&sigs, &s, &mid) && instance_of(&sigs, &mid, &last) {
            prop_assert!(instance_of(&sigs, &s, &last));
        }
    }

    #[test]
    fn substitution_instances_are_instances(s in scheme(), a in subst()) {
        let i = instance(&s, &a);
        prop_assert!(instance_of(&sigs(), &s, &i), "{} / {}", scheme_to_string(&s), scheme_to_string(&i));
    }

    #[test]
    fn printed_programs_parse_back(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let src = program_source(&random_source(&mut rng, 6));
        let p = parse_program(&src).unwrap();
        prop_assert_eq!(parse_program(&program_to_string(&p)).unwrap(), p);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn entailment_is_monotone(p in preds(4, 3), extra in preds(4, 2), goal in pred(4)) {
        let sigs = sigs();
        let env = EntailEnv::new(&sigs, p.clone());
        if holds(&env, &goal) {
            prop_assert!(holds(&env.with(extra), &goal));
        }
    }

    #[test]
    fn simplification_is_sound(p in preds(3, 3)) {
        let sigs = sigs();
        if let Ok(q) = EntailEnv::empty(&sigs).simplify(&p) {
            let env = EntailEnv::new(&sigs, q);
            prop_assert_eq!(env.entails_all(&p), Ok(true));
        }
    }

    #[test]
    fn improvement_preserves_satisfiability(p in preds(3, 3)) {
        let sigs = sigs();
        let env = EntailEnv::empty(&sigs);
        if let Ok(q) = env.simplify(&p) {
            let ambiguous: BTreeSet<TypeVar> = q.ftv().into_iter().filter(|v| v.kind.is_function()).collect();
            let s = improving_subst(&env, &q, &ambiguous);
            prop_assert!(env.simplify(&q.apply(&s)).is_ok());
        }
    }
}
