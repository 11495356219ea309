use std::collections::BTreeSet;
use std::sync::Arc;

use quill_core::eval::{audit, run_and_audit, ETerm, Outcome, Shape, Value, ViolationKind, DEFAULT_BUDGET};
use quill_core::generate::{well_typed, PRELUDE};
use quill_core::infer::instance_of;
use quill_core::pretty::term_to_string;
use quill_core::sdcheck::check_program;
use quill_core::{infer_program, parse_program, Kind, Predicate, Preds, Type, TypeVar};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn run(src: &str) -> (Outcome, quill_core::eval::AuditReport) {
    let elab = infer_program(&parse_program(src).unwrap()).unwrap();
    run_and_audit(&elab, "main", DEFAULT_BUDGET, false).unwrap()
}

fn indices(vs: &[Arc<Value>]) -> Vec<usize> {
    let mut v: Vec<usize> = vs.iter().map(|v| v.index).collect();
    v.sort();
    v
}

#[test]
fn lambda_introduces_one_value() {
    let (o, r) = run("def main = \\x -> x;");
    assert_eq!(o.value.index, 0);
    assert_eq!(indices(&o.introduced), vec![0]);
    assert!(o.eliminated.is_empty());
    assert!(r.discarded.is_empty() && r.duplicated.is_empty());
}

#[test]
fn application_eliminates_the_function() {
    let (o, r) = run("def main = (\\x -> x) (\\y -> y);");
    assert_eq!(o.value.index, 1);
    assert_eq!(indices(&o.introduced), vec![0, 1]);
    assert_eq!(indices(&o.eliminated), vec![0]);
    assert!(r.discarded.is_empty() && r.duplicated.is_empty() && r.violations.is_empty());
}

#[test]
fn case_eliminates_the_scrutinee() {
    let (o, _) = run("def main = case inl (\\z -> z) of { inl a -> a ; inr b -> b };");
    assert!(matches!(o.value.shape, Shape::Lam { .. }));
    let inl = o.introduced.iter().find(|v| matches!(v.shape, Shape::Inl(_))).unwrap();
    assert!(o.eliminated.iter().any(|v| v.index == inl.index));
}

#[test]
fn retained_values_include_nested_ones() {
    let (o, _) = run("def main = (\\x -> x) (inl (\\y -> y));");
    let mut out = Vec::new();
    o.value.subvalues(&mut out);
    assert_eq!(indices(&out), vec![1, 2]);
    assert_eq!(o.value.render(true), "inl#2 <fun#1>");
}

fn lam(index: usize, ty: Type) -> Arc<Value> {
    let body = Arc::new(ETerm::Local("x".into()));
    Arc::new(Value { index, ty, shape: Shape::Lam { binder: "x".into(), body } })
}

#[test]
fn audit_flags_a_discarded_token() {
    let program = parse_program("con MkTok : (exists u. u) ->* Tok;").unwrap();
    let sigs = program.signatures();
    let t = Type::Var(TypeVar::new("t", Kind::Star));
    let payload = lam(7, Type::lin(t.clone(), t.clone()));
    let tok = Arc::new(Value {
        index: 0,
        ty: Type::Con("Tok".into(), Kind::Star),
        shape: Shape::Con("MkTok".into(), payload),
    });
    let result = lam(1, Type::un(t.clone(), t));
    let outcome = Outcome {
        value: result.clone(),
        introduced: vec![tok, result],
        eliminated: vec![],
        steps: 2,
        trace: vec![],
        constraints: Preds::new(),
        assumed: Preds::new(),
        existentials: BTreeSet::new(),
    };
    let report = audit(&sigs, &outcome, &BTreeSet::new());
    assert_eq!(report.discarded, vec![0]);
    assert_eq!(report.violations.len(), 1);
    assert_eq!(report.violations[0].kind, ViolationKind::Discarded);
    assert_eq!(report.violations[0].index, 0);
}

#[test]
fn audit_accepts_discarded_unrestricted_values() {
    let sigs = quill_core::Signatures::new();
    let t = TypeVar::new("t", Kind::Star);
    let dropped = lam(0, Type::Var(t.clone()));
    let result = lam(1, Type::un(Type::Var(t.clone()), Type::Var(t.clone())));
    let outcome = Outcome {
        value: result.clone(),
        introduced: vec![dropped, result],
        eliminated: vec![],
        steps: 2,
        trace: vec![],
        constraints: Preds::new(),
        assumed: [Predicate::Un(Type::Var(t.clone()))].into_iter().collect(),
        existentials: BTreeSet::new(),
    };
    let external: BTreeSet<TypeVar> = [t].into_iter().collect();
    let report = audit(&sigs, &outcome, &external);
    assert_eq!(report.discarded, vec![0]);
    assert!(report.violations.is_empty());
}

#[test]
fn generated_terms_evaluate_safely() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let samples = well_typed(&mut rng, 200, 6, 100_000);
    assert_eq!(samples.len(), 200);
    for s in &samples {
        let (o, r) = run_and_audit(&s.elaboration, "main", DEFAULT_BUDGET, false).unwrap();
        let intro = indices(&o.introduced);
        let distinct: BTreeSet<usize> = intro.iter().copied().collect();
        assert_eq!(distinct.len(), intro.len(), "indices reused in {}", s.source);
        assert!(o.eliminated.iter().all(|v| distinct.contains(&v.index)), "E not within I in {}", s.source);
        assert!(r.violations.is_empty(), "{}: {:?}", s.source, r.violations);

        // The result value has the type of the program it came from.
        let value_src = format!("{PRELUDE}def value = {};\n", term_to_string(&o.value.to_term()));
        let elab = infer_program(&parse_program(&value_src).unwrap())
            .unwrap_or_else(|e| panic!("value of {} does not type: {e}\n{value_src}", s.source));
        check_program(&elab).unwrap();
        let main = &s.elaboration.def("main").unwrap().scheme;
        let value = &elab.def("value").unwrap().scheme;
        assert!(instance_of(&elab.signatures, value, main), "{}\n{value_src}", s.source);
    }
}
