//! Acceptance criteria, one report line each. Runs without the libtest
//! harness so the report is always printed.

use std::collections::BTreeSet;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use quill_cli::corpus::{corpus, Expect, Group, CONSERVATIVE};
use quill_cli::driver::run_entry;
use quill_core::eval::{audit, run_and_audit, ETerm, Outcome, Shape, Value, DEFAULT_BUDGET};
use quill_core::generate::{well_typed, Sample, PRELUDE};
use quill_core::sdcheck::check_program;
use quill_core::{
    canonicalize, infer_program, instance_of, parse_program, parse_scheme, EntailEnv, Kind, Predicate, Preds,
    Signatures, Type, TypeVar, Types,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const GENERATED_TERMS: usize = 500;
const MAX_TERM_DEPTH: usize = 6;
const SOUNDNESS_TIME_LIMIT: Duration = Duration::from_secs(60);
const MIN_CONSERVATIVE: usize = 30;
const MIN_NEGATIVE: usize = 6;
const ENTAILMENT_TRIALS: usize = 1000;
const SEED: u64 = 0x0051_11ed;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// Principal types in the notation of the literature: bare arrows stand for
/// fresh arrow variables, `-f>` for `f` with `Fun f`.
const GOLDEN_SHAPES: [(&str, &str); 6] = [
    ("K combinator", "(Un u, t >= f) => t -> u -f> t"),
    ("curried application", "(f >= g) => (t -f> u) -> t -g> u"),
    ("curried pair", "(t >= f) => t -> u -f> MP t u"),
    ("uncurried application", "MP (t -> u) t -> u"),
    ("identity", "(Fun f) => f t t"),
    ("flip const", "(Un t) => t -> u -> u"),
];

fn golden_types() -> Verdict {
    let mut exact = 0;
    let mut equivalent = 0;
    let mut problems = Vec::new();
    for (name, shape) in GOLDEN_SHAPES {
        let entry = corpus().into_iter().find(|e| e.name == name).expect("golden entry");
        let Expect::Scheme { def, .. } = entry.expect else { unreachable!() };
        match run_entry(&entry) {
            None => exact += 1,
            Some(p) => problems.push(format!("{name}: {p}")),
        }
        let Ok(elab) = infer_program(&parse_program(&entry.source).unwrap()) else { continue };
        let inferred = &elab.def(def).unwrap().scheme;
        let expected = parse_scheme(shape, &elab.signatures).expect("shape parses");
        if instance_of(&elab.signatures, inferred, &expected) && instance_of(&elab.signatures, &expected, inferred) {
            equivalent += 1;
        } else {
            problems.push(format!("{name}: not equivalent to {shape}"));
        }
    }
    let n = GOLDEN_SHAPES.len();
    verdict(
        exact == n && equivalent == n,
        format!("{exact}/{n} exact canonical matches, {equivalent}/{n} equivalent to the expected shape {}", problems.join("; ")),
    )
}

fn ambiguous_arrows(scheme: &quill_core::Scheme) -> usize {
    let body = scheme.qual.body.ftv();
    scheme.vars.iter().filter(|v| v.kind.is_function() && !body.contains(*v)).count()
}

fn ambiguity() -> Verdict {
    let src = "def a = let y = \\w -> w in (\\x -> x) y;\ndef b = \\z -> let y = \\w -> w in (\\x -> x) y z;\n";
    let elab = infer_program(&parse_program(src).unwrap()).unwrap();
    let mut residual: usize = elab.defs.iter().map(|d| ambiguous_arrows(&d.scheme)).sum();
    let id = parse_scheme("(Fun f) => f t t", &elab.signatures).unwrap();
    let examples_ok = elab.defs.iter().all(|d| canonicalize(&d.scheme) == canonicalize(&id));
    let mut defs = 0;
    for e in corpus() {
        if let Ok(elab) = infer_program(&parse_program(&e.source).unwrap()) {
            for d in &elab.defs {
                defs += 1;
                residual += ambiguous_arrows(&d.scheme);
            }
        }
    }
    verdict(
        residual == 0 && examples_ok,
        format!("{residual} ambiguous arrow variables over {defs} corpus definitions; let-bound identity examples reduce to the identity type: {examples_ok}"),
    )
}

fn soundness(samples: &[Sample], generation: Duration) -> Verdict {
    let start = Instant::now();
    let (mut corpus_checked, mut corpus_ok, mut generated_ok) = (0, 0, 0);
    let mut failures = Vec::new();
    for e in corpus() {
        let Ok(elab) = infer_program(&parse_program(&e.source).unwrap()) else { continue };
        corpus_checked += 1;
        match check_program(&elab) {
            Ok(()) => corpus_ok += 1,
            Err(err) => failures.push(format!("{}: {}", e.name, err.msg)),
        }
    }
    for s in samples {
        match check_program(&s.elaboration) {
            Ok(()) => generated_ok += 1,
            Err(err) => failures.push(format!("{}: {}", s.source.lines().last().unwrap(), err.msg)),
        }
    }
    let elapsed = start.elapsed() + generation;
    verdict(
        failures.is_empty() && generated_ok == GENERATED_TERMS && elapsed < SOUNDNESS_TIME_LIMIT,
        format!(
            "checker accepted {corpus_ok}/{corpus_checked} corpus and {generated_ok}/{GENERATED_TERMS} generated elaborations \
             (depth <= {MAX_TERM_DEPTH}) in {:.1}s including generation (limit {}s) {}",
            elapsed.as_secs_f64(),
            SOUNDNESS_TIME_LIMIT.as_secs(),
            failures.join("; ")
        ),
    )
}

fn conservativity() -> Verdict {
    let entries: Vec<_> = corpus().into_iter().filter(|e| e.group == Group::Conservative).collect();
    let failures: Vec<String> = entries
        .iter()
        .filter_map(|e| infer_program(&parse_program(&e.source).unwrap()).err().map(|err| format!("{}: {err}", e.name)))
        .collect();
    verdict(
        failures.is_empty() && entries.len() >= MIN_CONSERVATIVE && CONSERVATIVE.len() == entries.len(),
        format!("{}/{} non-linear terms inferred (minimum {MIN_CONSERVATIVE}) {}", entries.len() - failures.len(), entries.len(), failures.join("; ")),
    )
}

fn token_control() -> bool {
    let sigs = parse_program("con MkTok : (exists u. u) ->* Tok;").unwrap().signatures();
    let t = Type::Var(TypeVar::new("t", Kind::Star));
    let body = Arc::new(ETerm::Local("x".into()));
    let payload =
        Arc::new(Value { index: 1, ty: Type::lin(t.clone(), t.clone()), shape: Shape::Lam { binder: "x".into(), body } });
    let tok = Arc::new(Value {
        index: 0,
        ty: Type::Con("Tok".into(), Kind::Star),
        shape: Shape::Con("MkTok".into(), payload),
    });
    let other = Arc::new(Value {
        index: 2,
        ty: Type::un(t.clone(), t),
        shape: Shape::Lam { binder: "y".into(), body: Arc::new(ETerm::Local("y".into())) },
    });
    let outcome = Outcome {
        value: other.clone(),
        introduced: vec![tok, other],
        eliminated: vec![],
        steps: 2,
        trace: vec![],
        constraints: Preds::new(),
        assumed: Preds::new(),
        existentials: BTreeSet::new(),
    };
    let report = audit(&sigs, &outcome, &BTreeSet::new());
    report.violations.len() == 1 && report.violations[0].index == 0
}

fn safety(samples: &[Sample]) -> Verdict {
    let mut runs = 0;
    let mut violations = 0;
    let mut problems = Vec::new();
    for e in corpus().into_iter().filter(|e| matches!(e.expect, Expect::Runs(_))) {
        runs += 1;
        let elab = infer_program(&parse_program(&e.source).unwrap()).unwrap();
        match run_and_audit(&elab, "main", DEFAULT_BUDGET, false) {
            Ok((_, r)) => {
                violations += r.violations.len();
                if !r.violations.is_empty() {
                    problems.push(e.name.clone());
                }
            }
            Err(err) => problems.push(format!("{}: {err}", e.name)),
        }
    }
    for s in samples {
        match run_and_audit(&s.elaboration, "main", DEFAULT_BUDGET, false) {
            Ok((_, r)) => {
                violations += r.violations.len();
                if !r.violations.is_empty() {
                    problems.push(s.source.lines().last().unwrap().to_string());
                }
            }
            Err(err) => problems.push(format!("{}: {err}", s.source.lines().last().unwrap())),
        }
    }
    let control = token_control();
    verdict(
        violations == 0 && problems.is_empty() && control,
        format!(
            "{violations} violations over {runs} corpus programs and {} generated terms; discarded token flagged: {control} {}",
            samples.len(),
            problems.join("; ")
        ),
    )
}

fn negatives() -> Verdict {
    let entries: Vec<_> = corpus().into_iter().filter(|e| e.group == Group::Negative).collect();
    let failures: Vec<String> =
        entries.iter().filter_map(|e| run_entry(e).map(|p| format!("{}: {p}", e.name))).collect();
    verdict(
        failures.is_empty() && entries.len() >= MIN_NEGATIVE,
        format!("{}/{} ill-typed programs rejected with the expected class {}", entries.len() - failures.len(), entries.len(), failures.join("; ")),
    )
}

fn determinism() -> Verdict {
    let dir = std::env::temp_dir().join(format!("quill-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut files = Vec::new();
    for (i, e) in corpus().iter().enumerate() {
        let path = dir.join(format!("entry{i:02}.ql"));
        std::fs::write(&path, &e.source).unwrap();
        files.push(path);
    }
    let run_all = || -> Vec<u8> {
        let mut out = Vec::new();
        for f in &files {
            let o = Command::new(env!("CARGO_BIN_EXE_quill")).arg("infer").arg(f).output().unwrap();
            out.extend(o.stdout);
            out.extend(o.stderr);
            out.extend(o.status.code().unwrap_or(-1).to_string().bytes());
        }
        out
    };
    let first = run_all();
    let second = run_all();
    std::fs::remove_dir_all(&dir).ok();
    verdict(first == second, format!("two infer runs over {} corpus files, {} bytes each, identical: {}", files.len(), first.len(), first == second))
}

fn tvar(i: usize) -> Type {
    Type::Var(TypeVar::new(format!("t{i}"), Kind::Star))
}

fn fvar(i: usize) -> Type {
    Type::Var(TypeVar::new(format!("f{i}"), Kind::function()))
}

fn random_head(rng: &mut StdRng) -> Type {
    match rng.gen_range(0..4) {
        0 => Type::lin_con(),
        1 => Type::un_con(),
        i => fvar(i - 2),
    }
}

fn random_type(rng: &mut StdRng, depth: usize) -> Type {
    if depth == 0 || rng.gen_bool(0.4) {
        return if rng.gen_bool(0.85) { tvar(rng.gen_range(0..3)) } else { Type::Con("Tok".into(), Kind::Star) };
    }
    match rng.gen_range(0..5) {
        0 | 1 => {
            let h = random_head(rng);
            Type::arrow(h, random_type(rng, depth - 1), random_type(rng, depth - 1))
        }
        2 => Type::sum(random_type(rng, depth - 1), random_type(rng, depth - 1)),
        3 => Type::app(Type::Con("Box".into(), Kind::arrow(Kind::Star, Kind::Star)), random_type(rng, depth - 1)),
        _ => Type::apps(
            Type::Con("MP".into(), Kind::from_args(&[Kind::Star, Kind::Star])),
            [random_type(rng, depth - 1), random_type(rng, depth - 1)],
        ),
    }
}

fn random_pred(rng: &mut StdRng) -> Predicate {
    match rng.gen_range(0..8) {
        0..=2 => Predicate::Un(random_type(rng, 2)),
        3 => Predicate::Un(fvar(rng.gen_range(0..2))),
        4 => Predicate::Fun(fvar(rng.gen_range(0..2))),
        5 => Predicate::Geq(fvar(rng.gen_range(0..2)), fvar(rng.gen_range(0..2))),
        6 => Predicate::Geq(random_type(rng, 2), fvar(rng.gen_range(0..2))),
        _ => {
            let h = random_head(rng);
            let r = Type::arrow(h, random_type(rng, 1), random_type(rng, 1));
            Predicate::Geq(random_type(rng, 2), r)
        }
    }
}

fn random_preds(rng: &mut StdRng, max: usize) -> Preds {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| random_pred(rng)).collect()
}

fn entailment() -> Verdict {
    let sigs: Signatures = parse_program(PRELUDE).unwrap().signatures();
    let (a, b, c) = (tvar(0), tvar(1), tvar(2));
    let yes = |assume: Vec<Predicate>, goal: Predicate| EntailEnv::new(&sigs, assume).entails(&goal) == Ok(true);
    let no = |goal: Predicate| EntailEnv::empty(&sigs).entails(&goal) == Ok(false);
    let tok = Type::Con("Tok".into(), Kind::Star);
    let examples = [
        yes(vec![], Predicate::Un(Type::un(a.clone(), b.clone()))),
        yes(vec![], Predicate::Geq(a.clone(), Type::lin(b.clone(), c.clone()))),
        yes(vec![Predicate::Un(a.clone())], Predicate::Geq(a.clone(), Type::un(b.clone(), c.clone()))),
        no(Predicate::Un(Type::lin(a.clone(), b.clone()))),
        yes(vec![Predicate::Un(a.clone()), Predicate::Un(b.clone())], Predicate::Un(Type::sum(a.clone(), b.clone()))),
        no(Predicate::Un(tok)),
    ];
    let held = examples.iter().filter(|x| **x).count();

    let mut rng = StdRng::seed_from_u64(SEED);
    let mut monotone_fail = 0;
    let mut monotone_live = 0;
    for _ in 0..ENTAILMENT_TRIALS {
        let p = random_preds(&mut rng, 3);
        let extra = random_preds(&mut rng, 2);
        let goal = random_pred(&mut rng);
        let env = EntailEnv::new(&sigs, p);
        if env.entails(&goal) == Ok(true) {
            monotone_live += 1;
            if env.with(extra).entails(&goal) != Ok(true) {
                monotone_fail += 1;
            }
        }
    }
    let mut sound_fail = 0;
    let mut sound_live = 0;
    for _ in 0..ENTAILMENT_TRIALS {
        let p = random_preds(&mut rng, 3);
        if let Ok(q) = EntailEnv::empty(&sigs).simplify(&p) {
            sound_live += 1;
            if EntailEnv::new(&sigs, q).entails_all(&p) != Ok(true) {
                sound_fail += 1;
            }
        }
    }
    verdict(
        held == examples.len() && monotone_fail == 0 && sound_fail == 0,
        format!(
            "{held}/{} examples hold; monotonicity {monotone_fail} failures in {ENTAILMENT_TRIALS} trials ({monotone_live} entailed); \
             simplify soundness {sound_fail} failures in {ENTAILMENT_TRIALS} trials ({sound_live} satisfiable)",
            examples.len()
        ),
    )
}

fn main() {
    // Inference and evaluation recurse over terms; give them room.
    let worker = std::thread::Builder::new().stack_size(256 << 20).spawn(run).unwrap();
    let passed = worker.join().unwrap();
    if !passed {
        std::process::exit(1);
    }
}

fn run() -> bool {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(SEED);
    let samples = well_typed(&mut rng, GENERATED_TERMS, MAX_TERM_DEPTH, 200 * GENERATED_TERMS);
    let generation = start.elapsed();

    let results = [
        ("golden principal types", golden_types()),
        ("ambiguity improvement", ambiguity()),
        ("checker soundness oracle", soundness(&samples, generation)),
        ("conservativity", conservativity()),
        ("type safety audit", safety(&samples)),
        ("negative suite", negatives()),
        ("determinism", determinism()),
        ("entailment properties", entailment()),
    ];
    let mut all = true;
    for (i, (name, v)) in results.iter().enumerate() {
        all &= v.pass;
        println!("{} criterion {}: {name}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail.trim_end());
    }
    println!("{} of {} criteria passed", results.iter().filter(|(_, v)| v.pass).count(), results.len());
    all
}
