//! Command implementations. Each returns the text for both output streams
//! and an exit code, so the binary only has to print.

use std::fmt::Write as _;

use quill_core::canonical::canonicalize;
use quill_core::eval::{run_and_audit, EvalError, ViolationKind};
use quill_core::infer::{infer_program, Elaboration};
use quill_core::parser::parse_program;
use quill_core::pretty::{program_to_string, scheme_to_string, type_to_string};
use quill_core::sdcheck::check_program;
use quill_core::Program;

use crate::corpus::{corpus, CorpusEntry, Expect};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    TypeError = 1,
    InputError = 2,
    AuditViolation = 3,
    BudgetExhausted = 4,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub exit: Exit,
    pub stdout: String,
    pub stderr: String,
}

impl Report {
    fn ok(stdout: String) -> Report {
        Report { exit: Exit::Ok, stdout, stderr: String::new() }
    }

    fn fail(exit: Exit, stderr: String) -> Report {
        Report { exit, stdout: String::new(), stderr }
    }
}

fn parse(src: &str) -> Result<Program, Report> {
    parse_program(src).map_err(|e| Report::fail(Exit::InputError, format!("error: {e}\n")))
}

fn elaborate(src: &str) -> Result<Elaboration, Report> {
    let program = parse(src)?;
    infer_program(&program)
        .map_err(|e| Report::fail(Exit::TypeError, format!("type error [{}]: {e}\n", e.class())))
}

/// Principal types of every definition, one `name : scheme` line each.
pub fn infer(src: &str) -> Report {
    match elaborate(src) {
        Ok(elab) => Report::ok(schemes(&elab)),
        Err(r) => r,
    }
}

fn schemes(elab: &Elaboration) -> String {
    let mut out = String::new();
    for d in &elab.defs {
        writeln!(out, "{} : {}", d.name, scheme_to_string(&canonicalize(&d.scheme))).unwrap();
    }
    out
}

/// Re-checks every elaborated definition with the syntax-directed rules.
pub fn check(src: &str) -> Report {
    let elab = match elaborate(src) {
        Ok(e) => e,
        Err(r) => return r,
    };
    match check_program(&elab) {
        Ok(()) => {
            let mut out = String::new();
            for d in &elab.defs {
                writeln!(out, "{} : checked", d.name).unwrap();
            }
            Report::ok(out)
        }
        Err(e) => Report::fail(Exit::TypeError, format!("check failed: {}: {}\n", e.span, e.msg)),
    }
}

/// Evaluates `main`, optionally printing the rule trace and the audit.
pub fn run(src: &str, audit: bool, trace: bool, budget: usize) -> Report {
    let elab = match elaborate(src) {
        Ok(e) => e,
        Err(r) => return r,
    };
    if elab.def("main").is_none() {
        return Report::fail(Exit::InputError, "error: program defines no main\n".to_string());
    }
    let (outcome, report) = match run_and_audit(&elab, "main", budget, trace) {
        Ok(r) => r,
        Err(e @ EvalError::BudgetExhausted(_)) => return Report::fail(Exit::BudgetExhausted, format!("error: {e}\n")),
        Err(e) => return Report::fail(Exit::TypeError, format!("error: {e}\n")),
    };
    let mut out = String::new();
    for line in &outcome.trace {
        writeln!(out, "{line}").unwrap();
    }
    writeln!(out, "{}", outcome.value.render(trace)).unwrap();
    if !audit {
        return Report::ok(out);
    }
    let list = |xs: &[usize]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    writeln!(
        out,
        "audit: introduced {}, eliminated {}, discarded [{}], duplicated [{}], violations {}",
        outcome.introduced.len(),
        outcome.eliminated.len(),
        list(&report.discarded),
        list(&report.duplicated),
        report.violations.len()
    )
    .unwrap();
    if report.violations.is_empty() {
        return Report::ok(out);
    }
    let mut err = String::new();
    for v in &report.violations {
        let kind = match v.kind {
            ViolationKind::Discarded => "discarded",
            ViolationKind::Duplicated => "duplicated",
        };
        writeln!(err, "violation: {kind} {} : {}", v.value, type_to_string(&v.ty)).unwrap();
    }
    Report { exit: Exit::AuditViolation, stdout: out, stderr: err }
}

/// Outcome of one corpus entry.
#[derive(Clone, Debug)]
pub struct EntryResult {
    pub entry: CorpusEntry,
    pub problem: Option<String>,
}

/// Runs inference, the checker, the printer round trip and, for runnable
/// entries, evaluation with the audit.
pub fn run_entry(entry: &CorpusEntry) -> Option<String> {
    let program = match parse_program(&entry.source) {
        Ok(p) => p,
        Err(e) => return Some(format!("parse error: {e}")),
    };
    match parse_program(&program_to_string(&program)) {
        Ok(again) if again == program => {}
        _ => return Some("printed program does not parse back to itself".to_string()),
    }
    let result = infer_program(&program);
    let elab = match (&entry.expect, result) {
        (Expect::Rejected(class), Err(e)) if e.class() == *class => return None,
        (Expect::Rejected(class), Err(e)) => return Some(format!("expected {class} error, got [{}] {e}", e.class())),
        (Expect::Rejected(class), Ok(_)) => return Some(format!("expected {class} error, but inference succeeded")),
        (_, Err(e)) => return Some(format!("type error [{}]: {e}", e.class())),
        (_, Ok(elab)) => elab,
    };
    if let Err(e) = check_program(&elab) {
        return Some(format!("checker rejected elaboration: {}: {}", e.span, e.msg));
    }
    match &entry.expect {
        Expect::Scheme { def, scheme } => {
            let got = elab.def(def).map(|d| scheme_to_string(&canonicalize(&d.scheme)));
            match got {
                Some(g) if g == *scheme => None,
                Some(g) => Some(format!("expected {scheme}, got {g}")),
                None => Some(format!("no definition {def}")),
            }
        }
        Expect::Runs(value) => match run_and_audit(&elab, "main", quill_core::eval::DEFAULT_BUDGET, false) {
            Ok((o, _)) if o.value.render(false) != *value => Some(format!("expected value {value}, got {}", o.value)),
            Ok((_, r)) if !r.violations.is_empty() => Some(format!("{} audit violations", r.violations.len())),
            Ok(_) => None,
            Err(e) => Some(e.to_string()),
        },
        Expect::Infers | Expect::Rejected(_) => None,
    }
}

pub fn run_corpus() -> Vec<EntryResult> {
    corpus()
        .into_iter()
        .map(|entry| {
            let problem = run_entry(&entry);
            EntryResult { entry, problem }
        })
        .collect()
}

/// Pass/fail table over the embedded corpus.
pub fn corpus_table() -> Report {
    let results = run_corpus();
    let mut out = String::new();
    let mut failed = 0;
    for r in &results {
        let status = if r.problem.is_some() { "FAIL" } else { "PASS" };
        write!(out, "{status} {:<13} {}", r.entry.group.label(), r.entry.name).unwrap();
        if let Some(p) = &r.problem {
            failed += 1;
            write!(out, ": {p}").unwrap();
        }
        out.push('\n');
    }
    writeln!(out, "{} of {} entries passed", results.len() - failed, results.len()).unwrap();
    Report { exit: if failed == 0 { Exit::Ok } else { Exit::TypeError }, stdout: out, stderr: String::new() }
}
