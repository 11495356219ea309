//! Syntax-directed checking of elaborated terms.
//!
//! Independent of inference: the checker reads the types and evidence
//! recorded on each node and verifies every typing rule locally, splitting
//! the linear environment between subterms by their free variables.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::entail::EntailEnv;
use crate::infer::Elaboration;
use crate::pretty::{pred_to_string, type_to_string};
use crate::syntax::{
    Name, Node, NodeInfo, Predicate, Preds, Scheme, Signatures, Span, Subst, Term, Type,
    TypeEnv, TypeVar, Types,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{span}: {msg}")]
pub struct CheckError {
    pub span: Span,
    pub msg: String,
}

type CResult = Result<(), CheckError>;

fn fail(span: Span, msg: impl Into<String>) -> CResult {
    Err(CheckError { span, msg: msg.into() })
}

/// Checks every definition of an elaborated program.
pub fn check_program(elab: &Elaboration) -> CResult {
    for i in 0..elab.defs.len() {
        check_definition(elab, i)?;
    }
    Ok(())
}

/// Checks the definition at `index` against its principal scheme.
pub fn check_definition(elab: &Elaboration, index: usize) -> CResult {
    let def = &elab.defs[index];
    let globals = elab.globals_before(index);
    let span = def.span;
    if def.term.ty() != Some(&def.principal.qual.body) {
        return fail(span, format!("{}: body type differs from its scheme", def.name));
    }
    check_term(&elab.signatures, &globals, &def.principal.qual.context, &def.term)
}

/// Checks an annotated closed term under assumptions `context`.
pub fn check_term(sigs: &Signatures, globals: &TypeEnv, context: &Preds, term: &Term) -> CResult {
    let c = Checker { sigs, globals };
    c.check(&EntailEnv::new(sigs, context.iter().cloned()), &TypeEnv::new(), term)
}

struct Checker<'a> {
    sigs: &'a Signatures,
    globals: &'a TypeEnv,
}

fn ty_of(t: &Term) -> Result<&Type, CheckError> {
    t.ty().ok_or_else(|| CheckError { span: t.span, msg: "missing annotation".into() })
}

fn info_of(t: &Term) -> Result<&NodeInfo, CheckError> {
    t.ann.as_ref().map(|a| &a.info).ok_or_else(|| CheckError { span: t.span, msg: "missing annotation".into() })
}

fn same(span: Span, what: &str, a: &Type, b: &Type) -> CResult {
    if a == b {
        Ok(())
    } else {
        fail(span, format!("{what}: {} differs from {}", type_to_string(a), type_to_string(b)))
    }
}

/// Restricts `env` to the bindings in `names`.
fn restrict(env: &TypeEnv, names: &BTreeSet<Name>) -> TypeEnv {
    env.iter().filter(|(k, _)| names.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect()
}

impl Checker<'_> {
    fn holds(&self, p: &EntailEnv, goal: &Predicate, span: Span) -> CResult {
        match p.entails(goal) {
            Ok(true) => Ok(()),
            Ok(false) => fail(span, format!("predicate {} is not entailed", pred_to_string(goal))),
            Err(e) => fail(span, e.to_string()),
        }
    }

    fn unrestricted(&self, p: &EntailEnv, x: &str, sc: &Scheme, span: Span) -> CResult {
        match p.un_scheme(sc) {
            Ok(r) if r.is_empty() => Ok(()),
            Ok(r) => fail(span, format!("{x} must be unrestricted; needs {}", r.iter().map(pred_to_string).collect::<Vec<_>>().join(", "))),
            Err(_) => fail(span, format!("{x} must be unrestricted but is linear")),
        }
    }

    /// Splits `env` between two subterms: shared bindings must be
    /// unrestricted, unused ones go to the first subterm.
    fn split(&self, p: &EntailEnv, env: &TypeEnv, first: &BTreeSet<Name>, second: &BTreeSet<Name>, span: Span) -> Result<(TypeEnv, TypeEnv), CheckError> {
        for x in first.intersection(second) {
            if let Some(sc) = env.get(x) {
                self.unrestricted(p, x, sc, span)?;
            }
        }
        let mut left: BTreeSet<Name> = env.keys().filter(|k| !second.contains(*k)).cloned().collect();
        left.extend(first.iter().cloned());
        Ok((restrict(env, &left), restrict(env, second)))
    }

    fn check(&self, p: &EntailEnv, env: &TypeEnv, t: &Term) -> CResult {
        let span = t.span;
        let ty = ty_of(t)?;
        match &t.node {
            Node::Var(x) => {
                let (sc, local) = match env.get(x) {
                    Some(sc) => (sc, true),
                    None => match self.globals.get(x) {
                        Some(sc) => (sc, false),
                        None => return fail(span, format!("unbound variable {x}")),
                    },
                };
                for (y, other) in env {
                    if !(local && y == x) {
                        self.unrestricted(p, y, other, span)?;
                    }
                }
                let NodeInfo::Var { inst } = info_of(t)? else { return fail(span, "variable without instantiation") };
                if inst.len() != sc.vars.len() {
                    return fail(span, format!("{x}: wrong number of instance types"));
                }
                let s = Subst::from_pairs(sc.vars.iter().cloned().zip(inst.iter().cloned()));
                let q = sc.qual.apply(&s);
                same(span, &format!("instance of {x}"), &q.body, ty)?;
                for pred in &q.context {
                    self.holds(p, pred, span)?;
                }
                Ok(())
            }
            Node::Lam(x, body) => {
                let Some((phi, arg, res)) = ty.as_binary() else { return fail(span, "lambda without arrow type") };
                same(span, "lambda body", res, ty_of(body)?)?;
                self.holds(p, &Predicate::Fun(phi.clone()), span)?;
                let NodeInfo::Lam { captured } = info_of(t)? else { return fail(span, "lambda without capture evidence") };
                for (y, sc) in env {
                    match captured.iter().find(|(n, _)| n == y) {
                        Some((_, inst)) => {
                            if inst.len() != sc.vars.len() {
                                return fail(span, format!("{y}: wrong number of instance types"));
                            }
                            let s = Subst::from_pairs(sc.vars.iter().cloned().zip(inst.iter().cloned()));
                            let q = sc.qual.apply(&s);
                            for pred in &q.context {
                                self.holds(p, pred, span)?;
                            }
                            self.holds(p, &Predicate::Geq(q.body, phi.clone()), span)?;
                        }
                        None if sc.vars.is_empty() => {
                            self.holds(p, &Predicate::Geq(sc.qual.body.clone(), phi.clone()), span)?
                        }
                        None => self.unrestricted(p, y, sc, span)?,
                    }
                }
                let mut inner = env.clone();
                inner.insert(x.clone(), Scheme::mono(arg.clone()));
                self.check(p, &inner, body)
            }
            Node::App(m, n) => {
                let Some((_, arg, res)) = ty_of(m)?.as_binary() else { return fail(span, "applying a non-function") };
                same(span, "application result", res, ty)?;
                same(span, "application argument", arg, ty_of(n)?)?;
                let (em, en) = self.split(p, env, &m.free_vars(), &n.free_vars(), span)?;
                self.check(p, &em, m)?;
                self.check(p, &en, n)
            }
            Node::Inl(m) | Node::Inr(m) => {
                let (h, args) = ty.spine();
                if !h.is_con(crate::syntax::SUM) || args.len() != 2 {
                    return fail(span, "injection without sum type");
                }
                let side = if matches!(t.node, Node::Inl(_)) { args[0] } else { args[1] };
                same(span, "injected value", side, ty_of(m)?)?;
                self.check(p, env, m)
            }
            Node::Case { scrutinee, left, left_body, right, right_body } => {
                let st = ty_of(scrutinee)?;
                let (h, args) = st.spine();
                if !h.is_con(crate::syntax::SUM) || args.len() != 2 {
                    return fail(span, "case on a non-sum");
                }
                same(span, "left branch", ty, ty_of(left_body)?)?;
                same(span, "right branch", ty, ty_of(right_body)?)?;
                let mut branches = left_body.free_vars();
                branches.remove(left);
                let mut rb = right_body.free_vars();
                rb.remove(right);
                branches.extend(rb);
                let (es, eb) = self.split(p, env, &scrutinee.free_vars(), &branches, span)?;
                self.check(p, &es, scrutinee)?;
                let mut el = eb.clone();
                el.insert(left.clone(), Scheme::mono(args[0].clone()));
                self.check(p, &el, left_body)?;
                let mut er = eb;
                er.insert(right.clone(), Scheme::mono(args[1].clone()));
                self.check(p, &er, right_body)
            }
            Node::Let(x, m, n) => {
                let NodeInfo::Let { scheme } = info_of(t)? else { return fail(span, "let without scheme") };
                same(span, "let-bound term", &scheme.qual.body, ty_of(m)?)?;
                same(span, "let body", ty, ty_of(n)?)?;
                let mut rest = n.free_vars();
                rest.remove(x);
                let (em, en) = self.split(p, env, &m.free_vars(), &rest, span)?;
                let bound: BTreeSet<TypeVar> = scheme.vars.iter().cloned().collect();
                let mut outside = em.ftv();
                p.assumptions().ftv_into(&mut outside);
                if let Some(v) = bound.iter().find(|v| outside.contains(v)) {
                    return fail(span, format!("generalized variable {} is free in the environment", v.name));
                }
                let pm = p.with(scheme.qual.context.iter().cloned());
                self.check(&pm, &em, m)?;
                let mut inner = en;
                inner.insert(x.clone(), scheme.clone());
                self.check(p, &inner, n)
            }
            Node::Make(k, m) => {
                let NodeInfo::Make { outer, univ, exist } = info_of(t)? else { return fail(span, "constructor without evidence") };
                let Some(sig) = self.sigs.constructor(k) else { return fail(span, format!("unknown constructor {k}")) };
                if outer.len() != sig.outer.len() || univ.len() != sig.univ.len() || exist.len() != sig.exist.len() {
                    return fail(span, format!("{k}: evidence arity mismatch"));
                }
                let theta = Subst::from_pairs(
                    sig.outer.iter().cloned().zip(outer.iter().cloned())
                        .chain(sig.univ.iter().cloned().zip(univ.iter().cloned().map(Type::Var)))
                        .chain(sig.exist.iter().cloned().zip(exist.iter().cloned())),
                );
                same(span, "constructed value", &sig.result().apply(&theta), ty)?;
                same(span, "constructor argument", &sig.payload.apply(&theta), ty_of(m)?)?;
                let (q_univ, q_exist) = sig.split_context();
                for pred in &q_exist.apply(&theta) {
                    self.holds(p, pred, span)?;
                }
                let mut outside = env.ftv();
                p.assumptions().ftv_into(&mut outside);
                ty.ftv_into(&mut outside);
                let distinct: BTreeSet<&TypeVar> = univ.iter().collect();
                if distinct.len() != univ.len() {
                    return fail(span, format!("{k}: universal variables are not distinct"));
                }
                if let Some(v) = univ.iter().find(|v| outside.contains(v)) {
                    return fail(span, format!("{k}: universal variable {} is not fresh", v.name));
                }
                self.check(&p.with(q_univ.apply(&theta)), env, m)
            }
            Node::Break { con, binder, bound, body } => {
                let NodeInfo::Break { outer, univ, exist } = info_of(t)? else { return fail(span, "pattern without evidence") };
                let Some(sig) = self.sigs.constructor(con) else { return fail(span, format!("unknown constructor {con}")) };
                if outer.len() != sig.outer.len() || univ.len() != sig.univ.len() || exist.len() != sig.exist.len() {
                    return fail(span, format!("{con}: evidence arity mismatch"));
                }
                let theta = Subst::from_pairs(
                    sig.outer.iter().cloned().zip(outer.iter().cloned())
                        .chain(sig.univ.iter().cloned().zip(univ.iter().cloned()))
                        .chain(sig.exist.iter().cloned().zip(exist.iter().cloned().map(Type::Var))),
                );
                same(span, "scrutinized value", &sig.result().apply(&theta), ty_of(bound)?)?;
                same(span, "pattern body", ty, ty_of(body)?)?;
                let (q_univ, q_exist) = sig.split_context();
                for pred in &q_univ.apply(&theta) {
                    self.holds(p, pred, span)?;
                }
                let mut rest = body.free_vars();
                rest.remove(binder);
                let (em, en) = self.split(p, env, &bound.free_vars(), &rest, span)?;
                let mut outside = env.ftv();
                p.assumptions().ftv_into(&mut outside);
                ty.ftv_into(&mut outside);
                let distinct: BTreeSet<&TypeVar> = exist.iter().collect();
                if distinct.len() != exist.len() {
                    return fail(span, format!("{con}: existential variables are not distinct"));
                }
                if let Some(v) = exist.iter().find(|v| outside.contains(v)) {
                    return fail(span, format!("{con}: existential variable {} escapes", v.name));
                }
                self.check(p, &em, bound)?;
                let mut inner = en;
                inner.insert(binder.clone(), Scheme::mono(sig.payload.apply(&theta)));
                self.check(&p.with(q_exist.apply(&theta)), &inner, body)
            }
        }
    }
}
