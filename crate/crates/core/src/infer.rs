//! Principal type inference with elaboration.
//!
//! Each term is checked against an expected type while threading a global
//! substitution and collecting predicates; the set of variables a subterm
//! uses determines which bindings must be unrestricted. Every node of the
//! result carries its type and the instantiation evidence that the
//! syntax-directed checker replays.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::entail::{improving_subst, normalize, EntailEnv, EntailError};
use crate::pretty::{pred_to_string, scheme_to_string, type_to_string};
use crate::syntax::{
    Annotation, Decl, Def, Fresh, Kind, Name, Node, NodeInfo, Predicate, Preds, Program,
    QualType, Scheme, Signatures, Span, Subst, Term, Type, TypeEnv, TypeVar, Types,
};
use crate::unify::{mgu, UnifyError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeErrorKind {
    Unify { left: Type, right: Type, cause: UnifyError },
    Unsatisfiable { pred: Predicate, reason: String },
    SkolemEscape { var: TypeVar, constructor: Name },
    UnknownDatatype(Name),
    Unbound(Name),
    NotInstance { declared: Scheme, inferred: Scheme },
}

/// Coarse classification of type errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorClass {
    Unification,
    RigidUnification,
    Entailment,
    SkolemEscape,
    NotInstance,
    UnknownDatatype,
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorClass::Unification => "unification",
            ErrorClass::RigidUnification => "rigid-unification",
            ErrorClass::Entailment => "entailment",
            ErrorClass::SkolemEscape => "skolem-escape",
            ErrorClass::NotInstance => "not-instance",
            ErrorClass::UnknownDatatype => "unknown-datatype",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct TypeError {
    pub def: Option<Name>,
    pub span: Span,
    pub kind: Box<TypeErrorKind>,
}

impl TypeError {
    pub fn class(&self) -> ErrorClass {
        match &*self.kind {
            TypeErrorKind::Unify { cause: UnifyError::Rigid(..), .. } => ErrorClass::RigidUnification,
            TypeErrorKind::Unify { .. } => ErrorClass::Unification,
            TypeErrorKind::Unsatisfiable { .. } => ErrorClass::Entailment,
            TypeErrorKind::SkolemEscape { .. } => ErrorClass::SkolemEscape,
            TypeErrorKind::NotInstance { .. } => ErrorClass::NotInstance,
            TypeErrorKind::UnknownDatatype(_) | TypeErrorKind::Unbound(_) => ErrorClass::UnknownDatatype,
        }
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.span)?;
        if let Some(d) = &self.def {
            write!(f, "in {d}: ")?;
        }
        match &*self.kind {
            TypeErrorKind::Unify { left, right, cause } => {
                write!(f, "cannot unify {} with {}", type_to_string(left), type_to_string(right))?;
                match cause {
                    UnifyError::Occurs(v, t) => write!(f, " ({} occurs in {})", v.name, type_to_string(t)),
                    UnifyError::Rigid(v, t) => {
                        write!(f, " (rigid variable {} cannot become {})", v.name, type_to_string(t))
                    }
                    UnifyError::Kind(..) => write!(f, " (kinds differ)"),
                    UnifyError::Clash(a, b) => write!(f, " ({} vs {})", type_to_string(a), type_to_string(b)),
                }
            }
            TypeErrorKind::Unsatisfiable { pred, reason } => {
                write!(f, "cannot satisfy {}: {reason}", pred_to_string(pred))
            }
            TypeErrorKind::SkolemEscape { var, constructor } => {
                write!(f, "type variable {} bound by {constructor} escapes its scope", var.name)
            }
            TypeErrorKind::UnknownDatatype(n) => write!(f, "unknown datatype {n}"),
            TypeErrorKind::Unbound(n) => write!(f, "unbound variable {n}"),
            TypeErrorKind::NotInstance { declared, inferred } => write!(
                f,
                "declared type {} is not an instance of inferred type {}",
                scheme_to_string(declared),
                scheme_to_string(inferred)
            ),
        }
    }
}

type Wanted = (Predicate, Span);
type Captured = Vec<(Name, Vec<Type>)>;

/// Inferred information about one top-level definition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefInfo {
    pub name: Name,
    /// Scheme visible to later definitions: the declared one if present.
    pub scheme: Scheme,
    pub principal: Scheme,
    pub declared: Option<Scheme>,
    /// The body with every node annotated.
    pub term: Term,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct Elaboration {
    pub program: Program,
    pub signatures: Signatures,
    pub defs: Vec<DefInfo>,
}

impl Elaboration {
    pub fn def(&self, name: &str) -> Option<&DefInfo> {
        self.defs.iter().find(|d| d.name == name)
    }

    /// Schemes of all definitions, as seen by later definitions.
    pub fn globals(&self) -> TypeEnv {
        self.defs.iter().map(|d| (d.name.clone(), d.scheme.clone())).collect()
    }

    /// Globals visible to the definition at `index`.
    pub fn globals_before(&self, index: usize) -> TypeEnv {
        self.defs[..index].iter().map(|d| (d.name.clone(), d.scheme.clone())).collect()
    }
}

/// Infers principal schemes for every definition, in order.
pub fn infer_program(program: &Program) -> Result<Elaboration, TypeError> {
    let sigs = program.signatures();
    let mut globals = TypeEnv::new();
    let mut defs = Vec::new();
    let mut fresh = Fresh::new();
    for d in &program.decls {
        let Decl::Def(def) = d else { continue };
        let info = infer_def(&sigs, &globals, def, &mut fresh)?;
        globals.insert(info.name.clone(), info.scheme.clone());
        defs.push(info);
    }
    Ok(Elaboration { program: program.clone(), signatures: sigs, defs })
}

fn infer_def(sigs: &Signatures, globals: &TypeEnv, def: &Def, fresh: &mut Fresh) -> Result<DefInfo, TypeError> {
    let mut cx = Infer { sigs, globals, fresh: std::mem::take(fresh), subst: Subst::new(), def: Some(def.name.clone()) };
    let result = cx.top(&def.body);
    *fresh = std::mem::take(&mut cx.fresh);
    let (principal, term) = result?;
    if let Some(declared) = &def.declared {
        if !instance_of(sigs, &principal, declared) {
            return Err(TypeError {
                def: Some(def.name.clone()),
                span: def.span,
                kind: Box::new(TypeErrorKind::NotInstance { declared: declared.clone(), inferred: principal }),
            });
        }
    }
    Ok(DefInfo {
        name: def.name.clone(),
        scheme: def.declared.clone().unwrap_or_else(|| principal.clone()),
        principal,
        declared: def.declared.clone(),
        term,
        span: def.span,
    })
}

/// Infers the principal scheme of a closed term.
pub fn infer_term(sigs: &Signatures, globals: &TypeEnv, term: &Term) -> Result<(Scheme, Term), TypeError> {
    let mut cx = Infer { sigs, globals, fresh: Fresh::new(), subst: Subst::new(), def: None };
    cx.top(term)
}

struct Infer<'a> {
    sigs: &'a Signatures,
    globals: &'a TypeEnv,
    fresh: Fresh,
    subst: Subst,
    def: Option<Name>,
}

struct Out {
    preds: Vec<Wanted>,
    used: BTreeSet<Name>,
    term: Term,
}

fn intersect(a: &BTreeSet<Name>, b: &BTreeSet<Name>) -> BTreeSet<Name> {
    a.intersection(b).cloned().collect()
}

fn annotate(node: Node, span: Span, ty: &Type, info: NodeInfo) -> Term {
    Term { node, span, ann: Some(Annotation { ty: ty.clone(), info }) }
}

impl<'a> Infer<'a> {
    fn err(&self, span: Span, kind: TypeErrorKind) -> TypeError {
        TypeError { def: self.def.clone(), span, kind: Box::new(kind) }
    }

    fn entail_err(&self, span: Span, e: EntailError, reason: &str) -> TypeError {
        match e {
            EntailError::Unsatisfiable(pred) => {
                self.err(span, TypeErrorKind::Unsatisfiable { pred, reason: reason.to_string() })
            }
            EntailError::UnknownDatatype(n) => self.err(span, TypeErrorKind::UnknownDatatype(n)),
        }
    }

    fn unify(&mut self, span: Span, left: &Type, right: &Type) -> Result<(), TypeError> {
        let l = left.apply(&self.subst);
        let r = right.apply(&self.subst);
        match mgu(&BTreeSet::new(), &l, &r) {
            Ok(u) => {
                self.subst = Subst::compose(&u, &self.subst);
                Ok(())
            }
            Err(cause) => Err(self.err(span, TypeErrorKind::Unify { left: l, right: r, cause })),
        }
    }

    /// Simplifies wanted predicates under `assumed`, keeping source spans.
    fn simplify(&self, assumed: &EntailEnv, wanted: &[Wanted], reason: &str) -> Result<Vec<Wanted>, TypeError> {
        let mut out: Vec<Wanted> = Vec::new();
        let mut seen = Preds::new();
        for (p, span) in wanted {
            let r = assumed.residual(&p.apply(&self.subst)).map_err(|e| self.entail_err(*span, e, reason))?;
            for q in r {
                if seen.insert(q.clone()) {
                    out.push((q, *span));
                }
            }
        }
        Ok(out)
    }

    fn instantiate(&mut self, scheme: &Scheme) -> (Vec<Type>, QualType) {
        let inst: Vec<Type> = scheme.vars.iter().map(|v| Type::Var(self.fresh.flexible(v.kind.clone()))).collect();
        let s = Subst::from_pairs(scheme.vars.iter().cloned().zip(inst.iter().cloned()));
        (inst, scheme.qual.apply(&s))
    }

    fn local(&self, env: &TypeEnv, x: &str) -> Scheme {
        env[x].apply(&self.subst)
    }

    /// Unrestrictedness of the bindings in `names`.
    fn un_env(&self, env: &TypeEnv, names: &BTreeSet<Name>, span: Span, why: &str) -> Result<Vec<Wanted>, TypeError> {
        let e = EntailEnv::empty(self.sigs);
        let mut out = Vec::new();
        for y in names {
            let sc = self.local(env, y);
            let r = e.un_scheme(&sc).map_err(|err| self.entail_err(span, err, &format!("{y} {why}")))?;
            out.extend(r.into_iter().map(|p| (p, span)));
        }
        Ok(out)
    }

    fn weaken(&self, x: &str, scheme: &Scheme, used: &BTreeSet<Name>, span: Span) -> Result<Vec<Wanted>, TypeError> {
        if used.contains(x) {
            return Ok(Vec::new());
        }
        let e = EntailEnv::empty(self.sigs);
        let sc = scheme.apply(&self.subst);
        let r = e
            .un_scheme(&sc)
            .map_err(|err| self.entail_err(span, err, &format!("{x} is discarded without being used")))?;
        Ok(r.into_iter().map(|p| (p, span)).collect())
    }

    /// Constraints allowing a closure with arrow `phi` to capture `names`.
    fn leq(
        &mut self,
        phi: &Type,
        env: &TypeEnv,
        names: &BTreeSet<Name>,
        span: Span,
    ) -> Result<(Vec<Wanted>, Captured), TypeError> {
        let e = EntailEnv::empty(self.sigs);
        let mut wanted = Vec::new();
        let mut captured = Vec::new();
        for y in names {
            let sc = self.local(env, y);
            if !sc.vars.is_empty() && matches!(e.un_scheme(&sc), Ok(r) if r.is_empty()) {
                continue;
            }
            let (inst, q) = self.instantiate(&sc);
            for p in q.context {
                wanted.push((p, span));
            }
            wanted.push((Predicate::Geq(q.body, phi.clone()), span));
            if !sc.vars.is_empty() {
                captured.push((y.clone(), inst));
            }
        }
        let reason = "a captured variable is not unrestricted enough for its closure";
        Ok((self.simplify(&e, &wanted, reason)?, captured))
    }

    /// Generalizes with improvement of ambiguous arrow variables.
    fn gen_i(&mut self, env: &TypeEnv, wanted: &[Wanted], ty: &Type) -> Result<Scheme, TypeError> {
        let e = EntailEnv::empty(self.sigs);
        let reason = "constraint of a let-bound or top-level term";
        let simplified = self.simplify(&e, wanted, reason)?;
        let body = ty.apply(&self.subst);
        let fixed = env.apply(&self.subst).ftv();
        let preds: Preds = simplified.iter().map(|(p, _)| p.clone()).collect();
        let mut in_body = body.ftv();
        in_body.extend(fixed.iter().cloned());
        let ambiguous: BTreeSet<TypeVar> = preds.ftv().into_iter().filter(|v| !in_body.contains(v)).collect();
        let improve = improving_subst(&e, &preds, &ambiguous);
        self.subst = Subst::compose(&improve, &self.subst);
        let improved = self.simplify(&e, &simplified, reason)?;
        let context: Preds = improved.into_iter().map(|(p, _)| p).collect();
        let mut order = Vec::new();
        collect_order(&body, &mut order);
        for p in &context {
            for t in p.types() {
                collect_order(t, &mut order);
            }
        }
        let vars: Vec<TypeVar> = order.into_iter().filter(|v| !fixed.contains(v) && !v.is_rigid()).collect();
        Ok(Scheme { vars, qual: QualType { context, body } })
    }

    fn top(&mut self, term: &Term) -> Result<(Scheme, Term), TypeError> {
        let u0 = self.fresh.star();
        let out = self.infer(&TypeEnv::new(), term, &u0)?;
        let scheme = self.gen_i(&TypeEnv::new(), &out.preds, &u0)?;
        let mut elaborated = out.term;
        let s = self.subst.clone();
        elaborated.map_annotations(&mut |a| {
            a.ty = a.ty.apply(&s);
            a.info = a.info.apply(&s);
        });
        Ok((scheme, elaborated))
    }

    fn infer(&mut self, env: &TypeEnv, term: &Term, expected: &Type) -> Result<Out, TypeError> {
        let span = term.span;
        match &term.node {
            Node::Var(x) => {
                let (scheme, used) = match env.get(x) {
                    Some(_) => (self.local(env, x), [x.clone()].into_iter().collect()),
                    None => match self.globals.get(x) {
                        Some(s) => (s.clone(), BTreeSet::new()),
                        None => return Err(self.err(span, TypeErrorKind::Unbound(x.clone()))),
                    },
                };
                let (inst, q) = self.instantiate(&scheme);
                self.unify(span, expected, &q.body)?;
                Ok(Out {
                    preds: q.context.into_iter().map(|p| (p, span)).collect(),
                    used,
                    term: annotate(term.node.clone(), span, expected, NodeInfo::Var { inst }),
                })
            }
            Node::Lam(x, body) => {
                let phi = self.fresh.arrow();
                let arg = self.fresh.star();
                let res = self.fresh.star();
                self.unify(span, expected, &Type::arrow(phi.clone(), arg.clone(), res.clone()))?;
                let mut inner = env.clone();
                let xs = Scheme::mono(arg);
                inner.insert(x.clone(), xs.clone());
                let out = self.infer(&inner, body, &res)?;
                let mut preds = out.preds;
                preds.push((Predicate::Fun(phi.clone()), span));
                let mut used = out.used;
                preds.extend(self.weaken(x, &xs, &used, span)?);
                used.remove(x);
                let (captures, captured) = self.leq(&phi, env, &used, span)?;
                preds.extend(captures);
                Ok(Out {
                    preds,
                    used,
                    term: annotate(Node::Lam(x.clone(), Box::new(out.term)), span, expected, NodeInfo::Lam { captured }),
                })
            }
            Node::App(m, n) => {
                let phi = self.fresh.arrow();
                let arg = self.fresh.star();
                let om = self.infer(env, m, &Type::arrow(phi.clone(), arg.clone(), expected.clone()))?;
                let on = self.infer(env, n, &arg)?;
                let mut preds = om.preds;
                preds.extend(on.preds);
                preds.push((Predicate::Fun(phi), span));
                preds.extend(self.un_env(env, &intersect(&om.used, &on.used), span, "is used more than once")?);
                let used = om.used.union(&on.used).cloned().collect();
                Ok(Out {
                    preds,
                    used,
                    term: annotate(Node::App(Box::new(om.term), Box::new(on.term)), span, expected, NodeInfo::Plain),
                })
            }
            Node::Inl(m) | Node::Inr(m) => {
                let l = self.fresh.star();
                let r = self.fresh.star();
                self.unify(span, expected, &Type::sum(l.clone(), r.clone()))?;
                let left = matches!(term.node, Node::Inl(_));
                let out = self.infer(env, m, if left { &l } else { &r })?;
                let node = if left { Node::Inl(Box::new(out.term)) } else { Node::Inr(Box::new(out.term)) };
                Ok(Out { preds: out.preds, used: out.used, term: annotate(node, span, expected, NodeInfo::Plain) })
            }
            Node::Case { scrutinee, left, left_body, right, right_body } => {
                let l = self.fresh.star();
                let r = self.fresh.star();
                let om = self.infer(env, scrutinee, &Type::sum(l.clone(), r.clone()))?;
                let (xs, ys) = (Scheme::mono(l), Scheme::mono(r));
                let mut env_l = env.clone();
                env_l.insert(left.clone(), xs.clone());
                let ol = self.infer(&env_l, left_body, expected)?;
                let mut env_r = env.clone();
                env_r.insert(right.clone(), ys.clone());
                let or = self.infer(&env_r, right_body, expected)?;
                let mut preds = om.preds;
                preds.extend(ol.preds);
                preds.extend(or.preds);
                preds.extend(self.weaken(left, &xs, &ol.used, left_body.span)?);
                preds.extend(self.weaken(right, &ys, &or.used, right_body.span)?);
                let mut ul = ol.used;
                ul.remove(left);
                let mut ur = or.used;
                ur.remove(right);
                let one_branch: BTreeSet<Name> = ul.symmetric_difference(&ur).cloned().collect();
                preds.extend(self.un_env(env, &one_branch, span, "is used in only one branch of a case")?);
                let branches: BTreeSet<Name> = ul.union(&ur).cloned().collect();
                preds.extend(self.un_env(env, &intersect(&om.used, &branches), span, "is used more than once")?);
                let mut used = om.used;
                used.extend(branches);
                Ok(Out {
                    preds,
                    used,
                    term: annotate(
                        Node::Case {
                            scrutinee: Box::new(om.term),
                            left: left.clone(),
                            left_body: Box::new(ol.term),
                            right: right.clone(),
                            right_body: Box::new(or.term),
                        },
                        span,
                        expected,
                        NodeInfo::Plain,
                    ),
                })
            }
            Node::Let(x, m, n) => {
                let u = self.fresh.star();
                let om = self.infer(env, m, &u)?;
                let scheme = self.gen_i(env, &om.preds, &u)?;
                let mut inner = env.clone();
                inner.insert(x.clone(), scheme.clone());
                let on = self.infer(&inner, n, expected)?;
                let mut preds = on.preds;
                let mut un = on.used;
                preds.extend(self.weaken(x, &scheme, &un, span)?);
                un.remove(x);
                preds.extend(self.un_env(env, &intersect(&om.used, &un), span, "is used more than once")?);
                let mut used = om.used;
                used.extend(un);
                Ok(Out {
                    preds,
                    used,
                    term: annotate(
                        Node::Let(x.clone(), Box::new(om.term), Box::new(on.term)),
                        span,
                        expected,
                        NodeInfo::Let { scheme },
                    ),
                })
            }
            Node::Make(k, m) => self.make(env, term, k, m, expected),
            Node::Break { con, binder, bound, body } => self.brk(env, term, con, binder, bound, body, expected),
        }
    }

    fn make(&mut self, env: &TypeEnv, term: &Term, k: &str, m: &Term, expected: &Type) -> Result<Out, TypeError> {
        let span = term.span;
        let sig = self.sigs.constructor(k).cloned().ok_or_else(|| self.err(span, TypeErrorKind::UnknownDatatype(k.to_string())))?;
        let outer: Vec<Type> = sig.outer.iter().map(|v| Type::Var(self.fresh.flexible(v.kind.clone()))).collect();
        let univ: Vec<TypeVar> = sig.univ.iter().map(|v| self.fresh.rigid(v.kind.clone())).collect();
        let exist: Vec<Type> = sig.exist.iter().map(|v| Type::Var(self.fresh.flexible(v.kind.clone()))).collect();
        let theta = Subst::from_pairs(
            sig.outer.iter().cloned().zip(outer.iter().cloned())
                .chain(sig.univ.iter().cloned().zip(univ.iter().cloned().map(Type::Var)))
                .chain(sig.exist.iter().cloned().zip(exist.iter().cloned())),
        );
        self.unify(span, expected, &sig.result().apply(&theta))?;
        let out = self.infer(env, m, &sig.payload.apply(&theta))?;
        let (q_univ, q_exist) = sig.split_context();
        let assumed = EntailEnv::new(self.sigs, q_univ.apply(&theta).apply(&self.subst));
        let residual = self.simplify(&assumed, &out.preds, &format!("required by the argument of {k}"))?;
        let mut visible: BTreeSet<TypeVar> = residual.iter().flat_map(|(p, _)| p.apply(&self.subst).ftv()).collect();
        visible.extend(env.apply(&self.subst).ftv());
        visible.extend(expected.apply(&self.subst).ftv());
        if let Some(v) = univ.iter().find(|v| visible.contains(v)) {
            return Err(self.err(span, TypeErrorKind::SkolemEscape { var: v.clone(), constructor: k.to_string() }));
        }
        let mut preds = residual;
        preds.extend(q_exist.apply(&theta).into_iter().map(|p| (p, span)));
        Ok(Out {
            preds,
            used: out.used,
            term: annotate(Node::Make(k.to_string(), Box::new(out.term)), span, expected, NodeInfo::Make { outer, univ, exist }),
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn brk(
        &mut self,
        env: &TypeEnv,
        term: &Term,
        k: &str,
        x: &str,
        m: &Term,
        n: &Term,
        expected: &Type,
    ) -> Result<Out, TypeError> {
        let span = term.span;
        let sig = self.sigs.constructor(k).cloned().ok_or_else(|| self.err(span, TypeErrorKind::UnknownDatatype(k.to_string())))?;
        let outer: Vec<Type> = sig.outer.iter().map(|v| Type::Var(self.fresh.flexible(v.kind.clone()))).collect();
        let univ: Vec<Type> = sig.univ.iter().map(|v| Type::Var(self.fresh.flexible(v.kind.clone()))).collect();
        let exist: Vec<TypeVar> = sig.exist.iter().map(|v| self.fresh.rigid(v.kind.clone())).collect();
        let theta = Subst::from_pairs(
            sig.outer.iter().cloned().zip(outer.iter().cloned())
                .chain(sig.univ.iter().cloned().zip(univ.iter().cloned()))
                .chain(sig.exist.iter().cloned().zip(exist.iter().cloned().map(Type::Var))),
        );
        let om = self.infer(env, m, &sig.result().apply(&theta))?;
        let xs = Scheme::mono(sig.payload.apply(&theta));
        let mut inner = env.clone();
        inner.insert(x.to_string(), xs.clone());
        let on = self.infer(&inner, n, expected)?;
        let mut body_wanted = on.preds;
        body_wanted.extend(self.weaken(x, &xs, &on.used, span)?);
        let (q_univ, q_exist) = sig.split_context();
        let assumed = EntailEnv::new(self.sigs, q_exist.apply(&theta).apply(&self.subst));
        let residual = self.simplify(&assumed, &body_wanted, &format!("required in the scope of {k}"))?;
        let mut visible: BTreeSet<TypeVar> = residual.iter().flat_map(|(p, _)| p.apply(&self.subst).ftv()).collect();
        visible.extend(env.apply(&self.subst).ftv());
        visible.extend(expected.apply(&self.subst).ftv());
        if let Some(v) = exist.iter().find(|v| visible.contains(v)) {
            return Err(self.err(span, TypeErrorKind::SkolemEscape { var: v.clone(), constructor: k.to_string() }));
        }
        let mut un = on.used;
        un.remove(x);
        let mut preds = om.preds;
        preds.extend(residual);
        preds.extend(q_univ.apply(&theta).into_iter().map(|p| (p, span)));
        preds.extend(self.un_env(env, &intersect(&om.used, &un), span, "is used more than once")?);
        let mut used = om.used;
        used.extend(un);
        Ok(Out {
            preds,
            used,
            term: annotate(
                Node::Break { con: k.to_string(), binder: x.to_string(), bound: Box::new(om.term), body: Box::new(on.term) },
                span,
                expected,
                NodeInfo::Break { outer, univ, exist },
            ),
        })
    }
}

fn collect_order(t: &Type, out: &mut Vec<TypeVar>) {
    match t {
        Type::Var(v) => {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
        Type::Con(..) => {}
        Type::App(f, a) => {
            collect_order(f, out);
            collect_order(a, out);
        }
    }
}

/// Whether `specific` is an instance of `general`: its body is a
/// substitution instance and its context entails the instantiated context.
pub fn instance_of(sigs: &Signatures, general: &Scheme, specific: &Scheme) -> bool {
    instance_witness(sigs, general, specific).is_some()
}

/// The instantiation of `general`'s quantified variables that yields `specific`.
pub fn instance_witness(sigs: &Signatures, general: &Scheme, specific: &Scheme) -> Option<Subst> {
    let mut fresh = Fresh::starting_at(1_000_000);
    let skolems: Vec<TypeVar> = specific.vars.iter().map(|v| fresh.rigid(v.kind.clone())).collect();
    let sk = Subst::from_pairs(specific.vars.iter().cloned().zip(skolems.iter().cloned().map(Type::Var)));
    let back = Subst::from_pairs(skolems.iter().cloned().zip(specific.vars.iter().cloned().map(Type::Var)));
    let spec = specific.qual.apply(&sk);
    let inst: Vec<TypeVar> = general.vars.iter().map(|v| fresh.flexible(v.kind.clone())).collect();
    let gi = Subst::from_pairs(general.vars.iter().cloned().zip(inst.iter().cloned().map(Type::Var)));
    let gen = general.qual.apply(&gi);
    let mut frozen = spec.ftv();
    frozen.extend(general.ftv());
    let s = mgu(&frozen, &gen.body, &spec.body).ok()?;
    let env = EntailEnv::new(sigs, spec.context.iter().cloned());
    let wanted = gen.context.apply(&s);
    let leftover: BTreeSet<TypeVar> = inst.iter().filter(|v| s.get(v).is_none()).cloned().collect();
    let goals: Vec<Predicate> =
        wanted.iter().map(normalize).filter(|p| !matches!(p, Predicate::Fun(_))).collect();
    let mut budget = 256;
    let fill = discharge(&env, &wanted, &leftover, &mut fresh)
        .or_else(|| search(&env, &wanted, &goals, &leftover, Subst::new(), &mut budget, &mut fresh))?;
    let full = Subst::compose(&fill, &s);
    Some(Subst::from_pairs(
        general.vars.iter().cloned().zip(inst.iter().map(|v| Type::Var(v.clone()).apply(&full).apply(&back))),
    ))
}

/// Instantiates `leftover` so that `env` entails `wanted`: by improvement
/// for arrow variables and `r ->* r` for remaining ⋆ variables.
fn discharge(env: &EntailEnv, wanted: &Preds, leftover: &BTreeSet<TypeVar>, fresh: &mut Fresh) -> Option<Subst> {
    let residual = env.simplify(wanted.iter()).ok()?;
    if residual.is_empty() {
        return Some(Subst::new());
    }
    if residual.ftv().iter().all(|v| !leftover.contains(v)) {
        return None;
    }
    let mut fill = improving_subst(env, &residual, leftover);
    for v in leftover {
        if fill.get(v).is_none() && v.kind == Kind::Star {
            let r = Type::Var(fresh.rigid(Kind::Star));
            fill.insert(v.clone(), Type::un(r.clone(), r));
        }
    }
    matches!(env.simplify(residual.apply(&fill).iter()), Ok(r) if r.is_empty()).then_some(fill)
}

/// Finds an instantiation of `leftover` under which `env` entails
/// `wanted`, trying to identify each goal with an assumption before
/// falling back to improvement.
fn search(
    env: &EntailEnv,
    wanted: &Preds,
    goals: &[Predicate],
    leftover: &BTreeSet<TypeVar>,
    s: Subst,
    budget: &mut usize,
    fresh: &mut Fresh,
) -> Option<Subst> {
    if *budget == 0 {
        return None;
    }
    *budget -= 1;
    let Some((goal, rest)) = goals.split_first() else {
        let open: BTreeSet<TypeVar> = leftover.iter().filter(|v| s.get(v).is_none()).cloned().collect();
        let more = discharge(env, &wanted.apply(&s), &open, fresh)?;
        return Some(Subst::compose(&more, &s));
    };
    let goal = normalize(&goal.apply(&s));
    if goal.ftv().iter().any(|v| leftover.contains(v)) {
        let mut fixed = env.assumptions().ftv();
        fixed.extend(goal.ftv().into_iter().filter(|v| !leftover.contains(v)));
        for a in env.assumptions() {
            let u = match (&goal, a) {
                (Predicate::Un(x), Predicate::Un(y)) => mgu(&fixed, x, y).ok(),
                (Predicate::Geq(x1, x2), Predicate::Geq(y1, y2)) => mgu(&fixed, x1, y1)
                    .ok()
                    .and_then(|u| mgu(&fixed, &x2.apply(&u), &y2.apply(&u)).ok().map(|w| Subst::compose(&w, &u))),
                _ => None,
            };
            if let Some(u) = u {
                let found = search(env, wanted, rest, leftover, Subst::compose(&u, &s), budget, fresh);
                if found.is_some() {
                    return found;
                }
            }
        }
    }
    search(env, wanted, rest, leftover, s, budget, fresh)
}
