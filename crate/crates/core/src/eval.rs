//! Big-step evaluation with indexed values and a linearity audit.
//!
//! Every introduced value receives a fresh index and is recorded in the
//! multiset `I`; every value consumed by an elimination rule is recorded
//! in `E`. After evaluation, values introduced but never consumed (nor
//! part of the result) were discarded, and values consumed more often than
//! introduced were duplicated. Either is a violation unless the value's
//! type is unrestricted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::entail::EntailEnv;
use crate::infer::{instance_witness, Elaboration};
use crate::syntax::{
    Name, Node, NodeInfo, Predicate, Preds, Signatures, Span, Subst, Term, Type, TypeVar, Types, UN_ARROW,
};

pub const DEFAULT_BUDGET: usize = 1_000_000;
const MAX_DEPTH: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("step budget of {0} rule applications exhausted")]
    BudgetExhausted(usize),
    #[error("unknown definition {0}")]
    UnknownDefinition(Name),
    #[error("stuck term: {0}")]
    Stuck(String),
}

/// A value tagged with the index of the rule that introduced it.
#[derive(Debug)]
pub struct Value {
    pub index: usize,
    pub ty: Type,
    pub shape: Shape,
}

#[derive(Debug)]
pub enum Shape {
    Lam { binder: Name, body: Arc<ETerm> },
    Inl(Arc<Value>),
    Inr(Arc<Value>),
    Con(Name, Arc<Value>),
}

/// Runtime terms: source terms in which values may be substituted.
#[derive(Debug)]
pub enum ETerm {
    Val(Arc<Value>),
    Local(Name),
    Global(Name, Vec<Type>),
    Lam { binder: Name, body: Arc<ETerm>, ty: Type },
    App(Arc<ETerm>, Arc<ETerm>),
    Inl(Arc<ETerm>, Type),
    Inr(Arc<ETerm>, Type),
    Case { scrutinee: Arc<ETerm>, left: Name, left_body: Arc<ETerm>, right: Name, right_body: Arc<ETerm> },
    Let(Name, Arc<ETerm>, Arc<ETerm>),
    Make { con: Name, arg: Arc<ETerm>, ty: Type, assumed: Preds },
    Break { con: Name, binder: Name, bound: Arc<ETerm>, body: Arc<ETerm>, assumed: Preds },
}

impl Value {
    /// Renders the value; with `indices` each constructor shows its index.
    pub fn render(&self, indices: bool) -> String {
        let tag = |s: &str| if indices { format!("{s}#{}", self.index) } else { s.to_string() };
        let arg = |v: &Value| {
            let r = v.render(indices);
            if matches!(v.shape, Shape::Lam { .. }) { r } else { format!("({r})") }
        };
        match &self.shape {
            Shape::Lam { .. } => format!("<{}>", tag("fun")),
            Shape::Inl(v) => format!("{} {}", tag("inl"), arg(v)),
            Shape::Inr(v) => format!("{} {}", tag("inr"), arg(v)),
            Shape::Con(k, v) => format!("{} {}", tag(k), arg(v)),
        }
    }

    /// The value itself and every value nested inside it, including values
    /// substituted into closure bodies, with multiplicity.
    pub fn subvalues(self: &Arc<Value>, out: &mut Vec<Arc<Value>>) {
        out.push(self.clone());
        match &self.shape {
            Shape::Lam { body, .. } => body.values(out),
            Shape::Inl(v) | Shape::Inr(v) | Shape::Con(_, v) => v.subvalues(out),
        }
    }
}

impl Value {
    /// The value as an unannotated source term, with substituted values
    /// read back in place.
    pub fn to_term(&self) -> Term {
        let node = match &self.shape {
            Shape::Lam { binder, body } => Node::Lam(binder.clone(), Box::new(body.to_term())),
            Shape::Inl(v) => Node::Inl(Box::new(v.to_term())),
            Shape::Inr(v) => Node::Inr(Box::new(v.to_term())),
            Shape::Con(k, v) => Node::Make(k.clone(), Box::new(v.to_term())),
        };
        Term::new(node, Span::default())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(false))
    }
}

impl ETerm {
    fn to_term(&self) -> Term {
        let b = |t: &Arc<ETerm>| Box::new(t.to_term());
        let node = match self {
            ETerm::Val(v) => return v.to_term(),
            ETerm::Local(x) | ETerm::Global(x, _) => Node::Var(x.clone()),
            ETerm::Lam { binder, body, .. } => Node::Lam(binder.clone(), b(body)),
            ETerm::App(m, n) => Node::App(b(m), b(n)),
            ETerm::Inl(m, _) => Node::Inl(b(m)),
            ETerm::Inr(m, _) => Node::Inr(b(m)),
            ETerm::Case { scrutinee, left, left_body, right, right_body } => Node::Case {
                scrutinee: b(scrutinee),
                left: left.clone(),
                left_body: b(left_body),
                right: right.clone(),
                right_body: b(right_body),
            },
            ETerm::Let(x, m, n) => Node::Let(x.clone(), b(m), b(n)),
            ETerm::Make { con, arg, .. } => Node::Make(con.clone(), b(arg)),
            ETerm::Break { con, binder, bound, body, .. } => {
                Node::Break { con: con.clone(), binder: binder.clone(), bound: b(bound), body: b(body) }
            }
        };
        Term::new(node, Span::default())
    }

    fn values(&self, out: &mut Vec<Arc<Value>>) {
        match self {
            ETerm::Val(v) => v.subvalues(out),
            ETerm::Local(_) | ETerm::Global(..) => {}
            ETerm::Lam { body, .. } => body.values(out),
            ETerm::App(m, n) | ETerm::Let(_, m, n) | ETerm::Break { bound: m, body: n, .. } => {
                m.values(out);
                n.values(out);
            }
            ETerm::Inl(m, _) | ETerm::Inr(m, _) | ETerm::Make { arg: m, .. } => m.values(out),
            ETerm::Case { scrutinee, left_body, right_body, .. } => {
                scrutinee.values(out);
                // Only one branch runs, so the branches share their values.
                let (mut l, mut r) = (Vec::new(), Vec::new());
                left_body.values(&mut l);
                right_body.values(&mut r);
                let count = |vs: &[Arc<Value>]| {
                    let mut m: BTreeMap<usize, (usize, Arc<Value>)> = BTreeMap::new();
                    for v in vs {
                        m.entry(v.index).or_insert((0, v.clone())).0 += 1;
                    }
                    m
                };
                let mut merged = count(&l);
                for (j, (n, v)) in count(&r) {
                    let e = merged.entry(j).or_insert((0, v));
                    e.0 = e.0.max(n);
                }
                for (n, v) in merged.into_values() {
                    out.extend(std::iter::repeat_n(v, n));
                }
            }
        }
    }

    /// `self[v/x]`.
    fn subst(self: &Arc<ETerm>, x: &str, v: &Arc<Value>) -> Arc<ETerm> {
        match &**self {
            ETerm::Local(y) if y == x => Arc::new(ETerm::Val(v.clone())),
            ETerm::Val(_) | ETerm::Local(_) | ETerm::Global(..) => self.clone(),
            ETerm::Lam { binder, body, ty } => {
                if binder == x {
                    return self.clone();
                }
                Arc::new(ETerm::Lam { binder: binder.clone(), body: body.subst(x, v), ty: ty.clone() })
            }
            ETerm::App(m, n) => Arc::new(ETerm::App(m.subst(x, v), n.subst(x, v))),
            ETerm::Inl(m, t) => Arc::new(ETerm::Inl(m.subst(x, v), t.clone())),
            ETerm::Inr(m, t) => Arc::new(ETerm::Inr(m.subst(x, v), t.clone())),
            ETerm::Case { scrutinee, left, left_body, right, right_body } => Arc::new(ETerm::Case {
                scrutinee: scrutinee.subst(x, v),
                left: left.clone(),
                left_body: if left == x { left_body.clone() } else { left_body.subst(x, v) },
                right: right.clone(),
                right_body: if right == x { right_body.clone() } else { right_body.subst(x, v) },
            }),
            ETerm::Let(y, m, n) => {
                Arc::new(ETerm::Let(y.clone(), m.subst(x, v), if y == x { n.clone() } else { n.subst(x, v) }))
            }
            ETerm::Make { con, arg, ty, assumed } => Arc::new(ETerm::Make {
                con: con.clone(),
                arg: arg.subst(x, v),
                ty: ty.clone(),
                assumed: assumed.clone(),
            }),
            ETerm::Break { con, binder, bound, body, assumed } => Arc::new(ETerm::Break {
                con: con.clone(),
                binder: binder.clone(),
                bound: bound.subst(x, v),
                body: if binder == x { body.clone() } else { body.subst(x, v) },
                assumed: assumed.clone(),
            }),
        }
    }
}

/// One rule application, listed in pre-order of the derivation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceLine {
    pub rule: &'static str,
    pub index: Option<usize>,
    pub introduced: Vec<usize>,
    pub eliminated: Vec<usize>,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |xs: &[usize]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let j = self.index.map_or("-".to_string(), |j| j.to_string());
        write!(f, "{} {} [{}] [{}]", self.rule, j, list(&self.introduced), list(&self.eliminated))
    }
}

/// Result of evaluating a closed program entry point.
#[derive(Debug)]
pub struct Outcome {
    pub value: Arc<Value>,
    pub introduced: Vec<Arc<Value>>,
    pub eliminated: Vec<Arc<Value>>,
    pub steps: usize,
    pub trace: Vec<TraceLine>,
    /// Constraints that fix the linearity of variables internal to the run.
    pub constraints: Preds,
    /// Predicates available when judging values: the entry point's context
    /// and those made visible by pattern matching.
    pub assumed: Preds,
    /// Type variables introduced by pattern matching on existentials.
    pub existentials: BTreeSet<TypeVar>,
}

struct DefCode {
    vars: Vec<TypeVar>,
    /// Instantiation from the principal scheme to the visible scheme.
    witness: Subst,
    term: Term,
}

/// Evaluates definitions of an elaborated program.
pub struct Machine<'a> {
    elab: &'a Elaboration,
    code: BTreeMap<Name, DefCode>,
    budget: usize,
    steps: usize,
    next: usize,
    depth: usize,
    introduced: Vec<Arc<Value>>,
    eliminated: Vec<Arc<Value>>,
    trace: Option<Vec<TraceLine>>,
    constraints: Preds,
    assumed: Preds,
    existentials: BTreeSet<TypeVar>,
}

impl<'a> Machine<'a> {
    pub fn new(elab: &'a Elaboration) -> Machine<'a> {
        let mut code = BTreeMap::new();
        for d in &elab.defs {
            let witness = match &d.declared {
                Some(decl) => instance_witness(&elab.signatures, &d.principal, decl).unwrap_or_default(),
                None => Subst::new(),
            };
            code.insert(d.name.clone(), DefCode { vars: d.scheme.vars.clone(), witness, term: d.term.clone() });
        }
        Machine {
            elab,
            code,
            budget: DEFAULT_BUDGET,
            steps: 0,
            next: 0,
            depth: 0,
            introduced: Vec::new(),
            eliminated: Vec::new(),
            trace: None,
            constraints: Preds::new(),
            assumed: Preds::new(),
            existentials: BTreeSet::new(),
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.trace = on.then(Vec::new);
        self
    }

    /// Evaluates definition `name` at its own scheme.
    pub fn run(mut self, name: &str) -> Result<Outcome, EvalError> {
        let def = self.elab.def(name).ok_or_else(|| EvalError::UnknownDefinition(name.to_string()))?;
        self.assumed.extend(def.scheme.qual.context.iter().cloned());
        let inst: Vec<Type> = def.scheme.vars.iter().cloned().map(Type::Var).collect();
        let term = self.instantiate(name, &inst)?;
        let value = self.eval(&term)?;
        Ok(Outcome {
            value,
            introduced: self.introduced,
            eliminated: self.eliminated,
            steps: self.steps,
            trace: self.trace.unwrap_or_default(),
            constraints: self.constraints,
            assumed: self.assumed,
            existentials: self.existentials,
        })
    }

    /// Code of a definition with its type variables instantiated.
    fn instantiate(&mut self, name: &str, inst: &[Type]) -> Result<Arc<ETerm>, EvalError> {
        let code = self.code.get(name).ok_or_else(|| EvalError::UnknownDefinition(name.to_string()))?;
        let at = Subst::from_pairs(code.vars.iter().cloned().zip(inst.iter().cloned()));
        let s = Subst::compose(&at, &code.witness);
        let term = code.term.clone();
        Ok(self.convert(&term, &s, &mut Vec::new()))
    }

    fn convert(&mut self, t: &Term, s: &Subst, bound: &mut Vec<Name>) -> Arc<ETerm> {
        let ty = t.ty().map(|ty| ty.apply(s)).unwrap_or_else(|| Type::Con("?".into(), crate::syntax::Kind::Star));
        let info = t.ann.as_ref().map(|a| a.info.clone()).unwrap_or(NodeInfo::Plain);
        let sigs: &Signatures = &self.elab.signatures;
        Arc::new(match &t.node {
            Node::Var(x) => match info {
                NodeInfo::Var { inst } if self.code.contains_key(x) && !bound.contains(x) => {
                    ETerm::Global(x.clone(), inst.apply(s))
                }
                _ => ETerm::Local(x.clone()),
            },
            Node::Lam(x, b) => ETerm::Lam { binder: x.clone(), body: self.under(x, b, s, bound), ty },
            Node::App(m, n) => ETerm::App(self.convert(m, s, bound), self.convert(n, s, bound)),
            Node::Inl(m) => ETerm::Inl(self.convert(m, s, bound), ty),
            Node::Inr(m) => ETerm::Inr(self.convert(m, s, bound), ty),
            Node::Case { scrutinee, left, left_body, right, right_body } => ETerm::Case {
                scrutinee: self.convert(scrutinee, s, bound),
                left: left.clone(),
                left_body: self.under(left, left_body, s, bound),
                right: right.clone(),
                right_body: self.under(right, right_body, s, bound),
            },
            Node::Let(x, m, n) => {
                if let NodeInfo::Let { scheme } = &info {
                    let sc = scheme.apply(s);
                    self.constraints.extend(sc.qual.context.iter().cloned());
                }
                ETerm::Let(x.clone(), self.convert(m, s, bound), self.under(x, n, s, bound))
            }
            Node::Make(k, m) => {
                let mut assumed = Preds::new();
                if let (NodeInfo::Make { outer, univ, exist }, Some(sig)) = (&info, sigs.constructor(k)) {
                    let theta = Subst::from_pairs(
                        sig.outer.iter().cloned().zip(outer.apply(s))
                            .chain(sig.univ.iter().cloned().zip(univ.iter().cloned().map(Type::Var)))
                            .chain(sig.exist.iter().cloned().zip(exist.apply(s))),
                    );
                    let (q_univ, _) = sig.split_context();
                    assumed = q_univ.apply(&theta);
                }
                self.constraints.extend(assumed.iter().cloned());
                ETerm::Make { con: k.clone(), arg: self.convert(m, s, bound), ty, assumed }
            }
            Node::Break { con, binder, bound: bound_term, body } => {
                let mut assumed = Preds::new();
                if let (NodeInfo::Break { outer, univ, exist }, Some(sig)) = (&info, sigs.constructor(con)) {
                    let theta = Subst::from_pairs(
                        sig.outer.iter().cloned().zip(outer.apply(s))
                            .chain(sig.univ.iter().cloned().zip(univ.apply(s)))
                            .chain(sig.exist.iter().cloned().zip(exist.iter().cloned().map(Type::Var))),
                    );
                    let (_, q_exist) = sig.split_context();
                    assumed = q_exist.apply(&theta);
                    self.existentials.extend(exist.iter().cloned());
                }
                ETerm::Break {
                    con: con.clone(),
                    binder: binder.clone(),
                    bound: self.convert(bound_term, s, bound),
                    body: self.under(binder, body, s, bound),
                    assumed,
                }
            }
        })
    }

    fn under(&mut self, x: &str, t: &Term, s: &Subst, bound: &mut Vec<Name>) -> Arc<ETerm> {
        bound.push(x.to_string());
        let r = self.convert(t, s, bound);
        bound.pop();
        r
    }

    fn step(&mut self) -> Result<(), EvalError> {
        self.steps += 1;
        if self.steps > self.budget || self.depth > MAX_DEPTH {
            return Err(EvalError::BudgetExhausted(self.budget));
        }
        Ok(())
    }

    fn fresh_index(&mut self) -> usize {
        let j = self.next;
        self.next += 1;
        j
    }

    fn open_trace(&mut self, rule: &'static str) -> Option<usize> {
        self.trace.as_mut().map(|t| {
            t.push(TraceLine { rule, index: None, introduced: Vec::new(), eliminated: Vec::new() });
            t.len() - 1
        })
    }

    fn close_trace(&mut self, slot: Option<usize>, index: Option<usize>, intro: bool) {
        if let (Some(t), Some(i)) = (self.trace.as_mut(), slot) {
            t[i].index = index;
            if let Some(j) = index {
                if intro {
                    t[i].introduced.push(j);
                } else {
                    t[i].eliminated.push(j);
                }
            }
        }
    }

    fn introduce(&mut self, ty: &Type, shape: Shape) -> Arc<Value> {
        let v = Arc::new(Value { index: self.fresh_index(), ty: ty.clone(), shape });
        self.introduced.push(v.clone());
        v
    }

    fn eval(&mut self, t: &Arc<ETerm>) -> Result<Arc<Value>, EvalError> {
        self.depth += 1;
        let r = self.eval_inner(t);
        self.depth -= 1;
        r
    }

    fn eval_inner(&mut self, t: &Arc<ETerm>) -> Result<Arc<Value>, EvalError> {
        match &**t {
            ETerm::Val(v) => Ok(v.clone()),
            ETerm::Local(x) => Err(EvalError::Stuck(format!("free variable {x}"))),
            ETerm::Global(x, inst) => {
                let code = self.instantiate(x, inst)?;
                self.eval(&code)
            }
            ETerm::Lam { binder, body, ty } => {
                self.step()?;
                let slot = self.open_trace("LAM");
                let v = self.introduce(ty, Shape::Lam { binder: binder.clone(), body: body.clone() });
                self.close_trace(slot, Some(v.index), true);
                Ok(v)
            }
            ETerm::App(m, n) => {
                self.step()?;
                let slot = self.open_trace("APP");
                let f = self.eval(m)?;
                let Shape::Lam { binder, body } = &f.shape else {
                    return Err(EvalError::Stuck("application of a non-function".into()));
                };
                self.eliminated.push(f.clone());
                self.close_trace(slot, Some(f.index), false);
                let a = self.eval(n)?;
                self.eval(&body.subst(binder, &a))
            }
            ETerm::Inl(m, ty) | ETerm::Inr(m, ty) => {
                self.step()?;
                let left = matches!(**t, ETerm::Inl(..));
                let slot = self.open_trace(if left { "INL" } else { "INR" });
                let v = self.eval(m)?;
                let w = self.introduce(ty, if left { Shape::Inl(v) } else { Shape::Inr(v) });
                self.close_trace(slot, Some(w.index), true);
                Ok(w)
            }
            ETerm::Case { scrutinee, left, left_body, right, right_body } => {
                self.step()?;
                let slot = self.open_trace("CASE");
                let s = self.eval(scrutinee)?;
                self.eliminated.push(s.clone());
                self.close_trace(slot, Some(s.index), false);
                match &s.shape {
                    Shape::Inl(v) => self.eval(&left_body.subst(left, v)),
                    Shape::Inr(v) => self.eval(&right_body.subst(right, v)),
                    _ => Err(EvalError::Stuck("case on a non-sum".into())),
                }
            }
            ETerm::Let(x, m, n) => {
                self.step()?;
                let slot = self.open_trace("LET");
                self.close_trace(slot, None, false);
                let v = self.eval(m)?;
                self.eval(&n.subst(x, &v))
            }
            ETerm::Make { con, arg, ty, .. } => {
                self.step()?;
                let slot = self.open_trace("MAKE");
                let v = self.eval(arg)?;
                let w = self.introduce(ty, Shape::Con(con.clone(), v));
                self.close_trace(slot, Some(w.index), true);
                Ok(w)
            }
            ETerm::Break { binder, bound, body, assumed, .. } => {
                self.step()?;
                let slot = self.open_trace("BREAK");
                let s = self.eval(bound)?;
                let Shape::Con(_, v) = &s.shape else {
                    return Err(EvalError::Stuck("pattern match on a non-constructor".into()));
                };
                self.eliminated.push(s.clone());
                self.close_trace(slot, Some(s.index), false);
                self.assumed.extend(assumed.iter().cloned());
                self.eval(&body.subst(binder, v))
            }
        }
    }
}

/// Kind of linearity violation found by the audit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    Discarded,
    Duplicated,
}

#[derive(Clone, Debug)]
pub struct Violation {
    pub kind: ViolationKind,
    pub index: usize,
    pub ty: Type,
    pub value: String,
}

#[derive(Clone, Debug, Default)]
pub struct AuditReport {
    /// Indices introduced but neither consumed nor part of the result.
    pub discarded: Vec<usize>,
    /// Indices consumed or retained more often than introduced.
    pub duplicated: Vec<usize>,
    pub violations: Vec<Violation>,
}

/// Chooses arrows for arrow variables internal to a run: `->*` unless a
/// constraint `t >= f` with non-unrestricted `t` forces `-o`.
pub fn internal_defaults(
    sigs: &Signatures,
    outcome: &Outcome,
    external: &BTreeSet<TypeVar>,
) -> (Subst, Preds) {
    let mut vars = BTreeSet::new();
    for v in &outcome.introduced {
        v.ty.ftv_into(&mut vars);
    }
    outcome.constraints.ftv_into(&mut vars);
    outcome.assumed.ftv_into(&mut vars);
    let internal: Vec<TypeVar> = vars.into_iter().filter(|v| !external.contains(v)).collect();
    let (forced, mut assumed) = forced_arrows(outcome.assumed.clone());
    for v in &internal {
        if !v.kind.is_function() && !outcome.existentials.contains(v) {
            assumed.insert(Predicate::Un(Type::Var(v.clone())));
        }
    }
    let arrows: Vec<&TypeVar> = internal.iter().filter(|v| v.kind.is_function()).collect();
    let mut linear: BTreeSet<TypeVar> = BTreeSet::new();
    loop {
        let chosen = Subst::from_pairs(arrows.iter().filter(|v| forced.get(v).is_none()).map(|v| {
            let t = if linear.contains(*v) { Type::lin_con() } else { Type::un_con() };
            ((*v).clone(), t)
        }));
        let s = Subst::compose(&chosen, &forced);
        let env = EntailEnv::new(sigs, assumed.apply(&s));
        let mut changed = false;
        for p in &outcome.constraints {
            let Predicate::Geq(l, r) = p else { continue };
            let Some(f) = r.head().as_var() else { continue };
            if !arrows.contains(&f) || linear.contains(f) || forced.get(f).is_some() {
                continue;
            }
            if !matches!(env.entails(&Predicate::Un(l.apply(&s))), Ok(true)) {
                linear.insert(f.clone());
                changed = true;
            }
        }
        if !changed {
            return (s.clone(), assumed.apply(&s));
        }
    }
}

/// An arrow variable assumed `Un` can only be `->*`. Substitutes that and
/// turns each resulting `t >= ->*` into `Un t`, until nothing changes.
fn forced_arrows(mut assumed: Preds) -> (Subst, Preds) {
    let mut forced = Subst::new();
    loop {
        let step = Subst::from_pairs(assumed.iter().filter_map(|p| match p {
            Predicate::Un(Type::Var(v)) if v.kind.is_function() => Some((v.clone(), Type::un_con())),
            _ => None,
        }));
        if step.is_empty() {
            return (forced, assumed);
        }
        forced = Subst::compose(&step, &forced);
        assumed = assumed
            .apply(&step)
            .into_iter()
            .map(|p| match p {
                Predicate::Geq(l, r) if r.head().is_con(UN_ARROW) => Predicate::Un(l),
                p => p,
            })
            .collect();
    }
}

/// Compares introduced and eliminated values and judges each discrepancy
/// by whether its type is unrestricted.
pub fn audit(sigs: &Signatures, outcome: &Outcome, external: &BTreeSet<TypeVar>) -> AuditReport {
    let (defaults, assumed) = internal_defaults(sigs, outcome, external);
    let env = EntailEnv::new(sigs, assumed);
    let mut counts: BTreeMap<usize, (usize, usize, Arc<Value>)> = BTreeMap::new();
    for v in &outcome.introduced {
        counts.entry(v.index).or_insert((0, 0, v.clone())).0 += 1;
    }
    let mut retained = Vec::new();
    outcome.value.subvalues(&mut retained);
    for v in outcome.eliminated.iter().chain(retained.iter()) {
        counts.entry(v.index).or_insert((0, 0, v.clone())).1 += 1;
    }
    let mut report = AuditReport::default();
    for (j, (intro, elim, v)) in counts {
        let kind = if intro > elim {
            report.discarded.push(j);
            ViolationKind::Discarded
        } else if elim > intro {
            report.duplicated.push(j);
            ViolationKind::Duplicated
        } else {
            continue;
        };
        let ty = v.ty.apply(&defaults);
        if !matches!(env.entails(&Predicate::Un(ty.clone())), Ok(true)) {
            report.violations.push(Violation { kind, index: j, ty, value: v.render(true) });
        }
    }
    report
}

/// Runs `name` and audits the result against its scheme.
pub fn run_and_audit(elab: &Elaboration, name: &str, budget: usize, trace: bool) -> Result<(Outcome, AuditReport), EvalError> {
    let external: BTreeSet<TypeVar> = elab
        .def(name)
        .map(|d| d.scheme.vars.iter().cloned().collect())
        .unwrap_or_default();
    let outcome = Machine::new(elab).with_budget(budget).with_trace(trace).run(name)?;
    let report = audit(&elab.signatures, &outcome, &external);
    Ok((outcome, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infer::infer_program;
    use crate::parser::parse_program;

    fn run(src: &str) -> (Outcome, AuditReport) {
        let e = infer_program(&parse_program(src).unwrap()).unwrap();
        run_and_audit(&e, "main", DEFAULT_BUDGET, true).unwrap()
    }

    #[test]
    fn identity_applied_to_injection() {
        let (o, r) = run("def main = (\\x -> x) (inl (\\y -> y));");
        assert_eq!(o.value.to_string(), "inl <fun>");
        assert!(r.violations.is_empty());
        assert!(r.discarded.is_empty() && r.duplicated.is_empty());
    }

    #[test]
    fn shared_closure_is_duplicated_but_unrestricted() {
        let (o, r) = run("def main = let g = \\x -> x in g (g (inl (\\z -> z)));");
        assert_eq!(o.value.to_string(), "inl <fun>");
        assert_eq!(r.duplicated.len(), 1);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn trace_is_preorder() {
        let (o, _) = run("def main = (\\x -> x) (\\y -> y);");
        let lines: Vec<String> = o.trace.iter().map(|l| l.to_string()).collect();
        assert_eq!(lines, vec!["APP 0 [] [0]", "LAM 0 [0] []", "LAM 1 [1] []"]);
    }

    #[test]
    fn budget_is_enforced() {
        let src = "def two = \\f -> \\x -> f (f x); def main = two two two two (\\z -> z);";
        let e = infer_program(&parse_program(src).unwrap()).unwrap();
        assert!(matches!(run_and_audit(&e, "main", 10, false), Err(EvalError::BudgetExhausted(10))));
        assert!(run_and_audit(&e, "main", DEFAULT_BUDGET, false).is_ok());
    }

    #[test]
    fn case_branches_share_retained_values() {
        let src = "def main = (\\x1 -> \\x3 -> case x3 of { inl a -> x1 ; inr b -> x1 }) (\\z -> z);";
        let (_, r) = run(src);
        assert!(r.duplicated.is_empty() && r.violations.is_empty(), "{r:?}");
    }

    #[test]
    fn arrows_assumed_unrestricted_are_forced() {
        let f = TypeVar::new("f", crate::syntax::Kind::function());
        let g = TypeVar::new("g", crate::syntax::Kind::function());
        let assumed: Preds = [
            Predicate::Un(Type::Var(f.clone())),
            Predicate::Geq(Type::Var(g.clone()), Type::Var(f.clone())),
        ]
        .into_iter()
        .collect();
        let (s, out) = forced_arrows(assumed);
        assert_eq!(s.get(&f), Some(&Type::un_con()));
        assert_eq!(s.get(&g), Some(&Type::un_con()));
        assert!(out.contains(&Predicate::Un(Type::un_con())));
    }

    #[test]
    fn contraction_through_a_captured_closure() {
        let src = "def main = (\\x1 -> inl (\\x2 -> let x3 = x1 in x1)) (inl ((\\x4 -> \\x5 -> x4) (\\x6 -> \\x7 -> x6)));";
        let (_, r) = run(src);
        assert!(!r.duplicated.is_empty() && r.violations.is_empty(), "{r:?}");
    }
}
