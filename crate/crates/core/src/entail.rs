//! Predicate entailment, simplification and improvement.
//!
//! Goals are reduced by the structural rules for `Fun`, `Un` and `>=`;
//! whatever cannot be reduced further and is not an assumption is returned
//! as a residual. A goal that no instance could satisfy is an error.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::syntax::{
    Kind, Predicate, Preds, Scheme, Signatures, Subst, Type, TypeVar, Types, SUM, UN_ARROW,
};
use crate::syntax::LIN_ARROW;

const MAX_DEPTH: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EntailError {
    #[error("unsatisfiable predicate {0:?}")]
    Unsatisfiable(Predicate),
    #[error("unknown datatype {0}")]
    UnknownDatatype(String),
}

/// Entailment context: datatype signatures plus assumed predicates.
#[derive(Clone, Debug)]
pub struct EntailEnv<'a> {
    pub signatures: &'a Signatures,
    assumptions: Preds,
}

fn is_arrow_var(t: &Type) -> bool {
    matches!(t, Type::Var(v) if v.kind.is_function())
}

fn is_arrow_head(t: &Type) -> bool {
    is_arrow_var(t) || t.is_con(LIN_ARROW) || t.is_con(UN_ARROW)
}

/// Rewrites a predicate into the form used for lookups: arguments of an
/// arrow-kinded head are dropped where the rules make them irrelevant.
pub fn normalize(p: &Predicate) -> Predicate {
    match p {
        Predicate::Un(t) => {
            let h = t.head();
            if is_arrow_var(h) {
                Predicate::Un(h.clone())
            } else {
                p.clone()
            }
        }
        Predicate::Geq(l, r) => {
            let lh = l.head();
            let l = if is_arrow_head(lh) { lh.clone() } else { l.clone() };
            Predicate::Geq(l, r.head().clone())
        }
        Predicate::Fun(_) => p.clone(),
    }
}

fn close_into(p: &Predicate, out: &mut Preds) {
    let n = normalize(p);
    if let Predicate::Un(t) = &n {
        let (h, args) = t.spine();
        if h.is_con(SUM) && args.len() == 2 {
            close_into(&Predicate::Un(args[0].clone()), out);
            close_into(&Predicate::Un(args[1].clone()), out);
        }
    }
    out.insert(n);
}

impl<'a> EntailEnv<'a> {
    pub fn new(signatures: &'a Signatures, assumptions: impl IntoIterator<Item = Predicate>) -> Self {
        let mut closed = Preds::new();
        for p in assumptions {
            close_into(&p, &mut closed);
        }
        EntailEnv { signatures, assumptions: closed }
    }

    pub fn empty(signatures: &'a Signatures) -> Self {
        EntailEnv::new(signatures, [])
    }

    pub fn with(&self, more: impl IntoIterator<Item = Predicate>) -> EntailEnv<'a> {
        let mut env = self.clone();
        for p in more {
            close_into(&p, &mut env.assumptions);
        }
        env
    }

    pub fn assumptions(&self) -> &Preds {
        &self.assumptions
    }

    fn solver(&self) -> Solver<'a> {
        Solver { sigs: self.signatures, in_flight: Vec::new(), fresh: 0 }
    }

    /// Predicates left over after reducing `goal`.
    pub fn residual(&self, goal: &Predicate) -> Result<Preds, EntailError> {
        let mut out = Preds::new();
        self.solver().solve(&self.assumptions, goal, &mut out)?;
        Ok(out)
    }

    /// Reduces a set of goals to an equivalent set of irreducible predicates.
    pub fn simplify<'p>(&self, goals: impl IntoIterator<Item = &'p Predicate>) -> Result<Preds, EntailError> {
        let mut out = Preds::new();
        let mut solver = self.solver();
        for g in goals {
            solver.solve(&self.assumptions, g, &mut out)?;
        }
        Ok(out)
    }

    pub fn entails(&self, goal: &Predicate) -> Result<bool, EntailError> {
        match self.residual(goal) {
            Ok(r) => Ok(r.is_empty()),
            Err(EntailError::Unsatisfiable(_)) => Ok(false),
            Err(e) => Err(e),
        }
    }

    pub fn entails_all<'p>(&self, goals: impl IntoIterator<Item = &'p Predicate>) -> Result<bool, EntailError> {
        for g in goals {
            if !self.entails(g)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Conditions on the free variables of `scheme` under which every value
    /// of that scheme may be duplicated or discarded.
    pub fn un_scheme(&self, scheme: &Scheme) -> Result<Preds, EntailError> {
        self.solver().un_scheme(&self.assumptions, scheme)
    }
}

struct Solver<'a> {
    sigs: &'a Signatures,
    in_flight: Vec<Predicate>,
    fresh: u32,
}

struct Skolems {
    subst: Subst,
    vars: BTreeSet<TypeVar>,
    assumed: Vec<Predicate>,
}

impl<'a> Solver<'a> {
    fn skolem(&mut self, kind: Kind) -> TypeVar {
        self.fresh += 1;
        TypeVar::rigid(format!("sk#{}", self.fresh), kind)
    }

    /// Replaces universally quantified variables by the most permissive
    /// instance: `->*` for arrow variables carrying `Fun`, otherwise skolems
    /// assumed unrestricted.
    fn skolemize_universal(&mut self, vars: &[TypeVar], context: &Preds, sk: &mut Skolems) {
        for v in vars {
            if v.kind.is_function() && context.contains(&Predicate::Fun(Type::Var(v.clone()))) {
                sk.subst.insert(v.clone(), Type::un_con());
            } else {
                let s = self.skolem(v.kind.clone());
                sk.assumed.push(Predicate::Un(Type::Var(s.clone())));
                sk.subst.insert(v.clone(), Type::Var(s.clone()));
                sk.vars.insert(s);
            }
        }
    }

    fn un_scheme(&mut self, assume: &Preds, scheme: &Scheme) -> Result<Preds, EntailError> {
        let mut sk = Skolems { subst: Subst::new(), vars: BTreeSet::new(), assumed: Vec::new() };
        self.skolemize_universal(&scheme.vars, &scheme.qual.context, &mut sk);
        let mut local = assume.clone();
        for p in &sk.assumed {
            close_into(p, &mut local);
        }
        let body = scheme.qual.body.apply(&sk.subst);
        let mut goals: Vec<Predicate> = scheme.qual.context.apply(&sk.subst).into_iter().collect();
        goals.push(Predicate::Un(body.clone()));
        let mut out = Preds::new();
        for g in &goals {
            self.solve(&local, g, &mut out)?;
        }
        if out.iter().any(|p| p.ftv().iter().any(|v| sk.vars.contains(v))) {
            return Err(EntailError::Unsatisfiable(Predicate::Un(scheme.qual.body.clone())));
        }
        Ok(out)
    }

    fn holds(&mut self, assume: &Preds, goal: &Predicate) -> Result<bool, EntailError> {
        let mut out = Preds::new();
        match self.solve(assume, goal, &mut out) {
            Ok(()) => Ok(out.is_empty()),
            Err(EntailError::Unsatisfiable(_)) => Ok(false),
            Err(e) => Err(e),
        }
    }

    fn solve(&mut self, assume: &Preds, goal: &Predicate, out: &mut Preds) -> Result<(), EntailError> {
        let g = normalize(goal);
        if assume.contains(&g) {
            return Ok(());
        }
        let unsat = || Err(EntailError::Unsatisfiable(goal.clone()));
        match &g {
            Predicate::Fun(t) => match t {
                Type::Con(n, _) if n == LIN_ARROW || n == UN_ARROW => Ok(()),
                Type::Var(_) => {
                    out.insert(g);
                    Ok(())
                }
                _ => unsat(),
            },
            Predicate::Un(t) => {
                let (h, args) = t.spine();
                match h {
                    Type::Con(n, _) if n == LIN_ARROW => unsat(),
                    Type::Con(n, _) if n == UN_ARROW => Ok(()),
                    Type::Con(n, _) if n == SUM => {
                        if args.len() != 2 {
                            return unsat();
                        }
                        self.solve(assume, &Predicate::Un(args[0].clone()), out)?;
                        self.solve(assume, &Predicate::Un(args[1].clone()), out)
                    }
                    Type::Con(n, _) => self.datatype(assume, n, &args, &g, out),
                    Type::Var(v) => {
                        if !args.is_empty() && assume.contains(&Predicate::Un(Type::Var(v.clone()))) {
                            return Ok(());
                        }
                        out.insert(g);
                        Ok(())
                    }
                    Type::App(..) => unreachable!("spine head is never an application"),
                }
            }
            Predicate::Geq(l, r) => match r {
                Type::Con(n, _) if n == LIN_ARROW => Ok(()),
                Type::Con(n, _) if n == UN_ARROW => self.solve(assume, &Predicate::Un(l.clone()), out),
                Type::Var(_) => {
                    if l == r || self.holds(assume, &Predicate::Un(l.clone()))? {
                        return Ok(());
                    }
                    out.insert(g);
                    Ok(())
                }
                _ => unsat(),
            },
        }
    }

    fn datatype(
        &mut self,
        assume: &Preds,
        name: &str,
        args: &[&Type],
        goal: &Predicate,
        out: &mut Preds,
    ) -> Result<(), EntailError> {
        if self.in_flight.contains(goal) {
            return Ok(());
        }
        let sig = match self.sigs.constructor_of(name) {
            Some(sig) => sig.clone(),
            None if self.sigs.datatypes.contains_key(name) => {
                return Err(EntailError::Unsatisfiable(goal.clone()))
            }
            None => return Err(EntailError::UnknownDatatype(name.to_string())),
        };
        if args.len() != sig.outer.len() || self.in_flight.len() >= MAX_DEPTH {
            return Err(EntailError::Unsatisfiable(goal.clone()));
        }
        self.in_flight.push(goal.clone());
        let result = self.datatype_payload(assume, &sig, args, goal, out);
        self.in_flight.pop();
        result
    }

    fn datatype_payload(
        &mut self,
        assume: &Preds,
        sig: &crate::syntax::ConstructorSig,
        args: &[&Type],
        goal: &Predicate,
        out: &mut Preds,
    ) -> Result<(), EntailError> {
        let mut sk = Skolems { subst: Subst::new(), vars: BTreeSet::new(), assumed: Vec::new() };
        for (v, a) in sig.outer.iter().zip(args) {
            sk.subst.insert(v.clone(), (*a).clone());
        }
        self.skolemize_universal(&sig.univ, &sig.context, &mut sk);
        for v in &sig.exist {
            let s = self.skolem(v.kind.clone());
            sk.subst.insert(v.clone(), Type::Var(s.clone()));
            sk.vars.insert(s);
        }
        let (q_univ, q_exist) = sig.split_context();
        let mut local = assume.clone();
        for p in sk.assumed.iter().chain(q_exist.apply(&sk.subst).iter()) {
            close_into(p, &mut local);
        }
        let mut goals: Vec<Predicate> = q_univ.apply(&sk.subst).into_iter().collect();
        goals.push(Predicate::Un(sig.payload.apply(&sk.subst)));
        let mut sub = Preds::new();
        for g in &goals {
            self.solve(&local, g, &mut sub)?;
        }
        if sub.iter().any(|p| p.ftv().iter().any(|v| sk.vars.contains(v))) {
            return Err(EntailError::Unsatisfiable(goal.clone()));
        }
        out.extend(sub);
        Ok(())
    }
}

fn occurs_outside_rhs(v: &TypeVar, p: &Predicate) -> bool {
    match p {
        Predicate::Fun(_) => false,
        Predicate::Un(t) => t.as_var() != Some(v) && t.occurs(v),
        Predicate::Geq(l, r) => l.occurs(v) || (r.occurs(v) && r.as_var() != Some(v)),
    }
}

/// Chooses concrete arrows for ambiguous arrow variables: `->*` when the
/// variable must be unrestricted or only bounds other types from above,
/// `-o` otherwise. A choice that makes `preds` unsatisfiable is swapped for
/// the other arrow; if both fail the variable is left alone.
pub fn improving_subst(env: &EntailEnv, preds: &Preds, ambiguous: &BTreeSet<TypeVar>) -> Subst {
    let mut s = Subst::new();
    for v in ambiguous {
        if !v.kind.is_function() || v.is_rigid() {
            continue;
        }
        let var = Type::Var(v.clone());
        let current = preds.apply(&s);
        if !current.contains(&Predicate::Fun(var.clone())) {
            continue;
        }
        let wants_un = current.contains(&Predicate::Un(var.clone()));
        let on_rhs = current.iter().any(|p| matches!(p, Predicate::Geq(_, r) if *r == var));
        let elsewhere = current.iter().any(|p| occurs_outside_rhs(v, p));
        let preferred = if wants_un || (elsewhere && !on_rhs) {
            [Type::un_con(), Type::lin_con()]
        } else {
            [Type::lin_con(), Type::un_con()]
        };
        for choice in preferred {
            let trial = Subst::compose(&Subst::singleton(v.clone(), choice), &s);
            if env.simplify(preds.apply(&trial).iter()).is_ok() {
                s = trial;
                break;
            }
        }
    }
    s
}
