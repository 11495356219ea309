//! Canonical naming and ordering of schemes.
//!
//! Star-kinded variables become `t u v w t1 ...`, arrow variables
//! `f g h k f1 ...` and all others `a b c d a1 ...`. Arrow variables are
//! named first by their appearance in the non-`Fun` context, then by the
//! body; star variables by the body first.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use crate::pretty::pred_to_string;
use crate::syntax::{Kind, Predicate, Preds, QualType, Scheme, Subst, Type, TypeVar, Types};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Class {
    Star,
    Arrow,
    Other,
}

fn class(k: &Kind) -> Class {
    match k {
        Kind::Star => Class::Star,
        k if k.is_function() => Class::Arrow,
        _ => Class::Other,
    }
}

fn letters(c: Class) -> &'static [&'static str] {
    match c {
        Class::Star => &["t", "u", "v", "w"],
        Class::Arrow => &["f", "g", "h", "k"],
        Class::Other => &["a", "b", "c", "d"],
    }
}

/// The `i`-th canonical name of a class.
fn canonical_name(c: Class, i: usize) -> String {
    let l = letters(c);
    if i < l.len() {
        l[i].to_string()
    } else {
        format!("{}{}", l[0], i - l.len() + 1)
    }
}

/// Sort key placing canonical names in sequence order before anything else.
fn name_key(name: &str) -> (usize, String) {
    for c in [Class::Star, Class::Arrow, Class::Other] {
        let l = letters(c);
        if let Some(i) = l.iter().position(|x| *x == name) {
            return (i, String::new());
        }
        if let Some(rest) = name.strip_prefix(l[0]) {
            if let Ok(n) = rest.parse::<usize>() {
                if n > 0 && !rest.starts_with('0') {
                    return (l.len() + n - 1, String::new());
                }
            }
        }
    }
    (usize::MAX, name.to_string())
}

fn cmp_vars(a: &TypeVar, b: &TypeVar) -> Ordering {
    name_key(&a.name).cmp(&name_key(&b.name)).then_with(|| a.cmp(b))
}

fn preorder(t: &Type, out: &mut Vec<TypeVar>) {
    match t {
        Type::Var(v) => {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
        Type::Con(..) => {}
        Type::App(f, a) => {
            preorder(f, out);
            preorder(a, out);
        }
    }
}

fn pred_order(p: &Predicate) -> Vec<TypeVar> {
    let mut out = Vec::new();
    for t in p.types() {
        preorder(t, &mut out);
    }
    out
}

fn pred_rank(p: &Predicate) -> u8 {
    match p {
        Predicate::Fun(_) => 0,
        Predicate::Un(_) => 1,
        Predicate::Geq(..) => 2,
    }
}

/// Orders predicates by shape, with body variables replaced by their
/// position and other bound variables by a placeholder.
fn placeholder_key(p: &Predicate, body: &[TypeVar], bound: &BTreeSet<TypeVar>) -> String {
    let mut s = Subst::new();
    for v in p.ftv() {
        if !bound.contains(&v) {
            continue;
        }
        let name = match body.iter().position(|b| *b == v) {
            Some(i) => format!("#{i:04}"),
            None => "?".to_string(),
        };
        s.insert(v.clone(), Type::Var(TypeVar { name, ..v }));
    }
    pred_to_string(&p.apply(&s))
}

/// Renames bound variables canonically and orders the quantifier list.
///
/// Variables that occur only in the context are not ordered by the body, so
/// every ordering of them is tried and the least printed result is kept.
pub fn canonicalize(scheme: &Scheme) -> Scheme {
    let mut in_body = Vec::new();
    preorder(&scheme.qual.body, &mut in_body);
    let loose: Vec<TypeVar> = scheme.vars.iter().filter(|v| !in_body.contains(v)).cloned().collect();
    if loose.len() < 2 || loose.len() > MAX_PERMUTED {
        return fixpoint(scheme);
    }
    let mut best: Option<(String, Scheme)> = None;
    for order in permutations(loose.len()) {
        let renaming = Subst::from_pairs(order.iter().enumerate().map(|(i, &j)| {
            let v = &loose[j];
            (v.clone(), Type::Var(TypeVar { name: format!("~{i}"), ..v.clone() }))
        }));
        let candidate = fixpoint(&Scheme {
            vars: scheme.vars.iter().map(|v| renaming.get(v).and_then(Type::as_var).unwrap_or(v).clone()).collect(),
            qual: scheme.qual.apply(&renaming),
        });
        let key = crate::pretty::scheme_to_string(&candidate);
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            best = Some((key, candidate));
        }
    }
    best.unwrap().1
}

const MAX_PERMUTED: usize = 6;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn fixpoint(scheme: &Scheme) -> Scheme {
    let mut current = scheme.clone();
    for _ in 0..4 {
        let next = canonicalize_once(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

fn canonicalize_once(scheme: &Scheme) -> Scheme {
    let bound: BTreeSet<TypeVar> = scheme.vars.iter().cloned().collect();
    let mut body_order = Vec::new();
    preorder(&scheme.qual.body, &mut body_order);
    body_order.retain(|v| bound.contains(v));

    let mut others: Vec<&Predicate> =
        scheme.qual.context.iter().filter(|p| !matches!(p, Predicate::Fun(_))).collect();
    others.sort_by(|a, b| {
        pred_rank(a)
            .cmp(&pred_rank(b))
            .then_with(|| {
                placeholder_key(a, &body_order, &bound).cmp(&placeholder_key(b, &body_order, &bound))
            })
            .then_with(|| {
                let mut va = pred_order(a);
                let mut vb = pred_order(b);
                va.retain(|v| bound.contains(v));
                vb.retain(|v| bound.contains(v));
                let ka: Vec<_> = va.iter().map(|v| name_key(&v.name)).collect();
                let kb: Vec<_> = vb.iter().map(|v| name_key(&v.name)).collect();
                ka.cmp(&kb)
            })
    });
    let mut ctx_order = Vec::new();
    for p in &others {
        for v in pred_order(p) {
            if bound.contains(&v) && !ctx_order.contains(&v) {
                ctx_order.push(v);
            }
        }
    }
    let mut rest: Vec<TypeVar> = scheme
        .vars
        .iter()
        .filter(|v| !body_order.contains(v) && !ctx_order.contains(v))
        .cloned()
        .collect();
    rest.sort_by(cmp_vars);

    let mut naming: Vec<TypeVar> = Vec::new();
    let push_all = |vs: &[TypeVar], naming: &mut Vec<TypeVar>| {
        for v in vs {
            if !naming.contains(v) {
                naming.push(v.clone());
            }
        }
    };
    let arrows_first: Vec<TypeVar> =
        ctx_order.iter().filter(|v| class(&v.kind) == Class::Arrow).cloned().collect();
    push_all(&arrows_first, &mut naming);
    push_all(&body_order, &mut naming);
    push_all(&ctx_order, &mut naming);
    push_all(&rest, &mut naming);

    let free: BTreeSet<String> = scheme.ftv().into_iter().map(|v| v.name).collect();
    let mut counters: BTreeMap<Class, usize> = BTreeMap::new();
    let mut s = Subst::new();
    let mut renamed: BTreeMap<TypeVar, TypeVar> = BTreeMap::new();
    for v in &naming {
        let c = class(&v.kind);
        let i = counters.entry(c).or_insert(0);
        let name = loop {
            let n = canonical_name(c, *i);
            *i += 1;
            if !free.contains(&n) {
                break n;
            }
        };
        let nv = TypeVar { name, kind: v.kind.clone(), flavor: v.flavor };
        s.insert(v.clone(), Type::Var(nv.clone()));
        renamed.insert(v.clone(), nv);
    }

    let mut quantified: Vec<TypeVar> = Vec::new();
    for c in [Class::Star, Class::Arrow, Class::Other] {
        for v in body_order.iter().chain(naming.iter()) {
            if class(&v.kind) == c && !quantified.contains(&renamed[v]) {
                quantified.push(renamed[v].clone());
            }
        }
    }
    let context: Preds = scheme.qual.context.apply(&s);
    Scheme { vars: quantified, qual: QualType { context, body: scheme.qual.body.apply(&s) } }
}
