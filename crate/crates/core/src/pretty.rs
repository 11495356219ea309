//! Concrete syntax printing for types, schemes, terms and programs.
//!
//! Output re-parses to the same tree. Arrow variables whose only role is to
//! annotate arrows are printed as `a -f> b` with their `Fun` predicate elided.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::syntax::{
    ConstructorSig, Decl, Def, Node, Predicate, Preds, Program, QualType, Scheme, Term, Type,
    TypeVar, LIN_ARROW, SUM, UN_ARROW,
};

const PREC_SUM: u8 = 0;
const PREC_ARROW: u8 = 1;
const PREC_APP: u8 = 2;
const PREC_ATOM: u8 = 3;

/// Arrow variables printed as labels.
#[derive(Clone, Debug, Default)]
pub struct Labels(BTreeSet<TypeVar>);

impl Labels {
    pub fn none() -> Labels {
        Labels::default()
    }

    /// Variables with `Fun` in `context` that occur in `types` only as arrow
    /// heads, and at least once there.
    pub fn infer<'a>(context: &Preds, types: impl IntoIterator<Item = &'a Type>) -> Labels {
        let types: Vec<&Type> = types.into_iter().collect();
        let mut out = BTreeSet::new();
        for p in context {
            let Predicate::Fun(Type::Var(f)) = p else { continue };
            if !f.kind.is_function() {
                continue;
            }
            let mut labels = 0;
            let mut other = 0;
            for t in &types {
                count(t, f, &mut labels, &mut other);
            }
            for q in context {
                match q {
                    Predicate::Fun(_) => {}
                    Predicate::Un(t) => count_side(t, f, &mut labels, &mut other),
                    Predicate::Geq(l, r) => {
                        count_side(l, f, &mut labels, &mut other);
                        count_side(r, f, &mut labels, &mut other);
                    }
                }
            }
            if labels > 0 && other == 0 {
                out.insert(f.clone());
            }
        }
        Labels(out)
    }

    fn contains(&self, v: &TypeVar) -> bool {
        self.0.contains(v)
    }
}

fn count_side(t: &Type, f: &TypeVar, labels: &mut usize, other: &mut usize) {
    if t.as_var() != Some(f) {
        count(t, f, labels, other);
    }
}

fn count(t: &Type, f: &TypeVar, labels: &mut usize, other: &mut usize) {
    if let Some((h, a, b)) = t.as_binary() {
        if h.as_var() == Some(f) {
            *labels += 1;
            count(a, f, labels, other);
            count(b, f, labels, other);
            return;
        }
    }
    match t {
        Type::Var(v) if v == f => *other += 1,
        Type::App(x, y) => {
            count(x, f, labels, other);
            count(y, f, labels, other);
        }
        _ => {}
    }
}

pub fn type_to_string(t: &Type) -> String {
    let mut s = String::new();
    write_type(&mut s, t, &Labels::none(), PREC_SUM);
    s
}

pub fn type_with_labels(t: &Type, labels: &Labels) -> String {
    let mut s = String::new();
    write_type(&mut s, t, labels, PREC_SUM);
    s
}

fn paren(out: &mut String, open: bool, f: impl FnOnce(&mut String)) {
    if open {
        out.push('(');
    }
    f(out);
    if open {
        out.push(')');
    }
}

fn write_type(out: &mut String, t: &Type, labels: &Labels, prec: u8) {
    if let Some((h, a, b)) = t.as_binary() {
        let op = match h {
            Type::Con(n, _) if n == SUM => Some(None),
            Type::Con(n, _) if n == LIN_ARROW => Some(Some(" -o ".to_string())),
            Type::Con(n, _) if n == UN_ARROW => Some(Some(" ->* ".to_string())),
            Type::Var(v) if labels.contains(v) => Some(Some(format!(" -{}> ", v.name))),
            _ => None,
        };
        match op {
            Some(None) => {
                paren(out, prec > PREC_SUM, |out| {
                    write_type(out, a, labels, PREC_ARROW);
                    out.push_str(" + ");
                    write_type(out, b, labels, PREC_SUM);
                });
                return;
            }
            Some(Some(arrow)) => {
                paren(out, prec > PREC_ARROW, |out| {
                    write_type(out, a, labels, PREC_APP);
                    out.push_str(&arrow);
                    write_type(out, b, labels, PREC_ARROW);
                });
                return;
            }
            None => {}
        }
    }
    match t {
        Type::Var(v) => out.push_str(&v.name),
        Type::Con(n, _) if n == SUM || n == LIN_ARROW || n == UN_ARROW => {
            let _ = write!(out, "({n})");
        }
        Type::Con(n, _) => out.push_str(n),
        Type::App(f, a) => paren(out, prec > PREC_APP, |out| {
            write_type(out, f, labels, PREC_APP);
            out.push(' ');
            write_type(out, a, labels, PREC_ATOM);
        }),
    }
}

fn write_pred(out: &mut String, p: &Predicate, labels: &Labels) {
    match p {
        Predicate::Fun(t) => {
            out.push_str("Fun ");
            write_type(out, t, labels, PREC_ATOM);
        }
        Predicate::Un(t) => {
            out.push_str("Un ");
            write_type(out, t, labels, PREC_ATOM);
        }
        Predicate::Geq(l, r) => {
            write_type(out, l, labels, PREC_APP);
            out.push_str(" >= ");
            write_type(out, r, labels, PREC_APP);
        }
    }
}

pub fn pred_to_string(p: &Predicate) -> String {
    let mut s = String::new();
    write_pred(&mut s, p, &Labels::none());
    s
}

pub fn preds_to_string(ps: &Preds) -> String {
    let items: Vec<String> = ps.iter().map(pred_to_string).collect();
    format!("({})", items.join(", "))
}

fn write_context(out: &mut String, context: &Preds, labels: &Labels) {
    let shown: Vec<&Predicate> = context
        .iter()
        .filter(|p| !matches!(p, Predicate::Fun(Type::Var(v)) if labels.contains(v)))
        .collect();
    if shown.is_empty() {
        return;
    }
    out.push('(');
    for (i, p) in shown.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_pred(out, p, labels);
    }
    out.push_str(") => ");
}

fn write_binders(out: &mut String, keyword: &str, vars: &[TypeVar]) {
    if vars.is_empty() {
        return;
    }
    out.push_str(keyword);
    for v in vars {
        out.push(' ');
        out.push_str(&v.name);
    }
    out.push_str(". ");
}

pub fn qual_to_string(q: &QualType) -> String {
    let labels = Labels::infer(&q.context, [&q.body]);
    let mut s = String::new();
    write_context(&mut s, &q.context, &labels);
    write_type(&mut s, &q.body, &labels, PREC_SUM);
    s
}

pub fn scheme_to_string(sc: &Scheme) -> String {
    let labels = Labels::infer(&sc.qual.context, [&sc.qual.body]);
    let mut s = String::new();
    write_binders(&mut s, "forall", &sc.vars);
    write_context(&mut s, &sc.qual.context, &labels);
    write_type(&mut s, &sc.qual.body, &labels, PREC_SUM);
    s
}

pub fn constructor_to_string(c: &ConstructorSig) -> String {
    let labels = Labels::infer(&c.context, [&c.payload]);
    let mut s = String::new();
    let _ = write!(s, "con {} : ", c.name);
    write_binders(&mut s, "forall", &c.outer);
    s.push_str("((");
    write_binders(&mut s, "forall", &c.univ);
    write_binders(&mut s, "exists", &c.exist);
    write_context(&mut s, &c.context, &labels);
    write_type(&mut s, &c.payload, &labels, PREC_SUM);
    s.push_str(") ->* ");
    write_type(&mut s, &c.result(), &Labels::none(), PREC_ARROW);
    s.push_str(");");
    s
}

pub fn term_to_string(t: &Term) -> String {
    let mut s = String::new();
    write_term(&mut s, t, 0);
    s
}

fn write_term(out: &mut String, t: &Term, prec: u8) {
    match &t.node {
        Node::Var(x) => out.push_str(x),
        Node::Lam(x, b) => paren(out, prec > 0, |out| {
            let _ = write!(out, "\\{x} -> ");
            write_term(out, b, 0);
        }),
        Node::App(m, n) => paren(out, prec > 1, |out| {
            write_term(out, m, 1);
            out.push(' ');
            write_term(out, n, 2);
        }),
        Node::Inl(m) | Node::Inr(m) | Node::Make(_, m) => paren(out, prec > 1, |out| {
            match &t.node {
                Node::Inl(_) => out.push_str("inl "),
                Node::Inr(_) => out.push_str("inr "),
                Node::Make(k, _) => {
                    out.push_str(k);
                    out.push(' ');
                }
                _ => unreachable!(),
            }
            write_term(out, m, 2);
        }),
        Node::Case { scrutinee, left, left_body, right, right_body } => paren(out, prec > 0, |out| {
            out.push_str("case ");
            write_term(out, scrutinee, 0);
            let _ = write!(out, " of {{ inl {left} -> ");
            write_term(out, left_body, 0);
            let _ = write!(out, " ; inr {right} -> ");
            write_term(out, right_body, 0);
            out.push_str(" }");
        }),
        Node::Let(x, m, n) => paren(out, prec > 0, |out| {
            let _ = write!(out, "let {x} = ");
            write_term(out, m, 0);
            out.push_str(" in ");
            write_term(out, n, 0);
        }),
        Node::Break { con, binder, bound, body } => paren(out, prec > 0, |out| {
            let _ = write!(out, "let {con} {binder} = ");
            write_term(out, bound, 0);
            out.push_str(" in ");
            write_term(out, body, 0);
        }),
    }
}

pub fn def_to_string(d: &Def) -> String {
    let mut s = format!("def {}", d.name);
    if let Some(sc) = &d.declared {
        s.push_str(" : ");
        s.push_str(&scheme_to_string(sc));
    }
    s.push_str(" = ");
    write_term(&mut s, &d.body, 0);
    s.push(';');
    s
}

pub fn program_to_string(p: &Program) -> String {
    let mut s = String::new();
    for d in &p.decls {
        match d {
            Decl::Data(n, k) => {
                let _ = writeln!(s, "data {n} : {k};");
            }
            Decl::Con(c) => {
                s.push_str(&constructor_to_string(c));
                s.push('\n');
            }
            Decl::Def(d) => {
                s.push_str(&def_to_string(d));
                s.push('\n');
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Kind;

    fn t(n: &str) -> Type {
        Type::Var(TypeVar::new(n, Kind::Star))
    }

    #[test]
    fn arrows_and_sums() {
        let ty = Type::sum(Type::lin(t("a"), t("b")), Type::un(t("c"), Type::sum(t("d"), t("e"))));
        assert_eq!(type_to_string(&ty), "a -o b + c ->* (d + e)");
        let nested = Type::lin(Type::lin(t("a"), t("b")), t("c"));
        assert_eq!(type_to_string(&nested), "(a -o b) -o c");
    }

    #[test]
    fn labelled_arrows() {
        let f = TypeVar::new("f", Kind::function());
        let body = Type::arrow(Type::Var(f.clone()), t("a"), t("a"));
        let sc = Scheme {
            vars: vec![TypeVar::new("a", Kind::Star), f.clone()],
            qual: QualType { context: [Predicate::Fun(Type::Var(f))].into_iter().collect(), body },
        };
        assert_eq!(scheme_to_string(&sc), "forall a f. a -f> a");
    }

    #[test]
    fn terms() {
        let x = || Box::new(Term::at(Node::Var("x".into())));
        let lam = Term::at(Node::Lam("x".into(), Box::new(Term::at(Node::Inl(x())))));
        let app = Term::at(Node::App(Box::new(lam), x()));
        assert_eq!(term_to_string(&app), "(\\x -> inl x) x");
    }
}
