//! Kinds, types, predicates, schemes, terms and substitutions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub type Name = String;

pub const LIN_ARROW: &str = "-o";
pub const UN_ARROW: &str = "->*";
pub const SUM: &str = "+";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Star,
    Arrow(Box<Kind>, Box<Kind>),
}

impl Kind {
    pub fn arrow(from: Kind, to: Kind) -> Kind {
        Kind::Arrow(Box::new(from), Box::new(to))
    }

    /// The kind `* -> * -> *` shared by both arrows, sums and arrow variables.
    pub fn function() -> Kind {
        Kind::arrow(Kind::Star, Kind::arrow(Kind::Star, Kind::Star))
    }

    pub fn is_function(&self) -> bool {
        *self == Kind::function()
    }

    /// `k1 -> ... -> kn -> *` built from argument kinds.
    pub fn from_args(args: &[Kind]) -> Kind {
        args.iter()
            .rev()
            .fold(Kind::Star, |acc, k| Kind::arrow(k.clone(), acc))
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Star => write!(f, "*"),
            Kind::Arrow(a, b) => match **a {
                Kind::Star => write!(f, "* -> {b}"),
                _ => write!(f, "({a}) -> {b}"),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flavor {
    Flexible,
    Rigid,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeVar {
    pub name: Name,
    pub kind: Kind,
    pub flavor: Flavor,
}

impl TypeVar {
    pub fn new(name: impl Into<Name>, kind: Kind) -> TypeVar {
        TypeVar { name: name.into(), kind, flavor: Flavor::Flexible }
    }

    pub fn rigid(name: impl Into<Name>, kind: Kind) -> TypeVar {
        TypeVar { name: name.into(), kind, flavor: Flavor::Rigid }
    }

    pub fn is_rigid(&self) -> bool {
        self.flavor == Flavor::Rigid
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Var(TypeVar),
    Con(Name, Kind),
    App(Box<Type>, Box<Type>),
}

impl Type {
    pub fn var(v: TypeVar) -> Type {
        Type::Var(v)
    }

    pub fn app(f: Type, a: Type) -> Type {
        Type::App(Box::new(f), Box::new(a))
    }

    pub fn apps(head: Type, args: impl IntoIterator<Item = Type>) -> Type {
        args.into_iter().fold(head, Type::app)
    }

    pub fn lin_con() -> Type {
        Type::Con(LIN_ARROW.into(), Kind::function())
    }

    pub fn un_con() -> Type {
        Type::Con(UN_ARROW.into(), Kind::function())
    }

    pub fn sum_con() -> Type {
        Type::Con(SUM.into(), Kind::function())
    }

    pub fn lin(a: Type, b: Type) -> Type {
        Type::apps(Type::lin_con(), [a, b])
    }

    pub fn un(a: Type, b: Type) -> Type {
        Type::apps(Type::un_con(), [a, b])
    }

    pub fn sum(a: Type, b: Type) -> Type {
        Type::apps(Type::sum_con(), [a, b])
    }

    /// Arrow whose linearity is given by `arrow` (a variable or constructor of function kind).
    pub fn arrow(arrow: Type, a: Type, b: Type) -> Type {
        Type::apps(arrow, [a, b])
    }

    pub fn is_con(&self, name: &str) -> bool {
        matches!(self, Type::Con(n, _) if n == name)
    }

    pub fn as_var(&self) -> Option<&TypeVar> {
        match self {
            Type::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Head of an application spine together with its arguments.
    pub fn spine(&self) -> (&Type, Vec<&Type>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Type::App(f, a) = cur {
            args.push(&**a);
            cur = f;
        }
        args.reverse();
        (cur, args)
    }

    pub fn head(&self) -> &Type {
        self.spine().0
    }

    /// Splits `φ a b` into its arrow component and both sides.
    pub fn as_binary(&self) -> Option<(&Type, &Type, &Type)> {
        match self {
            Type::App(fa, b) => match &**fa {
                Type::App(f, a) => Some((f, a, b)),
                _ => None,
            },
            _ => None,
        }
    }

    /// Kind of a well-kinded type.
    pub fn kind(&self) -> Kind {
        match self {
            Type::Var(v) => v.kind.clone(),
            Type::Con(_, k) => k.clone(),
            Type::App(f, _) => match f.kind() {
                Kind::Arrow(_, r) => *r,
                Kind::Star => Kind::Star,
            },
        }
    }

    pub fn occurs(&self, v: &TypeVar) -> bool {
        match self {
            Type::Var(w) => w == v,
            Type::Con(..) => false,
            Type::App(f, a) => f.occurs(v) || a.occurs(v),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Type::App(f, a) => 1 + f.size() + a.size(),
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predicate {
    Fun(Type),
    Un(Type),
    Geq(Type, Type),
}

impl Predicate {
    pub fn geq(l: Type, r: Type) -> Predicate {
        Predicate::Geq(l, r)
    }

    pub fn types(&self) -> Vec<&Type> {
        match self {
            Predicate::Fun(t) | Predicate::Un(t) => vec![t],
            Predicate::Geq(l, r) => vec![l, r],
        }
    }
}

pub type Preds = BTreeSet<Predicate>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QualType {
    pub context: Preds,
    pub body: Type,
}

impl QualType {
    pub fn plain(body: Type) -> QualType {
        QualType { context: Preds::new(), body }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Scheme {
    pub vars: Vec<TypeVar>,
    pub qual: QualType,
}

impl Scheme {
    pub fn mono(body: Type) -> Scheme {
        Scheme { vars: Vec::new(), qual: QualType::plain(body) }
    }

    pub fn is_mono(&self) -> bool {
        self.vars.is_empty() && self.qual.context.is_empty()
    }
}

/// `K : ∀outer. (∀univ. ∃exist. context ⇒ payload) →* T outer`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConstructorSig {
    pub name: Name,
    pub datatype: Name,
    pub outer: Vec<TypeVar>,
    pub univ: Vec<TypeVar>,
    pub exist: Vec<TypeVar>,
    pub context: Preds,
    pub payload: Type,
}

impl ConstructorSig {
    pub fn datatype_kind(&self) -> Kind {
        Kind::from_args(&self.outer.iter().map(|v| v.kind.clone()).collect::<Vec<_>>())
    }

    pub fn result(&self) -> Type {
        Type::apps(
            Type::Con(self.datatype.clone(), self.datatype_kind()),
            self.outer.iter().cloned().map(Type::Var),
        )
    }

    /// Context predicates that mention a universal variable; the rest only
    /// mention outer or existential variables.
    pub fn split_context(&self) -> (Preds, Preds) {
        let univ: BTreeSet<&TypeVar> = self.univ.iter().collect();
        self.context.iter().cloned().partition(|p| {
            let mut fv = BTreeSet::new();
            p.ftv_into(&mut fv);
            fv.iter().any(|v| univ.contains(v))
        })
    }
}

/// Declared datatypes and their constructors.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signatures {
    pub datatypes: BTreeMap<Name, Kind>,
    pub constructors: BTreeMap<Name, ConstructorSig>,
    by_datatype: BTreeMap<Name, Name>,
}

impl Signatures {
    pub fn new() -> Signatures {
        Signatures::default()
    }

    pub fn declare_datatype(&mut self, name: &str, kind: Kind) {
        self.datatypes.insert(name.to_string(), kind);
    }

    pub fn add_constructor(&mut self, sig: ConstructorSig) {
        self.datatypes.insert(sig.datatype.clone(), sig.datatype_kind());
        self.by_datatype.insert(sig.datatype.clone(), sig.name.clone());
        self.constructors.insert(sig.name.clone(), sig);
    }

    pub fn constructor(&self, name: &str) -> Option<&ConstructorSig> {
        self.constructors.get(name)
    }

    pub fn constructor_of(&self, datatype: &str) -> Option<&ConstructorSig> {
        self.by_datatype.get(datatype).and_then(|c| self.constructors.get(c))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Spans are ignored by equality.
#[derive(Clone, Debug, Eq)]
pub struct Term {
    pub node: Node,
    pub span: Span,
    pub ann: Option<Annotation>,
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        self.node == other.node && self.ann == other.ann
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Var(Name),
    Lam(Name, Box<Term>),
    App(Box<Term>, Box<Term>),
    Inl(Box<Term>),
    Inr(Box<Term>),
    Case {
        scrutinee: Box<Term>,
        left: Name,
        left_body: Box<Term>,
        right: Name,
        right_body: Box<Term>,
    },
    Let(Name, Box<Term>, Box<Term>),
    Make(Name, Box<Term>),
    Break {
        con: Name,
        binder: Name,
        bound: Box<Term>,
        body: Box<Term>,
    },
}

/// Type and node-specific evidence recorded by inference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annotation {
    pub ty: Type,
    pub info: NodeInfo,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeInfo {
    Plain,
    /// Instantiation of the variable's scheme.
    Var { inst: Vec<Type> },
    /// Instances chosen for captured polymorphic bindings.
    Lam { captured: Vec<(Name, Vec<Type>)> },
    /// Scheme given to the bound variable; its context holds the bound term's predicates.
    Let { scheme: Scheme },
    Make { outer: Vec<Type>, univ: Vec<TypeVar>, exist: Vec<Type> },
    Break { outer: Vec<Type>, univ: Vec<Type>, exist: Vec<TypeVar> },
}

impl Term {
    pub fn new(node: Node, span: Span) -> Term {
        Term { node, span, ann: None }
    }

    pub fn at(node: Node) -> Term {
        Term::new(node, Span::default())
    }

    pub fn ty(&self) -> Option<&Type> {
        self.ann.as_ref().map(|a| &a.ty)
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut Vec::new(), &mut out);
        out
    }

    fn free_vars_into(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match &self.node {
            Node::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Node::Lam(x, b) => {
                bound.push(x.clone());
                b.free_vars_into(bound, out);
                bound.pop();
            }
            Node::App(m, n) => {
                m.free_vars_into(bound, out);
                n.free_vars_into(bound, out);
            }
            Node::Inl(m) | Node::Inr(m) | Node::Make(_, m) => m.free_vars_into(bound, out),
            Node::Case { scrutinee, left, left_body, right, right_body } => {
                scrutinee.free_vars_into(bound, out);
                bound.push(left.clone());
                left_body.free_vars_into(bound, out);
                bound.pop();
                bound.push(right.clone());
                right_body.free_vars_into(bound, out);
                bound.pop();
            }
            Node::Let(x, m, n) | Node::Break { binder: x, bound: m, body: n, .. } => {
                m.free_vars_into(bound, out);
                bound.push(x.clone());
                n.free_vars_into(bound, out);
                bound.pop();
            }
        }
    }

    pub fn depth(&self) -> usize {
        1 + match &self.node {
            Node::Var(_) => 0,
            Node::Lam(_, b) | Node::Inl(b) | Node::Inr(b) | Node::Make(_, b) => b.depth(),
            Node::App(m, n) | Node::Let(_, m, n) | Node::Break { bound: m, body: n, .. } => {
                m.depth().max(n.depth())
            }
            Node::Case { scrutinee, left_body, right_body, .. } => {
                scrutinee.depth().max(left_body.depth()).max(right_body.depth())
            }
        }
    }

    /// Applies `f` to every annotation in the tree.
    pub fn map_annotations(&mut self, f: &mut dyn FnMut(&mut Annotation)) {
        if let Some(a) = &mut self.ann {
            f(a);
        }
        match &mut self.node {
            Node::Var(_) => {}
            Node::Lam(_, b) | Node::Inl(b) | Node::Inr(b) | Node::Make(_, b) => {
                b.map_annotations(f)
            }
            Node::App(m, n) | Node::Let(_, m, n) | Node::Break { bound: m, body: n, .. } => {
                m.map_annotations(f);
                n.map_annotations(f);
            }
            Node::Case { scrutinee, left_body, right_body, .. } => {
                scrutinee.map_annotations(f);
                left_body.map_annotations(f);
                right_body.map_annotations(f);
            }
        }
    }

    pub fn strip_annotations(&mut self) {
        self.ann = None;
        match &mut self.node {
            Node::Var(_) => {}
            Node::Lam(_, b) | Node::Inl(b) | Node::Inr(b) | Node::Make(_, b) => {
                b.strip_annotations()
            }
            Node::App(m, n) | Node::Let(_, m, n) | Node::Break { bound: m, body: n, .. } => {
                m.strip_annotations();
                n.strip_annotations();
            }
            Node::Case { scrutinee, left_body, right_body, .. } => {
                scrutinee.strip_annotations();
                left_body.strip_annotations();
                right_body.strip_annotations();
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decl {
    Data(Name, Kind),
    Con(ConstructorSig),
    Def(Def),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Def {
    pub name: Name,
    pub declared: Option<Scheme>,
    pub body: Term,
    pub span: Span,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub decls: Vec<Decl>,
}

impl Program {
    pub fn defs(&self) -> impl Iterator<Item = &Def> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Def(d) => Some(d),
            _ => None,
        })
    }

    pub fn signatures(&self) -> Signatures {
        let mut sigs = Signatures::new();
        for d in &self.decls {
            match d {
                Decl::Data(n, k) => sigs.declare_datatype(n, k.clone()),
                Decl::Con(c) => sigs.add_constructor(c.clone()),
                Decl::Def(_) => {}
            }
        }
        sigs
    }
}

/// Ordered map from term variables to schemes.
pub type TypeEnv = BTreeMap<Name, Scheme>;

/// Finite map from type variables to types of the same kind.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Subst {
    map: BTreeMap<TypeVar, Type>,
}

impl Subst {
    pub fn new() -> Subst {
        Subst::default()
    }

    pub fn singleton(v: TypeVar, t: Type) -> Subst {
        let mut s = Subst::new();
        s.insert(v, t);
        s
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (TypeVar, Type)>) -> Subst {
        let mut s = Subst::new();
        for (v, t) in pairs {
            s.insert(v, t);
        }
        s
    }

    pub fn insert(&mut self, v: TypeVar, t: Type) {
        debug_assert_eq!(v.kind, t.kind(), "kind-changing substitution for {}", v.name);
        if t != Type::Var(v.clone()) {
            self.map.insert(v, t);
        }
    }

    pub fn get(&self, v: &TypeVar) -> Option<&Type> {
        self.map.get(v)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn domain(&self) -> impl Iterator<Item = &TypeVar> {
        self.map.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TypeVar, &Type)> {
        self.map.iter()
    }

    pub fn remove(&mut self, v: &TypeVar) {
        self.map.remove(v);
    }

    pub fn without(&self, vars: &[TypeVar]) -> Subst {
        let mut s = self.clone();
        for v in vars {
            s.map.remove(v);
        }
        s
    }

    /// `outer ∘ inner`: applying the result equals applying `inner` then `outer`.
    pub fn compose(outer: &Subst, inner: &Subst) -> Subst {
        let mut map: BTreeMap<TypeVar, Type> =
            inner.map.iter().map(|(v, t)| (v.clone(), t.apply(outer))).collect();
        for (v, t) in &outer.map {
            map.entry(v.clone()).or_insert_with(|| t.clone());
        }
        map.retain(|v, t| *t != Type::Var(v.clone()));
        Subst { map }
    }

    pub fn is_idempotent(&self) -> bool {
        self.map.values().all(|t| {
            let mut fv = BTreeSet::new();
            t.ftv_into(&mut fv);
            fv.iter().all(|v| !self.map.contains_key(v))
        })
    }
}

/// Things that contain type variables.
pub trait Types {
    fn ftv_into(&self, out: &mut BTreeSet<TypeVar>);
    fn apply(&self, s: &Subst) -> Self;

    fn ftv(&self) -> BTreeSet<TypeVar> {
        let mut out = BTreeSet::new();
        self.ftv_into(&mut out);
        out
    }
}

impl Types for Type {
    fn ftv_into(&self, out: &mut BTreeSet<TypeVar>) {
        match self {
            Type::Var(v) => {
                out.insert(v.clone());
            }
            Type::Con(..) => {}
            Type::App(f, a) => {
                f.ftv_into(out);
                a.ftv_into(out);
            }
        }
    }

    fn apply(&self, s: &Subst) -> Type {
        if s.is_empty() {
            return self.clone();
        }
        match self {
            Type::Var(v) => s.get(v).cloned().unwrap_or_else(|| self.clone()),
            Type::Con(..) => self.clone(),
            Type::App(f, a) => Type::app(f.apply(s), a.apply(s)),
        }
    }
}

impl Types for Predicate {
    fn ftv_into(&self, out: &mut BTreeSet<TypeVar>) {
        for t in self.types() {
            t.ftv_into(out);
        }
    }

    fn apply(&self, s: &Subst) -> Predicate {
        match self {
            Predicate::Fun(t) => Predicate::Fun(t.apply(s)),
            Predicate::Un(t) => Predicate::Un(t.apply(s)),
            Predicate::Geq(l, r) => Predicate::Geq(l.apply(s), r.apply(s)),
        }
    }
}

impl Types for Preds {
    fn ftv_into(&self, out: &mut BTreeSet<TypeVar>) {
        for p in self {
            p.ftv_into(out);
        }
    }

    fn apply(&self, s: &Subst) -> Preds {
        self.iter().map(|p| p.apply(s)).collect()
    }
}

impl<T: Types> Types for Vec<T> {
    fn ftv_into(&self, out: &mut BTreeSet<TypeVar>) {
        for t in self {
            t.ftv_into(out);
        }
    }

    fn apply(&self, s: &Subst) -> Vec<T> {
        self.iter().map(|t| t.apply(s)).collect()
    }
}

impl Types for QualType {
    fn ftv_into(&self, out: &mut BTreeSet<TypeVar>) {
        self.context.ftv_into(out);
        self.body.ftv_into(out);
    }

    fn apply(&self, s: &Subst) -> QualType {
        QualType { context: self.context.apply(s), body: self.body.apply(s) }
    }
}

impl Types for Scheme {
    fn ftv_into(&self, out: &mut BTreeSet<TypeVar>) {
        let mut inner = BTreeSet::new();
        self.qual.ftv_into(&mut inner);
        for v in &self.vars {
            inner.remove(v);
        }
        out.extend(inner);
    }

    /// Quantified variables are never substituted; callers keep them apart
    /// from the substitution's range by using fresh names.
    fn apply(&self, s: &Subst) -> Scheme {
        let s = s.without(&self.vars);
        Scheme { vars: self.vars.clone(), qual: self.qual.apply(&s) }
    }
}

impl Types for TypeEnv {
    fn ftv_into(&self, out: &mut BTreeSet<TypeVar>) {
        for s in self.values() {
            s.ftv_into(out);
        }
    }

    fn apply(&self, s: &Subst) -> TypeEnv {
        self.iter().map(|(k, v)| (k.clone(), v.apply(s))).collect()
    }
}

impl Types for NodeInfo {
    fn ftv_into(&self, out: &mut BTreeSet<TypeVar>) {
        match self {
            NodeInfo::Plain => {}
            NodeInfo::Var { inst } => inst.ftv_into(out),
            NodeInfo::Lam { captured } => {
                for (_, ts) in captured {
                    ts.ftv_into(out);
                }
            }
            NodeInfo::Let { scheme } => scheme.ftv_into(out),
            NodeInfo::Make { outer, univ, exist } => {
                outer.ftv_into(out);
                out.extend(univ.iter().cloned());
                exist.ftv_into(out);
            }
            NodeInfo::Break { outer, univ, exist } => {
                outer.ftv_into(out);
                univ.ftv_into(out);
                out.extend(exist.iter().cloned());
            }
        }
    }

    fn apply(&self, s: &Subst) -> NodeInfo {
        match self {
            NodeInfo::Plain => NodeInfo::Plain,
            NodeInfo::Var { inst } => NodeInfo::Var { inst: inst.apply(s) },
            NodeInfo::Lam { captured } => NodeInfo::Lam {
                captured: captured.iter().map(|(x, ts)| (x.clone(), ts.apply(s))).collect(),
            },
            NodeInfo::Let { scheme } => NodeInfo::Let { scheme: scheme.apply(s) },
            NodeInfo::Make { outer, univ, exist } => NodeInfo::Make {
                outer: outer.apply(s),
                univ: univ.clone(),
                exist: exist.apply(s),
            },
            NodeInfo::Break { outer, univ, exist } => NodeInfo::Break {
                outer: outer.apply(s),
                univ: univ.apply(s),
                exist: exist.clone(),
            },
        }
    }
}

/// Source of fresh variable names that cannot clash with source identifiers.
#[derive(Clone, Debug, Default)]
pub struct Fresh {
    next: u32,
}

impl Fresh {
    pub fn new() -> Fresh {
        Fresh::default()
    }

    pub fn starting_at(next: u32) -> Fresh {
        Fresh { next }
    }

    pub fn var(&mut self, kind: Kind, flavor: Flavor) -> TypeVar {
        let prefix = match (&kind, flavor) {
            (Kind::Star, Flavor::Flexible) => "t",
            (Kind::Star, Flavor::Rigid) => "r",
            (k, Flavor::Flexible) if k.is_function() => "f",
            (k, Flavor::Rigid) if k.is_function() => "q",
            (_, Flavor::Flexible) => "a",
            (_, Flavor::Rigid) => "b",
        };
        self.next += 1;
        TypeVar { name: format!("{prefix}#{}", self.next), kind, flavor }
    }

    pub fn flexible(&mut self, kind: Kind) -> TypeVar {
        self.var(kind, Flavor::Flexible)
    }

    pub fn rigid(&mut self, kind: Kind) -> TypeVar {
        self.var(kind, Flavor::Rigid)
    }

    pub fn star(&mut self) -> Type {
        Type::Var(self.flexible(Kind::Star))
    }

    pub fn arrow(&mut self) -> Type {
        Type::Var(self.flexible(Kind::function()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tv(n: &str) -> TypeVar {
        TypeVar::new(n, Kind::Star)
    }

    fn t(n: &str) -> Type {
        Type::Var(tv(n))
    }

    #[test]
    fn spine_and_binary() {
        let ty = Type::lin(t("a"), t("b"));
        let (h, args) = ty.spine();
        assert!(h.is_con(LIN_ARROW));
        assert_eq!(args, vec![&t("a"), &t("b")]);
        let (f, a, b) = ty.as_binary().unwrap();
        assert!(f.is_con(LIN_ARROW));
        assert_eq!((a, b), (&t("a"), &t("b")));
        assert_eq!(ty.kind(), Kind::Star);
        assert_eq!(Type::lin_con().kind(), Kind::function());
    }

    #[test]
    fn compose_applies_inner_first() {
        let inner = Subst::singleton(tv("a"), Type::un(t("b"), t("b")));
        let outer = Subst::singleton(tv("b"), t("c"));
        let c = Subst::compose(&outer, &inner);
        assert_eq!(t("a").apply(&c), Type::un(t("c"), t("c")));
        assert_eq!(t("b").apply(&c), t("c"));
        assert!(c.is_idempotent());
    }

    #[test]
    fn scheme_apply_skips_bound() {
        let s = Scheme { vars: vec![tv("a")], qual: QualType::plain(Type::un(t("a"), t("b"))) };
        let sub = Subst::from_pairs([(tv("a"), t("z")), (tv("b"), t("y"))]);
        let r = s.apply(&sub);
        assert_eq!(r.qual.body, Type::un(t("a"), t("y")));
        assert_eq!(r.ftv(), [tv("y")].into_iter().collect());
    }

    #[test]
    fn free_vars_of_terms() {
        let term = Term::at(Node::Lam(
            "x".into(),
            Box::new(Term::at(Node::App(
                Box::new(Term::at(Node::Var("x".into()))),
                Box::new(Term::at(Node::Var("y".into()))),
            ))),
        ));
        assert_eq!(term.free_vars(), ["y".to_string()].into_iter().collect());
        assert_eq!(term.depth(), 3);
    }

    #[test]
    fn fresh_names_are_distinct() {
        let mut f = Fresh::new();
        let a = f.flexible(Kind::Star);
        let b = f.flexible(Kind::Star);
        assert_ne!(a, b);
        assert!(a.name.contains('#'));
    }

    #[test]
    fn kind_display() {
        assert_eq!(Kind::function().to_string(), "* -> * -> *");
        assert_eq!(Kind::arrow(Kind::arrow(Kind::Star, Kind::Star), Kind::Star).to_string(), "(* -> *) -> *");
    }
}
