//! Lexer, parser and desugaring for Quill source text.
//!
//! Bare arrows `a -> b` become arrows over fresh variables constrained by
//! `Fun`. Kinds of type variables and datatypes are inferred; leftovers
//! default to `*`. Term binders are renamed so that every binder in a
//! program is distinct, and unbound names are reported as scope errors.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::syntax::{
    ConstructorSig, Decl, Def, Kind, Node, Predicate, Preds, Program, QualType, Scheme,
    Signatures, Span, Term, Type, TypeVar, LIN_ARROW, SUM, UN_ARROW,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{span}: syntax error: {msg}")]
    Syntax { span: Span, msg: String },
    #[error("{span}: scope error: {msg}")]
    Scope { span: Span, msg: String },
    #[error("{span}: kind error: {msg}")]
    Kind { span: Span, msg: String },
}

impl ParseError {
    pub fn span(&self) -> Span {
        match self {
            ParseError::Syntax { span, .. }
            | ParseError::Scope { span, .. }
            | ParseError::Kind { span, .. } => *span,
        }
    }
}

type PResult<T> = Result<T, ParseError>;
type Binders = Vec<(String, Span)>;
/// Universals, existentials, context and payload of a constructor.
type Payload = (Binders, Binders, Vec<SPred>, SType);

fn syntax<T>(span: Span, msg: impl Into<String>) -> PResult<T> {
    Err(ParseError::Syntax { span, msg: msg.into() })
}

fn scope<T>(span: Span, msg: impl Into<String>) -> PResult<T> {
    Err(ParseError::Scope { span, msg: msg.into() })
}

// ---------------------------------------------------------------- lexer

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Upper(String),
    Kw(&'static str),
    Backslash,
    Arrow,
    UnArrow,
    LinArrow,
    Label(String),
    Plus,
    Fat,
    Geq,
    Eq,
    Semi,
    Colon,
    Comma,
    Dot,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Star,
    Eof,
}

const KEYWORDS: &[&str] = &[
    "let", "in", "case", "of", "inl", "inr", "def", "con", "data", "forall", "exists", "Un", "Fun",
];

fn ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn lex(src: &str) -> PResult<Vec<(Tok, Span)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    macro_rules! adv {
        ($n:expr) => {{
            for _ in 0..$n {
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        let peek = |k: usize| chars.get(i + k).copied();
        if c.is_whitespace() {
            adv!(1);
            continue;
        }
        if c == '-' && peek(1) == Some('-') {
            while i < chars.len() && chars[i] != '\n' {
                adv!(1);
            }
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            let mut j = i;
            while j < chars.len() && ident_char(chars[j]) {
                j += 1;
            }
            let word: String = chars[start..j].iter().collect();
            adv!(j - start);
            let tok = if let Some(k) = KEYWORDS.iter().find(|k| **k == word) {
                Tok::Kw(k)
            } else if word.chars().next().is_some_and(|c| c.is_uppercase()) {
                Tok::Upper(word)
            } else {
                Tok::Ident(word)
            };
            out.push((tok, span));
            continue;
        }
        let (tok, len) = match c {
            '-' => match peek(1) {
                Some('>') if peek(2) == Some('*') => (Tok::UnArrow, 3),
                Some('>') => (Tok::Arrow, 2),
                Some(d) if d.is_alphabetic() && d.is_lowercase() => {
                    let mut j = i + 1;
                    while j < chars.len() && ident_char(chars[j]) {
                        j += 1;
                    }
                    let word: String = chars[i + 1..j].iter().collect();
                    if chars.get(j) == Some(&'>') {
                        (Tok::Label(word), j + 1 - i)
                    } else if word == "o" {
                        (Tok::LinArrow, 2)
                    } else {
                        return syntax(span, format!("unexpected '-{word}'"));
                    }
                }
                _ => return syntax(span, "unexpected '-'"),
            },
            '\\' => (Tok::Backslash, 1),
            '+' => (Tok::Plus, 1),
            '=' if peek(1) == Some('>') => (Tok::Fat, 2),
            '=' => (Tok::Eq, 1),
            '>' if peek(1) == Some('=') => (Tok::Geq, 2),
            ';' => (Tok::Semi, 1),
            ':' => (Tok::Colon, 1),
            ',' => (Tok::Comma, 1),
            '.' => (Tok::Dot, 1),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            '*' => (Tok::Star, 1),
            _ => return syntax(span, format!("unexpected character '{c}'")),
        };
        adv!(len);
        out.push((tok, span));
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}

// ------------------------------------------------------- surface syntax

#[derive(Clone, Debug)]
enum Arrow {
    Lin,
    Un,
    Label(String),
    Bare,
}

#[derive(Clone, Debug)]
enum SType {
    Var(String, Span),
    Con(String, Span),
    Op(&'static str),
    App(Box<SType>, Box<SType>),
    Arrow(Arrow, Span, Box<SType>, Box<SType>),
    Sum(Box<SType>, Box<SType>),
}

#[derive(Clone, Debug)]
enum SPred {
    Un(SType),
    Fun(SType),
    Geq(SType, SType),
}

#[derive(Clone, Debug)]
struct SScheme {
    vars: Option<Vec<(String, Span)>>,
    context: Vec<SPred>,
    body: SType,
    span: Span,
}

#[derive(Clone, Debug)]
struct SCon {
    name: String,
    span: Span,
    outer: Option<Vec<(String, Span)>>,
    univ: Vec<(String, Span)>,
    exist: Vec<(String, Span)>,
    context: Vec<SPred>,
    payload: SType,
    datatype: (String, Span),
    args: Vec<(String, Span)>,
}

enum SDecl {
    Data(String, Option<Kind>, Span),
    Con(SCon),
    Def(String, Option<SScheme>, Term, Span),
}

// --------------------------------------------------------------- parser

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok, what: &str) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            syntax(self.span(), format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        let span = self.span();
        match self.bump() {
            Tok::Ident(s) => Ok((s, span)),
            t => syntax(span, format!("expected identifier, found {}", describe(&t))),
        }
    }

    fn upper(&mut self) -> PResult<(String, Span)> {
        let span = self.span();
        match self.bump() {
            Tok::Upper(s) => Ok((s, span)),
            t => syntax(span, format!("expected constructor name, found {}", describe(&t))),
        }
    }

    /// Runs `f`, restoring the position if it fails.
    fn attempt<T>(&mut self, f: impl FnOnce(&mut Parser) -> PResult<T>) -> Option<T> {
        let save = self.pos;
        match f(self) {
            Ok(v) => Some(v),
            Err(_) => {
                self.pos = save;
                None
            }
        }
    }

    // ---- kinds

    fn kind(&mut self) -> PResult<Kind> {
        let k = match self.peek() {
            Tok::Star => {
                self.bump();
                Kind::Star
            }
            Tok::LParen => {
                self.bump();
                let k = self.kind()?;
                self.expect(&Tok::RParen, "')'")?;
                k
            }
            t => return syntax(self.span(), format!("expected kind, found {}", describe(t))),
        };
        if self.eat(&Tok::Arrow) {
            Ok(Kind::arrow(k, self.kind()?))
        } else {
            Ok(k)
        }
    }

    // ---- types

    fn ty(&mut self) -> PResult<SType> {
        let left = self.arrow_ty()?;
        if self.eat(&Tok::Plus) {
            let right = self.ty()?;
            return Ok(SType::Sum(Box::new(left), Box::new(right)));
        }
        Ok(left)
    }

    fn arrow_ty(&mut self) -> PResult<SType> {
        let left = self.app_ty()?;
        let span = self.span();
        let arrow = match self.peek().clone() {
            Tok::Arrow => Arrow::Bare,
            Tok::UnArrow => Arrow::Un,
            Tok::LinArrow => Arrow::Lin,
            Tok::Label(l) => Arrow::Label(l),
            _ => return Ok(left),
        };
        self.bump();
        let right = self.arrow_ty()?;
        Ok(SType::Arrow(arrow, span, Box::new(left), Box::new(right)))
    }

    fn starts_atom_ty(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::Upper(_) | Tok::LParen)
    }

    fn app_ty(&mut self) -> PResult<SType> {
        let mut t = self.atom_ty()?;
        while self.starts_atom_ty() {
            let a = self.atom_ty()?;
            t = SType::App(Box::new(t), Box::new(a));
        }
        Ok(t)
    }

    fn atom_ty(&mut self) -> PResult<SType> {
        let span = self.span();
        match self.bump() {
            Tok::Ident(n) => Ok(SType::Var(n, span)),
            Tok::Upper(n) => Ok(SType::Con(n, span)),
            Tok::LParen => {
                let op = match (self.peek(), self.peek_at(1)) {
                    (Tok::LinArrow, Tok::RParen) => Some(LIN_ARROW),
                    (Tok::UnArrow, Tok::RParen) => Some(UN_ARROW),
                    (Tok::Plus, Tok::RParen) => Some(SUM),
                    _ => None,
                };
                if let Some(op) = op {
                    self.bump();
                    self.bump();
                    return Ok(SType::Op(op));
                }
                let t = self.ty()?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(t)
            }
            t => syntax(span, format!("expected type, found {}", describe(&t))),
        }
    }

    fn pred(&mut self) -> PResult<SPred> {
        match self.peek() {
            Tok::Kw("Un") => {
                self.bump();
                Ok(SPred::Un(self.atom_ty()?))
            }
            Tok::Kw("Fun") => {
                self.bump();
                Ok(SPred::Fun(self.atom_ty()?))
            }
            _ => {
                let l = self.app_ty()?;
                self.expect(&Tok::Geq, "'>='")?;
                let r = self.app_ty()?;
                Ok(SPred::Geq(l, r))
            }
        }
    }

    /// Optional `(P, ..) =>` or `P =>` prefix.
    fn context(&mut self) -> Vec<SPred> {
        let parenthesised = self.attempt(|p| {
            p.expect(&Tok::LParen, "'('")?;
            let mut ps = Vec::new();
            if !matches!(p.peek(), Tok::RParen) {
                ps.push(p.pred()?);
                while p.eat(&Tok::Comma) {
                    ps.push(p.pred()?);
                }
            }
            p.expect(&Tok::RParen, "')'")?;
            p.expect(&Tok::Fat, "'=>'")?;
            Ok(ps)
        });
        if let Some(ps) = parenthesised {
            return ps;
        }
        self.attempt(|p| {
            let q = p.pred()?;
            p.expect(&Tok::Fat, "'=>'")?;
            Ok(vec![q])
        })
        .unwrap_or_default()
    }

    fn binders(&mut self, kw: &'static str) -> PResult<Option<Vec<(String, Span)>>> {
        if !self.eat(&Tok::Kw(kw)) {
            return Ok(None);
        }
        let mut vs = Vec::new();
        while let Tok::Ident(_) = self.peek() {
            vs.push(self.ident()?);
        }
        self.expect(&Tok::Dot, "'.'")?;
        Ok(Some(vs))
    }

    fn scheme(&mut self) -> PResult<SScheme> {
        let span = self.span();
        let vars = self.binders("forall")?;
        let context = self.context();
        let body = self.ty()?;
        Ok(SScheme { vars, context, body, span })
    }

    // ---- declarations

    fn con_payload(&mut self) -> PResult<Payload> {
        if matches!(self.peek(), Tok::LParen) {
            if let Some(r) = self.attempt(|p| {
                p.bump();
                let univ = p.binders("forall")?.unwrap_or_default();
                let exist = p.binders("exists")?.unwrap_or_default();
                let ctx = p.context();
                let t = p.ty()?;
                p.expect(&Tok::RParen, "')'")?;
                if !matches!(p.peek(), Tok::UnArrow) {
                    return syntax(p.span(), "expected '->*'");
                }
                Ok((univ, exist, ctx, t))
            }) {
                return Ok(r);
            }
        }
        Ok((Vec::new(), Vec::new(), Vec::new(), self.app_ty()?))
    }

    #[allow(clippy::type_complexity)]
    fn con_body(
        &mut self,
    ) -> PResult<(Payload, (String, Span), Binders)> {
        if matches!(self.peek(), Tok::LParen) {
            if let Some(r) = self.attempt(|p| {
                p.bump();
                let r = p.con_body()?;
                p.expect(&Tok::RParen, "')'")?;
                Ok(r)
            }) {
                return Ok(r);
            }
        }
        let payload = self.con_payload()?;
        self.expect(&Tok::UnArrow, "'->*'")?;
        let dt = self.upper()?;
        let mut args = Vec::new();
        while let Tok::Ident(_) = self.peek() {
            args.push(self.ident()?);
        }
        Ok((payload, dt, args))
    }

    fn decl(&mut self) -> PResult<SDecl> {
        let span = self.span();
        match self.bump() {
            Tok::Kw("data") => {
                let (name, _) = self.upper()?;
                let kind = if self.eat(&Tok::Colon) { Some(self.kind()?) } else { None };
                self.expect(&Tok::Semi, "';'")?;
                Ok(SDecl::Data(name, kind, span))
            }
            Tok::Kw("con") => {
                let (name, _) = self.upper()?;
                self.expect(&Tok::Colon, "':'")?;
                let outer = self.binders("forall")?;
                let ((univ, exist, context, payload), datatype, args) = self.con_body()?;
                self.expect(&Tok::Semi, "';'")?;
                Ok(SDecl::Con(SCon { name, span, outer, univ, exist, context, payload, datatype, args }))
            }
            Tok::Kw("def") => {
                let (name, _) = self.ident()?;
                let sig = if self.eat(&Tok::Colon) { Some(self.scheme()?) } else { None };
                self.expect(&Tok::Eq, "'='")?;
                let body = self.term()?;
                self.expect(&Tok::Semi, "';'")?;
                Ok(SDecl::Def(name, sig, body, span))
            }
            t => syntax(span, format!("expected declaration, found {}", describe(&t))),
        }
    }

    // ---- terms

    fn term(&mut self) -> PResult<Term> {
        let span = self.span();
        match self.peek() {
            Tok::Backslash => {
                self.bump();
                let (x, _) = self.ident()?;
                self.expect(&Tok::Arrow, "'->'")?;
                let body = self.term()?;
                Ok(Term::new(Node::Lam(x, Box::new(body)), span))
            }
            Tok::Kw("let") => {
                self.bump();
                if let Tok::Upper(_) = self.peek() {
                    let (con, _) = self.upper()?;
                    let (binder, _) = self.ident()?;
                    self.expect(&Tok::Eq, "'='")?;
                    let bound = self.term()?;
                    self.expect(&Tok::Kw("in"), "'in'")?;
                    let body = self.term()?;
                    return Ok(Term::new(
                        Node::Break { con, binder, bound: Box::new(bound), body: Box::new(body) },
                        span,
                    ));
                }
                let (x, _) = self.ident()?;
                self.expect(&Tok::Eq, "'='")?;
                let m = self.term()?;
                self.expect(&Tok::Kw("in"), "'in'")?;
                let n = self.term()?;
                Ok(Term::new(Node::Let(x, Box::new(m), Box::new(n)), span))
            }
            Tok::Kw("case") => {
                self.bump();
                let scrutinee = self.term()?;
                self.expect(&Tok::Kw("of"), "'of'")?;
                self.expect(&Tok::LBrace, "'{'")?;
                self.expect(&Tok::Kw("inl"), "'inl'")?;
                let (left, _) = self.ident()?;
                self.expect(&Tok::Arrow, "'->'")?;
                let left_body = self.term()?;
                self.expect(&Tok::Semi, "';'")?;
                self.expect(&Tok::Kw("inr"), "'inr'")?;
                let (right, _) = self.ident()?;
                self.expect(&Tok::Arrow, "'->'")?;
                let right_body = self.term()?;
                self.expect(&Tok::RBrace, "'}'")?;
                Ok(Term::new(
                    Node::Case {
                        scrutinee: Box::new(scrutinee),
                        left,
                        left_body: Box::new(left_body),
                        right,
                        right_body: Box::new(right_body),
                    },
                    span,
                ))
            }
            _ => {
                let mut t = self.item()?;
                while self.starts_item() {
                    let s = self.span();
                    let a = self.item()?;
                    t = Term::new(Node::App(Box::new(t), Box::new(a)), s);
                }
                Ok(t)
            }
        }
    }

    fn starts_item(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::Upper(_) | Tok::LParen | Tok::Kw("inl") | Tok::Kw("inr"))
    }

    fn item(&mut self) -> PResult<Term> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Kw("inl") => {
                self.bump();
                Ok(Term::new(Node::Inl(Box::new(self.atom()?)), span))
            }
            Tok::Kw("inr") => {
                self.bump();
                Ok(Term::new(Node::Inr(Box::new(self.atom()?)), span))
            }
            Tok::Upper(k) => {
                self.bump();
                if !matches!(self.peek(), Tok::Ident(_) | Tok::LParen) {
                    return syntax(span, format!("constructor {k} must be applied to an argument"));
                }
                Ok(Term::new(Node::Make(k, Box::new(self.atom()?)), span))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> PResult<Term> {
        let span = self.span();
        match self.bump() {
            Tok::Ident(x) => Ok(Term::new(Node::Var(x), span)),
            Tok::LParen => {
                let t = self.term()?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(t)
            }
            t => syntax(span, format!("expected term, found {}", describe(&t))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) | Tok::Upper(s) => format!("'{s}'"),
        Tok::Kw(k) => format!("'{k}'"),
        Tok::Label(l) => format!("'-{l}>'"),
        Tok::Eof => "end of input".into(),
        other => format!("{other:?}"),
    }
}

// ------------------------------------------------------------- kinding

#[derive(Clone, Debug)]
enum KT {
    Star,
    Arr(Box<KT>, Box<KT>),
    Meta(usize),
}

impl KT {
    fn from_kind(k: &Kind) -> KT {
        match k {
            Kind::Star => KT::Star,
            Kind::Arrow(a, b) => KT::Arr(Box::new(KT::from_kind(a)), Box::new(KT::from_kind(b))),
        }
    }

    fn fun() -> KT {
        KT::from_kind(&Kind::function())
    }
}

#[derive(Default)]
struct Kinder {
    sol: Vec<Option<KT>>,
}

impl Kinder {
    fn fresh(&mut self) -> KT {
        self.sol.push(None);
        KT::Meta(self.sol.len() - 1)
    }

    fn resolve(&self, k: &KT) -> KT {
        match k {
            KT::Meta(m) => match &self.sol[*m] {
                Some(s) => self.resolve(s),
                None => k.clone(),
            },
            KT::Arr(a, b) => KT::Arr(Box::new(self.resolve(a)), Box::new(self.resolve(b))),
            KT::Star => KT::Star,
        }
    }

    fn occurs(&self, m: usize, k: &KT) -> bool {
        match self.resolve(k) {
            KT::Meta(n) => n == m,
            KT::Arr(a, b) => self.occurs(m, &a) || self.occurs(m, &b),
            KT::Star => false,
        }
    }

    fn unify(&mut self, a: &KT, b: &KT, span: Span) -> PResult<()> {
        let (a, b) = (self.resolve(a), self.resolve(b));
        match (&a, &b) {
            (KT::Meta(m), KT::Meta(n)) if m == n => Ok(()),
            (KT::Meta(m), k) | (k, KT::Meta(m)) => {
                if self.occurs(*m, k) {
                    return Err(ParseError::Kind { span, msg: "infinite kind".into() });
                }
                self.sol[*m] = Some(k.clone());
                Ok(())
            }
            (KT::Star, KT::Star) => Ok(()),
            (KT::Arr(a1, b1), KT::Arr(a2, b2)) => {
                self.unify(a1, a2, span)?;
                self.unify(b1, b2, span)
            }
            _ => Err(ParseError::Kind {
                span,
                msg: format!("kind mismatch: {} vs {}", self.finish(&a), self.finish(&b)),
            }),
        }
    }

    fn finish(&self, k: &KT) -> Kind {
        match self.resolve(k) {
            KT::Star | KT::Meta(_) => Kind::Star,
            KT::Arr(a, b) => Kind::arrow(self.finish(&a), self.finish(&b)),
        }
    }
}

struct TypeScope<'a> {
    vars: HashMap<String, KT>,
    datatypes: &'a BTreeMap<String, Option<Kind>>,
    pending: Option<(String, KT)>,
}

impl TypeScope<'_> {
    fn con_kind(&self, name: &str, span: Span) -> PResult<KT> {
        if let Some((n, k)) = &self.pending {
            if n == name {
                return Ok(k.clone());
            }
        }
        match self.datatypes.get(name) {
            Some(Some(k)) => Ok(KT::from_kind(k)),
            Some(None) => Err(ParseError::Kind {
                span,
                msg: format!("kind of {name} is not yet known; annotate its data declaration"),
            }),
            None => scope(span, format!("unknown type {name}")),
        }
    }
}

fn kind_of(t: &SType, sc: &TypeScope, kc: &mut Kinder) -> PResult<KT> {
    match t {
        SType::Var(n, span) => match sc.vars.get(n) {
            Some(k) => Ok(k.clone()),
            None => scope(*span, format!("unbound type variable {n}")),
        },
        SType::Con(n, span) => sc.con_kind(n, *span),
        SType::Op(_) => Ok(KT::fun()),
        SType::App(f, a) => {
            let kf = kind_of(f, sc, kc)?;
            let ka = kind_of(a, sc, kc)?;
            let r = kc.fresh();
            kc.unify(&kf, &KT::Arr(Box::new(ka), Box::new(r.clone())), stype_span(f))?;
            Ok(r)
        }
        SType::Arrow(arrow, span, a, b) => {
            if let Arrow::Label(l) = arrow {
                match sc.vars.get(l) {
                    Some(k) => kc.unify(k, &KT::fun(), *span)?,
                    None => return scope(*span, format!("unbound type variable {l}")),
                }
            }
            let ka = kind_of(a, sc, kc)?;
            kc.unify(&ka, &KT::Star, stype_span(a))?;
            let kb = kind_of(b, sc, kc)?;
            kc.unify(&kb, &KT::Star, stype_span(b))?;
            Ok(KT::Star)
        }
        SType::Sum(a, b) => {
            let ka = kind_of(a, sc, kc)?;
            kc.unify(&ka, &KT::Star, stype_span(a))?;
            let kb = kind_of(b, sc, kc)?;
            kc.unify(&kb, &KT::Star, stype_span(b))?;
            Ok(KT::Star)
        }
    }
}

fn kind_pred(p: &SPred, sc: &TypeScope, kc: &mut Kinder) -> PResult<()> {
    match p {
        SPred::Un(t) => kind_of(t, sc, kc).map(|_| ()),
        SPred::Fun(t) => {
            let k = kind_of(t, sc, kc)?;
            kc.unify(&k, &KT::fun(), stype_span(t))
        }
        SPred::Geq(l, r) => {
            kind_of(l, sc, kc)?;
            kind_of(r, sc, kc)?;
            Ok(())
        }
    }
}

fn stype_span(t: &SType) -> Span {
    match t {
        SType::Var(_, s) | SType::Con(_, s) | SType::Arrow(_, s, _, _) => *s,
        SType::App(f, _) => stype_span(f),
        SType::Sum(a, _) => stype_span(a),
        SType::Op(_) => Span::default(),
    }
}

fn collect_names(t: &SType, out: &mut BTreeSet<String>) {
    match t {
        SType::Var(n, _) => {
            out.insert(n.clone());
        }
        SType::Con(..) | SType::Op(_) => {}
        SType::App(a, b) | SType::Sum(a, b) => {
            collect_names(a, out);
            collect_names(b, out);
        }
        SType::Arrow(arrow, _, a, b) => {
            if let Arrow::Label(l) = arrow {
                out.insert(l.clone());
            }
            collect_names(a, out);
            collect_names(b, out);
        }
    }
}

fn pred_types(p: &SPred) -> Vec<&SType> {
    match p {
        SPred::Un(t) | SPred::Fun(t) => vec![t],
        SPred::Geq(l, r) => vec![l, r],
    }
}

fn pred_types_mut(p: &mut SPred) -> Vec<&mut SType> {
    match p {
        SPred::Un(t) | SPred::Fun(t) => vec![t],
        SPred::Geq(l, r) => vec![l, r],
    }
}

/// Free variables in order of first occurrence.
fn free_in_order(t: &SType, out: &mut Vec<(String, Span)>) {
    match t {
        SType::Var(n, s) => {
            if !out.iter().any(|(m, _)| m == n) {
                out.push((n.clone(), *s));
            }
        }
        SType::Con(..) | SType::Op(_) => {}
        SType::App(a, b) | SType::Sum(a, b) => {
            free_in_order(a, out);
            free_in_order(b, out);
        }
        SType::Arrow(arrow, s, a, b) => {
            free_in_order(a, out);
            if let Arrow::Label(l) = arrow {
                if !out.iter().any(|(m, _)| m == l) {
                    out.push((l.clone(), *s));
                }
            }
            free_in_order(b, out);
        }
    }
}

/// Replaces bare arrows by fresh labelled arrows, returning the new names.
struct ArrowNames {
    taken: BTreeSet<String>,
    next: usize,
}

impl ArrowNames {
    fn new(taken: BTreeSet<String>) -> ArrowNames {
        ArrowNames { taken, next: 0 }
    }

    fn fresh(&mut self) -> String {
        loop {
            self.next += 1;
            let n = format!("f'{}", self.next);
            if self.taken.insert(n.clone()) {
                return n;
            }
        }
    }

    fn label(&mut self, t: &mut SType, out: &mut Vec<(String, Span)>) {
        match t {
            SType::Var(..) | SType::Con(..) | SType::Op(_) => {}
            SType::App(a, b) | SType::Sum(a, b) => {
                self.label(a, out);
                self.label(b, out);
            }
            SType::Arrow(arrow, s, a, b) => {
                self.label(a, out);
                if let Arrow::Bare = arrow {
                    let n = self.fresh();
                    out.push((n.clone(), *s));
                    *arrow = Arrow::Label(n);
                }
                self.label(b, out);
            }
        }
    }
}

struct Resolver<'a> {
    vars: HashMap<String, TypeVar>,
    datatypes: &'a BTreeMap<String, Option<Kind>>,
    pending: Option<(String, Kind)>,
}

impl Resolver<'_> {
    fn ty(&self, t: &SType, funs: &mut Preds) -> Type {
        match t {
            SType::Var(n, _) => Type::Var(self.vars[n].clone()),
            SType::Con(n, _) => {
                let k = match &self.pending {
                    Some((p, k)) if p == n => k.clone(),
                    _ => self.datatypes.get(n).cloned().flatten().unwrap_or(Kind::Star),
                };
                Type::Con(n.clone(), k)
            }
            SType::Op(op) => Type::Con((*op).to_string(), Kind::function()),
            SType::App(f, a) => Type::app(self.ty(f, funs), self.ty(a, funs)),
            SType::Sum(a, b) => Type::sum(self.ty(a, funs), self.ty(b, funs)),
            SType::Arrow(arrow, _, a, b) => {
                let (a, b) = (self.ty(a, funs), self.ty(b, funs));
                match arrow {
                    Arrow::Lin => Type::lin(a, b),
                    Arrow::Un => Type::un(a, b),
                    Arrow::Label(l) => {
                        let f = Type::Var(self.vars[l].clone());
                        funs.insert(Predicate::Fun(f.clone()));
                        Type::arrow(f, a, b)
                    }
                    Arrow::Bare => unreachable!("bare arrows are labelled before resolution"),
                }
            }
        }
    }

    fn pred(&self, p: &SPred, funs: &mut Preds) -> Predicate {
        match p {
            SPred::Un(t) => Predicate::Un(self.ty(t, funs)),
            SPred::Fun(t) => Predicate::Fun(self.ty(t, funs)),
            SPred::Geq(l, r) => Predicate::Geq(self.ty(l, funs), self.ty(r, funs)),
        }
    }
}

fn check_distinct(vars: &[(String, Span)], seen: &mut BTreeSet<String>) -> PResult<()> {
    for (v, s) in vars {
        if !seen.insert(v.clone()) {
            return scope(*s, format!("type variable {v} bound twice"));
        }
    }
    Ok(())
}

fn desugar_scheme(
    mut s: SScheme,
    datatypes: &BTreeMap<String, Option<Kind>>,
) -> PResult<Scheme> {
    let mut names = BTreeSet::new();
    collect_names(&s.body, &mut names);
    for p in &s.context {
        for t in pred_types(p) {
            collect_names(t, &mut names);
        }
    }
    let mut vars: Vec<(String, Span)> = match &s.vars {
        Some(vs) => {
            check_distinct(vs, &mut BTreeSet::new())?;
            vs.clone()
        }
        None => {
            let mut vs = Vec::new();
            for p in &s.context {
                for t in pred_types(p) {
                    free_in_order(t, &mut vs);
                }
            }
            let mut body_vs = Vec::new();
            free_in_order(&s.body, &mut body_vs);
            let mut ordered = body_vs;
            for v in vs {
                if !ordered.iter().any(|(m, _)| *m == v.0) {
                    ordered.push(v);
                }
            }
            ordered
        }
    };
    let mut arrows = ArrowNames::new(names);
    let mut fresh = Vec::new();
    for p in &mut s.context {
        for t in pred_types_mut(p) {
            arrows.label(t, &mut fresh);
        }
    }
    arrows.label(&mut s.body, &mut fresh);
    vars.extend(fresh);

    let mut kc = Kinder::default();
    let mut sc = TypeScope { vars: HashMap::new(), datatypes, pending: None };
    for (v, _) in &vars {
        sc.vars.insert(v.clone(), kc.fresh());
    }
    for p in &s.context {
        kind_pred(p, &sc, &mut kc)?;
    }
    let kb = kind_of(&s.body, &sc, &mut kc)?;
    kc.unify(&kb, &KT::Star, s.span)?;

    let res = Resolver {
        vars: vars.iter().map(|(v, _)| (v.clone(), TypeVar::new(v.clone(), kc.finish(&sc.vars[v])))).collect(),
        datatypes,
        pending: None,
    };
    let mut context = Preds::new();
    for p in &s.context {
        let q = res.pred(p, &mut context);
        context.insert(q);
    }
    let body = res.ty(&s.body, &mut context);
    Ok(Scheme {
        vars: vars.iter().map(|(v, _)| res.vars[v].clone()).collect(),
        qual: QualType { context, body },
    })
}

fn desugar_con(
    mut c: SCon,
    datatypes: &BTreeMap<String, Option<Kind>>,
) -> PResult<ConstructorSig> {
    let mut seen = BTreeSet::new();
    for (a, s) in &c.args {
        if !seen.insert(a.clone()) {
            return scope(*s, format!("datatype parameter {a} repeated"));
        }
    }
    let outer = match &c.outer {
        Some(o) => {
            let declared: BTreeSet<String> = o.iter().map(|(v, _)| v.clone()).collect();
            if declared != seen || o.len() != c.args.len() {
                return scope(
                    c.datatype.1,
                    format!("result of {} must apply {} to exactly its quantified variables", c.name, c.datatype.0),
                );
            }
            c.args.clone()
        }
        None => c.args.clone(),
    };
    let mut bound = BTreeSet::new();
    check_distinct(&outer, &mut bound)?;
    check_distinct(&c.univ, &mut bound)?;
    check_distinct(&c.exist, &mut bound)?;

    let mut names = bound.clone();
    collect_names(&c.payload, &mut names);
    for p in &c.context {
        for t in pred_types(p) {
            collect_names(t, &mut names);
        }
    }
    let mut arrows = ArrowNames::new(names);
    let mut fresh = Vec::new();
    for p in &mut c.context {
        for t in pred_types_mut(p) {
            arrows.label(t, &mut fresh);
        }
    }
    arrows.label(&mut c.payload, &mut fresh);
    let mut univ = c.univ.clone();
    univ.extend(fresh);

    let mut kc = Kinder::default();
    let dt_kind = match datatypes.get(&c.datatype.0) {
        Some(Some(k)) => KT::from_kind(k),
        _ => kc.fresh(),
    };
    let mut sc = TypeScope { vars: HashMap::new(), datatypes, pending: Some((c.datatype.0.clone(), dt_kind.clone())) };
    for (v, _) in outer.iter().chain(&univ).chain(&c.exist) {
        sc.vars.insert(v.clone(), kc.fresh());
    }
    let app_kind = outer.iter().rev().fold(KT::Star, |acc, (v, _)| KT::Arr(Box::new(sc.vars[v].clone()), Box::new(acc)));
    kc.unify(&dt_kind, &app_kind, c.datatype.1)?;
    for p in &c.context {
        kind_pred(p, &sc, &mut kc)?;
    }
    let kp = kind_of(&c.payload, &sc, &mut kc)?;
    kc.unify(&kp, &KT::Star, c.span)?;

    let res = Resolver {
        vars: sc.vars.iter().map(|(v, k)| (v.clone(), TypeVar::new(v.clone(), kc.finish(k)))).collect(),
        datatypes,
        pending: Some((c.datatype.0.clone(), kc.finish(&dt_kind))),
    };
    let mut context = Preds::new();
    for p in &c.context {
        let q = res.pred(p, &mut context);
        context.insert(q);
    }
    let payload = res.ty(&c.payload, &mut context);
    let tv = |vs: &[(String, Span)]| vs.iter().map(|(v, _)| res.vars[v].clone()).collect::<Vec<_>>();
    Ok(ConstructorSig {
        name: c.name.clone(),
        datatype: c.datatype.0.clone(),
        outer: tv(&outer),
        univ: tv(&univ),
        exist: tv(&c.exist),
        context,
        payload,
    })
}

// -------------------------------------------------------------- renaming

struct Renamer<'a> {
    used: BTreeSet<String>,
    globals: &'a BTreeSet<String>,
    constructors: &'a BTreeMap<String, ConstructorSig>,
}

impl Renamer<'_> {
    fn bind(&mut self, x: &str) -> String {
        if self.used.insert(x.to_string()) {
            return x.to_string();
        }
        let mut k = 1;
        loop {
            let n = format!("{x}'{k}");
            if self.used.insert(n.clone()) {
                return n;
            }
            k += 1;
        }
    }

    fn term(&mut self, t: &mut Term, scope_: &mut Vec<(String, String)>) -> PResult<()> {
        let span = t.span;
        match &mut t.node {
            Node::Var(x) => {
                if let Some((_, new)) = scope_.iter().rev().find(|(old, _)| old == x) {
                    *x = new.clone();
                } else if !self.globals.contains(x.as_str()) {
                    return scope(span, format!("unbound variable {x}"));
                }
                Ok(())
            }
            Node::Lam(x, b) => {
                let new = self.bind(x);
                scope_.push((x.clone(), new.clone()));
                *x = new;
                self.term(b, scope_)?;
                scope_.pop();
                Ok(())
            }
            Node::App(m, n) => {
                self.term(m, scope_)?;
                self.term(n, scope_)
            }
            Node::Inl(m) | Node::Inr(m) => self.term(m, scope_),
            Node::Make(k, m) => {
                if !self.constructors.contains_key(k.as_str()) {
                    return scope(span, format!("unknown constructor {k}"));
                }
                self.term(m, scope_)
            }
            Node::Case { scrutinee, left, left_body, right, right_body } => {
                self.term(scrutinee, scope_)?;
                for (x, body) in [(left, left_body), (right, right_body)] {
                    let new = self.bind(x);
                    scope_.push((x.clone(), new.clone()));
                    *x = new;
                    self.term(body, scope_)?;
                    scope_.pop();
                }
                Ok(())
            }
            Node::Let(x, m, n) => {
                self.term(m, scope_)?;
                let new = self.bind(x);
                scope_.push((x.clone(), new.clone()));
                *x = new;
                self.term(n, scope_)?;
                scope_.pop();
                Ok(())
            }
            Node::Break { con, binder, bound, body } => {
                if !self.constructors.contains_key(con.as_str()) {
                    return scope(span, format!("unknown constructor {con}"));
                }
                self.term(bound, scope_)?;
                let new = self.bind(binder);
                scope_.push((binder.clone(), new.clone()));
                *binder = new;
                self.term(body, scope_)?;
                scope_.pop();
                Ok(())
            }
        }
    }
}

// ------------------------------------------------------------ entry points

fn parser_for(src: &str) -> PResult<Parser> {
    Ok(Parser { toks: lex(src)?, pos: 0 })
}

/// Parses and resolves a whole program.
pub fn parse_program(src: &str) -> PResult<Program> {
    let mut p = parser_for(src)?;
    let mut sdecls = Vec::new();
    while !matches!(p.peek(), Tok::Eof) {
        sdecls.push(p.decl()?);
    }

    let mut datatypes: BTreeMap<String, Option<Kind>> = BTreeMap::new();
    let mut constructors: BTreeMap<String, ConstructorSig> = BTreeMap::new();
    let mut with_con: BTreeSet<String> = BTreeSet::new();
    let mut globals: BTreeSet<String> = BTreeSet::new();
    let mut used: BTreeSet<String> = BTreeSet::new();
    let mut decls = Vec::new();
    for d in sdecls {
        match d {
            SDecl::Data(name, kind, span) => {
                if datatypes.contains_key(&name) {
                    return scope(span, format!("datatype {name} declared twice"));
                }
                datatypes.insert(name.clone(), kind.clone());
                if let Some(k) = kind {
                    decls.push(Decl::Data(name, k));
                } else {
                    decls.push(Decl::Data(name, Kind::Star));
                }
            }
            SDecl::Con(c) => {
                if constructors.contains_key(&c.name) {
                    return scope(c.span, format!("constructor {} declared twice", c.name));
                }
                if !with_con.insert(c.datatype.0.clone()) {
                    return scope(c.span, format!("datatype {} already has a constructor", c.datatype.0));
                }
                let span = c.span;
                let sig = desugar_con(c, &datatypes)?;
                if let Some(Some(k)) = datatypes.get(&sig.datatype) {
                    if *k != sig.datatype_kind() {
                        return Err(ParseError::Kind { span, msg: format!("kind mismatch for {}", sig.datatype) });
                    }
                }
                datatypes.insert(sig.datatype.clone(), Some(sig.datatype_kind()));
                for d in decls.iter_mut() {
                    if let Decl::Data(n, k) = d {
                        if *n == sig.datatype {
                            *k = sig.datatype_kind();
                        }
                    }
                }
                constructors.insert(sig.name.clone(), sig.clone());
                decls.push(Decl::Con(sig));
            }
            SDecl::Def(name, sig, mut body, span) => {
                if globals.contains(&name) {
                    return scope(span, format!("definition {name} declared twice"));
                }
                let declared = match sig {
                    Some(s) => Some(desugar_scheme(s, &datatypes)?),
                    None => None,
                };
                used.insert(name.clone());
                let mut r = Renamer { used: std::mem::take(&mut used), globals: &globals, constructors: &constructors };
                r.term(&mut body, &mut Vec::new())?;
                used = r.used;
                globals.insert(name.clone());
                decls.push(Decl::Def(Def { name, declared, body, span }));
            }
        }
    }
    Ok(Program { decls })
}

/// Parses a closed term.
pub fn parse_term(src: &str) -> PResult<Term> {
    let mut p = parser_for(src)?;
    let t = p.term()?;
    if !matches!(p.peek(), Tok::Eof) {
        return syntax(p.span(), format!("unexpected {}", describe(p.peek())));
    }
    Ok(t)
}

/// Parses a type scheme against known datatypes.
pub fn parse_scheme(src: &str, sigs: &Signatures) -> PResult<Scheme> {
    let mut p = parser_for(src)?;
    let s = p.scheme()?;
    if !matches!(p.peek(), Tok::Eof) {
        return syntax(p.span(), format!("unexpected {}", describe(p.peek())));
    }
    let dts: BTreeMap<String, Option<Kind>> =
        sigs.datatypes.iter().map(|(n, k)| (n.clone(), Some(k.clone()))).collect();
    desugar_scheme(s, &dts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pretty::{program_to_string, scheme_to_string};

    #[test]
    fn labels_and_comments() {
        let toks = lex("a -f> b -o c ->* d -> e -- comment\n+").unwrap();
        let kinds: Vec<Tok> = toks.into_iter().map(|(t, _)| t).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("a".into()),
                Tok::Label("f".into()),
                Tok::Ident("b".into()),
                Tok::LinArrow,
                Tok::Ident("c".into()),
                Tok::UnArrow,
                Tok::Ident("d".into()),
                Tok::Arrow,
                Tok::Ident("e".into()),
                Tok::Plus,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn schemes_desugar_bare_arrows() {
        let s = parse_scheme("forall t. t -> t", &Signatures::new()).unwrap();
        assert_eq!(s.vars.len(), 2);
        assert!(s.vars[1].kind.is_function());
        assert_eq!(scheme_to_string(&s), "forall t f'1. t -f'1> t");
        let k = parse_scheme("forall t u g f. (Un u, t >= f) => t -g> u -f> t", &Signatures::new()).unwrap();
        assert_eq!(scheme_to_string(&k), "forall t u g f. (Un u, t >= f) => t -g> u -f> t");
    }

    #[test]
    fn constructors_parse() {
        let src = "con MkTok : (exists u. u) ->* Tok;\n\
                   con MP : forall t u. ((forall v f. (t >= f, u >= f) => (t -> u -> v) -f> v) ->* MP t u);\n\
                   con Box : forall a. a ->* Box a;\n\
                   def pair = \\x -> \\y -> MP (\\f -> f x y);";
        let p = parse_program(src).unwrap();
        let sigs = p.signatures();
        let mp = sigs.constructor("MP").unwrap();
        assert_eq!(mp.outer.len(), 2);
        assert_eq!(mp.univ.len(), 4);
        assert!(mp.context.len() >= 5);
        assert_eq!(sigs.constructor("MkTok").unwrap().exist.len(), 1);
        assert_eq!(sigs.datatypes["MP"], Kind::from_args(&[Kind::Star, Kind::Star]));
        let again = parse_program(&program_to_string(&p)).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn binders_are_renamed_apart() {
        let p = parse_program("def a = \\x -> x; def b = \\x -> \\x -> a x;").unwrap();
        let printed = program_to_string(&p);
        assert!(printed.contains("\\x'1 -> \\x'2 -> a x'2"), "{printed}");
    }

    #[test]
    fn scope_errors() {
        assert!(matches!(parse_program("def a = y;"), Err(ParseError::Scope { .. })));
        assert!(matches!(parse_program("def a = a;"), Err(ParseError::Scope { .. })));
        assert!(matches!(parse_program("def a = K a;"), Err(ParseError::Scope { .. })));
        assert!(matches!(parse_program("def a = \\x -> ;"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_program("con K : Foo ->* T;"), Err(ParseError::Scope { .. })));
    }

    #[test]
    fn recursive_datatype_kinds() {
        let p = parse_program("con MkL : forall a. ((a ->* a) + (a + L a)) ->* L a;").unwrap();
        assert_eq!(p.signatures().datatypes["L"], Kind::arrow(Kind::Star, Kind::Star));
    }
}
