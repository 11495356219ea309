//! Embedded example programs with their expected outcomes.

use quill_core::infer::ErrorClass;

/// Declarations of the Church-style product encodings.
pub const PRODUCTS: &str = "\
con MP : forall t u. ((forall v f. (t >= f, u >= f) => (t -> u -> v) -f> v) ->* MP t u);
con AP : forall t u. ((forall v f. (t >= f, u >= f) => ((t -f> v) + (u -f> v)) -f> v) ->* AP t u);
";

const TOKEN: &str = "con MkTok : (exists u. u) ->* Tok;\n";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Group {
    Golden,
    Encoding,
    Conservative,
    Negative,
    Runnable,
}

impl Group {
    pub fn label(self) -> &'static str {
        match self {
            Group::Golden => "golden",
            Group::Encoding => "encoding",
            Group::Conservative => "conservative",
            Group::Negative => "negative",
            Group::Runnable => "runnable",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expect {
    /// Definition `def` has this canonical printed scheme.
    Scheme { def: &'static str, scheme: &'static str },
    /// Every definition infers.
    Infers,
    /// Inference fails with this error class.
    Rejected(ErrorClass),
    /// `main` evaluates to this value and the audit passes.
    Runs(&'static str),
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: String,
    pub group: Group,
    pub source: String,
    pub expect: Expect,
}

fn entry(group: Group, name: &str, source: String, expect: Expect) -> CorpusEntry {
    CorpusEntry { name: name.to_string(), group, source, expect }
}

fn golden(name: &str, prelude: &str, def: &'static str, body: &str, scheme: &'static str) -> CorpusEntry {
    entry(Group::Golden, name, format!("{prelude}def {def} = {body};\n"), Expect::Scheme { def, scheme })
}

/// Purely non-linear terms: typeable without any appeal to linearity.
pub const CONSERVATIVE: [&str; 36] = [
    "\\x -> x",
    "\\x -> \\y -> x",
    "\\x -> \\y -> y",
    "\\f -> \\x -> f x",
    "\\f -> \\g -> \\x -> f (g x)",
    "\\f -> \\x -> \\y -> f y x",
    "\\f -> \\x -> f (f x)",
    "\\x -> \\f -> f x",
    "\\f -> \\g -> \\x -> f x (g x)",
    "\\f -> \\x -> f x x",
    "\\x -> inl x",
    "\\x -> inr x",
    "\\s -> case s of { inl a -> inr a ; inr b -> inl b }",
    "\\f -> \\g -> \\s -> case s of { inl a -> f a ; inr b -> g b }",
    "\\s -> case s of { inl a -> a ; inr b -> b }",
    "\\f -> \\s -> case s of { inl a -> inl (f a) ; inr b -> inr b }",
    "\\x -> \\y -> case x of { inl a -> y ; inr b -> y }",
    "\\x -> case inl x of { inl a -> a ; inr b -> x }",
    "\\x -> inl (inr x)",
    "let i = \\x -> x in i i",
    "let k = \\x -> \\y -> x in k k k",
    "let twice = \\f -> \\x -> f (f x) in twice twice",
    "let i = \\x -> x in let k = \\a -> \\b -> a in k i i",
    "\\x -> let y = x in y",
    "\\x -> let g = \\z -> x in g (g x)",
    "\\f -> let g = \\x -> f x in g",
    "\\x -> (\\y -> y) x",
    "\\f -> \\x -> f (f (f x))",
    "\\n -> \\f -> \\x -> f (n f x)",
    "\\m -> \\n -> \\f -> \\x -> m f (n f x)",
    "\\m -> \\n -> \\f -> m (n f)",
    "\\x -> \\y -> \\z -> y",
    "\\x -> \\y -> inl (x y)",
    "\\p -> case p of { inl f -> f ; inr g -> g }",
    "let d = \\x -> \\f -> f x x in d (\\z -> z)",
    "\\f -> \\x -> let y = f x in f y",
];

/// The full corpus in a fixed order.
pub fn corpus() -> Vec<CorpusEntry> {
    let mut out = vec![
        golden("K combinator", "", "k", "\\x -> \\y -> x", "forall t u g f. (Un u, t >= f) => t -g> u -f> t"),
        golden(
            "curried application",
            "",
            "app",
            "\\f -> \\x -> f x",
            "forall t u h f g. (f >= g) => (t -f> u) -h> t -g> u",
        ),
        golden(
            "curried pair",
            PRODUCTS,
            "pair",
            "\\x -> \\y -> MP (\\f -> f x y)",
            "forall t u g f. (t >= f) => t -g> u -f> MP t u",
        ),
        golden(
            "uncurried application",
            PRODUCTS,
            "uapp",
            "\\p -> let MP k = p in k (\\f -> \\x -> f x)",
            "forall t u f g. MP (t -g> u) t -f> u",
        ),
        golden("identity", "", "id", "\\x -> x", "forall t f. t -f> t"),
        golden("flip const", "", "kk", "\\x -> \\y -> y", "forall t u f g. (Un t) => t -f> u -g> u"),
    ];
    let encodings = format!(
        "{PRODUCTS}\
def pair = \\x -> \\y -> MP (\\f -> f x y);
def swap = \\p -> let MP f = p in f (\\x -> \\y -> MP (\\g -> g y x));
def fst = \\p -> let MP f = p in f (\\x -> \\y -> x);
def snd = \\p -> let MP f = p in f (\\x -> \\y -> y);
def with = \\x -> \\y -> AP (\\l -> case l of {{ inl f -> f x ; inr f -> f y }});
def proj1 = \\p -> let AP f = p in f (inl (\\z -> z));
def proj2 = \\p -> let AP f = p in f (inr (\\z -> z));
"
    );
    out.push(entry(Group::Encoding, "product encodings", encodings.clone(), Expect::Infers));
    for (i, t) in CONSERVATIVE.iter().enumerate() {
        out.push(entry(Group::Conservative, &format!("term {:02}", i + 1), format!("def main = {t};\n"), Expect::Infers));
    }
    let negatives = [
        ("linear discard", format!("{TOKEN}def bad = (\\x -> \\y -> y) (MkTok (\\z -> z));\n"), ErrorClass::Entailment),
        ("linear duplicate", format!("{TOKEN}def bad = (\\x -> \\f -> f x x) (MkTok (\\z -> z));\n"), ErrorClass::Entailment),
        ("skolem escape", format!("{TOKEN}def bad = \\t -> let MkTok x = t in x;\n"), ErrorClass::SkolemEscape),
        (
            "rigid unification",
            "con Poly : (forall a. a -o a) ->* Poly;\ndef bad = Poly (\\x -> inl x);\n".to_string(),
            ErrorClass::RigidUnification,
        ),
        (
            "unrestricted linear arrow",
            "con Lin : forall t. (t -o t) ->* Lin t;\ndef bad = \\l -> let Lin f = l in \\x -> f (f x);\n".to_string(),
            ErrorClass::Entailment,
        ),
        ("declared scheme too general", "def id : forall t u. t -> u = \\x -> x;\n".to_string(), ErrorClass::NotInstance),
    ];
    for (name, src, class) in negatives {
        out.push(entry(Group::Negative, name, src, Expect::Rejected(class)));
    }
    let runnable = [
        ("identity on injection", "def main = (\\x -> x) (inl (\\y -> y));\n".to_string(), "inl <fun>"),
        (
            "shared closure",
            "def main = let g = \\x -> x in g (g (inl (\\z -> z)));\n".to_string(),
            "inl <fun>",
        ),
        (
            "encoded swap",
            format!(
                "{encodings}def i = \\x -> x;\ndef j = \\y -> y;\n\
                 def main = let MP f = pair (inl i) (inr j) in f (\\x -> \\y -> MP (\\g -> g y x));\n"
            ),
            "MP <fun>",
        ),
        (
            "encoded swap then first",
            format!("{encodings}def main = fst (swap (pair (inl (\\x -> x)) (inr (\\y -> y))));\n"),
            "inr <fun>",
        ),
        (
            "additive first projection",
            format!("{encodings}def main = proj1 (with (inl (\\x -> x)) (inr (\\y -> y)));\n"),
            "inl <fun>",
        ),
        (
            "additive second projection",
            format!("{encodings}def main = proj2 (with (inl (\\x -> x)) (inr (\\y -> y)));\n"),
            "inr <fun>",
        ),
        ("token is returned", format!("{TOKEN}def main = (\\t -> inl t) (MkTok (\\z -> z));\n"), "inl (MkTok <fun>)"),
        (
            "box round trip",
            "con Box : forall a. a ->* Box a;\ndef main = let Box f = Box (\\x -> x) in f (inr (\\y -> y));\n".to_string(),
            "inr <fun>",
        ),
        (
            "church numerals",
            "def two = \\f -> \\x -> f (f x);\ndef main = two two (\\z -> z) (inl (\\w -> w));\n".to_string(),
            "inl <fun>",
        ),
        (
            "case on a sum",
            "def main = case inr (\\a -> a) of { inl f -> f ; inr g -> g };\n".to_string(),
            "<fun>",
        ),
    ];
    for (name, src, value) in runnable {
        out.push(entry(Group::Runnable, name, src, Expect::Runs(value)));
    }
    out
}

/// All corpus sources as one program text per entry, for batch commands.
pub fn sources() -> Vec<(String, String)> {
    corpus().into_iter().map(|e| (e.name, e.source)).collect()
}
