//! Random closed terms for property testing.
//!
//! Terms are produced as surface source over a fixed set of constructor
//! declarations and then filtered through inference, so every sample that
//! survives comes with its elaboration.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::infer::{infer_program, Elaboration};
use crate::parser::parse_program;
use crate::syntax::Program;

/// Constructor declarations available to generated terms.
pub const PRELUDE: &str = "\
con MP : forall t u. ((forall v f. (t >= f, u >= f) => (t -> u -> v) -f> v) ->* MP t u);
con AP : forall t u. ((forall v f. (t >= f, u >= f) => ((t -f> v) + (u -f> v)) -f> v) ->* AP t u);
con MkTok : (exists u. u) ->* Tok;
con Box : forall a. a ->* Box a;
";

const CONSTRUCTORS: [&str; 4] = ["MP", "AP", "MkTok", "Box"];

/// A generated term that passed inference as the body of `main`.
#[derive(Clone, Debug)]
pub struct Sample {
    pub source: String,
    pub program: Program,
    pub elaboration: Elaboration,
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    next: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn fresh(&mut self) -> String {
        self.next += 1;
        format!("x{}", self.next)
    }

    fn lam(&mut self, depth: usize, scope: &mut Vec<String>) -> String {
        let x = self.fresh();
        scope.push(x.clone());
        let body = self.term(depth - 1, scope);
        scope.pop();
        format!("(\\{x} -> {body})")
    }

    fn bind(&mut self, depth: usize, scope: &mut Vec<String>) -> (String, String) {
        let x = self.fresh();
        scope.push(x.clone());
        let body = self.term(depth - 1, scope);
        scope.pop();
        (x, body)
    }

    /// A closed-under-`scope` term of depth at most `depth`.
    fn term(&mut self, depth: usize, scope: &mut Vec<String>) -> String {
        if depth <= 1 || (!scope.is_empty() && self.rng.gen_bool(0.3)) {
            if let Some(x) = scope.choose(self.rng) {
                return x.clone();
            }
        }
        // Children get depth - 1; with nothing in scope they need room for a lambda.
        if scope.is_empty() && depth < 3 {
            return self.lam(depth, scope);
        }
        match self.rng.gen_range(0..100) {
            0..=29 => self.lam(depth, scope),
            30..=54 => {
                let m = self.term(depth - 1, scope);
                let n = self.term(depth - 1, scope);
                format!("({m} {n})")
            }
            55..=59 => format!("(inl {})", self.term(depth - 1, scope)),
            60..=64 => format!("(inr {})", self.term(depth - 1, scope)),
            65..=72 => {
                let s = self.term(depth - 1, scope);
                let (l, lb) = self.bind(depth, scope);
                let (r, rb) = self.bind(depth, scope);
                format!("(case {s} of {{ inl {l} -> {lb} ; inr {r} -> {rb} }})")
            }
            73..=82 => {
                let m = self.term(depth - 1, scope);
                let (x, n) = self.bind(depth, scope);
                format!("(let {x} = {m} in {n})")
            }
            83..=92 => {
                let k = CONSTRUCTORS.choose(self.rng).unwrap();
                format!("({k} {})", self.term(depth - 1, scope))
            }
            _ => {
                let k = CONSTRUCTORS.choose(self.rng).unwrap();
                let m = self.term(depth - 1, scope);
                let (x, n) = self.bind(depth, scope);
                format!("(let {k} {x} = {m} in {n})")
            }
        }
    }
}

/// A random closed term over [`PRELUDE`] of syntactic depth at most
/// `max_depth` (at least 2). It need not be well typed.
pub fn random_source<R: Rng>(rng: &mut R, max_depth: usize) -> String {
    let mut g = Gen { rng, next: 0 };
    g.term(max_depth.max(2), &mut Vec::new())
}

/// Wraps a term as the `main` definition of a program over [`PRELUDE`].
pub fn program_source(term: &str) -> String {
    format!("{PRELUDE}def main = {term};\n")
}

/// Draws terms until `count` distinct well-typed ones are found or
/// `max_attempts` terms have been tried.
pub fn well_typed<R: Rng>(rng: &mut R, count: usize, max_depth: usize, max_attempts: usize) -> Vec<Sample> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for _ in 0..max_attempts {
        if out.len() == count {
            break;
        }
        let term = random_source(rng, max_depth);
        if !seen.insert(term.clone()) {
            continue;
        }
        let source = program_source(&term);
        let program = parse_program(&source).expect("generated source parses");
        if let Ok(elaboration) = infer_program(&program) {
            out.push(Sample { source, program, elaboration });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn terms_are_closed_and_shallow() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..300 {
            let src = program_source(&random_source(&mut rng, 6));
            let p = parse_program(&src).unwrap();
            let main = p.defs().find(|d| d.name == "main").unwrap();
            assert!(main.body.depth() <= 6, "{src}");
            assert!(main.body.free_vars().is_empty());
        }
    }

    #[test]
    fn some_terms_are_well_typed() {
        let mut rng = StdRng::seed_from_u64(11);
        let samples = well_typed(&mut rng, 20, 6, 5_000);
        assert_eq!(samples.len(), 20);
    }
}
