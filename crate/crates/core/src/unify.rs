//! Most general unifiers that respect rigid variables.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::syntax::{Subst, Type, TypeVar, Types};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum UnifyError {
    #[error("cannot match {0:?} with {1:?}")]
    Clash(Type, Type),
    #[error("{0:?} occurs in {1:?}")]
    Occurs(TypeVar, Type),
    #[error("rigid variable {0:?} cannot be bound to {1:?}")]
    Rigid(TypeVar, Type),
    #[error("kinds of {0:?} and {1:?} differ")]
    Kind(Type, Type),
}

fn is_rigid(rigid: &BTreeSet<TypeVar>, v: &TypeVar) -> bool {
    v.is_rigid() || rigid.contains(v)
}

/// Most general idempotent `S` with `S left = S right`, never binding a
/// variable that is rigid or listed in `rigid`.
pub fn mgu(rigid: &BTreeSet<TypeVar>, left: &Type, right: &Type) -> Result<Subst, UnifyError> {
    if left.kind() != right.kind() {
        return Err(UnifyError::Kind(left.clone(), right.clone()));
    }
    let mut s = Subst::new();
    unify(rigid, left, right, &mut s)?;
    Ok(s)
}

/// Unifies two lists pointwise.
pub fn mgu_many(
    rigid: &BTreeSet<TypeVar>,
    pairs: &[(Type, Type)],
) -> Result<Subst, UnifyError> {
    let mut s = Subst::new();
    for (l, r) in pairs {
        if l.kind() != r.kind() {
            return Err(UnifyError::Kind(l.clone(), r.clone()));
        }
        unify(rigid, l, r, &mut s)?;
    }
    Ok(s)
}

fn unify(rigid: &BTreeSet<TypeVar>, a: &Type, b: &Type, s: &mut Subst) -> Result<(), UnifyError> {
    let a = a.apply(s);
    let b = b.apply(s);
    match (&a, &b) {
        (Type::Var(v), Type::Var(w)) if v == w => Ok(()),
        (Type::Var(v), t) if !is_rigid(rigid, v) => bind(v, t, s),
        (t, Type::Var(v)) if !is_rigid(rigid, v) => bind(v, t, s),
        (Type::Var(v), t) | (t, Type::Var(v)) => Err(UnifyError::Rigid(v.clone(), t.clone())),
        (Type::Con(n, k), Type::Con(m, j)) => {
            if n == m && k == j {
                Ok(())
            } else {
                Err(UnifyError::Clash(a.clone(), b.clone()))
            }
        }
        (Type::App(f, x), Type::App(g, y)) => {
            if f.kind() != g.kind() {
                return Err(UnifyError::Clash(a.clone(), b.clone()));
            }
            unify(rigid, f, g, s)?;
            unify(rigid, x, y, s)
        }
        _ => Err(UnifyError::Clash(a.clone(), b.clone())),
    }
}

fn bind(v: &TypeVar, t: &Type, s: &mut Subst) -> Result<(), UnifyError> {
    if v.kind != t.kind() {
        return Err(UnifyError::Kind(Type::Var(v.clone()), t.clone()));
    }
    if t.occurs(v) {
        return Err(UnifyError::Occurs(v.clone(), t.clone()));
    }
    *s = Subst::compose(&Subst::singleton(v.clone(), t.clone()), s);
    Ok(())
}

/// One-sided matching: `S general = specific` binding only variables in `bindable`.
pub fn match_type(
    bindable: &BTreeSet<TypeVar>,
    general: &Type,
    specific: &Type,
) -> Result<Subst, UnifyError> {
    let mut frozen = general.ftv();
    specific.ftv_into(&mut frozen);
    frozen.retain(|v| !bindable.contains(v));
    let s = mgu(&frozen, general, specific)?;
    if specific.apply(&s) != *specific {
        return Err(UnifyError::Clash(general.clone(), specific.clone()));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Kind;

    fn v(n: &str) -> TypeVar {
        TypeVar::new(n, Kind::Star)
    }
    fn t(n: &str) -> Type {
        Type::Var(v(n))
    }
    fn fv(n: &str) -> TypeVar {
        TypeVar::new(n, Kind::function())
    }

    #[test]
    fn arrow_variable_meets_unrestricted_arrow() {
        let left = Type::arrow(Type::Var(fv("f")), t("a"), t("b"));
        let right = Type::un(t("c"), t("d"));
        let s = mgu(&BTreeSet::new(), &left, &right).unwrap();
        assert_eq!(s.get(&fv("f")), Some(&Type::un_con()));
        assert_eq!(left.apply(&s), right.apply(&s));
        assert!(s.is_idempotent());
    }

    #[test]
    fn rigid_variables_are_not_bound() {
        let r = TypeVar::rigid("r", Kind::Star);
        let err = mgu(&BTreeSet::new(), &Type::Var(r.clone()), &Type::un(t("a"), t("a")));
        assert!(matches!(err, Err(UnifyError::Rigid(..))));
        let s = mgu(&BTreeSet::new(), &Type::Var(r.clone()), &t("a")).unwrap();
        assert_eq!(s.get(&v("a")), Some(&Type::Var(r)));
        let frozen: BTreeSet<_> = [v("a")].into_iter().collect();
        assert!(mgu(&frozen, &t("a"), &t("b")).is_ok());
        assert!(mgu(&frozen, &t("a"), &Type::un(t("b"), t("b"))).is_err());
    }

    #[test]
    fn occurs_and_clash() {
        assert!(matches!(
            mgu(&BTreeSet::new(), &t("a"), &Type::un(t("a"), t("b"))),
            Err(UnifyError::Occurs(..))
        ));
        assert!(matches!(
            mgu(&BTreeSet::new(), &Type::lin(t("a"), t("b")), &Type::un(t("a"), t("b"))),
            Err(UnifyError::Clash(..))
        ));
        assert!(matches!(
            mgu(&BTreeSet::new(), &Type::Var(fv("f")), &t("a")),
            Err(UnifyError::Kind(..))
        ));
    }

    #[test]
    fn matching_is_one_sided() {
        let general = Type::un(t("a"), t("a"));
        let bind: BTreeSet<_> = [v("a")].into_iter().collect();
        assert!(match_type(&bind, &general, &Type::un(t("x"), t("x"))).is_ok());
        assert!(match_type(&bind, &general, &Type::un(t("x"), t("y"))).is_err());
    }
}
