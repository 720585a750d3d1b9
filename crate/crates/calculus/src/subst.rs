//! Simultaneous substitutions over variables.

use crate::sig::VarId;
use crate::term::Term;
use std::collections::BTreeMap;

/// A finite map from variables to terms, applied simultaneously: bindings
/// never rewrite each other's images during a single application.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Subst {
    map: BTreeMap<VarId, Term>,
}

impl Subst {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(v: VarId, t: Term) -> Self {
        let mut s = Self::new();
        s.bind(v, t);
        s
    }

    pub fn bind(&mut self, v: VarId, t: Term) {
        self.map.insert(v, t);
    }

    pub fn get(&self, v: VarId) -> Option<&Term> {
        self.map.get(&v)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarId, &Term)> {
        self.map.iter()
    }

    /// Applies the substitution once, simultaneously.
    pub fn apply(&self, t: &Term) -> Term {
        if self.map.is_empty() {
            return t.clone();
        }
        match t {
            Term::Var(v) => self.map.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::Name(_) => t.clone(),
            Term::App(f, args) => Term::App(*f, args.iter().map(|a| self.apply(a)).collect()),
            Term::Choice(l, r) => Term::choice(self.apply(l), self.apply(r)),
        }
    }

    /// Composition: `self.compose(other)` behaves as "apply self, then other".
    /// Images of `self` are rewritten by `other`, and bindings of `other` for
    /// variables untouched by `self` are kept.
    pub fn compose(&self, other: &Subst) -> Subst {
        let mut map = BTreeMap::new();
        for (v, t) in &self.map {
            map.insert(*v, other.apply(t));
        }
        for (v, t) in &other.map {
            map.entry(*v).or_insert_with(|| t.clone());
        }
        Subst { map }
    }

    /// Extends with a binding, failing on conflicting re-binding (used by
    /// non-linear pattern matching).
    pub fn try_bind(&mut self, v: VarId, t: &Term) -> bool {
        match self.map.get(&v) {
            Some(existing) => existing == t,
            None => {
                self.map.insert(v, t.clone());
                true
            }
        }
    }
}

impl FromIterator<(VarId, Term)> for Subst {
    fn from_iter<I: IntoIterator<Item = (VarId, Term)>>(iter: I) -> Self {
        Subst {
            map: iter.into_iter().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sig::{NameScope, Sort, Symtab, Visibility};

    fn fixture() -> (Symtab, u32, u32, u32) {
        let mut tab = Symtab::new();
        let pair = tab.declare_symbol("pair", 2, Visibility::Public).unwrap();
        let a = tab.declare_name("a", Sort::Base, NameScope::Public).unwrap();
        let x = tab.fresh_var("x");
        let y = tab.fresh_var("y");
        let _ = pair;
        (tab, a, x, y)
    }

    #[test]
    fn empty_substitution_is_identity() {
        let (tab, a, x, _) = fixture();
        let pair = tab.lookup_symbol("pair").unwrap();
        let t = Term::app(pair, vec![Term::Var(x), Term::Name(a)]);
        assert_eq!(Subst::new().apply(&t), t);
    }

    #[test]
    fn application_is_simultaneous_not_sequential() {
        // {x↦y, y↦a} applied to pair(x,y) must give pair(y,a), not pair(a,a).
        let (tab, a, x, y) = fixture();
        let pair = tab.lookup_symbol("pair").unwrap();
        let mut s = Subst::new();
        s.bind(x, Term::Var(y));
        s.bind(y, Term::Name(a));
        let t = Term::app(pair, vec![Term::Var(x), Term::Var(y)]);
        assert_eq!(
            s.apply(&t),
            Term::app(pair, vec![Term::Var(y), Term::Name(a)])
        );
    }

    #[test]
    fn compose_matches_sequential_application() {
        let (tab, a, x, y) = fixture();
        let pair = tab.lookup_symbol("pair").unwrap();
        let s1 = Subst::singleton(x, Term::Var(y));
        let s2 = Subst::singleton(y, Term::Name(a));
        let t = Term::app(pair, vec![Term::Var(x), Term::Var(y)]);
        let composed = s1.compose(&s2);
        assert_eq!(composed.apply(&t), s2.apply(&s1.apply(&t)));
    }

    #[test]
    fn try_bind_rejects_conflicts() {
        let (_, a, x, y) = fixture();
        let mut s = Subst::new();
        assert!(s.try_bind(x, &Term::Name(a)));
        assert!(s.try_bind(x, &Term::Name(a)));
        assert!(!s.try_bind(x, &Term::Var(y)));
    }
}
