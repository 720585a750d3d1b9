//! Terms: names, variables, function applications, and diff-choice pairs.

use crate::sig::{NameId, SymId, Symtab, VarId};

/// Which projection of a bi-term/bi-process to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// A message term. `Choice` may only appear inside bi-processes; projecting
/// with [`Term::project`] removes every occurrence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Name(NameId),
    Var(VarId),
    App(SymId, Vec<Term>),
    Choice(Box<Term>, Box<Term>),
}

impl Term {
    pub fn app(sym: SymId, args: Vec<Term>) -> Term {
        Term::App(sym, args)
    }

    /// A 0-ary application (a declared constant such as `true`).
    pub fn constant(sym: SymId) -> Term {
        Term::App(sym, Vec::new())
    }

    pub fn choice(left: Term, right: Term) -> Term {
        Term::Choice(Box::new(left), Box::new(right))
    }

    /// Builds an n-ary tuple, declaring the constructor on first use.
    /// A 1-tuple is the component itself.
    pub fn tuple(tab: &mut Symtab, items: Vec<Term>) -> Term {
        if items.len() == 1 {
            return items.into_iter().next().unwrap();
        }
        let sym = tab.tuple(items.len());
        Term::App(sym, items)
    }

    /// Node count; the termination measure for rewrite rules.
    pub fn size(&self) -> usize {
        match self {
            Term::Name(_) | Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
            Term::Choice(l, r) => 1 + l.size() + r.size(),
        }
    }

    /// Nesting depth: atoms are 1, an application is one more than its
    /// deepest argument.
    pub fn depth(&self) -> usize {
        match self {
            Term::Name(_) | Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
            Term::Choice(l, r) => l.depth().max(r.depth()),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Name(_) => true,
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
            Term::Choice(l, r) => l.is_ground() && r.is_ground(),
        }
    }

    pub fn has_choice(&self) -> bool {
        match self {
            Term::Name(_) | Term::Var(_) => false,
            Term::App(_, args) => args.iter().any(Term::has_choice),
            Term::Choice(_, _) => true,
        }
    }

    pub fn vars(&self, acc: &mut Vec<VarId>) {
        match self {
            Term::Name(_) => {}
            Term::Var(v) => {
                if !acc.contains(v) {
                    acc.push(*v);
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| a.vars(acc)),
            Term::Choice(l, r) => {
                l.vars(acc);
                r.vars(acc);
            }
        }
    }

    pub fn names(&self, acc: &mut Vec<NameId>) {
        match self {
            Term::Name(n) => {
                if !acc.contains(n) {
                    acc.push(*n);
                }
            }
            Term::Var(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.names(acc)),
            Term::Choice(l, r) => {
                l.names(acc);
                r.names(acc);
            }
        }
    }

    pub fn contains_name(&self, name: NameId) -> bool {
        match self {
            Term::Name(n) => *n == name,
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().any(|a| a.contains_name(name)),
            Term::Choice(l, r) => l.contains_name(name) || r.contains_name(name),
        }
    }

    /// Occurrences of `v`, for the rule termination measure.
    pub fn var_count(&self, v: VarId) -> usize {
        match self {
            Term::Name(_) => 0,
            Term::Var(w) => usize::from(*w == v),
            Term::App(_, args) => args.iter().map(|a| a.var_count(v)).sum(),
            Term::Choice(l, r) => l.var_count(v) + r.var_count(v),
        }
    }

    /// Replaces every `Choice(l, r)` by the chosen side.
    pub fn project(&self, side: Side) -> Term {
        match self {
            Term::Name(_) | Term::Var(_) => self.clone(),
            Term::App(f, args) => Term::App(*f, args.iter().map(|a| a.project(side)).collect()),
            Term::Choice(l, r) => match side {
                Side::Left => l.project(side),
                Side::Right => r.project(side),
            },
        }
    }

    /// Renames one name id into another everywhere (restriction unfolding).
    pub fn rename_name(&self, from: NameId, to: NameId) -> Term {
        match self {
            Term::Name(n) if *n == from => Term::Name(to),
            Term::Name(_) | Term::Var(_) => self.clone(),
            Term::App(f, args) => Term::App(
                *f,
                args.iter().map(|a| a.rename_name(from, to)).collect(),
            ),
            Term::Choice(l, r) => Term::choice(l.rename_name(from, to), r.rename_name(from, to)),
        }
    }

    /// Replaces every occurrence of a free name by an arbitrary term, the
    /// instantiation step that closes a role piece over concrete agents.
    pub fn replace_name(&self, from: NameId, to: &Term) -> Term {
        match self {
            Term::Name(n) if *n == from => to.clone(),
            Term::Name(_) | Term::Var(_) => self.clone(),
            Term::App(f, args) => Term::App(
                *f,
                args.iter().map(|a| a.replace_name(from, to)).collect(),
            ),
            Term::Choice(l, r) => {
                Term::choice(l.replace_name(from, to), r.replace_name(from, to))
            }
        }
    }

    /// Pre-order traversal of all subterms, self included.
    pub fn subterms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            out.push(t);
            match t {
                Term::App(_, args) => stack.extend(args.iter().rev()),
                Term::Choice(l, r) => {
                    stack.push(r);
                    stack.push(l);
                }
                _ => {}
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sig::{NameScope, Sort, Visibility};

    #[test]
    fn size_counts_nodes() {
        let mut tab = Symtab::new();
        let enc = tab.declare_symbol("enc", 2, Visibility::Public).unwrap();
        let m = tab.declare_name("m", Sort::Base, NameScope::Public).unwrap();
        let k = tab.declare_name("k", Sort::Base, NameScope::Public).unwrap();
        let t = Term::app(enc, vec![Term::Name(m), Term::Name(k)]);
        assert_eq!(t.size(), 3);
        assert!(t.is_ground());
    }

    #[test]
    fn projection_strips_choices() {
        let mut tab = Symtab::new();
        let enc = tab.declare_symbol("enc", 2, Visibility::Public).unwrap();
        let a = tab.declare_name("a", Sort::Base, NameScope::Public).unwrap();
        let b = tab.declare_name("b", Sort::Base, NameScope::Public).unwrap();
        let k = tab.declare_name("k", Sort::Base, NameScope::Public).unwrap();
        let t = Term::app(
            enc,
            vec![Term::choice(Term::Name(a), Term::Name(b)), Term::Name(k)],
        );
        assert!(t.has_choice());
        assert_eq!(
            t.project(Side::Left),
            Term::app(enc, vec![Term::Name(a), Term::Name(k)])
        );
        assert_eq!(
            t.project(Side::Right),
            Term::app(enc, vec![Term::Name(b), Term::Name(k)])
        );
        assert!(!t.project(Side::Left).has_choice());
    }

    #[test]
    fn one_tuples_collapse() {
        let mut tab = Symtab::new();
        let a = tab.declare_name("a", Sort::Base, NameScope::Public).unwrap();
        assert_eq!(Term::tuple(&mut tab, vec![Term::Name(a)]), Term::Name(a));
        let pair = Term::tuple(&mut tab, vec![Term::Name(a), Term::Name(a)]);
        assert_eq!(pair.size(), 3);
    }
}
