//! Applied-pi processes and bi-processes.
//!
//! A bi-process is an ordinary [`Process`] whose terms contain
//! [`Term::Choice`] leaves; [`Process::project`] extracts either side. The
//! executor relies on elaboration having made every binder unique, so
//! substitution never needs capture checks.

use crate::sig::{EventId, NameId, Symtab, VarId};
use crate::subst::Subst;
use crate::term::{Side, Term};
use std::collections::HashMap;

/// Input / `let` patterns: a binder, an equality constraint against an
/// already-bound term, or a tuple of sub-patterns.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pattern {
    Var(VarId),
    Eq(Term),
    Tuple(Vec<Pattern>),
}

impl Pattern {
    /// Variables bound by this pattern, in left-to-right order.
    pub fn binders(&self, acc: &mut Vec<VarId>) {
        match self {
            Pattern::Var(v) => acc.push(*v),
            Pattern::Eq(_) => {}
            Pattern::Tuple(ps) => ps.iter().for_each(|p| p.binders(acc)),
        }
    }

    /// Matches a ground, normalized value. `Eq` terms must already be ground
    /// (the elaborator substitutes eagerly); comparison is syntactic since
    /// both sides are normal forms.
    pub fn match_value(&self, value: &Term, tab: &Symtab) -> Option<Subst> {
        let mut s = Subst::new();
        if self.match_into(value, tab, &mut s) {
            Some(s)
        } else {
            None
        }
    }

    fn match_into(&self, value: &Term, tab: &Symtab, s: &mut Subst) -> bool {
        match self {
            Pattern::Var(v) => s.try_bind(*v, value),
            Pattern::Eq(t) => t == value,
            Pattern::Tuple(ps) => match value {
                Term::App(f, args) => {
                    tab.tuple_of(ps.len()) == Some(*f)
                        && args.len() == ps.len()
                        && ps
                            .iter()
                            .zip(args)
                            .all(|(p, a)| p.match_into(a, tab, s))
                }
                _ => false,
            },
        }
    }

    /// Applies a substitution to the `Eq` terms (binders are untouched).
    pub fn subst(&self, s: &Subst) -> Pattern {
        match self {
            Pattern::Var(v) => Pattern::Var(*v),
            Pattern::Eq(t) => Pattern::Eq(s.apply(t)),
            Pattern::Tuple(ps) => Pattern::Tuple(ps.iter().map(|p| p.subst(s)).collect()),
        }
    }

    pub fn project(&self, side: Side) -> Pattern {
        match self {
            Pattern::Var(v) => Pattern::Var(*v),
            Pattern::Eq(t) => Pattern::Eq(t.project(side)),
            Pattern::Tuple(ps) => Pattern::Tuple(ps.iter().map(|p| p.project(side)).collect()),
        }
    }

    fn rename_name(&self, from: NameId, to: NameId) -> Pattern {
        match self {
            Pattern::Var(v) => Pattern::Var(*v),
            Pattern::Eq(t) => Pattern::Eq(t.rename_name(from, to)),
            Pattern::Tuple(ps) => {
                Pattern::Tuple(ps.iter().map(|p| p.rename_name(from, to)).collect())
            }
        }
    }

    fn replace_name(&self, from: NameId, to: &Term) -> Pattern {
        match self {
            Pattern::Var(v) => Pattern::Var(*v),
            Pattern::Eq(t) => Pattern::Eq(t.replace_name(from, to)),
            Pattern::Tuple(ps) => {
                Pattern::Tuple(ps.iter().map(|p| p.replace_name(from, to)).collect())
            }
        }
    }

    pub fn terms<'a>(&'a self, acc: &mut Vec<&'a Term>) {
        match self {
            Pattern::Var(_) => {}
            Pattern::Eq(t) => acc.push(t),
            Pattern::Tuple(ps) => ps.iter().for_each(|p| p.terms(acc)),
        }
    }
}

/// Identifier of a replication site, for per-site session budgets.
pub type ReplId = u32;

/// Plain and bi-process AST. Sequential composition is by nesting; `Nil`
/// terminates every branch.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Process {
    Nil,
    Par(Box<Process>, Box<Process>),
    Repl(ReplId, Box<Process>),
    New(NameId, Box<Process>),
    In(Term, Pattern, Box<Process>),
    Out(Term, Term, Box<Process>),
    Let(Pattern, Term, Box<Process>, Box<Process>),
    If(Term, Term, Box<Process>, Box<Process>),
    Event(EventId, Vec<Term>, Box<Process>),
}

impl Process {
    pub fn par(l: Process, r: Process) -> Process {
        Process::Par(Box::new(l), Box::new(r))
    }

    /// Right-nested parallel composition of any number of components.
    pub fn par_all(procs: Vec<Process>) -> Process {
        let mut it = procs.into_iter().rev();
        let last = it.next().unwrap_or(Process::Nil);
        it.fold(last, |acc, p| Process::par(p, acc))
    }

    pub fn repl(p: Process) -> Process {
        Process::Repl(0, Box::new(p))
    }

    pub fn new_name(n: NameId, p: Process) -> Process {
        Process::New(n, Box::new(p))
    }

    pub fn input(chan: Term, pat: Pattern, p: Process) -> Process {
        Process::In(chan, pat, Box::new(p))
    }

    pub fn output(chan: Term, payload: Term, p: Process) -> Process {
        Process::Out(chan, payload, Box::new(p))
    }

    pub fn let_in(pat: Pattern, rhs: Term, then: Process, otherwise: Process) -> Process {
        Process::Let(pat, rhs, Box::new(then), Box::new(otherwise))
    }

    pub fn if_eq(m: Term, n: Term, then: Process, otherwise: Process) -> Process {
        Process::If(m, n, Box::new(then), Box::new(otherwise))
    }

    pub fn event(label: EventId, args: Vec<Term>, p: Process) -> Process {
        Process::Event(label, args, Box::new(p))
    }

    /// Substitutes terms for variables throughout. Binders are never
    /// rewritten; elaboration guarantees binder ids are globally unique, so
    /// shadowing and capture cannot occur.
    pub fn subst(&self, s: &Subst) -> Process {
        if s.is_empty() {
            return self.clone();
        }
        match self {
            Process::Nil => Process::Nil,
            Process::Par(l, r) => Process::par(l.subst(s), r.subst(s)),
            Process::Repl(id, p) => Process::Repl(*id, Box::new(p.subst(s))),
            Process::New(n, p) => Process::New(*n, Box::new(p.subst(s))),
            Process::In(c, pat, p) => {
                Process::input(s.apply(c), pat.subst(s), p.subst(s))
            }
            Process::Out(c, m, p) => Process::output(s.apply(c), s.apply(m), p.subst(s)),
            Process::Let(pat, rhs, t, e) => Process::let_in(
                pat.subst(s),
                s.apply(rhs),
                t.subst(s),
                e.subst(s),
            ),
            Process::If(m, n, t, e) => {
                Process::if_eq(s.apply(m), s.apply(n), t.subst(s), e.subst(s))
            }
            Process::Event(l, args, p) => Process::event(
                *l,
                args.iter().map(|a| s.apply(a)).collect(),
                p.subst(s),
            ),
        }
    }

    /// Renames a (bound) name id into another everywhere below.
    pub fn rename_name(&self, from: NameId, to: NameId) -> Process {
        match self {
            Process::Nil => Process::Nil,
            Process::Par(l, r) => {
                Process::par(l.rename_name(from, to), r.rename_name(from, to))
            }
            Process::Repl(id, p) => Process::Repl(*id, Box::new(p.rename_name(from, to))),
            Process::New(n, p) => {
                // Binders are unique, so `from` is never re-bound below.
                debug_assert_ne!(*n, from);
                Process::New(*n, Box::new(p.rename_name(from, to)))
            }
            Process::In(c, pat, p) => Process::input(
                c.rename_name(from, to),
                pat.rename_name(from, to),
                p.rename_name(from, to),
            ),
            Process::Out(c, m, p) => Process::output(
                c.rename_name(from, to),
                m.rename_name(from, to),
                p.rename_name(from, to),
            ),
            Process::Let(pat, rhs, t, e) => Process::let_in(
                pat.rename_name(from, to),
                rhs.rename_name(from, to),
                t.rename_name(from, to),
                e.rename_name(from, to),
            ),
            Process::If(m, n, t, e) => Process::if_eq(
                m.rename_name(from, to),
                n.rename_name(from, to),
                t.rename_name(from, to),
                e.rename_name(from, to),
            ),
            Process::Event(l, args, p) => Process::event(
                *l,
                args.iter().map(|a| a.rename_name(from, to)).collect(),
                p.rename_name(from, to),
            ),
        }
    }

    /// Replaces every occurrence of a free name by an arbitrary term. Used to
    /// close role pieces over agent identities (including `choice` terms);
    /// the name must not be bound anywhere in the process.
    pub fn replace_name(&self, from: NameId, to: &Term) -> Process {
        match self {
            Process::Nil => Process::Nil,
            Process::Par(l, r) => {
                Process::par(l.replace_name(from, to), r.replace_name(from, to))
            }
            Process::Repl(id, p) => Process::Repl(*id, Box::new(p.replace_name(from, to))),
            Process::New(n, p) => {
                debug_assert_ne!(*n, from);
                Process::New(*n, Box::new(p.replace_name(from, to)))
            }
            Process::In(c, pat, p) => Process::input(
                c.replace_name(from, to),
                pat.replace_name(from, to),
                p.replace_name(from, to),
            ),
            Process::Out(c, m, p) => Process::output(
                c.replace_name(from, to),
                m.replace_name(from, to),
                p.replace_name(from, to),
            ),
            Process::Let(pat, rhs, t, e) => Process::let_in(
                pat.replace_name(from, to),
                rhs.replace_name(from, to),
                t.replace_name(from, to),
                e.replace_name(from, to),
            ),
            Process::If(m, n, t, e) => Process::if_eq(
                m.replace_name(from, to),
                n.replace_name(from, to),
                t.replace_name(from, to),
                e.replace_name(from, to),
            ),
            Process::Event(l, args, p) => Process::event(
                *l,
                args.iter().map(|a| a.replace_name(from, to)).collect(),
                p.replace_name(from, to),
            ),
        }
    }

    /// Projects a bi-process to one side, erasing all choices.
    pub fn project(&self, side: Side) -> Process {
        match self {
            Process::Nil => Process::Nil,
            Process::Par(l, r) => Process::par(l.project(side), r.project(side)),
            Process::Repl(id, p) => Process::Repl(*id, Box::new(p.project(side))),
            Process::New(n, p) => Process::New(*n, Box::new(p.project(side))),
            Process::In(c, pat, p) => {
                Process::input(c.project(side), pat.project(side), p.project(side))
            }
            Process::Out(c, m, p) => {
                Process::output(c.project(side), m.project(side), p.project(side))
            }
            Process::Let(pat, rhs, t, e) => Process::let_in(
                pat.project(side),
                rhs.project(side),
                t.project(side),
                e.project(side),
            ),
            Process::If(m, n, t, e) => Process::if_eq(
                m.project(side),
                n.project(side),
                t.project(side),
                e.project(side),
            ),
            Process::Event(l, args, p) => Process::event(
                *l,
                args.iter().map(|a| a.project(side)).collect(),
                p.project(side),
            ),
        }
    }

    pub fn has_choice(&self) -> bool {
        let mut found = false;
        self.visit_terms(&mut |t| found |= t.has_choice());
        found
    }

    /// Calls `f` on every term in the process (channels, payloads, rhs,
    /// conditions, event arguments, and pattern equality terms).
    pub fn visit_terms<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        match self {
            Process::Nil => {}
            Process::Par(l, r) => {
                l.visit_terms(f);
                r.visit_terms(f);
            }
            Process::Repl(_, p) => p.visit_terms(f),
            Process::New(_, p) => p.visit_terms(f),
            Process::In(c, pat, p) => {
                f(c);
                let mut ts = Vec::new();
                pat.terms(&mut ts);
                ts.into_iter().for_each(&mut *f);
                p.visit_terms(f);
            }
            Process::Out(c, m, p) => {
                f(c);
                f(m);
                p.visit_terms(f);
            }
            Process::Let(pat, rhs, t, e) => {
                let mut ts = Vec::new();
                pat.terms(&mut ts);
                ts.into_iter().for_each(&mut *f);
                f(rhs);
                t.visit_terms(f);
                e.visit_terms(f);
            }
            Process::If(m, n, t, e) => {
                f(m);
                f(n);
                t.visit_terms(f);
                e.visit_terms(f);
            }
            Process::Event(_, args, p) => {
                args.iter().for_each(&mut *f);
                p.visit_terms(f);
            }
        }
    }

    /// Names bound by `New` anywhere below, in traversal order.
    pub fn bound_names(&self, acc: &mut Vec<NameId>) {
        match self {
            Process::Nil => {}
            Process::Par(l, r) => {
                l.bound_names(acc);
                r.bound_names(acc);
            }
            Process::Repl(_, p) => p.bound_names(acc),
            Process::New(n, p) => {
                acc.push(*n);
                p.bound_names(acc);
            }
            Process::In(_, _, p) | Process::Out(_, _, p) | Process::Event(_, _, p) => {
                p.bound_names(acc)
            }
            Process::Let(_, _, t, e) | Process::If(_, _, t, e) => {
                t.bound_names(acc);
                e.bound_names(acc);
            }
        }
    }

    /// Names occurring in terms (free occurrences plus bound ones used below
    /// their binder).
    pub fn used_names(&self) -> Vec<NameId> {
        let mut names = Vec::new();
        self.visit_terms(&mut |t| t.names(&mut names));
        names
    }

    /// Variables bound by patterns anywhere below.
    pub fn bound_vars(&self, acc: &mut Vec<VarId>) {
        match self {
            Process::Nil => {}
            Process::Par(l, r) => {
                l.bound_vars(acc);
                r.bound_vars(acc);
            }
            Process::Repl(_, p) | Process::New(_, p) => p.bound_vars(acc),
            Process::In(_, pat, p) => {
                pat.binders(acc);
                p.bound_vars(acc);
            }
            Process::Out(_, _, p) | Process::Event(_, _, p) => p.bound_vars(acc),
            Process::Let(pat, _, t, e) => {
                pat.binders(acc);
                t.bound_vars(acc);
                e.bound_vars(acc);
            }
            Process::If(_, _, t, e) => {
                t.bound_vars(acc);
                e.bound_vars(acc);
            }
        }
    }

    /// Clones the process with every bound name and pattern variable renamed
    /// to a fresh id, so that inlined copies of one definition never share
    /// binders. Free names and free variables are left untouched.
    pub fn refresh(&self, tab: &mut Symtab) -> Process {
        fn term(t: &Term, nm: &HashMap<NameId, NameId>, vm: &HashMap<VarId, VarId>) -> Term {
            match t {
                Term::Name(n) => Term::Name(*nm.get(n).unwrap_or(n)),
                Term::Var(v) => Term::Var(*vm.get(v).unwrap_or(v)),
                Term::App(f, args) => {
                    Term::App(*f, args.iter().map(|a| term(a, nm, vm)).collect())
                }
                Term::Choice(l, r) => {
                    Term::choice(term(l, nm, vm), term(r, nm, vm))
                }
            }
        }
        fn pattern(
            p: &Pattern,
            tab: &mut Symtab,
            nm: &HashMap<NameId, NameId>,
            vm: &mut HashMap<VarId, VarId>,
        ) -> Pattern {
            match p {
                Pattern::Var(v) => {
                    let ident = tab.var_ident(*v).to_string();
                    let sort = tab.var_sort(*v);
                    let fresh = tab.fresh_var(&ident);
                    tab.set_var_sort(fresh, sort);
                    vm.insert(*v, fresh);
                    Pattern::Var(fresh)
                }
                Pattern::Eq(t) => Pattern::Eq(term(t, nm, vm)),
                Pattern::Tuple(items) => {
                    Pattern::Tuple(items.iter().map(|q| pattern(q, tab, nm, vm)).collect())
                }
            }
        }
        fn go(
            p: &Process,
            tab: &mut Symtab,
            nm: &mut HashMap<NameId, NameId>,
            vm: &mut HashMap<VarId, VarId>,
        ) -> Process {
            match p {
                Process::Nil => Process::Nil,
                Process::Par(l, r) => Process::par(go(l, tab, nm, vm), go(r, tab, nm, vm)),
                Process::Repl(id, body) => Process::Repl(*id, Box::new(go(body, tab, nm, vm))),
                Process::New(n, body) => {
                    let info = tab.name(*n);
                    let (ident, sort) = (info.ident.clone(), info.sort);
                    let fresh = tab.fresh_name(&ident, sort);
                    nm.insert(*n, fresh);
                    Process::new_name(fresh, go(body, tab, nm, vm))
                }
                Process::In(ch, pat, body) => {
                    let ch = term(ch, nm, vm);
                    let pat = pattern(pat, tab, nm, vm);
                    Process::input(ch, pat, go(body, tab, nm, vm))
                }
                Process::Out(ch, msg, body) => Process::output(
                    term(ch, nm, vm),
                    term(msg, nm, vm),
                    go(body, tab, nm, vm),
                ),
                Process::Let(pat, rhs, then, els) => {
                    let rhs = term(rhs, nm, vm);
                    let els = go(els, tab, nm, vm);
                    let pat = pattern(pat, tab, nm, vm);
                    Process::let_in(pat, rhs, go(then, tab, nm, vm), els)
                }
                Process::If(m, n, then, els) => Process::if_eq(
                    term(m, nm, vm),
                    term(n, nm, vm),
                    go(then, tab, nm, vm),
                    go(els, tab, nm, vm),
                ),
                Process::Event(label, args, body) => Process::event(
                    *label,
                    args.iter().map(|a| term(a, nm, vm)).collect(),
                    go(body, tab, nm, vm),
                ),
            }
        }
        let mut nm = HashMap::new();
        let mut vm = HashMap::new();
        go(self, tab, &mut nm, &mut vm)
    }

    /// Re-numbers every replication site in traversal order, returning the
    /// number of sites. Run once before exploration so budgets line up.
    pub fn renumber_repls(&mut self) -> u32 {
        fn walk(p: &mut Process, next: &mut u32) {
            match p {
                Process::Nil => {}
                Process::Par(l, r) => {
                    walk(l, next);
                    walk(r, next);
                }
                Process::Repl(id, body) => {
                    *id = *next;
                    *next += 1;
                    walk(body, next);
                }
                Process::New(_, body) => walk(body, next),
                Process::In(_, _, body) | Process::Out(_, _, body) => walk(body, next),
                Process::Event(_, _, body) => walk(body, next),
                Process::Let(_, _, t, e) | Process::If(_, _, t, e) => {
                    walk(t, next);
                    walk(e, next);
                }
            }
        }
        let mut next = 0;
        walk(self, &mut next);
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sig::{NameScope, Sort};

    #[test]
    fn tuple_pattern_matches_and_binds() {
        let mut tab = Symtab::new();
        let a = tab.declare_name("a", Sort::Base, NameScope::Public).unwrap();
        let b = tab.declare_name("b", Sort::Base, NameScope::Public).unwrap();
        let x = tab.fresh_var("x");
        let pair = tab.tuple(2);
        let pat = Pattern::Tuple(vec![Pattern::Eq(Term::Name(a)), Pattern::Var(x)]);
        let value = Term::app(pair, vec![Term::Name(a), Term::Name(b)]);
        let s = pat.match_value(&value, &tab).unwrap();
        assert_eq!(s.get(x), Some(&Term::Name(b)));

        let bad = Term::app(pair, vec![Term::Name(b), Term::Name(b)]);
        assert!(pat.match_value(&bad, &tab).is_none());
    }

    #[test]
    fn projection_yields_both_sides() {
        let mut tab = Symtab::new();
        let ch = tab
            .declare_name("ch", Sort::Channel, NameScope::Public)
            .unwrap();
        let a = tab.declare_name("a", Sort::Base, NameScope::Public).unwrap();
        let b = tab.declare_name("b", Sort::Base, NameScope::Public).unwrap();
        let bp = Process::output(
            Term::Name(ch),
            Term::choice(Term::Name(a), Term::Name(b)),
            Process::Nil,
        );
        assert_eq!(
            bp.project(Side::Left),
            Process::output(Term::Name(ch), Term::Name(a), Process::Nil)
        );
        assert_eq!(
            bp.project(Side::Right),
            Process::output(Term::Name(ch), Term::Name(b), Process::Nil)
        );
        assert!(bp.has_choice());
        assert!(!bp.project(Side::Left).has_choice());
    }

    #[test]
    fn substitution_reaches_all_term_positions() {
        let mut tab = Symtab::new();
        let ch = tab
            .declare_name("ch", Sort::Channel, NameScope::Public)
            .unwrap();
        let a = tab.declare_name("a", Sort::Base, NameScope::Public).unwrap();
        let x = tab.fresh_var("x");
        let y = tab.fresh_var("y");
        let p = Process::output(
            Term::Name(ch),
            Term::Var(x),
            Process::if_eq(Term::Var(x), Term::Var(y), Process::Nil, Process::Nil),
        );
        let s = Subst::singleton(x, Term::Name(a));
        let expect = Process::output(
            Term::Name(ch),
            Term::Name(a),
            Process::if_eq(Term::Name(a), Term::Var(y), Process::Nil, Process::Nil),
        );
        assert_eq!(p.subst(&s), expect);
    }

    #[test]
    fn renumber_assigns_distinct_sites() {
        let mut p = Process::par(
            Process::repl(Process::Nil),
            Process::repl(Process::repl(Process::Nil)),
        );
        let count = p.renumber_repls();
        assert_eq!(count, 3);
        let mut ids = Vec::new();
        fn collect(p: &Process, ids: &mut Vec<ReplId>) {
            match p {
                Process::Par(l, r) => {
                    collect(l, ids);
                    collect(r, ids);
                }
                Process::Repl(id, body) => {
                    ids.push(*id);
                    collect(body, ids);
                }
                _ => {}
            }
        }
        collect(&p, &mut ids);
        assert_eq!(ids, vec![0, 1, 2]);
    }
}
