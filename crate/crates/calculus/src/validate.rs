//! Well-formedness checks for processes and protocol compositions.

use crate::process::{Pattern, Process};
use crate::sig::{NameId, NameScope, Sort, Symtab, VarId};
use crate::term::Term;
use std::collections::HashSet;
use std::fmt;

/// A single well-formedness violation. Diagnostics are values, not errors:
/// callers decide whether to abort.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    /// An identifier occurs both bound and free, or is bound twice.
    Canonicity,
    /// A channel position holds something other than a channel-sorted name
    /// or channel-sorted variable.
    ChannelSort,
    /// A restricted channel name is sent as a payload.
    PrivateChannelLeak,
    /// Event applied to the wrong number of arguments.
    EventArity,
    /// A variable is used before any pattern binds it.
    UnboundVariable,
    /// A protocol role has parallel structure inside its init segment.
    InitNotSequential,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.detail)
    }
}

/// Checks canonicity (no id both bound and free, no double binding), channel
/// sorting/groundness, private-channel leakage, and event arities. Returns
/// all violations found; empty means well-formed.
pub fn validate_well_formed(p: &Process, tab: &Symtab) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    // Canonicity over names: a New-bound name must not be bound twice and
    // must not occur outside its binder's scope.
    let mut bound = Vec::new();
    p.bound_names(&mut bound);
    let mut seen = HashSet::new();
    for n in &bound {
        if !seen.insert(*n) {
            out.push(Diagnostic {
                kind: DiagnosticKind::Canonicity,
                detail: format!("name {} bound more than once", tab.name_display(*n)),
            });
        }
    }
    scope_check_names(p, &mut HashSet::new(), &seen, tab, &mut out);

    // Canonicity over variables: each bound once, and no use before binding.
    let mut bvars = Vec::new();
    p.bound_vars(&mut bvars);
    let mut vseen = HashSet::new();
    for v in &bvars {
        if !vseen.insert(*v) {
            out.push(Diagnostic {
                kind: DiagnosticKind::Canonicity,
                detail: format!("variable {} bound more than once", tab.var_ident(*v)),
            });
        }
    }
    scope_check_vars(p, &mut HashSet::new(), tab, &mut out);

    structure_check(p, tab, &mut out);
    out
}

/// `validate_well_formed` plus the protocol-shape requirement that every
/// role's init segment (the prefix before its first replication) is purely
/// sequential. Intended for full protocol compositions, not query contexts.
pub fn validate_protocol(p: &Process, tab: &Symtab) -> Vec<Diagnostic> {
    let mut out = validate_well_formed(p, tab);

    // Strip the global init spine, then examine each parallel component.
    let mut cur = p;
    loop {
        match cur {
            Process::New(_, q) | Process::Out(_, _, q) | Process::In(_, _, q) => cur = q,
            Process::Let(_, _, t, e) | Process::If(_, _, t, e) if matches!(**e, Process::Nil) => {
                cur = t;
            }
            _ => break,
        }
    }
    let mut components = Vec::new();
    flatten_par(cur, &mut components);
    for comp in components {
        check_init_sequential(comp, &mut out);
    }
    out
}

fn flatten_par<'a>(p: &'a Process, acc: &mut Vec<&'a Process>) {
    match p {
        Process::Par(l, r) => {
            flatten_par(l, acc);
            flatten_par(r, acc);
        }
        other => acc.push(other),
    }
}

fn check_init_sequential(role: &Process, out: &mut Vec<Diagnostic>) {
    // Walk the role's spine; a Par before the first Repl breaks the
    // `init_i . !P_i` shape of well-formed protocols.
    let mut cur = role;
    loop {
        match cur {
            Process::Repl(_, _) | Process::Nil => return,
            Process::New(_, q)
            | Process::In(_, _, q)
            | Process::Out(_, _, q)
            | Process::Event(_, _, q) => cur = q,
            Process::Let(_, _, t, _) | Process::If(_, _, t, _) => cur = t,
            Process::Par(_, _) => {
                out.push(Diagnostic {
                    kind: DiagnosticKind::InitNotSequential,
                    detail: "role init segment contains parallel composition".to_string(),
                });
                return;
            }
        }
    }
}

fn scope_check_names(
    p: &Process,
    in_scope: &mut HashSet<NameId>,
    all_bound: &HashSet<NameId>,
    tab: &Symtab,
    out: &mut Vec<Diagnostic>,
) {
    let check_term = |t: &Term, in_scope: &HashSet<NameId>, out: &mut Vec<Diagnostic>| {
        let mut names = Vec::new();
        t.names(&mut names);
        for n in names {
            if all_bound.contains(&n) && !in_scope.contains(&n) {
                out.push(Diagnostic {
                    kind: DiagnosticKind::Canonicity,
                    detail: format!(
                        "name {} occurs outside the scope of its binder",
                        tab.name_display(n)
                    ),
                });
            }
        }
    };
    match p {
        Process::Nil => {}
        Process::Par(l, r) => {
            scope_check_names(l, in_scope, all_bound, tab, out);
            scope_check_names(r, in_scope, all_bound, tab, out);
        }
        Process::Repl(_, q) => scope_check_names(q, in_scope, all_bound, tab, out),
        Process::New(n, q) => {
            in_scope.insert(*n);
            scope_check_names(q, in_scope, all_bound, tab, out);
            in_scope.remove(n);
        }
        Process::In(c, pat, q) => {
            check_term(c, in_scope, out);
            let mut ts = Vec::new();
            pat.terms(&mut ts);
            ts.iter().for_each(|t| check_term(t, in_scope, out));
            scope_check_names(q, in_scope, all_bound, tab, out);
        }
        Process::Out(c, m, q) => {
            check_term(c, in_scope, out);
            check_term(m, in_scope, out);
            scope_check_names(q, in_scope, all_bound, tab, out);
        }
        Process::Let(pat, rhs, t, e) => {
            let mut ts = Vec::new();
            pat.terms(&mut ts);
            ts.iter().for_each(|t| check_term(t, in_scope, out));
            check_term(rhs, in_scope, out);
            scope_check_names(t, in_scope, all_bound, tab, out);
            scope_check_names(e, in_scope, all_bound, tab, out);
        }
        Process::If(m, n, t, e) => {
            check_term(m, in_scope, out);
            check_term(n, in_scope, out);
            scope_check_names(t, in_scope, all_bound, tab, out);
            scope_check_names(e, in_scope, all_bound, tab, out);
        }
        Process::Event(_, args, q) => {
            args.iter().for_each(|a| check_term(a, in_scope, out));
            scope_check_names(q, in_scope, all_bound, tab, out);
        }
    }
}

fn scope_check_vars(
    p: &Process,
    in_scope: &mut HashSet<VarId>,
    tab: &Symtab,
    out: &mut Vec<Diagnostic>,
) {
    let check_term = |t: &Term, in_scope: &HashSet<VarId>, out: &mut Vec<Diagnostic>| {
        let mut vars = Vec::new();
        t.vars(&mut vars);
        for v in vars {
            if !in_scope.contains(&v) {
                out.push(Diagnostic {
                    kind: DiagnosticKind::UnboundVariable,
                    detail: format!("variable {} used before binding", tab.var_ident(v)),
                });
            }
        }
    };
    let enter_pattern = |pat: &Pattern,
                         in_scope: &mut HashSet<VarId>,
                         out: &mut Vec<Diagnostic>| {
        let mut ts = Vec::new();
        pat.terms(&mut ts);
        ts.iter().for_each(|t| check_term(t, in_scope, out));
        let mut bs = Vec::new();
        pat.binders(&mut bs);
        for b in bs {
            in_scope.insert(b);
        }
    };
    match p {
        Process::Nil => {}
        Process::Par(l, r) => {
            scope_check_vars(l, &mut in_scope.clone(), tab, out);
            scope_check_vars(r, &mut in_scope.clone(), tab, out);
        }
        Process::Repl(_, q) | Process::New(_, q) => scope_check_vars(q, in_scope, tab, out),
        Process::In(c, pat, q) => {
            check_term(c, in_scope, out);
            let mut scope = in_scope.clone();
            enter_pattern(pat, &mut scope, out);
            scope_check_vars(q, &mut scope, tab, out);
        }
        Process::Out(c, m, q) => {
            check_term(c, in_scope, out);
            check_term(m, in_scope, out);
            scope_check_vars(q, in_scope, tab, out);
        }
        Process::Let(pat, rhs, t, e) => {
            check_term(rhs, in_scope, out);
            let mut scope = in_scope.clone();
            enter_pattern(pat, &mut scope, out);
            scope_check_vars(t, &mut scope, tab, out);
            scope_check_vars(e, &mut in_scope.clone(), tab, out);
        }
        Process::If(m, n, t, e) => {
            check_term(m, in_scope, out);
            check_term(n, in_scope, out);
            scope_check_vars(t, &mut in_scope.clone(), tab, out);
            scope_check_vars(e, &mut in_scope.clone(), tab, out);
        }
        Process::Event(_, args, q) => {
            args.iter().for_each(|a| check_term(a, in_scope, out));
            scope_check_vars(q, in_scope, tab, out);
        }
    }
}

fn structure_check(p: &Process, tab: &Symtab, out: &mut Vec<Diagnostic>) {
    let channel_ok = |t: &Term| match t {
        Term::Name(n) => tab.name(*n).sort == Sort::Channel,
        Term::Var(v) => tab.var_sort(*v) == Sort::Channel,
        _ => false,
    };
    let leaks_private_channel = |t: &Term| {
        let mut names = Vec::new();
        t.names(&mut names);
        names.into_iter().any(|n| {
            let info = tab.name(n);
            info.sort == Sort::Channel && info.scope == NameScope::Restricted
        })
    };
    match p {
        Process::Nil => {}
        Process::Par(l, r) => {
            structure_check(l, tab, out);
            structure_check(r, tab, out);
        }
        Process::Repl(_, q) | Process::New(_, q) => structure_check(q, tab, out),
        Process::In(c, _, q) => {
            if !channel_ok(c) {
                out.push(Diagnostic {
                    kind: DiagnosticKind::ChannelSort,
                    detail: "input channel is not a channel-sorted name or variable".into(),
                });
            }
            structure_check(q, tab, out);
        }
        Process::Out(c, m, q) => {
            if !channel_ok(c) {
                out.push(Diagnostic {
                    kind: DiagnosticKind::ChannelSort,
                    detail: "output channel is not a channel-sorted name or variable".into(),
                });
            }
            if leaks_private_channel(m) {
                out.push(Diagnostic {
                    kind: DiagnosticKind::PrivateChannelLeak,
                    detail: "payload contains a private channel name".into(),
                });
            }
            structure_check(q, tab, out);
        }
        Process::Let(_, _, t, e) | Process::If(_, _, t, e) => {
            structure_check(t, tab, out);
            structure_check(e, tab, out);
        }
        Process::Event(l, args, q) => {
            if tab.event(*l).arity != args.len() {
                out.push(Diagnostic {
                    kind: DiagnosticKind::EventArity,
                    detail: format!(
                        "event {} expects {} arguments, got {}",
                        tab.event(*l).ident,
                        tab.event(*l).arity,
                        args.len()
                    ),
                });
            }
            structure_check(q, tab, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_and_free_name_flagged() {
        let mut tab = Symtab::new();
        let ch = tab
            .declare_name("ch", Sort::Channel, NameScope::Public)
            .unwrap();
        let n = tab.fresh_name("n", Sort::Base);
        // out(ch, n) . new n . 0 — n occurs before its binder.
        let p = Process::output(
            Term::Name(ch),
            Term::Name(n),
            Process::new_name(n, Process::Nil),
        );
        let ds = validate_well_formed(&p, &tab);
        assert!(ds.iter().any(|d| d.kind == DiagnosticKind::Canonicity));
    }

    #[test]
    fn private_channel_payload_flagged() {
        let mut tab = Symtab::new();
        let ch = tab
            .declare_name("ch", Sort::Channel, NameScope::Public)
            .unwrap();
        let secret = tab.fresh_name("priv_ch", Sort::Channel);
        let p = Process::new_name(
            secret,
            Process::output(Term::Name(ch), Term::Name(secret), Process::Nil),
        );
        let ds = validate_well_formed(&p, &tab);
        assert!(ds
            .iter()
            .any(|d| d.kind == DiagnosticKind::PrivateChannelLeak));
    }

    #[test]
    fn sequential_role_accepted_parallel_init_flagged() {
        let mut tab = Symtab::new();
        let ch = tab
            .declare_name("ch", Sort::Channel, NameScope::Public)
            .unwrap();
        let a = tab.declare_name("a", Sort::Base, NameScope::Public).unwrap();
        let good = Process::output(
            Term::Name(ch),
            Term::Name(a),
            Process::repl(Process::Nil),
        );
        assert!(validate_protocol(&good, &tab).is_empty());

        // A composition whose first role splits in parallel mid-init.
        let bad_role = Process::output(
            Term::Name(ch),
            Term::Name(a),
            Process::par(
                Process::output(Term::Name(ch), Term::Name(a), Process::Nil),
                Process::Nil,
            ),
        );
        let main = Process::par(bad_role, Process::repl(Process::Nil));
        let ds = validate_protocol(&main, &tab);
        assert!(ds
            .iter()
            .any(|d| d.kind == DiagnosticKind::InitNotSequential));
    }

    #[test]
    fn event_arity_checked() {
        let mut tab = Symtab::new();
        let ev = tab.declare_event("EndDr", 2).unwrap();
        let a = tab.declare_name("a", Sort::Base, NameScope::Public).unwrap();
        let p = Process::event(ev, vec![Term::Name(a)], Process::Nil);
        let ds = validate_well_formed(&p, &tab);
        assert!(ds.iter().any(|d| d.kind == DiagnosticKind::EventArity));
    }
}
