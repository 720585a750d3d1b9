//! Run states and the reduction steps over them.
//!
//! A [`Configuration`] is the canonical representative of a
//! structural-equivalence class: parallel compositions are flattened into a
//! multiset, restrictions are extruded eagerly (each `new` becomes a fresh
//! name recorded as restricted in the frame), and dead branches are removed.
//! Deterministic steps — conditionals, `let` evaluation, events, outputs to
//! the attacker, replication unfolding — are flushed eagerly by
//! [`Configuration::run_silent`]; the only branch points left are internal
//! communication on private channels and attacker-chosen inputs on public
//! ones.
//!
//! Successors are first enumerated as [`Plan`]s without touching any shared
//! state; a plan is applied (and fresh names minted) only when the search
//! actually descends into it. This makes the symbol-table state a function
//! of the trace alone, so replaying a recorded trace from the same starting
//! point reproduces the run exactly, ids and all.

use crate::deduce::{input_candidates, Knowledge};
use crate::frame::Frame;
use spv_calculus::{
    EventId, NameId, NameScope, Pattern, Process, ReplId, Sort, Symtab, Term, Theory, VarId,
};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Search bounds. The defaults are wide enough for every attack the corpus
/// reproduces; individual corpus entries narrow them where exhaustive
/// verdicts are wanted quickly.
#[derive(Debug, Clone)]
pub struct Bounds {
    /// Copies spawned per replication site occurrence.
    pub sessions: u32,
    /// Maximum nesting depth of attacker recipes (atoms count 1).
    pub recipe_depth: usize,
    /// Total trace steps across the whole search before truncation.
    pub step_budget: u64,
    /// Cap on distinct candidate values offered to any one input.
    pub max_candidates: usize,
    /// Recipe depth for static-equivalence checks along bi-traces.
    pub static_depth: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            sessions: 2,
            recipe_depth: 4,
            step_budget: 1_000_000,
            max_candidates: 128,
            static_depth: 3,
        }
    }
}

/// Stable identity of one live process across steps of a run (indices shift
/// as processes fork and die; ids never do).
pub type ProcId = u32;

/// One recorded reduction step. Steps carry the process ids involved so a
/// recorded trace determines the run completely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceStep {
    /// Internal communication on a private channel.
    Comm {
        channel: NameId,
        sender: ProcId,
        receiver: ProcId,
    },
    /// A conditional or `let` resolving; `then_taken` is false for the else
    /// branch (including destructor and pattern failure).
    Branch { proc: ProcId, then_taken: bool },
    /// Attacker-chosen input on a public channel.
    Input {
        proc: ProcId,
        channel: NameId,
        recipe: Term,
    },
    /// Output observed by the attacker; the payload is in the frame under
    /// `handle`.
    Output {
        proc: ProcId,
        channel: NameId,
        handle: VarId,
    },
    Event {
        proc: ProcId,
        label: EventId,
        args: Vec<Term>,
    },
    /// One replication copy spawned at `site`.
    Unfold { site: ReplId },
}

/// An ordered record of steps from the initial configuration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
}

/// How the attacker fills one input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputSource {
    /// A recipe over the current frame.
    Recipe(Term),
    /// A constant the attacker invents at this step.
    Fresh(Sort),
}

/// A branch step the search may take next; computed without side effects
/// and applied only on descent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Plan {
    Comm { sender: ProcId, receiver: ProcId },
    Input { proc: ProcId, source: InputSource },
}

/// How a channel position behaves once the process is closed.
pub(crate) enum Chan {
    /// Known to the attacker a priori: outputs extrude, inputs branch.
    Public(NameId),
    /// Restricted: only internal communication.
    Private(NameId),
    /// Not a channel-sorted name; the process is stuck.
    Bad,
}

pub(crate) fn classify_channel(ch: &Term, tab: &Symtab, theory: &Theory) -> Chan {
    let Ok(Term::Name(n)) = theory.normalize(ch) else {
        return Chan::Bad;
    };
    let info = tab.name(n);
    if info.sort != Sort::Channel {
        return Chan::Bad;
    }
    match info.scope {
        NameScope::Public | NameScope::Attacker => Chan::Public(n),
        NameScope::Restricted => Chan::Private(n),
    }
}

/// One run state: live processes, the attacker's frame, the event history,
/// and the remaining replication budgets.
#[derive(Debug, Clone)]
pub struct Configuration {
    procs: Vec<(ProcId, Process)>,
    pub frame: Frame,
    pub events: Vec<(EventId, Vec<Term>)>,
    /// Constants the attacker has invented on this branch, usable in any
    /// later recipe.
    pub atk: Vec<Term>,
    budgets: BTreeMap<ReplId, u32>,
    next_proc: ProcId,
    next_repl: ReplId,
}

impl Configuration {
    /// Builds the starting state for `main` and flushes its deterministic
    /// prefix, returning the steps that prefix produced.
    pub fn initial(
        main: &Process,
        bounds: &Bounds,
        tab: &mut Symtab,
        theory: &Theory,
    ) -> (Configuration, Vec<TraceStep>) {
        let mut root = main.clone();
        let sites = root.renumber_repls();
        let mut cfg = Configuration {
            procs: vec![(0, root)],
            frame: Frame::new(),
            events: Vec::new(),
            atk: Vec::new(),
            budgets: (0..sites).map(|s| (s, bounds.sessions)).collect(),
            next_proc: 1,
            next_repl: sites,
        };
        let mut steps = Vec::new();
        cfg.run_silent(bounds, tab, theory, &mut steps);
        (cfg, steps)
    }

    pub fn procs(&self) -> &[(ProcId, Process)] {
        &self.procs
    }

    fn index_of(&self, pid: ProcId) -> usize {
        self.procs
            .iter()
            .position(|(id, _)| *id == pid)
            .expect("plans are applied to the configuration that produced them")
    }

    /// Gives every replication site in a freshly-unfolded copy its own id
    /// and budget, so sessions of one copy never starve another's.
    fn alloc_repl_sites(&mut self, p: &mut Process, sessions: u32) {
        match p {
            Process::Nil => {}
            Process::Repl(id, body) => {
                *id = self.next_repl;
                self.budgets.insert(self.next_repl, sessions);
                self.next_repl += 1;
                self.alloc_repl_sites(body, sessions);
            }
            Process::Par(l, r) => {
                self.alloc_repl_sites(l, sessions);
                self.alloc_repl_sites(r, sessions);
            }
            Process::New(_, body)
            | Process::In(_, _, body)
            | Process::Out(_, _, body)
            | Process::Event(_, _, body) => self.alloc_repl_sites(body, sessions),
            Process::Let(_, _, t, e) | Process::If(_, _, t, e) => {
                self.alloc_repl_sites(t, sessions);
                self.alloc_repl_sites(e, sessions);
            }
        }
    }

    /// Flushes every deterministic step: structural cleanup silently, and
    /// branch resolutions, events, public outputs, and unfoldings into
    /// `steps`. Afterwards every live process is blocked on an input or on
    /// private-channel communication.
    pub fn run_silent(
        &mut self,
        bounds: &Bounds,
        tab: &mut Symtab,
        theory: &Theory,
        steps: &mut Vec<TraceStep>,
    ) {
        let mut i = 0;
        while i < self.procs.len() {
            let pid = self.procs[i].0;
            match self.procs[i].1.clone() {
                Process::Nil => {
                    self.procs.remove(i);
                }
                Process::Par(l, r) => {
                    self.procs[i].1 = *l;
                    let id = self.next_proc;
                    self.next_proc += 1;
                    self.procs.push((id, *r));
                }
                Process::New(n, body) => {
                    let info = tab.name(n);
                    let (ident, sort) = (info.ident.clone(), info.sort);
                    let fresh = tab.fresh_name(&ident, sort);
                    self.frame.restrict(fresh);
                    self.procs[i].1 = body.rename_name(n, fresh);
                }
                Process::Repl(site, body) => {
                    let copies = self.budgets.remove(&site).unwrap_or(0);
                    for _ in 0..copies {
                        let mut copy = body.refresh(tab);
                        self.alloc_repl_sites(&mut copy, bounds.sessions);
                        let id = self.next_proc;
                        self.next_proc += 1;
                        self.procs.push((id, copy));
                        steps.push(TraceStep::Unfold { site });
                    }
                    self.procs.remove(i);
                }
                Process::If(m, n, then, els) => {
                    let taken = match (theory.normalize(&m), theory.normalize(&n)) {
                        (Ok(a), Ok(b)) => a == b,
                        _ => false,
                    };
                    self.procs[i].1 = if taken { *then } else { *els };
                    steps.push(TraceStep::Branch {
                        proc: pid,
                        then_taken: taken,
                    });
                }
                Process::Let(pat, rhs, then, els) => {
                    let outcome = theory
                        .normalize(&rhs)
                        .ok()
                        .filter(|v| !theory.is_stuck(v, tab))
                        .and_then(|v| pat.match_value(&v, tab));
                    self.procs[i].1 = match &outcome {
                        Some(binds) => then.subst(binds),
                        None => *els,
                    };
                    steps.push(TraceStep::Branch {
                        proc: pid,
                        then_taken: outcome.is_some(),
                    });
                }
                Process::Event(label, args, body) => {
                    let args: Vec<Term> = args
                        .iter()
                        .map(|a| theory.normalize(a).unwrap_or_else(|_| a.clone()))
                        .collect();
                    self.events.push((label, args.clone()));
                    self.procs[i].1 = *body;
                    steps.push(TraceStep::Event {
                        proc: pid,
                        label,
                        args,
                    });
                }
                Process::Out(ch, payload, body) => match classify_channel(&ch, tab, theory) {
                    Chan::Public(c) => {
                        match theory.normalize(&payload) {
                            Ok(v) if !theory.is_stuck(&v, tab) => {
                                let handle = self.frame.extend(v, tab);
                                self.procs[i].1 = *body;
                                steps.push(TraceStep::Output {
                                    proc: pid,
                                    channel: c,
                                    handle,
                                });
                            }
                            // Evaluation failure in an output blocks forever.
                            _ => {
                                self.procs.remove(i);
                            }
                        }
                    }
                    Chan::Private(_) => i += 1,
                    Chan::Bad => {
                        self.procs.remove(i);
                    }
                },
                Process::In(ch, _, _) => match classify_channel(&ch, tab, theory) {
                    Chan::Public(_) | Chan::Private(_) => i += 1,
                    Chan::Bad => {
                        self.procs.remove(i);
                    }
                },
            }
        }
    }

    /// Enumerates the branch steps available here, without side effects.
    /// Communications come first, then per-process input candidates smallest
    /// recipe first, then one invented constant per input.
    pub fn successor_plans(&self, bounds: &Bounds, tab: &Symtab, theory: &Theory) -> Vec<Plan> {
        let mut plans = Vec::new();

        for (spid, p) in &self.procs {
            let Process::Out(ch, payload, _) = p else {
                continue;
            };
            let Chan::Private(c) = classify_channel(ch, tab, theory) else {
                continue;
            };
            // A sender whose payload cannot evaluate is permanently stuck.
            if !matches!(theory.normalize(payload), Ok(v) if !theory.is_stuck(&v, tab)) {
                continue;
            }
            for (rpid, q) in &self.procs {
                if rpid == spid {
                    continue;
                }
                let Process::In(ch2, _, _) = q else {
                    continue;
                };
                if matches!(classify_channel(ch2, tab, theory), Chan::Private(c2) if c2 == c) {
                    plans.push(Plan::Comm {
                        sender: *spid,
                        receiver: *rpid,
                    });
                }
            }
        }

        let open_inputs: Vec<(ProcId, &Pattern)> = self
            .procs
            .iter()
            .filter_map(|(pid, p)| match p {
                Process::In(ch, pat, _)
                    if matches!(classify_channel(ch, tab, theory), Chan::Public(_)) =>
                {
                    Some((*pid, pat))
                }
                _ => None,
            })
            .collect();
        if !open_inputs.is_empty() {
            let sub = self.frame.as_subst();
            let knowledge = Knowledge::saturate_with(&self.frame, tab, theory, &self.atk);
            let mut values: BTreeSet<Term> = BTreeSet::new();
            let mut offered: Vec<(Term, Term)> = Vec::new();
            for recipe in input_candidates(&knowledge, bounds.recipe_depth, tab, theory) {
                if offered.len() >= bounds.max_candidates {
                    break;
                }
                let Ok(value) = theory.normalize(&sub.apply(&recipe)) else {
                    continue;
                };
                // The attacker sends messages, not stuck evaluations.
                if theory.is_stuck(&value, tab) || !values.insert(value.clone()) {
                    continue;
                }
                offered.push((value, recipe));
            }
            for (pid, pat) in open_inputs {
                for (value, recipe) in &offered {
                    if pat.match_value(value, tab).is_some() {
                        plans.push(Plan::Input {
                            proc: pid,
                            source: InputSource::Recipe(recipe.clone()),
                        });
                    }
                }
                // An invented constant is an atom, so it can only ever match
                // a bare-variable pattern.
                if let Pattern::Var(v) = pat {
                    plans.push(Plan::Input {
                        proc: pid,
                        source: InputSource::Fresh(tab.var_sort(*v)),
                    });
                }
            }
        }

        plans
    }

    /// Takes the branch step `plan` and flushes its deterministic
    /// consequences, returning everything recorded.
    pub fn apply(
        &mut self,
        plan: &Plan,
        bounds: &Bounds,
        tab: &mut Symtab,
        theory: &Theory,
    ) -> Vec<TraceStep> {
        let mut steps = Vec::new();
        match plan {
            Plan::Comm { sender, receiver } => {
                let si = self.index_of(*sender);
                let ri = self.index_of(*receiver);
                let Process::Out(ch, payload, cont) = self.procs[si].1.clone() else {
                    unreachable!("comm plans point at an output");
                };
                let Process::In(_, pat, body) = self.procs[ri].1.clone() else {
                    unreachable!("comm plans point at an input");
                };
                let Chan::Private(c) = classify_channel(&ch, tab, theory) else {
                    unreachable!("comm plans use private channels");
                };
                let value = theory
                    .normalize(&payload)
                    .expect("plan enumeration checked the payload");
                self.procs[si].1 = *cont;
                // A mismatching pattern consumes the message and kills the
                // receiver: `in` with a shaped pattern is an input followed
                // by a check.
                self.procs[ri].1 = match pat.match_value(&value, tab) {
                    Some(binds) => body.subst(&binds),
                    None => Process::Nil,
                };
                steps.push(TraceStep::Comm {
                    channel: c,
                    sender: *sender,
                    receiver: *receiver,
                });
            }
            Plan::Input { proc, source } => {
                let i = self.index_of(*proc);
                let Process::In(ch, pat, body) = self.procs[i].1.clone() else {
                    unreachable!("input plans point at an input");
                };
                let Chan::Public(c) = classify_channel(&ch, tab, theory) else {
                    unreachable!("input plans use public channels");
                };
                let recipe = match source {
                    InputSource::Recipe(r) => r.clone(),
                    InputSource::Fresh(sort) => {
                        let n = tab.fresh_attacker_const(*sort);
                        self.atk.push(Term::Name(n));
                        Term::Name(n)
                    }
                };
                let value = theory
                    .normalize(&self.frame.as_subst().apply(&recipe))
                    .expect("plan enumeration evaluated the candidate");
                let binds = pat
                    .match_value(&value, tab)
                    .expect("plan enumeration matched the pattern");
                self.procs[i].1 = body.subst(&binds);
                steps.push(TraceStep::Input {
                    proc: *proc,
                    channel: c,
                    recipe,
                });
            }
        }
        self.run_silent(bounds, tab, theory, &mut steps);
        steps
    }

    /// A serialization invariant under renaming of runtime-fresh names,
    /// handle variables, pattern variables, replication sites, and process
    /// ids — α-equivalent configurations reached on different branches get
    /// the same key, so the search visits each class once.
    pub fn canonical_key(&self, tab: &Symtab) -> String {
        // Each process is first serialized alone to give the multiset a
        // canonical order, then everything is serialized again through one
        // shared renaming built in that order.
        let mut sorted: Vec<&Process> = self.procs.iter().map(|(_, p)| p).collect();
        sorted.sort_by_cached_key(|p| {
            let mut local = Renamer::new(tab, &self.budgets);
            local.process(p)
        });

        let mut global = Renamer::new(tab, &self.budgets);
        let mut key = String::from("F[");
        for (_, value) in self.frame.entries() {
            global.term(value, &mut key);
            key.push(';');
        }
        key.push_str("]E[");
        for (label, args) in &self.events {
            key.push_str(&format!("e{label}("));
            for a in args {
                global.term(a, &mut key);
                key.push(',');
            }
            key.push(')');
        }
        key.push_str("]P[");
        for p in sorted {
            key.push_str(&global.process(p));
            key.push('|');
        }
        key.push(']');
        key
    }
}

/// Incremental first-occurrence renaming used by [`Configuration::canonical_key`].
pub(crate) struct Renamer<'a> {
    tab: &'a Symtab,
    budgets: &'a BTreeMap<ReplId, u32>,
    names: HashMap<NameId, usize>,
    vars: HashMap<VarId, usize>,
    repls: HashMap<ReplId, usize>,
}

impl<'a> Renamer<'a> {
    pub(crate) fn new(tab: &'a Symtab, budgets: &'a BTreeMap<ReplId, u32>) -> Self {
        Renamer {
            tab,
            budgets,
            names: HashMap::new(),
            vars: HashMap::new(),
            repls: HashMap::new(),
        }
    }

    fn name(&mut self, n: NameId, out: &mut String) {
        // Declared public names are part of the protocol's vocabulary and
        // stay themselves; everything runtime-fresh is positional.
        if self.tab.name(n).scope == NameScope::Public {
            out.push_str(&format!("N{n}"));
        } else {
            let next = self.names.len();
            let slot = *self.names.entry(n).or_insert(next);
            out.push_str(&format!("r{slot}"));
        }
    }

    fn var(&mut self, v: VarId, out: &mut String) {
        let next = self.vars.len();
        let slot = *self.vars.entry(v).or_insert(next);
        out.push_str(&format!("x{slot}"));
    }

    pub(crate) fn term(&mut self, t: &Term, out: &mut String) {
        match t {
            Term::Name(n) => self.name(*n, out),
            Term::Var(v) => self.var(*v, out),
            Term::App(f, args) => {
                out.push_str(&format!("f{f}("));
                for a in args {
                    self.term(a, out);
                    out.push(',');
                }
                out.push(')');
            }
            Term::Choice(l, r) => {
                out.push_str("c[");
                self.term(l, out);
                out.push(',');
                self.term(r, out);
                out.push(']');
            }
        }
    }

    fn pattern(&mut self, p: &Pattern, out: &mut String) {
        match p {
            Pattern::Var(v) => {
                out.push('?');
                self.var(*v, out);
            }
            Pattern::Eq(t) => {
                out.push('=');
                self.term(t, out);
            }
            Pattern::Tuple(ps) => {
                out.push('(');
                for q in ps {
                    self.pattern(q, out);
                    out.push(',');
                }
                out.push(')');
            }
        }
    }

    pub(crate) fn process(&mut self, p: &Process) -> String {
        let mut out = String::new();
        self.proc_into(p, &mut out);
        out
    }

    fn proc_into(&mut self, p: &Process, out: &mut String) {
        match p {
            Process::Nil => out.push('0'),
            Process::Par(l, r) => {
                out.push('(');
                self.proc_into(l, out);
                out.push('|');
                self.proc_into(r, out);
                out.push(')');
            }
            Process::Repl(id, body) => {
                let next = self.repls.len();
                let slot = *self.repls.entry(*id).or_insert(next);
                let budget = self.budgets.get(id).copied().unwrap_or(0);
                out.push_str(&format!("!{slot}:{budget}("));
                self.proc_into(body, out);
                out.push(')');
            }
            Process::New(n, body) => {
                out.push('v');
                self.name(*n, out);
                out.push('.');
                self.proc_into(body, out);
            }
            Process::In(ch, pat, body) => {
                out.push_str("i(");
                self.term(ch, out);
                out.push(',');
                self.pattern(pat, out);
                out.push_str(").");
                self.proc_into(body, out);
            }
            Process::Out(ch, m, body) => {
                out.push_str("o(");
                self.term(ch, out);
                out.push(',');
                self.term(m, out);
                out.push_str(").");
                self.proc_into(body, out);
            }
            Process::Let(pat, rhs, t, e) => {
                out.push_str("l(");
                self.pattern(pat, out);
                out.push('=');
                self.term(rhs, out);
                out.push(')');
                self.proc_into(t, out);
                out.push('~');
                self.proc_into(e, out);
            }
            Process::If(m, n, t, e) => {
                out.push_str("?(");
                self.term(m, out);
                out.push('=');
                self.term(n, out);
                out.push(')');
                self.proc_into(t, out);
                out.push('~');
                self.proc_into(e, out);
            }
            Process::Event(label, args, body) => {
                out.push_str(&format!("e{label}("));
                for a in args {
                    self.term(a, out);
                    out.push(',');
                }
                out.push_str(").");
                self.proc_into(body, out);
            }
        }
    }
}

/// Re-runs a recorded trace from scratch. The symbol table must be in the
/// same state as when the trace was produced (clone it before searching);
/// every branch step is re-applied by process id and the regenerated steps
/// must agree with the record, so a successful replay certifies both the
/// recipes and the determinism of the run.
pub fn replay(
    main: &Process,
    trace: &Trace,
    bounds: &Bounds,
    tab: &mut Symtab,
    theory: &Theory,
) -> Option<Configuration> {
    let (mut cfg, mut produced) = Configuration::initial(main, bounds, tab, theory);
    let mut at = 0;
    loop {
        if trace.steps[at..].len() < produced.len() || trace.steps[at..at + produced.len()] != produced[..] {
            return None;
        }
        at += produced.len();
        let Some(next) = trace.steps.get(at) else {
            return Some(cfg);
        };
        let plan = match next {
            TraceStep::Comm {
                sender, receiver, ..
            } => Plan::Comm {
                sender: *sender,
                receiver: *receiver,
            },
            TraceStep::Input { proc, recipe, .. } => {
                // A recipe naming a constant the table has not minted yet is
                // the record of an invented constant; re-mint it with the
                // sort the receiving pattern asks for, exactly as the
                // original enumeration did.
                let source = match recipe {
                    Term::Name(n) if is_future_name(*n, tab) => {
                        let (_, p) = &cfg.procs[cfg.index_of(*proc)];
                        let Process::In(_, Pattern::Var(v), _) = p else {
                            return None;
                        };
                        InputSource::Fresh(tab.var_sort(*v))
                    }
                    _ => InputSource::Recipe(recipe.clone()),
                };
                Plan::Input {
                    proc: *proc,
                    source,
                }
            }
            _ => return None,
        };
        produced = cfg.apply(&plan, bounds, tab, theory);
    }
}

fn is_future_name(n: NameId, tab: &Symtab) -> bool {
    tab.names().all(|(id, _)| id != n)
}

/// Evaluates a recipe against a configuration's frame.
pub fn eval_recipe(cfg: &Configuration, recipe: &Term, theory: &Theory) -> Option<Term> {
    theory.normalize(&cfg.frame.as_subst().apply(recipe)).ok()
}
