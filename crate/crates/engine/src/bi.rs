//! Lockstep execution of bi-processes for bounded diff-equivalence.
//!
//! A bi-process is an ordinary process whose terms may carry `choice[l, r]`.
//! Both projections run under one shared control flow and one shared
//! attacker: every step is taken by both sides at once, with the same plan.
//! Each point where the sides would come apart is a *divergence* — a
//! conditional resolving differently, a destructor succeeding on one side
//! only, an output or channel one side cannot realize, or frames an equality
//! test can tell apart — and a reachable divergence refutes equivalence.

use crate::config::{
    classify_channel, Bounds, Chan, InputSource, Plan, ProcId, Renamer, Trace, TraceStep,
};
use crate::deduce::{input_candidates, statically_equivalent_with, Knowledge, StaticVerdict};
use crate::explore::SearchStats;
use crate::frame::Frame;
use spv_calculus::{
    EventId, Pattern, Process, ReplId, Side, Subst, Symtab, Term, Theory,
};
use std::collections::{BTreeMap, BTreeSet, HashSet};

/// An observable point where the two projections come apart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Divergence {
    /// A conditional took the then-branch on one side and the else-branch on
    /// the other.
    Conditional { proc: ProcId },
    /// A destructor application or pattern succeeded on exactly one side.
    Destructor { proc: ProcId },
    /// The two sides disagree on a channel: different names, or a usable
    /// channel on one side only.
    Channel { proc: ProcId },
    /// A message one side can produce and the other cannot.
    Output { proc: ProcId },
    /// The frames are no longer statically equivalent: the two recipes
    /// evaluate to equal values on one side and different values on the
    /// other.
    Frame { witness: (Term, Term) },
}

/// One lockstep run state: shared processes, one frame per side (their
/// entries pair up index by index under shared handles), and the shared
/// event history with per-side arguments folded into `choice`.
#[derive(Debug, Clone)]
pub struct BiConfiguration {
    procs: Vec<(ProcId, Process)>,
    pub left: Frame,
    pub right: Frame,
    pub events: Vec<(EventId, Vec<Term>)>,
    pub atk: Vec<Term>,
    budgets: BTreeMap<ReplId, u32>,
    next_proc: ProcId,
    next_repl: ReplId,
}

impl BiConfiguration {
    /// Builds the starting state and flushes the deterministic prefix, which
    /// may already diverge.
    pub fn initial(
        main: &Process,
        bounds: &Bounds,
        tab: &mut Symtab,
        theory: &Theory,
    ) -> (BiConfiguration, Vec<TraceStep>, Option<Divergence>) {
        let mut root = main.clone();
        let sites = root.renumber_repls();
        let mut cfg = BiConfiguration {
            procs: vec![(0, root)],
            left: Frame::new(),
            right: Frame::new(),
            events: Vec::new(),
            atk: Vec::new(),
            budgets: (0..sites).map(|s| (s, bounds.sessions)).collect(),
            next_proc: 1,
            next_repl: sites,
        };
        let mut steps = Vec::new();
        let divergence = cfg.run_silent(bounds, tab, theory, &mut steps).err();
        (cfg, steps, divergence)
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

    /// Flushes every deterministic step on both sides at once, stopping at
    /// the first divergence. On success every live process is blocked on an
    /// input or on private-channel communication.
    pub fn run_silent(
        &mut self,
        bounds: &Bounds,
        tab: &mut Symtab,
        theory: &Theory,
        steps: &mut Vec<TraceStep>,
    ) -> Result<(), Divergence> {
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
                    self.left.restrict(fresh);
                    self.right.restrict(fresh);
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
                    let holds = |side| {
                        match (
                            theory.normalize(&m.project(side)),
                            theory.normalize(&n.project(side)),
                        ) {
                            (Ok(a), Ok(b)) => a == b,
                            _ => false,
                        }
                    };
                    let taken = holds(Side::Left);
                    if taken != holds(Side::Right) {
                        return Err(Divergence::Conditional { proc: pid });
                    }
                    self.procs[i].1 = if taken { *then } else { *els };
                    steps.push(TraceStep::Branch {
                        proc: pid,
                        then_taken: taken,
                    });
                }
                Process::Let(pat, rhs, then, els) => {
                    let attempt = |side| -> Option<Subst> {
                        let v = theory
                            .normalize(&rhs.project(side))
                            .ok()
                            .filter(|v| !theory.is_stuck(v, tab))?;
                        pat.project(side).match_value(&v, tab)
                    };
                    let (next, taken) = match (attempt(Side::Left), attempt(Side::Right)) {
                        (Some(bl), Some(br)) => (then.subst(&merge_sides(&bl, &br)), true),
                        (None, None) => (*els, false),
                        _ => return Err(Divergence::Destructor { proc: pid }),
                    };
                    self.procs[i].1 = next;
                    steps.push(TraceStep::Branch {
                        proc: pid,
                        then_taken: taken,
                    });
                }
                Process::Event(label, args, body) => {
                    let args: Vec<Term> = args
                        .iter()
                        .map(|a| {
                            let eval = |side| {
                                let projected = a.project(side);
                                theory.normalize(&projected).unwrap_or(projected)
                            };
                            fold_sides(eval(Side::Left), eval(Side::Right))
                        })
                        .collect();
                    self.events.push((label, args.clone()));
                    self.procs[i].1 = *body;
                    steps.push(TraceStep::Event {
                        proc: pid,
                        label,
                        args,
                    });
                }
                Process::Out(ch, payload, body) => {
                    match self.channel_pair(&ch, tab, theory) {
                        ChanPair::Public(c) => {
                            let value = |side: Side| {
                                theory
                                    .normalize(&payload.project(side))
                                    .ok()
                                    .filter(|v| !theory.is_stuck(v, tab))
                            };
                            match (value(Side::Left), value(Side::Right)) {
                                (Some(vl), Some(vr)) => {
                                    let handle =
                                        tab.fresh_var(&format!("w{}", self.left.len() + 1));
                                    self.left.push_entry(handle, vl);
                                    self.right.push_entry(handle, vr);
                                    self.procs[i].1 = *body;
                                    steps.push(TraceStep::Output {
                                        proc: pid,
                                        channel: c,
                                        handle,
                                    });
                                    if let StaticVerdict::Witness(m, n) = statically_equivalent_with(
                                        &self.left,
                                        &self.right,
                                        bounds.static_depth,
                                        tab,
                                        theory,
                                        &self.atk,
                                    ) {
                                        return Err(Divergence::Frame { witness: (m, n) });
                                    }
                                }
                                (None, None) => {
                                    self.procs.remove(i);
                                }
                                _ => return Err(Divergence::Output { proc: pid }),
                            }
                        }
                        ChanPair::Private(_) => i += 1,
                        ChanPair::Bad => {
                            self.procs.remove(i);
                        }
                        ChanPair::Split => return Err(Divergence::Channel { proc: pid }),
                    }
                }
                Process::In(ch, _, _) => match self.channel_pair(&ch, tab, theory) {
                    ChanPair::Public(_) | ChanPair::Private(_) => i += 1,
                    ChanPair::Bad => {
                        self.procs.remove(i);
                    }
                    ChanPair::Split => return Err(Divergence::Channel { proc: pid }),
                },
            }
        }
        Ok(())
    }

    /// Classifies a channel position on both sides at once.
    fn channel_pair(&self, ch: &Term, tab: &Symtab, theory: &Theory) -> ChanPair {
        let l = classify_channel(&ch.project(Side::Left), tab, theory);
        let r = classify_channel(&ch.project(Side::Right), tab, theory);
        match (l, r) {
            (Chan::Public(a), Chan::Public(b)) if a == b => ChanPair::Public(a),
            (Chan::Private(a), Chan::Private(b)) if a == b => ChanPair::Private(a),
            (Chan::Bad, Chan::Bad) => ChanPair::Bad,
            _ => ChanPair::Split,
        }
    }

    /// Enumerates the branch steps available here, in the same order as the
    /// single-process semantics. Candidate recipes are drawn from *both*
    /// sides' knowledge, so a test only one side suggests is still tried on
    /// the pair.
    pub fn successor_plans(&self, bounds: &Bounds, tab: &Symtab, theory: &Theory) -> Vec<Plan> {
        let mut plans = Vec::new();

        for (spid, p) in &self.procs {
            let Process::Out(ch, payload, _) = p else {
                continue;
            };
            let ChanPair::Private(c) = self.channel_pair(ch, tab, theory) else {
                continue;
            };
            let evaluates = |side: Side| {
                matches!(theory.normalize(&payload.project(side)),
                         Ok(v) if !theory.is_stuck(&v, tab))
            };
            // Both sides permanently stuck is uniform silence; one side
            // stuck is a divergence, found when the plan is applied.
            if !evaluates(Side::Left) && !evaluates(Side::Right) {
                continue;
            }
            for (rpid, q) in &self.procs {
                if rpid == spid {
                    continue;
                }
                let Process::In(ch2, _, _) = q else {
                    continue;
                };
                if matches!(self.channel_pair(ch2, tab, theory), ChanPair::Private(c2) if c2 == c)
                {
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
                    if matches!(self.channel_pair(ch, tab, theory), ChanPair::Public(_)) =>
                {
                    Some((*pid, pat))
                }
                _ => None,
            })
            .collect();
        if !open_inputs.is_empty() {
            let lsub = self.left.as_subst();
            let rsub = self.right.as_subst();
            let lknow = Knowledge::saturate_with(&self.left, tab, theory, &self.atk);
            let rknow = Knowledge::saturate_with(&self.right, tab, theory, &self.atk);
            let mut candidates = input_candidates(&lknow, bounds.recipe_depth, tab, theory);
            candidates.extend(input_candidates(&rknow, bounds.recipe_depth, tab, theory));
            candidates.sort_by(|a, b| a.size().cmp(&b.size()).then_with(|| a.cmp(b)));
            candidates.dedup();
            let mut seen: BTreeSet<(Term, Term)> = BTreeSet::new();
            let mut offered: Vec<(Term, Term, Term)> = Vec::new();
            for recipe in candidates {
                if offered.len() >= bounds.max_candidates {
                    break;
                }
                // The attacker's message must be a message on both sides.
                let value = |sub: &Subst| {
                    theory
                        .normalize(&sub.apply(&recipe))
                        .ok()
                        .filter(|v| !theory.is_stuck(v, tab))
                };
                let (Some(vl), Some(vr)) = (value(&lsub), value(&rsub)) else {
                    continue;
                };
                if !seen.insert((vl.clone(), vr.clone())) {
                    continue;
                }
                offered.push((vl, vr, recipe));
            }
            for (pid, pat) in open_inputs {
                let pl = pat.project(Side::Left);
                let pr = pat.project(Side::Right);
                for (vl, vr, recipe) in &offered {
                    let ml = pl.match_value(vl, tab).is_some();
                    let mr = pr.match_value(vr, tab).is_some();
                    // Both failing is uniform rejection (subsumed); one side
                    // failing is a divergence worth descending into.
                    if ml || mr {
                        plans.push(Plan::Input {
                            proc: pid,
                            source: InputSource::Recipe(recipe.clone()),
                        });
                    }
                }
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

    /// Takes the branch step on both sides and flushes the consequences.
    /// Returns the steps recorded up to and including the divergence point,
    /// if any.
    pub fn apply(
        &mut self,
        plan: &Plan,
        bounds: &Bounds,
        tab: &mut Symtab,
        theory: &Theory,
    ) -> (Vec<TraceStep>, Option<Divergence>) {
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
                let ChanPair::Private(c) = self.channel_pair(&ch, tab, theory) else {
                    unreachable!("comm plans use private channels");
                };
                let value = |side: Side| {
                    theory
                        .normalize(&payload.project(side))
                        .ok()
                        .filter(|v| !theory.is_stuck(v, tab))
                };
                let (vl, vr) = match (value(Side::Left), value(Side::Right)) {
                    (Some(vl), Some(vr)) => (vl, vr),
                    (None, None) => unreachable!("plan enumeration gates stuck senders"),
                    _ => return (steps, Some(Divergence::Output { proc: *sender })),
                };
                steps.push(TraceStep::Comm {
                    channel: c,
                    sender: *sender,
                    receiver: *receiver,
                });
                self.procs[si].1 = *cont;
                let ml = pat.project(Side::Left).match_value(&vl, tab);
                let mr = pat.project(Side::Right).match_value(&vr, tab);
                self.procs[ri].1 = match (ml, mr) {
                    (Some(bl), Some(br)) => body.subst(&merge_sides(&bl, &br)),
                    (None, None) => Process::Nil,
                    _ => return (steps, Some(Divergence::Destructor { proc: *receiver })),
                };
            }
            Plan::Input { proc, source } => {
                let i = self.index_of(*proc);
                let Process::In(ch, pat, body) = self.procs[i].1.clone() else {
                    unreachable!("input plans point at an input");
                };
                let ChanPair::Public(c) = self.channel_pair(&ch, tab, theory) else {
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
                let value = |frame: &Frame| {
                    theory
                        .normalize(&frame.as_subst().apply(&recipe))
                        .expect("plan enumeration evaluated the candidate")
                };
                let (vl, vr) = (value(&self.left), value(&self.right));
                steps.push(TraceStep::Input {
                    proc: *proc,
                    channel: c,
                    recipe,
                });
                let ml = pat.project(Side::Left).match_value(&vl, tab);
                let mr = pat.project(Side::Right).match_value(&vr, tab);
                self.procs[i].1 = match (ml, mr) {
                    (Some(bl), Some(br)) => body.subst(&merge_sides(&bl, &br)),
                    (None, None) => unreachable!("plan enumeration gates double rejections"),
                    _ => return (steps, Some(Divergence::Destructor { proc: *proc })),
                };
            }
        }
        let divergence = self.run_silent(bounds, tab, theory, &mut steps).err();
        (steps, divergence)
    }

    /// Renaming-invariant serialization, like the single-process one but
    /// over both frames; entries pair up by position.
    pub fn canonical_key(&self, tab: &Symtab) -> String {
        let mut sorted: Vec<&Process> = self.procs.iter().map(|(_, p)| p).collect();
        sorted.sort_by_cached_key(|p| {
            let mut local = Renamer::new(tab, &self.budgets);
            local.process(p)
        });

        let mut global = Renamer::new(tab, &self.budgets);
        let mut key = String::from("L[");
        for (_, value) in self.left.entries() {
            global.term(value, &mut key);
            key.push(';');
        }
        key.push_str("]R[");
        for (_, value) in self.right.entries() {
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

enum ChanPair {
    Public(spv_calculus::NameId),
    Private(spv_calculus::NameId),
    /// Stuck on both sides.
    Bad,
    /// Usable on the two sides in different ways — observable.
    Split,
}

/// Folds per-side pattern bindings back into bi-terms.
fn merge_sides(left: &Subst, right: &Subst) -> Subst {
    let mut merged = Subst::new();
    for (v, l) in left.iter() {
        let r = right
            .get(*v)
            .expect("projections of one pattern bind the same variables");
        merged.bind(*v, fold_sides(l.clone(), r.clone()));
    }
    merged
}

fn fold_sides(l: Term, r: Term) -> Term {
    if l == r {
        l
    } else {
        Term::choice(l, r)
    }
}

/// Projects a recorded bi-trace to one side: event arguments lose their
/// `choice`, everything else is shared verbatim. The projection replays
/// against the same-side projection of the bi-process.
pub fn project_trace(trace: &Trace, side: Side) -> Trace {
    Trace {
        steps: trace
            .steps
            .iter()
            .map(|s| match s {
                TraceStep::Event { proc, label, args } => TraceStep::Event {
                    proc: *proc,
                    label: *label,
                    args: args.iter().map(|a| a.project(side)).collect(),
                },
                other => other.clone(),
            })
            .collect(),
    }
}

/// Verdict of a diff-equivalence query.
#[derive(Debug)]
pub enum EquivalenceOutcome {
    /// No reachable divergence: the projections are equivalent at these
    /// bounds.
    EquivalentAtBounds(SearchStats),
    /// `trace` drives both sides to a point where they come apart.
    Attack {
        trace: Trace,
        divergence: Divergence,
    },
    /// The step budget ran out first; the verdict is open.
    Truncated(SearchStats),
}

/// Searches all lockstep runs of the bi-process `main` for a divergence.
pub fn check_equivalence(
    main: &Process,
    bounds: &Bounds,
    tab: &mut Symtab,
    theory: &Theory,
) -> EquivalenceOutcome {
    let (cfg, steps, divergence) = BiConfiguration::initial(main, bounds, tab, theory);
    let mut trace = Trace { steps };
    if let Some(divergence) = divergence {
        return EquivalenceOutcome::Attack { trace, divergence };
    }
    let mut search = BiSearch {
        bounds,
        theory,
        visited: HashSet::new(),
        stats: SearchStats {
            visited: 0,
            steps: trace.steps.len() as u64,
        },
        truncated: false,
    };
    match search.dfs(cfg, &mut trace, tab) {
        Some(divergence) => EquivalenceOutcome::Attack { trace, divergence },
        None if search.truncated => EquivalenceOutcome::Truncated(search.stats),
        None => EquivalenceOutcome::EquivalentAtBounds(search.stats),
    }
}

struct BiSearch<'a> {
    bounds: &'a Bounds,
    theory: &'a Theory,
    visited: HashSet<String>,
    stats: SearchStats,
    truncated: bool,
}

impl BiSearch<'_> {
    fn dfs(
        &mut self,
        cfg: BiConfiguration,
        trace: &mut Trace,
        tab: &mut Symtab,
    ) -> Option<Divergence> {
        if !self.visited.insert(cfg.canonical_key(tab)) {
            return None;
        }
        self.stats.visited += 1;
        for plan in cfg.successor_plans(self.bounds, tab, self.theory) {
            if self.stats.steps >= self.bounds.step_budget {
                self.truncated = true;
                return None;
            }
            let mut child = cfg.clone();
            let (steps, divergence) = child.apply(&plan, self.bounds, tab, self.theory);
            self.stats.steps += steps.len() as u64;
            let mark = trace.steps.len();
            trace.steps.extend(steps);
            if divergence.is_some() {
                return divergence;
            }
            if let Some(found) = self.dfs(child, trace, tab) {
                return Some(found);
            }
            trace.steps.truncate(mark);
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spv_calculus::load;

    #[test]
    fn the_second_output_pair_is_told_apart_by_a_public_atom() {
        // The first outputs are fresh names on both sides, fine; the second
        // pair leaks a declared constant on the left only, and the test
        // "does this equal e?" splits the frames.
        let mut plan = load(
            "channel ch. free e, d.
             process new a. new b. out(ch, choice[a, b]). out(ch, choice[e, d])",
        )
        .unwrap();
        let main = plan.main.clone().unwrap();
        let theory = plan.theory.clone();
        let e = plan.tab.lookup_name("e").unwrap();
        match check_equivalence(&main, &Bounds::default(), &mut plan.tab, &theory) {
            EquivalenceOutcome::Attack {
                trace,
                divergence: Divergence::Frame { witness: (m, n) },
            } => {
                let outputs = trace
                    .steps
                    .iter()
                    .filter(|s| matches!(s, TraceStep::Output { .. }))
                    .count();
                assert_eq!(outputs, 2);
                assert!(matches!(m, Term::Var(_)));
                assert_eq!(n, Term::Name(e));
            }
            other => panic!("expected a frame divergence, got {other:?}"),
        }
    }

    #[test]
    fn an_encrypted_choice_is_uniform_until_the_key_leaks() {
        let uniform = "channel ch. free m0, m1.
             fun senc/2. reduc sdec(senc(x, y), y) = x.
             process new k. out(ch, senc(choice[m0, m1], k))";
        let mut plan = load(uniform).unwrap();
        let main = plan.main.clone().unwrap();
        let theory = plan.theory.clone();
        assert!(matches!(
            check_equivalence(&main, &Bounds::default(), &mut plan.tab, &theory),
            EquivalenceOutcome::EquivalentAtBounds(_)
        ));

        let leaky = "channel ch. free m0, m1.
             fun senc/2. reduc sdec(senc(x, y), y) = x.
             process new k. out(ch, senc(choice[m0, m1], k)). out(ch, k)";
        let mut plan = load(leaky).unwrap();
        let main = plan.main.clone().unwrap();
        let theory = plan.theory.clone();
        match check_equivalence(&main, &Bounds::default(), &mut plan.tab, &theory) {
            EquivalenceOutcome::Attack {
                divergence: Divergence::Frame { .. },
                ..
            } => {}
            other => panic!("expected a frame divergence, got {other:?}"),
        }
    }

    #[test]
    fn a_test_against_one_side_splits_a_conditional() {
        let mut plan = load(
            "channel ch. free a, b, yes.
             process in(ch, x). if x = choice[a, b] then out(ch, yes) else 0",
        )
        .unwrap();
        let main = plan.main.clone().unwrap();
        let theory = plan.theory.clone();
        match check_equivalence(&main, &Bounds::default(), &mut plan.tab, &theory) {
            EquivalenceOutcome::Attack {
                trace,
                divergence: Divergence::Conditional { .. },
            } => {
                assert!(trace
                    .steps
                    .iter()
                    .any(|s| matches!(s, TraceStep::Input { .. })));
            }
            other => panic!("expected a conditional divergence, got {other:?}"),
        }
    }

    #[test]
    fn a_key_choice_splits_a_destructor() {
        // Replaying the ciphertext into the decryption: the left side
        // decrypts, the right side is stuck.
        let mut plan = load(
            "channel ch. free a.
             fun senc/2. reduc sdec(senc(x, y), y) = x.
             process new k. new k2.
               out(ch, senc(a, choice[k, k2])). in(ch, y).
               let z = sdec(y, k) in 0 else out(ch, a)",
        )
        .unwrap();
        let main = plan.main.clone().unwrap();
        let theory = plan.theory.clone();
        match check_equivalence(&main, &Bounds::default(), &mut plan.tab, &theory) {
            EquivalenceOutcome::Attack {
                divergence: Divergence::Destructor { .. },
                ..
            } => {}
            other => panic!("expected a destructor divergence, got {other:?}"),
        }
    }

    #[test]
    fn projections_of_a_uniform_bi_trace_replay_side_by_side() {
        let src = "channel ch. free ok.
             event Seen/1.
             process new na. new nb. out(ch, choice[na, nb]). in(ch, x). event Seen(x)";
        let mut plan = load(src).unwrap();
        let main = plan.main.clone().unwrap();
        let theory = plan.theory.clone();
        let bounds = Bounds::default();
        let pristine = plan.tab.clone();

        let (cfg, mut steps, divergence) =
            BiConfiguration::initial(&main, &bounds, &mut plan.tab, &theory);
        assert!(divergence.is_none());
        // Feed the observed output straight back in.
        let handle = cfg.left.entries()[0].0;
        let plan_step = Plan::Input {
            proc: cfg.procs()[0].0,
            source: InputSource::Recipe(Term::Var(handle)),
        };
        let mut cfg = cfg;
        let (more, divergence) = cfg.apply(&plan_step, &bounds, &mut plan.tab, &theory);
        assert!(divergence.is_none());
        steps.extend(more);
        let trace = Trace { steps };
        // The logged argument carries both sides.
        assert!(matches!(&cfg.events[0].1[0], Term::Choice(_, _)));

        for side in [Side::Left, Side::Right] {
            let mut tab = pristine.clone();
            let projected = crate::config::replay(
                &main.project(side),
                &project_trace(&trace, side),
                &bounds,
                &mut tab,
                &theory,
            )
            .expect("each projection replays its side of the trace");
            assert_eq!(projected.events.len(), 1);
            assert_eq!(
                projected.events[0].1[0],
                cfg.events[0].1[0].project(side)
            );
        }
    }
}
