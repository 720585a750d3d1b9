//! Reachability queries over the bounded search: secrecy (can the attacker
//! derive a term?) and event correspondences (is every end event justified by
//! an earlier start event, optionally one-to-one?).

use crate::config::{Bounds, Configuration, Trace};
use crate::deduce::derivable_with;
use crate::explore::{explore, Explored, SearchStats};
use spv_calculus::{Correspondence, EventId, Process, Symtab, Term, Theory, VarId};
use std::collections::BTreeMap;

/// Verdict of a secrecy query.
#[derive(Debug)]
pub enum SecrecyOutcome {
    /// No reachable state lets the attacker derive the target.
    SecretAtBounds(SearchStats),
    /// The attacker derives the target at the end of `trace`; `recipe`
    /// evaluates to it over the final frame.
    Attack { trace: Trace, recipe: Term },
    /// The step budget ran out first; the verdict is open.
    Truncated(SearchStats),
}

/// Searches all runs of `main` for a state whose frame derives `target`.
pub fn check_secrecy(
    main: &Process,
    target: &Term,
    bounds: &Bounds,
    tab: &mut Symtab,
    theory: &Theory,
) -> SecrecyOutcome {
    // Derivations are found by normal form; a target that will not even
    // normalize can never match one.
    let goal = theory.normalize(target).unwrap_or_else(|_| target.clone());
    let mut stop = |cfg: &Configuration, tab: &Symtab| {
        derivable_with(
            &cfg.frame,
            &goal,
            bounds.recipe_depth,
            tab,
            theory,
            &cfg.atk,
        )
        .is_some()
    };
    match explore(main, bounds, tab, theory, &mut stop) {
        Explored::Found { trace, state } => {
            let recipe = derivable_with(
                &state.frame,
                &goal,
                bounds.recipe_depth,
                tab,
                theory,
                &state.atk,
            )
            .expect("the stop predicate only fires on a derivable goal");
            SecrecyOutcome::Attack { trace, recipe }
        }
        Explored::Exhausted(stats) => SecrecyOutcome::SecretAtBounds(stats),
        Explored::BudgetExceeded(stats) => SecrecyOutcome::Truncated(stats),
    }
}

/// Verdict of a correspondence query.
#[derive(Debug)]
pub enum CorrespondenceOutcome {
    /// Every reachable event log satisfies the assertion.
    HoldsAtBounds(SearchStats),
    /// `trace` reaches a state whose event log violates the assertion;
    /// `events` is that log.
    Attack {
        trace: Trace,
        events: Vec<(EventId, Vec<Term>)>,
    },
    /// The step budget ran out first; the verdict is open.
    Truncated(SearchStats),
}

/// Searches all runs of `main` for an event log violating `query`.
pub fn check_correspondence(
    main: &Process,
    query: &Correspondence,
    bounds: &Bounds,
    tab: &mut Symtab,
    theory: &Theory,
) -> CorrespondenceOutcome {
    let mut stop = |cfg: &Configuration, _: &Symtab| violates(&cfg.events, query);
    match explore(main, bounds, tab, theory, &mut stop) {
        Explored::Found { trace, state } => CorrespondenceOutcome::Attack {
            trace,
            events: state.events,
        },
        Explored::Exhausted(stats) => CorrespondenceOutcome::HoldsAtBounds(stats),
        Explored::BudgetExceeded(stats) => CorrespondenceOutcome::Truncated(stats),
    }
}

/// Does this event log violate the assertion? An end instance matching the
/// end atom needs an earlier start instance agreeing on the shared variables;
/// injective assertions additionally need the justifying starts to be
/// pairwise distinct, which is a bipartite matching problem.
pub fn violates(events: &[(EventId, Vec<Term>)], query: &Correspondence) -> bool {
    let ends: Vec<(usize, BTreeMap<VarId, Term>)> = events
        .iter()
        .enumerate()
        .filter(|(_, (label, _))| *label == query.end_event)
        .filter_map(|(k, (_, args))| {
            let mut binding = BTreeMap::new();
            bind(&query.end_args, args, &mut binding).then_some((k, binding))
        })
        .collect();
    if ends.is_empty() {
        return false;
    }
    let starts_for = |k: usize, binding: &BTreeMap<VarId, Term>| -> Vec<usize> {
        events[..k]
            .iter()
            .enumerate()
            .filter(|(_, (label, args))| {
                *label == query.start_event && {
                    let mut extended = binding.clone();
                    bind(&query.start_args, args, &mut extended)
                }
            })
            .map(|(i, _)| i)
            .collect()
    };
    if !query.injective {
        ends.iter()
            .any(|(k, binding)| starts_for(*k, binding).is_empty())
    } else {
        let adjacent: Vec<Vec<usize>> = ends
            .iter()
            .map(|(k, binding)| starts_for(*k, binding))
            .collect();
        maximum_matching(&adjacent, events.len()) < adjacent.len()
    }
}

/// Unify atom variables against concrete arguments, extending `binding`;
/// fails on arity or on a variable already bound to a different value (a
/// repeated variable in the atom demands equal arguments).
fn bind(vars: &[VarId], args: &[Term], binding: &mut BTreeMap<VarId, Term>) -> bool {
    if vars.len() != args.len() {
        return false;
    }
    for (v, a) in vars.iter().zip(args) {
        match binding.get(v) {
            Some(prev) if prev != a => return false,
            Some(_) => {}
            None => {
                binding.insert(*v, a.clone());
            }
        }
    }
    true
}

/// Size of a maximum matching from left vertices to their adjacency lists
/// (augmenting paths).
fn maximum_matching(adjacent: &[Vec<usize>], right_len: usize) -> usize {
    let mut owner: Vec<Option<usize>> = vec![None; right_len];
    let mut matched = 0;
    for left in 0..adjacent.len() {
        let mut seen = vec![false; right_len];
        if augment(left, adjacent, &mut seen, &mut owner) {
            matched += 1;
        }
    }
    matched
}

fn augment(
    left: usize,
    adjacent: &[Vec<usize>],
    seen: &mut [bool],
    owner: &mut [Option<usize>],
) -> bool {
    for &right in &adjacent[left] {
        if seen[right] {
            continue;
        }
        seen[right] = true;
        if owner[right].is_none_or(|other| augment(other, adjacent, seen, owner)) {
            owner[right] = Some(left);
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use spv_calculus::{load, Query};

    fn secrecy_target(src: &str) -> (spv_calculus::Plan, Term) {
        let plan = load(src).unwrap();
        let target = match &plan.queries[0] {
            Query::Secrecy(t) => t.clone(),
            other => panic!("expected a secrecy query, got {other:?}"),
        };
        (plan, target)
    }

    fn correspondence(src: &str) -> (spv_calculus::Plan, Correspondence) {
        let plan = load(src).unwrap();
        let query = match &plan.queries[0] {
            Query::Correspondence(c) => c.clone(),
            other => panic!("expected a correspondence query, got {other:?}"),
        };
        (plan, query)
    }

    #[test]
    fn a_key_sent_in_the_clear_loses_the_encrypted_secret() {
        let (mut plan, target) = secrecy_target(
            "channel ch. private free s.
             fun senc/2. reduc sdec(senc(x, y), y) = x.
             query attacker: s.
             process new k. out(ch, senc(s, k)). out(ch, k)",
        );
        let main = plan.main.clone().unwrap();
        let theory = plan.theory.clone();
        match check_secrecy(&main, &target, &Bounds::default(), &mut plan.tab, &theory) {
            SecrecyOutcome::Attack { recipe, .. } => {
                // sdec applied to the two frame entries
                assert!(matches!(recipe, Term::App(_, _)));
            }
            other => panic!("expected an attack, got {other:?}"),
        }
    }

    #[test]
    fn an_unsent_key_keeps_the_secret() {
        let (mut plan, target) = secrecy_target(
            "channel ch. private free s.
             fun senc/2. reduc sdec(senc(x, y), y) = x.
             query attacker: s.
             process new k. out(ch, senc(s, k))",
        );
        let main = plan.main.clone().unwrap();
        let theory = plan.theory.clone();
        match check_secrecy(&main, &target, &Bounds::default(), &mut plan.tab, &theory) {
            SecrecyOutcome::SecretAtBounds(_) => {}
            other => panic!("expected secrecy, got {other:?}"),
        }
    }

    #[test]
    fn unauthenticated_handshake_fails_the_correspondence() {
        // The responder concludes from any well-formed message, so the
        // attacker can skip the initiator entirely: forward a fresh constant.
        let (mut plan, query) = correspondence(
            "channel ch. free a.
             event Started/1. event Finished/1.
             query ev: Finished(x) ==> ev: Started(x).
             process (event Started(a). out(ch, a)) | (in(ch, y). event Finished(y))",
        );
        let main = plan.main.clone().unwrap();
        let theory = plan.theory.clone();
        match check_correspondence(&main, &query, &Bounds::default(), &mut plan.tab, &theory) {
            CorrespondenceOutcome::Attack { events, .. } => {
                assert!(events
                    .iter()
                    .any(|(label, _)| *label == query.end_event));
            }
            other => panic!("expected an attack, got {other:?}"),
        }
    }

    #[test]
    fn a_replayed_conclusion_breaks_injectivity_but_not_the_plain_assertion() {
        // One initiator run feeds two responder sessions: fine
        // non-injectively, a violation one-to-one.
        let src = |marker: &str| {
            format!(
                "channel ch. private free m.
                 event Started/1. event Finished/1.
                 query {marker}: Finished(x) ==> {marker}: Started(x).
                 process new c : channel.
                   ((event Started(m). out(c, m). out(c, m)) |
                    !(in(c, x). event Finished(x)))"
            )
        };
        let (mut plan, query) = correspondence(&src("evinj"));
        let main = plan.main.clone().unwrap();
        let theory = plan.theory.clone();
        match check_correspondence(&main, &query, &Bounds::default(), &mut plan.tab, &theory) {
            CorrespondenceOutcome::Attack { events, .. } => {
                let ends = events
                    .iter()
                    .filter(|(label, _)| *label == query.end_event)
                    .count();
                assert_eq!(ends, 2);
            }
            other => panic!("expected an injectivity attack, got {other:?}"),
        }

        let (mut plan, query) = correspondence(&src("ev"));
        let main = plan.main.clone().unwrap();
        let theory = plan.theory.clone();
        match check_correspondence(&main, &query, &Bounds::default(), &mut plan.tab, &theory) {
            CorrespondenceOutcome::HoldsAtBounds(_) => {}
            other => panic!("expected the plain assertion to hold, got {other:?}"),
        }
    }

    #[test]
    fn matching_pairs_violations_prefers_distinct_witnesses() {
        // Log: Start(a), End(a), End(a) — one justifying start, two ends.
        let plan = load(
            "channel ch. free a.
             event Started/1. event Finished/1.
             query evinj: Finished(x) ==> evinj: Started(x).
             process 0",
        )
        .unwrap();
        let query = match &plan.queries[0] {
            Query::Correspondence(c) => c.clone(),
            _ => unreachable!(),
        };
        let a = Term::Name(plan.tab.lookup_name("a").unwrap());
        let started = query.start_event;
        let finished = query.end_event;
        let log = vec![
            (started, vec![a.clone()]),
            (finished, vec![a.clone()]),
            (finished, vec![a.clone()]),
        ];
        assert!(violates(&log, &query));
        assert!(!violates(&log[..2], &query));
        let relaxed = Correspondence {
            injective: false,
            ..query
        };
        assert!(!violates(&log, &relaxed));
    }
}
