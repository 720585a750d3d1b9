//! Bounded depth-first search over configurations.
//!
//! The search is deterministic: successors are enumerated in a fixed order,
//! α-equivalent states are visited once (keyed by canonical form), and the
//! first state satisfying the stop predicate wins. Running out of step
//! budget is reported separately from exhausting the state space — only the
//! latter justifies a "no attack within bounds" verdict.

use crate::config::{Bounds, Configuration, Trace};
use spv_calculus::{Process, Symtab, Theory};
use std::collections::HashSet;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Distinct configurations visited.
    pub visited: u64,
    /// Trace steps taken, counting every flushed deterministic step.
    pub steps: u64,
}

/// Outcome of a bounded search.
#[derive(Debug)]
pub enum Explored {
    /// The stop predicate fired at `state`, reached by `trace`.
    Found { trace: Trace, state: Configuration },
    /// Every state reachable within bounds was visited; no hit.
    Exhausted(SearchStats),
    /// The step budget ran out with frontier left unexplored.
    BudgetExceeded(SearchStats),
}

/// Explores all runs of `main` within `bounds`, stopping at the first state
/// where `stop` holds (the initial state included).
pub fn explore(
    main: &Process,
    bounds: &Bounds,
    tab: &mut Symtab,
    theory: &Theory,
    stop: &mut dyn FnMut(&Configuration, &Symtab) -> bool,
) -> Explored {
    let (cfg, steps) = Configuration::initial(main, bounds, tab, theory);
    let mut trace = Trace { steps };
    let mut search = Search {
        bounds,
        theory,
        stop,
        visited: HashSet::new(),
        stats: SearchStats {
            visited: 0,
            steps: trace.steps.len() as u64,
        },
        truncated: false,
    };
    match search.dfs(cfg, &mut trace, tab) {
        Some(state) => Explored::Found { trace, state },
        None if search.truncated => Explored::BudgetExceeded(search.stats),
        None => Explored::Exhausted(search.stats),
    }
}

struct Search<'a> {
    bounds: &'a Bounds,
    theory: &'a Theory,
    stop: &'a mut dyn FnMut(&Configuration, &Symtab) -> bool,
    visited: HashSet<String>,
    stats: SearchStats,
    truncated: bool,
}

impl Search<'_> {
    fn dfs(
        &mut self,
        cfg: Configuration,
        trace: &mut Trace,
        tab: &mut Symtab,
    ) -> Option<Configuration> {
        if (self.stop)(&cfg, tab) {
            return Some(cfg);
        }
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
            let steps = child.apply(&plan, self.bounds, tab, self.theory);
            self.stats.steps += steps.len() as u64;
            let mark = trace.steps.len();
            trace.steps.extend(steps);
            if let Some(hit) = self.dfs(child, trace, tab) {
                return Some(hit);
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
    fn finds_the_state_where_a_relayed_secret_surfaces() {
        // The secret only reaches the frame after the attacker relays the
        // first output into the second process.
        let mut plan = load(
            "channel ch. private free s. free go.
             process in(ch, x). if x = go then out(ch, s) else 0",
        )
        .unwrap();
        let main = plan.main.clone().unwrap();
        let bounds = Bounds::default();
        let s = plan.tab.lookup_name("s").unwrap();
        let theory = plan.theory.clone();
        let mut stop = |cfg: &Configuration, _: &Symtab| {
            cfg.frame
                .entries()
                .iter()
                .any(|(_, v)| *v == spv_calculus::Term::Name(s))
        };
        match explore(&main, &bounds, &mut plan.tab, &theory, &mut stop) {
            Explored::Found { trace, state } => {
                assert_eq!(state.frame.len(), 1);
                assert!(trace
                    .steps
                    .iter()
                    .any(|st| matches!(st, crate::config::TraceStep::Input { .. })));
            }
            other => panic!("expected a hit, got {other:?}"),
        }
    }

    #[test]
    fn exhausts_when_nothing_matches() {
        let mut plan = load(
            "channel ch. free a, b.
             process in(ch, x). out(ch, a). in(ch, y). out(ch, b)",
        )
        .unwrap();
        let main = plan.main.clone().unwrap();
        let bounds = Bounds::default();
        let theory = plan.theory.clone();
        let mut stop = |_: &Configuration, _: &Symtab| false;
        match explore(&main, &bounds, &mut plan.tab, &theory, &mut stop) {
            Explored::Exhausted(stats) => {
                assert!(stats.visited > 0);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn tiny_budget_reports_truncation_not_exhaustion() {
        let mut plan = load(
            "channel ch. free a.
             process !(in(ch, x). out(ch, a))",
        )
        .unwrap();
        let main = plan.main.clone().unwrap();
        let bounds = Bounds {
            step_budget: 3,
            ..Bounds::default()
        };
        let theory = plan.theory.clone();
        let mut stop = |_: &Configuration, _: &Symtab| false;
        match explore(&main, &bounds, &mut plan.tab, &theory, &mut stop) {
            Explored::BudgetExceeded(stats) => assert!(stats.steps >= 3),
            other => panic!("expected truncation, got {other:?}"),
        }
    }
}
