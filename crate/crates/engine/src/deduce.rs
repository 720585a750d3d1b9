//! Dolev-Yao deduction: what the attacker can compute from a frame.
//!
//! Knowledge is saturated in two phases. *Analysis* closes the observed
//! terms under rule application — whenever the arguments of a rewrite rule's
//! left-hand side can all be filled with known terms, the instantiated
//! right-hand side becomes known (this is how a ciphertext plus its key
//! yields the plaintext). *Synthesis* then derives a goal on demand by
//! looking it up in the analyzed knowledge or rebuilding it top-down with
//! public symbols.
//!
//! Static equivalence uses the same machinery through a different lens: two
//! frames are equivalent iff the map `value-in-left ↦ value-in-right` over
//! all recipe evaluations is a well-defined bijection. Candidate recipes are
//! enumerated once — atoms, analysis results, rule-directed probes, and a
//! capped bottom-up closure — and the first recipe pair that collides in one
//! direction but not the other is a distinguishing test.

use spv_calculus::{
    NameScope, RewriteRule, Subst, SymKind, Symtab, Term, Theory, VarId, Visibility,
};
use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::frame::Frame;

/// Caps keeping saturation and closure finite on large frames. The defaults
/// never trigger on desk-scale frames; they bound worst-case blowup only.
const MAX_KNOWLEDGE: usize = 4_096;
const MAX_CLASSES: usize = 60_000;
const MAX_RECIPE_SIZE: usize = 256;

/// Analyzed attacker knowledge over one frame: every derivably-exposed
/// normal form, keyed to its smallest known recipe.
#[derive(Debug, Clone)]
pub struct Knowledge {
    map: BTreeMap<Term, Term>,
}

fn smaller(a: &Term, b: &Term) -> bool {
    (a.size(), a) < (b.size(), b)
}

/// Matches `pat` against ground `subj`, extending `binds`; non-linear
/// occurrences must agree exactly.
fn extend_match(pat: &Term, subj: &Term, binds: &mut Subst) -> bool {
    match (pat, subj) {
        (Term::Var(v), _) => binds.try_bind(*v, subj),
        (Term::Name(_), _) => pat == subj,
        (Term::App(f, ps), Term::App(g, ss)) if f == g && ps.len() == ss.len() => {
            ps.iter().zip(ss).all(|(p, s)| extend_match(p, s, binds))
        }
        _ => false,
    }
}

/// Public atoms every attacker starts from: free names and public constants
/// of the signature. Attacker-invented constants are *not* read off the
/// table — the table is shared across exploration branches, so each caller
/// passes the constants in play on its own branch explicitly.
fn public_atoms(tab: &Symtab) -> Vec<Term> {
    let mut out = Vec::new();
    for (id, info) in tab.names() {
        if info.scope == NameScope::Public {
            out.push(Term::Name(id));
        }
    }
    for (id, sym) in tab.symbols() {
        if sym.arity == 0 && sym.visibility == Visibility::Public {
            out.push(Term::constant(id));
        }
    }
    out
}

impl Knowledge {
    /// Saturates the frame under rule analysis.
    pub fn saturate(frame: &Frame, tab: &Symtab, theory: &Theory) -> Knowledge {
        Knowledge::saturate_with(frame, tab, theory, &[])
    }

    /// Saturation with additional attacker-known atoms (constants invented
    /// earlier on this execution branch).
    pub fn saturate_with(
        frame: &Frame,
        tab: &Symtab,
        theory: &Theory,
        extra_atoms: &[Term],
    ) -> Knowledge {
        let mut k = Knowledge {
            map: BTreeMap::new(),
        };
        for atom in public_atoms(tab).into_iter().chain(extra_atoms.iter().cloned()) {
            k.insert(atom.clone(), atom);
        }
        for (handle, value) in frame.entries() {
            k.insert(value.clone(), Term::Var(*handle));
        }

        // Fixpoint: try every rule against the current knowledge until no
        // new term appears. Knowledge sets are small, so the quadratic loop
        // is cheaper than maintaining rule-position indexes.
        loop {
            let mut fresh = Vec::new();
            for rule in &theory.rules {
                if !attacker_may_apply(rule, tab) {
                    continue;
                }
                let Term::App(f, pats) = &rule.lhs else {
                    continue;
                };
                let mut fills = Vec::new();
                k.fill_positions(pats, &Subst::new(), &mut Vec::new(), &mut fills);
                for (binds, arg_recipes) in fills {
                    let value = theory
                        .normalize(&binds.apply(&rule.rhs))
                        .expect("analysis instantiates convergent rules");
                    let recipe = Term::App(*f, arg_recipes);
                    if recipe.size() <= MAX_RECIPE_SIZE && k.better(&value, &recipe) {
                        fresh.push((value, recipe));
                    }
                }
            }
            let mut changed = false;
            for (value, recipe) in fresh {
                changed |= k.insert(value, recipe);
            }
            if !changed || k.map.len() >= MAX_KNOWLEDGE {
                return k;
            }
        }
    }

    fn better(&self, value: &Term, recipe: &Term) -> bool {
        match self.map.get(value) {
            Some(existing) => smaller(recipe, existing),
            None => true,
        }
    }

    fn insert(&mut self, value: Term, recipe: Term) -> bool {
        if self.better(&value, &recipe) {
            self.map.insert(value, recipe);
            true
        } else {
            false
        }
    }

    /// Enumerates every way of filling the rule's argument patterns with
    /// known terms. Positions that are ground under the bindings so far are
    /// looked up directly; open positions scan the knowledge set.
    fn fill_positions(
        &self,
        pats: &[Term],
        binds: &Subst,
        recipes: &mut Vec<Term>,
        out: &mut Vec<(Subst, Vec<Term>)>,
    ) {
        let Some(pat) = pats.first() else {
            out.push((binds.clone(), recipes.clone()));
            return;
        };
        let instantiated = binds.apply(pat);
        if instantiated.is_ground() {
            if let Some(recipe) = self.map.get(&instantiated) {
                recipes.push(recipe.clone());
                self.fill_positions(&pats[1..], binds, recipes, out);
                recipes.pop();
            }
            return;
        }
        for (value, recipe) in &self.map {
            let mut extended = binds.clone();
            if extend_match(&instantiated, value, &mut extended) {
                recipes.push(recipe.clone());
                self.fill_positions(&pats[1..], &extended, recipes, out);
                recipes.pop();
            }
        }
    }

    pub fn recipe_for(&self, value: &Term) -> Option<&Term> {
        self.map.get(value)
    }

    /// Known values with their recipes, smallest value first — the order
    /// input enumeration feeds candidates to the protocol.
    pub fn entries_smallest_first(&self) -> Vec<(&Term, &Term)> {
        let mut v: Vec<_> = self.map.iter().collect();
        v.sort_by_key(|(value, recipe)| (value.size(), recipe.size()));
        v
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

fn attacker_may_apply(rule: &RewriteRule, tab: &Symtab) -> bool {
    match &rule.lhs {
        Term::App(f, _) => tab.symbol(*f).visibility == Visibility::Public,
        _ => false,
    }
}

/// A synthesized derivation of `goal` from the frame, or `None` if the goal
/// is out of reach within `depth` (recipe nesting, atoms counting 1).
pub fn derivable(
    frame: &Frame,
    goal: &Term,
    depth: usize,
    tab: &Symtab,
    theory: &Theory,
) -> Option<Term> {
    derivable_with(frame, goal, depth, tab, theory, &[])
}

/// [`derivable`] with extra attacker atoms (constants the attacker minted in
/// the run under scrutiny) treated as known.
pub fn derivable_with(
    frame: &Frame,
    goal: &Term,
    depth: usize,
    tab: &Symtab,
    theory: &Theory,
    extra_atoms: &[Term],
) -> Option<Term> {
    let knowledge = Knowledge::saturate_with(frame, tab, theory, extra_atoms);
    let recipe = synthesize(&knowledge, goal, depth, tab)?;
    // Soundness gate: a recipe that does not replay to the goal is a bug in
    // saturation, never a derivation. Attacker constants are names, so the
    // frame substitution leaves them in place, which is the right reading.
    let replayed = theory.normalize(&frame.as_subst().apply(&recipe)).ok()?;
    (replayed == *goal).then_some(recipe)
}

/// Synthesis against already-saturated knowledge (saves re-saturation when
/// the caller holds the `Knowledge` anyway).
pub fn synthesize(
    knowledge: &Knowledge,
    goal: &Term,
    depth: usize,
    tab: &Symtab,
) -> Option<Term> {
    if depth == 0 {
        return None;
    }
    if let Some(recipe) = knowledge.recipe_for(goal) {
        return Some(recipe.clone());
    }
    if let Term::App(f, args) = goal {
        if tab.symbol(*f).visibility == Visibility::Public {
            let parts = args
                .iter()
                .map(|a| synthesize(knowledge, a, depth - 1, tab))
                .collect::<Option<Vec<_>>>()?;
            return Some(Term::App(*f, parts));
        }
    }
    None
}

/// Verdict of a static-equivalence check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StaticVerdict {
    EquivalentAtDepth,
    /// Two recipes whose evaluations coincide in exactly one frame.
    Witness(Term, Term),
}

impl StaticVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, StaticVerdict::EquivalentAtDepth)
    }
}

/// Decides whether the two frames are distinguishable by any equality test
/// between recipes of nesting depth at most `depth`.
pub fn statically_equivalent(
    left: &Frame,
    right: &Frame,
    depth: usize,
    tab: &Symtab,
    theory: &Theory,
) -> StaticVerdict {
    statically_equivalent_with(left, right, depth, tab, theory, &[])
}

/// Static equivalence with additional attacker-known atoms in the test
/// vocabulary (constants invented earlier on this execution branch).
pub fn statically_equivalent_with(
    left: &Frame,
    right: &Frame,
    depth: usize,
    tab: &Symtab,
    theory: &Theory,
    extra_atoms: &[Term],
) -> StaticVerdict {
    let ldom: Vec<VarId> = left.domain().collect();
    let rdom: Vec<VarId> = right.domain().collect();
    if ldom != rdom {
        // Differing domains are immediately distinguishable; report the
        // first unshared handle against itself.
        let handle = ldom
            .iter()
            .chain(rdom.iter())
            .find(|h| !ldom.contains(h) || !rdom.contains(h))
            .copied()
            .expect("domains differ");
        return StaticVerdict::Witness(Term::Var(handle), Term::Var(handle));
    }

    let mut tester = PairTester::new(left, right, theory);

    // Atoms.
    for atom in ldom
        .into_iter()
        .map(Term::Var)
        .chain(public_atoms(tab))
        .chain(extra_atoms.iter().cloned())
    {
        if let Err(w) = tester.consider(atom) {
            return w;
        }
    }

    // Analysis recipes and rule-directed probes from both frames' points of
    // view. A probe may nest deeper than the blind closure reaches, but
    // never beyond the recipe-depth bound.
    let lk = Knowledge::saturate_with(left, tab, theory, extra_atoms);
    let rk = Knowledge::saturate_with(right, tab, theory, extra_atoms);
    for knowledge in [&lk, &rk] {
        for probe in probes(knowledge, depth, tab, theory) {
            if let Err(w) = tester.consider(probe) {
                return w;
            }
        }
    }

    // Capped bottom-up closure: apply public symbols to class
    // representatives until the depth bound. On small frames this is the
    // exhaustive recipe enumeration; on large ones the caps take over and
    // the probes above carry the attack-finding weight. New values are
    // composed from the argument classes' values, so each candidate costs
    // one root normalization instead of a full recipe replay.
    //
    // Wide constructors (arity > 3, i.e. the large tuples) are skipped: a
    // free constructor at the root of a test can only repeat a distinction
    // its arguments already make, and as *arguments to rules* the probes
    // synthesize them on demand.
    let mut public_syms: Vec<(spv_calculus::SymId, usize)> = tab
        .symbols()
        .filter(|(_, s)| {
            s.visibility == Visibility::Public && s.arity > 0 && s.arity <= 3
        })
        .map(|(id, s)| (id, s.arity))
        .collect();
    public_syms.sort_by_key(|&(_, arity)| arity);
    let mut level_start = 0;
    for _level in 2..=depth {
        let level_end = tester.class_list.len();
        if level_start == level_end || level_end >= MAX_CLASSES {
            break;
        }
        for &(f, arity) in &public_syms {
            // Every argument tuple must include at least one class from the
            // previous level; older-only combinations were already tried.
            let mut combo = vec![0usize; arity];
            'combos: loop {
                if combo.iter().any(|&i| i >= level_start) {
                    let recipe = Term::App(
                        f,
                        combo
                            .iter()
                            .map(|&i| tester.class_list[i].recipe.clone())
                            .collect(),
                    );
                    if recipe.size() <= MAX_RECIPE_SIZE {
                        let lv = compose_value(f, &combo, &tester.class_list, theory, true);
                        let rv = compose_value(f, &combo, &tester.class_list, theory, false);
                        if let (Some(lv), Some(rv)) = (lv, rv) {
                            if let Err(w) = tester.record(recipe, lv, rv) {
                                return w;
                            }
                        }
                    }
                    if tester.class_list.len() >= MAX_CLASSES {
                        break 'combos;
                    }
                }
                // Advance the mixed-radix counter over class indices.
                let mut pos = 0;
                loop {
                    if pos == arity {
                        break 'combos;
                    }
                    combo[pos] += 1;
                    if combo[pos] < level_end {
                        break;
                    }
                    combo[pos] = 0;
                    pos += 1;
                }
            }
        }
        level_start = level_end;
    }

    StaticVerdict::EquivalentAtDepth
}

fn compose_value(
    f: spv_calculus::SymId,
    combo: &[usize],
    classes: &[EvalClass],
    theory: &Theory,
    left: bool,
) -> Option<Term> {
    let args = combo
        .iter()
        .map(|&i| {
            let c = &classes[i];
            if left { c.lv.clone() } else { c.rv.clone() }
        })
        .collect();
    theory.normalize(&Term::App(f, args)).ok()
}

/// Rule applications whose argument positions are filled by matching the
/// knowledge directly or synthesizing the instantiated position top-down.
/// Synthesis is what reaches reconstruction tests — e.g. re-verifying a
/// zero-knowledge token against rebuilt public information.
fn probes(
    knowledge: &Knowledge,
    depth: usize,
    tab: &Symtab,
    theory: &Theory,
) -> Vec<Term> {
    let mut out = Vec::new();
    for rule in &theory.rules {
        if !attacker_may_apply(rule, tab) {
            continue;
        }
        let Term::App(f, pats) = &rule.lhs else {
            continue;
        };
        let mut fills = Vec::new();
        fill_with_synthesis(knowledge, pats, &Subst::new(), &mut Vec::new(), depth, tab, &mut fills);
        for arg_recipes in fills {
            let recipe = Term::App(*f, arg_recipes);
            if recipe.depth() <= depth && recipe.size() <= MAX_RECIPE_SIZE {
                out.push(recipe);
            }
        }
    }
    out
}

fn fill_with_synthesis(
    knowledge: &Knowledge,
    pats: &[Term],
    binds: &Subst,
    recipes: &mut Vec<Term>,
    depth: usize,
    tab: &Symtab,
    out: &mut Vec<Vec<Term>>,
) {
    let Some(pat) = pats.first() else {
        out.push(recipes.clone());
        return;
    };
    let instantiated = binds.apply(pat);
    if instantiated.is_ground() {
        if let Some(recipe) = synthesize(knowledge, &instantiated, depth, tab) {
            recipes.push(recipe);
            fill_with_synthesis(knowledge, &pats[1..], binds, recipes, depth, tab, out);
            recipes.pop();
        }
        return;
    }
    for (value, recipe) in knowledge.entries_smallest_first() {
        let mut extended = binds.clone();
        if extend_match(&instantiated, value, &mut extended) {
            recipes.push(recipe.clone());
            fill_with_synthesis(knowledge, &pats[1..], &extended, recipes, depth, tab, out);
            recipes.pop();
        }
    }
}

/// Candidate messages for feeding a public-channel input, as recipes over
/// the frame: everything the analysis exposed, the pieces of rule-directed
/// probes (forgeries tailored to the verifications a receiver might run),
/// and chains of unary public constructors over known atoms (the attacker
/// emulating a key- or identity-derivation). Smallest recipes first; the
/// caller appends its fresh constant and drops candidates that evaluate to
/// stuck terms.
pub fn input_candidates(
    knowledge: &Knowledge,
    depth: usize,
    tab: &Symtab,
    theory: &Theory,
) -> Vec<Term> {
    let mut seen: BTreeSet<Term> = BTreeSet::new();
    for (_, recipe) in knowledge.entries_smallest_first() {
        if recipe.depth() <= depth {
            seen.insert(recipe.clone());
        }
    }
    for probe in probes(knowledge, depth, tab, theory) {
        for sub in probe.subterms() {
            if sub.depth() <= depth {
                seen.insert(sub.clone());
            }
        }
    }

    let unary: Vec<spv_calculus::SymId> = tab
        .symbols()
        .filter(|(_, s)| {
            s.visibility == Visibility::Public && s.arity == 1 && s.kind == SymKind::Constructor
        })
        .map(|(id, _)| id)
        .collect();
    let mut level: Vec<Term> = seen.iter().filter(|r| r.size() == 1).cloned().collect();
    for _ in 1..depth {
        let mut next = Vec::new();
        for f in &unary {
            for arg in &level {
                let chain = Term::app(*f, vec![arg.clone()]);
                if seen.insert(chain.clone()) {
                    next.push(chain);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        level = next;
    }

    let mut out: Vec<Term> = seen.into_iter().collect();
    out.sort_by(|a, b| a.size().cmp(&b.size()).then_with(|| a.cmp(b)));
    out
}

/// One evaluation class: a representative recipe and its value in each
/// frame. Recipes with the same value pair are interchangeable in any
/// distinguishing context, so only one representative is kept.
struct EvalClass {
    recipe: Term,
    lv: Term,
    rv: Term,
}

/// Tracks, for every candidate recipe, the pair (value in left frame, value
/// in right frame). Frames are statically equivalent iff this relation is a
/// partial bijection; the first recipe breaking injectivity in either
/// direction yields the witness pair.
struct PairTester<'a> {
    lsub: Subst,
    rsub: Subst,
    theory: &'a Theory,
    /// left value → (right value, earliest recipe)
    forward: BTreeMap<Term, (Term, Term)>,
    /// right value → (left value, earliest recipe)
    backward: BTreeMap<Term, (Term, Term)>,
    seen_pairs: HashSet<(Term, Term)>,
    class_list: Vec<EvalClass>,
}

impl<'a> PairTester<'a> {
    fn new(left: &Frame, right: &Frame, theory: &'a Theory) -> Self {
        PairTester {
            lsub: left.as_subst(),
            rsub: right.as_subst(),
            theory,
            forward: BTreeMap::new(),
            backward: BTreeMap::new(),
            seen_pairs: HashSet::new(),
            class_list: Vec::new(),
        }
    }

    /// Evaluates the recipe in both frames and records it.
    fn consider(&mut self, recipe: Term) -> Result<(), StaticVerdict> {
        let lv = match self.theory.normalize(&self.lsub.apply(&recipe)) {
            Ok(v) => v,
            Err(_) => return Ok(()),
        };
        let rv = match self.theory.normalize(&self.rsub.apply(&recipe)) {
            Ok(v) => v,
            Err(_) => return Ok(()),
        };
        self.record(recipe, lv, rv)
    }

    /// Records a recipe with already-computed values; reports the witness on
    /// the first injectivity break in either direction.
    fn record(&mut self, recipe: Term, lv: Term, rv: Term) -> Result<(), StaticVerdict> {
        if let Some((prior_rv, prior_recipe)) = self.forward.get(&lv) {
            if *prior_rv != rv {
                return Err(StaticVerdict::Witness(prior_recipe.clone(), recipe));
            }
        } else {
            self.forward.insert(lv.clone(), (rv.clone(), recipe.clone()));
        }
        if let Some((prior_lv, prior_recipe)) = self.backward.get(&rv) {
            if *prior_lv != lv {
                return Err(StaticVerdict::Witness(prior_recipe.clone(), recipe));
            }
        } else {
            self.backward.insert(rv.clone(), (lv.clone(), recipe.clone()));
        }
        if self.seen_pairs.insert((lv.clone(), rv.clone())) {
            self.class_list.push(EvalClass { recipe, lv, rv });
        }
        Ok(())
    }
}

/// Convenience wrapper asserting both directions of a witness replay: the
/// pair must evaluate equal in exactly one frame. Used by callers that
/// surface attacks.
pub fn witness_replays(
    witness: (&Term, &Term),
    left: &Frame,
    right: &Frame,
    theory: &Theory,
) -> bool {
    let eval = |frame: &Frame, t: &Term| theory.normalize(&frame.as_subst().apply(t)).ok();
    let (m, n) = witness;
    match (
        eval(left, m),
        eval(left, n),
        eval(right, m),
        eval(right, n),
    ) {
        (Some(lm), Some(ln), Some(rm), Some(rn)) => (lm == ln) != (rm == rn),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spv_calculus::{load, NameScope, Sort};

    fn theory_fixture() -> (spv_calculus::Plan, Frame) {
        let plan = load(
            "fun pk/1. fun enc/2. fun commit/2. fun f/1. fun g/1.
             reduc dec(enc(m, pk(sk)), sk) = m.
             reduc open(commit(x, y), y) = x.",
        )
        .unwrap();
        (plan, Frame::new())
    }

    #[test]
    fn ciphertext_plus_key_yields_the_plaintext() {
        let (mut plan, mut frame) = theory_fixture();
        let m = plan.tab.fresh_name("m", Sort::Base);
        let sk = plan.tab.fresh_name("sk", Sort::Base);
        frame.restrict(m);
        frame.restrict(sk);
        let enc = plan.tab.lookup_symbol("enc").unwrap();
        let pk = plan.tab.lookup_symbol("pk").unwrap();
        let dec = plan.tab.lookup_symbol("dec").unwrap();

        let cipher = Term::app(
            enc,
            vec![Term::Name(m), Term::app(pk, vec![Term::Name(sk)])],
        );
        let x1 = frame.extend(cipher, &mut plan.tab);
        let x2 = frame.extend(Term::Name(sk), &mut plan.tab);

        let recipe = derivable(&frame, &Term::Name(m), 4, &plan.tab, &plan.theory)
            .expect("plaintext is derivable");
        assert_eq!(recipe, Term::app(dec, vec![Term::Var(x1), Term::Var(x2)]));
    }

    #[test]
    fn direct_handle_is_its_own_recipe() {
        let (mut plan, mut frame) = theory_fixture();
        let n = plan.tab.fresh_name("n", Sort::Base);
        frame.restrict(n);
        let x1 = frame.extend(Term::Name(n), &mut plan.tab);
        let recipe = derivable(&frame, &Term::Name(n), 1, &plan.tab, &plan.theory).unwrap();
        assert_eq!(recipe, Term::Var(x1));
    }

    #[test]
    fn commitment_without_the_key_never_opens() {
        let (mut plan, mut frame) = theory_fixture();
        let id = plan.tab.fresh_name("id", Sort::Base);
        let r = plan.tab.fresh_name("r", Sort::Base);
        frame.restrict(id);
        frame.restrict(r);
        let commit = plan.tab.lookup_symbol("commit").unwrap();
        frame.extend(
            Term::app(commit, vec![Term::Name(id), Term::Name(r)]),
            &mut plan.tab,
        );
        for depth in 1..=6 {
            assert!(
                derivable(&frame, &Term::Name(id), depth, &plan.tab, &plan.theory).is_none(),
                "committed value must stay hidden at depth {depth}"
            );
        }
    }

    #[test]
    fn derivability_is_monotone_under_frame_extension() {
        let (mut plan, mut frame) = theory_fixture();
        let m = plan.tab.fresh_name("m", Sort::Base);
        let sk = plan.tab.fresh_name("sk", Sort::Base);
        frame.restrict(m);
        frame.restrict(sk);
        let enc = plan.tab.lookup_symbol("enc").unwrap();
        let pk = plan.tab.lookup_symbol("pk").unwrap();
        let cipher = Term::app(
            enc,
            vec![Term::Name(m), Term::app(pk, vec![Term::Name(sk)])],
        );
        frame.extend(cipher, &mut plan.tab);
        assert!(derivable(&frame, &Term::Name(m), 4, &plan.tab, &plan.theory).is_none());

        let mut extended = frame.clone();
        extended.extend(Term::Name(sk), &mut plan.tab);
        assert!(derivable(&extended, &Term::Name(m), 4, &plan.tab, &plan.theory).is_some());
    }

    /// The classic frame pair: {M/x, N/y} with both names fresh is
    /// indistinguishable from {f(M)/x, g(M)/y}, but {M/x, f(M)/y} is caught
    /// by the test y = f(x).
    #[test]
    fn frame_equivalence_example() {
        let (mut plan, _) = theory_fixture();
        let f = plan.tab.lookup_symbol("f").unwrap();
        let g = plan.tab.lookup_symbol("g").unwrap();
        let m = plan.tab.fresh_name("M", Sort::Base);
        let n = plan.tab.fresh_name("N", Sort::Base);

        // Handles must coincide across the compared frames, so each frame is
        // extended against its own clone of the table taken at the same
        // allocation point.
        let mut twin = plan.tab.clone();
        let mut twin2 = plan.tab.clone();

        let mut b = Frame::new();
        b.restrict(m);
        b.restrict(n);
        let x = b.extend(Term::Name(m), &mut plan.tab);
        let y = b.extend(Term::Name(n), &mut plan.tab);

        let mut b2 = Frame::new();
        b2.restrict(m);
        let x2 = b2.extend(Term::app(f, vec![Term::Name(m)]), &mut twin);
        let y2 = b2.extend(Term::app(g, vec![Term::Name(m)]), &mut twin);
        assert_eq!((x, y), (x2, y2), "twin construction must mirror handles");

        assert!(
            statically_equivalent(&b, &b2, 3, &plan.tab, &plan.theory).is_equivalent(),
            "fresh name pair vs f(M), g(M) must be indistinguishable"
        );

        let mut b3 = Frame::new();
        b3.restrict(m);
        let _ = b3.extend(Term::Name(m), &mut twin2);
        let _ = b3.extend(Term::app(f, vec![Term::Name(m)]), &mut twin2);

        match statically_equivalent(&b, &b3, 3, &plan.tab, &plan.theory) {
            StaticVerdict::Witness(w1, w2) => {
                let expected: BTreeSet<Term> =
                    [Term::Var(y), Term::app(f, vec![Term::Var(x)])].into();
                let got: BTreeSet<Term> = [w1.clone(), w2.clone()].into();
                assert_eq!(got, expected, "the separating test is y = f(x)");
                assert!(witness_replays((&w1, &w2), &b, &b3, &plan.theory));
            }
            StaticVerdict::EquivalentAtDepth => panic!("y = f(x) separates these frames"),
        }
    }

    #[test]
    fn identical_frames_are_equivalent() {
        let (mut plan, mut frame) = theory_fixture();
        let n = plan.tab.fresh_name("n", Sort::Base);
        frame.restrict(n);
        frame.extend(Term::Name(n), &mut plan.tab);
        assert!(
            statically_equivalent(&frame, &frame, 4, &plan.tab, &plan.theory).is_equivalent()
        );
    }

    #[test]
    fn private_symbols_never_enter_recipes() {
        let plan = load(
            "private fun drcred/2.
             fun pk/1.
             reduc getid(drcred(x, y)) = y.",
        )
        .unwrap();
        let mut plan = plan;
        let mut frame = Frame::new();
        let pnym = plan.tab.fresh_name("pnym", Sort::Base);
        let id = plan
            .tab
            .declare_name("iddr", Sort::Base, NameScope::Public)
            .unwrap();
        frame.restrict(pnym);
        let drcred = plan.tab.lookup_symbol("drcred").unwrap();
        frame.extend(
            Term::app(drcred, vec![Term::Name(pnym), Term::Name(id)]),
            &mut plan.tab,
        );

        // The credential's id is public and extractable via the destructor,
        // but the credential itself must not be re-buildable.
        let knowledge = Knowledge::saturate(&frame, &plan.tab, &plan.theory);
        for (_, recipe) in knowledge.entries_smallest_first() {
            let has_private = recipe.subterms().iter().any(|t| match t {
                Term::App(f, _) => plan.tab.symbol(*f).visibility == Visibility::Private,
                _ => false,
            });
            assert!(!has_private, "recipe {recipe:?} uses a private symbol");
        }
        let goal = Term::app(drcred, vec![Term::Name(pnym), Term::Name(id)]);
        let recipe = derivable(&frame, &goal, 4, &plan.tab, &plan.theory).unwrap();
        assert!(matches!(recipe, Term::Var(_)), "only the handle denotes it");
    }
}
