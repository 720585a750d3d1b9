//! Rewrite theories: matching, unification, normalization, convergence.
//!
//! `reduc` and `equation` declarations both become oriented rewrite rules.
//! The convergence check (size-decreasing termination plus joinable critical
//! pairs) guards every theory before the engine trusts syntactic equality of
//! normal forms as =_E.

use crate::sig::{SymKind, Symtab, VarId};
use crate::subst::Subst;
use crate::term::Term;
use thiserror::Error;

/// An oriented rewrite rule `lhs -> rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteRule {
    pub lhs: Term,
    pub rhs: Term,
    /// True when the rule came from an `equation` declaration rather than a
    /// `reduc`; equation heads stay constructors.
    pub from_equation: bool,
}

/// A rule set, kept in declaration order for deterministic normalization.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Theory {
    pub rules: Vec<RewriteRule>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RewriteError {
    #[error("rewriting exceeded the step budget ({0} steps); theory is likely non-terminating")]
    FuelExhausted(usize),
}

/// Why a rule set fails the convergence check.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ConvergenceError {
    #[error("rule {index} is not size-decreasing: {detail}")]
    NotSizeDecreasing { index: usize, detail: String },
    #[error("rule {index} has a variable left-hand side")]
    VariableLhs { index: usize },
    #[error("rule {index} invents variables on its right-hand side")]
    FreeRhsVariable { index: usize },
    #[error("critical pair of rules {first} and {second} does not join")]
    CriticalPairNotJoinable {
        first: usize,
        second: usize,
        left: Term,
        right: Term,
    },
}

const NORMALIZE_FUEL: usize = 100_000;

/// Syntactic (non-unifying) match of a pattern with variables against a
/// subject term. Non-linear patterns check repeated variables for equality.
pub fn match_term(pattern: &Term, subject: &Term) -> Option<Subst> {
    let mut s = Subst::new();
    if match_into(pattern, subject, &mut s) {
        Some(s)
    } else {
        None
    }
}

fn match_into(pattern: &Term, subject: &Term, s: &mut Subst) -> bool {
    match (pattern, subject) {
        (Term::Var(v), _) => s.try_bind(*v, subject),
        (Term::Name(a), Term::Name(b)) => a == b,
        (Term::App(f, fa), Term::App(g, ga)) => {
            f == g && fa.len() == ga.len() && fa.iter().zip(ga).all(|(p, t)| match_into(p, t, s))
        }
        _ => false,
    }
}

/// Syntactic unification with occurs check. Used by the convergence check's
/// critical-pair computation and by guard-directed input synthesis.
pub fn unify(a: &Term, b: &Term) -> Option<Subst> {
    let mut s = Subst::new();
    let mut work = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = work.pop() {
        let x = s.apply(&x);
        let y = s.apply(&y);
        match (x, y) {
            (Term::Var(v), t) | (t, Term::Var(v)) => {
                if t == Term::Var(v) {
                    continue;
                }
                let mut vs = Vec::new();
                t.vars(&mut vs);
                if vs.contains(&v) {
                    return None; // occurs check
                }
                let bind = Subst::singleton(v, t);
                s = s.compose(&bind);
            }
            (Term::Name(p), Term::Name(q)) => {
                if p != q {
                    return None;
                }
            }
            (Term::App(f, fa), Term::App(g, ga)) => {
                if f != g || fa.len() != ga.len() {
                    return None;
                }
                work.extend(fa.into_iter().zip(ga));
            }
            _ => return None,
        }
    }
    Some(s)
}

impl Theory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, rule: RewriteRule) {
        self.rules.push(rule);
    }

    /// Adds the projection rules `projK_n(tuple_n(x1..xn)) -> xK` for every
    /// tuple arity in `arities`. Idempotent per arity.
    pub fn add_tuple_projections(
        &mut self,
        tab: &mut Symtab,
        arities: impl IntoIterator<Item = usize>,
    ) {
        for n in arities {
            let tup = tab.tuple(n);
            for pos in 0..n {
                let proj = tab.proj(n, pos);
                let already = self
                    .rules
                    .iter()
                    .any(|r| matches!(&r.lhs, Term::App(f, _) if *f == proj));
                if already {
                    continue;
                }
                let vars: Vec<Term> = (0..n)
                    .map(|i| Term::Var(tab.fresh_var(&format!("t{i}"))))
                    .collect();
                let lhs = Term::app(proj, vec![Term::app(tup, vars.clone())]);
                let rhs = vars[pos].clone();
                self.push(RewriteRule {
                    lhs,
                    rhs,
                    from_equation: false,
                });
            }
        }
    }

    /// Reduces `t` to its unique normal form (innermost, first-matching rule).
    pub fn normalize(&self, t: &Term) -> Result<Term, RewriteError> {
        let mut fuel = NORMALIZE_FUEL;
        self.norm(t, &mut fuel)
    }

    fn norm(&self, t: &Term, fuel: &mut usize) -> Result<Term, RewriteError> {
        match t {
            Term::Name(_) | Term::Var(_) => Ok(t.clone()),
            Term::Choice(l, r) => Ok(Term::choice(self.norm(l, fuel)?, self.norm(r, fuel)?)),
            Term::App(f, args) => {
                let mut normed = Vec::with_capacity(args.len());
                for a in args {
                    normed.push(self.norm(a, fuel)?);
                }
                let current = Term::App(*f, normed);
                if *fuel == 0 {
                    return Err(RewriteError::FuelExhausted(NORMALIZE_FUEL));
                }
                match self.rewrite_root(&current) {
                    Some(next) => {
                        *fuel -= 1;
                        // The contractum may expose fresh redexes anywhere.
                        self.norm(&next, fuel)
                    }
                    None => Ok(current),
                }
            }
        }
    }

    fn rewrite_root(&self, t: &Term) -> Option<Term> {
        for rule in &self.rules {
            if let Some(s) = match_term(&rule.lhs, t) {
                return Some(s.apply(&rule.rhs));
            }
        }
        None
    }

    /// True iff both terms have the same normal form (=_E for ground terms).
    pub fn equal(&self, a: &Term, b: &Term) -> Result<bool, RewriteError> {
        Ok(self.normalize(a)? == self.normalize(b)?)
    }

    /// True if a normalized term still contains a destructor application —
    /// a stuck evaluation, which drives `let`'s else branch.
    pub fn is_stuck(&self, normalized: &Term, tab: &Symtab) -> bool {
        match normalized {
            Term::Name(_) | Term::Var(_) => false,
            Term::App(f, args) => {
                tab.symbol(*f).kind == SymKind::Destructor
                    || args.iter().any(|a| self.is_stuck(a, tab))
            }
            Term::Choice(l, r) => self.is_stuck(l, tab) || self.is_stuck(r, tab),
        }
    }

    /// Validates termination (size-decreasing measure) and local confluence
    /// (all critical pairs join). Together these make normal forms unique.
    pub fn check_convergence(&self) -> Result<(), ConvergenceError> {
        for (index, rule) in self.rules.iter().enumerate() {
            if matches!(rule.lhs, Term::Var(_)) {
                return Err(ConvergenceError::VariableLhs { index });
            }
            let mut lhs_vars = Vec::new();
            rule.lhs.vars(&mut lhs_vars);
            let mut rhs_vars = Vec::new();
            rule.rhs.vars(&mut rhs_vars);
            if rhs_vars.iter().any(|v| !lhs_vars.contains(v)) {
                return Err(ConvergenceError::FreeRhsVariable { index });
            }
            if rule.rhs.size() >= rule.lhs.size() {
                return Err(ConvergenceError::NotSizeDecreasing {
                    index,
                    detail: format!(
                        "rhs size {} >= lhs size {}",
                        rule.rhs.size(),
                        rule.lhs.size()
                    ),
                });
            }
            for v in &rhs_vars {
                if rule.rhs.var_count(*v) > rule.lhs.var_count(*v) {
                    return Err(ConvergenceError::NotSizeDecreasing {
                        index,
                        detail: "a variable occurs more often on the rhs".to_string(),
                    });
                }
            }
        }
        self.check_critical_pairs()
    }

    fn check_critical_pairs(&self) -> Result<(), ConvergenceError> {
        for (i, outer) in self.rules.iter().enumerate() {
            for (j, inner) in self.rules.iter().enumerate() {
                let inner = rename_apart(inner);
                // Overlap `inner.lhs` into every non-variable position of
                // `outer.lhs` (skip the root overlap of a rule with itself:
                // it only yields the trivial pair).
                for (pos, sub) in positions(&outer.lhs) {
                    if matches!(sub, Term::Var(_)) {
                        continue;
                    }
                    if i == j && pos.is_empty() {
                        continue;
                    }
                    if let Some(sigma) = unify(sub, &inner.lhs) {
                        let peak_left = sigma.apply(&outer.rhs);
                        let replaced = replace_at(&outer.lhs, &pos, &inner.rhs);
                        let peak_right = sigma.apply(&replaced);
                        let nl = self.normalize(&peak_left).map_err(|_| {
                            ConvergenceError::CriticalPairNotJoinable {
                                first: i,
                                second: j,
                                left: peak_left.clone(),
                                right: peak_right.clone(),
                            }
                        })?;
                        let nr = self.normalize(&peak_right).map_err(|_| {
                            ConvergenceError::CriticalPairNotJoinable {
                                first: i,
                                second: j,
                                left: peak_left.clone(),
                                right: peak_right.clone(),
                            }
                        })?;
                        if nl != nr {
                            return Err(ConvergenceError::CriticalPairNotJoinable {
                                first: i,
                                second: j,
                                left: nl,
                                right: nr,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// All positions (as index paths) of subterms, paired with the subterm.
fn positions(t: &Term) -> Vec<(Vec<usize>, &Term)> {
    let mut out = Vec::new();
    fn walk<'a>(t: &'a Term, path: Vec<usize>, out: &mut Vec<(Vec<usize>, &'a Term)>) {
        out.push((path.clone(), t));
        if let Term::App(_, args) = t {
            for (i, a) in args.iter().enumerate() {
                let mut p = path.clone();
                p.push(i);
                walk(a, p, out);
            }
        }
    }
    walk(t, Vec::new(), &mut out);
    out
}

fn replace_at(t: &Term, path: &[usize], replacement: &Term) -> Term {
    if path.is_empty() {
        return replacement.clone();
    }
    match t {
        Term::App(f, args) => {
            let mut args = args.clone();
            args[path[0]] = replace_at(&args[path[0]], &path[1..], replacement);
            Term::App(*f, args)
        }
        _ => unreachable!("replacement path must address an application"),
    }
}

/// Shifts a rule's variables into a disjoint range so self-overlaps unify
/// correctly. Rule variables are local, so plain id arithmetic is safe.
fn rename_apart(rule: &RewriteRule) -> RewriteRule {
    const OFFSET: VarId = 1 << 24;
    fn shift(t: &Term) -> Term {
        match t {
            Term::Var(v) => Term::Var(v + OFFSET),
            Term::Name(_) => t.clone(),
            Term::App(f, args) => Term::App(*f, args.iter().map(shift).collect()),
            Term::Choice(l, r) => Term::choice(shift(l), shift(r)),
        }
    }
    RewriteRule {
        lhs: shift(&rule.lhs),
        rhs: shift(&rule.rhs),
        from_equation: rule.from_equation,
    }
}

/// Convenience: mark the head of a `reduc` lhs as a destructor.
pub fn classify_rule_head(tab: &mut Symtab, rule: &RewriteRule) {
    if rule.from_equation {
        return;
    }
    if let Term::App(f, _) = &rule.lhs {
        tab.mark_destructor(*f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sig::{NameScope, Sort, Visibility};

    struct Fix {
        tab: Symtab,
        th: Theory,
    }

    /// Small asymmetric-encryption + key/host theory.
    fn fixture() -> Fix {
        let mut tab = Symtab::new();
        let enc = tab.declare_symbol("enc", 2, Visibility::Public).unwrap();
        let dec = tab.declare_symbol("dec", 2, Visibility::Public).unwrap();
        let pk = tab.declare_symbol("pk", 1, Visibility::Public).unwrap();
        let key = tab.declare_symbol("key", 1, Visibility::Public).unwrap();
        let host = tab.declare_symbol("host", 1, Visibility::Public).unwrap();
        let m = tab.fresh_var("m");
        let sk = tab.fresh_var("sk");
        let x = tab.fresh_var("x");
        let mut th = Theory::new();
        th.push(RewriteRule {
            lhs: Term::app(
                dec,
                vec![
                    Term::app(
                        enc,
                        vec![Term::Var(m), Term::app(pk, vec![Term::Var(sk)])],
                    ),
                    Term::Var(sk),
                ],
            ),
            rhs: Term::Var(m),
            from_equation: false,
        });
        th.push(RewriteRule {
            lhs: Term::app(key, vec![Term::app(host, vec![Term::Var(x)])]),
            rhs: Term::Var(x),
            from_equation: true,
        });
        th.push(RewriteRule {
            lhs: Term::app(host, vec![Term::app(key, vec![Term::Var(x)])]),
            rhs: Term::Var(x),
            from_equation: true,
        });
        tab.mark_destructor(dec);
        Fix { tab, th }
    }

    #[test]
    fn decryption_with_right_key_reduces() {
        let mut f = fixture();
        let enc = f.tab.lookup_symbol("enc").unwrap();
        let dec = f.tab.lookup_symbol("dec").unwrap();
        let pk = f.tab.lookup_symbol("pk").unwrap();
        let m = f
            .tab
            .declare_name("msg", Sort::Base, NameScope::Public)
            .unwrap();
        let sk = f
            .tab
            .declare_name("sk", Sort::Base, NameScope::Restricted)
            .unwrap();
        let cipher = Term::app(
            enc,
            vec![Term::Name(m), Term::app(pk, vec![Term::Name(sk)])],
        );
        let t = Term::app(dec, vec![cipher, Term::Name(sk)]);
        assert_eq!(f.th.normalize(&t).unwrap(), Term::Name(m));
    }

    #[test]
    fn decryption_with_wrong_key_is_stuck() {
        let mut f = fixture();
        let enc = f.tab.lookup_symbol("enc").unwrap();
        let dec = f.tab.lookup_symbol("dec").unwrap();
        let pk = f.tab.lookup_symbol("pk").unwrap();
        let m = f
            .tab
            .declare_name("msg", Sort::Base, NameScope::Public)
            .unwrap();
        let sk = f
            .tab
            .declare_name("sk", Sort::Base, NameScope::Restricted)
            .unwrap();
        let other = f
            .tab
            .declare_name("k2", Sort::Base, NameScope::Restricted)
            .unwrap();
        let cipher = Term::app(
            enc,
            vec![Term::Name(m), Term::app(pk, vec![Term::Name(sk)])],
        );
        let t = Term::app(dec, vec![cipher, Term::Name(other)]);
        let n = f.th.normalize(&t).unwrap();
        assert_eq!(n, t);
        assert!(f.th.is_stuck(&n, &f.tab));
    }

    #[test]
    fn key_host_cancel_confluently() {
        // key(host(key(a))) has two redexes; both orders end at key(a).
        let mut f = fixture();
        let key = f.tab.lookup_symbol("key").unwrap();
        let host = f.tab.lookup_symbol("host").unwrap();
        let a = f
            .tab
            .declare_name("a", Sort::Base, NameScope::Public)
            .unwrap();
        let inner = Term::app(key, vec![Term::Name(a)]);
        let t = Term::app(key, vec![Term::app(host, vec![inner.clone()])]);

        // Oracle: rewrite by hand in both orders.
        // Outer first: key(host(X)) -> X with X=key(a).
        let outer_first = inner.clone();
        // Inner first: host(key(a)) -> a, then key(a) is normal.
        let inner_first = Term::app(key, vec![Term::Name(a)]);
        assert_eq!(outer_first, inner_first);
        assert_eq!(f.th.normalize(&t).unwrap(), inner);
        f.th.check_convergence().unwrap();
    }

    #[test]
    fn looping_theory_rejected() {
        let mut tab = Symtab::new();
        let fs = tab.declare_symbol("f", 1, Visibility::Public).unwrap();
        let gs = tab.declare_symbol("g", 1, Visibility::Public).unwrap();
        let x = tab.fresh_var("x");
        let mut th = Theory::new();
        th.push(RewriteRule {
            lhs: Term::app(fs, vec![Term::Var(x)]),
            rhs: Term::app(gs, vec![Term::Var(x)]),
            from_equation: false,
        });
        th.push(RewriteRule {
            lhs: Term::app(gs, vec![Term::Var(x)]),
            rhs: Term::app(fs, vec![Term::Var(x)]),
            from_equation: false,
        });
        assert!(matches!(
            th.check_convergence(),
            Err(ConvergenceError::NotSizeDecreasing { .. })
        ));
    }

    #[test]
    fn non_linear_match_checks_equality() {
        let f = fixture();
        let dec = f.tab.lookup_symbol("dec").unwrap();
        let enc = f.tab.lookup_symbol("enc").unwrap();
        let pk = f.tab.lookup_symbol("pk").unwrap();
        let rule = &f.th.rules[0];
        // dec(enc(a, pk(b)), c): second sk occurrence differs -> no match.
        let a = Term::Var(100);
        let b = Term::Var(101);
        let c = Term::Var(102);
        let subject = Term::app(
            dec,
            vec![
                Term::app(enc, vec![a, Term::app(pk, vec![b])]),
                c,
            ],
        );
        assert!(match_term(&rule.lhs, &subject).is_none());
    }

    #[test]
    fn unify_occurs_check() {
        let mut tab = Symtab::new();
        let fs = tab.declare_symbol("f", 1, Visibility::Public).unwrap();
        let x = tab.fresh_var("x");
        assert!(unify(&Term::Var(x), &Term::app(fs, vec![Term::Var(x)])).is_none());
    }
}
