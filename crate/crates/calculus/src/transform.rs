//! The two coercion-related process transformations used by the privacy
//! definitions: revealing all secrets on a channel, and hiding all outputs
//! on a channel.

use crate::process::{Pattern, Process};
use crate::sig::{NameId, Sort, Symtab};
use crate::term::Term;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TransformError {
    #[error("channel {0} already occurs in the process")]
    ChannelNotFresh(String),
}

/// `P^chc`: the process that forwards all of P's secrets to the adversary.
/// Every base-sort restriction is followed by an output of the fresh name on
/// `chc`, and every base-sort input forwards the received value on `chc`.
/// Channel-sort restrictions and inputs are left alone.
pub fn reveal_on_channel(
    p: &Process,
    chc: NameId,
    tab: &mut Symtab,
) -> Result<Process, TransformError> {
    let mut bound = Vec::new();
    p.bound_names(&mut bound);
    if bound.contains(&chc) || p.used_names().contains(&chc) {
        return Err(TransformError::ChannelNotFresh(tab.name_display(chc)));
    }
    Ok(reveal(p, chc, tab))
}

fn reveal(p: &Process, chc: NameId, tab: &mut Symtab) -> Process {
    let chc_term = Term::Name(chc);
    match p {
        Process::Nil => Process::Nil,
        Process::Par(l, r) => Process::par(reveal(l, chc, tab), reveal(r, chc, tab)),
        Process::Repl(id, q) => Process::Repl(*id, Box::new(reveal(q, chc, tab))),
        Process::New(n, q) => {
            let body = reveal(q, chc, tab);
            if tab.name(*n).sort == Sort::Base {
                Process::New(
                    *n,
                    Box::new(Process::output(chc_term, Term::Name(*n), body)),
                )
            } else {
                Process::New(*n, Box::new(body))
            }
        }
        Process::In(c, pat, q) => {
            let body = reveal(q, chc, tab);
            match pat {
                // A single channel-sorted binder is not forwarded.
                Pattern::Var(v) if tab.var_sort(*v) == Sort::Channel => {
                    Process::input(c.clone(), pat.clone(), body)
                }
                // A single base binder forwards itself directly.
                Pattern::Var(v) => Process::input(
                    c.clone(),
                    pat.clone(),
                    Process::output(chc_term, Term::Var(*v), body),
                ),
                // Structured patterns: bind the whole message to a fresh
                // variable, forward it, then destructure as before.
                _ => {
                    let w = tab.fresh_var("coerced");
                    Process::input(
                        c.clone(),
                        Pattern::Var(w),
                        Process::output(
                            chc_term,
                            Term::Var(w),
                            Process::let_in(
                                pat.clone(),
                                Term::Var(w),
                                body,
                                Process::Nil,
                            ),
                        ),
                    )
                }
            }
        }
        Process::Out(c, m, q) => Process::output(c.clone(), m.clone(), reveal(q, chc, tab)),
        Process::Let(pat, rhs, t, e) => Process::let_in(
            pat.clone(),
            rhs.clone(),
            reveal(t, chc, tab),
            reveal(e, chc, tab),
        ),
        Process::If(m, n, t, e) => Process::if_eq(
            m.clone(),
            n.clone(),
            reveal(t, chc, tab),
            reveal(e, chc, tab),
        ),
        Process::Event(l, args, q) => Process::event(*l, args.clone(), reveal(q, chc, tab)),
    }
}

/// `P^{\out chc ·}` = ν chc.(P | !in(chc, x)): all outputs of P on `chc`
/// become invisible, consumed by the sink replica.
pub fn hide_outputs(p: &Process, chc: NameId, tab: &mut Symtab) -> Process {
    let x = tab.fresh_var("sink");
    Process::New(
        chc,
        Box::new(Process::par(
            p.clone(),
            Process::repl(Process::input(
                Term::Name(chc),
                Pattern::Var(x),
                Process::Nil,
            )),
        )),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sig::NameScope;

    #[test]
    fn restriction_of_base_name_is_revealed() {
        let mut tab = Symtab::new();
        let chc = tab
            .declare_name("chc", Sort::Channel, NameScope::Public)
            .unwrap();
        let n = tab.fresh_name("n", Sort::Base);
        let p = Process::new_name(n, Process::Nil);
        let q = reveal_on_channel(&p, chc, &mut tab).unwrap();
        assert_eq!(
            q,
            Process::New(
                n,
                Box::new(Process::output(
                    Term::Name(chc),
                    Term::Name(n),
                    Process::Nil
                ))
            )
        );
    }

    #[test]
    fn nil_and_channel_restrictions_unchanged() {
        let mut tab = Symtab::new();
        let chc = tab
            .declare_name("chc", Sort::Channel, NameScope::Public)
            .unwrap();
        assert_eq!(
            reveal_on_channel(&Process::Nil, chc, &mut tab).unwrap(),
            Process::Nil
        );
        let c2 = tab.fresh_name("c2", Sort::Channel);
        let p = Process::new_name(c2, Process::Nil);
        assert_eq!(reveal_on_channel(&p, chc, &mut tab).unwrap(), p);
    }

    #[test]
    fn channel_sorted_input_not_forwarded() {
        let mut tab = Symtab::new();
        let chc = tab
            .declare_name("chc", Sort::Channel, NameScope::Public)
            .unwrap();
        let v = tab
            .declare_name("v", Sort::Channel, NameScope::Public)
            .unwrap();
        let x = tab.fresh_var("x");
        tab.set_var_sort(x, Sort::Channel);
        let p = Process::input(Term::Name(v), Pattern::Var(x), Process::Nil);
        assert_eq!(reveal_on_channel(&p, chc, &mut tab).unwrap(), p);
    }

    #[test]
    fn base_input_forwards_received_value() {
        let mut tab = Symtab::new();
        let chc = tab
            .declare_name("chc", Sort::Channel, NameScope::Public)
            .unwrap();
        let v = tab
            .declare_name("v", Sort::Channel, NameScope::Public)
            .unwrap();
        let x = tab.fresh_var("x");
        let p = Process::input(Term::Name(v), Pattern::Var(x), Process::Nil);
        let q = reveal_on_channel(&p, chc, &mut tab).unwrap();
        assert_eq!(
            q,
            Process::input(
                Term::Name(v),
                Pattern::Var(x),
                Process::output(Term::Name(chc), Term::Var(x), Process::Nil)
            )
        );
    }

    #[test]
    fn reveal_is_homomorphic_over_par() {
        let mut tab = Symtab::new();
        let chc = tab
            .declare_name("chc", Sort::Channel, NameScope::Public)
            .unwrap();
        let n = tab.fresh_name("n", Sort::Base);
        let m = tab.fresh_name("m", Sort::Base);
        let p1 = Process::new_name(n, Process::Nil);
        let p2 = Process::new_name(m, Process::Nil);
        let whole = reveal_on_channel(&Process::par(p1.clone(), p2.clone()), chc, &mut tab)
            .unwrap();
        let parts = Process::par(
            reveal_on_channel(&p1, chc, &mut tab).unwrap(),
            reveal_on_channel(&p2, chc, &mut tab).unwrap(),
        );
        assert_eq!(whole, parts);
    }

    #[test]
    fn freshness_violation_detected() {
        let mut tab = Symtab::new();
        let chc = tab
            .declare_name("chc", Sort::Channel, NameScope::Public)
            .unwrap();
        let p = Process::output(Term::Name(chc), Term::Name(chc), Process::Nil);
        assert!(matches!(
            reveal_on_channel(&p, chc, &mut tab),
            Err(TransformError::ChannelNotFresh(_))
        ));
    }

    #[test]
    fn hide_outputs_has_the_definitional_shape() {
        let mut tab = Symtab::new();
        let chc = tab.fresh_name("chc", Sort::Channel);
        let p = Process::Nil;
        let h = hide_outputs(&p, chc, &mut tab);
        match h {
            Process::New(n, body) => {
                assert_eq!(n, chc);
                match *body {
                    Process::Par(l, r) => {
                        assert_eq!(*l, Process::Nil);
                        assert!(matches!(*r, Process::Repl(_, _)));
                    }
                    _ => panic!("expected parallel composition under the restriction"),
                }
            }
            _ => panic!("expected a restriction at the root"),
        }
    }
}
