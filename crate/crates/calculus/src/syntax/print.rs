//! Pretty-printer for the surface AST. `parse(print(f)) == f` structurally
//! (spans are not compared), which the parser tests rely on.

use super::ast::*;
use std::fmt::Write;

/// Render a whole file, one declaration per line.
pub fn print(file: &SpecFile) -> String {
    let mut out = String::new();
    for d in &file.decls {
        print_decl(&mut out, d);
        out.push('\n');
    }
    out
}

fn print_decl(out: &mut String, d: &SDecl) {
    match d {
        SDecl::Fun {
            name,
            arity,
            private,
            ..
        } => {
            if *private {
                out.push_str("private ");
            }
            let _ = write!(out, "fun {name}/{arity}.");
        }
        SDecl::Reduc { lhs, rhs, .. } => {
            out.push_str("reduc ");
            print_term(out, lhs);
            out.push_str(" = ");
            print_term(out, rhs);
            out.push('.');
        }
        SDecl::Equation { lhs, rhs, .. } => {
            out.push_str("equation ");
            print_term(out, lhs);
            out.push_str(" = ");
            print_term(out, rhs);
            out.push('.');
        }
        SDecl::Free { names, private, .. } => {
            if *private {
                out.push_str("private ");
            }
            let _ = write!(out, "free {}.", names.join(", "));
        }
        SDecl::Channel { names, .. } => {
            let _ = write!(out, "channel {}.", names.join(", "));
        }
        SDecl::Event { name, arity, .. } => {
            let _ = write!(out, "event {name}/{arity}.");
        }
        SDecl::LetProc { name, body, .. } => {
            let _ = write!(out, "let {name} = ");
            print_proc(out, body);
        }
        SDecl::Main { body, .. } => {
            out.push_str("process ");
            print_proc(out, body);
        }
        SDecl::Query { query, .. } => {
            out.push_str("query ");
            match query {
                SQuery::Secrecy(t) => {
                    out.push_str("attacker: ");
                    print_term(out, t);
                }
                SQuery::Correspondence {
                    injective,
                    end_name,
                    end_args,
                    start_name,
                    start_args,
                } => {
                    let marker = if *injective { "evinj" } else { "ev" };
                    let _ = write!(
                        out,
                        "{marker}: {end_name}({}) ==> {marker}: {start_name}({})",
                        end_args.join(", "),
                        start_args.join(", ")
                    );
                }
                SQuery::Equivalence => out.push_str("equivalence"),
            }
            out.push('.');
        }
    }
}

pub fn print_term(out: &mut String, t: &STerm) {
    match t {
        STerm::Ident(s, _) => out.push_str(s),
        STerm::Call(f, args, _) => {
            out.push_str(f);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_term(out, a);
            }
            out.push(')');
        }
        STerm::Tuple(items, _) => {
            out.push('(');
            for (i, a) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_term(out, a);
            }
            out.push(')');
        }
        STerm::Choice(l, r, _) => {
            out.push_str("choice[");
            print_term(out, l);
            out.push_str(", ");
            print_term(out, r);
            out.push(']');
        }
    }
}

fn print_pattern(out: &mut String, p: &SPattern) {
    match p {
        SPattern::Var(x, None, _) => out.push_str(x),
        SPattern::Var(x, Some(sort), _) => {
            let _ = write!(out, "{x}: {sort}");
        }
        SPattern::Eq(t, _) => {
            out.push('=');
            print_term(out, t);
        }
        SPattern::Tuple(items, _) => {
            out.push('(');
            for (i, q) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_pattern(out, q);
            }
            out.push(')');
        }
    }
}

/// Print at parallel-composition level (no parentheses around `|`).
fn print_proc(out: &mut String, p: &SProc) {
    match p {
        SProc::Par(l, r) => {
            print_proc(out, l);
            out.push_str(" | ");
            print_seq(out, r);
        }
        _ => print_seq(out, p),
    }
}

/// Print at sequential level: parallel compositions get parentheses.
fn print_seq(out: &mut String, p: &SProc) {
    match p {
        SProc::Nil(_) => out.push('0'),
        SProc::Call(name, _) => out.push_str(name),
        SProc::Par(..) => {
            out.push('(');
            print_proc(out, p);
            out.push(')');
        }
        SProc::Repl(body, _) => {
            out.push('!');
            print_seq(out, body);
        }
        SProc::New(n, sort, body, _) => {
            match sort {
                Some(s) => {
                    let _ = write!(out, "new {n}: {s}.");
                }
                None => {
                    let _ = write!(out, "new {n}.");
                }
            }
            out.push(' ');
            print_seq(out, body);
        }
        SProc::Out(ch, msg, k, _) => {
            out.push_str("out(");
            print_term(out, ch);
            out.push_str(", ");
            print_term(out, msg);
            out.push(')');
            print_cont(out, k);
        }
        SProc::In(ch, pat, k, _) => {
            out.push_str("in(");
            print_term(out, ch);
            out.push_str(", ");
            print_pattern(out, pat);
            out.push(')');
            print_cont(out, k);
        }
        SProc::Let(pat, rhs, body, els, _) => {
            out.push_str("let ");
            print_pattern(out, pat);
            out.push_str(" = ");
            print_term(out, rhs);
            out.push_str(" in ");
            print_branch(out, body, els.is_some());
            if let Some(e) = els {
                out.push_str(" else ");
                print_seq(out, e);
            }
        }
        SProc::If(lhs, rhs, then, els, _) => {
            out.push_str("if ");
            print_term(out, lhs);
            out.push_str(" = ");
            print_term(out, rhs);
            out.push_str(" then ");
            print_branch(out, then, els.is_some());
            if let Some(e) = els {
                out.push_str(" else ");
                print_seq(out, e);
            }
        }
        SProc::Event(name, args, k, _) => {
            out.push_str("event ");
            out.push_str(name);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    print_term(out, a);
                }
                out.push(')');
            }
            print_cont(out, k);
        }
    }
}

/// Print a then/in branch. When an `else` follows, the branch is always
/// parenthesized so that a dangling `if`/`let` inside it cannot capture the
/// `else` on reparse.
fn print_branch(out: &mut String, p: &SProc, else_follows: bool) {
    if else_follows {
        out.push('(');
        print_proc(out, p);
        out.push(')');
    } else {
        print_seq(out, p);
    }
}

fn print_cont(out: &mut String, k: &SProc) {
    if !matches!(k, SProc::Nil(_)) {
        out.push_str(". ");
        print_seq(out, k);
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse::parse;
    use super::*;

    fn roundtrip(src: &str) {
        let first = parse(src).unwrap();
        let printed = print(&first);
        let second = parse(&printed).unwrap_or_else(|e| panic!("reparse failed: {e}\n{printed}"));
        assert_eq!(first, second, "printed form: {printed}");
    }

    #[test]
    fn declarations_roundtrip() {
        roundtrip(
            "fun pk/1.\nprivate fun drcred/2.\nreduc open(commit(x,y),y) = x.\n\
             equation key(host(x)) = x.\nfree a, b.\nprivate free sk.\nchannel ch.\nevent EndDr/2.",
        );
    }

    #[test]
    fn processes_roundtrip() {
        roundtrip(
            "channel ch.\nfree a, e, d.\nevent Seen/1.\n\
             let R = !in(ch, (x, =a)). event Seen(x). out(ch, choice[e, d])\n\
             process new k. new c: channel. (R | out(c, a) | if a = a then R else 0)",
        );
    }

    #[test]
    fn dangling_else_stays_attached_after_printing() {
        // The inner `if` has no else; the outer `let` does. A naive printer
        // would let the inner `if` capture the `else` on reparse.
        roundtrip(
            "channel ch.\nfree a, b.\n\
             process let x = a in if a = b then out(ch, a) else out(ch, b)",
        );
        roundtrip(
            "channel ch.\nfree a, b.\n\
             process let x = a in (if a = b then out(ch, a)) else out(ch, b)",
        );
    }

    #[test]
    fn queries_roundtrip() {
        roundtrip(
            "free Sss.\nevent EndDr/2.\nevent StartPt/2.\n\
             query attacker: Sss.\nquery ev: EndDr(x, y) ==> ev: StartPt(x, y).\n\
             query evinj: EndDr(x, y) ==> evinj: StartPt(x, y).\nquery equivalence.",
        );
    }
}
