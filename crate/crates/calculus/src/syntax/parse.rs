//! Recursive-descent parser for `.spv` files.
//!
//! Declarations (`fun`, `reduc`, `equation`, `free`, `channel`, `event`,
//! `query`) end with `.`; named-process definitions (`let Name = P`) and the
//! main process (`process P`) end where their process body ends. Inside a
//! process, a sequential continuation is introduced by `.`, so a keyword
//! following an action without a dot starts the next declaration.

use super::ast::*;
use super::lex::{lex, LexError, Tok};
use thiserror::Error;

/// Parse failure: either a lexical error or an unexpected token with the
/// set of constructs that would have been accepted at that point.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("{span}: expected {}, found {found}", expected.join(" or "))]
    Unexpected {
        span: Span,
        expected: Vec<String>,
        found: String,
    },
}

/// Words with fixed syntactic roles; they cannot be used as identifiers.
/// (`attacker`, `ev`, `evinj`, and `equivalence` are contextual: they are
/// only special immediately after `query`.)
const KEYWORDS: &[&str] = &[
    "fun", "private", "reduc", "equation", "free", "channel", "event", "let", "process", "query",
    "new", "out", "in", "if", "then", "else", "choice",
];

/// Parse a complete `.spv` source text.
pub fn parse(src: &str) -> Result<SpecFile, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    p.file()
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    /// True when the current token is the identifier `kw`.
    fn at_word(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_word(&mut self, kw: &str) -> bool {
        if self.at_word(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError::Unexpected {
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        })
    }

    fn expect(&mut self, t: Tok) -> Result<Span, ParseError> {
        if self.peek() == &t {
            let s = self.span();
            self.bump();
            Ok(s)
        } else {
            let shown = t.to_string();
            self.fail(&[shown.as_str()])
        }
    }

    fn expect_word(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_word(kw) {
            Ok(())
        } else {
            let shown = format!("`{kw}`");
            self.fail(&[shown.as_str()])
        }
    }

    /// Expect a non-keyword identifier.
    fn ident(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                let sp = self.span();
                self.bump();
                Ok((s, sp))
            }
            _ => self.fail(&["identifier"]),
        }
    }

    /// A sort name in an ascription position. `channel` is a keyword, so it
    /// needs its own path.
    fn sort_ident(&mut self) -> Result<String, ParseError> {
        if self.eat_word("channel") {
            return Ok("channel".to_string());
        }
        Ok(self.ident()?.0)
    }

    fn ident_list(&mut self) -> Result<Vec<String>, ParseError> {
        let mut names = vec![self.ident()?.0];
        while self.eat(&Tok::Comma) {
            names.push(self.ident()?.0);
        }
        Ok(names)
    }

    fn int(&mut self) -> Result<usize, ParseError> {
        match *self.peek() {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            _ => self.fail(&["integer"]),
        }
    }

    fn file(&mut self) -> Result<SpecFile, ParseError> {
        let mut decls = Vec::new();
        while self.peek() != &Tok::Eof {
            decls.push(self.decl()?);
        }
        Ok(SpecFile { decls })
    }

    fn decl(&mut self) -> Result<SDecl, ParseError> {
        let span = self.span();
        if self.eat_word("fun") {
            let (name, _) = self.ident()?;
            self.expect(Tok::Slash)?;
            let arity = self.int()?;
            self.expect(Tok::Dot)?;
            Ok(SDecl::Fun {
                name,
                arity,
                private: false,
                span,
            })
        } else if self.eat_word("private") {
            if self.eat_word("fun") {
                let (name, _) = self.ident()?;
                self.expect(Tok::Slash)?;
                let arity = self.int()?;
                self.expect(Tok::Dot)?;
                Ok(SDecl::Fun {
                    name,
                    arity,
                    private: true,
                    span,
                })
            } else if self.eat_word("free") {
                let names = self.ident_list()?;
                self.expect(Tok::Dot)?;
                Ok(SDecl::Free {
                    names,
                    private: true,
                    span,
                })
            } else {
                self.fail(&["`fun`", "`free`"])
            }
        } else if self.eat_word("reduc") {
            let lhs = self.term()?;
            self.expect(Tok::Eq)?;
            let rhs = self.term()?;
            self.expect(Tok::Dot)?;
            Ok(SDecl::Reduc { lhs, rhs, span })
        } else if self.eat_word("equation") {
            let lhs = self.term()?;
            self.expect(Tok::Eq)?;
            let rhs = self.term()?;
            self.expect(Tok::Dot)?;
            Ok(SDecl::Equation { lhs, rhs, span })
        } else if self.eat_word("free") {
            let names = self.ident_list()?;
            self.expect(Tok::Dot)?;
            Ok(SDecl::Free {
                names,
                private: false,
                span,
            })
        } else if self.eat_word("channel") {
            let names = self.ident_list()?;
            self.expect(Tok::Dot)?;
            Ok(SDecl::Channel { names, span })
        } else if self.eat_word("event") {
            let (name, _) = self.ident()?;
            self.expect(Tok::Slash)?;
            let arity = self.int()?;
            self.expect(Tok::Dot)?;
            Ok(SDecl::Event { name, arity, span })
        } else if self.eat_word("let") {
            let (name, _) = self.ident()?;
            self.expect(Tok::Eq)?;
            let body = self.process()?;
            Ok(SDecl::LetProc { name, body, span })
        } else if self.eat_word("process") {
            let body = self.process()?;
            Ok(SDecl::Main { body, span })
        } else if self.eat_word("query") {
            let query = self.query()?;
            self.expect(Tok::Dot)?;
            Ok(SDecl::Query { query, span })
        } else {
            self.fail(&["declaration"])
        }
    }

    fn query(&mut self) -> Result<SQuery, ParseError> {
        if self.eat_word("attacker") {
            self.expect(Tok::Colon)?;
            Ok(SQuery::Secrecy(self.term()?))
        } else if self.at_word("ev") || self.at_word("evinj") {
            let injective = self.eat_word("evinj");
            if !injective {
                self.expect_word("ev")?;
            }
            self.expect(Tok::Colon)?;
            let (end_name, end_args) = self.event_atom()?;
            self.expect(Tok::Implies)?;
            if !self.eat_word("evinj") {
                self.expect_word("ev")?;
            }
            self.expect(Tok::Colon)?;
            let (start_name, start_args) = self.event_atom()?;
            Ok(SQuery::Correspondence {
                injective,
                end_name,
                end_args,
                start_name,
                start_args,
            })
        } else if self.eat_word("equivalence") {
            Ok(SQuery::Equivalence)
        } else {
            self.fail(&["`attacker`", "`ev`", "`evinj`", "`equivalence`"])
        }
    }

    fn event_atom(&mut self) -> Result<(String, Vec<String>), ParseError> {
        let (name, _) = self.ident()?;
        self.expect(Tok::LParen)?;
        let args = if self.peek() == &Tok::RParen {
            Vec::new()
        } else {
            self.ident_list()?
        };
        self.expect(Tok::RParen)?;
        Ok((name, args))
    }

    fn process(&mut self) -> Result<SProc, ParseError> {
        let mut p = self.seq()?;
        while self.eat(&Tok::Pipe) {
            let q = self.seq()?;
            p = SProc::Par(Box::new(p), Box::new(q));
        }
        Ok(p)
    }

    fn seq(&mut self) -> Result<SProc, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(0) => {
                self.bump();
                Ok(SProc::Nil(span))
            }
            Tok::Bang => {
                self.bump();
                Ok(SProc::Repl(Box::new(self.seq()?), span))
            }
            Tok::LParen => {
                self.bump();
                let p = self.process()?;
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            Tok::Ident(word) => match word.as_str() {
                "new" => {
                    self.bump();
                    let (name, _) = self.ident()?;
                    let sort = if self.eat(&Tok::Colon) {
                        Some(self.sort_ident()?)
                    } else {
                        None
                    };
                    self.expect(Tok::Dot)?;
                    Ok(SProc::New(name, sort, Box::new(self.seq()?), span))
                }
                "out" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let ch = self.term()?;
                    self.expect(Tok::Comma)?;
                    let msg = self.term()?;
                    self.expect(Tok::RParen)?;
                    let k = self.cont()?;
                    Ok(SProc::Out(ch, msg, Box::new(k), span))
                }
                "in" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let ch = self.term()?;
                    self.expect(Tok::Comma)?;
                    let pat = self.pattern()?;
                    self.expect(Tok::RParen)?;
                    let k = self.cont()?;
                    Ok(SProc::In(ch, pat, Box::new(k), span))
                }
                "if" => {
                    self.bump();
                    let lhs = self.term()?;
                    self.expect(Tok::Eq)?;
                    let rhs = self.term()?;
                    self.expect_word("then")?;
                    let then = self.seq()?;
                    let els = if self.eat_word("else") {
                        Some(Box::new(self.seq()?))
                    } else {
                        None
                    };
                    Ok(SProc::If(lhs, rhs, Box::new(then), els, span))
                }
                "let" => {
                    self.bump();
                    let pat = self.pattern()?;
                    self.expect(Tok::Eq)?;
                    let rhs = self.term()?;
                    self.expect_word("in")?;
                    let body = self.seq()?;
                    let els = if self.eat_word("else") {
                        Some(Box::new(self.seq()?))
                    } else {
                        None
                    };
                    Ok(SProc::Let(pat, rhs, Box::new(body), els, span))
                }
                "event" => {
                    self.bump();
                    let (name, _) = self.ident()?;
                    let args = if self.eat(&Tok::LParen) {
                        let args = if self.peek() == &Tok::RParen {
                            Vec::new()
                        } else {
                            self.term_list()?
                        };
                        self.expect(Tok::RParen)?;
                        args
                    } else {
                        Vec::new()
                    };
                    let k = self.cont()?;
                    Ok(SProc::Event(name, args, Box::new(k), span))
                }
                w if !KEYWORDS.contains(&w) => {
                    self.bump();
                    Ok(SProc::Call(word, span))
                }
                _ => self.fail(&["process"]),
            },
            _ => self.fail(&["process"]),
        }
    }

    /// A sequential continuation: `.P` or nothing.
    fn cont(&mut self) -> Result<SProc, ParseError> {
        if self.eat(&Tok::Dot) {
            self.seq()
        } else {
            Ok(SProc::Nil(self.span()))
        }
    }

    fn term(&mut self) -> Result<STerm, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(word) if word == "choice" => {
                self.bump();
                self.expect(Tok::LBracket)?;
                let l = self.term()?;
                self.expect(Tok::Comma)?;
                let r = self.term()?;
                self.expect(Tok::RBracket)?;
                Ok(STerm::Choice(Box::new(l), Box::new(r), span))
            }
            Tok::Ident(word) if !KEYWORDS.contains(&word.as_str()) => {
                self.bump();
                if self.eat(&Tok::LParen) {
                    let args = if self.peek() == &Tok::RParen {
                        Vec::new()
                    } else {
                        self.term_list()?
                    };
                    self.expect(Tok::RParen)?;
                    Ok(STerm::Call(word, args, span))
                } else {
                    Ok(STerm::Ident(word, span))
                }
            }
            Tok::LParen => {
                self.bump();
                let mut items = vec![self.term()?];
                while self.eat(&Tok::Comma) {
                    items.push(self.term()?);
                }
                self.expect(Tok::RParen)?;
                if items.len() == 1 {
                    Ok(items.pop().unwrap())
                } else {
                    Ok(STerm::Tuple(items, span))
                }
            }
            _ => self.fail(&["term"]),
        }
    }

    fn term_list(&mut self) -> Result<Vec<STerm>, ParseError> {
        let mut ts = vec![self.term()?];
        while self.eat(&Tok::Comma) {
            ts.push(self.term()?);
        }
        Ok(ts)
    }

    fn pattern(&mut self) -> Result<SPattern, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Eq => {
                self.bump();
                Ok(SPattern::Eq(self.term()?, span))
            }
            Tok::Ident(word) if !KEYWORDS.contains(&word.as_str()) => {
                self.bump();
                let sort = if self.eat(&Tok::Colon) {
                    Some(self.sort_ident()?)
                } else {
                    None
                };
                Ok(SPattern::Var(word, sort, span))
            }
            Tok::LParen => {
                self.bump();
                let mut items = vec![self.pattern()?];
                while self.eat(&Tok::Comma) {
                    items.push(self.pattern()?);
                }
                self.expect(Tok::RParen)?;
                if items.len() == 1 {
                    Ok(items.pop().unwrap())
                } else {
                    Ok(SPattern::Tuple(items, span))
                }
            }
            _ => self.fail(&["pattern"]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_parses() {
        assert_eq!(parse("").unwrap(), SpecFile::default());
        assert_eq!(parse("# only a comment\n").unwrap(), SpecFile::default());
    }

    #[test]
    fn commitment_reduc_parses_to_one_rule() {
        let f = parse("reduc open(commit(x,y),y) = x.").unwrap();
        assert_eq!(f.decls.len(), 1);
        match &f.decls[0] {
            SDecl::Reduc { lhs, rhs, .. } => {
                match lhs {
                    STerm::Call(name, args, _) => {
                        assert_eq!(name, "open");
                        assert_eq!(args.len(), 2);
                    }
                    other => panic!("unexpected lhs {other:?}"),
                }
                assert!(matches!(rhs, STerm::Ident(x, _) if x == "x"));
            }
            other => panic!("unexpected decl {other:?}"),
        }
    }

    #[test]
    fn process_actions_chain_with_dots() {
        let f = parse(
            "channel ch.\nfree a.\nprocess new k. out(ch, a). in(ch, (x, =a)). if x = a then 0 else out(ch, x)",
        )
        .unwrap();
        let main = f
            .decls
            .iter()
            .find_map(|d| match d {
                SDecl::Main { body, .. } => Some(body),
                _ => None,
            })
            .unwrap();
        // new k . out . in . if
        match main {
            SProc::New(n, None, k, _) => {
                assert_eq!(n, "k");
                assert!(matches!(**k, SProc::Out(..)));
            }
            other => panic!("unexpected main {other:?}"),
        }
    }

    #[test]
    fn named_process_definition_ends_at_next_declaration() {
        let f = parse("channel ch.\nlet R = out(ch, x)\nquery equivalence.").unwrap();
        assert_eq!(f.decls.len(), 3);
        assert!(matches!(&f.decls[1], SDecl::LetProc { name, .. } if name == "R"));
        assert!(matches!(
            &f.decls[2],
            SDecl::Query {
                query: SQuery::Equivalence,
                ..
            }
        ));
    }

    #[test]
    fn correspondence_query_parses_both_markers() {
        let f = parse("query evinj: EndDr(x, y) ==> ev: StartPt(x, y).").unwrap();
        match &f.decls[0] {
            SDecl::Query {
                query:
                    SQuery::Correspondence {
                        injective,
                        end_name,
                        end_args,
                        start_name,
                        start_args,
                    },
                ..
            } => {
                assert!(*injective);
                assert_eq!(end_name, "EndDr");
                assert_eq!(start_name, "StartPt");
                assert_eq!(end_args, &["x", "y"]);
                assert_eq!(start_args, &["x", "y"]);
            }
            other => panic!("unexpected decl {other:?}"),
        }
    }

    #[test]
    fn choice_terms_and_parallel_compose() {
        let f = parse("channel ch.\nfree a, b.\nprocess out(ch, choice[a, b]) | !out(ch, a)")
            .unwrap();
        let main = f
            .decls
            .iter()
            .find_map(|d| match d {
                SDecl::Main { body, .. } => Some(body),
                _ => None,
            })
            .unwrap();
        match main {
            SProc::Par(l, r) => {
                assert!(matches!(**l, SProc::Out(_, STerm::Choice(..), _, _)));
                assert!(matches!(**r, SProc::Repl(..)));
            }
            other => panic!("unexpected main {other:?}"),
        }
    }

    #[test]
    fn errors_carry_position_and_expectation() {
        let err = parse("reduc open(commit(x,y),y) = .").unwrap_err();
        match err {
            ParseError::Unexpected {
                span,
                expected,
                found,
            } => {
                assert_eq!(span.line, 1);
                assert!(expected.contains(&"term".to_string()));
                assert_eq!(found, "`.`");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
