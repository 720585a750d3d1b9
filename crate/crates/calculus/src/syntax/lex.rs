//! Tokenizer for `.spv` files.
//!
//! Identifiers may contain `-` and `'` after the first character
//! (`Vfy-sign`, `vc3'`), `#` starts a line comment, and `==>` is a single
//! token (checked before `=`).

use super::ast::Span;
use std::fmt;
use thiserror::Error;

/// A lexical token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(usize),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Bang,
    Pipe,
    Colon,
    Slash,
    Eq,
    Implies,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Bang => write!(f, "`!`"),
            Tok::Pipe => write!(f, "`|`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Implies => write!(f, "`==>`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

/// Lexical error: an unexpected character.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: unexpected character `{ch}`")]
pub struct LexError {
    pub span: Span,
    pub ch: char,
}

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '\''
}

/// Tokenize `src`, returning tokens with their source positions.
/// The result always ends with a [`Tok::Eof`] entry.
pub fn lex(src: &str) -> Result<Vec<(Tok, Span)>, LexError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let span = Span::new(line, col);
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            '(' => {
                bump!();
                out.push((Tok::LParen, span));
            }
            ')' => {
                bump!();
                out.push((Tok::RParen, span));
            }
            '[' => {
                bump!();
                out.push((Tok::LBracket, span));
            }
            ']' => {
                bump!();
                out.push((Tok::RBracket, span));
            }
            ',' => {
                bump!();
                out.push((Tok::Comma, span));
            }
            '.' => {
                bump!();
                out.push((Tok::Dot, span));
            }
            '!' => {
                bump!();
                out.push((Tok::Bang, span));
            }
            '|' => {
                bump!();
                out.push((Tok::Pipe, span));
            }
            ':' => {
                bump!();
                out.push((Tok::Colon, span));
            }
            '/' => {
                bump!();
                out.push((Tok::Slash, span));
            }
            '=' => {
                bump!();
                // `==>` is one token; a single `=` stands alone.
                if chars.peek() == Some(&'=') {
                    bump!();
                    match chars.peek() {
                        Some(&'>') => {
                            bump!();
                            out.push((Tok::Implies, span));
                        }
                        other => {
                            let ch = other.copied().unwrap_or('=');
                            return Err(LexError {
                                span: Span::new(line, col),
                                ch,
                            });
                        }
                    }
                } else {
                    out.push((Tok::Eq, span));
                }
            }
            c if c.is_ascii_digit() => {
                let mut n: usize = 0;
                while let Some(&c) = chars.peek() {
                    if let Some(d) = c.to_digit(10) {
                        n = n * 10 + d as usize;
                        bump!();
                    } else {
                        break;
                    }
                }
                out.push((Tok::Int(n), span));
            }
            c if ident_start(c) => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if ident_continue(c) {
                        s.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                out.push((Tok::Ident(s), span));
            }
            other => {
                return Err(LexError { span, ch: other });
            }
        }
    }
    out.push((Tok::Eof, Span::new(line, col)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        lex(src).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn idents_keep_dashes_and_primes() {
        assert_eq!(
            toks("Vfy-zk_Authdr vc3'"),
            vec![
                Tok::Ident("Vfy-zk_Authdr".into()),
                Tok::Ident("vc3'".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn implies_lexes_before_eq() {
        assert_eq!(
            toks("x ==> y = z"),
            vec![
                Tok::Ident("x".into()),
                Tok::Implies,
                Tok::Ident("y".into()),
                Tok::Eq,
                Tok::Ident("z".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_run_to_end_of_line() {
        assert_eq!(
            toks("a # rest (ignored)\nb"),
            vec![Tok::Ident("a".into()), Tok::Ident("b".into()), Tok::Eof]
        );
    }

    #[test]
    fn spans_track_lines_and_columns() {
        // Span equality is intentionally vacuous, so compare fields.
        let ts = lex("ab\n  cd").unwrap();
        assert_eq!((ts[0].1.line, ts[0].1.col), (1, 1));
        assert_eq!((ts[1].1.line, ts[1].1.col), (2, 3));
    }

    #[test]
    fn stray_character_is_an_error() {
        let err = lex("a $ b").unwrap_err();
        assert_eq!(err.ch, '$');
        assert_eq!(err.span.col, 3);
    }
}
