//! Surface abstract syntax for `.spv` files, produced by the parser and
//! consumed by the elaborator and pretty-printer.
//!
//! Every node carries a [`Span`]; spans are diagnostic metadata and do not
//! participate in structural equality, so print-then-reparse round trips
//! compare equal with `==`.

use std::fmt;

/// Source position (1-based line and column) of a token or node.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

/// Spans never distinguish two otherwise-identical trees.
impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Surface term: identifiers, applications, tuples, and diff-terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum STerm {
    /// Bare identifier: a name, a variable, or a 0-ary function.
    Ident(String, Span),
    /// Application `f(t1, …, tn)`; `n` may be 0 (`f()`).
    Call(String, Vec<STerm>, Span),
    /// Tuple `(t1, …, tn)` with n ≥ 2; 1-tuples parse as grouping.
    Tuple(Vec<STerm>, Span),
    /// Diff-term `choice[l, r]` selecting `l` on the left side and `r` on the right.
    Choice(Box<STerm>, Box<STerm>, Span),
}

impl STerm {
    pub fn span(&self) -> Span {
        match self {
            STerm::Ident(_, s) | STerm::Call(_, _, s) | STerm::Tuple(_, s) => *s,
            STerm::Choice(_, _, s) => *s,
        }
    }
}

/// Surface pattern for `in` and `let`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SPattern {
    /// Binding occurrence, optionally sort-ascribed: `x` or `x: channel`.
    Var(String, Option<String>, Span),
    /// Equality test `=T` against an already-known term.
    Eq(STerm, Span),
    /// Tuple pattern `(p1, …, pn)`.
    Tuple(Vec<SPattern>, Span),
}

impl SPattern {
    pub fn span(&self) -> Span {
        match self {
            SPattern::Var(_, _, s) | SPattern::Eq(_, s) | SPattern::Tuple(_, s) => *s,
        }
    }
}

/// Surface process. Sequential continuations default to `Nil` when the source
/// omits them (`out(c, a)` with no trailing `.P`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SProc {
    Nil(Span),
    /// Reference to a named process defined earlier with `let Name = P`.
    Call(String, Span),
    Par(Box<SProc>, Box<SProc>),
    Repl(Box<SProc>, Span),
    /// `new n.P` or `new n: channel.P`.
    New(String, Option<String>, Box<SProc>, Span),
    In(STerm, SPattern, Box<SProc>, Span),
    Out(STerm, STerm, Box<SProc>, Span),
    /// `let pat = T in P else Q`; `else` optional.
    Let(SPattern, STerm, Box<SProc>, Option<Box<SProc>>, Span),
    /// `if M = N then P else Q`; `else` optional.
    If(STerm, STerm, Box<SProc>, Option<Box<SProc>>, Span),
    /// `event Label(args).P`; the argument list may be absent (`event Label.P`).
    Event(String, Vec<STerm>, Box<SProc>, Span),
}

impl SProc {
    pub fn span(&self) -> Span {
        match self {
            SProc::Nil(s)
            | SProc::Call(_, s)
            | SProc::Repl(_, s)
            | SProc::New(_, _, _, s)
            | SProc::In(_, _, _, s)
            | SProc::Out(_, _, _, s)
            | SProc::Let(_, _, _, _, s)
            | SProc::If(_, _, _, _, s)
            | SProc::Event(_, _, _, s) => *s,
            SProc::Par(l, _) => l.span(),
        }
    }
}

/// A query as written in the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SQuery {
    /// `query attacker: M.`
    Secrecy(STerm),
    /// `query ev: End(x̃) ==> ev: Start(ỹ).` (`evinj` on the left makes it injective).
    Correspondence {
        injective: bool,
        end_name: String,
        end_args: Vec<String>,
        start_name: String,
        start_args: Vec<String>,
    },
    /// `query equivalence.` — check diff-equivalence of the main bi-process.
    Equivalence,
}

/// A top-level declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SDecl {
    /// `fun f/2.` or `private fun f/2.`
    Fun {
        name: String,
        arity: usize,
        private: bool,
        span: Span,
    },
    /// `reduc lhs = rhs.`
    Reduc { lhs: STerm, rhs: STerm, span: Span },
    /// `equation lhs = rhs.`
    Equation { lhs: STerm, rhs: STerm, span: Span },
    /// `free a, b.` or `private free a, b.`
    Free {
        names: Vec<String>,
        private: bool,
        span: Span,
    },
    /// `channel ch.` — public channel names.
    Channel { names: Vec<String>, span: Span },
    /// `event Label/2.`
    Event {
        name: String,
        arity: usize,
        span: Span,
    },
    /// `let Name = P` — a named process definition (no terminating dot).
    LetProc { name: String, body: SProc, span: Span },
    /// `process P` — the main process (no terminating dot).
    Main { body: SProc, span: Span },
    /// `query ….`
    Query { query: SQuery, span: Span },
}

impl SDecl {
    pub fn span(&self) -> Span {
        match self {
            SDecl::Fun { span, .. }
            | SDecl::Reduc { span, .. }
            | SDecl::Equation { span, .. }
            | SDecl::Free { span, .. }
            | SDecl::Channel { span, .. }
            | SDecl::Event { span, .. }
            | SDecl::LetProc { span, .. }
            | SDecl::Main { span, .. }
            | SDecl::Query { span, .. } => *span,
        }
    }
}

/// A parsed `.spv` file: an ordered list of declarations.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpecFile {
    pub decls: Vec<SDecl>,
}
