//! Core calculus for modelling security protocols: terms over a user-declared
//! signature, convergent rewrite theories, processes with pattern inputs and
//! diff-terms (`choice`), well-formedness validation, the syntactic process
//! transformations used by privacy queries, and a parser/elaborator for the
//! `.spv` model language.

pub mod process;
pub mod rewrite;
pub mod sig;
pub mod subst;
pub mod syntax;
pub mod term;
pub mod transform;
pub mod validate;

pub use process::{Pattern, Process, ReplId};
pub use rewrite::{match_term, unify, ConvergenceError, RewriteError, RewriteRule, Theory};
pub use sig::{
    EventId, EventInfo, NameId, NameInfo, NameScope, SigError, Sort, SymId, SymKind, Symbol,
    Symtab, VarId, Visibility,
};
pub use subst::Subst;
pub use syntax::elab::{elaborate, load, Correspondence, ElabError, LoadError, NamedDef, Plan, Query};
pub use syntax::parse::{parse, ParseError};
pub use term::{Side, Term};
pub use transform::{hide_outputs, reveal_on_channel, TransformError};
pub use validate::{validate_protocol, validate_well_formed, Diagnostic, DiagnosticKind};
