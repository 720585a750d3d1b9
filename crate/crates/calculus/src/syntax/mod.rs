//! Surface syntax for `.spv` model files: lexer, recursive-descent parser,
//! pretty-printer, and elaboration into signature/theory/process values.

pub mod ast;
pub mod elab;
pub mod lex;
pub mod parse;
pub mod print;
