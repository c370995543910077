//! Structural model of Java source: a tokenizer plus a brace-depth driven
//! extractor for top-level classes and their direct members.

mod lexer;
mod model;

pub use lexer::{is_keyword, tokenize, Token, TokenKind};
pub use model::{
    parse_compilation_unit, parse_with_diagnostics, select_primary_class, ClassModel, MemberKind, MemberModel,
    Modifier, ParsedUnit,
};
