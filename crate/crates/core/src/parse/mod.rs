//! Text formats for algorithm (`.adm`) and architecture (`.arm`) models.

pub mod lexer;
mod model;
mod printer;

pub use lexer::{ParseError, ParseErrorCode, SourceSpan};
pub use model::{parse_algorithm, parse_architecture, Parsed};
pub use printer::{print_algorithm, print_architecture};
