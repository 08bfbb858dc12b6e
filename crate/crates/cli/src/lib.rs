//! Library surface of the command-line tool: document parsing, check
//! execution, reporting, and the explanation texts. The binary is a thin
//! wrapper so integration tests can exercise the same code paths directly.

pub mod checks;
pub mod explain;
pub mod parse;
pub mod report;
