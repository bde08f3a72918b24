//! frankc: a compiler and scriptable runtime for the Frank language.
//!
//! The pipeline is: lex/parse surface syntax, desugar into the abstract
//! syntax, bidirectionally check against an ambient ability, elaborate
//! operators into Core (functions, case analysis, unary handlers), and run
//! the result with a small-step evaluator whose Console commands are
//! interpreted by a scriptable driver.

pub mod span;
pub mod core;
pub mod desugar;
pub mod elaborate;
pub mod eval;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod runtime;
pub mod syntax;
pub mod typecheck;

pub mod cli;

pub fn run_cli() -> i32 {
    cli::main_with_args(std::env::args_os())
}
