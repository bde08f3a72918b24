//! The `frankc` command line: check, elaborate, or run programs.

use crate::core::print::show_term;
use crate::runtime::{
    check_sources, console_ability, elaborate_checked, pure_ability, run_core, ConsoleScript,
    ExitKind, RunError,
};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "frankc", about = "A compiler and runtime for the Frank language")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TopAbility {
    /// The closed ability; no commands escape.
    Pure,
    /// `[0, Console]`: the built-in Console driver handles `inch`/`ouch`.
    Console,
}

#[derive(Subcommand)]
enum Command {
    /// Type check sources and report diagnostics.
    Check {
        files: Vec<PathBuf>,
        #[arg(long)]
        no_prelude: bool,
        #[arg(long, value_enum, default_value_t = TopAbility::Console)]
        top_ability: TopAbility,
    },
    /// Elaborate to Core and print the program.
    Elaborate {
        files: Vec<PathBuf>,
        #[arg(long)]
        no_prelude: bool,
        #[arg(long, value_enum, default_value_t = TopAbility::Console)]
        top_ability: TopAbility,
    },
    /// Check, elaborate, and evaluate `main!`.
    Run {
        files: Vec<PathBuf>,
        #[arg(long)]
        no_prelude: bool,
        #[arg(long, value_enum, default_value_t = TopAbility::Console)]
        top_ability: TopAbility,
        /// Scripted console input; `\b` denotes backspace. Without this flag
        /// the process's standard streams are used.
        #[arg(long)]
        input: Option<String>,
        /// Print each evaluation step.
        #[arg(long)]
        trace: bool,
        /// Step bound.
        #[arg(long, default_value_t = 10_000_000)]
        fuel: u64,
    },
}

const EXIT_OK: i32 = 0;
const EXIT_STATIC: i32 = 1;
const EXIT_RUNTIME: i32 = 2;
const EXIT_USAGE: i32 = 3;

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Check { files, no_prelude, top_ability } => {
            with_sources(&files, |sources| {
                let ability = ability_of(top_ability);
                match check_sources(&sources, !no_prelude, &ability) {
                    Ok((checked, map)) => {
                        for w in &checked.warnings {
                            let (file, line) = map.locate(w.span.line);
                            eprintln!("{file}:{line}:{}: warning: {}", w.span.col, w.message);
                        }
                        EXIT_OK
                    }
                    Err((e, map)) => {
                        eprintln!("{}", e.render(&map));
                        EXIT_STATIC
                    }
                }
            })
        }
        Command::Elaborate { files, no_prelude, top_ability } => {
            with_sources(&files, |sources| {
                let ability = ability_of(top_ability);
                let (checked, map) = match check_sources(&sources, !no_prelude, &ability) {
                    Ok(c) => c,
                    Err((e, map)) => {
                        eprintln!("{}", e.render(&map));
                        return EXIT_STATIC;
                    }
                };
                match elaborate_checked(&checked) {
                    Ok(core) => {
                        println!("{}", show_term(&core.term));
                        EXIT_OK
                    }
                    Err(e) => {
                        eprintln!("{}", e.render(&map));
                        EXIT_STATIC
                    }
                }
            })
        }
        Command::Run { files, no_prelude, top_ability, input, trace, fuel } => {
            with_sources(&files, |sources| {
                let ability = ability_of(top_ability);
                let (checked, map) = match check_sources(&sources, !no_prelude, &ability) {
                    Ok(c) => c,
                    Err((e, map)) => {
                        eprintln!("{}", e.render(&map));
                        return EXIT_STATIC;
                    }
                };
                if !checked.typed.has_main {
                    eprintln!("error: `run` needs a nullary main operator");
                    return EXIT_STATIC;
                }
                let core = match elaborate_checked(&checked) {
                    Ok(c) => c,
                    Err(e) => {
                        eprintln!("{}", e.render(&map));
                        return EXIT_STATIC;
                    }
                };
                let mut script = match &input {
                    Some(text) => {
                        let mut s = ConsoleScript::scripted(&unescape_input(text));
                        s.echo = true;
                        s
                    }
                    None => ConsoleScript::interactive(),
                };
                match run_core(&core, &mut script, fuel, trace) {
                    Ok(result) => match result.exit_kind {
                        ExitKind::Value => {
                            println!("= {}", result.final_value);
                            EXIT_OK
                        }
                        ExitKind::Unhandled(command) => {
                            eprintln!("unhandled command `{command}` at the top level");
                            EXIT_RUNTIME
                        }
                    },
                    Err(RunError::EmptyScriptedInput) => {
                        eprintln!("scripted input exhausted");
                        EXIT_RUNTIME
                    }
                    Err(RunError::FuelExhausted) => {
                        eprintln!("fuel exhausted after {fuel} steps");
                        EXIT_RUNTIME
                    }
                    Err(RunError::Eval(msg)) => {
                        eprintln!("evaluation error: {msg}");
                        EXIT_RUNTIME
                    }
                }
            })
        }
    }
}

fn ability_of(t: TopAbility) -> crate::syntax::Ability {
    match t {
        TopAbility::Pure => pure_ability(),
        TopAbility::Console => console_ability(),
    }
}

/// Recognize `\b` (and friends) in `--input`.
fn unescape_input(text: &str) -> String {
    let mut out = String::new();
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('b') => out.push('\u{8}'),
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some('\\') => out.push('\\'),
                Some(other) => {
                    out.push('\\');
                    out.push(other);
                }
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn with_sources(files: &[PathBuf], f: impl FnOnce(Vec<(String, String)>) -> i32) -> i32 {
    if files.is_empty() {
        eprintln!("no source files given");
        return EXIT_USAGE;
    }
    let mut sources = Vec::new();
    for file in files {
        match std::fs::read_to_string(file) {
            Ok(text) => sources.push((file.display().to_string(), text)),
            Err(e) => {
                eprintln!("cannot read {}: {e}", file.display());
                return EXIT_USAGE;
            }
        }
    }
    f(sources)
}
