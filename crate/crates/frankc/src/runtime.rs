//! The program driver: prelude, pipeline, and the built-in Console handler.
//!
//! Console commands escape to the host: at each normal form the driver
//! resolves `inch` and `ouch` requests against scripted or interactive
//! streams and resumes the evaluation context with the answer.

use crate::core::print::char_literal;
use crate::core::*;
use crate::desugar::{desugar, DesugarError};
use crate::elaborate::{elaborate_program, CoreProgram};
use crate::eval::{strip_annotations, EvalError, Evaluator, NormalForm};
use crate::parser::{parse_program, ParseError};
use crate::span::Span;
use crate::syntax::{Ability, Name};
use crate::typecheck::{check_program, TypeError, Warning};
use std::collections::VecDeque;
use std::io::{Read, Write};

/// The declarations and definitions every program sees unless `--no-prelude`
/// is given.
pub const PRELUDE: &str = r#"-- data types
data Zero =
data Unit = unit
data Bool = tt | ff
data Nat = zero | suc Nat
data List X = nil | cons X (List X)
data Pair X Y = pair X Y

-- interfaces
interface Send X = send : X -> Unit
interface Receive X = receive : X
interface State S = get : S
                  | put : S -> Unit
interface Abort = aborting : Zero
interface Console = inch : Char
                  | ouch : Char -> Unit
interface LookAhead = peek : Char | accept : Unit

-- rollback machinery
data Log X = start {X}
           | inched (Log X) {Char -> X}
           | ouched (Log X)
data Buffer = empty | hold Char

-- general operators
on : X -> {X -> Y} -> Y
on x f = f x

fst : X -> Y -> X
fst x y = x

snd : X -> Y -> Y
snd x y = y

if : Bool -> {X} -> {X} -> X
if tt t f = t!
if ff t f = f!

iffy : Bool -> X -> X -> X
iffy tt t f = t
iffy ff t f = f

append : List X -> List X -> List X
append nil ys = ys
append (cons x xs) ys = cons x (append xs ys)

map : {X -> Y} -> List X -> List Y
map f nil = nil
map f (cons x xs) = cons (f x) (map f xs)

-- effect operators
abort : [Abort]X
abort! = on aborting! {}

catch : <Abort>X -> {X} -> X
catch x _ = x
catch <aborting -> _> h = h!

state : S -> <State S>X -> X
state _ x = x
state s <get -> k> = state s (k s)
state _ <put s -> k> = state s (k unit)

pipe : <Send X>Unit -> <Receive X>Y -> [Abort]Y
pipe <send x -> s> <receive -> r> = pipe (s unit) (r x)
pipe <_> y = y
pipe unit <_> = abort!
"#;

#[derive(Clone, Debug)]
pub enum PipelineError {
    Parse(ParseError),
    Desugar(DesugarError),
    Type(TypeError),
    Elaborate(String),
}

/// Maps lines of the concatenated text back to their source files.
#[derive(Clone, Debug, Default)]
pub struct SourceMap {
    /// (label, first line in the concatenated text, line count)
    segments: Vec<(String, u32, u32)>,
}

impl SourceMap {
    pub fn locate(&self, line: u32) -> (String, u32) {
        for (label, start, count) in &self.segments {
            if line >= *start && line < start + count {
                return (label.clone(), line - start + 1);
            }
        }
        ("<input>".to_string(), line)
    }
}

impl PipelineError {
    pub fn render(&self, map: &SourceMap) -> String {
        let (span, message) = match self {
            PipelineError::Parse(e) => (e.span, e.message.clone()),
            PipelineError::Desugar(e) => (e.span, e.message.clone()),
            PipelineError::Type(e) => (e.span, format!("{}: {}", e.kind.name(), e.message)),
            PipelineError::Elaborate(m) => (Span::synthetic(), m.clone()),
        };
        let (file, line) = map.locate(span.line);
        format!("{file}:{line}:{}: error: {message}", span.col)
    }
}

pub struct Checked {
    pub typed: crate::typecheck::typed::TypedProgram,
    pub warnings: Vec<Warning>,
    pub source_map: SourceMap,
}

/// Parse, desugar and check sources (prelude first unless disabled).
/// Sources are `(label, text)` pairs.
pub fn check_sources(
    sources: &[(String, String)],
    with_prelude: bool,
    top_ability: &Ability,
) -> Result<(Checked, SourceMap), (PipelineError, SourceMap)> {
    let mut text = String::new();
    let mut map = SourceMap::default();
    let mut line: u32 = 1;
    let add = |text: &mut String, label: &str, body: &str, line: &mut u32, map: &mut SourceMap| {
        let count = body.lines().count() as u32 + 1;
        map.segments.push((label.to_string(), *line, count));
        text.push_str(body);
        text.push('\n');
        *line += count;
    };
    if with_prelude {
        add(&mut text, "<prelude>", PRELUDE, &mut line, &mut map);
    }
    for (label, body) in sources {
        add(&mut text, label, body, &mut line, &mut map);
    }
    let result = (|| {
        let items = parse_program(&text).map_err(PipelineError::Parse)?;
        let program = desugar(&items).map_err(PipelineError::Desugar)?;
        let (typed, warnings) = check_program(&program, top_ability).map_err(PipelineError::Type)?;
        Ok(Checked { typed, warnings, source_map: map.clone() })
    })();
    match result {
        Ok(c) => Ok((c, map)),
        Err(e) => Err((e, map)),
    }
}

pub fn elaborate_checked(checked: &Checked) -> Result<CoreProgram, PipelineError> {
    elaborate_program(&checked.typed).map_err(|e| PipelineError::Elaborate(e.message))
}

/// The Console ability: `[∅, Console]`.
pub fn console_ability() -> Ability {
    Ability::empty().with("Console", vec![])
}

pub fn pure_ability() -> Ability {
    Ability::empty()
}

// ---------------------------------------------------------------------------
// Console script
// ---------------------------------------------------------------------------

pub enum ConsoleMode {
    Scripted,
    Interactive,
}

pub struct ConsoleScript {
    pub input: VecDeque<char>,
    pub output: String,
    pub mode: ConsoleMode,
    /// Echo `ouch` characters to the real stdout as they happen.
    pub echo: bool,
}

impl ConsoleScript {
    pub fn scripted(input: &str) -> Self {
        ConsoleScript {
            input: input.chars().collect(),
            output: String::new(),
            mode: ConsoleMode::Scripted,
            echo: false,
        }
    }

    pub fn interactive() -> Self {
        ConsoleScript {
            input: VecDeque::new(),
            output: String::new(),
            mode: ConsoleMode::Interactive,
            echo: true,
        }
    }

    fn read(&mut self) -> Result<char, RunError> {
        match self.mode {
            ConsoleMode::Scripted => self.input.pop_front().ok_or(RunError::EmptyScriptedInput),
            ConsoleMode::Interactive => {
                let mut buf = [0u8; 1];
                match std::io::stdin().read_exact(&mut buf) {
                    Ok(()) => Ok(buf[0] as char),
                    Err(_) => Err(RunError::EmptyScriptedInput),
                }
            }
        }
    }

    fn write(&mut self, c: char) {
        self.output.push(c);
        if self.echo {
            print!("{c}");
            let _ = std::io::stdout().flush();
        }
    }
}

#[derive(Clone, Debug)]
pub enum RunError {
    EmptyScriptedInput,
    Eval(String),
    FuelExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExitKind {
    Value,
    Unhandled(Name),
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub final_value: String,
    pub console_output: String,
    pub step_count: u64,
    pub exit_kind: ExitKind,
}

/// Evaluate an elaborated program, interpreting Console requests against the
/// script until a value or a non-Console request arrives.
pub fn run_core(
    program: &CoreProgram,
    script: &mut ConsoleScript,
    fuel: u64,
    trace: bool,
) -> Result<RunResult, RunError> {
    let mut evaluator = Evaluator::new(&program.decls);
    evaluator.trace = trace;
    let mut term = program.term.clone();
    let unit_ty = CoreValueType::Data("Unit".into(), vec![]);
    let char_ty = CoreValueType::Data("Char".into(), vec![]);
    loop {
        let remaining = fuel.saturating_sub(evaluator.steps);
        let (normal, _) = evaluator.eval_to_normal(term, remaining).map_err(|e| match e {
            EvalError::FuelExhausted(_) => RunError::FuelExhausted,
            EvalError::Stuck(t, msg) => RunError::Eval(format!(
                "stuck: {msg}\n{}",
                crate::core::print::show_term(&t)
            )),
            EvalError::ArithmeticOverflow => RunError::Eval("integer overflow".into()),
        })?;
        match normal {
            NormalForm::Value(v) => {
                return Ok(RunResult {
                    final_value: render_value(&v),
                    console_output: script.output.clone(),
                    step_count: evaluator.steps,
                    exit_kind: ExitKind::Value,
                });
            }
            NormalForm::Request { command, args, context } => match command.as_str() {
                "inch" if args.is_empty() => {
                    let c = script.read()?;
                    term = crate::eval::plug(
                        &context,
                        annot(mk(TermKind::CharLit(c)), char_ty.clone()),
                    );
                }
                "ouch" if args.len() == 1 => {
                    match &strip_annotations(&args[0]).kind {
                        TermKind::CharLit(c) => script.write(*c),
                        other => {
                            return Err(RunError::Eval(format!(
                                "ouch applied to a non-character: {other:?}"
                            )))
                        }
                    }
                    term = crate::eval::plug(
                        &context,
                        annot(mk(TermKind::Ctor("unit".into(), vec![])), unit_ty.clone()),
                    );
                }
                _ => {
                    return Ok(RunResult {
                        final_value: String::new(),
                        console_output: script.output.clone(),
                        step_count: evaluator.steps,
                        exit_kind: ExitKind::Unhandled(command),
                    })
                }
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Render a construction value the way results are displayed: constructor
/// application syntax with parentheses, character lists as strings, and
/// suspensions as an opaque token.
pub fn render_value(v: &Term) -> String {
    render(&strip_annotations(v), false)
}

fn render(v: &Term, parenthesize: bool) -> String {
    if let Some(s) = as_char_list(v) {
        if !s.is_empty() {
            return format!("{s:?}");
        }
    }
    match &v.kind {
        TermKind::Ctor(k, args) if args.is_empty() => k.clone(),
        TermKind::Ctor(k, args) => {
            let mut s = k.clone();
            for a in args {
                s.push(' ');
                s.push_str(&render(&strip_annotations(a), true));
            }
            if parenthesize {
                format!("({s})")
            } else {
                s
            }
        }
        TermKind::IntLit(n) => n.to_string(),
        TermKind::CharLit(c) => char_literal(*c),
        TermKind::Lambda(_, _) => "{<fun>}".to_string(),
        TermKind::Command(c) => c.clone(),
        TermKind::PolyApp(f, _) | TermKind::Builtin(f, _) => f.clone(),
        TermKind::Var(x) => x.clone(),
        other => format!("<{other:?}>"),
    }
}

/// A nonempty cons-chain of character literals.
fn as_char_list(v: &Term) -> Option<String> {
    let mut out = String::new();
    let mut current = strip_annotations(v);
    loop {
        match &current.kind {
            TermKind::Ctor(k, args) if k == "nil" && args.is_empty() => return Some(out),
            TermKind::Ctor(k, args) if k == "cons" && args.len() == 2 => {
                match &strip_annotations(&args[0]).kind {
                    TermKind::CharLit(c) => out.push(*c),
                    _ => return None,
                }
                let next = strip_annotations(&args[1]);
                current = next;
            }
            _ => return None,
        }
    }
}
