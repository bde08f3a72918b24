//! Shared helpers for the integration suites.
#![allow(dead_code)]

use frankc::core::check::CoreChecker;
use frankc::core::{annot, mk, CoreValueType, TermKind};
use frankc::elaborate::CoreProgram;
use frankc::eval::{plug, Evaluator, NormalForm, StepResult};
use frankc::runtime::{
    check_sources, console_ability, elaborate_checked, pure_ability, Checked,
};
use frankc::syntax::Ability;
use frankc::typecheck::typed::{TComputation, TConstruction};
use std::path::PathBuf;

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

pub fn corpus_source(name: &str) -> (String, String) {
    let path = corpus_path(name);
    (name.to_string(), std::fs::read_to_string(&path).unwrap_or_else(|e| {
        panic!("cannot read corpus file {}: {e}", path.display())
    }))
}

pub fn check_corpus(name: &str, prelude: bool, ability: &Ability) -> Checked {
    match check_sources(&[corpus_source(name)], prelude, ability) {
        Ok((c, _)) => c,
        Err((e, m)) => panic!("{name} failed to check: {}", e.render(&m)),
    }
}

pub fn elaborate_corpus(name: &str, prelude: bool, ability: &Ability) -> CoreProgram {
    let checked = check_corpus(name, prelude, ability);
    elaborate_checked(&checked).unwrap_or_else(|e| panic!("{name} failed to elaborate: {e:?}"))
}

/// Run a program under a scripted console, stepping manually so callers can
/// observe every intermediate term.
pub struct Scripted {
    pub value: Option<String>,
    pub output: String,
    pub steps: u64,
}

pub fn run_scripted(
    core: &CoreProgram,
    input: &str,
    mut on_step: impl FnMut(&frankc::core::Term),
) -> Scripted {
    let mut evaluator = Evaluator::new(&core.decls);
    let mut term = core.term.clone();
    let mut queue: Vec<char> = input.chars().rev().collect();
    let mut output = String::new();
    let char_ty = CoreValueType::Data("Char".into(), vec![]);
    let unit_ty = CoreValueType::Data("Unit".into(), vec![]);
    loop {
        match evaluator.step(&term).expect("no stuck terms on checked programs") {
            StepResult::Stepped(next) => {
                on_step(&next);
                term = next;
            }
            StepResult::Normal(NormalForm::Value(v)) => {
                return Scripted {
                    value: Some(frankc::runtime::render_value(&v)),
                    output,
                    steps: evaluator.steps,
                };
            }
            StepResult::Normal(NormalForm::Request { command, args, context }) => {
                match command.as_str() {
                    "inch" => {
                        let c = queue.pop().expect("script ran dry");
                        term = plug(&context, annot(mk(TermKind::CharLit(c)), char_ty.clone()));
                    }
                    "ouch" => {
                        match &frankc::eval::strip_annotations(&args[0]).kind {
                            TermKind::CharLit(c) => output.push(*c),
                            other => panic!("ouch applied to {other:?}"),
                        }
                        term = plug(
                            &context,
                            annot(mk(TermKind::Ctor("unit".into(), vec![])), unit_ty.clone()),
                        );
                    }
                    other => panic!("unexpected top-level command `{other}`"),
                }
            }
        }
    }
}

/// Golden-run a corpus file: returns the rendered value.
pub fn golden(name: &str) -> String {
    let core = elaborate_corpus(name, true, &console_ability());
    let result = run_scripted(&core, "", |_| {});
    result.value.expect("program should finish with a value")
}

pub fn abilities() -> (Ability, Ability) {
    (pure_ability(), console_ability())
}

/// Find a letrec binding's typed computation in a checked program.
pub fn typed_def(checked: &Checked, name: &str) -> TComputation {
    match &checked.typed.term {
        TConstruction::LetRec { bindings, .. } => bindings
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, _, c)| c.clone())
            .unwrap_or_else(|| panic!("no definition named `{name}`")),
        _ => panic!("program has no definitions"),
    }
}

/// Check a core program at its recorded type and ability.
pub fn core_check(core: &CoreProgram) {
    CoreChecker::new(&core.decls)
        .check_program(&core.term, &core.ability, &core.ty)
        .unwrap_or_else(|e| panic!("core checking failed: {}", e.message));
}
