//! Cross-stage invariants over the corpus: parser round trips, declarative
//! re-derivation of checked programs, elaboration type preservation,
//! handler nesting order, binder hygiene, evaluation determinism, and the
//! command-line contract.

mod common;

use common::*;
use frankc::core::*;
use frankc::desugar::desugar;
use frankc::parser::parse_program;
use frankc::pretty::{alpha_eq_program, show_program};
use frankc::runtime::{console_ability, pure_ability, PRELUDE};
use frankc::typecheck::validate::validate_program;
use std::collections::BTreeSet;
use std::process::Command;

const CONSOLE_CORPUS: &[&str] = &[
    "map.fk",
    "index.fk",
    "pipe.fk",
    "spacer_outer.fk",
    "spacer_inner.fk",
    "rollback.fk",
    "unit.fk",
    "catch_shadow.fk",
    "shortand.fk",
];

const MINI_CORPUS: &[&str] = &["mini/counter.fk", "mini/fold.fk", "mini/toggle.fk"];

fn combined(name: &str) -> String {
    let (_, body) = corpus_source(name);
    format!("{PRELUDE}\n{body}")
}

#[test]
fn parser_round_trip_is_alpha_equivalent() {
    let mut sources: Vec<String> = CONSOLE_CORPUS.iter().map(|n| combined(n)).collect();
    sources.push(PRELUDE.to_string());
    for name in MINI_CORPUS {
        sources.push(corpus_source(name).1);
    }
    for src in sources {
        let first = desugar(&parse_program(&src).expect("parse")).expect("desugar");
        let printed = show_program(&first);
        let reparsed = parse_program(&printed)
            .unwrap_or_else(|e| panic!("printed program fails to reparse: {e:?}\n{printed}"));
        let second = desugar(&reparsed)
            .unwrap_or_else(|e| panic!("printed program fails to desugar: {e:?}\n{printed}"));
        assert!(
            alpha_eq_program(&first, &second),
            "round trip is not alpha-equivalent:\n{printed}"
        );
    }
}

/// Every port has an explicit adjustment and every peg an explicit ability
/// head after desugaring; the abstract syntax enforces this by construction,
/// so here we check the printed form parses with none of the omissions
/// reintroduced as errors.
#[test]
fn desugared_types_are_fully_explicit() {
    let src = combined("map.fk");
    let program = desugar(&parse_program(&src).unwrap()).unwrap();
    // All signatures quantify a distinct implicit effect variable.
    if let frankc::syntax::Construction::LetRec { bindings, .. } = &program.term {
        let mut seen = BTreeSet::new();
        for (name, poly, _) in bindings {
            for binder in &poly.binders {
                if let frankc::syntax::TypeParam::Eff(e) = binder {
                    assert!(
                        seen.insert(e.clone()),
                        "effect variable `{e}` of `{name}` is shared across signatures"
                    );
                }
            }
        }
        assert!(!seen.is_empty());
    } else {
        panic!("expected definitions");
    }
}

#[test]
fn checked_programs_re_derive_declaratively() {
    for name in CONSOLE_CORPUS {
        let checked = check_corpus(name, true, &console_ability());
        validate_program(&checked.typed)
            .unwrap_or_else(|e| panic!("{name}: declarative validation failed: {}", e.0));
    }
    for name in MINI_CORPUS {
        let checked = check_corpus(name, false, &pure_ability());
        validate_program(&checked.typed)
            .unwrap_or_else(|e| panic!("{name}: declarative validation failed: {}", e.0));
    }
}

#[test]
fn elaboration_preserves_types() {
    for name in CONSOLE_CORPUS {
        let core = elaborate_corpus(name, true, &console_ability());
        core_check(&core);
    }
    for name in MINI_CORPUS {
        let core = elaborate_corpus(name, false, &pure_ability());
        core_check(&core);
    }
}

/// In any emitted operator body, the handler for a later port never encloses
/// the handler for an earlier one: ports are handled left to right.
#[test]
fn handlers_nest_left_to_right() {
    fn scan(term: &Term, enclosing: &[Term], lambdas: &mut Vec<(Vec<String>, Term)>) {
        match &term.kind {
            TermKind::Lambda(params, body) => {
                lambdas.push((params.clone(), body.clone()));
                scan(body, enclosing, lambdas);
            }
            TermKind::Handle { scrutinee, clauses, ret_body, .. } => {
                let mut inner = enclosing.to_vec();
                inner.push(scrutinee.clone());
                scan(scrutinee, enclosing, lambdas);
                for cl in clauses {
                    scan(&cl.body, &inner, lambdas);
                }
                scan(ret_body, &inner, lambdas);
            }
            TermKind::App(h, args) => {
                scan(h, enclosing, lambdas);
                args.iter().for_each(|a| scan(a, enclosing, lambdas));
            }
            TermKind::Annot(n, _) => scan(n, enclosing, lambdas),
            TermKind::Ctor(_, args) => args.iter().for_each(|a| scan(a, enclosing, lambdas)),
            TermKind::Case(s, branches) => {
                scan(s, enclosing, lambdas);
                branches.iter().for_each(|(_, _, b)| scan(b, enclosing, lambdas));
            }
            TermKind::LitCase { scrutinee, arms, default } => {
                scan(scrutinee, enclosing, lambdas);
                arms.iter().for_each(|(_, b)| scan(b, enclosing, lambdas));
                scan(default, enclosing, lambdas);
            }
            TermKind::Let { bound, body, .. } => {
                scan(bound, enclosing, lambdas);
                scan(body, enclosing, lambdas);
            }
            TermKind::LetRec { bindings, body } => {
                for (_, _, _, b) in bindings.iter() {
                    scan(b, enclosing, lambdas);
                }
                scan(body, enclosing, lambdas);
            }
            _ => {}
        }
    }

    // For every lambda over ports x1..xn: along any path, a handle forcing
    // x_j never appears nested inside handles forcing x_i for i > j.
    fn forced_param(scrutinee: &Term) -> Option<String> {
        match &scrutinee.kind {
            TermKind::App(h, args) if args.is_empty() => match &h.kind {
                TermKind::Var(x) => Some(x.clone()),
                _ => None,
            },
            _ => None,
        }
    }

    for name in CONSOLE_CORPUS {
        let core = elaborate_corpus(name, true, &console_ability());
        let mut lambdas = Vec::new();
        scan(&core.term, &[], &mut lambdas);
        for (params, body) in &lambdas {
            // Walk the body tracking which parameters were forced by
            // enclosing handles.
            fn walk(term: &Term, params: &[String], forced: &mut Vec<usize>) {
                if let TermKind::Handle { scrutinee, clauses, ret_body, .. } = &term.kind {
                    let idx = forced_param(scrutinee)
                        .and_then(|x| params.iter().position(|p| *p == x));
                    if let Some(i) = idx {
                        if let Some(&outer) = forced.last() {
                            assert!(
                                outer <= i,
                                "port {} handled inside the handler for port {}",
                                i + 1,
                                outer + 1
                            );
                        }
                        forced.push(i);
                    }
                    walk(scrutinee, params, forced);
                    for cl in clauses {
                        walk(&cl.body, params, forced);
                    }
                    walk(ret_body, params, forced);
                    if idx.is_some() {
                        forced.pop();
                    }
                    return;
                }
                match &term.kind {
                    TermKind::App(h, args) => {
                        walk(h, params, forced);
                        args.iter().for_each(|a| walk(a, params, forced));
                    }
                    TermKind::Annot(n, _) => walk(n, params, forced),
                    TermKind::Ctor(_, args) => args.iter().for_each(|a| walk(a, params, forced)),
                    TermKind::Case(s, branches) => {
                        walk(s, params, forced);
                        branches.iter().for_each(|(_, _, b)| walk(b, params, forced));
                    }
                    TermKind::LitCase { scrutinee, arms, default } => {
                        walk(scrutinee, params, forced);
                        arms.iter().for_each(|(_, b)| walk(b, params, forced));
                        walk(default, params, forced);
                    }
                    TermKind::Let { bound, body, .. } => {
                        walk(bound, params, forced);
                        walk(body, params, forced);
                    }
                    TermKind::Lambda(_, b) => walk(b, params, forced),
                    TermKind::LetRec { bindings, body } => {
                        for (_, _, _, b) in bindings.iter() {
                            walk(b, params, forced);
                        }
                        walk(body, params, forced);
                    }
                    _ => {}
                }
            }
            walk(body, params, &mut Vec::new());
        }
    }
}

/// No emitted binder captures a source body's free variable: every binder
/// the elaborator introduces carries the reserved prefix, and source
/// programs cannot mention it.
#[test]
fn elaboration_binders_are_hygienic() {
    fn scan_binders(term: &Term, out: &mut Vec<String>) {
        match &term.kind {
            TermKind::Lambda(params, body) => {
                out.extend(params.iter().cloned());
                scan_binders(body, out);
            }
            TermKind::Case(s, branches) => {
                scan_binders(s, out);
                for (_, binders, b) in branches {
                    out.extend(binders.iter().cloned());
                    scan_binders(b, out);
                }
            }
            TermKind::LitCase { scrutinee, arms, default } => {
                scan_binders(scrutinee, out);
                arms.iter().for_each(|(_, b)| scan_binders(b, out));
                scan_binders(default, out);
            }
            TermKind::Handle { scrutinee, clauses, ret_var, ret_body, .. } => {
                scan_binders(scrutinee, out);
                for cl in clauses {
                    out.extend(cl.args.iter().cloned());
                    out.push(cl.continuation.clone());
                    scan_binders(&cl.body, out);
                }
                out.push(ret_var.clone());
                scan_binders(ret_body, out);
            }
            TermKind::App(h, args) => {
                scan_binders(h, out);
                args.iter().for_each(|a| scan_binders(a, out));
            }
            TermKind::Annot(n, _) => scan_binders(n, out),
            TermKind::Ctor(_, args) => args.iter().for_each(|a| scan_binders(a, out)),
            TermKind::Let { name, bound, body, .. } => {
                out.push(name.clone());
                scan_binders(bound, out);
                scan_binders(body, out);
            }
            TermKind::LetRec { bindings, body } => {
                for (name, _, params, b) in bindings.iter() {
                    out.push(name.clone());
                    out.extend(params.iter().cloned());
                    scan_binders(b, out);
                }
                scan_binders(body, out);
            }
            _ => {}
        }
    }
    for name in CONSOLE_CORPUS {
        let core = elaborate_corpus(name, true, &console_ability());
        let mut binders = Vec::new();
        scan_binders(&core.term, &mut binders);
        let fresh: Vec<&String> = binders.iter().filter(|b| b.starts_with('%')).collect();
        assert!(!fresh.is_empty(), "{name}: the elaborator introduced no fresh binders");
        // Fresh binders are globally distinct, so they can never capture.
        let set: BTreeSet<&&String> = fresh.iter().collect();
        assert_eq!(set.len(), fresh.len(), "{name}: a fresh binder is reused");
    }
}

/// Two independent evaluations take identical step sequences.
#[test]
fn evaluation_is_deterministic() {
    let core = elaborate_corpus("index.fk", true, &console_ability());
    let first = run_scripted(&core, "", |_| {});
    let mut trace = Vec::new();
    let second = run_scripted(&core, "", |t| trace.push(frankc::core::print::show_term(t)));
    assert_eq!(first.steps, second.steps);
    assert_eq!(first.value, second.value);
    let mut replay = Vec::new();
    let third = run_scripted(&core, "", |t| replay.push(frankc::core::print::show_term(t)));
    assert_eq!(third.steps, second.steps);
    assert_eq!(trace, replay, "step-for-step traces differ");
}

#[test]
fn cli_contract() {
    let bin = env!("CARGO_BIN_EXE_frankc");
    let corpus = |n: &str| corpus_path(n).display().to_string();

    // run: value printing and status zero.
    let out = Command::new(bin)
        .args(["run", &corpus("index.fk"), "--input", ""])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout
        .contains("= cons (pair 0 'a') (cons (pair 1 'b') (cons (pair 2 'c') nil))"));

    // check: static error gives status one and a machine-parsable line.
    let out = Command::new(bin).args(["check", &corpus("bad.fk")]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.fk:3:"), "diagnostic line: {stderr}");
    assert!(stderr.contains("AbilityMismatch"));

    // run with empty scripted input where input is demanded: runtime error.
    let out = Command::new(bin)
        .args(["run", &corpus("rollback.fk"), "--input", ""])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // fuel exhaustion is a runtime error.
    let out = Command::new(bin)
        .args(["run", &corpus("index.fk"), "--input", "", "--fuel", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // usage error.
    let out = Command::new(bin).args(["run"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));

    // elaborate prints a program.
    let out = Command::new(bin).args(["elaborate", &corpus("unit.fk")]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("letrec"));

    // scripted input recognizes the backspace escape.
    let out = Command::new(bin)
        .args(["run", &corpus("rollback.fk"), "--input", "00\\b1 "])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("= 1"));
}
