// Step-count and subject-reduction probe over corpus programs.
use frankc::core::check::CoreChecker;
use frankc::eval::{Evaluator, NormalForm, StepResult};
use frankc::runtime::{check_sources, console_ability, elaborate_checked, pure_ability};

fn probe(path: &str, prelude: bool, pure: bool, check_each: bool) {
    let src = std::fs::read_to_string(path).unwrap();
    let ability = if pure { pure_ability() } else { console_ability() };
    let (checked, _) = match check_sources(&[(path.into(), src)], prelude, &ability) {
        Ok(c) => c,
        Err((e, m)) => {
            println!("{path}: CHECK FAIL {}", e.render(&m));
            return;
        }
    };
    let core = elaborate_checked(&checked).unwrap();
    let checker = CoreChecker::new(&core.decls);
    checker.check_program(&core.term, &core.ability, &core.ty).unwrap();
    let mut ev = Evaluator::new(&core.decls);
    let mut term = core.term.clone();
    let mut steps: u64 = 0;
    let mut input: Vec<char> = "00\u{8}1 ".chars().collect();
    input.reverse();
    let start = std::time::Instant::now();
    loop {
        match ev.step(&term).unwrap() {
            StepResult::Stepped(t) => {
                steps += 1;
                if check_each {
                    if let Err(e) = checker.check_program(&t, &core.ability, &core.ty) {
                        println!("{path}: VIOLATION at {steps}: {}", e.message);
                        return;
                    }
                }
                if steps > 200_000 {
                    println!("{path}: bound hit");
                    return;
                }
                term = t;
            }
            StepResult::Normal(NormalForm::Value(_)) => break,
            StepResult::Normal(NormalForm::Request { command, context, .. }) => {
                let plugged = match command.as_str() {
                    "inch" => frankc::core::annot(
                        frankc::core::mk(frankc::core::TermKind::CharLit(input.pop().unwrap())),
                        frankc::core::CoreValueType::Data("Char".into(), vec![]),
                    ),
                    "ouch" => frankc::core::annot(
                        frankc::core::mk(frankc::core::TermKind::Ctor("unit".into(), vec![])),
                        frankc::core::CoreValueType::Data("Unit".into(), vec![]),
                    ),
                    other => {
                        println!("{path}: unexpected request {other}");
                        return;
                    }
                };
                term = frankc::eval::plug(&context, plugged);
            }
        }
    }
    println!("{path}: {steps} steps in {:?} (check_each={check_each})", start.elapsed());
}

fn main() {
    let t = std::thread::Builder::new().stack_size(256 * 1024 * 1024).spawn(run).unwrap();
    t.join().unwrap();
}

fn run() {
    for f in ["mini/counter.fk", "mini/fold.fk", "mini/toggle.fk", "mini/pump.fk", "mini/pump2.fk"] {
        probe(&format!("crates/frankc/corpus/{f}"), false, true, true);
    }
    for f in ["map.fk", "index.fk", "unit.fk", "shortand.fk", "catch_shadow.fk"] {
        probe(&format!("crates/frankc/corpus/{f}"), true, false, true);
    }
    for f in ["pipe.fk", "spacer_outer.fk", "rollback.fk"] {
        probe(&format!("crates/frankc/corpus/{f}"), true, false, true);
    }
}
