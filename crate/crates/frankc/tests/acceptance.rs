//! The acceptance suite: golden outputs, static rejections, elaboration
//! fidelity, executable metatheory, coverage reporting, console rollback,
//! and the ability-algebra law set. Each criterion prints one line.

mod common;

use common::*;
use frankc::core::alpha::alpha_eq;
use frankc::core::check::CoreChecker;
use frankc::core::print::show_term;
use frankc::core::*;
use frankc::elaborate::{check_coverage, CoverageReport, Witness, WitnessPat};
use frankc::eval::{Evaluator, NormalForm, StepResult};
use frankc::runtime::{check_sources, console_ability, pure_ability, PipelineError};
use frankc::syntax::AbilityHead;
use frankc::typecheck::typed::{TCompPattern, TComputation, TValuePattern};
use frankc::typecheck::TypeErrorKind;
use std::rc::Rc;

// ---------------------------------------------------------------------------
// 1. Golden outputs
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_golden_outputs() {
    assert_eq!(golden("map.fk"), "cons 2 (cons 3 (cons 4 nil))");
    assert_eq!(
        golden("index.fk"),
        "cons (pair 0 'a') (cons (pair 1 'b') (cons (pair 2 'c') nil))"
    );
    assert_eq!(golden("pipe.fk"), "\"dobe\"");
    let outer = golden("spacer_outer.fk");
    let inner = golden("spacer_inner.fk");
    assert_eq!(outer, "\"do be \"");
    assert_eq!(inner, outer, "both pipe nestings agree");
    println!("criterion 1 (golden outputs): PASS");
}

// ---------------------------------------------------------------------------
// 2. Static rejection
// ---------------------------------------------------------------------------

fn check_err(name: &str) -> TypeErrorKind {
    match check_sources(&[corpus_source(name)], true, &console_ability()) {
        Ok(_) => panic!("{name} should not typecheck"),
        Err((PipelineError::Type(e), _)) => e.kind,
        Err((other, _)) => panic!("{name} failed in the wrong stage: {other:?}"),
    }
}

#[test]
fn criterion_2_static_rejection() {
    assert_eq!(check_err("bad.fk"), TypeErrorKind::AbilityMismatch);
    assert_eq!(check_err("badpipe.fk"), TypeErrorKind::CommandNotInAdjustment);
    println!("criterion 2 (static rejection): PASS");
}

// ---------------------------------------------------------------------------
// 3. Elaboration fidelity: pipe
// ---------------------------------------------------------------------------

/// The reference elaboration of `pipe`, written out by hand: ports are
/// handled left to right (the producer's handler is outermost), both return
/// clauses are identities over the forced consumer, the value branch
/// case-splits on unit, and the broken-pipe branch aborts. Rebindings use
/// the `on` sugar and handler-bound continuations are adapted to take
/// suspended arguments.
#[allow(clippy::too_many_lines)]
fn expected_pipe() -> (CorePolyType, Vec<String>, Term) {
    let eps = || CoreAbility { head: AbilityHead::Var("e".into()), instances: vec![] };
    let unit_ty = CoreValueType::Data("Unit".into(), vec![]);
    let xv = CoreValueType::Var("X".into());
    let yv = CoreValueType::Var("Y".into());
    let inst = |name: &str, args: Vec<CoreTypeArg>| CoreInstance { interface: name.into(), args };
    let abort_amb = || CoreAbility {
        head: AbilityHead::Var("e".into()),
        instances: vec![inst("Abort", vec![])],
    };
    let send_adj = CoreAdjustment {
        instances: vec![inst("Send", vec![CoreTypeArg::Val(xv.clone())])],
    };
    let receive_adj = CoreAdjustment {
        instances: vec![inst("Receive", vec![CoreTypeArg::Val(xv.clone())])],
    };
    let send_amb = abort_amb().extend(&send_adj);
    let receive_amb = abort_amb().extend(&receive_adj);
    let thunk0 = |ability: CoreAbility, value: CoreValueType| {
        CoreValueType::Thunk(Box::new(CoreCompType {
            args: vec![],
            peg: CorePeg { ability, value },
        }))
    };
    let thunk1 = |arg: CoreValueType, ability: CoreAbility, value: CoreValueType| {
        CoreValueType::Thunk(Box::new(CoreCompType {
            args: vec![arg],
            peg: CorePeg { ability, value },
        }))
    };
    let peg = CorePeg { ability: abort_amb(), value: yv.clone() };

    let poly = CorePolyType {
        binders: vec![
            CoreTypeParam::Eff("e".into()),
            CoreTypeParam::Val("X".into()),
            CoreTypeParam::Val("Y".into()),
        ],
        body: CoreValueType::Thunk(Box::new(CoreCompType {
            args: vec![
                thunk0(send_amb.clone(), unit_ty.clone()),
                thunk0(receive_amb.clone(), yv.clone()),
            ],
            peg: peg.clone(),
        })),
    };

    // let name : {A -> {A -> [e]B} -> [e]B} = λa f. f a in (name σ A B) bound (λname'. body)
    let on_let = |bound: Term, bound_ty: CoreValueType, binder: &str, body: Term| {
        let on_poly = CorePolyType {
            binders: vec![
                CoreTypeParam::Eff("oe".into()),
                CoreTypeParam::Val("oa".into()),
                CoreTypeParam::Val("ob".into()),
            ],
            body: CoreValueType::Thunk(Box::new(CoreCompType {
                args: vec![
                    CoreValueType::Var("oa".into()),
                    thunk1(
                        CoreValueType::Var("oa".into()),
                        CoreAbility { head: AbilityHead::Var("oe".into()), instances: vec![] },
                        CoreValueType::Var("ob".into()),
                    ),
                ],
                peg: CorePeg {
                    ability: CoreAbility { head: AbilityHead::Var("oe".into()), instances: vec![] },
                    value: CoreValueType::Var("ob".into()),
                },
            })),
        };
        mk(TermKind::Let {
            name: "onv".into(),
            poly: on_poly,
            bound: lambda(vec!["oa".into(), "of".into()], app(var("of"), vec![var("oa")])),
            body: app(
                mk(TermKind::PolyApp(
                    "onv".into(),
                    vec![
                        CoreTypeArg::Ab(abort_amb()),
                        CoreTypeArg::Val(bound_ty),
                        CoreTypeArg::Val(yv.clone()),
                    ],
                )),
                vec![bound, lambda(vec![binder.into()], body)],
            ),
        })
    };

    // the recursive call: pipe [e] X Y (λ(). s (λ(). unit)) (λ(). r (λ(). sx))
    let recursive_call = app(
        mk(TermKind::PolyApp(
            "pipe".into(),
            vec![
                CoreTypeArg::Ab(eps()),
                CoreTypeArg::Val(xv.clone()),
                CoreTypeArg::Val(yv.clone()),
            ],
        )),
        vec![
            lambda(
                vec![],
                app(var("s"), vec![lambda(vec![], mk(TermKind::Ctor("unit".into(), vec![])))]),
            ),
            lambda(vec![], app(var("r"), vec![lambda(vec![], var("sx"))])),
        ],
    );
    // adapters: λv. k (v!)
    let send_cont_ty = thunk1(thunk0(send_amb.clone(), unit_ty.clone()), send_amb.clone(), unit_ty.clone());
    let receive_cont_ty = thunk1(thunk0(receive_amb.clone(), xv.clone()), receive_amb.clone(), yv.clone());
    let adapter = |k: &str, v: &str| lambda(vec![v.into()], app(var(k), vec![app(var(v), vec![])]));

    let comm_body = on_let(
        adapter("rk", "rv"),
        receive_cont_ty,
        "r",
        on_let(adapter("sk", "sv"), send_cont_ty, "s", recursive_call),
    );

    let inner_handle_comm = mk(TermKind::Handle {
        adjustment: receive_adj.clone(),
        peg: peg.clone(),
        scrutinee_ty: yv.clone(),
        scrutinee: app(var("y"), vec![]),
        clauses: vec![HandleClause {
            command: "receive".into(),
            args: vec![],
            continuation: "rk".into(),
            body: comm_body,
        }],
        ret_var: "w".into(),
        ret_body: var("w"),
    });

    // The minimal head solution: the ambient's Abort instance is shadowed by
    // abort's own peg instance, so the effect argument stays bare.
    let abort_call = app(
        mk(TermKind::PolyApp(
            "abort".into(),
            vec![CoreTypeArg::Ab(eps()), CoreTypeArg::Val(yv.clone())],
        )),
        vec![],
    );
    let inner_handle_stop = mk(TermKind::Handle {
        adjustment: receive_adj,
        peg: peg.clone(),
        scrutinee_ty: yv.clone(),
        scrutinee: app(var("y"), vec![]),
        clauses: vec![HandleClause {
            command: "receive".into(),
            args: vec![],
            continuation: "rk2".into(),
            body: abort_call,
        }],
        ret_var: "w2".into(),
        ret_body: var("w2"),
    });

    let value_branch = mk(TermKind::Case(
        var("w0"),
        vec![("unit".into(), vec![], inner_handle_stop)],
    ));

    let outer = mk(TermKind::Handle {
        adjustment: send_adj,
        peg,
        scrutinee_ty: unit_ty,
        scrutinee: app(var("x"), vec![]),
        clauses: vec![HandleClause {
            command: "send".into(),
            args: vec!["sx".into()],
            continuation: "sk".into(),
            body: inner_handle_comm,
        }],
        ret_var: "w0".into(),
        ret_body: value_branch,
    });

    (poly, vec!["x".into(), "y".into()], outer)
}

#[test]
fn criterion_3_pipe_elaboration() {
    let core = elaborate_corpus("unit.fk", true, &console_ability());
    let TermKind::LetRec { bindings, .. } = &core.term.kind else {
        panic!("expected a letrec at the top");
    };
    let (_, actual_poly, actual_params, actual_body) = bindings
        .iter()
        .find(|(n, _, _, _)| n == "pipe")
        .cloned()
        .expect("pipe in the prelude");
    let (expected_poly, expected_params, expected_body) = expected_pipe();

    // Compare bodies after instantiating both polytypes at shared names.
    let canon = vec![
        CoreTypeArg::Ab(CoreAbility { head: AbilityHead::Var("%cE".into()), instances: vec![] }),
        CoreTypeArg::Val(CoreValueType::Var("%cX".into())),
        CoreTypeArg::Val(CoreValueType::Var("%cY".into())),
    ];
    assert_eq!(actual_poly.binders.len(), expected_poly.binders.len());
    assert!(
        core_types_equal(&actual_poly.instantiate(&canon), &expected_poly.instantiate(&canon)),
        "pipe's polytype differs:\n  actual:   {}\n  expected: {}",
        print::show_poly_type(&actual_poly),
        print::show_poly_type(&expected_poly),
    );

    let pairs_a: Vec<(CoreTypeParam, CoreTypeArg)> =
        actual_poly.binders.iter().cloned().zip(canon.iter().cloned()).collect();
    let pairs_e: Vec<(CoreTypeParam, CoreTypeArg)> =
        expected_poly.binders.iter().cloned().zip(canon.iter().cloned()).collect();
    let a = subst_types_in_term(&lambda(actual_params, actual_body), &pairs_a)
        .expect("instantiation changes the body");
    let e = subst_types_in_term(&lambda(expected_params, expected_body), &pairs_e)
        .expect("instantiation changes the body");
    assert!(
        alpha_eq(&a, &e),
        "pipe's elaboration differs from the reference\n--- actual ---\n{}\n--- expected ---\n{}",
        show_term(&a),
        show_term(&e),
    );
    println!("criterion 3 (pipe elaboration fidelity): PASS");
}

// ---------------------------------------------------------------------------
// 4. Metatheory: subject reduction and progress
// ---------------------------------------------------------------------------

fn subject_reduction_steps(name: &str, prelude: bool, pure: bool, input: &str) -> u64 {
    let ability = if pure { pure_ability() } else { console_ability() };
    let core = elaborate_corpus(name, prelude, &ability);
    let checker = CoreChecker::new(&core.decls);
    checker
        .check_program(&core.term, &core.ability, &core.ty)
        .unwrap_or_else(|e| panic!("{name}: initial term fails to check: {}", e.message));
    let result = run_scripted(&core, input, |term| {
        if let Err(e) = checker.check_program(term, &core.ability, &core.ty) {
            panic!("{name}: subject reduction violated: {}\n{}", e.message, show_term(term));
        }
    });
    result.steps
}

#[test]
fn criterion_4_metatheory() {
    let handle = std::thread::Builder::new()
        .stack_size(512 * 1024 * 1024)
        .spawn(|| {
            // Subject reduction: every step of every corpus program
            // re-checks at an unchanged type.
            let mut total = 0;
            for name in ["mini/counter.fk", "mini/fold.fk", "mini/toggle.fk", "mini/pump.fk", "mini/pump2.fk"] {
                total += subject_reduction_steps(name, false, true, "");
            }
            for name in ["map.fk", "index.fk", "unit.fk", "shortand.fk", "catch_shadow.fk", "pipe.fk", "spacer_outer.fk", "spacer_inner.fk"] {
                total += subject_reduction_steps(name, true, false, "");
            }
            total += subject_reduction_steps("rollback.fk", true, false, "00\u{8}1 ");
            assert!(total >= 10_000, "only {total} checked steps");

            // Progress at the empty ability: closed checked terms reduce to
            // values, never getting stuck.
            for name in ["mini/counter.fk", "mini/fold.fk", "mini/toggle.fk"] {
                let core = elaborate_corpus(name, false, &pure_ability());
                let mut evaluator = Evaluator::new(&core.decls);
                let mut term = core.term.clone();
                loop {
                    match evaluator.step(&term).expect("progress: no stuck term") {
                        StepResult::Stepped(t) => term = t,
                        StepResult::Normal(NormalForm::Value(_)) => break,
                        StepResult::Normal(NormalForm::Request { command, .. }) => {
                            panic!("{name}: request `{command}` under the empty ability")
                        }
                    }
                }
            }

            // At the console ability every normal form is a value or a
            // Console request.
            let core = elaborate_corpus("rollback.fk", true, &console_ability());
            let mut evaluator = Evaluator::new(&core.decls);
            let mut term = core.term.clone();
            let mut queue: Vec<char> = "00 ".chars().rev().collect();
            loop {
                match evaluator.step(&term).expect("no stuck terms") {
                    StepResult::Stepped(t) => term = t,
                    StepResult::Normal(NormalForm::Value(_)) => break,
                    StepResult::Normal(NormalForm::Request { command, context, .. }) => {
                        assert!(
                            command == "inch" || command == "ouch",
                            "non-Console request `{command}` at the top"
                        );
                        let replacement = if command == "inch" {
                            annot(
                                mk(TermKind::CharLit(queue.pop().unwrap())),
                                CoreValueType::Data("Char".into(), vec![]),
                            )
                        } else {
                            annot(
                                mk(TermKind::Ctor("unit".into(), vec![])),
                                CoreValueType::Data("Unit".into(), vec![]),
                            )
                        };
                        term = frankc::eval::plug(&context, replacement);
                    }
                }
            }
            total
        })
        .unwrap();
    let total = handle.join().unwrap();
    println!("criterion 4 (subject reduction across {total} steps; progress): PASS");
}

// ---------------------------------------------------------------------------
// 5. Coverage
// ---------------------------------------------------------------------------

/// Enumerated signal shapes for the brute-force oracle.
#[derive(Clone, Debug)]
enum Shape {
    Top,
    Ctor(String, Vec<Shape>),
    Int(i64),
    Char(char),
    OtherLit,
    Request(String, Vec<Shape>),
}

fn value_shapes(
    decls: &frankc::syntax::Declarations,
    ty: &frankc::syntax::ValueType,
    lits: &[Literal],
    depth: u32,
) -> Vec<Shape> {
    use frankc::syntax::ValueType as V;
    if depth == 0 {
        return vec![Shape::Top];
    }
    match ty {
        V::Data(d, args) => {
            let decl = match decls.data(d) {
                Some(decl) => decl,
                None => return vec![Shape::Top],
            };
            if decl.builtin {
                let mut out: Vec<Shape> = lits
                    .iter()
                    .filter_map(|l| match (l, d.as_str()) {
                        (Literal::Int(n), "Int") => Some(Shape::Int(*n)),
                        (Literal::Char(c), "Char") => Some(Shape::Char(*c)),
                        _ => None,
                    })
                    .collect();
                out.push(Shape::OtherLit);
                return out;
            }
            let mut out = Vec::new();
            for ctor in &decl.ctors {
                let fields = decls.ctor_arg_types(d, args, &ctor.name).unwrap();
                let mut rows: Vec<Vec<Shape>> = vec![vec![]];
                for f in &fields {
                    let choices = value_shapes(decls, f, lits, depth - 1);
                    let mut next = Vec::new();
                    for row in &rows {
                        for c in &choices {
                            let mut r = row.clone();
                            r.push(c.clone());
                            next.push(r);
                        }
                    }
                    rows = next;
                }
                for row in rows {
                    out.push(Shape::Ctor(ctor.name.clone(), row));
                }
            }
            out
        }
        _ => vec![Shape::Top],
    }
}

fn port_shapes(
    decls: &frankc::syntax::Declarations,
    port: &frankc::syntax::Port,
    lits: &[Literal],
    depth: u32,
) -> Vec<Shape> {
    let mut out = value_shapes(decls, &port.value, lits, depth);
    for (command, sig) in frankc::syntax::handled_commands(decls, &port.adjustment) {
        let mut rows: Vec<Vec<Shape>> = vec![vec![]];
        for a in &sig.args {
            let choices = value_shapes(decls, a, lits, depth - 1);
            let mut next = Vec::new();
            for row in &rows {
                for c in &choices {
                    let mut r = row.clone();
                    r.push(c.clone());
                    next.push(r);
                }
            }
            rows = next;
        }
        for row in rows {
            out.push(Shape::Request(command.clone(), row));
        }
    }
    out
}

fn value_pattern_matches(p: &TValuePattern, s: &Shape) -> bool {
    match (p, s) {
        (TValuePattern::Var(_), _) => true,
        (TValuePattern::Ctor { name, args, .. }, Shape::Ctor(k, fields)) => {
            name == k && args.iter().zip(fields.iter()).all(|(a, f)| value_pattern_matches(a, f))
        }
        (TValuePattern::IntLit(n, _), Shape::Int(m)) => n == m,
        (TValuePattern::CharLit(c, _), Shape::Char(d)) => c == d,
        _ => false,
    }
}

fn comp_pattern_matches(p: &TCompPattern, s: &Shape) -> bool {
    match (p, s) {
        (TCompPattern::CatchAll(_, _), _) => true,
        (TCompPattern::Value(vp), Shape::Request(_, _)) => {
            let _ = vp;
            false
        }
        (TCompPattern::Value(vp), shape) => value_pattern_matches(vp, shape),
        (TCompPattern::Request { command, args, .. }, Shape::Request(c, fields)) => {
            command == c
                && args.iter().zip(fields.iter()).all(|(a, f)| value_pattern_matches(a, f))
        }
        (TCompPattern::Request { .. }, _) => false,
    }
}

/// Exhaustiveness by enumeration: every combination of signal shapes over
/// the ports must match some clause.
fn oracle_complete(decls: &frankc::syntax::Declarations, comp: &TComputation) -> bool {
    let mut lits = Vec::new();
    for clause in &comp.clauses {
        for pattern in &clause.patterns {
            collect_lits(pattern, &mut lits);
        }
    }
    let mut combos: Vec<Vec<Shape>> = vec![vec![]];
    for port in &comp.comp.ports {
        let shapes = port_shapes(decls, port, &lits, 3);
        let mut next = Vec::new();
        for row in &combos {
            for s in &shapes {
                let mut r = row.clone();
                r.push(s.clone());
                next.push(r);
            }
        }
        combos = next;
    }
    combos.iter().all(|combo| {
        comp.clauses.iter().any(|clause| {
            clause.patterns.iter().zip(combo.iter()).all(|(p, s)| comp_pattern_matches(p, s))
        })
    })
}

fn collect_lits(p: &TCompPattern, lits: &mut Vec<Literal>) {
    fn value(p: &TValuePattern, lits: &mut Vec<Literal>) {
        match p {
            TValuePattern::IntLit(n, _) => {
                if !lits.contains(&Literal::Int(*n)) {
                    lits.push(Literal::Int(*n));
                }
            }
            TValuePattern::CharLit(c, _) => {
                if !lits.contains(&Literal::Char(*c)) {
                    lits.push(Literal::Char(*c));
                }
            }
            TValuePattern::Ctor { args, .. } => args.iter().for_each(|a| value(a, lits)),
            TValuePattern::Var(_) => {}
        }
    }
    match p {
        TCompPattern::Value(vp) => value(vp, lits),
        TCompPattern::Request { args, .. } => args.iter().for_each(|a| value(a, lits)),
        TCompPattern::CatchAll(_, _) => {}
    }
}

/// No clause subsumes the witness: each reported missing case is real.
fn witness_unmatched(comp: &TComputation, witness: &Witness) -> bool {
    fn value_subsumes(p: &TValuePattern, w: &WitnessPat) -> bool {
        match (p, w) {
            (TValuePattern::Var(_), _) => true,
            (TValuePattern::Ctor { name, args, .. }, WitnessPat::Ctor(k, fields)) => {
                name == k && args.iter().zip(fields.iter()).all(|(a, f)| value_subsumes(a, f))
            }
            (TValuePattern::IntLit(n, _), WitnessPat::Lit(Literal::Int(m))) => n == m,
            (TValuePattern::CharLit(c, _), WitnessPat::Lit(Literal::Char(d))) => c == d,
            _ => false,
        }
    }
    fn comp_subsumes(p: &TCompPattern, w: &WitnessPat) -> bool {
        match (p, w) {
            (TCompPattern::CatchAll(_, _), _) => true,
            (TCompPattern::Value(vp), WitnessPat::Request(_, _)) => {
                let _ = vp;
                false
            }
            (TCompPattern::Value(vp), w) => value_subsumes(vp, w),
            (TCompPattern::Request { command, args, .. }, WitnessPat::Request(c, fields)) => {
                command == c
                    && args.iter().zip(fields.iter()).all(|(a, f)| value_subsumes(a, f))
            }
            (TCompPattern::Request { .. }, _) => false,
        }
    }
    !comp.clauses.iter().any(|clause| {
        clause.patterns.iter().zip(witness.0.iter()).all(|(p, w)| comp_subsumes(p, w))
    })
}

/// Build a typed computation for coverage probing: the sources carry one
/// definition `f` made total by a trailing clause, which is dropped before
/// the dry run so the remaining rows are the matrix under test.
fn probe_computation(extra: &str, drop_last: bool) -> (frankc::syntax::Declarations, TComputation) {
    let source = format!("{extra}\nmainp : [Console]Int\nmainp! = 0\n");
    let (checked, _) = check_sources(&[("probe".into(), source)], true, &console_ability())
        .unwrap_or_else(|e| panic!("probe failed to check: {}", e.0.render(&e.1)));
    let mut comp = typed_def(&checked, "f");
    if drop_last {
        comp.clauses.pop();
    }
    (checked.typed.decls, comp)
}

#[test]
fn criterion_5_coverage() {
    // Ten incomplete matrices; each witness is validated against the
    // enumeration oracle.
    let incomplete: Vec<&str> = vec![
        "f : Bool -> Int\nf tt = 1\nf x = 0\n",
        "f : Bool -> Bool -> Int\nf tt tt = 1\nf tt ff = 2\nf ff ff = 3\nf x y = 0\n",
        "f : List Int -> Int\nf nil = 1\nf x = 0\n",
        "f : List Bool -> Int\nf nil = 1\nf (cons tt xs) = 2\nf x = 0\n",
        "f : <State Int>Int -> Int\nf x = x\nf <get -> k> = 1\nf <_> = 0\n",
        "f : <State Int>Int -> Int\nf <get -> k> = 1\nf <put s -> k> = 2\nf <x> = 0\n",
        "f : Char -> Int\nf '0' = 1\nf ' ' = 2\nf c = 0\n",
        "f : Int -> Int\nf 3 = 1\nf n = 0\n",
        "f : Pair Bool Bool -> Int\nf (pair tt y) = 1\nf p = 0\n",
        "f : <Send Bool>Unit -> Int\nf x = 1\nf <send tt -> k> = 2\nf <_> = 0\n",
    ];
    for (i, src) in incomplete.iter().enumerate() {
        let (decls, comp) = probe_computation(src, true);
        match check_coverage(&decls, &comp) {
            CoverageReport::Incomplete(witness) => {
                assert!(
                    witness_unmatched(&comp, &witness),
                    "case {i}: witness `{witness}` is matched by a clause"
                );
                assert!(
                    !oracle_complete(&decls, &comp),
                    "case {i}: the enumeration oracle says the matrix is complete"
                );
            }
            other => panic!("case {i}: expected incompleteness, got {other:?}"),
        }
    }

    // Specific witnesses.
    let (decls, comp) = probe_computation("f : Bool -> Int\nf tt = 1\nf x = 0\n", true);
    match check_coverage(&decls, &comp) {
        CoverageReport::Incomplete(w) => assert_eq!(w.to_string(), "ff"),
        other => panic!("expected the ff witness, got {other:?}"),
    }

    // Complete matrices, agreed by the oracle.
    let prelude_checked = check_corpus("unit.fk", true, &console_ability());
    for name in ["state", "pipe"] {
        let comp = typed_def(&prelude_checked, name);
        assert_eq!(
            check_coverage(&prelude_checked.typed.decls, &comp),
            CoverageReport::Complete,
            "{name} should be complete"
        );
        assert!(oracle_complete(&prelude_checked.typed.decls, &comp));
    }

    // A computation over an uninhabited port value is complete without a
    // value row.
    let mapi = "data ZeroI =\ninterface ListI X = nili : ZeroI | consi : X -> ZeroI\n\
                f : {X -> [ListI Y]Y} -> <ListI X>ZeroI -> [ListI Y]ZeroI\n\
                f g <nili -> k> = nili!\nf g <consi x -> k> = consi (g x)\n";
    let (decls, comp) = probe_computation(mapi, false);
    assert_eq!(check_coverage(&decls, &comp), CoverageReport::Complete);

    // Duplicated rows are redundant.
    let (decls, comp) =
        probe_computation("f : Bool -> Int\nf tt = 1\nf tt = 2\nf x = 3\n", false);
    match check_coverage(&decls, &comp) {
        CoverageReport::Redundant(rows) => assert_eq!(rows, vec![1]),
        other => panic!("expected a redundancy report, got {other:?}"),
    }
    println!("criterion 5 (coverage and redundancy): PASS");
}

// ---------------------------------------------------------------------------
// 6. Console rollback
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_console_rollback() {
    let core = elaborate_corpus("rollback.fk", true, &console_ability());

    // Every accepted character is echoed; "00 " accepts two zeros and the
    // terminating space, so the parser returns 2 and echoes all three.
    let plain = run_scripted(&core, "00 ", |_| {});
    assert_eq!(plain.value.as_deref(), Some("2"));
    assert_eq!(plain.output, "00 ");

    // "00\b1 ": the backspace rolls back one accepted zero (erased on screen
    // with backspace-blank-backspace), the '1' is rejected and re-prompted,
    // and the final space terminates a one-zero parse.
    let rollback = run_scripted(&core, "00\u{8}1 ", |_| {});
    assert_eq!(rollback.value.as_deref(), Some("1"));
    assert_eq!(rollback.output, "00\u{8} \u{8} ");

    // Scripted determinism, including the step count.
    let again = run_scripted(&core, "00\u{8}1 ", |_| {});
    assert_eq!(again.value, rollback.value);
    assert_eq!(again.output, rollback.output);
    assert_eq!(again.steps, rollback.steps);
    println!("criterion 6 (console rollback): PASS");
}

// ---------------------------------------------------------------------------
// 7. Ability algebra laws
// ---------------------------------------------------------------------------

mod ability_laws {
    use frankc::syntax::*;
    use proptest::prelude::*;

    fn decls() -> Declarations {
        let sp = crate::frank_span();
        let param = |n: &str| TypeParam::Val(n.into());
        Declarations {
            datas: vec![],
            interfaces: vec![
                InterfaceDecl {
                    name: "State".into(),
                    params: vec![param("S")],
                    commands: vec![
                        CommandDecl {
                            name: "get".into(),
                            args: vec![],
                            result: ValueType::Var("S".into()),
                            span: sp,
                        },
                        CommandDecl {
                            name: "put".into(),
                            args: vec![ValueType::Var("S".into())],
                            result: ValueType::Data("Unit".into(), vec![]),
                            span: sp,
                        },
                    ],
                    span: sp,
                },
                InterfaceDecl {
                    name: "Send".into(),
                    params: vec![param("X")],
                    commands: vec![CommandDecl {
                        name: "send".into(),
                        args: vec![ValueType::Var("X".into())],
                        result: ValueType::Data("Unit".into(), vec![]),
                        span: sp,
                    }],
                    span: sp,
                },
                InterfaceDecl {
                    name: "Abort".into(),
                    params: vec![],
                    commands: vec![CommandDecl {
                        name: "aborting".into(),
                        args: vec![],
                        result: ValueType::Data("Zero".into(), vec![]),
                        span: sp,
                    }],
                    span: sp,
                },
                InterfaceDecl {
                    name: "Console".into(),
                    params: vec![],
                    commands: vec![CommandDecl {
                        name: "inch".into(),
                        args: vec![],
                        result: ValueType::Data("Char".into(), vec![]),
                        span: sp,
                    }],
                    span: sp,
                },
            ],
        }
    }

    fn arg_strategy() -> impl Strategy<Value = TypeArg> {
        prop_oneof![
            Just(TypeArg::Val(ValueType::Data("Int".into(), vec![]))),
            Just(TypeArg::Val(ValueType::Data("Bool".into(), vec![]))),
            Just(TypeArg::Val(ValueType::Var("X".into()))),
        ]
    }

    fn instance_strategy() -> impl Strategy<Value = Instance> {
        prop_oneof![
            arg_strategy().prop_map(|a| Instance { interface: "State".into(), args: vec![a] }),
            arg_strategy().prop_map(|a| Instance { interface: "Send".into(), args: vec![a] }),
            Just(Instance { interface: "Abort".into(), args: vec![] }),
            Just(Instance { interface: "Console".into(), args: vec![] }),
        ]
    }

    fn ability_strategy() -> impl Strategy<Value = Ability> {
        let head = prop_oneof![
            Just(AbilityHead::Empty),
            Just(AbilityHead::Var("%e0".into())),
            Just(AbilityHead::Var("%e1".into())),
        ];
        (head, proptest::collection::vec(instance_strategy(), 0..6))
            .prop_map(|(head, instances)| Ability { head, instances })
    }

    fn adjustment_strategy() -> impl Strategy<Value = Adjustment> {
        proptest::collection::vec(instance_strategy(), 0..5)
            .prop_map(|instances| Adjustment { instances })
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 2600, ..ProptestConfig::default() })]

        #[test]
        fn normalization_is_idempotent(sigma in ability_strategy()) {
            let once = normalize_ability(&sigma);
            prop_assert_eq!(normalize_ability(&once), once.clone());
        }

        #[test]
        fn identity_adjustment_is_exact(sigma in ability_strategy()) {
            prop_assert_eq!(apply_adjustment(&sigma, &Adjustment::identity()), sigma);
        }

        #[test]
        fn lookup_agrees_with_the_adjustment(sigma in ability_strategy(), delta in adjustment_strategy()) {
            let d = decls();
            let extended = apply_adjustment(&sigma, &delta);
            for (command, sig) in handled_commands(&d, &delta) {
                let found = lookup_command(&d, &extended, &command)
                    .expect("handled command resolves in the extended ability");
                prop_assert_eq!(found, sig);
            }
        }

        #[test]
        fn shadowed_inserts_do_not_change_equality(
            sigma in ability_strategy(),
            inst in instance_strategy(),
            position in 0usize..6,
        ) {
            // Insert an instance somewhere before an identical id that
            // already occurs later; normalization must be unaffected.
            let mut noisy = sigma.clone();
            let pos = position.min(noisy.instances.len());
            noisy.instances.insert(pos, inst.clone());
            let mut shadowing = noisy.clone();
            shadowing.instances.push(inst);
            let mut reference = sigma;
            reference.instances.push(shadowing.instances.last().unwrap().clone());
            prop_assert!(abilities_equal(&shadowing, &reference));
        }
    }
}

pub fn frank_span() -> frankc::span::Span {
    frankc::span::Span::synthetic()
}

// Silence the unused-import lint for items used only in some test blocks.
#[allow(unused)]
fn _core_check_hook(core: &frankc::elaborate::CoreProgram) {
    core_check(core);
    let _ = Rc::strong_count(&core.term);
}
