//! Substitution-based small-step evaluation for Core terms.
//!
//! Decomposition follows the evaluation-context grammar left to right,
//! innermost first; a command instance reduces at the nearest enclosing
//! handler with a clause for it, and the captured continuation does not
//! re-enter the handler. A term that is neither a value nor reducible is a
//! request for the surrounding context.

use crate::core::print::show_term;
use crate::core::subst::Subst;
use crate::core::*;
use crate::syntax::Name;
use std::collections::{BTreeSet, HashMap};

#[derive(Clone, Debug)]
pub enum EvalError {
    /// A closed, non-normal, non-decomposable term: a soundness bug if it
    /// ever appears on checked input.
    Stuck(Term, String),
    FuelExhausted(Term),
    ArithmeticOverflow,
}

/// One frame of an evaluation context, outermost first in a context stack.
#[derive(Clone, Debug)]
pub enum Frame {
    /// `ℰ n̄`
    AppHead { args: Vec<Term> },
    /// `v (w̄, ℰ, n̄)`
    AppArg { head: Term, before: Vec<Term>, after: Vec<Term> },
    /// `(ℰ : A)`
    Annot(CoreValueType),
    /// `k (w̄, ℰ, n̄)`
    CtorArg { name: Name, before: Vec<Term>, after: Vec<Term> },
    CaseScrut { branches: Vec<(Name, Vec<Name>, Term)> },
    LitCaseScrut { arms: Vec<(Literal, Term)>, default: Term },
    HandleScrut {
        adjustment: CoreAdjustment,
        peg: CorePeg,
        scrutinee_ty: CoreValueType,
        clauses: Vec<HandleClause>,
        ret_var: Name,
        ret_body: Term,
    },
    /// `let f : P = ℰ in n`
    LetBound { name: Name, poly: CorePolyType, body: Term },
}

/// The set of commands handled by a context: the union of its handler
/// frames' clause commands; every other frame contributes nothing.
pub fn handled_commands_of_context(frames: &[Frame]) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    for frame in frames {
        if let Frame::HandleScrut { clauses, .. } = frame {
            out.extend(clauses.iter().map(|c| c.command.clone()));
        }
    }
    out
}

/// Rebuild `ℰ[t]` from a context stack.
pub fn plug(frames: &[Frame], term: Term) -> Term {
    let mut t = term;
    for frame in frames.iter().rev() {
        t = match frame {
            Frame::AppHead { args } => app(t, args.clone()),
            Frame::AppArg { head, before, after } => {
                let mut args = before.clone();
                args.push(t);
                args.extend(after.iter().cloned());
                app(head.clone(), args)
            }
            Frame::Annot(ty) => annot(t, ty.clone()),
            Frame::CtorArg { name, before, after } => {
                let mut args = before.clone();
                args.push(t);
                args.extend(after.iter().cloned());
                mk(TermKind::Ctor(name.clone(), args))
            }
            Frame::CaseScrut { branches } => mk(TermKind::Case(t, branches.clone())),
            Frame::LitCaseScrut { arms, default } => mk(TermKind::LitCase {
                scrutinee: t,
                arms: arms.clone(),
                default: default.clone(),
            }),
            Frame::HandleScrut { adjustment, peg, scrutinee_ty, clauses, ret_var, ret_body } => {
                mk(TermKind::Handle {
                    adjustment: adjustment.clone(),
                    peg: peg.clone(),
                    scrutinee_ty: scrutinee_ty.clone(),
                    scrutinee: t,
                    clauses: clauses.clone(),
                    ret_var: ret_var.clone(),
                    ret_body: ret_body.clone(),
                })
            }
            Frame::LetBound { name, poly, body } => mk(TermKind::Let {
                name: name.clone(),
                poly: poly.clone(),
                bound: t,
                body: body.clone(),
            }),
        };
    }
    t
}

#[derive(Clone, Debug)]
pub enum NormalForm {
    Value(Term),
    /// `ℰ[c w̄]` with `c` unhandled by `ℰ`.
    Request { command: Name, args: Vec<Term>, context: Vec<Frame> },
}

/// What decomposition found at the unique evaluation position.
enum Decomposition {
    Normal(NormalForm),
    Redex { frames: Vec<Frame>, redex: Term },
}

pub enum StepResult {
    Stepped(Term),
    Normal(NormalForm),
}

pub struct Evaluator<'a> {
    pub decls: &'a CoreDecls,
    pub steps: u64,
    fresh: u64,
    pub trace: bool,
}

impl<'a> Evaluator<'a> {
    pub fn new(decls: &'a CoreDecls) -> Self {
        Evaluator { decls, steps: 0, fresh: 0, trace: false }
    }

    fn fresh_var(&mut self) -> Name {
        self.fresh += 1;
        format!("%k{}", self.fresh)
    }

    /// Unique decomposition into context and redex, or a normal form.
    fn decompose(&self, root: &Term) -> Result<Decomposition, EvalError> {
        if root.is_value {
            return Ok(Decomposition::Normal(NormalForm::Value(root.clone())));
        }
        let mut frames: Vec<Frame> = Vec::new();
        let mut current = root.clone();
        loop {
            debug_assert!(!current.is_value);
            match &current.kind {
                TermKind::App(head, args) => {
                    if !head.is_use_value {
                        frames.push(Frame::AppHead { args: args.clone() });
                        let next = head.clone();
                        current = next;
                        continue;
                    }
                    if let Some(i) = args.iter().position(|a| !a.is_value) {
                        frames.push(Frame::AppArg {
                            head: head.clone(),
                            before: args[..i].to_vec(),
                            after: args[i + 1..].to_vec(),
                        });
                        let next = args[i].clone();
                        current = next;
                        continue;
                    }
                    // Head value applied to value arguments.
                    match &head.kind {
                        TermKind::Command(c) => {
                            // A command instance: the nearest handler with a
                            // clause for it wins; otherwise it is normal.
                            let handler = frames.iter().rposition(|f| {
                                matches!(f, Frame::HandleScrut { clauses, .. }
                                    if clauses.iter().any(|cl| cl.command == *c))
                            });
                            match handler {
                                Some(_) => {
                                    return Ok(Decomposition::Redex { frames, redex: current })
                                }
                                None => {
                                    return Ok(Decomposition::Normal(NormalForm::Request {
                                        command: c.clone(),
                                        args: args.clone(),
                                        context: frames,
                                    }))
                                }
                            }
                        }
                        _ => return Ok(Decomposition::Redex { frames, redex: current }),
                    }
                }
                TermKind::Annot(inner, ty) => {
                    if inner.is_use_value {
                        // erasure redex
                        return Ok(Decomposition::Redex { frames, redex: current.clone() });
                    }
                    debug_assert!(!inner.is_value, "annotated non-use values are values");
                    frames.push(Frame::Annot(ty.clone()));
                    let next = inner.clone();
                    current = next;
                }
                TermKind::Ctor(name, args) => {
                    let Some(i) = args.iter().position(|a| !a.is_value) else {
                        unreachable!("constructor of values is a value");
                    };
                    frames.push(Frame::CtorArg {
                        name: name.clone(),
                        before: args[..i].to_vec(),
                        after: args[i + 1..].to_vec(),
                    });
                    let next = args[i].clone();
                    current = next;
                }
                TermKind::Case(scrut, branches) => {
                    if scrut.is_value {
                        return Ok(Decomposition::Redex { frames, redex: current.clone() });
                    }
                    frames.push(Frame::CaseScrut { branches: branches.clone() });
                    let next = scrut.clone();
                    current = next;
                }
                TermKind::LitCase { scrutinee, arms, default } => {
                    if scrutinee.is_value {
                        return Ok(Decomposition::Redex { frames, redex: current.clone() });
                    }
                    frames.push(Frame::LitCaseScrut { arms: arms.clone(), default: default.clone() });
                    let next = scrutinee.clone();
                    current = next;
                }
                TermKind::Handle {
                    adjustment,
                    peg,
                    scrutinee_ty,
                    scrutinee,
                    clauses,
                    ret_var,
                    ret_body,
                } => {
                    if scrutinee.is_value {
                        return Ok(Decomposition::Redex { frames, redex: current.clone() });
                    }
                    frames.push(Frame::HandleScrut {
                        adjustment: adjustment.clone(),
                        peg: peg.clone(),
                        scrutinee_ty: scrutinee_ty.clone(),
                        clauses: clauses.clone(),
                        ret_var: ret_var.clone(),
                        ret_body: ret_body.clone(),
                    });
                    let next = scrutinee.clone();
                    current = next;
                }
                TermKind::Let { name, poly, bound, body } => {
                    if bound.is_value {
                        return Ok(Decomposition::Redex { frames, redex: current.clone() });
                    }
                    frames.push(Frame::LetBound {
                        name: name.clone(),
                        poly: poly.clone(),
                        body: body.clone(),
                    });
                    let next = bound.clone();
                    current = next;
                }
                TermKind::LetRec { .. } => {
                    return Ok(Decomposition::Redex { frames, redex: current.clone() })
                }
                other => {
                    return Err(EvalError::Stuck(
                        plug(&frames, current.clone()),
                        format!("cannot decompose {other:?}"),
                    ))
                }
            }
        }
    }

    /// Contract one redex inside its context.
    fn contract(&mut self, frames: Vec<Frame>, redex: Term) -> Result<Term, EvalError> {
        let reduced = match &redex.kind {
            // (v : A) ⟶ v
            TermKind::Annot(inner, _) => inner.clone(),
            TermKind::App(head, args) => match &head.kind {
                TermKind::Annot(fun, ty) => {
                    let TermKind::Lambda(params, body) = &fun.kind else {
                        return Err(EvalError::Stuck(
                            plug(&frames, redex.clone()),
                            "application head is not a function".into(),
                        ));
                    };
                    let CoreValueType::Thunk(comp) = ty else {
                        return Err(EvalError::Stuck(
                            plug(&frames, redex.clone()),
                            "application head annotation is not a suspension type".into(),
                        ));
                    };
                    if params.len() != args.len() || comp.args.len() != args.len() {
                        return Err(EvalError::Stuck(
                            plug(&frames, redex.clone()),
                            "application arity mismatch".into(),
                        ));
                    }
                    // (λ x̄. n : {Ā → [Σ]B}) w̄ ⟶ (n[(w:A)/x̄] : B)
                    let mut mono = HashMap::new();
                    for ((p, w), a) in params.iter().zip(args.iter()).zip(comp.args.iter()) {
                        mono.insert(p.clone(), annot(w.clone(), a.clone()));
                    }
                    let substituted = Subst::new(mono, HashMap::new()).apply(body);
                    annot(substituted, comp.peg.value.clone())
                }
                TermKind::Builtin(name, _) if name == "intAdd" => {
                    let lhs = strip_int(&args[0]);
                    let rhs = strip_int(&args[1]);
                    match (lhs, rhs) {
                        (Some(a), Some(b)) => {
                            let sum = a.checked_add(b).ok_or(EvalError::ArithmeticOverflow)?;
                            annot(
                                mk(TermKind::IntLit(sum)),
                                CoreValueType::Data("Int".into(), vec![]),
                            )
                        }
                        _ => {
                            return Err(EvalError::Stuck(
                                plug(&frames, redex.clone()),
                                "intAdd applied to non-integers".into(),
                            ))
                        }
                    }
                }
                TermKind::Command(c) => {
                    return self.contract_command(frames, c.clone(), args.clone());
                }
                other => {
                    return Err(EvalError::Stuck(
                        plug(&frames, redex.clone()),
                        format!("cannot apply {other:?}"),
                    ))
                }
            },
            TermKind::Case(scrut, branches) => {
                let Some((ctor, fields, data, data_args)) = strip_ctor(scrut) else {
                    return Err(EvalError::Stuck(
                        plug(&frames, redex.clone()),
                        "case scrutinee is not an annotated constructor value".into(),
                    ));
                };
                let Some((_, binders, body)) = branches.iter().find(|(k, _, _)| *k == ctor) else {
                    return Err(EvalError::Stuck(
                        plug(&frames, redex.clone()),
                        format!("no case branch for `{ctor}`"),
                    ));
                };
                let field_tys = self
                    .decls
                    .ctors_of(&data, &data_args)
                    .and_then(|cs| cs.into_iter().find(|(k, _)| *k == ctor).map(|(_, f)| f))
                    .unwrap_or_else(|| vec![CoreValueType::Var("%field".into()); fields.len()]);
                let mut mono = HashMap::new();
                for ((b, w), ty) in binders.iter().zip(fields.iter()).zip(field_tys.iter()) {
                    mono.insert(b.clone(), annot(w.clone(), ty.clone()));
                }
                Subst::new(mono, HashMap::new()).apply(body)
            }
            TermKind::LitCase { scrutinee, arms, default } => {
                let Some(lit) = strip_lit(scrutinee) else {
                    return Err(EvalError::Stuck(
                        plug(&frames, redex.clone()),
                        "literal case scrutinee is not a literal value".into(),
                    ));
                };
                match arms.iter().find(|(l, _)| *l == lit) {
                    Some((_, body)) => body.clone(),
                    None => default.clone(),
                }
            }
            TermKind::Handle { scrutinee, ret_var, ret_body, .. } => {
                debug_assert!(scrutinee.is_value);
                // handle v with ... | x ↦ n' ⟶ n'[v/x]
                Subst::mono_one(ret_var.clone(), scrutinee.clone()).apply(ret_body)
            }
            TermKind::Let { name, poly, bound, body } => {
                debug_assert!(bound.is_value);
                let mut poly_map = HashMap::new();
                poly_map.insert(name.clone(), (bound.clone(), poly.clone()));
                Subst::new(HashMap::new(), poly_map).apply(body)
            }
            TermKind::LetRec { bindings, body } => {
                // Each binder unfolds one level, re-wrapping the letrec
                // inside its lambda body.
                let mut poly_map = HashMap::new();
                for (name, poly, params, fn_body) in bindings.iter() {
                    let unfolded = lambda(
                        params.clone(),
                        mk(TermKind::LetRec { bindings: bindings.clone(), body: fn_body.clone() }),
                    );
                    poly_map.insert(name.clone(), (unfolded, poly.clone()));
                }
                Subst::new(HashMap::new(), poly_map).apply(body)
            }
            other => {
                return Err(EvalError::Stuck(
                    plug(&frames, redex.clone()),
                    format!("not a redex: {other:?}"),
                ))
            }
        };
        Ok(plug(&frames, reduced))
    }

    /// The handle-command rule: dispatch `c w̄` to the nearest handler with a
    /// clause for it, capturing the one-shot continuation below that handler.
    fn contract_command(
        &mut self,
        frames: Vec<Frame>,
        command: Name,
        args: Vec<Term>,
    ) -> Result<Term, EvalError> {
        let idx = frames
            .iter()
            .rposition(|f| {
                matches!(f, Frame::HandleScrut { clauses, .. }
                    if clauses.iter().any(|cl| cl.command == command))
            })
            .expect("contract_command requires a handler");
        let inner = frames[idx + 1..].to_vec();
        let Frame::HandleScrut { adjustment, peg, scrutinee_ty, clauses, .. } = &frames[idx]
        else {
            unreachable!()
        };
        debug_assert!(!handled_commands_of_context(&inner).contains(&command));

        let clause = clauses.iter().find(|cl| cl.command == command).unwrap().clone();
        let sig = self
            .decls
            .handled_commands(adjustment)
            .into_iter()
            .find(|(c, _)| *c == command)
            .map(|(_, s)| s)
            .expect("handler clause for an undeclared command");

        // (λy. ℰ[y] : {B → [Σ ⊕ Δ]A'})
        let y = self.fresh_var();
        let cont_body = plug(&inner, var(y.clone()));
        let cont_ty = CoreValueType::Thunk(Box::new(CoreCompType {
            args: vec![sig.result.clone()],
            peg: CorePeg {
                ability: peg.ability.extend(adjustment),
                value: scrutinee_ty.clone(),
            },
        }));
        let continuation = annot(lambda(vec![y], cont_body), cont_ty);

        let mut mono = HashMap::new();
        for ((x, w), ty) in clause.args.iter().zip(args.iter()).zip(sig.args.iter()) {
            mono.insert(x.clone(), annot(w.clone(), ty.clone()));
        }
        mono.insert(clause.continuation.clone(), continuation);
        let body = Subst::new(mono, HashMap::new()).apply(&clause.body);
        Ok(plug(&frames[..idx], body))
    }

    /// Perform exactly one reduction.
    pub fn step(&mut self, term: &Term) -> Result<StepResult, EvalError> {
        match self.decompose(term)? {
            Decomposition::Normal(n) => Ok(StepResult::Normal(n)),
            Decomposition::Redex { frames, redex } => {
                let next = self.contract(frames, redex)?;
                self.steps += 1;
                if self.trace {
                    eprintln!("--- step {} ---", self.steps);
                    eprintln!("{}", show_term(&next));
                }
                Ok(StepResult::Stepped(next))
            }
        }
    }

    /// Iterate `step` until a normal form, within the fuel bound.
    pub fn eval_to_normal(&mut self, mut term: Term, fuel: u64) -> Result<(NormalForm, u64), EvalError> {
        let start = self.steps;
        loop {
            if self.steps - start > fuel {
                return Err(EvalError::FuelExhausted(term));
            }
            match self.step(&term)? {
                StepResult::Stepped(next) => term = next,
                StepResult::Normal(n) => return Ok((n, self.steps - start)),
            }
        }
    }
}

/// Strip annotations off a value.
pub fn strip_annotations(t: &Term) -> Term {
    let mut current = t.clone();
    while let TermKind::Annot(inner, _) = &current.kind {
        let next = inner.clone();
        current = next;
    }
    current
}

fn strip_int(t: &Term) -> Option<i64> {
    match &strip_annotations(t).kind {
        TermKind::IntLit(n) => Some(*n),
        _ => None,
    }
}

fn strip_lit(t: &Term) -> Option<Literal> {
    match &strip_annotations(t).kind {
        TermKind::IntLit(n) => Some(Literal::Int(*n)),
        TermKind::CharLit(c) => Some(Literal::Char(*c)),
        _ => None,
    }
}

/// A case scrutinee value `(k w̄ : D R̄)`: the constructor, its fields, and
/// the data instance for field annotations.
fn strip_ctor(t: &Term) -> Option<(Name, Vec<Term>, Name, Vec<CoreTypeArg>)> {
    match &t.kind {
        TermKind::Annot(inner, ty) => match (&inner.kind, ty) {
            (TermKind::Ctor(k, fields), CoreValueType::Data(d, args)) => {
                Some((k.clone(), fields.clone(), d.clone(), args.clone()))
            }
            _ => strip_ctor(inner),
        },
        _ => None,
    }
}
