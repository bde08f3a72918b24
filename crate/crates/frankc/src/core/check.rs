//! The Core type checker: fully annotated and syntax-directed, no
//! unification. Handlers check their scrutinee under the extended ambient and
//! their clause bodies under the outer one; continuations are plain
//! functions, so handling is shallow.

use super::*;
use crate::syntax::Name as SName;
use std::cell::RefCell;
use std::collections::HashSet;

#[derive(Clone, Debug)]
pub struct CoreTypeError {
    pub message: String,
}

fn fail<T>(message: impl Into<String>) -> Result<T, CoreTypeError> {
    Err(CoreTypeError { message: message.into() })
}

#[derive(Clone, Debug)]
pub enum CoreEnvEntry {
    Mono(CoreValueType),
    Poly(CorePolyType),
    Builtin(CorePolyType),
}

pub struct CoreEnv {
    entries: Vec<(SName, CoreEnvEntry)>,
}

impl CoreEnv {
    /// The initial environment carries the builtin operators.
    pub fn new() -> Self {
        CoreEnv { entries: vec![("intAdd".into(), CoreEnvEntry::Builtin(core_int_add_poly()))] }
    }

    fn lookup(&self, name: &str) -> Option<&CoreEnvEntry> {
        self.entries.iter().rev().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    fn push_mono(&mut self, name: &str, ty: CoreValueType) {
        self.entries.push((name.to_string(), CoreEnvEntry::Mono(ty)));
    }

    fn push_poly(&mut self, name: &str, poly: CorePolyType) {
        self.entries.push((name.to_string(), CoreEnvEntry::Poly(poly)));
    }

    fn mark(&self) -> usize {
        self.entries.len()
    }

    fn reset(&mut self, mark: usize) {
        self.entries.truncate(mark);
    }
}

impl Default for CoreEnv {
    fn default() -> Self {
        Self::new()
    }
}

pub fn core_int_add_poly() -> CorePolyType {
    let int = CoreValueType::Data("Int".into(), vec![]);
    let eps = "%eIntAdd".to_string();
    CorePolyType {
        binders: vec![CoreTypeParam::Eff(eps.clone())],
        body: CoreValueType::Thunk(Box::new(CoreCompType {
            args: vec![int.clone(), int.clone()],
            peg: CorePeg {
                ability: CoreAbility { head: AbilityHead::Var(eps), instances: vec![] },
                value: int,
            },
        })),
    }
}

pub struct CoreChecker<'a> {
    pub decls: &'a CoreDecls,
    /// Closed, already-validated letrec binding groups, by pointer identity.
    /// Evaluation re-wraps the same shared group at every unfolding, so
    /// re-checking it adds nothing.
    validated_letrecs: RefCell<HashSet<usize>>,
}

impl<'a> CoreChecker<'a> {
    pub fn new(decls: &'a CoreDecls) -> Self {
        CoreChecker { decls, validated_letrecs: RefCell::new(HashSet::new()) }
    }

    /// Check a closed program term against a type at a top ability.
    pub fn check_program(
        &self,
        term: &Term,
        ambient: &CoreAbility,
        expected: &CoreValueType,
    ) -> Result<(), CoreTypeError> {
        let mut env = CoreEnv::new();
        self.check(&mut env, ambient, term, expected)
    }

    pub fn infer(
        &self,
        env: &mut CoreEnv,
        ambient: &CoreAbility,
        term: &Term,
    ) -> Result<CoreValueType, CoreTypeError> {
        match &term.kind {
            TermKind::Var(x) => match env.lookup(x) {
                Some(CoreEnvEntry::Mono(ty)) => Ok(ty.clone()),
                Some(_) => fail(format!("polymorphic `{x}` needs explicit type application")),
                None => fail(format!("unbound variable `{x}`")),
            },
            TermKind::PolyApp(f, args) => match env.lookup(f) {
                Some(CoreEnvEntry::Poly(poly)) | Some(CoreEnvEntry::Builtin(poly)) => {
                    if poly.binders.len() != args.len() {
                        return fail(format!(
                            "`{f}` takes {} type argument(s), found {}",
                            poly.binders.len(),
                            args.len()
                        ));
                    }
                    Ok(poly.instantiate(args))
                }
                Some(_) => fail(format!("`{f}` is monomorphic but given type arguments")),
                None => fail(format!("unbound polymorphic variable `{f}`")),
            },
            TermKind::Builtin(f, args) => match env.lookup(f) {
                Some(CoreEnvEntry::Builtin(poly)) => {
                    if poly.binders.len() != args.len() {
                        return fail(format!("builtin `{f}` type argument arity mismatch"));
                    }
                    Ok(poly.instantiate(args))
                }
                _ => fail(format!("unknown builtin `{f}`")),
            },
            TermKind::Command(c) => match self.decls.lookup_command(ambient, c) {
                Some(sig) => Ok(CoreValueType::Thunk(Box::new(CoreCompType {
                    args: sig.args,
                    peg: CorePeg { ability: ambient.clone(), value: sig.result },
                }))),
                None => fail(format!(
                    "command `{c}` is not offered by the ambient ability [{}]",
                    print::show_ability(ambient)
                )),
            },
            TermKind::App(head, args) => {
                let head_ty = self.infer(env, ambient, head)?;
                let comp = match head_ty {
                    CoreValueType::Thunk(c) => *c,
                    other => {
                        return fail(format!(
                            "cannot apply a value of type `{}`",
                            print::show_value_type(&other)
                        ))
                    }
                };
                if comp.args.len() != args.len() {
                    return fail(format!(
                        "operator takes {} argument(s), found {}",
                        comp.args.len(),
                        args.len()
                    ));
                }
                if !core_abilities_equal(&comp.peg.ability, ambient) {
                    return fail(format!(
                        "peg ability [{}] does not match ambient [{}]",
                        print::show_ability(&comp.peg.ability),
                        print::show_ability(ambient)
                    ));
                }
                for (ty, arg) in comp.args.iter().zip(args.iter()) {
                    self.check(env, ambient, arg, ty)?;
                }
                Ok(comp.peg.value)
            }
            TermKind::Annot(n, ty) => {
                self.check(env, ambient, n, ty)?;
                Ok(ty.clone())
            }
            other => fail(format!("not a use: {other:?}")),
        }
    }

    pub fn check(
        &self,
        env: &mut CoreEnv,
        ambient: &CoreAbility,
        term: &Term,
        expected: &CoreValueType,
    ) -> Result<(), CoreTypeError> {
        match &term.kind {
            TermKind::Var(_)
            | TermKind::PolyApp(_, _)
            | TermKind::Command(_)
            | TermKind::Builtin(_, _)
            | TermKind::App(_, _)
            | TermKind::Annot(_, _) => {
                let found = self.infer(env, ambient, term)?;
                if core_types_equal(&found, expected) {
                    Ok(())
                } else {
                    fail(format!(
                        "expected `{}`, found `{}`",
                        print::show_value_type(expected),
                        print::show_value_type(&found)
                    ))
                }
            }
            TermKind::IntLit(_) => {
                if core_types_equal(expected, &CoreValueType::Data("Int".into(), vec![])) {
                    Ok(())
                } else {
                    fail(format!(
                        "an integer literal cannot have type `{}`",
                        print::show_value_type(expected)
                    ))
                }
            }
            TermKind::CharLit(_) => {
                if core_types_equal(expected, &CoreValueType::Data("Char".into(), vec![])) {
                    Ok(())
                } else {
                    fail(format!(
                        "a character literal cannot have type `{}`",
                        print::show_value_type(expected)
                    ))
                }
            }
            TermKind::Ctor(k, args) => {
                let CoreValueType::Data(d, dargs) = expected else {
                    return fail(format!(
                        "constructor `{k}` cannot have type `{}`",
                        print::show_value_type(expected)
                    ));
                };
                let ctors = self
                    .decls
                    .ctors_of(d, dargs)
                    .ok_or_else(|| CoreTypeError { message: format!("unknown data type `{d}`") })?;
                let fields = ctors
                    .into_iter()
                    .find(|(name, _)| name == k)
                    .map(|(_, f)| f)
                    .ok_or_else(|| CoreTypeError {
                        message: format!("`{k}` is not a constructor of `{d}`"),
                    })?;
                if fields.len() != args.len() {
                    return fail(format!(
                        "constructor `{k}` expects {} argument(s), found {}",
                        fields.len(),
                        args.len()
                    ));
                }
                for (ty, arg) in fields.iter().zip(args.iter()) {
                    self.check(env, ambient, arg, ty)?;
                }
                Ok(())
            }
            TermKind::Lambda(params, body) => {
                let CoreValueType::Thunk(comp) = expected else {
                    return fail(format!(
                        "a lambda cannot have type `{}`",
                        print::show_value_type(expected)
                    ));
                };
                if comp.args.len() != params.len() {
                    return fail(format!(
                        "lambda takes {} parameter(s) but its type has {}",
                        params.len(),
                        comp.args.len()
                    ));
                }
                let mark = env.mark();
                for (p, ty) in params.iter().zip(comp.args.iter()) {
                    env.push_mono(p, ty.clone());
                }
                let out = self.check(env, &comp.peg.ability, body, &comp.peg.value);
                env.reset(mark);
                out
            }
            TermKind::Case(scrut, branches) => {
                let scrut_ty = self.infer(env, ambient, scrut)?;
                let CoreValueType::Data(d, dargs) = &scrut_ty else {
                    return fail(format!(
                        "case scrutinee has non-data type `{}`",
                        print::show_value_type(&scrut_ty)
                    ));
                };
                if self.decls.is_builtin_data(d) {
                    return fail(format!("case over builtin `{d}` needs literal branches"));
                }
                let ctors = self
                    .decls
                    .ctors_of(d, dargs)
                    .ok_or_else(|| CoreTypeError { message: format!("unknown data type `{d}`") })?;
                if ctors.len() != branches.len() {
                    return fail(format!(
                        "case over `{d}` needs {} branch(es), found {}",
                        ctors.len(),
                        branches.len()
                    ));
                }
                for ((k, fields), (bk, binders, body)) in ctors.iter().zip(branches.iter()) {
                    if k != bk {
                        return fail(format!(
                            "case branch order: expected `{k}`, found `{bk}`"
                        ));
                    }
                    if fields.len() != binders.len() {
                        return fail(format!(
                            "branch `{bk}` binds {} variable(s) but `{k}` has {} field(s)",
                            binders.len(),
                            fields.len()
                        ));
                    }
                    let mark = env.mark();
                    for (b, ty) in binders.iter().zip(fields.iter()) {
                        env.push_mono(b, ty.clone());
                    }
                    let out = self.check(env, ambient, body, expected);
                    env.reset(mark);
                    out?;
                }
                Ok(())
            }
            TermKind::LitCase { scrutinee, arms, default } => {
                let scrut_ty = self.infer(env, ambient, scrutinee)?;
                let CoreValueType::Data(d, _) = &scrut_ty else {
                    return fail("literal case scrutinee must have a builtin type".to_string());
                };
                for (lit, _) in arms {
                    let ok = matches!(
                        (lit, d.as_str()),
                        (Literal::Int(_), "Int") | (Literal::Char(_), "Char")
                    );
                    if !ok {
                        return fail(format!("literal `{lit}` does not belong to `{d}`"));
                    }
                }
                for (_, body) in arms {
                    self.check(env, ambient, body, expected)?;
                }
                self.check(env, ambient, default, expected)
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
                if !core_abilities_equal(&peg.ability, ambient) {
                    return fail(format!(
                        "handler peg ability [{}] does not match ambient [{}]",
                        print::show_ability(&peg.ability),
                        print::show_ability(ambient)
                    ));
                }
                if !core_types_equal(&peg.value, expected) {
                    return fail(format!(
                        "handler peg type `{}` does not match expected `{}`",
                        print::show_value_type(&peg.value),
                        print::show_value_type(expected)
                    ));
                }
                let inner = ambient.extend(adjustment);
                let found = self.infer(env, &inner, scrutinee)?;
                if !core_types_equal(&found, scrutinee_ty) {
                    return fail(format!(
                        "handler scrutinee type `{}` does not match its annotation `{}`",
                        print::show_value_type(&found),
                        print::show_value_type(scrutinee_ty)
                    ));
                }
                let handled = self.decls.handled_commands(adjustment);
                if handled.len() != clauses.len() {
                    return fail(format!(
                        "handler needs {} command clause(s), found {}",
                        handled.len(),
                        clauses.len()
                    ));
                }
                for ((cmd, sig), clause) in handled.iter().zip(clauses.iter()) {
                    if *cmd != clause.command {
                        return fail(format!(
                            "handler clause order: expected `{cmd}`, found `{}`",
                            clause.command
                        ));
                    }
                    if sig.args.len() != clause.args.len() {
                        return fail(format!(
                            "clause for `{cmd}` binds {} argument(s), expected {}",
                            clause.args.len(),
                            sig.args.len()
                        ));
                    }
                    let mark = env.mark();
                    for (x, ty) in clause.args.iter().zip(sig.args.iter()) {
                        env.push_mono(x, ty.clone());
                    }
                    // z : {B -> [Σ ⊕ Δ]A'}
                    let cont_ty = CoreValueType::Thunk(Box::new(CoreCompType {
                        args: vec![sig.result.clone()],
                        peg: CorePeg { ability: inner.clone(), value: scrutinee_ty.clone() },
                    }));
                    env.push_mono(&clause.continuation, cont_ty);
                    let out = self.check(env, ambient, &clause.body, expected);
                    env.reset(mark);
                    out?;
                }
                let mark = env.mark();
                env.push_mono(ret_var, scrutinee_ty.clone());
                let out = self.check(env, ambient, ret_body, expected);
                env.reset(mark);
                out
            }
            TermKind::Let { name, poly, bound, body } => {
                self.check(env, ambient, bound, &poly.body)?;
                let mark = env.mark();
                env.push_poly(name, poly.clone());
                let out = self.check(env, ambient, body, expected);
                env.reset(mark);
                out
            }
            TermKind::LetRec { bindings, body } => {
                let mark = env.mark();
                for (name, poly, _, _) in bindings.iter() {
                    env.push_poly(name, poly.clone());
                }
                let key = Rc::as_ptr(bindings) as usize;
                let cached = self.validated_letrecs.borrow().contains(&key);
                if !cached {
                for (name, poly, params, fn_body) in bindings.iter() {
                    let CoreValueType::Thunk(comp) = &poly.body else {
                        return fail(format!("letrec binding `{name}` must be a suspension type"));
                    };
                    if comp.args.len() != params.len() {
                        return fail(format!(
                            "letrec binding `{name}` takes {} parameter(s) but its type has {}",
                            params.len(),
                            comp.args.len()
                        ));
                    }
                    let inner_mark = env.mark();
                    for (p, ty) in params.iter().zip(comp.args.iter()) {
                        env.push_mono(p, ty.clone());
                    }
                    let out = self.check(env, &comp.peg.ability, fn_body, &comp.peg.value);
                    env.reset(inner_mark);
                    out?;
                }
                if letrec_group_is_closed(bindings) {
                    self.validated_letrecs.borrow_mut().insert(key);
                }
                }
                let out = self.check(env, ambient, body, expected);
                env.reset(mark);
                out
            }
        }
    }
}


/// A binding group whose bodies reference nothing but the group itself and
/// the builtins checks the same way in every environment.
fn letrec_group_is_closed(bindings: &Rc<Vec<(SName, CorePolyType, Vec<SName>, Term)>>) -> bool {
    let mut free = std::collections::BTreeSet::new();
    for (_, _, params, body) in bindings.iter() {
        let mut inner = std::collections::BTreeSet::new();
        free_vars(body, &mut inner);
        for p in params {
            inner.remove(p);
        }
        free.extend(inner);
    }
    for (name, _, _, _) in bindings.iter() {
        free.remove(name);
    }
    free.iter().all(|n| n == "intAdd")
}
