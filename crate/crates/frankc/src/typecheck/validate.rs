//! A declarative re-derivation of a checked program: walks the typed tree
//! with pure equality checks and no unification, confirming that the
//! recorded instantiations and ambients really do re-derive every node
//! annotation under the typing rules read declaratively.

use super::typed::*;
use crate::syntax::*;

#[derive(Clone, Debug)]
pub struct ValidationError(pub String);

fn fail<T>(msg: impl Into<String>) -> Result<T, ValidationError> {
    Err(ValidationError(msg.into()))
}

fn types_equal(a: &ValueType, b: &ValueType) -> bool {
    match (a, b) {
        (ValueType::Var(x), ValueType::Var(y)) => x == y,
        (ValueType::Data(d, xs), ValueType::Data(e, ys)) => {
            d == e && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| args_equal(x, y))
        }
        (ValueType::Thunk(c1), ValueType::Thunk(c2)) => {
            c1.ports.len() == c2.ports.len()
                && c1.ports.iter().zip(&c2.ports).all(|(p, q)| {
                    adjustments_equal(&p.adjustment, &q.adjustment) && types_equal(&p.value, &q.value)
                })
                && abilities_equal(&c1.peg.ability, &c2.peg.ability)
                && types_equal(&c1.peg.value, &c2.peg.value)
        }
        _ => false,
    }
}

fn args_equal(a: &TypeArg, b: &TypeArg) -> bool {
    match (a, b) {
        (TypeArg::Val(x), TypeArg::Val(y)) => types_equal(x, y),
        (TypeArg::Ab(x), TypeArg::Ab(y)) => abilities_equal(x, y),
        _ => false,
    }
}

fn adjustments_equal(a: &Adjustment, b: &Adjustment) -> bool {
    let na = normalize_adjustment(a);
    let nb = normalize_adjustment(b);
    na.instances.len() == nb.instances.len()
        && na.instances.iter().zip(nb.instances.iter()).all(|(x, y)| {
            x.interface == y.interface
                && x.args.len() == y.args.len()
                && x.args.iter().zip(y.args.iter()).all(|(p, q)| args_equal(p, q))
        })
}

#[derive(Clone)]
enum Entry {
    Mono(ValueType),
    Poly(PolyType),
}

pub struct Validator<'a> {
    decls: &'a Declarations,
    env: Vec<(Name, Entry)>,
}

/// Re-derive the whole program's annotations declaratively.
pub fn validate_program(program: &TypedProgram) -> Result<(), ValidationError> {
    let mut v = Validator {
        decls: &program.decls,
        env: vec![("intAdd".into(), Entry::Poly(crate::typecheck::int_add_poly()))],
    };
    v.construction(&program.term, &program.top_ability, &program.ty)
}

impl<'a> Validator<'a> {
    fn lookup(&self, name: &str) -> Option<&Entry> {
        self.env.iter().rev().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    fn use_ty(&mut self, u: &TUse, ambient: &Ability) -> Result<ValueType, ValidationError> {
        match u {
            TUse::Var { name, ty, .. } => match self.lookup(name) {
                Some(Entry::Mono(t)) if types_equal(t, ty) => Ok(ty.clone()),
                Some(Entry::Mono(t)) => fail(format!(
                    "variable `{name}` recorded at `{ty}` but the environment gives `{t}`"
                )),
                _ => fail(format!("`{name}` is not a monomorphic variable in scope")),
            },
            TUse::Poly { name, poly, args, ty, .. } | TUse::Builtin { name, poly, args, ty, .. } => {
                match self.lookup(name) {
                    Some(Entry::Poly(p)) => {
                        // Binder lists compare structurally: the program only
                        // mentions each polytype once.
                        if p != poly {
                            return fail(format!("polytype of `{name}` does not match its site"));
                        }
                    }
                    _ => return fail(format!("`{name}` is not a polymorphic variable in scope")),
                }
                if args.len() != poly.binders.len() {
                    return fail(format!("instantiation arity mismatch at `{name}`"));
                }
                for (binder, arg) in poly.binders.iter().zip(args.iter()) {
                    let ok = matches!(
                        (binder, arg),
                        (TypeParam::Val(_), TypeArg::Val(_)) | (TypeParam::Eff(_), TypeArg::Ab(_))
                    );
                    if !ok {
                        return fail(format!("instantiation kind mismatch at `{name}`"));
                    }
                }
                let subst: Vec<(&TypeParam, &TypeArg)> =
                    poly.binders.iter().zip(args.iter()).collect();
                let derived = substitute_value(&poly.body, &subst);
                if !types_equal(&derived, ty) {
                    return fail(format!(
                        "θ(body) of `{name}` is `{derived}` but the node records `{ty}`"
                    ));
                }
                Ok(ty.clone())
            }
            TUse::Command { name, sig, ambient: recorded, ty, .. } => {
                if !abilities_equal(recorded, ambient) {
                    return fail(format!("command `{name}` recorded at a different ambient"));
                }
                let derived = lookup_command(self.decls, ambient, name)
                    .ok_or_else(|| ValidationError(format!("command `{name}` not in ambient")))?;
                if derived.args != sig.args || derived.result != sig.result {
                    return fail(format!("command `{name}` signature mismatch"));
                }
                let expect = ValueType::Thunk(Box::new(CompType {
                    ports: sig
                        .args
                        .iter()
                        .map(|a| Port { adjustment: Adjustment::identity(), value: a.clone() })
                        .collect(),
                    peg: Peg { ability: ambient.clone(), value: sig.result.clone() },
                }));
                if !types_equal(&expect, ty) {
                    return fail(format!("command `{name}` type mismatch"));
                }
                Ok(ty.clone())
            }
            TUse::App { head, head_comp, args, ambient: recorded, ty, .. } => {
                if !abilities_equal(recorded, ambient) {
                    return fail("application recorded at a different ambient".to_string());
                }
                let head_ty = self.use_ty(head, ambient)?;
                if !types_equal(&head_ty, &ValueType::Thunk(Box::new(head_comp.clone()))) {
                    return fail("application head type differs from the recorded computation type");
                }
                if head_comp.ports.len() != args.len() {
                    return fail("application arity mismatch");
                }
                // Σ' = Σ, and each argument checks under Σ ⊕ Δᵢ.
                if !abilities_equal(&head_comp.peg.ability, ambient) {
                    return fail(format!(
                        "peg ability [{}] differs from ambient [{}]",
                        head_comp.peg.ability, ambient
                    ));
                }
                for (port, arg) in head_comp.ports.iter().zip(args.iter()) {
                    let inner = apply_adjustment(ambient, &port.adjustment);
                    self.construction(arg, &inner, &port.value)?;
                }
                if !types_equal(&head_comp.peg.value, ty) {
                    return fail("application result type mismatch");
                }
                Ok(ty.clone())
            }
        }
    }

    fn construction(
        &mut self,
        n: &TConstruction,
        ambient: &Ability,
        expected: &ValueType,
    ) -> Result<(), ValidationError> {
        match n {
            TConstruction::Use(u) => {
                let ty = self.use_ty(u, ambient)?;
                if types_equal(&ty, expected) {
                    Ok(())
                } else {
                    fail(format!("switch: inferred `{ty}` but expected `{expected}`"))
                }
            }
            TConstruction::IntLit(_, _) => {
                if types_equal(expected, &ValueType::Data("Int".into(), vec![])) {
                    Ok(())
                } else {
                    fail("integer literal at a non-Int type")
                }
            }
            TConstruction::CharLit(_, _) => {
                if types_equal(expected, &ValueType::Data("Char".into(), vec![])) {
                    Ok(())
                } else {
                    fail("character literal at a non-Char type")
                }
            }
            TConstruction::Ctor { name, data, data_args, arg_types, args, .. } => {
                if !types_equal(expected, &ValueType::Data(data.clone(), data_args.clone())) {
                    return fail(format!("constructor `{name}` at the wrong data type"));
                }
                let derived =
                    self.decls.ctor_arg_types(data, data_args, name).ok_or_else(|| {
                        ValidationError(format!("`{name}` is not a constructor of `{data}`"))
                    })?;
                if derived.len() != arg_types.len()
                    || !derived.iter().zip(arg_types.iter()).all(|(a, b)| types_equal(a, b))
                {
                    return fail(format!("field types of `{name}` mismatch"));
                }
                for (ty, arg) in arg_types.iter().zip(args.iter()) {
                    self.construction(arg, ambient, ty)?;
                }
                Ok(())
            }
            TConstruction::Suspend(comp, _) => {
                if !types_equal(expected, &ValueType::Thunk(Box::new(comp.comp.clone()))) {
                    return fail("suspension type mismatch");
                }
                self.computation(comp)
            }
            TConstruction::Let { name, poly, bound, body, .. } => {
                self.construction(bound, ambient, &poly.body)?;
                self.env.push((name.clone(), Entry::Poly(poly.clone())));
                let out = self.construction(body, ambient, expected);
                self.env.pop();
                out
            }
            TConstruction::LetRec { bindings, body, .. } => {
                let mark = self.env.len();
                for (name, poly, _) in bindings {
                    self.env.push((name.clone(), Entry::Poly(poly.clone())));
                }
                for (name, poly, comp) in bindings {
                    let recorded = ValueType::Thunk(Box::new(comp.comp.clone()));
                    if !types_equal(&poly.body, &recorded) {
                        return fail(format!("letrec binding `{name}` checked at a different type"));
                    }
                    self.computation(comp)?;
                }
                let out = self.construction(body, ambient, expected);
                self.env.truncate(mark);
                out
            }
        }
    }

    fn computation(&mut self, comp: &TComputation) -> Result<(), ValidationError> {
        let peg = &comp.comp.peg;
        for clause in &comp.clauses {
            if clause.patterns.len() != comp.comp.ports.len() {
                return fail("clause width differs from port count");
            }
            let mark = self.env.len();
            for (pattern, port) in clause.patterns.iter().zip(comp.comp.ports.iter()) {
                self.comp_pattern(pattern, port, &peg.ability)?;
            }
            let out = self.construction(&clause.body, &peg.ability, &peg.value);
            self.env.truncate(mark);
            out?;
        }
        Ok(())
    }

    fn comp_pattern(
        &mut self,
        pattern: &TCompPattern,
        port: &Port,
        ambient: &Ability,
    ) -> Result<(), ValidationError> {
        match pattern {
            TCompPattern::Value(p) => self.value_pattern(p, &port.value),
            TCompPattern::Request { command, sig, args, continuation, .. } => {
                let handled = handled_commands(self.decls, &port.adjustment);
                let derived = handled
                    .into_iter()
                    .find(|(n, _)| n == command)
                    .map(|(_, s)| s)
                    .ok_or_else(|| {
                        ValidationError(format!("request `{command}` not in the adjustment"))
                    })?;
                if derived.args != sig.args || derived.result != sig.result {
                    return fail(format!("request `{command}` signature mismatch"));
                }
                for (p, ty) in args.iter().zip(sig.args.iter()) {
                    self.value_pattern(p, ty)?;
                }
                let expect = ValueType::Thunk(Box::new(CompType {
                    ports: vec![Port {
                        adjustment: Adjustment::identity(),
                        value: sig.result.clone(),
                    }],
                    peg: Peg {
                        ability: apply_adjustment(ambient, &port.adjustment),
                        value: port.value.clone(),
                    },
                }));
                if !types_equal(&expect, &continuation.ty) {
                    return fail(format!("continuation type mismatch at `{command}`"));
                }
                self.env
                    .push((continuation.name.clone(), Entry::Mono(continuation.ty.clone())));
                Ok(())
            }
            TCompPattern::CatchAll(binder, _) => {
                let expect = ValueType::Thunk(Box::new(CompType {
                    ports: vec![],
                    peg: Peg {
                        ability: apply_adjustment(ambient, &port.adjustment),
                        value: port.value.clone(),
                    },
                }));
                if !types_equal(&expect, &binder.ty) {
                    return fail("catch-all binder type mismatch");
                }
                self.env.push((binder.name.clone(), Entry::Mono(binder.ty.clone())));
                Ok(())
            }
        }
    }

    fn value_pattern(
        &mut self,
        p: &TValuePattern,
        expected: &ValueType,
    ) -> Result<(), ValidationError> {
        match p {
            TValuePattern::Var(b) => {
                if !types_equal(&b.ty, expected) {
                    return fail(format!("pattern variable `{}` type mismatch", b.name));
                }
                self.env.push((b.name.clone(), Entry::Mono(b.ty.clone())));
                Ok(())
            }
            TValuePattern::Ctor { name, data, data_args, args, .. } => {
                if !types_equal(expected, &ValueType::Data(data.clone(), data_args.clone())) {
                    return fail(format!("constructor pattern `{name}` at the wrong type"));
                }
                let fields =
                    self.decls.ctor_arg_types(data, data_args, name).ok_or_else(|| {
                        ValidationError(format!("`{name}` is not a constructor of `{data}`"))
                    })?;
                if fields.len() != args.len() {
                    return fail(format!("constructor pattern `{name}` arity mismatch"));
                }
                for (ty, arg) in fields.iter().zip(args.iter()) {
                    self.value_pattern(arg, ty)?;
                }
                Ok(())
            }
            TValuePattern::IntLit(_, _) => {
                if types_equal(expected, &ValueType::Data("Int".into(), vec![])) {
                    Ok(())
                } else {
                    fail("integer pattern at a non-Int column")
                }
            }
            TValuePattern::CharLit(_, _) => {
                if types_equal(expected, &ValueType::Data("Char".into(), vec![])) {
                    Ok(())
                } else {
                    fail("character pattern at a non-Char column")
                }
            }
        }
    }
}
