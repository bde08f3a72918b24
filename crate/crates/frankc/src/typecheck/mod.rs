//! Bidirectional type checking against an ambient ability.
//!
//! Uses are inferred, constructions are checked. Polymorphic variables are
//! instantiated with fresh unification variables which the application rule's
//! ability equation and the switch rule's type equation solve. Programs whose
//! instantiations stay unsolved after zonking are rejected, since elaboration
//! needs concrete type arguments.

pub mod typed;
mod unify;
pub mod validate;

use crate::desugar::Program;
use crate::span::Span;
use crate::syntax::*;
use std::collections::HashMap;
use typed::*;
pub use unify::UnifyError;

#[derive(Clone, Debug)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub message: String,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypeErrorKind {
    UnboundVariable,
    NotAThunk,
    AbilityMismatch,
    ArityMismatch,
    TypeMismatch,
    ConstructorMismatch,
    NotASuspension,
    CommandNotInAdjustment,
    PatternArityMismatch,
    CoverageError,
    OccursError,
    AmbiguousAbility,
    AmbiguousInstantiation,
    IllFormed,
}

impl TypeErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            TypeErrorKind::UnboundVariable => "UnboundVariable",
            TypeErrorKind::NotAThunk => "NotAThunk",
            TypeErrorKind::AbilityMismatch => "AbilityMismatch",
            TypeErrorKind::ArityMismatch => "ArityMismatch",
            TypeErrorKind::TypeMismatch => "TypeMismatch",
            TypeErrorKind::ConstructorMismatch => "ConstructorMismatch",
            TypeErrorKind::NotASuspension => "NotASuspension",
            TypeErrorKind::CommandNotInAdjustment => "CommandNotInAdjustment",
            TypeErrorKind::PatternArityMismatch => "PatternArityMismatch",
            TypeErrorKind::CoverageError => "CoverageError",
            TypeErrorKind::OccursError => "OccursError",
            TypeErrorKind::AmbiguousAbility => "AmbiguousAbility",
            TypeErrorKind::AmbiguousInstantiation => "AmbiguousInstantiation",
            TypeErrorKind::IllFormed => "IllFormed",
        }
    }
}

fn err(kind: TypeErrorKind, message: impl Into<String>, span: Span) -> TypeError {
    TypeError { kind, message: message.into(), span }
}

/// A coverage warning produced while checking (redundant clauses).
#[derive(Clone, Debug)]
pub struct Warning {
    pub message: String,
    pub span: Span,
}

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
enum EnvEntry {
    Mono(ValueType),
    Poly(PolyType),
    Builtin(PolyType),
}

#[derive(Default)]
pub(crate) struct Env {
    entries: Vec<(Name, EnvEntry)>,
}

impl Env {
    fn push_mono(&mut self, name: &str, ty: ValueType) {
        self.entries.push((name.to_string(), EnvEntry::Mono(ty)));
    }
    fn push_poly(&mut self, name: &str, poly: PolyType) {
        self.entries.push((name.to_string(), EnvEntry::Poly(poly)));
    }
    fn push_builtin(&mut self, name: &str, poly: PolyType) {
        self.entries.push((name.to_string(), EnvEntry::Builtin(poly)));
    }
    fn truncate(&mut self, len: usize) {
        self.entries.truncate(len);
    }
    fn len(&self) -> usize {
        self.entries.len()
    }
    /// Lookup returns the rightmost binding.
    fn lookup(&self, name: &str) -> Option<&EnvEntry> {
        self.entries.iter().rev().find(|(n, _)| n == name).map(|(_, e)| e)
    }
}

pub fn int_add_poly() -> PolyType {
    let eps = "%eIntAdd".to_string();
    let int = ValueType::Data("Int".into(), vec![]);
    PolyType {
        binders: vec![TypeParam::Eff(eps.clone())],
        body: ValueType::Thunk(Box::new(CompType {
            ports: vec![
                Port { adjustment: Adjustment::identity(), value: int.clone() },
                Port { adjustment: Adjustment::identity(), value: int.clone() },
            ],
            peg: Peg { ability: Ability::var(eps), value: int },
        })),
    }
}

// ---------------------------------------------------------------------------
// Meta store
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub(crate) enum MetaEntry {
    UnsolvedVal,
    UnsolvedAb,
    SolvedVal(ValueType),
    SolvedAb(Ability),
}

pub struct Checker {
    pub decls: Declarations,
    pub(crate) store: Vec<MetaEntry>,
    pub warnings: Vec<Warning>,
    binder_types: HashMap<BinderId, ValueType>,
}

pub fn check_program(
    program: &Program,
    top_ability: &Ability,
) -> Result<(TypedProgram, Vec<Warning>), TypeError> {
    let mut checker = Checker {
        decls: program.decls.clone(),
        store: Vec::new(),
        warnings: Vec::new(),
        binder_types: HashMap::new(),
    };
    let mut env = Env::default();
    env.push_builtin("intAdd", int_add_poly());

    let int = ValueType::Data("Int".into(), vec![]);
    let (tterm, ty) = match &program.term {
        Construction::LetRec { bindings, body, span } => {
            let mark = env.len();
            for (name, poly, _) in bindings {
                env.push_poly(name, poly.clone());
            }
            let mut tbindings = Vec::new();
            for (name, poly, comp) in bindings {
                let c = match &poly.body {
                    ValueType::Thunk(c) => (**c).clone(),
                    other => {
                        return Err(err(
                            TypeErrorKind::IllFormed,
                            format!("definition `{name}` must have a computation type, found `{other}`"),
                            *span,
                        ))
                    }
                };
                let tcomp = checker.check_computation(&mut env, comp, &c, *span)?;
                tbindings.push((name.clone(), poly.clone(), tcomp));
            }
            let (tbody, ty) = match &**body {
                Construction::Use(u) => {
                    let tuse = checker.infer_use(&mut env, top_ability, u)?;
                    let ty = tuse.ty().clone();
                    (TConstruction::Use(Box::new(tuse)), ty)
                }
                other => {
                    let t = checker.check_construction(&mut env, top_ability, other, &int)?;
                    (t, int.clone())
                }
            };
            env.truncate(mark);
            (
                TConstruction::LetRec { bindings: tbindings, body: Box::new(tbody), span: *span },
                ty,
            )
        }
        Construction::Use(u) => {
            let tuse = checker.infer_use(&mut env, top_ability, u)?;
            let ty = tuse.ty().clone();
            (TConstruction::Use(Box::new(tuse)), ty)
        }
        other => {
            let t = checker.check_construction(&mut env, top_ability, other, &int)?;
            (t, int.clone())
        }
    };

    let term = checker.zonk_construction(tterm)?;
    let ty = checker.zonk_value(ty, Span::synthetic())?;
    Ok((
        TypedProgram {
            decls: program.decls.clone(),
            term,
            ty,
            top_ability: top_ability.clone(),
            has_main: program.has_main,
        },
        checker.warnings,
    ))
}

impl Checker {
    // -- meta helpers -------------------------------------------------------

    pub(crate) fn fresh_val_meta(&mut self) -> ValueType {
        let id = self.store.len() as MetaId;
        self.store.push(MetaEntry::UnsolvedVal);
        ValueType::Meta(id)
    }

    pub(crate) fn fresh_ab_meta(&mut self) -> Ability {
        let id = self.store.len() as MetaId;
        self.store.push(MetaEntry::UnsolvedAb);
        Ability { head: AbilityHead::Meta(id), instances: vec![] }
    }

    /// Follow solved value metas one step at a time.
    pub(crate) fn resolve(&self, ty: &ValueType) -> ValueType {
        let mut t = ty.clone();
        while let ValueType::Meta(id) = t {
            match &self.store[id as usize] {
                MetaEntry::SolvedVal(s) => t = s.clone(),
                _ => break,
            }
        }
        t
    }

    /// Resolve a meta head, splicing the solution's instances in front.
    pub(crate) fn resolve_ability(&self, ab: &Ability) -> Ability {
        let mut current = ab.clone();
        while let AbilityHead::Meta(id) = current.head {
            match &self.store[id as usize] {
                MetaEntry::SolvedAb(sol) => {
                    let mut instances = sol.instances.clone();
                    instances.extend(current.instances);
                    current = Ability { head: sol.head.clone(), instances };
                }
                _ => break,
            }
        }
        current
    }

    fn instantiate(&mut self, poly: &PolyType) -> (Vec<TypeArg>, ValueType) {
        let args: Vec<TypeArg> = poly
            .binders
            .iter()
            .map(|b| match b {
                TypeParam::Val(_) => TypeArg::Val(self.fresh_val_meta()),
                TypeParam::Eff(_) => TypeArg::Ab(self.fresh_ab_meta()),
            })
            .collect();
        let subst: Vec<(&TypeParam, &TypeArg)> = poly.binders.iter().zip(args.iter()).collect();
        let body = substitute_value(&poly.body, &subst);
        (args, body)
    }

    // -- inference ------------------------------------------------------------

    pub(crate) fn infer_use(&mut self, env: &mut Env, ambient: &Ability, u: &Use) -> Result<TUse, TypeError> {
        match u {
            Use::Ident(name, span) => match env.lookup(name) {
                Some(EnvEntry::Mono(ty)) => {
                    Ok(TUse::Var { name: name.clone(), ty: ty.clone(), span: *span })
                }
                Some(EnvEntry::Poly(poly)) => {
                    let poly = poly.clone();
                    let (args, ty) = self.instantiate(&poly);
                    Ok(TUse::Poly { name: name.clone(), poly, args, ty, span: *span })
                }
                Some(EnvEntry::Builtin(poly)) => {
                    let poly = poly.clone();
                    let (args, ty) = self.instantiate(&poly);
                    Ok(TUse::Builtin { name: name.clone(), poly, args, ty, span: *span })
                }
                None => {
                    if self.decls.command_owner(name).is_some() {
                        match lookup_command(&self.decls, &self.resolve_ability(ambient), name) {
                            Some(sig) => {
                                let ports = sig
                                    .args
                                    .iter()
                                    .map(|a| Port {
                                        adjustment: Adjustment::identity(),
                                        value: a.clone(),
                                    })
                                    .collect();
                                let ty = ValueType::Thunk(Box::new(CompType {
                                    ports,
                                    peg: Peg {
                                        ability: ambient.clone(),
                                        value: sig.result.clone(),
                                    },
                                }));
                                Ok(TUse::Command {
                                    name: name.clone(),
                                    sig,
                                    ambient: ambient.clone(),
                                    ty,
                                    span: *span,
                                })
                            }
                            None => Err(err(
                                TypeErrorKind::AbilityMismatch,
                                format!(
                                    "command `{name}` is not offered by the ambient ability [{}]",
                                    self.resolve_ability(ambient)
                                ),
                                *span,
                            )),
                        }
                    } else {
                        Err(err(
                            TypeErrorKind::UnboundVariable,
                            format!("unbound variable `{name}`"),
                            *span,
                        ))
                    }
                }
            },
            Use::App(head, args, span) => {
                let thead = self.infer_use(env, ambient, head)?;
                let comp = match self.resolve(thead.ty()) {
                    ValueType::Thunk(c) => *c,
                    other => {
                        return Err(err(
                            TypeErrorKind::NotAThunk,
                            format!("cannot apply a value of type `{other}`"),
                            *span,
                        ))
                    }
                };
                if comp.ports.len() != args.len() {
                    return Err(err(
                        TypeErrorKind::ArityMismatch,
                        format!(
                            "this operator takes {} argument(s), found {}",
                            comp.ports.len(),
                            args.len()
                        ),
                        *span,
                    ));
                }
                // The peg must equal the ambient before the arguments are
                // checked; this pins the instantiated ability metas.
                self.unify_abilities(&comp.peg.ability, ambient).map_err(|e| {
                    self.ability_error(e, ambient, &comp.peg.ability, *span)
                })?;
                let mut targs = Vec::new();
                for (port, arg) in comp.ports.iter().zip(args.iter()) {
                    let inner = apply_adjustment(ambient, &port.adjustment);
                    targs.push(self.check_construction(env, &inner, arg, &port.value)?);
                }
                let ty = comp.peg.value.clone();
                Ok(TUse::App {
                    head: Box::new(thead),
                    head_comp: comp,
                    args: targs,
                    ambient: ambient.clone(),
                    ty,
                    span: *span,
                })
            }
        }
    }

    fn ability_error(&self, e: UnifyError, ambient: &Ability, peg: &Ability, span: Span) -> TypeError {
        let kind = match e {
            UnifyError::Occurs => TypeErrorKind::OccursError,
            UnifyError::Ambiguous(_) => TypeErrorKind::AmbiguousAbility,
            _ => TypeErrorKind::AbilityMismatch,
        };
        err(
            kind,
            format!(
                "the peg ability [{}] does not match the ambient ability [{}]",
                self.resolve_ability(peg),
                self.resolve_ability(ambient)
            ),
            span,
        )
    }

    fn unify_error(&self, e: UnifyError, expected: &ValueType, found: &ValueType, span: Span) -> TypeError {
        match e {
            UnifyError::Occurs => err(TypeErrorKind::OccursError, "occurs check failed", span),
            UnifyError::Ambiguous(m) => err(TypeErrorKind::AmbiguousAbility, m, span),
            _ => err(
                TypeErrorKind::TypeMismatch,
                format!(
                    "expected `{}`, found `{}`",
                    self.zonk_shallow(expected),
                    self.zonk_shallow(found)
                ),
                span,
            ),
        }
    }

    /// Best-effort zonk for messages only.
    fn zonk_shallow(&self, ty: &ValueType) -> ValueType {
        self.resolve(ty)
    }

    // -- checking -------------------------------------------------------------

    pub(crate) fn check_construction(
        &mut self,
        env: &mut Env,
        ambient: &Ability,
        n: &Construction,
        expected: &ValueType,
    ) -> Result<TConstruction, TypeError> {
        match n {
            Construction::Use(u) => {
                let tuse = self.infer_use(env, ambient, u)?;
                let found = tuse.ty().clone();
                self.unify_types(&found, expected)
                    .map_err(|e| self.unify_error(e, expected, &found, u.span()))?;
                Ok(TConstruction::Use(Box::new(tuse)))
            }
            Construction::IntLit(v, span) => {
                let int = ValueType::Data("Int".into(), vec![]);
                self.unify_types(&int, expected)
                    .map_err(|e| self.unify_error(e, expected, &int, *span))?;
                Ok(TConstruction::IntLit(*v, *span))
            }
            Construction::CharLit(c, span) => {
                let ch = ValueType::Data("Char".into(), vec![]);
                self.unify_types(&ch, expected)
                    .map_err(|e| self.unify_error(e, expected, &ch, *span))?;
                Ok(TConstruction::CharLit(*c, *span))
            }
            Construction::Ctor(name, args, span) => {
                let (data_name, data_args) = self.expect_data_for_ctor(name, expected, *span)?;
                let arg_types = self
                    .decls
                    .ctor_arg_types(&data_name, &data_args, name)
                    .ok_or_else(|| {
                        err(
                            TypeErrorKind::ConstructorMismatch,
                            format!("`{name}` is not a constructor of `{data_name}`"),
                            *span,
                        )
                    })?;
                if arg_types.len() != args.len() {
                    return Err(err(
                        TypeErrorKind::ArityMismatch,
                        format!(
                            "constructor `{name}` expects {} argument(s), found {}",
                            arg_types.len(),
                            args.len()
                        ),
                        *span,
                    ));
                }
                let mut targs = Vec::new();
                for (ty, arg) in arg_types.iter().zip(args.iter()) {
                    targs.push(self.check_construction(env, ambient, arg, ty)?);
                }
                Ok(TConstruction::Ctor {
                    name: name.clone(),
                    data: data_name,
                    data_args,
                    arg_types,
                    args: targs,
                    span: *span,
                })
            }
            Construction::Suspend(comp, span) => match self.resolve(expected) {
                ValueType::Thunk(c) => {
                    let tcomp = self.check_computation(env, comp, &c, *span)?;
                    Ok(TConstruction::Suspend(tcomp, *span))
                }
                other => Err(err(
                    TypeErrorKind::NotASuspension,
                    format!("a suspension cannot have type `{other}`"),
                    *span,
                )),
            },
            Construction::Let { name, poly, bound, body, span } => {
                let tbound = self.check_construction(env, ambient, bound, &poly.body)?;
                let mark = env.len();
                env.push_poly(name, poly.clone());
                let tbody = self.check_construction(env, ambient, body, expected);
                env.truncate(mark);
                Ok(TConstruction::Let {
                    name: name.clone(),
                    poly: poly.clone(),
                    bound: Box::new(tbound),
                    body: Box::new(tbody?),
                    span: *span,
                })
            }
            Construction::LetRec { bindings, body, span } => {
                let mark = env.len();
                for (name, poly, _) in bindings {
                    env.push_poly(name, poly.clone());
                }
                let mut tbindings = Vec::new();
                for (name, poly, comp) in bindings {
                    let c = match &poly.body {
                        ValueType::Thunk(c) => (**c).clone(),
                        other => {
                            return Err(err(
                                TypeErrorKind::IllFormed,
                                format!(
                                    "letrec binding `{name}` must have a computation type, found `{other}`"
                                ),
                                *span,
                            ))
                        }
                    };
                    let tcomp = self.check_computation(env, comp, &c, *span)?;
                    tbindings.push((name.clone(), poly.clone(), tcomp));
                }
                let tbody = self.check_construction(env, ambient, body, expected);
                env.truncate(mark);
                Ok(TConstruction::LetRec {
                    bindings: tbindings,
                    body: Box::new(tbody?),
                    span: *span,
                })
            }
        }
    }

    /// Resolve the expected type of a constructor application, solving a
    /// flexible expected type through the constructor's unique owner.
    fn expect_data_for_ctor(
        &mut self,
        ctor: &str,
        expected: &ValueType,
        span: Span,
    ) -> Result<(Name, Vec<TypeArg>), TypeError> {
        match self.resolve(expected) {
            ValueType::Data(d, args) => Ok((d, args)),
            ValueType::Meta(_) => {
                let (data, _) = self.decls.ctor_owner(ctor).ok_or_else(|| {
                    err(
                        TypeErrorKind::ConstructorMismatch,
                        format!("unknown constructor `{ctor}`"),
                        span,
                    )
                })?;
                let name = data.name.clone();
                let args: Vec<TypeArg> = data
                    .params
                    .clone()
                    .iter()
                    .map(|p| match p {
                        TypeParam::Val(_) => TypeArg::Val(self.fresh_val_meta()),
                        TypeParam::Eff(_) => TypeArg::Ab(self.fresh_ab_meta()),
                    })
                    .collect();
                let solved = ValueType::Data(name.clone(), args.clone());
                self.unify_types(expected, &solved)
                    .map_err(|e| self.unify_error(e, expected, &solved, span))?;
                Ok((name, args))
            }
            other => Err(err(
                TypeErrorKind::ConstructorMismatch,
                format!("a data constructor cannot have type `{other}`"),
                span,
            )),
        }
    }

    pub(crate) fn check_computation(
        &mut self,
        env: &mut Env,
        e: &Computation,
        c: &CompType,
        span: Span,
    ) -> Result<TComputation, TypeError> {
        if e.clauses.is_empty() && c.ports.is_empty() {
            return Err(err(
                TypeErrorKind::IllFormed,
                "a computation with no ports needs at least one clause",
                span,
            ));
        }
        let peg_ability = c.peg.ability.clone();
        let mut tclauses = Vec::new();
        for clause in &e.clauses {
            if clause.patterns.len() != c.ports.len() {
                return Err(err(
                    TypeErrorKind::PatternArityMismatch,
                    format!(
                        "this clause takes {} pattern(s) but the computation type has {} port(s)",
                        clause.patterns.len(),
                        c.ports.len()
                    ),
                    clause.span,
                ));
            }
            let mut bindings: Vec<(Name, ValueType)> = Vec::new();
            let mut tpatterns = Vec::new();
            for (pattern, port) in clause.patterns.iter().zip(c.ports.iter()) {
                tpatterns.push(self.check_comp_pattern(pattern, port, &peg_ability, &mut bindings)?);
            }
            let mark = env.len();
            for (name, ty) in bindings {
                env.push_mono(&name, ty);
            }
            let tbody = self.check_construction(env, &peg_ability, &clause.body, &c.peg.value);
            env.truncate(mark);
            tclauses.push(TClause { patterns: tpatterns, body: tbody?, span: clause.span });
        }
        let tcomp = TComputation { clauses: tclauses, comp: c.clone() };

        // The coverage side condition of the computation rule, discharged by
        // a dry run of pattern elaboration over the zonked column types.
        let zonked = self.zonk_comp_for_coverage(&tcomp);
        match crate::elaborate::check_coverage(&self.decls, &zonked) {
            crate::elaborate::CoverageReport::Complete => {}
            crate::elaborate::CoverageReport::Incomplete(witness) => {
                return Err(err(
                    TypeErrorKind::CoverageError,
                    format!("patterns do not cover all signals; missing case: {witness}"),
                    span,
                ));
            }
            crate::elaborate::CoverageReport::Redundant(rows) => {
                for row in rows {
                    let clause_span = tcomp.clauses.get(row).map(|c| c.span).unwrap_or(span);
                    self.warnings.push(Warning {
                        message: format!("clause {} is redundant", row + 1),
                        span: clause_span,
                    });
                }
            }
        }
        Ok(tcomp)
    }

    /// Zonk as far as the current store allows; leftover metas are fine for
    /// the coverage dry run since it only discriminates on data heads.
    fn zonk_comp_for_coverage(&self, tcomp: &TComputation) -> TComputation {
        let mut out = tcomp.clone();
        out.comp = self.zonk_comp_lenient(&out.comp);
        out
    }

    fn zonk_comp_lenient(&self, c: &CompType) -> CompType {
        CompType {
            ports: c
                .ports
                .iter()
                .map(|p| Port {
                    adjustment: self.zonk_adjustment_lenient(&p.adjustment),
                    value: self.zonk_value_lenient(&p.value),
                })
                .collect(),
            peg: Peg {
                ability: self.resolve_ability(&c.peg.ability),
                value: self.zonk_value_lenient(&c.peg.value),
            },
        }
    }

    pub(crate) fn zonk_value_lenient(&self, ty: &ValueType) -> ValueType {
        match self.resolve(ty) {
            ValueType::Data(d, args) => ValueType::Data(
                d,
                args.iter().map(|a| self.zonk_arg_lenient(a)).collect(),
            ),
            ValueType::Thunk(c) => ValueType::Thunk(Box::new(self.zonk_comp_lenient(&c))),
            other => other,
        }
    }

    fn zonk_arg_lenient(&self, arg: &TypeArg) -> TypeArg {
        match arg {
            TypeArg::Val(v) => TypeArg::Val(self.zonk_value_lenient(v)),
            TypeArg::Ab(ab) => TypeArg::Ab(self.resolve_ability(ab)),
        }
    }

    fn zonk_adjustment_lenient(&self, delta: &Adjustment) -> Adjustment {
        Adjustment {
            instances: delta
                .instances
                .iter()
                .map(|i| Instance {
                    interface: i.interface.clone(),
                    args: i.args.iter().map(|a| self.zonk_arg_lenient(a)).collect(),
                })
                .collect(),
        }
    }

    // -- patterns -------------------------------------------------------------

    fn check_comp_pattern(
        &mut self,
        r: &CompPattern,
        port: &Port,
        ambient: &Ability,
        bindings: &mut Vec<(Name, ValueType)>,
    ) -> Result<TCompPattern, TypeError> {
        match r {
            CompPattern::Value(p) => {
                Ok(TCompPattern::Value(self.check_value_pattern(p, &port.value, bindings)?))
            }
            CompPattern::Request { command, args, continuation, span } => {
                let handled = handled_commands(&self.decls, &port.adjustment);
                let sig = handled
                    .into_iter()
                    .find(|(name, _)| name == command)
                    .map(|(_, sig)| sig)
                    .ok_or_else(|| {
                        err(
                            TypeErrorKind::CommandNotInAdjustment,
                            format!(
                                "command `{command}` is not part of the adjustment <{}> of this port",
                                port.adjustment
                            ),
                            *span,
                        )
                    })?;
                if sig.args.len() != args.len() {
                    return Err(err(
                        TypeErrorKind::ArityMismatch,
                        format!(
                            "command `{command}` carries {} argument(s), found {}",
                            sig.args.len(),
                            args.len()
                        ),
                        *span,
                    ));
                }
                let mut targs = Vec::new();
                for (ty, p) in sig.args.iter().zip(args.iter()) {
                    targs.push(self.check_value_pattern(p, ty, bindings)?);
                }
                // z : {B -> [Σ ⊕ Δ]B'}: the continuation is a plain function.
                let cont_ty = ValueType::Thunk(Box::new(CompType {
                    ports: vec![Port {
                        adjustment: Adjustment::identity(),
                        value: sig.result.clone(),
                    }],
                    peg: Peg {
                        ability: apply_adjustment(ambient, &port.adjustment),
                        value: port.value.clone(),
                    },
                }));
                bindings.push((continuation.name.clone(), cont_ty.clone()));
                self.binder_types.insert(continuation.id, cont_ty.clone());
                Ok(TCompPattern::Request {
                    command: command.clone(),
                    sig,
                    args: targs,
                    continuation: TBinder {
                        name: continuation.name.clone(),
                        ty: cont_ty,
                        span: continuation.span,
                    },
                    span: *span,
                })
            }
            CompPattern::CatchAll(binder, span) => {
                let ty = ValueType::Thunk(Box::new(CompType {
                    ports: vec![],
                    peg: Peg {
                        ability: apply_adjustment(ambient, &port.adjustment),
                        value: port.value.clone(),
                    },
                }));
                bindings.push((binder.name.clone(), ty.clone()));
                self.binder_types.insert(binder.id, ty.clone());
                Ok(TCompPattern::CatchAll(
                    TBinder { name: binder.name.clone(), ty, span: binder.span },
                    *span,
                ))
            }
        }
    }

    fn check_value_pattern(
        &mut self,
        p: &ValuePattern,
        expected: &ValueType,
        bindings: &mut Vec<(Name, ValueType)>,
    ) -> Result<TValuePattern, TypeError> {
        match p {
            ValuePattern::Var(binder) => {
                bindings.push((binder.name.clone(), expected.clone()));
                self.binder_types.insert(binder.id, expected.clone());
                Ok(TValuePattern::Var(TBinder {
                    name: binder.name.clone(),
                    ty: expected.clone(),
                    span: binder.span,
                }))
            }
            ValuePattern::Ctor(name, args, span) => {
                let (data_name, data_args) = self.expect_data_for_ctor(name, expected, *span)?;
                let arg_types = self
                    .decls
                    .ctor_arg_types(&data_name, &data_args, name)
                    .ok_or_else(|| {
                        err(
                            TypeErrorKind::ConstructorMismatch,
                            format!("`{name}` is not a constructor of `{data_name}`"),
                            *span,
                        )
                    })?;
                if arg_types.len() != args.len() {
                    return Err(err(
                        TypeErrorKind::ArityMismatch,
                        format!(
                            "constructor `{name}` expects {} argument(s), found {}",
                            arg_types.len(),
                            args.len()
                        ),
                        *span,
                    ));
                }
                let mut targs = Vec::new();
                for (ty, arg) in arg_types.iter().zip(args.iter()) {
                    targs.push(self.check_value_pattern(arg, ty, bindings)?);
                }
                Ok(TValuePattern::Ctor {
                    name: name.clone(),
                    data: data_name,
                    data_args,
                    args: targs,
                    span: *span,
                })
            }
            ValuePattern::IntLit(v, span) => {
                let int = ValueType::Data("Int".into(), vec![]);
                self.unify_types(expected, &int)
                    .map_err(|e| self.unify_error(e, expected, &int, *span))?;
                Ok(TValuePattern::IntLit(*v, *span))
            }
            ValuePattern::CharLit(c, span) => {
                let ch = ValueType::Data("Char".into(), vec![]);
                self.unify_types(expected, &ch)
                    .map_err(|e| self.unify_error(e, expected, &ch, *span))?;
                Ok(TValuePattern::CharLit(*c, *span))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Zonking: resolve every unification variable in the typed tree; any that
// remain unsolved make the instantiation ambiguous and the program is
// rejected, since elaboration needs concrete type arguments.
// ---------------------------------------------------------------------------

impl Checker {
    pub(crate) fn zonk_value(&self, ty: ValueType, span: Span) -> Result<ValueType, TypeError> {
        match self.resolve(&ty) {
            ValueType::Meta(id) => Err(err(
                TypeErrorKind::AmbiguousInstantiation,
                format!("unsolved type variable ?t{id}; add an annotation or use the value"),
                span,
            )),
            ValueType::Var(v) => Ok(ValueType::Var(v)),
            ValueType::Data(d, args) => Ok(ValueType::Data(
                d,
                args.into_iter().map(|a| self.zonk_arg(a, span)).collect::<Result<_, _>>()?,
            )),
            ValueType::Thunk(c) => Ok(ValueType::Thunk(Box::new(self.zonk_comp(*c, span)?))),
        }
    }

    fn zonk_arg(&self, arg: TypeArg, span: Span) -> Result<TypeArg, TypeError> {
        match arg {
            TypeArg::Val(v) => Ok(TypeArg::Val(self.zonk_value(v, span)?)),
            TypeArg::Ab(ab) => Ok(TypeArg::Ab(self.zonk_ability(ab, span)?)),
        }
    }

    pub(crate) fn zonk_ability(&self, ab: Ability, span: Span) -> Result<Ability, TypeError> {
        let ab = self.resolve_ability(&ab);
        if let AbilityHead::Meta(id) = ab.head {
            return Err(err(
                TypeErrorKind::AmbiguousInstantiation,
                format!("unsolved effect variable ?e{id}"),
                span,
            ));
        }
        Ok(Ability {
            head: ab.head,
            instances: ab
                .instances
                .into_iter()
                .map(|i| {
                    Ok(Instance {
                        interface: i.interface,
                        args: i
                            .args
                            .into_iter()
                            .map(|a| self.zonk_arg(a, span))
                            .collect::<Result<_, _>>()?,
                    })
                })
                .collect::<Result<_, _>>()?,
        })
    }

    fn zonk_adjustment(&self, delta: Adjustment, span: Span) -> Result<Adjustment, TypeError> {
        Ok(Adjustment {
            instances: delta
                .instances
                .into_iter()
                .map(|i| {
                    Ok(Instance {
                        interface: i.interface,
                        args: i
                            .args
                            .into_iter()
                            .map(|a| self.zonk_arg(a, span))
                            .collect::<Result<_, _>>()?,
                    })
                })
                .collect::<Result<_, _>>()?,
        })
    }

    fn zonk_comp(&self, c: CompType, span: Span) -> Result<CompType, TypeError> {
        Ok(CompType {
            ports: c
                .ports
                .into_iter()
                .map(|p| {
                    Ok(Port {
                        adjustment: self.zonk_adjustment(p.adjustment, span)?,
                        value: self.zonk_value(p.value, span)?,
                    })
                })
                .collect::<Result<_, _>>()?,
            peg: Peg {
                ability: self.zonk_ability(c.peg.ability, span)?,
                value: self.zonk_value(c.peg.value, span)?,
            },
        })
    }

    fn zonk_sig(&self, sig: CommandSig, span: Span) -> Result<CommandSig, TypeError> {
        Ok(CommandSig {
            interface: sig.interface,
            instance_args: sig
                .instance_args
                .into_iter()
                .map(|a| self.zonk_arg(a, span))
                .collect::<Result<_, _>>()?,
            args: sig
                .args
                .into_iter()
                .map(|a| self.zonk_value(a, span))
                .collect::<Result<_, _>>()?,
            result: self.zonk_value(sig.result, span)?,
        })
    }

    fn zonk_use(&self, u: TUse) -> Result<TUse, TypeError> {
        match u {
            TUse::Var { name, ty, span } => {
                Ok(TUse::Var { name, ty: self.zonk_value(ty, span)?, span })
            }
            TUse::Poly { name, poly, args, ty, span } => Ok(TUse::Poly {
                name,
                poly,
                args: args
                    .into_iter()
                    .map(|a| self.zonk_arg(a, span))
                    .collect::<Result<_, _>>()?,
                ty: self.zonk_value(ty, span)?,
                span,
            }),
            TUse::Builtin { name, poly, args, ty, span } => Ok(TUse::Builtin {
                name,
                poly,
                args: args
                    .into_iter()
                    .map(|a| self.zonk_arg(a, span))
                    .collect::<Result<_, _>>()?,
                ty: self.zonk_value(ty, span)?,
                span,
            }),
            TUse::Command { name, sig, ambient, ty, span } => Ok(TUse::Command {
                name,
                sig: self.zonk_sig(sig, span)?,
                ambient: self.zonk_ability(ambient, span)?,
                ty: self.zonk_value(ty, span)?,
                span,
            }),
            TUse::App { head, head_comp, args, ambient, ty, span } => Ok(TUse::App {
                head: Box::new(self.zonk_use(*head)?),
                head_comp: self.zonk_comp(head_comp, span)?,
                args: args
                    .into_iter()
                    .map(|a| self.zonk_construction(a))
                    .collect::<Result<_, _>>()?,
                ambient: self.zonk_ability(ambient, span)?,
                ty: self.zonk_value(ty, span)?,
                span,
            }),
        }
    }

    pub(crate) fn zonk_construction(&self, n: TConstruction) -> Result<TConstruction, TypeError> {
        match n {
            TConstruction::Use(u) => Ok(TConstruction::Use(Box::new(self.zonk_use(*u)?))),
            TConstruction::Ctor { name, data, data_args, arg_types, args, span } => {
                Ok(TConstruction::Ctor {
                    name,
                    data,
                    data_args: data_args
                        .into_iter()
                        .map(|a| self.zonk_arg(a, span))
                        .collect::<Result<_, _>>()?,
                    arg_types: arg_types
                        .into_iter()
                        .map(|t| self.zonk_value(t, span))
                        .collect::<Result<_, _>>()?,
                    args: args
                        .into_iter()
                        .map(|a| self.zonk_construction(a))
                        .collect::<Result<_, _>>()?,
                    span,
                })
            }
            TConstruction::IntLit(v, span) => Ok(TConstruction::IntLit(v, span)),
            TConstruction::CharLit(c, span) => Ok(TConstruction::CharLit(c, span)),
            TConstruction::Suspend(comp, span) => {
                Ok(TConstruction::Suspend(self.zonk_computation(comp, span)?, span))
            }
            TConstruction::Let { name, poly, bound, body, span } => Ok(TConstruction::Let {
                name,
                poly,
                bound: Box::new(self.zonk_construction(*bound)?),
                body: Box::new(self.zonk_construction(*body)?),
                span,
            }),
            TConstruction::LetRec { bindings, body, span } => Ok(TConstruction::LetRec {
                bindings: bindings
                    .into_iter()
                    .map(|(n, p, c)| Ok((n, p, self.zonk_computation(c, span)?)))
                    .collect::<Result<_, _>>()?,
                body: Box::new(self.zonk_construction(*body)?),
                span,
            }),
        }
    }

    fn zonk_computation(&self, c: TComputation, span: Span) -> Result<TComputation, TypeError> {
        Ok(TComputation {
            clauses: c
                .clauses
                .into_iter()
                .map(|cl| {
                    Ok(TClause {
                        patterns: cl
                            .patterns
                            .into_iter()
                            .map(|p| self.zonk_comp_pattern(p))
                            .collect::<Result<_, _>>()?,
                        body: self.zonk_construction(cl.body)?,
                        span: cl.span,
                    })
                })
                .collect::<Result<_, _>>()?,
            comp: self.zonk_comp(c.comp, span)?,
        })
    }

    fn zonk_comp_pattern(&self, p: TCompPattern) -> Result<TCompPattern, TypeError> {
        match p {
            TCompPattern::Value(vp) => Ok(TCompPattern::Value(self.zonk_value_pattern(vp)?)),
            TCompPattern::Request { command, sig, args, continuation, span } => {
                Ok(TCompPattern::Request {
                    command,
                    sig: self.zonk_sig(sig, span)?,
                    args: args
                        .into_iter()
                        .map(|a| self.zonk_value_pattern(a))
                        .collect::<Result<_, _>>()?,
                    continuation: self.zonk_binder(continuation)?,
                    span,
                })
            }
            TCompPattern::CatchAll(b, span) => {
                Ok(TCompPattern::CatchAll(self.zonk_binder(b)?, span))
            }
        }
    }

    fn zonk_value_pattern(&self, p: TValuePattern) -> Result<TValuePattern, TypeError> {
        match p {
            TValuePattern::Var(b) => Ok(TValuePattern::Var(self.zonk_binder(b)?)),
            TValuePattern::Ctor { name, data, data_args, args, span } => Ok(TValuePattern::Ctor {
                name,
                data,
                data_args: data_args
                    .into_iter()
                    .map(|a| self.zonk_arg(a, span))
                    .collect::<Result<_, _>>()?,
                args: args
                    .into_iter()
                    .map(|a| self.zonk_value_pattern(a))
                    .collect::<Result<_, _>>()?,
                span,
            }),
            TValuePattern::IntLit(v, span) => Ok(TValuePattern::IntLit(v, span)),
            TValuePattern::CharLit(c, span) => Ok(TValuePattern::CharLit(c, span)),
        }
    }

    fn zonk_binder(&self, b: TBinder) -> Result<TBinder, TypeError> {
        Ok(TBinder { name: b.name, ty: self.zonk_value(b.ty, b.span)?, span: b.span })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desugar::desugar;
    use crate::parser::parse_program;

    fn check_src(src: &str, ambient: Ability) -> Result<TypedProgram, TypeError> {
        let program = desugar(&parse_program(src).unwrap()).unwrap();
        check_program(&program, &ambient).map(|(t, _)| t)
    }

    const BASE: &str = "data Zero =\ndata Unit = unit\ndata Bool = tt | ff\n\
                        data List X = nil | cons X (List X)\n\
                        interface State S = get : S | put : S -> Unit\n\
                        interface Abort = aborting : Zero\n\
                        interface Send X = send : X -> Unit\n\
                        interface Console = inch : Char | ouch : Char -> Unit\n";

    fn console() -> Ability {
        Ability::empty().with("Console", vec![])
    }

    #[test]
    fn infers_a_monomorphic_variable() {
        let src = format!("{BASE}f : Int -> Int\nf x = x\nmain : [0, Console]Int\nmain! = f 3\n");
        assert!(check_src(&src, console()).is_ok());
    }

    #[test]
    fn command_type_carries_the_ambient() {
        // get inside a state-handled computation has the extended ambient in
        // its thunk peg; observable through a selective use.
        let src = format!(
            "{BASE}state : S -> <State S>X -> X\nstate _ x = x\n\
             state s <get -> k> = state s (k s)\nstate _ <put s -> k> = state s (k unit)\n\
             main : [0, Console]Int\nmain! = state 4 get!\n"
        );
        assert!(check_src(&src, console()).is_ok());
    }

    #[test]
    fn peg_must_match_ambient() {
        let src = format!(
            "{BASE}f : [Send Int]Unit\nf! = send 3\nbad : [0]Unit\nbad! = f!\n\
             main : [0, Console]Int\nmain! = 0\n"
        );
        let err = check_src(&src, console()).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::AbilityMismatch);
    }

    #[test]
    fn applying_a_non_thunk_fails() {
        let src = format!("{BASE}f : Int -> Int\nf x = x x\nmain : [0, Console]Int\nmain! = 0\n");
        let err = check_src(&src, console()).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::NotAThunk);
    }

    #[test]
    fn spine_arity_is_checked() {
        let src = format!("{BASE}f : Int -> Int\nf x = x\nmain : [0, Console]Int\nmain! = f 1 2\n");
        let err = check_src(&src, console()).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::ArityMismatch);
    }

    #[test]
    fn constructions_check_against_data() {
        let src = format!(
            "{BASE}f : List Int\nf! = cons 1 nil\nmain : [0, Console]Int\nmain! = 0\n"
        );
        assert!(check_src(&src, console()).is_ok());
        let bad = format!("{BASE}f : Int\nf! = unit\nmain : [0, Console]Int\nmain! = 0\n");
        let err = check_src(&bad, console()).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::ConstructorMismatch);
    }

    #[test]
    fn suspensions_need_suspension_types() {
        let src = format!("{BASE}f : Int\nf! = {{unit}}\nmain : [0, Console]Int\nmain! = 0\n");
        let err = check_src(&src, console()).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::NotASuspension);
    }

    #[test]
    fn unbound_variables_are_reported() {
        let src = format!("{BASE}main : [0, Console]Int\nmain! = mystery\n");
        let err = check_src(&src, console()).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::UnboundVariable);
    }

    #[test]
    fn catch_all_binds_a_suspension_of_the_extended_ambient() {
        // <x> at an <Abort>X port binds x : {[Σ, Abort]X}: forcing it inside
        // the clause body needs Abort in the peg; this program relies on it.
        let src = format!(
            "{BASE}recover : <Abort>X -> [Abort]X\nrecover x = x\nrecover <g> = g!\n\
             main : [0, Console]Int\nmain! = 0\n"
        );
        assert!(check_src(&src, console()).is_ok());
    }

    #[test]
    fn request_continuation_is_a_plain_function() {
        // k : {Unit -> [Σ, State S]X} after a put: applying it to a non-Unit
        // argument fails.
        let src = format!(
            "{BASE}h : <State Int>X -> X\nh x = x\nh <get -> k> = h (k 0)\n\
             h <put s -> k> = h (k s)\nmain : [0, Console]Int\nmain! = 0\n"
        );
        let err = check_src(&src, console()).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::TypeMismatch);
    }

    // -- unification ----------------------------------------------------------

    fn fresh_checker() -> Checker {
        Checker {
            decls: Declarations::default(),
            store: Vec::new(),
            warnings: Vec::new(),
            binder_types: Default::default(),
        }
    }

    #[test]
    fn unify_solves_value_metas() {
        let mut c = fresh_checker();
        let m = c.fresh_val_meta();
        let int = ValueType::Data("Int".into(), vec![]);
        c.unify_types(&m, &int).unwrap();
        assert_eq!(c.resolve(&m), int);

        let a = c.fresh_val_meta();
        let list_a = ValueType::Data("List".into(), vec![TypeArg::Val(a.clone())]);
        let list_int = ValueType::Data("List".into(), vec![TypeArg::Val(int.clone())]);
        c.unify_types(&list_a, &list_int).unwrap();
        assert_eq!(c.resolve(&a), int);
    }

    #[test]
    fn unify_rejects_distinct_interfaces_in_ports() {
        let mut c = fresh_checker();
        let port = |iface: &str| {
            ValueType::Thunk(Box::new(CompType {
                ports: vec![Port {
                    adjustment: Adjustment {
                        instances: vec![Instance {
                            interface: iface.into(),
                            args: vec![TypeArg::Val(ValueType::Var("X".into()))],
                        }],
                    },
                    value: ValueType::Data("Unit".into(), vec![]),
                }],
                peg: Peg { ability: Ability::var("%e0"), value: ValueType::Data("Unit".into(), vec![]) },
            }))
        };
        assert!(c.unify_types(&port("Send"), &port("Receive")).is_err());
    }

    #[test]
    fn flexible_head_absorbs_the_rigid_remainder() {
        let mut c = fresh_checker();
        let m = c.fresh_ab_meta();
        let rigid = Ability::empty().with("Console", vec![]);
        c.unify_abilities(&m, &rigid).unwrap();
        assert!(abilities_equal(&c.resolve_ability(&m), &rigid));
    }

    #[test]
    fn shared_instances_stay_with_the_flexible_side() {
        let mut c = fresh_checker();
        let m = c.fresh_ab_meta();
        let send = |args: Vec<TypeArg>| Instance { interface: "Send".into(), args };
        let flex = Ability {
            head: m.head.clone(),
            instances: vec![send(vec![TypeArg::Val(ValueType::Var("X".into()))])],
        };
        let rigid = Ability::var("%e9").with("Send", vec![TypeArg::Val(ValueType::Var("X".into()))]);
        c.unify_abilities(&flex, &rigid).unwrap();
        // μ := ε′, not ε′ + Send X.
        assert_eq!(c.resolve_ability(&m), Ability::var("%e9"));
    }

    #[test]
    fn disjoint_rigid_instances_clash() {
        let mut c = fresh_checker();
        let a = Ability::empty().with("Abort", vec![]);
        let b = Ability::empty()
            .with("State", vec![TypeArg::Val(ValueType::Data("Int".into(), vec![]))]);
        assert!(c.unify_abilities(&a, &b).is_err());
    }

    #[test]
    fn unifying_an_ability_with_itself_solves_nothing() {
        let mut c = fresh_checker();
        let sigma = Ability::var("%e1")
            .with("Abort", vec![])
            .with("State", vec![TypeArg::Val(ValueType::Data("Int".into(), vec![]))]);
        let before = c.store.len();
        c.unify_abilities(&sigma, &sigma).unwrap();
        assert_eq!(c.store.len(), before);
        assert!(c.store.iter().all(|e| matches!(
            e,
            MetaEntry::UnsolvedVal | MetaEntry::UnsolvedAb
        ) || true));
    }

    #[test]
    fn occurs_check_fires() {
        let mut c = fresh_checker();
        let m = c.fresh_val_meta();
        let list_m = ValueType::Data("List".into(), vec![TypeArg::Val(m.clone())]);
        assert!(matches!(c.unify_types(&m, &list_m), Err(UnifyError::Occurs)));
    }

    #[test]
    fn ambiguous_instantiations_are_rejected() {
        // The abort in the discarded first argument never determines its
        // value type.
        let src = format!(
            "{BASE}snd2 : X -> Y -> Y\nsnd2 x y = y\nabort : [Abort]X\nabort! = on2 aborting! {{}}\n\
             on2 : X -> {{X -> Y}} -> Y\non2 x f = f x\n\
             weird : [Abort]Int\nweird! = snd2 abort! 3\n\
             main : [0, Console]Int\nmain! = 0\n"
        );
        let err = check_src(&src, console()).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::AmbiguousInstantiation);
    }
}
