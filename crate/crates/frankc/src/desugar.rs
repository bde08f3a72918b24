//! Desugaring from surface items into the abstract syntax.
//!
//! Every signature is closed into a polytype over its free type variables
//! plus one fresh implicit effect variable; omitted pegs and brackets get the
//! implicit variable as their head and omitted adjustments become the
//! identity. Equation groups merge into computations and all definitions form
//! a single mutually recursive letrec whose body is `main!`.

use crate::parser::{
    Item, SAbility, SAdjustment, SClause, SCompType, SExpr, SPattern, STypeArg, SValueType,
    SurfaceProgram,
};
use crate::span::Span;
use crate::syntax::*;

#[derive(Clone, Debug)]
pub struct DesugarError {
    pub message: String,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct Program {
    pub decls: Declarations,
    /// The whole program as one construction (a letrec over all definitions).
    pub term: Construction,
    pub has_main: bool,
}

/// Names introduced by the desugarer carry a prefix no source identifier can
/// have, so they never collide with user names.
pub const FRESH_PREFIX: char = '%';

pub fn is_fresh_effect_var(name: &str) -> bool {
    name.starts_with("%e")
}

pub fn is_wildcard_var(name: &str) -> bool {
    name.starts_with("%w")
}

#[derive(Default)]
struct Fresh {
    counter: u32,
}

impl Fresh {
    fn effect_var(&mut self) -> Name {
        let n = self.counter;
        self.counter += 1;
        format!("%e{n}")
    }
    fn wildcard(&mut self) -> Name {
        let n = self.counter;
        self.counter += 1;
        format!("%w{n}")
    }
    fn binder(&mut self) -> BinderId {
        let n = self.counter;
        self.counter += 1;
        n
    }
}

pub fn desugar(items: &SurfaceProgram) -> Result<Program, DesugarError> {
    let mut fresh = Fresh::default();
    let decls = desugar_declarations(items, &mut fresh)?;
    let defs = desugar_definitions(items, &decls, &mut fresh)?;

    let has_main = defs.iter().any(|(name, _, _)| name == "main");
    let body = if has_main {
        Construction::Use(Box::new(Use::App(
            Box::new(Use::Ident("main".into(), Span::synthetic())),
            Vec::new(),
            Span::synthetic(),
        )))
    } else {
        Construction::IntLit(0, Span::synthetic())
    };
    let term = if defs.is_empty() {
        body
    } else {
        Construction::LetRec { bindings: defs, body: Box::new(body), span: Span::synthetic() }
    };
    Ok(Program { decls, term, has_main })
}

// ---------------------------------------------------------------------------
// Declarations
// ---------------------------------------------------------------------------

fn builtin_datas() -> Vec<DataDecl> {
    let sp = Span::synthetic();
    vec![
        DataDecl { name: "Int".into(), params: vec![], ctors: vec![], span: sp, builtin: true },
        DataDecl { name: "Char".into(), params: vec![], ctors: vec![], span: sp, builtin: true },
    ]
}

fn desugar_declarations(
    items: &SurfaceProgram,
    fresh: &mut Fresh,
) -> Result<Declarations, DesugarError> {
    // Which declarations are implicitly effect-parameterised: a definition
    // whose body mentions the implicit effect variable (an open peg or an
    // open bracketed ability) gains it as first parameter, and so does any
    // definition referring to such a type without supplying the ability.
    let mut names: Vec<(&str, bool, usize, Span)> = Vec::new(); // (name, is_data, arity, span)
    for item in items {
        match item {
            Item::Data { name, params, span, .. } => names.push((name, true, params.len(), *span)),
            Item::Interface { name, params, span, .. } => {
                names.push((name, false, params.len(), *span))
            }
            _ => {}
        }
    }

    let mut needs_eps: Vec<bool> = vec![false; names.len()];
    let index_of = |n: &str| names.iter().position(|(name, _, _, _)| *name == n);

    let decl_types = |item: &Item| -> Vec<SValueType> {
        match item {
            Item::Data { ctors, .. } => {
                ctors.iter().flat_map(|(_, args, _)| args.clone()).collect()
            }
            Item::Interface { commands, .. } => commands
                .iter()
                .flat_map(|(_, args, result, _)| {
                    let mut v = args.clone();
                    v.push(result.clone());
                    v
                })
                .collect(),
            _ => vec![],
        }
    };

    let decl_items: Vec<&Item> = items
        .iter()
        .filter(|i| matches!(i, Item::Data { .. } | Item::Interface { .. }))
        .collect();

    loop {
        let mut changed = false;
        for (i, item) in decl_items.iter().enumerate() {
            if needs_eps[i] {
                continue;
            }
            let mut uses = false;
            for ty in decl_types(item) {
                if surface_type_uses_eps(&ty, &|n, argc| {
                    index_of(n)
                        .map(|j| needs_eps[j] && argc == names[j].2)
                        .unwrap_or(false)
                }) {
                    uses = true;
                    break;
                }
            }
            if uses {
                needs_eps[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Well-formedness of the namespaces.
    let mut decls = Declarations { datas: builtin_datas(), interfaces: Vec::new() };
    for (i, item) in decl_items.iter().enumerate() {
        let (name, span) = match item {
            Item::Data { name, span, .. } | Item::Interface { name, span, .. } => (name, *span),
            _ => unreachable!(),
        };
        if decls.data(name).is_some() || decls.interface(name).is_some() {
            return Err(DesugarError {
                message: format!("`{name}` is declared more than once"),
                span,
            });
        }
        // Reserve the slot so self- and forward references resolve; bodies
        // are filled in a second pass once every arity is known.
        let params = decl_params(item, needs_eps[i], fresh);
        match item {
            Item::Data { name, span, .. } => decls.datas.push(DataDecl {
                name: name.clone(),
                params,
                ctors: vec![],
                span: *span,
                builtin: false,
            }),
            Item::Interface { name, span, .. } => decls.interfaces.push(InterfaceDecl {
                name: name.clone(),
                params,
                commands: vec![],
                span: *span,
            }),
            _ => unreachable!(),
        }
    }

    // Second pass: component types.
    for (i, item) in decl_items.iter().enumerate() {
        match item {
            Item::Data { name, params, ctors, span } => {
                check_param_names(params, *span)?;
                let eps = effect_param_name(&decls.data(name).unwrap().params);
                let mut out = Vec::new();
                for (cname, args, cspan) in ctors {
                    if decls.ctor_owner(cname).is_some() || decls.command_owner(cname).is_some() {
                        return Err(DesugarError {
                            message: format!(
                                "`{cname}` already names a constructor or command"
                            ),
                            span: *cspan,
                        });
                    }
                    let args = args
                        .iter()
                        .map(|a| {
                            desugar_value_type(a, &eps_ctx(&decls, eps.as_deref(), params))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    out.push(CtorDecl { name: cname.clone(), args, span: *cspan });
                    let d = decls.datas.iter_mut().find(|d| d.name == *name).unwrap();
                    d.ctors = out.clone();
                }
                let _ = needs_eps[i];
            }
            Item::Interface { name, params, commands, span } => {
                check_param_names(params, *span)?;
                let eps = effect_param_name(&decls.interface(name).unwrap().params);
                let mut out = Vec::new();
                for (cname, args, result, cspan) in commands {
                    if decls.ctor_owner(cname).is_some() || decls.command_owner(cname).is_some() {
                        return Err(DesugarError {
                            message: format!(
                                "`{cname}` already names a constructor or command"
                            ),
                            span: *cspan,
                        });
                    }
                    let ctx = eps_ctx(&decls, eps.as_deref(), params);
                    let args = args
                        .iter()
                        .map(|a| desugar_value_type(a, &ctx))
                        .collect::<Result<Vec<_>, _>>()?;
                    let result = desugar_value_type(result, &ctx)?;
                    out.push(CommandDecl { name: cname.clone(), args, result, span: *cspan });
                    let it = decls.interfaces.iter_mut().find(|d| d.name == *name).unwrap();
                    it.commands = out.clone();
                }
            }
            _ => {}
        }
    }
    Ok(decls)
}

fn decl_params(item: &Item, needs_eps: bool, fresh: &mut Fresh) -> Vec<TypeParam> {
    let raw = match item {
        Item::Data { params, .. } | Item::Interface { params, .. } => params,
        _ => unreachable!(),
    };
    let mut out = Vec::new();
    if needs_eps {
        out.push(TypeParam::Eff(fresh.effect_var()));
    }
    out.extend(raw.iter().map(|p| TypeParam::Val(p.clone())));
    out
}

fn effect_param_name(params: &[TypeParam]) -> Option<String> {
    match params.first() {
        Some(TypeParam::Eff(e)) => Some(e.clone()),
        _ => None,
    }
}

fn check_param_names(params: &[String], span: Span) -> Result<(), DesugarError> {
    for (i, p) in params.iter().enumerate() {
        if params[i + 1..].contains(p) {
            return Err(DesugarError {
                message: format!("duplicate type parameter `{p}`"),
                span,
            });
        }
    }
    Ok(())
}

/// Does a surface type mention the implicit effect variable, directly (an
/// open peg or open bracketed ability) or through a reference to an
/// effect-parameterised type that omits the ability argument?
fn surface_type_uses_eps(ty: &SValueType, ref_needs: &dyn Fn(&str, usize) -> bool) -> bool {
    match ty {
        SValueType::Ident(name, args, _) => {
            if ref_needs(name, args.len()) {
                return true;
            }
            args.iter().any(|a| match a {
                STypeArg::Ty(t) => surface_type_uses_eps(t, ref_needs),
                STypeArg::Ab(ab, _) => surface_ability_open(ab, ref_needs),
            })
        }
        SValueType::Thunk(comp, _) => surface_comp_uses_eps(comp, ref_needs),
    }
}

fn surface_comp_uses_eps(comp: &SCompType, ref_needs: &dyn Fn(&str, usize) -> bool) -> bool {
    for port in &comp.ports {
        if surface_type_uses_eps(&port.ty, ref_needs) {
            return true;
        }
        if let Some(adj) = &port.adjustment {
            for (_, args, _) in &adj.instances {
                if args.iter().any(|a| match a {
                    STypeArg::Ty(t) => surface_type_uses_eps(t, ref_needs),
                    STypeArg::Ab(ab, _) => surface_ability_open(ab, ref_needs),
                }) {
                    return true;
                }
            }
        }
    }
    match &comp.peg.ability {
        None => true,
        Some(ab) => surface_ability_open(ab, ref_needs) || surface_type_uses_eps(&comp.peg.ty, ref_needs),
    }
}

fn surface_ability_open(ab: &SAbility, ref_needs: &dyn Fn(&str, usize) -> bool) -> bool {
    if !ab.closed {
        return true;
    }
    ab.instances.iter().any(|(_, args, _)| {
        args.iter().any(|a| match a {
            STypeArg::Ty(t) => surface_type_uses_eps(t, ref_needs),
            STypeArg::Ab(inner, _) => surface_ability_open(inner, ref_needs),
        })
    })
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

struct TypeCtx<'a> {
    decls: &'a Declarations,
    /// The implicit effect variable for the enclosing signature/definition,
    /// or None inside definitions that are not effect-parameterised.
    eps: Option<&'a str>,
    /// Type variables bound by the enclosing declaration, if any; when set,
    /// unknown names are errors rather than implicitly quantified variables.
    scope: Option<&'a [String]>,
}

fn eps_ctx<'a>(
    decls: &'a Declarations,
    eps: Option<&'a str>,
    scope: &'a [String],
) -> TypeCtx<'a> {
    TypeCtx { decls, eps, scope: Some(scope) }
}

fn implicit_head(ctx: &TypeCtx, span: Span) -> Result<AbilityHead, DesugarError> {
    match ctx.eps {
        Some(e) => Ok(AbilityHead::Var(e.to_string())),
        None => Err(DesugarError {
            message: "this definition needs the implicit effect variable but is not effect-parameterised".into(),
            span,
        }),
    }
}

fn desugar_value_type(ty: &SValueType, ctx: &TypeCtx) -> Result<ValueType, DesugarError> {
    match ty {
        SValueType::Thunk(comp, _) => {
            Ok(ValueType::Thunk(Box::new(desugar_comp_type(comp, ctx)?)))
        }
        SValueType::Ident(name, args, span) => {
            if let Some(decl) = ctx.decls.data(name) {
                let args = desugar_type_args(args, ctx)?;
                let full = insert_implicit_arg(&decl.params.clone(), args, ctx, *span)?;
                kind_check(&decl.params.clone(), &full, name, ctx, *span)?;
                Ok(ValueType::Data(name.clone(), full))
            } else if ctx.decls.interface(name).is_some() {
                Err(DesugarError {
                    message: format!("`{name}` is an interface, not a value type"),
                    span: *span,
                })
            } else if args.is_empty() {
                if let Some(scope) = ctx.scope {
                    if !scope.contains(name) {
                        return Err(DesugarError {
                            message: format!("unknown type `{name}`"),
                            span: *span,
                        });
                    }
                }
                Ok(ValueType::Var(name.clone()))
            } else {
                Err(DesugarError {
                    message: format!("unknown type constructor `{name}`"),
                    span: *span,
                })
            }
        }
    }
}

fn desugar_type_args(args: &[STypeArg], ctx: &TypeCtx) -> Result<Vec<TypeArg>, DesugarError> {
    args.iter()
        .map(|a| match a {
            STypeArg::Ty(t) => Ok(TypeArg::Val(desugar_value_type(t, ctx)?)),
            STypeArg::Ab(ab, span) => Ok(TypeArg::Ab(desugar_ability(ab, ctx, *span)?)),
        })
        .collect()
}

/// A reference to an effect-parameterised type may omit the ability
/// argument; the implicit effect variable is inserted in front.
fn insert_implicit_arg(
    params: &[TypeParam],
    args: Vec<TypeArg>,
    ctx: &TypeCtx,
    span: Span,
) -> Result<Vec<TypeArg>, DesugarError> {
    if args.len() == params.len() {
        return Ok(args);
    }
    if args.len() + 1 == params.len() && matches!(params.first(), Some(TypeParam::Eff(_))) {
        let head = implicit_head(ctx, span)?;
        let mut full = vec![TypeArg::Ab(Ability { head, instances: vec![] })];
        full.extend(args);
        return Ok(full);
    }
    Err(DesugarError {
        message: format!(
            "expected {} type argument(s), found {}",
            params.len(),
            args.len()
        ),
        span,
    })
}

fn kind_check(
    params: &[TypeParam],
    args: &[TypeArg],
    name: &str,
    _ctx: &TypeCtx,
    span: Span,
) -> Result<(), DesugarError> {
    for (p, a) in params.iter().zip(args.iter()) {
        let ok = matches!(
            (p, a),
            (TypeParam::Val(_), TypeArg::Val(_)) | (TypeParam::Eff(_), TypeArg::Ab(_))
        );
        if !ok {
            return Err(DesugarError {
                message: format!(
                    "type argument kind mismatch in `{name}`: an ability argument may only instantiate an effect parameter"
                ),
                span,
            });
        }
    }
    Ok(())
}

fn desugar_ability(ab: &SAbility, ctx: &TypeCtx, span: Span) -> Result<Ability, DesugarError> {
    let head = if ab.closed { AbilityHead::Empty } else { implicit_head(ctx, span)? };
    let mut instances = Vec::new();
    for (name, args, ispan) in &ab.instances {
        instances.push(desugar_instance(name, args, ctx, *ispan)?);
    }
    Ok(Ability { head, instances })
}

fn desugar_instance(
    name: &str,
    args: &[STypeArg],
    ctx: &TypeCtx,
    span: Span,
) -> Result<Instance, DesugarError> {
    let decl = ctx.decls.interface(name).ok_or_else(|| DesugarError {
        message: format!("unknown interface `{name}`"),
        span,
    })?;
    let params = decl.params.clone();
    let args = desugar_type_args(args, ctx)?;
    let full = insert_implicit_arg(&params, args, ctx, span)?;
    kind_check(&params, &full, name, ctx, span)?;
    Ok(Instance { interface: name.to_string(), args: full })
}

fn desugar_adjustment(
    adj: &Option<SAdjustment>,
    ctx: &TypeCtx,
    span: Span,
) -> Result<Adjustment, DesugarError> {
    match adj {
        None => Ok(Adjustment::identity()),
        Some(a) => {
            let mut instances = Vec::new();
            for (name, args, ispan) in &a.instances {
                instances.push(desugar_instance(name, args, ctx, *ispan)?);
            }
            let _ = span;
            Ok(Adjustment { instances })
        }
    }
}

fn desugar_comp_type(comp: &SCompType, ctx: &TypeCtx) -> Result<CompType, DesugarError> {
    let mut ports = Vec::new();
    for port in &comp.ports {
        ports.push(Port {
            adjustment: desugar_adjustment(&port.adjustment, ctx, Span::synthetic())?,
            value: desugar_value_type(&port.ty, ctx)?,
        });
    }
    let ability = match &comp.peg.ability {
        None => Ability { head: implicit_head(ctx, Span::synthetic())?, instances: vec![] },
        Some(ab) => desugar_ability(ab, ctx, Span::synthetic())?,
    };
    Ok(CompType { ports, peg: Peg { ability, value: desugar_value_type(&comp.peg.ty, ctx)? } })
}

/// A signature becomes a polytype over its free type variables plus the
/// implicit effect variable (when the type mentions it).
fn desugar_signature(
    ty: &SCompType,
    decls: &Declarations,
    fresh: &mut Fresh,
) -> Result<PolyType, DesugarError> {
    let eps = fresh.effect_var();
    let ctx = TypeCtx { decls, eps: Some(&eps), scope: None };
    let comp = desugar_comp_type(ty, &ctx)?;
    let body = ValueType::Thunk(Box::new(comp));
    let mut fv = FreeVars::default();
    free_vars_value(&body, &mut fv);
    let mut binders = Vec::new();
    if fv.effect_vars.iter().any(|e| e == &eps) {
        binders.push(TypeParam::Eff(eps.clone()));
    }
    binders.extend(fv.value_vars.into_iter().map(TypeParam::Val));
    Ok(PolyType { binders, body })
}

// ---------------------------------------------------------------------------
// Definitions
// ---------------------------------------------------------------------------

type Defs = Vec<(Name, PolyType, Computation)>;

fn desugar_definitions(
    items: &SurfaceProgram,
    decls: &Declarations,
    fresh: &mut Fresh,
) -> Result<Defs, DesugarError> {
    let mut defs: Defs = Vec::new();
    let mut i = 0;
    while i < items.len() {
        match &items[i] {
            Item::Data { .. } | Item::Interface { .. } => {
                i += 1;
            }
            Item::Signature { name, ty, span } => {
                if defs.iter().any(|(n, _, _)| n == name) {
                    return Err(DesugarError {
                        message: format!("`{name}` is defined more than once"),
                        span: *span,
                    });
                }
                let poly = desugar_signature(ty, decls, fresh)?;
                let mut clauses = Vec::new();
                let mut arity: Option<usize> = None;
                let mut j = i + 1;
                while j < items.len() {
                    match &items[j] {
                        Item::Equation { name: en, nullary, patterns, body, span: espan }
                            if en == name =>
                        {
                            let width = if *nullary { 0 } else { patterns.len() };
                            match arity {
                                None => arity = Some(width),
                                Some(w) if w != width => {
                                    return Err(DesugarError {
                                        message: format!(
                                            "equations for `{name}` disagree on the number of patterns"
                                        ),
                                        span: *espan,
                                    })
                                }
                                _ => {}
                            }
                            let mut binders = Vec::new();
                            let pats = patterns
                                .iter()
                                .map(|p| desugar_comp_pattern(p, decls, fresh, &mut binders))
                                .collect::<Result<Vec<_>, _>>()?;
                            let body = desugar_expr(body, decls, fresh)?;
                            clauses.push(Clause { patterns: pats, body, span: *espan });
                            j += 1;
                        }
                        _ => break,
                    }
                }
                if clauses.is_empty() {
                    return Err(DesugarError {
                        message: format!("signature for `{name}` has no equations"),
                        span: *span,
                    });
                }
                defs.push((name.clone(), poly, Computation { clauses }));
                i = j;
            }
            Item::Equation { name, span, .. } => {
                return Err(DesugarError {
                    message: format!("equation for `{name}` has no preceding signature"),
                    span: *span,
                });
            }
        }
    }
    Ok(defs)
}

// ---------------------------------------------------------------------------
// Patterns
// ---------------------------------------------------------------------------

fn desugar_comp_pattern(
    p: &SPattern,
    decls: &Declarations,
    fresh: &mut Fresh,
    binders: &mut Vec<Name>,
) -> Result<CompPattern, DesugarError> {
    match p {
        SPattern::Request { command, args, continuation, span } => {
            let args = args
                .iter()
                .map(|a| desugar_value_pattern(a, decls, fresh, binders))
                .collect::<Result<Vec<_>, _>>()?;
            let cont_name = match continuation {
                Some(z) => {
                    note_binder(z, *span, binders)?;
                    z.clone()
                }
                None => fresh.wildcard(),
            };
            Ok(CompPattern::Request {
                command: command.clone(),
                args,
                continuation: Binder { name: cont_name, id: fresh.binder(), span: *span },
                span: *span,
            })
        }
        SPattern::CatchAll(name, span) => {
            let n = match name {
                Some(x) => {
                    note_binder(x, *span, binders)?;
                    x.clone()
                }
                None => fresh.wildcard(),
            };
            Ok(CompPattern::CatchAll(Binder { name: n, id: fresh.binder(), span: *span }, *span))
        }
        other => Ok(CompPattern::Value(desugar_value_pattern(other, decls, fresh, binders)?)),
    }
}

fn desugar_value_pattern(
    p: &SPattern,
    decls: &Declarations,
    fresh: &mut Fresh,
    binders: &mut Vec<Name>,
) -> Result<ValuePattern, DesugarError> {
    match p {
        SPattern::Ident(name, span) => {
            if let Some((data, ctor)) = decls.ctor_owner(name) {
                if !ctor.args.is_empty() {
                    return Err(DesugarError {
                        message: format!(
                            "constructor `{name}` of `{}` expects {} argument(s)",
                            data.name,
                            ctor.args.len()
                        ),
                        span: *span,
                    });
                }
                Ok(ValuePattern::Ctor(name.clone(), vec![], *span))
            } else {
                note_binder(name, *span, binders)?;
                Ok(ValuePattern::Var(Binder { name: name.clone(), id: fresh.binder(), span: *span }))
            }
        }
        SPattern::Wildcard(span) => Ok(ValuePattern::Var(Binder {
            name: fresh.wildcard(),
            id: fresh.binder(),
            span: *span,
        })),
        SPattern::Ctor(name, args, span) => {
            let (data, ctor) = decls.ctor_owner(name).ok_or_else(|| DesugarError {
                message: format!("unknown constructor `{name}`"),
                span: *span,
            })?;
            if ctor.args.len() != args.len() {
                return Err(DesugarError {
                    message: format!(
                        "constructor `{name}` of `{}` expects {} argument(s), found {}",
                        data.name,
                        ctor.args.len(),
                        args.len()
                    ),
                    span: *span,
                });
            }
            let args = args
                .iter()
                .map(|a| desugar_value_pattern(a, decls, fresh, binders))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ValuePattern::Ctor(name.clone(), args, *span))
        }
        SPattern::IntLit(n, span) => Ok(ValuePattern::IntLit(*n, *span)),
        SPattern::CharLit(c, span) => Ok(ValuePattern::CharLit(*c, *span)),
        SPattern::Request { span, .. } | SPattern::CatchAll(_, span) => Err(DesugarError {
            message: "request patterns cannot nest inside value patterns".into(),
            span: *span,
        }),
    }
}

fn note_binder(name: &str, span: Span, binders: &mut Vec<Name>) -> Result<(), DesugarError> {
    if binders.iter().any(|b| b == name) {
        return Err(DesugarError {
            message: format!("pattern variable `{name}` is bound more than once in this clause"),
            span,
        });
    }
    binders.push(name.to_string());
    Ok(())
}

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

fn desugar_expr(
    e: &SExpr,
    decls: &Declarations,
    fresh: &mut Fresh,
) -> Result<Construction, DesugarError> {
    match e {
        SExpr::Ident(name, span) => {
            if let Some((_, ctor)) = decls.ctor_owner(name) {
                if !ctor.args.is_empty() {
                    return Err(DesugarError {
                        message: format!(
                            "constructor `{name}` must be fully applied ({} argument(s))",
                            ctor.args.len()
                        ),
                        span: *span,
                    });
                }
                return Ok(Construction::Ctor(name.clone(), vec![], *span));
            }
            Ok(Construction::Use(Box::new(Use::Ident(name.clone(), *span))))
        }
        SExpr::App(head, args, span) => {
            // A constructor-headed application is a data construction.
            if let SExpr::Ident(name, ispan) = &**head {
                if let Some((_, ctor)) = decls.ctor_owner(name) {
                    if args.is_empty() {
                        return Err(DesugarError {
                            message: format!("constructor `{name}` is a value and cannot be forced"),
                            span: *span,
                        });
                    }
                    if ctor.args.len() != args.len() {
                        return Err(DesugarError {
                            message: format!(
                                "constructor `{name}` expects {} argument(s), found {}",
                                ctor.args.len(),
                                args.len()
                            ),
                            span: *ispan,
                        });
                    }
                    let args = args
                        .iter()
                        .map(|a| desugar_expr(a, decls, fresh))
                        .collect::<Result<Vec<_>, _>>()?;
                    return Ok(Construction::Ctor(name.clone(), args, *span));
                }
            }
            let head = desugar_use(head, decls, fresh)?;
            let args = args
                .iter()
                .map(|a| desugar_expr(a, decls, fresh))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Construction::Use(Box::new(Use::App(Box::new(head), args, *span))))
        }
        SExpr::Seq(a, b, span) => {
            let a = desugar_expr(a, decls, fresh)?;
            let b = desugar_expr(b, decls, fresh)?;
            Ok(Construction::Use(Box::new(Use::App(
                Box::new(Use::Ident("snd".into(), *span)),
                vec![a, b],
                *span,
            ))))
        }
        SExpr::Add(a, b, span) => {
            let a = desugar_expr(a, decls, fresh)?;
            let b = desugar_expr(b, decls, fresh)?;
            Ok(Construction::Use(Box::new(Use::App(
                Box::new(Use::Ident("intAdd".into(), *span)),
                vec![a, b],
                *span,
            ))))
        }
        SExpr::IntLit(n, span) => Ok(Construction::IntLit(*n, *span)),
        SExpr::CharLit(c, span) => Ok(Construction::CharLit(*c, *span)),
        SExpr::StrLit(s, span) => string_to_list(s, decls, *span),
        SExpr::Suspend(clauses, span) => {
            let mut out = Vec::new();
            let mut width: Option<usize> = None;
            for cl in clauses {
                match width {
                    None => width = Some(cl.patterns.len()),
                    Some(w) if w != cl.patterns.len() => {
                        return Err(DesugarError {
                            message: "clauses of one suspension must take the same number of patterns"
                                .into(),
                            span: cl.span,
                        })
                    }
                    _ => {}
                }
                out.push(desugar_clause(cl, decls, fresh)?);
            }
            Ok(Construction::Suspend(Computation { clauses: out }, *span))
        }
    }
}

fn desugar_clause(
    cl: &SClause,
    decls: &Declarations,
    fresh: &mut Fresh,
) -> Result<Clause, DesugarError> {
    let mut binders = Vec::new();
    let patterns = cl
        .patterns
        .iter()
        .map(|p| desugar_comp_pattern(p, decls, fresh, &mut binders))
        .collect::<Result<Vec<_>, _>>()?;
    let body = desugar_expr(&cl.body, decls, fresh)?;
    Ok(Clause { patterns, body, span: cl.span })
}

fn desugar_use(e: &SExpr, decls: &Declarations, fresh: &mut Fresh) -> Result<Use, DesugarError> {
    match desugar_expr(e, decls, fresh)? {
        Construction::Use(u) => Ok(*u),
        other => Err(DesugarError {
            message: "only a variable, command or application can be applied".into(),
            span: other.span(),
        }),
    }
}

/// String notation is a cons-chain of character literals over `List Char`.
fn string_to_list(s: &str, decls: &Declarations, span: Span) -> Result<Construction, DesugarError> {
    let has = |name: &str, arity: usize| {
        decls.ctor_owner(name).map(|(_, c)| c.args.len() == arity).unwrap_or(false)
    };
    if !has("cons", 2) || !has("nil", 0) {
        return Err(DesugarError {
            message: "string notation needs the `List` declaration in scope".into(),
            span,
        });
    }
    let mut acc = Construction::Ctor("nil".into(), vec![], span);
    for c in s.chars().rev() {
        acc = Construction::Ctor(
            "cons".into(),
            vec![Construction::CharLit(c, span), acc],
            span,
        );
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn program(src: &str) -> Program {
        desugar(&parse_program(src).unwrap()).unwrap()
    }

    fn defs(p: &Program) -> &[(Name, PolyType, Computation)] {
        match &p.term {
            Construction::LetRec { bindings, .. } => bindings,
            _ => &[],
        }
    }

    const LIST: &str = "data List X = nil | cons X (List X)\n";

    #[test]
    fn map_signature_desugars_to_displayed_polytype() {
        let p = program(&format!("{LIST}map : {{X -> Y}} -> List X -> List Y\nmap f nil = nil\nmap f (cons x xs) = cons (f x) (map f xs)\n"));
        let (name, poly, _) = &defs(&p)[0];
        assert_eq!(name, "map");
        // ∀ε X Y. {<ι>{<ι>X -> [ε]Y} -> <ι>(List X) -> [ε](List Y)}
        assert_eq!(poly.binders.len(), 3);
        let eps = match &poly.binders[0] {
            TypeParam::Eff(e) => e.clone(),
            other => panic!("expected the effect binder first, got {other:?}"),
        };
        assert_eq!(poly.binders[1], TypeParam::Val("X".into()));
        assert_eq!(poly.binders[2], TypeParam::Val("Y".into()));
        let comp = match &poly.body {
            ValueType::Thunk(c) => c,
            other => panic!("expected a thunk, got {other:?}"),
        };
        assert_eq!(comp.ports.len(), 2);
        assert!(comp.ports.iter().all(|p| p.adjustment.is_identity()));
        match &comp.ports[0].value {
            ValueType::Thunk(inner) => {
                assert_eq!(inner.ports.len(), 1);
                assert!(inner.ports[0].adjustment.is_identity());
                assert_eq!(inner.ports[0].value, ValueType::Var("X".into()));
                assert_eq!(inner.peg.ability, Ability::var(eps.clone()));
                assert_eq!(inner.peg.value, ValueType::Var("Y".into()));
            }
            other => panic!("expected a thunk port, got {other:?}"),
        }
        assert_eq!(comp.peg.ability, Ability::var(eps));
        assert_eq!(
            comp.peg.value,
            ValueType::Data("List".into(), vec![TypeArg::Val(ValueType::Var("Y".into()))])
        );
    }

    #[test]
    fn log_gains_implicit_effect_parameter() {
        let p = program(
            "data Log X = start {X} | inched (Log X) {Char -> X} | ouched (Log X)\n",
        );
        let log = p.decls.data("Log").unwrap();
        assert_eq!(log.params.len(), 2);
        let eps = match &log.params[0] {
            TypeParam::Eff(e) => e.clone(),
            other => panic!("expected a leading effect parameter, got {other:?}"),
        };
        // start : {[ε]X}
        let start = &log.ctors[0];
        match &start.args[0] {
            ValueType::Thunk(c) => {
                assert!(c.ports.is_empty());
                assert_eq!(c.peg.ability, Ability::var(eps.clone()));
            }
            other => panic!("unexpected start field {other:?}"),
        }
        // inched's recursive field is Log [ε] X
        let inched = &log.ctors[1];
        match &inched.args[0] {
            ValueType::Data(n, args) => {
                assert_eq!(n, "Log");
                assert_eq!(args[0], TypeArg::Ab(Ability::var(eps)));
            }
            other => panic!("unexpected inched field {other:?}"),
        }
    }

    #[test]
    fn plain_list_has_no_effect_parameter() {
        let p = program(LIST);
        assert_eq!(p.decls.data("List").unwrap().params.len(), 1);
    }

    #[test]
    fn seq_becomes_snd_application() {
        let p = program("f : Int -> Int\nf x = x; x\n");
        let (_, _, comp) = &defs(&p)[0];
        match &comp.clauses[0].body {
            Construction::Use(u) => match &**u {
                Use::App(head, args, _) => {
                    assert!(matches!(&**head, Use::Ident(n, _) if n == "snd"));
                    assert_eq!(args.len(), 2);
                }
                other => panic!("expected an application, got {other:?}"),
            },
            other => panic!("expected a use, got {other:?}"),
        }
    }

    #[test]
    fn plus_becomes_int_add() {
        let p = program("f : Int -> Int\nf x = x + 1\n");
        let (_, _, comp) = &defs(&p)[0];
        match &comp.clauses[0].body {
            Construction::Use(u) => match &**u {
                Use::App(head, _, _) => {
                    assert!(matches!(&**head, Use::Ident(n, _) if n == "intAdd"))
                }
                other => panic!("expected an application, got {other:?}"),
            },
            other => panic!("expected a use, got {other:?}"),
        }
    }

    #[test]
    fn string_literal_is_cons_chain() {
        let p = program(&format!("{LIST}s : List Char\ns! = \"ab\"\n"));
        let (_, _, comp) = &defs(&p)[0];
        match &comp.clauses[0].body {
            Construction::Ctor(c, args, _) => {
                assert_eq!(c, "cons");
                assert!(matches!(&args[0], Construction::CharLit('a', _)));
            }
            other => panic!("expected a cons chain, got {other:?}"),
        }
    }

    #[test]
    fn wildcards_become_fresh_distinct_variables() {
        let p = program(&format!("{LIST}f : List X -> List X -> Int\nf _ _ = 0\n"));
        let (_, _, comp) = &defs(&p)[0];
        let names: Vec<&str> = comp.clauses[0]
            .patterns
            .iter()
            .map(|p| match p {
                CompPattern::Value(ValuePattern::Var(b)) => b.name.as_str(),
                other => panic!("expected variables, got {other:?}"),
            })
            .collect();
        assert!(names.iter().all(|n| is_wildcard_var(n)));
        assert_ne!(names[0], names[1]);
    }

    #[test]
    fn errors_are_reported() {
        // signature without equations
        assert!(desugar(&parse_program("f : Int").unwrap()).is_err());
        // equations without signature
        assert!(desugar(&parse_program("f x = x").unwrap()).is_err());
        // arity mismatch across equations
        assert!(desugar(&parse_program("f : Int -> Int\nf x = x\nf = 0\n").unwrap()).is_err());
        // duplicate pattern variable
        assert!(desugar(
            &parse_program(&format!("{LIST}g : List X -> Int\ng (cons x x) = 0\n")).unwrap()
        )
        .is_err());
    }

    #[test]
    fn main_call_is_the_letrec_body() {
        let p = program("main : [0]Int\nmain! = 3\n");
        assert!(p.has_main);
        match &p.term {
            Construction::LetRec { body, .. } => match &**body {
                Construction::Use(u) => {
                    assert!(matches!(&**u, Use::App(h, args, _)
                        if matches!(&**h, Use::Ident(n, _) if n == "main") && args.is_empty()));
                }
                other => panic!("expected main call, got {other:?}"),
            },
            other => panic!("expected a letrec, got {other:?}"),
        }
    }

    #[test]
    fn distinct_signatures_get_distinct_effect_vars() {
        let p = program("f : Int\nf! = 0\ng : Int\ng! = 1\n");
        let ds = defs(&p);
        let eff = |poly: &PolyType| match &poly.binders[0] {
            TypeParam::Eff(e) => e.clone(),
            other => panic!("expected an effect binder, got {other:?}"),
        };
        assert_ne!(eff(&ds[0].1), eff(&ds[1].1));
    }
}
