//! Abstract syntax for Frank types, terms and declarations, together with the
//! ability/adjustment algebra shared by the checker, the elaborator and the
//! evaluator.
//!
//! Abilities are ordered interface sequences over a head (empty, an effect
//! variable, or a unification variable during checking). The rightmost
//! instance of an interface shadows earlier ones; `normalize` discards the
//! shadowed instances, keeping each survivor at its last-occurrence position.

use crate::span::Span;
use std::collections::BTreeSet;
use std::fmt;

pub type Name = String;

/// Identifier for a unification variable in the checker's store.
pub type MetaId = u32;

/// Identifier given to every binder occurrence so later stages can recover
/// the checked type of a pattern variable.
pub type BinderId = u32;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValueType {
    /// A data type applied to its arguments, `D R̄`.
    Data(Name, Vec<TypeArg>),
    /// A suspended computation type, `{C}`.
    Thunk(Box<CompType>),
    /// A rigid type variable.
    Var(Name),
    /// A checker-introduced unification variable.
    Meta(MetaId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompType {
    pub ports: Vec<Port>,
    pub peg: Peg,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Port {
    pub adjustment: Adjustment,
    pub value: ValueType,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Peg {
    pub ability: Ability,
    pub value: ValueType,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AbilityHead {
    /// The closed head `∅`, written `0` in source.
    Empty,
    /// An effect variable.
    Var(Name),
    /// A unification variable standing for an unknown ability.
    Meta(MetaId),
}

/// One interface instance `I R̄` inside an ability or adjustment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub interface: Name,
    pub args: Vec<TypeArg>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ability {
    pub head: AbilityHead,
    pub instances: Vec<Instance>,
}

/// An adjustment `ι + I R̄ + ...`; the empty instance list is `ι`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Adjustment {
    pub instances: Vec<Instance>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeArg {
    Val(ValueType),
    Ab(Ability),
}

/// A type parameter: an ordinary type variable or a bracketed effect variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeParam {
    Val(Name),
    Eff(Name),
}

impl TypeParam {
    pub fn name(&self) -> &str {
        match self {
            TypeParam::Val(n) | TypeParam::Eff(n) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyType {
    pub binders: Vec<TypeParam>,
    pub body: ValueType,
}

impl Ability {
    pub fn empty() -> Ability {
        Ability { head: AbilityHead::Empty, instances: Vec::new() }
    }

    pub fn var(name: impl Into<Name>) -> Ability {
        Ability { head: AbilityHead::Var(name.into()), instances: Vec::new() }
    }

    pub fn with(mut self, interface: impl Into<Name>, args: Vec<TypeArg>) -> Ability {
        self.instances.push(Instance { interface: interface.into(), args });
        self
    }
}

impl Adjustment {
    pub fn identity() -> Adjustment {
        Adjustment { instances: Vec::new() }
    }

    pub fn is_identity(&self) -> bool {
        self.instances.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Ability algebra
// ---------------------------------------------------------------------------

/// The action `Σ ⊕ Δ`: appends the adjustment's instances, head unchanged.
/// No normalization is performed.
pub fn apply_adjustment(sigma: &Ability, delta: &Adjustment) -> Ability {
    let mut out = sigma.clone();
    out.instances.extend(delta.instances.iter().cloned());
    out
}

/// Shadow-normalization: for each interface id only its last instance
/// survives, at the position of that last occurrence. The head is unchanged.
pub fn normalize_ability(sigma: &Ability) -> Ability {
    Ability { head: sigma.head.clone(), instances: normalize_instances(&sigma.instances) }
}

pub fn normalize_instances(instances: &[Instance]) -> Vec<Instance> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut kept: Vec<Instance> = Vec::new();
    for inst in instances.iter().rev() {
        if seen.insert(inst.interface.as_str()) {
            kept.push(inst.clone());
        }
    }
    kept.reverse();
    kept
}

pub fn normalize_adjustment(delta: &Adjustment) -> Adjustment {
    Adjustment { instances: normalize_instances(&delta.instances) }
}

/// A command signature as resolved against some interface instance:
/// argument types and result type with the interface parameters substituted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandSig {
    pub interface: Name,
    /// The instance arguments the signature was instantiated at.
    pub instance_args: Vec<TypeArg>,
    pub args: Vec<ValueType>,
    pub result: ValueType,
}

/// Resolves a command against the ability: normalization first, so the
/// rightmost instance of an interface wins.
pub fn lookup_command(decls: &Declarations, sigma: &Ability, command: &str) -> Option<CommandSig> {
    let normal = normalize_ability(sigma);
    for inst in normal.instances.iter().rev() {
        if let Some(iface) = decls.interface(&inst.interface) {
            if let Some(cmd) = iface.commands.iter().find(|c| c.name == command) {
                return Some(instantiate_command(iface, cmd, &inst.args));
            }
        }
    }
    None
}

fn instantiate_command(iface: &InterfaceDecl, cmd: &CommandDecl, args: &[TypeArg]) -> CommandSig {
    let subst: Vec<(&TypeParam, &TypeArg)> = iface.params.iter().zip(args.iter()).collect();
    CommandSig {
        interface: iface.name.clone(),
        instance_args: args.to_vec(),
        args: cmd.args.iter().map(|a| substitute_value(a, &subst)).collect(),
        result: substitute_value(&cmd.result, &subst),
    }
}

/// The commands an adjustment handles: the command domain of
/// `normalize(∅ ⊕ Δ)`, with the rightmost instance's signature per command.
pub fn handled_commands(decls: &Declarations, delta: &Adjustment) -> Vec<(Name, CommandSig)> {
    let ability = apply_adjustment(&Ability::empty(), delta);
    let normal = normalize_ability(&ability);
    let mut out = Vec::new();
    for inst in &normal.instances {
        if let Some(iface) = decls.interface(&inst.interface) {
            for cmd in &iface.commands {
                out.push((cmd.name.clone(), instantiate_command(iface, cmd, &inst.args)));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Substitution of type arguments for type parameters
// ---------------------------------------------------------------------------

pub fn substitute_value(ty: &ValueType, subst: &[(&TypeParam, &TypeArg)]) -> ValueType {
    match ty {
        ValueType::Var(name) => {
            for (param, arg) in subst {
                if let (TypeParam::Val(p), TypeArg::Val(v)) = (param, arg) {
                    if p == name {
                        return v.clone();
                    }
                }
            }
            ValueType::Var(name.clone())
        }
        ValueType::Data(d, args) => ValueType::Data(
            d.clone(),
            args.iter().map(|a| substitute_arg(a, subst)).collect(),
        ),
        ValueType::Thunk(comp) => ValueType::Thunk(Box::new(substitute_comp(comp, subst))),
        ValueType::Meta(m) => ValueType::Meta(*m),
    }
}

pub fn substitute_arg(arg: &TypeArg, subst: &[(&TypeParam, &TypeArg)]) -> TypeArg {
    match arg {
        TypeArg::Val(v) => TypeArg::Val(substitute_value(v, subst)),
        TypeArg::Ab(ab) => TypeArg::Ab(substitute_ability(ab, subst)),
    }
}

pub fn substitute_comp(comp: &CompType, subst: &[(&TypeParam, &TypeArg)]) -> CompType {
    CompType {
        ports: comp
            .ports
            .iter()
            .map(|p| Port {
                adjustment: substitute_adjustment(&p.adjustment, subst),
                value: substitute_value(&p.value, subst),
            })
            .collect(),
        peg: Peg {
            ability: substitute_ability(&comp.peg.ability, subst),
            value: substitute_value(&comp.peg.value, subst),
        },
    }
}

/// Substituting an ability for an effect-variable head splices its instances
/// in front of the existing ones.
pub fn substitute_ability(ab: &Ability, subst: &[(&TypeParam, &TypeArg)]) -> Ability {
    let mut head = ab.head.clone();
    let mut front: Vec<Instance> = Vec::new();
    if let AbilityHead::Var(name) = &ab.head {
        for (param, arg) in subst {
            if let (TypeParam::Eff(p), TypeArg::Ab(replacement)) = (param, arg) {
                if p == name {
                    head = replacement.head.clone();
                    front = replacement.instances.clone();
                    break;
                }
            }
        }
    }
    let mut instances = front;
    for inst in &ab.instances {
        instances.push(Instance {
            interface: inst.interface.clone(),
            args: inst.args.iter().map(|a| substitute_arg(a, subst)).collect(),
        });
    }
    Ability { head, instances }
}

pub fn substitute_adjustment(delta: &Adjustment, subst: &[(&TypeParam, &TypeArg)]) -> Adjustment {
    Adjustment {
        instances: delta
            .instances
            .iter()
            .map(|inst| Instance {
                interface: inst.interface.clone(),
                args: inst.args.iter().map(|a| substitute_arg(a, subst)).collect(),
            })
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Free variables
// ---------------------------------------------------------------------------

/// Free type and effect variable names. The implicit effect variable counts
/// as an effect variable like any other.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreeVars {
    pub value_vars: Vec<Name>,
    pub effect_vars: Vec<Name>,
}

impl FreeVars {
    fn add_value(&mut self, name: &str) {
        if !self.value_vars.iter().any(|n| n == name) {
            self.value_vars.push(name.to_string());
        }
    }
    fn add_effect(&mut self, name: &str) {
        if !self.effect_vars.iter().any(|n| n == name) {
            self.effect_vars.push(name.to_string());
        }
    }
    pub fn is_empty(&self) -> bool {
        self.value_vars.is_empty() && self.effect_vars.is_empty()
    }
}

pub fn free_vars_value(ty: &ValueType, acc: &mut FreeVars) {
    match ty {
        ValueType::Var(name) => acc.add_value(name),
        ValueType::Data(_, args) => args.iter().for_each(|a| free_vars_arg(a, acc)),
        ValueType::Thunk(comp) => free_vars_comp(comp, acc),
        ValueType::Meta(_) => {}
    }
}

pub fn free_vars_arg(arg: &TypeArg, acc: &mut FreeVars) {
    match arg {
        TypeArg::Val(v) => free_vars_value(v, acc),
        TypeArg::Ab(ab) => free_vars_ability(ab, acc),
    }
}

pub fn free_vars_comp(comp: &CompType, acc: &mut FreeVars) {
    for port in &comp.ports {
        free_vars_adjustment(&port.adjustment, acc);
        free_vars_value(&port.value, acc);
    }
    free_vars_ability(&comp.peg.ability, acc);
    free_vars_value(&comp.peg.value, acc);
}

pub fn free_vars_ability(ab: &Ability, acc: &mut FreeVars) {
    if let AbilityHead::Var(name) = &ab.head {
        acc.add_effect(name);
    }
    for inst in &ab.instances {
        inst.args.iter().for_each(|a| free_vars_arg(a, acc));
    }
}

pub fn free_vars_adjustment(delta: &Adjustment, acc: &mut FreeVars) {
    for inst in &delta.instances {
        inst.args.iter().for_each(|a| free_vars_arg(a, acc));
    }
}

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

/// Uses: the inference-mode terms.
#[derive(Clone, Debug, PartialEq)]
pub enum Use {
    /// A variable occurrence; whether it is monomorphic or polymorphic is
    /// resolved against the environment during checking.
    Ident(Name, Span),
    App(Box<Use>, Vec<Construction>, Span),
}

impl Use {
    pub fn span(&self) -> Span {
        match self {
            Use::Ident(_, s) => *s,
            Use::App(_, _, s) => *s,
        }
    }
}

/// Constructions: the checking-mode terms.
#[derive(Clone, Debug, PartialEq)]
pub enum Construction {
    Use(Box<Use>),
    Ctor(Name, Vec<Construction>, Span),
    Suspend(Computation, Span),
    IntLit(i64, Span),
    CharLit(char, Span),
    Let {
        name: Name,
        poly: PolyType,
        bound: Box<Construction>,
        body: Box<Construction>,
        span: Span,
    },
    LetRec {
        bindings: Vec<(Name, PolyType, Computation)>,
        body: Box<Construction>,
        span: Span,
    },
}

impl Construction {
    pub fn span(&self) -> Span {
        match self {
            Construction::Use(u) => u.span(),
            Construction::Ctor(_, _, s)
            | Construction::Suspend(_, s)
            | Construction::IntLit(_, s)
            | Construction::CharLit(_, s) => *s,
            Construction::Let { span, .. } | Construction::LetRec { span, .. } => *span,
        }
    }
}

/// A computation: a sequence of pattern-matching clauses of equal width.
#[derive(Clone, Debug, PartialEq)]
pub struct Computation {
    pub clauses: Vec<Clause>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub patterns: Vec<CompPattern>,
    pub body: Construction,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CompPattern {
    Value(ValuePattern),
    Request {
        command: Name,
        args: Vec<ValuePattern>,
        continuation: Binder,
        span: Span,
    },
    CatchAll(Binder, Span),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ValuePattern {
    Var(Binder),
    Ctor(Name, Vec<ValuePattern>, Span),
    IntLit(i64, Span),
    CharLit(char, Span),
}

/// A pattern binder; ids are assigned during desugaring so the checker can
/// record each binder's type for the elaborator.
#[derive(Clone, Debug, PartialEq)]
pub struct Binder {
    pub name: Name,
    pub id: BinderId,
    pub span: Span,
}

impl CompPattern {
    pub fn span(&self) -> Span {
        match self {
            CompPattern::Value(p) => p.span(),
            CompPattern::Request { span, .. } => *span,
            CompPattern::CatchAll(_, span) => *span,
        }
    }
}

impl ValuePattern {
    pub fn span(&self) -> Span {
        match self {
            ValuePattern::Var(b) => b.span,
            ValuePattern::Ctor(_, _, s) | ValuePattern::IntLit(_, s) | ValuePattern::CharLit(_, s) => *s,
        }
    }
}

// ---------------------------------------------------------------------------
// Declarations
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct DataDecl {
    pub name: Name,
    pub params: Vec<TypeParam>,
    pub ctors: Vec<CtorDecl>,
    pub span: Span,
    /// Builtin types (Int, Char) have no constructors and match literals.
    pub builtin: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CtorDecl {
    pub name: Name,
    pub args: Vec<ValueType>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceDecl {
    pub name: Name,
    pub params: Vec<TypeParam>,
    pub commands: Vec<CommandDecl>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommandDecl {
    pub name: Name,
    pub args: Vec<ValueType>,
    pub result: ValueType,
    pub span: Span,
}

/// Global data and interface declarations, with lookup tables for the
/// constructor and command ownership rules.
#[derive(Clone, Debug, Default)]
pub struct Declarations {
    pub datas: Vec<DataDecl>,
    pub interfaces: Vec<InterfaceDecl>,
}

impl Declarations {
    pub fn data(&self, name: &str) -> Option<&DataDecl> {
        self.datas.iter().find(|d| d.name == name)
    }

    pub fn interface(&self, name: &str) -> Option<&InterfaceDecl> {
        self.interfaces.iter().find(|i| i.name == name)
    }

    /// The data type owning constructor `k`, with the constructor itself.
    pub fn ctor_owner(&self, ctor: &str) -> Option<(&DataDecl, &CtorDecl)> {
        for data in &self.datas {
            if let Some(c) = data.ctors.iter().find(|c| c.name == ctor) {
                return Some((data, c));
            }
        }
        None
    }

    pub fn command_owner(&self, command: &str) -> Option<(&InterfaceDecl, &CommandDecl)> {
        for iface in &self.interfaces {
            if let Some(c) = iface.commands.iter().find(|c| c.name == command) {
                return Some((iface, c));
            }
        }
        None
    }

    /// `𝒟(D R̄, k)`: the argument types of constructor `k` at instance `D R̄`.
    pub fn ctor_arg_types(&self, data: &str, args: &[TypeArg], ctor: &str) -> Option<Vec<ValueType>> {
        let decl = self.data(data)?;
        let c = decl.ctors.iter().find(|c| c.name == ctor)?;
        let subst: Vec<(&TypeParam, &TypeArg)> = decl.params.iter().zip(args.iter()).collect();
        Some(c.args.iter().map(|a| substitute_value(a, &subst)).collect())
    }
}

// ---------------------------------------------------------------------------
// Equality modulo shadowing
// ---------------------------------------------------------------------------

/// Structural equality of abilities after normalization, comparing the
/// surviving instances as an id-keyed set (interface order is immaterial once
/// each id occurs at most once).
pub fn abilities_equal(a: &Ability, b: &Ability) -> bool {
    let na = normalize_ability(a);
    let nb = normalize_ability(b);
    if na.head != nb.head || na.instances.len() != nb.instances.len() {
        return false;
    }
    na.instances.iter().all(|ia| {
        nb.instances
            .iter()
            .any(|ib| ia.interface == ib.interface && ia.args == ib.args)
    })
}

// ---------------------------------------------------------------------------
// Display (used in diagnostics)
// ---------------------------------------------------------------------------

impl fmt::Display for AbilityHead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbilityHead::Empty => write!(f, "0"),
            AbilityHead::Var(n) if crate::desugar::is_fresh_effect_var(n) => write!(f, "ε"),
            AbilityHead::Var(n) => write!(f, "{n}"),
            AbilityHead::Meta(id) => write!(f, "?e{id}"),
        }
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.interface)?;
        for arg in &self.args {
            write!(f, " {arg}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Ability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        for inst in &self.instances {
            write!(f, ", {inst}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Adjustment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.instances.is_empty() {
            return write!(f, "ι");
        }
        for (i, inst) in self.instances.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{inst}")?;
        }
        Ok(())
    }
}

impl fmt::Display for TypeArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeArg::Val(v) => {
                if value_type_is_atomic(v) {
                    write!(f, "{v}")
                } else {
                    write!(f, "({v})")
                }
            }
            TypeArg::Ab(ab) => write!(f, "[{ab}]"),
        }
    }
}

pub fn value_type_is_atomic(v: &ValueType) -> bool {
    match v {
        ValueType::Data(_, args) => args.is_empty(),
        ValueType::Thunk(_) => true,
        ValueType::Var(_) | ValueType::Meta(_) => true,
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueType::Data(name, args) => {
                write!(f, "{name}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                Ok(())
            }
            ValueType::Thunk(c) => write!(f, "{{{c}}}"),
            ValueType::Var(n) if crate::desugar::is_fresh_effect_var(n) => write!(f, "ε"),
            ValueType::Var(n) => write!(f, "{n}"),
            ValueType::Meta(id) => write!(f, "?t{id}"),
        }
    }
}

impl fmt::Display for CompType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for port in &self.ports {
            write!(f, "{port} -> ")?;
        }
        write!(f, "{}", self.peg)
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.adjustment.is_identity() {
            write!(f, "<{}>", self.adjustment)?;
        }
        if value_type_is_atomic(&self.value) {
            write!(f, "{}", self.value)
        } else {
            write!(f, "({})", self.value)
        }
    }
}

impl fmt::Display for Peg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.ability)?;
        if value_type_is_atomic(&self.value) {
            write!(f, "{}", self.value)
        } else {
            write!(f, "({})", self.value)
        }
    }
}

impl fmt::Display for PolyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.binders.is_empty() {
            write!(f, "∀")?;
            for b in &self.binders {
                match b {
                    TypeParam::Val(n) => write!(f, " {n}")?,
                    TypeParam::Eff(n) => write!(f, " [{n}]")?,
                }
            }
            write!(f, ". ")?;
        }
        write!(f, "{}", self.body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(name: &str, args: Vec<TypeArg>) -> Instance {
        Instance { interface: name.into(), args }
    }

    fn int() -> TypeArg {
        TypeArg::Val(ValueType::Data("Int".into(), vec![]))
    }

    fn boolean() -> TypeArg {
        TypeArg::Val(ValueType::Data("Bool".into(), vec![]))
    }

    fn chr() -> TypeArg {
        TypeArg::Val(ValueType::Data("Char".into(), vec![]))
    }

    /// A few interfaces for lookup tests, matching the prelude's shapes.
    fn decls() -> Declarations {
        let sp = Span::synthetic();
        let s = TypeParam::Val("S".into());
        let x = TypeParam::Val("X".into());
        Declarations {
            datas: vec![],
            interfaces: vec![
                InterfaceDecl {
                    name: "State".into(),
                    params: vec![s],
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
                    name: "Send".into(),
                    params: vec![x],
                    commands: vec![CommandDecl {
                        name: "send".into(),
                        args: vec![ValueType::Var("X".into())],
                        result: ValueType::Data("Unit".into(), vec![]),
                        span: sp,
                    }],
                    span: sp,
                },
            ],
        }
    }

    #[test]
    fn apply_identity_to_empty() {
        let empty = Ability::empty();
        assert_eq!(apply_adjustment(&empty, &Adjustment::identity()), empty);
    }

    #[test]
    fn apply_appends_in_order() {
        let eps = Ability::var("ε");
        let delta = Adjustment { instances: vec![inst("State", vec![int()])] };
        let got = apply_adjustment(&eps, &delta);
        assert_eq!(got, Ability::var("ε").with("State", vec![int()]));
    }

    #[test]
    fn apply_keeps_duplicates() {
        let sigma = Ability::var("ε").with("Abort", vec![]);
        let delta = Adjustment { instances: vec![inst("Abort", vec![])] };
        let got = apply_adjustment(&sigma, &delta);
        assert_eq!(got.instances.len(), 2);
        assert_eq!(got, Ability::var("ε").with("Abort", vec![]).with("Abort", vec![]));
    }

    #[test]
    fn normalize_empty_is_empty() {
        assert_eq!(normalize_ability(&Ability::empty()), Ability::empty());
    }

    #[test]
    fn normalize_discards_all_but_last() {
        let sigma = Ability::var("ε").with("Abort", vec![]).with("Abort", vec![]);
        assert_eq!(normalize_ability(&sigma), Ability::var("ε").with("Abort", vec![]));
    }

    /// Independent reference for normalization: keep each id's last
    /// occurrence, scanning positions directly.
    fn reference_normalize(instances: &[Instance]) -> Vec<Instance> {
        let mut kept = Vec::new();
        for (i, inst) in instances.iter().enumerate() {
            let is_last = !instances[i + 1..].iter().any(|j| j.interface == inst.interface);
            if is_last {
                kept.push(inst.clone());
            }
        }
        kept
    }

    #[test]
    fn normalize_keeps_survivors_at_last_positions() {
        let sigma = Ability::var("ε")
            .with("State", vec![int()])
            .with("Send", vec![chr()])
            .with("State", vec![boolean()]);
        let expect = Ability::var("ε").with("Send", vec![chr()]).with("State", vec![boolean()]);
        assert_eq!(normalize_ability(&sigma), expect);
        assert_eq!(normalize_ability(&sigma).instances, reference_normalize(&sigma.instances));
    }

    #[test]
    fn lookup_get_at_state_int() {
        let d = decls();
        let sigma = Ability::var("ε").with("State", vec![int()]);
        let sig = lookup_command(&d, &sigma, "get").unwrap();
        assert!(sig.args.is_empty());
        assert_eq!(sig.result, ValueType::Data("Int".into(), vec![]));
    }

    #[test]
    fn lookup_put_not_in_abort() {
        let d = decls();
        let sigma = Ability::var("ε").with("Abort", vec![]);
        assert!(lookup_command(&d, &sigma, "put").is_none());
    }

    #[test]
    fn lookup_uses_rightmost_instance() {
        let d = decls();
        let sigma = Ability::var("ε").with("State", vec![int()]).with("State", vec![boolean()]);
        let sig = lookup_command(&d, &sigma, "get").unwrap();
        assert_eq!(sig.result, ValueType::Data("Bool".into(), vec![]));
        // oracle: normalize then single lookup
        let oracle = lookup_command(&d, &normalize_ability(&sigma), "get").unwrap();
        assert_eq!(sig, oracle);
    }

    #[test]
    fn handled_commands_of_identity_is_empty() {
        assert!(handled_commands(&decls(), &Adjustment::identity()).is_empty());
    }

    #[test]
    fn handled_commands_of_state() {
        let d = decls();
        let delta = Adjustment { instances: vec![inst("State", vec![int()])] };
        let got: Vec<Name> = handled_commands(&d, &delta).into_iter().map(|(n, _)| n).collect();
        assert_eq!(got, vec!["get".to_string(), "put".to_string()]);
    }

    #[test]
    fn handled_commands_shadow_rightmost() {
        let d = decls();
        let delta = Adjustment { instances: vec![inst("Abort", vec![]), inst("Abort", vec![])] };
        let got = handled_commands(&d, &delta);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].0, "aborting");
    }

    #[test]
    fn free_vars_examples() {
        let list_x = ValueType::Data("List".into(), vec![TypeArg::Val(ValueType::Var("X".into()))]);
        let mut fv = FreeVars::default();
        free_vars_value(&list_x, &mut fv);
        assert_eq!(fv.value_vars, vec!["X".to_string()]);
        assert!(fv.effect_vars.is_empty());

        // {X -> [ε]Y} has X, Y and ε free
        let thunk = ValueType::Thunk(Box::new(CompType {
            ports: vec![Port { adjustment: Adjustment::identity(), value: ValueType::Var("X".into()) }],
            peg: Peg { ability: Ability::var("ε"), value: ValueType::Var("Y".into()) },
        }));
        let mut fv = FreeVars::default();
        free_vars_value(&thunk, &mut fv);
        assert_eq!(fv.value_vars, vec!["X".to_string(), "Y".to_string()]);
        assert_eq!(fv.effect_vars, vec!["ε".to_string()]);

        let mut fv = FreeVars::default();
        free_vars_ability(&Ability::empty(), &mut fv);
        assert!(fv.is_empty());
    }

    #[test]
    fn normalized_equality_ignores_shadowed_inserts() {
        let base = Ability::var("ε").with("Send", vec![chr()]);
        let noisy = Ability::var("ε").with("Send", vec![int()]).with("Send", vec![chr()]);
        assert!(abilities_equal(&base, &noisy));
        let different = Ability::var("ε").with("Send", vec![int()]);
        assert!(!abilities_equal(&base, &different));
    }
}
