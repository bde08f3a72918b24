//! Core Frank: the elaboration target. Operators become n-ary functions over
//! suspended computations; pattern matching becomes case analysis and unary
//! handlers. Computation types take bare value types to a peg.

pub mod alpha;
pub mod subst;
pub mod check;
pub mod print;

use crate::syntax::{AbilityHead, Name};
use std::collections::BTreeSet;
use std::fmt;
use std::rc::Rc;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoreValueType {
    Data(Name, Vec<CoreTypeArg>),
    Thunk(Box<CoreCompType>),
    Var(Name),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreCompType {
    pub args: Vec<CoreValueType>,
    pub peg: CorePeg,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorePeg {
    pub ability: CoreAbility,
    pub value: CoreValueType,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreAbility {
    pub head: AbilityHead,
    pub instances: Vec<CoreInstance>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreInstance {
    pub interface: Name,
    pub args: Vec<CoreTypeArg>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CoreAdjustment {
    pub instances: Vec<CoreInstance>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoreTypeArg {
    Val(CoreValueType),
    Ab(CoreAbility),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoreTypeParam {
    Val(Name),
    Eff(Name),
}

impl CoreTypeParam {
    pub fn name(&self) -> &str {
        match self {
            CoreTypeParam::Val(n) | CoreTypeParam::Eff(n) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorePolyType {
    pub binders: Vec<CoreTypeParam>,
    pub body: CoreValueType,
}

impl CoreAbility {
    pub fn empty() -> Self {
        CoreAbility { head: AbilityHead::Empty, instances: vec![] }
    }

    pub fn extend(&self, delta: &CoreAdjustment) -> CoreAbility {
        let mut out = self.clone();
        out.instances.extend(delta.instances.iter().cloned());
        out
    }
}

pub fn core_normalize_instances(instances: &[CoreInstance]) -> Vec<CoreInstance> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut kept = Vec::new();
    for inst in instances.iter().rev() {
        if seen.insert(inst.interface.as_str()) {
            kept.push(inst.clone());
        }
    }
    kept.reverse();
    kept
}

pub fn core_normalize_ability(ab: &CoreAbility) -> CoreAbility {
    CoreAbility { head: ab.head.clone(), instances: core_normalize_instances(&ab.instances) }
}

pub fn core_abilities_equal(a: &CoreAbility, b: &CoreAbility) -> bool {
    let na = core_normalize_ability(a);
    let nb = core_normalize_ability(b);
    na.head == nb.head
        && na.instances.len() == nb.instances.len()
        && na.instances.iter().all(|ia| {
            nb.instances.iter().any(|ib| ia.interface == ib.interface && ia.args == ib.args)
        })
}

pub fn core_types_equal(a: &CoreValueType, b: &CoreValueType) -> bool {
    match (a, b) {
        (CoreValueType::Var(x), CoreValueType::Var(y)) => x == y,
        (CoreValueType::Data(d, xs), CoreValueType::Data(e, ys)) => {
            d == e && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| core_args_equal(x, y))
        }
        (CoreValueType::Thunk(c1), CoreValueType::Thunk(c2)) => {
            c1.args.len() == c2.args.len()
                && c1.args.iter().zip(&c2.args).all(|(x, y)| core_types_equal(x, y))
                && core_abilities_equal(&c1.peg.ability, &c2.peg.ability)
                && core_types_equal(&c1.peg.value, &c2.peg.value)
        }
        _ => false,
    }
}

fn core_args_equal(a: &CoreTypeArg, b: &CoreTypeArg) -> bool {
    match (a, b) {
        (CoreTypeArg::Val(x), CoreTypeArg::Val(y)) => core_types_equal(x, y),
        (CoreTypeArg::Ab(x), CoreTypeArg::Ab(y)) => core_abilities_equal(x, y),
        _ => false,
    }
}

// -- substitution of type arguments for binders ------------------------------

type CoreSubst<'a> = [(&'a CoreTypeParam, &'a CoreTypeArg)];

pub fn core_subst_value(ty: &CoreValueType, subst: &CoreSubst) -> CoreValueType {
    match ty {
        CoreValueType::Var(name) => {
            for (param, arg) in subst {
                if let (CoreTypeParam::Val(p), CoreTypeArg::Val(v)) = (param, arg) {
                    if p == name {
                        return v.clone();
                    }
                }
            }
            CoreValueType::Var(name.clone())
        }
        CoreValueType::Data(d, args) => CoreValueType::Data(
            d.clone(),
            args.iter().map(|a| core_subst_arg(a, subst)).collect(),
        ),
        CoreValueType::Thunk(c) => CoreValueType::Thunk(Box::new(CoreCompType {
            args: c.args.iter().map(|a| core_subst_value(a, subst)).collect(),
            peg: CorePeg {
                ability: core_subst_ability(&c.peg.ability, subst),
                value: core_subst_value(&c.peg.value, subst),
            },
        })),
    }
}

pub fn core_subst_arg(arg: &CoreTypeArg, subst: &CoreSubst) -> CoreTypeArg {
    match arg {
        CoreTypeArg::Val(v) => CoreTypeArg::Val(core_subst_value(v, subst)),
        CoreTypeArg::Ab(ab) => CoreTypeArg::Ab(core_subst_ability(ab, subst)),
    }
}

pub fn core_subst_ability(ab: &CoreAbility, subst: &CoreSubst) -> CoreAbility {
    let mut head = ab.head.clone();
    let mut front = Vec::new();
    if let AbilityHead::Var(name) = &ab.head {
        for (param, arg) in subst {
            if let (CoreTypeParam::Eff(p), CoreTypeArg::Ab(replacement)) = (param, arg) {
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
        instances.push(CoreInstance {
            interface: inst.interface.clone(),
            args: inst.args.iter().map(|a| core_subst_arg(a, subst)).collect(),
        });
    }
    CoreAbility { head, instances }
}

pub fn core_subst_adjustment(delta: &CoreAdjustment, subst: &CoreSubst) -> CoreAdjustment {
    CoreAdjustment {
        instances: delta
            .instances
            .iter()
            .map(|inst| CoreInstance {
                interface: inst.interface.clone(),
                args: inst.args.iter().map(|a| core_subst_arg(a, subst)).collect(),
            })
            .collect(),
    }
}

impl CorePolyType {
    /// `P(R̄)`: the body with each binder replaced by its argument.
    pub fn instantiate(&self, args: &[CoreTypeArg]) -> CoreValueType {
        debug_assert_eq!(self.binders.len(), args.len());
        let subst: Vec<(&CoreTypeParam, &CoreTypeArg)> =
            self.binders.iter().zip(args.iter()).collect();
        core_subst_value(&self.body, &subst)
    }
}

// ---------------------------------------------------------------------------
// Declarations at core types
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Default)]
pub struct CoreDecls {
    pub datas: Vec<(Name, Vec<CoreTypeParam>, Vec<(Name, Vec<CoreValueType>)>, bool)>,
    pub interfaces: Vec<(Name, Vec<CoreTypeParam>, Vec<(Name, Vec<CoreValueType>, CoreValueType)>)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreCommandSig {
    pub interface: Name,
    pub args: Vec<CoreValueType>,
    pub result: CoreValueType,
}

impl CoreDecls {
    pub fn data(&self, name: &str) -> Option<&(Name, Vec<CoreTypeParam>, Vec<(Name, Vec<CoreValueType>)>, bool)> {
        self.datas.iter().find(|(n, _, _, _)| n == name)
    }

    /// All constructors of `D R̄` with instantiated field types.
    pub fn ctors_of(&self, data: &str, args: &[CoreTypeArg]) -> Option<Vec<(Name, Vec<CoreValueType>)>> {
        let (_, params, ctors, _) = self.data(data)?;
        let subst: Vec<(&CoreTypeParam, &CoreTypeArg)> = params.iter().zip(args.iter()).collect();
        Some(
            ctors
                .iter()
                .map(|(k, fields)| {
                    (k.clone(), fields.iter().map(|f| core_subst_value(f, &subst)).collect())
                })
                .collect(),
        )
    }

    pub fn is_builtin_data(&self, name: &str) -> bool {
        self.data(name).map(|(_, _, _, b)| *b).unwrap_or(false)
    }

    /// Commands of one interface instance, in declaration order.
    pub fn commands_of(&self, interface: &str, args: &[CoreTypeArg]) -> Option<Vec<(Name, CoreCommandSig)>> {
        let (name, params, commands) =
            self.interfaces.iter().find(|(n, _, _)| n == interface)?;
        let subst: Vec<(&CoreTypeParam, &CoreTypeArg)> = params.iter().zip(args.iter()).collect();
        Some(
            commands
                .iter()
                .map(|(c, cargs, result)| {
                    (
                        c.clone(),
                        CoreCommandSig {
                            interface: name.clone(),
                            args: cargs.iter().map(|a| core_subst_value(a, &subst)).collect(),
                            result: core_subst_value(result, &subst),
                        },
                    )
                })
                .collect(),
        )
    }

    /// Commands of `∅ ⊕ Δ` after shadow-normalization, in adjustment order.
    pub fn handled_commands(&self, delta: &CoreAdjustment) -> Vec<(Name, CoreCommandSig)> {
        let mut out = Vec::new();
        for inst in core_normalize_instances(&delta.instances) {
            if let Some(cmds) = self.commands_of(&inst.interface, &inst.args) {
                out.extend(cmds);
            }
        }
        out
    }

    /// Resolve a command against an ability, rightmost instance first.
    pub fn lookup_command(&self, ability: &CoreAbility, command: &str) -> Option<CoreCommandSig> {
        let normal = core_normalize_ability(ability);
        for inst in normal.instances.iter().rev() {
            if let Some(cmds) = self.commands_of(&inst.interface, &inst.args) {
                if let Some((_, sig)) = cmds.into_iter().find(|(n, _)| n == command) {
                    return Some(sig);
                }
            }
        }
        None
    }
}

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

pub type Term = Rc<TermNode>;

#[derive(Clone, Debug, PartialEq)]
pub struct TermNode {
    pub kind: TermKind,
    /// Construction-value flag, precomputed so decomposition is cheap.
    pub is_value: bool,
    /// Use-value flag: variables, type applications, commands, builtins and
    /// annotated non-use construction values.
    pub is_use_value: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Int(i64),
    Char(char),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(n) => write!(f, "{n}"),
            Literal::Char(c) => write!(f, "{}", crate::core::print::char_literal(*c)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HandleClause {
    pub command: Name,
    pub args: Vec<Name>,
    pub continuation: Name,
    pub body: Term,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TermKind {
    // uses
    Var(Name),
    PolyApp(Name, Vec<CoreTypeArg>),
    Command(Name),
    Builtin(Name, Vec<CoreTypeArg>),
    App(Term, Vec<Term>),
    /// `(n : A)`, the coercion of a construction to a use.
    Annot(Term, CoreValueType),
    // constructions
    Ctor(Name, Vec<Term>),
    IntLit(i64),
    CharLit(char),
    Lambda(Vec<Name>, Term),
    Case(Term, Vec<(Name, Vec<Name>, Term)>),
    /// Case over builtin literals with a fall-through branch.
    LitCase { scrutinee: Term, arms: Vec<(Literal, Term)>, default: Term },
    Handle {
        adjustment: CoreAdjustment,
        peg: CorePeg,
        /// The checked type of the scrutinee; the captured continuation's
        /// annotation needs it.
        scrutinee_ty: CoreValueType,
        scrutinee: Term,
        clauses: Vec<HandleClause>,
        ret_var: Name,
        ret_body: Term,
    },
    Let { name: Name, poly: CorePolyType, bound: Term, body: Term },
    LetRec { bindings: Rc<Vec<(Name, CorePolyType, Vec<Name>, Term)>>, body: Term },
}

pub fn mk(kind: TermKind) -> Term {
    let (is_value, is_use_value) = classify(&kind);
    Rc::new(TermNode { kind, is_value, is_use_value })
}

fn classify(kind: &TermKind) -> (bool, bool) {
    match kind {
        TermKind::Var(_) | TermKind::PolyApp(_, _) | TermKind::Command(_) | TermKind::Builtin(_, _) => {
            (true, true)
        }
        // `(w : A)` is a use value exactly when `w` is a non-use construction
        // value; when `w` is itself a use value the annotation is an erasure
        // redex.
        TermKind::Annot(t, _) => {
            let v = t.is_value && !t.is_use_value;
            (v, v)
        }
        TermKind::Ctor(_, args) => (args.iter().all(|a| a.is_value), false),
        TermKind::IntLit(_) | TermKind::CharLit(_) | TermKind::Lambda(_, _) => (true, false),
        TermKind::App(_, _)
        | TermKind::Case(_, _)
        | TermKind::LitCase { .. }
        | TermKind::Handle { .. }
        | TermKind::Let { .. }
        | TermKind::LetRec { .. } => (false, false),
    }
}

// Convenience constructors used by the elaborator and tests.

pub fn var(name: impl Into<Name>) -> Term {
    mk(TermKind::Var(name.into()))
}

pub fn app(head: Term, args: Vec<Term>) -> Term {
    mk(TermKind::App(head, args))
}

pub fn annot(t: Term, ty: CoreValueType) -> Term {
    mk(TermKind::Annot(t, ty))
}

pub fn lambda(params: Vec<Name>, body: Term) -> Term {
    mk(TermKind::Lambda(params, body))
}

/// Free term variables (monomorphic and polymorphic alike).
pub fn free_vars(t: &Term, acc: &mut BTreeSet<Name>) {
    match &t.kind {
        TermKind::Var(x) => {
            acc.insert(x.clone());
        }
        TermKind::PolyApp(f, _) => {
            acc.insert(f.clone());
        }
        TermKind::Command(_) | TermKind::Builtin(_, _) | TermKind::IntLit(_) | TermKind::CharLit(_) => {}
        TermKind::App(h, args) => {
            free_vars(h, acc);
            args.iter().for_each(|a| free_vars(a, acc));
        }
        TermKind::Annot(n, _) => free_vars(n, acc),
        TermKind::Ctor(_, args) => args.iter().for_each(|a| free_vars(a, acc)),
        TermKind::Lambda(params, body) => {
            let mut inner = BTreeSet::new();
            free_vars(body, &mut inner);
            for p in params {
                inner.remove(p);
            }
            acc.extend(inner);
        }
        TermKind::Case(scrut, branches) => {
            free_vars(scrut, acc);
            for (_, binders, body) in branches {
                let mut inner = BTreeSet::new();
                free_vars(body, &mut inner);
                for b in binders {
                    inner.remove(b);
                }
                acc.extend(inner);
            }
        }
        TermKind::LitCase { scrutinee, arms, default } => {
            free_vars(scrutinee, acc);
            arms.iter().for_each(|(_, b)| free_vars(b, acc));
            free_vars(default, acc);
        }
        TermKind::Handle { scrutinee, clauses, ret_var, ret_body, .. } => {
            free_vars(scrutinee, acc);
            for cl in clauses {
                let mut inner = BTreeSet::new();
                free_vars(&cl.body, &mut inner);
                for b in &cl.args {
                    inner.remove(b);
                }
                inner.remove(&cl.continuation);
                acc.extend(inner);
            }
            let mut inner = BTreeSet::new();
            free_vars(ret_body, &mut inner);
            inner.remove(ret_var);
            acc.extend(inner);
        }
        TermKind::Let { name, bound, body, .. } => {
            free_vars(bound, acc);
            let mut inner = BTreeSet::new();
            free_vars(body, &mut inner);
            inner.remove(name);
            acc.extend(inner);
        }
        TermKind::LetRec { bindings, body } => {
            let bound: BTreeSet<&Name> = bindings.iter().map(|(n, _, _, _)| n).collect();
            let mut inner = BTreeSet::new();
            for (_, _, params, b) in bindings.iter() {
                let mut bi = BTreeSet::new();
                free_vars(b, &mut bi);
                for p in params {
                    bi.remove(p);
                }
                inner.extend(bi);
            }
            free_vars(body, &mut inner);
            for b in bound {
                inner.remove(b);
            }
            acc.extend(inner);
        }
    }
}

/// Substitute type arguments for type parameters inside a term's type
/// annotations. Polymorphic let and letrec binders shadow the keys inside
/// their own definitions. Returns None when nothing changes, preserving
/// sharing.
pub fn subst_types_in_term(term: &Term, subst: &[(CoreTypeParam, CoreTypeArg)]) -> Option<Term> {
    if subst.is_empty() {
        return None;
    }
    let sv = |v: &CoreValueType| -> CoreValueType {
        let pairs: Vec<(&CoreTypeParam, &CoreTypeArg)> = subst.iter().map(|(p, a)| (p, a)).collect();
        core_subst_value(v, &pairs)
    };
    let sarg = |a: &CoreTypeArg| -> CoreTypeArg {
        let pairs: Vec<(&CoreTypeParam, &CoreTypeArg)> = subst.iter().map(|(p, a)| (p, a)).collect();
        core_subst_arg(a, &pairs)
    };
    let sab = |a: &CoreAbility| -> CoreAbility {
        let pairs: Vec<(&CoreTypeParam, &CoreTypeArg)> = subst.iter().map(|(p, a)| (p, a)).collect();
        core_subst_ability(a, &pairs)
    };
    let sadj = |a: &CoreAdjustment| -> CoreAdjustment {
        let pairs: Vec<(&CoreTypeParam, &CoreTypeArg)> = subst.iter().map(|(p, a)| (p, a)).collect();
        core_subst_adjustment(a, &pairs)
    };
    /// Drop the keys a polytype's binders shadow.
    fn minus<'s>(
        subst: &'s [(CoreTypeParam, CoreTypeArg)],
        binders: &[CoreTypeParam],
    ) -> Vec<(CoreTypeParam, CoreTypeArg)> {
        subst
            .iter()
            .filter(|(p, _)| !binders.iter().any(|b| b.name() == p.name()))
            .cloned()
            .collect()
    }

    match &term.kind {
        TermKind::Var(_) | TermKind::Command(_) | TermKind::IntLit(_) | TermKind::CharLit(_) => None,
        TermKind::PolyApp(f, args) => {
            Some(mk(TermKind::PolyApp(f.clone(), args.iter().map(sarg).collect())))
        }
        TermKind::Builtin(f, args) => {
            Some(mk(TermKind::Builtin(f.clone(), args.iter().map(sarg).collect())))
        }
        TermKind::App(h, args) => {
            let nh = subst_types_in_term(h, subst);
            let nargs: Vec<Option<Term>> =
                args.iter().map(|a| subst_types_in_term(a, subst)).collect();
            if nh.is_none() && nargs.iter().all(|a| a.is_none()) {
                return None;
            }
            Some(app(
                nh.unwrap_or_else(|| h.clone()),
                nargs
                    .into_iter()
                    .zip(args.iter())
                    .map(|(n, o)| n.unwrap_or_else(|| o.clone()))
                    .collect(),
            ))
        }
        TermKind::Annot(n, ty) => {
            let inner = subst_types_in_term(n, subst).unwrap_or_else(|| n.clone());
            Some(annot(inner, sv(ty)))
        }
        TermKind::Ctor(k, args) => {
            let nargs: Vec<Option<Term>> =
                args.iter().map(|a| subst_types_in_term(a, subst)).collect();
            if nargs.iter().all(|a| a.is_none()) {
                return None;
            }
            Some(mk(TermKind::Ctor(
                k.clone(),
                nargs
                    .into_iter()
                    .zip(args.iter())
                    .map(|(n, o)| n.unwrap_or_else(|| o.clone()))
                    .collect(),
            )))
        }
        TermKind::Lambda(params, body) => {
            let b = subst_types_in_term(body, subst)?;
            Some(lambda(params.clone(), b))
        }
        TermKind::Case(scrut, branches) => {
            let s = subst_types_in_term(scrut, subst);
            let bs: Vec<Option<Term>> =
                branches.iter().map(|(_, _, b)| subst_types_in_term(b, subst)).collect();
            if s.is_none() && bs.iter().all(|b| b.is_none()) {
                return None;
            }
            Some(mk(TermKind::Case(
                s.unwrap_or_else(|| scrut.clone()),
                bs.into_iter()
                    .zip(branches.iter())
                    .map(|(nb, (k, xs, b))| {
                        (k.clone(), xs.clone(), nb.unwrap_or_else(|| b.clone()))
                    })
                    .collect(),
            )))
        }
        TermKind::LitCase { scrutinee, arms, default } => {
            let s = subst_types_in_term(scrutinee, subst);
            let asubst: Vec<Option<Term>> =
                arms.iter().map(|(_, b)| subst_types_in_term(b, subst)).collect();
            let d = subst_types_in_term(default, subst);
            if s.is_none() && d.is_none() && asubst.iter().all(|a| a.is_none()) {
                return None;
            }
            Some(mk(TermKind::LitCase {
                scrutinee: s.unwrap_or_else(|| scrutinee.clone()),
                arms: asubst
                    .into_iter()
                    .zip(arms.iter())
                    .map(|(n, (l, b))| (l.clone(), n.unwrap_or_else(|| b.clone())))
                    .collect(),
                default: d.unwrap_or_else(|| default.clone()),
            }))
        }
        TermKind::Handle { adjustment, peg, scrutinee_ty, scrutinee, clauses, ret_var, ret_body } => {
            Some(mk(TermKind::Handle {
                adjustment: sadj(adjustment),
                peg: CorePeg { ability: sab(&peg.ability), value: sv(&peg.value) },
                scrutinee_ty: sv(scrutinee_ty),
                scrutinee: subst_types_in_term(scrutinee, subst)
                    .unwrap_or_else(|| scrutinee.clone()),
                clauses: clauses
                    .iter()
                    .map(|cl| HandleClause {
                        command: cl.command.clone(),
                        args: cl.args.clone(),
                        continuation: cl.continuation.clone(),
                        body: subst_types_in_term(&cl.body, subst)
                            .unwrap_or_else(|| cl.body.clone()),
                    })
                    .collect(),
                ret_var: ret_var.clone(),
                ret_body: subst_types_in_term(ret_body, subst)
                    .unwrap_or_else(|| ret_body.clone()),
            }))
        }
        TermKind::Let { name, poly, bound, body } => {
            let inner_subst = minus(subst, &poly.binders);
            let nb = if inner_subst.is_empty() {
                None
            } else {
                subst_types_in_term(bound, &inner_subst)
            };
            let nbody = subst_types_in_term(body, subst);
            if nb.is_none() && nbody.is_none() {
                return None;
            }
            Some(mk(TermKind::Let {
                name: name.clone(),
                poly: poly.clone(),
                bound: nb.unwrap_or_else(|| bound.clone()),
                body: nbody.unwrap_or_else(|| body.clone()),
            }))
        }
        TermKind::LetRec { bindings, body } => {
            let mut changed = false;
            let mut out = Vec::with_capacity(bindings.len());
            for (name, poly, params, fn_body) in bindings.iter() {
                let inner_subst = minus(subst, &poly.binders);
                let nb = if inner_subst.is_empty() {
                    None
                } else {
                    subst_types_in_term(fn_body, &inner_subst)
                };
                if let Some(b) = nb {
                    changed = true;
                    out.push((name.clone(), poly.clone(), params.clone(), b));
                } else {
                    out.push((name.clone(), poly.clone(), params.clone(), fn_body.clone()));
                }
            }
            let nbody = subst_types_in_term(body, subst);
            if !changed && nbody.is_none() {
                return None;
            }
            let bindings = if changed { Rc::new(out) } else { bindings.clone() };
            Some(mk(TermKind::LetRec {
                bindings,
                body: nbody.unwrap_or_else(|| body.clone()),
            }))
        }
    }
}
