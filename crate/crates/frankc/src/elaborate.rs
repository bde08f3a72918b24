//! Elaboration of checked programs into Core: the type translation, the term
//! translation, and pattern-matching elaboration over clause matrices.
//!
//! Ports translate to suspensions at the ambient extended by the port's
//! adjustment, so applications wrap their arguments in suspensions and the
//! emitted operator bodies force them port by port, left to right. Column
//! order is never permuted.

use crate::core::subst::Subst;
use crate::core::*;
use crate::syntax::{
    self, Ability, AbilityHead, Adjustment, CommandSig, CompType, Declarations, Name, Peg, Port,
    TypeArg, TypeParam, ValueType,
};
use crate::typecheck::typed::*;
use std::collections::BTreeSet;
use std::fmt;

// ---------------------------------------------------------------------------
// Type translation
// ---------------------------------------------------------------------------

/// Translation mode: strict translation rejects leftover unification
/// variables; the lenient mode (used by the coverage dry run while checking
/// is still in flight) maps them to opaque variables.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Strict,
    Lenient,
}

fn tr_value(ty: &ValueType, mode: Mode) -> CoreValueType {
    match ty {
        ValueType::Data(d, args) => {
            CoreValueType::Data(d.clone(), args.iter().map(|a| tr_arg(a, mode)).collect())
        }
        ValueType::Thunk(c) => CoreValueType::Thunk(Box::new(tr_comp(c, mode))),
        ValueType::Var(v) => CoreValueType::Var(v.clone()),
        ValueType::Meta(id) => match mode {
            Mode::Lenient => CoreValueType::Var(format!("%meta{id}")),
            Mode::Strict => unreachable!("unsolved meta ?t{id} survived zonking"),
        },
    }
}

fn tr_arg(arg: &TypeArg, mode: Mode) -> CoreTypeArg {
    match arg {
        TypeArg::Val(v) => CoreTypeArg::Val(tr_value(v, mode)),
        TypeArg::Ab(ab) => CoreTypeArg::Ab(tr_ability(ab, mode)),
    }
}

fn tr_ability(ab: &Ability, mode: Mode) -> CoreAbility {
    let head = match (&ab.head, mode) {
        (AbilityHead::Meta(id), Mode::Lenient) => AbilityHead::Var(format!("%meta{id}")),
        (AbilityHead::Meta(id), Mode::Strict) => {
            unreachable!("unsolved effect meta ?e{id} survived zonking")
        }
        (h, _) => h.clone(),
    };
    CoreAbility {
        head,
        instances: ab
            .instances
            .iter()
            .map(|i| CoreInstance {
                interface: i.interface.clone(),
                args: i.args.iter().map(|a| tr_arg(a, mode)).collect(),
            })
            .collect(),
    }
}

fn tr_adjustment(delta: &Adjustment, mode: Mode) -> CoreAdjustment {
    CoreAdjustment {
        instances: delta
            .instances
            .iter()
            .map(|i| CoreInstance {
                interface: i.interface.clone(),
                args: i.args.iter().map(|a| tr_arg(a, mode)).collect(),
            })
            .collect(),
    }
}

/// `⟦⟨Δ⟩A⟧(Σ) = {[Σ ⊕ Δ]⟦A⟧}`: each port becomes a suspension at the
/// ambient extended by the port's adjustment.
fn tr_port(port: &Port, ambient: &Ability, mode: Mode) -> CoreValueType {
    let extended = syntax::apply_adjustment(ambient, &port.adjustment);
    CoreValueType::Thunk(Box::new(CoreCompType {
        args: vec![],
        peg: CorePeg { ability: tr_ability(&extended, mode), value: tr_value(&port.value, mode) },
    }))
}

/// `⟦T̄ → [Σ]A⟧ = ⟦T⟧(⟦Σ⟧) → [⟦Σ⟧]⟦A⟧`, supplying the peg's own ability
/// to each port.
fn tr_comp(c: &CompType, mode: Mode) -> CoreCompType {
    CoreCompType {
        args: c.ports.iter().map(|p| tr_port(p, &c.peg.ability, mode)).collect(),
        peg: CorePeg {
            ability: tr_ability(&c.peg.ability, mode),
            value: tr_value(&c.peg.value, mode),
        },
    }
}

fn tr_poly(poly: &crate::syntax::PolyType, mode: Mode) -> CorePolyType {
    CorePolyType {
        binders: poly
            .binders
            .iter()
            .map(|b| match b {
                TypeParam::Val(v) => CoreTypeParam::Val(v.clone()),
                TypeParam::Eff(e) => CoreTypeParam::Eff(e.clone()),
            })
            .collect(),
        body: tr_value(&poly.body, mode),
    }
}

pub fn elaborate_value_type(ty: &ValueType) -> CoreValueType {
    tr_value(ty, Mode::Strict)
}

pub fn elaborate_comp_type(c: &CompType) -> CoreCompType {
    tr_comp(c, Mode::Strict)
}

pub fn elaborate_port(port: &Port, ambient: &Ability) -> CoreValueType {
    tr_port(port, ambient, Mode::Strict)
}

pub fn elaborate_ability(ab: &Ability) -> CoreAbility {
    tr_ability(ab, Mode::Strict)
}

pub fn elaborate_decls(decls: &Declarations) -> CoreDecls {
    CoreDecls {
        datas: decls
            .datas
            .iter()
            .map(|d| {
                (
                    d.name.clone(),
                    d.params
                        .iter()
                        .map(|p| match p {
                            TypeParam::Val(v) => CoreTypeParam::Val(v.clone()),
                            TypeParam::Eff(e) => CoreTypeParam::Eff(e.clone()),
                        })
                        .collect(),
                    d.ctors
                        .iter()
                        .map(|c| {
                            (c.name.clone(), c.args.iter().map(elaborate_value_type).collect())
                        })
                        .collect(),
                    d.builtin,
                )
            })
            .collect(),
        interfaces: decls
            .interfaces
            .iter()
            .map(|i| {
                (
                    i.name.clone(),
                    i.params
                        .iter()
                        .map(|p| match p {
                            TypeParam::Val(v) => CoreTypeParam::Val(v.clone()),
                            TypeParam::Eff(e) => CoreTypeParam::Eff(e.clone()),
                        })
                        .collect(),
                    i.commands
                        .iter()
                        .map(|c| {
                            (
                                c.name.clone(),
                                c.args.iter().map(elaborate_value_type).collect(),
                                elaborate_value_type(&c.result),
                            )
                        })
                        .collect(),
                )
            })
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Coverage reporting
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub enum CoverageReport {
    Complete,
    /// A missing signal sequence, rendered as patterns.
    Incomplete(Witness),
    /// Clause indices that are never selected at any match terminal.
    Redundant(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness(pub Vec<WitnessPat>);

#[derive(Clone, Debug, PartialEq)]
pub enum WitnessPat {
    Any,
    Ctor(Name, Vec<WitnessPat>),
    Lit(Literal),
    Request(Name, Vec<WitnessPat>),
}

impl fmt::Display for WitnessPat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WitnessPat::Any => write!(f, "_"),
            WitnessPat::Ctor(k, args) if args.is_empty() => write!(f, "{k}"),
            WitnessPat::Ctor(k, args) => {
                write!(f, "({k}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            WitnessPat::Lit(l) => write!(f, "{l}"),
            WitnessPat::Request(c, args) => {
                write!(f, "<{c}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, " -> _>")
            }
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Coverage for a checked computation: a dry run of pattern elaboration with
/// placeholder bodies.
pub fn check_coverage(decls: &Declarations, comp: &TComputation) -> CoverageReport {
    let mut elab = Elaborator::new(decls, Mode::Lenient);
    match elab.computation_parts(comp) {
        Ok(_) => {
            let all: BTreeSet<usize> = (0..comp.clauses.len()).collect();
            let unused: Vec<usize> = all.difference(&elab.used_rows).copied().collect();
            if unused.is_empty() {
                CoverageReport::Complete
            } else {
                CoverageReport::Redundant(unused)
            }
        }
        Err(witness) => CoverageReport::Incomplete(witness),
    }
}

// ---------------------------------------------------------------------------
// The elaborator
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct CoreProgram {
    pub decls: CoreDecls,
    pub term: Term,
    pub ty: CoreValueType,
    pub ability: CoreAbility,
}

#[derive(Clone, Debug)]
pub struct ElaborateError {
    pub message: String,
}

pub fn elaborate_program(program: &TypedProgram) -> Result<CoreProgram, ElaborateError> {
    let mut elab = Elaborator::new(&program.decls, Mode::Strict);
    let term = elab.construction(&program.term);
    // Coverage was already checked per computation while type checking; the
    // elaborator re-runs it as it goes and reports any disagreement here.
    match elab.incomplete.take() {
        None => Ok(CoreProgram {
            decls: elaborate_decls(&program.decls),
            term,
            ty: elaborate_value_type(&program.ty),
            ability: elaborate_ability(&program.top_ability),
        }),
        Some(w) => Err(ElaborateError {
            message: format!("incomplete pattern match reached elaboration; missing case: {w}"),
        }),
    }
}

struct Elaborator<'a> {
    decls: &'a Declarations,
    mode: Mode,
    fresh: u32,
    used_rows: BTreeSet<usize>,
    /// Set when a dry run hits an empty matrix; elaboration of checked
    /// programs never does.
    incomplete: Option<Witness>,
}

// -- pattern matrix ----------------------------------------------------------

#[derive(Clone, Debug)]
enum PePat {
    Var(Name),
    Ctor(Name, Vec<PePat>),
    Lit(Literal),
    Request { command: Name, args: Vec<PePat>, cont_name: Name, cont_ty: ValueType },
    CatchAll { name: Name, ty: ValueType },
}

#[derive(Clone, Debug)]
enum Column {
    /// One of the computation's ports, handled by case three.
    Port(Port),
    Value(ValueType),
    /// Continuation columns; matched only by variables.
    Inscrutable,
}

#[derive(Clone, Debug)]
struct Row {
    pats: Vec<PePat>,
    body: Term,
    origin: usize,
}

fn pe_value_pattern(p: &TValuePattern) -> PePat {
    match p {
        TValuePattern::Var(b) => PePat::Var(b.name.clone()),
        TValuePattern::Ctor { name, args, .. } => {
            PePat::Ctor(name.clone(), args.iter().map(pe_value_pattern).collect())
        }
        TValuePattern::IntLit(n, _) => PePat::Lit(Literal::Int(*n)),
        TValuePattern::CharLit(c, _) => PePat::Lit(Literal::Char(*c)),
    }
}

fn pe_comp_pattern(p: &TCompPattern) -> PePat {
    match p {
        TCompPattern::Value(v) => pe_value_pattern(v),
        TCompPattern::Request { command, args, continuation, .. } => PePat::Request {
            command: command.clone(),
            args: args.iter().map(pe_value_pattern).collect(),
            cont_name: continuation.name.clone(),
            cont_ty: continuation.ty.clone(),
        },
        TCompPattern::CatchAll(b, _) => PePat::CatchAll { name: b.name.clone(), ty: b.ty.clone() },
    }
}

impl<'a> Elaborator<'a> {
    fn new(decls: &'a Declarations, mode: Mode) -> Self {
        Elaborator { decls, mode, fresh: 0, used_rows: BTreeSet::new(), incomplete: None }
    }

    fn fresh_var(&mut self, base: &str) -> Name {
        let n = self.fresh;
        self.fresh += 1;
        format!("%{base}{n}")
    }

    // -- uses -----------------------------------------------------------------

    fn elaborate_use(&mut self, u: &TUse) -> Term {
        match u {
            TUse::Var { name, .. } => var(name.clone()),
            TUse::Poly { name, args, .. } => mk(TermKind::PolyApp(
                name.clone(),
                args.iter().map(|a| tr_arg(a, self.mode)).collect(),
            )),
            TUse::Builtin { name, args, .. } => mk(TermKind::Builtin(
                name.clone(),
                args.iter().map(|a| tr_arg(a, self.mode)).collect(),
            )),
            TUse::Command { name, sig, ambient, .. } => self.eta_command(name, sig, ambient),
            TUse::App { head, args, .. } => match &**head {
                // Commands and builtins take bare arguments in Core.
                TUse::Command { name, .. } => {
                    let args = args.iter().map(|a| self.construction(a)).collect();
                    app(mk(TermKind::Command(name.clone())), args)
                }
                TUse::Builtin { name, args: targs, .. } => {
                    let core_args = args.iter().map(|a| self.construction(a)).collect();
                    app(
                        mk(TermKind::Builtin(
                            name.clone(),
                            targs.iter().map(|a| tr_arg(a, self.mode)).collect(),
                        )),
                        core_args,
                    )
                }
                _ => {
                    let head = self.elaborate_use(head);
                    let args =
                        args.iter().map(|a| lambda(vec![], self.construction(a))).collect();
                    app(head, args)
                }
            },
        }
    }

    /// A first-class command is eta-expanded so its type matches the
    /// translation: the wrapper takes suspended arguments and forces them.
    fn eta_command(&mut self, name: &str, sig: &CommandSig, ambient: &Ability) -> Term {
        let params: Vec<Name> = (0..sig.args.len()).map(|_| self.fresh_var("x")).collect();
        let forced: Vec<Term> =
            params.iter().map(|p| app(var(p.clone()), vec![])).collect();
        let body = app(mk(TermKind::Command(name.to_string())), forced);
        let ports: Vec<CoreValueType> = sig
            .args
            .iter()
            .map(|a| {
                CoreValueType::Thunk(Box::new(CoreCompType {
                    args: vec![],
                    peg: CorePeg {
                        ability: tr_ability(ambient, self.mode),
                        value: tr_value(a, self.mode),
                    },
                }))
            })
            .collect();
        let ty = CoreValueType::Thunk(Box::new(CoreCompType {
            args: ports,
            peg: CorePeg {
                ability: tr_ability(ambient, self.mode),
                value: tr_value(&sig.result, self.mode),
            },
        }));
        annot(lambda(params, body), ty)
    }

    // -- constructions ----------------------------------------------------------

    fn construction(&mut self, n: &TConstruction) -> Term {
        match n {
            TConstruction::Use(u) => self.elaborate_use(u),
            TConstruction::Ctor { name, args, .. } => mk(TermKind::Ctor(
                name.clone(),
                args.iter().map(|a| self.construction(a)).collect(),
            )),
            TConstruction::IntLit(v, _) => mk(TermKind::IntLit(*v)),
            TConstruction::CharLit(c, _) => mk(TermKind::CharLit(*c)),
            TConstruction::Suspend(comp, _) => {
                let (params, body) = match self.computation_parts(comp) {
                    Ok(parts) => parts,
                    Err(w) => {
                        self.incomplete.get_or_insert(w);
                        (vec![], mk(TermKind::IntLit(0)))
                    }
                };
                let ty = CoreValueType::Thunk(Box::new(tr_comp(&comp.comp, self.mode)));
                annot(lambda(params, body), ty)
            }
            TConstruction::Let { name, poly, bound, body, .. } => mk(TermKind::Let {
                name: name.clone(),
                poly: tr_poly(poly, self.mode),
                bound: self.construction(bound),
                body: self.construction(body),
            }),
            TConstruction::LetRec { bindings, body, .. } => {
                let mut out = Vec::new();
                for (name, poly, comp) in bindings {
                    let (params, fn_body) = match self.computation_parts(comp) {
                        Ok(parts) => parts,
                        Err(w) => {
                            self.incomplete.get_or_insert(w);
                            (vec![], mk(TermKind::IntLit(0)))
                        }
                    };
                    out.push((name.clone(), tr_poly(poly, self.mode), params, fn_body));
                }
                mk(TermKind::LetRec {
                    bindings: std::rc::Rc::new(out),
                    body: self.construction(body),
                })
            }
        }
    }

    // -- computations: λ x̄ . PE(x̄, T̄, matrix, G) -----------------------------

    fn computation_parts(&mut self, comp: &TComputation) -> Result<(Vec<Name>, Term), Witness> {
        let params: Vec<Name> =
            (0..comp.comp.ports.len()).map(|_| self.fresh_var("x")).collect();
        let cols: Vec<Column> = comp.comp.ports.iter().map(|p| Column::Port(p.clone())).collect();
        // The dry run substitutes placeholder bodies: projection decisions
        // never depend on body content, and nested suspensions are covered
        // by their own checks.
        let rows: Vec<Row> = comp
            .clauses
            .iter()
            .enumerate()
            .map(|(i, clause)| Row {
                pats: clause.patterns.iter().map(pe_comp_pattern).collect(),
                body: match self.mode {
                    Mode::Strict => self.construction(&clause.body),
                    Mode::Lenient => mk(TermKind::IntLit(i as i64)),
                },
                origin: i,
            })
            .collect();
        let body = self.pe(&params, &cols, rows, &comp.comp.peg)?;
        Ok((params, body))
    }

    /// Pattern-matching elaboration. Four cases: a data column either
    /// case-splits or, when headless, is skipped; a port column produces a
    /// handler; any other column is skipped; empty columns return the leading
    /// row's body.
    fn pe(
        &mut self,
        vars: &[Name],
        cols: &[Column],
        matrix: Vec<Row>,
        peg: &Peg,
    ) -> Result<Term, Witness> {
        let Some((x, xs)) = vars.split_first() else {
            // Terminal: no columns left.
            return match matrix.first() {
                Some(row) => {
                    debug_assert!(row.pats.is_empty());
                    self.used_rows.insert(row.origin);
                    Ok(row.body.clone())
                }
                None => Err(Witness(vec![])),
            };
        };
        let (col, rest_cols) = cols.split_first().expect("columns track variables");

        match col {
            Column::Port(port) => self.pe_port(x, xs, port, rest_cols, matrix, peg),
            Column::Value(ty) => match ty {
                ValueType::Data(d, dargs) => {
                    let decl = self
                        .decls
                        .data(d)
                        .unwrap_or_else(|| panic!("unknown data type `{d}` in a checked program"));
                    if decl.builtin {
                        self.pe_builtin(x, xs, ty, rest_cols, matrix, peg)
                    } else if !matrix.is_empty() && headless(&matrix) {
                        let projected = self.project_var(matrix, x, ty, peg);
                        self.pe(xs, rest_cols, projected, peg).map_err(prepend_any)
                    } else {
                        // An empty matrix still case-splits: a data type with
                        // no constructors is covered vacuously.
                        self.pe_data(x, xs, d, dargs, ty, rest_cols, matrix, peg)
                    }
                }
                // Suspensions, type variables and unsolved columns cannot be
                // scrutinised; rows must be variable-like here.
                _ => {
                    let projected = self.project_var(matrix, x, ty, peg);
                    self.pe(xs, rest_cols, projected, peg).map_err(prepend_any)
                }
            },
            Column::Inscrutable => {
                let projected = self.project_var_inscrutable(matrix, x);
                self.pe(xs, rest_cols, projected, peg).map_err(prepend_any)
            }
        }
    }

    /// Case two: a case split over every constructor of the data type.
    #[allow(clippy::too_many_arguments)]
    fn pe_data(
        &mut self,
        x: &Name,
        xs: &[Name],
        data: &str,
        data_args: &[TypeArg],
        col_ty: &ValueType,
        rest_cols: &[Column],
        matrix: Vec<Row>,
        peg: &Peg,
    ) -> Result<Term, Witness> {
        let decl = self.decls.data(data).expect("checked data type");
        let mut branches = Vec::new();
        for ctor in decl.ctors.clone() {
            let field_tys = self
                .decls
                .ctor_arg_types(data, data_args, &ctor.name)
                .expect("checked constructor");
            let field_vars: Vec<Name> =
                (0..field_tys.len()).map(|_| self.fresh_var("y")).collect();
            let projected = self.project_ctor(&matrix, &ctor.name, &field_vars, col_ty, peg);
            let mut inner_vars: Vec<Name> = field_vars.clone();
            inner_vars.extend(xs.iter().cloned());
            let mut inner_cols: Vec<Column> =
                field_tys.iter().map(|t| Column::Value(t.clone())).collect();
            inner_cols.extend(rest_cols.iter().cloned());
            let body = self.pe(&inner_vars, &inner_cols, projected, peg).map_err(|w| {
                let mut pats = w.0;
                let fields: Vec<WitnessPat> = pats.drain(..field_tys.len()).collect();
                let mut out = vec![WitnessPat::Ctor(ctor.name.clone(), fields)];
                out.extend(pats);
                Witness(out)
            })?;
            branches.push((ctor.name.clone(), field_vars, body));
        }
        Ok(mk(TermKind::Case(var(x.clone()), branches)))
    }

    /// Builtin columns split on the literal heads present in the matrix,
    /// with a fall-through branch for everything else.
    fn pe_builtin(
        &mut self,
        x: &Name,
        xs: &[Name],
        col_ty: &ValueType,
        rest_cols: &[Column],
        matrix: Vec<Row>,
        peg: &Peg,
    ) -> Result<Term, Witness> {
        if headless(&matrix) {
            let projected = self.project_var(matrix, x, col_ty, peg);
            return self.pe(xs, rest_cols, projected, peg).map_err(prepend_any);
        }
        let mut lits: Vec<Literal> = Vec::new();
        for row in &matrix {
            if let Some(PePat::Lit(l)) = row.pats.first() {
                if !lits.contains(l) {
                    lits.push(l.clone());
                }
            }
        }
        let mut arms = Vec::new();
        for lit in &lits {
            let projected = self.project_lit(&matrix, lit, x, col_ty, peg);
            let body = self.pe(xs, rest_cols, projected, peg).map_err(|w| {
                let mut out = vec![WitnessPat::Lit(lit.clone())];
                out.extend(w.0);
                Witness(out)
            })?;
            arms.push((lit.clone(), body));
        }
        let defaulted = self.project_lit_default(&matrix, x, col_ty, peg);
        let default = self.pe(xs, rest_cols, defaulted, peg).map_err(|w| {
            let mut out = vec![WitnessPat::Lit(fresh_literal(&lits))];
            out.extend(w.0);
            Witness(out)
        })?;
        Ok(mk(TermKind::LitCase { scrutinee: var(x.clone()), arms, default }))
    }

    /// Case three: a port column forces the argument under a handler with
    /// one clause per command of the adjustment and a return clause that
    /// continues at the port's value type.
    fn pe_port(
        &mut self,
        x: &Name,
        xs: &[Name],
        port: &Port,
        rest_cols: &[Column],
        matrix: Vec<Row>,
        peg: &Peg,
    ) -> Result<Term, Witness> {
        let ambient = &peg.ability;
        let _extended = syntax::apply_adjustment(ambient, &port.adjustment);
        let handled = syntax::handled_commands(self.decls, &port.adjustment);

        let mut clauses = Vec::new();
        for (command, sig) in &handled {
            let arg_vars: Vec<Name> = (0..sig.args.len()).map(|_| self.fresh_var("y")).collect();
            let cont_var = self.fresh_var("z");
            let projected =
                self.project_request(&matrix, command, &arg_vars, &cont_var, sig, peg);
            let mut inner_vars = vec![cont_var.clone()];
            inner_vars.extend(arg_vars.iter().cloned());
            inner_vars.extend(xs.iter().cloned());
            let mut inner_cols = vec![Column::Inscrutable];
            inner_cols.extend(sig.args.iter().map(|t| Column::Value(t.clone())));
            inner_cols.extend(rest_cols.iter().cloned());
            let body = self.pe(&inner_vars, &inner_cols, projected, peg).map_err(|w| {
                let mut pats = w.0;
                pats.remove(0); // the continuation column
                let args: Vec<WitnessPat> = pats.drain(..sig.args.len()).collect();
                let mut out = vec![WitnessPat::Request(command.clone(), args)];
                out.extend(pats);
                Witness(out)
            })?;
            clauses.push(HandleClause {
                command: command.clone(),
                args: arg_vars,
                continuation: cont_var,
                body,
            });
        }

        let ret_var = self.fresh_var("w");
        let mut inner_vars = vec![ret_var.clone()];
        inner_vars.extend(xs.iter().cloned());
        let mut inner_cols = vec![Column::Value(port.value.clone())];
        inner_cols.extend(rest_cols.iter().cloned());
        let ret_body = self.pe(&inner_vars, &inner_cols, matrix, peg)?;

        Ok(mk(TermKind::Handle {
            adjustment: tr_adjustment(&port.adjustment, self.mode),
            peg: CorePeg {
                ability: tr_ability(ambient, self.mode),
                value: tr_value(&peg.value, self.mode),
            },
            scrutinee_ty: tr_value(&port.value, self.mode),
            scrutinee: app(var(x.clone()), vec![]),
            clauses,
            ret_var,
            ret_body,
        }))
    }

    // -- projections -----------------------------------------------------------

    /// Rebinding a variable to a variable is a renaming; anything else goes
    /// through the `on` sugar. Bindings whose variable is dead are elided.
    fn bind_value(&mut self, name: &Name, bound: Term, ty: CoreValueType, body: Term, peg: &Peg) -> Term {
        let mut free = BTreeSet::new();
        free_vars(&body, &mut free);
        if !free.contains(name) {
            return body;
        }
        if let TermKind::Var(_) = bound.kind {
            return Subst::mono_one(name.clone(), bound).apply(&body);
        }
        self.let_sugar(name.clone(), bound, ty, body, peg)
    }

    /// `let x = n in n'` as `on n {x ↦ n'}` with a local polymorphic `on`.
    fn let_sugar(&mut self, name: Name, bound: Term, ty: CoreValueType, body: Term, peg: &Peg) -> Term {
        let on_name = self.fresh_var("on");
        let (e, a, b) = ("%eOn".to_string(), "%aOn".to_string(), "%bOn".to_string());
        let on_poly = CorePolyType {
            binders: vec![
                CoreTypeParam::Eff(e.clone()),
                CoreTypeParam::Val(a.clone()),
                CoreTypeParam::Val(b.clone()),
            ],
            body: CoreValueType::Thunk(Box::new(CoreCompType {
                args: vec![
                    CoreValueType::Var(a.clone()),
                    CoreValueType::Thunk(Box::new(CoreCompType {
                        args: vec![CoreValueType::Var(a.clone())],
                        peg: CorePeg {
                            ability: CoreAbility { head: AbilityHead::Var(e.clone()), instances: vec![] },
                            value: CoreValueType::Var(b.clone()),
                        },
                    })),
                ],
                peg: CorePeg {
                    ability: CoreAbility { head: AbilityHead::Var(e), instances: vec![] },
                    value: CoreValueType::Var(b),
                },
            })),
        };
        let on_fn = {
            let xv = self.fresh_var("x");
            let fv = self.fresh_var("f");
            lambda(vec![xv.clone(), fv.clone()], app(var(fv), vec![var(xv)]))
        };
        let use_on = mk(TermKind::PolyApp(
            on_name.clone(),
            vec![
                CoreTypeArg::Ab(tr_ability(&peg.ability, self.mode)),
                CoreTypeArg::Val(ty),
                CoreTypeArg::Val(tr_value(&peg.value, self.mode)),
            ],
        ));
        mk(TermKind::Let {
            name: on_name,
            poly: on_poly,
            bound: on_fn,
            body: app(use_on, vec![bound, lambda(vec![name], body)]),
        })
    }

    /// The continuation bound by a handler clause takes a bare argument; the
    /// source-level continuation takes a suspended one. The adapter forces
    /// the suspension outside the captured context.
    fn continuation_adapter(&mut self, cont_var: &Name, src_ty: &ValueType) -> (Term, CoreValueType) {
        let y = self.fresh_var("y");
        let body = app(var(cont_var.clone()), vec![app(var(y.clone()), vec![])]);
        (lambda(vec![y], body), tr_value(src_ty, self.mode))
    }

    fn project_ctor(
        &mut self,
        matrix: &[Row],
        ctor: &str,
        field_vars: &[Name],
        col_ty: &ValueType,
        peg: &Peg,
    ) -> Vec<Row> {
        let mut out = Vec::new();
        for row in matrix {
            let (head, rest) = row.pats.split_first().expect("nonempty row");
            match head {
                PePat::Ctor(k, args) if k == ctor => {
                    let mut pats = args.clone();
                    pats.extend(rest.iter().cloned());
                    out.push(Row { pats, body: row.body.clone(), origin: row.origin });
                }
                PePat::Ctor(_, _) | PePat::Lit(_) | PePat::Request { .. } => {}
                PePat::Var(y) => {
                    let bound =
                        mk(TermKind::Ctor(ctor.to_string(), field_vars.iter().cloned().map(var).collect()));
                    let body = self.bind_value(
                        y,
                        bound,
                        tr_value(col_ty, self.mode),
                        row.body.clone(),
                        peg,
                    );
                    let mut pats: Vec<PePat> = field_vars.iter().cloned().map(PePat::Var).collect();
                    pats.extend(rest.iter().cloned());
                    out.push(Row { pats, body, origin: row.origin });
                }
                PePat::CatchAll { name, ty } => {
                    let bound = lambda(
                        vec![],
                        mk(TermKind::Ctor(
                            ctor.to_string(),
                            field_vars.iter().cloned().map(var).collect(),
                        )),
                    );
                    let body = self.bind_value(
                        name,
                        bound,
                        tr_value(ty, self.mode),
                        row.body.clone(),
                        peg,
                    );
                    let mut pats: Vec<PePat> = field_vars.iter().cloned().map(PePat::Var).collect();
                    pats.extend(rest.iter().cloned());
                    out.push(Row { pats, body, origin: row.origin });
                }
            }
        }
        out
    }

    fn project_lit(
        &mut self,
        matrix: &[Row],
        lit: &Literal,
        x: &Name,
        col_ty: &ValueType,
        peg: &Peg,
    ) -> Vec<Row> {
        let mut out = Vec::new();
        for row in matrix {
            let (head, rest) = row.pats.split_first().expect("nonempty row");
            match head {
                PePat::Lit(l) if l == lit => {
                    out.push(Row { pats: rest.to_vec(), body: row.body.clone(), origin: row.origin });
                }
                PePat::Lit(_) | PePat::Ctor(_, _) | PePat::Request { .. } => {}
                PePat::Var(y) => {
                    let body = self.bind_value(
                        y,
                        var(x.clone()),
                        tr_value(col_ty, self.mode),
                        row.body.clone(),
                        peg,
                    );
                    out.push(Row { pats: rest.to_vec(), body, origin: row.origin });
                }
                PePat::CatchAll { name, ty } => {
                    let body = self.bind_value(
                        name,
                        lambda(vec![], var(x.clone())),
                        tr_value(ty, self.mode),
                        row.body.clone(),
                        peg,
                    );
                    out.push(Row { pats: rest.to_vec(), body, origin: row.origin });
                }
            }
        }
        out
    }

    fn project_lit_default(
        &mut self,
        matrix: &[Row],
        x: &Name,
        col_ty: &ValueType,
        peg: &Peg,
    ) -> Vec<Row> {
        let rows: Vec<Row> = matrix
            .iter()
            .filter(|row| !matches!(row.pats.first(), Some(PePat::Lit(_))))
            .cloned()
            .collect();
        self.project_var(rows, x, col_ty, peg)
    }

    /// The skip projection: the column is consumed and rows rebind their
    /// variable-like head to the column variable.
    fn project_var(&mut self, matrix: Vec<Row>, x: &Name, col_ty: &ValueType, peg: &Peg) -> Vec<Row> {
        let mut out = Vec::new();
        for row in matrix {
            let (head, rest) = row.pats.split_first().expect("nonempty row");
            match head {
                PePat::Var(y) => {
                    let body =
                        self.bind_value(y, var(x.clone()), tr_value(col_ty, self.mode), row.body.clone(), peg);
                    out.push(Row { pats: rest.to_vec(), body, origin: row.origin });
                }
                PePat::CatchAll { name, ty } => {
                    let body = self.bind_value(
                        name,
                        lambda(vec![], var(x.clone())),
                        tr_value(ty, self.mode),
                        row.body.clone(),
                        peg,
                    );
                    out.push(Row { pats: rest.to_vec(), body, origin: row.origin });
                }
                PePat::Request { .. } => {}
                PePat::Ctor(_, _) | PePat::Lit(_) => {
                    debug_assert!(false, "refutable pattern at an unscrutinisable column");
                }
            }
        }
        out
    }

    fn project_var_inscrutable(&mut self, matrix: Vec<Row>, x: &Name) -> Vec<Row> {
        let mut out = Vec::new();
        for row in matrix {
            let (head, rest) = row.pats.split_first().expect("nonempty row");
            match head {
                PePat::Var(y) => {
                    let body = Subst::mono_one(y.clone(), var(x.clone())).apply(&row.body);
                    out.push(Row { pats: rest.to_vec(), body, origin: row.origin });
                }
                _ => {
                    debug_assert!(false, "non-variable pattern at a continuation column");
                }
            }
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn project_request(
        &mut self,
        matrix: &[Row],
        command: &str,
        arg_vars: &[Name],
        cont_var: &Name,
        sig: &CommandSig,
        peg: &Peg,
    ) -> Vec<Row> {
        let mut out = Vec::new();
        for row in matrix {
            let (head, rest) = row.pats.split_first().expect("nonempty row");
            match head {
                PePat::Request { command: c, args, cont_name, cont_ty } if c == command => {
                    let (adapter, adapter_ty) = self.continuation_adapter(cont_var, cont_ty);
                    let body =
                        self.bind_value(cont_name, adapter, adapter_ty, row.body.clone(), peg);
                    let mut pats = vec![PePat::Var(cont_var.clone())];
                    pats.extend(args.iter().cloned());
                    pats.extend(rest.iter().cloned());
                    out.push(Row { pats, body, origin: row.origin });
                }
                PePat::CatchAll { name, ty } => {
                    // x = {z (c ȳ)}: a suspension reissuing the command to
                    // the rebound continuation.
                    let reissue = app(
                        var(cont_var.clone()),
                        vec![app(
                            mk(TermKind::Command(command.to_string())),
                            arg_vars.iter().cloned().map(var).collect(),
                        )],
                    );
                    let body = self.bind_value(
                        name,
                        lambda(vec![], reissue),
                        tr_value(ty, self.mode),
                        row.body.clone(),
                        peg,
                    );
                    let mut pats = vec![PePat::Var(cont_var.clone())];
                    pats.extend(arg_vars.iter().cloned().map(PePat::Var));
                    pats.extend(rest.iter().cloned());
                    out.push(Row { pats, body, origin: row.origin });
                }
                _ => {}
            }
        }
        let _ = sig;
        out
    }
}

fn headless(matrix: &[Row]) -> bool {
    matrix.iter().all(|row| {
        matches!(row.pats.first(), Some(PePat::Var(_)) | Some(PePat::CatchAll { .. }) | None)
    })
}

fn prepend_any(w: Witness) -> Witness {
    let mut out = vec![WitnessPat::Any];
    out.extend(w.0);
    Witness(out)
}

/// A literal outside the given set, for default-branch witnesses.
fn fresh_literal(used: &[Literal]) -> Literal {
    match used.first() {
        Some(Literal::Int(_)) | None => {
            let mut n = 0;
            loop {
                if !used.iter().any(|l| matches!(l, Literal::Int(m) if *m == n)) {
                    return Literal::Int(n);
                }
                n += 1;
            }
        }
        Some(Literal::Char(_)) => {
            for c in ('a'..='z').chain('A'..='Z').chain('0'..='9').chain([' ', '?']) {
                if !used.iter().any(|l| matches!(l, Literal::Char(m) if *m == c)) {
                    return Literal::Char(c);
                }
            }
            Literal::Char('\u{1}')
        }
    }
}
