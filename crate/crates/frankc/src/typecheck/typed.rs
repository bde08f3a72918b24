//! The checked program: source shape annotated at every node with its type,
//! every polymorphic use with its solved instantiation, and every computation
//! with its computation type. This is the input to elaboration.

use crate::span::Span;
use crate::syntax::*;

#[derive(Clone, Debug)]
pub enum TUse {
    Var {
        name: Name,
        ty: ValueType,
        span: Span,
    },
    /// A polymorphic variable with its instantiation, one argument per binder.
    Poly {
        name: Name,
        poly: PolyType,
        args: Vec<TypeArg>,
        ty: ValueType,
        span: Span,
    },
    /// `intAdd` and friends: polymorphic, but backed by a reduction rule.
    Builtin {
        name: Name,
        poly: PolyType,
        args: Vec<TypeArg>,
        ty: ValueType,
        span: Span,
    },
    Command {
        name: Name,
        sig: CommandSig,
        ambient: Ability,
        ty: ValueType,
        span: Span,
    },
    App {
        head: Box<TUse>,
        /// The head's computation type after instantiation.
        head_comp: CompType,
        args: Vec<TConstruction>,
        ambient: Ability,
        ty: ValueType,
        span: Span,
    },
}

impl TUse {
    pub fn ty(&self) -> &ValueType {
        match self {
            TUse::Var { ty, .. }
            | TUse::Poly { ty, .. }
            | TUse::Builtin { ty, .. }
            | TUse::Command { ty, .. }
            | TUse::App { ty, .. } => ty,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            TUse::Var { span, .. }
            | TUse::Poly { span, .. }
            | TUse::Builtin { span, .. }
            | TUse::Command { span, .. }
            | TUse::App { span, .. } => *span,
        }
    }
}

#[derive(Clone, Debug)]
pub enum TConstruction {
    Use(Box<TUse>),
    Ctor {
        name: Name,
        data: Name,
        data_args: Vec<TypeArg>,
        arg_types: Vec<ValueType>,
        args: Vec<TConstruction>,
        span: Span,
    },
    IntLit(i64, Span),
    CharLit(char, Span),
    Suspend(TComputation, Span),
    Let {
        name: Name,
        poly: PolyType,
        bound: Box<TConstruction>,
        body: Box<TConstruction>,
        span: Span,
    },
    LetRec {
        bindings: Vec<(Name, PolyType, TComputation)>,
        body: Box<TConstruction>,
        span: Span,
    },
}

impl TConstruction {
    pub fn span(&self) -> Span {
        match self {
            TConstruction::Use(u) => u.span(),
            TConstruction::Ctor { span, .. }
            | TConstruction::IntLit(_, span)
            | TConstruction::CharLit(_, span)
            | TConstruction::Suspend(_, span)
            | TConstruction::Let { span, .. }
            | TConstruction::LetRec { span, .. } => *span,
        }
    }
}

/// A computation together with the type it was checked at; the ambient for
/// its clause bodies is the peg's ability.
#[derive(Clone, Debug)]
pub struct TComputation {
    pub clauses: Vec<TClause>,
    pub comp: CompType,
}

#[derive(Clone, Debug)]
pub struct TClause {
    pub patterns: Vec<TCompPattern>,
    pub body: TConstruction,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct TBinder {
    pub name: Name,
    pub ty: ValueType,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub enum TCompPattern {
    Value(TValuePattern),
    Request {
        command: Name,
        sig: CommandSig,
        args: Vec<TValuePattern>,
        continuation: TBinder,
        span: Span,
    },
    CatchAll(TBinder, Span),
}

#[derive(Clone, Debug)]
pub enum TValuePattern {
    Var(TBinder),
    Ctor {
        name: Name,
        data: Name,
        data_args: Vec<TypeArg>,
        args: Vec<TValuePattern>,
        span: Span,
    },
    IntLit(i64, Span),
    CharLit(char, Span),
}

/// The whole checked program.
#[derive(Clone, Debug)]
pub struct TypedProgram {
    pub decls: Declarations,
    pub term: TConstruction,
    /// The type of `term` under the top-level ambient.
    pub ty: ValueType,
    pub top_ability: Ability,
    pub has_main: bool,
}
