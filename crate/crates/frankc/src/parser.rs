//! Parser for the concrete syntax: one top-level item per logical line,
//! where a logical line continues while subsequent physical lines are
//! indented past column one.

use crate::lexer::{lex, Token, TokenKind};
use crate::span::Span;

// ---------------------------------------------------------------------------
// Surface syntax
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub enum SValueType {
    /// `Ident R̄`: a data type, type variable, or not-yet-resolved name.
    Ident(String, Vec<STypeArg>, Span),
    Thunk(Box<SCompType>, Span),
}

#[derive(Clone, Debug, PartialEq)]
pub enum STypeArg {
    Ty(SValueType),
    Ab(SAbility, Span),
}

/// `[0, I R̄, ...]` or `[I R̄, ...]`; `closed` records an explicit `0` head.
#[derive(Clone, Debug, PartialEq)]
pub struct SAbility {
    pub closed: bool,
    pub instances: Vec<(String, Vec<STypeArg>, Span)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SAdjustment {
    pub instances: Vec<(String, Vec<STypeArg>, Span)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SPort {
    pub adjustment: Option<SAdjustment>,
    pub ty: SValueType,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SPeg {
    pub ability: Option<SAbility>,
    pub ty: SValueType,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SCompType {
    pub ports: Vec<SPort>,
    pub peg: SPeg,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SExpr {
    Ident(String, Span),
    App(Box<SExpr>, Vec<SExpr>, Span),
    Suspend(Vec<SClause>, Span),
    Seq(Box<SExpr>, Box<SExpr>, Span),
    Add(Box<SExpr>, Box<SExpr>, Span),
    IntLit(i64, Span),
    CharLit(char, Span),
    StrLit(String, Span),
}

impl SExpr {
    pub fn span(&self) -> Span {
        match self {
            SExpr::Ident(_, s)
            | SExpr::App(_, _, s)
            | SExpr::Suspend(_, s)
            | SExpr::Seq(_, _, s)
            | SExpr::Add(_, _, s)
            | SExpr::IntLit(_, s)
            | SExpr::CharLit(_, s)
            | SExpr::StrLit(_, s) => *s,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SClause {
    pub patterns: Vec<SPattern>,
    pub body: SExpr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SPattern {
    /// A lowercase identifier: a variable or a nullary constructor, resolved
    /// against the declarations during desugaring.
    Ident(String, Span),
    Wildcard(Span),
    Ctor(String, Vec<SPattern>, Span),
    IntLit(i64, Span),
    CharLit(char, Span),
    Request { command: String, args: Vec<SPattern>, continuation: Option<String>, span: Span },
    /// `<x>`; `<_>` is represented with `None`.
    CatchAll(Option<String>, Span),
}

impl SPattern {
    pub fn span(&self) -> Span {
        match self {
            SPattern::Ident(_, s)
            | SPattern::Wildcard(s)
            | SPattern::Ctor(_, _, s)
            | SPattern::IntLit(_, s)
            | SPattern::CharLit(_, s)
            | SPattern::Request { span: s, .. }
            | SPattern::CatchAll(_, s) => *s,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Data {
        name: String,
        params: Vec<String>,
        ctors: Vec<(String, Vec<SValueType>, Span)>,
        span: Span,
    },
    Interface {
        name: String,
        params: Vec<String>,
        commands: Vec<(String, Vec<SValueType>, SValueType, Span)>,
        span: Span,
    },
    Signature {
        name: String,
        ty: SCompType,
        span: Span,
    },
    Equation {
        name: String,
        nullary: bool,
        patterns: Vec<SPattern>,
        body: SExpr,
        span: Span,
    },
}

pub type SurfaceProgram = Vec<Item>;

#[derive(Clone, Debug)]
pub struct ParseError {
    pub message: String,
    pub span: Span,
}

pub fn parse_program(source: &str) -> Result<SurfaceProgram, ParseError> {
    let tokens = lex(source).map_err(|e| ParseError { message: e.message, span: e.span })?;
    let mut items = Vec::new();
    for group in split_items(&tokens) {
        let mut p = Parser { toks: group, pos: 0 };
        items.push(p.item()?);
    }
    Ok(items)
}

/// An item starts at column one; more-indented lines continue it.
fn split_items(tokens: &[Token]) -> Vec<&[Token]> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..tokens.len() {
        if tokens[i].span.col == 1 {
            groups.push(&tokens[start..i]);
            start = i;
        }
    }
    if start < tokens.len() {
        groups.push(&tokens[start..]);
    }
    groups
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&TokenKind> {
        self.toks.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, offset: usize) -> Option<&TokenKind> {
        self.toks.get(self.pos + offset).map(|t| &t.kind)
    }

    fn span(&self) -> Span {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| t.span)
            .unwrap_or_else(Span::synthetic)
    }

    fn next(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<Span, ParseError> {
        let span = self.span();
        match self.next() {
            Some(t) if t.kind == kind => Ok(t.span),
            Some(t) => Err(ParseError {
                message: format!("expected `{kind}`, found `{}`", t.kind),
                span: t.span,
            }),
            None => Err(ParseError { message: format!("expected `{kind}`"), span }),
        }
    }

    fn lower(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        let span = self.span();
        match self.next() {
            Some(Token { kind: TokenKind::Lower(s), span }) => Ok((s.clone(), *span)),
            Some(t) => Err(ParseError {
                message: format!("expected {what}, found `{}`", t.kind),
                span: t.span,
            }),
            None => Err(ParseError { message: format!("expected {what}"), span }),
        }
    }

    fn upper(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        let span = self.span();
        match self.next() {
            Some(Token { kind: TokenKind::Upper(s), span }) => Ok((s.clone(), *span)),
            Some(t) => Err(ParseError {
                message: format!("expected {what}, found `{}`", t.kind),
                span: t.span,
            }),
            None => Err(ParseError { message: format!("expected {what}"), span }),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(ParseError {
                message: format!("unexpected `{}`", self.toks[self.pos].kind),
                span: self.toks[self.pos].span,
            })
        }
    }

    // -- items --------------------------------------------------------------

    fn item(&mut self) -> Result<Item, ParseError> {
        let start = self.span();
        match self.peek() {
            Some(TokenKind::Keyword("data")) => {
                self.next();
                let (name, _) = self.upper("data type name")?;
                let mut params = Vec::new();
                while let Some(TokenKind::Upper(p)) = self.peek() {
                    params.push(p.clone());
                    self.next();
                }
                self.expect(TokenKind::Equals)?;
                let mut ctors = Vec::new();
                if !self.at_end() {
                    loop {
                        let (cname, cspan) = self.lower("constructor name")?;
                        let mut args = Vec::new();
                        while self.starts_type_atom() {
                            args.push(self.type_atom()?);
                        }
                        ctors.push((cname, args, cspan));
                        if !self.eat(&TokenKind::Bar) {
                            break;
                        }
                    }
                }
                self.expect_end()?;
                Ok(Item::Data { name, params, ctors, span: start })
            }
            Some(TokenKind::Keyword("interface")) => {
                self.next();
                let (name, _) = self.upper("interface name")?;
                let mut params = Vec::new();
                while let Some(TokenKind::Upper(p)) = self.peek() {
                    params.push(p.clone());
                    self.next();
                }
                self.expect(TokenKind::Equals)?;
                let mut commands = Vec::new();
                loop {
                    let (cname, cspan) = self.lower("command name")?;
                    self.expect(TokenKind::Colon)?;
                    let mut tys = vec![self.type_atom()?];
                    while self.eat(&TokenKind::Arrow) {
                        tys.push(self.type_atom()?);
                    }
                    let result = tys.pop().unwrap();
                    commands.push((cname, tys, result, cspan));
                    if !self.eat(&TokenKind::Bar) {
                        break;
                    }
                }
                self.expect_end()?;
                Ok(Item::Interface { name, params, commands, span: start })
            }
            Some(TokenKind::Lower(_)) => {
                if self.peek_at(1) == Some(&TokenKind::Colon) {
                    let (name, _) = self.lower("name")?;
                    self.next(); // colon
                    let ty = self.comp_type()?;
                    self.expect_end()?;
                    Ok(Item::Signature { name, ty, span: start })
                } else {
                    let (name, _) = self.lower("name")?;
                    let nullary = self.eat(&TokenKind::Bang);
                    let mut patterns = Vec::new();
                    if !nullary {
                        while self.peek() != Some(&TokenKind::Equals) && !self.at_end() {
                            patterns.push(self.pattern_atom()?);
                        }
                    }
                    self.expect(TokenKind::Equals)?;
                    let body = self.expr()?;
                    self.expect_end()?;
                    Ok(Item::Equation { name, nullary, patterns, body, span: start })
                }
            }
            Some(other) => Err(ParseError {
                message: format!("expected a declaration, signature or equation, found `{other}`"),
                span: start,
            }),
            None => Err(ParseError { message: "empty item".into(), span: start }),
        }
    }

    // -- types --------------------------------------------------------------

    fn starts_type_atom(&self) -> bool {
        matches!(self.peek(), Some(TokenKind::Upper(_)) | Some(TokenKind::LBrace) | Some(TokenKind::LParen))
    }

    /// An atomic value type: an unapplied name, a suspension, or parens.
    fn type_atom(&mut self) -> Result<SValueType, ParseError> {
        let span = self.span();
        match self.peek() {
            Some(TokenKind::Upper(_)) => {
                let (name, span) = self.upper("type name")?;
                Ok(SValueType::Ident(name, Vec::new(), span))
            }
            Some(TokenKind::LBrace) => {
                self.next();
                let comp = self.comp_type()?;
                self.expect(TokenKind::RBrace)?;
                Ok(SValueType::Thunk(Box::new(comp), span))
            }
            Some(TokenKind::LParen) => {
                self.next();
                let ty = self.applied_type()?;
                self.expect(TokenKind::RParen)?;
                Ok(ty)
            }
            _ => Err(ParseError { message: "expected a type".into(), span }),
        }
    }

    /// `Upper R̄` with juxtaposed arguments, or any atom.
    fn applied_type(&mut self) -> Result<SValueType, ParseError> {
        match self.peek() {
            Some(TokenKind::Upper(_)) => {
                let (name, span) = self.upper("type name")?;
                let mut args = Vec::new();
                loop {
                    if self.starts_type_atom() {
                        args.push(STypeArg::Ty(self.type_atom()?));
                    } else if self.peek() == Some(&TokenKind::LBracket) {
                        let aspan = self.span();
                        let ab = self.bracket_ability()?;
                        args.push(STypeArg::Ab(ab, aspan));
                    } else {
                        break;
                    }
                }
                Ok(SValueType::Ident(name, args, span))
            }
            _ => self.type_atom(),
        }
    }

    /// `I R̄` inside an ability or adjustment.
    fn instance(&mut self) -> Result<(String, Vec<STypeArg>, Span), ParseError> {
        let (name, span) = self.upper("interface name")?;
        let mut args = Vec::new();
        loop {
            if self.starts_type_atom() {
                args.push(STypeArg::Ty(self.type_atom()?));
            } else if self.peek() == Some(&TokenKind::LBracket) {
                let aspan = self.span();
                let ab = self.bracket_ability()?;
                args.push(STypeArg::Ab(ab, aspan));
            } else {
                break;
            }
        }
        Ok((name, args, span))
    }

    fn bracket_ability(&mut self) -> Result<SAbility, ParseError> {
        self.expect(TokenKind::LBracket)?;
        let mut closed = false;
        let mut instances = Vec::new();
        if self.eat(&TokenKind::Int(0)) {
            closed = true;
            if self.eat(&TokenKind::Comma) {
                loop {
                    instances.push(self.instance()?);
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
            }
        } else if self.peek() != Some(&TokenKind::RBracket) {
            loop {
                instances.push(self.instance()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(TokenKind::RBracket)?;
        Ok(SAbility { closed, instances })
    }

    fn chevron_adjustment(&mut self) -> Result<SAdjustment, ParseError> {
        self.expect(TokenKind::Lt)?;
        let mut instances = Vec::new();
        if self.peek() != Some(&TokenKind::Gt) {
            loop {
                instances.push(self.instance()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(TokenKind::Gt)?;
        Ok(SAdjustment { instances })
    }

    /// A computation type: `port -> ... -> peg`, or just a peg.
    fn comp_type(&mut self) -> Result<SCompType, ParseError> {
        #[derive(Debug)]
        enum Piece {
            Plain(SValueType),
            Adjusted(SAdjustment, SValueType, Span),
            Bracketed(SAbility, SValueType),
        }
        let mut pieces = Vec::new();
        loop {
            let span = self.span();
            let piece = match self.peek() {
                Some(TokenKind::Lt) => {
                    let adj = self.chevron_adjustment()?;
                    Piece::Adjusted(adj, self.applied_type()?, span)
                }
                Some(TokenKind::LBracket) => {
                    let ab = self.bracket_ability()?;
                    Piece::Bracketed(ab, self.applied_type()?)
                }
                _ => Piece::Plain(self.applied_type()?),
            };
            pieces.push(piece);
            if !self.eat(&TokenKind::Arrow) {
                break;
            }
        }
        let last = pieces.pop().unwrap();
        let peg = match last {
            Piece::Plain(ty) => SPeg { ability: None, ty },
            Piece::Bracketed(ab, ty) => SPeg { ability: Some(ab), ty },
            Piece::Adjusted(_, _, span) => {
                return Err(ParseError {
                    message: "an adjustment cannot appear on a peg".into(),
                    span,
                })
            }
        };
        let mut ports = Vec::new();
        for piece in pieces {
            match piece {
                Piece::Plain(ty) => ports.push(SPort { adjustment: None, ty }),
                Piece::Adjusted(adj, ty, _) => ports.push(SPort { adjustment: Some(adj), ty }),
                Piece::Bracketed(ab, ty) => {
                    // An argument written `[Σ]A` has no surface meaning; pegs
                    // only close computation types.
                    let _ = (ab, ty);
                    return Err(ParseError {
                        message: "a bracketed ability cannot appear on an argument type".into(),
                        span: self.span(),
                    });
                }
            }
        }
        Ok(SCompType { ports, peg })
    }

    // -- patterns -----------------------------------------------------------

    fn pattern_atom(&mut self) -> Result<SPattern, ParseError> {
        let span = self.span();
        match self.peek().cloned() {
            Some(TokenKind::Lower(name)) => {
                self.next();
                Ok(SPattern::Ident(name, span))
            }
            Some(TokenKind::Underscore) => {
                self.next();
                Ok(SPattern::Wildcard(span))
            }
            Some(TokenKind::Int(n)) => {
                self.next();
                Ok(SPattern::IntLit(n, span))
            }
            Some(TokenKind::Char(c)) => {
                self.next();
                Ok(SPattern::CharLit(c, span))
            }
            Some(TokenKind::LParen) => {
                self.next();
                let inner = self.pattern_applied()?;
                self.expect(TokenKind::RParen)?;
                Ok(inner)
            }
            Some(TokenKind::Lt) => {
                self.next();
                match self.peek().cloned() {
                    Some(TokenKind::Underscore) => {
                        self.next();
                        self.expect(TokenKind::Gt)?;
                        Ok(SPattern::CatchAll(None, span))
                    }
                    Some(TokenKind::Lower(name)) => {
                        self.next();
                        if self.eat(&TokenKind::Gt) {
                            return Ok(SPattern::CatchAll(Some(name), span));
                        }
                        let mut args = Vec::new();
                        while self.peek() != Some(&TokenKind::Arrow) {
                            args.push(self.pattern_atom()?);
                        }
                        self.expect(TokenKind::Arrow)?;
                        let continuation = match self.next() {
                            Some(Token { kind: TokenKind::Lower(z), .. }) => Some(z.clone()),
                            Some(Token { kind: TokenKind::Underscore, .. }) => None,
                            other => {
                                return Err(ParseError {
                                    message: format!(
                                        "expected a continuation variable, found `{}`",
                                        other.map(|t| t.kind.to_string()).unwrap_or_default()
                                    ),
                                    span,
                                })
                            }
                        };
                        self.expect(TokenKind::Gt)?;
                        Ok(SPattern::Request { command: name, args, continuation, span })
                    }
                    other => Err(ParseError {
                        message: format!(
                            "expected a request or catch-all pattern, found `{}`",
                            other.map(|k| k.to_string()).unwrap_or_default()
                        ),
                        span,
                    }),
                }
            }
            other => Err(ParseError {
                message: format!(
                    "expected a pattern, found `{}`",
                    other.map(|k| k.to_string()).unwrap_or_default()
                ),
                span,
            }),
        }
    }

    /// Inside parens a lowercase head with arguments is a constructor pattern.
    fn pattern_applied(&mut self) -> Result<SPattern, ParseError> {
        let span = self.span();
        if let Some(TokenKind::Lower(name)) = self.peek().cloned() {
            self.next();
            let mut args = Vec::new();
            while self.peek() != Some(&TokenKind::RParen) && !self.at_end() {
                args.push(self.pattern_atom()?);
            }
            if args.is_empty() {
                Ok(SPattern::Ident(name, span))
            } else {
                Ok(SPattern::Ctor(name, args, span))
            }
        } else {
            self.pattern_atom()
        }
    }

    // -- expressions ----------------------------------------------------------

    fn expr(&mut self) -> Result<SExpr, ParseError> {
        let span = self.span();
        let left = self.sum()?;
        if self.eat(&TokenKind::Semi) {
            let right = self.expr()?;
            Ok(SExpr::Seq(Box::new(left), Box::new(right), span))
        } else {
            Ok(left)
        }
    }

    fn sum(&mut self) -> Result<SExpr, ParseError> {
        let span = self.span();
        let mut left = self.application()?;
        while self.eat(&TokenKind::Plus) {
            let right = self.application()?;
            left = SExpr::Add(Box::new(left), Box::new(right), span);
        }
        Ok(left)
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Some(TokenKind::Lower(_))
                | Some(TokenKind::Int(_))
                | Some(TokenKind::Char(_))
                | Some(TokenKind::Str(_))
                | Some(TokenKind::LParen)
                | Some(TokenKind::LBrace)
        )
    }

    fn application(&mut self) -> Result<SExpr, ParseError> {
        let span = self.span();
        let head = self.atom_with_bang()?;
        let mut args = Vec::new();
        while self.starts_atom() {
            args.push(self.atom_with_bang()?);
        }
        if args.is_empty() {
            Ok(head)
        } else {
            Ok(SExpr::App(Box::new(head), args, span))
        }
    }

    fn atom_with_bang(&mut self) -> Result<SExpr, ParseError> {
        let mut e = self.atom()?;
        while self.peek() == Some(&TokenKind::Bang) {
            let span = self.span();
            self.next();
            e = SExpr::App(Box::new(e), Vec::new(), span);
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<SExpr, ParseError> {
        let span = self.span();
        match self.peek().cloned() {
            Some(TokenKind::Lower(name)) => {
                self.next();
                Ok(SExpr::Ident(name, span))
            }
            Some(TokenKind::Int(n)) => {
                self.next();
                Ok(SExpr::IntLit(n, span))
            }
            Some(TokenKind::Char(c)) => {
                self.next();
                Ok(SExpr::CharLit(c, span))
            }
            Some(TokenKind::Str(s)) => {
                self.next();
                Ok(SExpr::StrLit(s, span))
            }
            Some(TokenKind::LParen) => {
                self.next();
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            Some(TokenKind::LBrace) => {
                self.next();
                let mut clauses = Vec::new();
                if self.peek() != Some(&TokenKind::RBrace) {
                    loop {
                        clauses.push(self.clause()?);
                        if !self.eat(&TokenKind::Bar) {
                            break;
                        }
                    }
                }
                self.expect(TokenKind::RBrace)?;
                Ok(SExpr::Suspend(clauses, span))
            }
            other => Err(ParseError {
                message: format!(
                    "expected an expression, found `{}`",
                    other.map(|k| k.to_string()).unwrap_or_default()
                ),
                span,
            }),
        }
    }

    /// A suspension clause: `p̄ -> body` or a bare body.
    fn clause(&mut self) -> Result<SClause, ParseError> {
        let span = self.span();
        let save = self.pos;
        // Try a pattern sequence followed by an arrow first; fall back to a
        // bare nullary body.
        let mut patterns = Vec::new();
        let as_patterns = loop {
            if self.peek() == Some(&TokenKind::Arrow) {
                break !patterns.is_empty();
            }
            match self.pattern_atom() {
                Ok(p) => patterns.push(p),
                Err(_) => break false,
            }
        };
        if as_patterns {
            self.expect(TokenKind::Arrow)?;
            let body = self.expr()?;
            Ok(SClause { patterns, body, span })
        } else {
            self.pos = save;
            let body = self.expr()?;
            Ok(SClause { patterns: Vec::new(), body, span })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_state_equations() {
        let src = "state : S -> <State S>X -> X\n\
                   state _ x            = x\n\
                   state s <get -> k>   = state s (k s)\n\
                   state _ <put s -> k> = state s (k unit)\n";
        let items = parse_program(src).unwrap();
        assert_eq!(items.len(), 4);
        match &items[2] {
            Item::Equation { name, patterns, .. } => {
                assert_eq!(name, "state");
                assert_eq!(patterns.len(), 2);
                assert!(matches!(&patterns[0], SPattern::Ident(n, _) if n == "s"));
                assert!(matches!(
                    &patterns[1],
                    SPattern::Request { command, args, continuation: Some(z), .. }
                        if command == "get" && args.is_empty() && z == "k"
                ));
            }
            other => panic!("expected an equation, got {other:?}"),
        }
    }

    #[test]
    fn parse_if_application() {
        let items = parse_program("main! = if fire! {launch missiles} {unit}").unwrap();
        match &items[0] {
            Item::Equation { nullary, body, .. } => {
                assert!(nullary);
                match body {
                    SExpr::App(head, args, _) => {
                        assert!(matches!(&**head, SExpr::Ident(n, _) if n == "if"));
                        assert_eq!(args.len(), 3);
                        assert!(matches!(&args[0], SExpr::App(f, a, _)
                            if matches!(&**f, SExpr::Ident(n, _) if n == "fire") && a.is_empty()));
                        assert!(matches!(&args[1], SExpr::Suspend(cl, _) if cl.len() == 1));
                    }
                    other => panic!("unexpected body {other:?}"),
                }
            }
            other => panic!("expected an equation, got {other:?}"),
        }
    }

    #[test]
    fn parse_empty_data() {
        let items = parse_program("data Zero =").unwrap();
        match &items[0] {
            Item::Data { name, ctors, .. } => {
                assert_eq!(name, "Zero");
                assert!(ctors.is_empty());
            }
            other => panic!("expected a data decl, got {other:?}"),
        }
    }

    #[test]
    fn parse_interface() {
        let items = parse_program("interface State S = get : S | put : S -> Unit").unwrap();
        match &items[0] {
            Item::Interface { name, params, commands, .. } => {
                assert_eq!(name, "State");
                assert_eq!(params, &vec!["S".to_string()]);
                assert_eq!(commands.len(), 2);
                assert_eq!(commands[1].0, "put");
                assert_eq!(commands[1].1.len(), 1);
            }
            other => panic!("expected an interface, got {other:?}"),
        }
    }

    #[test]
    fn parse_signature_with_ability_args() {
        let src = "input : Log [LookAhead, Abort, Console] X -> Buffer -> <LookAhead, Abort>X -> [Console]X";
        let items = parse_program(src).unwrap();
        match &items[0] {
            Item::Signature { ty, .. } => {
                assert_eq!(ty.ports.len(), 3);
                match &ty.ports[0].ty {
                    SValueType::Ident(n, args, _) => {
                        assert_eq!(n, "Log");
                        assert_eq!(args.len(), 2);
                        assert!(matches!(&args[0], STypeArg::Ab(ab, _) if ab.instances.len() == 3));
                    }
                    other => panic!("unexpected type {other:?}"),
                }
                assert!(ty.ports[2].adjustment.as_ref().unwrap().instances.len() == 2);
                assert!(ty.peg.ability.as_ref().unwrap().instances.len() == 1);
            }
            other => panic!("expected a signature, got {other:?}"),
        }
    }

    #[test]
    fn parse_layout_continuation() {
        let src = "spacer : [Send (List Char),\n          Receive (List Char)]Unit\nspacer! = send receive!; send \" \"; spacer!";
        let items = parse_program(src).unwrap();
        assert_eq!(items.len(), 2);
        assert!(matches!(&items[0], Item::Signature { .. }));
        assert!(matches!(&items[1], Item::Equation { nullary: true, .. }));
    }

    #[test]
    fn parse_clause_literals() {
        let src = "zeros n = on peek! { '0' -> accept!; zeros (n+1)\n   | ' ' -> accept!; n\n   | c   -> abort!}";
        let items = parse_program(src).unwrap();
        match &items[0] {
            Item::Equation { body, .. } => match body {
                SExpr::App(_, args, _) => match &args[1] {
                    SExpr::Suspend(clauses, _) => {
                        assert_eq!(clauses.len(), 3);
                        assert!(matches!(&clauses[0].patterns[0], SPattern::CharLit('0', _)));
                        assert!(matches!(&clauses[0].body, SExpr::Seq(_, _, _)));
                    }
                    other => panic!("unexpected arg {other:?}"),
                },
                other => panic!("unexpected body {other:?}"),
            },
            other => panic!("expected an equation, got {other:?}"),
        }
    }

    #[test]
    fn parse_empty_suspension_and_bang_chain() {
        let items = parse_program("abort! = on aborting! {}").unwrap();
        match &items[0] {
            Item::Equation { body, .. } => match body {
                SExpr::App(head, args, _) => {
                    assert!(matches!(&**head, SExpr::Ident(n, _) if n == "on"));
                    assert!(matches!(&args[1], SExpr::Suspend(cl, _) if cl.is_empty()));
                }
                other => panic!("unexpected body {other:?}"),
            },
            other => panic!("expected an equation, got {other:?}"),
        }
    }

    #[test]
    fn parse_error_has_span() {
        let err = parse_program("f = }").unwrap_err();
        assert!(err.span.line >= 1);
    }
}
