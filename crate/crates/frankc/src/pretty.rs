//! Printing desugared programs back to surface syntax, and alpha-equivalence
//! over desugared programs. Together these witness the parser round trip:
//! printing and reparsing yields an alpha-equivalent program.

use crate::desugar::{is_fresh_effect_var, is_wildcard_var, Program};
use crate::syntax::*;

pub fn show_program(p: &Program) -> String {
    let mut out = String::new();
    for data in &p.decls.datas {
        if data.builtin {
            continue;
        }
        out.push_str("data ");
        out.push_str(&data.name);
        for param in &data.params {
            if let TypeParam::Val(v) = param {
                out.push(' ');
                out.push_str(v);
            }
        }
        out.push_str(" =");
        for (i, ctor) in data.ctors.iter().enumerate() {
            out.push_str(if i == 0 { " " } else { " | " });
            out.push_str(&ctor.name);
            for arg in &ctor.args {
                out.push(' ');
                out.push_str(&value_atom(arg));
            }
        }
        out.push('\n');
    }
    for iface in &p.decls.interfaces {
        out.push_str("interface ");
        out.push_str(&iface.name);
        for param in &iface.params {
            if let TypeParam::Val(v) = param {
                out.push(' ');
                out.push_str(v);
            }
        }
        out.push_str(" = ");
        for (i, cmd) in iface.commands.iter().enumerate() {
            if i > 0 {
                out.push_str(" | ");
            }
            out.push_str(&cmd.name);
            out.push_str(" : ");
            for arg in &cmd.args {
                out.push_str(&value_atom(arg));
                out.push_str(" -> ");
            }
            out.push_str(&value_atom(&cmd.result));
        }
        out.push('\n');
    }
    if let Construction::LetRec { bindings, .. } = &p.term {
        for (name, poly, comp) in bindings {
            out.push_str(name);
            out.push_str(" : ");
            match &poly.body {
                ValueType::Thunk(c) => out.push_str(&comp_type(c)),
                other => out.push_str(&value_atom(other)),
            }
            out.push('\n');
            for clause in &comp.clauses {
                out.push_str(name);
                if clause.patterns.is_empty() {
                    out.push('!');
                } else {
                    for pat in &clause.patterns {
                        out.push(' ');
                        out.push_str(&comp_pattern(pat));
                    }
                }
                out.push_str(" = ");
                out.push_str(&construction(&clause.body, false));
                out.push('\n');
            }
        }
    }
    out
}

fn value_atom(t: &ValueType) -> String {
    match t {
        ValueType::Data(d, args) if args.is_empty() => d.clone(),
        ValueType::Data(_, _) => format!("({})", value_applied(t)),
        ValueType::Thunk(c) => format!("{{{}}}", comp_type(c)),
        ValueType::Var(v) => v.clone(),
        ValueType::Meta(id) => format!("?t{id}"),
    }
}

fn value_applied(t: &ValueType) -> String {
    match t {
        ValueType::Data(d, args) => {
            let mut s = d.clone();
            for a in args {
                s.push(' ');
                s.push_str(&type_arg(a));
            }
            s
        }
        other => value_atom(other),
    }
}

fn type_arg(a: &TypeArg) -> String {
    match a {
        TypeArg::Val(v) => value_atom(v),
        TypeArg::Ab(ab) => ability(ab),
    }
}

fn ability(ab: &Ability) -> String {
    let mut parts = Vec::new();
    let closed = match &ab.head {
        AbilityHead::Empty => true,
        AbilityHead::Var(v) => {
            debug_assert!(is_fresh_effect_var(v), "effect variables have no surface form");
            false
        }
        AbilityHead::Meta(_) => false,
    };
    if closed {
        parts.push("0".to_string());
    }
    for inst in &ab.instances {
        let mut s = inst.interface.clone();
        for a in &inst.args {
            s.push(' ');
            s.push_str(&type_arg(a));
        }
        parts.push(s);
    }
    format!("[{}]", parts.join(", "))
}

fn comp_type(c: &CompType) -> String {
    let mut s = String::new();
    for port in &c.ports {
        if !port.adjustment.is_identity() {
            let insts: Vec<String> = port
                .adjustment
                .instances
                .iter()
                .map(|inst| {
                    let mut t = inst.interface.clone();
                    for a in &inst.args {
                        t.push(' ');
                        t.push_str(&type_arg(a));
                    }
                    t
                })
                .collect();
            s.push_str(&format!("<{}>", insts.join(", ")));
        }
        s.push_str(&value_atom(&port.value));
        s.push_str(" -> ");
    }
    s.push_str(&ability(&c.peg.ability));
    s.push_str(&value_atom(&c.peg.value));
    s
}

fn comp_pattern(p: &CompPattern) -> String {
    match p {
        CompPattern::Value(vp) => value_pattern(vp, true),
        CompPattern::Request { command, args, continuation, .. } => {
            let mut s = format!("<{command}");
            for a in args {
                s.push(' ');
                s.push_str(&value_pattern(a, true));
            }
            s.push_str(" -> ");
            s.push_str(&binder(continuation));
            s.push('>');
            s
        }
        CompPattern::CatchAll(b, _) => format!("<{}>", binder(b)),
    }
}

fn binder(b: &Binder) -> String {
    if is_wildcard_var(&b.name) {
        "_".to_string()
    } else {
        b.name.clone()
    }
}

fn value_pattern(p: &ValuePattern, atom: bool) -> String {
    match p {
        ValuePattern::Var(b) => binder(b),
        ValuePattern::Ctor(k, args, _) if args.is_empty() => k.clone(),
        ValuePattern::Ctor(k, args, _) => {
            let mut s = k.clone();
            for a in args {
                s.push(' ');
                s.push_str(&value_pattern(a, true));
            }
            if atom {
                format!("({s})")
            } else {
                s
            }
        }
        ValuePattern::IntLit(n, _) => n.to_string(),
        ValuePattern::CharLit(c, _) => crate::core::print::char_literal(*c),
    }
}

fn use_term(u: &Use, atom: bool) -> String {
    match u {
        Use::Ident(n, _) => n.clone(),
        Use::App(head, args, _) if args.is_empty() => format!("{}!", use_term(head, true)),
        Use::App(head, args, _) => {
            let mut s = use_term(head, true);
            for a in args {
                s.push(' ');
                s.push_str(&construction(a, true));
            }
            if atom {
                format!("({s})")
            } else {
                s
            }
        }
    }
}

fn construction(n: &Construction, atom: bool) -> String {
    match n {
        Construction::Use(u) => use_term(u, atom),
        Construction::Ctor(k, args, _) if args.is_empty() => k.clone(),
        Construction::Ctor(k, args, _) => {
            let mut s = k.clone();
            for a in args {
                s.push(' ');
                s.push_str(&construction(a, true));
            }
            if atom {
                format!("({s})")
            } else {
                s
            }
        }
        Construction::IntLit(v, _) => v.to_string(),
        Construction::CharLit(c, _) => crate::core::print::char_literal(*c),
        Construction::Suspend(comp, _) => {
            let clauses: Vec<String> = comp
                .clauses
                .iter()
                .map(|cl| {
                    if cl.patterns.is_empty() {
                        construction(&cl.body, false)
                    } else {
                        let pats: Vec<String> =
                            cl.patterns.iter().map(comp_pattern).collect();
                        format!("{} -> {}", pats.join(" "), construction(&cl.body, false))
                    }
                })
                .collect();
            format!("{{{}}}", clauses.join(" | "))
        }
        Construction::Let { .. } | Construction::LetRec { .. } => {
            unreachable!("polymorphic lets have no surface form")
        }
    }
}

// ---------------------------------------------------------------------------
// Alpha-equivalence of desugared programs
// ---------------------------------------------------------------------------

/// Structural equality modulo renaming of type/effect binders and term
/// binders (wildcard and implicit-variable names are desugar-generated).
pub fn alpha_eq_program(a: &Program, b: &Program) -> bool {
    if a.decls.datas.len() != b.decls.datas.len()
        || a.decls.interfaces.len() != b.decls.interfaces.len()
    {
        return false;
    }
    for (da, db) in a.decls.datas.iter().zip(b.decls.datas.iter()) {
        if da.name != db.name || da.builtin != db.builtin || da.ctors.len() != db.ctors.len() {
            return false;
        }
        let Some(map) = param_map(&da.params, &db.params) else { return false };
        for (ca, cb) in da.ctors.iter().zip(db.ctors.iter()) {
            if ca.name != cb.name
                || ca.args.len() != cb.args.len()
                || !ca.args.iter().zip(cb.args.iter()).all(|(x, y)| ty_eq(x, y, &map))
            {
                return false;
            }
        }
    }
    for (ia, ib) in a.decls.interfaces.iter().zip(b.decls.interfaces.iter()) {
        if ia.name != ib.name || ia.commands.len() != ib.commands.len() {
            return false;
        }
        let Some(map) = param_map(&ia.params, &ib.params) else { return false };
        for (ca, cb) in ia.commands.iter().zip(ib.commands.iter()) {
            if ca.name != cb.name
                || ca.args.len() != cb.args.len()
                || !ca.args.iter().zip(cb.args.iter()).all(|(x, y)| ty_eq(x, y, &map))
                || !ty_eq(&ca.result, &cb.result, &map)
            {
                return false;
            }
        }
    }
    construction_eq(&a.term, &b.term, &mut Vec::new())
}

type TyMap = Vec<(Name, Name)>;

fn param_map(a: &[TypeParam], b: &[TypeParam]) -> Option<TyMap> {
    if a.len() != b.len() {
        return None;
    }
    let mut map = Vec::new();
    for (pa, pb) in a.iter().zip(b.iter()) {
        match (pa, pb) {
            (TypeParam::Val(x), TypeParam::Val(y)) | (TypeParam::Eff(x), TypeParam::Eff(y)) => {
                map.push((x.clone(), y.clone()))
            }
            _ => return None,
        }
    }
    Some(map)
}

fn var_eq(x: &str, y: &str, map: &TyMap) -> bool {
    for (l, r) in map.iter().rev() {
        match (l == x, r == y) {
            (true, true) => return true,
            (true, false) | (false, true) => return false,
            _ => {}
        }
    }
    x == y
}

fn ty_eq(a: &ValueType, b: &ValueType, map: &TyMap) -> bool {
    match (a, b) {
        (ValueType::Var(x), ValueType::Var(y)) => var_eq(x, y, map),
        (ValueType::Data(d, xs), ValueType::Data(e, ys)) => {
            d == e && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| arg_eq(x, y, map))
        }
        (ValueType::Thunk(c1), ValueType::Thunk(c2)) => comp_eq(c1, c2, map),
        _ => false,
    }
}

fn arg_eq(a: &TypeArg, b: &TypeArg, map: &TyMap) -> bool {
    match (a, b) {
        (TypeArg::Val(x), TypeArg::Val(y)) => ty_eq(x, y, map),
        (TypeArg::Ab(x), TypeArg::Ab(y)) => ability_eq(x, y, map),
        _ => false,
    }
}

fn ability_eq(a: &Ability, b: &Ability, map: &TyMap) -> bool {
    let heads = match (&a.head, &b.head) {
        (AbilityHead::Empty, AbilityHead::Empty) => true,
        (AbilityHead::Var(x), AbilityHead::Var(y)) => var_eq(x, y, map),
        _ => false,
    };
    heads
        && a.instances.len() == b.instances.len()
        && a.instances.iter().zip(b.instances.iter()).all(|(x, y)| {
            x.interface == y.interface
                && x.args.len() == y.args.len()
                && x.args.iter().zip(y.args.iter()).all(|(p, q)| arg_eq(p, q, map))
        })
}

fn comp_eq(a: &CompType, b: &CompType, map: &TyMap) -> bool {
    a.ports.len() == b.ports.len()
        && a.ports.iter().zip(b.ports.iter()).all(|(p, q)| {
            p.adjustment.instances.len() == q.adjustment.instances.len()
                && p.adjustment.instances.iter().zip(q.adjustment.instances.iter()).all(
                    |(x, y)| {
                        x.interface == y.interface
                            && x.args.len() == y.args.len()
                            && x.args.iter().zip(y.args.iter()).all(|(m, n)| arg_eq(m, n, map))
                    },
                )
                && ty_eq(&p.value, &q.value, map)
        })
        && ability_eq(&a.peg.ability, &b.peg.ability, map)
        && ty_eq(&a.peg.value, &b.peg.value, map)
}

fn poly_eq(a: &PolyType, b: &PolyType) -> Option<TyMap> {
    let map = param_map(&a.binders, &b.binders)?;
    if ty_eq(&a.body, &b.body, &map) {
        Some(map)
    } else {
        None
    }
}

type TermMap = Vec<(Name, Name)>;

fn construction_eq(a: &Construction, b: &Construction, env: &mut TermMap) -> bool {
    match (a, b) {
        (Construction::Use(x), Construction::Use(y)) => use_eq(x, y, env),
        (Construction::Ctor(k1, xs, _), Construction::Ctor(k2, ys, _)) => {
            k1 == k2
                && xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(x, y)| construction_eq(x, y, env))
        }
        (Construction::IntLit(x, _), Construction::IntLit(y, _)) => x == y,
        (Construction::CharLit(x, _), Construction::CharLit(y, _)) => x == y,
        (Construction::Suspend(c1, _), Construction::Suspend(c2, _)) => {
            computation_eq(c1, c2, env)
        }
        (
            Construction::Let { name: n1, poly: p1, bound: b1, body: t1, .. },
            Construction::Let { name: n2, poly: p2, bound: b2, body: t2, .. },
        ) => {
            poly_eq(p1, p2).is_some() && construction_eq(b1, b2, env) && {
                env.push((n1.clone(), n2.clone()));
                let ok = construction_eq(t1, t2, env);
                env.pop();
                ok
            }
        }
        (
            Construction::LetRec { bindings: bs1, body: t1, .. },
            Construction::LetRec { bindings: bs2, body: t2, .. },
        ) => {
            if bs1.len() != bs2.len() {
                return false;
            }
            let mark = env.len();
            for ((n1, _, _), (n2, _, _)) in bs1.iter().zip(bs2.iter()) {
                env.push((n1.clone(), n2.clone()));
            }
            let mut ok = true;
            for ((_, p1, c1), (_, p2, c2)) in bs1.iter().zip(bs2.iter()) {
                if poly_eq(p1, p2).is_none() || !computation_eq(c1, c2, env) {
                    ok = false;
                    break;
                }
            }
            ok = ok && construction_eq(t1, t2, env);
            env.truncate(mark);
            ok
        }
        _ => false,
    }
}

fn use_eq(a: &Use, b: &Use, env: &mut TermMap) -> bool {
    match (a, b) {
        (Use::Ident(x, _), Use::Ident(y, _)) => {
            for (l, r) in env.iter().rev() {
                match (l == x, r == y) {
                    (true, true) => return true,
                    (true, false) | (false, true) => return false,
                    _ => {}
                }
            }
            x == y
        }
        (Use::App(h1, xs, _), Use::App(h2, ys, _)) => {
            use_eq(h1, h2, env)
                && xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(x, y)| construction_eq(x, y, env))
        }
        _ => false,
    }
}

fn computation_eq(a: &Computation, b: &Computation, env: &mut TermMap) -> bool {
    a.clauses.len() == b.clauses.len()
        && a.clauses.iter().zip(b.clauses.iter()).all(|(c1, c2)| {
            if c1.patterns.len() != c2.patterns.len() {
                return false;
            }
            let mark = env.len();
            let ok = c1
                .patterns
                .iter()
                .zip(c2.patterns.iter())
                .all(|(p1, p2)| comp_pattern_eq(p1, p2, env))
                && construction_eq(&c1.body, &c2.body, env);
            env.truncate(mark);
            ok
        })
}

fn comp_pattern_eq(a: &CompPattern, b: &CompPattern, env: &mut TermMap) -> bool {
    match (a, b) {
        (CompPattern::Value(x), CompPattern::Value(y)) => value_pattern_eq(x, y, env),
        (
            CompPattern::Request { command: c1, args: a1, continuation: k1, .. },
            CompPattern::Request { command: c2, args: a2, continuation: k2, .. },
        ) => {
            c1 == c2
                && a1.len() == a2.len()
                && a1.iter().zip(a2).all(|(x, y)| value_pattern_eq(x, y, env))
                && {
                    env.push((k1.name.clone(), k2.name.clone()));
                    true
                }
        }
        (CompPattern::CatchAll(b1, _), CompPattern::CatchAll(b2, _)) => {
            env.push((b1.name.clone(), b2.name.clone()));
            true
        }
        _ => false,
    }
}

fn value_pattern_eq(a: &ValuePattern, b: &ValuePattern, env: &mut TermMap) -> bool {
    match (a, b) {
        (ValuePattern::Var(x), ValuePattern::Var(y)) => {
            env.push((x.name.clone(), y.name.clone()));
            true
        }
        (ValuePattern::Ctor(k1, xs, _), ValuePattern::Ctor(k2, ys, _)) => {
            k1 == k2
                && xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(x, y)| value_pattern_eq(x, y, env))
        }
        (ValuePattern::IntLit(x, _), ValuePattern::IntLit(y, _)) => x == y,
        (ValuePattern::CharLit(x, _), ValuePattern::CharLit(y, _)) => x == y,
        _ => false,
    }
}
