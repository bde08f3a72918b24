//! Pretty-printer for Core terms and types, in the handler-superscript
//! display style: `handle^{Δ}_{G} m with <c x̄ -> z> ↦ n | x ↦ n'`.

use super::*;

pub fn char_literal(c: char) -> String {
    let body = match c {
        '\u{8}' => "\\b".to_string(),
        '\n' => "\\n".to_string(),
        '\t' => "\\t".to_string(),
        '\r' => "\\r".to_string(),
        '\0' => "\\0".to_string(),
        '\\' => "\\\\".to_string(),
        '\'' => "\\'".to_string(),
        other => other.to_string(),
    };
    format!("'{body}'")
}

pub fn show_value_type(t: &CoreValueType) -> String {
    match t {
        CoreValueType::Data(d, args) => {
            let mut s = d.clone();
            for a in args {
                s.push(' ');
                s.push_str(&show_type_arg(a));
            }
            s
        }
        CoreValueType::Thunk(c) => format!("{{{}}}", show_comp_type(c)),
        CoreValueType::Var(v) => show_tyvar(v),
    }
}

fn show_value_type_atom(t: &CoreValueType) -> String {
    match t {
        CoreValueType::Data(_, args) if !args.is_empty() => format!("({})", show_value_type(t)),
        _ => show_value_type(t),
    }
}

/// Implicit effect variables keep their source-facing spelling.
pub fn show_tyvar(v: &str) -> String {
    if crate::desugar::is_fresh_effect_var(v) {
        "ε".to_string()
    } else {
        v.to_string()
    }
}

pub fn show_comp_type(c: &CoreCompType) -> String {
    let mut s = String::new();
    for a in &c.args {
        s.push_str(&show_value_type_atom(a));
        s.push_str(" -> ");
    }
    s.push_str(&show_peg(&c.peg));
    s
}

pub fn show_peg(p: &CorePeg) -> String {
    format!("[{}]{}", show_ability(&p.ability), show_value_type_atom(&p.value))
}

pub fn show_ability(a: &CoreAbility) -> String {
    let mut s = match &a.head {
        AbilityHead::Empty => "0".to_string(),
        AbilityHead::Var(v) => show_tyvar(v),
        AbilityHead::Meta(id) => format!("?e{id}"),
    };
    for inst in &a.instances {
        s.push_str(", ");
        s.push_str(&show_instance(inst));
    }
    s
}

fn show_instance(i: &CoreInstance) -> String {
    let mut s = i.interface.clone();
    for a in &i.args {
        s.push(' ');
        s.push_str(&show_type_arg(a));
    }
    s
}

pub fn show_adjustment(d: &CoreAdjustment) -> String {
    let mut s = "ι".to_string();
    for inst in &d.instances {
        s.push_str(" + ");
        s.push_str(&show_instance(inst));
    }
    s
}

fn show_type_arg(a: &CoreTypeArg) -> String {
    match a {
        CoreTypeArg::Val(v) => show_value_type_atom(v),
        CoreTypeArg::Ab(ab) => format!("[{}]", show_ability(ab)),
    }
}

pub fn show_poly_type(p: &CorePolyType) -> String {
    if p.binders.is_empty() {
        return show_value_type(&p.body);
    }
    let mut s = "∀".to_string();
    for b in &p.binders {
        s.push(' ');
        match b {
            CoreTypeParam::Val(v) => s.push_str(&show_tyvar(v)),
            CoreTypeParam::Eff(e) => s.push_str(&show_tyvar(e)),
        }
    }
    s.push_str(". ");
    s.push_str(&show_value_type(&p.body));
    s
}

pub fn show_term(t: &Term) -> String {
    let mut out = String::new();
    write_term(t, 0, &mut out);
    out
}

fn indent(level: usize, out: &mut String) {
    out.push('\n');
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn atomic(t: &Term) -> bool {
    matches!(
        t.kind,
        TermKind::Var(_)
            | TermKind::Command(_)
            | TermKind::IntLit(_)
            | TermKind::CharLit(_)
            | TermKind::Annot(_, _)
    )
}

fn write_atom(t: &Term, level: usize, out: &mut String) {
    if atomic(t) {
        write_term(t, level, out);
    } else {
        out.push('(');
        write_term(t, level, out);
        out.push(')');
    }
}

fn write_term(t: &Term, level: usize, out: &mut String) {
    match &t.kind {
        TermKind::Var(x) => out.push_str(x),
        TermKind::PolyApp(f, args) => {
            out.push_str(f);
            for a in args {
                out.push(' ');
                out.push_str(&show_type_arg(a));
            }
        }
        TermKind::Command(c) => out.push_str(c),
        TermKind::Builtin(b, args) => {
            out.push_str(b);
            for a in args {
                out.push(' ');
                out.push_str(&show_type_arg(a));
            }
        }
        TermKind::App(head, args) => {
            if args.is_empty() {
                write_atom(head, level, out);
                out.push('!');
                return;
            }
            write_atom(head, level, out);
            for a in args {
                out.push(' ');
                write_atom(a, level, out);
            }
        }
        TermKind::Annot(n, ty) => {
            out.push('(');
            write_term(n, level, out);
            out.push_str(" : ");
            out.push_str(&show_value_type(ty));
            out.push(')');
        }
        TermKind::Ctor(k, args) => {
            out.push_str(k);
            for a in args {
                out.push(' ');
                write_atom(a, level, out);
            }
        }
        TermKind::IntLit(n) => out.push_str(&n.to_string()),
        TermKind::CharLit(c) => out.push_str(&char_literal(*c)),
        TermKind::Lambda(params, body) => {
            out.push('λ');
            if params.is_empty() {
                out.push_str("()");
            }
            for p in params {
                out.push(' ');
                out.push_str(p);
            }
            out.push_str(". ");
            write_term(body, level, out);
        }
        TermKind::Case(scrut, branches) => {
            out.push_str("case ");
            write_term(scrut, level, out);
            out.push_str(" of");
            for (k, binders, body) in branches {
                indent(level + 1, out);
                out.push_str(k);
                for b in binders {
                    out.push(' ');
                    out.push_str(b);
                }
                out.push_str(" ↦ ");
                write_term(body, level + 2, out);
            }
        }
        TermKind::LitCase { scrutinee, arms, default } => {
            out.push_str("case ");
            write_term(scrutinee, level, out);
            out.push_str(" of");
            for (lit, body) in arms {
                indent(level + 1, out);
                out.push_str(&lit.to_string());
                out.push_str(" ↦ ");
                write_term(body, level + 2, out);
            }
            indent(level + 1, out);
            out.push_str("_ ↦ ");
            write_term(default, level + 2, out);
        }
        TermKind::Handle { adjustment, peg, scrutinee, clauses, ret_var, ret_body, .. } => {
            out.push_str(&format!(
                "handle^{{{}}}_{{{}}} ",
                show_adjustment(adjustment),
                show_peg(peg)
            ));
            write_term(scrutinee, level, out);
            out.push_str(" with");
            for cl in clauses {
                indent(level + 1, out);
                out.push('<');
                out.push_str(&cl.command);
                for a in &cl.args {
                    out.push(' ');
                    out.push_str(a);
                }
                out.push_str(" -> ");
                out.push_str(&cl.continuation);
                out.push_str("> ↦ ");
                write_term(&cl.body, level + 2, out);
            }
            indent(level + 1, out);
            out.push_str(ret_var);
            out.push_str(" ↦ ");
            write_term(ret_body, level + 2, out);
        }
        TermKind::Let { name, poly, bound, body } => {
            out.push_str("let ");
            out.push_str(name);
            out.push_str(" : ");
            out.push_str(&show_poly_type(poly));
            out.push_str(" = ");
            write_term(bound, level + 1, out);
            indent(level, out);
            out.push_str("in ");
            write_term(body, level, out);
        }
        TermKind::LetRec { bindings, body } => {
            out.push_str("letrec");
            for (name, poly, params, b) in bindings.iter() {
                indent(level + 1, out);
                out.push_str(name);
                out.push_str(" : ");
                out.push_str(&show_poly_type(poly));
                out.push_str(" = λ");
                if params.is_empty() {
                    out.push_str("()");
                }
                for p in params {
                    out.push(' ');
                    out.push_str(p);
                }
                out.push_str(". ");
                write_term(b, level + 2, out);
            }
            indent(level, out);
            out.push_str("in ");
            write_term(body, level, out);
        }
    }
}
