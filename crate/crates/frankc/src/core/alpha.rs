//! Alpha-equivalence of Core terms: structural equality modulo consistent
//! renaming of term binders; types are compared structurally with abilities
//! up to shadow-normalization.

use super::*;
use std::collections::HashMap;

#[derive(Default)]
struct Renaming {
    /// Pairs of (left-name, right-name) currently in scope, innermost last.
    scopes: Vec<(Name, Name)>,
}

impl Renaming {
    fn push(&mut self, l: &Name, r: &Name) {
        self.scopes.push((l.clone(), r.clone()));
    }
    fn pop(&mut self, n: usize) {
        self.scopes.truncate(self.scopes.len() - n);
    }
    fn matches(&self, l: &Name, r: &Name) -> bool {
        for (bl, br) in self.scopes.iter().rev() {
            match (bl == l, br == r) {
                (true, true) => return true,
                (true, false) | (false, true) => return false,
                _ => {}
            }
        }
        // Free on both sides: must be the same name.
        l == r
    }
}

pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    eq(a, b, &mut Renaming::default())
}

fn eq(a: &Term, b: &Term, ren: &mut Renaming) -> bool {
    match (&a.kind, &b.kind) {
        (TermKind::Var(x), TermKind::Var(y)) => ren.matches(x, y),
        (TermKind::PolyApp(f, xs), TermKind::PolyApp(g, ys)) => {
            ren.matches(f, g) && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| arg_eq(x, y))
        }
        (TermKind::Command(c), TermKind::Command(d)) => c == d,
        (TermKind::Builtin(f, xs), TermKind::Builtin(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| arg_eq(x, y))
        }
        (TermKind::App(h1, as1), TermKind::App(h2, as2)) => {
            eq(h1, h2, ren) && as1.len() == as2.len() && as1.iter().zip(as2).all(|(x, y)| eq(x, y, ren))
        }
        (TermKind::Annot(n1, t1), TermKind::Annot(n2, t2)) => {
            core_types_equal(t1, t2) && eq(n1, n2, ren)
        }
        (TermKind::Ctor(k1, as1), TermKind::Ctor(k2, as2)) => {
            k1 == k2 && as1.len() == as2.len() && as1.iter().zip(as2).all(|(x, y)| eq(x, y, ren))
        }
        (TermKind::IntLit(x), TermKind::IntLit(y)) => x == y,
        (TermKind::CharLit(x), TermKind::CharLit(y)) => x == y,
        (TermKind::Lambda(p1, b1), TermKind::Lambda(p2, b2)) => {
            if p1.len() != p2.len() {
                return false;
            }
            for (l, r) in p1.iter().zip(p2.iter()) {
                ren.push(l, r);
            }
            let ok = eq(b1, b2, ren);
            ren.pop(p1.len());
            ok
        }
        (TermKind::Case(s1, br1), TermKind::Case(s2, br2)) => {
            if !eq(s1, s2, ren) || br1.len() != br2.len() {
                return false;
            }
            // Branches are matched by constructor name.
            let index: HashMap<&Name, usize> =
                br2.iter().enumerate().map(|(i, (k, _, _))| (k, i)).collect();
            for (k, binders1, body1) in br1 {
                let Some(&j) = index.get(k) else { return false };
                let (_, binders2, body2) = &br2[j];
                if binders1.len() != binders2.len() {
                    return false;
                }
                for (l, r) in binders1.iter().zip(binders2.iter()) {
                    ren.push(l, r);
                }
                let ok = eq(body1, body2, ren);
                ren.pop(binders1.len());
                if !ok {
                    return false;
                }
            }
            true
        }
        (
            TermKind::LitCase { scrutinee: s1, arms: a1, default: d1 },
            TermKind::LitCase { scrutinee: s2, arms: a2, default: d2 },
        ) => {
            eq(s1, s2, ren)
                && a1.len() == a2.len()
                && a1.iter().zip(a2).all(|((l1, b1), (l2, b2))| l1 == l2 && eq(b1, b2, ren))
                && eq(d1, d2, ren)
        }
        (
            TermKind::Handle {
                adjustment: ad1,
                peg: p1,
                scrutinee: s1,
                clauses: c1,
                ret_var: r1,
                ret_body: rb1,
                ..
            },
            TermKind::Handle {
                adjustment: ad2,
                peg: p2,
                scrutinee: s2,
                clauses: c2,
                ret_var: r2,
                ret_body: rb2,
                ..
            },
        ) => {
            if !adjustment_eq(ad1, ad2)
                || !core_abilities_equal(&p1.ability, &p2.ability)
                || !core_types_equal(&p1.value, &p2.value)
                || !eq(s1, s2, ren)
                || c1.len() != c2.len()
            {
                return false;
            }
            let index: HashMap<&Name, usize> =
                c2.iter().enumerate().map(|(i, cl)| (&cl.command, i)).collect();
            for cl1 in c1 {
                let Some(&j) = index.get(&cl1.command) else { return false };
                let cl2 = &c2[j];
                if cl1.args.len() != cl2.args.len() {
                    return false;
                }
                for (l, r) in cl1.args.iter().zip(cl2.args.iter()) {
                    ren.push(l, r);
                }
                ren.push(&cl1.continuation, &cl2.continuation);
                let ok = eq(&cl1.body, &cl2.body, ren);
                ren.pop(cl1.args.len() + 1);
                if !ok {
                    return false;
                }
            }
            ren.push(r1, r2);
            let ok = eq(rb1, rb2, ren);
            ren.pop(1);
            ok
        }
        (
            TermKind::Let { name: n1, poly: p1, bound: bd1, body: b1 },
            TermKind::Let { name: n2, poly: p2, bound: bd2, body: b2 },
        ) => {
            if !poly_eq(p1, p2) || !eq(bd1, bd2, ren) {
                return false;
            }
            ren.push(n1, n2);
            let ok = eq(b1, b2, ren);
            ren.pop(1);
            ok
        }
        (
            TermKind::LetRec { bindings: bs1, body: b1 },
            TermKind::LetRec { bindings: bs2, body: b2 },
        ) => {
            if bs1.len() != bs2.len() {
                return false;
            }
            for ((n1, _, _, _), (n2, _, _, _)) in bs1.iter().zip(bs2.iter()) {
                ren.push(n1, n2);
            }
            let mut ok = true;
            for ((_, p1, xs1, t1), (_, p2, xs2, t2)) in bs1.iter().zip(bs2.iter()) {
                if !poly_eq(p1, p2) || xs1.len() != xs2.len() {
                    ok = false;
                    break;
                }
                for (l, r) in xs1.iter().zip(xs2.iter()) {
                    ren.push(l, r);
                }
                ok = eq(t1, t2, ren);
                ren.pop(xs1.len());
                if !ok {
                    break;
                }
            }
            ok = ok && eq(b1, b2, ren);
            ren.pop(bs1.len());
            ok
        }
        _ => false,
    }
}

fn arg_eq(a: &CoreTypeArg, b: &CoreTypeArg) -> bool {
    match (a, b) {
        (CoreTypeArg::Val(x), CoreTypeArg::Val(y)) => core_types_equal(x, y),
        (CoreTypeArg::Ab(x), CoreTypeArg::Ab(y)) => core_abilities_equal(x, y),
        _ => false,
    }
}

fn adjustment_eq(a: &CoreAdjustment, b: &CoreAdjustment) -> bool {
    let na = core_normalize_instances(&a.instances);
    let nb = core_normalize_instances(&b.instances);
    na.len() == nb.len()
        && na.iter().zip(nb.iter()).all(|(x, y)| {
            x.interface == y.interface
                && x.args.len() == y.args.len()
                && x.args.iter().zip(y.args.iter()).all(|(p, q)| arg_eq(p, q))
        })
}

/// Polytypes compare modulo binder names.
fn poly_eq(a: &CorePolyType, b: &CorePolyType) -> bool {
    if a.binders.len() != b.binders.len() {
        return false;
    }
    let fresh: Vec<CoreTypeArg> = a
        .binders
        .iter()
        .zip(b.binders.iter())
        .enumerate()
        .map(|(i, (ba, bb))| match (ba, bb) {
            (CoreTypeParam::Val(_), CoreTypeParam::Val(_)) => {
                CoreTypeArg::Val(CoreValueType::Var(format!("%alpha{i}")))
            }
            (CoreTypeParam::Eff(_), CoreTypeParam::Eff(_)) => CoreTypeArg::Ab(CoreAbility {
                head: AbilityHead::Var(format!("%alpha{i}")),
                instances: vec![],
            }),
            _ => CoreTypeArg::Val(CoreValueType::Var("%kind-mismatch".into())),
        })
        .collect();
    core_types_equal(&a.instantiate(&fresh), &b.instantiate(&fresh))
}
