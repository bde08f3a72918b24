//! Capture-avoiding substitution over Core terms.
//!
//! Monomorphic substitution replaces variables by terms; polymorphic
//! substitution replaces `f R̄` by `(n : P(R̄))`. Untouched subtrees keep
//! their reference-counted nodes.

use super::*;
use std::collections::{BTreeSet, HashMap};

pub struct Subst {
    pub mono: HashMap<Name, Term>,
    pub poly: HashMap<Name, (Term, CorePolyType)>,
    free_in_replacements: BTreeSet<Name>,
    counter: u64,
}

impl Subst {
    pub fn mono_one(name: impl Into<Name>, replacement: Term) -> Subst {
        let mut mono = HashMap::new();
        mono.insert(name.into(), replacement);
        Subst::new(mono, HashMap::new())
    }

    pub fn new(mono: HashMap<Name, Term>, poly: HashMap<Name, (Term, CorePolyType)>) -> Subst {
        let mut free = BTreeSet::new();
        for t in mono.values() {
            free_vars(t, &mut free);
        }
        for (t, _) in poly.values() {
            free_vars(t, &mut free);
        }
        Subst { mono, poly, free_in_replacements: free, counter: 0 }
    }

    pub fn apply(&mut self, term: &Term) -> Term {
        self.go(term).unwrap_or_else(|| term.clone())
    }

    fn fresh(&mut self, base: &str) -> Name {
        self.counter += 1;
        format!("{base}%r{}", self.counter)
    }

    fn shadowed(&self, binders: &[Name]) -> bool {
        binders.iter().any(|b| self.mono.contains_key(b) || self.poly.contains_key(b))
    }

    fn captured(&self, binders: &[Name]) -> bool {
        binders.iter().any(|b| self.free_in_replacements.contains(b))
    }

    /// Substitute under a binder list, renaming binders that would capture a
    /// replacement's free variable and masking ones that shadow a key.
    fn under(
        &mut self,
        binders: &[Name],
        bodies: &[&Term],
    ) -> Option<(Vec<Name>, Vec<Term>)> {
        let needs_rename = self.captured(binders);
        let shadowed: Vec<Name> = binders
            .iter()
            .filter(|b| self.mono.contains_key(*b) || self.poly.contains_key(*b))
            .cloned()
            .collect();

        // Temporarily remove shadowed keys.
        let saved_mono: Vec<(Name, Term)> =
            shadowed.iter().filter_map(|b| self.mono.remove_entry(b)).collect();
        let saved_poly: Vec<(Name, (Term, CorePolyType))> =
            shadowed.iter().filter_map(|b| self.poly.remove_entry(b)).collect();

        let result = if needs_rename {
            let mut renames = HashMap::new();
            let mut new_binders = Vec::with_capacity(binders.len());
            for b in binders {
                if self.free_in_replacements.contains(b) {
                    let fresh = self.fresh(b);
                    renames.insert(b.clone(), var(fresh.clone()));
                    new_binders.push(fresh);
                } else {
                    new_binders.push(b.clone());
                }
            }
            let mut renamer = Subst::new(renames, HashMap::new());
            let renamed: Vec<Term> = bodies.iter().map(|b| renamer.apply(b)).collect();
            let out: Vec<Term> = renamed.iter().map(|b| self.apply(b)).collect();
            Some((new_binders, out))
        } else {
            let changed: Vec<Option<Term>> = bodies.iter().map(|b| self.go(b)).collect();
            if changed.iter().all(|c| c.is_none()) && !self.shadowed(binders) {
                None
            } else {
                let out = changed
                    .into_iter()
                    .zip(bodies.iter())
                    .map(|(c, orig)| c.unwrap_or_else(|| (*orig).clone()))
                    .collect();
                Some((binders.to_vec(), out))
            }
        };

        for (k, v) in saved_mono {
            self.mono.insert(k, v);
        }
        for (k, v) in saved_poly {
            self.poly.insert(k, v);
        }
        result
    }

    fn go(&mut self, term: &Term) -> Option<Term> {
        match &term.kind {
            TermKind::Var(x) => self.mono.get(x).cloned(),
            TermKind::PolyApp(f, args) => {
                let (value, poly) = self.poly.get(f)?;
                // Instantiating a polymorphic value rewrites the type
                // annotations throughout its body.
                let pairs: Vec<(CoreTypeParam, CoreTypeArg)> =
                    poly.binders.iter().cloned().zip(args.iter().cloned()).collect();
                let body = subst_types_in_term(value, &pairs).unwrap_or_else(|| value.clone());
                Some(annot(body, poly.instantiate(args)))
            }
            TermKind::Command(_) | TermKind::Builtin(_, _) | TermKind::IntLit(_) | TermKind::CharLit(_) => None,
            TermKind::App(head, args) => {
                let h = self.go(head);
                let a: Vec<Option<Term>> = args.iter().map(|t| self.go(t)).collect();
                if h.is_none() && a.iter().all(|x| x.is_none()) {
                    return None;
                }
                let head = h.unwrap_or_else(|| head.clone());
                let args = a
                    .into_iter()
                    .zip(args.iter())
                    .map(|(c, o)| c.unwrap_or_else(|| o.clone()))
                    .collect();
                Some(app(head, args))
            }
            TermKind::Annot(n, ty) => Some(annot(self.go(n)?, ty.clone())),
            TermKind::Ctor(k, args) => {
                let a: Vec<Option<Term>> = args.iter().map(|t| self.go(t)).collect();
                if a.iter().all(|x| x.is_none()) {
                    return None;
                }
                let args = a
                    .into_iter()
                    .zip(args.iter())
                    .map(|(c, o)| c.unwrap_or_else(|| o.clone()))
                    .collect();
                Some(mk(TermKind::Ctor(k.clone(), args)))
            }
            TermKind::Lambda(params, body) => {
                let (params, mut bodies) = self.under(params, &[body])?;
                Some(lambda(params, bodies.pop().unwrap()))
            }
            TermKind::Case(scrut, branches) => {
                let s = self.go(scrut);
                let mut changed = s.is_some();
                let mut out = Vec::with_capacity(branches.len());
                for (k, binders, body) in branches {
                    match self.under(binders, &[body]) {
                        Some((bs, mut bodys)) => {
                            changed = true;
                            out.push((k.clone(), bs, bodys.pop().unwrap()));
                        }
                        None => out.push((k.clone(), binders.clone(), body.clone())),
                    }
                }
                if !changed {
                    return None;
                }
                Some(mk(TermKind::Case(s.unwrap_or_else(|| scrut.clone()), out)))
            }
            TermKind::LitCase { scrutinee, arms, default } => {
                let s = self.go(scrutinee);
                let a: Vec<Option<Term>> = arms.iter().map(|(_, b)| self.go(b)).collect();
                let d = self.go(default);
                if s.is_none() && d.is_none() && a.iter().all(|x| x.is_none()) {
                    return None;
                }
                Some(mk(TermKind::LitCase {
                    scrutinee: s.unwrap_or_else(|| scrutinee.clone()),
                    arms: a
                        .into_iter()
                        .zip(arms.iter())
                        .map(|(c, (l, o))| (l.clone(), c.unwrap_or_else(|| o.clone())))
                        .collect(),
                    default: d.unwrap_or_else(|| default.clone()),
                }))
            }
            TermKind::Handle {
                adjustment,
                peg,
                scrutinee_ty,
                scrutinee,
                clauses,
                ret_var,
                ret_body,
            } => {
                let s = self.go(scrutinee);
                let mut changed = s.is_some();
                let mut out_clauses = Vec::with_capacity(clauses.len());
                for cl in clauses {
                    let mut binders = cl.args.clone();
                    binders.push(cl.continuation.clone());
                    match self.under(&binders, &[&cl.body]) {
                        Some((mut bs, mut bodys)) => {
                            changed = true;
                            let continuation = bs.pop().unwrap();
                            out_clauses.push(HandleClause {
                                command: cl.command.clone(),
                                args: bs,
                                continuation,
                                body: bodys.pop().unwrap(),
                            });
                        }
                        None => out_clauses.push(cl.clone()),
                    }
                }
                let ret = self.under(std::slice::from_ref(ret_var), &[ret_body]);
                if ret.is_some() {
                    changed = true;
                }
                if !changed {
                    return None;
                }
                let (ret_var, ret_body) = match ret {
                    Some((mut vs, mut bs)) => (vs.pop().unwrap(), bs.pop().unwrap()),
                    None => (ret_var.clone(), ret_body.clone()),
                };
                Some(mk(TermKind::Handle {
                    adjustment: adjustment.clone(),
                    peg: peg.clone(),
                    scrutinee_ty: scrutinee_ty.clone(),
                    scrutinee: s.unwrap_or_else(|| scrutinee.clone()),
                    clauses: out_clauses,
                    ret_var,
                    ret_body,
                }))
            }
            TermKind::Let { name, poly, bound, body } => {
                let b = self.go(bound);
                let under = self.under(std::slice::from_ref(name), &[body]);
                if b.is_none() && under.is_none() {
                    return None;
                }
                let (name, body) = match under {
                    Some((mut ns, mut bs)) => (ns.pop().unwrap(), bs.pop().unwrap()),
                    None => (name.clone(), body.clone()),
                };
                Some(mk(TermKind::Let {
                    name,
                    poly: poly.clone(),
                    bound: b.unwrap_or_else(|| bound.clone()),
                    body,
                }))
            }
            TermKind::LetRec { bindings, body } => {
                // The recursive binders scope over every binding body and the
                // letrec body alike.
                let names: Vec<Name> = bindings.iter().map(|(n, _, _, _)| n.clone()).collect();
                if self.captured(&names) {
                    // Renaming recursive binders is never needed on this
                    // pipeline's terms: letrec names are top-level and
                    // replacements are closed.
                    unreachable!("letrec binder captured by a substitution");
                }
                let shadowed: Vec<Name> = names
                    .iter()
                    .filter(|b| self.mono.contains_key(*b) || self.poly.contains_key(*b))
                    .cloned()
                    .collect();
                let saved_mono: Vec<(Name, Term)> =
                    shadowed.iter().filter_map(|b| self.mono.remove_entry(b)).collect();
                let saved_poly: Vec<(Name, (Term, CorePolyType))> =
                    shadowed.iter().filter_map(|b| self.poly.remove_entry(b)).collect();

                let mut changed = false;
                let mut out_bindings = Vec::with_capacity(bindings.len());
                for (n, p, params, fn_body) in bindings.iter() {
                    match self.under(params, &[fn_body]) {
                        Some((ps, mut bs)) => {
                            changed = true;
                            out_bindings.push((n.clone(), p.clone(), ps, bs.pop().unwrap()));
                        }
                        None => out_bindings.push((n.clone(), p.clone(), params.clone(), fn_body.clone())),
                    }
                }
                let b = self.go(body);
                changed = changed || b.is_some();

                for (k, v) in saved_mono {
                    self.mono.insert(k, v);
                }
                for (k, v) in saved_poly {
                    self.poly.insert(k, v);
                }
                if !changed {
                    return None;
                }
                let bindings = if out_bindings.iter().zip(bindings.iter()).all(|(a, b)| {
                    a.2 == b.2 && a.3 == b.3
                }) {
                    bindings.clone()
                } else {
                    Rc::new(out_bindings)
                };
                Some(mk(TermKind::LetRec {
                    bindings,
                    body: b.unwrap_or_else(|| body.clone()),
                }))
            }
        }
    }
}
