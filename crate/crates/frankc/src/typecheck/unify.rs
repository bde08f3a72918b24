//! First-order unification over value types and abilities.
//!
//! Ability unification works on normal forms. A flexible head absorbs exactly
//! the instances the rigid side has and the flexible side lacks; shared
//! interface ids stay explicit and their arguments must unify, so a head is
//! never solved to an instance its own side shadows.

use super::{Checker, MetaEntry};
use crate::syntax::*;

#[derive(Clone, Debug)]
pub enum UnifyError {
    Clash(String),
    Occurs,
    Ambiguous(String),
}

impl Checker {
    pub(crate) fn unify_types(&mut self, a: &ValueType, b: &ValueType) -> Result<(), UnifyError> {
        let a = self.resolve(a);
        let b = self.resolve(b);
        match (&a, &b) {
            (ValueType::Meta(x), ValueType::Meta(y)) if x == y => Ok(()),
            (ValueType::Meta(x), _) => self.solve_val(*x, &b),
            (_, ValueType::Meta(y)) => self.solve_val(*y, &a),
            (ValueType::Var(x), ValueType::Var(y)) if x == y => Ok(()),
            (ValueType::Data(d, xs), ValueType::Data(e, ys)) if d == e && xs.len() == ys.len() => {
                for (x, y) in xs.iter().zip(ys.iter()) {
                    self.unify_args(x, y)?;
                }
                Ok(())
            }
            (ValueType::Thunk(c1), ValueType::Thunk(c2)) => self.unify_comps(c1, c2),
            _ => Err(UnifyError::Clash(format!("`{a}` vs `{b}`"))),
        }
    }

    fn unify_args(&mut self, a: &TypeArg, b: &TypeArg) -> Result<(), UnifyError> {
        match (a, b) {
            (TypeArg::Val(x), TypeArg::Val(y)) => self.unify_types(x, y),
            (TypeArg::Ab(x), TypeArg::Ab(y)) => self.unify_abilities(x, y),
            _ => Err(UnifyError::Clash("type argument kinds differ".into())),
        }
    }

    fn unify_comps(&mut self, c1: &CompType, c2: &CompType) -> Result<(), UnifyError> {
        if c1.ports.len() != c2.ports.len() {
            return Err(UnifyError::Clash(format!(
                "computation types take {} vs {} arguments",
                c1.ports.len(),
                c2.ports.len()
            )));
        }
        for (p1, p2) in c1.ports.iter().zip(c2.ports.iter()) {
            self.unify_adjustments(&p1.adjustment, &p2.adjustment)?;
            self.unify_types(&p1.value, &p2.value)?;
        }
        self.unify_abilities(&c1.peg.ability, &c2.peg.ability)?;
        self.unify_types(&c1.peg.value, &c2.peg.value)
    }

    /// Adjustments must agree as instance lists after normalization; the
    /// order of surviving instances is significant since it fixes handler
    /// clause order.
    fn unify_adjustments(&mut self, d1: &Adjustment, d2: &Adjustment) -> Result<(), UnifyError> {
        let n1 = normalize_adjustment(d1);
        let n2 = normalize_adjustment(d2);
        if n1.instances.len() != n2.instances.len() {
            return Err(UnifyError::Clash(format!("adjustments <{d1}> vs <{d2}> differ")));
        }
        for (i1, i2) in n1.instances.iter().zip(n2.instances.iter()) {
            if i1.interface != i2.interface || i1.args.len() != i2.args.len() {
                return Err(UnifyError::Clash(format!("adjustments <{d1}> vs <{d2}> differ")));
            }
            for (a1, a2) in i1.args.iter().zip(i2.args.iter()) {
                self.unify_args(a1, a2)?;
            }
        }
        Ok(())
    }

    pub(crate) fn unify_abilities(&mut self, s1: &Ability, s2: &Ability) -> Result<(), UnifyError> {
        let a = normalize_ability(&self.resolve_ability(s1));
        let b = normalize_ability(&self.resolve_ability(s2));
        match (&a.head, &b.head) {
            (AbilityHead::Meta(x), AbilityHead::Meta(y)) if x == y => {
                self.unify_instance_sets_exact(&a, &b)
            }
            (AbilityHead::Meta(_), AbilityHead::Meta(_)) => self.unify_flex_flex(&a, &b),
            (AbilityHead::Meta(x), _) => self.unify_flex_rigid(*x, &a, &b),
            (_, AbilityHead::Meta(y)) => self.unify_flex_rigid(*y, &b, &a),
            (ha, hb) => {
                if ha != hb {
                    return Err(UnifyError::Clash(format!("ability heads `{ha}` vs `{hb}` differ")));
                }
                self.unify_instance_sets_exact(&a, &b)
            }
        }
    }

    /// Both sides fixed: the same interface ids must be present, with
    /// unifiable arguments.
    fn unify_instance_sets_exact(&mut self, a: &Ability, b: &Ability) -> Result<(), UnifyError> {
        if a.instances.len() != b.instances.len() {
            return Err(UnifyError::Clash(format!("abilities [{a}] vs [{b}] differ")));
        }
        for ia in &a.instances {
            let ib = b
                .instances
                .iter()
                .find(|ib| ib.interface == ia.interface)
                .ok_or_else(|| UnifyError::Clash(format!("abilities [{a}] vs [{b}] differ")))?;
            self.unify_instance_args(ia, ib)?;
        }
        Ok(())
    }

    fn unify_instance_args(&mut self, ia: &Instance, ib: &Instance) -> Result<(), UnifyError> {
        if ia.args.len() != ib.args.len() {
            return Err(UnifyError::Clash(format!(
                "instances `{ia}` and `{ib}` have different arities"
            )));
        }
        for (x, y) in ia.args.iter().zip(ib.args.iter()) {
            self.unify_args(x, y)?;
        }
        Ok(())
    }

    /// `flex` has a meta head; `rigid` does not. Shared interface ids unify
    /// argumentwise; the ids unique to the rigid side become the meta's
    /// solution, in the rigid side's order.
    fn unify_flex_rigid(
        &mut self,
        meta: MetaId,
        flex: &Ability,
        rigid: &Ability,
    ) -> Result<(), UnifyError> {
        for fi in &flex.instances {
            match rigid.instances.iter().find(|ri| ri.interface == fi.interface) {
                Some(ri) => self.unify_instance_args(fi, ri).map_err(|e| match e {
                    UnifyError::Clash(m) => UnifyError::Ambiguous(format!(
                        "instance `{}` clashes between a flexible ability and [{rigid}]: {m}",
                        fi.interface
                    )),
                    other => other,
                })?,
                None => {
                    return Err(UnifyError::Clash(format!(
                        "interface `{}` is not available in [{rigid}]",
                        fi.interface
                    )))
                }
            }
        }
        let remainder: Vec<Instance> = rigid
            .instances
            .iter()
            .filter(|ri| !flex.instances.iter().any(|fi| fi.interface == ri.interface))
            .cloned()
            .collect();
        let solution = Ability { head: rigid.head.clone(), instances: remainder };
        self.solve_ab(meta, &solution)
    }

    /// Distinct meta heads: shared ids unify; a fresh head absorbs each
    /// side's surplus so both normal forms agree.
    fn unify_flex_flex(&mut self, a: &Ability, b: &Ability) -> Result<(), UnifyError> {
        let (ma, mb) = match (&a.head, &b.head) {
            (AbilityHead::Meta(x), AbilityHead::Meta(y)) => (*x, *y),
            _ => unreachable!("unify_flex_flex requires meta heads"),
        };
        for ia in &a.instances {
            if let Some(ib) = b.instances.iter().find(|ib| ib.interface == ia.interface) {
                self.unify_instance_args(ia, ib)?;
            }
        }
        let fresh = self.fresh_ab_meta();
        let only_in = |xs: &Ability, ys: &Ability| -> Vec<Instance> {
            xs.instances
                .iter()
                .filter(|xi| !ys.instances.iter().any(|yi| yi.interface == xi.interface))
                .cloned()
                .collect()
        };
        let sol_a = Ability { head: fresh.head.clone(), instances: only_in(b, a) };
        let sol_b = Ability { head: fresh.head.clone(), instances: only_in(a, b) };
        self.solve_ab(ma, &sol_a)?;
        self.solve_ab(mb, &sol_b)
    }

    // -- solving with occurs checks ------------------------------------------

    fn solve_val(&mut self, meta: MetaId, ty: &ValueType) -> Result<(), UnifyError> {
        if self.occurs_in_value(meta, ty) {
            return Err(UnifyError::Occurs);
        }
        match &self.store[meta as usize] {
            MetaEntry::UnsolvedVal => {
                self.store[meta as usize] = MetaEntry::SolvedVal(ty.clone());
                Ok(())
            }
            other => unreachable!("solving an already solved or ability meta: {other:?}"),
        }
    }

    fn solve_ab(&mut self, meta: MetaId, ab: &Ability) -> Result<(), UnifyError> {
        if let AbilityHead::Meta(m) = ab.head {
            if m == meta && ab.instances.is_empty() {
                return Ok(());
            }
        }
        if self.occurs_in_ability(meta, ab) {
            return Err(UnifyError::Occurs);
        }
        match &self.store[meta as usize] {
            MetaEntry::UnsolvedAb => {
                self.store[meta as usize] = MetaEntry::SolvedAb(ab.clone());
                Ok(())
            }
            other => unreachable!("solving an already solved or value meta: {other:?}"),
        }
    }

    fn occurs_in_value(&self, meta: MetaId, ty: &ValueType) -> bool {
        match self.resolve(ty) {
            ValueType::Meta(id) => id == meta,
            ValueType::Var(_) => false,
            ValueType::Data(_, args) => args.iter().any(|a| self.occurs_in_arg(meta, a)),
            ValueType::Thunk(c) => {
                c.ports.iter().any(|p| {
                    p.adjustment.instances.iter().any(|i| i.args.iter().any(|a| self.occurs_in_arg(meta, a)))
                        || self.occurs_in_value(meta, &p.value)
                }) || self.occurs_in_ability(meta, &c.peg.ability)
                    || self.occurs_in_value(meta, &c.peg.value)
            }
        }
    }

    fn occurs_in_arg(&self, meta: MetaId, arg: &TypeArg) -> bool {
        match arg {
            TypeArg::Val(v) => self.occurs_in_value(meta, v),
            TypeArg::Ab(ab) => self.occurs_in_ability(meta, ab),
        }
    }

    fn occurs_in_ability(&self, meta: MetaId, ab: &Ability) -> bool {
        let ab = self.resolve_ability(ab);
        if ab.head == AbilityHead::Meta(meta) {
            return true;
        }
        ab.instances.iter().any(|i| i.args.iter().any(|a| self.occurs_in_arg(meta, a)))
    }
}
