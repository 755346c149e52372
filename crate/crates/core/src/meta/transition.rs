//! Transitions between meta states.

use std::collections::BTreeSet;

use super::{Formula, MetaConstraint, MetaState, Step, Where};
use crate::builtin;
use crate::builtin::BuiltinStore;
use crate::lang::{PreApplication, Program};
use crate::semantics::{canonicalize_relative, head_matches, CanonState, Label, StateRepr};
use crate::term::{finish_match, Subst, Term, Var};

#[derive(Clone, Debug)]
pub struct MetaTransition {
    pub label: Label,
    pub target: MetaState,
    /// The source's WHERE part extended with the transition's fresh locals.
    pub m: Where,
}

/// A transition that applies for some but not all groundings.
#[derive(Clone, Debug)]
pub struct Undecided {
    pub label: Label,
    /// Conditions over value variables under which it applies; empty when
    /// the reason lies outside the decidable fragment.
    pub condition: Vec<Term>,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct Successors {
    pub transitions: Vec<MetaTransition>,
    pub undecided: Vec<Undecided>,
}

/// `holds(B)` for a state's built-ins: satisfiable for every grounding,
/// with names of object variables read existentially.
pub fn satisfiable_formula(builtins: &[Term], m: &Where) -> Formula {
    let mut locals: Vec<Var> = Vec::new();
    for v in crate::term::vars_of(builtins) {
        if m.is_name_var(&v) {
            locals.push(v);
        }
    }
    Formula { premise: Vec::new(), locals, goal: builtins.to_vec() }
}

fn value_comparisons(goal: &[Term], m: &Where) -> Vec<Term> {
    goal.iter().filter(|g| builtin::is_comparison(g) && g.vars().iter().all(|v| m.is_value_var(v))).cloned().collect()
}

/// Every transition that applies to `s` for all groundings of `m`. `s` is
/// expected to be normalized under `m`.
pub fn meta_successors(s: &MetaState, m: &Where, prog: &Program) -> Successors {
    let mut out = Successors::default();
    if s.failed || s.brest.is_some() {
        return out;
    }
    if !m.entails(&MetaConstraint::Holds(satisfiable_formula(&s.builtins, m))) {
        return out;
    }
    let mut avoid = s.all_vars();
    avoid.extend(m.vars());
    for (ri, rule) in prog.rules.iter().enumerate() {
        let (r, _) = rule.rename_apart(&avoid);
        let heads: Vec<&Term> = r.head().collect();
        let locals: Vec<Var> = r.local_vars().into_iter().collect();
        for (positions, theta) in head_matches(&heads, &s.store, &Subst::new()) {
            let theta = finish_match(theta);
            let label = Label::Rule { rule: ri, positions: positions.clone() };
            let guard = theta.apply_all(&r.guard);
            let cond = MetaConstraint::Holds(Formula {
                premise: s.builtins.clone(),
                locals: locals.clone(),
                goal: guard.clone(),
            });
            if !m.entails(&cond) {
                match m.add(&cond) {
                    Step::Inconsistent => {}
                    Step::Ok(_) => out.undecided.push(Undecided {
                        label,
                        condition: value_comparisons(&guard, m),
                        reason: format!("guard {} not decided", Formula::atoms(guard.clone())),
                    }),
                    Step::Unknown(reason) => out.undecided.push(Undecided { label, condition: Vec::new(), reason }),
                }
                continue;
            }
            let Some(m2) = m.add(&MetaConstraint::FreshVars(locals.clone())).ok() else { continue };
            let removed: BTreeSet<usize> = positions[r.kept.len()..].iter().copied().collect();
            let mut store: Vec<Term> =
                s.store.iter().enumerate().filter(|(i, _)| !removed.contains(i)).map(|(_, t)| t.clone()).collect();
            store.extend(theta.apply_all(&r.body));
            let mut builtins = s.builtins.clone();
            builtins.extend(guard);
            let target = MetaState::new(store, s.rest.clone(), builtins, None).normalize(&m2);
            out.transitions.push(MetaTransition { label, target, m: m2 });
        }
    }
    for (i, t) in s.store.iter().enumerate() {
        if builtin::is_builtin_atom(t) {
            let mut store = s.store.clone();
            store.remove(i);
            let mut builtins = s.builtins.clone();
            builtins.push(t.clone());
            let target = MetaState::new(store, s.rest.clone(), builtins, None).normalize(m);
            out.transitions.push(MetaTransition {
                label: Label::Builtin { position: i, atom: t.clone() },
                target,
                m: m.clone(),
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StrengthenError {
    /// The atom, or a head atom of the pre-application, is not in the store.
    NotInState(Term),
    Unknown(String),
}

fn step_option(step: Step) -> Result<Option<Where>, StrengthenError> {
    match step {
        Step::Ok(w) => Ok(Some(w)),
        Step::Inconsistent => Ok(None),
        Step::Unknown(r) => Err(StrengthenError::Unknown(r)),
    }
}

/// The greatest substate of `s` to which `pa` applies: `m` extended with
/// satisfiable built-ins, the entailed guard and fresh locals. `None` when
/// no grounding admits the application.
pub fn strengthen_for_rule(s: &MetaState, m: &Where, pa: &PreApplication) -> Result<Option<Where>, StrengthenError> {
    let mut store = s.store.clone();
    for h in pa.instance.head() {
        let Some(i) = store.iter().position(|t| t == h) else {
            return Err(StrengthenError::NotInState(h.clone()));
        };
        store.remove(i);
    }
    let locals: Vec<Var> = pa.local_vars.iter().cloned().collect();
    let cs = [
        MetaConstraint::Holds(satisfiable_formula(&s.builtins, m)),
        MetaConstraint::Holds(Formula {
            premise: s.builtins.clone(),
            locals: locals.clone(),
            goal: pa.instance.guard.clone(),
        }),
        MetaConstraint::FreshVars(locals),
    ];
    step_option(m.add_all(&cs))
}

/// Substates of `s` in which adding the built-in `b` to the store leads to a
/// non-failed and to a failed state, respectively.
pub fn strengthen_for_builtin(
    s: &MetaState,
    m: &Where,
    b: &Term,
) -> Result<(Option<Where>, Option<Where>), StrengthenError> {
    if !s.store.contains(b) {
        return Err(StrengthenError::NotInState(b.clone()));
    }
    let mut conj = s.builtins.clone();
    conj.push(b.clone());
    let f = satisfiable_formula(&conj, m);
    let ok = step_option(m.add(&MetaConstraint::Holds(f.clone())))?;
    let fail = step_option(m.add(&MetaConstraint::Fails(f)))?;
    Ok((ok, fail))
}

/// Identity of a normalized meta state up to renaming of the fresh
/// variables introduced by transitions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey {
    pub state: CanonState,
    pub rest: Option<Var>,
    pub brest: Option<Var>,
}

pub fn state_key(s: &MetaState, m: &Where) -> StateKey {
    if s.failed {
        return StateKey { state: CanonState::failure(), rest: None, brest: None };
    }
    let fixed: BTreeSet<Var> = s.vars().into_iter().filter(|v| !m.fresh_vars().contains(v)).collect();
    let state = match BuiltinStore::from_atoms(&s.builtins) {
        Ok(b) => canonicalize_relative(&StateRepr::new(s.store.clone(), b), &fixed),
        Err(_) => {
            let mut store = s.store.clone();
            store.sort();
            CanonState { failed: false, store, builtins: s.builtins.clone() }
        }
    };
    StateKey { state, rest: s.rest.clone(), brest: s.brest.clone() }
}
