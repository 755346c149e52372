//! State templates: user-declared invariants and equivalences, placed onto
//! meta states either by strengthening a WHERE part or by entailment.

use std::collections::BTreeSet;

use super::types::TypeExpr;
use super::{Formula, MetaConstraint, MetaState, Step, Where};
use crate::term::{vars_of, Renamer, Subst, Term, Var};

/// `<store + rest, builtins>` over template variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub store: Vec<Term>,
    pub rest: Option<Var>,
    pub builtins: Vec<Term>,
}

impl Template {
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut v: BTreeSet<Var> = vars_of(self.store.iter().chain(self.builtins.iter())).into_iter().collect();
        v.extend(self.rest.iter().cloned());
        v
    }

    fn rename(&self, r: &mut Renamer) -> Template {
        Template {
            store: self.store.iter().map(|t| r.rename(t)).collect(),
            rest: self.rest.as_ref().map(|v| r.rename_var(v)),
            builtins: self.builtins.iter().map(|t| r.rename(t)).collect(),
        }
    }

    pub fn instantiate(&self, s: &Subst) -> MetaState {
        MetaState::new(s.apply_all(&self.store), self.rest.clone(), s.apply_all(&self.builtins), None)
    }
}

fn rename_conds(conds: &[MetaConstraint], r: &mut Renamer) -> Vec<MetaConstraint> {
    conds
        .iter()
        .map(|c| match c {
            MetaConstraint::FreshVars(vs) => MetaConstraint::FreshVars(vs.iter().map(|v| r.rename_var(v)).collect()),
            other => {
                let s = {
                    let mut s = Subst::new();
                    for v in cond_vars(other) {
                        s.insert_raw(v.clone(), Term::Var(r.rename_var(&v)));
                    }
                    s
                };
                other.apply(&s)
            }
        })
        .collect()
}

fn cond_vars(c: &MetaConstraint) -> Vec<Var> {
    match c {
        MetaConstraint::Eq(a, b) | MetaConstraint::Perm(a, b) => vars_of([a, b]),
        MetaConstraint::Type(_, t) => t.vars(),
        MetaConstraint::Holds(f) | MetaConstraint::Fails(f) => {
            let mut v = vars_of(f.premise.iter().chain(f.goal.iter()));
            v.extend(f.locals.iter().cloned());
            v
        }
        MetaConstraint::FreshVars(vs) => vs.clone(),
    }
}

/// `state where conds`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Invariant {
    pub state: Template,
    pub conds: Vec<MetaConstraint>,
}

/// `left ~ right where conds`, read symmetrically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivRule {
    pub left: Template,
    pub right: Template,
    pub conds: Vec<MetaConstraint>,
}

impl Invariant {
    pub fn renamed(&self) -> Invariant {
        let mut r = Renamer::new();
        Invariant { state: self.state.rename(&mut r), conds: rename_conds(&self.conds, &mut r) }
    }
}

impl EquivRule {
    pub fn renamed(&self) -> EquivRule {
        let mut r = Renamer::new();
        EquivRule {
            left: self.left.rename(&mut r),
            right: self.right.rename(&mut r),
            conds: rename_conds(&self.conds, &mut r),
        }
    }

    pub fn flipped(&self) -> EquivRule {
        EquivRule { left: self.right.clone(), right: self.left.clone(), conds: self.conds.clone() }
    }
}

/// Binding of a store-rest variable to `atoms + rest`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestBinding {
    pub var: Var,
    pub atoms: Vec<Term>,
    pub rest: Option<Var>,
}

/// One way of placing a state into a template.
#[derive(Clone, Debug)]
pub struct Placement {
    pub m: Where,
    /// Binding of the state's store rest, if it had one.
    pub state_rest: Option<RestBinding>,
    /// Built-ins bound to the state's built-in rest, if it had one.
    pub state_brest: Option<(Var, Vec<Term>)>,
    /// Binding of the template's store rest, if it has one.
    pub template_rest: Option<RestBinding>,
}

#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug)]
pub enum Fit {
    Fits(Placement),
    Unknown(String),
}

fn rest_type(conds: &[MetaConstraint], m: &Where, v: &Var) -> TypeExpr {
    for c in conds {
        if let MetaConstraint::Type(ty, Term::Var(w)) = c {
            if w == v {
                return ty.clone();
            }
        }
    }
    m.type_of(v)
}

fn elem_type(m: &Where, ty: &TypeExpr) -> TypeExpr {
    match m.defs().resolve(ty) {
        TypeExpr::Mset(e) => (**e).clone(),
        _ => TypeExpr::Any,
    }
}

fn mset_meet(m: &Where, a: &TypeExpr, b: &TypeExpr) -> Option<TypeExpr> {
    let norm = |t: &TypeExpr| match m.defs().resolve(t) {
        TypeExpr::Mset(_) => t.clone(),
        _ => TypeExpr::Mset(Box::new(TypeExpr::Any)),
    };
    m.defs().meet(&norm(a), &norm(b))
}

/// Injective partial maps from `n` state atoms into `k` template atoms.
fn partial_maps(n: usize, k: usize) -> Vec<Vec<Option<usize>>> {
    fn go(
        i: usize,
        n: usize,
        k: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<Option<usize>>,
        out: &mut Vec<Vec<Option<usize>>>,
    ) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        cur.push(None);
        go(i + 1, n, k, used, cur, out);
        cur.pop();
        for j in 0..k {
            if !used[j] {
                used[j] = true;
                cur.push(Some(j));
                go(i + 1, n, k, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut vec![false; k], &mut Vec::new(), &mut out);
    out
}

fn same_functor(a: &Term, b: &Term) -> bool {
    a.functor() == b.functor()
}

/// Strengthens `m` so that `state` lies in the template, one placement per
/// way of distributing the state's atoms. `tmpl` and `conds` must be renamed
/// apart. Inconsistent placements are dropped.
pub fn place(state: &MetaState, tmpl: &Template, conds: &[MetaConstraint], m: &Where) -> Vec<Fit> {
    let mut out = Vec::new();
    let tr = state.rest.as_ref().map(|r| m.type_of(r));
    let tt = tmpl.rest.as_ref().map(|s| rest_type(conds, m, s));
    'maps: for map in partial_maps(state.store.len(), tmpl.store.len()) {
        let mut cs: Vec<MetaConstraint> = Vec::new();
        let mut used = vec![false; tmpl.store.len()];
        let mut unmatched_state = Vec::new();
        for (i, j) in map.iter().enumerate() {
            match j {
                Some(j) => {
                    if !same_functor(&state.store[i], &tmpl.store[*j]) {
                        continue 'maps;
                    }
                    used[*j] = true;
                    cs.push(MetaConstraint::Eq(state.store[i].clone(), tmpl.store[*j].clone()));
                }
                None => unmatched_state.push(state.store[i].clone()),
            }
        }
        let unmatched_tmpl: Vec<Term> =
            tmpl.store.iter().zip(&used).filter(|(_, u)| !**u).map(|(t, _)| t.clone()).collect();
        if !unmatched_state.is_empty() && tmpl.rest.is_none() {
            continue;
        }
        if !unmatched_tmpl.is_empty() && state.rest.is_none() {
            continue;
        }
        if let Some(tt) = &tt {
            let e = elem_type(m, tt);
            for u in &unmatched_state {
                cs.push(MetaConstraint::Type(e.clone(), u.clone()));
            }
        }
        if let Some(tr) = &tr {
            let e = elem_type(m, tr);
            for v in &unmatched_tmpl {
                cs.push(MetaConstraint::Type(e.clone(), v.clone()));
            }
        }
        // the part of the state rest that stays unknown
        let mut shared: Option<(Var, TypeExpr)> = None;
        if let (Some(r), Some(tr), Some(tt)) = (&state.rest, &tr, &tt) {
            if let Some(ty) = mset_meet(m, tr, tt) {
                shared = Some((Var::fresh(r.name()), ty));
            }
        }
        if let Some((v, ty)) = &shared {
            cs.push(MetaConstraint::Type(ty.clone(), Term::Var(v.clone())));
        }
        for c in conds {
            match c {
                MetaConstraint::Type(_, Term::Var(v)) if Some(v) == tmpl.rest.as_ref() => {}
                other => cs.push(other.clone()),
            }
        }
        let bt = tmpl.builtins.clone();
        let mut brest = None;
        match &state.brest {
            Some(b) => {
                cs.push(MetaConstraint::Holds(Formula {
                    premise: bt.clone(),
                    locals: Vec::new(),
                    goal: state.builtins.clone(),
                }));
                brest = Some((b.clone(), bt.clone()));
            }
            None => {
                cs.push(MetaConstraint::Holds(Formula {
                    premise: bt.clone(),
                    locals: Vec::new(),
                    goal: state.builtins.clone(),
                }));
                cs.push(MetaConstraint::Holds(Formula {
                    premise: state.builtins.clone(),
                    locals: Vec::new(),
                    goal: bt.clone(),
                }));
            }
        }
        let new_rest = shared.as_ref().map(|(v, _)| v.clone());
        match m.add_all(&cs) {
            Step::Inconsistent => {}
            Step::Unknown(reason) => out.push(Fit::Unknown(reason)),
            Step::Ok(m2) => out.push(Fit::Fits(Placement {
                m: m2,
                state_rest: state.rest.as_ref().map(|r| RestBinding {
                    var: r.clone(),
                    atoms: unmatched_tmpl.clone(),
                    rest: new_rest.clone(),
                }),
                state_brest: brest,
                template_rest: tmpl.rest.as_ref().map(|s| RestBinding {
                    var: s.clone(),
                    atoms: unmatched_state.clone(),
                    rest: new_rest.clone(),
                }),
            })),
        }
    }
    out
}

/// Every injective total assignment of `pattern` atoms into `store`,
/// extending `s`, with the positions used.
fn match_all(pattern: &[Term], store: &[Term], s: &Subst) -> Vec<(Vec<usize>, Subst)> {
    let heads: Vec<&Term> = pattern.iter().collect();
    crate::semantics::head_matches(&heads, store, s)
}

fn remainder(store: &[Term], used: &[usize]) -> Vec<Term> {
    let mut r: Vec<Term> =
        store.iter().enumerate().filter(|(i, _)| !used.contains(i)).map(|(_, t)| t.clone()).collect();
    r.sort();
    r
}

fn builtins_equivalent(a: &[Term], b: &[Term], m: &Where) -> bool {
    m.entails(&MetaConstraint::Holds(Formula { premise: a.to_vec(), locals: Vec::new(), goal: b.to_vec() }))
        && m.entails(&MetaConstraint::Holds(Formula { premise: b.to_vec(), locals: Vec::new(), goal: a.to_vec() }))
}

/// Whether the rest `atoms + rest` satisfies the template rest type for
/// every grounding.
fn rest_entailed(atoms: &[Term], rest: &Option<Var>, ty: &TypeExpr, m: &Where) -> bool {
    let e = elem_type(m, ty);
    atoms.iter().all(|a| m.entails(&MetaConstraint::Type(e.clone(), a.clone())))
        && match rest {
            None => true,
            Some(r) => {
                let rt = m.type_of(r);
                let rt = match m.defs().resolve(&rt) {
                    TypeExpr::Mset(_) => rt,
                    _ => TypeExpr::Mset(Box::new(TypeExpr::Any)),
                };
                m.defs().subtype(&rt, &TypeExpr::Mset(Box::new(e)))
            }
        }
}

fn conds_entailed(conds: &[MetaConstraint], rest_var: Option<&Var>, s: &Subst, m: &Where) -> bool {
    conds.iter().all(|c| match c {
        MetaConstraint::Type(_, Term::Var(v)) if Some(v) == rest_var => true,
        c => {
            let c = c.apply(s);
            let unbound =
                cond_vars(&c).iter().any(|v| s.get(v).is_none() && !m.vars().contains(v) && Some(v) != rest_var);
            !unbound && m.entails(&c)
        }
    })
}

/// Whether every grounding of `state` lies in the template.
pub fn covers(state: &MetaState, inv: &Invariant, m: &Where) -> bool {
    if state.failed || state.brest.is_some() {
        return false;
    }
    let inv = inv.renamed();
    let tmpl = &inv.state;
    for (used, s) in match_all(&tmpl.store, &state.store, &Subst::new()) {
        let s = crate::term::finish_match(s);
        let rem = remainder(&state.store, &used);
        let rest_ok = match &tmpl.rest {
            None => rem.is_empty() && state.rest.is_none(),
            Some(r) => rest_entailed(&rem, &state.rest, &rest_type(&inv.conds, m, r), m),
        };
        if rest_ok
            && builtins_equivalent(&state.builtins, &s.apply_all(&tmpl.builtins), m)
            && conds_entailed(&inv.conds, tmpl.rest.as_ref(), &s, m)
        {
            return true;
        }
    }
    false
}

/// Whether `x ~ y` holds for every grounding by a single use of `rule`, in
/// either direction.
pub fn related(x: &MetaState, y: &MetaState, rule: &EquivRule, m: &Where) -> bool {
    if x.failed || y.failed || x.brest.is_some() || y.brest.is_some() {
        return false;
    }
    let r = rule.renamed();
    [r.clone(), r.flipped()].iter().any(|r| related_directed(x, y, r, m))
}

fn related_directed(x: &MetaState, y: &MetaState, r: &EquivRule, m: &Where) -> bool {
    if r.left.rest != r.right.rest {
        return false;
    }
    for (ux, s1) in match_all(&r.left.store, &x.store, &Subst::new()) {
        for (uy, s) in match_all(&r.right.store, &y.store, &s1) {
            let s = crate::term::finish_match(s);
            let (rx, ry) = (remainder(&x.store, &ux), remainder(&y.store, &uy));
            let rest_ok = match &r.left.rest {
                None => rx.is_empty() && ry.is_empty() && x.rest.is_none() && y.rest.is_none(),
                Some(v) => rx == ry && x.rest == y.rest && rest_entailed(&rx, &x.rest, &rest_type(&r.conds, m, v), m),
            };
            if rest_ok
                && builtins_equivalent(&x.builtins, &s.apply_all(&r.left.builtins), m)
                && builtins_equivalent(&y.builtins, &s.apply_all(&r.right.builtins), m)
                && conds_entailed(&r.conds, r.left.rest.as_ref(), &s, m)
            {
                return true;
            }
        }
    }
    false
}

/// Placements of `state` into the left side of `rule`, each paired with the
/// instance of the right side it is related to.
pub fn place_equiv(state: &MetaState, rule: &EquivRule, m: &Where) -> Vec<(Fit, Option<MetaState>)> {
    let r = rule.renamed();
    if r.left.rest != r.right.rest {
        return vec![(Fit::Unknown("equivalence sides with different rests".into()), None)];
    }
    place(state, &r.left, &r.conds, m)
        .into_iter()
        .map(|fit| match fit {
            Fit::Fits(p) => {
                let mut other = r.right.instantiate(&p.m.solution());
                if let Some(b) = &p.template_rest {
                    other = other.bind_rest(&b.var, &b.atoms, b.rest.clone());
                }
                let other = other.normalize(&p.m);
                (Fit::Fits(p), Some(other))
            }
            unknown => (unknown, None),
        })
        .collect()
}
