//! Meta level: the ground representation, constrained meta states and the
//! meta constraint theory.
//!
//! Meta variables are ordinary [`Var`]s; object variables inside a ground
//! meta term are names built with [`Term::name_of`]. A meta variable whose
//! type excludes variable names is reasoned about as a fixed value, so modal
//! constraints over such variables reduce to built-in constraints on them.

pub mod sample;
pub mod template;
pub mod transition;
pub mod types;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::builtin::{self, BuiltinStore, Entailment};
use crate::semantics::StateRepr;
use crate::term::{vars_of, Subst, Term, Var};
pub use types::{TypeDefs, TypeExpr};

/// `premise -> exists locals. goal`; an empty premise stands for `true`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    pub premise: Vec<Term>,
    pub locals: Vec<Var>,
    pub goal: Vec<Term>,
}

impl Formula {
    pub fn atoms(goal: Vec<Term>) -> Self {
        Formula { premise: Vec::new(), locals: Vec::new(), goal }
    }

    pub fn apply(&self, s: &Subst) -> Formula {
        Formula { premise: s.apply_all(&self.premise), locals: self.locals.clone(), goal: s.apply_all(&self.goal) }
    }
}

fn write_conj(f: &mut fmt::Formatter<'_>, ts: &[Term]) -> fmt::Result {
    if ts.is_empty() {
        return write!(f, "true");
    }
    for (i, t) in ts.iter().enumerate() {
        if i > 0 {
            write!(f, " & ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.premise.is_empty() {
            write_conj(f, &self.premise)?;
            write!(f, " -> ")?;
        }
        if !self.locals.is_empty() {
            write!(f, "exists ")?;
            for (i, v) in self.locals.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{v}")?;
            }
            write!(f, ". ")?;
        }
        write_conj(f, &self.goal)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MetaConstraint {
    Eq(Term, Term),
    Type(TypeExpr, Term),
    /// The named formula is valid in the built-in theory.
    Holds(Formula),
    /// The named formula's premise and goal are jointly unsatisfiable.
    Fails(Formula),
    Perm(Term, Term),
    /// Pairwise different variable names not occurring elsewhere.
    FreshVars(Vec<Var>),
}

impl MetaConstraint {
    pub fn apply(&self, s: &Subst) -> MetaConstraint {
        match self {
            MetaConstraint::Eq(a, b) => MetaConstraint::Eq(s.apply(a), s.apply(b)),
            MetaConstraint::Type(ty, t) => MetaConstraint::Type(ty.clone(), s.apply(t)),
            MetaConstraint::Holds(f) => MetaConstraint::Holds(f.apply(s)),
            MetaConstraint::Fails(f) => MetaConstraint::Fails(f.apply(s)),
            MetaConstraint::Perm(a, b) => MetaConstraint::Perm(s.apply(a), s.apply(b)),
            MetaConstraint::FreshVars(vs) => MetaConstraint::FreshVars(vs.clone()),
        }
    }
}

impl fmt::Display for MetaConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetaConstraint::Eq(a, b) => write!(f, "{a} = {b}"),
            MetaConstraint::Type(ty, t) => write!(f, "type({ty}, {t})"),
            MetaConstraint::Holds(x) => write!(f, "holds({x})"),
            MetaConstraint::Fails(x) => write!(f, "fails({x})"),
            MetaConstraint::Perm(a, b) => write!(f, "perm({a}, {b})"),
            MetaConstraint::FreshVars(vs) => {
                write!(f, "freshVars([")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "])")
            }
        }
    }
}

/// Result of extending a WHERE part.
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug)]
pub enum Step {
    Ok(Where),
    Inconsistent,
    /// Outside the decidable fragment.
    Unknown(String),
}

impl Step {
    pub fn ok(self) -> Option<Where> {
        match self {
            Step::Ok(w) => Some(w),
            _ => None,
        }
    }

    pub fn and_then(self, f: impl FnOnce(Where) -> Step) -> Step {
        match self {
            Step::Ok(w) => f(w),
            other => other,
        }
    }
}

#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug)]
enum Modal {
    Implied,
    Strengthened(Where),
    Refuted,
    Unknown(String),
}

/// Outcome of `m_solve`.
#[derive(Clone, Debug)]
pub enum Solve {
    Consistent(Subst),
    Inconsistent,
    Unknown(String),
}

/// A conjunction of meta constraints in solved form.
#[derive(Clone, Debug)]
pub struct Where {
    defs: Arc<TypeDefs>,
    types: BTreeMap<Var, TypeExpr>,
    /// Meta equalities and the arithmetic content of modal constraints.
    params: BuiltinStore,
    perms: Vec<(Term, Term)>,
    fresh: BTreeSet<Var>,
    modal: Vec<MetaConstraint>,
}

fn negate_comparison(t: &Term) -> Option<Term> {
    let (name, args) = (t.functor()?.0, t.args());
    let neg = match name {
        "<" => ">=",
        "=<" => ">",
        ">" => "=<",
        ">=" => "<",
        _ => return None,
    };
    Some(Term::app(neg, args.to_vec()))
}

/// Multiset difference of syntactically equal items.
fn remove_common<'a>(a: &[&'a Term], b: &[&'a Term]) -> (Vec<&'a Term>, Vec<&'a Term>) {
    let mut rest_b: Vec<&Term> = b.to_vec();
    let mut rest_a = Vec::new();
    for x in a {
        match rest_b.iter().position(|y| y == x) {
            Some(i) => {
                rest_b.remove(i);
            }
            None => rest_a.push(*x),
        }
    }
    (rest_a, rest_b)
}

impl Where {
    pub fn new(defs: Arc<TypeDefs>) -> Self {
        Where {
            defs,
            types: BTreeMap::new(),
            params: BuiltinStore::new(),
            perms: Vec::new(),
            fresh: BTreeSet::new(),
            modal: Vec::new(),
        }
    }

    pub fn defs(&self) -> &TypeDefs {
        &self.defs
    }

    pub fn defs_arc(&self) -> Arc<TypeDefs> {
        self.defs.clone()
    }

    pub fn type_of(&self, v: &Var) -> TypeExpr {
        self.types.get(v).cloned().unwrap_or(TypeExpr::Any)
    }

    pub fn typed_vars(&self) -> impl Iterator<Item = (&Var, &TypeExpr)> {
        self.types.iter()
    }

    pub fn fresh_vars(&self) -> &BTreeSet<Var> {
        &self.fresh
    }

    pub fn perms(&self) -> &[(Term, Term)] {
        &self.perms
    }

    pub fn params(&self) -> &BuiltinStore {
        &self.params
    }

    pub fn solution(&self) -> Subst {
        self.params.solution().cloned().unwrap_or_default()
    }

    pub fn resolve(&self, t: &Term) -> Term {
        self.solution().apply(t)
    }

    /// Whether `v` ranges over names of object variables.
    pub fn is_name_var(&self, v: &Var) -> bool {
        matches!(self.defs.resolve(&self.type_of(v)), TypeExpr::Var)
    }

    /// Whether `v` ranges over terms without object variables only.
    pub fn is_value_var(&self, v: &Var) -> bool {
        self.defs.is_value_type(&self.type_of(v))
    }

    fn all_value_vars(&self, ts: &[&[Term]], locals: &[Var]) -> bool {
        ts.iter().flat_map(|x| x.iter()).flat_map(|t| t.vars()).all(|v| locals.contains(&v) || self.is_value_var(&v))
    }

    /// Every meta variable mentioned by the constraints.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out: BTreeSet<Var> = self.types.keys().cloned().collect();
        out.extend(vars_of(self.params.atoms()));
        out.extend(vars_of(self.params.assumed_int()));
        for (a, b) in &self.perms {
            out.extend(a.vars());
            out.extend(b.vars());
        }
        out.extend(self.fresh.iter().cloned());
        out
    }

    fn meet_type(&mut self, v: &Var, ty: &TypeExpr) -> Result<bool, ()> {
        let cur = self.type_of(v);
        let new = self.defs.meet(&cur, ty).ok_or(())?;
        if new != cur {
            self.types.insert(v.clone(), new);
            return Ok(true);
        }
        if !self.types.contains_key(v) {
            self.types.insert(v.clone(), new);
        }
        Ok(false)
    }

    /// Brings the constraints into solved form.
    fn close(mut self) -> Step {
        loop {
            if !self.params.is_satisfiable() {
                return Step::Inconsistent;
            }
            let sol = self.solution();
            let mut changed = false;
            let typed: Vec<(Var, TypeExpr)> = self.types.iter().map(|(v, t)| (v.clone(), t.clone())).collect();
            for (v, ty) in typed {
                let t = sol.apply(&Term::Var(v.clone()));
                if t == Term::Var(v.clone()) {
                    continue;
                }
                let Some(reqs) = self.defs.requirements(&t, &ty) else { return Step::Inconsistent };
                for (w, r) in reqs {
                    match self.meet_type(&w, &r) {
                        Ok(c) => changed |= c,
                        Err(()) => return Step::Inconsistent,
                    }
                }
            }
            for v in self.params.int_vars().to_vec() {
                match self.meet_type(&v, &TypeExpr::Int) {
                    Ok(c) => changed |= c,
                    Err(()) => return Step::Inconsistent,
                }
            }
            let ints: Vec<Var> = self
                .types
                .iter()
                .filter(|(_, t)| *self.defs.resolve(t) == TypeExpr::Int)
                .map(|(v, _)| v.clone())
                .collect();
            for v in ints {
                let t = Term::Var(v);
                if !self.params.assumed_int().contains(&t) {
                    self.params = self.params.assume_int(t);
                    changed = true;
                }
            }
            if !self.params.is_satisfiable() {
                return Step::Inconsistent;
            }
            let sol = self.solution();
            for (a, b) in &self.perms {
                let (a, b) = (sol.apply(a), sol.apply(b));
                let (ia, ta) = a.as_list();
                let (ib, tb) = b.as_list();
                let (ra, rb) = remove_common(&ia, &ib);
                let closed = ta.is_nil() && tb.is_nil();
                if closed && ia.len() != ib.len() {
                    return Step::Inconsistent;
                }
                let ground = ra.iter().chain(rb.iter()).all(|t| t.is_ground());
                if closed && ground && (!ra.is_empty() || !rb.is_empty()) {
                    return Step::Inconsistent;
                }
            }
            let mut seen = BTreeSet::new();
            for v in &self.fresh {
                if !seen.insert(sol.apply(&Term::Var(v.clone()))) {
                    return Step::Inconsistent;
                }
            }
            if !changed {
                return Step::Ok(self);
            }
        }
    }

    pub fn add(&self, c: &MetaConstraint) -> Step {
        let mut w = self.clone();
        match c {
            MetaConstraint::Eq(a, b) => {
                let Ok(p) = w.params.add(&Term::app("=", vec![a.clone(), b.clone()])) else {
                    return Step::Unknown(format!("cannot represent `{c}`"));
                };
                w.params = p;
                w.close()
            }
            MetaConstraint::Type(ty, t) => {
                if let Err(e) = self.defs.check(ty) {
                    return Step::Unknown(e.to_string());
                }
                let t = self.resolve(t);
                let Some(reqs) = self.defs.requirements(&t, ty) else { return Step::Inconsistent };
                for (v, r) in reqs {
                    if w.meet_type(&v, &r).is_err() {
                        return Step::Inconsistent;
                    }
                }
                w.close()
            }
            MetaConstraint::Perm(a, b) => {
                let list = TypeExpr::List(Box::new(TypeExpr::Any));
                for t in [a, b] {
                    let Some(reqs) = self.defs.requirements(&self.resolve(t), &list) else {
                        return Step::Inconsistent;
                    };
                    for (v, r) in reqs {
                        if w.meet_type(&v, &r).is_err() {
                            return Step::Inconsistent;
                        }
                    }
                }
                w.perms.push((a.clone(), b.clone()));
                w.close()
            }
            MetaConstraint::FreshVars(vs) => {
                for v in vs {
                    if w.meet_type(v, &TypeExpr::Var).is_err() {
                        return Step::Inconsistent;
                    }
                    w.fresh.insert(v.clone());
                }
                w.close()
            }
            MetaConstraint::Holds(f) => match self.holds(f) {
                Modal::Implied => {
                    w.modal.push(c.clone());
                    Step::Ok(w)
                }
                Modal::Strengthened(mut s) => {
                    s.modal.push(c.clone());
                    Step::Ok(s)
                }
                Modal::Refuted => Step::Inconsistent,
                Modal::Unknown(m) => Step::Unknown(m),
            },
            MetaConstraint::Fails(f) => match self.fails(f) {
                Modal::Implied => {
                    w.modal.push(c.clone());
                    Step::Ok(w)
                }
                Modal::Strengthened(mut s) => {
                    s.modal.push(c.clone());
                    Step::Ok(s)
                }
                Modal::Refuted => Step::Inconsistent,
                Modal::Unknown(m) => Step::Unknown(m),
            },
        }
    }

    pub fn add_all<'a>(&self, cs: impl IntoIterator<Item = &'a MetaConstraint>) -> Step {
        let mut w = self.clone();
        for c in cs {
            match w.add(c) {
                Step::Ok(n) => w = n,
                other => return other,
            }
        }
        Step::Ok(w)
    }

    /// Whether every grounding in `[self]` satisfies `c`.
    pub fn entails(&self, c: &MetaConstraint) -> bool {
        let sol = self.solution();
        match c {
            MetaConstraint::Eq(a, b) => sol.apply(a) == sol.apply(b),
            MetaConstraint::Type(ty, t) => self.type_entailed(&sol.apply(t), ty),
            MetaConstraint::Holds(f) => matches!(self.holds(f), Modal::Implied),
            MetaConstraint::Fails(f) => matches!(self.fails(f), Modal::Implied),
            MetaConstraint::Perm(a, b) => self.perm_entailed(&sol.apply(a), &sol.apply(b)),
            MetaConstraint::FreshVars(vs) => vs.iter().all(|v| self.fresh.contains(v)),
        }
    }

    fn type_entailed(&self, t: &Term, ty: &TypeExpr) -> bool {
        self.defs.entails(t, ty, &self.types)
    }

    fn perm_entailed(&self, a: &Term, b: &Term) -> bool {
        let (ia, ta) = a.as_list();
        let (ib, tb) = b.as_list();
        let (ra, rb) = remove_common(&ia, &ib);
        if !ra.is_empty() || !rb.is_empty() {
            return false;
        }
        if ta == tb {
            return true;
        }
        let sol = self.solution();
        self.perms.iter().any(|(x, y)| {
            let (x, y) = (sol.apply(x), sol.apply(y));
            (&x == ta && &y == tb) || (&x == tb && &y == ta)
        })
    }

    /// Built-ins over `terms` are decided by `params` as fixed values,
    /// except for names of object variables which stay universal.
    fn holds(&self, f: &Formula) -> Modal {
        let sol = self.solution();
        let f = f.apply(&sol);
        let Ok(base) = self.params.add_all(&f.premise) else {
            return Modal::Unknown(format!("unsupported premise in `{f}`"));
        };
        if !base.is_satisfiable() {
            return Modal::Implied;
        }
        let locals: BTreeSet<Var> = f.locals.iter().cloned().collect();
        match base.entails(&locals, &f.goal) {
            Entailment::Yes => return Modal::Implied,
            Entailment::No => return Modal::Refuted,
            Entailment::Unknown => {}
        }
        let premise_names = f.premise.iter().flat_map(|t| t.vars()).any(|v| self.is_name_var(&v));
        let universal_comparison = f.goal.iter().any(|g| {
            builtin::is_comparison(g) && g.vars().iter().any(|v| self.is_name_var(v) && !f.locals.contains(v))
        });
        if universal_comparison && !premise_names {
            // a comparison over an unconstrained object variable is never valid
            return Modal::Refuted;
        }
        if !self.all_value_vars(&[&f.premise, &f.goal], &f.locals) {
            return Modal::Unknown(format!("`{f}` mentions variables that may name object variables"));
        }
        if self.params.entails(&BTreeSet::new(), &f.premise) != Entailment::Yes {
            return Modal::Unknown(format!("`{f}` depends on its premise"));
        }
        // the goal must hold for every grounding: require it of the values
        let mut ren = Subst::new();
        for l in &f.locals {
            ren.insert_raw(l.clone(), Term::Var(Var::fresh(l.name())));
        }
        let goal = ren.apply_all(&f.goal);
        let Ok(params) = self.params.add_all(&goal) else {
            return Modal::Unknown(format!("unsupported goal in `{f}`"));
        };
        let mut w = self.clone();
        w.params = params;
        match w.close() {
            Step::Ok(w) => Modal::Strengthened(w),
            Step::Inconsistent => Modal::Refuted,
            Step::Unknown(m) => Modal::Unknown(m),
        }
    }

    fn fails(&self, f: &Formula) -> Modal {
        let sol = self.solution();
        let f = f.apply(&sol);
        let Ok(base) = self.params.add_all(&f.premise) else {
            return Modal::Unknown(format!("unsupported premise in `{f}`"));
        };
        let Ok(both) = base.add_all(&f.goal) else {
            return Modal::Unknown(format!("unsupported goal in `{f}`"));
        };
        if !both.is_satisfiable() {
            return Modal::Implied;
        }
        let locals: BTreeSet<Var> = f.locals.iter().cloned().collect();
        if base.entails(&locals, &f.goal) == Entailment::Yes {
            return Modal::Refuted;
        }
        if !self.all_value_vars(&[&f.premise, &f.goal], &[])
            || self.params.entails(&BTreeSet::new(), &f.premise) != Entailment::Yes
            || !f.locals.is_empty()
        {
            return Modal::Unknown(format!("cannot decide failure of `{f}`"));
        }
        let [g] = f.goal.as_slice() else {
            return Modal::Unknown(format!("cannot negate `{f}`"));
        };
        let Some(neg) = negate_comparison(g) else {
            return Modal::Unknown(format!("cannot negate `{g}`"));
        };
        let Ok(params) = self.params.add(&neg) else {
            return Modal::Unknown(format!("unsupported goal in `{f}`"));
        };
        let mut w = self.clone();
        w.params = params;
        match w.close() {
            Step::Ok(w) => Modal::Strengthened(w),
            Step::Inconsistent => Modal::Refuted,
            Step::Unknown(m) => Modal::Unknown(m),
        }
    }

    /// Decides an atom of a state's built-in store that mentions only
    /// value variables: `Some(true)` when it holds for every grounding,
    /// `Some(false)` when it holds for none.
    pub fn decide_atom(&self, a: &Term) -> Option<bool> {
        let a = self.resolve(a);
        if !a.vars().iter().all(|v| self.is_value_var(v)) {
            return None;
        }
        match self.params.entails(&BTreeSet::new(), std::slice::from_ref(&a)) {
            Entailment::Yes => Some(true),
            Entailment::No => Some(false),
            Entailment::Unknown => None,
        }
    }

    /// The constraints in a readable form.
    pub fn constraints(&self) -> Vec<MetaConstraint> {
        let sol = self.solution();
        let mut out = Vec::new();
        for (v, t) in sol.iter() {
            out.push(MetaConstraint::Eq(Term::Var(v.clone()), t.clone()));
        }
        for (v, ty) in &self.types {
            if sol.get(v).is_none() && *ty != TypeExpr::Any && !self.fresh.contains(v) {
                out.push(MetaConstraint::Type(ty.clone(), Term::Var(v.clone())));
            }
        }
        let mut seen = Vec::new();
        for c in &self.modal {
            let c = c.apply(&sol);
            if !seen.contains(&c) {
                seen.push(c.clone());
                out.push(c);
            }
        }
        for (a, b) in &self.perms {
            out.push(MetaConstraint::Perm(sol.apply(a), sol.apply(b)));
        }
        if !self.fresh.is_empty() {
            out.push(MetaConstraint::FreshVars(self.fresh.iter().cloned().collect()));
        }
        out
    }

    /// Direct evaluation on a grounding that binds every variable of
    /// `self`. Independent of the symbolic reductions above.
    pub fn eval(&self, sigma: &Subst) -> bool {
        for (v, ty) in &self.types {
            let val = sigma.apply(&Term::Var(v.clone()));
            if !val.is_ground() {
                return false;
            }
            let ok = match self.defs.resolve(ty) {
                TypeExpr::Mset(e) => {
                    let (items, tail) = val.as_list();
                    tail.is_nil() && items.iter().all(|i| self.defs.member(i, e))
                }
                _ => self.defs.member(&val, ty),
            };
            if !ok {
                return false;
            }
        }
        let ground: Vec<Term> = self.params.atoms().iter().map(|a| sigma.apply(a)).collect();
        if ground.iter().any(|a| !a.is_ground()) {
            return false;
        }
        let dropped: Result<Vec<Term>, _> = ground.iter().map(drop_term).collect();
        match dropped.map(|d| BuiltinStore::from_atoms(&d)) {
            Ok(Ok(s)) if s.is_satisfiable() => {}
            _ => return false,
        }
        for t in self.params.assumed_int() {
            if !matches!(sigma.apply(t), Term::Int(_)) {
                return false;
            }
        }
        for c in &self.modal {
            if !eval_modal(c, sigma) {
                return false;
            }
        }
        for (a, b) in &self.perms {
            let (a, b) = (sigma.apply(a), sigma.apply(b));
            let (ia, ta) = a.as_list();
            let (ib, tb) = b.as_list();
            let (ra, rb) = remove_common(&ia, &ib);
            if !ta.is_nil() || !tb.is_nil() || !ra.is_empty() || !rb.is_empty() {
                return false;
            }
        }
        let mut names = BTreeSet::new();
        for v in &self.fresh {
            let val = sigma.apply(&Term::Var(v.clone()));
            if val.as_name().is_none() || !names.insert(val) {
                return false;
            }
        }
        true
    }

    /// Decides consistency, returning a witness grounding when found.
    pub fn solve(&self, seed: u64) -> Solve {
        match self.clone().close() {
            Step::Inconsistent => Solve::Inconsistent,
            Step::Unknown(m) => Solve::Unknown(m),
            Step::Ok(w) => {
                let mut s = sample::Sampler::new(seed);
                match s.grounding(&w, &BTreeSet::new()) {
                    Some(sigma) => Solve::Consistent(sigma),
                    None => Solve::Unknown("no witness found by sampling".into()),
                }
            }
        }
    }
}

/// Direct evaluation of a modal constraint under a grounding.
fn eval_modal(c: &MetaConstraint, sigma: &Subst) -> bool {
    let (f, want_holds) = match c {
        MetaConstraint::Holds(f) => (f, true),
        MetaConstraint::Fails(f) => (f, false),
        _ => return true,
    };
    // locals stay existential object variables
    let mut s = sigma.restrict(|v| !f.locals.contains(v));
    let mut locals = BTreeSet::new();
    for l in &f.locals {
        let o = Var::fresh("L");
        s.insert_raw(l.clone(), Term::name_of(&o));
        locals.insert(o);
    }
    let premise: Result<Vec<Term>, _> = f.premise.iter().map(|t| drop_term(&s.apply(t))).collect();
    let goal: Result<Vec<Term>, _> = f.goal.iter().map(|t| drop_term(&s.apply(t))).collect();
    let (Ok(premise), Ok(goal)) = (premise, goal) else { return false };
    let Ok(base) = BuiltinStore::from_atoms(&premise) else { return false };
    if want_holds {
        base.entails(&locals, &goal) == Entailment::Yes
    } else {
        match base.add_all(&goal) {
            Ok(b) => !b.is_satisfiable(),
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DropError {
    #[error("meta term `{0}` is not ground")]
    NotGround(Term),
    #[error("store rest `{0}` is not bound to a list of constraints")]
    BadRest(Term),
}

/// The object term named by a ground meta term.
pub fn drop_term(t: &Term) -> Result<Term, DropError> {
    if let Some(v) = t.as_name() {
        return Ok(Term::Var(v));
    }
    match t {
        Term::Var(_) => Err(DropError::NotGround(t.clone())),
        Term::Compound(f, args) => Ok(Term::Compound(f.clone(), args.iter().map(drop_term).collect::<Result<_, _>>()?)),
        other => Ok(other.clone()),
    }
}

/// The ground meta term naming an object term.
pub fn name_term(t: &Term) -> Term {
    t.map_vars(&mut |v| Some(Term::name_of(v)))
}

/// Lifts object terms: every object variable is replaced consistently by a
/// fresh meta variable. Returns the lifted terms and the replacement.
pub fn lift(terms: &[Term]) -> (Vec<Term>, Subst) {
    let mut s = Subst::new();
    for v in vars_of(terms) {
        let base = v.name().to_lowercase();
        s.insert_raw(v.clone(), Term::Var(Var::fresh(if base.is_empty() { "x" } else { &base })));
    }
    (s.apply_all(terms), s)
}

/// A meta state `<store + rest, builtins & brest>`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MetaState {
    pub store: Vec<Term>,
    /// Store-rest meta variable, ranging over multisets of constraints.
    pub rest: Option<Var>,
    pub builtins: Vec<Term>,
    /// Built-in-rest meta variable, ranging over conjunctions.
    pub brest: Option<Var>,
    pub failed: bool,
}

impl MetaState {
    pub fn new(store: Vec<Term>, rest: Option<Var>, builtins: Vec<Term>, brest: Option<Var>) -> Self {
        MetaState { store, rest, builtins, brest, failed: false }
    }

    pub fn failure() -> Self {
        MetaState { store: Vec::new(), rest: None, builtins: Vec::new(), brest: None, failed: true }
    }

    pub fn apply(&self, s: &Subst) -> MetaState {
        MetaState {
            store: s.apply_all(&self.store),
            rest: self.rest.clone(),
            builtins: s.apply_all(&self.builtins),
            brest: self.brest.clone(),
            failed: self.failed,
        }
    }

    /// Replaces the store rest `r` by `atoms + new_rest`.
    pub fn bind_rest(&self, r: &Var, atoms: &[Term], new_rest: Option<Var>) -> MetaState {
        if self.rest.as_ref() != Some(r) {
            return self.clone();
        }
        let mut out = self.clone();
        out.store.extend(atoms.iter().cloned());
        out.rest = new_rest;
        out
    }

    /// Replaces the built-in rest `r` by `atoms`.
    pub fn bind_brest(&self, r: &Var, atoms: &[Term]) -> MetaState {
        if self.brest.as_ref() != Some(r) {
            return self.clone();
        }
        let mut out = self.clone();
        out.builtins.extend(atoms.iter().cloned());
        out.brest = None;
        out
    }

    /// Term meta variables (rests excluded).
    pub fn vars(&self) -> BTreeSet<Var> {
        vars_of(self.store.iter().chain(self.builtins.iter())).into_iter().collect()
    }

    /// All meta variables including rests.
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut v = self.vars();
        v.extend(self.rest.iter().cloned());
        v.extend(self.brest.iter().cloned());
        v
    }

    /// The object state named under a grounding. Rests must be bound to
    /// lists of constraints.
    pub fn drop_state(&self, sigma: &Subst) -> Result<StateRepr, DropError> {
        if self.failed {
            return Ok(StateRepr::new(Vec::new(), BuiltinStore::from_atoms(&[Term::atom("fail")]).unwrap()));
        }
        let mut store: Vec<Term> = self.store.iter().map(|t| drop_term(&sigma.apply(t))).collect::<Result<_, _>>()?;
        if let Some(r) = &self.rest {
            let val = sigma.apply(&Term::Var(r.clone()));
            let (items, tail) = val.as_list();
            if !tail.is_nil() {
                return Err(DropError::BadRest(val.clone()));
            }
            for i in items {
                store.push(drop_term(i)?);
            }
        }
        let mut builtins: Vec<Term> =
            self.builtins.iter().map(|t| drop_term(&sigma.apply(t))).collect::<Result<_, _>>()?;
        if let Some(r) = &self.brest {
            let val = sigma.apply(&Term::Var(r.clone()));
            let (items, tail) = val.as_list();
            if !tail.is_nil() {
                return Err(DropError::BadRest(val.clone()));
            }
            for i in items {
                builtins.push(drop_term(i)?);
            }
        }
        let b = BuiltinStore::from_atoms(&builtins).map_err(|_| DropError::BadRest(Term::atom("builtins")))?;
        Ok(StateRepr::new(store, b))
    }

    /// Simplifies the state under `m`: built-ins decided by `m` are dropped,
    /// and a state whose built-ins fail for every grounding becomes failure.
    pub fn normalize(&self, m: &Where) -> MetaState {
        if self.failed {
            return self.clone();
        }
        let sol = m.solution();
        let mut s = self.apply(&sol);
        let mut kept = Vec::new();
        for a in &s.builtins {
            if builtin::is_true(a) {
                continue;
            }
            match m.decide_atom(a) {
                Some(true) => {}
                Some(false) => return MetaState::failure(),
                None => kept.push(a.clone()),
            }
        }
        if s.brest.is_none() {
            if let Ok(base) = m.params().add_all(&kept) {
                if !base.is_satisfiable() {
                    return MetaState::failure();
                }
            }
        }
        kept.sort();
        kept.dedup();
        s.builtins = kept;
        s.store.sort();
        s
    }
}

impl fmt::Display for MetaState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.failed {
            return write!(f, "failure");
        }
        write!(f, "<{{")?;
        for (i, t) in self.store.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, "}}")?;
        if let Some(r) = &self.rest {
            write!(f, " + {r}")?;
        }
        write!(f, ", ")?;
        match (&self.builtins[..], &self.brest) {
            ([], Some(r)) => write!(f, "{r}")?,
            (bs, r) => {
                write_conj(f, bs)?;
                if let Some(r) = r {
                    write!(f, " & {r}")?;
                }
            }
        }
        write!(f, ">")
    }
}

impl fmt::Display for Where {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cs = self.constraints();
        if cs.is_empty() {
            return write!(f, "true");
        }
        for (i, c) in cs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}
