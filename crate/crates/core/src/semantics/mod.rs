//! Object-level states, canonical forms and the logic-based transition
//! relation.

pub mod explore;
pub mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::builtin::{self, BuiltinStore, Entailment};
use crate::lang::Program;
use crate::term::{match_into, vars_of, Subst, Term, Var};

/// A state representation `<S, B>`.
#[derive(Clone, Debug)]
pub struct StateRepr {
    /// User constraints and pending built-ins.
    pub store: Vec<Term>,
    pub builtins: BuiltinStore,
}

impl StateRepr {
    pub fn new(store: Vec<Term>, builtins: BuiltinStore) -> Self {
        StateRepr { store, builtins }
    }

    /// A query: all constraints in the store, built-in store `true`.
    pub fn query(store: Vec<Term>) -> Self {
        StateRepr { store, builtins: BuiltinStore::new() }
    }

    pub fn is_failed(&self) -> bool {
        !self.builtins.is_satisfiable()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out: BTreeSet<Var> = vars_of(&self.store).into_iter().collect();
        out.extend(vars_of(self.builtins.atoms()));
        out
    }
}

/// Canonical representative of a state. Variables are renamed to canonical
/// names except those declared fixed (global) when canonicalizing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonState {
    pub failed: bool,
    /// Sorted.
    pub store: Vec<Term>,
    /// Bindings of fixed variables followed by projected bounds.
    pub builtins: Vec<Term>,
}

impl CanonState {
    pub fn failure() -> Self {
        CanonState { failed: true, store: Vec::new(), builtins: Vec::new() }
    }

    pub fn is_failure(&self) -> bool {
        self.failed
    }

    pub fn to_repr(&self) -> StateRepr {
        if self.failed {
            return StateRepr::new(Vec::new(), BuiltinStore::from_atoms(&[Term::atom("fail")]).unwrap());
        }
        let b = BuiltinStore::from_atoms(&self.builtins).expect("canonical built-ins are in the supported fragment");
        StateRepr::new(self.store.clone(), b)
    }

    pub fn is_ground(&self) -> bool {
        self.store.iter().chain(self.builtins.iter()).all(Term::is_ground)
    }
}

impl fmt::Display for CanonState {
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
        write!(f, "}}, ")?;
        if self.builtins.is_empty() {
            write!(f, "true")?;
        }
        for (i, t) in self.builtins.iter().enumerate() {
            if i > 0 {
                write!(f, " & ")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, ">")
    }
}

/// Upper bound on the orderings tried when renaming symmetric atoms.
const MAX_ORDERINGS: usize = 5040;

/// Re-roots variable classes of a solution so that preferred variables are
/// the representatives.
fn prefer_roots(s: &Subst, prefer: &BTreeSet<Var>) -> Subst {
    let mut classes: BTreeMap<Var, Vec<Var>> = BTreeMap::new();
    for (v, t) in s.iter() {
        if let Term::Var(w) = t {
            if prefer.contains(v) && !prefer.contains(w) {
                classes.entry(w.clone()).or_default().push(v.clone());
            }
        }
    }
    let mut ren = Subst::new();
    for (root, members) in classes {
        ren.insert_raw(root, Term::Var(members.into_iter().min().unwrap()));
    }
    if ren.is_empty() {
        s.clone()
    } else {
        s.compose(&ren)
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Canonical form where every variable may be renamed.
pub fn canonicalize(s: &StateRepr) -> CanonState {
    canonicalize_relative(s, &BTreeSet::new())
}

/// Canonical form keeping the variables in `fixed` (and their bindings)
/// visible. Two representations get the same result iff they are variants
/// by a renaming that is the identity on `fixed`, provided the number of
/// symmetric atom orderings stays below a bound.
pub fn canonicalize_relative(s: &StateRepr, fixed: &BTreeSet<Var>) -> CanonState {
    let Some(sol) = s.builtins.solution() else { return CanonState::failure() };
    let sol = prefer_roots(sol, fixed);
    let store: Vec<Term> = sol.apply_all(&s.store);
    let mut globals = Vec::new();
    for v in fixed {
        let t = sol.apply(&Term::Var(v.clone()));
        if t != Term::Var(v.clone()) {
            globals.push(Term::app("=", vec![Term::Var(v.clone()), t]));
        }
    }
    let mut keep: BTreeSet<Var> = vars_of(&store).into_iter().collect();
    keep.extend(vars_of(&globals));
    keep.extend(fixed.iter().cloned());
    let builtins_solved = s.builtins.apply(&sol);
    let residual = builtins_solved.projected_atoms(&keep);

    let skeleton = |t: &Term| {
        t.map_vars(&mut |v| {
            if fixed.contains(v) {
                None
            } else {
                Some(Term::Var(Var::canonical(u32::MAX)))
            }
        })
    };
    let mut order: Vec<(Term, usize)> = store.iter().enumerate().map(|(i, t)| (skeleton(t), i)).collect();
    order.sort();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, (sk, idx)) in order.iter().enumerate() {
        if i > 0 && order[i - 1].0 == *sk && store[*idx].vars().iter().any(|v| !fixed.contains(v)) {
            groups.last_mut().unwrap().push(*idx);
        } else {
            groups.push(vec![*idx]);
        }
    }
    let mut total: usize = 1;
    let group_perms: Vec<Vec<Vec<usize>>> = groups
        .iter()
        .map(|g| {
            let n = g.len();
            let fact: usize = (1..=n).product();
            if total.saturating_mul(fact) <= MAX_ORDERINGS {
                total *= fact;
                permutations(n)
            } else {
                vec![(0..n).collect()]
            }
        })
        .collect();

    let mut best: Option<CanonState> = None;
    let mut choice = vec![0usize; groups.len()];
    loop {
        let mut seq = Vec::with_capacity(store.len());
        for (gi, g) in groups.iter().enumerate() {
            for &k in &group_perms[gi][choice[gi]] {
                seq.push(g[k]);
            }
        }
        let cand = render(&store, &seq, &globals, &residual, fixed);
        if best.as_ref().is_none_or(|b| cand < *b) {
            best = Some(cand);
        }
        // next combination
        let mut k = 0;
        loop {
            if k == choice.len() {
                return best.unwrap();
            }
            choice[k] += 1;
            if choice[k] < group_perms[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

fn render(store: &[Term], seq: &[usize], globals: &[Term], residual: &[Term], fixed: &BTreeSet<Var>) -> CanonState {
    let mut ren: BTreeMap<Var, Var> = BTreeMap::new();
    let mut next = 0u32;
    let mut visit = |t: &Term, ren: &mut BTreeMap<Var, Var>| {
        for v in t.vars() {
            if !fixed.contains(&v) && !ren.contains_key(&v) {
                ren.insert(v, Var::canonical(next));
                next += 1;
            }
        }
    };
    for &i in seq {
        visit(&store[i], &mut ren);
    }
    for g in globals {
        visit(g, &mut ren);
    }
    for r in residual {
        visit(r, &mut ren);
    }
    let mut sub = Subst::new();
    for (v, w) in &ren {
        sub.insert_raw(v.clone(), Term::Var(w.clone()));
    }
    let mut new_store: Vec<Term> = seq.iter().map(|&i| sub.apply(&store[i])).collect();
    new_store.sort();
    let renamed_residual = sub.apply_all(residual);
    // re-project so that the bound presentation depends only on the renamed
    // content
    let mut bounds = if renamed_residual.is_empty() {
        Vec::new()
    } else {
        let b = BuiltinStore::from_atoms(&renamed_residual).expect("projected atoms are valid");
        let all: BTreeSet<Var> = b.int_vars().iter().cloned().collect();
        b.projected_atoms(&all)
    };
    bounds.sort();
    let mut builtins = sub.apply_all(globals);
    builtins.extend(bounds);
    CanonState { failed: false, store: new_store, builtins }
}

/// How a transition was taken.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// Rule application; positions of the matched head atoms (kept then
    /// removed) in the source store.
    Rule { rule: usize, positions: Vec<usize> },
    /// A built-in atom moved into the built-in store.
    Builtin { position: usize, atom: Term },
}

impl Label {
    pub fn render(&self, prog: &Program) -> String {
        match self {
            Label::Rule { rule, .. } => prog.rule_label(*rule),
            Label::Builtin { atom, .. } => format!("builtin {atom}"),
        }
    }

    pub fn rule(&self) -> Option<usize> {
        match self {
            Label::Rule { rule, .. } => Some(*rule),
            Label::Builtin { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub label: Label,
    pub target: CanonState,
}

/// Every injective assignment of `heads` to store positions, extending `m`.
pub(crate) fn head_matches(heads: &[&Term], store: &[Term], m: &Subst) -> Vec<(Vec<usize>, Subst)> {
    fn go(heads: &[&Term], store: &[Term], m: Subst, used: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, Subst)>) {
        let Some((h, rest)) = heads.split_first() else {
            out.push((used.clone(), m));
            return;
        };
        for (i, t) in store.iter().enumerate() {
            if used.contains(&i) {
                continue;
            }
            let mut m2 = m.clone();
            if match_into(h, t, &mut m2) {
                used.push(i);
                go(rest, store, m2, used, out);
                used.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(heads, store, m.clone(), &mut Vec::new(), &mut out);
    out
}

/// Successor representations of `s` (not canonicalized).
pub fn successor_reprs(s: &StateRepr, prog: &Program) -> Vec<(Label, StateRepr)> {
    let mut out = Vec::new();
    let Some(sol) = s.builtins.solution() else { return out };
    let store = sol.apply_all(&s.store);
    let avoid = s.vars();
    for (ri, rule) in prog.rules.iter().enumerate() {
        let (r, _) = rule.rename_apart(&avoid);
        let heads: Vec<&Term> = r.head().collect();
        let locals = r.local_vars();
        for (positions, m) in head_matches(&heads, &store, &Subst::new()) {
            let m = crate::term::finish_match(m);
            let guard = m.apply_all(&r.guard);
            if s.builtins.entails(&locals, &guard) != Entailment::Yes {
                continue;
            }
            let removed: BTreeSet<usize> = positions[r.kept.len()..].iter().copied().collect();
            let mut new_store: Vec<Term> =
                store.iter().enumerate().filter(|(i, _)| !removed.contains(i)).map(|(_, t)| t.clone()).collect();
            new_store.extend(m.apply_all(&r.body));
            let b = s.builtins.add_all(&guard).expect("guards are validated at parse time");
            out.push((Label::Rule { rule: ri, positions }, StateRepr::new(new_store, b)));
        }
    }
    for (i, t) in store.iter().enumerate() {
        if builtin::is_builtin_atom(t) {
            let mut new_store = store.clone();
            new_store.remove(i);
            let b = s.builtins.add(t).expect("body built-ins are validated at parse time");
            out.push((Label::Builtin { position: i, atom: t.clone() }, StateRepr::new(new_store, b)));
        }
    }
    out
}

/// All transitions from `s`, with targets canonicalized relative to `fixed`.
/// Transitions with the same rule and target are reported once.
pub fn successors(s: &StateRepr, prog: &Program, fixed: &BTreeSet<Var>) -> Vec<Transition> {
    let mut out: Vec<Transition> = Vec::new();
    let mut seen: BTreeSet<(Option<usize>, Option<Term>, CanonState)> = BTreeSet::new();
    for (label, t) in successor_reprs(s, prog) {
        let target = canonicalize_relative(&t, fixed);
        let key = match &label {
            Label::Rule { rule, .. } => (Some(*rule), None, target.clone()),
            Label::Builtin { atom, .. } => (None, Some(atom.clone()), target.clone()),
        };
        if seen.insert(key) {
            out.push(Transition { label, target });
        }
    }
    out
}
