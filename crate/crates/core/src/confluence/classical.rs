//! Overlaps of rule heads and the classical critical-pair test.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::builtin::BuiltinStore;
use crate::lang::{Program, Rule};
use crate::semantics::explore::{enumerate_reachable, Limits, TransitionGraph};
use crate::semantics::{canonicalize, canonicalize_relative, CanonState, Label, StateRepr};
use crate::term::{unify_all, vars_of, Subst, Term, Var};

/// A critical pre-corner: the ancestor state built from an overlap and the
/// two rule applications on it. Guards need not be satisfiable.
#[derive(Clone, Debug)]
pub struct PreCorner {
    /// (rule removing the overlap, other rule)
    pub rules: (usize, usize),
    /// The overlapping atoms, unifier applied.
    pub overlap: Vec<Term>,
    pub unifier: Subst,
    pub ancestor: Vec<Term>,
    /// Both guards, unifier applied.
    pub builtins: Vec<Term>,
    pub left: Vec<Term>,
    pub right: Vec<Term>,
    pub left_label: Label,
    pub right_label: Label,
    pub left_guard: Vec<Term>,
    pub right_guard: Vec<Term>,
    pub left_locals: BTreeSet<Var>,
    pub right_locals: BTreeSet<Var>,
}

impl PreCorner {
    pub fn ancestor_vars(&self) -> BTreeSet<Var> {
        vars_of(self.ancestor.iter().chain(self.builtins.iter())).into_iter().collect()
    }

    fn repr(&self, store: &[Term]) -> Option<StateRepr> {
        BuiltinStore::from_atoms(&self.builtins).ok().map(|b| StateRepr::new(store.to_vec(), b))
    }

    pub fn ancestor_repr(&self) -> Option<StateRepr> {
        self.repr(&self.ancestor)
    }

    pub fn left_repr(&self) -> Option<StateRepr> {
        self.repr(&self.left)
    }

    pub fn right_repr(&self) -> Option<StateRepr> {
        self.repr(&self.right)
    }

    pub fn guards_satisfiable(&self) -> bool {
        self.ancestor_repr().is_some_and(|s| !s.is_failed())
    }

    /// Whether the wings differ as states over the ancestor's variables.
    pub fn wings_differ(&self) -> bool {
        let fixed = self.ancestor_vars();
        match (self.left_repr(), self.right_repr()) {
            (Some(l), Some(r)) if !l.is_failed() => {
                canonicalize_relative(&l, &fixed) != canonicalize_relative(&r, &fixed)
            }
            (Some(_), Some(_)) => stores_differ(&self.left, &self.right),
            _ => true,
        }
    }

    /// Identity up to renaming and swapping the wings.
    pub fn key(&self) -> CanonState {
        let wrap = |f: &str, ts: &[Term]| ts.iter().map(|t| Term::app(f, vec![t.clone()])).collect::<Vec<_>>();
        let b = BuiltinStore::from_atoms(&self.builtins).unwrap_or_default();
        let joint = |l: &[Term], r: &[Term]| {
            let mut store = wrap("a", &self.ancestor);
            store.extend(wrap("l", l));
            store.extend(wrap("r", r));
            canonicalize(&StateRepr::new(store, b.clone()))
        };
        joint(&self.left, &self.right).min(joint(&self.right, &self.left))
    }
}

fn stores_differ(a: &[Term], b: &[Term]) -> bool {
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    a.sort();
    b.sort();
    a != b
}

fn subsets(n: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << n)).map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect()).collect()
}

/// Ordered selections of `k` distinct indices below `n`.
fn arrangements(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !cur.contains(&i) {
                cur.push(i);
                go(n, k, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(n, k, &mut Vec::new(), &mut out);
    out
}

/// Pre-corners of `r` removing an overlap with the head of `r2`.
fn overlaps(ri: usize, r: &Rule, rj: usize, r2: &Rule) -> Vec<PreCorner> {
    let mut out = Vec::new();
    let h2: Vec<Term> = r2.head().cloned().collect();
    let n1 = r.kept.len();
    for a in subsets(r.removed.len()) {
        if a.len() > h2.len() {
            continue;
        }
        for a2 in arrangements(h2.len(), a.len()) {
            let pairs = a.iter().zip(&a2).map(|(&i, &j)| (r.removed[i].clone(), h2[j].clone()));
            let Some(theta) = unify_all(pairs) else { continue };
            let mut ancestor: Vec<Term> = r.head().cloned().collect();
            let mut pos2 = vec![0usize; h2.len()];
            for (k, t) in h2.iter().enumerate() {
                match a2.iter().position(|&j| j == k) {
                    Some(p) => pos2[k] = n1 + a[p],
                    None => {
                        pos2[k] = ancestor.len();
                        ancestor.push(t.clone());
                    }
                }
            }
            let ancestor = theta.apply_all(&ancestor);
            let apply = |rule: &Rule, positions: &[usize]| {
                let removed: BTreeSet<usize> = positions[rule.kept.len()..].iter().copied().collect();
                let mut s: Vec<Term> =
                    ancestor.iter().enumerate().filter(|(i, _)| !removed.contains(i)).map(|(_, t)| t.clone()).collect();
                s.extend(theta.apply_all(&rule.body));
                s
            };
            let pos1: Vec<usize> = (0..n1 + r.removed.len()).collect();
            let left = apply(r, &pos1);
            let right = apply(r2, &pos2);
            let mut builtins = theta.apply_all(&r.guard);
            builtins.extend(theta.apply_all(&r2.guard));
            out.push(PreCorner {
                rules: (ri, rj),
                overlap: a.iter().map(|&i| theta.apply(&r.removed[i])).collect(),
                unifier: theta.clone(),
                ancestor: ancestor.clone(),
                builtins,
                left,
                right,
                left_label: Label::Rule { rule: ri, positions: pos1 },
                right_label: Label::Rule { rule: rj, positions: pos2 },
                left_guard: theta.apply_all(&r.guard),
                right_guard: theta.apply_all(&r2.guard),
                left_locals: r.local_vars(),
                right_locals: r2.local_vars(),
            });
        }
    }
    out
}

/// Every pre-corner of the program, deduplicated up to renaming, with
/// coinciding wings removed.
pub fn pre_corners(prog: &Program) -> Vec<PreCorner> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, r) in prog.rules.iter().enumerate() {
        for (j, r2) in prog.rules.iter().enumerate() {
            let (a, _) = r.rename_apart(&BTreeSet::new());
            let (b, _) = r2.rename_apart(&a.all_vars());
            for pc in overlaps(i, &a, j, &b) {
                if pc.wings_differ() && seen.insert(pc.key()) {
                    out.push(pc);
                }
            }
        }
    }
    out
}

/// Critical corners of the classical test: pre-corners with jointly
/// satisfiable guards.
pub fn critical_alpha_corners_classical(prog: &Program) -> Vec<PreCorner> {
    pre_corners(prog).into_iter().filter(PreCorner::guards_satisfiable).collect()
}

#[derive(Clone, Debug)]
pub struct ObjectStep {
    pub label: String,
    pub state: String,
}

#[derive(Clone, Debug)]
pub enum ClassicalStatus {
    Joinable {
        left: Vec<ObjectStep>,
        right: Vec<ObjectStep>,
    },
    /// Both wings fully enumerated without a common state.
    NonJoinable {
        left_finals: Vec<String>,
        right_finals: Vec<String>,
        left_states: usize,
        right_states: usize,
    },
    Unknown(String),
}

#[derive(Clone, Debug)]
pub struct ClassicalCorner {
    pub pre: PreCorner,
    pub status: ClassicalStatus,
}

fn path_to(g: &TransitionGraph, target: usize, prog: &Program) -> Vec<ObjectStep> {
    let mut parent: HashMap<usize, (usize, String)> = HashMap::new();
    let mut q = VecDeque::from([0usize]);
    let mut seen = BTreeSet::from([0usize]);
    while let Some(i) = q.pop_front() {
        if i == target {
            break;
        }
        for (l, j) in &g.edges[i] {
            if seen.insert(*j) {
                parent.insert(*j, (i, l.render(prog)));
                q.push_back(*j);
            }
        }
    }
    let mut steps = Vec::new();
    let mut cur = target;
    while let Some((p, l)) = parent.get(&cur) {
        steps.push(ObjectStep { label: l.clone(), state: g.nodes[cur].to_string() });
        cur = *p;
    }
    steps.reverse();
    steps
}

/// Decides joinability of a classical corner by enumerating both wings with
/// the ancestor's variables held fixed.
pub fn certify(pc: &PreCorner, prog: &Program, limits: Limits) -> ClassicalStatus {
    let fixed = pc.ancestor_vars();
    let (Some(l), Some(r)) = (pc.left_repr(), pc.right_repr()) else {
        return ClassicalStatus::Unknown("guards outside the supported fragment".into());
    };
    let gl = enumerate_reachable(&[canonicalize_relative(&l, &fixed)], prog, &fixed, limits);
    let gr = enumerate_reachable(&[canonicalize_relative(&r, &fixed)], prog, &fixed, limits);
    for (i, s) in gl.nodes.iter().enumerate() {
        if let Some(j) = gr.node(s) {
            return ClassicalStatus::Joinable { left: path_to(&gl, i, prog), right: path_to(&gr, j, prog) };
        }
    }
    if gl.truncated() || gr.truncated() {
        return ClassicalStatus::Unknown(format!(
            "wing enumeration hit the limit ({} and {} states)",
            gl.len(),
            gr.len()
        ));
    }
    let finals = |g: &TransitionGraph| g.finals().iter().map(|&i| g.nodes[i].to_string()).collect();
    ClassicalStatus::NonJoinable {
        left_finals: finals(&gl),
        right_finals: finals(&gr),
        left_states: gl.len(),
        right_states: gr.len(),
    }
}

pub fn classical_corners(prog: &Program, limits: Limits) -> Vec<ClassicalCorner> {
    critical_alpha_corners_classical(prog)
        .into_iter()
        .map(|pre| {
            let status = certify(&pre, prog, limits);
            ClassicalCorner { pre, status }
        })
        .collect()
}
