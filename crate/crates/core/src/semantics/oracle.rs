//! Brute-force confluence audit over an enumerated transition graph.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::explore::{enumerate_reachable, BitSet, Limits, TransitionGraph};
use super::{CanonState, Label};
use crate::lang::Program;

/// An equivalence on object states. Implementations must be reflexive,
/// symmetric and transitive; the audit closes it transitively anyway.
pub trait Equivalence {
    fn equivalent(&self, a: &CanonState, b: &CanonState) -> bool;

    /// A normal form such that equal keys imply equivalence. When given,
    /// classes are formed by key instead of pairwise comparison.
    fn key(&self, _s: &CanonState) -> Option<CanonState> {
        None
    }
}

/// Equality of canonical states.
pub struct Identity;

impl Equivalence for Identity {
    fn equivalent(&self, a: &CanonState, b: &CanonState) -> bool {
        a == b
    }

    fn key(&self, s: &CanonState) -> Option<CanonState> {
        Some(s.clone())
    }
}

/// Equivalence given by a normalizing function.
pub struct ByKey<F>(pub F);

impl<F: Fn(&CanonState) -> CanonState> Equivalence for ByKey<F> {
    fn equivalent(&self, a: &CanonState, b: &CanonState) -> bool {
        (self.0)(a) == (self.0)(b)
    }

    fn key(&self, s: &CanonState) -> Option<CanonState> {
        Some((self.0)(s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CornerKind {
    Alpha,
    Beta,
}

/// A corner `left <- ancestor -> right` (alpha) or `left ~ ancestor -> right`
/// (beta), as node indices into the graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectCorner {
    pub kind: CornerKind,
    pub ancestor: usize,
    pub left: usize,
    pub right: usize,
    pub left_label: Option<Label>,
    pub right_label: Label,
}

/// Equivalence classes and reachability of a graph.
pub struct Analysis<'g> {
    pub graph: &'g TransitionGraph,
    pub class: Vec<usize>,
    pub classes: Vec<Vec<usize>>,
    pub reach: Vec<BitSet>,
    /// Classes met by each node's reachable set.
    reach_classes: Vec<BitSet>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl<'g> Analysis<'g> {
    pub fn new(graph: &'g TransitionGraph, eq: &dyn Equivalence) -> Self {
        let n = graph.len();
        let mut parent: Vec<usize> = (0..n).collect();
        let keys: Vec<Option<CanonState>> = graph.nodes.iter().map(|s| eq.key(s)).collect();
        if keys.iter().all(Option::is_some) {
            let mut first: HashMap<&CanonState, usize> = HashMap::new();
            for (i, k) in keys.iter().enumerate() {
                let k = k.as_ref().expect("checked");
                match first.get(k) {
                    Some(&j) => {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        parent[a.max(b)] = a.min(b);
                    }
                    None => {
                        first.insert(k, i);
                    }
                }
            }
        } else {
            for i in 0..n {
                for j in 0..i {
                    if find(&mut parent, i) != find(&mut parent, j) && eq.equivalent(&graph.nodes[i], &graph.nodes[j]) {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut ids: HashMap<usize, usize> = HashMap::new();
        let mut class = vec![0; n];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for (i, c) in class.iter_mut().enumerate() {
            let root = find(&mut parent, i);
            let id = *ids.entry(root).or_insert_with(|| {
                classes.push(Vec::new());
                classes.len() - 1
            });
            *c = id;
            classes[id].push(i);
        }
        let reach = graph.reach_sets();
        let reach_classes = reach
            .iter()
            .map(|r| {
                let mut b = BitSet::new(classes.len());
                for j in r.iter() {
                    b.insert(class[j]);
                }
                b
            })
            .collect();
        Analysis { graph, class, classes, reach, reach_classes }
    }

    /// Whether `a` and `b` reach equivalent states.
    pub fn joinable(&self, a: usize, b: usize) -> bool {
        a == b || self.reach_classes[a].intersects(&self.reach_classes[b])
    }

    /// Every alpha and beta corner whose ancestor was expanded.
    pub fn corners(&self) -> Vec<ObjectCorner> {
        let g = self.graph;
        let mut out = Vec::new();
        for s0 in 0..g.len() {
            if g.unexpanded.contains(&s0) {
                continue;
            }
            let edges = &g.edges[s0];
            for (x, (l1, t1)) in edges.iter().enumerate() {
                for (l2, t2) in &edges[x + 1..] {
                    if t1 != t2 {
                        out.push(ObjectCorner {
                            kind: CornerKind::Alpha,
                            ancestor: s0,
                            left: *t1,
                            right: *t2,
                            left_label: Some(l1.clone()),
                            right_label: l2.clone(),
                        });
                    }
                }
            }
            for &s1 in &self.classes[self.class[s0]] {
                if s1 == s0 {
                    continue;
                }
                for (l, t) in edges {
                    if s1 != *t {
                        out.push(ObjectCorner {
                            kind: CornerKind::Beta,
                            ancestor: s0,
                            left: s1,
                            right: *t,
                            left_label: None,
                            right_label: l.clone(),
                        });
                    }
                }
            }
        }
        out
    }

    /// Local confluence: corners that are not joinable.
    pub fn non_joinable_corners(&self) -> Vec<ObjectCorner> {
        self.corners().into_iter().filter(|c| !self.joinable(c.left, c.right)).collect()
    }

    /// Global confluence: for `x ~ y`, every `x'` reachable from `x` and
    /// `y'` reachable from `y` are joinable. Returns a failing pair.
    pub fn global_counterexample(&self) -> Option<(usize, usize)> {
        for members in &self.classes {
            let mut r = BitSet::new(self.graph.len());
            for &m in members {
                r.union_with(&self.reach[m]);
            }
            let nodes: Vec<usize> = r.iter().collect();
            for (i, &a) in nodes.iter().enumerate() {
                for &b in &nodes[i + 1..] {
                    if !self.joinable(a, b) {
                        return Some((a, b));
                    }
                }
            }
        }
        None
    }

    pub fn finals(&self) -> Vec<usize> {
        self.graph.finals()
    }
}

#[derive(Clone, Debug)]
pub struct OracleReport {
    pub graph: TransitionGraph,
    pub corners_checked: usize,
    pub non_joinable: Vec<ObjectCorner>,
}

impl OracleReport {
    /// `None` when the enumeration was truncated and no witness was found.
    pub fn locally_confluent(&self) -> Option<bool> {
        if !self.non_joinable.is_empty() {
            // a witness whose wings were fully explored is conclusive
            let conclusive = self.non_joinable.iter().any(|c| self.wings_complete(c));
            if conclusive {
                return Some(false);
            }
        }
        if self.graph.truncated() {
            None
        } else {
            Some(self.non_joinable.is_empty())
        }
    }

    fn wings_complete(&self, c: &ObjectCorner) -> bool {
        let reach = self.graph.reach_sets();
        let hit = |i: usize| reach[i].iter().any(|j| self.graph.unexpanded.contains(&j));
        !hit(c.left) && !hit(c.right)
    }

    pub fn finals(&self) -> Vec<&CanonState> {
        self.graph.finals().into_iter().map(|i| &self.graph.nodes[i]).collect()
    }
}

/// Enumerates everything reachable from `inits` and checks every corner
/// for joinability modulo `eq`.
pub fn oracle_local_confluence(
    inits: &[CanonState],
    prog: &Program,
    eq: &dyn Equivalence,
    limits: Limits,
) -> OracleReport {
    let graph = enumerate_reachable(inits, prog, &BTreeSet::new(), limits);
    let a = Analysis::new(&graph, eq);
    let corners = a.corners();
    let corners_checked = corners.len();
    let non_joinable: Vec<ObjectCorner> = corners.into_iter().filter(|c| !a.joinable(c.left, c.right)).collect();
    drop(a);
    OracleReport { graph, corners_checked, non_joinable }
}
