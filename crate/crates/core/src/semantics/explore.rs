//! Breadth-first enumeration of reachable states.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use super::{successors, CanonState, Label};
use crate::lang::Program;
use crate::term::Var;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 10_000, max_depth: 200 }
    }
}

#[derive(Clone, Debug, Default)]
pub struct TransitionGraph {
    pub nodes: Vec<CanonState>,
    pub edges: Vec<Vec<(Label, usize)>>,
    /// Nodes whose successors were not computed because a limit was hit.
    pub unexpanded: BTreeSet<usize>,
    /// Variables kept fixed while canonicalizing.
    pub fixed: BTreeSet<Var>,
    index: HashMap<CanonState, usize>,
}

impl TransitionGraph {
    pub fn truncated(&self) -> bool {
        !self.unexpanded.is_empty()
    }

    pub fn node(&self, s: &CanonState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn intern(&mut self, s: CanonState) -> (usize, bool) {
        if let Some(&i) = self.index.get(&s) {
            return (i, false);
        }
        let i = self.nodes.len();
        self.index.insert(s.clone(), i);
        self.nodes.push(s);
        self.edges.push(Vec::new());
        (i, true)
    }

    /// Distinct successor nodes of `i`.
    pub fn succ_nodes(&self, i: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.edges[i].iter().map(|(_, j)| *j).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Nodes without successors that were fully expanded.
    pub fn finals(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|i| self.edges[*i].is_empty() && !self.unexpanded.contains(i)).collect()
    }

    /// Reachable set of every node as a bitset, including the node itself.
    pub fn reach_sets(&self) -> Vec<BitSet> {
        let n = self.nodes.len();
        // iterate to a fixpoint over reverse topological-ish order
        let mut reach: Vec<BitSet> = (0..n)
            .map(|i| {
                let mut b = BitSet::new(n);
                b.insert(i);
                b
            })
            .collect();
        let mut changed = true;
        while changed {
            changed = false;
            for i in (0..n).rev() {
                for j in self.succ_nodes(i) {
                    if i != j {
                        let rj = reach[j].clone();
                        if reach[i].union_with(&rj) {
                            changed = true;
                        }
                    }
                }
            }
        }
        reach
    }

    pub fn to_json(&self, prog: &Program) -> serde_json::Value {
        #[derive(Serialize)]
        struct Node {
            id: usize,
            state: String,
            expanded: bool,
        }
        #[derive(Serialize)]
        struct Edge {
            from: usize,
            to: usize,
            label: String,
        }
        #[derive(Serialize)]
        struct Graph {
            nodes: Vec<Node>,
            edges: Vec<Edge>,
            truncated: bool,
        }
        let g = Graph {
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(id, s)| Node { id, state: s.to_string(), expanded: !self.unexpanded.contains(&id) })
                .collect(),
            edges: self
                .edges
                .iter()
                .enumerate()
                .flat_map(|(from, es)| es.iter().map(move |(l, to)| Edge { from, to: *to, label: l.render(prog) }))
                .collect(),
            truncated: self.truncated(),
        };
        serde_json::to_value(g).expect("graph serializes")
    }

    pub fn to_dot(&self, prog: &Program) -> String {
        let mut out = String::from("digraph states {\n  node [shape=box, fontname=\"monospace\"];\n");
        for (i, s) in self.nodes.iter().enumerate() {
            let style = if self.unexpanded.contains(&i) { ", style=dashed" } else { "" };
            let _ = writeln!(out, "  n{i} [label={}{style}];", dot_quote(&s.to_string()));
        }
        for (i, es) in self.edges.iter().enumerate() {
            for (l, j) in es {
                let _ = writeln!(out, "  n{i} -> n{j} [label={}];", dot_quote(&l.render(prog)));
            }
        }
        out.push_str("}\n");
        out
    }
}

pub fn dot_quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Fixed-size bitset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(n: usize) -> Self {
        BitSet { words: vec![0; n.div_ceil(64)] }
    }

    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    /// Returns whether anything was added.
    pub fn union_with(&mut self, other: &BitSet) -> bool {
        let mut changed = false;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            let n = *a | *b;
            if n != *a {
                *a = n;
                changed = true;
            }
        }
        changed
    }

    pub fn intersects(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words
            .iter()
            .enumerate()
            .flat_map(|(w, &bits)| (0..64).filter(move |b| bits & (1 << b) != 0).map(move |b| w * 64 + b))
    }
}

/// Explores everything reachable from `inits`. Variables in `fixed` are
/// treated as global and never renamed.
pub fn enumerate_reachable(
    inits: &[CanonState],
    prog: &Program,
    fixed: &BTreeSet<Var>,
    limits: Limits,
) -> TransitionGraph {
    let mut g = TransitionGraph { fixed: fixed.clone(), ..Default::default() };
    let mut queue = VecDeque::new();
    for s in inits {
        let (i, new) = g.intern(s.clone());
        if new {
            queue.push_back((i, 0usize));
        }
    }
    while let Some((i, depth)) = queue.pop_front() {
        if g.nodes[i].is_failure() {
            continue;
        }
        if depth >= limits.max_depth || g.nodes.len() >= limits.max_states {
            g.unexpanded.insert(i);
            continue;
        }
        let repr = g.nodes[i].to_repr();
        for t in successors(&repr, prog, fixed) {
            let (j, new) = g.intern(t.target);
            g.edges[i].push((t.label, j));
            if new {
                queue.push_back((j, depth + 1));
            }
        }
    }
    g
}
