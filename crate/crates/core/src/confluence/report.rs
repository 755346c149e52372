//! Machine- and human-readable reports of a check, plus Graphviz evidence.
//! Text and JSON are both rendered from [`Report`], so they cannot disagree.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::classical::{ClassicalCorner, ClassicalStatus, ObjectStep};
use super::corners::{MetaKind, UndecidedCorner};
use super::join::{Closing, CoverCheck, PathStep, SplitTree, TreeStatus};
use super::{CheckResult, MetaResult, Mode};
use crate::lang::Program;
use crate::semantics::explore::dot_quote;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub program: Option<String>,
    pub spec: Option<String>,
    pub mode: String,
    pub verdict: String,
    pub modulo_equivalence: bool,
    pub assume_terminating: bool,
    pub classical_corners: Vec<ClassicalCornerReport>,
    pub meta_corners: Vec<MetaCornerReport>,
    pub undecided_corners: Vec<UndecidedReport>,
    pub audit: AuditReport,
    pub cover: CoverReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariant_audit: Option<InvariantAuditReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleCrossCheck>,
    pub notes: Vec<String>,
    pub timings: Timings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub label: String,
    pub state: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalCornerReport {
    pub rules: [String; 2],
    pub overlap: Vec<String>,
    pub unifier: String,
    pub ancestor: String,
    pub left: String,
    pub right: String,
    /// `joinable`, `non_joinable` or `unknown`.
    pub status: String,
    pub left_path: Vec<Step>,
    pub right_path: Vec<Step>,
    pub left_finals: Vec<String>,
    pub right_finals: Vec<String>,
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaCornerReport {
    /// `alpha`, `beta_rule` or `beta_builtin`.
    pub kind: String,
    pub provenance: String,
    pub ancestor: String,
    pub left: String,
    pub right: String,
    pub left_label: Option<String>,
    pub right_label: String,
    #[serde(rename = "where")]
    pub where_: Vec<String>,
    pub split_joinable: bool,
    pub tree: TreeReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TreeReport {
    Joinable { left_path: Vec<Step>, right_path: Vec<Step>, closing: String },
    Inconsistent,
    Split { condition: String, cover: CoverReport, holds: Box<TreeReport>, fails: Box<TreeReport> },
    Stuck { reason: String, candidates: Vec<String>, left_states: usize, right_states: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UndecidedReport {
    pub kind: String,
    pub provenance: String,
    pub ancestor: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub transitions: usize,
    pub samples: usize,
    pub skipped: usize,
    pub mismatches: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub samples: usize,
    pub failures: usize,
    /// Groundings of the unsplit state checked against the parts.
    #[serde(default)]
    pub parent_samples: usize,
    /// Groundings of the parts checked against the unsplit state.
    #[serde(default)]
    pub part_samples: usize,
}

impl From<&CoverCheck> for CoverReport {
    fn from(c: &CoverCheck) -> Self {
        CoverReport {
            samples: c.samples,
            failures: c.failures,
            parent_samples: c.parent_samples,
            part_samples: c.part_samples,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantAuditReport {
    pub states: usize,
    pub successors: usize,
    pub violations: Vec<String>,
}

/// Brute-force local-confluence check of ground instances run beside the
/// symbolic check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCrossCheck {
    pub inits: Vec<String>,
    /// Initial states outside the declared invariant.
    pub outside_invariant: Vec<String>,
    pub states: usize,
    pub corners_checked: usize,
    pub non_joinable: usize,
    /// `true`, `false` or absent when the enumeration was truncated.
    pub locally_confluent: Option<bool>,
    pub agrees: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_ms: f64,
}

fn steps(p: &[PathStep]) -> Vec<Step> {
    p.iter().map(|s| Step { label: s.label.clone(), state: s.state.clone() }).collect()
}

fn object_steps(p: &[ObjectStep]) -> Vec<Step> {
    p.iter().map(|s| Step { label: s.label.clone(), state: s.state.clone() }).collect()
}

fn state_text(store: &[crate::term::Term], builtins: &[crate::term::Term]) -> String {
    let s: Vec<String> = store.iter().map(ToString::to_string).collect();
    let b: Vec<String> = builtins.iter().map(ToString::to_string).collect();
    format!("<{{{}}}, {}>", s.join(", "), if b.is_empty() { "true".into() } else { b.join(" & ") })
}

fn classical_report(c: &ClassicalCorner, prog: &Program) -> ClassicalCornerReport {
    let pc = &c.pre;
    let mut r = ClassicalCornerReport {
        rules: [prog.rule_label(pc.rules.0), prog.rule_label(pc.rules.1)],
        overlap: pc.overlap.iter().map(ToString::to_string).collect(),
        unifier: pc.unifier.to_string(),
        ancestor: state_text(&pc.ancestor, &pc.builtins),
        left: state_text(&pc.left, &pc.builtins),
        right: state_text(&pc.right, &pc.builtins),
        status: String::new(),
        left_path: Vec::new(),
        right_path: Vec::new(),
        left_finals: Vec::new(),
        right_finals: Vec::new(),
        reason: None,
    };
    match &c.status {
        ClassicalStatus::Joinable { left, right } => {
            r.status = "joinable".into();
            r.left_path = object_steps(left);
            r.right_path = object_steps(right);
        }
        ClassicalStatus::NonJoinable { left_finals, right_finals, left_states, right_states } => {
            r.status = "non_joinable".into();
            r.left_finals = left_finals.clone();
            r.right_finals = right_finals.clone();
            r.reason = Some(format!(
                "wings fully enumerated ({left_states} and {right_states} states) without a common state"
            ));
        }
        ClassicalStatus::Unknown(why) => {
            r.status = "unknown".into();
            r.reason = Some(why.clone());
        }
    }
    r
}

fn tree_report(t: &SplitTree) -> TreeReport {
    match &t.status {
        TreeStatus::Joinable(p) => TreeReport::Joinable {
            left_path: steps(&p.left),
            right_path: steps(&p.right),
            closing: match p.closing {
                Closing::Identical => "identical".into(),
                Closing::Equivalent { equiv } => format!("equivalence {}", equiv + 1),
            },
        },
        TreeStatus::Inconsistent => TreeReport::Inconsistent,
        TreeStatus::Split { condition, holds, fails, cover } => TreeReport::Split {
            condition: condition.to_string(),
            cover: cover.into(),
            holds: Box::new(tree_report(holds)),
            fails: Box::new(tree_report(fails)),
        },
        TreeStatus::Stuck { reason, candidates, left_states, right_states } => TreeReport::Stuck {
            reason: reason.clone(),
            candidates: candidates.iter().map(ToString::to_string).collect(),
            left_states: *left_states,
            right_states: *right_states,
        },
    }
}

fn kind_name(k: MetaKind) -> String {
    match k {
        MetaKind::Alpha => "alpha",
        MetaKind::BetaRule => "beta_rule",
        MetaKind::BetaBuiltin => "beta_builtin",
    }
    .into()
}

fn meta_report(r: &MetaResult, prog: &Program) -> MetaCornerReport {
    let c = &r.corner;
    MetaCornerReport {
        kind: kind_name(c.kind),
        provenance: c.provenance.describe(prog),
        ancestor: c.ancestor.to_string(),
        left: c.left.to_string(),
        right: c.right.to_string(),
        left_label: c.left_label.clone(),
        right_label: c.right_label.clone(),
        where_: c.m.constraints().iter().map(ToString::to_string).collect(),
        split_joinable: r.analysis.tree.resolved(),
        tree: tree_report(&r.analysis.tree),
    }
}

fn undecided_report(u: &UndecidedCorner, prog: &Program) -> UndecidedReport {
    UndecidedReport {
        kind: kind_name(u.kind),
        provenance: u.provenance.describe(prog),
        ancestor: u.ancestor.to_string(),
        reason: u.reason.clone(),
    }
}

impl Report {
    pub fn new(result: &CheckResult, prog: &Program) -> Report {
        let cover = result.cover();
        Report {
            schema_version: SCHEMA_VERSION,
            program: None,
            spec: None,
            mode: result.mode.to_string(),
            verdict: result.verdict.to_string(),
            modulo_equivalence: result.mode == Mode::ModEquiv,
            assume_terminating: result.assume_terminating,
            classical_corners: result.classical.iter().map(|c| classical_report(c, prog)).collect(),
            meta_corners: result.meta.iter().map(|r| meta_report(r, prog)).collect(),
            undecided_corners: result.undecided.iter().map(|u| undecided_report(u, prog)).collect(),
            audit: AuditReport {
                transitions: result.audit.transitions,
                samples: result.audit.samples,
                skipped: result.audit.skipped,
                mismatches: result.audit.mismatches.clone(),
            },
            cover: CoverReport::from(&cover),
            invariant_audit: result.invariant_audit.as_ref().map(|a| InvariantAuditReport {
                states: a.states,
                successors: a.successors,
                violations: a.violations.clone(),
            }),
            oracle: None,
            notes: result.notes.clone(),
            timings: Timings { total_ms: result.elapsed.as_secs_f64() * 1000.0 },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let verdict = if self.modulo_equivalence && self.verdict != "NOT_CONFLUENT" && self.verdict != "CANNOT_PROVE" {
            format!("{} (modulo equivalence)", self.verdict)
        } else {
            self.verdict.clone()
        };
        let _ = writeln!(o, "verdict: {verdict}");
        if let Some(p) = &self.program {
            let _ = writeln!(o, "program: {p}");
        }
        if let Some(s) = &self.spec {
            let _ = writeln!(o, "spec: {s}");
        }
        let _ = writeln!(o, "mode: {}", self.mode);
        let _ = writeln!(o, "termination asserted: {}", if self.assume_terminating { "yes" } else { "no" });
        if self.mode == "classical" {
            let _ = writeln!(o, "critical corners: {}", self.classical_corners.len());
        } else {
            let _ = writeln!(
                o,
                "critical corners: {} ({} undecided)",
                self.meta_corners.len() + self.undecided_corners.len(),
                self.undecided_corners.len()
            );
        }
        for (i, c) in self.classical_corners.iter().enumerate() {
            let _ = writeln!(o, "\ncorner {}: {} / {} on {{{}}}", i + 1, c.rules[0], c.rules[1], c.overlap.join(", "));
            let _ = writeln!(o, "  unifier:  {}", c.unifier);
            let _ = writeln!(o, "  ancestor: {}", c.ancestor);
            let _ = writeln!(o, "  left:     {}", c.left);
            let _ = writeln!(o, "  right:    {}", c.right);
            let _ = writeln!(o, "  status:   {}", c.status);
            write_path(&mut o, "    left ", &c.left_path);
            write_path(&mut o, "    right", &c.right_path);
            if !c.left_finals.is_empty() || !c.right_finals.is_empty() {
                let _ = writeln!(o, "    left finals:  {}", c.left_finals.join(" | "));
                let _ = writeln!(o, "    right finals: {}", c.right_finals.join(" | "));
            }
            if let Some(r) = &c.reason {
                let _ = writeln!(o, "    {r}");
            }
        }
        for (i, c) in self.meta_corners.iter().enumerate() {
            let _ = writeln!(o, "\ncorner {} [{}]: {}", i + 1, c.kind, c.provenance);
            let _ = writeln!(o, "  ancestor: {}", c.ancestor);
            let _ = writeln!(o, "  left:     {}  ({})", c.left, c.left_label.as_deref().unwrap_or("equivalence"));
            let _ = writeln!(o, "  right:    {}  ({})", c.right, c.right_label);
            let _ = writeln!(o, "  where:    {}", c.where_.join(", "));
            let _ = writeln!(o, "  split-joinable: {}", if c.split_joinable { "yes" } else { "no" });
            write_tree(&mut o, &c.tree, 2);
        }
        for u in &self.undecided_corners {
            let _ = writeln!(
                o,
                "\nundecided [{}]: {}\n  ancestor: {}\n  reason: {}",
                u.kind, u.provenance, u.ancestor, u.reason
            );
        }
        if self.audit.transitions > 0 {
            let _ = writeln!(
                o,
                "\nsimulation audit: {} transitions, {} samples, {} skipped, {} mismatches",
                self.audit.transitions,
                self.audit.samples,
                self.audit.skipped,
                self.audit.mismatches.len()
            );
            for m in &self.audit.mismatches {
                let _ = writeln!(o, "  {m}");
            }
        }
        if self.cover.samples > 0 {
            let _ = writeln!(
                o,
                "cover check: {} samples ({} parent, {} part), {} failures",
                self.cover.samples, self.cover.parent_samples, self.cover.part_samples, self.cover.failures
            );
        }
        if let Some(a) = &self.invariant_audit {
            let _ = writeln!(
                o,
                "invariant audit: {} states, {} successors, {} leave the invariant",
                a.states,
                a.successors,
                a.violations.len()
            );
            for v in &a.violations {
                let _ = writeln!(o, "  {v}");
            }
        }
        if let Some(x) = &self.oracle {
            let lc = match x.locally_confluent {
                Some(true) => "locally confluent",
                Some(false) => "not locally confluent",
                None => "inconclusive (enumeration truncated)",
            };
            let _ = writeln!(
                o,
                "oracle: {} inits, {} states, {} corners, {} non-joinable: {lc}",
                x.inits.len(),
                x.states,
                x.corners_checked,
                x.non_joinable
            );
            if !x.outside_invariant.is_empty() {
                let _ = writeln!(o, "  outside the invariant: {}", x.outside_invariant.join(" | "));
            }
            if let Some(a) = x.agrees {
                let _ = writeln!(o, "  agrees with verdict: {}", if a { "yes" } else { "no" });
            }
        }
        for n in &self.notes {
            let _ = writeln!(o, "note: {n}");
        }
        let _ = writeln!(o, "time: {:.1} ms", self.timings.total_ms);
        o
    }
}

fn write_path(o: &mut String, prefix: &str, path: &[Step]) {
    if path.is_empty() {
        return;
    }
    let _ = write!(o, "{prefix}:");
    for s in path {
        let _ = write!(o, " --{}--> {}", s.label, s.state);
    }
    let _ = writeln!(o);
}

fn write_tree(o: &mut String, t: &TreeReport, indent: usize) {
    let pad = " ".repeat(indent);
    match t {
        TreeReport::Joinable { left_path, right_path, closing } => {
            let _ = writeln!(o, "{pad}joinable in {}+{} steps, closed by {closing}", left_path.len(), right_path.len());
            write_path(o, &format!("{pad}  left "), left_path);
            write_path(o, &format!("{pad}  right"), right_path);
        }
        TreeReport::Inconsistent => {
            let _ = writeln!(o, "{pad}inconsistent");
        }
        TreeReport::Split { condition, cover, holds, fails } => {
            let _ = writeln!(
                o,
                "{pad}split on {condition} (cover: {} samples, {} failures)",
                cover.samples, cover.failures
            );
            let _ = writeln!(o, "{pad}  where holds({condition}):");
            write_tree(o, holds, indent + 4);
            let _ = writeln!(o, "{pad}  where fails({condition}):");
            write_tree(o, fails, indent + 4);
        }
        TreeReport::Stuck { reason, candidates, left_states, right_states } => {
            let _ = writeln!(o, "{pad}stuck: {reason} ({left_states} and {right_states} states explored)");
            if !candidates.is_empty() {
                let _ = writeln!(o, "{pad}  untried or failed cases: {}", candidates.join(", "));
            }
        }
    }
}

/// Graphviz rendering of a meta corner's split tree and joining paths.
pub fn corner_dot(c: &MetaCornerReport) -> String {
    let mut o = String::from("digraph corner {\n  rankdir=TB;\n  node [shape=box, fontname=\"monospace\"];\n");
    let _ = writeln!(o, "  a [label={}];", dot_quote(&format!("{}\n{}", c.ancestor, c.where_.join(", "))));
    let _ = writeln!(o, "  l [label={}];", dot_quote(&c.left));
    let _ = writeln!(o, "  r [label={}];", dot_quote(&c.right));
    match &c.left_label {
        Some(l) => {
            let _ = writeln!(o, "  a -> l [label={}];", dot_quote(l));
        }
        None => {
            let _ = writeln!(o, "  a -> l [label=\"~\", style=dashed, dir=none];");
        }
    }
    let _ = writeln!(o, "  a -> r [label={}];", dot_quote(&c.right_label));
    let mut n = 0usize;
    tree_dot(&mut o, &c.tree, "a", &mut n);
    o.push_str("}\n");
    o
}

fn path_dot(o: &mut String, from: &str, path: &[Step], tag: &str, n: &mut usize) -> String {
    let mut cur = from.to_string();
    for s in path {
        *n += 1;
        let id = format!("{tag}{n}");
        let _ = writeln!(o, "  {id} [label={}];", dot_quote(&s.state));
        let _ = writeln!(o, "  {cur} -> {id} [label={}, style=dotted];", dot_quote(&s.label));
        cur = id;
    }
    cur
}

fn tree_dot(o: &mut String, t: &TreeReport, parent: &str, n: &mut usize) {
    *n += 1;
    let id = format!("t{n}");
    match t {
        TreeReport::Joinable { left_path, right_path, closing } => {
            let _ = writeln!(o, "  {id} [label=\"joinable\", shape=ellipse];");
            let _ = writeln!(o, "  {parent} -> {id} [style=bold];");
            let l = path_dot(o, &id, left_path, "jl", n);
            let r = path_dot(o, &id, right_path, "jr", n);
            let style = if closing == "identical" { "solid" } else { "dashed" };
            let _ = writeln!(o, "  {l} -> {r} [label={}, style={style}, dir=none];", dot_quote(closing));
        }
        TreeReport::Inconsistent => {
            let _ = writeln!(o, "  {id} [label=\"inconsistent\", shape=ellipse];");
            let _ = writeln!(o, "  {parent} -> {id} [style=bold];");
        }
        TreeReport::Split { condition, holds, fails, .. } => {
            let _ = writeln!(o, "  {id} [label={}, shape=diamond];", dot_quote(&format!("split {condition}")));
            let _ = writeln!(o, "  {parent} -> {id} [style=bold];");
            tree_dot(o, holds, &id, n);
            tree_dot(o, fails, &id, n);
        }
        TreeReport::Stuck { reason, .. } => {
            let _ = writeln!(o, "  {id} [label={}, shape=octagon];", dot_quote(&format!("stuck: {reason}")));
            let _ = writeln!(o, "  {parent} -> {id} [style=bold];");
        }
    }
}

/// Graphviz rendering of a classical corner with its witnesses.
pub fn classical_dot(c: &ClassicalCornerReport) -> String {
    let mut o = String::from("digraph corner {\n  node [shape=box, fontname=\"monospace\"];\n");
    let _ = writeln!(o, "  a [label={}];", dot_quote(&c.ancestor));
    let _ = writeln!(o, "  l [label={}];", dot_quote(&c.left));
    let _ = writeln!(o, "  r [label={}];", dot_quote(&c.right));
    let _ = writeln!(o, "  a -> l [label={}];", dot_quote(&c.rules[0]));
    let _ = writeln!(o, "  a -> r [label={}];", dot_quote(&c.rules[1]));
    let mut n = 0;
    if c.status == "joinable" {
        let l = path_dot(&mut o, "l", &c.left_path, "jl", &mut n);
        let r = path_dot(&mut o, "r", &c.right_path, "jr", &mut n);
        let _ = writeln!(o, "  {l} -> {r} [label=\"identical\", dir=none];");
    } else {
        for (side, finals) in [("l", &c.left_finals), ("r", &c.right_finals)] {
            for f in finals {
                n += 1;
                let _ = writeln!(o, "  f{n} [label={}, shape=ellipse];", dot_quote(f));
                let _ = writeln!(o, "  {side} -> f{n} [style=dotted];");
            }
        }
    }
    o.push_str("}\n");
    o
}
