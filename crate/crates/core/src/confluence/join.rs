//! Joinability of meta-level corners, with case splitting on undecided
//! conditions and sampling audits against the object level.

use std::collections::{BTreeSet, VecDeque};

use super::corners::MetaCorner;
use super::spec::Spec;
use crate::builtin;
use crate::lang::Program;
use crate::meta::sample::Sampler;
use crate::meta::template::related;
use crate::meta::transition::{meta_successors, state_key, StateKey};
use crate::meta::{Formula, MetaConstraint, MetaState, Solve, Step, Where};
use crate::semantics::{canonicalize_relative, successor_reprs};
use crate::term::{match_term, Term, Var};

#[derive(Clone, Copy, Debug)]
pub struct JoinLimits {
    pub depth: usize,
    pub max_nodes: usize,
    pub split_depth: usize,
    pub cover_samples: usize,
    pub audit_samples: usize,
    pub seed: u64,
}

impl Default for JoinLimits {
    fn default() -> Self {
        JoinLimits { depth: 8, max_nodes: 2000, split_depth: 4, cover_samples: 20, audit_samples: 1, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct PathStep {
    pub label: String,
    pub state: String,
}

#[derive(Clone, Debug)]
pub enum Closing {
    Identical,
    Equivalent { equiv: usize },
}

#[derive(Clone, Debug)]
pub struct JoinProof {
    pub left: Vec<PathStep>,
    pub right: Vec<PathStep>,
    pub closing: Closing,
}

#[derive(Clone, Debug, Default)]
pub struct CoverCheck {
    pub samples: usize,
    pub failures: usize,
    /// Samples of the parent checked against the parts.
    pub parent_samples: usize,
    /// Samples of the parts checked against the parent.
    pub part_samples: usize,
}

impl CoverCheck {
    pub fn absorb(&mut self, other: &CoverCheck) {
        self.samples += other.samples;
        self.failures += other.failures;
        self.parent_samples += other.parent_samples;
        self.part_samples += other.part_samples;
    }
}

#[derive(Clone, Debug)]
pub enum TreeStatus {
    Joinable(JoinProof),
    /// No grounding satisfies the WHERE part.
    Inconsistent,
    Split {
        condition: Term,
        holds: Box<SplitTree>,
        fails: Box<SplitTree>,
        cover: CoverCheck,
    },
    Stuck {
        reason: String,
        candidates: Vec<Term>,
        left_states: usize,
        right_states: usize,
    },
}

#[derive(Clone, Debug)]
pub struct SplitTree {
    pub m: Where,
    pub status: TreeStatus,
}

impl SplitTree {
    pub fn resolved(&self) -> bool {
        match &self.status {
            TreeStatus::Joinable(_) | TreeStatus::Inconsistent => true,
            TreeStatus::Split { holds, fails, .. } => holds.resolved() && fails.resolved(),
            TreeStatus::Stuck { .. } => false,
        }
    }

    pub fn leaves(&self) -> usize {
        match &self.status {
            TreeStatus::Split { holds, fails, .. } => holds.leaves() + fails.leaves(),
            _ => 1,
        }
    }

    pub fn cover(&self) -> CoverCheck {
        match &self.status {
            TreeStatus::Split { holds, fails, cover, .. } => {
                let mut total = cover.clone();
                total.absorb(&holds.cover());
                total.absorb(&fails.cover());
                total
            }
            _ => CoverCheck::default(),
        }
    }
}

/// Outcome of comparing meta transitions with object transitions of sampled
/// groundings.
#[derive(Clone, Debug, Default)]
pub struct AuditStats {
    pub transitions: usize,
    pub samples: usize,
    pub skipped: usize,
    pub mismatches: Vec<String>,
}

#[derive(Clone)]
struct Node {
    state: MetaState,
    m: Where,
    path: Vec<PathStep>,
}

struct Explored {
    nodes: Vec<Node>,
    candidates: Vec<Term>,
    notes: Vec<String>,
}

struct Ctx<'a> {
    prog: &'a Program,
    spec: &'a Spec,
    limits: JoinLimits,
    sampler: Sampler,
    audit: AuditStats,
}

impl Ctx<'_> {
    fn explore(&mut self, start: &MetaState, m: &Where) -> Explored {
        let mut nodes = vec![Node { state: start.clone(), m: m.clone(), path: Vec::new() }];
        let mut seen: BTreeSet<StateKey> = BTreeSet::from([state_key(start, m)]);
        let mut queue = VecDeque::from([0usize]);
        let mut candidates = Vec::new();
        let mut notes = Vec::new();
        while let Some(i) = queue.pop_front() {
            if nodes[i].path.len() >= self.limits.depth || nodes.len() >= self.limits.max_nodes {
                continue;
            }
            let node = nodes[i].clone();
            let succ = meta_successors(&node.state, &node.m, self.prog);
            for u in succ.undecided {
                candidates.extend(u.condition);
                if !notes.contains(&u.reason) {
                    notes.push(u.reason);
                }
            }
            for t in succ.transitions {
                self.audit_transition(&node.state, &t.target, &t.m, &t.label);
                let key = state_key(&t.target, &t.m);
                if !seen.insert(key) {
                    continue;
                }
                let mut path = node.path.clone();
                path.push(PathStep { label: t.label.render(self.prog), state: t.target.to_string() });
                nodes.push(Node { state: t.target, m: t.m, path });
                queue.push_back(nodes.len() - 1);
            }
        }
        Explored { nodes, candidates, notes }
    }

    /// Checks a meta transition against the object transitions of sampled
    /// groundings of its source.
    fn audit_transition(&mut self, source: &MetaState, target: &MetaState, m: &Where, label: &crate::semantics::Label) {
        if self.limits.audit_samples == 0 {
            return;
        }
        self.audit.transitions += 1;
        let mut extra = source.all_vars();
        extra.extend(target.all_vars());
        for _ in 0..self.limits.audit_samples {
            let Some(sigma) = self.sampler.grounding(m, &extra) else {
                self.audit.skipped += 1;
                continue;
            };
            let (Ok(src), Ok(tgt)) = (source.drop_state(&sigma), target.drop_state(&sigma)) else {
                self.audit.skipped += 1;
                continue;
            };
            self.audit.samples += 1;
            let fixed = src.vars();
            let want = canonicalize_relative(&tgt, &fixed);
            let found =
                successor_reprs(&src, self.prog).into_iter().any(|(_, r)| canonicalize_relative(&r, &fixed) == want);
            if !found && canonicalize_relative(&src, &fixed) != want {
                self.audit.mismatches.push(format!(
                    "{} from {source} to {target}: grounding {sigma} has no matching object transition",
                    label.render(self.prog)
                ));
            }
        }
    }

    fn try_join(&mut self, c: &MetaCorner) -> Result<JoinProof, (String, Vec<Term>, usize, usize)> {
        let left = self.explore(&c.left, &c.m);
        let right = self.explore(&c.right, &c.m);
        for l in &left.nodes {
            for r in &right.nodes {
                let Some(m) = merge(&l.m, &r.m) else { continue };
                if state_key(&l.state, &m) == state_key(&r.state, &m) {
                    return Ok(JoinProof { left: l.path.clone(), right: r.path.clone(), closing: Closing::Identical });
                }
            }
        }
        for l in &left.nodes {
            for r in &right.nodes {
                let Some(m) = merge(&l.m, &r.m) else { continue };
                for (ei, rule) in self.spec.equivs.iter().enumerate() {
                    if related(&l.state, &r.state, rule, &m) {
                        return Ok(JoinProof {
                            left: l.path.clone(),
                            right: r.path.clone(),
                            closing: Closing::Equivalent { equiv: ei },
                        });
                    }
                }
            }
        }
        let mut candidates = left.candidates;
        candidates.extend(right.candidates);
        for n in left.nodes.iter().chain(right.nodes.iter()).map(|n| &n.state).chain([&c.ancestor]) {
            candidates.extend(self.hinted(n));
        }
        let mut notes = left.notes;
        notes.extend(right.notes);
        notes.dedup();
        let reason = if notes.is_empty() {
            "no common descendant within the search bound".to_string()
        } else {
            format!("no common descendant; {}", notes.join("; "))
        };
        Err((reason, candidates, left.nodes.len(), right.nodes.len()))
    }

    fn hinted(&self, s: &MetaState) -> Vec<Term> {
        let mut out = Vec::new();
        for h in &self.spec.cases {
            for a in &s.store {
                if let Some(theta) = match_term(&h.pattern, a) {
                    out.push(theta.apply(&h.condition));
                }
            }
        }
        out
    }

    fn tree(&mut self, c: &MetaCorner, depth: usize) -> SplitTree {
        if matches!(c.m.solve(self.limits.seed), Solve::Inconsistent) {
            return SplitTree { m: c.m.clone(), status: TreeStatus::Inconsistent };
        }
        let (reason, candidates, ls, rs) = match self.try_join(c) {
            Ok(proof) => return SplitTree { m: c.m.clone(), status: TreeStatus::Joinable(proof) },
            Err(e) => e,
        };
        let candidates = usable(candidates, &c.m);
        if depth < self.limits.split_depth {
            let mut first_open = None;
            for cond in &candidates {
                let Ok((h, f)) = split(c, cond) else { continue };
                let parts: Vec<&Where> = [&h, &f].into_iter().flatten().map(|x| &x.m).collect();
                let cover = self.cover(&c.m, &parts, &c.vars());
                let mut child = |part: Option<MetaCorner>| match part {
                    Some(p) => self.tree(&p, depth + 1),
                    None => SplitTree { m: c.m.clone(), status: TreeStatus::Inconsistent },
                };
                let holds = child(h);
                let fails = child(f);
                let t = SplitTree {
                    m: c.m.clone(),
                    status: TreeStatus::Split {
                        condition: cond.clone(),
                        holds: Box::new(holds),
                        fails: Box::new(fails),
                        cover,
                    },
                };
                if t.resolved() {
                    return t;
                }
                first_open.get_or_insert(t);
            }
            if let Some(t) = first_open {
                return t;
            }
        }
        SplitTree {
            m: c.m.clone(),
            status: TreeStatus::Stuck { reason, candidates, left_states: ls, right_states: rs },
        }
    }

    /// Sampled evidence that the parts of a split cover the parent and lie
    /// inside it.
    fn cover(&mut self, parent: &Where, parts: &[&Where], vars: &BTreeSet<Var>) -> CoverCheck {
        let mut check = CoverCheck::default();
        for _ in 0..self.limits.cover_samples {
            if let Some(s) = self.sampler.grounding(parent, vars) {
                check.samples += 1;
                check.parent_samples += 1;
                if !parts.iter().any(|p| p.eval(&s)) {
                    check.failures += 1;
                }
            }
            for part in parts {
                if let Some(s) = self.sampler.grounding(part, vars) {
                    check.samples += 1;
                    check.part_samples += 1;
                    if !parent.eval(&s) {
                        check.failures += 1;
                    }
                }
            }
        }
        check
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SplitError {
    /// Only comparisons have a complement inside the fragment.
    NoComplement(Term),
    Unknown(String),
}

/// Splits `c` into the subcorners where `cond` holds and where it fails for
/// every grounding. A part no grounding admits is `None`.
pub fn split(c: &MetaCorner, cond: &Term) -> Result<(Option<MetaCorner>, Option<MetaCorner>), SplitError> {
    if !builtin::is_comparison(cond) {
        return Err(SplitError::NoComplement(cond.clone()));
    }
    let f = Formula::atoms(vec![cond.clone()]);
    let part = |step: Step| match step {
        Step::Ok(m) => Ok(Some(c.with_where(m))),
        Step::Inconsistent => Ok(None),
        Step::Unknown(r) => Err(SplitError::Unknown(r)),
    };
    Ok((part(c.m.add(&MetaConstraint::Holds(f.clone())))?, part(c.m.add(&MetaConstraint::Fails(f)))?))
}

/// Split candidates that are comparisons over value variables and not
/// already decided by `m`.
fn usable(candidates: Vec<Term>, m: &Where) -> Vec<Term> {
    let sol = m.solution();
    let mut out: Vec<Term> = Vec::new();
    for c in candidates {
        let c = sol.apply(&c);
        if !builtin::is_comparison(&c) || c.vars().is_empty() || !c.vars().iter().all(|v| m.is_value_var(v)) {
            continue;
        }
        if m.decide_atom(&c).is_some() || out.contains(&c) {
            continue;
        }
        out.push(c);
    }
    out
}

/// Both WHERE parts extend a common one by fresh variables only.
fn merge(a: &Where, b: &Where) -> Option<Where> {
    let extra: Vec<Var> = b.fresh_vars().difference(a.fresh_vars()).cloned().collect();
    if extra.is_empty() {
        return Some(a.clone());
    }
    a.add(&MetaConstraint::FreshVars(extra)).ok()
}

/// Result of analysing a single corner.
#[derive(Clone, Debug)]
pub struct CornerAnalysis {
    pub tree: SplitTree,
    pub audit: AuditStats,
}

pub fn analyse_corner(c: &MetaCorner, prog: &Program, spec: &Spec, limits: JoinLimits) -> CornerAnalysis {
    let mut ctx = Ctx { prog, spec, limits, sampler: Sampler::new(limits.seed), audit: AuditStats::default() };
    let tree = ctx.tree(c, 0);
    CornerAnalysis { tree, audit: ctx.audit }
}
