//! Critical corners at the meta level: lifted overlaps under the invariant
//! and equivalence steps against rule and built-in applications.

use std::collections::BTreeSet;

use serde::Serialize;

use super::classical::{pre_corners, PreCorner};
use super::spec::Spec;
use crate::lang::Program;
use crate::meta::template::{place, place_equiv, Fit, Placement};
use crate::meta::transition::satisfiable_formula;
use crate::meta::{Formula, MetaConstraint, MetaState, Solve, Step, Where};
use crate::term::{vars_of, Subst, Term, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaKind {
    Alpha,
    BetaRule,
    BetaBuiltin,
}

#[derive(Clone, Debug)]
pub enum Provenance {
    Overlap { rules: (usize, usize), overlap: Vec<Term>, unifier: String },
    Rule { rule: usize, equiv: usize, flipped: bool },
    Builtin { predicate: String, equiv: usize, flipped: bool },
}

impl Provenance {
    pub fn describe(&self, prog: &Program) -> String {
        match self {
            Provenance::Overlap { rules: (a, b), overlap, unifier } => {
                let atoms: Vec<String> = overlap.iter().map(ToString::to_string).collect();
                format!(
                    "overlap of {} and {} on {{{}}} with {}",
                    prog.rule_label(*a),
                    prog.rule_label(*b),
                    atoms.join(", "),
                    unifier
                )
            }
            Provenance::Rule { rule, equiv, flipped } => format!(
                "equivalence {}{} against {}",
                equiv + 1,
                if *flipped { " (reversed)" } else { "" },
                prog.rule_label(*rule)
            ),
            Provenance::Builtin { predicate, equiv, flipped } => format!(
                "equivalence {}{} against built-in {predicate}",
                equiv + 1,
                if *flipped { " (reversed)" } else { "" }
            ),
        }
    }
}

/// `left <- ancestor -> right` (alpha) or `left ~ ancestor -> right` (beta)
/// sharing one WHERE part.
#[derive(Clone, Debug)]
pub struct MetaCorner {
    pub kind: MetaKind,
    pub provenance: Provenance,
    pub ancestor: MetaState,
    pub left: MetaState,
    pub right: MetaState,
    pub m: Where,
    pub left_label: Option<String>,
    pub right_label: String,
}

impl MetaCorner {
    /// Term variables of the three states, rests included.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut v = self.ancestor.all_vars();
        v.extend(self.left.all_vars());
        v.extend(self.right.all_vars());
        v
    }

    pub fn with_where(&self, m: Where) -> MetaCorner {
        MetaCorner {
            ancestor: self.ancestor.normalize(&m),
            left: self.left.normalize(&m),
            right: self.right.normalize(&m),
            m,
            ..self.clone()
        }
    }
}

/// A corner whose WHERE part could not be decided.
#[derive(Clone, Debug)]
pub struct UndecidedCorner {
    pub kind: MetaKind,
    pub provenance: Provenance,
    pub ancestor: MetaState,
    pub reason: String,
}

#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug)]
pub enum Generated {
    Corner(MetaCorner),
    Undecided(UndecidedCorner),
}

/// Lifting of object variables in rule-derived terms: each becomes a fresh
/// meta variable.
fn lifting(vars: impl IntoIterator<Item = Var>) -> Subst {
    let mut s = Subst::new();
    for v in vars {
        let base = v.name().trim_start_matches('_').to_lowercase();
        s.insert_raw(v.clone(), Term::Var(Var::fresh(if base.is_empty() { "x" } else { &base })));
    }
    s
}

fn bind(states: &mut [&mut MetaState], p: &Placement) {
    for s in states.iter_mut() {
        if let Some(b) = &p.state_rest {
            **s = s.bind_rest(&b.var, &b.atoms, b.rest.clone());
        }
        if let Some((v, atoms)) = &p.state_brest {
            **s = s.bind_brest(v, atoms);
        }
    }
}

fn finish(
    kind: MetaKind,
    provenance: Provenance,
    states: [MetaState; 3],
    step: Step,
    labels: (Option<String>, String),
    seed: u64,
    out: &mut Vec<Generated>,
) {
    let [ancestor, left, right] = states;
    match step {
        Step::Inconsistent => {}
        Step::Unknown(reason) => out.push(Generated::Undecided(UndecidedCorner { kind, provenance, ancestor, reason })),
        Step::Ok(m) => match m.solve(seed) {
            Solve::Inconsistent => {}
            Solve::Unknown(reason) => {
                out.push(Generated::Undecided(UndecidedCorner { kind, provenance, ancestor, reason }))
            }
            Solve::Consistent(_) => {
                let c = MetaCorner {
                    kind,
                    provenance,
                    ancestor: ancestor.normalize(&m),
                    left: left.normalize(&m),
                    right: right.normalize(&m),
                    m,
                    left_label: labels.0,
                    right_label: labels.1,
                };
                if !c.ancestor.failed {
                    out.push(Generated::Corner(c));
                }
            }
        },
    }
}

fn lift_pre_corner(pc: &PreCorner, prog: &Program, spec: &Spec, seed: u64, out: &mut Vec<Generated>) {
    let mut all: Vec<Var> = pc.ancestor_vars().into_iter().collect();
    all.extend(vars_of(pc.left.iter().chain(pc.right.iter())));
    let lift = lifting(all.into_iter().collect::<BTreeSet<_>>());
    let locals: Vec<Var> = pc
        .left_locals
        .iter()
        .chain(pc.right_locals.iter())
        .filter_map(|v| lift.apply(&Term::Var(v.clone())).as_var().cloned())
        .collect();
    let b0 = lift.apply_all(&pc.builtins);
    let s_plus = Var::fresh("S");
    let b_plus = Var::fresh("B");
    let mk =
        |store: &[Term]| MetaState::new(lift.apply_all(store), Some(s_plus.clone()), b0.clone(), Some(b_plus.clone()));
    let (s0, s1, s2) = (mk(&pc.ancestor), mk(&pc.left), mk(&pc.right));
    let mut unifier = Subst::new();
    for (v, t) in pc.unifier.iter() {
        if let Some(w) = lift.apply(&Term::Var(v.clone())).as_var() {
            unifier.insert_raw(w.clone(), lift.apply(t));
        }
    }
    let provenance =
        Provenance::Overlap { rules: pc.rules, overlap: lift.apply_all(&pc.overlap), unifier: unifier.to_string() };
    let labels = (Some(pc.left_label.render(prog)), pc.right_label.render(prog));
    let g1 = lift.apply_all(&pc.left_guard);
    let g2 = lift.apply_all(&pc.right_guard);
    let l1: Vec<Var> =
        pc.left_locals.iter().filter_map(|v| lift.apply(&Term::Var(v.clone())).as_var().cloned()).collect();
    let l2: Vec<Var> =
        pc.right_locals.iter().filter_map(|v| lift.apply(&Term::Var(v.clone())).as_var().cloned()).collect();
    let m0 = Where::new(spec.defs.clone());
    for inv in &spec.invariants {
        let inv = inv.renamed();
        for fit in place(&s0, &inv.state, &inv.conds, &m0) {
            match fit {
                Fit::Unknown(reason) => out.push(Generated::Undecided(UndecidedCorner {
                    kind: MetaKind::Alpha,
                    provenance: provenance.clone(),
                    ancestor: s0.clone(),
                    reason,
                })),
                Fit::Fits(p) => {
                    let (mut a, mut l, mut r) = (s0.clone(), s1.clone(), s2.clone());
                    bind(&mut [&mut a, &mut l, &mut r], &p);
                    let full = a.builtins.clone();
                    let cs = vec![
                        MetaConstraint::Holds(satisfiable_formula(&b0, &p.m)),
                        MetaConstraint::Holds(Formula { premise: full.clone(), locals: l1.clone(), goal: g1.clone() }),
                        MetaConstraint::Holds(Formula { premise: full, locals: l2.clone(), goal: g2.clone() }),
                        MetaConstraint::FreshVars(locals.clone()),
                    ];
                    let step = p.m.add_all(&cs);
                    finish(MetaKind::Alpha, provenance.clone(), [a, l, r], step, labels.clone(), seed, out);
                }
            }
        }
    }
}

/// Critical alpha corners under the invariant (one per way the lifted
/// ancestor fits an invariant template).
pub fn critical_alpha_corners_meta(prog: &Program, spec: &Spec, seed: u64) -> Vec<Generated> {
    let mut out = Vec::new();
    for pc in pre_corners(prog) {
        lift_pre_corner(&pc, prog, spec, seed, &mut out);
    }
    out
}

/// Places `s0` into the invariant, then into one side of each equivalence,
/// and calls `emit` with the placed ancestor, the related state and the
/// combined placement.
fn beta_placements(
    s0: &MetaState,
    spec: &Spec,
    mut emit: impl FnMut(usize, bool, Result<(MetaState, MetaState, Placement), String>),
) {
    let m0 = Where::new(spec.defs.clone());
    for inv in &spec.invariants {
        let inv = inv.renamed();
        for fit in place(s0, &inv.state, &inv.conds, &m0) {
            let p = match fit {
                Fit::Unknown(reason) => {
                    emit(0, false, Err(reason));
                    continue;
                }
                Fit::Fits(p) => p,
            };
            let mut a = s0.clone();
            bind(&mut [&mut a], &p);
            for (ei, eq) in spec.equivs.iter().enumerate() {
                for flipped in [false, true] {
                    let rule = if flipped { eq.flipped() } else { eq.clone() };
                    for (fit, other) in place_equiv(&a, &rule, &p.m) {
                        match (fit, other) {
                            (Fit::Fits(q), Some(other)) => {
                                let mut a2 = a.clone();
                                bind(&mut [&mut a2], &q);
                                emit(ei, flipped, Ok((a2, other, q)));
                            }
                            (Fit::Unknown(reason), _) => emit(ei, flipped, Err(reason)),
                            _ => {}
                        }
                    }
                }
            }
        }
    }
}

/// Critical beta corners: an equivalence step against every rule and every
/// built-in predicate of the program.
pub fn critical_beta_corners(prog: &Program, spec: &Spec, seed: u64) -> Vec<Generated> {
    let mut out = Vec::new();
    if spec.equivs.is_empty() {
        return out;
    }
    for (ri, rule) in prog.rules.iter().enumerate() {
        let (r, _) = rule.rename_apart(&BTreeSet::new());
        let lift = lifting(r.all_vars());
        let head: Vec<Term> = lift.apply_all(&r.head().cloned().collect::<Vec<_>>());
        let guard = lift.apply_all(&r.guard);
        let locals: Vec<Var> =
            r.local_vars().iter().filter_map(|v| lift.apply(&Term::Var(v.clone())).as_var().cloned()).collect();
        let s0 = MetaState::new(head.clone(), Some(Var::fresh("S")), Vec::new(), Some(Var::fresh("B")));
        let n_kept = r.kept.len();
        beta_placements(&s0, spec, |ei, flipped, res| {
            let provenance = Provenance::Rule { rule: ri, equiv: ei, flipped };
            match res {
                Err(reason) => out.push(Generated::Undecided(UndecidedCorner {
                    kind: MetaKind::BetaRule,
                    provenance,
                    ancestor: s0.clone(),
                    reason,
                })),
                Ok((a, other, q)) => {
                    let mut store: Vec<Term> = head[..n_kept].to_vec();
                    store.extend(a.store[head.len()..].iter().cloned());
                    store.extend(lift.apply_all(&r.body));
                    let mut builtins = a.builtins.clone();
                    builtins.extend(guard.clone());
                    let right = MetaState::new(store, a.rest.clone(), builtins, None);
                    let cs = vec![
                        MetaConstraint::Holds(satisfiable_formula(&a.builtins, &q.m)),
                        MetaConstraint::Holds(Formula {
                            premise: a.builtins.clone(),
                            locals: locals.clone(),
                            goal: guard.clone(),
                        }),
                        MetaConstraint::FreshVars(locals.clone()),
                    ];
                    let step = q.m.add_all(&cs);
                    let labels = (None, prog.rule_label(ri));
                    finish(MetaKind::BetaRule, provenance, [a, other, right], step, labels, seed, &mut out);
                }
            }
        });
    }
    for (name, arity) in &prog.builtin_predicates {
        if name == "true" || name == "fail" {
            continue;
        }
        let args: Vec<Term> = (0..*arity).map(|i| Term::Var(Var::fresh(&format!("x{}", i + 1)))).collect();
        let b = Term::app(name, args);
        let s0 = MetaState::new(vec![b.clone()], Some(Var::fresh("S")), Vec::new(), Some(Var::fresh("B")));
        beta_placements(&s0, spec, |ei, flipped, res| {
            let provenance = Provenance::Builtin { predicate: format!("{name}/{arity}"), equiv: ei, flipped };
            match res {
                Err(reason) => out.push(Generated::Undecided(UndecidedCorner {
                    kind: MetaKind::BetaBuiltin,
                    provenance,
                    ancestor: s0.clone(),
                    reason,
                })),
                Ok((a, other, q)) => {
                    let Some(pos) = a.store.iter().position(|t| t == &b) else { return };
                    let mut store = a.store.clone();
                    store.remove(pos);
                    let mut builtins = a.builtins.clone();
                    builtins.push(b.clone());
                    let right = MetaState::new(store, a.rest.clone(), builtins, None);
                    let step = q.m.add(&MetaConstraint::Holds(satisfiable_formula(&a.builtins, &q.m)));
                    let labels = (None, format!("builtin {b}"));
                    finish(MetaKind::BetaBuiltin, provenance, [a, other, right], step, labels, seed, &mut out);
                }
            }
        });
    }
    out
}
