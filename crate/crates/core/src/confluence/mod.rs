//! Confluence checking: the classical critical-pair test and the meta-level
//! test under invariants and modulo equivalence.

pub mod classical;
pub mod corners;
pub mod join;
pub mod report;
pub mod spec;

use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::lang::Program;
use crate::meta::sample::sample_concretizations;
use crate::meta::Where;
use crate::semantics::explore::Limits;
use crate::semantics::{canonicalize, successor_reprs};
use classical::{classical_corners, ClassicalCorner, ClassicalStatus};
use corners::{critical_alpha_corners_meta, critical_beta_corners, Generated, MetaCorner, UndecidedCorner};
use join::{analyse_corner, AuditStats, CornerAnalysis, JoinLimits};
use spec::Spec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Classical,
    Invariant,
    ModEquiv,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Classical => "classical",
            Mode::Invariant => "invariant",
            Mode::ModEquiv => "mod-equiv",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Confluent,
    LocallyConfluent,
    NotConfluent,
    CannotProve,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Confluent | Verdict::LocallyConfluent => 0,
            Verdict::NotConfluent => 1,
            Verdict::CannotProve => 2,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Confluent => "CONFLUENT",
            Verdict::LocallyConfluent => "LOCALLY_CONFLUENT",
            Verdict::NotConfluent => "NOT_CONFLUENT",
            Verdict::CannotProve => "CANNOT_PROVE",
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Config {
    pub mode: Mode,
    pub assume_terminating: bool,
    pub join: JoinLimits,
    /// Bounds for exhaustive wing enumeration in classical mode.
    pub limits: Limits,
    /// Sampled states per invariant template for the preservation audit
    /// (0 disables it).
    pub invariant_samples: usize,
}

impl Config {
    pub fn new(mode: Mode) -> Self {
        Config {
            mode,
            assume_terminating: false,
            join: JoinLimits::default(),
            limits: Limits::default(),
            invariant_samples: 0,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("mode {0} needs a specification with at least one invariant")]
    MissingInvariant(Mode),
    #[error("mode mod-equiv needs a specification with at least one equivalence")]
    MissingEquivalence,
}

#[derive(Clone, Debug)]
pub struct MetaResult {
    pub corner: MetaCorner,
    pub analysis: CornerAnalysis,
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub mode: Mode,
    pub verdict: Verdict,
    pub assume_terminating: bool,
    pub classical: Vec<ClassicalCorner>,
    pub meta: Vec<MetaResult>,
    pub undecided: Vec<UndecidedCorner>,
    pub audit: AuditStats,
    pub invariant_audit: Option<InvariantAudit>,
    pub notes: Vec<String>,
    pub elapsed: Duration,
}

/// Sampled check that object transitions stay inside the invariant.
#[derive(Clone, Debug, Default)]
pub struct InvariantAudit {
    pub states: usize,
    pub successors: usize,
    pub violations: Vec<String>,
}

/// Samples states of every invariant template and checks that each of their
/// non-failed successors is again admitted by some template. The checker
/// assumes the invariant; violations are reported as warnings.
pub fn audit_invariant(prog: &Program, spec: &Spec, samples: usize, seed: u64) -> InvariantAudit {
    let mut audit = InvariantAudit::default();
    for (i, inv) in spec.invariants.iter().enumerate() {
        let inv = inv.renamed();
        let Some(m) = Where::new(spec.defs.clone()).add_all(&inv.conds).ok() else { continue };
        let state = inv.state.instantiate(&crate::term::Subst::new());
        for s in sample_concretizations(&state, &m, samples, seed.wrapping_add(i as u64)) {
            audit.states += 1;
            for (label, next) in successor_reprs(&s.to_repr(), prog) {
                let next = canonicalize(&next);
                if next.is_failure() {
                    continue;
                }
                audit.successors += 1;
                if !spec.admits(&next) {
                    audit.violations.push(format!("{s} --{}--> {next}", label.render(prog)));
                }
            }
        }
    }
    audit
}

impl CheckResult {
    /// Samples and failures of every cover check in the split trees.
    pub fn cover(&self) -> join::CoverCheck {
        let mut total = join::CoverCheck::default();
        for r in &self.meta {
            total.absorb(&r.analysis.tree.cover());
        }
        total
    }
}

fn positive(assume_terminating: bool) -> Verdict {
    if assume_terminating {
        Verdict::Confluent
    } else {
        Verdict::LocallyConfluent
    }
}

pub fn check(prog: &Program, spec: &Spec, cfg: &Config) -> Result<CheckResult, CheckError> {
    let start = Instant::now();
    let mut result = CheckResult {
        mode: cfg.mode,
        verdict: Verdict::CannotProve,
        assume_terminating: cfg.assume_terminating,
        classical: Vec::new(),
        meta: Vec::new(),
        undecided: Vec::new(),
        audit: AuditStats::default(),
        invariant_audit: None,
        notes: Vec::new(),
        elapsed: Duration::ZERO,
    };
    match cfg.mode {
        Mode::Classical => {
            result.classical = classical_corners(prog, cfg.limits);
            let non_joinable = result.classical.iter().any(|c| matches!(c.status, ClassicalStatus::NonJoinable { .. }));
            let unknown = result.classical.iter().any(|c| matches!(c.status, ClassicalStatus::Unknown(_)));
            result.verdict = if non_joinable {
                Verdict::NotConfluent
            } else if unknown {
                Verdict::CannotProve
            } else {
                positive(cfg.assume_terminating)
            };
        }
        Mode::Invariant | Mode::ModEquiv => {
            if spec.invariants.is_empty() {
                return Err(CheckError::MissingInvariant(cfg.mode));
            }
            let mut spec = spec.clone();
            if cfg.mode == Mode::ModEquiv {
                if spec.equivs.is_empty() {
                    return Err(CheckError::MissingEquivalence);
                }
            } else {
                spec.equivs.clear();
            }
            let mut generated = critical_alpha_corners_meta(prog, &spec, cfg.join.seed);
            generated.extend(critical_beta_corners(prog, &spec, cfg.join.seed));
            for (i, g) in generated.into_iter().enumerate() {
                match g {
                    Generated::Undecided(u) => result.undecided.push(u),
                    Generated::Corner(corner) => {
                        let limits = JoinLimits { seed: cfg.join.seed.wrapping_add(i as u64), ..cfg.join };
                        let analysis = analyse_corner(&corner, prog, &spec, limits);
                        let a = &analysis.audit;
                        result.audit.transitions += a.transitions;
                        result.audit.samples += a.samples;
                        result.audit.skipped += a.skipped;
                        result.audit.mismatches.extend(a.mismatches.iter().cloned());
                        result.meta.push(MetaResult { corner, analysis });
                    }
                }
            }
            let stuck = result.meta.iter().filter(|r| !r.analysis.tree.resolved()).count();
            let cover = result.cover();
            if !result.undecided.is_empty() {
                result.notes.push(format!("{} corner(s) could not be decided", result.undecided.len()));
            }
            if stuck > 0 {
                result.notes.push(format!("{stuck} corner(s) not shown split-joinable"));
            }
            if cover.failures > 0 {
                result.notes.push(format!("{} of {} cover samples failed", cover.failures, cover.samples));
            }
            if !result.audit.mismatches.is_empty() {
                result.notes.push(format!(
                    "{} sampled groundings disagree with the object semantics",
                    result.audit.mismatches.len()
                ));
            }
            result.verdict = if result.undecided.is_empty()
                && stuck == 0
                && cover.failures == 0
                && result.audit.mismatches.is_empty()
            {
                positive(cfg.assume_terminating)
            } else {
                Verdict::CannotProve
            };
        }
    }
    if cfg.mode != Mode::Classical && cfg.invariant_samples > 0 {
        let a = audit_invariant(prog, spec, cfg.invariant_samples, cfg.join.seed);
        if !a.violations.is_empty() {
            result.notes.push(format!(
                "warning: {} sampled transitions leave the invariant, e.g. {}",
                a.violations.len(),
                a.violations[0]
            ));
        }
        result.invariant_audit = Some(a);
    }
    if !cfg.assume_terminating && result.verdict == Verdict::LocallyConfluent {
        result.notes.push("termination not asserted; confluence follows only for terminating programs".into());
    }
    result.elapsed = start.elapsed();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;
    use spec::parse_spec;

    const SET: &str = "set(L), item(A) <=> set([A|L]).";
    const SET_SPEC: &str = "type constList = list(const).\n\
        type constItems = mset(item(const)).\n\
        invariant state << {set(L)} + S, true >> where type(constList, L), type(constItems, S).\n\
        equiv << {set(L1)} + S, true >> ~ << {set(L2)} + S, true >>\n  \
        where type(constList, L1), type(constList, L2), perm(L1, L2), type(constItems, S).\n";

    fn run(prog: &str, spec: &str, mode: Mode, term: bool) -> CheckResult {
        let prog = parse_program(prog).unwrap();
        let spec = parse_spec(spec).unwrap();
        let cfg = Config { assume_terminating: term, ..Config::new(mode) };
        check(&prog, &spec, &cfg).unwrap()
    }

    #[test]
    fn set_verdicts_per_mode() {
        assert_eq!(run(SET, "", Mode::Classical, true).verdict, Verdict::NotConfluent);
        let r = run(SET, SET_SPEC, Mode::ModEquiv, true);
        assert_eq!(r.verdict, Verdict::Confluent, "{:?}", r.notes);
        assert_eq!(run(SET, SET_SPEC, Mode::ModEquiv, false).verdict, Verdict::LocallyConfluent);
        assert_eq!(run(SET, SET_SPEC, Mode::Invariant, true).verdict, Verdict::CannotProve);
    }

    #[test]
    fn modes_need_their_specs() {
        let prog = parse_program(SET).unwrap();
        let empty = Spec::default();
        assert_eq!(
            check(&prog, &empty, &Config::new(Mode::Invariant)).unwrap_err(),
            CheckError::MissingInvariant(Mode::Invariant)
        );
        let inv_only = parse_spec("invariant state << {set(L)} + S, true >>.").unwrap();
        assert_eq!(check(&prog, &inv_only, &Config::new(Mode::ModEquiv)).unwrap_err(), CheckError::MissingEquivalence);
    }

    #[test]
    fn min_is_confluent_classically() {
        let r = run("min(X) \\ min(Y) <=> X =< Y | true.", "", Mode::Classical, true);
        assert_eq!(r.verdict, Verdict::Confluent);
        assert_eq!(Verdict::Confluent.exit_code(), 0);
    }

    #[test]
    fn invariant_audit_flags_escaping_transitions() {
        let spec = parse_spec(SET_SPEC).unwrap();
        let good = parse_program(SET).unwrap();
        let a = audit_invariant(&good, &spec, 10, 1);
        assert!(a.states > 0 && a.successors > 0);
        assert!(a.violations.is_empty(), "{:?}", a.violations);
        let bad = parse_program("set(L), item(A) <=> set([A|L]), set([]).").unwrap();
        assert!(!audit_invariant(&bad, &spec, 10, 1).violations.is_empty());
    }
}
