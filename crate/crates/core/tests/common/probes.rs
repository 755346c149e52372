//! Cross-validation of checker verdicts against exhaustive enumeration, and
//! global versus local confluence on generated terminating systems.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chrconf_core::confluence::spec::Spec;
use chrconf_core::confluence::{check, Config, Mode, Verdict};
use chrconf_core::lang::Program;
use chrconf_core::semantics::explore::{enumerate_reachable, Limits, TransitionGraph};
use chrconf_core::semantics::oracle::{oracle_local_confluence, Analysis, ByKey, Equivalence, Identity};
use chrconf_core::semantics::CanonState;

use super::{program, sorted_sets, spec, state};

pub struct Fixture {
    pub name: &'static str,
    pub program: &'static str,
    pub spec: Option<&'static str>,
    pub mode: Mode,
    /// Compares final states modulo the set permutation equivalence.
    pub modulo: bool,
    pub init: fn(&mut ChaCha8Rng) -> String,
}

const CONSTS: [&str; 3] = ["a", "b", "c"];

fn constant(rng: &mut ChaCha8Rng) -> String {
    if rng.gen_bool(0.5) {
        CONSTS.choose(rng).expect("nonempty").to_string()
    } else {
        rng.gen_range(-3..=3).to_string()
    }
}

/// One set over constants and up to five items.
fn set_init(rng: &mut ChaCha8Rng) -> String {
    let items = rng.gen_range(0..=5);
    let listed = rng.gen_range(0..=3);
    let list: Vec<String> = (0..listed).map(|_| constant(rng)).collect();
    let mut atoms = vec![format!("set([{}])", list.join(", "))];
    atoms.extend((0..items).map(|_| format!("item({})", constant(rng))));
    atoms.shuffle(rng);
    atoms.join(", ")
}

fn zigzag_init(rng: &mut ChaCha8Rng) -> String {
    format!("{}({})", ["p", "q", "r"].choose(rng).expect("nonempty"), rng.gen_range(-3..=3))
}

fn min_init(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..=6);
    (0..n).map(|_| format!("min({})", rng.gen_range(-3..=3))).collect::<Vec<_>>().join(", ")
}

pub fn fixtures() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "set (mod-equiv)",
            program: super::SET,
            spec: Some(super::SET_SPEC),
            mode: Mode::ModEquiv,
            modulo: true,
            init: set_init,
        },
        Fixture {
            name: "zigzag (invariant)",
            program: super::ZIGZAG,
            spec: Some(super::ZIGZAG_SPEC),
            mode: Mode::Invariant,
            modulo: false,
            init: zigzag_init,
        },
        Fixture {
            name: "min (classical)",
            program: super::MIN,
            spec: None,
            mode: Mode::Classical,
            modulo: false,
            init: min_init,
        },
    ]
}

pub struct CrossCheck {
    pub verdict: Verdict,
    pub inits: usize,
    pub states: usize,
    pub disagreements: Vec<String>,
}

/// Runs the checker on `f` and compares its verdict with the oracle on
/// `n` random ground initial states inside the invariant.
pub fn cross_validate(f: &Fixture, n: usize, seed: u64) -> CrossCheck {
    let prog = program(f.program);
    let sp = f.spec.map(spec).unwrap_or_default();
    let cfg = Config { assume_terminating: true, ..Config::new(f.mode) };
    let verdict = check(&prog, &sp, &cfg).expect("fixture has the specs its mode needs").verdict;
    let positive = matches!(verdict, Verdict::Confluent | Verdict::LocallyConfluent);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = CrossCheck { verdict, inits: 0, states: 0, disagreements: Vec::new() };
    let key = ByKey(sorted_sets);
    let eq: &dyn Equivalence = if f.modulo { &key } else { &Identity };
    for _ in 0..n {
        let src = (f.init)(&mut rng);
        let init = state(&src);
        if f.mode != Mode::Classical && !sp.admits(&init) {
            out.disagreements.push(format!("{src}: generated outside the invariant"));
            continue;
        }
        out.inits += 1;
        let report = oracle_local_confluence(std::slice::from_ref(&init), &prog, eq, Limits::default());
        out.states += report.graph.len();
        let finals: BTreeSet<CanonState> =
            report.finals().into_iter().map(|s| if f.modulo { sorted_sets(s) } else { s.clone() }).collect();
        let lc = report.locally_confluent();
        if positive && (lc != Some(true) || finals.len() != 1) {
            out.disagreements.push(format!(
                "{src}: verdict {verdict}, oracle local confluence {lc:?}, {} final classes",
                finals.len()
            ));
        }
        if verdict == Verdict::NotConfluent && lc.is_none() {
            out.disagreements.push(format!("{src}: enumeration truncated"));
        }
    }
    out
}

// ---- Newman and Huet probes ----

/// Nullary constraints `c0..c6`; rules only create constraints of a
/// strictly higher level than every removed head, so every system
/// terminates.
const LEVEL: [usize; 7] = [0, 1, 1, 2, 2, 3, 3];

fn name(i: usize) -> String {
    format!("c{i}")
}

/// Related constraints share a level: `c2 ~ c1`, `c4 ~ c3`, `c6 ~ c5`.
fn rank_key(s: &CanonState) -> CanonState {
    let store: Vec<_> = s
        .store
        .iter()
        .map(|t| match t.functor() {
            Some(("c2", 0)) => chrconf_core::term::Term::atom("c1"),
            Some(("c4", 0)) => chrconf_core::term::Term::atom("c3"),
            Some(("c6", 0)) => chrconf_core::term::Term::atom("c5"),
            _ => t.clone(),
        })
        .collect();
    let mut store = store;
    store.sort();
    CanonState { store, ..s.clone() }
}

pub struct GroundSystem {
    pub source: String,
    pub inits: Vec<String>,
}

pub fn ground_system(rng: &mut ChaCha8Rng) -> GroundSystem {
    let mut rules = Vec::new();
    for i in 0..rng.gen_range(2..=6) {
        let removed: Vec<usize> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(0..7)).collect();
        let top = removed.iter().map(|&c| LEVEL[c]).max().expect("nonempty head");
        let higher: Vec<usize> = (0..7).filter(|&c| LEVEL[c] > top).collect();
        let body: Vec<String> = if higher.is_empty() {
            Vec::new()
        } else {
            (0..rng.gen_range(0..=3)).map(|_| name(*higher.choose(rng).expect("nonempty"))).collect()
        };
        let body = if body.is_empty() { "true".to_string() } else { body.join(", ") };
        let removed: Vec<String> = removed.into_iter().map(name).collect();
        let head = if rng.gen_bool(0.3) {
            format!("{} \\ {}", name(rng.gen_range(0..7)), removed.join(", "))
        } else {
            removed.join(", ")
        };
        rules.push(format!("g{i} @ {head} <=> {body}."));
    }
    let inits = (0..rng.gen_range(1..=3))
        .map(|_| (0..rng.gen_range(1..=4)).map(|_| name(rng.gen_range(0..7))).collect::<Vec<_>>().join(", "))
        .collect();
    GroundSystem { source: rules.join("\n"), inits }
}

/// Local and global confluence modulo `key`, from the graph alone.
fn decide(g: &TransitionGraph, key: &dyn Fn(&CanonState) -> CanonState) -> (bool, bool) {
    let n = g.len();
    let mut reach: Vec<Option<BTreeSet<usize>>> = vec![None; n];
    fn close(i: usize, g: &TransitionGraph, reach: &mut Vec<Option<BTreeSet<usize>>>) -> BTreeSet<usize> {
        if let Some(r) = &reach[i] {
            return r.clone();
        }
        let mut r = BTreeSet::from([i]);
        for (_, j) in &g.edges[i] {
            r.extend(close(*j, g, reach));
        }
        reach[i] = Some(r.clone());
        r
    }
    let reach: Vec<BTreeSet<usize>> = (0..n).map(|i| close(i, g, &mut reach)).collect();
    let keys: Vec<CanonState> = g.nodes.iter().map(key).collect();
    let reach_keys: Vec<BTreeSet<&CanonState>> = reach.iter().map(|r| r.iter().map(|&j| &keys[j]).collect()).collect();
    let join = |a: usize, b: usize| !reach_keys[a].is_disjoint(&reach_keys[b]);
    let mut class: HashMap<&CanonState, Vec<usize>> = HashMap::new();
    for (i, k) in keys.iter().enumerate() {
        class.entry(k).or_default().push(i);
    }
    let mut local = true;
    for s0 in 0..n {
        let succ: Vec<usize> = g.edges[s0].iter().map(|(_, j)| *j).collect();
        for (x, &a) in succ.iter().enumerate() {
            for &b in &succ[x + 1..] {
                local &= join(a, b);
            }
        }
        for &s1 in &class[&keys[s0]] {
            for &t in &succ {
                local &= join(s1, t);
            }
        }
    }
    let mut global = true;
    for members in class.values() {
        let below: BTreeSet<usize> = members.iter().flat_map(|&m| reach[m].iter().copied()).collect();
        let below: Vec<usize> = below.into_iter().collect();
        for (x, &a) in below.iter().enumerate() {
            for &b in &below[x + 1..] {
                global &= join(a, b);
            }
        }
    }
    (local, global)
}

#[derive(Default)]
pub struct Probe {
    pub systems: usize,
    pub max_states: usize,
    pub confluent: usize,
    pub disagreements: Vec<String>,
}

/// Enumerates `count` generated systems (with and without the rank
/// equivalence) and compares global with local confluence, computed both
/// here and by the library's oracle.
pub fn newman_huet(count: usize, modulo: bool, seed: u64) -> Probe {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = Probe::default();
    let limits = Limits { max_states: 5000, max_depth: 200 };
    while probe.systems < count {
        let sys = ground_system(&mut rng);
        let prog: Program = program(&sys.source);
        let inits: Vec<CanonState> = sys.inits.iter().map(|s| state(s)).collect();
        let g = enumerate_reachable(&inits, &prog, &BTreeSet::new(), limits);
        if g.truncated() {
            continue;
        }
        probe.systems += 1;
        probe.max_states = probe.max_states.max(g.len());
        let key: &dyn Fn(&CanonState) -> CanonState = if modulo { &rank_key } else { &|s: &CanonState| s.clone() };
        let (local, global) = decide(&g, key);
        let by_key = ByKey(key);
        let a = Analysis::new(&g, if modulo { &by_key } else { &Identity });
        let (lib_local, lib_global) = (a.non_joinable_corners().is_empty(), a.global_counterexample().is_none());
        probe.confluent += usize::from(global);
        if local != global || lib_local != local || lib_global != global {
            probe.disagreements.push(format!(
                "{} from {:?}: local {local}, global {global}, oracle local {lib_local}, oracle global {lib_global}",
                sys.source.replace('\n', " "),
                sys.inits
            ));
        }
    }
    probe
}

/// Checker run with termination assumed.
pub fn run_check(prog: &str, sp: Option<&str>, mode: Mode) -> chrconf_core::confluence::CheckResult {
    let sp: Spec = sp.map(spec).unwrap_or_default();
    check(&program(prog), &sp, &Config { assume_terminating: true, ..Config::new(mode) }).expect("specs present")
}
