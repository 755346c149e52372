//! Property suites, run by the `properties` test target and by the
//! acceptance runner.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use chrconf_core::builtin::{equivalent, BuiltinStore, Entailment};
use chrconf_core::confluence::corners::{critical_alpha_corners_meta, Generated};
use chrconf_core::confluence::join::split;
use chrconf_core::lang::{make_pre_application, parse_program, Program};
use chrconf_core::meta::sample::{sample_concretizations, Sampler};
use chrconf_core::meta::transition::strengthen_for_rule;
use chrconf_core::meta::{drop_term, lift, name_term, Formula, MetaConstraint, MetaState, TypeExpr, Where};
use chrconf_core::semantics::{canonicalize, successor_reprs, successors, StateRepr};
use chrconf_core::term::{match_into, match_term, rename_apart, unify, Subst, Term, Var};

pub const CASES: u32 = 1000;

pub type Suite = fn(u32) -> Result<(), String>;

/// `(module, property, suite)` for every property.
pub const SUITES: &[(&str, &str, Suite)] = &[
    ("term-core", "unifier soundness", unifier_sound),
    ("term-core", "unifier generality", unifier_most_general),
    ("term-core", "matching is one-sided unification", matching_one_sided),
    ("term-core", "renaming keeps the skeleton", rename_keeps_skeleton),
    ("builtin-theory", "add commutativity", add_commutes),
    ("builtin-theory", "entailment monotonicity", entailment_monotone),
    ("builtin-theory", "solver agrees with enumeration", solver_matches_enumeration),
    ("semantics", "canonical form ignores renaming", canonical_ignores_renaming),
    ("semantics", "canonical form respects transitions", canonical_respects_transitions),
    ("chr-lang", "print/parse round trip", print_parse_round_trip),
    ("meta-level", "naming round trip", naming_round_trip),
    ("meta-level", "split preserves the cover", split_cover),
    ("meta-level", "strengthening is greatest", strengthening_greatest),
    ("meta-level", "invariant samples are admitted", invariant_samples_admitted),
    ("meta-level", "equivalence samples are equivalent", equivalence_samples_equivalent),
];

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: Debug,
{
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

// ---- terms ----

fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["X", "Y", "Z"]).prop_map(Term::var),
        prop::sample::select(vec!["a", "b"]).prop_map(Term::atom),
        (-2i64..=2).prop_map(Term::int),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::app("f", vec![t])),
            (inner.clone(), inner).prop_map(|(a, b)| Term::app("g", vec![a, b])),
        ]
    })
}

fn ground_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![prop::sample::select(vec!["a", "b"]).prop_map(Term::atom), (-2i64..=2).prop_map(Term::int)];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::app("f", vec![t])),
            (inner.clone(), inner).prop_map(|(a, b)| Term::app("g", vec![a, b])),
        ]
    })
}

/// Replaces the subterms of `g` picked by `bits` with variables named after
/// their content, so one grounding instantiates every abstraction of `g`.
fn abstract_term(g: &Term, bits: &mut impl Iterator<Item = bool>, names: &mut BTreeMap<Term, Var>) -> Term {
    if bits.next().unwrap_or(false) {
        let n = names.len();
        return Term::Var(names.entry(g.clone()).or_insert_with(|| Var::named(&format!("V{n}"))).clone());
    }
    match g.functor() {
        Some((f, n)) if n > 0 => Term::app(f, g.args().iter().map(|a| abstract_term(a, bits, names)).collect()),
        _ => g.clone(),
    }
}

fn is_variant(a: &Term, b: &Term) -> bool {
    match (match_term(a, b), match_term(b, a)) {
        (Some(s), Some(_)) => s.iter().all(|(_, t)| t.is_var()),
        _ => false,
    }
}

pub fn unifier_sound(cases: u32) -> Result<(), String> {
    run(cases, (term(), term()), |(a, b)| {
        if let Some(s) = unify(&a, &b) {
            prop_assert_eq!(s.apply(&a), s.apply(&b));
            prop_assert_eq!(s.apply(&s.apply(&a)), s.apply(&a));
            for (v, t) in s.iter() {
                prop_assert_ne!(&Term::Var(v.clone()), t);
            }
        }
        Ok(())
    })
}

pub fn unifier_most_general(cases: u32) -> Result<(), String> {
    run(cases, (ground_term(), prop::collection::vec(prop::bool::weighted(0.3), 64)), |(g, bits)| {
        let mut names = BTreeMap::new();
        let mut it = bits.iter().copied();
        let t1 = abstract_term(&g, &mut it, &mut names);
        let t2 = abstract_term(&g, &mut it, &mut names);
        let mut theta = Subst::new();
        for (t, v) in &names {
            theta.insert_raw(v.clone(), t.clone());
        }
        prop_assert_eq!(theta.apply(&t1), theta.apply(&t2));
        let Some(sigma) = unify(&t1, &t2) else {
            return Err(TestCaseError::fail(format!("{t1} and {t2} have the unifier {theta}")));
        };
        // theta is sigma followed by some delta, found by matching
        let mut delta = Subst::new();
        for v in names.values() {
            let x = Term::Var(v.clone());
            prop_assert!(
                match_into(&sigma.apply(&x), &theta.apply(&x), &mut delta),
                "theta does not factor through {} at {}",
                sigma,
                v
            );
        }
        Ok(())
    })
}

pub fn matching_one_sided(cases: u32) -> Result<(), String> {
    run(cases, (term(), term()), |(p, t)| {
        let pv: BTreeSet<Var> = p.var_set();
        let t2 = rename_apart(&t, &pv);
        let by_match = match_term(&p, &t2);
        if let Some(s) = &by_match {
            prop_assert_eq!(s.apply(&p), t2.clone());
            prop_assert!(s.iter().all(|(v, _)| pv.contains(v)));
        }
        let by_unify = unify(&p, &t2).map(|s| is_variant(&s.apply(&t2), &t2)).unwrap_or(false);
        prop_assert_eq!(by_match.is_some(), by_unify);
        prop_assert!(match_term(&p, &t).map(|s| s.apply(&p) == t).unwrap_or(true));
        Ok(())
    })
}

pub fn rename_keeps_skeleton(cases: u32) -> Result<(), String> {
    let avoid = prop::collection::btree_set(prop::sample::select(vec!["X", "Y", "Z", "W"]), 0..4);
    run(cases, (term(), avoid), |(t, avoid)| {
        let avoid: BTreeSet<Var> = avoid.into_iter().map(Var::named).collect();
        let r = rename_apart(&t, &avoid);
        prop_assert_eq!(r.skeleton(), t.skeleton());
        prop_assert!(r.var_set().is_disjoint(&avoid));
        prop_assert!(is_variant(&r, &t));
        Ok(())
    })
}

// ---- built-in theory ----

const VARS: [&str; 3] = ["X", "Y", "Z"];

fn side() -> impl Strategy<Value = Term> {
    prop_oneof![
        prop::sample::select(VARS.to_vec()).prop_map(Term::var),
        (prop::sample::select(VARS.to_vec()), -3i64..=3)
            .prop_map(|(v, c)| Term::app("+", vec![Term::var(v), Term::int(c)])),
    ]
}

/// Difference constraints: `x op c`, `x + c op y`, `x - y op c`.
fn comparison() -> impl Strategy<Value = Term> {
    let op = prop::sample::select(vec!["<", "=<", ">", ">="]);
    let v = || prop::sample::select(VARS.to_vec()).prop_map(Term::var);
    prop_oneof![
        (op.clone(), side(), -3i64..=3).prop_map(|(op, a, c)| Term::app(op, vec![a, Term::int(c)])),
        (op.clone(), side(), v()).prop_map(|(op, a, b)| Term::app(op, vec![a, b])),
        (op, v(), v(), -3i64..=3)
            .prop_map(|(op, a, b, c)| Term::app(op, vec![Term::app("-", vec![a, b]), Term::int(c)])),
    ]
}

fn conj(max: usize) -> impl Strategy<Value = Vec<Term>> {
    prop::collection::vec(comparison(), 0..=max)
}

fn eval(t: &Term, env: &BTreeMap<&str, i64>) -> i64 {
    match t {
        Term::Int(i) => *i,
        Term::Var(v) => env[v.name()],
        _ => {
            let a = t.args();
            match t.functor() {
                Some(("+", 2)) => eval(&a[0], env) + eval(&a[1], env),
                Some(("-", 2)) => eval(&a[0], env) - eval(&a[1], env),
                _ => unreachable!("{t}"),
            }
        }
    }
}

fn compare(op: &str, l: i64, r: i64) -> bool {
    match op {
        "<" => l < r,
        "=<" => l <= r,
        ">" => l > r,
        ">=" => l >= r,
        _ => unreachable!("{op}"),
    }
}

fn holds(atoms: &[Term], env: &BTreeMap<&str, i64>) -> bool {
    atoms.iter().all(|a| compare(a.functor().unwrap().0, eval(&a.args()[0], env), eval(&a.args()[1], env)))
}

/// Every assignment of the three variables within a window wide enough to
/// contain a solution of any satisfiable conjunction of these atoms.
fn assignments() -> impl Iterator<Item = BTreeMap<&'static str, i64>> {
    const W: i64 = 12;
    (-W..=W)
        .flat_map(|x| (-W..=W).flat_map(move |y| (-W..=W).map(move |z| BTreeMap::from([("X", x), ("Y", y), ("Z", z)]))))
}

fn store(atoms: &[Term]) -> Result<BuiltinStore, TestCaseError> {
    BuiltinStore::from_atoms(atoms).map_err(|e| TestCaseError::fail(format!("{e}")))
}

pub fn add_commutes(cases: u32) -> Result<(), String> {
    run(cases, (conj(5).prop_shuffle(), any::<u64>()), |(atoms, seed)| {
        let mut other = atoms.clone();
        let n = other.len().max(1);
        other.rotate_left((seed as usize) % n);
        other.reverse();
        let (a, b) = (store(&atoms)?, store(&other)?);
        prop_assert_eq!(a.is_satisfiable(), b.is_satisfiable());
        if a.is_satisfiable() {
            prop_assert!(equivalent(&a, &b, &Subst::new()), "{} vs {}", a, b);
        }
        Ok(())
    })
}

pub fn entailment_monotone(cases: u32) -> Result<(), String> {
    run(cases, (conj(3), conj(3), conj(2)), |(b, extra, goal)| {
        if store(&b)?.entails(&BTreeSet::new(), &goal) == Entailment::Yes {
            let more = store(&[b.clone(), extra].concat())?;
            if more.is_satisfiable() {
                prop_assert_eq!(more.entails(&BTreeSet::new(), &goal), Entailment::Yes);
            }
        }
        Ok(())
    })
}

pub fn solver_matches_enumeration(cases: u32) -> Result<(), String> {
    run(cases, (conj(3), conj(2)), |(b, goal)| {
        let s = store(&b)?;
        let models: Vec<_> = assignments().filter(|e| holds(&b, e)).collect();
        prop_assert_eq!(s.is_satisfiable(), !models.is_empty(), "{}", s);
        match s.entails(&BTreeSet::new(), &goal) {
            Entailment::Yes => prop_assert!(models.iter().all(|e| holds(&goal, e))),
            Entailment::No => prop_assert!(!models.iter().any(|e| holds(&goal, e))),
            Entailment::Unknown => {}
        }
        Ok(())
    })
}

// ---- object semantics ----

const PROGRAM: &str = "set(L), item(A) <=> set([A|L]).\n\
    r1 @ p(X) <=> q(X).\nr2 @ p(X) <=> r(X).\nr3 @ q(X) <=> X > 0 | r(X).\nr4 @ r(X) <=> X =< 0 | q(X).\n\
    keep @ min(X) \\ min(Y) <=> X =< Y | true.\n\
    dup @ item(A) \\ item(A) <=> true.";

fn mixed_program() -> Program {
    parse_program(PROGRAM).expect("fixture parses")
}

fn arg() -> impl Strategy<Value = Term> {
    prop_oneof![
        prop::sample::select(vec!["A", "B", "C"]).prop_map(Term::var),
        (-2i64..=2).prop_map(Term::int),
        prop::sample::select(vec!["a", "b"]).prop_map(Term::atom),
    ]
}

fn atom() -> impl Strategy<Value = Term> {
    let v = || prop::sample::select(vec!["A", "B"]).prop_map(Term::var);
    prop_oneof![
        (prop::sample::select(vec!["p", "q", "r", "item", "min"]), arg()).prop_map(|(f, a)| Term::app(f, vec![a])),
        prop::collection::vec(arg(), 0..3).prop_map(|xs| Term::app("set", vec![Term::proper_list(xs)])),
        (v(), -2i64..=2).prop_map(|(v, c)| Term::app("=", vec![v, Term::int(c)])),
        (v(), -2i64..=2).prop_map(|(v, c)| Term::app(">", vec![v, Term::int(c)])),
    ]
}

/// A store and built-in atoms over the variables `A`, `B`, `C`.
fn object_state() -> impl Strategy<Value = (Vec<Term>, Vec<Term>)> {
    let b = prop::collection::vec(
        (prop::sample::select(vec!["<", "=<", ">", ">="]), prop::sample::select(vec!["A", "B"]), -2i64..=2)
            .prop_map(|(op, v, c)| Term::app(op, vec![Term::var(v), Term::int(c)])),
        0..2,
    );
    (prop::collection::vec(atom(), 0..5), b)
}

fn repr(store: &[Term], builtins: &[Term]) -> Option<StateRepr> {
    BuiltinStore::from_atoms(builtins).ok().map(|b| StateRepr::new(store.to_vec(), b))
}

pub fn canonical_ignores_renaming(cases: u32) -> Result<(), String> {
    run(cases, (object_state(), Just(vec!["A", "B", "C"]).prop_shuffle()), |((store, builtins), perm)| {
        let Some(s) = repr(&store, &builtins) else { return Ok(()) };
        let map: BTreeMap<&str, &str> = ["A", "B", "C"].into_iter().zip(perm.iter().copied()).collect();
        let ren = |t: &Term| t.map_vars(&mut |v| Some(Term::var(&format!("{}_r", map[v.name()]))));
        let renamed = repr(&store.iter().map(ren).collect::<Vec<_>>(), &builtins.iter().map(ren).collect::<Vec<_>>())
            .expect("renaming keeps the fragment");
        prop_assert_eq!(canonicalize(&s), canonicalize(&renamed));
        let mut reversed = store.clone();
        reversed.reverse();
        prop_assert_eq!(canonicalize(&s), canonicalize(&repr(&reversed, &builtins).expect("same built-ins")));
        Ok(())
    })
}

pub fn canonical_respects_transitions(cases: u32) -> Result<(), String> {
    let prog = mixed_program();
    run(cases, object_state(), |(store, builtins)| {
        let Some(s) = repr(&store, &builtins) else { return Ok(()) };
        let c = canonicalize(&s);
        let from_canon = successors(&c.to_repr(), &prog, &BTreeSet::new());
        if c.is_failure() {
            prop_assert!(from_canon.is_empty());
            return Ok(());
        }
        for (label, t) in successor_reprs(&s, &prog) {
            let want = canonicalize(&t);
            prop_assert!(
                from_canon.iter().any(|tr| tr.target == want && tr.label.rule() == label.rule()),
                "{} --{:?}--> {} has no counterpart",
                c,
                label,
                want
            );
        }
        Ok(())
    })
}

// ---- syntax ----

fn rule_src() -> impl Strategy<Value = String> {
    let head =
        prop::collection::vec(prop::sample::select(vec!["p(X)", "q(X, Y)", "item(A)", "set(L)", "min(X)", "s"]), 1..3);
    let guard = prop::sample::select(vec!["", "X > 0 | ", "X =< Y | ", "X = a | ", "true | "]);
    let body = prop::collection::vec(
        prop::sample::select(vec!["true", "r(X)", "set([A|L])", "X = Y", "t(f(X), [1, -2])", "Y > 3"]),
        1..3,
    );
    let name = prop::option::of(prop::sample::select(vec!["r1", "keep"]));
    (name, head.clone(), prop::option::of(head), guard, body, any::<bool>()).prop_map(
        |(name, h1, h2, g, b, propagate)| {
            let name = name.map(|n| format!("{n} @ ")).unwrap_or_default();
            let h = match (&h2, propagate) {
                (_, true) => format!("{} ==>", h1.join(", ")),
                (Some(h2), false) => format!("{} \\ {} <=>", h1.join(", "), h2.join(", ")),
                (None, false) => format!("{} <=>", h1.join(", ")),
            };
            format!("{name}{h} {g}{}.", b.join(", "))
        },
    )
}

pub fn print_parse_round_trip(cases: u32) -> Result<(), String> {
    run(cases, prop::collection::vec(rule_src(), 1..4), |rules| {
        let src = rules.join("\n");
        let p = parse_program(&src).map_err(|e| TestCaseError::fail(format!("{src}: {e}")))?;
        let printed = p.to_string();
        let q = parse_program(&printed).map_err(|e| TestCaseError::fail(format!("{printed}: {e}")))?;
        prop_assert_eq!(&p.rules, &q.rules);
        prop_assert_eq!(q.to_string(), printed);
        Ok(())
    })
}

// ---- meta level ----

pub fn naming_round_trip(cases: u32) -> Result<(), String> {
    run(cases, term(), |t| {
        prop_assert_eq!(drop_term(&name_term(&t)).map_err(|e| TestCaseError::fail(e.to_string()))?, t.clone());
        let (lifted, _) = lift(std::slice::from_ref(&t));
        let mut back = Subst::new();
        for v in lifted[0].vars() {
            back.insert_raw(v.clone(), Term::name_of(&Var::named(&format!("N{}", v.serial()))));
        }
        let dropped = drop_term(&back.apply(&lifted[0])).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(is_variant(&dropped, &t));
        if !t.is_ground() {
            prop_assert!(drop_term(&lifted[0]).is_err());
        }
        Ok(())
    })
}

fn int_condition() -> impl Strategy<Value = (&'static str, i64)> {
    (prop::sample::select(vec!["<", "=<", ">", ">="]), -3i64..=3)
}

fn zigzag_int_where(n: &Term) -> Where {
    let spec = super::spec(super::ZIGZAG_SPEC);
    Where::new(spec.defs.clone())
        .add(&MetaConstraint::Type(TypeExpr::Int, n.clone()))
        .ok()
        .expect("type(int, N) is consistent")
}

fn grounded(v: &Term, k: i64) -> Subst {
    Subst::singleton(v.as_var().expect("meta variable").clone(), Term::int(k))
}

pub fn split_cover(cases: u32) -> Result<(), String> {
    let prog = super::program(super::ZIGZAG);
    let spec = super::spec(super::ZIGZAG_SPEC);
    let Generated::Corner(c) = critical_alpha_corners_meta(&prog, &spec, 0).remove(0) else {
        return Err("the zigzag corner is undecided".into());
    };
    let n = c.ancestor.store[0].args()[0].clone();
    run(cases, (int_condition(), prop::option::of(int_condition())), |((op, k), prior)| {
        let parent = match prior {
            None => c.clone(),
            Some((pop, pk)) => match split(&c, &Term::app(pop, vec![n.clone(), Term::int(pk)])) {
                Ok((Some(h), _)) => h,
                _ => return Ok(()),
            },
        };
        let cond = Term::app(op, vec![n.clone(), Term::int(k)]);
        let (h, f) = split(&parent, &cond).map_err(|e| TestCaseError::fail(format!("{e:?}")))?;
        for x in -8..=8 {
            let s = grounded(&n, x);
            let inside = parent.m.eval(&s);
            let (a, b) = (h.as_ref().is_some_and(|h| h.m.eval(&s)), f.as_ref().is_some_and(|f| f.m.eval(&s)));
            prop_assert_eq!(inside, a || b, "{} at {}", cond, x);
            prop_assert!(!(a && b), "{} at {}", cond, x);
            prop_assert_eq!(a, inside && compare(op, x, k));
        }
        Ok(())
    })
}

pub fn strengthening_greatest(cases: u32) -> Result<(), String> {
    let prog = super::program(super::ZIGZAG);
    let n = Term::var("N");
    run(cases, (2usize..4, prop::option::of(int_condition())), |(rule, prior)| {
        let pred = if rule == 2 { "q" } else { "r" };
        let s = MetaState::new(vec![Term::app(pred, vec![n.clone()])], None, vec![], None);
        let mut m = zigzag_int_where(&n);
        if let Some((op, k)) = prior {
            match m.add(&MetaConstraint::Holds(Formula::atoms(vec![Term::app(op, vec![n.clone(), Term::int(k)])]))).ok()
            {
                Some(m2) => m = m2,
                None => return Ok(()),
            }
        }
        let sigma = Subst::singleton(Var::named("X"), n.clone());
        let pa = make_pre_application(rule, &prog.rules[rule], &sigma, &s.vars())
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        let strong = strengthen_for_rule(&s, &m, &pa).map_err(|e| TestCaseError::fail(format!("{e:?}")))?;
        for x in -8..=8 {
            let g = grounded(&n, x);
            // r3 fires on q(x) for x > 0, r4 on r(x) for x =< 0
            let applies = m.eval(&g) && if rule == 2 { x > 0 } else { x <= 0 };
            let covered = strong.as_ref().is_some_and(|w| w.eval(&g));
            prop_assert_eq!(applies, covered, "rule {} at {}", rule, x);
        }
        Ok(())
    })
}

/// One `set/1` over a list of constants plus `item/1` constraints over
/// constants, decided without templates.
fn one_set_shape(s: &chrconf_core::semantics::CanonState) -> bool {
    let is_const = |t: &Term| matches!(t, Term::Int(_)) || t.functor().is_some_and(|(_, n)| n == 0) && !t.is_nil();
    let sets: Vec<&Term> = s.store.iter().filter(|t| t.functor() == Some(("set", 1))).collect();
    sets.len() == 1
        && {
            let (items, tail) = sets[0].args()[0].as_list();
            tail.is_nil() && items.into_iter().all(is_const)
        }
        && s.store
            .iter()
            .all(|t| t.functor() == Some(("set", 1)) || t.functor() == Some(("item", 1)) && is_const(&t.args()[0]))
        && s.builtins.is_empty()
}

pub fn invariant_samples_admitted(cases: u32) -> Result<(), String> {
    let spec = super::spec(super::SET_SPEC);
    run(cases, any::<u64>(), |seed| {
        for inv in &spec.invariants {
            let inv = inv.renamed();
            let m = Where::new(spec.defs.clone()).add_all(&inv.conds).ok().expect("invariant is consistent");
            let samples = sample_concretizations(&inv.state.instantiate(&Subst::new()), &m, 3, seed);
            prop_assert!(!samples.is_empty());
            for s in samples {
                prop_assert!(one_set_shape(&s), "{}", s);
                prop_assert!(spec.admits(&s), "{}", s);
            }
        }
        Ok(())
    })
}

pub fn equivalence_samples_equivalent(cases: u32) -> Result<(), String> {
    let spec = super::spec(super::SET_SPEC);
    run(cases, any::<u64>(), |seed| {
        let mut sampler = Sampler::new(seed);
        for rule in &spec.equivs {
            let rule = rule.renamed();
            let m = Where::new(spec.defs.clone()).add_all(&rule.conds).ok().expect("equivalence is consistent");
            let (l, r) = (rule.left.instantiate(&Subst::new()), rule.right.instantiate(&Subst::new()));
            let mut vars = l.all_vars();
            vars.extend(r.all_vars());
            let Some(sigma) = sampler.grounding(&m, &vars) else {
                return Err(TestCaseError::fail("no grounding"));
            };
            let (Ok(a), Ok(b)) = (l.drop_state(&sigma), r.drop_state(&sigma)) else {
                return Err(TestCaseError::fail(format!("grounding {sigma} does not drop")));
            };
            let (a, b) = (canonicalize(&a), canonicalize(&b));
            prop_assert_eq!(super::sorted_sets(&a), super::sorted_sets(&b), "{} vs {}", a, b);
            prop_assert!(spec.relates(&a, &b));
        }
        Ok(())
    })
}
