//! Worked examples for every module, with derived values recomputed here.

mod common;

use std::collections::BTreeSet;

use chrconf_core::builtin::{equivalent, BuiltinStore, Entailment};
use chrconf_core::confluence::classical::{certify, critical_alpha_corners_classical, ClassicalStatus};
use chrconf_core::confluence::corners::{
    critical_alpha_corners_meta, critical_beta_corners, Generated, MetaCorner, MetaKind,
};
use chrconf_core::confluence::join::{analyse_corner, split, Closing, JoinLimits, JoinProof, TreeStatus};
use chrconf_core::confluence::{check, Config, Mode, Verdict};
use chrconf_core::lang::{make_pre_application, parse_program, PreApplicationError};
use chrconf_core::meta::sample::sample_concretizations;
use chrconf_core::meta::transition::{meta_successors, strengthen_for_rule};
use chrconf_core::meta::{drop_term, lift, name_term, Formula, MetaConstraint, MetaState, Solve, TypeExpr, Where};
use chrconf_core::semantics::explore::{enumerate_reachable, Limits};
use chrconf_core::semantics::oracle::{oracle_local_confluence, Identity};
use chrconf_core::semantics::{canonicalize, successors, StateRepr};
use chrconf_core::term::{match_term, rename_apart, unify, Subst, Term, Var};

use common::{program, spec, state, term, MIN, SET, SET_SPEC, ZIGZAG, ZIGZAG_SPEC};

fn var(name: &str) -> Var {
    Var::named(name)
}

fn store(src: &str) -> BuiltinStore {
    BuiltinStore::from_atoms(&chrconf_core::lang::parse_constraints(src).unwrap()).unwrap()
}

fn none() -> BTreeSet<Var> {
    BTreeSet::new()
}

fn meta_corners(prog: &str, sp: &str) -> Vec<MetaCorner> {
    let (prog, sp) = (program(prog), spec(sp));
    let mut g = critical_alpha_corners_meta(&prog, &sp, 0);
    g.extend(critical_beta_corners(&prog, &sp, 0));
    g.into_iter()
        .map(|c| match c {
            Generated::Corner(c) => c,
            Generated::Undecided(u) => panic!("undecided corner: {}", u.reason),
        })
        .collect()
}

// ---- term-core ----

#[test]
fn unify_examples() {
    let s = unify(&term("p(X)"), &term("p(a)")).unwrap();
    assert_eq!(s.get(&var("X")), Some(&term("a")));
    assert!(unify(&term("p(X)"), &term("q(X)")).is_none());
    // derived: apply the result to both sides
    let (l, r) = (term("set([A|L])"), term("set([b, c])"));
    let s = unify(&l, &r).unwrap();
    assert_eq!(s.apply(&l), s.apply(&r));
    assert_eq!(s.get(&var("A")), Some(&term("b")));
    assert_eq!(s.get(&var("L")), Some(&term("[c]")));
    assert!(unify(&term("X"), &term("f(X)")).is_none(), "occurs check");
}

#[test]
fn match_examples() {
    assert_eq!(match_term(&term("p(X)"), &term("p(a)")).unwrap().get(&var("X")), Some(&term("a")));
    assert!(match_term(&term("p(a)"), &term("p(X)")).is_none());
    assert!(match_term(&term("f(X, X)"), &term("f(a, b)")).is_none());
}

#[test]
fn rename_apart_examples() {
    let r = rename_apart(&term("p(X)"), &BTreeSet::from([var("X")]));
    assert!(!r.var_set().contains(&var("X")));
    let r = rename_apart(&term("f(X, Y, X)"), &none());
    let a = r.args();
    assert_eq!(a[0], a[2]);
    assert_ne!(a[0], a[1]);
    assert_eq!(rename_apart(&term("c"), &BTreeSet::from([var("X")])), term("c"));
}

// ---- chr-lang ----

#[test]
fn parse_examples() {
    let p = parse_program(SET).unwrap();
    assert_eq!(p.rules.len(), 1);
    let r = &p.rules[0];
    assert!(r.kept.is_empty());
    assert_eq!(r.removed, vec![term("set(L)"), term("item(A)")]);
    assert!(r.guard.is_empty() || r.guard == vec![term("true")]);
    assert_eq!(r.body, vec![term("set([A|L])")]);

    let p = parse_program("r3 @ q(X) <=> X>0 | r(X).").unwrap();
    assert_eq!(p.rules[0].name.as_deref(), Some("r3"));
    assert_eq!(p.rules[0].guard, vec![term("X > 0")]);

    let e = parse_program("p(X) ==> .").unwrap_err();
    assert_eq!(e.line(), 1);
    assert!(parse_program("X > 0 <=> true.").is_err(), "built-in in the head");
    assert!(parse_program("<=> true.").is_err(), "empty head");
}

#[test]
fn propagation_rules_keep_their_heads() {
    let p = parse_program("p(X) ==> q(X).").unwrap();
    assert_eq!(p.rules[0].kept, vec![term("p(X)")]);
    assert!(p.rules[0].removed.is_empty());
}

#[test]
fn pre_application_examples() {
    let p = parse_program(ZIGZAG).unwrap();
    let pa = make_pre_application(0, &p.rules[0], &Subst::singleton(var("X"), Term::int(0)), &none()).unwrap();
    assert_eq!(pa.instance.removed, vec![term("p(0)")]);
    assert_eq!(pa.instance.body, vec![term("q(0)")]);
    assert!(pa.local_vars.is_empty());

    let pa = make_pre_application(2, &p.rules[2], &Subst::new(), &BTreeSet::from([var("X")])).unwrap();
    let x = pa.instance.removed[0].args()[0].clone();
    assert_ne!(x, term("X"));
    assert_eq!(pa.instance.guard, vec![Term::app(">", vec![x.clone(), Term::int(0)])]);
    assert!(pa.local_vars.is_empty());

    let local = parse_program("p(X) <=> q(X, Y).").unwrap();
    let e = make_pre_application(0, &local.rules[0], &Subst::singleton(var("X"), term("Y")), &none()).unwrap_err();
    assert!(matches!(e, PreApplicationError::LocalCapture(_)));
}

// ---- builtin-theory ----

#[test]
fn add_examples() {
    let s = store("X = a");
    assert!(s.is_satisfiable());
    assert_eq!(s.solution().unwrap().get(&var("X")), Some(&term("a")));
    assert!(!store("X > 0").add(&term("X =< 0")).unwrap().is_satisfiable());
    assert!(!store("X = Y").add(&term("Y = f(X)")).unwrap().is_satisfiable());
    assert!(BuiltinStore::new().add(&term("X * Y > 0")).is_err());
}

#[test]
fn satisfiable_examples() {
    // derived: the only integer in (0, 2) is 1
    let models: Vec<i64> = (-10..=10).filter(|x| *x > 0 && *x < 2).collect();
    assert_eq!(models, vec![1]);
    let s = store("X > 0, X < 2");
    assert!(s.is_satisfiable());
    assert_eq!(s.entails(&none(), &[term("X = 1")]), Entailment::Yes);
    assert!(!store("X > 0, X =< 0").is_satisfiable());
    assert!(BuiltinStore::new().is_satisfiable());
}

#[test]
fn entails_examples() {
    let goal = [term("X > 0")];
    assert_eq!(store("X = 1").entails(&none(), &goal), Entailment::Yes);
    assert_eq!(store("X = 0").entails(&none(), &goal), Entailment::No);
    // derived: X = 1 satisfies the goal and X = 0 refutes it, so the empty
    // store decides neither way
    assert!(store("X = 1").add_all(&goal).unwrap().is_satisfiable());
    assert!(!store("X = 0").add_all(&goal).unwrap().is_satisfiable());
    assert_eq!(BuiltinStore::new().entails(&none(), &goal), Entailment::Unknown);
    // a local variable is existential
    let locals = BTreeSet::from([var("Y")]);
    assert_eq!(store("X > 0").entails(&locals, &[term("Y > X")]), Entailment::Yes);
}

#[test]
fn equivalent_examples() {
    let ren = Subst::singleton(var("X"), term("Y"));
    assert!(equivalent(&store("X = a"), &store("Y = a"), &ren));
    assert!(equivalent(&store("X > 0"), &store("0 < X"), &Subst::new()));
    // derived: both denote the integers from 1 upwards
    let a: Vec<i64> = (-20..=20).filter(|x| *x > 0).collect();
    let b: Vec<i64> = (-20..=20).filter(|x| *x >= 1).collect();
    assert_eq!(a, b);
    assert!(equivalent(&store("X > 0"), &store("X >= 1"), &Subst::new()));
    assert!(!equivalent(&store("X > 0"), &store("X >= 0"), &Subst::new()));
}

// ---- semantics ----

#[test]
fn canonicalize_examples() {
    let s = canonicalize(&StateRepr::new(vec![term("p(X)")], store("X = a")));
    assert_eq!(s.store, vec![term("p(a)")]);
    assert!(s.builtins.is_empty());
    assert_eq!(state("p(X)"), state("p(Y)"));
    assert!(canonicalize(&StateRepr::new(vec![], store("X > 0, X =< 0"))).is_failure());
    let c = state("q(Z), p(Y)");
    assert_eq!(canonicalize(&c.to_repr()), c, "idempotent");
}

#[test]
fn successor_examples() {
    let set = program(SET);
    let s = state("item(a), item(b), set([])");
    let next = successors(&s.to_repr(), &set, &none());
    assert_eq!(next.len(), 2);
    let targets: BTreeSet<_> = next.iter().map(|t| t.target.clone()).collect();
    assert_eq!(targets, BTreeSet::from([state("item(b), set([a])"), state("item(a), set([b])")]));

    let zz = program(ZIGZAG);
    let next = successors(&state("p(0)").to_repr(), &zz, &none());
    let rules: BTreeSet<_> = next.iter().map(|t| t.label.rule()).collect();
    assert_eq!(rules, BTreeSet::from([Some(0), Some(1)]));

    let next = successors(&state("X = a, p(X)").to_repr(), &program("q <=> true."), &none());
    assert_eq!(next.len(), 1);
    assert_eq!(next[0].label.rule(), None);
    assert_eq!(next[0].target, state("p(a)"));

    assert!(successors(&chrconf_core::semantics::CanonState::failure().to_repr(), &zz, &none()).is_empty());
}

#[test]
fn enumeration_examples() {
    let set = program(SET);
    let g = enumerate_reachable(&[state("item(a), item(b), set([])")], &set, &none(), Limits::default());
    let finals: BTreeSet<_> = g.finals().into_iter().map(|i| g.nodes[i].clone()).collect();
    assert_eq!(finals, BTreeSet::from([state("set([a, b])"), state("set([b, a])")]));

    let zz = program(ZIGZAG);
    let g = enumerate_reachable(&[state("p(1)")], &zz, &none(), Limits::default());
    let finals: Vec<_> = g.finals().into_iter().map(|i| g.nodes[i].clone()).collect();
    assert_eq!(finals, vec![state("r(1)")]);

    let g = enumerate_reachable(&[state("p(1), q(2)")], &program(""), &none(), Limits::default());
    assert_eq!(g.len(), 1);

    let tiny = Limits { max_states: 2, max_depth: 200 };
    assert!(enumerate_reachable(&[state("item(a), item(b), set([])")], &set, &none(), tiny).truncated());
}

#[test]
fn oracle_examples() {
    let r = oracle_local_confluence(&[state("item(a), item(b), set([])")], &program(SET), &Identity, Limits::default());
    assert_eq!(r.locally_confluent(), Some(false));
    let inits: Vec<_> = (-1..=2).map(|i| state(&format!("p({i})"))).collect();
    let r = oracle_local_confluence(&inits, &program(ZIGZAG), &Identity, Limits::default());
    assert_eq!(r.locally_confluent(), Some(true));
    let r = oracle_local_confluence(&[state("p")], &program("p <=> q."), &Identity, Limits::default());
    assert_eq!((r.corners_checked, r.locally_confluent()), (0, Some(true)));
}

// ---- meta-level ----

fn int_where(n: &str) -> Where {
    Where::new(spec(ZIGZAG_SPEC).defs.clone()).add(&MetaConstraint::Type(TypeExpr::Int, term(n))).ok().unwrap()
}

fn holds(src: &str) -> MetaConstraint {
    MetaConstraint::Holds(Formula::atoms(vec![term(src)]))
}

#[test]
fn lift_and_drop_examples() {
    let (lifted, s) = lift(&[term("p(A)"), term("A > 2")]);
    let a = s.get(&var("A")).unwrap().clone();
    assert!(a.is_var());
    assert_eq!(lifted, vec![Term::app("p", vec![a.clone()]), Term::app(">", vec![a, Term::int(2)])]);
    let (lifted, _) = lift(&[term("c")]);
    assert_eq!(lifted, vec![term("c")]);

    assert_eq!(drop_term(&Term::app("p", vec![Term::name_of(&var("A"))])).unwrap(), term("p(A)"));
    assert_eq!(drop_term(&Term::name_of(&var("X"))).unwrap(), term("X"));
    assert_eq!(drop_term(&name_term(&term("f(X, [a|Y])"))).unwrap(), term("f(X, [a|Y])"));
    assert!(drop_term(&term("p(N)")).is_err());
}

#[test]
fn m_solve_examples() {
    let m = int_where("N").add(&holds("N > 0")).ok().unwrap();
    let Solve::Consistent(w) = m.solve(0) else { panic!("consistent") };
    // derived: the witness is a positive integer
    match w.get(&var("N")) {
        Some(Term::Int(k)) => assert!(*k > 0),
        other => panic!("{other:?}"),
    }
    assert!(m.eval(&w));
    assert!(m.add(&holds("N =< 0")).ok().is_none());
    let v =
        Where::new(spec(ZIGZAG_SPEC).defs.clone()).add(&MetaConstraint::Type(TypeExpr::Var, term("X"))).ok().unwrap();
    assert!(v.add(&MetaConstraint::Eq(term("X"), term("a"))).ok().is_none());
}

#[test]
fn meta_successor_examples() {
    let zz = program(ZIGZAG);
    let p = MetaState::new(vec![term("p(N)")], None, vec![], None);
    let succ = meta_successors(&p, &int_where("N"), &zz);
    let labels: BTreeSet<_> = succ.transitions.iter().map(|t| t.label.rule()).collect();
    assert_eq!(labels, BTreeSet::from([Some(0), Some(1)]));

    let q = MetaState::new(vec![term("q(N)")], None, vec![], None);
    assert!(meta_successors(&q, &int_where("N"), &zz).transitions.is_empty());
    let pos = int_where("N").add(&holds("N > 0")).ok().unwrap();
    let succ = meta_successors(&q, &pos, &zz);
    assert_eq!(succ.transitions.len(), 1);
    assert_eq!(succ.transitions[0].target.store, vec![term("r(N)")]);
}

#[test]
fn strengthening_examples() {
    let zz = program(ZIGZAG);
    let q = MetaState::new(vec![term("q(N)")], None, vec![], None);
    let pa = make_pre_application(2, &zz.rules[2], &Subst::singleton(var("X"), term("N")), &q.vars()).unwrap();
    let strong = strengthen_for_rule(&q, &int_where("N"), &pa).unwrap().unwrap();
    assert!(strong.entails(&holds("N > 0")));
    let neg = int_where("N").add(&holds("N =< 0")).ok().unwrap();
    assert!(strengthen_for_rule(&q, &neg, &pa).unwrap().is_none());
    let p = MetaState::new(vec![term("p(N)")], None, vec![], None);
    assert!(strengthen_for_rule(&p, &int_where("N"), &pa).is_err());
}

#[test]
fn split_examples() {
    let c = meta_corners(ZIGZAG, ZIGZAG_SPEC).remove(0);
    let n = c.ancestor.store[0].args()[0].clone();
    let (h, f) = split(&c, &Term::app("=<", vec![n.clone(), Term::int(0)])).unwrap();
    let (h, f) = (h.unwrap(), f.unwrap());
    assert!(h.m.entails(&MetaConstraint::Holds(Formula::atoms(vec![Term::app("=<", vec![n.clone(), Term::int(0)])]))));
    assert!(f.m.entails(&MetaConstraint::Holds(Formula::atoms(vec![Term::app(">", vec![n.clone(), Term::int(0)])]))));
    // one side inconsistent: a single surviving part that still covers
    let (h2, f2) = split(&h, &Term::app("<", vec![n.clone(), Term::int(5)])).unwrap();
    assert!(h2.is_some() && f2.is_none());
    let (g, none) = split(&c, &term("1 > 0")).unwrap();
    assert!(g.is_some() && none.is_none());
}

#[test]
fn sampling_examples() {
    let p = MetaState::new(vec![term("p(N)")], None, vec![], None);
    let m = int_where("N");
    let samples = sample_concretizations(&p, &m, 3, 0);
    assert_eq!(samples.len(), 3);
    for s in &samples {
        // derived: every sample is p of an integer
        assert_eq!(s.store.len(), 1);
        assert!(matches!(s.store[0].args()[0], Term::Int(_)), "{s}");
    }
    let bad = m.add(&holds("N > 0"));
    let bad = bad.ok().unwrap().add(&holds("N < 0")).ok();
    assert!(bad.is_none(), "inconsistent WHERE parts are rejected before sampling");
    let ground = MetaState::new(vec![term("p(1)")], None, vec![], None);
    assert_eq!(sample_concretizations(&ground, &m, 5, 0), vec![state("p(1)")]);
}

// ---- confluence ----

#[test]
fn classical_corner_examples() {
    let set = program(SET);
    let cs = critical_alpha_corners_classical(&set);
    assert_eq!(cs.len(), 2);
    for c in &cs {
        assert!(matches!(certify(c, &set, Limits::default()), ClassicalStatus::NonJoinable { .. }));
    }
    let zz = program(ZIGZAG);
    let cs = critical_alpha_corners_classical(&zz);
    assert_eq!(cs.len(), 1);
    assert_eq!(cs[0].ancestor.len(), 1);
    assert_eq!(cs[0].ancestor[0].functor(), Some(("p", 1)));
    let wings: BTreeSet<_> =
        [&cs[0].left, &cs[0].right].iter().map(|w| w[0].functor().unwrap().0.to_string()).collect();
    assert_eq!(wings, BTreeSet::from(["q".to_string(), "r".to_string()]));
    assert!(critical_alpha_corners_classical(&program("p <=> a.\nq <=> b.")).is_empty());
}

#[test]
fn meta_alpha_corner_examples() {
    let set = meta_corners(SET, SET_SPEC);
    let alpha: Vec<_> = set.iter().filter(|c| c.kind == MetaKind::Alpha).collect();
    assert_eq!(alpha.len(), 1);
    let sets = alpha[0].ancestor.store.iter().filter(|t| t.functor() == Some(("set", 1))).count();
    assert_eq!(sets, 1, "the two-set pre-corner violates the invariant");

    let zz = meta_corners(ZIGZAG, ZIGZAG_SPEC);
    assert_eq!(zz.len(), 1);
    let c = &zz[0];
    let n = c.ancestor.store[0].args()[0].clone();
    assert_eq!(c.ancestor.store, vec![Term::app("p", vec![n.clone()])]);
    let wings = BTreeSet::from([c.left.store.clone(), c.right.store.clone()]);
    assert_eq!(wings, BTreeSet::from([vec![Term::app("q", vec![n.clone()])], vec![Term::app("r", vec![n.clone()])]]));
    assert_eq!(c.m.type_of(n.as_var().unwrap()), TypeExpr::Int);

    let empty = critical_alpha_corners_meta(&program(""), &spec(ZIGZAG_SPEC), 0);
    assert!(empty.is_empty());
}

#[test]
fn meta_beta_corner_examples() {
    let set = meta_corners(SET, SET_SPEC);
    let beta: Vec<_> = set.iter().filter(|c| c.kind == MetaKind::BetaRule).collect();
    assert!(!beta.is_empty());
    for c in &beta {
        let has = |s: &MetaState, f: &str| s.store.iter().any(|t| t.functor() == Some((f, 1)));
        assert!(has(&c.ancestor, "set") && has(&c.ancestor, "item"), "{}", c.ancestor);
        assert!(!c.m.perms().is_empty());
    }
    // no rule applies inside this invariant
    let none = critical_beta_corners(
        &program("p(X) <=> q(X)."),
        &spec("invariant state << {r(N)}, true >> where type(int, N).\nequiv << {r(N)}, true >> ~ << {r(N)}, true >> where type(int, N)."),
        0,
    );
    assert!(none.is_empty());
}

#[test]
fn joinability_examples() {
    let c = meta_corners(ZIGZAG, ZIGZAG_SPEC).remove(0);
    let n = c.ancestor.store[0].args()[0].clone();
    let (left, right) = split(&c, &Term::app("=<", vec![n, Term::int(0)])).unwrap();
    let (sp, prog) = (spec(ZIGZAG_SPEC), program(ZIGZAG));
    for (part, rule) in [(left.unwrap(), "r4"), (right.unwrap(), "r3")] {
        let a = analyse_corner(&part, &prog, &sp, JoinLimits::default());
        let TreeStatus::Joinable(JoinProof { left, right, .. }) = &a.tree.status else { panic!("{:?}", a.tree.status) };
        assert_eq!(left.len() + right.len(), 1);
        assert_eq!(left.iter().chain(right.iter()).next().unwrap().label, rule);
    }

    let (sp, prog) = (spec(SET_SPEC), program(SET));
    let alpha = meta_corners(SET, SET_SPEC).into_iter().find(|c| c.kind == MetaKind::Alpha).unwrap();
    let a = analyse_corner(&alpha, &prog, &sp, JoinLimits::default());
    let TreeStatus::Joinable(proof) = &a.tree.status else { panic!("{:?}", a.tree.status) };
    assert!(matches!(proof.closing, Closing::Equivalent { .. }));
    assert_eq!((proof.left.len(), proof.right.len()), (1, 1));

    // equal wings join with empty paths
    let same = MetaCorner { right: alpha.left.clone(), ..alpha.clone() };
    let TreeStatus::Joinable(proof) = analyse_corner(&same, &prog, &sp, JoinLimits::default()).tree.status else {
        panic!()
    };
    assert!(proof.left.is_empty() && proof.right.is_empty());
}

#[test]
fn generic_choice_joins_modulo_equivalence_without_split() {
    let prog = "a <=> b.\na <=> c.";
    let sp = "invariant state << {a}, true >>.\nequiv << {b}, true >> ~ << {c}, true >>.";
    let r =
        check(&program(prog), &spec(sp), &Config { assume_terminating: true, ..Config::new(Mode::ModEquiv) }).unwrap();
    assert_eq!(r.verdict, Verdict::Confluent);
    for m in &r.meta {
        assert_eq!(m.analysis.tree.leaves(), 1);
    }
    let plain = check(&program(prog), &spec(sp), &Config::new(Mode::Classical)).unwrap();
    assert_eq!(plain.verdict, Verdict::NotConfluent);
}

#[test]
fn check_examples() {
    let t = |mode| Config { assume_terminating: true, ..Config::new(mode) };
    let r = check(&program(SET), &Default::default(), &t(Mode::Classical)).unwrap();
    assert_eq!(r.verdict, Verdict::NotConfluent);
    assert_eq!(r.classical.len(), 2);
    let r = check(&program(ZIGZAG), &spec(ZIGZAG_SPEC), &t(Mode::Invariant)).unwrap();
    assert_eq!(r.verdict, Verdict::Confluent);
    let r = check(&program(SET), &spec(SET_SPEC), &t(Mode::ModEquiv)).unwrap();
    assert_eq!(r.verdict, Verdict::Confluent);
    let r = check(&program(MIN), &Default::default(), &t(Mode::Classical)).unwrap();
    assert_eq!(r.verdict, Verdict::Confluent);
    let r = check(&program(ZIGZAG), &spec(ZIGZAG_SPEC), &Config::new(Mode::Invariant)).unwrap();
    assert_eq!(r.verdict, Verdict::LocallyConfluent);
    assert!(check(&program(SET), &spec(ZIGZAG_SPEC), &t(Mode::ModEquiv)).is_err());
}
