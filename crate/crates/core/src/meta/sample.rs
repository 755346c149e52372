//! Random groundings of WHERE parts, checked by direct evaluation.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::types::TypeExpr;
use super::{MetaState, Where};
use crate::builtin::BuiltinStore;
use crate::semantics::{canonicalize, CanonState};
use crate::term::{Subst, Term, Var};

const ATTEMPTS: usize = 60;
const WINDOW: i64 = 4;

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn constant(&mut self) -> Term {
        const POOL: [&str; 3] = ["a", "b", "c"];
        if self.rng.gen_bool(0.6) {
            Term::atom(POOL[self.rng.gen_range(0..POOL.len())])
        } else {
            Term::int(self.rng.gen_range(-2..=2))
        }
    }

    /// A random ground meta term of type `ty`.
    pub fn term(&mut self, m: &Where, ty: &TypeExpr) -> Term {
        match m.defs().resolve(ty).clone() {
            TypeExpr::Int => Term::int(self.rng.gen_range(-3..=3)),
            TypeExpr::Const => self.constant(),
            TypeExpr::Var => Term::name_of(&Var::fresh("V")),
            TypeExpr::List(e) => {
                let n = self.rng.gen_range(0..=3);
                Term::proper_list((0..n).map(|_| self.term(m, &e)).collect())
            }
            TypeExpr::Struct(f, args) => Term::app(&f, args.iter().map(|a| self.term(m, a)).collect()),
            TypeExpr::Mset(e) if *e == TypeExpr::Any => Term::nil(),
            TypeExpr::Mset(e) => {
                let n = self.rng.gen_range(0..=2);
                Term::proper_list((0..n).map(|_| self.term(m, &e)).collect())
            }
            TypeExpr::Any | TypeExpr::Named(_) => match self.rng.gen_range(0..5) {
                0 => Term::int(self.rng.gen_range(-3..=3)),
                1 => Term::name_of(&Var::fresh("V")),
                2 => Term::app("f", vec![self.constant()]),
                _ => self.constant(),
            },
        }
    }

    fn int_in(&mut self, (lo, hi): (Option<i64>, Option<i64>)) -> i64 {
        let (lo, hi) = match (lo, hi) {
            (Some(l), Some(h)) => (l.max(-WINDOW).min(h), h.min(WINDOW).max(l)),
            (Some(l), None) => (l, l.max(WINDOW).max(l)),
            (None, Some(h)) => ((-WINDOW).min(h), h),
            (None, None) => (-WINDOW, WINDOW),
        };
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        self.rng.gen_range(lo..=hi)
    }

    /// Binds every variable of `m` and of `extra` to a ground meta term such
    /// that `m.eval` accepts the result. Store rests are bound to lists of
    /// constraints.
    pub fn grounding(&mut self, m: &Where, extra: &BTreeSet<Var>) -> Option<Subst> {
        let mut vars = m.vars();
        vars.extend(extra.iter().cloned());
        for _ in 0..ATTEMPTS {
            if let Some(sigma) = self.attempt(m, &vars) {
                if m.eval(&sigma) {
                    return Some(sigma);
                }
            }
        }
        None
    }

    fn attempt(&mut self, m: &Where, vars: &BTreeSet<Var>) -> Option<Subst> {
        let mut store: BuiltinStore = m.params().clone();
        let sol = m.solution();
        // tails of permutation targets are chosen last
        let mut delayed = BTreeSet::new();
        for (_, b) in m.perms() {
            let b = sol.apply(b);
            if let Term::Var(v) = b.as_list().1 {
                delayed.insert(v.clone());
            }
        }
        let mut order: Vec<Var> = vars.iter().filter(|v| !delayed.contains(*v)).cloned().collect();
        order.shuffle(&mut self.rng);
        for v in &order {
            self.assign(m, &mut store, v)?;
        }
        for (a, b) in m.perms() {
            let s = store.solution()?.clone();
            let (a, b) = (s.apply(a), s.apply(b));
            let (ia, ta) = a.as_list();
            let (ib, tb) = b.as_list();
            let Term::Var(tail) = tb else { continue };
            if !ta.is_nil() {
                return None;
            }
            let mut rest: Vec<Term> = ia.into_iter().cloned().collect();
            for x in ib {
                let i = rest.iter().position(|y| y == x)?;
                rest.remove(i);
            }
            rest.shuffle(&mut self.rng);
            store = store.add(&Term::app("=", vec![Term::Var(tail.clone()), Term::proper_list(rest)])).ok()?;
            if !store.is_satisfiable() {
                return None;
            }
        }
        for v in vars {
            self.assign(m, &mut store, v)?;
        }
        let s = store.solution()?;
        let mut sigma = Subst::new();
        for v in vars {
            let t = s.apply(&Term::Var(v.clone()));
            if !t.is_ground() {
                return None;
            }
            sigma.insert_raw(v.clone(), t);
        }
        Some(sigma)
    }

    fn assign(&mut self, m: &Where, store: &mut BuiltinStore, v: &Var) -> Option<()> {
        let cur = store.solution()?.apply(&Term::Var(v.clone()));
        if cur != Term::Var(v.clone()) {
            return Some(());
        }
        let ty = m.type_of(v);
        for _ in 0..6 {
            let val = if store.is_int_var(v) || *m.defs().resolve(&ty) == TypeExpr::Int {
                Term::int(self.int_in(store.bounds(v)))
            } else {
                self.term(m, &ty)
            };
            let next = store.add(&Term::app("=", vec![Term::Var(v.clone()), val])).ok()?;
            if next.is_satisfiable() {
                *store = next;
                return Some(());
            }
        }
        None
    }
}

/// Up to `n` distinct object states denoted by `s WHERE m`, canonicalized.
pub fn sample_concretizations(s: &MetaState, m: &Where, n: usize, seed: u64) -> Vec<CanonState> {
    let mut sampler = Sampler::new(seed);
    let mut out: Vec<CanonState> = Vec::new();
    for _ in 0..n.saturating_mul(10) {
        if out.len() >= n {
            break;
        }
        let Some(sigma) = sampler.grounding(m, &s.all_vars()) else { break };
        let Ok(r) = s.drop_state(&sigma) else { continue };
        let c = canonicalize(&r);
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}
