//! The built-in constraint theory: Herbrand equality with occurs check plus
//! integer difference constraints.
//!
//! A store is kept as the list of atoms it was built from together with a
//! solved form computed from scratch on every change, which makes the result
//! independent of insertion order. Variables occurring in comparisons range
//! over integer constants; equality never evaluates arithmetic.

mod dbm;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use dbm::Dbm;

use crate::term::{Subst, Term, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuiltinError {
    #[error("unsupported built-in `{atom}`: {reason}")]
    Unsupported { atom: String, reason: String },
}

/// Three-valued answer of the entailment check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entailment {
    Yes,
    No,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Rel {
    Lt,
    Le,
    Gt,
    Ge,
}

enum Kind<'a> {
    True,
    Fail,
    Eq(&'a Term, &'a Term),
    Cmp(Rel, &'a Term, &'a Term),
}

fn classify(t: &Term) -> Option<Kind<'_>> {
    let (name, arity) = t.functor()?;
    let a = t.args();
    Some(match (name, arity) {
        ("true", 0) => Kind::True,
        ("fail", 0) => Kind::Fail,
        ("=" | "==", 2) => Kind::Eq(&a[0], &a[1]),
        ("<", 2) => Kind::Cmp(Rel::Lt, &a[0], &a[1]),
        ("=<", 2) => Kind::Cmp(Rel::Le, &a[0], &a[1]),
        (">", 2) => Kind::Cmp(Rel::Gt, &a[0], &a[1]),
        (">=", 2) => Kind::Cmp(Rel::Ge, &a[0], &a[1]),
        _ => return None,
    })
}

/// Whether `name/arity` is a built-in of the supported vocabulary.
pub fn is_builtin(name: &str, arity: usize) -> bool {
    matches!((name, arity), ("true" | "fail", 0) | ("=" | "==" | "<" | "=<" | ">" | ">=", 2))
}

/// Common Prolog built-ins outside the supported vocabulary. Programs that
/// use them are rejected instead of reading them as user constraints.
pub fn is_reserved(name: &str, arity: usize) -> bool {
    matches!(
        (name, arity),
        ("false" | "!" | "nl", 0)
            | (
                "var"
                    | "nonvar"
                    | "atom"
                    | "atomic"
                    | "integer"
                    | "number"
                    | "ground"
                    | "call"
                    | "write"
                    | "writeln"
                    | "not"
                    | "\\+",
                1
            )
            | ("is" | "\\=" | "=:=" | "=\\=" | "\\==" | "@<" | "@>" | "@=<" | "@>=" | "=.." | "dif", 2)
            | ("functor" | "arg", 3)
    )
}

pub fn is_true(t: &Term) -> bool {
    matches!(t, Term::Const(c) if &**c == "true")
}

pub fn is_builtin_atom(t: &Term) -> bool {
    t.functor().is_some_and(|(n, a)| is_builtin(n, a))
}

pub fn is_comparison(t: &Term) -> bool {
    matches!(classify(t), Some(Kind::Cmp(..)))
}

pub fn is_equality(t: &Term) -> bool {
    matches!(classify(t), Some(Kind::Eq(..)))
}

/// Integer linear form `sum coeffs * var + constant`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct Lin {
    pub coeffs: BTreeMap<Var, i64>,
    pub constant: i64,
}

impl Lin {
    fn scaled_add(mut self, other: Lin, k: i64) -> Lin {
        for (v, c) in other.coeffs {
            let e = self.coeffs.entry(v).or_insert(0);
            *e += k * c;
        }
        self.coeffs.retain(|_, c| *c != 0);
        self.constant = self.constant.saturating_add(k.saturating_mul(other.constant));
        self
    }
}

enum LinErr {
    /// A leaf that is not an integer expression; the comparison is false.
    NonInteger,
    /// An operator outside the fragment.
    Unsupported(String),
}

fn lin(t: &Term) -> Result<Lin, LinErr> {
    match t {
        Term::Int(i) => Ok(Lin { coeffs: BTreeMap::new(), constant: *i }),
        Term::Var(v) => Ok(Lin { coeffs: [(v.clone(), 1)].into(), constant: 0 }),
        Term::Compound(f, args) => match (&**f, args.len()) {
            ("+", 2) => Ok(lin(&args[0])?.scaled_add(lin(&args[1])?, 1)),
            ("-", 2) => Ok(lin(&args[0])?.scaled_add(lin(&args[1])?, -1)),
            ("-", 1) => Ok(Lin::default().scaled_add(lin(&args[0])?, -1)),
            ("*" | "/", 2) => Err(LinErr::Unsupported(format!("`{f}` is outside the difference-bound fragment"))),
            _ => Err(LinErr::NonInteger),
        },
        Term::Const(_) => Err(LinErr::NonInteger),
    }
}

/// A comparison as `sum coeffs * var <= bound`, or a constant truth value.
enum Normalized {
    Const(bool),
    Diff(Lin, i64),
}

fn normalize_cmp(rel: Rel, l: &Term, r: &Term) -> Result<Normalized, LinErr> {
    let (a, b) = match lin(l) {
        Ok(a) => (a, lin(r)?),
        Err(LinErr::NonInteger) => {
            // still report unsupported operators on the other side
            lin(r).map(|_| ()).or_else(|e| match e {
                LinErr::NonInteger => Ok(()),
                u => Err(u),
            })?;
            return Ok(Normalized::Const(false));
        }
        Err(e) => return Err(e),
    };
    // e <= k with e = lhs - rhs (or rhs - lhs)
    let (e, k) = match rel {
        Rel::Le => (a.scaled_add(b, -1), 0),
        Rel::Lt => (a.scaled_add(b, -1), -1),
        Rel::Ge => (b.scaled_add(a, -1), 0),
        Rel::Gt => (b.scaled_add(a, -1), -1),
    };
    let bound = k - e.constant;
    if e.coeffs.is_empty() {
        return Ok(Normalized::Const(0 <= bound));
    }
    Ok(Normalized::Diff(Lin { coeffs: e.coeffs, constant: 0 }, bound))
}

/// `(positive var, negative var)` of a difference form.
fn diff_shape(l: &Lin) -> Option<(Option<&Var>, Option<&Var>)> {
    let mut pos = None;
    let mut neg = None;
    for (v, c) in &l.coeffs {
        match c {
            1 if pos.is_none() => pos = Some(v),
            -1 if neg.is_none() => neg = Some(v),
            _ => return None,
        }
    }
    Some((pos, neg))
}

/// Checks that a constraint is either a user constraint or a built-in of
/// the supported fragment.
pub fn validate_atom(t: &Term) -> Result<(), String> {
    let Some((n, a)) = t.functor() else {
        return Err(format!("`{t}` is not a constraint"));
    };
    if is_reserved(n, a) {
        return Err("not in the supported built-in vocabulary".into());
    }
    if let Some(Kind::Cmp(rel, l, r)) = classify(t) {
        match normalize_cmp(rel, l, r) {
            Ok(Normalized::Const(_)) => {}
            Ok(Normalized::Diff(e, _)) => {
                if diff_shape(&e).is_none() {
                    return Err("comparison is outside the difference-bound fragment".into());
                }
            }
            Err(LinErr::Unsupported(m)) => return Err(m),
            Err(LinErr::NonInteger) => {}
        }
    }
    Ok(())
}

/// Bindings, integer-typed variables and bound entries of a solved form.
type SolvedKey = (Vec<(Var, Term)>, Vec<Var>, Vec<(usize, usize, i64)>);

#[derive(Clone, Debug, PartialEq, Eq)]
struct SolvedForm {
    subst: Subst,
    /// Unbound integer variables; node `i + 1` of the matrix.
    int_vars: Vec<Var>,
    dbm: Dbm,
}

impl SolvedForm {
    fn node(&self, v: &Var) -> Option<usize> {
        self.int_vars.binary_search(v).ok().map(|i| i + 1)
    }
}

/// A conjunction of built-in atoms with its solved form.
#[derive(Clone, Debug)]
pub struct BuiltinStore {
    atoms: Vec<Term>,
    /// Terms known to denote integers (from meta-level typing).
    assumed_int: Vec<Term>,
    solved: Option<SolvedForm>,
}

impl Default for BuiltinStore {
    fn default() -> Self {
        BuiltinStore { atoms: Vec::new(), assumed_int: Vec::new(), solved: solve(&[], &[]) }
    }
}

/// Orients variable-variable bindings towards the least variable of each
/// class so that solved forms are unique.
fn orient(s: Subst) -> Subst {
    let mut classes: BTreeMap<Var, Vec<Var>> = BTreeMap::new();
    for (v, t) in s.iter() {
        if let Term::Var(w) = t {
            classes.entry(w.clone()).or_default().push(v.clone());
        }
    }
    let mut ren = Subst::new();
    for (root, members) in classes {
        let best = members.iter().min().cloned().unwrap();
        if best < root {
            ren.insert_raw(root.clone(), Term::Var(best.clone()));
        }
    }
    if ren.is_empty() {
        return s;
    }
    // members now map to `best` (or to themselves, which compose drops)
    s.compose(&ren)
}

fn solve(atoms: &[Term], assumed_int: &[Term]) -> Option<SolvedForm> {
    let mut extra: Vec<(Term, Term)> = Vec::new();
    loop {
        let mut s = Subst::new();
        let mut cmps = Vec::new();
        let mut typed: Vec<Term> = assumed_int.to_vec();
        for a in atoms {
            match classify(a)? {
                Kind::True => {}
                Kind::Fail => return None,
                Kind::Eq(l, r) => {
                    if !s.unify_with(l, r) {
                        return None;
                    }
                }
                Kind::Cmp(rel, l, r) => {
                    for v in l.vars().into_iter().chain(r.vars()) {
                        typed.push(Term::Var(v));
                    }
                    cmps.push((rel, l, r));
                }
            }
        }
        for (l, r) in &extra {
            if !s.unify_with(l, r) {
                return None;
            }
        }
        let s = orient(s);
        let mut ints = BTreeSet::new();
        for t in &typed {
            match s.apply(t) {
                Term::Int(_) => {}
                Term::Var(w) => {
                    ints.insert(w);
                }
                _ => return None,
            }
        }
        let int_vars: Vec<Var> = ints.into_iter().collect();
        let node = |v: &Var| int_vars.binary_search(v).ok().map(|i| i + 1);
        let mut dbm = Dbm::new(int_vars.len() + 1);
        for (rel, l, r) in cmps {
            match normalize_cmp(rel, &s.apply(l), &s.apply(r)) {
                Ok(Normalized::Const(true)) => {}
                Ok(Normalized::Const(false)) | Err(LinErr::NonInteger) => return None,
                Ok(Normalized::Diff(e, k)) => {
                    let (p, n) = diff_shape(&e).expect("validated comparisons stay in the difference fragment");
                    let i = p.map_or(0, |v| node(v).expect("typed"));
                    let j = n.map_or(0, |v| node(v).expect("typed"));
                    dbm.constrain(i, j, k);
                }
                Err(LinErr::Unsupported(_)) => {
                    unreachable!("validated comparisons use supported operators")
                }
            }
        }
        if !dbm.close() {
            return None;
        }
        let mut implied = Vec::new();
        for (i, v) in int_vars.iter().enumerate() {
            let i = i + 1;
            if let (Some(u), Some(l)) = (dbm.get(i, 0), dbm.get(0, i)) {
                if u + l == 0 {
                    implied.push((Term::Var(v.clone()), Term::Int(u)));
                    continue;
                }
            }
            for (j, w) in int_vars.iter().enumerate().skip(i) {
                let j = j + 1;
                if dbm.get(i, j) == Some(0) && dbm.get(j, i) == Some(0) {
                    implied.push((Term::Var(v.clone()), Term::Var(w.clone())));
                }
            }
        }
        if implied.is_empty() {
            return Some(SolvedForm { subst: s, int_vars, dbm });
        }
        extra.extend(implied);
    }
}

fn bound_atom(x: Option<&Var>, y: Option<&Var>, c: i64) -> Term {
    // x - y <= c, with None standing for zero
    let v = |o: Option<&Var>| o.map(|v| Term::Var(v.clone()));
    match (v(x), v(y)) {
        (Some(x), None) => Term::app("=<", vec![x, Term::Int(c)]),
        (None, Some(y)) => Term::app(">=", vec![y, Term::Int(-c)]),
        (Some(x), Some(y)) => {
            let rhs = match c {
                0 => y,
                c if c > 0 => Term::app("+", vec![y, Term::Int(c)]),
                c => Term::app("-", vec![y, Term::Int(-c)]),
            };
            Term::app("=<", vec![x, rhs])
        }
        (None, None) => Term::atom(if c >= 0 { "true" } else { "fail" }),
    }
}

impl BuiltinStore {
    pub fn new() -> Self {
        BuiltinStore::default()
    }

    fn rebuild(atoms: Vec<Term>, assumed_int: Vec<Term>) -> Self {
        let solved = solve(&atoms, &assumed_int);
        BuiltinStore { atoms, assumed_int, solved }
    }

    /// The conjunction of `self` and `atom`.
    pub fn add(&self, atom: &Term) -> Result<BuiltinStore, BuiltinError> {
        self.add_all(std::slice::from_ref(atom))
    }

    pub fn add_all(&self, atoms: &[Term]) -> Result<BuiltinStore, BuiltinError> {
        let mut all = self.atoms.clone();
        for a in atoms {
            if !is_builtin_atom(a) {
                return Err(BuiltinError::Unsupported {
                    atom: a.to_string(),
                    reason: "not in the supported built-in vocabulary".into(),
                });
            }
            validate_atom(a).map_err(|reason| BuiltinError::Unsupported { atom: a.to_string(), reason })?;
            if !is_true(a) {
                all.push(a.clone());
            }
        }
        Ok(BuiltinStore::rebuild(all, self.assumed_int.clone()))
    }

    pub fn from_atoms(atoms: &[Term]) -> Result<BuiltinStore, BuiltinError> {
        BuiltinStore::new().add_all(atoms)
    }

    /// Adds the knowledge that `t` denotes an integer.
    pub fn assume_int(&self, t: Term) -> BuiltinStore {
        let mut assumed = self.assumed_int.clone();
        if !assumed.contains(&t) {
            assumed.push(t);
        }
        BuiltinStore::rebuild(self.atoms.clone(), assumed)
    }

    pub fn atoms(&self) -> &[Term] {
        &self.atoms
    }

    pub fn assumed_int(&self) -> &[Term] {
        &self.assumed_int
    }

    pub fn is_satisfiable(&self) -> bool {
        self.solved.is_some()
    }

    /// Most general solution of the equalities (including implied ones).
    pub fn solution(&self) -> Option<&Subst> {
        self.solved.as_ref().map(|s| &s.subst)
    }

    /// Unbound variables constrained to integers.
    pub fn int_vars(&self) -> &[Var] {
        self.solved.as_ref().map_or(&[], |s| &s.int_vars)
    }

    pub fn is_int_var(&self, v: &Var) -> bool {
        self.solved.as_ref().is_some_and(|s| s.node(v).is_some())
    }

    /// Tightest known bounds `lo <= v <= hi` of an integer variable.
    pub fn bounds(&self, v: &Var) -> (Option<i64>, Option<i64>) {
        let Some(s) = &self.solved else { return (None, None) };
        match s.node(v) {
            Some(i) => (s.dbm.get(0, i).map(|l| -l), s.dbm.get(i, 0)),
            None => (None, None),
        }
    }

    /// Applies a substitution to every atom.
    pub fn apply(&self, s: &Subst) -> BuiltinStore {
        BuiltinStore::rebuild(s.apply_all(&self.atoms), s.apply_all(&self.assumed_int))
    }

    /// Built-in atoms equivalent to the store projected onto `keep`, which
    /// must consist of unbound variables of the solved form. Equalities are
    /// not included: callers apply [`BuiltinStore::solution`] themselves.
    pub fn projected_atoms(&self, keep: &BTreeSet<Var>) -> Vec<Term> {
        let Some(s) = &self.solved else { return vec![Term::atom("fail")] };
        let kept: Vec<&Var> = s.int_vars.iter().filter(|v| keep.contains(*v)).collect();
        let mut nodes = vec![0];
        nodes.extend(kept.iter().map(|v| s.node(v).unwrap()));
        let sub = s.dbm.restrict(&nodes);
        let name = |i: usize| if i == 0 { None } else { Some(kept[i - 1]) };
        let edges = sub.reduced_edges();
        let mut out: Vec<Term> = edges.iter().map(|&(i, j, c)| bound_atom(name(i), name(j), c)).collect();
        for (k, v) in kept.iter().enumerate() {
            if !edges.iter().any(|&(i, j, _)| i == k + 1 || j == k + 1) {
                // typing only
                out.push(Term::app("=<", vec![Term::Var((*v).clone()), Term::Var((*v).clone())]));
            }
        }
        out
    }

    /// Decides `store -> exists locals. goal`.
    pub fn entails(&self, locals: &BTreeSet<Var>, goal: &[Term]) -> Entailment {
        let Some(sf) = &self.solved else { return Entailment::Yes };
        let Ok(combined) = self.add_all(goal) else { return Entailment::Unknown };
        if !combined.is_satisfiable() {
            return Entailment::No;
        }
        // equalities, with non-local variables frozen as constants
        let mut sk = BTreeMap::new();
        let mut unsk = BTreeMap::new();
        let mut skolem = |t: &Term| {
            t.map_vars(&mut |v| {
                if locals.contains(v) {
                    None
                } else {
                    let c: Term = sk
                        .entry(v.clone())
                        .or_insert_with(|| {
                            let c = Term::atom(&format!("$sk{}", unsk.len()));
                            unsk.insert(c.clone(), Term::Var(v.clone()));
                            c
                        })
                        .clone();
                    Some(c)
                }
            })
        };
        let mut theta = Subst::new();
        let mut cmps = Vec::new();
        for g in goal {
            match classify(g) {
                Some(Kind::True) => {}
                Some(Kind::Fail) => return Entailment::No,
                Some(Kind::Eq(l, r)) => {
                    let l = skolem(&sf.subst.apply(l));
                    let r = skolem(&sf.subst.apply(r));
                    if !theta.unify_with(&l, &r) {
                        return Entailment::Unknown;
                    }
                }
                Some(Kind::Cmp(rel, l, r)) => cmps.push((rel, skolem(&sf.subst.apply(l)), skolem(&sf.subst.apply(r)))),
                None => return Entailment::Unknown,
            }
        }
        if cmps.is_empty() {
            return Entailment::Yes;
        }
        let unskolem = |t: &Term| -> Term {
            fn go(t: &Term, m: &BTreeMap<Term, Term>) -> Term {
                if let Some(v) = m.get(t) {
                    return v.clone();
                }
                match t {
                    Term::Compound(f, args) => Term::Compound(f.clone(), args.iter().map(|a| go(a, m)).collect()),
                    other => other.clone(),
                }
            }
            go(t, &unsk)
        };
        let mut extra_nodes: Vec<Var> = Vec::new();
        let mut constraints = Vec::new();
        for (rel, l, r) in cmps {
            let l = unskolem(&theta.apply(&l));
            let r = unskolem(&theta.apply(&r));
            match normalize_cmp(rel, &l, &r) {
                Ok(Normalized::Const(true)) => {}
                Ok(Normalized::Const(false)) => return Entailment::Unknown,
                Ok(Normalized::Diff(e, k)) => {
                    let Some((p, n)) = diff_shape(&e) else { return Entailment::Unknown };
                    for v in p.into_iter().chain(n) {
                        if locals.contains(v) {
                            if !extra_nodes.contains(v) {
                                extra_nodes.push(v.clone());
                            }
                        } else if sf.node(v).is_none() {
                            // a free variable that need not be an integer
                            return Entailment::Unknown;
                        }
                    }
                    constraints.push((p.cloned(), n.cloned(), k));
                }
                Err(_) => return Entailment::Unknown,
            }
        }
        let base = sf.dbm.len();
        let mut d = Dbm::new(base + extra_nodes.len());
        for i in 0..base {
            for j in 0..base {
                if let Some(c) = sf.dbm.get(i, j) {
                    d.constrain(i, j, c);
                }
            }
        }
        let idx = |v: &Option<Var>| -> usize {
            match v {
                None => 0,
                Some(v) => sf.node(v).or_else(|| extra_nodes.iter().position(|w| w == v).map(|i| base + i)).unwrap(),
            }
        };
        for (p, n, k) in &constraints {
            d.constrain(idx(p), idx(n), *k);
        }
        if !d.close() {
            return Entailment::Unknown;
        }
        for i in 0..base {
            for j in 0..base {
                if d.get(i, j) != sf.dbm.get(i, j) {
                    return Entailment::Unknown;
                }
            }
        }
        Entailment::Yes
    }

    /// Canonical description of the solved form over all variables.
    fn key(&self) -> Option<SolvedKey> {
        let s = self.solved.as_ref()?;
        let bindings = s.subst.iter().map(|(v, t)| (v.clone(), t.clone())).collect();
        let mut entries = Vec::new();
        for i in 0..s.dbm.len() {
            for j in 0..s.dbm.len() {
                if i != j {
                    if let Some(c) = s.dbm.get(i, j) {
                        entries.push((i, j, c));
                    }
                }
            }
        }
        Some((bindings, s.int_vars.clone(), entries))
    }
}

/// Logical equivalence of two stores after renaming the first.
pub fn equivalent(b1: &BuiltinStore, b2: &BuiltinStore, renaming: &Subst) -> bool {
    b1.apply(renaming).key() == b2.key()
}

impl fmt::Display for BuiltinStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return write!(f, "true");
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}
