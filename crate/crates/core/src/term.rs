//! First-order terms, substitutions, unification and matching.
//!
//! Terms are shared by the object level (CHR programs and states) and the
//! meta level (the ground representation). Variables carry a user name and a
//! serial number: serial `0` marks a variable written in source text, any
//! other serial comes from the session-wide fresh supply and can never clash
//! with a parsed name.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

/// Interned-ish symbol. Cheap to clone and safe to share across threads.
pub type Sym = Arc<str>;

/// Functor used to name an object variable inside the ground representation.
pub const NAME_FUNCTOR: &str = "$name";
/// Name used for variables produced by canonical renaming.
const CANONICAL_NAME: &str = "$";

static FRESH: AtomicU32 = AtomicU32::new(1);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    name: Sym,
    serial: u32,
}

impl Var {
    /// A variable as written in source text.
    pub fn named(name: &str) -> Self {
        Var { name: Arc::from(name), serial: 0 }
    }

    /// A variable never produced by the parser. The base name is kept for
    /// readability only.
    pub fn fresh(base: &str) -> Self {
        let serial = FRESH.fetch_add(1, Ordering::Relaxed);
        Var { name: Arc::from(base), serial }
    }

    /// The `i`-th variable of a canonical renaming.
    pub fn canonical(i: u32) -> Self {
        Var { name: Arc::from(CANONICAL_NAME), serial: i }
    }

    pub(crate) fn from_parts(name: &str, serial: u32) -> Self {
        Var { name: Arc::from(name), serial }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn serial(&self) -> u32 {
        self.serial
    }

    pub fn is_source(&self) -> bool {
        self.serial == 0
    }

    pub fn is_canonical(&self) -> bool {
        &*self.name == CANONICAL_NAME
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.serial == 0 {
            write!(f, "{}", self.name)
        } else if self.is_canonical() {
            write!(f, "_{}", self.serial)
        } else {
            write!(f, "{}_{}", self.name, self.serial)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Const(Sym),
    Int(i64),
    /// Arity is at least one; nullary applications are `Const`.
    Compound(Sym, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(Var::named(name))
    }

    pub fn atom(name: &str) -> Self {
        Term::Const(Arc::from(name))
    }

    pub fn int(v: i64) -> Self {
        Term::Int(v)
    }

    /// Builds `f(args)`, or the constant `f` when `args` is empty.
    pub fn app(functor: &str, args: Vec<Term>) -> Self {
        if args.is_empty() {
            Term::Const(Arc::from(functor))
        } else {
            Term::Compound(Arc::from(functor), args)
        }
    }

    pub fn nil() -> Self {
        Term::atom("[]")
    }

    pub fn cons(head: Term, tail: Term) -> Self {
        Term::app(".", vec![head, tail])
    }

    /// `[items | tail]`
    pub fn list(items: Vec<Term>, tail: Term) -> Self {
        items.into_iter().rev().fold(tail, |acc, t| Term::cons(t, acc))
    }

    pub fn proper_list(items: Vec<Term>) -> Self {
        Term::list(items, Term::nil())
    }

    /// Ground name of an object variable.
    pub fn name_of(v: &Var) -> Self {
        Term::app(NAME_FUNCTOR, vec![Term::Const(v.name.clone()), Term::Int(i64::from(v.serial))])
    }

    /// The object variable this term names, if it is a name.
    pub fn as_name(&self) -> Option<Var> {
        match self {
            Term::Compound(f, args) if &**f == NAME_FUNCTOR && args.len() == 2 => match (&args[0], &args[1]) {
                (Term::Const(n), Term::Int(s)) => Some(Var::from_parts(n, *s as u32)),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Term::Const(c) if &**c == "[]")
    }

    /// Splits a (possibly partial) list into its elements and tail.
    pub fn as_list(&self) -> (Vec<&Term>, &Term) {
        let mut items = Vec::new();
        let mut cur = self;
        while let Term::Compound(f, args) = cur {
            if &**f != "." || args.len() != 2 {
                break;
            }
            items.push(&args[0]);
            cur = &args[1];
        }
        (items, cur)
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Predicate indicator of an atom (`name`, arity).
    pub fn functor(&self) -> Option<(&str, usize)> {
        match self {
            Term::Const(c) => Some((c, 0)),
            Term::Compound(f, args) => Some((f, args.len())),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(_, args) => args,
            _ => &[],
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Const(_) | Term::Int(_) => true,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn occurs(&self, v: &Var) -> bool {
        match self {
            Term::Var(w) => w == v,
            Term::Const(_) | Term::Int(_) => false,
            Term::Compound(_, args) => args.iter().any(|a| a.occurs(v)),
        }
    }

    /// Variables in order of first occurrence.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Const(_) | Term::Int(_) => {}
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn var_set(&self) -> BTreeSet<Var> {
        self.vars().into_iter().collect()
    }

    /// The term with every variable replaced by one placeholder.
    pub fn skeleton(&self) -> Term {
        match self {
            Term::Var(_) => Term::Var(Var::canonical(u32::MAX)),
            Term::Compound(f, args) => Term::Compound(f.clone(), args.iter().map(Term::skeleton).collect()),
            other => other.clone(),
        }
    }

    /// Replaces variables by `f(v)` where it returns `Some`.
    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Option<Term>) -> Term {
        match self {
            Term::Var(v) => f(v).unwrap_or_else(|| self.clone()),
            Term::Compound(g, args) => Term::Compound(g.clone(), args.iter().map(|a| a.map_vars(f)).collect()),
            other => other.clone(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Compound(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
            _ => 1,
        }
    }
}

pub fn vars_of<'a>(terms: impl IntoIterator<Item = &'a Term>) -> Vec<Var> {
    let mut out = Vec::new();
    for t in terms {
        t.collect_vars(&mut out);
    }
    out
}

/// Idempotent substitution. Bindings never map a variable to itself.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subst {
    bindings: BTreeMap<Var, Term>,
}

impl Subst {
    pub fn new() -> Self {
        Subst::default()
    }

    pub fn singleton(v: Var, t: Term) -> Self {
        let mut s = Subst::new();
        if Term::Var(v.clone()) != t {
            s.bindings.insert(v, t);
        }
        s
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.bindings.get(v)
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.bindings.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.bindings.keys()
    }

    pub fn apply(&self, t: &Term) -> Term {
        if self.bindings.is_empty() {
            return t.clone();
        }
        t.map_vars(&mut |v| self.bindings.get(v).cloned())
    }

    pub fn apply_all(&self, ts: &[Term]) -> Vec<Term> {
        ts.iter().map(|t| self.apply(t)).collect()
    }

    /// Adds `v -> t` keeping the substitution idempotent. `t` must already be
    /// fully applied and must not contain `v`.
    fn bind(&mut self, v: Var, t: Term) {
        let single = Subst::singleton(v.clone(), t.clone());
        for r in self.bindings.values_mut() {
            *r = single.apply(r);
        }
        self.bindings.insert(v, t);
    }

    /// Inserts a binding without the occurs and idempotence bookkeeping.
    /// Only for variable renamings and matchers built by hand.
    pub fn insert_raw(&mut self, v: Var, t: Term) {
        if Term::Var(v.clone()) != t {
            self.bindings.insert(v, t);
        }
    }

    /// Extends `self` with a most general unifier of `a` and `b`.
    /// On failure `self` is left in an unspecified (but valid) state.
    pub fn unify_with(&mut self, a: &Term, b: &Term) -> bool {
        let mut stack = vec![(self.apply(a), self.apply(b))];
        while let Some((x, y)) = stack.pop() {
            let x = self.apply(&x);
            let y = self.apply(&y);
            if x == y {
                continue;
            }
            match (x, y) {
                (Term::Var(v), t) | (t, Term::Var(v)) => {
                    if t.occurs(&v) {
                        return false;
                    }
                    self.bind(v, t);
                }
                (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                    if f != g || xs.len() != ys.len() {
                        return false;
                    }
                    stack.extend(xs.into_iter().zip(ys));
                }
                _ => return false,
            }
        }
        true
    }

    /// `self` followed by `other`: applying the result equals applying `self`
    /// and then `other`.
    pub fn compose(&self, other: &Subst) -> Subst {
        let mut out = Subst::new();
        for (v, t) in &self.bindings {
            out.insert_raw(v.clone(), other.apply(t));
        }
        for (v, t) in &other.bindings {
            if !self.bindings.contains_key(v) {
                out.insert_raw(v.clone(), t.clone());
            }
        }
        out
    }

    pub fn restrict(&self, keep: impl Fn(&Var) -> bool) -> Subst {
        Subst { bindings: self.bindings.iter().filter(|(v, _)| keep(v)).map(|(v, t)| (v.clone(), t.clone())).collect() }
    }

    pub fn remove(&mut self, v: &Var) -> Option<Term> {
        self.bindings.remove(v)
    }
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}↦{t}")?;
        }
        write!(f, "}}")
    }
}

pub fn unify(a: &Term, b: &Term) -> Option<Subst> {
    let mut s = Subst::new();
    s.unify_with(a, b).then_some(s)
}

/// Simultaneous unification of two equally long sequences.
pub fn unify_all(pairs: impl IntoIterator<Item = (Term, Term)>) -> Option<Subst> {
    let mut s = Subst::new();
    for (a, b) in pairs {
        if !s.unify_with(&a, &b) {
            return None;
        }
    }
    Some(s)
}

/// One-way matching: binds only variables of `pattern`. Variables of
/// `target` behave as constants, even if they share names with pattern
/// variables.
pub fn match_term(pattern: &Term, target: &Term) -> Option<Subst> {
    let mut s = Subst::new();
    match_into(pattern, target, &mut s).then(|| finish_match(s))
}

/// Matching that extends an existing matcher.
pub fn match_into(pattern: &Term, target: &Term, s: &mut Subst) -> bool {
    match pattern {
        Term::Var(v) => match s.get(v) {
            Some(bound) => bound == target,
            None => {
                // identity bindings are kept until finish_match so that later
                // occurrences of the variable agree
                s.bindings.insert(v.clone(), target.clone());
                true
            }
        },
        Term::Compound(f, ps) => match target {
            Term::Compound(g, ts) if f == g && ps.len() == ts.len() => {
                ps.iter().zip(ts).all(|(p, t)| match_into(p, t, s))
            }
            _ => false,
        },
        other => other == target,
    }
}

/// Drops identity bindings left behind by [`match_into`].
pub fn finish_match(mut s: Subst) -> Subst {
    s.bindings.retain(|v, t| Term::Var(v.clone()) != *t);
    s
}

/// Consistent renaming of variables to fresh ones.
#[derive(Debug, Default, Clone)]
pub struct Renamer {
    map: BTreeMap<Var, Var>,
    avoid: BTreeSet<Var>,
}

impl Renamer {
    pub fn new() -> Self {
        Renamer::default()
    }

    pub fn avoiding(avoid: BTreeSet<Var>) -> Self {
        Renamer { map: BTreeMap::new(), avoid }
    }

    pub fn rename_var(&mut self, v: &Var) -> Var {
        if let Some(w) = self.map.get(v) {
            return w.clone();
        }
        let mut w = Var::fresh(v.name());
        while self.avoid.contains(&w) {
            w = Var::fresh(v.name());
        }
        self.map.insert(v.clone(), w.clone());
        w
    }

    pub fn rename(&mut self, t: &Term) -> Term {
        t.map_vars(&mut |v| Some(Term::Var(self.rename_var(v))))
    }

    pub fn as_subst(&self) -> Subst {
        let mut s = Subst::new();
        for (v, w) in &self.map {
            s.insert_raw(v.clone(), Term::Var(w.clone()));
        }
        s
    }
}

/// A variant of `t` whose variables are disjoint from `avoid`.
pub fn rename_apart(t: &Term, avoid: &BTreeSet<Var>) -> Term {
    Renamer::avoiding(avoid.clone()).rename(t)
}

// ---------------------------------------------------------------------------
// printing

const SYMBOL_CHARS: &str = "+-*/\\^<>=~:.?@#&$";

fn infix_priority(op: &str) -> Option<(u32, u32, u32)> {
    // (priority, max left, max right)
    match op {
        "=" | "==" | "<" | "=<" | ">" | ">=" | "\\=" => Some((700, 699, 699)),
        "+" | "-" => Some((500, 500, 499)),
        "*" | "/" => Some((400, 400, 399)),
        _ => None,
    }
}

pub(crate) fn atom_needs_quotes(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        None => true,
        Some(c) if c.is_ascii_lowercase() => !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'),
        Some(_) if name == "[]" || name == "!" || name == ";" => false,
        Some(_) => !name.chars().all(|c| SYMBOL_CHARS.contains(c)),
    }
}

fn write_atom(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    if atom_needs_quotes(name) {
        write!(f, "'")?;
        for c in name.chars() {
            match c {
                '\'' => write!(f, "\\'")?,
                '\\' => write!(f, "\\\\")?,
                c => write!(f, "{c}")?,
            }
        }
        write!(f, "'")
    } else {
        write!(f, "{name}")
    }
}

impl Term {
    fn priority(&self) -> u32 {
        match self {
            Term::Compound(f, args) if args.len() == 2 => infix_priority(f).map(|(p, _, _)| p).unwrap_or(0),
            _ => 0,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, max: u32) -> fmt::Result {
        if self.priority() > max {
            write!(f, "(")?;
            self.write_prec(f, 1200)?;
            return write!(f, ")");
        }
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Int(i) => write!(f, "{i}"),
            Term::Const(c) => write_atom(f, c),
            Term::Compound(fun, args) => {
                if let Some(v) = self.as_name() {
                    return write!(f, "'{v}'");
                }
                if &**fun == "." && args.len() == 2 {
                    let (items, tail) = self.as_list();
                    write!(f, "[")?;
                    for (i, it) in items.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        it.write_prec(f, 999)?;
                    }
                    if !tail.is_nil() {
                        write!(f, "|")?;
                        tail.write_prec(f, 999)?;
                    }
                    return write!(f, "]");
                }
                if args.len() == 2 {
                    if let Some((_, l, r)) = infix_priority(fun) {
                        args[0].write_prec(f, l)?;
                        write!(f, " {fun} ")?;
                        return args[1].write_prec(f, r);
                    }
                }
                write_atom(f, fun)?;
                write!(f, "(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    a.write_prec(f, 999)?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 1200)
    }
}
