//! Reader for invariant and equivalence specifications (`.cspec`).
//!
//! ```text
//! type constList = list(const).
//! invariant state << {set(L)} + S, true >> where type(constList, L), type(constItems, S).
//! equiv << {set(L1)} + S, true >> ~ << {set(L2)} + S, true >> where perm(L1, L2).
//! case r(N) => N > 0.
//! ```

use std::sync::Arc;

use crate::builtin;
use crate::lang::{tokenize, ParseError, Parser, Tok};
use crate::meta::template::{covers, related, EquivRule, Invariant, Template};
use crate::meta::{name_term, Formula, MetaConstraint, MetaState, TypeDefs, TypeExpr, Where};
use crate::semantics::oracle::Equivalence;
use crate::semantics::CanonState;
use crate::term::Term;

/// A user-suggested case split: whenever a corner state holds an atom
/// matching `pattern`, `condition` is tried as a split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseHint {
    pub pattern: Term,
    pub condition: Term,
}

#[derive(Clone, Debug, Default)]
pub struct Spec {
    pub defs: Arc<TypeDefs>,
    pub invariants: Vec<Invariant>,
    pub equivs: Vec<EquivRule>,
    pub cases: Vec<CaseHint>,
}

/// The ground meta state naming an object state.
pub fn name_state(s: &CanonState) -> MetaState {
    MetaState::new(s.store.iter().map(name_term).collect(), None, s.builtins.iter().map(name_term).collect(), None)
}

impl Spec {
    /// Whether an object state lies in some invariant template.
    pub fn admits(&self, s: &CanonState) -> bool {
        if s.is_failure() {
            return false;
        }
        let m = Where::new(self.defs.clone());
        let named = name_state(s);
        self.invariants.iter().any(|inv| covers(&named, inv, &m))
    }

    /// Whether a single equivalence step relates two object states.
    pub fn relates(&self, a: &CanonState, b: &CanonState) -> bool {
        if a.is_failure() || b.is_failure() {
            return false;
        }
        let m = Where::new(self.defs.clone());
        let (x, y) = (name_state(a), name_state(b));
        self.equivs.iter().any(|r| related(&x, &y, r, &m))
    }
}

/// Object-level equivalence generated by the declared equivalences.
pub struct SpecEquivalence<'a>(pub &'a Spec);

impl Equivalence for SpecEquivalence<'_> {
    fn equivalent(&self, a: &CanonState, b: &CanonState) -> bool {
        a == b || self.0.relates(a, b)
    }
}

fn template(p: &mut Parser) -> Result<Template, ParseError> {
    if !p.eat_atom("<<") {
        return Err(p.error(format!("expected `<<` to open a state template, found {}", p.describe())));
    }
    p.expect(&Tok::LBrace, "`{`")?;
    let mut store = Vec::new();
    if !p.eat(&Tok::RBrace) {
        for (t, (l, c)) in p.conjunction()? {
            match t.functor() {
                Some((n, a)) if !builtin::is_builtin(n, a) && !builtin::is_reserved(n, a) => store.push(t),
                _ => return Err(ParseError::syntax(l, c, format!("`{t}` is not a user constraint"))),
            }
        }
        p.expect(&Tok::RBrace, "`}`")?;
    }
    let rest = if p.eat_atom("+") {
        match p.term(0)? {
            Term::Var(v) => Some(v),
            t => return Err(p.error(format!("expected a store-rest variable after `+`, found `{t}`"))),
        }
    } else {
        None
    };
    p.expect(&Tok::Comma, "`,` before the built-in store")?;
    let mut builtins = Vec::new();
    for (t, (l, c)) in p.conjunction()? {
        builtin::validate_atom(&t).map_err(|e| ParseError::syntax(l, c, e))?;
        if !builtin::is_builtin_atom(&t) {
            return Err(ParseError::syntax(l, c, format!("`{t}` is not a built-in constraint")));
        }
        if !builtin::is_true(&t) {
            builtins.push(t);
        }
    }
    if !p.eat_atom(">>") {
        return Err(p.error(format!("expected `>>` to close the state template, found {}", p.describe())));
    }
    Ok(Template { store, rest, builtins })
}

fn formula_atoms(t: &Term) -> Vec<Term> {
    let (items, tail) = t.as_list();
    if t.is_nil() || (t.functor() == Some((".", 2)) && tail.is_nil()) {
        items.into_iter().cloned().collect()
    } else {
        vec![t.clone()]
    }
}

fn condition(defs: &TypeDefs, t: &Term, at: (usize, usize)) -> Result<MetaConstraint, ParseError> {
    let err = |m: String| ParseError::syntax(at.0, at.1, m);
    match (t.functor(), t.args()) {
        (Some(("type", 2)), [ty, x]) => {
            let ty = defs.parse(ty).map_err(|e| err(e.to_string()))?;
            Ok(MetaConstraint::Type(ty, x.clone()))
        }
        (Some(("perm", 2)), [a, b]) => Ok(MetaConstraint::Perm(a.clone(), b.clone())),
        (Some(("=", 2)), [a, b]) => Ok(MetaConstraint::Eq(a.clone(), b.clone())),
        (Some(("holds", 1)), [f]) => Ok(MetaConstraint::Holds(Formula::atoms(formula_atoms(f)))),
        (Some(("fails", 1)), [f]) => Ok(MetaConstraint::Fails(Formula::atoms(formula_atoms(f)))),
        (Some(("freshVars", 1)), [l]) => {
            let (items, tail) = l.as_list();
            let vars: Option<Vec<_>> = items.iter().map(|i| i.as_var().cloned()).collect();
            match vars {
                Some(vs) if tail.is_nil() => Ok(MetaConstraint::FreshVars(vs)),
                _ => Err(err(format!("freshVars expects a list of variables, found `{l}`"))),
            }
        }
        _ => Err(err(format!("unknown WHERE constraint `{t}`"))),
    }
}

fn conditions(p: &mut Parser, defs: &TypeDefs) -> Result<Vec<MetaConstraint>, ParseError> {
    if !p.eat_atom("where") {
        return Ok(Vec::new());
    }
    p.conjunction()?.into_iter().map(|(t, at)| condition(defs, &t, at)).collect()
}

/// Store rests must be typed as multisets when typed at all.
fn check_rest(
    tmpl: &Template,
    conds: &[MetaConstraint],
    defs: &TypeDefs,
    at: (usize, usize),
) -> Result<(), ParseError> {
    let Some(r) = &tmpl.rest else { return Ok(()) };
    for c in conds {
        if let MetaConstraint::Type(ty, Term::Var(v)) = c {
            if v == r && !matches!(defs.resolve(ty), TypeExpr::Mset(_)) {
                return Err(ParseError::syntax(
                    at.0,
                    at.1,
                    format!("store rest `{r}` needs a multiset type, found `{ty}`"),
                ));
            }
        }
    }
    Ok(())
}

pub fn parse_spec(src: &str) -> Result<Spec, ParseError> {
    let mut p = Parser::new(tokenize(src)?);
    let mut defs = TypeDefs::new();
    let mut spec = Spec::default();
    while !p.at_eof() {
        p.start_clause();
        let at = p.position();
        if p.eat_atom("type") {
            let name = match p.advance().map(|t| t.tok) {
                Some(Tok::Atom(n)) => n,
                _ => return Err(ParseError::syntax(at.0, at.1, "expected a type name after `type`")),
            };
            if !p.eat_atom("=") {
                return Err(p.error(format!("expected `=` in type declaration, found {}", p.describe())));
            }
            let t = p.term(999)?;
            let ty = defs.parse(&t).map_err(|e| ParseError::syntax(at.0, at.1, e.to_string()))?;
            defs.declare(&name, ty).map_err(|e| ParseError::syntax(at.0, at.1, e.to_string()))?;
        } else if p.eat_atom("invariant") {
            p.expect_atom("state")?;
            let state = template(&mut p)?;
            let conds = conditions(&mut p, &defs)?;
            check_rest(&state, &conds, &defs, at)?;
            spec.invariants.push(Invariant { state, conds });
        } else if p.eat_atom("equiv") {
            let left = template(&mut p)?;
            if !p.eat_atom("~") {
                return Err(p.error(format!("expected `~` between templates, found {}", p.describe())));
            }
            let right = template(&mut p)?;
            if left.rest != right.rest {
                return Err(ParseError::syntax(
                    at.0,
                    at.1,
                    "both sides of an equivalence must share the same store rest",
                ));
            }
            let conds = conditions(&mut p, &defs)?;
            check_rest(&left, &conds, &defs, at)?;
            spec.equivs.push(EquivRule { left, right, conds });
        } else if p.eat_atom("case") {
            let pattern = p.term(999)?;
            if !p.eat_atom("=>") {
                return Err(p.error(format!("expected `=>` in case declaration, found {}", p.describe())));
            }
            let condition = p.term(999)?;
            if !builtin::is_comparison(&condition) {
                return Err(ParseError::syntax(
                    at.0,
                    at.1,
                    format!("case condition `{condition}` must be a comparison"),
                ));
            }
            spec.cases.push(CaseHint { pattern, condition });
        } else {
            return Err(p.error(format!("expected `type`, `invariant`, `equiv` or `case`, found {}", p.describe())));
        }
        if !p.eat(&Tok::End) {
            return Err(p.error(format!("expected `.` at end of declaration, found {}", p.describe())));
        }
    }
    spec.defs = Arc::new(defs);
    Ok(spec)
}
