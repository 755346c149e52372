//! Shared fixtures for the integration tests and the acceptance runner.
#![allow(dead_code)]

pub mod probes;
pub mod props;

use chrconf_core::confluence::spec::{parse_spec, Spec};
use chrconf_core::lang::{parse_constraints, parse_program, Program};
use chrconf_core::semantics::{canonicalize, CanonState, StateRepr};
use chrconf_core::term::Term;

pub const SET: &str = include_str!("../../../../programs/set.chr");
pub const SET_SPEC: &str = include_str!("../../../../programs/set.cspec");
pub const ZIGZAG: &str = include_str!("../../../../programs/zigzag.chr");
pub const ZIGZAG_SPEC: &str = include_str!("../../../../programs/zigzag.cspec");
pub const MIN: &str = include_str!("../../../../programs/min.chr");

pub fn program(src: &str) -> Program {
    parse_program(src).unwrap_or_else(|e| panic!("{e}"))
}

pub fn spec(src: &str) -> Spec {
    parse_spec(src).unwrap_or_else(|e| panic!("{e}"))
}

pub fn term(src: &str) -> Term {
    chrconf_core::lang::parse_term(src).unwrap_or_else(|e| panic!("{e}"))
}

pub fn state(src: &str) -> CanonState {
    canonicalize(&StateRepr::query(parse_constraints(src).unwrap_or_else(|e| panic!("{e}"))))
}

/// Sorts the list of every `set/1` constraint: the permutation equivalence,
/// written independently of the template machinery.
pub fn sorted_sets(s: &CanonState) -> CanonState {
    if s.is_failure() {
        return s.clone();
    }
    let store = s
        .store
        .iter()
        .map(|t| match t.functor() {
            Some(("set", 1)) => {
                let (items, tail) = t.args()[0].as_list();
                let mut items: Vec<Term> = items.into_iter().cloned().collect();
                items.sort();
                Term::app("set", vec![Term::list(items, tail.clone())])
            }
            _ => t.clone(),
        })
        .collect();
    canonicalize(&StateRepr::new(store, s.to_repr().builtins))
}
