//! CHR source language: rules, programs, parsing and pre-applications.

mod lexer;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::builtin;
use crate::term::{vars_of, Renamer, Subst, Term, Var};

pub(crate) use lexer::{tokenize, Tok};
pub(crate) use parser::Parser;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: built-in `{name}` is not allowed in a rule head")]
    BuiltinInHead { line: usize, col: usize, name: String },
    #[error("{line}:{col}: user constraint `{name}` is not allowed in a guard")]
    UserInGuard { line: usize, col: usize, name: String },
    #[error("{line}:{col}: rule head is empty")]
    EmptyHead { line: usize, col: usize },
    #[error("{line}:{col}: unsupported built-in `{name}`: {reason}")]
    UnsupportedBuiltin { line: usize, col: usize, name: String, reason: String },
}

impl ParseError {
    pub(crate) fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Self {
        ParseError::Syntax { line, col, msg: msg.into() }
    }

    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::BuiltinInHead { line, .. }
            | ParseError::UserInGuard { line, .. }
            | ParseError::EmptyHead { line, .. }
            | ParseError::UnsupportedBuiltin { line, .. } => *line,
        }
    }
}

/// Generalized simpagation rule `kept \ removed <=> guard | body`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub name: Option<String>,
    pub kept: Vec<Term>,
    pub removed: Vec<Term>,
    /// Conjunction of built-ins; empty means `true`.
    pub guard: Vec<Term>,
    /// Multiset of user constraints and built-ins; `true` is elided.
    pub body: Vec<Term>,
}

impl Rule {
    pub fn head(&self) -> impl Iterator<Item = &Term> {
        self.kept.iter().chain(self.removed.iter())
    }

    pub fn head_vars(&self) -> BTreeSet<Var> {
        vars_of(self.head()).into_iter().collect()
    }

    /// Variables of guard and body that do not occur in the head.
    pub fn local_vars(&self) -> BTreeSet<Var> {
        let head = self.head_vars();
        vars_of(self.guard.iter().chain(self.body.iter())).into_iter().filter(|v| !head.contains(v)).collect()
    }

    pub fn all_vars(&self) -> BTreeSet<Var> {
        vars_of(self.head().chain(self.guard.iter()).chain(self.body.iter())).into_iter().collect()
    }

    pub fn is_propagation(&self) -> bool {
        self.removed.is_empty()
    }

    pub fn apply(&self, s: &Subst) -> Rule {
        Rule {
            name: self.name.clone(),
            kept: s.apply_all(&self.kept),
            removed: s.apply_all(&self.removed),
            guard: s.apply_all(&self.guard),
            body: s.apply_all(&self.body),
        }
    }

    /// A variant with fresh variables disjoint from `avoid`.
    pub fn rename_apart(&self, avoid: &BTreeSet<Var>) -> (Rule, Subst) {
        let mut r = Renamer::avoiding(avoid.clone());
        for v in self.all_vars() {
            r.rename_var(&v);
        }
        let s = r.as_subst();
        (self.apply(&s), s)
    }

    /// Display label: the rule name or its position.
    pub fn label(&self, index: usize) -> String {
        self.name.clone().unwrap_or_else(|| format!("rule{}", index + 1))
    }
}

fn write_conj(f: &mut fmt::Formatter<'_>, ts: &[Term]) -> fmt::Result {
    if ts.is_empty() {
        return write!(f, "true");
    }
    for (i, t) in ts.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        // every operator we print binds tighter than `,`
        write!(f, "{t}")?;
    }
    Ok(())
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = &self.name {
            write!(f, "{} @ ", NameDisplay(n))?;
        }
        if self.removed.is_empty() {
            write_conj(f, &self.kept)?;
            write!(f, " ==> ")?;
        } else {
            if !self.kept.is_empty() {
                write_conj(f, &self.kept)?;
                write!(f, " \\ ")?;
            }
            write_conj(f, &self.removed)?;
            write!(f, " <=> ")?;
        }
        if !self.guard.is_empty() {
            write_conj(f, &self.guard)?;
            write!(f, " | ")?;
        }
        write_conj(f, &self.body)?;
        write!(f, ".")
    }
}

struct NameDisplay<'a>(&'a str);

impl fmt::Display for NameDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Term::atom(self.0))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub user_predicates: BTreeSet<(String, usize)>,
    pub builtin_predicates: BTreeSet<(String, usize)>,
}

impl Program {
    pub fn is_user_atom(&self, t: &Term) -> bool {
        match t.functor() {
            Some((n, a)) => !builtin::is_builtin(n, a),
            None => false,
        }
    }

    pub fn rule_label(&self, index: usize) -> String {
        self.rules[index].label(index)
    }

    /// Looks a rule up by name or by its default label.
    pub fn rule_index(&self, label: &str) -> Option<usize> {
        (0..self.rules.len()).find(|&i| self.rule_label(i) == label)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Renamed-apart rule instance with head variables substituted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreApplication {
    pub rule_index: usize,
    pub instance: Rule,
    pub local_vars: BTreeSet<Var>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreApplicationError {
    #[error("substitution binds `{0}`, which is not a head variable")]
    NotHeadVariable(Var),
    #[error("substitution would capture local variable `{0}`")]
    LocalCapture(Var),
}

/// Builds a pre-application of `rule`. `sigma` is written over the rule's
/// own variables; the instance is renamed apart from `avoid` and from the
/// variables of `sigma`'s range first.
pub fn make_pre_application(
    rule_index: usize,
    rule: &Rule,
    sigma: &Subst,
    avoid: &BTreeSet<Var>,
) -> Result<PreApplication, PreApplicationError> {
    let head = rule.head_vars();
    let locals = rule.local_vars();
    let mut range_vars = BTreeSet::new();
    for (v, t) in sigma.iter() {
        if !head.contains(v) {
            return Err(PreApplicationError::NotHeadVariable(v.clone()));
        }
        for w in t.vars() {
            if locals.contains(&w) {
                return Err(PreApplicationError::LocalCapture(w));
            }
            range_vars.insert(w);
        }
    }
    let mut avoid_all = avoid.clone();
    avoid_all.extend(range_vars);
    avoid_all.extend(rule.all_vars());
    let (fresh, ren) = rule.rename_apart(&avoid_all);
    let mut inst = Subst::new();
    for (v, t) in sigma.iter() {
        let renamed = ren.apply(&Term::Var(v.clone()));
        if let Term::Var(w) = renamed {
            inst.insert_raw(w, t.clone());
        }
    }
    let instance = fresh.apply(&inst);
    let local_vars = instance.local_vars();
    Ok(PreApplication { rule_index, instance, local_vars })
}

fn atom_name(t: &Term) -> String {
    match t.functor() {
        Some((n, a)) => format!("{n}/{a}"),
        None => t.to_string(),
    }
}

fn check_builtin(t: &Term, at: (usize, usize)) -> Result<(), ParseError> {
    builtin::validate_atom(t).map_err(|reason| ParseError::UnsupportedBuiltin {
        line: at.0,
        col: at.1,
        name: atom_name(t),
        reason,
    })
}

fn check_body_atom(t: &Term, at: (usize, usize)) -> Result<(), ParseError> {
    match t {
        Term::Var(_) | Term::Int(_) => Err(ParseError::syntax(at.0, at.1, format!("`{t}` is not a constraint"))),
        _ => check_builtin(t, at),
    }
}

fn parse_rule(p: &mut Parser) -> Result<Rule, ParseError> {
    let name = match (p.peek(), p.peek_at(1)) {
        (Some(Tok::Atom(n) | Tok::Quoted(n)), Some(Tok::Atom(at))) if at == "@" => {
            let n = n.clone();
            p.advance();
            p.advance();
            Some(n)
        }
        _ => None,
    };
    let start = p.position();
    if matches!(p.peek(), Some(Tok::Atom(a)) if a == "<=>" || a == "==>" || a == "\\") {
        return Err(ParseError::EmptyHead { line: start.0, col: start.1 });
    }
    let first = p.conjunction()?;
    let (kept, removed) = if p.eat_atom("\\") {
        let second = p.conjunction()?;
        if !p.eat_atom("<=>") {
            return Err(p.error(format!("expected `<=>` after simpagation head, found {}", p.describe())));
        }
        (first, second)
    } else if p.eat_atom("<=>") {
        (Vec::new(), first)
    } else if p.eat_atom("==>") {
        (first, Vec::new())
    } else {
        return Err(p.error(format!("expected `<=>`, `==>` or `\\`, found {}", p.describe())));
    };
    for (t, at) in kept.iter().chain(removed.iter()) {
        match t.functor() {
            Some((n, a)) if builtin::is_builtin(n, a) || builtin::is_reserved(n, a) => {
                return Err(ParseError::BuiltinInHead { line: at.0, col: at.1, name: atom_name(t) })
            }
            Some(_) => {}
            None => return Err(ParseError::syntax(at.0, at.1, format!("`{t}` is not a constraint"))),
        }
    }
    if p.peek() == Some(&Tok::End) {
        return Err(p.error("empty rule body; write `true` for a rule without body"));
    }
    let first = p.conjunction()?;
    let (guard, body) = if p.eat(&Tok::Bar) {
        if p.peek() == Some(&Tok::End) {
            return Err(p.error("empty rule body; write `true` for a rule without body"));
        }
        (first, p.conjunction()?)
    } else {
        (Vec::new(), first)
    };
    for (t, at) in &guard {
        match t.functor() {
            Some((n, a)) if builtin::is_builtin(n, a) => check_builtin(t, *at)?,
            Some((n, a)) if !builtin::is_reserved(n, a) => {
                return Err(ParseError::UserInGuard { line: at.0, col: at.1, name: atom_name(t) })
            }
            _ => check_body_atom(t, *at)?,
        }
    }
    for (t, at) in &body {
        check_body_atom(t, *at)?;
    }
    if !p.eat(&Tok::End) {
        return Err(p.error(format!("expected `.` at end of rule, found {}", p.describe())));
    }
    let strip = |ts: Vec<(Term, (usize, usize))>| -> Vec<Term> {
        ts.into_iter().map(|(t, _)| t).filter(|t| !builtin::is_true(t)).collect()
    };
    Ok(Rule { name, kept: strip(kept), removed: strip(removed), guard: strip(guard), body: strip(body) })
}

fn parse_directive(p: &mut Parser, prog: &mut Program) -> Result<(), ParseError> {
    let at = p.position();
    if !p.eat_atom("builtin") {
        return Err(ParseError::syntax(at.0, at.1, format!("unknown directive {}", p.describe())));
    }
    let mut specs = vec![p.term(999)?];
    while p.eat(&Tok::Comma) {
        specs.push(p.term(999)?);
    }
    for s in specs {
        let ok = match (s.functor(), s.args()) {
            (Some(("/", 2)), [Term::Const(n), Term::Int(a)]) if *a >= 0 => {
                let (n, a) = (n.to_string(), *a as usize);
                if builtin::is_builtin(&n, a) {
                    prog.builtin_predicates.insert((n, a));
                    true
                } else {
                    return Err(ParseError::UnsupportedBuiltin {
                        line: at.0,
                        col: at.1,
                        name: format!("{n}/{a}"),
                        reason: "not in the supported built-in vocabulary".into(),
                    });
                }
            }
            _ => false,
        };
        if !ok {
            return Err(ParseError::syntax(at.0, at.1, format!("expected name/arity, found `{s}`")));
        }
    }
    if !p.eat(&Tok::End) {
        return Err(p.error(format!("expected `.` after directive, found {}", p.describe())));
    }
    Ok(())
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(tokenize(src)?);
    let mut prog = Program::default();
    while !p.at_eof() {
        p.start_clause();
        if p.eat_atom(":-") {
            parse_directive(&mut p, &mut prog)?;
            continue;
        }
        let rule = parse_rule(&mut p)?;
        prog.rules.push(rule);
    }
    for r in &prog.rules {
        for t in r.head().chain(r.guard.iter()).chain(r.body.iter()) {
            if let Some((n, a)) = t.functor() {
                if builtin::is_builtin(n, a) {
                    prog.builtin_predicates.insert((n.to_string(), a));
                } else {
                    prog.user_predicates.insert((n.to_string(), a));
                }
            }
        }
    }
    Ok(prog)
}

/// Parses a comma separated list of constraints, optionally ending in `.`,
/// such as an initial state `item(a), item(b), set([])`. Variables with the
/// same name denote the same variable.
pub fn parse_constraints(src: &str) -> Result<Vec<Term>, ParseError> {
    let mut p = Parser::new(tokenize(src)?);
    if p.at_eof() {
        return Ok(Vec::new());
    }
    let items = p.conjunction()?;
    p.eat(&Tok::End);
    if !p.at_eof() {
        return Err(p.error(format!("unexpected {}", p.describe())));
    }
    for (t, at) in &items {
        check_body_atom(t, *at)?;
    }
    Ok(items.into_iter().map(|(t, _)| t).filter(|t| !builtin::is_true(t)).collect())
}

/// Parses one term.
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(tokenize(src)?);
    let t = p.term(1200)?;
    if !p.at_eof() {
        return Err(p.error(format!("unexpected {}", p.describe())));
    }
    Ok(t)
}
