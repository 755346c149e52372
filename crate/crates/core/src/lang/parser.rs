//! Operator-precedence term parser over the token stream.
//!
//! The same parser reads programs, spec files and query strings. Clause level
//! structure (rules, directives, spec declarations) is handled by callers
//! through the cursor helpers.

use std::collections::HashMap;

use super::lexer::{Tok, Token};
use super::ParseError;
use crate::term::{Term, Var};

pub(crate) fn infix_op(name: &str) -> Option<(u32, u32, u32)> {
    // (priority, max left, max right)
    match name {
        "=" | "==" | "<" | "=<" | ">" | ">=" | "\\=" => Some((700, 699, 699)),
        // parsed only to reject them with a precise message
        "is" | "=:=" | "=\\=" | "\\==" | "@<" | "@>" | "@=<" | "@>=" | "=.." => Some((700, 699, 699)),
        "+" | "-" => Some((500, 500, 499)),
        "*" | "/" => Some((400, 400, 399)),
        _ => None,
    }
}

/// A term with the line and column where it starts.
pub type Located = (Term, (usize, usize));

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    anon: usize,
    /// Source variable names seen in the current clause. Anonymous variables
    /// get a distinct name each.
    pub(crate) seen_vars: HashMap<String, Var>,
}

impl Parser {
    pub fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0, anon: 0, seen_vars: HashMap::new() }
    }

    pub fn at_eof(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    pub fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    pub fn position(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or_else(|| self.toks.last()) {
            Some(t) if self.pos < self.toks.len() => (t.line, t.col),
            Some(t) => (t.line, t.col + 1),
            None => (1, 1),
        }
    }

    pub fn advance(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn error(&self, msg: impl Into<String>) -> ParseError {
        let (l, c) = self.position();
        ParseError::syntax(l, c, msg)
    }

    pub fn is_atom(&self, name: &str) -> bool {
        matches!(self.peek(), Some(Tok::Atom(a)) if a == name)
    }

    pub fn eat_atom(&mut self, name: &str) -> bool {
        if self.is_atom(name) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected {what}, found {}", self.describe())))
        }
    }

    pub fn expect_atom(&mut self, name: &str) -> Result<(), ParseError> {
        if self.eat_atom(name) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{name}`, found {}", self.describe())))
        }
    }

    pub fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some(Tok::Atom(a)) => format!("`{a}`"),
            Some(Tok::Quoted(a)) => format!("'{a}'"),
            Some(Tok::Var(v)) => format!("variable `{v}`"),
            Some(Tok::Int(i)) => format!("`{i}`"),
            Some(Tok::LParen) => "`(`".into(),
            Some(Tok::RParen) => "`)`".into(),
            Some(Tok::LBracket) => "`[`".into(),
            Some(Tok::RBracket) => "`]`".into(),
            Some(Tok::LBrace) => "`{`".into(),
            Some(Tok::RBrace) => "`}`".into(),
            Some(Tok::Comma) => "`,`".into(),
            Some(Tok::Bar) => "`|`".into(),
            Some(Tok::End) => "end of clause `.`".into(),
        }
    }

    /// Variables are scoped to one clause.
    pub fn start_clause(&mut self) {
        self.seen_vars.clear();
    }

    fn var(&mut self, name: &str) -> Term {
        if name == "_" {
            self.anon += 1;
            return Term::Var(Var::named(&format!("_{}", self.anon)));
        }
        let v = self.seen_vars.entry(name.to_string()).or_insert_with(|| Var::named(name));
        Term::Var(v.clone())
    }

    /// Parses a term with priority at most `max`.
    pub fn term(&mut self, max: u32) -> Result<Term, ParseError> {
        let mut left = self.primary(max)?;
        let mut left_prio = 0;
        while let Some(Tok::Atom(a)) = self.peek() {
            let op = a.clone();
            let Some((prio, lmax, rmax)) = infix_op(&op) else { break };
            if prio > max || left_prio > lmax {
                break;
            }
            self.pos += 1;
            let right = self.term(rmax)?;
            left = Term::app(&op, vec![left, right]);
            left_prio = prio;
        }
        Ok(left)
    }

    fn primary(&mut self, max: u32) -> Result<Term, ParseError> {
        let Some(tok) = self.advance() else {
            return Err(self.error("unexpected end of input"));
        };
        match tok.tok {
            Tok::Int(i) => Ok(Term::Int(i)),
            Tok::Var(v) => Ok(self.var(&v)),
            Tok::LParen => {
                let t = self.term(1200)?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(t)
            }
            Tok::LBracket => self.list_rest(),
            Tok::Quoted(name) => self.after_name(&name),
            Tok::Atom(name) => {
                if name == "-" {
                    let adjacent_paren =
                        matches!(self.toks.get(self.pos), Some(t) if t.tok == Tok::LParen && !t.spaced);
                    if !adjacent_paren {
                        if let Some(Tok::Int(i)) = self.peek() {
                            let i = *i;
                            self.pos += 1;
                            return Ok(Term::Int(-i));
                        }
                        if max >= 200 && self.starts_term() {
                            let arg = self.term(200)?;
                            return Ok(Term::app("-", vec![arg]));
                        }
                    }
                }
                self.after_name(&name)
            }
            _ => {
                self.pos -= 1;
                Err(self.error(format!("expected a term, found {}", self.describe())))
            }
        }
    }

    fn starts_term(&self) -> bool {
        match self.peek() {
            Some(Tok::Atom(a)) => infix_op(a).is_none() || a == "-",
            Some(Tok::Var(_) | Tok::Int(_) | Tok::Quoted(_) | Tok::LParen | Tok::LBracket) => true,
            _ => false,
        }
    }

    fn after_name(&mut self, name: &str) -> Result<Term, ParseError> {
        let adjacent_paren = matches!(self.toks.get(self.pos), Some(t) if t.tok == Tok::LParen && !t.spaced);
        if !adjacent_paren {
            return Ok(Term::atom(name));
        }
        self.pos += 1;
        let mut args = vec![self.term(999)?];
        while self.eat(&Tok::Comma) {
            args.push(self.term(999)?);
        }
        self.expect(&Tok::RParen, "`,` or `)`")?;
        Ok(Term::app(name, args))
    }

    fn list_rest(&mut self) -> Result<Term, ParseError> {
        if self.eat(&Tok::RBracket) {
            return Ok(Term::nil());
        }
        let mut items = vec![self.term(999)?];
        while self.eat(&Tok::Comma) {
            items.push(self.term(999)?);
        }
        let tail = if self.eat(&Tok::Bar) { self.term(999)? } else { Term::nil() };
        self.expect(&Tok::RBracket, "`]`")?;
        Ok(Term::list(items, tail))
    }

    /// `t1, t2, ...` at argument priority.
    pub fn conjunction(&mut self) -> Result<Vec<Located>, ParseError> {
        let mut out = Vec::new();
        loop {
            let at = self.position();
            out.push((self.term(999)?, at));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(out)
    }
}
