//! Types of meta variables: grammars over ground meta-level terms.

use std::collections::BTreeMap;
use std::fmt;

use crate::term::{Term, Var};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeExpr {
    /// Any ground meta term.
    Any,
    /// Names of object variables.
    Var,
    /// Constants (atoms other than `[]`) and integers.
    Const,
    Int,
    /// Proper lists whose elements have the given type.
    List(Box<TypeExpr>),
    /// Multisets of constraints; only for store-rest variables.
    Mset(Box<TypeExpr>),
    /// `f(T1, ..., Tn)`.
    Struct(String, Vec<TypeExpr>),
    /// A declared type name.
    Named(String),
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Any => write!(f, "any"),
            TypeExpr::Var => write!(f, "var"),
            TypeExpr::Const => write!(f, "const"),
            TypeExpr::Int => write!(f, "int"),
            TypeExpr::List(t) => write!(f, "list({t})"),
            TypeExpr::Mset(t) => write!(f, "mset({t})"),
            TypeExpr::Struct(n, args) => {
                write!(f, "{}(", Term::atom(n))?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            TypeExpr::Named(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("undeclared type `{0}`")]
    Undeclared(String),
    #[error("type `{0}` is declared twice")]
    Duplicate(String),
    #[error("`{0}` is not a type expression")]
    Malformed(String),
}

/// Declared type names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeDefs {
    defs: BTreeMap<String, TypeExpr>,
}

const BASE_TYPES: [&str; 4] = ["any", "var", "const", "int"];

impl TypeDefs {
    pub fn new() -> Self {
        TypeDefs::default()
    }

    /// Declares `name = ty`. Names used in `ty` must already be declared, so
    /// definitions cannot be recursive.
    pub fn declare(&mut self, name: &str, ty: TypeExpr) -> Result<(), TypeError> {
        if BASE_TYPES.contains(&name) || name == "list" || name == "mset" || self.defs.contains_key(name) {
            return Err(TypeError::Duplicate(name.to_string()));
        }
        self.check(&ty)?;
        self.defs.insert(name.to_string(), ty);
        Ok(())
    }

    pub fn check(&self, ty: &TypeExpr) -> Result<(), TypeError> {
        match ty {
            TypeExpr::Named(n) if !self.defs.contains_key(n) => Err(TypeError::Undeclared(n.clone())),
            TypeExpr::List(t) | TypeExpr::Mset(t) => self.check(t),
            TypeExpr::Struct(_, ts) => ts.iter().try_for_each(|t| self.check(t)),
            _ => Ok(()),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &TypeExpr)> {
        self.defs.iter()
    }

    /// Parses a type expression from its term form, e.g. `list(const)`.
    pub fn parse(&self, t: &Term) -> Result<TypeExpr, TypeError> {
        let bad = || TypeError::Malformed(t.to_string());
        match t {
            Term::Const(c) => match &**c {
                "any" => Ok(TypeExpr::Any),
                "var" => Ok(TypeExpr::Var),
                "const" => Ok(TypeExpr::Const),
                "int" => Ok(TypeExpr::Int),
                n if self.defs.contains_key(n) => Ok(TypeExpr::Named(n.to_string())),
                n => Err(TypeError::Undeclared(n.to_string())),
            },
            Term::Compound(f, args) => match (&**f, args.len()) {
                ("list", 1) => Ok(TypeExpr::List(Box::new(self.parse(&args[0])?))),
                ("mset", 1) => Ok(TypeExpr::Mset(Box::new(self.parse(&args[0])?))),
                _ => Ok(TypeExpr::Struct(f.to_string(), args.iter().map(|a| self.parse(a)).collect::<Result<_, _>>()?)),
            },
            _ => Err(bad()),
        }
    }

    /// Expands declared names at the top level.
    pub fn resolve<'a>(&'a self, ty: &'a TypeExpr) -> &'a TypeExpr {
        let mut t = ty;
        while let TypeExpr::Named(n) = t {
            t = self.defs.get(n).expect("type names are checked on declaration");
        }
        t
    }

    /// Membership of a ground meta term.
    pub fn member(&self, t: &Term, ty: &TypeExpr) -> bool {
        match self.resolve(ty) {
            TypeExpr::Any => t.is_ground(),
            TypeExpr::Var => t.as_name().is_some(),
            TypeExpr::Const => is_const(t),
            TypeExpr::Int => matches!(t, Term::Int(_)),
            TypeExpr::List(e) => {
                let (items, tail) = t.as_list();
                tail.is_nil() && items.iter().all(|i| self.member(i, e))
            }
            TypeExpr::Mset(_) => false,
            TypeExpr::Struct(f, args) => match t {
                Term::Compound(g, ts) if **g == **f && ts.len() == args.len() => {
                    ts.iter().zip(args).all(|(x, a)| self.member(x, a))
                }
                _ => false,
            },
            TypeExpr::Named(_) => unreachable!("resolved"),
        }
    }

    /// `a` is contained in `b`.
    pub fn subtype(&self, a: &TypeExpr, b: &TypeExpr) -> bool {
        let (a, b) = (self.resolve(a), self.resolve(b));
        match (a, b) {
            (_, TypeExpr::Any) => true,
            (x, y) if x == y => true,
            (TypeExpr::Int, TypeExpr::Const) => true,
            (TypeExpr::List(x), TypeExpr::List(y)) | (TypeExpr::Mset(x), TypeExpr::Mset(y)) => self.subtype(x, y),
            (TypeExpr::Struct(f, xs), TypeExpr::Struct(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.subtype(x, y))
            }
            _ => false,
        }
    }

    /// Intersection of two types, `None` when empty.
    pub fn meet(&self, a: &TypeExpr, b: &TypeExpr) -> Option<TypeExpr> {
        if self.subtype(a, b) {
            return Some(a.clone());
        }
        if self.subtype(b, a) {
            return Some(b.clone());
        }
        match (self.resolve(a), self.resolve(b)) {
            (TypeExpr::List(x), TypeExpr::List(y)) => self.meet(x, y).map(|t| TypeExpr::List(Box::new(t))),
            (TypeExpr::Mset(x), TypeExpr::Mset(y)) => self.meet(x, y).map(|t| TypeExpr::Mset(Box::new(t))),
            (TypeExpr::Struct(f, xs), TypeExpr::Struct(g, ys)) if f == g && xs.len() == ys.len() => {
                let args: Option<Vec<TypeExpr>> = xs.iter().zip(ys).map(|(x, y)| self.meet(x, y)).collect();
                args.map(|args| TypeExpr::Struct(f.clone(), args))
            }
            _ => None,
        }
    }

    /// Requirements on the meta variables of `t` under which every grounding
    /// of `t` is a member of `ty`. `None` when no grounding is a member.
    /// The requirements are exact, except that a variable bound to a partial
    /// list must itself be a list.
    pub fn requirements(&self, t: &Term, ty: &TypeExpr) -> Option<Vec<(Var, TypeExpr)>> {
        let mut out = Vec::new();
        self.require_into(t, ty, &mut out).then_some(out)
    }

    fn require_into(&self, t: &Term, ty: &TypeExpr, out: &mut Vec<(Var, TypeExpr)>) -> bool {
        if let Term::Var(v) = t {
            out.push((v.clone(), ty.clone()));
            return true;
        }
        match self.resolve(ty) {
            TypeExpr::Any => {
                for v in t.vars() {
                    out.push((v, TypeExpr::Any));
                }
                true
            }
            TypeExpr::Var => t.as_name().is_some(),
            TypeExpr::Const => is_const(t),
            TypeExpr::Int => matches!(t, Term::Int(_)),
            TypeExpr::List(e) => {
                let (items, tail) = t.as_list();
                if !(tail.is_nil() || tail.is_var()) {
                    return false;
                }
                for i in items {
                    if !self.require_into(i, e, out) {
                        return false;
                    }
                }
                if let Term::Var(v) = tail {
                    out.push((v.clone(), TypeExpr::List(e.clone())));
                }
                true
            }
            TypeExpr::Mset(_) => false,
            TypeExpr::Struct(f, args) => match t {
                Term::Compound(g, ts) if **g == **f && ts.len() == args.len() => {
                    ts.iter().zip(args).all(|(x, a)| self.require_into(x, a, out))
                }
                _ => false,
            },
            TypeExpr::Named(_) => unreachable!("resolved"),
        }
    }

    /// Whether every grounding of `t` is a member of `ty`, given the types
    /// of its variables.
    pub fn entails(&self, t: &Term, ty: &TypeExpr, types: &BTreeMap<Var, TypeExpr>) -> bool {
        match self.requirements(t, ty) {
            Some(reqs) => {
                reqs.iter().all(|(v, r)| types.get(v).is_some_and(|have| self.subtype(have, r)) || *r == TypeExpr::Any)
            }
            None => false,
        }
    }

    /// Whether values of this type are never object variables, so that a
    /// meta variable of the type can be reasoned about as a fixed value.
    pub fn is_value_type(&self, ty: &TypeExpr) -> bool {
        match self.resolve(ty) {
            TypeExpr::Any | TypeExpr::Var | TypeExpr::Mset(_) => false,
            TypeExpr::Const | TypeExpr::Int => true,
            TypeExpr::List(e) => self.is_value_type(e),
            TypeExpr::Struct(_, args) => args.iter().all(|a| self.is_value_type(a)),
            TypeExpr::Named(_) => unreachable!("resolved"),
        }
    }
}

pub fn is_const(t: &Term) -> bool {
    match t {
        Term::Const(c) => &**c != "[]",
        Term::Int(_) => true,
        _ => false,
    }
}
