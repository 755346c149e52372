//! Confluence analysis for Constraint Handling Rules programs.

pub mod builtin;
pub mod confluence;
pub mod lang;
pub mod meta;
pub mod semantics;
pub mod term;
