//! Tokenizer shared by the program, spec and query parsers.

use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Atom(String),
    /// An atom written in quotes; never treated as an operator.
    Quoted(String),
    Var(String),
    Int(i64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Bar,
    End,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    /// Whitespace (or a comment) directly precedes this token.
    pub spaced: bool,
}

const SYMBOL_CHARS: &str = "+-*/\\^<>=~:.?@#&$";

/// Operators recognized inside a run of symbol characters, longest first.
const KNOWN_SYMBOLS: &[&str] = &[
    "<=>", "==>", "=..", "=:=", "=\\=", "\\==", "@=<", "@>=", "@<", "@>", "=<", ">=", "==", "\\=", "=>", ":-", "<<",
    ">>", "=", "<", ">", "+", "-", "*", "/", "\\", "@", "~", ":",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    let mut spaced = true;

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            spaced = true;
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            spaced = true;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (l0, c0) = (line, col);
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(ParseError::syntax(l0, c0, "unterminated block comment"));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            spaced = true;
            continue;
        }

        let (tl, tc) = (line, col);
        let push = |out: &mut Vec<Token>, tok: Tok, spaced: bool| {
            out.push(Token { tok, line: tl, col: tc, spaced });
        };

        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<i64>().map_err(|_| ParseError::syntax(tl, tc, "integer literal out of range"))?;
            push(&mut out, Tok::Int(v), spaced);
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let tok = if c.is_uppercase() || c == '_' { Tok::Var(text) } else { Tok::Atom(text) };
            push(&mut out, tok, spaced);
        } else if c == '\'' {
            bump!();
            let mut text = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(ParseError::syntax(tl, tc, "unterminated quoted atom")),
                    Some('\'') => {
                        if chars.get(i + 1) == Some(&'\'') {
                            text.push('\'');
                            bump!();
                            bump!();
                        } else {
                            bump!();
                            break;
                        }
                    }
                    Some('\\') => {
                        bump!();
                        match chars.get(i) {
                            Some(&e) => {
                                text.push(e);
                                bump!();
                            }
                            None => return Err(ParseError::syntax(tl, tc, "unterminated quoted atom")),
                        }
                    }
                    Some(&ch) => {
                        text.push(ch);
                        bump!();
                    }
                }
            }
            push(&mut out, Tok::Quoted(text), spaced);
        } else if c == '.' && chars.get(i + 1).is_none_or(|n| n.is_whitespace() || *n == '%') {
            bump!();
            push(&mut out, Tok::End, spaced);
        } else if let Some(tok) = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            '|' => Some(Tok::Bar),
            _ => None,
        } {
            bump!();
            push(&mut out, tok, spaced);
        } else if SYMBOL_CHARS.contains(c) {
            let start = i;
            while i < chars.len() && SYMBOL_CHARS.contains(chars[i]) {
                // a '.' that ends a clause is not part of the run
                if chars[i] == '.' && chars.get(i + 1).is_none_or(|n| n.is_whitespace() || *n == '%') && i > start {
                    break;
                }
                bump!();
            }
            let run: String = chars[start..i].iter().collect();
            // split the run into known operators where possible
            let mut rest = run.as_str();
            let mut first = true;
            let mut offset = 0;
            while !rest.is_empty() {
                let piece = KNOWN_SYMBOLS
                    .iter()
                    .find(|k| rest.starts_with(**k))
                    .map(|k| k.to_string())
                    .unwrap_or_else(|| rest.to_string());
                out.push(Token {
                    tok: Tok::Atom(piece.clone()),
                    line: tl,
                    col: tc + offset,
                    spaced: if first { spaced } else { false },
                });
                first = false;
                offset += piece.chars().count();
                rest = &rest[piece.len()..];
            }
        } else {
            return Err(ParseError::syntax(tl, tc, format!("unexpected character `{c}`")));
        }
        spaced = false;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn splits_operator_runs() {
        assert_eq!(
            toks("X=-1."),
            vec![Tok::Var("X".into()), Tok::Atom("=".into()), Tok::Atom("-".into()), Tok::Int(1), Tok::End]
        );
        assert_eq!(toks("a<=>b")[1], Tok::Atom("<=>".into()));
        assert_eq!(toks("X=<Y")[1], Tok::Atom("=<".into()));
    }

    #[test]
    fn clause_end_and_comments() {
        let t = toks("p(X). % comment\n/* block */ q.");
        assert_eq!(t.iter().filter(|t| **t == Tok::End).count(), 2);
    }

    #[test]
    fn positions() {
        let t = tokenize("p.\n  q(X)").unwrap();
        assert_eq!((t[2].line, t[2].col), (2, 3));
    }
}
