use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::Pos;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Num(String),
    Ident(String),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const SYMBOLS: &[(&str, &str)] = &[
    (":=", ":="),
    ("<=", "<="),
    (">=", ">="),
    ("==", "=="),
    ("&&", "&&"),
    ("||", "||"),
    ("@[", "@["),
    ("≤", "<="),
    ("≥", ">="),
    ("∧", "&&"),
    ("∨", "||"),
    ("¬", "!"),
    ("<", "<"),
    (">", ">"),
    ("=", "=="),
    ("+", "+"),
    ("-", "-"),
    ("−", "-"),
    ("*", "*"),
    ("/", "/"),
    ("(", "("),
    (")", ")"),
    ("[", "["),
    ("]", "]"),
    (";", ";"),
    (",", ","),
    (":", ":"),
    ("~", "~"),
    ("!", "!"),
];

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut rest = src;
    while let Some(ch) = rest.chars().next() {
        let pos = Pos { line, col };
        if ch == '\n' {
            line += 1;
            col = 1;
            rest = &rest[1..];
            continue;
        }
        if ch.is_whitespace() {
            col += 1;
            rest = &rest[ch.len_utf8()..];
            continue;
        }
        if ch == '#' {
            let end = rest.find('\n').unwrap_or(rest.len());
            col += rest[..end].chars().count() as u32;
            rest = &rest[end..];
            continue;
        }
        if ch.is_ascii_digit() || (ch == '.' && rest[1..].starts_with(|c: char| c.is_ascii_digit())) {
            let end = rest.find(|c: char| !(c.is_ascii_digit() || c == '.')).unwrap_or(rest.len());
            let text = &rest[..end];
            if text.matches('.').count() > 1 {
                return Err(Error::Syntax { line, col, msg: alloc::format!("malformed number `{text}`") });
            }
            out.push(Token { tok: Tok::Num(text.to_string()), pos });
            col += end as u32;
            rest = &rest[end..];
            continue;
        }
        if ch.is_alphabetic() || ch == '_' {
            let end = rest.find(|c: char| !(c.is_alphanumeric() || c == '_' || c == '\'')).unwrap_or(rest.len());
            out.push(Token { tok: Tok::Ident(rest[..end].to_string()), pos });
            col += rest[..end].chars().count() as u32;
            rest = &rest[end..];
            continue;
        }
        match SYMBOLS.iter().find(|(s, _)| rest.starts_with(s)) {
            Some((s, canon)) => {
                out.push(Token { tok: Tok::Sym(canon), pos });
                col += s.chars().count() as u32;
                rest = &rest[s.len()..];
            }
            None => {
                return Err(Error::Syntax { line, col, msg: alloc::format!("unexpected character `{ch}`") });
            }
        }
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}
