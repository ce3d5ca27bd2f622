//! Minimal S-expression reader for solver replies.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExp {
    Atom(String),
    /// String literal, without the surrounding quotes.
    Str(String),
    List(Vec<SExp>),
}

impl SExp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            SExp::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[SExp]> {
        match self {
            SExp::List(items) => Some(items),
            _ => None,
        }
    }
}

impl fmt::Display for SExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExp::Atom(a) => f.write_str(a),
            SExp::Str(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            SExp::List(items) => {
                f.write_str("(")?;
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Parses every top-level S-expression in `text`. `;` comments are skipped.
pub fn parse_all(text: &str) -> Result<Vec<SExp>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let mut out = Vec::new();
    loop {
        skip_blank(&chars, &mut pos);
        if pos >= chars.len() {
            return Ok(out);
        }
        out.push(parse_one(&chars, &mut pos)?);
    }
}

pub fn parse(text: &str) -> Result<SExp, String> {
    let mut all = parse_all(text)?;
    match all.len() {
        1 => Ok(all.pop().expect("one")),
        0 => Err("empty input".into()),
        n => Err(format!("expected one S-expression, found {n}")),
    }
}

fn skip_blank(chars: &[char], pos: &mut usize) {
    while *pos < chars.len() {
        if chars[*pos].is_whitespace() {
            *pos += 1;
        } else if chars[*pos] == ';' {
            while *pos < chars.len() && chars[*pos] != '\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
}

fn parse_one(chars: &[char], pos: &mut usize) -> Result<SExp, String> {
    skip_blank(chars, pos);
    match chars.get(*pos) {
        None => Err("unexpected end of input".into()),
        Some('(') => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                skip_blank(chars, pos);
                match chars.get(*pos) {
                    None => return Err("unbalanced `(`".into()),
                    Some(')') => {
                        *pos += 1;
                        return Ok(SExp::List(items));
                    }
                    Some(_) => items.push(parse_one(chars, pos)?),
                }
            }
        }
        Some(')') => Err(format!("unexpected `)` at offset {pos}")),
        Some('"') => {
            *pos += 1;
            let mut s = String::new();
            loop {
                match chars.get(*pos) {
                    None => return Err("unterminated string".into()),
                    Some('"') if chars.get(*pos + 1) == Some(&'"') => {
                        s.push('"');
                        *pos += 2;
                    }
                    Some('"') => {
                        *pos += 1;
                        return Ok(SExp::Str(s));
                    }
                    Some(c) => {
                        s.push(*c);
                        *pos += 1;
                    }
                }
            }
        }
        Some('|') => {
            *pos += 1;
            let start = *pos;
            while *pos < chars.len() && chars[*pos] != '|' {
                *pos += 1;
            }
            if *pos >= chars.len() {
                return Err("unterminated quoted symbol".into());
            }
            let sym: String = chars[start..*pos].iter().collect();
            *pos += 1;
            Ok(SExp::Atom(sym))
        }
        Some(_) => {
            let start = *pos;
            while *pos < chars.len()
                && !chars[*pos].is_whitespace()
                && !matches!(chars[*pos], '(' | ')' | '"' | ';')
            {
                *pos += 1;
            }
            Ok(SExp::Atom(chars[start..*pos].iter().collect()))
        }
    }
}

/// Paren depth after reading `text`, ignoring strings, quoted symbols and
/// comments. Used to decide when a multi-line reply is complete.
pub(crate) fn depth_delta(text: &str, mut depth: i64) -> i64 {
    let mut in_str = false;
    let mut in_quote = false;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if !in_quote => in_str = !in_str,
            '|' if !in_str => in_quote = !in_quote,
            ';' if !in_str && !in_quote => break,
            '(' if !in_str && !in_quote => depth += 1,
            ')' if !in_str && !in_quote => depth -= 1,
            _ => {}
        }
    }
    depth
}
