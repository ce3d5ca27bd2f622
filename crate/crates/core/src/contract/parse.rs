//! Lexer and recursive-descent parser for the contract format.
//!
//! ```text
//! contract := (decl | section)*
//! decl     := ("input" | "state") name ":" ("bool" | "int" | "real") ";"
//! section  := ("assume" | "init" | "trans") expr ";"
//! ```
//!
//! Precedence from loosest to tightest: `if .. then .. else ..`, `=>` (right
//! associative), `or`, `and`, `not`, comparisons (non-associative), `+ -`,
//! `* div mod`, unary minus, postfix prime. `--` starts a line comment.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::ast::{BinOp, Contract, Expr, Literal, Section, Sort, UnOp, VarDecl, VarKind};
use crate::error::ParseError;

const KEYWORDS: &[&str] = &[
    "input", "state", "assume", "init", "trans", "bool", "int", "real", "true", "false", "and",
    "or", "not", "if", "then", "else", "div", "mod",
];

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Decimal(BigRational),
    Prime,
    Colon,
    Semi,
    LParen,
    RParen,
    Arrow,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Decimal(_) => "decimal literal".into(),
            Tok::Prime => "`'`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Arrow => "`=>`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Ne => "`<>`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };

        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }

        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '.')
            {
                advance(1, &mut i, &mut col);
            }
            if chars.get(i) == Some(&'$') {
                return Err(ParseError::new(
                    line,
                    col,
                    "`$` is reserved and may not appear in identifiers",
                ));
            }
            out.push(Spanned {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: start_line,
                col: start_col,
            });
            continue;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(1, &mut i, &mut col);
            }
            let whole: String = chars[start..i].iter().collect();
            if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                advance(1, &mut i, &mut col);
                let frac_start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance(1, &mut i, &mut col);
                }
                let frac: String = chars[frac_start..i].iter().collect();
                let numer = BigInt::from_str(&format!("{whole}{frac}")).expect("digits");
                let denom = BigInt::from(10).pow(frac.len() as u32);
                Tok::Decimal(BigRational::new(numer, denom))
            } else {
                Tok::Int(BigInt::from_str(&whole).expect("digits"))
            }
        } else {
            let next = chars.get(i + 1).copied();
            let (tok, len) = match (c, next) {
                ('=', Some('>')) => (Tok::Arrow, 2),
                ('<', Some('>')) => (Tok::Ne, 2),
                ('<', Some('=')) => (Tok::Le, 2),
                ('>', Some('=')) => (Tok::Ge, 2),
                ('=', _) => (Tok::Eq, 1),
                ('<', _) => (Tok::Lt, 1),
                ('>', _) => (Tok::Gt, 1),
                ('\'', _) => (Tok::Prime, 1),
                (':', _) => (Tok::Colon, 1),
                (';', _) => (Tok::Semi, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                ('*', _) => (Tok::Star, 1),
                _ => {
                    return Err(ParseError::new(line, col, format!("unexpected character `{c}`")))
                }
            };
            advance(len, &mut i, &mut col);
            tok
        };
        out.push(Spanned { tok, line: start_line, col: start_col });
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError::new(s.line, s.col, message)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            )))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{kw}`, found {}", self.peek().describe())))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            Tok::Ident(s) => Err(self.error(format!("`{s}` is a keyword, expected an identifier"))),
            other => Err(self.error(format!("expected an identifier, found {}", other.describe()))),
        }
    }

    fn contract(&mut self) -> Result<Contract, ParseError> {
        let mut decls = Vec::new();
        let mut sections: [Vec<Expr>; 3] = Default::default();
        loop {
            let kind = match self.peek() {
                Tok::Eof => break,
                Tok::Ident(s) if s == "input" => Some(VarKind::Input),
                Tok::Ident(s) if s == "state" => Some(VarKind::State),
                _ => None,
            };
            if let Some(kind) = kind {
                self.bump();
                let name = self.ident()?;
                self.expect(Tok::Colon)?;
                let sort = if self.eat_kw("bool") {
                    Sort::Bool
                } else if self.eat_kw("int") {
                    Sort::Int
                } else if self.eat_kw("real") {
                    Sort::Real
                } else {
                    return Err(self.error(format!(
                        "expected a sort (bool, int, real), found {}",
                        self.peek().describe()
                    )));
                };
                self.expect(Tok::Semi)?;
                decls.push(VarDecl { name, sort, kind });
                continue;
            }
            let section = if self.eat_kw("assume") {
                Section::Assume
            } else if self.eat_kw("init") {
                Section::Init
            } else if self.eat_kw("trans") {
                Section::Trans
            } else {
                return Err(self.error(format!(
                    "expected a declaration or section, found {}",
                    self.peek().describe()
                )));
            };
            let e = self.expr()?;
            self.expect(Tok::Semi)?;
            sections[section as usize].push(e);
        }
        let [assume, init, trans] = sections;
        Ok(Contract {
            decls,
            assumption: conjoin(assume),
            initial: conjoin(init),
            transition: conjoin(trans),
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        if self.eat_kw("if") {
            let c = self.expr()?;
            self.expect_kw("then")?;
            let t = self.expr()?;
            self.expect_kw("else")?;
            let e = self.expr()?;
            return Ok(Expr::Ite(Box::new(c), Box::new(t), Box::new(e)));
        }
        self.implies()
    }

    fn implies(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = if self.is_kw("if") { self.expr()? } else { self.implies()? };
            return Ok(Expr::bin(BinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and()?;
        while self.eat_kw("or") {
            let rhs = self.and()?;
            lhs = Expr::bin(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.not()?;
        while self.eat_kw("and") {
            let rhs = self.not()?;
            lhs = Expr::bin(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<Expr, ParseError> {
        if self.eat_kw("not") {
            return Ok(Expr::not(self.not()?));
        }
        self.comparison()
    }

    fn comparison_op(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return None,
        })
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.additive()?;
        if let Some(op) = self.comparison_op() {
            self.bump();
            let rhs = self.additive()?;
            if self.comparison_op().is_some() {
                return Err(self.error("comparison operators are non-associative; add parentheses"));
            }
            return Ok(Expr::bin(op, lhs, rhs));
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Ident(s) if s == "div" => BinOp::Div,
                Tok::Ident(s) if s == "mod" => BinOp::Mod,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            // `-` directly applied to a numeral is a negative literal.
            match self.peek().clone() {
                Tok::Int(v) => {
                    self.bump();
                    return Ok(Expr::Lit(Literal::Int(-v)));
                }
                Tok::Decimal(v) => {
                    self.bump();
                    return Ok(Expr::Lit(Literal::Real(-v)));
                }
                _ => return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?))),
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Lit(Literal::Int(v)))
            }
            Tok::Decimal(v) => {
                self.bump();
                Ok(Expr::Lit(Literal::Real(v)))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::Lit(Literal::Bool(s == "true")))
            }
            Tok::Ident(s) if s == "real" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Unary(UnOp::ToReal, Box::new(e)))
            }
            Tok::Ident(s) if s == "if" => self.expr(),
            _ => {
                let name = self.ident()?;
                let primed = if *self.peek() == Tok::Prime {
                    self.bump();
                    true
                } else {
                    false
                };
                Ok(Expr::Var { name, primed })
            }
        }
    }
}

fn conjoin(parts: Vec<Expr>) -> Expr {
    parts.into_iter().reduce(Expr::and).unwrap_or_else(Expr::tt)
}

/// Parses contract source text. Only syntax is checked here; scoping and
/// sorts are the job of [`typecheck`](super::typecheck).
pub fn parse_contract(text: &str) -> Result<Contract, ParseError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.contract()
}

/// Parses a standalone expression (used by tests and tooling).
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(format!("unexpected {} after expression", p.peek().describe())));
    }
    Ok(e)
}
