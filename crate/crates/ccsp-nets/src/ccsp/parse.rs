//! Concrete syntax for CCSP terms.
//!
//! ```text
//! P ::= 0{A} | a.P | P + P | P || P | R{a->b, a->c}(P) | X{A} | X
//!     | rec X{A} { X = P ; Y{B} = P } | (P)
//! ```
//!
//! Prefix binds tighter than `+`, which binds tighter than `||`. Action and
//! variable names are identifiers; `rec` and `R` are reserved. A bare
//! variable `X` resolves to the innermost enclosing binder of that name; the
//! equation for the header variable may omit its alphabet, all other
//! equations spell theirs out. Bound variables that would shadow an
//! enclosing binder are renamed apart while parsing, so substitution never
//! captures. `#` starts a comment that runs to the end of the line.

use std::collections::BTreeSet;
use std::rc::Rc;

use thiserror::Error;

use super::{RecSpec, Renaming, Term, Var};
use crate::net::{Action, Alphabet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Zero,
    KwRec,
    KwR,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Plus,
    Par,
    Dot,
    Comma,
    Arrow,
    Eq,
    Semi,
    Eof,
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '0' => {
                chars.next();
                col += 1;
                out.push((Tok::Zero, pos));
            }
            '{' => {
                chars.next();
                col += 1;
                out.push((Tok::LBrace, pos));
            }
            '}' => {
                chars.next();
                col += 1;
                out.push((Tok::RBrace, pos));
            }
            '(' => {
                chars.next();
                col += 1;
                out.push((Tok::LParen, pos));
            }
            ')' => {
                chars.next();
                col += 1;
                out.push((Tok::RParen, pos));
            }
            '+' => {
                chars.next();
                col += 1;
                out.push((Tok::Plus, pos));
            }
            '.' => {
                chars.next();
                col += 1;
                out.push((Tok::Dot, pos));
            }
            ',' => {
                chars.next();
                col += 1;
                out.push((Tok::Comma, pos));
            }
            '=' => {
                chars.next();
                col += 1;
                out.push((Tok::Eq, pos));
            }
            ';' => {
                chars.next();
                col += 1;
                out.push((Tok::Semi, pos));
            }
            '|' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'|') {
                    chars.next();
                    col += 1;
                    out.push((Tok::Par, pos));
                } else {
                    return Err(ParseError {
                        line: pos.line,
                        col: pos.col,
                        msg: "expected `||`".into(),
                    });
                }
            }
            '-' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'>') {
                    chars.next();
                    col += 1;
                    out.push((Tok::Arrow, pos));
                } else {
                    return Err(ParseError {
                        line: pos.line,
                        col: pos.col,
                        msg: "expected `->`".into(),
                    });
                }
            }
            c if c.is_ascii_alphabetic() => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        ident.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let tok = match ident.as_str() {
                    "rec" => Tok::KwRec,
                    "R" => Tok::KwR,
                    _ => Tok::Ident(ident),
                };
                out.push((tok, pos));
            }
            other => {
                return Err(ParseError {
                    line: pos.line,
                    col: pos.col,
                    msg: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, Pos)>,
    pos: usize,
    /// Innermost-last stack of (source name, resolved variable).
    env: Vec<(String, Var)>,
    used_names: BTreeSet<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)].0
    }

    fn here(&self) -> Pos {
        self.tokens[self.pos].1
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        let p = self.here();
        ParseError { line: p.line, col: p.col, msg: msg.into() }
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn alphabet(&mut self) -> Result<Alphabet, ParseError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = Alphabet::new();
        if *self.peek() == Tok::RBrace {
            self.bump();
            return Ok(out);
        }
        loop {
            out.insert(self.ident("action name")?);
            match self.bump() {
                Tok::Comma => continue,
                Tok::RBrace => break,
                _ => return Err(self.error("expected `,` or `}` in alphabet")),
            }
        }
        Ok(out)
    }

    fn renaming(&mut self) -> Result<Renaming, ParseError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut pairs: BTreeSet<(Action, Action)> = BTreeSet::new();
        if *self.peek() == Tok::RBrace {
            self.bump();
            return Ok(Renaming::new(pairs));
        }
        loop {
            let from = self.ident("action name")?;
            self.expect(Tok::Arrow, "`->`")?;
            let to = self.ident("action name")?;
            pairs.insert((from, to));
            match self.bump() {
                Tok::Comma => continue,
                Tok::RBrace => break,
                _ => return Err(self.error("expected `,` or `}` in renaming")),
            }
        }
        Ok(Renaming::new(pairs))
    }

    fn parallel(&mut self) -> Result<Term, ParseError> {
        let mut t = self.choice()?;
        while *self.peek() == Tok::Par {
            self.bump();
            let rhs = self.choice()?;
            t = Term::parallel(t, rhs);
        }
        Ok(t)
    }

    fn choice(&mut self) -> Result<Term, ParseError> {
        let mut t = self.prefixed()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let rhs = self.prefixed()?;
            t = Term::choice(t, rhs);
        }
        Ok(t)
    }

    fn prefixed(&mut self) -> Result<Term, ParseError> {
        if matches!(self.peek(), Tok::Ident(_)) && *self.peek2() == Tok::Dot {
            let action = self.ident("action name")?;
            self.bump(); // the dot
            let tail = self.prefixed()?;
            return Ok(Term::prefix(action, tail));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Zero => {
                self.bump();
                let a = self.alphabet()?;
                Ok(Term::Inaction(a))
            }
            Tok::KwR => {
                self.bump();
                let r = self.renaming()?;
                self.expect(Tok::LParen, "`(` after renaming")?;
                let inner = self.parallel()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Term::rename(r, inner))
            }
            Tok::KwRec => {
                self.bump();
                self.rec_term()
            }
            Tok::LParen => {
                self.bump();
                let inner = self.parallel()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LBrace {
                    let a = self.alphabet()?;
                    // An explicit reference still resolves against binders so
                    // that renamed-apart variables keep a single identity.
                    for (src, var) in self.env.iter().rev() {
                        if *src == name && var.alphabet == a {
                            return Ok(Term::Var(var.clone()));
                        }
                    }
                    Ok(Term::Var(Var { name, alphabet: a }))
                } else {
                    for (src, var) in self.env.iter().rev() {
                        if *src == name {
                            return Ok(Term::Var(var.clone()));
                        }
                    }
                    Err(self.error(format!(
                        "unknown variable `{name}` (bare variables must be bound by an enclosing `rec`)"
                    )))
                }
            }
            _ => Err(self.error("expected a term")),
        }
    }

    /// Scans ahead over the equation block to find the left-hand sides, so
    /// that mutual recursion can resolve forward references.
    fn prescan_equations(&self) -> Result<Vec<(String, Option<Alphabet>)>, ParseError> {
        let mut out = Vec::new();
        let mut ix = self.pos;
        let mut depth = 0i32;
        let mut at_eqn_start = true;
        while ix < self.tokens.len() {
            let tok = &self.tokens[ix].0;
            if at_eqn_start && depth == 0 {
                if let Tok::Ident(name) = tok {
                    let mut alpha = None;
                    let mut j = ix + 1;
                    if self.tokens.get(j).map(|t| &t.0) == Some(&Tok::LBrace) {
                        let mut items = BTreeSet::new();
                        j += 1;
                        loop {
                            match self.tokens.get(j).map(|t| t.0.clone()) {
                                Some(Tok::Ident(a)) => {
                                    items.insert(a);
                                    j += 1;
                                }
                                Some(Tok::Comma) => j += 1,
                                Some(Tok::RBrace) => {
                                    j += 1;
                                    break;
                                }
                                _ => {
                                    return Err(self.error("malformed alphabet in equation"));
                                }
                            }
                        }
                        alpha = Some(items);
                    }
                    if self.tokens.get(j).map(|t| &t.0) != Some(&Tok::Eq) {
                        return Err(self.error("expected `=` in equation"));
                    }
                    out.push((name.clone(), alpha));
                    at_eqn_start = false;
                }
            }
            match tok {
                Tok::LBrace | Tok::LParen => depth += 1,
                Tok::RBrace => {
                    if depth == 0 {
                        return Ok(out);
                    }
                    depth -= 1;
                }
                Tok::RParen => depth -= 1,
                Tok::Semi if depth == 0 => at_eqn_start = true,
                Tok::Eof => break,
                _ => {}
            }
            ix += 1;
        }
        Err(self.error("unterminated equation block"))
    }

    fn fresh_name(&mut self, base: &str) -> String {
        let mut i = 1;
        loop {
            let candidate = format!("{base}_{i}");
            if !self.used_names.contains(&candidate) {
                self.used_names.insert(candidate.clone());
                return candidate;
            }
            i += 1;
        }
    }

    fn rec_term(&mut self) -> Result<Term, ParseError> {
        let header_name = self.ident("variable name")?;
        let header_alpha = self.alphabet()?;
        self.expect(Tok::LBrace, "`{` to open the equation block")?;

        let lhs = self.prescan_equations()?;
        if lhs.is_empty() {
            return Err(self.error("recursive specification has no equations"));
        }
        let mut bound: Vec<(String, Var)> = Vec::new();
        for (name, alpha) in &lhs {
            if bound.iter().any(|(n, _)| n == name) {
                return Err(self.error(format!("duplicate equation for `{name}`")));
            }
            let alpha = match alpha {
                Some(a) => a.clone(),
                None if *name == header_name => header_alpha.clone(),
                None => {
                    return Err(self.error(format!(
                        "equation for `{name}` needs an explicit alphabet"
                    )))
                }
            };
            let shadows = self.env.iter().any(|(src, v)| src == name || v.name == *name);
            let actual = if shadows { self.fresh_name(name) } else { name.clone() };
            bound.push((name.clone(), Var { name: actual, alphabet: alpha }));
        }
        let header_var = bound
            .iter()
            .find(|(src, v)| *src == header_name && v.alphabet == header_alpha)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| {
                self.error(format!(
                    "header variable `{header_name}` has no matching equation"
                ))
            })?;

        let depth_before = self.env.len();
        self.env.extend(bound.iter().cloned());

        let mut equations = std::collections::BTreeMap::new();
        for (i, (src_name, var)) in bound.iter().enumerate() {
            let name = self.ident("variable name")?;
            if name != *src_name {
                return Err(self.error(format!(
                    "equation order mismatch: expected `{src_name}`, found `{name}`"
                )));
            }
            if *self.peek() == Tok::LBrace {
                self.alphabet()?; // already collected by the prescan
            }
            self.expect(Tok::Eq, "`=`")?;
            let body = self.parallel()?;
            equations.insert(var.clone(), body);
            let last = i + 1 == bound.len();
            match self.peek() {
                Tok::Semi => {
                    self.bump();
                }
                Tok::RBrace if last => {}
                _ if last => {}
                _ => return Err(self.error("expected `;` between equations")),
            }
        }
        self.expect(Tok::RBrace, "`}` to close the equation block")?;
        self.env.truncate(depth_before);

        Ok(Term::Rec(header_var, Rc::new(RecSpec { equations })))
    }
}

/// Parses a single CCSP term.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let tokens = lex(text)?;
    let used_names = tokens
        .iter()
        .filter_map(|(t, _)| match t {
            Tok::Ident(s) => Some(s.clone()),
            _ => None,
        })
        .collect();
    let mut parser = Parser { tokens, pos: 0, env: Vec::new(), used_names };
    let term = parser.parallel()?;
    if *parser.peek() != Tok::Eof {
        return Err(parser.error("trailing input after term"));
    }
    Ok(term)
}
