//! The line-based textual net format.
//!
//! ```text
//! net <name>
//! alphabet <action> ...
//! place <id> [init <count>]
//! trans <id> label <action> [in <place>[:<weight>] ...] [out <place>[:<weight>] ...]
//! ```
//!
//! Omitted `init` defaults to 0 and omitted weights default to 1. Ids are
//! whitespace-free strings; an id may contain `:` as long as its final
//! `:`-separated segment is not a bare number (weights are split off at the
//! rightmost `:`). Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::multiset::Multiset;
use crate::net::{Alphabet, Marking, Net};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetParseError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: unknown place `{id}`")]
    UnknownPlace { line: usize, id: String },
    #[error("line {line}: label `{label}` is not in the alphabet")]
    LabelOutsideAlphabet { line: usize, label: String },
    #[error("missing `net` header")]
    MissingHeader,
}

fn err(line: usize, msg: impl Into<String>) -> NetParseError {
    NetParseError::Malformed { line, msg: msg.into() }
}

fn split_weight(token: &str) -> (&str, u64) {
    if let Some(ix) = token.rfind(':') {
        let (id, w) = (&token[..ix], &token[ix + 1..]);
        if let Ok(n) = w.parse::<u64>() {
            if !id.is_empty() {
                return (id, n);
            }
        }
    }
    (token, 1)
}

/// Parses a net from its textual form.
pub fn parse_net(text: &str) -> Result<(String, Net), NetParseError> {
    let mut name: Option<String> = None;
    let mut alphabet: Option<Alphabet> = None;
    let mut net: Option<Net> = None;
    let mut initial: Marking = Multiset::new();

    for (ix, raw) in text.lines().enumerate() {
        let lineno = ix + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut words = line.split_whitespace();
        let keyword = words.next().unwrap();
        match keyword {
            "net" => {
                if name.is_some() {
                    return Err(err(lineno, "duplicate `net` header"));
                }
                let n = words.next().ok_or_else(|| err(lineno, "missing net name"))?;
                if words.next().is_some() {
                    return Err(err(lineno, "trailing tokens after net name"));
                }
                name = Some(n.to_string());
            }
            "alphabet" => {
                if alphabet.is_some() {
                    return Err(err(lineno, "duplicate `alphabet` line"));
                }
                let mut actions = BTreeSet::new();
                for w in words {
                    if !is_action_name(w) {
                        return Err(err(lineno, format!("invalid action name `{w}`")));
                    }
                    actions.insert(w.to_string());
                }
                alphabet = Some(actions);
            }
            "place" => {
                let alphabet = alphabet
                    .as_ref()
                    .ok_or_else(|| err(lineno, "`place` before `alphabet`"))?;
                let n = net.get_or_insert_with(|| Net::new(alphabet.clone()));
                let id = words.next().ok_or_else(|| err(lineno, "missing place id"))?;
                let place = n.add_place(id).map_err(|_| NetParseError::DuplicateId {
                    line: lineno,
                    id: id.to_string(),
                })?;
                match words.next() {
                    None => {}
                    Some("init") => {
                        let count: u64 = words
                            .next()
                            .ok_or_else(|| err(lineno, "missing init count"))?
                            .parse()
                            .map_err(|_| err(lineno, "init count is not a number"))?;
                        initial.insert(place, count);
                        if words.next().is_some() {
                            return Err(err(lineno, "trailing tokens after init count"));
                        }
                    }
                    Some(w) => return Err(err(lineno, format!("unexpected token `{w}`"))),
                }
            }
            "trans" => {
                let alphabet = alphabet
                    .as_ref()
                    .ok_or_else(|| err(lineno, "`trans` before `alphabet`"))?;
                let n = net.get_or_insert_with(|| Net::new(alphabet.clone()));
                let id = words.next().ok_or_else(|| err(lineno, "missing transition id"))?;
                match words.next() {
                    Some("label") => {}
                    _ => return Err(err(lineno, "expected `label`")),
                }
                let label = words.next().ok_or_else(|| err(lineno, "missing label"))?;
                if !alphabet.contains(label) {
                    return Err(NetParseError::LabelOutsideAlphabet {
                        line: lineno,
                        label: label.to_string(),
                    });
                }
                let mut pre: Marking = Multiset::new();
                let mut post: Marking = Multiset::new();
                let mut side: Option<bool> = None; // false = in, true = out
                for w in words {
                    match w {
                        "in" => side = Some(false),
                        "out" => side = Some(true),
                        token => {
                            let (pid, weight) = split_weight(token);
                            let place = n.place_by_name(pid).ok_or_else(|| {
                                NetParseError::UnknownPlace { line: lineno, id: pid.to_string() }
                            })?;
                            match side {
                                Some(false) => pre.insert(place, weight),
                                Some(true) => post.insert(place, weight),
                                None => {
                                    return Err(err(
                                        lineno,
                                        format!("arc `{token}` before `in`/`out`"),
                                    ))
                                }
                            }
                        }
                    }
                }
                n.add_transition(id, label, pre, post)
                    .map_err(|_| NetParseError::DuplicateId { line: lineno, id: id.to_string() })?;
            }
            other => return Err(err(lineno, format!("unknown directive `{other}`"))),
        }
    }

    let name = name.ok_or(NetParseError::MissingHeader)?;
    let mut net = net.unwrap_or_else(|| Net::new(alphabet.clone().unwrap_or_default()));
    net.set_initial(initial).expect("initial marking references parsed places");
    Ok((name, net))
}

fn is_action_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Emits a net in the textual format. Output is deterministic: places and
/// transitions appear in construction order, the alphabet sorted.
pub fn emit_net(name: &str, net: &Net) -> String {
    let mut out = String::new();
    out.push_str(&format!("net {name}\n"));
    let actions: Vec<&str> = net.alphabet().iter().map(|a| a.as_str()).collect();
    out.push_str(&format!("alphabet {}\n", actions.join(" ")));
    for (id, place) in net.places() {
        let init = net.initial_marking().count(&id);
        if init > 0 {
            out.push_str(&format!("place {} init {}\n", place.name, init));
        } else {
            out.push_str(&format!("place {}\n", place.name));
        }
    }
    for (_, tr) in net.transitions() {
        let mut line = format!("trans {} label {}", tr.name, tr.label);
        if !tr.pre.is_empty() {
            line.push_str(" in");
            for (p, w) in tr.pre.iter() {
                if w == 1 {
                    line.push_str(&format!(" {}", net.place(*p).name));
                } else {
                    line.push_str(&format!(" {}:{}", net.place(*p).name, w));
                }
            }
        }
        if !tr.post.is_empty() {
            line.push_str(" out");
            for (p, w) in tr.post.iter() {
                if w == 1 {
                    line.push_str(&format!(" {}", net.place(*p).name));
                } else {
                    line.push_str(&format!(" {}:{}", net.place(*p).name, w));
                }
            }
        }
        line.push('\n');
        out.push_str(&line);
    }
    out
}
