//! Atomic corpus tokens for graph terms.
//!
//! IRIs are written verbatim, blank nodes as `_:label`, literals as a quoted
//! lexical form with whitespace and `|` escaped as `\uXXXX`, and quoted
//! triples recursively as `<<s|p|o>>`. `|` is reserved as the quoted-triple
//! separator, so IRIs and blank node labels containing it are rejected.

use std::fmt::Write as _;

use crate::error::{GraphError, TokenError};
use crate::graph::{Graph, Term};

pub fn encode_term(graph: &Graph, term: &Term) -> Result<String, TokenError> {
    let mut out = String::new();
    encode_into(&mut out, graph, term)?;
    Ok(out)
}

fn check_raw(raw: &str, rendered: impl FnOnce() -> String) -> Result<(), TokenError> {
    if raw.contains('|') {
        return Err(TokenError::ReservedCharacter { token: rendered() });
    }
    if raw.chars().any(char::is_whitespace) {
        return Err(TokenError::Whitespace { token: rendered() });
    }
    Ok(())
}

fn encode_into(out: &mut String, graph: &Graph, term: &Term) -> Result<(), TokenError> {
    match term {
        Term::Iri(iri) => {
            check_raw(iri, || iri.to_string())?;
            if iri.starts_with(['<', '"', '_']) || iri.contains('>') {
                return Err(TokenError::Decode {
                    token: iri.to_string(),
                    message: "IRI would be ambiguous as a token".into(),
                });
            }
            out.push_str(iri);
        }
        Term::BlankNode(label) => {
            check_raw(label, || format!("_:{label}"))?;
            if label.contains('>') {
                return Err(TokenError::Decode {
                    token: format!("_:{label}"),
                    message: "'>' in blank node label".into(),
                });
            }
            out.push_str("_:");
            out.push_str(label);
        }
        Term::Literal { lexical, lang } => {
            out.push('"');
            for c in lexical.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    c if c == '|' || c.is_whitespace() || c.is_control() => {
                        let _ = write!(out, "\\u{:04X}", c as u32);
                    }
                    c => out.push(c),
                }
            }
            out.push('"');
            if let Some(lang) = lang {
                out.push('@');
                out.push_str(lang);
            }
        }
        Term::QtRef(id) => {
            let qt = graph.qt(*id).ok_or_else(|| TokenError::Decode {
                token: id.to_string(),
                message: "unknown quoted triple".into(),
            })?;
            out.push_str("<<");
            encode_into(out, graph, &qt.subject)?;
            out.push('|');
            encode_into(out, graph, &qt.predicate)?;
            out.push('|');
            encode_into(out, graph, &qt.object)?;
            out.push_str(">>");
        }
    }
    Ok(())
}

/// Graph-independent decoded form of a token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenTerm {
    Iri(String),
    Blank(String),
    Literal { lexical: String, lang: Option<String> },
    Quoted(Box<[TokenTerm; 3]>),
}

impl TokenTerm {
    /// Materializes the term in `graph`, interning quoted triples.
    pub fn into_term(self, graph: &mut Graph) -> Result<Term, GraphError> {
        Ok(match self {
            TokenTerm::Iri(iri) => Term::checked_iri(iri)?,
            TokenTerm::Blank(label) => Term::blank(label),
            TokenTerm::Literal { lexical, lang } => match lang {
                Some(lang) => Term::lang_literal(lexical, lang),
                None => Term::literal(lexical),
            },
            TokenTerm::Quoted(parts) => {
                let [s, p, o] = *parts;
                let s = s.into_term(graph)?;
                let p = p.into_term(graph)?;
                let o = o.into_term(graph)?;
                Term::QtRef(graph.intern_qt(s, p, o)?)
            }
        })
    }
}

pub fn decode_token(token: &str) -> Result<TokenTerm, TokenError> {
    let mut d = Decoder { src: token, pos: 0 };
    let term = d.term()?;
    if d.pos != token.len() {
        return Err(d.err("trailing characters"));
    }
    Ok(term)
}

struct Decoder<'a> {
    src: &'a str,
    pos: usize,
}

impl Decoder<'_> {
    fn err(&self, message: &str) -> TokenError {
        TokenError::Decode {
            token: self.src.to_owned(),
            message: format!("{message} at byte {}", self.pos),
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn term(&mut self) -> Result<TokenTerm, TokenError> {
        if self.rest().starts_with("<<") {
            self.pos += 2;
            let s = self.term()?;
            self.sep('|')?;
            let p = self.term()?;
            self.sep('|')?;
            let o = self.term()?;
            if !self.rest().starts_with(">>") {
                return Err(self.err("expected '>>'"));
            }
            self.pos += 2;
            return Ok(TokenTerm::Quoted(Box::new([s, p, o])));
        }
        if self.rest().starts_with('"') {
            return self.literal();
        }
        let end = self.rest().find(['|', '>']).unwrap_or(self.rest().len());
        let raw = self.rest()[..end].to_owned();
        if raw.is_empty() {
            return Err(self.err("empty term"));
        }
        self.pos += end;
        Ok(match raw.strip_prefix("_:") {
            Some(label) => TokenTerm::Blank(label.to_owned()),
            None => TokenTerm::Iri(raw),
        })
    }

    fn sep(&mut self, c: char) -> Result<(), TokenError> {
        if self.rest().starts_with(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err("expected '|'"))
        }
    }

    fn literal(&mut self) -> Result<TokenTerm, TokenError> {
        self.pos += 1;
        let mut lexical = String::new();
        let mut chars = self.rest().char_indices();
        let close = loop {
            match chars.next() {
                None => return Err(self.err("unterminated literal")),
                Some((i, '"')) => break i,
                Some((_, '\\')) => match chars.next() {
                    Some((_, '"')) => lexical.push('"'),
                    Some((_, '\\')) => lexical.push('\\'),
                    Some((i, 'u')) => {
                        let hex = self
                            .rest()
                            .get(i + 1..i + 5)
                            .ok_or_else(|| self.err("truncated escape"))?;
                        let c = u32::from_str_radix(hex, 16)
                            .ok()
                            .and_then(char::from_u32)
                            .ok_or_else(|| self.err("bad escape"))?;
                        lexical.push(c);
                        for _ in 0..4 {
                            chars.next();
                        }
                    }
                    _ => return Err(self.err("bad escape")),
                },
                Some((_, c)) => lexical.push(c),
            }
        };
        self.pos += close + 1;
        let lang = if self.rest().starts_with('@') {
            self.pos += 1;
            let end = self
                .rest()
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                .unwrap_or(self.rest().len());
            if end == 0 {
                return Err(self.err("empty language tag"));
            }
            let lang = self.rest()[..end].to_owned();
            self.pos += end;
            Some(lang)
        } else {
            None
        };
        Ok(TokenTerm::Literal { lexical, lang })
    }
}
