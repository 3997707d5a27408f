//! Recursive-descent parser for the Turtle-star subset used by the
//! datasets: prefix/base directives, IRIs and prefixed names, blank node
//! labels, quoted literals with language tags, `;`/`,` lists, the `a`
//! keyword and arbitrarily nested `<< s p o >>` quoted triples.
//!
//! Local names may contain `#` so singleton properties such as `wd:P166#1`
//! read back as written.

use crate::error::ParseError;
use crate::graph::{Graph, Term, Triple};
use crate::vocab::RDF_TYPE;

use super::PrefixTable;

/// Parses a document into a fresh graph.
pub fn parse_turtle_star(text: &str, prefixes: &PrefixTable) -> Result<Graph, ParseError> {
    let mut graph = Graph::new();
    let mut prefixes = prefixes.clone();
    parse_turtle_star_into(text, &mut prefixes, &mut graph)?;
    Ok(graph)
}

/// Parses a document into an existing graph; `@prefix` directives are
/// recorded in `prefixes`.
pub fn parse_turtle_star_into(
    text: &str,
    prefixes: &mut PrefixTable,
    graph: &mut Graph,
) -> Result<(), ParseError> {
    Parser {
        src: text,
        pos: 0,
        prefixes,
        base: None,
        graph,
    }
    .document()
}

pub(crate) fn is_valid_local(local: &str) -> bool {
    if local.ends_with('.') || local.starts_with(['.', '-']) {
        return false;
    }
    local.chars().all(is_local_char)
}

fn is_local_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':' | '#' | '%')
}

fn is_prefix_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.')
}

struct Parser<'a, 'g> {
    src: &'a str,
    pos: usize,
    prefixes: &'g mut PrefixTable,
    base: Option<String>,
    graph: &'g mut Graph,
}

impl Parser<'_, '_> {
    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        self.skip_ws();
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected {s:?}")))
        }
    }

    fn eat_keyword_ci(&mut self, kw: &str) -> bool {
        let rest = self.rest();
        if rest.len() >= kw.len()
            && rest[..kw.len()].eq_ignore_ascii_case(kw)
            && rest[kw.len()..].starts_with(char::is_whitespace)
        {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn document(&mut self) -> Result<(), ParseError> {
        loop {
            self.skip_ws();
            if self.peek().is_none() {
                return Ok(());
            }
            if self.eat("@prefix") {
                self.prefix_decl()?;
                self.expect(".")?;
            } else if self.eat("@base") {
                self.base_decl()?;
                self.expect(".")?;
            } else if self.eat_keyword_ci("PREFIX") {
                self.prefix_decl()?;
            } else if self.eat_keyword_ci("BASE") {
                self.base_decl()?;
            } else {
                self.statement()?;
            }
        }
    }

    fn prefix_decl(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if is_prefix_char(c)) {
            self.bump();
        }
        let prefix = self.src[start..self.pos].to_owned();
        if !self.eat(":") {
            return Err(self.err("expected ':' after prefix name"));
        }
        self.skip_ws();
        let ns = self.iri_ref()?;
        self.prefixes.bind(&prefix, &ns);
        Ok(())
    }

    fn base_decl(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        self.base = Some(self.iri_ref()?);
        Ok(())
    }

    fn statement(&mut self) -> Result<(), ParseError> {
        let subject = self.subject()?;
        self.predicate_object_list(&subject)?;
        self.expect(".")
    }

    fn subject(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        let at = self.pos;
        let term = self.term()?;
        if term.is_literal() {
            self.pos = at;
            return Err(self.err("literal in subject position"));
        }
        Ok(term)
    }

    fn predicate_object_list(&mut self, subject: &Term) -> Result<(), ParseError> {
        loop {
            let predicate = self.verb()?;
            loop {
                self.skip_ws();
                let at = self.pos;
                let object = self.term()?;
                self.graph
                    .insert(Triple::new(subject.clone(), predicate.clone(), object))
                    .map_err(|source| ParseError::Graph { offset: at, source })?;
                self.skip_ws();
                if !self.eat(",") {
                    break;
                }
            }
            self.skip_ws();
            if !self.eat(";") {
                return Ok(());
            }
            // Trailing or repeated ';' before the terminating '.'.
            loop {
                self.skip_ws();
                if !self.eat(";") {
                    break;
                }
            }
            self.skip_ws();
            if matches!(self.peek(), Some('.') | Some(']') | None) {
                return Ok(());
            }
        }
    }

    fn verb(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        let rest = self.rest();
        if rest.starts_with('a') && rest[1..].starts_with(|c: char| c.is_whitespace() || c == '<' || c == '"')
        {
            self.pos += 1;
            return Ok(Term::iri(RDF_TYPE));
        }
        let at = self.pos;
        let term = self.term()?;
        if !term.is_iri() {
            self.pos = at;
            return Err(self.err("predicate must be an IRI"));
        }
        Ok(term)
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some('<') if self.rest().starts_with("<<") => self.quoted(),
            Some('<') => {
                let iri = self.iri_ref()?;
                Term::checked_iri(iri).map_err(|e| self.err(e.to_string()))
            }
            Some('"') | Some('\'') => self.literal(),
            Some('_') if self.rest().starts_with("_:") => {
                self.pos += 2;
                let start = self.pos;
                while matches!(self.peek(), Some(c) if is_prefix_char(c)) {
                    self.bump();
                }
                while self.src[start..self.pos].ends_with('.') {
                    self.pos -= 1;
                }
                if self.pos == start {
                    return Err(self.err("empty blank node label"));
                }
                Ok(Term::blank(&self.src[start..self.pos]))
            }
            Some('[') => Err(self.err("anonymous blank nodes are not supported")),
            Some('(') => Err(self.err("collections are not supported")),
            Some(c) if c.is_ascii_digit() || c == '+' || c == '-' => {
                Err(self.err("numeric literal shorthand is not supported"))
            }
            Some('>') => Err(self.err("unbalanced '>>'")),
            Some(_) => self.prefixed_name(),
        }
    }

    fn quoted(&mut self) -> Result<Term, ParseError> {
        let open = self.pos;
        self.pos += 2;
        let s = self.subject()?;
        let p = self.verb()?;
        self.skip_ws();
        let at = self.pos;
        let o = self.term()?;
        self.skip_ws();
        if !self.eat(">>") {
            return Err(if self.peek().is_none() {
                ParseError::Syntax {
                    offset: open,
                    message: "unbalanced '<<'".into(),
                }
            } else {
                self.err("expected '>>' closing quoted triple")
            });
        }
        let id = self
            .graph
            .intern_qt(s, p, o)
            .map_err(|source| ParseError::Graph { offset: at, source })?;
        Ok(Term::QtRef(id))
    }

    fn iri_ref(&mut self) -> Result<String, ParseError> {
        if !self.eat("<") {
            return Err(self.err("expected '<'"));
        }
        let start = self.pos;
        loop {
            match self.bump() {
                None => return Err(self.err("unterminated IRI")),
                Some('>') => break,
                Some(c) if c.is_whitespace() => return Err(self.err("whitespace in IRI")),
                Some(_) => {}
            }
        }
        let raw = &self.src[start..self.pos - 1];
        Ok(match &self.base {
            Some(base) if !raw.contains(':') => format!("{base}{raw}"),
            _ => raw.to_owned(),
        })
    }

    fn prefixed_name(&mut self) -> Result<Term, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if is_prefix_char(c)) {
            self.bump();
        }
        let prefix = self.src[start..self.pos].to_owned();
        if !self.eat(":") {
            self.pos = start;
            return Err(self.err("expected a term"));
        }
        let local_start = self.pos;
        while matches!(self.peek(), Some(c) if is_local_char(c)) {
            self.bump();
        }
        while self.pos > local_start && self.src[local_start..self.pos].ends_with('.') {
            self.pos -= 1;
        }
        let local = &self.src[local_start..self.pos];
        match self.prefixes.expand(&prefix, local) {
            Some(iri) => Ok(Term::iri(iri)),
            None => Err(ParseError::UnknownPrefix {
                offset: start,
                prefix,
            }),
        }
    }

    fn literal(&mut self) -> Result<Term, ParseError> {
        let quote = self.peek().unwrap();
        let long: String = std::iter::repeat_n(quote, 3).collect();
        let is_long = self.rest().starts_with(&long);
        self.pos += if is_long { 3 } else { 1 };
        let mut lexical = String::new();
        loop {
            if is_long && self.rest().starts_with(&long) {
                self.pos += 3;
                break;
            }
            match self.bump() {
                None => return Err(self.err("unterminated literal")),
                Some(c) if c == quote && !is_long => break,
                Some('\n') | Some('\r') if !is_long => {
                    return Err(self.err("newline in short literal"))
                }
                Some('\\') => lexical.push(self.escape()?),
                Some(c) => lexical.push(c),
            }
        }
        if self.eat("@") {
            let start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                self.bump();
            }
            if self.pos == start {
                return Err(self.err("empty language tag"));
            }
            let lang = self.src[start..self.pos].to_owned();
            return Ok(Term::lang_literal(lexical, lang));
        }
        if self.eat("^^") {
            // Datatypes are accepted but not retained.
            self.skip_ws();
            if self.peek() == Some('<') {
                self.iri_ref()?;
            } else {
                self.prefixed_name()?;
            }
        }
        Ok(Term::literal(lexical))
    }

    fn escape(&mut self) -> Result<char, ParseError> {
        let c = self.bump().ok_or_else(|| self.err("dangling escape"))?;
        Ok(match c {
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            'b' => '\u{8}',
            'f' => '\u{c}',
            '"' | '\'' | '\\' => c,
            'u' | 'U' => {
                let len = if c == 'u' { 4 } else { 8 };
                let hex = self
                    .rest()
                    .get(..len)
                    .ok_or_else(|| self.err("truncated unicode escape"))?;
                let code = u32::from_str_radix(hex, 16)
                    .ok()
                    .and_then(char::from_u32)
                    .ok_or_else(|| self.err("invalid unicode escape"))?;
                self.pos += len;
                code
            }
            _ => return Err(self.err(format!("unknown escape \\{c}"))),
        })
    }
}
