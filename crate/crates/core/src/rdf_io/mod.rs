//! Readers and writers for every on-disk format the toolkit touches.

mod corpus;
mod table;
mod token;
mod turtle;
mod wd50k;
mod write;

use indexmap::IndexMap;

pub use corpus::{read_corpus, write_corpus};
pub use table::{read_embeddings, write_embeddings};
pub use token::{decode_token, encode_term, TokenTerm};
pub use turtle::{parse_turtle_star, parse_turtle_star_into};
pub use wd50k::{parse_wd50k, parse_wd50k_row, wd50k_field, wd50k_term};
pub use write::{serialize, write_term_ntriples, Format};

use crate::vocab::DEFAULT_PREFIXES;

/// Prefix to namespace bindings used for reading and writing Turtle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixTable {
    map: IndexMap<String, String>,
}

impl Default for PrefixTable {
    fn default() -> Self {
        let mut table = PrefixTable::empty();
        for (p, ns) in DEFAULT_PREFIXES {
            table.bind(p, ns);
        }
        table
    }
}

impl PrefixTable {
    pub fn empty() -> Self {
        PrefixTable {
            map: IndexMap::new(),
        }
    }

    /// Binds `prefix`, replacing any earlier binding (Turtle `@prefix`
    /// semantics). The table never holds the same prefix twice.
    pub fn bind(&mut self, prefix: &str, namespace: &str) {
        self.map.insert(prefix.to_owned(), namespace.to_owned());
    }

    pub fn namespace(&self, prefix: &str) -> Option<&str> {
        self.map.get(prefix).map(String::as_str)
    }

    pub fn expand(&self, prefix: &str, local: &str) -> Option<String> {
        self.namespace(prefix).map(|ns| format!("{ns}{local}"))
    }

    /// Shortest prefixed name for `iri`, if some namespace matches and the
    /// remainder is a valid local name.
    pub fn compact(&self, iri: &str) -> Option<String> {
        self.map
            .iter()
            .filter(|(_, ns)| !ns.is_empty() && iri.starts_with(ns.as_str()))
            .max_by_key(|(_, ns)| ns.len())
            .and_then(|(p, ns)| {
                let local = &iri[ns.len()..];
                turtle::is_valid_local(local).then(|| format!("{p}:{local}"))
            })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(p, n)| (p.as_str(), n.as_str()))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}
