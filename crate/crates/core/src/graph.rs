//! In-memory RDF(-star) graph shared by every metadata representation model.
//!
//! A [`Graph`] is an insertion-ordered set of asserted [`Triple`]s plus an
//! interning table of quoted triples. Quoted triples are referenced from
//! terms through [`Term::QtRef`] and may nest arbitrarily.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};

use crate::error::GraphError;

/// Identifier of a quoted triple inside its owning [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QtId(pub u32);

impl fmt::Display for QtId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "qt{}", self.0)
    }
}

/// A node or edge label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(Arc<str>),
    BlankNode(Arc<str>),
    Literal {
        lexical: Arc<str>,
        lang: Option<Arc<str>>,
    },
    QtRef(QtId),
}

impl Term {
    /// Builds an IRI term without validation. Use [`Term::checked_iri`] for
    /// untrusted input.
    pub fn iri(iri: impl AsRef<str>) -> Term {
        Term::Iri(Arc::from(iri.as_ref()))
    }

    pub fn checked_iri(iri: impl AsRef<str>) -> Result<Term, GraphError> {
        let iri = iri.as_ref();
        if iri.is_empty() || iri.chars().any(char::is_whitespace) {
            return Err(GraphError::MalformedTerm(format!(
                "IRI must be non-empty without whitespace: {iri:?}"
            )));
        }
        Ok(Term::iri(iri))
    }

    pub fn blank(label: impl AsRef<str>) -> Term {
        Term::BlankNode(Arc::from(label.as_ref()))
    }

    pub fn literal(lexical: impl AsRef<str>) -> Term {
        Term::Literal {
            lexical: Arc::from(lexical.as_ref()),
            lang: None,
        }
    }

    pub fn lang_literal(lexical: impl AsRef<str>, lang: impl AsRef<str>) -> Term {
        Term::Literal {
            lexical: Arc::from(lexical.as_ref()),
            lang: Some(Arc::from(lang.as_ref())),
        }
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal { .. })
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn as_qt(&self) -> Option<QtId> {
        match self {
            Term::QtRef(id) => Some(*id),
            _ => None,
        }
    }
}

/// An asserted statement.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Self {
        Triple {
            subject,
            predicate,
            object,
        }
    }

    fn check_shape(&self) -> Result<(), GraphError> {
        check_shape(&self.subject, &self.predicate)
    }
}

fn check_shape(subject: &Term, predicate: &Term) -> Result<(), GraphError> {
    if subject.is_literal() {
        return Err(GraphError::MalformedTerm(format!(
            "literal in subject position: {subject:?}"
        )));
    }
    if !predicate.is_iri() {
        return Err(GraphError::MalformedTerm(format!(
            "predicate must be an IRI: {predicate:?}"
        )));
    }
    Ok(())
}

/// An interned quoted triple `<< s p o >>`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuotedTriple {
    pub id: QtId,
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl QuotedTriple {
    pub fn as_triple(&self) -> Triple {
        Triple::new(
            self.subject.clone(),
            self.predicate.clone(),
            self.object.clone(),
        )
    }
}

/// Entity, relation and triple counts of a graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub entities: usize,
    pub relations: usize,
    pub triples: usize,
}

type Index = HashMap<Term, IndexSet<Triple>>;

#[derive(Clone, Debug, Default)]
pub struct Graph {
    triples: IndexSet<Triple>,
    qts: Vec<QuotedTriple>,
    qt_lookup: HashMap<(Term, Term, Term), QtId>,
    by_subject: Index,
    by_predicate: Index,
    by_object: Index,
}

impl PartialEq for Graph {
    /// Structural equality: same asserted triples in the same order and the
    /// same quoted-triple table.
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples && self.qts == other.qts
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of the quoted triple `<< s p o >>`, interning it first
    /// if it is new.
    pub fn intern_qt(&mut self, s: Term, p: Term, o: Term) -> Result<QtId, GraphError> {
        check_shape(&s, &p)?;
        self.check_ref(&s)?;
        self.check_ref(&o)?;
        let key = (s, p, o);
        if let Some(id) = self.qt_lookup.get(&key) {
            return Ok(*id);
        }
        let id = QtId(self.qts.len() as u32);
        let (subject, predicate, object) = key.clone();
        self.qts.push(QuotedTriple {
            id,
            subject,
            predicate,
            object,
        });
        self.qt_lookup.insert(key, id);
        Ok(id)
    }

    /// Looks up an already-interned quoted triple without inserting.
    pub fn find_qt(&self, s: &Term, p: &Term, o: &Term) -> Option<QtId> {
        self.qt_lookup
            .get(&(s.clone(), p.clone(), o.clone()))
            .copied()
    }

    pub fn qt(&self, id: QtId) -> Option<&QuotedTriple> {
        self.qts.get(id.0 as usize)
    }

    pub fn quoted_triples(&self) -> &[QuotedTriple] {
        &self.qts
    }

    fn check_ref(&self, term: &Term) -> Result<(), GraphError> {
        match term {
            Term::QtRef(id) if self.qt(*id).is_none() => Err(GraphError::UnknownQt(*id)),
            _ => Ok(()),
        }
    }

    /// Inserts an asserted triple. Returns `false` when it was already present.
    pub fn insert(&mut self, triple: Triple) -> Result<bool, GraphError> {
        triple.check_shape()?;
        self.check_ref(&triple.subject)?;
        self.check_ref(&triple.object)?;
        if self.triples.contains(&triple) {
            return Ok(false);
        }
        index_add(&mut self.by_subject, &triple.subject, &triple);
        index_add(&mut self.by_predicate, &triple.predicate, &triple);
        index_add(&mut self.by_object, &triple.object, &triple);
        self.triples.insert(triple);
        Ok(true)
    }

    pub fn insert_all(
        &mut self,
        triples: impl IntoIterator<Item = Triple>,
    ) -> Result<usize, GraphError> {
        let mut added = 0;
        for t in triples {
            if self.insert(t)? {
                added += 1;
            }
        }
        Ok(added)
    }

    /// Removes an asserted triple. The quoted-triple table is left untouched.
    pub fn remove(&mut self, triple: &Triple) -> bool {
        if !self.triples.shift_remove(triple) {
            return false;
        }
        index_remove(&mut self.by_subject, &triple.subject, triple);
        index_remove(&mut self.by_predicate, &triple.predicate, triple);
        index_remove(&mut self.by_object, &triple.object, triple);
        true
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    pub fn triples(&self) -> impl ExactSizeIterator<Item = &Triple> + '_ {
        self.triples.iter()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn with_subject<'a>(&'a self, subject: &Term) -> impl Iterator<Item = &'a Triple> + 'a {
        self.by_subject.get(subject).into_iter().flatten()
    }

    pub fn with_predicate<'a>(&'a self, predicate: &Term) -> impl Iterator<Item = &'a Triple> + 'a {
        self.by_predicate.get(predicate).into_iter().flatten()
    }

    pub fn with_object<'a>(&'a self, object: &Term) -> impl Iterator<Item = &'a Triple> + 'a {
        self.by_object.get(object).into_iter().flatten()
    }

    /// First object of `(subject, predicate, ?)` in insertion order.
    pub fn object_of(&self, subject: &Term, predicate: &Term) -> Option<&Term> {
        self.with_subject(subject)
            .find(|t| &t.predicate == predicate)
            .map(|t| &t.object)
    }

    /// Entity set: non-literal terms in subject or object position of any
    /// asserted or quoted triple, in first-appearance order.
    pub fn entities(&self) -> IndexSet<Term> {
        let mut out = IndexSet::new();
        let mut seen_qt = HashSet::new();
        for t in &self.triples {
            self.collect_entity(&t.subject, &mut out, &mut seen_qt);
            self.collect_entity(&t.object, &mut out, &mut seen_qt);
        }
        for qt in &self.qts {
            if seen_qt.insert(qt.id) {
                self.collect_entity(&qt.subject, &mut out, &mut seen_qt);
                self.collect_entity(&qt.object, &mut out, &mut seen_qt);
            }
        }
        out
    }

    fn collect_entity(&self, term: &Term, out: &mut IndexSet<Term>, seen_qt: &mut HashSet<QtId>) {
        if term.is_literal() {
            return;
        }
        out.insert(term.clone());
        if let Term::QtRef(id) = term {
            if seen_qt.insert(*id) {
                let qt = &self.qts[id.0 as usize];
                self.collect_entity(&qt.subject, out, seen_qt);
                self.collect_entity(&qt.object, out, seen_qt);
            }
        }
    }

    /// Relation set: terms in predicate position of any asserted or quoted
    /// triple, in first-appearance order.
    pub fn relations(&self) -> IndexSet<Term> {
        let mut out: IndexSet<Term> = self.triples.iter().map(|t| t.predicate.clone()).collect();
        out.extend(self.qts.iter().map(|qt| qt.predicate.clone()));
        out
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            entities: self.entities().len(),
            relations: self.relations().len(),
            triples: self.triples.len(),
        }
    }

    /// Nesting depth of a quoted triple: 1 for `<< s p o >>` over plain terms.
    pub fn qt_depth(&self, id: QtId) -> usize {
        let qt = &self.qts[id.0 as usize];
        let inner = |t: &Term| t.as_qt().map_or(0, |i| self.qt_depth(i));
        1 + inner(&qt.subject).max(inner(&qt.object))
    }

    pub fn max_qt_depth(&self) -> usize {
        self.qts.iter().map(|q| self.qt_depth(q.id)).max().unwrap_or(0)
    }

    /// Copies `term` from `other` into this graph, re-interning any quoted
    /// triples it references.
    pub fn import_term(&mut self, other: &Graph, term: &Term) -> Result<Term, GraphError> {
        match term {
            Term::QtRef(id) => {
                let qt = other.qt(*id).ok_or(GraphError::UnknownQt(*id))?;
                let s = self.import_term(other, &qt.subject)?;
                let o = self.import_term(other, &qt.object)?;
                Ok(Term::QtRef(self.intern_qt(s, qt.predicate.clone(), o)?))
            }
            t => Ok(t.clone()),
        }
    }

    pub fn import_triple(&mut self, other: &Graph, triple: &Triple) -> Result<Triple, GraphError> {
        Ok(Triple::new(
            self.import_term(other, &triple.subject)?,
            triple.predicate.clone(),
            self.import_term(other, &triple.object)?,
        ))
    }

    /// Resolves a term of `other` to the equivalent term of this graph
    /// without interning anything new.
    pub fn resolve_term(&self, other: &Graph, term: &Term) -> Option<Term> {
        match term {
            Term::QtRef(id) => {
                let qt = other.qt(*id)?;
                let s = self.resolve_term(other, &qt.subject)?;
                let o = self.resolve_term(other, &qt.object)?;
                self.find_qt(&s, &qt.predicate, &o).map(Term::QtRef)
            }
            t => Some(t.clone()),
        }
    }

    /// Checks that every index agrees with the triple set and that every
    /// quoted-triple reference resolves.
    pub fn verify(&self) -> Result<(), GraphError> {
        let check = |name: &str, index: &Index, key: fn(&Triple) -> &Term| {
            let mut total = 0;
            for (term, set) in index {
                for t in set {
                    if key(t) != term || !self.triples.contains(t) {
                        return Err(GraphError::IndexCorrupt(format!(
                            "{name} index entry {t:?} under {term:?}"
                        )));
                    }
                }
                if set.is_empty() {
                    return Err(GraphError::IndexCorrupt(format!(
                        "{name} index holds empty bucket for {term:?}"
                    )));
                }
                total += set.len();
            }
            if total != self.triples.len() {
                return Err(GraphError::IndexCorrupt(format!(
                    "{name} index covers {total} of {} triples",
                    self.triples.len()
                )));
            }
            Ok(())
        };
        check("subject", &self.by_subject, |t| &t.subject)?;
        check("predicate", &self.by_predicate, |t| &t.predicate)?;
        check("object", &self.by_object, |t| &t.object)?;
        for t in &self.triples {
            t.check_shape()?;
            self.check_ref(&t.subject)?;
            self.check_ref(&t.object)?;
        }
        for (i, qt) in self.qts.iter().enumerate() {
            if qt.id.0 as usize != i {
                return Err(GraphError::IndexCorrupt(format!("qt slot {i} holds {}", qt.id)));
            }
            check_shape(&qt.subject, &qt.predicate)?;
            for t in [&qt.subject, &qt.object] {
                if let Term::QtRef(inner) = t {
                    if inner.0 as usize >= i {
                        return Err(GraphError::IndexCorrupt(format!(
                            "{} references later quoted triple {inner}",
                            qt.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Groups asserted triples by subject, preserving insertion order.
    pub fn subject_groups(&self) -> IndexMap<&Term, Vec<&Triple>> {
        let mut out: IndexMap<&Term, Vec<&Triple>> = IndexMap::new();
        for t in &self.triples {
            out.entry(&t.subject).or_default().push(t);
        }
        out
    }

    pub fn freeze(self) -> FrozenGraph {
        FrozenGraph(Arc::new(self))
    }
}

fn index_add(index: &mut Index, key: &Term, triple: &Triple) {
    index.entry(key.clone()).or_default().insert(triple.clone());
}

fn index_remove(index: &mut Index, key: &Term, triple: &Triple) {
    if let Some(set) = index.get_mut(key) {
        set.shift_remove(triple);
        if set.is_empty() {
            index.remove(key);
        }
    }
}

/// Read-only shared handle to a graph that can no longer be mutated.
#[derive(Clone, Debug)]
pub struct FrozenGraph(Arc<Graph>);

impl Deref for FrozenGraph {
    type Target = Graph;

    fn deref(&self) -> &Graph {
        &self.0
    }
}

impl FrozenGraph {
    /// Returns a mutable copy.
    pub fn thaw(&self) -> Graph {
        (*self.0).clone()
    }
}

/// One hyper-relational statement: a base triple plus ordered qualifiers.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HyperFact {
    pub s: Term,
    pub p: Term,
    pub o: Term,
    pub qualifiers: Vec<(Term, Term)>,
}

impl HyperFact {
    pub fn new(s: Term, p: Term, o: Term) -> Self {
        HyperFact {
            s,
            p,
            o,
            qualifiers: Vec::new(),
        }
    }

    pub fn with_qualifier(mut self, qr: Term, qv: Term) -> Self {
        self.qualifiers.push((qr, qv));
        self
    }
}
