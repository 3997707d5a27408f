//! Conversions between hyper-relational facts and the three metadata
//! representation models, plus the inverse extraction.

mod kgrc;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ConvertError;
use crate::graph::{Graph, HyperFact, Term, Triple};
use crate::vocab::*;

pub use kgrc::{kgrc_to_rdr, kgrc_to_sgp, KgrcConversion, ObjectPriority, SkippedStatement, WrapPolicy};

/// Metadata representation model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mrm {
    Ref,
    Sgp,
    Rdr,
}

impl Mrm {
    pub const ALL: [Mrm; 3] = [Mrm::Ref, Mrm::Sgp, Mrm::Rdr];

    pub fn name(self) -> &'static str {
        match self {
            Mrm::Ref => "ref",
            Mrm::Sgp => "sgp",
            Mrm::Rdr => "rdr",
        }
    }
}

impl fmt::Display for Mrm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mrm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ref" | "reification" => Ok(Mrm::Ref),
            "sgp" | "singleton" | "singletonproperty" => Ok(Mrm::Sgp),
            "rdr" | "rdf-star" | "rdfstar" => Ok(Mrm::Rdr),
            other => Err(format!("unknown metadata representation model {other:?}")),
        }
    }
}

/// Stable text key of a term, used for hashing.
fn term_key(term: &Term) -> String {
    match term {
        Term::Iri(i) => format!("<{i}>"),
        Term::BlankNode(b) => format!("_:{b}"),
        Term::Literal { lexical, lang } => format!("{lexical:?}@{}", lang.as_deref().unwrap_or("")),
        Term::QtRef(id) => format!("{id}"),
    }
}

/// Skolem label of a reified statement node.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RefStatementId(String);

impl RefStatementId {
    /// Content hash of the fact and its occurrence index among identical
    /// facts of the same input.
    pub fn new(fact: &HyperFact, occurrence: usize) -> Self {
        let mut h = Sha256::new();
        for t in [&fact.s, &fact.p, &fact.o] {
            h.update(term_key(t).as_bytes());
            h.update([0u8]);
        }
        for (qr, qv) in &fact.qualifiers {
            h.update(term_key(qr).as_bytes());
            h.update([1u8]);
            h.update(term_key(qv).as_bytes());
            h.update([0u8]);
        }
        h.update(occurrence.to_le_bytes());
        let digest = h.finalize();
        let hex: String = digest[..16].iter().map(|b| format!("{b:02x}")).collect();
        RefStatementId(format!("B{hex}"))
    }

    pub fn label(&self) -> &str {
        &self.0
    }

    pub fn term(&self) -> Term {
        Term::blank(&self.0)
    }

    /// One id per fact; repeated identical facts get distinct ids.
    pub fn assign(facts: &[HyperFact]) -> Vec<RefStatementId> {
        let mut seen: HashMap<&HyperFact, usize> = HashMap::new();
        facts
            .iter()
            .map(|f| {
                let n = seen.entry(f).or_insert(0);
                let id = RefStatementId::new(f, *n);
                *n += 1;
                id
            })
            .collect()
    }
}

/// `p#k`: the k-th (1-based) specialization of base predicate `p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SingletonPropertyId {
    pub base: Term,
    pub k: usize,
}

impl SingletonPropertyId {
    pub fn term(&self) -> Term {
        let base = self.base.as_iri().unwrap_or_default();
        Term::iri(format!("{base}#{}", self.k))
    }

    /// Numbers facts per base predicate in input order.
    pub fn assign(facts: &[HyperFact]) -> Vec<SingletonPropertyId> {
        let mut counters: HashMap<&Term, usize> = HashMap::new();
        facts
            .iter()
            .map(|f| {
                let k = counters.entry(&f.p).or_insert(0);
                *k += 1;
                SingletonPropertyId {
                    base: f.p.clone(),
                    k: *k,
                }
            })
            .collect()
    }
}

fn iri(s: &str) -> Term {
    Term::iri(s)
}

pub fn to_ref(fact: &HyperFact, id: &RefStatementId, emit_type: bool) -> Vec<Triple> {
    let st = id.term();
    let mut out = Vec::with_capacity(4 + fact.qualifiers.len());
    if emit_type {
        out.push(Triple::new(st.clone(), iri(RDF_TYPE), iri(RDF_STATEMENT)));
    }
    out.push(Triple::new(st.clone(), iri(RDF_SUBJECT), fact.s.clone()));
    out.push(Triple::new(st.clone(), iri(RDF_PREDICATE), fact.p.clone()));
    out.push(Triple::new(st.clone(), iri(RDF_OBJECT), fact.o.clone()));
    for (qr, qv) in &fact.qualifiers {
        out.push(Triple::new(st.clone(), qr.clone(), qv.clone()));
    }
    out
}

pub fn to_sgp(fact: &HyperFact, sp: &SingletonPropertyId) -> Vec<Triple> {
    let p = sp.term();
    let mut out = Vec::with_capacity(2 + fact.qualifiers.len());
    out.push(Triple::new(fact.s.clone(), p.clone(), fact.o.clone()));
    out.push(Triple::new(p.clone(), iri(SINGLETON_PROPERTY_OF), fact.p.clone()));
    for (qr, qv) in &fact.qualifiers {
        out.push(Triple::new(p.clone(), qr.clone(), qv.clone()));
    }
    out
}

/// Interns `<< s p o >>` in `graph` and returns the qualifier triples on it.
/// A fact without qualifiers becomes the plain asserted triple.
pub fn to_rdr(fact: &HyperFact, graph: &mut Graph) -> Result<Vec<Triple>, ConvertError> {
    if fact.qualifiers.is_empty() {
        return Ok(vec![Triple::new(fact.s.clone(), fact.p.clone(), fact.o.clone())]);
    }
    let qt = Term::QtRef(graph.intern_qt(fact.s.clone(), fact.p.clone(), fact.o.clone())?);
    Ok(fact
        .qualifiers
        .iter()
        .map(|(qr, qv)| Triple::new(qt.clone(), qr.clone(), qv.clone()))
        .collect())
}

/// Converts a fact list into a graph of the given model.
pub fn convert_facts(facts: &[HyperFact], mrm: Mrm, emit_type: bool) -> Result<Graph, ConvertError> {
    let mut g = Graph::new();
    match mrm {
        Mrm::Ref => {
            for (f, id) in facts.iter().zip(RefStatementId::assign(facts)) {
                g.insert_all(to_ref(f, &id, emit_type))?;
            }
        }
        Mrm::Sgp => {
            for (f, sp) in facts.iter().zip(SingletonPropertyId::assign(facts)) {
                g.insert_all(to_sgp(f, &sp))?;
            }
        }
        Mrm::Rdr => {
            for f in facts {
                let triples = to_rdr(f, &mut g)?;
                g.insert_all(triples)?;
            }
        }
    }
    Ok(g)
}

fn node_name(graph: &Graph, t: &Term) -> String {
    let mut s = String::new();
    crate::rdf_io::write_term_ntriples(&mut s, graph, t);
    s
}

fn shape_error(graph: &Graph, node: &Term, message: impl Into<String>) -> ConvertError {
    ConvertError::Extraction {
        node: node_name(graph, node),
        message: message.into(),
    }
}

/// Inverse of the forward conversion for `mrm`. In RDF-star, qualifier sets
/// of facts that share the same base triple merge onto one quoted triple.
pub fn extract_hyperfacts(graph: &Graph, mrm: Mrm) -> Result<Vec<HyperFact>, ConvertError> {
    match mrm {
        Mrm::Ref => extract_ref(graph),
        Mrm::Sgp => extract_sgp(graph),
        Mrm::Rdr => extract_rdr(graph),
    }
}

fn extract_ref(graph: &Graph) -> Result<Vec<HyperFact>, ConvertError> {
    let (rs, rp, ro) = (iri(RDF_SUBJECT), iri(RDF_PREDICATE), iri(RDF_OBJECT));
    let (rtype, stmt) = (iri(RDF_TYPE), iri(RDF_STATEMENT));
    let mut out = Vec::new();
    for (node, triples) in graph.subject_groups() {
        let mut parts: [Option<&Term>; 3] = [None, None, None];
        let mut qualifiers = Vec::new();
        for t in triples {
            let slot = if t.predicate == rs {
                Some(0)
            } else if t.predicate == rp {
                Some(1)
            } else if t.predicate == ro {
                Some(2)
            } else {
                None
            };
            match slot {
                Some(i) if parts[i].is_some() => {
                    return Err(shape_error(graph, node, format!("repeated {}", t.predicate.as_iri().unwrap())))
                }
                Some(i) => parts[i] = Some(&t.object),
                None if t.predicate == rtype && t.object == stmt => {}
                None => qualifiers.push((t.predicate.clone(), t.object.clone())),
            }
        }
        let name = ["rdf:subject", "rdf:predicate", "rdf:object"];
        let mut base = Vec::with_capacity(3);
        for (i, p) in parts.iter().enumerate() {
            base.push((*p).ok_or_else(|| shape_error(graph, node, format!("missing {}", name[i])))?.clone());
        }
        let mut base = base.into_iter();
        out.push(HyperFact {
            s: base.next().unwrap(),
            p: base.next().unwrap(),
            o: base.next().unwrap(),
            qualifiers,
        });
    }
    Ok(out)
}

fn extract_sgp(graph: &Graph) -> Result<Vec<HyperFact>, ConvertError> {
    let spo = iri(SINGLETON_PROPERTY_OF);
    let mut out = Vec::new();
    let mut covered = 0usize;
    for decl in graph.with_predicate(&spo) {
        let sp = &decl.subject;
        let mut uses = graph.with_predicate(sp);
        let base = uses
            .next()
            .ok_or_else(|| shape_error(graph, sp, "singleton property is never used"))?;
        if uses.next().is_some() {
            return Err(shape_error(graph, sp, "singleton property used more than once"));
        }
        let mut fact = HyperFact::new(base.subject.clone(), decl.object.clone(), base.object.clone());
        for t in graph.with_subject(sp) {
            if t.predicate == spo {
                continue;
            }
            fact.qualifiers.push((t.predicate.clone(), t.object.clone()));
        }
        covered += 2 + fact.qualifiers.len();
        out.push(fact);
    }
    if covered != graph.len() {
        let stray = graph
            .triples()
            .find(|t| {
                t.predicate != spo
                    && singleton_decl(graph, &t.predicate).is_none()
                    && singleton_decl(graph, &t.subject).is_none()
            })
            .map(|t| t.subject.clone());
        let node = stray.unwrap_or_else(|| Term::literal("?"));
        return Err(shape_error(graph, &node, "triple outside any singleton property pattern"));
    }
    Ok(out)
}

fn singleton_decl<'g>(graph: &'g Graph, sp: &Term) -> Option<&'g Triple> {
    let spo = Term::iri(SINGLETON_PROPERTY_OF);
    graph.with_subject(sp).find(|t| t.predicate == spo)
}

fn extract_rdr(graph: &Graph) -> Result<Vec<HyperFact>, ConvertError> {
    enum Entry {
        Plain(HyperFact),
        Quoted(usize),
    }
    let mut order: Vec<Entry> = Vec::new();
    let mut quoted: IndexMap<Term, HyperFact> = IndexMap::new();
    for t in graph.triples() {
        if t.object.as_qt().is_some() {
            return Err(shape_error(graph, &t.object, "quoted triple in object position"));
        }
        match t.subject.as_qt() {
            None => order.push(Entry::Plain(HyperFact::new(
                t.subject.clone(),
                t.predicate.clone(),
                t.object.clone(),
            ))),
            Some(id) => {
                let qt = graph.qt(id).ok_or(crate::error::GraphError::UnknownQt(id))?;
                if qt.subject.as_qt().is_some() || qt.object.as_qt().is_some() {
                    return Err(shape_error(graph, &t.subject, "nested quoted triple"));
                }
                let entry = quoted.entry(t.subject.clone());
                let idx = entry.index();
                let fact = entry.or_insert_with(|| {
                    order.push(Entry::Quoted(idx));
                    HyperFact::new(qt.subject.clone(), qt.predicate.clone(), qt.object.clone())
                });
                fact.qualifiers.push((t.predicate.clone(), t.object.clone()));
            }
        }
    }
    let mut quoted: Vec<Option<HyperFact>> = quoted.into_values().map(Some).collect();
    Ok(order
        .into_iter()
        .map(|e| match e {
            Entry::Plain(f) => f,
            Entry::Quoted(i) => quoted[i].take().expect("each quoted fact emitted once"),
        })
        .collect())
}
