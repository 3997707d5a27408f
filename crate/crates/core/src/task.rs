//! The link prediction task: which triples are prediction targets in each
//! model, how they are split, and how quoted triples are distributed.

use std::collections::HashMap;

use indexmap::{IndexMap, IndexSet};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convert::Mrm;
use crate::error::TaskError;
use crate::graph::{Graph, Term, Triple};
use crate::vocab::*;

/// Relations whose triples are structural in a given model and therefore
/// never prediction targets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalFilter {
    pub mrm: Mrm,
    pub excluded: IndexSet<Term>,
    pub entities: IndexSet<Term>,
}

impl EvalFilter {
    pub fn is_eligible(&self, t: &Triple) -> bool {
        !self.excluded.contains(&t.predicate) && self.entities.contains(&t.object)
    }
}

/// Singleton properties: `p#i` used as a predicate and declared with
/// `singletonPropertyOf`.
pub fn singleton_relations(graph: &Graph) -> IndexSet<Term> {
    let decl = Term::iri(SINGLETON_PROPERTY_OF);
    let declared: IndexSet<&Term> = graph.with_predicate(&decl).map(|t| &t.subject).collect();
    graph
        .triples()
        .filter(|t| declared.contains(&t.predicate))
        .map(|t| t.predicate.clone())
        .collect()
}

/// Predicates of quoted triples that carry metadata, i.e. appear as the
/// subject of an asserted triple.
pub fn quoted_relations(graph: &Graph) -> IndexSet<Term> {
    let mut out = IndexSet::new();
    for t in graph.triples() {
        if let Some(id) = t.subject.as_qt() {
            if let Some(qt) = graph.qt(id) {
                out.insert(qt.predicate.clone());
            }
        }
    }
    out
}

pub fn build_filter(graph: &Graph, mrm: Mrm) -> EvalFilter {
    let excluded: IndexSet<Term> = match mrm {
        Mrm::Ref => [RDF_SUBJECT, RDF_PREDICATE, RDF_OBJECT, RDF_TYPE, KGC_SUBJECT, KGC_HAS_PREDICATE]
            .into_iter()
            .map(Term::iri)
            .collect(),
        Mrm::Sgp => std::iter::once(Term::iri(SINGLETON_PROPERTY_OF))
            .chain(singleton_relations(graph))
            .collect(),
        Mrm::Rdr => quoted_relations(graph),
    };
    EvalFilter {
        mrm,
        excluded,
        entities: graph.entities(),
    }
}

/// Eligible triples in graph order.
pub fn eligible<'g>(graph: &'g Graph, filter: &EvalFilter) -> Vec<&'g Triple> {
    graph.triples().filter(|t| filter.is_eligible(t)).collect()
}

/// Multiset of `(relation, object)` prediction targets.
pub fn eligible_targets(graph: &Graph, filter: &EvalFilter) -> HashMap<(Term, Term), usize> {
    let mut out = HashMap::new();
    for t in eligible(graph, filter) {
        *out.entry((t.predicate.clone(), t.object.clone())).or_insert(0) += 1;
    }
    out
}

/// Entities standing for a whole statement: reified statement nodes,
/// singleton properties or quoted triples.
pub fn triple_entities(graph: &Graph, mrm: Mrm) -> IndexSet<Term> {
    match mrm {
        Mrm::Ref => {
            let markers: Vec<Term> = [RDF_SUBJECT, RDF_PREDICATE, RDF_OBJECT, KGC_SUBJECT, KGC_HAS_PREDICATE]
                .into_iter()
                .map(Term::iri)
                .collect();
            graph
                .triples()
                .filter(|t| markers.contains(&t.predicate))
                .map(|t| t.subject.clone())
                .collect()
        }
        Mrm::Sgp => singleton_relations(graph),
        Mrm::Rdr => graph.entities().into_iter().filter(|t| t.as_qt().is_some()).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for Ratios {
    fn default() -> Self {
        Ratios {
            train: 0.8,
            valid: 0.1,
            test: 0.1,
        }
    }
}

impl Ratios {
    pub fn validate(&self) -> Result<(), TaskError> {
        let r = [self.train, self.valid, self.test];
        if r.iter().any(|x| !x.is_finite() || *x < 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return Err(TaskError::InvalidRatios(r));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    pub seed: u64,
}

impl Split {
    pub fn len(&self) -> usize {
        self.train.len() + self.valid.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All split triples, for filtered ranking.
    pub fn known(&self) -> impl Iterator<Item = &Triple> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }

    /// `graph` without the validation and test triples.
    pub fn training_graph(&self, graph: &Graph) -> Graph {
        let mut g = graph.clone();
        for t in self.valid.iter().chain(&self.test) {
            g.remove(t);
        }
        g
    }
}

/// Splits the eligible triples so that every triple entity that is the
/// subject of at least two of them appears in both train and test.
pub fn split_dataset(graph: &Graph, filter: &EvalFilter, ratios: Ratios, seed: u64) -> Result<Split, TaskError> {
    ratios.validate()?;
    let mut pool: Vec<Triple> = eligible(graph, filter).into_iter().cloned().collect();
    if pool.is_empty() {
        return Err(TaskError::EmptyTask);
    }
    let n = pool.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    let n_valid = (ratios.valid * n as f64).round() as usize;
    let n_test = (ratios.test * n as f64).round() as usize;

    let te = triple_entities(graph, filter.mrm);
    let mut groups: IndexMap<Term, Vec<Triple>> = IndexMap::new();
    let mut free = Vec::new();
    for t in pool {
        if te.contains(&t.subject) {
            groups.entry(t.subject.clone()).or_default().push(t);
        } else {
            free.push(t);
        }
    }
    let mut split = Split {
        train: Vec::new(),
        valid: Vec::new(),
        test: Vec::new(),
        seed,
    };
    let mut rest = Vec::new();
    for (_, group) in groups {
        let mut it = group.into_iter();
        split.train.extend(it.next());
        split.test.extend(it.next());
        if let Some(t) = it.next() {
            if split.valid.len() < n_valid {
                split.valid.push(t);
            } else {
                rest.push(t);
            }
        }
        rest.extend(it);
    }
    // Ungrouped triples come first so they fill test before the remainder
    // of already-covered groups does.
    free.extend(rest);
    for t in free {
        if split.valid.len() < n_valid {
            split.valid.push(t);
        } else if split.test.len() < n_test {
            split.test.push(t);
        } else {
            split.train.push(t);
        }
    }
    Ok(split)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QtProfile {
    pub qt_to_qt: usize,
    pub qt_to_at: usize,
    pub at_to_qt: usize,
    pub at_to_at: usize,
}

impl QtProfile {
    pub fn total(&self) -> usize {
        self.qt_to_qt + self.qt_to_at + self.at_to_qt + self.at_to_at
    }

    /// Percentages of all triples, in the order QT→QT, QT→AT, AT→QT, AT→AT.
    pub fn percentages(&self) -> [f64; 4] {
        let t = self.total().max(1) as f64;
        [self.qt_to_qt, self.qt_to_at, self.at_to_qt, self.at_to_at].map(|c| 100.0 * c as f64 / t)
    }

    /// Percentages among triples containing at least one quoted triple, in
    /// the order QT→QT, QT→AT, AT→QT.
    pub fn qt_containing_percentages(&self) -> [f64; 3] {
        let t = (self.qt_to_qt + self.qt_to_at + self.at_to_qt).max(1) as f64;
        [self.qt_to_qt, self.qt_to_at, self.at_to_qt].map(|c| 100.0 * c as f64 / t)
    }
}

/// Classifies each asserted triple by whether its subject and object are
/// quoted triples.
pub fn qt_triple_profile(graph: &Graph) -> Result<QtProfile, TaskError> {
    for marker in [RDF_SUBJECT, SINGLETON_PROPERTY_OF, KGC_SUBJECT] {
        if graph.with_predicate(&Term::iri(marker)).next().is_some() {
            return Err(TaskError::WrongMrm(format!("graph uses {marker}")));
        }
    }
    let mut p = QtProfile::default();
    for t in graph.triples() {
        match (t.subject.as_qt().is_some(), t.object.as_qt().is_some()) {
            (true, true) => p.qt_to_qt += 1,
            (true, false) => p.qt_to_at += 1,
            (false, true) => p.at_to_qt += 1,
            (false, false) => p.at_to_at += 1,
        }
    }
    Ok(p)
}
