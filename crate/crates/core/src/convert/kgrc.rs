//! Conversions of the event-centric KGRC graphs, which arrive reified:
//! each statement node carries `kgc:subject`, `kgc:hasPredicate` and 5W1H
//! role properties. The object of the converted triple is chosen by role
//! priority; everything else stays attached to the triple entity.

use std::collections::{HashMap, HashSet};

use indexmap::{IndexMap, IndexSet};
use log::warn;

use crate::error::ConvertError;
use crate::graph::{Graph, Term, Triple};
use crate::vocab::*;

/// Ordered role properties; the first present role supplies the object.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectPriority(Vec<Term>);

impl Default for ObjectPriority {
    fn default() -> Self {
        ObjectPriority::from_roles(&["what", "whom", "where", "on", "to", "from"]).expect("non-empty")
    }
}

impl ObjectPriority {
    /// Role names are local names in the KGRC ontology namespace.
    pub fn from_roles(names: &[&str]) -> Option<Self> {
        (!names.is_empty()).then(|| ObjectPriority(names.iter().map(|n| Term::iri(kgc_role(n))).collect()))
    }

    pub fn roles(&self) -> &[Term] {
        &self.0
    }
}

/// When to wrap a quoted triple with its statement identifier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WrapPolicy {
    #[default]
    Always,
    OnCollision,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkippedStatement {
    pub node: Term,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct KgrcConversion {
    pub graph: Graph,
    /// Statements that could not be converted; their triples were copied
    /// through as plain triples.
    pub skipped: Vec<SkippedStatement>,
}

/// A statement node split into its base triple and remaining metadata.
struct Record<'g> {
    node: &'g Term,
    subject: Term,
    predicate: Term,
    object: Term,
    metadata: Vec<&'g Triple>,
}

struct Analysis<'g> {
    records: IndexMap<&'g Term, Record<'g>>,
    skipped: Vec<SkippedStatement>,
}

fn analyse<'g>(graph: &'g Graph, priority: &ObjectPriority) -> Analysis<'g> {
    let (subj, pred) = (Term::iri(KGC_SUBJECT), Term::iri(KGC_HAS_PREDICATE));
    let mut records = IndexMap::new();
    let mut skipped = Vec::new();
    for (node, triples) in graph.subject_groups() {
        if !triples.iter().any(|t| t.predicate == subj || t.predicate == pred) {
            continue;
        }
        let mut consumed: HashSet<usize> = HashSet::new();
        let first = |p: &Term, consumed: &mut HashSet<usize>| -> Option<Term> {
            let mut hits = triples.iter().enumerate().filter(|(_, t)| &t.predicate == p);
            let (i, t) = hits.next()?;
            if hits.next().is_some() {
                warn!("statement {node:?} has several values for {p:?}; using the first");
            }
            consumed.insert(i);
            Some(t.object.clone())
        };
        let subject = first(&subj, &mut consumed);
        let predicate = first(&pred, &mut consumed);
        let object = priority.roles().iter().find_map(|r| first(r, &mut consumed));
        let reason = match (&subject, &predicate, &object) {
            (None, _, _) => Some("missing kgc:subject"),
            (_, None, _) => Some("missing kgc:hasPredicate"),
            (_, _, None) => Some("no object role present"),
            (Some(s), _, _) if s.is_literal() => Some("literal kgc:subject"),
            (_, Some(p), _) if !p.is_iri() => Some("kgc:hasPredicate is not an IRI"),
            _ => None,
        };
        if let Some(reason) = reason {
            skipped.push(SkippedStatement {
                node: node.clone(),
                reason: reason.into(),
            });
            continue;
        }
        let metadata = triples
            .iter()
            .enumerate()
            .filter(|(i, _)| !consumed.contains(i))
            .map(|(_, t)| *t)
            .collect();
        records.insert(
            node,
            Record {
                node,
                subject: subject.unwrap(),
                predicate: predicate.unwrap(),
                object: object.unwrap(),
                metadata,
            },
        );
    }
    Analysis { records, skipped }
}

fn local_name(iri: &str) -> &str {
    iri.rsplit(['/', '#']).next().unwrap_or(iri)
}

fn namespace(iri: &str) -> &str {
    match iri.rfind(['/', '#']) {
        Some(i) => &iri[..=i],
        None => iri,
    }
}

/// Singleton property name for a KGRC statement: the base predicate's local
/// name plus `-k`, in the statement node's namespace.
fn kgrc_singleton(node: &Term, base: &Term, k: usize) -> Term {
    let base = base.as_iri().unwrap_or_default();
    match node.as_iri() {
        Some(n) => Term::iri(format!("{}{}-{k}", namespace(n), local_name(base))),
        None => Term::iri(format!("{base}-{k}")),
    }
}

/// Copies every triple of `graph`, replacing statement subjects with their
/// converted triples via `emit` and redirecting references through `map`.
fn rebuild(
    graph: &Graph,
    converted: &HashMap<&Term, Term>,
    mut emit: impl FnMut(&Term, &mut Graph) -> Result<(), ConvertError>,
    out: &mut Graph,
) -> Result<(), ConvertError> {
    let map = |t: &Term| converted.get(t).cloned().unwrap_or_else(|| t.clone());
    for (subject, triples) in graph.subject_groups() {
        if converted.contains_key(subject) {
            emit(subject, out)?;
        } else {
            for t in triples {
                out.insert(Triple::new(subject.clone(), t.predicate.clone(), map(&t.object)))?;
            }
        }
    }
    Ok(())
}

/// Converts a reified KGRC graph to singleton properties.
pub fn kgrc_to_sgp(ref_graph: &Graph, priority: &ObjectPriority) -> Result<KgrcConversion, ConvertError> {
    let Analysis { records, skipped } = analyse(ref_graph, priority);
    let mut counters: HashMap<&Term, usize> = HashMap::new();
    let mut sp_of: HashMap<&Term, Term> = HashMap::new();
    for rec in records.values() {
        let k = counters.entry(&rec.predicate).or_insert(0);
        *k += 1;
        sp_of.insert(rec.node, kgrc_singleton(rec.node, &rec.predicate, *k));
    }
    let map = |t: &Term| sp_of.get(t).cloned().unwrap_or_else(|| t.clone());
    let spo = Term::iri(SINGLETON_PROPERTY_OF);
    let mut out = Graph::new();
    rebuild(
        ref_graph,
        &sp_of,
        |node, out| {
            let rec = &records[node];
            let sp = sp_of[node].clone();
            out.insert(Triple::new(map(&rec.subject), sp.clone(), map(&rec.object)))?;
            out.insert(Triple::new(sp.clone(), spo.clone(), rec.predicate.clone()))?;
            for t in &rec.metadata {
                out.insert(Triple::new(sp.clone(), t.predicate.clone(), map(&t.object)))?;
            }
            Ok(())
        },
        &mut out,
    )?;
    Ok(KgrcConversion { graph: out, skipped })
}

/// Converts a reified KGRC graph to RDF-star. Each statement becomes
/// `<< s p o >>`, wrapped as `<< << s p o >> rdf:value "id" >>` according to
/// `wrap`; statement references (including `kgc:then`) point at the
/// resulting triple entity.
pub fn kgrc_to_rdr(
    ref_graph: &Graph,
    priority: &ObjectPriority,
    wrap: WrapPolicy,
) -> Result<KgrcConversion, ConvertError> {
    let Analysis { records, mut skipped } = analyse(ref_graph, priority);

    let then = Term::iri(KGC_THEN);
    let dangling: IndexSet<String> = records
        .values()
        .flat_map(|r| r.metadata.iter())
        .filter(|t| t.predicate == then)
        .filter(|t| ref_graph.with_subject(&t.object).next().is_none())
        .map(|t| identifier(&t.object))
        .collect();
    if !dangling.is_empty() {
        return Err(ConvertError::UnresolvedReference(dangling.into_iter().collect()));
    }

    // Nesting level: statements whose subject/object are other statements
    // must be built after them. Cycles cannot be quoted.
    let mut level: HashMap<&Term, usize> = HashMap::new();
    let mut cyclic: IndexSet<&Term> = IndexSet::new();
    for node in records.keys() {
        nesting_level(node, &records, &mut level, &mut Vec::new(), &mut cyclic);
    }
    for node in &cyclic {
        skipped.push(SkippedStatement {
            node: (*node).clone(),
            reason: "cyclic statement reference".into(),
        });
    }
    let max_level = level.values().copied().max().unwrap_or(0);

    let mut out = Graph::new();
    let mut te: HashMap<&Term, Term> = HashMap::new();
    let value = Term::iri(RDF_VALUE);
    for lvl in 1..=max_level {
        let batch: Vec<&Record> = records
            .values()
            .filter(|r| level.get(r.node) == Some(&lvl) && !cyclic.contains(r.node))
            .collect();
        let mut inner = Vec::with_capacity(batch.len());
        let mut uses: HashMap<Term, usize> = HashMap::new();
        for rec in &batch {
            let map = |t: &Term| te.get(t).cloned().unwrap_or_else(|| t.clone());
            let id = out.intern_qt(map(&rec.subject), rec.predicate.clone(), map(&rec.object))?;
            let qt = Term::QtRef(id);
            *uses.entry(qt.clone()).or_insert(0) += 1;
            inner.push(qt);
        }
        for (rec, qt) in batch.iter().zip(inner) {
            let wrapped = match wrap {
                WrapPolicy::Always => true,
                WrapPolicy::OnCollision => uses[&qt] > 1,
            };
            let entity = if wrapped {
                Term::QtRef(out.intern_qt(qt, value.clone(), Term::literal(identifier(rec.node)))?)
            } else {
                qt
            };
            te.insert(rec.node, entity);
        }
    }

    let map = |t: &Term| te.get(t).cloned().unwrap_or_else(|| t.clone());
    // Cyclic statements are absent from `te` and pass through unchanged.
    rebuild(
        ref_graph,
        &te,
        |node, out| {
            let rec = &records[node];
            let entity = te[node].clone();
            for t in &rec.metadata {
                out.insert(Triple::new(entity.clone(), t.predicate.clone(), map(&t.object)))?;
            }
            Ok(())
        },
        &mut out,
    )?;
    Ok(KgrcConversion { graph: out, skipped })
}

fn identifier(node: &Term) -> String {
    match node {
        Term::Iri(i) => i.to_string(),
        Term::BlankNode(b) => format!("_:{b}"),
        Term::Literal { lexical, .. } => lexical.to_string(),
        Term::QtRef(id) => id.to_string(),
    }
}

fn nesting_level<'g>(
    node: &'g Term,
    records: &IndexMap<&'g Term, Record<'g>>,
    level: &mut HashMap<&'g Term, usize>,
    stack: &mut Vec<&'g Term>,
    cyclic: &mut IndexSet<&'g Term>,
) -> Option<usize> {
    if let Some(l) = level.get(node) {
        return Some(*l);
    }
    if stack.contains(&node) {
        let from = stack.iter().position(|n| *n == node).unwrap();
        cyclic.extend(stack[from..].iter().copied());
        return None;
    }
    let rec = &records[node];
    stack.push(node);
    let mut l = 1;
    let mut ok = true;
    for dep in [&rec.subject, &rec.object] {
        if let Some((dep, _)) = records.get_key_value(dep) {
            match nesting_level(dep, records, level, stack, cyclic) {
                Some(d) => l = l.max(d + 1),
                None => ok = false,
            }
        }
    }
    stack.pop();
    if !ok || cyclic.contains(node) {
        cyclic.insert(node);
        return None;
    }
    level.insert(node, l);
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf_io::{parse_turtle_star, PrefixTable};

    const PREFIXES: &str = "@prefix kdrp: <http://kgc.knowledge-graph.jp/data/ResidentPatient/> .\n\
        @prefix kdp: <http://kgc.knowledge-graph.jp/data/predicate/> .\n\
        @prefix kgc: <http://kgc.knowledge-graph.jp/ontology/kgc.owl#> .\n";

    const STORY: &str = "kdrp:105\n  kgc:source \"The young man was caring for an elderly man\"@en;\n  rdf:type kgc:Situation ;\n  kgc:hasPredicate kdp:care ;\n  kgc:subject kdp:Young_man ;\n  kgc:then kdrp:106 ;\n  kgc:what kdrp:Elderly_man .\n\
        kdrp:106 rdf:type kgc:Statement ;\n  kgc:hasPredicate kdp:say ;\n  kgc:subject kdrp:Young_man ;\n  kgc:what kdrp:107 .\n\
        kdrp:107 rdf:type kgc:Statement ;\n  kgc:hasPredicate kgc:hasProperty ;\n  kgc:subject kdrp:Elderly_man ;\n  kgc:what kdp:equalTo .\n";

    fn story() -> Graph {
        parse_turtle_star(&format!("{PREFIXES}{STORY}"), &PrefixTable::default()).unwrap()
    }

    fn kdrp(l: &str) -> Term {
        Term::iri(format!("http://kgc.knowledge-graph.jp/data/ResidentPatient/{l}"))
    }
    fn kdp(l: &str) -> Term {
        Term::iri(format!("{KDP}{l}"))
    }
    fn kgc(l: &str) -> Term {
        Term::iri(format!("{KGC}{l}"))
    }

    #[test]
    fn sgp_story_shape() {
        let conv = kgrc_to_sgp(&story(), &ObjectPriority::default()).unwrap();
        assert!(conv.skipped.is_empty());
        let g = &conv.graph;
        let care1 = kdrp("care-1");
        assert!(g.contains(&Triple::new(kdp("Young_man"), care1.clone(), kdrp("Elderly_man"))));
        assert!(g.contains(&Triple::new(care1.clone(), Term::iri(SINGLETON_PROPERTY_OF), kdp("care"))));
        assert!(g.contains(&Triple::new(care1.clone(), Term::iri(RDF_TYPE), kgc("Situation"))));
        assert!(g.contains(&Triple::new(
            care1.clone(),
            kgc("source"),
            Term::lang_literal("The young man was caring for an elderly man", "en")
        )));
        assert!(g.contains(&Triple::new(care1.clone(), kgc("then"), kdrp("say-1"))));
        // The consumed role is not re-emitted.
        assert_eq!(g.with_subject(&care1).count(), 4);
        // Nested statement as object resolves to its singleton property.
        assert!(g.contains(&Triple::new(kdrp("Young_man"), kdrp("say-1"), kdrp("hasProperty-1"))));
    }

    #[test]
    fn priority_and_fallback_roles() {
        let doc = format!(
            "{PREFIXES}kdrp:1 kgc:subject kdrp:A ; kgc:hasPredicate kdp:go ; kgc:where kdrp:W ; kgc:what kdrp:X .\n\
             kdrp:2 kgc:subject kdrp:A ; kgc:hasPredicate kdp:go ; kgc:from kdrp:F .\n\
             kdrp:3 kgc:subject kdrp:A ; kgc:hasPredicate kdp:go ; kgc:when kdrp:T .\n"
        );
        let g = parse_turtle_star(&doc, &PrefixTable::default()).unwrap();
        let conv = kgrc_to_sgp(&g, &ObjectPriority::default()).unwrap();
        let out = &conv.graph;
        assert!(out.contains(&Triple::new(kdrp("A"), kdrp("go-1"), kdrp("X"))));
        // Unused role stays as metadata.
        assert!(out.contains(&Triple::new(kdrp("go-1"), kgc("where"), kdrp("W"))));
        assert!(out.contains(&Triple::new(kdrp("A"), kdrp("go-2"), kdrp("F"))));
        assert_eq!(conv.skipped.len(), 1);
        assert_eq!(conv.skipped[0].node, kdrp("3"));
        // Skipped statement copied through unchanged.
        assert!(out.contains(&Triple::new(kdrp("3"), kgc("when"), kdrp("T"))));
    }

    #[test]
    fn rdr_story_shape() {
        let conv = kgrc_to_rdr(&story(), &ObjectPriority::default(), WrapPolicy::Always).unwrap();
        let g = &conv.graph;
        let value = Term::iri(RDF_VALUE);
        let inner = g.find_qt(&kdp("Young_man"), &kdp("care"), &kdrp("Elderly_man")).unwrap();
        let outer = g
            .find_qt(
                &Term::QtRef(inner),
                &value,
                &Term::literal("http://kgc.knowledge-graph.jp/data/ResidentPatient/105"),
            )
            .unwrap();
        let te105 = Term::QtRef(outer);
        assert!(g.contains(&Triple::new(te105.clone(), Term::iri(RDF_TYPE), kgc("Situation"))));
        let then: Vec<_> = g.with_subject(&te105).filter(|t| t.predicate == kgc("then")).collect();
        assert_eq!(then.len(), 1);
        let te106 = then[0].object.as_qt().unwrap();
        let w106 = g.qt(te106).unwrap();
        assert_eq!(w106.predicate, value);
        assert_eq!(
            w106.object,
            Term::literal("http://kgc.knowledge-graph.jp/data/ResidentPatient/106")
        );
        let say = g.qt(w106.subject.as_qt().unwrap()).unwrap();
        assert_eq!(say.predicate, kdp("say"));
        let w107 = g.qt(say.object.as_qt().unwrap()).unwrap();
        assert_eq!(
            w107.object,
            Term::literal("http://kgc.knowledge-graph.jp/data/ResidentPatient/107")
        );
        let eq = g.qt(w107.subject.as_qt().unwrap()).unwrap();
        assert_eq!(eq.as_triple(), Triple::new(kdrp("Elderly_man"), kgc("hasProperty"), kdp("equalTo")));
        assert!(g.max_qt_depth() >= 2);
        assert_eq!(g.max_qt_depth(), 4);
    }

    #[test]
    fn on_collision_wraps_only_duplicates() {
        let conv = kgrc_to_rdr(&story(), &ObjectPriority::default(), WrapPolicy::OnCollision).unwrap();
        let value = Term::iri(RDF_VALUE);
        assert!(conv.graph.quoted_triples().iter().all(|q| q.predicate != value));

        let doc = format!(
            "{PREFIXES}kdrp:1 kgc:subject kdrp:A ; kgc:hasPredicate kdp:go ; kgc:what kdrp:X ; kgc:when kdrp:T1 .\n\
             kdrp:2 kgc:subject kdrp:A ; kgc:hasPredicate kdp:go ; kgc:what kdrp:X ; kgc:when kdrp:T2 .\n\
             kdrp:3 kgc:subject kdrp:A ; kgc:hasPredicate kdp:go ; kgc:what kdrp:Y .\n"
        );
        let g = parse_turtle_star(&doc, &PrefixTable::default()).unwrap();
        let conv = kgrc_to_rdr(&g, &ObjectPriority::default(), WrapPolicy::OnCollision).unwrap();
        let wrappers: Vec<_> = conv
            .graph
            .quoted_triples()
            .iter()
            .filter(|q| q.predicate == value)
            .collect();
        assert_eq!(wrappers.len(), 2);
        assert_ne!(wrappers[0].object, wrappers[1].object);
        assert_eq!(wrappers[0].subject, wrappers[1].subject);
        let te1 = conv.graph.with_object(&kdrp("T1")).next().unwrap().subject.clone();
        let te2 = conv.graph.with_object(&kdrp("T2")).next().unwrap().subject.clone();
        assert_ne!(te1, te2);
    }

    #[test]
    fn dangling_then_is_an_error() {
        let doc = format!("{PREFIXES}kdrp:1 kgc:subject kdrp:A ; kgc:hasPredicate kdp:go ; kgc:what kdrp:X ; kgc:then kdrp:99 .\n");
        let g = parse_turtle_star(&doc, &PrefixTable::default()).unwrap();
        match kgrc_to_rdr(&g, &ObjectPriority::default(), WrapPolicy::Always) {
            Err(ConvertError::UnresolvedReference(ids)) => {
                assert_eq!(ids, vec!["http://kgc.knowledge-graph.jp/data/ResidentPatient/99".to_string()])
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cyclic_statements_are_skipped() {
        let doc = format!(
            "{PREFIXES}kdrp:1 kgc:subject kdrp:A ; kgc:hasPredicate kdp:go ; kgc:what kdrp:2 .\n\
             kdrp:2 kgc:subject kdrp:B ; kgc:hasPredicate kdp:go ; kgc:what kdrp:1 .\n"
        );
        let g = parse_turtle_star(&doc, &PrefixTable::default()).unwrap();
        let conv = kgrc_to_rdr(&g, &ObjectPriority::default(), WrapPolicy::Always).unwrap();
        assert_eq!(conv.skipped.len(), 2);
        assert!(conv.graph.quoted_triples().is_empty());
        assert_eq!(conv.graph.len(), g.len());
    }
}
