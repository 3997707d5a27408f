//! IRIs and prefixes used across conversions and filters.

pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDF_SUBJECT: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#subject";
pub const RDF_PREDICATE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#predicate";
pub const RDF_OBJECT: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#object";
pub const RDF_STATEMENT: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#Statement";
pub const RDF_VALUE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#value";

/// Namespace bound to the empty prefix `:`.
pub const MRM: &str = "http://example.org/mrm#";
pub const SINGLETON_PROPERTY_OF: &str = "http://example.org/mrm#singletonPropertyOf";

/// Wikidata entity namespace used for WD50K identifiers.
pub const WD: &str = "http://www.wikidata.org/entity/";

pub const KGC: &str = "http://kgc.knowledge-graph.jp/ontology/kgc.owl#";
pub const KGC_SUBJECT: &str = "http://kgc.knowledge-graph.jp/ontology/kgc.owl#subject";
pub const KGC_HAS_PREDICATE: &str = "http://kgc.knowledge-graph.jp/ontology/kgc.owl#hasPredicate";
pub const KGC_THEN: &str = "http://kgc.knowledge-graph.jp/ontology/kgc.owl#then";
pub const KGC_SOURCE: &str = "http://kgc.knowledge-graph.jp/ontology/kgc.owl#source";
pub const KDP: &str = "http://kgc.knowledge-graph.jp/data/predicate/";

/// KGRC role property for a role name such as `what`.
pub fn kgc_role(name: &str) -> String {
    format!("{KGC}{name}")
}

/// Prefixes registered by default in every [`crate::rdf_io::PrefixTable`].
pub const DEFAULT_PREFIXES: &[(&str, &str)] = &[
    ("rdf", RDF),
    ("rdfs", RDFS),
    ("xsd", XSD),
    ("", MRM),
    ("wd", WD),
    ("kgc", KGC),
    ("kdp", KDP),
];
