//! Seeded synthetic hyper-relational data.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{HyperFact, Term};

const NS: &str = "http://example.org/syn/";

fn iri(kind: &str, i: usize) -> Term {
    Term::iri(format!("{NS}{kind}{i}"))
}

/// Unstructured random facts with distinct base triples, 0 to
/// `max_qualifiers` distinct qualifier pairs each and occasional literal
/// values.
pub fn random_hyperfacts(n: usize, max_qualifiers: usize, seed: u64) -> Vec<HyperFact> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entities = (n / 2).max(4);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let s = rng.random_range(0..entities);
        let p = rng.random_range(0..8);
        let o = rng.random_range(0..entities);
        if !seen.insert((s, p, o)) {
            continue;
        }
        let mut f = HyperFact::new(iri("e", s), iri("p", p), iri("e", o));
        for _ in 0..rng.random_range(0..=max_qualifiers) {
            let qr = iri("q", rng.random_range(0..6));
            let qv = if rng.random_bool(0.2) {
                Term::literal(format!("v {}", rng.random_range(0..100)))
            } else {
                iri("e", rng.random_range(0..entities))
            };
            // A repeated pair would collapse to one triple.
            if !f.qualifiers.iter().any(|(a, b)| *a == qr && *b == qv) {
                f = f.with_qualifier(qr, qv);
            }
        }
        out.push(f);
    }
    out
}

/// Shape of [`clustered_hrkg`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteredConfig {
    pub clusters: usize,
    pub cluster_size: usize,
    pub values: usize,
    pub relations: usize,
    pub qualifier_relations: usize,
    pub facts: usize,
    pub seed: u64,
}

impl Default for ClusteredConfig {
    fn default() -> Self {
        ClusteredConfig {
            clusters: 8,
            cluster_size: 20,
            values: 40,
            relations: 4,
            qualifier_relations: 3,
            facts: 400,
            seed: 7,
        }
    }
}

impl ClusteredConfig {
    /// The 50-fact dataset shipped as `data/synthetic50.csv`.
    pub fn bundled() -> Self {
        ClusteredConfig {
            clusters: 4,
            cluster_size: 6,
            values: 12,
            relations: 3,
            qualifier_relations: 3,
            facts: 50,
            seed: 7,
        }
    }

    pub fn entity_count(&self) -> usize {
        self.clusters * self.cluster_size + self.values
    }
}

/// Facts whose structure is learnable: relation `p` maps cluster `c` to
/// cluster `(c + p + 1) mod k`, and every qualifier value is a function of
/// the subject's cluster, the relation and the qualifier relation.
pub fn clustered_hrkg(cfg: &ClusteredConfig) -> Vec<HyperFact> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let k = cfg.clusters.max(1);
    let size = cfg.cluster_size.max(1);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(cfg.facts);
    let mut attempts = 0;
    while out.len() < cfg.facts && attempts < cfg.facts * 100 {
        attempts += 1;
        let c = rng.random_range(0..k);
        let p = rng.random_range(0..cfg.relations.max(1));
        let s = c * size + rng.random_range(0..size);
        let o = ((c + p + 1) % k) * size + rng.random_range(0..size);
        if !seen.insert((s, p, o)) {
            continue;
        }
        let mut f = HyperFact::new(iri("e", s), iri("p", p), iri("e", o));
        let nq = cfg.qualifier_relations.min(2 + rng.random_range(0..2)).max(1);
        for q in 0..nq {
            let v = (c * 5 + p * 3 + q * 13) % cfg.values.max(1);
            f = f.with_qualifier(iri("q", q), iri("v", v));
        }
        out.push(f);
    }
    out
}

/// Writes facts as comma-separated rows with full IRIs in angle brackets.
pub fn to_csv(facts: &[HyperFact]) -> String {
    let mut out = String::new();
    for f in facts {
        let terms = [&f.s, &f.p, &f.o]
            .into_iter()
            .chain(f.qualifiers.iter().flat_map(|(a, b)| [a, b]));
        let fields: Vec<String> = terms
            .map(|t| crate::rdf_io::wd50k_field(t).expect("synthetic terms are IRIs"))
            .collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
