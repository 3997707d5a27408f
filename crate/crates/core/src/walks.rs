//! Graph walk corpora with quoted-triple transitions.
//!
//! Every walk step first evaluates the four quoted-triple transitions
//! (qt2subject, object2qt, qt2object, subject2qt) with probabilities
//! alpha, beta, gamma and delta, and falls back to ordinary expansion along
//! the outgoing edges of the current entity. With all four probabilities at
//! zero the walks are plain RDF2Vec walks.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use indexmap::{IndexMap, IndexSet};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::TokenError;
use crate::graph::{Graph, Term};
use crate::rdf_io::encode_term;

/// Ordered token sequences plus their vocabulary.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WalkCorpus {
    vocab: IndexSet<String>,
    sequences: Vec<Vec<u32>>,
}

impl WalkCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends one sequence; empty sequences are ignored.
    pub fn push<S: AsRef<str>>(&mut self, tokens: impl IntoIterator<Item = S>) {
        let seq: Vec<u32> = tokens
            .into_iter()
            .map(|t| self.vocab.insert_full(t.as_ref().to_owned()).0 as u32)
            .collect();
        if !seq.is_empty() {
            self.sequences.push(seq);
        }
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn vocab(&self) -> &IndexSet<String> {
        &self.vocab
    }

    pub fn token(&self, id: u32) -> &str {
        &self.vocab[id as usize]
    }

    pub fn id_sequences(&self) -> &[Vec<u32>] {
        &self.sequences
    }

    pub fn sequence(&self, i: usize) -> Vec<&str> {
        self.sequences[i].iter().map(|&id| self.token(id)).collect()
    }

    pub fn sequences(&self) -> impl Iterator<Item = impl Iterator<Item = &str> + '_> + '_ {
        self.sequences
            .iter()
            .map(move |s| s.iter().map(move |&id| self.token(id)))
    }

    pub fn token_count(&self) -> usize {
        self.sequences.iter().map(Vec::len).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WalkMode {
    #[serde(rename = "STAR_MID_WALKS")]
    MidWalks,
    #[serde(rename = "STAR_MID_WALKS_DUPLICATE_FREE")]
    MidWalksDuplicateFree,
    #[serde(rename = "STAR_RANDOM_WALKS")]
    RandomWalks,
    #[serde(rename = "STAR_RANDOM_WALKS_DUPLICATE_FREE")]
    RandomWalksDuplicateFree,
}

impl WalkMode {
    pub const ALL: [WalkMode; 4] = [
        WalkMode::MidWalks,
        WalkMode::MidWalksDuplicateFree,
        WalkMode::RandomWalks,
        WalkMode::RandomWalksDuplicateFree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WalkMode::MidWalks => "STAR_MID_WALKS",
            WalkMode::MidWalksDuplicateFree => "STAR_MID_WALKS_DUPLICATE_FREE",
            WalkMode::RandomWalks => "STAR_RANDOM_WALKS",
            WalkMode::RandomWalksDuplicateFree => "STAR_RANDOM_WALKS_DUPLICATE_FREE",
        }
    }

    fn duplicate_free(self) -> bool {
        matches!(self, WalkMode::MidWalksDuplicateFree | WalkMode::RandomWalksDuplicateFree)
    }
}

impl fmt::Display for WalkMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WalkMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.to_ascii_uppercase().replace('-', "_");
        WalkMode::ALL
            .into_iter()
            .find(|m| m.name() == norm || m.name().trim_start_matches("STAR_") == norm)
            .ok_or_else(|| format!("unknown walk mode {s:?}"))
    }
}

/// Transition probabilities of the four quoted-triple walks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Transitions {
    /// qs-walk: quoted triple to its subject.
    pub alpha: f64,
    /// oq-walk: object to the quoted triple containing it.
    pub beta: f64,
    /// qo-walk: quoted triple to its object.
    pub gamma: f64,
    /// sq-walk: subject to the quoted triple containing it.
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    /// Walks per root.
    pub walks_per_root: usize,
    /// Hops beyond the root.
    pub depth: usize,
    pub mode: WalkMode,
    #[serde(flatten)]
    pub transitions: Transitions,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks_per_root: 10,
            depth: 4,
            mode: WalkMode::RandomWalks,
            transitions: Transitions::default(),
            seed: 42,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), String> {
        let t = &self.transitions;
        for (name, p) in [("alpha", t.alpha), ("beta", t.beta), ("gamma", t.gamma), ("delta", t.delta)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} = {p} outside [0, 1]"));
            }
        }
        if self.depth < 1 {
            return Err("depth must be at least 1".into());
        }
        if self.walks_per_root < 1 {
            return Err("walks_per_root must be at least 1".into());
        }
        Ok(())
    }
}

/// Index of a term in a [`WalkGraph`].
pub type NodeId = u32;

/// A quoted triple as seen from one of its components.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QtCandidate {
    pub qt: NodeId,
    pub subject: NodeId,
    pub predicate: NodeId,
    pub object: NodeId,
}

/// Which transition a step took.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Qt2Subject,
    Object2Qt,
    Qt2Object,
    Subject2Qt,
    /// Ordinary expansion produced this many walks.
    Expanded(usize),
    /// No transition and no outgoing edge.
    Stuck,
}

/// One walk step at entity `e`, the tail of `walk` (or the root when `walk`
/// is empty).
///
/// Quoted-triple transitions replace `walk` in `wl` by its extension;
/// ordinary expansion appends one extension per entry of
/// `triples_e_subj` and leaves `walk` in place.
#[allow(clippy::too_many_arguments)]
pub fn qt_walk_step<R: Rng + ?Sized>(
    wl: &mut Vec<Vec<NodeId>>,
    walk: &[NodeId],
    e: NodeId,
    triples_e_subj: &[(NodeId, NodeId)],
    qt_e_obj: Option<QtCandidate>,
    qt_e_subj: Option<QtCandidate>,
    probs: &Transitions,
    rng: &mut R,
) -> StepOutcome {
    let rand_oq: f64 = rng.random();
    let rand_qs: f64 = rng.random();
    let rand_qo: f64 = rng.random();
    let rand_sq: f64 = rng.random();
    let mut new_walk = walk.to_vec();
    let mut modes = Vec::with_capacity(4);
    if qt_e_subj.is_some() && rand_qs < probs.alpha {
        modes.push(StepOutcome::Qt2Subject);
    }
    if qt_e_obj.is_some() && rand_oq < probs.beta {
        modes.push(StepOutcome::Object2Qt);
    }
    if qt_e_obj.is_some() && rand_qo < probs.gamma {
        modes.push(StepOutcome::Qt2Object);
    }
    if qt_e_subj.is_some() && rand_sq < probs.delta {
        modes.push(StepOutcome::Subject2Qt);
    }
    let Some(&mode) = modes.choose(rng) else {
        let start = if walk.is_empty() { vec![e] } else { new_walk };
        for &(p, o) in triples_e_subj {
            let mut w = start.clone();
            w.push(p);
            w.push(o);
            wl.push(w);
        }
        return if triples_e_subj.is_empty() {
            StepOutcome::Stuck
        } else {
            StepOutcome::Expanded(triples_e_subj.len())
        };
    };
    match mode {
        StepOutcome::Qt2Subject => {
            let qt = qt_e_subj.unwrap();
            if walk.is_empty() {
                new_walk.push(qt.qt);
            }
            new_walk.extend([qt.subject, qt.predicate, qt.object]);
        }
        StepOutcome::Object2Qt => {
            let qt = qt_e_obj.unwrap();
            if walk.is_empty() {
                new_walk.push(qt.object);
            }
            new_walk.push(qt.qt);
        }
        StepOutcome::Qt2Object => {
            let qt = qt_e_obj.unwrap();
            if walk.is_empty() {
                new_walk.push(qt.qt);
            }
            new_walk.push(qt.object);
        }
        StepOutcome::Subject2Qt => {
            let qt = qt_e_subj.unwrap();
            if walk.is_empty() {
                new_walk.push(qt.subject);
            }
            new_walk.push(qt.qt);
        }
        StepOutcome::Expanded(_) | StepOutcome::Stuck => unreachable!(),
    }
    if let Some(i) = wl.iter().position(|w| w.as_slice() == walk) {
        wl.remove(i);
    }
    wl.push(new_walk);
    mode
}

/// Adjacency view of a graph for walking.
pub struct WalkGraph {
    nodes: IndexSet<Term>,
    tokens: Vec<String>,
    out: Vec<Vec<(NodeId, NodeId)>>,
    inc: Vec<Vec<(NodeId, NodeId)>>,
    qt_subj: Vec<Vec<QtCandidate>>,
    qt_obj: Vec<Vec<QtCandidate>>,
    roots: Vec<NodeId>,
}

impl WalkGraph {
    pub fn new(graph: &Graph) -> Result<Self, TokenError> {
        let mut nodes: IndexSet<Term> = IndexSet::new();
        let roots_terms = graph.entities();
        for t in &roots_terms {
            nodes.insert(t.clone());
        }
        let id = |t: &Term, nodes: &mut IndexSet<Term>| nodes.insert_full(t.clone()).0 as NodeId;
        let mut edges = Vec::with_capacity(graph.len());
        for t in graph.triples() {
            edges.push((id(&t.subject, &mut nodes), id(&t.predicate, &mut nodes), id(&t.object, &mut nodes)));
        }
        let mut qts = Vec::with_capacity(graph.quoted_triples().len());
        for qt in graph.quoted_triples() {
            qts.push(QtCandidate {
                qt: id(&Term::QtRef(qt.id), &mut nodes),
                subject: id(&qt.subject, &mut nodes),
                predicate: id(&qt.predicate, &mut nodes),
                object: id(&qt.object, &mut nodes),
            });
        }
        let n = nodes.len();
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for (s, p, o) in edges {
            out[s as usize].push((p, o));
            inc[o as usize].push((s, p));
        }
        let mut qt_subj = vec![Vec::new(); n];
        let mut qt_obj = vec![Vec::new(); n];
        for c in qts {
            qt_subj[c.subject as usize].push(c);
            qt_obj[c.object as usize].push(c);
        }
        let tokens = nodes
            .iter()
            .map(|t| encode_term(graph, t))
            .collect::<Result<Vec<_>, _>>()?;
        let roots = (0..roots_terms.len() as NodeId).collect();
        Ok(WalkGraph {
            nodes,
            tokens,
            out,
            inc,
            qt_subj,
            qt_obj,
            roots,
        })
    }

    pub fn node(&self, term: &Term) -> Option<NodeId> {
        self.nodes.get_index_of(term).map(|i| i as NodeId)
    }

    pub fn term(&self, id: NodeId) -> &Term {
        &self.nodes[id as usize]
    }

    pub fn token(&self, id: NodeId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn out_edges(&self, e: NodeId) -> &[(NodeId, NodeId)] {
        &self.out[e as usize]
    }

    pub fn qts_with_subject(&self, e: NodeId) -> &[QtCandidate] {
        &self.qt_subj[e as usize]
    }

    pub fn qts_with_object(&self, e: NodeId) -> &[QtCandidate] {
        &self.qt_obj[e as usize]
    }

    /// One step on `walk` with `e` its tail. `single` restricts ordinary
    /// expansion to one uniformly chosen outgoing edge.
    fn step(
        &self,
        wl: &mut Vec<Vec<NodeId>>,
        walk: &[NodeId],
        e: NodeId,
        single: bool,
        probs: &Transitions,
        rng: &mut ChaCha8Rng,
    ) -> StepOutcome {
        let qt_obj = self.qt_obj[e as usize].choose(rng).copied();
        let qt_subj = self.qt_subj[e as usize].choose(rng).copied();
        let edges = &self.out[e as usize];
        let chosen;
        let triples = if single && edges.len() > 1 {
            chosen = [*edges.choose(rng).unwrap()];
            &chosen[..]
        } else {
            &edges[..]
        };
        qt_walk_step(wl, walk, e, triples, qt_obj, qt_subj, probs, rng)
    }

    fn tail(walk: &[NodeId], root: NodeId) -> NodeId {
        walk.last().copied().unwrap_or(root)
    }

    /// Single forward walk of up to `depth` steps.
    fn random_walk(&self, root: NodeId, cfg: &WalkConfig, rng: &mut ChaCha8Rng) -> Vec<NodeId> {
        let mut walk: Vec<NodeId> = Vec::new();
        for _ in 0..cfg.depth {
            let mut wl = vec![walk.clone()];
            let e = Self::tail(&walk, root);
            match self.step(&mut wl, &walk, e, true, &cfg.transitions, rng) {
                StepOutcome::Stuck => break,
                _ => walk = wl.pop().expect("step extended the walk"),
            }
        }
        if walk.is_empty() {
            walk.push(root);
        }
        walk
    }

    /// Breadth-first expansion of all walks, keeping at most
    /// `walks_per_root` distinct walks after each level.
    fn duplicate_free_walks(&self, root: NodeId, cfg: &WalkConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<NodeId>> {
        let mut wl: Vec<(Vec<NodeId>, bool)> = vec![(Vec::new(), false)];
        for _ in 0..cfg.depth {
            let mut next: IndexMap<Vec<NodeId>, bool> = IndexMap::new();
            for (walk, done) in wl {
                if done {
                    next.entry(walk).or_insert(true);
                    continue;
                }
                let mut tmp = vec![walk.clone()];
                let e = Self::tail(&walk, root);
                match self.step(&mut tmp, &walk, e, false, &cfg.transitions, rng) {
                    StepOutcome::Stuck => {
                        next.entry(walk).or_insert(true);
                    }
                    StepOutcome::Expanded(_) => {
                        for w in tmp.into_iter().skip(1) {
                            next.entry(w).or_insert(false);
                        }
                    }
                    _ => {
                        next.entry(tmp.pop().unwrap()).or_insert(false);
                    }
                }
            }
            let mut level: Vec<(Vec<NodeId>, bool)> = next.into_iter().collect();
            level.shuffle(rng);
            level.truncate(cfg.walks_per_root);
            wl = level;
            if wl.iter().all(|(_, done)| *done) {
                break;
            }
        }
        wl.into_iter()
            .map(|(mut w, _)| {
                if w.is_empty() {
                    w.push(root);
                }
                w
            })
            .collect()
    }

    /// A walk that grows forwards from its tail or backwards from its head,
    /// so the root may end up anywhere in the sequence.
    fn mid_walk(&self, root: NodeId, cfg: &WalkConfig, rng: &mut ChaCha8Rng) -> Vec<NodeId> {
        let mut walk: Vec<NodeId> = Vec::new();
        for _ in 0..cfg.depth {
            let head = walk.first().copied().unwrap_or(root);
            let can_back = !self.inc[head as usize].is_empty();
            let forward_first = rng.random::<f64>() < 0.5;
            let mut extended = false;
            for forward in [forward_first, !forward_first] {
                if forward {
                    let mut wl = vec![walk.clone()];
                    let e = Self::tail(&walk, root);
                    if self.step(&mut wl, &walk, e, true, &cfg.transitions, rng) != StepOutcome::Stuck {
                        walk = wl.pop().unwrap();
                        extended = true;
                        break;
                    }
                } else if can_back {
                    let &(s, p) = self.inc[head as usize].choose(rng).unwrap();
                    let mut w = vec![s, p];
                    if walk.is_empty() {
                        w.push(root);
                    } else {
                        w.extend_from_slice(&walk);
                    }
                    walk = w;
                    extended = true;
                    break;
                }
            }
            if !extended {
                break;
            }
        }
        if walk.is_empty() {
            walk.push(root);
        }
        walk
    }

    pub fn walks_for_root(&self, index: usize, cfg: &WalkConfig) -> Vec<Vec<NodeId>> {
        let root = self.roots[index];
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(index as u64);
        let n = cfg.walks_per_root;
        match cfg.mode {
            WalkMode::RandomWalks => (0..n).map(|_| self.random_walk(root, cfg, &mut rng)).collect(),
            WalkMode::MidWalks => (0..n).map(|_| self.mid_walk(root, cfg, &mut rng)).collect(),
            WalkMode::RandomWalksDuplicateFree => self.duplicate_free_walks(root, cfg, &mut rng),
            WalkMode::MidWalksDuplicateFree => {
                let mut seen: HashSet<Vec<NodeId>> = HashSet::new();
                let mut out = Vec::new();
                for _ in 0..n * 10 {
                    let w = self.mid_walk(root, cfg, &mut rng);
                    if seen.insert(w.clone()) {
                        out.push(w);
                        if out.len() == n {
                            break;
                        }
                    }
                }
                out
            }
        }
    }
}

/// Generates the corpus for every entity of `graph`. Output order is
/// (root index, walk index) regardless of thread scheduling.
pub fn generate_walks(graph: &Graph, cfg: &WalkConfig) -> Result<WalkCorpus, TokenError> {
    let wg = WalkGraph::new(graph)?;
    Ok(generate_walks_on(&wg, cfg))
}

pub fn generate_walks_on(wg: &WalkGraph, cfg: &WalkConfig) -> WalkCorpus {
    debug_assert!(!cfg.mode.duplicate_free() || cfg.walks_per_root >= 1);
    let per_root: Vec<Vec<Vec<NodeId>>> = (0..wg.roots.len())
        .into_par_iter()
        .map(|i| wg.walks_for_root(i, cfg))
        .collect();
    let mut corpus = WalkCorpus::new();
    for walks in per_root {
        for w in walks {
            corpus.push(w.iter().map(|&n| wg.token(n)));
        }
    }
    corpus
}
