//! Translational link prediction: TransE and TransU (one shared vector for
//! tokens used both as entity and as relation), trained with a margin
//! ranking loss and evaluated by tail ranking.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingTable;
use crate::error::{LinkPredError, TokenError};
use crate::graph::{Graph, Triple};
use crate::rdf_io::encode_term;

/// A triple as corpus tokens.
pub type TokenTriple = [String; 3];

pub fn encode_triples<'a>(
    graph: &Graph,
    triples: impl IntoIterator<Item = &'a Triple>,
) -> Result<Vec<TokenTriple>, TokenError> {
    triples
        .into_iter()
        .map(|t| {
            Ok([
                encode_term(graph, &t.subject)?,
                encode_term(graph, &t.predicate)?,
                encode_term(graph, &t.object)?,
            ])
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sharing {
    /// TransE: independent entity and relation tables.
    Separate,
    /// TransU: one vector per token whatever its role.
    Unified,
}

impl Sharing {
    pub fn model_name(self) -> &'static str {
        match self {
            Sharing::Separate => "TransE",
            Sharing::Unified => "TransU",
        }
    }
}

impl FromStr for Sharing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "separate" | "transe" => Ok(Sharing::Separate),
            "unified" | "transu" => Ok(Sharing::Unified),
            other => Err(format!("unknown sharing policy {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
}

impl FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "L1" | "1" => Ok(Norm::L1),
            "L2" | "2" => Ok(Norm::L2),
            other => Err(format!("unknown norm {other:?}")),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "L1",
            Norm::L2 => "L2",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LPConfig {
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub negatives: usize,
    pub norm: Norm,
    pub normalize_entities: bool,
    pub sharing: Sharing,
    pub seed: u64,
}

impl Default for LPConfig {
    fn default() -> Self {
        LPConfig {
            margin: 1.0,
            learning_rate: 0.01,
            epochs: 50,
            negatives: 1,
            norm: Norm::L1,
            normalize_entities: true,
            sharing: Sharing::Separate,
            seed: 42,
        }
    }
}

impl LPConfig {
    pub fn validate(&self) -> Result<(), LinkPredError> {
        let bad = |m: &str| Err(LinkPredError::InvalidConfig(m.into()));
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad("margin must be positive");
        }
        if self.negatives < 1 {
            return bad("negatives must be at least 1");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        Ok(())
    }
}

/// Row-major parameter storage with role-specific token lookups. Under
/// unified sharing a dual-role token maps to the same row in both roles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LPModel {
    pub dim: usize,
    pub sharing: Sharing,
    entity_row: IndexMap<String, usize>,
    relation_row: IndexMap<String, usize>,
    rows: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub rows: usize,
    pub pretrained: usize,
    pub random: usize,
}

/// `[s, p, o]` row indices.
type RowTriple = [usize; 3];

impl LPModel {
    /// Builds a model over the given entity and relation tokens, copying
    /// vectors from `table` where present and drawing the rest uniformly in
    /// `[-1/sqrt(dim), 1/sqrt(dim)]`.
    pub fn from_tokens<'a>(
        entities: impl IntoIterator<Item = &'a str>,
        relations: impl IntoIterator<Item = &'a str>,
        table: Option<&EmbeddingTable>,
        dim: usize,
        sharing: Sharing,
        seed: u64,
    ) -> (Self, Coverage) {
        let mut model = LPModel {
            dim,
            sharing,
            entity_row: IndexMap::new(),
            relation_row: IndexMap::new(),
            rows: Vec::new(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cov = Coverage::default();
        let bound = 1.0 / (dim as f64).sqrt();
        let mut add_row = |model: &mut LPModel, token: &str| -> usize {
            let row = model.rows.len() / dim;
            match table.and_then(|t| t.get(token)) {
                Some(v) => {
                    model.rows.extend_from_slice(v);
                    cov.pretrained += 1;
                }
                None => {
                    model.rows.extend((0..dim).map(|_| rng.random_range(-bound..bound)));
                    cov.random += 1;
                }
            }
            row
        };
        for e in entities {
            if !model.entity_row.contains_key(e) {
                let r = add_row(&mut model, e);
                model.entity_row.insert(e.to_owned(), r);
            }
        }
        for r in relations {
            if model.relation_row.contains_key(r) {
                continue;
            }
            let row = match (sharing, model.entity_row.get(r)) {
                (Sharing::Unified, Some(&row)) => row,
                _ => add_row(&mut model, r),
            };
            model.relation_row.insert(r.to_owned(), row);
        }
        cov.rows = model.rows.len() / dim.max(1);
        (model, cov)
    }

    pub fn entity_count(&self) -> usize {
        self.entity_row.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relation_row.len()
    }

    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.entity_row.keys().map(String::as_str)
    }

    pub fn row_count(&self) -> usize {
        self.rows.len() / self.dim.max(1)
    }

    pub fn entity_row(&self, token: &str) -> Option<usize> {
        self.entity_row.get(token).copied()
    }

    pub fn relation_row(&self, token: &str) -> Option<usize> {
        self.relation_row.get(token).copied()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.rows[r * self.dim..(r + 1) * self.dim]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.rows[r * self.dim..(r + 1) * self.dim]
    }

    pub fn entity(&self, token: &str) -> Option<&[f64]> {
        self.entity_row(token).map(|r| self.row(r))
    }

    pub fn relation(&self, token: &str) -> Option<&[f64]> {
        self.relation_row(token).map(|r| self.row(r))
    }

    /// Tokens used in both roles that resolve to the same row.
    pub fn shared_tokens(&self) -> Vec<&str> {
        self.relation_row
            .iter()
            .filter(|(t, r)| self.entity_row.get(*t) == Some(r))
            .map(|(t, _)| t.as_str())
            .collect()
    }

    fn rows_of(&self, t: &TokenTriple) -> Result<RowTriple, LinkPredError> {
        let unknown = |s: &str| LinkPredError::UnknownToken(s.to_owned());
        Ok([
            self.entity_row(&t[0]).ok_or_else(|| unknown(&t[0]))?,
            self.relation_row(&t[1]).ok_or_else(|| unknown(&t[1]))?,
            self.entity_row(&t[2]).ok_or_else(|| unknown(&t[2]))?,
        ])
    }

    fn distance(&self, t: RowTriple, norm: Norm) -> f64 {
        let (s, p, o) = (self.row(t[0]), self.row(t[1]), self.row(t[2]));
        let diffs = s.iter().zip(p).zip(o).map(|((s, p), o)| s + p - o);
        match norm {
            Norm::L1 => diffs.map(f64::abs).sum(),
            Norm::L2 => diffs.map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Model over the entities and relations of `graph`.
pub fn init_from_pretrained(
    table: &EmbeddingTable,
    graph: &Graph,
    sharing: Sharing,
    seed: u64,
) -> Result<(LPModel, Coverage), TokenError> {
    let entities: Vec<String> = graph.entities().iter().map(|t| encode_term(graph, t)).collect::<Result<_, _>>()?;
    let relations: Vec<String> = graph.relations().iter().map(|t| encode_term(graph, t)).collect::<Result<_, _>>()?;
    Ok(LPModel::from_tokens(
        entities.iter().map(String::as_str),
        relations.iter().map(String::as_str),
        Some(table),
        table.dim(),
        sharing,
        seed,
    ))
}

/// `-||s + p - o||`; higher is better.
pub fn score(model: &LPModel, s: &str, p: &str, o: &str, norm: Norm) -> Result<f64, LinkPredError> {
    let rows = model.rows_of(&[s.to_owned(), p.to_owned(), o.to_owned()])?;
    Ok(-model.distance(rows, norm))
}

/// Gradient of a distance with respect to `s + p - o`.
fn distance_grad(model: &LPModel, t: RowTriple, norm: Norm) -> Vec<f64> {
    let (s, p, o) = (model.row(t[0]), model.row(t[1]), model.row(t[2]));
    let x: Vec<f64> = s.iter().zip(p).zip(o).map(|((s, p), o)| s + p - o).collect();
    match norm {
        Norm::L1 => x.iter().map(|v| if *v > 0.0 { 1.0 } else if *v < 0.0 { -1.0 } else { 0.0 }).collect(),
        Norm::L2 => {
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n == 0.0 {
                vec![0.0; x.len()]
            } else {
                x.iter().map(|v| v / n).collect()
            }
        }
    }
}

/// `max(0, margin + d(pos) - d(neg))` and its gradient as `(row, grad)`
/// pairs; rows may repeat.
pub fn margin_loss_and_gradient(
    model: &LPModel,
    pos: [usize; 3],
    neg: [usize; 3],
    margin: f64,
    norm: Norm,
) -> (f64, Vec<(usize, Vec<f64>)>) {
    let loss = margin + model.distance(pos, norm) - model.distance(neg, norm);
    if loss <= 0.0 {
        return (0.0, Vec::new());
    }
    let gp = distance_grad(model, pos, norm);
    let gn = distance_grad(model, neg, norm);
    let neg_of = |g: &[f64]| g.iter().map(|v| -v).collect::<Vec<_>>();
    let grads = vec![
        (pos[0], gp.clone()),
        (pos[1], gp.clone()),
        (pos[2], neg_of(&gp)),
        (neg[0], neg_of(&gn)),
        (neg[1], neg_of(&gn)),
        (neg[2], gn),
    ];
    (loss, grads)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// Mean hinge loss per positive for each epoch.
    pub epoch_losses: Vec<f64>,
}

pub fn train_lp(model: &mut LPModel, train: &[TokenTriple], cfg: &LPConfig) -> Result<TrainReport, LinkPredError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(LinkPredError::EmptyTrain);
    }
    let rows: Vec<RowTriple> = train.iter().map(|t| model.rows_of(t)).collect::<Result<_, _>>()?;
    let known: HashSet<RowTriple> = rows.iter().copied().collect();
    let entity_rows: Vec<usize> = model.entity_row.values().copied().collect();
    let is_entity_row: HashSet<usize> = entity_rows.iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let pos = rows[i];
            for _ in 0..cfg.negatives {
                let head = rng.random::<bool>();
                let mut neg = pos;
                for _ in 0..20 {
                    let e = entity_rows[rng.random_range(0..entity_rows.len())];
                    neg = pos;
                    neg[if head { 0 } else { 2 }] = e;
                    if !known.contains(&neg) {
                        break;
                    }
                }
                let (loss, grads) = margin_loss_and_gradient(model, pos, neg, cfg.margin, cfg.norm);
                total += loss;
                for (r, g) in &grads {
                    for (p, g) in model.row_mut(*r).iter_mut().zip(g) {
                        *p -= cfg.learning_rate * g;
                    }
                }
                if cfg.normalize_entities {
                    for (r, _) in &grads {
                        if is_entity_row.contains(r) {
                            let row = model.row_mut(*r);
                            let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                            if n > 0.0 {
                                row.iter_mut().for_each(|v| *v /= n);
                            }
                        }
                    }
                }
            }
        }
        epoch_losses.push(total / rows.len() as f64);
    }
    Ok(TrainReport { epoch_losses })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RankMetrics {
    pub mrr: f64,
    pub hits1: f64,
    pub hits10: f64,
}

impl RankMetrics {
    pub fn from_ranks(ranks: &[f64]) -> Self {
        let n = ranks.len().max(1) as f64;
        RankMetrics {
            mrr: ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n,
            hits1: ranks.iter().filter(|&&r| r <= 1.0).count() as f64 / n,
            hits10: ranks.iter().filter(|&&r| r <= 10.0).count() as f64 / n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Raw,
    Filtered,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub raw: RankMetrics,
    pub filtered: RankMetrics,
    pub test_triples: usize,
    pub candidates: usize,
}

impl MetricsReport {
    pub fn get(&self, setting: Setting) -> RankMetrics {
        match setting {
            Setting::Raw => self.raw,
            Setting::Filtered => self.filtered,
        }
    }
}

/// Per-triple `(raw rank, filtered rank)` of the true tail.
pub fn tail_ranks(
    model: &LPModel,
    test: &[TokenTriple],
    known: &[TokenTriple],
    candidates: &[String],
    norm: Norm,
) -> Result<Vec<(f64, f64)>, LinkPredError> {
    if test.is_empty() {
        return Err(LinkPredError::EmptyTest);
    }
    let cand_rows: Vec<usize> = candidates
        .iter()
        .map(|c| model.entity_row(c).ok_or_else(|| LinkPredError::UnknownToken(c.clone())))
        .collect::<Result<_, _>>()?;
    let mut tails: HashMap<(usize, usize), HashSet<usize>> = HashMap::new();
    for t in known {
        // Known triples outside the model cannot compete as candidates.
        if let Ok([s, p, o]) = model.rows_of(t) {
            tails.entry((s, p)).or_default().insert(o);
        }
    }
    let rows: Vec<RowTriple> = test.iter().map(|t| model.rows_of(t)).collect::<Result<_, _>>()?;
    Ok(rows
        .par_iter()
        .map(|&[s, p, o]| {
            let truth = -model.distance([s, p, o], norm);
            let filter = tails.get(&(s, p));
            let (mut better, mut ties, mut fbetter, mut fties) = (0usize, 0usize, 0usize, 0usize);
            for &c in &cand_rows {
                if c == o {
                    continue;
                }
                let sc = -model.distance([s, p, c], norm);
                let filtered_out = filter.is_some_and(|f| f.contains(&c));
                if sc > truth {
                    better += 1;
                    fbetter += usize::from(!filtered_out);
                } else if sc == truth {
                    ties += 1;
                    fties += usize::from(!filtered_out);
                }
            }
            (
                1.0 + better as f64 + ties as f64 / 2.0,
                1.0 + fbetter as f64 + fties as f64 / 2.0,
            )
        })
        .collect())
}

pub fn evaluate(
    model: &LPModel,
    test: &[TokenTriple],
    known: &[TokenTriple],
    candidates: &[String],
    norm: Norm,
) -> Result<MetricsReport, LinkPredError> {
    let ranks = tail_ranks(model, test, known, candidates, norm)?;
    let raw: Vec<f64> = ranks.iter().map(|r| r.0).collect();
    let filtered: Vec<f64> = ranks.iter().map(|r| r.1).collect();
    Ok(MetricsReport {
        raw: RankMetrics::from_ranks(&raw),
        filtered: RankMetrics::from_ranks(&filtered),
        test_triples: test.len(),
        candidates: candidates.len(),
    })
}
