//! Sequence embeddings trained with negative sampling.
//!
//! All four algorithms share one objective. An example is a set of
//! `(input token, output block)` pairs and a target token; its score is
//!
//! ```text
//! s = 1/m * sum_{(x, b)} in[x] . out_b[target]
//! ```
//!
//! skip-gram uses the centre as sole input and block 0; structured
//! skip-gram selects the block by the context offset; CBOW averages the
//! context over block 0; cwindow averages the context with one block per
//! offset. Tying all blocks therefore recovers the unstructured variants.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::EmbedError;
use crate::walks::WalkCorpus;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Cbow,
    SkipGram,
    Cwindow,
    StructuredSkipGram,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Cbow,
        Algorithm::SkipGram,
        Algorithm::Cwindow,
        Algorithm::StructuredSkipGram,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cbow => "cbow",
            Algorithm::SkipGram => "skip-gram",
            Algorithm::Cwindow => "cwindow",
            Algorithm::StructuredSkipGram => "structured-skip-gram",
        }
    }

    pub fn positional(self) -> bool {
        matches!(self, Algorithm::Cwindow | Algorithm::StructuredSkipGram)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == norm || a.name().replace('-', "") == norm)
            .ok_or_else(|| format!("unknown embedding algorithm {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedConfig {
    pub dim: usize,
    pub window: usize,
    pub algorithm: Algorithm,
    pub epochs: usize,
    pub lr_initial: f64,
    pub lr_final: f64,
    pub negatives: usize,
    pub min_count: usize,
    pub seed: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dim: 50,
            window: 5,
            algorithm: Algorithm::SkipGram,
            epochs: 5,
            lr_initial: 0.025,
            lr_final: 0.0001,
            negatives: 5,
            min_count: 1,
            seed: 42,
        }
    }
}

impl EmbedConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        let bad = |m: &str| Err(EmbedError::InvalidConfig(m.into()));
        if self.dim < 1 {
            return bad("dim must be at least 1");
        }
        if self.window < 1 {
            return bad("window must be at least 1");
        }
        if self.negatives < 1 {
            return bad("negatives must be at least 1");
        }
        if !(self.lr_initial.is_finite() && self.lr_final.is_finite() && self.lr_initial >= 0.0 && self.lr_final >= 0.0) {
            return bad("learning rates must be finite and non-negative");
        }
        Ok(())
    }

    fn blocks(&self) -> usize {
        if self.algorithm.positional() {
            2 * self.window
        } else {
            1
        }
    }
}

/// Token vectors in insertion order.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    index: IndexMap<String, ()>,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            index: IndexMap::new(),
            data: Vec::new(),
        }
    }

    /// Adds a row; returns false (leaving the table unchanged) for a
    /// duplicate token.
    pub fn insert(&mut self, token: String, vector: &[f64]) -> bool {
        assert_eq!(vector.len(), self.dim, "vector dimension mismatch");
        if self.index.contains_key(&token) {
            return false;
        }
        self.index.insert(token, ());
        self.data.extend_from_slice(vector);
        true
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        let i = self.index.get_index_of(token)?;
        Some(&self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> + '_ {
        self.index
            .keys()
            .zip(self.data.chunks(self.dim.max(1)))
            .map(|(k, v)| (k.as_str(), v))
    }

    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        Some(cosine(self.get(a)?, self.get(b)?))
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Input vectors plus `blocks` output matrices, all row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub dim: usize,
    pub vocab: usize,
    pub blocks: usize,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

impl Params {
    pub fn zeros(dim: usize, vocab: usize, blocks: usize) -> Self {
        Params {
            dim,
            vocab,
            blocks,
            input: vec![0.0; dim * vocab],
            output: vec![0.0; dim * vocab * blocks],
        }
    }

    /// Uniform input vectors in `[-0.5/dim, 0.5/dim]`, zero outputs.
    pub fn init(dim: usize, vocab: usize, blocks: usize, rng: &mut impl Rng) -> Self {
        let mut p = Params::zeros(dim, vocab, blocks);
        let half = 0.5 / dim as f64;
        for x in &mut p.input {
            *x = rng.random_range(-half..=half);
        }
        p
    }

    pub fn input_row(&self, token: u32) -> &[f64] {
        let i = token as usize * self.dim;
        &self.input[i..i + self.dim]
    }

    pub fn output_row(&self, block: u32, token: u32) -> &[f64] {
        let i = self.output_index(block, token);
        &self.output[i..i + self.dim]
    }

    fn output_index(&self, block: u32, token: u32) -> usize {
        (block as usize * self.vocab + token as usize) * self.dim
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    /// `(input token, output block)` pairs; averaged.
    pub inputs: Vec<(u32, u32)>,
    pub target: u32,
    pub negatives: Vec<u32>,
}

/// Sparse gradient: rows may repeat and must be accumulated.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    pub input: Vec<(u32, Vec<f64>)>,
    /// Keyed by `(block, token)`.
    pub output: Vec<((u32, u32), Vec<f64>)>,
}

impl Gradients {
    /// `params -= lr * self`.
    pub fn apply(&self, params: &mut Params, lr: f64) {
        let d = params.dim;
        for (tok, g) in &self.input {
            let i = *tok as usize * d;
            for (p, g) in params.input[i..i + d].iter_mut().zip(g) {
                *p -= lr * g;
            }
        }
        for ((b, tok), g) in &self.output {
            let i = params.output_index(*b, *tok);
            for (p, g) in params.output[i..i + d].iter_mut().zip(g) {
                *p -= lr * g;
            }
        }
    }

    pub fn dense_input(&self, params: &Params) -> Vec<f64> {
        let mut out = vec![0.0; params.input.len()];
        for (tok, g) in &self.input {
            let i = *tok as usize * params.dim;
            for (o, g) in out[i..i + params.dim].iter_mut().zip(g) {
                *o += g;
            }
        }
        out
    }

    pub fn dense_output(&self, params: &Params) -> Vec<f64> {
        let mut out = vec![0.0; params.output.len()];
        for ((b, tok), g) in &self.output {
            let i = params.output_index(*b, *tok);
            for (o, g) in out[i..i + params.dim].iter_mut().zip(g) {
                *o += g;
            }
        }
        out
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln sigmoid(x)`, stable for large |x|.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Negative-sampling loss summed over `batch`, with analytic gradients.
pub fn loss_and_gradient(batch: &[Example], params: &Params) -> (f64, Gradients) {
    let mut loss = 0.0;
    let mut grads = Gradients::default();
    let mut dl_ds = Vec::new();
    for ex in batch {
        if ex.inputs.is_empty() {
            continue;
        }
        let scale = 1.0 / ex.inputs.len() as f64;
        let targets: Vec<(u32, bool)> = std::iter::once((ex.target, true))
            .chain(ex.negatives.iter().map(|&n| (n, false)))
            .collect();
        dl_ds.clear();
        for &(t, positive) in &targets {
            let s = scale
                * ex.inputs
                    .iter()
                    .map(|&(x, b)| dot(params.input_row(x), params.output_row(b, t)))
                    .sum::<f64>();
            if positive {
                loss += neg_log_sigmoid(s);
                dl_ds.push(scale * (sigmoid(s) - 1.0));
            } else {
                loss += neg_log_sigmoid(-s);
                dl_ds.push(scale * sigmoid(s));
            }
        }
        for &(x, b) in &ex.inputs {
            let mut gx = vec![0.0; params.dim];
            for (&(t, _), &g) in targets.iter().zip(&dl_ds) {
                for (gi, o) in gx.iter_mut().zip(params.output_row(b, t)) {
                    *gi += g * o;
                }
                let inp = params.input_row(x);
                grads.output.push(((b, t), inp.iter().map(|v| g * v).collect()));
            }
            grads.input.push((x, gx));
        }
    }
    (loss, grads)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Output of [`train_embeddings`].
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedEmbeddings {
    pub table: EmbeddingTable,
    pub counts: Vec<u64>,
    pub params: Params,
    /// Mean loss per example for each epoch.
    pub epoch_losses: Vec<f64>,
}

fn offset_block(offset: isize, window: usize) -> u32 {
    let w = window as isize;
    (if offset < 0 { offset + w } else { offset + w - 1 }) as u32
}

/// Trains embeddings single-threaded; identical inputs give identical
/// tables.
pub fn train_embeddings(corpus: &WalkCorpus, cfg: &EmbedConfig) -> Result<TrainedEmbeddings, EmbedError> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(EmbedError::EmptyCorpus);
    }
    let mut counts_all = vec![0u64; corpus.vocab().len()];
    for seq in corpus.id_sequences() {
        for &t in seq {
            counts_all[t as usize] += 1;
        }
    }
    // Corpus vocabulary id -> pruned id.
    let mut remap = vec![u32::MAX; counts_all.len()];
    let mut kept = Vec::new();
    for (i, &c) in counts_all.iter().enumerate() {
        if c >= cfg.min_count as u64 {
            remap[i] = kept.len() as u32;
            kept.push(i);
        }
    }
    if kept.is_empty() {
        return Err(EmbedError::EmptyVocabulary(cfg.min_count));
    }
    let counts: Vec<u64> = kept.iter().map(|&i| counts_all[i]).collect();
    let sequences: Vec<Vec<u32>> = corpus
        .id_sequences()
        .iter()
        .map(|s| s.iter().map(|&t| remap[t as usize]).filter(|&t| t != u32::MAX).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let blocks = cfg.blocks();
    let mut params = Params::init(cfg.dim, kept.len(), blocks, &mut rng);
    let noise = WeightedIndex::new(counts.iter().map(|&c| (c as f64).powf(0.75)))
        .map_err(|e| EmbedError::InvalidConfig(e.to_string()))?;

    let tokens_per_epoch: usize = sequences.iter().map(Vec::len).sum();
    let total = (tokens_per_epoch * cfg.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let w = cfg.window as isize;
    for _ in 0..cfg.epochs {
        let mut epoch_loss = 0.0;
        let mut examples = 0usize;
        for seq in &sequences {
            for (i, &centre) in seq.iter().enumerate() {
                let lr = cfg.lr_initial + (cfg.lr_final - cfg.lr_initial) * (processed as f64 / total);
                processed += 1;
                let context: Vec<(u32, u32)> = (-w..=w)
                    .filter(|&off| off != 0)
                    .filter_map(|off| {
                        let j = i as isize + off;
                        (j >= 0 && (j as usize) < seq.len()).then(|| {
                            let b = if blocks > 1 { offset_block(off, cfg.window) } else { 0 };
                            (seq[j as usize], b)
                        })
                    })
                    .collect();
                if context.is_empty() {
                    continue;
                }
                let draw = |target: u32, rng: &mut ChaCha8Rng| -> Vec<u32> {
                    (0..cfg.negatives)
                        .map(|_| noise.sample(rng) as u32)
                        .filter(|&n| n != target)
                        .collect()
                };
                let batch: Vec<Example> = match cfg.algorithm {
                    Algorithm::Cbow | Algorithm::Cwindow => vec![Example {
                        inputs: context,
                        target: centre,
                        negatives: draw(centre, &mut rng),
                    }],
                    Algorithm::SkipGram | Algorithm::StructuredSkipGram => context
                        .into_iter()
                        .map(|(ctx, b)| Example {
                            inputs: vec![(centre, b)],
                            target: ctx,
                            negatives: draw(ctx, &mut rng),
                        })
                        .collect(),
                };
                for ex in &batch {
                    let (loss, grads) = loss_and_gradient(std::slice::from_ref(ex), &params);
                    grads.apply(&mut params, lr);
                    epoch_loss += loss;
                    examples += 1;
                }
            }
        }
        epoch_losses.push(if examples == 0 { 0.0 } else { epoch_loss / examples as f64 });
    }

    let mut table = EmbeddingTable::new(cfg.dim);
    for (new, &old) in kept.iter().enumerate() {
        table.insert(corpus.token(old as u32).to_owned(), params.input_row(new as u32));
    }
    Ok(TrainedEmbeddings {
        table,
        counts,
        params,
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_params(rng: &mut ChaCha8Rng, dim: usize, vocab: usize, blocks: usize) -> Params {
        let mut p = Params::zeros(dim, vocab, blocks);
        for x in p.input.iter_mut().chain(p.output.iter_mut()) {
            *x = rng.random_range(-1.0..1.0);
        }
        p
    }

    fn random_example(rng: &mut ChaCha8Rng, vocab: u32, blocks: u32) -> Example {
        let m = rng.random_range(1..4);
        Example {
            inputs: (0..m)
                .map(|_| (rng.random_range(0..vocab), rng.random_range(0..blocks)))
                .collect(),
            target: rng.random_range(0..vocab),
            negatives: (0..3).map(|_| rng.random_range(0..vocab)).collect(),
        }
    }

    pub(crate) fn check_fd(seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = random_params(&mut rng, 3, 5, 2);
        let batch: Vec<Example> = (0..2).map(|_| random_example(&mut rng, 5, 2)).collect();
        let (_, g) = loss_and_gradient(&batch, &params);
        let gi = g.dense_input(&params);
        let go = g.dense_output(&params);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..params.input.len() + params.output.len() {
            let mut plus = params.clone();
            let mut minus = params.clone();
            let (analytic, slot_p, slot_m) = if k < params.input.len() {
                (gi[k], &mut plus.input[k], &mut minus.input[k])
            } else {
                let j = k - params.input.len();
                (go[j], &mut plus.output[j], &mut minus.output[j])
            };
            *slot_p += h;
            *slot_m -= h;
            let numeric = (loss_and_gradient(&batch, &plus).0 - loss_and_gradient(&batch, &minus).0) / (2.0 * h);
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
            worst = worst.max(err);
        }
        worst
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..20 {
            let err = check_fd(seed);
            assert!(err < 1e-4, "seed {seed}: relative error {err}");
        }
    }

    #[test]
    fn zero_params_loss_is_ln2_per_term() {
        let p = Params::zeros(4, 6, 1);
        let ex = Example {
            inputs: vec![(0, 0)],
            target: 1,
            negatives: vec![2, 3, 4, 5, 2],
        };
        let (loss, _) = loss_and_gradient(&[ex], &p);
        assert!((loss - 6.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn single_step_descends() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut p = random_params(&mut rng, 4, 6, 1);
        let ex = [Example {
            inputs: vec![(0, 0)],
            target: 1,
            negatives: vec![2, 3],
        }];
        let (before, g) = loss_and_gradient(&ex, &p);
        g.apply(&mut p, 1e-3);
        assert!(loss_and_gradient(&ex, &p).0 < before);
    }

    #[test]
    fn tied_blocks_reduce_to_unstructured() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let flat = random_params(&mut rng, 3, 5, 1);
        let mut tied = Params::zeros(3, 5, 4);
        tied.input = flat.input.clone();
        for b in 0..4 {
            let n = flat.output.len();
            tied.output[b * n..(b + 1) * n].copy_from_slice(&flat.output);
        }
        // cwindow with tied blocks == CBOW
        let cw = Example {
            inputs: vec![(0, 0), (1, 1), (3, 2), (4, 3)],
            target: 2,
            negatives: vec![1, 4],
        };
        let cbow = Example {
            inputs: cw.inputs.iter().map(|&(x, _)| (x, 0)).collect(),
            ..cw.clone()
        };
        let (l1, g1) = loss_and_gradient(&[cw], &tied);
        let (l2, g2) = loss_and_gradient(&[cbow], &flat);
        assert!((l1 - l2).abs() < 1e-12);
        let (d1, d2) = (g1.dense_input(&tied), g2.dense_input(&flat));
        for (a, b) in d1.iter().zip(&d2) {
            assert!((a - b).abs() < 1e-12);
        }
        // Summing block gradients gives the shared gradient.
        let o1 = g1.dense_output(&tied);
        let o2 = g2.dense_output(&flat);
        let n = o2.len();
        for j in 0..n {
            let s: f64 = (0..4).map(|b| o1[b * n + j]).sum();
            assert!((s - o2[j]).abs() < 1e-12);
        }
        // structured skip-gram with tied blocks == skip-gram
        let sg = Example {
            inputs: vec![(2, 3)],
            target: 0,
            negatives: vec![4],
        };
        let plain = Example {
            inputs: vec![(2, 0)],
            ..sg.clone()
        };
        assert!((loss_and_gradient(&[sg], &tied).0 - loss_and_gradient(&[plain], &flat).0).abs() < 1e-12);
    }

    fn corpus_of(lines: &[&str], repeat: usize) -> WalkCorpus {
        let mut c = WalkCorpus::new();
        for _ in 0..repeat {
            for l in lines {
                c.push(l.split(' '));
            }
        }
        c
    }

    #[test]
    fn co_occurring_tokens_are_closer() {
        // Sequences draw uniformly from one of two disjoint clusters, so A
        // and B share contexts at every offset while C never meets A.
        let clusters = [["A", "B", "x", "y", "u", "v"], ["C", "D", "z", "w", "s", "t"]];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut corpus = WalkCorpus::new();
        for i in 0..400 {
            let c = &clusters[i % 2];
            corpus.push((0..6).map(|_| c[rng.random_range(0..c.len())]));
        }
        for algorithm in Algorithm::ALL {
            let cfg = EmbedConfig {
                dim: 16,
                window: 2,
                algorithm,
                epochs: 10,
                seed: 5,
                ..Default::default()
            };
            let t = train_embeddings(&corpus, &cfg).unwrap();
            let ab = t.table.cosine("A", "B").unwrap();
            let ac = t.table.cosine("A", "C").unwrap();
            assert!(ab > ac, "{algorithm}: cos(A,B)={ab} cos(A,C)={ac}");
        }
    }

    #[test]
    fn zero_epochs_is_initialization() {
        let corpus = corpus_of(&["a b c", "c d"], 1);
        let cfg = EmbedConfig {
            dim: 4,
            epochs: 0,
            seed: 11,
            ..Default::default()
        };
        let t = train_embeddings(&corpus, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let init = Params::init(4, 4, 1, &mut rng);
        assert_eq!(t.params, init);
        assert_eq!(t.table.get("a").unwrap(), init.input_row(0));
    }

    #[test]
    fn structured_blocks_distinguish_order() {
        let corpus = corpus_of(&["X Y Z"], 200);
        let cfg = EmbedConfig {
            dim: 8,
            window: 1,
            algorithm: Algorithm::StructuredSkipGram,
            epochs: 5,
            negatives: 2,
            seed: 1,
            ..Default::default()
        };
        let t = train_embeddings(&corpus, &cfg).unwrap();
        // block 0 = offset -1, block 1 = offset +1
        let y = 1;
        let minus = t.params.output_row(0, y);
        let plus = t.params.output_row(1, y);
        let diff: f64 = minus.iter().zip(plus).map(|(a, b)| (a - b).abs()).sum();
        assert!(diff > 1e-3);
    }

    #[test]
    fn loss_decreases_over_first_epochs() {
        let corpus = corpus_of(&["A B x y", "B A y x", "C D z w", "D C w z"], 20);
        let cfg = EmbedConfig {
            dim: 10,
            window: 2,
            epochs: 5,
            seed: 2,
            ..Default::default()
        };
        let t = train_embeddings(&corpus, &cfg).unwrap();
        for w in t.epoch_losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{:?}", t.epoch_losses);
        }
    }

    #[test]
    fn deterministic_and_pruned() {
        let corpus = corpus_of(&["a b c a", "rare a b"], 3);
        let cfg = EmbedConfig {
            dim: 5,
            min_count: 4,
            ..Default::default()
        };
        let a = train_embeddings(&corpus, &cfg).unwrap();
        let b = train_embeddings(&corpus, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.table.get("rare").is_none());
        assert!(a.table.get("a").is_some());
        let cfg = EmbedConfig {
            min_count: 1000,
            ..Default::default()
        };
        assert_eq!(train_embeddings(&corpus, &cfg), Err(EmbedError::EmptyVocabulary(1000)));
        assert_eq!(train_embeddings(&WalkCorpus::new(), &EmbedConfig::default()), Err(EmbedError::EmptyCorpus));
    }
}
