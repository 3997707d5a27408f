//! Seeded random and grid hyperparameter search over the walk and embedding
//! settings, plus a binned variance-ratio importance estimate.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::Algorithm;
use crate::error::{PipelineError, SearchError};
use crate::pipeline::{run_pipeline, PipelineConfig};
use crate::walks::WalkMode;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub gamma: [f64; 2],
    pub delta: [f64; 2],
    pub walks_per_root: Vec<usize>,
    /// Inclusive range.
    pub depth: [usize; 2],
    pub modes: Vec<WalkMode>,
    pub dims: Vec<usize>,
    pub windows: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub budget: usize,
    pub workers: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            alpha: [0.0, 1.0],
            beta: [0.0, 1.0],
            gamma: [0.0, 1.0],
            delta: [0.0, 1.0],
            walks_per_root: vec![10, 100, 200],
            depth: [3, 12],
            modes: WalkMode::ALL.to_vec(),
            dims: vec![50, 100, 200, 400],
            windows: vec![5, 7, 9, 11],
            algorithms: Algorithm::ALL.to_vec(),
            budget: 50,
            workers: 1,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: String| Err(SearchError::InvalidSpace(m));
        for (name, [lo, hi]) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma), ("delta", self.delta)] {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return bad(format!("{name} range [{lo}, {hi}] not within [0, 1]"));
            }
        }
        if self.depth[0] < 1 || self.depth[0] > self.depth[1] {
            return bad(format!("depth range {:?}", self.depth));
        }
        if self.walks_per_root.is_empty()
            || self.modes.is_empty()
            || self.dims.is_empty()
            || self.windows.is_empty()
            || self.algorithms.is_empty()
        {
            return bad("empty domain".into());
        }
        if self.budget < 1 {
            return bad("budget must be at least 1".into());
        }
        Ok(())
    }
}

/// One sampled point of the space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub walks_per_root: usize,
    pub depth: usize,
    pub mode: WalkMode,
    pub dim: usize,
    pub window: usize,
    pub algorithm: Algorithm,
}

impl TrialParams {
    pub fn apply(&self, base: &PipelineConfig) -> PipelineConfig {
        let mut cfg = base.clone();
        let t = &mut cfg.walk.transitions;
        (t.alpha, t.beta, t.gamma, t.delta) = (self.alpha, self.beta, self.gamma, self.delta);
        cfg.walk.walks_per_root = self.walks_per_root;
        cfg.walk.depth = self.depth;
        cfg.walk.mode = self.mode;
        cfg.embed.dim = self.dim;
        cfg.embed.window = self.window;
        cfg.embed.algorithm = self.algorithm;
        cfg.output_dir = None;
        cfg
    }

    /// Named values for importance analysis.
    pub fn values(&self) -> Vec<(&'static str, ParamValue)> {
        use ParamValue::*;
        vec![
            ("alpha", Continuous(self.alpha)),
            ("beta", Continuous(self.beta)),
            ("gamma", Continuous(self.gamma)),
            ("delta", Continuous(self.delta)),
            ("walks_per_root", Discrete(self.walks_per_root.to_string())),
            ("depth", Discrete(self.depth.to_string())),
            ("mode", Discrete(self.mode.name().into())),
            ("dim", Discrete(self.dim.to_string())),
            ("window", Discrete(self.window.to_string())),
            ("algorithm", Discrete(self.algorithm.name().into())),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParamValue {
    /// A probability in [0, 1].
    Continuous(f64),
    Discrete(String),
}

pub fn sample_params(space: &SearchSpace, rng: &mut impl Rng) -> TrialParams {
    let mut unif = |[lo, hi]: [f64; 2]| if lo == hi { lo } else { rng.random_range(lo..hi) };
    let (alpha, beta, gamma, delta) = (unif(space.alpha), unif(space.beta), unif(space.gamma), unif(space.delta));
    TrialParams {
        alpha,
        beta,
        gamma,
        delta,
        walks_per_root: *space.walks_per_root.choose(rng).unwrap(),
        depth: rng.random_range(space.depth[0]..=space.depth[1]),
        mode: *space.modes.choose(rng).unwrap(),
        dim: *space.dims.choose(rng).unwrap(),
        window: *space.windows.choose(rng).unwrap(),
        algorithm: *space.algorithms.choose(rng).unwrap(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub params: TrialParams,
    /// Mean filtered validation MRR; `None` when the trial failed or had no
    /// validation triples.
    pub objective: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Option<usize>,
    pub trials: Vec<Trial>,
}

impl SearchResult {
    pub fn best_trial(&self) -> Option<&Trial> {
        self.best.map(|i| &self.trials[i])
    }
}

/// Runs `evaluate` on each parameter set, in parallel up to `workers`, and
/// keeps the log in index order.
pub fn run_trials<F>(params: Vec<TrialParams>, workers: usize, evaluate: F) -> SearchResult
where
    F: Fn(&TrialParams) -> Result<Option<f64>, PipelineError> + Sync,
{
    let run = || {
        params
            .into_par_iter()
            .enumerate()
            .map(|(index, params)| {
                let (objective, error) = match evaluate(&params) {
                    Ok(o) => (o, None),
                    Err(e) => (None, Some(e.to_string())),
                };
                Trial {
                    index,
                    params,
                    objective,
                    error,
                }
            })
            .collect::<Vec<_>>()
    };
    let trials = match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    let best = trials
        .iter()
        .filter_map(|t| t.objective.map(|o| (t.index, o)))
        .fold(None, |acc: Option<(usize, f64)>, (i, o)| match acc {
            Some((_, b)) if b >= o => acc,
            _ => Some((i, o)),
        })
        .map(|(i, _)| i);
    SearchResult { best, trials }
}

fn pipeline_objective(base: &PipelineConfig) -> impl Fn(&TrialParams) -> Result<Option<f64>, PipelineError> + Sync + '_ {
    move |p| Ok(run_pipeline(&p.apply(base))?.objective())
}

pub fn random_search(space: &SearchSpace, base: &PipelineConfig, seed: u64) -> Result<SearchResult, SearchError> {
    random_search_with(space, seed, pipeline_objective(base))
}

/// Random search with a caller-supplied objective.
pub fn random_search_with<F>(space: &SearchSpace, seed: u64, evaluate: F) -> Result<SearchResult, SearchError>
where
    F: Fn(&TrialParams) -> Result<Option<f64>, PipelineError> + Sync,
{
    space.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = (0..space.budget).map(|_| sample_params(space, &mut rng)).collect();
    Ok(run_trials(params, space.workers, evaluate))
}

/// Every combination of the discrete domains (walks per root, depth
/// endpoints, modes, dims, windows, algorithms) with each probability at the
/// midpoint of its range, truncated to the budget.
pub fn grid_points(space: &SearchSpace) -> Result<Vec<TrialParams>, SearchError> {
    space.validate()?;
    let mid = |[lo, hi]: [f64; 2]| (lo + hi) / 2.0;
    let depths: Vec<usize> = (space.depth[0]..=space.depth[1]).collect();
    let mut out = Vec::new();
    for &walks_per_root in &space.walks_per_root {
        for &depth in &depths {
            for &mode in &space.modes {
                for &dim in &space.dims {
                    for &window in &space.windows {
                        for &algorithm in &space.algorithms {
                            if out.len() == space.budget {
                                return Ok(out);
                            }
                            out.push(TrialParams {
                                alpha: mid(space.alpha),
                                beta: mid(space.beta),
                                gamma: mid(space.gamma),
                                delta: mid(space.delta),
                                walks_per_root,
                                depth,
                                mode,
                                dim,
                                window,
                                algorithm,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn grid_search(space: &SearchSpace, base: &PipelineConfig) -> Result<SearchResult, SearchError> {
    Ok(run_trials(grid_points(space)?, space.workers, pipeline_objective(base)))
}

pub const MIN_TRIALS_FOR_IMPORTANCE: usize = 20;
pub const CONTINUOUS_BINS: usize = 8;

/// Bias-corrected share of objective variance explained by each parameter's
/// bins (omega squared), clipped at zero and rescaled if the shares sum
/// above one. Continuous parameters use 8 equal-width bins on [0, 1]; each
/// discrete value is its own bin.
pub fn report_importance(trials: &[Trial]) -> Result<Vec<(String, f64)>, SearchError> {
    let scored: Vec<(&TrialParams, f64)> = trials.iter().filter_map(|t| t.objective.map(|o| (&t.params, o))).collect();
    if scored.len() < MIN_TRIALS_FOR_IMPORTANCE {
        return Err(SearchError::InsufficientData {
            needed: MIN_TRIALS_FOR_IMPORTANCE,
            got: scored.len(),
        });
    }
    let names: Vec<&str> = scored[0].0.values().into_iter().map(|(n, _)| n).collect();
    let columns: Vec<Vec<String>> = (0..names.len())
        .map(|k| {
            scored
                .iter()
                .map(|(p, _)| match &p.values()[k].1 {
                    ParamValue::Continuous(x) => {
                        let b = ((x * CONTINUOUS_BINS as f64) as usize).min(CONTINUOUS_BINS - 1);
                        format!("bin{b}")
                    }
                    ParamValue::Discrete(s) => s.clone(),
                })
                .collect()
        })
        .collect();
    let y: Vec<f64> = scored.iter().map(|(_, o)| *o).collect();
    let mut scores: Vec<(String, f64)> = names
        .iter()
        .zip(&columns)
        .map(|(n, bins)| (n.to_string(), omega_squared(bins, &y)))
        .collect();
    let total: f64 = scores.iter().map(|s| s.1).sum();
    if total > 1.0 {
        scores.iter_mut().for_each(|s| s.1 /= total);
    }
    Ok(scores)
}

pub fn omega_squared(groups: &[String], y: &[f64]) -> f64 {
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if sst <= f64::EPSILON * n as f64 * mean.abs().max(1.0) {
        return 0.0;
    }
    let mut bins: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for (g, v) in groups.iter().zip(y) {
        let e = bins.entry(g.as_str()).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    let k = bins.len();
    if k < 2 || n <= k {
        return 0.0;
    }
    let ssb: f64 = bins.values().map(|(s, c)| *c as f64 * (s / *c as f64 - mean).powi(2)).sum();
    let msw = (sst - ssb).max(0.0) / (n - k) as f64;
    ((ssb - (k - 1) as f64 * msw) / (sst + msw)).max(0.0)
}
