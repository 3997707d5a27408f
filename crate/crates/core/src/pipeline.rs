//! End-to-end runs: ingest, convert, split, walk, embed, train and evaluate,
//! with every artifact recorded in a manifest.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::convert::{convert_facts, kgrc_to_rdr, kgrc_to_sgp, Mrm, ObjectPriority, WrapPolicy};
use crate::embed::{train_embeddings, EmbedConfig};
use crate::error::PipelineError;
use crate::graph::{Graph, GraphStats, HyperFact, Triple};
use crate::linkpred::{encode_triples, evaluate, init_from_pretrained, train_lp, Coverage, LPConfig, MetricsReport};
use crate::rdf_io::{parse_turtle_star, parse_wd50k, write_corpus, write_embeddings, write_term_ntriples, PrefixTable};
use crate::synthetic::{clustered_hrkg, ClusteredConfig};
use crate::task::{build_filter, split_dataset, Ratios};
use crate::walks::{generate_walks, WalkConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Config,
    Ingest,
    Convert,
    Split,
    Walk,
    Embed,
    TrainLp,
    Eval,
    Output,
    Search,
    Report,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Convert => "convert",
            Stage::Split => "split",
            Stage::Walk => "walk",
            Stage::Embed => "embed",
            Stage::TrainLp => "train-lp",
            Stage::Eval => "eval",
            Stage::Output => "output",
            Stage::Search => "search",
            Stage::Report => "report",
        }
    }

    /// Process exit code for a failure in this stage.
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Ingest => 3,
            Stage::Convert => 4,
            Stage::Split => 5,
            Stage::Walk => 6,
            Stage::Embed => 7,
            Stage::TrainLp => 8,
            Stage::Eval => 9,
            Stage::Output => 10,
            Stage::Search => 11,
            Stage::Report => 12,
        }
    }

    pub fn fail(self, message: impl fmt::Display) -> PipelineError {
        PipelineError {
            stage: self,
            message: message.to_string(),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSource {
    /// Comma-separated qualifier rows.
    Wd50k {
        path: PathBuf,
        #[serde(default)]
        qualified_only: bool,
    },
    /// A reified event graph in Turtle.
    Kgrc {
        path: PathBuf,
        #[serde(default)]
        priority: Option<Vec<String>>,
        #[serde(default)]
        wrap: WrapPolicy,
    },
    Synthetic(ClusteredConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    #[serde(flatten)]
    pub ratios: Ratios,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratios: Ratios::default(),
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: Option<PathBuf>,
    #[serde(default = "all_mrms")]
    pub mrms: Vec<Mrm>,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub walk: WalkConfig,
    #[serde(default)]
    pub embed: EmbedConfig,
    #[serde(default)]
    pub lp: LPConfig,
}

fn all_mrms() -> Vec<Mrm> {
    Mrm::ALL.to_vec()
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            output_dir: None,
            mrms: all_mrms(),
            dataset: DatasetSource::Synthetic(ClusteredConfig::default()),
            split: SplitConfig::default(),
            walk: WalkConfig::default(),
            embed: EmbedConfig::default(),
            lp: LPConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| Stage::Config.fail(e))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Uses `seed` for every seeded stage.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.split.seed = seed;
        self.walk.seed = seed;
        self.embed.seed = seed;
        self.lp.seed = seed;
        self
    }

    pub fn seeds(&self) -> Seeds {
        Seeds {
            split: self.split.seed,
            walk: self.walk.seed,
            embed: self.embed.seed,
            lp: self.lp.seed,
        }
    }

    /// The config with the output location cleared; what results depend on.
    pub fn portable(&self) -> PipelineConfig {
        PipelineConfig {
            output_dir: None,
            ..self.clone()
        }
    }

    /// sha256 of the canonical TOML form, ignoring the output location.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.portable().to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |m: String| Err(Stage::Config.fail(m));
        if self.mrms.is_empty() {
            return fail("no metadata representation model selected".into());
        }
        self.split.ratios.validate().map_err(|e| Stage::Config.fail(e))?;
        self.walk.validate().map_err(|e| Stage::Config.fail(e))?;
        self.embed.validate().map_err(|e| Stage::Config.fail(e))?;
        self.lp.validate().map_err(|e| Stage::Config.fail(e))?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub split: u64,
    pub walk: u64,
    pub embed: u64,
    pub lp: u64,
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parsed input, before conversion.
#[derive(Clone, Debug)]
pub enum Dataset {
    Facts(Vec<HyperFact>),
    Kgrc {
        graph: Graph,
        priority: ObjectPriority,
        wrap: WrapPolicy,
    },
}

pub fn ingest(source: &DatasetSource) -> Result<Dataset, PipelineError> {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| Stage::Ingest.fail(format!("{}: {e}", p.display())));
    match source {
        DatasetSource::Wd50k { path, qualified_only } => {
            let text = read(path)?;
            let facts = parse_wd50k(&text, *qualified_only)
                .map_err(|e| Stage::Ingest.fail(format!("{}: {e}", path.display())))?;
            Ok(Dataset::Facts(facts))
        }
        DatasetSource::Kgrc { path, priority, wrap } => {
            let text = read(path)?;
            let graph = parse_turtle_star(&text, &PrefixTable::default())
                .map_err(|e| Stage::Ingest.fail(format!("{}: {e}", path.display())))?;
            let priority = match priority {
                Some(names) => {
                    let names: Vec<&str> = names.iter().map(String::as_str).collect();
                    ObjectPriority::from_roles(&names).ok_or_else(|| Stage::Config.fail("empty object priority"))?
                }
                None => ObjectPriority::default(),
            };
            Ok(Dataset::Kgrc {
                graph,
                priority,
                wrap: *wrap,
            })
        }
        DatasetSource::Synthetic(cfg) => Ok(Dataset::Facts(clustered_hrkg(cfg))),
    }
}

pub fn convert_dataset(data: &Dataset, mrm: Mrm) -> Result<Graph, PipelineError> {
    let fail = |e: crate::error::ConvertError| Stage::Convert.fail(format!("{mrm}: {e}"));
    match data {
        Dataset::Facts(facts) => convert_facts(facts, mrm, false).map_err(fail),
        Dataset::Kgrc { graph, priority, wrap } => match mrm {
            Mrm::Ref => Ok(graph.clone()),
            Mrm::Sgp => kgrc_to_sgp(graph, priority).map(|c| c.graph).map_err(fail),
            Mrm::Rdr => kgrc_to_rdr(graph, priority, *wrap).map(|c| c.graph).map_err(fail),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

/// Everything measured for one model; serialized as its metrics file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MrmMetrics {
    pub mrm: Mrm,
    pub model: String,
    pub config_hash: String,
    pub seeds: Seeds,
    pub stats: GraphStats,
    pub split: SplitSizes,
    pub corpus_sequences: usize,
    pub vocabulary: usize,
    pub lp_train_triples: usize,
    pub coverage: Coverage,
    pub valid: Option<MetricsReport>,
    pub test: MetricsReport,
    pub embedding_epoch_loss: Vec<f64>,
    pub lp_epoch_loss: Vec<f64>,
    pub config: PipelineConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub mrm: Option<Mrm>,
    pub stage: Stage,
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seeds: Seeds,
    pub status: String,
    pub failed_stage: Option<Stage>,
    pub error: Option<String>,
    pub artifacts: Vec<Artifact>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineReport {
    pub config_hash: String,
    pub results: Vec<MrmMetrics>,
    pub manifest: Manifest,
}

impl PipelineReport {
    /// Mean filtered validation MRR across models; the search objective.
    pub fn objective(&self) -> Option<f64> {
        let v: Vec<f64> = self
            .results
            .iter()
            .filter_map(|r| r.valid.as_ref().map(|m| m.filtered.mrr))
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

struct Outputs<'a> {
    dir: Option<&'a Path>,
    artifacts: Vec<Artifact>,
}

impl Outputs<'_> {
    fn write(&mut self, mrm: Option<Mrm>, stage: Stage, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let Some(dir) = self.dir else { return Ok(()) };
        let rel = match mrm {
            Some(m) => format!("{m}/{name}"),
            None => name.to_owned(),
        };
        let path = dir.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Stage::Output.fail(format!("{}: {e}", parent.display())))?;
        }
        fs::write(&path, bytes).map_err(|e| Stage::Output.fail(format!("{}: {e}", path.display())))?;
        self.artifacts.push(Artifact {
            mrm,
            stage,
            path: rel,
            sha256: hex(&Sha256::digest(bytes)),
        });
        Ok(())
    }
}

fn ntriples<'a>(graph: &Graph, triples: impl IntoIterator<Item = &'a Triple>) -> String {
    let mut out = String::new();
    for t in triples {
        write_term_ntriples(&mut out, graph, &t.subject);
        out.push(' ');
        write_term_ntriples(&mut out, graph, &t.predicate);
        out.push(' ');
        write_term_ntriples(&mut out, graph, &t.object);
        out.push_str(" .\n");
    }
    out
}

/// Runs every configured model. With an output directory, artifacts and a
/// manifest are written there; the manifest is written even on failure.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    let mut out = Outputs {
        dir: cfg.output_dir.as_deref(),
        artifacts: Vec::new(),
    };
    let result = run_stages(cfg, &mut out);
    let manifest = Manifest {
        config_hash: cfg.hash(),
        seeds: cfg.seeds(),
        status: if result.is_ok() { "ok" } else { "failed" }.into(),
        failed_stage: result.as_ref().err().map(|e| e.stage),
        error: result.as_ref().err().map(|e| e.message.clone()),
        artifacts: out.artifacts.clone(),
    };
    if let Some(dir) = out.dir {
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::create_dir_all(dir)
            .and_then(|_| fs::write(dir.join("manifest.json"), text))
            .map_err(|e| Stage::Output.fail(format!("{}: {e}", dir.display())))?;
    }
    let results = result?;
    Ok(PipelineReport {
        config_hash: manifest.config_hash.clone(),
        results,
        manifest,
    })
}

fn run_stages(cfg: &PipelineConfig, out: &mut Outputs) -> Result<Vec<MrmMetrics>, PipelineError> {
    cfg.validate()?;
    out.write(None, Stage::Config, "config.toml", cfg.to_toml().as_bytes())?;
    let data = ingest(&cfg.dataset)?;
    cfg.mrms.iter().map(|&mrm| run_mrm(cfg, &data, mrm, out)).collect()
}

fn run_mrm(cfg: &PipelineConfig, data: &Dataset, mrm: Mrm, out: &mut Outputs) -> Result<MrmMetrics, PipelineError> {
    let graph = convert_dataset(data, mrm)?;
    log::info!("{mrm}: {} triples", graph.len());
    out.write(Some(mrm), Stage::Convert, "graph.nt", ntriples(&graph, graph.triples()).as_bytes())?;

    let filter = build_filter(&graph, mrm);
    let split = split_dataset(&graph, &filter, cfg.split.ratios, cfg.split.seed)
        .map_err(|e| Stage::Split.fail(format!("{mrm}: {e}")))?;
    for (name, part) in [("train.nt", &split.train), ("valid.nt", &split.valid), ("test.nt", &split.test)] {
        out.write(Some(mrm), Stage::Split, name, ntriples(&graph, part).as_bytes())?;
    }
    let training = split.training_graph(&graph);

    let corpus = generate_walks(&training, &cfg.walk).map_err(|e| Stage::Walk.fail(format!("{mrm}: {e}")))?;
    let mut buf = Vec::new();
    write_corpus(&corpus, &mut buf).map_err(|e| Stage::Output.fail(e))?;
    out.write(Some(mrm), Stage::Walk, "corpus.txt", &buf)?;

    let emb = train_embeddings(&corpus, &cfg.embed).map_err(|e| Stage::Embed.fail(format!("{mrm}: {e}")))?;
    let mut buf = Vec::new();
    write_embeddings(&emb.table, &mut buf).map_err(|e| Stage::Output.fail(e))?;
    out.write(Some(mrm), Stage::Embed, "embeddings.tsv", &buf)?;

    let lp_fail = |e: &dyn fmt::Display| Stage::TrainLp.fail(format!("{mrm}: {e}"));
    let (mut model, coverage) =
        init_from_pretrained(&emb.table, &graph, cfg.lp.sharing, cfg.lp.seed).map_err(|e| lp_fail(&e))?;
    let lp_train = encode_triples(&training, training.triples().filter(|t| filter.entities.contains(&t.object)))
        .map_err(|e| lp_fail(&e))?;
    let lp_report = train_lp(&mut model, &lp_train, &cfg.lp).map_err(|e| lp_fail(&e))?;
    out.write(Some(mrm), Stage::TrainLp, "model.json", model.to_json().as_bytes())?;

    let eval_fail = |e: &dyn fmt::Display| Stage::Eval.fail(format!("{mrm}: {e}"));
    let known = encode_triples(&graph, split.known()).map_err(|e| eval_fail(&e))?;
    let candidates: Vec<String> = model.entities().map(str::to_owned).collect();
    let valid = if split.valid.is_empty() {
        None
    } else {
        let v = encode_triples(&graph, &split.valid).map_err(|e| eval_fail(&e))?;
        Some(evaluate(&model, &v, &known, &candidates, cfg.lp.norm).map_err(|e| eval_fail(&e))?)
    };
    let test = encode_triples(&graph, &split.test).map_err(|e| eval_fail(&e))?;
    let test = evaluate(&model, &test, &known, &candidates, cfg.lp.norm).map_err(|e| eval_fail(&e))?;

    let metrics = MrmMetrics {
        mrm,
        model: cfg.lp.sharing.model_name().into(),
        config_hash: cfg.hash(),
        seeds: cfg.seeds(),
        stats: graph.stats(),
        split: SplitSizes {
            train: split.train.len(),
            valid: split.valid.len(),
            test: split.test.len(),
        },
        corpus_sequences: corpus.len(),
        vocabulary: emb.table.len(),
        lp_train_triples: lp_train.len(),
        coverage,
        valid,
        test,
        embedding_epoch_loss: emb.epoch_losses,
        lp_epoch_loss: lp_report.epoch_losses,
        config: cfg.portable(),
    };
    let json = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    out.write(Some(mrm), Stage::Eval, "metrics.json", json.as_bytes())?;
    Ok(metrics)
}
