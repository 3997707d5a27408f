use std::collections::HashSet;
use std::fs;
use std::io::{BufReader, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mrmkg::convert::{convert_facts, extract_hyperfacts, Mrm};
use mrmkg::embed::{train_embeddings, Algorithm, EmbedConfig};
use mrmkg::error::PipelineError;
use mrmkg::graph::{Graph, HyperFact};
use mrmkg::linkpred::{encode_triples, evaluate, train_lp, LPConfig, LPModel, Norm, Sharing};
use mrmkg::pipeline::{convert_dataset, ingest, run_pipeline, DatasetSource, PipelineConfig, Stage};
use mrmkg::rdf_io::{
    encode_term, parse_turtle_star, parse_wd50k, read_corpus, read_embeddings, serialize, write_corpus,
    write_embeddings, Format, PrefixTable,
};
use mrmkg::search::{grid_search, random_search, report_importance, SearchResult, SearchSpace};
use mrmkg::task::{build_filter, qt_triple_profile, split_dataset, Ratios};
use mrmkg::walks::{generate_walks, Transitions, WalkConfig, WalkMode};

#[derive(Parser)]
#[command(name = "mrmkg", version, about = "Metadata representation models for hyper-relational knowledge graphs")]
struct Cli {
    /// Seed for every seeded step of the command.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a dataset between representation models and formats.
    Convert(ConvertArgs),
    /// Split a graph into train/valid/test link prediction triples.
    Split(SplitArgs),
    /// Print graph statistics as JSON.
    Stats(GraphArg),
    /// Count triple shapes by quoted-triple position (RDF-star graphs).
    ProfileQt(GraphArg),
    /// Generate a walk corpus.
    Walk(WalkArgs),
    /// Train token embeddings on a corpus.
    Embed(EmbedArgs),
    /// Train a translational link prediction model.
    TrainLp(TrainLpArgs),
    /// Rank tails of a split and print metrics JSON.
    Eval(EvalArgs),
    /// Run the whole pipeline from a config file.
    Pipeline(PipelineArgs),
    /// Random or grid search over walk and embedding settings.
    Search(SearchArgs),
    /// Parameter importance from a search log.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InputKind {
    Wd50k,
    Kgrc,
    Graph,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "wd50k")]
    from: InputKind,
    /// Representation model of a `graph` input.
    #[arg(long, default_value = "ref")]
    source_mrm: Mrm,
    /// Target representation model.
    #[arg(long)]
    mrm: Mrm,
    /// turtle, turtle-star, ntriples-star or wd50k-csv.
    #[arg(long, default_value = "turtle-star")]
    format: Format,
    /// Emit the statement type triple in REF output.
    #[arg(long)]
    emit_type: bool,
    /// Qualifier role precedence for KGRC object selection.
    #[arg(long, value_delimiter = ',')]
    priority: Option<Vec<String>>,
    /// Only wrap KGRC base triples when two events would collide.
    #[arg(long)]
    wrap_on_collision: bool,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct GraphArg {
    /// Turtle-star or N-Triples-star graph.
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    mrm: Mrm,
    #[arg(long, default_value_t = 0.8)]
    train: f64,
    #[arg(long, default_value_t = 0.1)]
    valid: f64,
    #[arg(long, default_value_t = 0.1)]
    test: f64,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Args)]
struct WalkArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 10)]
    walks_per_root: usize,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, default_value = "STAR_RANDOM_WALKS")]
    mode: WalkMode,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 50)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value = "skip-gram")]
    algorithm: Algorithm,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    lr_initial: f64,
    #[arg(long, default_value_t = 0.0001)]
    lr_final: f64,
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    #[arg(long, default_value_t = 1)]
    min_count: usize,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct LpArgs {
    #[arg(long, default_value_t = 1.0)]
    margin: f64,
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 1)]
    negatives: usize,
    #[arg(long, default_value = "l1")]
    norm: Norm,
    #[arg(long)]
    no_normalize_entities: bool,
    /// separate (TransE) or unified (TransU).
    #[arg(long, default_value = "separate")]
    sharing: Sharing,
}

#[derive(Args)]
struct TrainLpArgs {
    /// Full graph; defines the entity and relation vocabulary.
    #[arg(long)]
    graph: PathBuf,
    /// Training graph written by `split`.
    #[arg(long)]
    train: PathBuf,
    /// Pretrained table; without it every row starts random.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Dimension when no table is given.
    #[arg(long, default_value_t = 50)]
    dim: usize,
    #[command(flatten)]
    lp: LpArgs,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Part {
    Valid,
    Test,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Directory written by `split`.
    #[arg(long)]
    split_dir: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    part: Part,
    #[arg(long, default_value = "l1")]
    norm: Norm,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// TOML config; defaults to the bundled synthetic dataset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Print the fully expanded config and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// TOML search space; defaults to the full space.
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    grid: bool,
    /// Trial log JSON.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Trial log written by `search`.
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Tags an error with the stage whose exit code it should produce.
trait StageContext<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T, E: std::fmt::Display> StageContext<T> for std::result::Result<T, E> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| stage.fail(e).into())
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).stage(Stage::Ingest).with_context(|| path.display().to_string())
}

fn load_graph(path: &Path) -> Result<Graph> {
    let text = read_text(path)?;
    parse_turtle_star(&text, &PrefixTable::default())
        .stage(Stage::Ingest)
        .with_context(|| path.display().to_string())
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).stage(Stage::Output)?;
    }
    fs::write(path, bytes).stage(Stage::Output).with_context(|| path.display().to_string())
}

fn emit_json(value: &serde_json::Value, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json value serializes") + "\n";
    match output {
        Some(p) => write_out(p, text.as_bytes()),
        None => std::io::stdout().write_all(text.as_bytes()).stage(Stage::Output),
    }
}

fn ntriples(graph: &Graph) -> Result<String> {
    serialize(graph, Format::NTriplesStar, &PrefixTable::empty()).stage(Stage::Output)
}

fn convert(args: ConvertArgs) -> Result<()> {
    let target = |facts: &[HyperFact], mrm| convert_facts(facts, mrm, args.emit_type).stage(Stage::Convert);
    let text = match args.from {
        InputKind::Wd50k | InputKind::Graph => {
            let facts = match args.from {
                InputKind::Wd50k => parse_wd50k(&read_text(&args.input)?, false).stage(Stage::Ingest)?,
                _ => extract_hyperfacts(&load_graph(&args.input)?, args.source_mrm).stage(Stage::Convert)?,
            };
            if args.format == Format::Wd50kCsv {
                serialize(&target(&facts, Mrm::Rdr)?, Format::Wd50kCsv, &PrefixTable::default())
            } else {
                serialize(&target(&facts, args.mrm)?, args.format, &PrefixTable::default())
            }
            .stage(Stage::Output)?
        }
        InputKind::Kgrc => {
            let source = DatasetSource::Kgrc {
                path: args.input.clone(),
                priority: args.priority.clone(),
                wrap: if args.wrap_on_collision {
                    mrmkg::convert::WrapPolicy::OnCollision
                } else {
                    mrmkg::convert::WrapPolicy::Always
                },
            };
            let graph = convert_dataset(&ingest(&source)?, args.mrm)?;
            serialize(&graph, args.format, &PrefixTable::default()).stage(Stage::Output)?
        }
    };
    write_out(&args.output, text.as_bytes())
}

fn split(args: SplitArgs, seed: u64) -> Result<()> {
    let graph = load_graph(&args.graph)?;
    let ratios = Ratios {
        train: args.train,
        valid: args.valid,
        test: args.test,
    };
    ratios.validate().stage(Stage::Config)?;
    let filter = build_filter(&graph, args.mrm);
    let split = split_dataset(&graph, &filter, ratios, seed).stage(Stage::Split)?;
    let part = |triples: &[mrmkg::Triple]| -> Result<String> {
        let mut g = Graph::new();
        for t in triples {
            let t = g.import_triple(&graph, t).stage(Stage::Split)?;
            g.insert(t).stage(Stage::Split)?;
        }
        ntriples(&g)
    };
    let dir = &args.output_dir;
    write_out(&dir.join("train.nt"), part(&split.train)?.as_bytes())?;
    write_out(&dir.join("valid.nt"), part(&split.valid)?.as_bytes())?;
    write_out(&dir.join("test.nt"), part(&split.test)?.as_bytes())?;
    write_out(&dir.join("training.nt"), ntriples(&split.training_graph(&graph))?.as_bytes())?;
    emit_json(
        &json!({
            "mrm": args.mrm,
            "seed": seed,
            "train": split.train.len(),
            "valid": split.valid.len(),
            "test": split.test.len(),
        }),
        Some(&dir.join("split.json")),
    )
}

fn walk(args: WalkArgs, seed: u64) -> Result<()> {
    let cfg = WalkConfig {
        walks_per_root: args.walks_per_root,
        depth: args.depth,
        mode: args.mode,
        transitions: Transitions {
            alpha: args.alpha,
            beta: args.beta,
            gamma: args.gamma,
            delta: args.delta,
        },
        seed,
    };
    cfg.validate().stage(Stage::Config)?;
    let graph = load_graph(&args.graph)?;
    let corpus = generate_walks(&graph, &cfg).stage(Stage::Walk)?;
    let mut buf = Vec::new();
    write_corpus(&corpus, &mut buf).stage(Stage::Output)?;
    write_out(&args.output, &buf)?;
    log::info!("{} walks", corpus.len());
    Ok(())
}

fn embed(args: EmbedArgs, seed: u64) -> Result<()> {
    let cfg = EmbedConfig {
        dim: args.dim,
        window: args.window,
        algorithm: args.algorithm,
        epochs: args.epochs,
        lr_initial: args.lr_initial,
        lr_final: args.lr_final,
        negatives: args.negatives,
        min_count: args.min_count,
        seed,
    };
    cfg.validate().stage(Stage::Config)?;
    let file = fs::File::open(&args.corpus)
        .stage(Stage::Ingest)
        .with_context(|| args.corpus.display().to_string())?;
    let corpus = read_corpus(BufReader::new(file)).stage(Stage::Ingest)?;
    let trained = train_embeddings(&corpus, &cfg).stage(Stage::Embed)?;
    let mut buf = Vec::new();
    write_embeddings(&trained.table, &mut buf).stage(Stage::Output)?;
    write_out(&args.output, &buf)
}

fn lp_config(args: &LpArgs, seed: u64) -> LPConfig {
    LPConfig {
        margin: args.margin,
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        negatives: args.negatives,
        norm: args.norm,
        normalize_entities: !args.no_normalize_entities,
        sharing: args.sharing,
        seed,
    }
}

fn tokens(graph: &Graph, terms: impl IntoIterator<Item = mrmkg::Term>) -> Result<Vec<String>> {
    terms.into_iter().map(|t| encode_term(graph, &t).stage(Stage::TrainLp)).collect()
}

fn train_lp_cmd(args: TrainLpArgs, seed: u64) -> Result<()> {
    let cfg = lp_config(&args.lp, seed);
    cfg.validate().stage(Stage::Config)?;
    let graph = load_graph(&args.graph)?;
    let training = load_graph(&args.train)?;
    let table = match &args.embeddings {
        Some(p) => {
            let file = fs::File::open(p).stage(Stage::Ingest).with_context(|| p.display().to_string())?;
            Some(read_embeddings(BufReader::new(file)).stage(Stage::Ingest)?)
        }
        None => None,
    };
    let entities = tokens(&graph, graph.entities())?;
    let relations = tokens(&graph, graph.relations())?;
    let dim = table.as_ref().map_or(args.dim, |t| t.dim());
    let (mut model, coverage) = LPModel::from_tokens(
        entities.iter().map(String::as_str),
        relations.iter().map(String::as_str),
        table.as_ref(),
        dim,
        cfg.sharing,
        seed,
    );
    // Only triples whose object is an entity of the full graph.
    let targets: HashSet<&str> = entities.iter().map(String::as_str).collect();
    let train: Vec<_> = encode_triples(&training, training.triples())
        .stage(Stage::TrainLp)?
        .into_iter()
        .filter(|t| targets.contains(t[2].as_str()))
        .collect();
    let report = train_lp(&mut model, &train, &cfg).stage(Stage::TrainLp)?;
    write_out(&args.output, model.to_json().as_bytes())?;
    log::info!(
        "{} training triples, {} pretrained rows, final loss {:?}",
        train.len(),
        coverage.pretrained,
        report.epoch_losses.last()
    );
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let model = LPModel::from_json(&read_text(&args.model)?).stage(Stage::Ingest)?;
    let load = |name: &str| -> Result<Vec<[String; 3]>> {
        let g = load_graph(&args.split_dir.join(name))?;
        encode_triples(&g, g.triples()).stage(Stage::Eval)
    };
    let mut known = load("train.nt")?;
    let valid = load("valid.nt")?;
    let test = load("test.nt")?;
    let target = match args.part {
        Part::Valid => valid.clone(),
        Part::Test => test.clone(),
    };
    known.extend(valid);
    known.extend(test);
    let candidates: Vec<String> = model.entities().map(str::to_owned).collect();
    let report = evaluate(&model, &target, &known, &candidates, args.norm).stage(Stage::Eval)?;
    emit_json(&serde_json::to_value(report)?, args.output.as_deref())
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<PipelineConfig> {
    let cfg = match path {
        Some(p) => PipelineConfig::from_toml(&fs::read_to_string(p).stage(Stage::Config)?)?,
        None => PipelineConfig::default(),
    };
    Ok(match seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn pipeline(args: PipelineArgs, seed: Option<u64>) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref(), seed)?;
    if args.output_dir.is_some() {
        cfg.output_dir = args.output_dir;
    }
    if args.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let report = run_pipeline(&cfg)?;
    let summary: Vec<_> = report
        .results
        .iter()
        .map(|r| {
            json!({
                "mrm": r.mrm,
                "model": r.model,
                "test": r.test,
                "valid": r.valid,
            })
        })
        .collect();
    emit_json(
        &json!({ "config_hash": report.config_hash, "objective": report.objective(), "results": summary }),
        None,
    )
}

fn search(args: SearchArgs, seed: Option<u64>) -> Result<()> {
    let base = load_config(args.config.as_deref(), None)?;
    let mut space: SearchSpace = match &args.space {
        Some(p) => toml::from_str(&fs::read_to_string(p).stage(Stage::Config)?).stage(Stage::Config)?,
        None => SearchSpace::default(),
    };
    if let Some(b) = args.budget {
        space.budget = b;
    }
    if let Some(w) = args.workers {
        space.workers = w;
    }
    let result: SearchResult = if args.grid {
        grid_search(&space, &base)
    } else {
        random_search(&space, &base, seed.unwrap_or(0))
    }
    .stage(Stage::Search)?;
    let text = serde_json::to_string_pretty(&result)? + "\n";
    write_out(&args.output, text.as_bytes())?;
    match result.best_trial() {
        Some(t) => emit_json(&json!({ "best": t }), None),
        None => Err(Stage::Search.fail("no trial produced an objective").into()),
    }
}

fn report(args: ReportArgs) -> Result<()> {
    let log: SearchResult = serde_json::from_str(&read_text(&args.log)?).stage(Stage::Ingest)?;
    let scores = report_importance(&log.trials).stage(Stage::Report)?;
    let map: serde_json::Map<String, serde_json::Value> = scores.into_iter().map(|(k, v)| (k, json!(v))).collect();
    emit_json(&json!({ "trials": log.trials.len(), "importance": map }), args.output.as_deref())
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    let or42 = seed.unwrap_or(42);
    match cli.command {
        Command::Convert(a) => convert(a),
        Command::Split(a) => split(a, or42),
        Command::Stats(a) => {
            let g = load_graph(&a.graph)?;
            emit_json(&serde_json::to_value(g.stats())?, None)
        }
        Command::ProfileQt(a) => {
            let g = load_graph(&a.graph)?;
            let p = qt_triple_profile(&g).stage(Stage::Convert)?;
            emit_json(
                &json!({
                    "counts": p,
                    "total": p.total(),
                    "percentages": p.percentages(),
                    "qt_containing_percentages": p.qt_containing_percentages(),
                }),
                None,
            )
        }
        Command::Walk(a) => walk(a, or42),
        Command::Embed(a) => embed(a, or42),
        Command::TrainLp(a) => train_lp_cmd(a, or42),
        Command::Eval(a) => eval(a),
        Command::Pipeline(a) => pipeline(a, seed),
        Command::Search(a) => search(a, seed),
        Command::Report(a) => report(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<PipelineError>().map_or(1, |p| p.stage.exit_code());
            ExitCode::from(code as u8)
        }
    }
}
