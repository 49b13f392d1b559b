use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use feverpipe::aggregation::{aggregate_all, ClassifiedClaim, Submission};
use feverpipe::claims::load_claims;
use feverpipe::corpus::{ingest_dump, CorpusHandle};
use feverpipe::dataset::{self, DatasetVariant, EntailmentExample, VariantKind};
use feverpipe::entailment::{ClassifierKind, RemoteConfig};
use feverpipe::jsonl;
use feverpipe::pipeline::{self, classify_records, PipelineConfig};
use feverpipe::retrieval::{
    build_document_index, retrieve_all, RetrievalConfig, RetrievalRecord, SentenceMode,
};
use feverpipe::scoring::{fever_score, retrieval_rate, SkipRule};
use feverpipe::tfidf::TfidfIndex;
use serde_json::json;

#[derive(Parser)]
#[command(name = "feverpipe", version, about = "Claim verification pipeline")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for stage outputs; overrides the config.
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    /// Rerun stages even when their outputs are current.
    #[arg(long, global = true)]
    force: bool,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a wiki dump or inspect a store.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Build or query the page TF-IDF index.
    #[command(subcommand)]
    Index(IndexCmd),
    /// Retrieve candidate sentences for every claim.
    Retrieve(RetrieveArgs),
    /// Build entailment datasets.
    #[command(subcommand)]
    Dataset(DatasetCmd),
    /// Classify retrieved candidates against their claims.
    Classify(ClassifyArgs),
    /// Fold classified candidates into a submission.
    Aggregate(AggregateArgs),
    /// Score a submission against gold claims.
    Score(ScoreArgs),
    /// Run every stage from a configuration file.
    Run,
}

#[derive(Subcommand)]
enum CorpusCmd {
    Ingest {
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long)]
        store: Option<PathBuf>,
    },
    Stats {
        #[arg(long)]
        store: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum IndexCmd {
    Build {
        #[arg(long)]
        store: Option<PathBuf>,
        /// Prepend page titles to page text.
        #[arg(long)]
        titles_in_tfidf: bool,
        /// Defaults to `<workdir>/index.jsonl`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Query {
        query: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long)]
        index: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    TopK,
    EntireArticles,
}

#[derive(Args)]
struct RetrieveArgs {
    #[arg(long)]
    claims: Option<PathBuf>,
    #[arg(long)]
    store: Option<PathBuf>,
    /// Prebuilt index; built in memory when absent.
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    doc_k: usize,
    #[arg(long, value_enum, default_value = "top-k")]
    sentence_mode: ModeArg,
    #[arg(long, default_value_t = 5)]
    sentences_k: usize,
    #[arg(long, default_value_t = 50)]
    max_lines: usize,
    #[arg(long)]
    titles_in_tfidf: bool,
    /// Add pages whose title matches a capitalized phrase of the claim.
    #[arg(long)]
    ne: bool,
    /// Add `X (film)` pages for title matches; implies --ne.
    #[arg(long)]
    film: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    One,
    Five,
    FiveOracle,
}

#[derive(Subcommand)]
enum DatasetCmd {
    Build {
        #[arg(long, value_enum)]
        variant: VariantArg,
        /// Prefix premises with `[Page Title]`.
        #[arg(long)]
        titled: bool,
        #[arg(long)]
        claims: Option<PathBuf>,
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        retrievals: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print label counts, majority baseline and class weights.
    Stats { examples: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Lexical,
    Oracle,
    Remote,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    claims: Option<PathBuf>,
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long)]
    retrievals: Option<PathBuf>,
    /// Defaults to the configured classifier, else lexical.
    #[arg(long, value_enum)]
    classifier: Option<ClassifierArg>,
    /// Model service base URL for the remote classifier.
    #[arg(long)]
    url: Option<String>,
    /// Send bare sentences instead of `[Title] sentence` premises.
    #[arg(long)]
    untitled: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AggregateArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    max_evidence: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SkipRuleArg {
    NoSingleton,
    AnyMulti,
}

impl From<SkipRuleArg> for SkipRule {
    fn from(arg: SkipRuleArg) -> Self {
        match arg {
            SkipRuleArg::NoSingleton => SkipRule::NoSingleton,
            SkipRuleArg::AnyMulti => SkipRule::AnyMulti,
        }
    }
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long)]
    submission: Option<PathBuf>,
    /// Also report the retrieval rate of these retrievals.
    #[arg(long)]
    retrievals: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "no-singleton")]
    skip_rule: SkipRuleArg,
}

struct Ctx {
    config: Option<PipelineConfig>,
    workdir: Option<PathBuf>,
}

impl Ctx {
    fn load(cli: &Cli) -> Result<Self> {
        let mut config = match &cli.config {
            Some(path) => Some(PipelineConfig::from_toml_file(path)?),
            None => None,
        };
        if let Some(cfg) = config.as_mut() {
            if let Some(dir) = &cli.workdir {
                cfg.paths.workdir = dir.clone();
            }
            if let Some(n) = cli.parallelism {
                cfg.parallelism = n;
            }
        }
        let workdir = cli
            .workdir
            .clone()
            .or_else(|| config.as_ref().map(|c| c.paths.workdir.clone()));
        Ok(Ctx { config, workdir })
    }

    fn path(
        &self,
        given: &Option<PathBuf>,
        from_config: impl Fn(&PipelineConfig) -> PathBuf,
        flag: &str,
    ) -> Result<PathBuf> {
        match (given, &self.config) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(cfg)) => Ok(from_config(cfg)),
            (None, None) => bail!("--{flag} is required without --config"),
        }
    }

    fn in_workdir(&self, given: &Option<PathBuf>, file: &str, flag: &str) -> Result<PathBuf> {
        match (given, &self.workdir) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(dir)) => Ok(dir.join(file)),
            (None, None) => bail!("--{flag} is required without --workdir or --config"),
        }
    }

    fn store(&self, given: &Option<PathBuf>) -> Result<PathBuf> {
        self.path(given, |c| c.paths.store.clone(), "store")
    }

    fn claims(&self, given: &Option<PathBuf>) -> Result<PathBuf> {
        self.path(given, |c| c.paths.claims.clone(), "claims")
    }
}

fn emit<T: serde::Serialize>(path: &Option<PathBuf>, records: &[T]) -> Result<()> {
    if let Some(p) = path {
        return Ok(jsonl::write_records(p, None, records)?);
    }
    let mut out = BufWriter::new(io::stdout().lock());
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn open_corpus(store: &Path) -> Result<CorpusHandle> {
    CorpusHandle::open(store).with_context(|| format!("opening store {}", store.display()))
}

fn corpus(ctx: &Ctx, cmd: CorpusCmd) -> Result<()> {
    match cmd {
        CorpusCmd::Ingest { dump, store } => {
            let dump = ctx.path(&dump, |c| c.paths.dump.clone(), "dump")?;
            let store = ctx.store(&store)?;
            let report = ingest_dump(&dump, &store)?;
            print_json(&report)
        }
        CorpusCmd::Stats { store } => {
            let corpus = open_corpus(&ctx.store(&store)?)?;
            print_json(&json!({
                "pages": corpus.page_count(),
                "lines": corpus.line_count()?,
            }))
        }
    }
}

fn index(ctx: &Ctx, cmd: IndexCmd) -> Result<()> {
    match cmd {
        IndexCmd::Build {
            store,
            titles_in_tfidf,
            out,
        } => {
            let titles = titles_in_tfidf
                || ctx
                    .config
                    .as_ref()
                    .is_some_and(|c| c.retrieval.use_title_in_tfidf);
            let corpus = open_corpus(&ctx.store(&store)?)?;
            let out = ctx.in_workdir(&out, "index.jsonl", "out")?;
            let index = build_document_index(&corpus, titles)?;
            index.save(&out, None)?;
            print_json(&json!({
                "documents": index.len(),
                "vocabulary": index.vocabulary_size(),
                "path": out,
            }))
        }
        IndexCmd::Query { query, k, index } => {
            let path = ctx.in_workdir(&index, "index.jsonl", "index")?;
            let index = TfidfIndex::<String>::load(&path)?;
            let mut out = io::stdout().lock();
            for (title, score) in index.score_query(&query, k) {
                writeln!(out, "{score:.6}\t{title}")?;
            }
            Ok(())
        }
    }
}

fn retrieve(ctx: &Ctx, args: RetrieveArgs) -> Result<()> {
    let config = RetrievalConfig {
        doc_k: args.doc_k,
        sentence_mode: match args.sentence_mode {
            ModeArg::TopK => SentenceMode::TopK { k: args.sentences_k },
            ModeArg::EntireArticles => SentenceMode::EntireArticles {
                max_lines: args.max_lines,
            },
        },
        use_title_in_tfidf: args.titles_in_tfidf,
        use_ne_retrieval: args.ne || args.film,
        use_film_heuristic: args.film,
    };
    config.validate()?;
    let corpus = open_corpus(&ctx.store(&args.store)?)?;
    let claims = load_claims(&ctx.claims(&args.claims)?)?;
    let index = match &args.index {
        Some(path) => TfidfIndex::<String>::load(path)?,
        None => build_document_index(&corpus, config.use_title_in_tfidf)?,
    };
    let records = retrieve_all(&claims, &config, &index, &corpus)?;
    emit(&args.out, &records)
}

fn retrievals(ctx: &Ctx, given: &Option<PathBuf>) -> Result<Vec<RetrievalRecord>> {
    let path = ctx.in_workdir(given, "retrieval.jsonl", "retrievals")?;
    Ok(jsonl::read_records(&path)?)
}

fn dataset(ctx: &Ctx, cmd: DatasetCmd) -> Result<()> {
    match cmd {
        DatasetCmd::Build {
            variant,
            titled,
            claims,
            store,
            retrievals: given,
            out,
        } => {
            let kind = match variant {
                VariantArg::One => VariantKind::One,
                VariantArg::Five => VariantKind::Five,
                VariantArg::FiveOracle => VariantKind::FiveOracle,
            };
            let corpus = open_corpus(&ctx.store(&store)?)?;
            let claims = load_claims(&ctx.claims(&claims)?)?;
            let records = retrievals(ctx, &given)?;
            let built = dataset::build(
                DatasetVariant { kind, titled },
                &claims,
                &records,
                &corpus,
            );
            eprintln!("{}", serde_json::to_string(&built.report)?);
            emit(&out, &built.examples)
        }
        DatasetCmd::Stats { examples } => {
            let examples: Vec<EntailmentExample> = jsonl::read_records(&examples)?;
            print_json(&dataset::class_stats(&examples)?)
        }
    }
}

fn classify(ctx: &Ctx, args: ClassifyArgs) -> Result<()> {
    let configured = ctx.config.as_ref().map(|c| c.classifier.clone());
    let kind = match (args.classifier, args.url) {
        (Some(ClassifierArg::Lexical), _) => ClassifierKind::LexicalBaseline,
        (Some(ClassifierArg::Oracle), _) => ClassifierKind::Oracle,
        (Some(ClassifierArg::Remote), Some(url)) => ClassifierKind::Remote(RemoteConfig::new(url)),
        (Some(ClassifierArg::Remote), None) => match configured {
            Some(ClassifierKind::Remote(remote)) => ClassifierKind::Remote(remote),
            _ => ClassifierKind::Remote(RemoteConfig::new(String::new())),
        },
        (None, _) => configured.unwrap_or_default(),
    };
    let titled = !args.untitled && ctx.config.as_ref().is_none_or(|c| c.titled_premises);
    let corpus = open_corpus(&ctx.store(&args.store)?)?;
    let claims = load_claims(&ctx.claims(&args.claims)?)?;
    let records = retrievals(ctx, &args.retrievals)?;
    let (classified, failed) = classify_records(&records, &claims, &corpus, &kind, titled)?;
    if failed > 0 {
        log::warn!("{failed} pairs could not be classified and count as NEUTRAL");
    }
    emit(&args.out, &classified)
}

fn aggregate(ctx: &Ctx, args: AggregateArgs) -> Result<()> {
    let input = ctx.in_workdir(&args.input, "classified.jsonl", "input")?;
    let classified: Vec<ClassifiedClaim> = jsonl::read_records(&input)?;
    let max_evidence = args
        .max_evidence
        .or_else(|| ctx.config.as_ref().and_then(|c| c.max_evidence));
    if max_evidence == Some(0) {
        bail!("--max-evidence must be at least 1");
    }
    emit(&args.out, &aggregate_all(classified, max_evidence))
}

fn score(ctx: &Ctx, args: ScoreArgs) -> Result<()> {
    let gold = load_claims(&ctx.claims(&args.gold).context("--gold is required")?)?;
    let path = ctx.in_workdir(&args.submission, "submission.jsonl", "submission")?;
    let submissions: Vec<Submission> = jsonl::read_records(&path)?;
    let report = fever_score(&submissions, &gold)?;
    match &args.retrievals {
        Some(path) => {
            let records: Vec<RetrievalRecord> = jsonl::read_records(path)?;
            let rate = retrieval_rate(&gold, &records, args.skip_rule.into());
            print_json(&json!({ "score": report, "retrieval_rate": rate }))
        }
        None => print_json(&report),
    }
}

fn run(ctx: &Ctx, force: bool) -> Result<()> {
    let Some(config) = &ctx.config else {
        bail!("run needs --config");
    };
    let outcome = pipeline::run(config, force)?;
    if outcome.all_up_to_date() {
        println!("all stages up to date");
    } else {
        for (stage, status) in &outcome.stages {
            log::info!("{}: {:?}", stage.name(), status);
        }
    }
    print_json(&outcome.summary)
}

fn dispatch(cli: Cli) -> Result<()> {
    let ctx = Ctx::load(&cli)?;
    if !matches!(cli.command, Command::Run) {
        if let Some(n) = cli.parallelism {
            rayon_pool(n)?;
        }
    }
    match cli.command {
        Command::Corpus(cmd) => corpus(&ctx, cmd),
        Command::Index(cmd) => index(&ctx, cmd),
        Command::Retrieve(args) => retrieve(&ctx, args),
        Command::Dataset(cmd) => dataset(&ctx, cmd),
        Command::Classify(args) => classify(&ctx, args),
        Command::Aggregate(args) => aggregate(&ctx, args),
        Command::Score(args) => score(&ctx, args),
        Command::Run => run(&ctx, cli.force),
    }
}

fn rayon_pool(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the thread pool")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
