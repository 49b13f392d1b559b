//! End-to-end orchestration: ingest, index, retrieve, classify, aggregate, score.
//!
//! Every stage writes JSONL whose first line carries the stage name, the
//! canonical configuration and a fingerprint of everything the stage depends
//! on. A stage is skipped when its output carries the expected fingerprint and
//! no upstream stage ran in the same invocation.

use std::fs::{self, File};
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aggregation::{aggregate_all, ClassifiedClaim, ClassifiedSentence, Submission};
use crate::claims::{load_claims, Claim};
use crate::corpus::{ingest_dump, CorpusHandle};
use crate::entailment::{ClassifierKind, ClassifyItem};
use crate::error::{Error, Result};
use crate::jsonl::{self, StageHeader};
use crate::retrieval::{
    build_document_index, resolve_candidates, retrieve_all, RetrievalConfig, RetrievalRecord,
};
use crate::scoring::{fever_score, retrieval_rate, RetrievalRate, ScoreReport, SkipRule};
use crate::tfidf::TfidfIndex;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathsConfig {
    pub dump: PathBuf,
    pub claims: PathBuf,
    pub store: PathBuf,
    pub workdir: PathBuf,
}

fn default_titled() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    #[serde(default)]
    pub retrieval: RetrievalConfig,
    #[serde(default)]
    pub classifier: ClassifierKind,
    /// Cap on submitted evidence per claim; unlimited when absent.
    #[serde(default)]
    pub max_evidence: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub parallelism: usize,
    /// Seed for stochastic classifiers. The bundled classifiers are deterministic.
    #[serde(default)]
    pub seed: u64,
    /// Prefix premises with `[Page Title]`.
    #[serde(default = "default_titled")]
    pub titled_premises: bool,
    #[serde(default)]
    pub skip_rule: SkipRule,
}

impl PipelineConfig {
    pub fn new(paths: PathsConfig) -> Self {
        PipelineConfig {
            paths,
            retrieval: RetrievalConfig::default(),
            classifier: ClassifierKind::default(),
            max_evidence: None,
            parallelism: 0,
            seed: 0,
            titled_premises: true,
            skip_rule: SkipRule::default(),
        }
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Canonical JSON rendering; identical configs render identically.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.retrieval.validate()?;
        if self.max_evidence == Some(0) {
            return Err(Error::Config("max_evidence must be at least 1".into()));
        }
        Ok(())
    }

    pub fn index_path(&self) -> PathBuf {
        self.paths.workdir.join("index.jsonl")
    }
    pub fn retrieval_path(&self) -> PathBuf {
        self.paths.workdir.join("retrieval.jsonl")
    }
    pub fn classified_path(&self) -> PathBuf {
        self.paths.workdir.join("classified.jsonl")
    }
    pub fn submission_path(&self) -> PathBuf {
        self.paths.workdir.join("submission.jsonl")
    }
    pub fn score_path(&self) -> PathBuf {
        self.paths.workdir.join("score.jsonl")
    }
    fn ingest_marker(&self) -> PathBuf {
        self.paths.store.join("stage.jsonl")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Index,
    Retrieve,
    Classify,
    Aggregate,
    Score,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Index,
        Stage::Retrieve,
        Stage::Classify,
        Stage::Aggregate,
        Stage::Score,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Index => "index",
            Stage::Retrieve => "retrieve",
            Stage::Classify => "classify",
            Stage::Aggregate => "aggregate",
            Stage::Score => "score",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ran,
    Skipped,
}

/// Final stage output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub score: ScoreReport,
    pub retrieval_rate: RetrievalRate,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub stages: Vec<(Stage, StageStatus)>,
}

impl RunOutcome {
    pub fn all_up_to_date(&self) -> bool {
        self.stages.iter().all(|(_, s)| *s == StageStatus::Skipped)
    }

    pub fn status(&self, stage: Stage) -> Option<StageStatus> {
        self.stages.iter().find(|(s, _)| *s == stage).map(|(_, st)| *st)
    }
}

fn file_digest(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn fingerprint(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    hex::encode(hasher.finalize())
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable")
}

struct Runner {
    config_value: serde_json::Value,
    force: bool,
    upstream_ran: bool,
    stages: Vec<(Stage, StageStatus)>,
}

impl Runner {
    fn header(&self, stage: Stage, fingerprint: &str) -> StageHeader {
        StageHeader {
            stage: stage.name().to_string(),
            fingerprint: fingerprint.to_string(),
            config: self.config_value.clone(),
        }
    }

    /// Runs `body` unless `output` already carries `fingerprint`.
    fn stage(
        &mut self,
        stage: Stage,
        output: &Path,
        fingerprint: &str,
        body: impl FnOnce(&StageHeader) -> Result<()>,
    ) -> Result<()> {
        let current = !self.force
            && !self.upstream_ran
            && jsonl::read_header(output).is_some_and(|h| h.fingerprint == fingerprint);
        if current {
            log::info!("{}: up to date", stage.name());
            self.stages.push((stage, StageStatus::Skipped));
            return Ok(());
        }
        log::info!("{}: running", stage.name());
        let header = self.header(stage, fingerprint);
        body(&header).map_err(|e| Error::Stage {
            stage: stage.name(),
            source: Box::new(e),
        })?;
        self.upstream_ran = true;
        self.stages.push((stage, StageStatus::Ran));
        Ok(())
    }
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} {} does not exist", path.display())))
    }
}

/// Builds classifier inputs for retrieved candidates and writes one
/// [`ClassifiedClaim`] per retrieval record.
pub fn classify_records(
    records: &[RetrievalRecord],
    claims: &[Claim],
    corpus: &CorpusHandle,
    kind: &ClassifierKind,
    titled: bool,
) -> Result<(Vec<ClassifiedClaim>, usize)> {
    let classifier = kind.instantiate(Some(claims))?;
    let texts: std::collections::HashMap<u64, &str> =
        claims.iter().map(|c| (c.id, c.text.as_str())).collect();

    let mut resolved = Vec::with_capacity(records.len());
    for record in records {
        let hypothesis = *texts.get(&record.id).ok_or_else(|| {
            Error::Invalid(format!("retrieval record for unknown claim {}", record.id))
        })?;
        let (candidates, missing) = resolve_candidates(record, corpus);
        if missing > 0 {
            log::warn!("claim {}: {missing} candidates not in the corpus", record.id);
        }
        resolved.push((record.id, hypothesis, candidates));
    }
    let items: Vec<ClassifyItem<'_>> = resolved
        .iter()
        .flat_map(|(id, hypothesis, candidates)| {
            candidates.iter().map(move |c| ClassifyItem {
                claim_id: *id,
                page: &c.page,
                line: c.line,
                premise: if titled { &c.titled_premise } else { &c.sentence },
                hypothesis,
            })
        })
        .collect();
    let outcome = classifier.classify_batch(&items)?;
    if !items.is_empty() && outcome.failed == items.len() {
        return Err(Error::Classifier(format!(
            "all {} pairs failed to classify",
            items.len()
        )));
    }

    let mut verdicts = outcome.verdicts.into_iter();
    let classified = resolved
        .iter()
        .map(|(id, _, candidates)| ClassifiedClaim {
            id: *id,
            classified: candidates
                .iter()
                .map(|c| {
                    let v = verdicts.next().expect("one verdict per item");
                    ClassifiedSentence::new(&c.sentence_ref(), &v)
                })
                .collect(),
        })
        .collect();
    Ok((classified, outcome.failed))
}

fn run_stages(config: &PipelineConfig, force: bool) -> Result<RunOutcome> {
    config.validate()?;
    require_file(&config.paths.dump, "dump")?;
    require_file(&config.paths.claims, "claims file")?;
    fs::create_dir_all(&config.paths.workdir)
        .map_err(|e| Error::io(&config.paths.workdir, e))?;

    let mut runner = Runner {
        config_value: serde_json::from_str(&config.canonical()).expect("canonical config"),
        force,
        upstream_ran: false,
        stages: Vec::new(),
    };
    let dump_digest = file_digest(&config.paths.dump)?;
    let claims_digest = file_digest(&config.paths.claims)?;

    let ingest_fp = fingerprint(&["ingest", &dump_digest]);
    runner.stage(Stage::Ingest, &config.ingest_marker(), &ingest_fp, |header| {
        let report = ingest_dump(&config.paths.dump, &config.paths.store)?;
        log::info!("ingested {} pages, {} lines", report.pages_read, report.lines_read);
        jsonl::write_records(&config.ingest_marker(), Some(header), &[report])
    })?;
    let corpus = CorpusHandle::open(&config.paths.store)?;

    let index_fp = fingerprint(&[
        "index",
        &ingest_fp,
        &json(&config.retrieval.use_title_in_tfidf),
    ]);
    runner.stage(Stage::Index, &config.index_path(), &index_fp, |header| {
        let index = build_document_index(&corpus, config.retrieval.use_title_in_tfidf)?;
        index.save(&config.index_path(), Some(header))
    })?;

    let claims = load_claims(&config.paths.claims)?;
    let retrieve_fp = fingerprint(&[
        "retrieve",
        &index_fp,
        &json(&config.retrieval),
        &claims_digest,
    ]);
    runner.stage(Stage::Retrieve, &config.retrieval_path(), &retrieve_fp, |header| {
        let index = TfidfIndex::<String>::load(&config.index_path())?;
        let records = retrieve_all(&claims, &config.retrieval, &index, &corpus)?;
        jsonl::write_records(&config.retrieval_path(), Some(header), &records)
    })?;

    let endpoint = match &config.classifier {
        ClassifierKind::Remote(remote) => remote.endpoint(),
        _ => String::new(),
    };
    let classify_fp = fingerprint(&[
        "classify",
        &retrieve_fp,
        &json(&config.classifier),
        &endpoint,
        &json(&config.titled_premises),
        &claims_digest,
    ]);
    runner.stage(Stage::Classify, &config.classified_path(), &classify_fp, |header| {
        let records: Vec<RetrievalRecord> = jsonl::read_records(&config.retrieval_path())?;
        let (classified, failed) = classify_records(
            &records,
            &claims,
            &corpus,
            &config.classifier,
            config.titled_premises,
        )?;
        if failed > 0 {
            log::warn!("{failed} pairs could not be classified and count as NEUTRAL");
        }
        jsonl::write_records(&config.classified_path(), Some(header), &classified)
    })?;

    let aggregate_fp = fingerprint(&["aggregate", &classify_fp, &json(&config.max_evidence)]);
    runner.stage(Stage::Aggregate, &config.submission_path(), &aggregate_fp, |header| {
        let classified: Vec<ClassifiedClaim> = jsonl::read_records(&config.classified_path())?;
        let submissions = aggregate_all(classified, config.max_evidence);
        jsonl::write_records(&config.submission_path(), Some(header), &submissions)
    })?;

    let score_fp = fingerprint(&[
        "score",
        &aggregate_fp,
        &claims_digest,
        &json(&config.skip_rule),
    ]);
    runner.stage(Stage::Score, &config.score_path(), &score_fp, |header| {
        let submissions: Vec<Submission> = jsonl::read_records(&config.submission_path())?;
        let records: Vec<RetrievalRecord> = jsonl::read_records(&config.retrieval_path())?;
        let summary = RunSummary {
            score: fever_score(&submissions, &claims)?,
            retrieval_rate: retrieval_rate(&claims, &records, config.skip_rule),
        };
        jsonl::write_records(&config.score_path(), Some(header), &[summary])
    })?;

    let summary = jsonl::read_records::<RunSummary>(&config.score_path())?
        .pop()
        .ok_or_else(|| Error::Invalid("empty score file".into()))?;
    Ok(RunOutcome {
        summary,
        stages: runner.stages,
    })
}

/// Runs every stage, skipping those whose outputs are current unless `force`.
pub fn run(config: &PipelineConfig, force: bool) -> Result<RunOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_stages(config, force))
}
