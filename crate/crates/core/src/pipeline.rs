//! File-mediated pipeline stages.
//!
//! Every stage reads its inputs from the work directory (or an explicit
//! override path) and writes its outputs back there, so `run` is exactly
//! the sequence of individual stages.
//!
//! | stage      | reads                               | writes |
//! |------------|-------------------------------------|--------|
//! | `ingest`   | corpus file                         | `dtm.json` |
//! | `features` | features file, schema               | `features_encoded.csv`, `sim_expert.csv` |
//! | `lda`      | `dtm.json`                          | `lda_model.json`, `topics.txt`, `topic_assignment.csv`, `lda_report.json` |
//! | `graph`    | corpus file, `topic_assignment.csv` | `graph.tsv`, `graph_report.json` |
//! | `embed`    | `graph.tsv`                         | `embeddings.txt` |
//! | `sim`      | `embeddings.txt`, `graph.tsv`       | `sim_embed.csv` |
//! | `compare`  | `sim_expert.csv`, `sim_embed.csv`   | `compare.csv`, `stats.json` |
//! | `synth`    | —                                   | `corpus.jsonl`, `features.csv`, `schema.json` |

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{self, CorpusError, DocTermMatrix, TokenizerMode};
use crate::embed::{self, EmbedError, EmbeddingMatrix, Node2vecConfig};
use crate::eval::{self, EvalError, SynthConfig};
use crate::expert::{self, ExpertError, FeatureSchema};
use crate::graph::{self, GraphError, GraphOptions, KnowledgeGraph, NodeKind};
use crate::sim::{self, SimError, SimilarityMatrix};
use crate::topics::{self, LdaConfig, TopicAssignment, TopicError, TopicModel};

pub const DTM_FILE: &str = "dtm.json";
pub const FEATURES_ENCODED_FILE: &str = "features_encoded.csv";
pub const SIM_EXPERT_FILE: &str = "sim_expert.csv";
pub const LDA_MODEL_FILE: &str = "lda_model.json";
pub const TOPICS_FILE: &str = "topics.txt";
pub const ASSIGNMENT_FILE: &str = "topic_assignment.csv";
pub const LDA_REPORT_FILE: &str = "lda_report.json";
pub const GRAPH_FILE: &str = "graph.tsv";
pub const GRAPH_REPORT_FILE: &str = "graph_report.json";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";
pub const SIM_EMBED_FILE: &str = "sim_embed.csv";
pub const COMPARE_FILE: &str = "compare.csv";
pub const STATS_FILE: &str = "stats.json";
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    Features,
    Lda,
    Graph,
    Embed,
    Sim,
    Compare,
    Synth,
    Query,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Features => "features",
            Stage::Lda => "lda",
            Stage::Graph => "graph",
            Stage::Embed => "embed",
            Stage::Sim => "sim",
            Stage::Compare => "compare",
            Stage::Synth => "synth",
            Stage::Query => "query",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Internal,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 1,
            ErrorClass::Data => 2,
            ErrorClass::Internal => 3,
        }
    }
}

#[derive(Debug, Error)]
#[error("{stage}: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub class: ErrorClass,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, class: ErrorClass, message: impl Into<String>) -> Self {
        Self {
            stage,
            class,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.class.exit_code()
    }
}

trait Classify: fmt::Display {
    fn class(&self) -> ErrorClass {
        ErrorClass::Data
    }
}

impl Classify for std::io::Error {}
impl Classify for GraphError {}
impl Classify for ExpertError {}

impl Classify for serde_json::Error {
    fn class(&self) -> ErrorClass {
        if self.is_io() || self.is_data() || self.is_syntax() || self.is_eof() {
            ErrorClass::Data
        } else {
            ErrorClass::Internal
        }
    }
}

impl Classify for CorpusError {
    fn class(&self) -> ErrorClass {
        match self {
            CorpusError::InvalidTopM { .. } => ErrorClass::Usage,
            _ => ErrorClass::Data,
        }
    }
}

impl Classify for TopicError {
    fn class(&self) -> ErrorClass {
        match self {
            TopicError::InvalidConfig(_)
            | TopicError::KTooLarge { .. }
            | TopicError::InvalidN { .. } => ErrorClass::Usage,
            _ => ErrorClass::Data,
        }
    }
}

impl Classify for EmbedError {
    fn class(&self) -> ErrorClass {
        match self {
            EmbedError::InvalidConfig(_) => ErrorClass::Usage,
            _ => ErrorClass::Data,
        }
    }
}

impl Classify for SimError {
    fn class(&self) -> ErrorClass {
        match self {
            SimError::UnknownCase(_) | SimError::KTooLarge { .. } => ErrorClass::Usage,
            _ => ErrorClass::Data,
        }
    }
}

impl Classify for EvalError {
    fn class(&self) -> ErrorClass {
        match self {
            EvalError::InvalidTau(_) | EvalError::InvalidConfig(_) => ErrorClass::Usage,
            _ => ErrorClass::Data,
        }
    }
}

fn at<E: Classify>(stage: Stage) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::new(stage, e.class(), e.to_string())
}

fn at_path<E: Classify>(stage: Stage, path: &Path) -> impl Fn(E) -> PipelineError + '_ {
    move |e| PipelineError::new(stage, e.class(), format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub features: Option<PathBuf>,
    /// Feature schema; the bundled schema is used when unset.
    pub schema: Option<PathBuf>,
    pub workdir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            corpus: None,
            features: None,
            schema: None,
            workdir: PathBuf::from("work"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusOptions {
    pub tokenizer: TokenizerMode,
    pub min_df: usize,
    /// Prune the vocabulary to the `top_m` highest summed TF-IDF terms
    /// before topic modeling.
    pub tfidf_filter: bool,
    /// Capped at the vocabulary size.
    pub top_m: usize,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        Self {
            tokenizer: TokenizerMode::Pretokenized,
            min_df: 1,
            tfidf_filter: true,
            top_m: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopicOptions {
    pub threshold: f64,
    pub top_words: usize,
}

impl Default for TopicOptions {
    fn default() -> Self {
        Self {
            threshold: 0.2,
            top_words: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub tau: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { tau: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub corpus: CorpusOptions,
    pub lda: LdaConfig,
    pub topics: TopicOptions,
    pub graph: GraphOptions,
    pub node2vec: Node2vecConfig,
    pub eval: EvalOptions,
    pub synth: SynthConfig,
    /// Overrides the LDA, node2vec and synth seeds when set.
    pub seed: Option<u64>,
}

impl PipelineConfig {
    /// Reads a JSON config; relative paths inside it are taken relative to
    /// the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            PipelineError::new(
                Stage::Config,
                ErrorClass::Usage,
                format!("{}: {e}", path.display()),
            )
        })?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| {
            PipelineError::new(
                Stage::Config,
                ErrorClass::Usage,
                format!("{}: {e}", path.display()),
            )
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut cfg.paths.corpus,
            &mut cfg.paths.features,
            &mut cfg.paths.schema,
        ]
        .into_iter()
        .flatten()
        {
            rebase(p);
        }
        rebase(&mut cfg.paths.workdir);
        Ok(cfg)
    }

    /// Applies the global seed, fills derived defaults and validates.
    pub fn resolve(mut self) -> Result<Self, PipelineError> {
        if let Some(seed) = self.seed {
            self.lda.seed = seed;
            self.node2vec.seed = seed;
            self.synth.seed = seed;
        }
        self.lda.alpha = Some(self.lda.alpha());
        let usage = |m: String| PipelineError::new(Stage::Config, ErrorClass::Usage, m);
        self.lda.validate().map_err(|e| usage(e.to_string()))?;
        self.node2vec.validate().map_err(|e| usage(e.to_string()))?;
        if !(self.topics.threshold > 0.0 && self.topics.threshold < 1.0) {
            return Err(usage("topics.threshold must be in (0, 1)".into()));
        }
        if self.topics.top_words == 0 {
            return Err(usage("topics.top_words must be >= 1".into()));
        }
        if self.eval.tau.is_nan() || self.eval.tau <= 0.0 {
            return Err(usage("eval.tau must be > 0".into()));
        }
        if self.corpus.min_df == 0 || self.corpus.top_m == 0 {
            return Err(usage("corpus.min_df and corpus.top_m must be >= 1".into()));
        }
        Ok(self)
    }

    pub fn workdir(&self) -> &Path {
        &self.paths.workdir
    }

    fn artifact(&self, name: &str) -> PathBuf {
        self.paths.workdir.join(name)
    }

    fn schema(&self, stage: Stage) -> Result<FeatureSchema, PipelineError> {
        match &self.paths.schema {
            Some(p) => FeatureSchema::load(p).map_err(at_path(stage, p)),
            None => Ok(FeatureSchema::bundled()),
        }
    }
}

/// Explicit input paths that replace a stage's work-directory defaults.
#[derive(Debug, Clone, Default)]
pub struct StageInputs {
    pub dtm: Option<PathBuf>,
    pub assignment: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub expert_matrix: Option<PathBuf>,
    pub embed_matrix: Option<PathBuf>,
    /// Output directory for `synth`.
    pub out: Option<PathBuf>,
}

fn write_json<T: Serialize>(stage: Stage, path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).map_err(at(stage))?;
    text.push('\n');
    std::fs::write(path, text).map_err(at_path(stage, path))
}

fn prepare_workdir(cfg: &PipelineConfig, stage: Stage) -> Result<(), PipelineError> {
    std::fs::create_dir_all(cfg.workdir()).map_err(|e| {
        PipelineError::new(
            stage,
            ErrorClass::Usage,
            format!("{}: {e}", cfg.workdir().display()),
        )
    })?;
    write_json(stage, &cfg.artifact(RESOLVED_CONFIG_FILE), cfg)
}

fn required<'a>(
    stage: Stage,
    path: &'a Option<PathBuf>,
    what: &str,
) -> Result<&'a Path, PipelineError> {
    path.as_deref().ok_or_else(|| {
        PipelineError::new(
            stage,
            ErrorClass::Usage,
            format!("no {what} path configured"),
        )
    })
}

fn load_corpus(stage: Stage, cfg: &PipelineConfig) -> Result<corpus::Corpus, PipelineError> {
    let path = required(stage, &cfg.paths.corpus, "corpus")?;
    corpus::load_corpus(path).map_err(at_path(stage, path))
}

pub fn ingest(cfg: &PipelineConfig) -> Result<DocTermMatrix, PipelineError> {
    let stage = Stage::Ingest;
    let judgments = load_corpus(stage, cfg)?;
    let mut dtm = corpus::build_dtm(&judgments, cfg.corpus.tokenizer, cfg.corpus.min_df)
        .map_err(at(stage))?;
    if cfg.corpus.tfidf_filter {
        let weights = corpus::tfidf_transform(&dtm);
        let top_m = cfg.corpus.top_m.min(dtm.n_terms());
        dtm = corpus::filter_vocabulary(&dtm, &weights, top_m).map_err(at(stage))?;
    }
    prepare_workdir(cfg, stage)?;
    write_json(stage, &cfg.artifact(DTM_FILE), &dtm)?;
    Ok(dtm)
}

pub fn features(cfg: &PipelineConfig) -> Result<SimilarityMatrix, PipelineError> {
    let stage = Stage::Features;
    let schema = cfg.schema(stage)?;
    let path = required(stage, &cfg.paths.features, "features")?;
    let table = expert::load_features(path, &schema).map_err(at_path(stage, path))?;
    let encoded = expert::encode(&table).map_err(at(stage))?;
    let sim = expert::expert_similarity(&encoded).map_err(at(stage))?;

    prepare_workdir(cfg, stage)?;
    let out = cfg.artifact(FEATURES_ENCODED_FILE);
    let mut wtr = csv::Writer::from_path(&out)
        .map_err(|e| PipelineError::new(stage, ErrorClass::Data, e.to_string()))?;
    let header: Vec<&str> = std::iter::once("case_id")
        .chain(encoded.columns.iter().map(String::as_str))
        .collect();
    let csv_err = |e: csv::Error| PipelineError::new(stage, ErrorClass::Data, e.to_string());
    wtr.write_record(&header).map_err(csv_err)?;
    for (id, row) in encoded.case_ids.iter().zip(&encoded.rows) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|v| format!("{v:.6}")));
        wtr.write_record(&rec).map_err(csv_err)?;
    }
    wtr.flush().map_err(at(stage))?;
    sim.write_csv(cfg.artifact(SIM_EXPERT_FILE))
        .map_err(at(stage))?;
    Ok(sim)
}

#[derive(Debug, Serialize)]
struct LdaReport {
    topics: usize,
    vocabulary: usize,
    documents: usize,
    tokens: u64,
    perplexity: f64,
}

pub fn lda(cfg: &PipelineConfig, inputs: &StageInputs) -> Result<TopicModel, PipelineError> {
    let stage = Stage::Lda;
    let path = inputs.dtm.clone().unwrap_or_else(|| cfg.artifact(DTM_FILE));
    let text = std::fs::read_to_string(&path).map_err(at_path(stage, &path))?;
    let dtm: DocTermMatrix = serde_json::from_str(&text).map_err(at_path(stage, &path))?;
    let model = topics::fit_lda(&dtm, &cfg.lda).map_err(at(stage))?;
    let words =
        topics::top_words(&model, cfg.topics.top_words.min(dtm.n_terms())).map_err(at(stage))?;
    let assignment = topics::assign_topics(&model, cfg.topics.threshold);
    let report = LdaReport {
        topics: model.n_topics(),
        vocabulary: dtm.n_terms(),
        documents: dtm.n_docs(),
        tokens: dtm.total_tokens(),
        perplexity: topics::perplexity(&model, &dtm).map_err(at(stage))?,
    };

    prepare_workdir(cfg, stage)?;
    model
        .save(cfg.artifact(LDA_MODEL_FILE))
        .map_err(at(stage))?;
    let topics_path = cfg.artifact(TOPICS_FILE);
    std::fs::write(&topics_path, topics::top_words_report(&words))
        .map_err(at_path(stage, &topics_path))?;
    assignment
        .write_csv(cfg.artifact(ASSIGNMENT_FILE))
        .map_err(at(stage))?;
    write_json(stage, &cfg.artifact(LDA_REPORT_FILE), &report)?;
    Ok(model)
}

pub fn graph(cfg: &PipelineConfig, inputs: &StageInputs) -> Result<KnowledgeGraph, PipelineError> {
    let stage = Stage::Graph;
    let judgments = load_corpus(stage, cfg)?;
    let assignment = if cfg.graph.include_topics {
        let path = inputs
            .assignment
            .clone()
            .unwrap_or_else(|| cfg.artifact(ASSIGNMENT_FILE));
        Some(TopicAssignment::read_csv(&path).map_err(at_path(stage, &path))?)
    } else {
        None
    };
    let (g, _) =
        graph::build_graph(&judgments, assignment.as_ref(), &cfg.graph).map_err(at(stage))?;

    prepare_workdir(cfg, stage)?;
    g.save(cfg.artifact(GRAPH_FILE)).map_err(at(stage))?;
    write_json(
        stage,
        &cfg.artifact(GRAPH_REPORT_FILE),
        &graph::graph_stats(&g),
    )?;
    Ok(g)
}

fn load_graph(
    stage: Stage,
    cfg: &PipelineConfig,
    inputs: &StageInputs,
) -> Result<KnowledgeGraph, PipelineError> {
    let path = inputs
        .graph
        .clone()
        .unwrap_or_else(|| cfg.artifact(GRAPH_FILE));
    KnowledgeGraph::load(&path).map_err(at_path(stage, &path))
}

pub fn embed(cfg: &PipelineConfig, inputs: &StageInputs) -> Result<EmbeddingMatrix, PipelineError> {
    let stage = Stage::Embed;
    let g = load_graph(stage, cfg, inputs)?;
    if g.case_ids().next().is_none() {
        return Err(at(stage)(EmbedError::NoCaseNodes));
    }
    let vectors = embed::embed_graph(&g, &cfg.node2vec).map_err(at(stage))?;
    prepare_workdir(cfg, stage)?;
    vectors
        .write(cfg.artifact(EMBEDDINGS_FILE))
        .map_err(at(stage))?;
    Ok(vectors)
}

/// Cosine matrix over the Case-node rows of an embedding file.
fn case_similarity(
    stage: Stage,
    vectors: &EmbeddingMatrix,
    graph: Option<&KnowledgeGraph>,
) -> Result<SimilarityMatrix, PipelineError> {
    let cases = match graph {
        Some(g) => vectors.retain(|id| g.kind_of(id) == Some(NodeKind::Case)),
        None => vectors.clone(),
    };
    let rows: Vec<(&str, &[f64])> = cases.rows().collect();
    sim::similarity_matrix(&rows).map_err(at(stage))
}

pub fn similarity(
    cfg: &PipelineConfig,
    inputs: &StageInputs,
) -> Result<SimilarityMatrix, PipelineError> {
    let stage = Stage::Sim;
    let path = inputs
        .embeddings
        .clone()
        .unwrap_or_else(|| cfg.artifact(EMBEDDINGS_FILE));
    let vectors = EmbeddingMatrix::read(&path).map_err(at_path(stage, &path))?;
    let g = load_graph(stage, cfg, inputs)?;
    let matrix = case_similarity(stage, &vectors, Some(&g))?;
    prepare_workdir(cfg, stage)?;
    matrix
        .write_csv(cfg.artifact(SIM_EMBED_FILE))
        .map_err(at(stage))?;
    Ok(matrix)
}

pub fn compare(
    cfg: &PipelineConfig,
    inputs: &StageInputs,
) -> Result<eval::ComparisonStats, PipelineError> {
    let stage = Stage::Compare;
    let expert_path = inputs
        .expert_matrix
        .clone()
        .unwrap_or_else(|| cfg.artifact(SIM_EXPERT_FILE));
    let embed_path = inputs
        .embed_matrix
        .clone()
        .unwrap_or_else(|| cfg.artifact(SIM_EMBED_FILE));
    let expert = SimilarityMatrix::read_csv(&expert_path).map_err(at_path(stage, &expert_path))?;
    let embedded = SimilarityMatrix::read_csv(&embed_path).map_err(at_path(stage, &embed_path))?;
    let alignment = eval::align_pairs(&expert, &embedded).map_err(at(stage))?;
    let stats = eval::comparison_stats(&alignment, cfg.eval.tau).map_err(at(stage))?;

    prepare_workdir(cfg, stage)?;
    eval::write_comparisons(&alignment.pairs, cfg.artifact(COMPARE_FILE)).map_err(at(stage))?;
    write_json(stage, &cfg.artifact(STATS_FILE), &stats)?;
    Ok(stats)
}

pub fn synth(
    cfg: &PipelineConfig,
    inputs: &StageInputs,
) -> Result<eval::SynthOutput, PipelineError> {
    let stage = Stage::Synth;
    let schema = cfg.schema(stage)?;
    let out = eval::synth_corpus(&cfg.synth, &schema).map_err(at(stage))?;
    let dir = inputs
        .out
        .clone()
        .unwrap_or_else(|| cfg.workdir().to_path_buf());
    out.write(&dir).map_err(at_path(stage, &dir))?;
    Ok(out)
}

/// Runs ingest → features → lda → graph → embed → sim → compare.
pub fn run(cfg: &PipelineConfig) -> Result<eval::ComparisonStats, PipelineError> {
    let inputs = StageInputs::default();
    ingest(cfg)?;
    features(cfg)?;
    lda(cfg, &inputs)?;
    graph(cfg, &inputs)?;
    embed(cfg, &inputs)?;
    similarity(cfg, &inputs)?;
    compare(cfg, &inputs)
}

/// Top-`k` similar cases from either a matrix CSV (`.csv`) or an
/// embedding file. With a graph, embedding rows are limited to Case nodes.
pub fn query(
    source: &Path,
    graph: Option<&Path>,
    case_id: &str,
    k: usize,
) -> Result<Vec<(String, f64)>, PipelineError> {
    let stage = Stage::Query;
    let matrix = if source.extension().is_some_and(|e| e == "csv") {
        SimilarityMatrix::read_csv(source).map_err(at_path(stage, source))?
    } else {
        let vectors = EmbeddingMatrix::read(source).map_err(at_path(stage, source))?;
        let g = graph
            .map(|p| KnowledgeGraph::load(p).map_err(at_path(stage, p)))
            .transpose()?;
        case_similarity(stage, &vectors, g.as_ref())?
    };
    sim::top_k(&matrix, case_id, k).map_err(at(stage))
}

pub fn format_ranking(ranking: &[(String, f64)]) -> String {
    ranking
        .iter()
        .enumerate()
        .map(|(i, (id, s))| format!("{}\t{id}\t{s:.6}\n", i + 1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_resolves() {
        let cfg = PipelineConfig::default().resolve().unwrap();
        assert_eq!(cfg.lda.alpha, Some(50.0 / 8.0));
        assert_eq!(cfg.node2vec, Node2vecConfig::default());
        assert_eq!(cfg.eval.tau, 0.1);
    }

    #[test]
    fn global_seed_overrides() {
        let cfg = PipelineConfig {
            seed: Some(7),
            ..PipelineConfig::default()
        }
        .resolve()
        .unwrap();
        assert_eq!((cfg.lda.seed, cfg.node2vec.seed, cfg.synth.seed), (7, 7, 7));
    }

    #[test]
    fn invalid_config_is_usage_error() {
        let mut cfg = PipelineConfig::default();
        cfg.eval.tau = 0.0;
        assert_eq!(cfg.resolve().unwrap_err().exit_code(), 1);
    }

    #[test]
    fn missing_corpus_names_ingest() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = PipelineConfig::default();
        cfg.paths.workdir = dir.path().to_path_buf();
        cfg.paths.corpus = Some(dir.path().join("nope.jsonl"));
        let err = ingest(&cfg).unwrap_err();
        assert_eq!(err.stage, Stage::Ingest);
        assert!(err.to_string().starts_with("ingest:"));
        assert_ne!(err.exit_code(), 0);
    }

    #[test]
    fn config_json_partial_fields() {
        let cfg: PipelineConfig =
            serde_json::from_str(r#"{"lda": {"topics": 4}, "seed": 3}"#).unwrap();
        let cfg = cfg.resolve().unwrap();
        assert_eq!(cfg.lda.topics, 4);
        assert_eq!(cfg.lda.alpha, Some(12.5));
        assert_eq!(cfg.node2vec.seed, 3);
    }

    #[test]
    fn ranking_lines() {
        let s = format_ranking(&[("b".into(), 0.5), ("c".into(), 0.25)]);
        assert_eq!(s, "1\tb\t0.500000\n2\tc\t0.250000\n");
    }
}
