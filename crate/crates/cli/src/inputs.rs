//! Loading helpers shared by the subcommands.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::info;

use stdcache::querylog::{read_events, BurstProfile, QueryStream, SyntheticParams};
use stdcache::topics::{
    assign_query_topics, build_corpus, dominant_topics, train_lda, Corpus, CorpusOptions,
    DocumentDir, DocumentSource, LdaConfig, LdaModel, TopicMap, DEFAULT_CONFIDENCE_THRESHOLD,
};
use stdcache::TopicId;

use crate::config::Config;
use crate::manifest::ManifestBuilder;
use crate::GlobalArgs;

pub fn load_config(global: &GlobalArgs) -> Result<Config> {
    match &global.config {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

pub fn seed(global: &GlobalArgs, cfg: &Config) -> Result<u64> {
    cfg.pick(global.seed, "seed", 0)
}

pub fn read_stream(path: &Path, manifest: &mut ManifestBuilder) -> Result<QueryStream> {
    manifest.input(path);
    read_events(path).with_context(|| format!("cannot load events from {}", path.display()))
}

pub fn synthetic_params(cfg: &Config, seed: u64) -> Result<SyntheticParams> {
    let window: usize = cfg.get("synthetic_burst_window")?.unwrap_or(500);
    let burst = if window == 0 {
        BurstProfile::Uniform
    } else {
        BurstProfile::Bursty {
            window,
            boost: cfg.get("synthetic_burst_boost")?.unwrap_or(4.0),
        }
    };
    Ok(SyntheticParams {
        n_queries: cfg.get("synthetic_events")?.unwrap_or(100_000),
        vocab_size: cfg.get("synthetic_vocab")?.unwrap_or(20_000),
        zipf_exponent: cfg.get("synthetic_zipf")?.unwrap_or(1.0),
        n_topics: cfg.get("synthetic_topics")?.unwrap_or(10),
        burst,
        noise_fraction: cfg.get("synthetic_noise")?.unwrap_or(0.3),
        seed,
    })
}

pub fn synthetic_doc_len(cfg: &Config) -> Result<usize> {
    Ok(cfg.get("synthetic_doc_len")?.unwrap_or(40))
}

/// Overrides that `topics` exposes as flags.
#[derive(Debug, Clone, Default)]
pub struct LdaOverrides {
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub iterations: Option<usize>,
}

pub fn lda_config(cfg: &Config, o: &LdaOverrides, seed: u64) -> Result<LdaConfig> {
    let d = LdaConfig::default();
    Ok(LdaConfig {
        k: cfg.pick(o.k, "lda_k", d.k)?,
        alpha: match o.alpha {
            Some(a) => Some(a),
            None => cfg.get("lda_alpha")?,
        },
        beta: cfg.pick(o.beta, "lda_beta", d.beta)?,
        iterations: cfg.pick(o.iterations, "lda_iterations", d.iterations)?,
        seed,
        min_doc_freq: cfg.get("lda_min_doc_freq")?.unwrap_or(d.min_doc_freq),
        max_doc_fraction: cfg
            .get("lda_max_doc_fraction")?
            .unwrap_or(d.max_doc_fraction),
    })
}

pub fn corpus_options(cfg: &Config, seed: u64) -> Result<CorpusOptions> {
    let d = CorpusOptions::default();
    Ok(CorpusOptions {
        min_len: cfg.get("doc_min_len")?.unwrap_or(d.min_len),
        max_len: cfg.get("doc_max_len")?.unwrap_or(d.max_len),
        max_docs: cfg.get("max_docs")?,
        seed,
    })
}

/// Clicked-page text, from a `url<TAB>text` file or a hashed-name directory.
pub enum Documents {
    Table(BTreeMap<String, String>),
    Dir(DocumentDir),
}

impl Documents {
    pub fn open(
        docs: Option<&Path>,
        doc_dir: Option<&Path>,
        manifest: &mut ManifestBuilder,
    ) -> Result<Self> {
        match (docs, doc_dir) {
            (Some(p), None) => {
                manifest.input(p);
                let table = stdcache::topics::load_document_tsv(p)
                    .with_context(|| format!("cannot load documents from {}", p.display()))?;
                Ok(Documents::Table(table))
            }
            (None, Some(d)) => {
                if !d.is_dir() {
                    bail!("document directory {} does not exist", d.display());
                }
                Ok(Documents::Dir(DocumentDir(d.to_path_buf())))
            }
            (None, None) => bail!("LDA topics need page text: pass --docs or --doc-dir"),
            (Some(_), Some(_)) => bail!("--docs and --doc-dir are mutually exclusive"),
        }
    }
}

pub struct LdaRun {
    pub map: TopicMap,
    pub model: LdaModel,
    pub corpus: Corpus,
}

/// Corpus, model and click-voted topic map of a training stream.
pub fn lda_topics(
    train: &QueryStream,
    docs: &Documents,
    cfg: &Config,
    lda: &LdaConfig,
) -> Result<LdaRun> {
    let opts = corpus_options(cfg, lda.seed)?;
    let corpus = match docs {
        Documents::Table(t) => build(train, t, &opts),
        Documents::Dir(d) => build(train, d, &opts),
    };
    info!(
        "corpus: {} documents, {} words ({} events without click, {} without text, {} out of bounds)",
        corpus.len(),
        corpus.vocabulary.len(),
        corpus.stats.events_without_click,
        corpus.stats.missing_text,
        corpus.stats.out_of_bounds
    );
    let model = train_lda(&corpus, lda).context("LDA training failed")?;
    let threshold = cfg
        .get("confidence_threshold")?
        .unwrap_or(DEFAULT_CONFIDENCE_THRESHOLD);
    let per_doc = dominant_topics(&model, &corpus);
    let distinct = distinct_queries(train);
    let map = assign_query_topics(&corpus, &per_doc, threshold)
        .with_topics((0..lda.k as u32).map(TopicId))
        .with_total_distinct(distinct as u64);
    info!(
        "{} of {distinct} training queries received a topic",
        map.len()
    );
    Ok(LdaRun { map, model, corpus })
}

fn build(train: &QueryStream, source: &impl DocumentSource, opts: &CorpusOptions) -> Corpus {
    build_corpus(train, source, opts)
}

pub fn distinct_queries(stream: &QueryStream) -> usize {
    let mut qs: Vec<&str> = stream.queries().collect();
    qs.sort_unstable();
    qs.dedup();
    qs.len()
}
