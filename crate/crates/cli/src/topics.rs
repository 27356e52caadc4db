use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use stdcache::querylog::{generate_synthetic_log, split_stream, synthetic_documents, QueryStream};
use stdcache::topics::{load_topic_map, save_popularity, save_topic_map, TopicMap};

use crate::inputs::{
    distinct_queries, lda_config, lda_topics, load_config, read_stream, seed, synthetic_doc_len,
    synthetic_params, Documents, LdaOverrides, LdaRun,
};
use crate::manifest::ManifestBuilder;
use crate::{parse_split, GlobalArgs};

pub const TOPIC_MAP: &str = "topic_map.tsv";
pub const POPULARITY: &str = "popularity.tsv";
pub const MODEL: &str = "model.txt";

#[derive(Debug, Args)]
pub struct TopicsArgs {
    /// Training events (as written by `ingest`).
    #[arg(long, value_name = "PATH")]
    pub train: Option<PathBuf>,
    /// Clicked-page text as `url<TAB>text` lines.
    #[arg(long, value_name = "PATH")]
    pub docs: Option<PathBuf>,
    /// Directory of `<sha256(url)>.txt` page files.
    #[arg(long, value_name = "DIR")]
    pub doc_dir: Option<PathBuf>,
    /// Reuse an existing `query<TAB>topic` map instead of training.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["docs", "doc_dir", "planted", "synthetic"])]
    pub load_map: Option<PathBuf>,
    /// Take the topic labels carried by the training events.
    #[arg(long, conflicts_with_all = ["docs", "doc_dir", "synthetic"])]
    pub planted: bool,
    /// Train on a generated log and its generated pages.
    #[arg(long, conflicts_with_all = ["train", "docs", "doc_dir"])]
    pub synthetic: bool,
    /// Training share when `--synthetic` splits its log.
    #[arg(long, value_name = "F", value_parser = parse_split)]
    pub split: Option<f64>,
    /// Number of topics.
    #[arg(long)]
    pub k: Option<usize>,
    /// Document-topic prior (default 50/k).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Topic-word prior.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Gibbs sweeps.
    #[arg(long)]
    pub iterations: Option<usize>,
}

pub fn run(global: &GlobalArgs, args: &TopicsArgs) -> Result<()> {
    let cfg = load_config(global)?;
    let seed = seed(global, &cfg)?;
    let mut manifest = ManifestBuilder::start("topics", seed, cfg.path());
    let out = &global.out;
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut outputs = Vec::new();
    let overrides = LdaOverrides {
        k: args.k,
        alpha: args.alpha,
        beta: args.beta,
        iterations: args.iterations,
    };

    let map = if let Some(p) = &args.load_map {
        manifest.input(p);
        load_topic_map(p)
            .with_context(|| format!("cannot load topic map {}", p.display()))?
            .map
    } else if args.planted {
        TopicMap::from_planted(&training(args, &cfg, &mut manifest)?)
    } else if args.synthetic {
        let params = synthetic_params(&cfg, seed)?;
        let log = generate_synthetic_log(&params)?;
        let split = args.split.unwrap_or(cfg.get("split")?.unwrap_or(0.7));
        let (train, _) = split_stream(&log, split)?;
        let docs = Documents::Table(synthetic_documents(&params, synthetic_doc_len(&cfg)?)?);
        let lda = lda_config(&cfg, &overrides, seed)?;
        let run = lda_topics(&train, &docs, &cfg, &lda)?;
        outputs.push(write_model(out, &run)?);
        run.map
    } else {
        let train = training(args, &cfg, &mut manifest)?;
        let docs = Documents::open(args.docs.as_deref(), args.doc_dir.as_deref(), &mut manifest)?;
        let lda = lda_config(&cfg, &overrides, seed)?;
        let run = lda_topics(&train, &docs, &cfg, &lda)?;
        outputs.push(write_model(out, &run)?);
        run.map
    };

    let map_path = out.join(TOPIC_MAP);
    save_topic_map(&map, &map_path)?;
    let pop_path = out.join(POPULARITY);
    save_popularity(&map, &pop_path)?;
    outputs.splice(0..0, [map_path, pop_path]);
    println!("classified_queries\t{}", map.len());
    println!("topics\t{}", map.popularity().len());
    manifest.write(out, &outputs)?;
    Ok(())
}

fn training(
    args: &TopicsArgs,
    cfg: &crate::config::Config,
    manifest: &mut ManifestBuilder,
) -> Result<QueryStream> {
    let path = match &args.train {
        Some(p) => p.clone(),
        None => match cfg.get::<PathBuf>("train")? {
            Some(p) => p,
            None => bail!("missing corpus: pass --train with --docs, --doc-dir or --planted, or use --synthetic"),
        },
    };
    let train = read_stream(&path, manifest)?;
    log::info!(
        "{}: {} events, {} distinct queries",
        path.display(),
        train.len(),
        distinct_queries(&train)
    );
    Ok(train)
}

/// Hyperparameters, corpus size and the top words of every topic.
fn write_model(out: &Path, run: &LdaRun) -> Result<PathBuf> {
    let m = &run.model;
    let mut text = String::new();
    writeln!(text, "k\t{}", m.k())?;
    writeln!(text, "alpha\t{}", m.alpha())?;
    writeln!(text, "beta\t{}", m.beta())?;
    writeln!(text, "documents\t{}", run.corpus.len())?;
    writeln!(text, "vocabulary\t{}", m.vocabulary().len())?;
    for (t, words) in m.top_words(15).into_iter().enumerate() {
        let list: Vec<String> = words.iter().map(|(w, c)| format!("{w}:{c}")).collect();
        writeln!(text, "topic {t}\t{}", list.join(" "))?;
    }
    let path = out.join(MODEL);
    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}
