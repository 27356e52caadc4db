use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use log::info;

use stdcache::querylog::{
    dedup_click_records, generate_synthetic_log, load_tsv, read_events, records_to_stream,
    split_stream, synthetic_documents, write_events, FormatDescriptor, QueryEvent, QueryStream,
    StreamOrigin,
};

use crate::inputs::{distinct_queries, load_config, seed, synthetic_doc_len, synthetic_params};
use crate::manifest::ManifestBuilder;
use crate::{parse_split, GlobalArgs, LogFormat};

pub const EVENTS: &str = "events.tsv";
pub const TRAIN: &str = "train.tsv";
pub const TEST: &str = "test.tsv";
pub const DOCS: &str = "docs.tsv";

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Raw log files, concatenated in the given order.
    #[arg(
        value_name = "INPUT",
        required_unless_present = "synthetic",
        conflicts_with = "synthetic"
    )]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<LogFormat>,
    /// MSN click sidecar: `QueryID<TAB>URL[<TAB>Rank]`.
    #[arg(long, value_name = "PATH")]
    pub clicks: Option<PathBuf>,
    /// Training share of the events.
    #[arg(long, value_name = "F", value_parser = parse_split)]
    pub split: Option<f64>,
    /// Generate a seeded log with planted topics instead of reading one.
    #[arg(long)]
    pub synthetic: bool,
}

fn parse_format(s: &str) -> Result<LogFormat> {
    match s {
        "aol" => Ok(LogFormat::Aol),
        "msn" => Ok(LogFormat::Msn),
        "events" => Ok(LogFormat::Events),
        other => bail!("config key `format`: unknown format `{other}`"),
    }
}

pub fn run(global: &GlobalArgs, args: &IngestArgs) -> Result<()> {
    let cfg = load_config(global)?;
    let seed = seed(global, &cfg)?;
    let split = match args.split {
        Some(f) => f,
        None => match cfg.raw("split") {
            Some(s) => parse_split(s).map_err(|e| anyhow::anyhow!("config key `split`: {e}"))?,
            None => 0.7,
        },
    };
    let mut manifest = ManifestBuilder::start("ingest", seed, cfg.path());
    let out = &global.out;
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut outputs = Vec::new();

    let stream = if args.synthetic {
        let params = synthetic_params(&cfg, seed)?;
        let log = generate_synthetic_log(&params)?;
        let docs = synthetic_documents(&params, synthetic_doc_len(&cfg)?)?;
        let path = out.join(DOCS);
        let text: String = docs.iter().map(|(u, t)| format!("{u}\t{t}\n")).collect();
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        outputs.push(path);
        log
    } else {
        let format = match args.format {
            Some(f) => f,
            None => cfg
                .raw("format")
                .map(parse_format)
                .transpose()?
                .unwrap_or(LogFormat::Aol),
        };
        let clicks = args.clicks.clone().or(cfg.get("clicks")?);
        if clicks.is_some() && format != LogFormat::Msn {
            bail!("--clicks only applies to --format msn");
        }
        if let Some(c) = &clicks {
            manifest.input(c);
        }
        load(&args.inputs, format, clicks, &mut manifest)?
    };
    if stream.is_empty() {
        bail!("no events left after normalization");
    }
    let (train, test) = split_stream(&stream, split)?;

    for (name, s) in [(EVENTS, &stream), (TRAIN, &train), (TEST, &test)] {
        let path = out.join(name);
        write_events(&path, s)?;
        outputs.push(path);
    }
    println!("events\t{}", stream.len());
    println!("distinct_queries\t{}", distinct_queries(&stream));
    println!("train_events\t{}", train.len());
    println!("train_distinct_queries\t{}", distinct_queries(&train));
    println!("test_events\t{}", test.len());
    println!("test_distinct_queries\t{}", distinct_queries(&test));
    manifest.write(out, &outputs)?;
    Ok(())
}

fn load(
    inputs: &[PathBuf],
    format: LogFormat,
    clicks: Option<PathBuf>,
    manifest: &mut ManifestBuilder,
) -> Result<QueryStream> {
    let mut events: Vec<QueryEvent> = Vec::new();
    for path in inputs {
        manifest.input(path);
        let part = match format {
            LogFormat::Events => read_events(path)?,
            LogFormat::Aol | LogFormat::Msn => {
                let descriptor = match format {
                    LogFormat::Aol => FormatDescriptor::aol(),
                    _ => FormatDescriptor::msn(clicks.clone()),
                };
                let loaded = load_tsv(path, &descriptor)
                    .with_context(|| format!("cannot ingest {}", path.display()))?;
                let rows = loaded.records.len();
                let records = dedup_click_records(loaded.records);
                info!(
                    "{}: {rows} rows, {} skipped, {} extra clicks collapsed",
                    path.display(),
                    loaded.skipped,
                    rows - records.len()
                );
                records_to_stream(&records, StreamOrigin::Full)
            }
        };
        events.extend(part.into_events());
    }
    Ok(QueryStream::new(events, StreamOrigin::Full))
}
